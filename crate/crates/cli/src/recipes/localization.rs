use fraclap_core::localization::ProductRuleTerms;
use fraclap_core::{
    build_cutoff, g_bound_monitor, solve_dirichlet, CutoffSpec, GBoundReport, Profile, Region,
};

use super::{coord_header, grid, invalid, omega_rows, params, tag, RunResult};
use crate::config::Config;
use crate::output::{num, row, Artifact, CheckOutcome, Manifest, RunOutput};

fn default_cutoff(dim: usize, outer: f64) -> CutoffSpec {
    if dim == 1 {
        CutoffSpec::new(Region::interval(-0.3, 0.3), Region::interval(-outer, outer))
    } else {
        CutoffSpec::new(Region::ball(&[0.0, 0.0], 0.3), Region::ball(&[0.0, 0.0], outer))
    }
}

fn cutoff_regions(manifest: Manifest, cutoff: &CutoffSpec) -> Manifest {
    let m = manifest.region("cutoff.inner", &cutoff.inner).region("cutoff.outer", &cutoff.outer);
    match &cutoff.enlargement {
        Some(r) => m.region("cutoff.enlargement", r),
        None => m,
    }
}

/// Residual of the discrete product rule for a smooth input under refinement.
pub fn product_rule(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.3, 0.5, 0.7]);
    let levels = config.levels(&[65, 129, 257]);
    let input = config.source_or(Profile::Bump { center: vec![], radius: 0.8, amplitude: 1.0 });
    let cutoff = config.cutoff.clone().unwrap_or_else(|| default_cutoff(dim, 0.6));
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    for &s in &s_values {
        let p = params(dim, s)?;
        let mut residuals = Vec::new();
        let mut finest = None;
        for &n in &levels {
            let g = grid(config, n)?;
            let u = input.sample(&g, &config.base)?;
            let eta = build_cutoff(&g, &cutoff)?;
            let terms = ProductRuleTerms::compute(&u, &eta, &p)?;
            let residual = terms.defect().max_abs();
            let ratio = residuals.last().map_or(f64::NAN, |prev: &f64| prev / residual);
            rows.push(row(&[num(s), n.to_string(), num(g.h()), num(residual), num(ratio)]));
            residuals.push(residual);
            finest = Some(terms);
        }
        let terms = finest.ok_or_else(|| invalid("no refinement levels".into()))?;
        let defect = terms.defect();
        artifacts.push(Artifact::csv(
            format!("terms_s{}.csv", tag(s)),
            &format!("{},product,eta_lu,u_leta,remainder,defect", coord_header(dim)),
            omega_rows(
                terms.product.grid(),
                &[&terms.product, &terms.eta_lu, &terms.u_leta, &terms.remainder, &defect],
            ),
        ));
        let worst = residuals.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        checks.push(CheckOutcome::at_least(
            Some(3),
            format!("product rule s={s}"),
            worst,
            2.0,
            "smallest residual reduction per halving of h",
        ));
    }
    artifacts.insert(0, Artifact::csv("residual.csv", "s,n,h,residual,reduction", rows));
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    manifest = cutoff_regions(manifest, &cutoff);
    manifest.s = s_values;
    manifest.n = levels;
    manifest.source = Some(input.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}

/// `‖g‖_p / (‖u‖_{W^{s,p}(ω₂)} + ‖u‖_{L^p(Ω)})` for Dirichlet solutions under refinement.
pub fn g_bound(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.5]);
    let levels = config.levels(&[129, 257, 513]);
    let source = config.source_or(Profile::Constant { value: 1.0 });
    let p_index = config.probe.p.unwrap_or(2.0);
    let cutoff = config.cutoff.clone().unwrap_or_else(|| {
        let omega2 = if dim == 1 { Region::interval(-0.8, 0.8) } else { Region::ball(&[0.0, 0.0], 0.8) };
        default_cutoff(dim, 0.5).with_enlargement(omega2)
    });
    let omega2 = cutoff
        .enlargement
        .clone()
        .ok_or_else(|| invalid("g-bound needs cutoff.enlargement (the set ω₂)".into()))?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &s in &s_values {
        let p = params(dim, s)?;
        let mut reports: Vec<GBoundReport> = Vec::new();
        for &n in &levels {
            let g = grid(config, n)?;
            let f = source.sample(&g, &config.base)?;
            let u = solve_dirichlet(&f, &p, &g)?;
            let eta = build_cutoff(&g, &cutoff)?;
            let report = g_bound_monitor(&u, &eta, &p, &omega2, p_index)?;
            rows.push(report.csv_row());
            reports.push(report);
        }
        let drift = reports
            .windows(2)
            .map(|w| if w[0].ratio == 0.0 { 0.0 } else { (w[1].ratio / w[0].ratio - 1.0).abs() })
            .fold(0.0, f64::max);
        checks.push(CheckOutcome::at_most(
            None,
            format!("g-bound ratio stable s={s}"),
            drift,
            0.25,
            "largest relative change of the ratio between levels",
        ));
    }
    let artifacts = vec![Artifact::csv("g_bound.csv", GBoundReport::CSV_HEADER, rows)];
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    manifest = cutoff_regions(manifest, &cutoff);
    manifest.s = s_values;
    manifest.n = levels;
    manifest.source = Some(source.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}
