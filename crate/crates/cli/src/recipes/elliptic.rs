use fraclap_core::probe::{default_sweep, Method, RegularityEstimate};
use fraclap_core::{
    estimate_local_exponent, parabolic_regularity_report, solve_dirichlet, solve_parabolic, torsion_constant,
    torsion_solution, DivergenceRule, GridFunction, Profile, Region, Source, Verdict,
};

use super::{coord_header, default_windows, grid, invalid, omega_rows, params, tag, RunError, RunResult};
use crate::config::{Config, NamedWindow, SourceSpec};
use crate::output::{num, row, Artifact, CheckOutcome, Manifest, RunOutput};

/// Center and radius of Ω when it is a ball (or a 1D interval).
fn ball_of(omega: &Region) -> Result<(Vec<f64>, f64), RunError> {
    match omega {
        Region::Ball { center, radius } => Ok((center.clone(), *radius)),
        Region::Box { bounds } if bounds.len() == 1 => {
            let [a, b] = bounds[0];
            Ok((vec![0.5 * (a + b)], 0.5 * (b - a)))
        }
        _ => Err(invalid("the closed-form benchmark needs a ball or an interval".into())),
    }
}

fn jump() -> Profile {
    Profile::Jump { at: 0.0, left: 0.0, right: 1.0, axis: 0 }
}

pub fn getoor(config: &Config) -> RunResult {
    let dim = config.dim();
    let omega = config.omega();
    let (center, radius) = ball_of(&omega)?;
    let s_values = config.s_values(&[0.5]);
    let levels = config.levels(if dim == 1 { &[129, 257, 513] } else { &[33, 49, 65] });
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    for &s in &s_values {
        let p = params(dim, s)?;
        let mut table = Vec::new();
        let mut finest = None;
        for &n in &levels {
            let g = grid(config, n)?;
            let f = Profile::Constant { value: 1.0 }.sample_on_omega(&g);
            let u = solve_dirichlet(&f, &p, &g)?;
            let exact = GridFunction::from_fn_on_omega(&g, |x| torsion_solution(x, &center, radius, s));
            let (mut rel, mut abs) = (0.0f64, 0.0f64);
            for &id in g.omega_nodes() {
                let x = &g.point(id)[..dim];
                let r = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                let err = (u.values()[id] - exact.values()[id]).abs();
                abs = abs.max(err);
                if r <= 0.5 * radius {
                    rel = rel.max(err / exact.values()[id]);
                }
            }
            table.push((n, g.h(), rel, abs));
            finest = Some((u, exact));
        }
        let (u, exact) = finest.ok_or_else(|| invalid("no refinement levels".into()))?;
        artifacts.push(Artifact::csv(
            format!("solution_s{}.csv", tag(s)),
            &format!("{},u,exact", coord_header(dim)),
            omega_rows(u.grid(), &[&u, &exact]),
        ));
        artifacts.push(Artifact::csv(
            format!("error_vs_h_s{}.csv", tag(s)),
            "n,h,max_rel_error_inner,max_abs_error",
            table.iter().map(|&(n, h, rel, abs)| row(&[n.to_string(), num(h), num(rel), num(abs)])),
        ));
        let (n_last, _, rel_last, _) = *table.last().expect("levels");
        if dim == 1 {
            checks.push(CheckOutcome::at_most(
                Some(1),
                format!("getoor s={s} inner relative error"),
                rel_last,
                0.02,
                format!("n={n_last}"),
            ));
            let worst_step = table.windows(2).map(|w| w[1].2 / w[0].2).fold(0.0, f64::max);
            checks.push(CheckOutcome::new(
                Some(1),
                format!("getoor s={s} error decreases"),
                worst_step < 1.0,
                worst_step,
                1.0,
                "largest ratio of successive errors",
            ));
        } else {
            // the staircase boundary makes the disc error oscillate under refinement
            let worst = table.iter().map(|r| r.2).fold(0.0, f64::max);
            checks.push(CheckOutcome::at_most(
                None,
                format!("getoor s={s} inner relative error"),
                worst,
                0.01,
                "largest over all levels",
            ));
        }
    }
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &omega);
    manifest.s = s_values;
    manifest.n = levels;
    manifest.source = Some(SourceSpec::Analytic(Profile::Constant { value: 1.0 }).describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}

fn rule_of(config: &Config) -> DivergenceRule {
    let d = DivergenceRule::default();
    DivergenceRule {
        min_rate: config.probe.min_rate.unwrap_or(d.min_rate),
        min_increment: config.probe.min_increment.unwrap_or(d.min_increment),
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "convergent",
        Verdict::Divergent => "divergent",
        Verdict::Pending => "pending",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Gagliardo => "gagliardo",
        Method::Besov => "besov",
        Method::Potential => "potential",
    }
}

/// Dirichlet solutions on every refinement level.
fn solve_levels(config: &Config, source: &SourceSpec, s: f64, levels: &[usize]) -> Result<Vec<GridFunction>, RunError> {
    let p = params(config.dim(), s)?;
    levels
        .iter()
        .map(|&n| {
            let g = grid(config, n)?;
            let f = source.sample(&g, &config.base)?;
            Ok(solve_dirichlet(&f, &p, &g)?)
        })
        .collect()
}

struct Probe {
    p: f64,
    method: Method,
    sweep: Vec<f64>,
    rule: DivergenceRule,
}

impl Probe {
    fn from(config: &Config) -> Self {
        Probe {
            p: config.probe.p.unwrap_or(2.0),
            method: config.probe.method.unwrap_or(Method::Besov),
            sweep: config.probe.sweep.clone().unwrap_or_else(default_sweep),
            rule: rule_of(config),
        }
    }

    fn run(&self, solutions: &[GridFunction], window: &NamedWindow) -> Result<RegularityEstimate, RunError> {
        Ok(estimate_local_exponent(
            |l| Ok(solutions[l].clone()),
            solutions.len(),
            self.p,
            &window.spec(),
            &self.sweep,
            self.method,
            &self.rule,
        )?)
    }
}

fn estimate_artifacts(est: &RegularityEstimate, solutions: &[GridFunction], stem: &str) -> Result<Vec<Artifact>, RunError> {
    let mut json = est.to_json()?;
    json.push('\n');
    let mut rows = Vec::new();
    for (l, sums) in est.sums.iter().enumerate() {
        let g = solutions[l].grid();
        for (i, &sum) in sums.iter().enumerate() {
            rows.push(row(&[
                l.to_string(),
                g.n().to_string(),
                num(g.h()),
                num(est.sweep[i]),
                num(sum),
                verdict_name(est.verdicts[l][i]).to_string(),
            ]));
        }
    }
    Ok(vec![
        Artifact { name: format!("estimate_{stem}.json"), body: json },
        Artifact::csv(format!("sums_{stem}.csv"), "level,n,h,sigma,sum,verdict", rows),
    ])
}

pub fn elliptic_regularity(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.3, 0.5]);
    let levels = config.levels(&[257, 513, 1025, 2049, 4097]);
    let source = config.source_or(jump());
    let windows = config.windows_or(default_windows(dim));
    let probe = Probe::from(config);
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for &s in &s_values {
        let solutions = solve_levels(config, &source, s, &levels)?;
        let mut stars = Vec::new();
        for window in &windows {
            let est = probe.run(&solutions, window)?;
            artifacts.extend(estimate_artifacts(&est, &solutions, &format!("s{}_{}", tag(s), window.name))?);
            summary.push(row(&[
                num(s),
                window.name.clone(),
                method_name(probe.method).into(),
                num(probe.p),
                num(est.sigma_star),
            ]));
            stars.push((window.name.as_str(), est.sigma_star));
        }
        let find = |name: &str| stars.iter().find(|(n, _)| *n == name).map(|&(_, v)| v);
        if let Some(inner) = find("interior") {
            checks.push(CheckOutcome::at_least(
                Some(6),
                format!("interior gain s={s}"),
                inner,
                2.0 * s - 0.1,
                "sigma* on the interior window vs 2s - 0.1",
            ));
        }
        if let Some(edge) = find("boundary") {
            checks.push(CheckOutcome::at_most(
                Some(7),
                format!("boundary cap s={s}"),
                edge,
                s + 0.6,
                "sigma* on the boundary window vs s + 1/2 + 0.1",
            ));
            if let Some(inner) = find("interior") {
                checks.push(CheckOutcome::new(
                    Some(7),
                    format!("boundary below interior s={s}"),
                    edge < inner,
                    edge,
                    inner,
                    "boundary sigma* must be strictly below the interior sigma*",
                ));
            }
        }
    }
    artifacts.push(Artifact::csv("summary.csv", "s,region,method,p,sigma_star", summary));
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    for w in &windows {
        manifest = manifest
            .region(&format!("{}.inner", w.name), &w.inner)
            .region(&format!("{}.outer", w.name), &w.outer);
    }
    manifest.s = s_values;
    manifest.n = levels;
    manifest.source = Some(source.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}

pub fn regularity_sweep(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
    let levels = config.levels(&[257, 513, 1025, 2049, 4097]);
    let source = config.source_or(jump());
    let window = config
        .windows_or(default_windows(dim))
        .into_iter()
        .next()
        .ok_or_else(|| invalid("regularity-sweep needs a probe window".into()))?;
    let probe = Probe::from(config);
    let horizon = config.time.horizon.unwrap_or(1.0);
    let nt = config.time.steps.as_ref().and_then(|v| v.first().copied()).unwrap_or(32);
    let theta = config.theta_values(&[1.0])[0];
    let top = probe.sweep.last().copied().unwrap_or(1.9);
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    let mut sweep_rows = Vec::new();
    let mut totals = Vec::new();
    for &s in &s_values {
        let solutions = solve_levels(config, &source, s, &levels)?;
        let est = probe.run(&solutions, &window)?;
        artifacts.extend(estimate_artifacts(&est, &solutions, &format!("s{}_{}", tag(s), window.name))?);
        let prediction = (2.0 * s).min(top);
        sweep_rows.push(row(&[num(s), window.name.clone(), method_name(probe.method).into(), num(est.sigma_star), num(2.0 * s)]));
        checks.push(CheckOutcome::at_least(
            None,
            format!("local gain s={s}"),
            est.sigma_star,
            prediction - 0.1,
            "sigma* vs min(2s, top of sweep) - 0.1",
        ));

        let g = grid(config, levels[0])?;
        let p = params(dim, s)?;
        let f = Source::Steady(source.sample(&g, &config.base)?);
        let traj = solve_parabolic(&f, horizon, nt, theta, &p, &g)?;
        let report = parabolic_regularity_report(&traj, probe.p, &window.spec(), &p)?;
        artifacts.push(Artifact::csv(
            format!("parabolic_s{}.csv", tag(s)),
            fraclap_core::probe::ParabolicReport::CSV_HEADER,
            report.csv_rows(),
        ));
        totals.push(row(&[
            num(s),
            report.estimator.clone(),
            num(report.ut_total),
            num(report.potential_total),
            num(report.local_total),
        ]));
    }
    artifacts.push(Artifact::csv("sweep.csv", "s,region,method,sigma_star,two_s", sweep_rows));
    artifacts.push(Artifact::csv(
        "parabolic_totals.csv",
        "s,estimator,ut_total,potential_total,local_total",
        totals,
    ));
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim)
        .region("omega", &config.omega())
        .region(&format!("{}.inner", window.name), &window.inner)
        .region(&format!("{}.outer", window.name), &window.outer);
    manifest.s = s_values;
    manifest.n = levels;
    manifest.tau = vec![horizon / nt as f64];
    manifest.source = Some(source.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}

pub fn boundary_profile(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.3, 0.5, 0.7]);
    let levels = config.levels(&[513]);
    let n = *levels.last().ok_or_else(|| invalid("no refinement levels".into()))?;
    let source = config.source_or(Profile::Constant { value: 1.0 });
    let shell = 0.1;
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for &s in &s_values {
        let g = grid(config, n)?;
        let f = source.sample(&g, &config.base)?;
        let u = solve_dirichlet(&f, &params(dim, s)?, &g)?;
        let rho = GridFunction::from_values(&g, g.rho().to_vec())?;
        let ratio_values: Vec<f64> = (0..g.len())
            .map(|id| {
                let r = g.rho()[id];
                if g.mask()[id] && r > 0.0 {
                    u.values()[id] / r.powf(s)
                } else {
                    0.0
                }
            })
            .collect();
        let ratio = GridFunction::from_values(&g, ratio_values)?;
        artifacts.push(Artifact::csv(
            format!("profile_s{}.csv", tag(s)),
            &format!("{},rho,u,u_over_rho_s", coord_header(dim)),
            omega_rows(&g, &[&rho, &u, &ratio]),
        ));
        let near: Vec<f64> = g
            .omega_nodes()
            .iter()
            .filter(|&&id| g.rho()[id] < shell)
            .map(|&id| ratio.values()[id])
            .collect();
        let lo = near.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = near.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // K c (r² − |x|²)^s ≈ K c (2rρ)^s near the boundary of a ball of radius r
        let reference = match (source.constant(), ball_of(&config.omega())) {
            (Some(c), Ok((_, radius))) => Some(c * torsion_constant(dim, s) * (2.0 * radius).powf(s)),
            _ => None,
        };
        summary.push(row(&[num(s), num(shell), num(lo), num(hi), reference.map_or_else(|| "nan".into(), num)]));
        if let Some(r) = reference.filter(|r| *r > 0.0) {
            checks.push(CheckOutcome::at_least(None, format!("rho^s lower s={s}"), lo / r, 0.5, "min of u/(K c (2r rho)^s) in the shell"));
            checks.push(CheckOutcome::at_most(None, format!("rho^s upper s={s}"), hi / r, 2.0, "max of u/(K c (2r rho)^s) in the shell"));
        }
    }
    artifacts.push(Artifact::csv("summary.csv", "s,shell,ratio_min,ratio_max,reference", summary));
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    manifest.s = s_values;
    manifest.n = vec![n];
    manifest.source = Some(source.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}
