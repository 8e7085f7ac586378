use fraclap_core::parabolic::{energy_report_with_slack, ParabolicSolver};
use fraclap_core::{
    lp_norm, solve_dirichlet, EnergyReport, GridFunction, Profile, Scope, Semigroup, Source,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grid, invalid, params, tag, RunError, RunResult};
use crate::config::Config;
use crate::output::{num, row, Artifact, CheckOutcome, Manifest, RunOutput};

const STEADY_TOLERANCE: f64 = 1e-4;
const STEADY_MAX_STEPS: usize = 2000;

fn sup_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    (a - b).max_abs()
}

/// Energy ledger of `u_t + (-Δ)^s u = f` and the approach to the steady state.
pub fn parabolic_energy(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.5]);
    let levels = config.levels(&[129]);
    let horizon = config.time.horizon.unwrap_or(1.0);
    let steps = config.time.steps.clone().unwrap_or_else(|| vec![64, 128]);
    let thetas = config.theta_values(&[1.0]);
    let slack = config.time.slack.unwrap_or(0.05);
    let tau_steady = config.time.tau.unwrap_or(0.05);
    let source_spec = config.source_or(Profile::Constant { value: 1.0 });
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("time.horizon must be positive, got {horizon}")));
    }
    if !(tau_steady > 0.0 && tau_steady.is_finite()) {
        return Err(invalid(format!("time.tau must be positive, got {tau_steady}")));
    }
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    let mut taus = Vec::new();
    for &s in &s_values {
        let p = params(dim, s)?;
        for &n in &levels {
            let g = grid(config, n)?;
            let f = source_spec.sample(&g, &config.base)?;
            let source = Source::Steady(f.clone());
            let zero = GridFunction::zeros(&g);
            for &theta in &thetas {
                for &nt in &steps {
                    if nt < 2 {
                        return Err(invalid(format!("time.steps entries must be at least 2, got {nt}")));
                    }
                    let tau = horizon / nt as f64;
                    taus.push(tau);
                    let traj = ParabolicSolver::new(&g, &p, tau, theta)?.run(&source, &zero, nt)?;
                    let report = energy_report_with_slack(&traj, &source, slack);
                    let mut body = Vec::new();
                    report.write_csv(&mut body).map_err(RunError::from)?;
                    let body = String::from_utf8(body).expect("ledger is ASCII");
                    let rows: Vec<String> = body.lines().skip(1).map(str::to_owned).collect();
                    artifacts.push(Artifact::csv(
                        format!("energy_s{}_n{n}_theta{}_nt{nt}.csv", tag(s), tag(theta)),
                        EnergyReport::CSV_HEADER,
                        rows,
                    ));
                    checks.push(CheckOutcome::new(
                        Some(4),
                        format!("energy bound s={s} n={n} theta={theta} tau={tau}"),
                        report.holds(),
                        report.max_ratio(),
                        1.0 + slack,
                        format!("largest (dissipation + sup energy) / source norm, {} violations", report.violations.len()),
                    ));
                }
            }

            let steady = solve_dirichlet(&f, &p, &g)?;
            let probe = ParabolicSolver::new(&g, &p, tau_steady, 1.0)?.run(&source, &zero, STEADY_MAX_STEPS)?;
            let relaxed = probe
                .snapshots
                .iter()
                .position(|u| sup_distance(u, &steady) <= STEADY_TOLERANCE)
                .ok_or_else(|| {
                    invalid(format!(
                        "no steady state within {STEADY_MAX_STEPS} steps of size {tau_steady}"
                    ))
                })?;
            let check_steps = ((1.5 * relaxed as f64).ceil() as usize).max(2);
            let t_check = check_steps as f64 * tau_steady;
            let mut rows = Vec::new();
            for theta in [1.0, 0.5] {
                let traj = ParabolicSolver::new(&g, &p, tau_steady, theta)?.run(&source, &zero, check_steps)?;
                let errors: Vec<f64> = traj.snapshots.iter().map(|u| sup_distance(u, &steady)).collect();
                for (k, e) in errors.iter().enumerate() {
                    rows.push(row(&[num(s), n.to_string(), num(theta), num(traj.time(k)), num(*e)]));
                }
                let last = *errors.last().expect("initial snapshot");
                checks.push(CheckOutcome::at_most(
                    Some(8),
                    format!("steady state s={s} n={n} theta={theta}"),
                    last,
                    STEADY_TOLERANCE,
                    format!("sup error at T={t_check} (1.5 x relaxation time {})", relaxed as f64 * tau_steady),
                ));
                if theta == 1.0 {
                    let rises = errors.windows(2).filter(|w| w[1] > w[0]).count();
                    checks.push(CheckOutcome::new(
                        Some(8),
                        format!("steady state monotone s={s} n={n} theta=1"),
                        rises == 0,
                        rises as f64,
                        0.0,
                        "steps where the implicit-Euler error grows",
                    ));
                }
            }
            artifacts.push(Artifact::csv(format!("steady_s{}_n{n}.csv", tag(s)), "s,n,theta,t,error", rows));
        }
    }
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    manifest.s = s_values;
    manifest.n = levels;
    taus.push(tau_steady);
    manifest.tau = taus;
    manifest.source = Some(source_spec.describe());
    Ok(RunOutput::new(manifest, artifacts, checks))
}

/// `‖T_t φ‖_p ≤ ‖φ‖_p` and `T_t φ ≥ 0` for seeded random data.
pub fn semigroup_contraction(config: &Config) -> RunResult {
    let dim = config.dim();
    let s_values = config.s_values(&[0.5]);
    let levels = config.levels(&[129]);
    let samples = config.semigroup.samples.unwrap_or(100);
    let times = config.semigroup.times.clone().unwrap_or_else(|| vec![0.1, 1.0]);
    let exponents = config.semigroup.p.clone().unwrap_or_else(|| vec![1.0, 2.0, f64::INFINITY]);
    let steps = config.semigroup.steps.unwrap_or(10);
    if steps == 0 {
        return Err(invalid("semigroup.steps must be positive".into()));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid(format!("semigroup.times must be positive, got {t}")));
    }
    if let Some(&p) = exponents.iter().find(|&&p| p.is_nan() || p < 1.0) {
        return Err(invalid(format!("semigroup.p entries must be at least 1, got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut contraction = Vec::new();
    let mut positivity = Vec::new();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_min = f64::INFINITY;
    let mut taus = Vec::new();
    for &s in &s_values {
        let p = params(dim, s)?;
        for &n in &levels {
            let g = grid(config, n)?;
            let m = g.omega_len();
            let data: Vec<Vec<f64>> = (0..samples).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            for &t in &times {
                let tau = t / steps as f64;
                taus.push(tau);
                let semigroup = Semigroup::new(&g, &p, tau)?;
                for (j, sample) in data.iter().enumerate() {
                    let phi = fraclap_core::extend_by_zero(sample, &g)?;
                    let out = semigroup.apply(&phi, steps)?;
                    for &q in &exponents {
                        let before = lp_norm(&phi, q, &Scope::Omega);
                        let after = lp_norm(&out, q, &Scope::Omega);
                        let excess = after - before;
                        worst_excess = worst_excess.max(excess);
                        contraction.push(row(&[
                            num(s),
                            n.to_string(),
                            num(t),
                            j.to_string(),
                            num(q),
                            num(before),
                            num(after),
                            num(excess),
                        ]));
                    }
                    let positive = phi.map(f64::abs);
                    let image = semigroup.apply(&positive, steps)?;
                    let low = image.restrict_to_omega().into_iter().fold(f64::INFINITY, f64::min);
                    worst_min = worst_min.min(low);
                    positivity.push(row(&[num(s), n.to_string(), num(t), j.to_string(), num(low)]));
                }
            }
        }
    }
    let checks = vec![
        CheckOutcome::at_most(
            Some(5),
            "semigroup contraction",
            worst_excess,
            1e-12,
            format!("largest |T_t phi|_p - |phi|_p over {samples} samples"),
        ),
        CheckOutcome::at_least(
            Some(5),
            "semigroup positivity",
            worst_min,
            -1e-12,
            "smallest value of T_t |phi| on Omega",
        ),
    ];
    let artifacts = vec![
        Artifact::csv("contraction.csv", "s,n,t,sample,p,norm_in,norm_out,excess", contraction),
        Artifact::csv("positivity.csv", "s,n,t,sample,min", positivity),
    ];
    let mut manifest = Manifest::new(&config.experiment, config.seed, dim).region("omega", &config.omega());
    manifest.s = s_values;
    manifest.n = levels;
    manifest.tau = taus;
    manifest.source = Some(format!("{samples} samples uniform in (-1, 1) on Omega nodes"));
    Ok(RunOutput::new(manifest, artifacts, checks))
}
