//! Time stepping for `u_t + (-Δ)^s u = f` with zero exterior data, the
//! `v = u e^{-t}` energy bookkeeping and the discrete semigroup.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::elliptic::SOLVE_TOLERANCE;
use crate::error::{Error, Result};
use crate::grid::{extend_by_zero, Grid, GridFunction};
use crate::operator::{FractionalLaplacian, FractionalParams, DEFAULT_DENSE_CAP};
use crate::spaces::fmt_float;

/// Time dependence of a separable source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modulation {
    Constant,
    /// `sin(2π frequency t)`
    Sine { frequency: f64 },
    /// `min(t / time, 1)`
    Ramp { time: f64 },
}

impl Modulation {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Sine { frequency } => (std::f64::consts::TAU * frequency * t).sin(),
            Modulation::Ramp { time } => (t / time).min(1.0),
        }
    }
}

/// Time-indexed source. Values are read on Ω nodes only.
#[derive(Clone, Debug)]
pub enum Source {
    Steady(GridFunction),
    /// `shape(x) · modulation(t)`
    Modulated { shape: GridFunction, modulation: Modulation },
    /// piecewise-linear interpolation between frames at increasing times,
    /// held constant outside the frame range
    Frames { times: Vec<f64>, frames: Vec<GridFunction> },
}

impl Source {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        Source::Steady(GridFunction::zeros(grid))
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let check = |f: &GridFunction| {
            if f.grid().len() != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), got: f.grid().len() });
            }
            Ok(())
        };
        match self {
            Source::Steady(f) => check(f),
            Source::Modulated { shape, .. } => check(shape),
            Source::Frames { times, frames } => {
                if times.is_empty() || times.len() != frames.len() {
                    return Err(Error::InvalidArgument("frames and times differ in length".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("frame times must increase".into()));
                }
                frames.iter().try_for_each(check)
            }
        }
    }

    /// Source values on Ω nodes at time `t`.
    pub fn omega_values(&self, t: f64) -> Vec<f64> {
        match self {
            Source::Steady(f) => f.restrict_to_omega(),
            Source::Modulated { shape, modulation } => {
                let m = modulation.at(t);
                shape.restrict_to_omega().into_iter().map(|v| v * m).collect()
            }
            Source::Frames { times, frames } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return frames[0].restrict_to_omega();
                }
                if t >= times[last] {
                    return frames[last].restrict_to_omega();
                }
                let j = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[j]) / (times[j + 1] - times[j]);
                let a = frames[j].restrict_to_omega();
                let b = frames[j + 1].restrict_to_omega();
                a.iter().zip(&b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
            }
        }
    }
}

/// Per-step quantities in the `v = u e^{-t}` variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// `‖(u_k − u_{k−1})/τ‖₂²`
    pub ut_norm_sq: f64,
    /// `B[v_k, v_k]`
    pub form: f64,
    /// `(v_k, v_k)`
    pub mass: f64,
    /// `(g_k, (v_k − v_{k−1})/τ)`
    pub source_work: f64,
}

/// Snapshots `u_k` at `t_k = kτ` plus per-step records (entry `k − 1` belongs to step `k`).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub tau: f64,
    pub theta: f64,
    pub snapshots: Vec<GridFunction>,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    /// Writes `snapshot_{k}.csv` for every snapshot (columns: coordinates, u).
    pub fn write_snapshots(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let width = self.steps().to_string().len();
        for (k, u) in self.snapshots.iter().enumerate() {
            let path = dir.join(format!("snapshot_{k:0width$}.csv"));
            let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_grid_csv(&mut out, u)?;
        }
        Ok(())
    }
}

/// Writes one row per node: coordinates then value.
pub fn write_grid_csv(out: &mut impl Write, u: &GridFunction) -> Result<()> {
    let grid = u.grid();
    let dim = grid.dim();
    writeln!(out, "{}", if dim == 1 { "x,u" } else { "x,y,u" })?;
    for id in 0..grid.len() {
        let p = grid.point(id);
        let coords: Vec<String> = p[..dim].iter().map(|&c| fmt_float(c)).collect();
        writeln!(out, "{},{}", coords.join(","), fmt_float(u.values()[id]))?;
    }
    Ok(())
}

/// Dense Ω-operator with helpers for the discrete inner products.
struct OmegaOperator {
    grid: Arc<Grid>,
    matrix: DMatrix<f64>,
}

impl OmegaOperator {
    fn new(grid: &Arc<Grid>, params: &FractionalParams, cap: usize) -> Result<Self> {
        let matrix = FractionalLaplacian::new(grid, *params)?.assemble(cap)?.matrix;
        Ok(OmegaOperator { grid: Arc::clone(grid), matrix })
    }

    fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b) * self.grid.cell_volume()
    }

    fn form(&self, v: &DVector<f64>) -> f64 {
        self.inner(&(&self.matrix * v), v)
    }

    /// Factor of `I + c A`.
    fn shifted_factor(&self, c: f64) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>)> {
        let m = self.matrix.nrows();
        let shifted = DMatrix::identity(m, m) + &self.matrix * c;
        let factor = Cholesky::new(shifted.clone()).ok_or(Error::SingularMatrix)?;
        Ok((shifted, factor))
    }
}

fn checked_solve(matrix: &DMatrix<f64>, factor: &Cholesky<f64, Dyn>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = factor.solve(b);
    let residual = (matrix * &x - b).amax();
    let tolerance = SOLVE_TOLERANCE * b.amax().max(f64::MIN_POSITIVE);
    if residual > tolerance {
        return Err(Error::Residual { residual, tolerance });
    }
    Ok(x)
}

/// θ-scheme integrator with a prefactored `I + τθA`.
pub struct ParabolicSolver {
    op: OmegaOperator,
    tau: f64,
    theta: f64,
    shifted: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl ParabolicSolver {
    pub fn new(grid: &Arc<Grid>, params: &FractionalParams, tau: f64, theta: f64) -> Result<Self> {
        Self::with_cap(grid, params, tau, theta, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(grid: &Arc<Grid>, params: &FractionalParams, tau: f64, theta: f64, cap: usize) -> Result<Self> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("θ = {theta} outside [1/2, 1]")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
        }
        let op = OmegaOperator::new(grid, params, cap)?;
        let (shifted, factor) = op.shifted_factor(tau * theta)?;
        Ok(ParabolicSolver { op, tau, theta, shifted, factor })
    }

    /// Runs `nt` steps from `u0` (zero in the standard problem).
    pub fn run(&self, source: &Source, u0: &GridFunction, nt: usize) -> Result<Trajectory> {
        let grid = &self.op.grid;
        source.validate(grid)?;
        let (tau, theta) = (self.tau, self.theta);
        let a = &self.op.matrix;
        let mut u = DVector::from_vec(u0.restrict_to_omega());
        let mut f_now = DVector::from_vec(source.omega_values(0.0));
        let mut snapshots = Vec::with_capacity(nt + 1);
        let mut records = Vec::with_capacity(nt);
        snapshots.push(extend_by_zero(u.as_slice(), grid)?);
        for k in 0..nt {
            let t_next = (k + 1) as f64 * tau;
            let f_next = DVector::from_vec(source.omega_values(t_next));
            let mut rhs = &u + &f_next * (tau * theta);
            if theta < 1.0 {
                rhs += (&f_now - a * &u) * (tau * (1.0 - theta));
            }
            let next = checked_solve(&self.shifted, &self.factor, &rhs)?;

            let decay = (-t_next).exp();
            let decay_prev = (-(k as f64) * tau).exp();
            let ut = (&next - &u) / tau;
            let v = &next * decay;
            let vt = (&v - &u * decay_prev) / tau;
            let g = &f_next * decay;
            records.push(StepRecord {
                t: t_next,
                ut_norm_sq: self.op.inner(&ut, &ut),
                form: self.op.form(&v),
                mass: self.op.inner(&v, &v),
                source_work: self.op.inner(&g, &vt),
            });
            snapshots.push(extend_by_zero(next.as_slice(), grid)?);
            u = next;
            f_now = f_next;
        }
        Ok(Trajectory { tau, theta, snapshots, records })
    }
}

/// Solves `u_t + (-Δ)^s u = f`, `u(·,0) = 0`, on `(0, T)` with `nt` θ-steps.
pub fn solve_parabolic(
    source: &Source,
    t_final: f64,
    nt: usize,
    theta: f64,
    params: &FractionalParams,
    grid: &Arc<Grid>,
) -> Result<Trajectory> {
    check_steps(t_final, nt)?;
    let solver = ParabolicSolver::new(grid, params, t_final / nt as f64, theta)?;
    solver.run(source, &GridFunction::zeros(grid), nt)
}

/// Same scheme from a nonzero initial datum (exploratory mode).
pub fn solve_parabolic_from(
    u0: &GridFunction,
    source: &Source,
    t_final: f64,
    nt: usize,
    theta: f64,
    params: &FractionalParams,
) -> Result<Trajectory> {
    check_steps(t_final, nt)?;
    let solver = ParabolicSolver::new(u0.grid(), params, t_final / nt as f64, theta)?;
    solver.run(source, &u0.dirichlet_projection(), nt)
}

fn check_steps(t_final: f64, nt: usize) -> Result<()> {
    if nt < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 time steps, got {nt}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {t_final} must be positive")));
    }
    Ok(())
}

/// One row of the energy ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub k: usize,
    pub t: f64,
    /// `Σ_{j≤k} τ ‖δv_j‖₂²`
    pub dissipation: f64,
    /// `B[v_k,v_k] + (v_k,v_k)`
    pub energy: f64,
    /// `max_{j≤k}` of the energy
    pub sup_energy: f64,
    /// `Σ_{j≤k} τ ‖g_j‖₂²`
    pub source_norm: f64,
}

impl LedgerRow {
    /// `(dissipation + sup_energy) / source_norm`, zero when everything vanishes.
    pub fn ratio(&self) -> f64 {
        let lhs = self.dissipation + self.sup_energy;
        if lhs == 0.0 {
            0.0
        } else {
            lhs / self.source_norm
        }
    }
}

/// Energy ledger with the Young-inequality bound (constant one).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub tau: f64,
    pub slack: f64,
    pub rows: Vec<LedgerRow>,
    /// steps where `dissipation + sup_energy > (1 + slack) source_norm`
    pub violations: Vec<usize>,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "k,t,dissipation,energy,source-norm";

    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(LedgerRow::ratio).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                fmt_float(r.t),
                fmt_float(r.dissipation),
                fmt_float(r.energy),
                fmt_float(r.source_norm)
            )?;
        }
        Ok(())
    }
}

/// Default slack `2τ`, the size of the time-discretization defect in the ledger.
pub fn energy_report(traj: &Trajectory, source: &Source) -> EnergyReport {
    energy_report_with_slack(traj, source, 2.0 * traj.tau)
}

pub fn energy_report_with_slack(traj: &Trajectory, source: &Source, slack: f64) -> EnergyReport {
    let tau = traj.tau;
    let vol = traj.snapshots[0].grid().cell_volume();
    let mut rows = Vec::with_capacity(traj.records.len());
    let mut violations = Vec::new();
    let (mut dissipation, mut source_norm, mut sup_energy) = (0.0, 0.0, 0.0f64);
    for (j, rec) in traj.records.iter().enumerate() {
        let k = j + 1;
        let decay = (-rec.t).exp();
        let prev = (-(rec.t - tau)).exp();
        let vt_sq: f64 = traj.snapshots[k]
            .restrict_to_omega()
            .iter()
            .zip(traj.snapshots[j].restrict_to_omega())
            .map(|(a, b)| {
                let d = (a * decay - b * prev) / tau;
                d * d
            })
            .sum::<f64>()
            * vol;
        let g_sq: f64 = source.omega_values(rec.t).iter().map(|g| g * g).sum::<f64>() * vol * decay * decay;
        dissipation += tau * vt_sq;
        source_norm += tau * g_sq;
        let energy = rec.form + rec.mass;
        sup_energy = sup_energy.max(energy);
        let row = LedgerRow { k, t: rec.t, dissipation, energy, sup_energy, source_norm };
        if dissipation + sup_energy > (1.0 + slack) * source_norm {
            violations.push(k);
        }
        rows.push(row);
    }
    EnergyReport { tau, slack, rows, violations }
}

/// Discrete semigroup `T_t ≈ (I + τA)^{-nt}`, `τ = t/nt`.
pub struct Semigroup {
    grid: Arc<Grid>,
    shifted: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    tau: f64,
}

impl Semigroup {
    pub fn new(grid: &Arc<Grid>, params: &FractionalParams, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
        }
        let op = OmegaOperator::new(grid, params, DEFAULT_DENSE_CAP)?;
        let (shifted, factor) = op.shifted_factor(tau)?;
        Ok(Semigroup { grid: Arc::clone(grid), shifted, factor, tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Applies `steps` resolvent steps to `phi` (restricted to Ω).
    pub fn apply(&self, phi: &GridFunction, steps: usize) -> Result<GridFunction> {
        let mut x = DVector::from_vec(phi.restrict_to_omega());
        for _ in 0..steps {
            x = checked_solve(&self.shifted, &self.factor, &x)?;
        }
        extend_by_zero(x.as_slice(), &self.grid)
    }
}

/// `T_t φ` by `nt` implicit-Euler steps of the homogeneous problem.
pub fn semigroup_apply(
    phi: &GridFunction,
    t: f64,
    nt: usize,
    params: &FractionalParams,
    grid: &Arc<Grid>,
) -> Result<GridFunction> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    if t == 0.0 || nt == 0 {
        return Ok(phi.clone());
    }
    Semigroup::new(grid, params, t / nt as f64)?.apply(phi, nt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::solve_dirichlet;
    use crate::grid::{build_grid, Region};
    use crate::spaces::{lp_norm, Scope};

    fn setup(n: usize, s: f64) -> (Arc<Grid>, FractionalParams) {
        let g = build_grid(1, &[[-2.0, 2.0]], n, Region::interval(-1.0, 1.0)).unwrap();
        (g, FractionalParams::new(1, s).unwrap())
    }

    fn ones(g: &Arc<Grid>) -> Source {
        Source::Steady(GridFunction::from_fn_on_omega(g, |_| 1.0))
    }

    #[test]
    fn zero_source_stays_zero() {
        let (g, p) = setup(33, 0.5);
        let traj = solve_parabolic(&Source::zero(&g), 1.0, 8, 1.0, &p, &g).unwrap();
        assert!(traj.snapshots.iter().all(|u| u.max_abs() == 0.0));
        let report = energy_report(&traj, &Source::zero(&g));
        assert!(report.rows.iter().all(|r| r.dissipation == 0.0 && r.energy == 0.0 && r.source_norm == 0.0));
        assert!(report.holds());
    }

    #[test]
    fn invalid_theta_and_steps_are_rejected() {
        let (g, p) = setup(33, 0.5);
        assert!(solve_parabolic(&ones(&g), 1.0, 8, 0.3, &p, &g).is_err());
        assert!(solve_parabolic(&ones(&g), 1.0, 1, 1.0, &p, &g).is_err());
    }

    #[test]
    fn long_run_approaches_elliptic_solution_monotonically() {
        let (g, p) = setup(65, 0.5);
        let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
        let steady = solve_dirichlet(&f, &p, &g).unwrap();
        let mut last = f64::INFINITY;
        for t in [1.0, 2.0, 4.0, 8.0] {
            let traj = solve_parabolic(&ones(&g), t, (16.0 * t) as usize, 1.0, &p, &g).unwrap();
            let err = (traj.last() - &steady).max_abs();
            assert!(err < last, "T={t}: {err} vs {last}");
            last = err;
        }
        assert!(last < 1e-3, "{last}");
    }

    #[test]
    fn crank_nicolson_is_second_order_and_euler_first_order() {
        let (g, p) = setup(33, 0.5);
        let src = Source::Modulated {
            shape: GridFunction::from_fn_on_omega(&g, |x| 1.0 + x[0]),
            modulation: Modulation::Sine { frequency: 0.5 },
        };
        for (theta, expected) in [(1.0, 1.0), (0.5, 2.0)] {
            let run = |nt: usize| solve_parabolic(&src, 1.0, nt, theta, &p, &g).unwrap().last().clone();
            let reference = run(256);
            let e1 = (&run(16) - &reference).max_abs();
            let e2 = (&run(32) - &reference).max_abs();
            let e3 = (&run(64) - &reference).max_abs();
            let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
            assert!((order - expected).abs() <= 0.3, "θ={theta}: order {order}");
        }
    }

    #[test]
    fn implicit_euler_satisfies_energy_inequality() {
        let (g, p) = setup(65, 0.5);
        for nt in [32, 64] {
            let traj = solve_parabolic(&ones(&g), 2.0, nt, 1.0, &p, &g).unwrap();
            let report = energy_report_with_slack(&traj, &ones(&g), 0.05);
            assert!(report.holds(), "nt={nt}: max ratio {}", report.max_ratio());
        }
    }

    #[test]
    fn ledger_converges_under_step_halving() {
        let (g, p) = setup(65, 0.5);
        let last = |nt: usize| {
            let traj = solve_parabolic(&ones(&g), 1.0, nt, 1.0, &p, &g).unwrap();
            *energy_report(&traj, &ones(&g)).rows.last().unwrap()
        };
        let (a, b, c) = (last(32), last(64), last(128));
        for (x, y, z) in [
            (a.dissipation, b.dissipation, c.dissipation),
            (a.energy, b.energy, c.energy),
            (a.source_norm, b.source_norm, c.source_norm),
        ] {
            assert!((z / y - 1.0).abs() < 0.05 && (z / y - 1.0).abs() < (y / x - 1.0).abs() + 1e-12);
        }
    }

    #[test]
    fn frames_interpolate_linearly() {
        let (g, _) = setup(17, 0.5);
        let src = Source::Frames {
            times: vec![0.0, 1.0],
            frames: vec![GridFunction::zeros(&g), GridFunction::from_fn_on_omega(&g, |_| 2.0)],
        };
        assert!(src.validate(&g).is_ok());
        assert!(src.omega_values(0.25).iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(src.omega_values(3.0).iter().all(|&v| v == 2.0));
    }

    #[test]
    fn semigroup_identity_positivity_and_contraction() {
        let (g, p) = setup(65, 0.4);
        let phi = GridFunction::from_fn_on_omega(&g, |x| (3.0 * x[0]).cos().abs());
        assert_eq!(semigroup_apply(&phi, 0.0, 10, &p, &g).unwrap().values(), phi.values());
        let out = semigroup_apply(&phi, 0.5, 10, &p, &g).unwrap();
        assert!(out.values().iter().all(|&v| v >= 0.0));
        for q in [1.0, 2.0, f64::INFINITY] {
            assert!(lp_norm(&out, q, &Scope::Omega) <= lp_norm(&phi, q, &Scope::Omega) + 1e-12);
        }
    }

    #[test]
    fn semigroup_composes() {
        let (g, p) = setup(33, 0.6);
        let sg = Semigroup::new(&g, &p, 0.05).unwrap();
        let phi = GridFunction::from_fn_on_omega(&g, |x| x[0] * x[0] - 0.3);
        let both = sg.apply(&sg.apply(&phi, 3).unwrap(), 4).unwrap();
        let once = sg.apply(&phi, 7).unwrap();
        assert!((&both - &once).max_abs() < 1e-12);
    }

    #[test]
    fn snapshots_export_one_file_each() {
        let (g, p) = setup(17, 0.5);
        let traj = solve_parabolic(&ones(&g), 0.5, 4, 1.0, &p, &g).unwrap();
        let dir = std::env::temp_dir().join(format!("fraclap-traj-{}", std::process::id()));
        traj.write_snapshots(&dir).unwrap();
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 5);
        let first = std::fs::read_to_string(dir.join("snapshot_0.csv")).unwrap();
        assert_eq!(first.lines().count(), g.len() + 1);
        std::fs::remove_dir_all(&dir).ok();
    }
}
