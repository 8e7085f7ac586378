//! Cut-off localization: the remainder `I_s(u, η)`, the product rule
//! `(-Δ)^s(uη) = η(-Δ)^s u + u(-Δ)^s η − I_s(u,η)`, the localized source and
//! the empirical bound on `g = u(-Δ)^s η − I_s(u,η)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Region};
use crate::operator::{FractionalLaplacian, FractionalParams};
use crate::spaces::{fmt_float, gagliardo_seminorm, lp_norm, Scope};

/// `I_s(u,η)(x) = C ∫ (u(x) − u(y))(η(x) − η(y)) |x − y|^{-N-2s} dy` at every box node.
///
/// Far lattice cells use the operator's weights; the nearest-neighbor
/// Taylor part uses `2h² ∇_h u · ∇_h η` with central differences; the part of
/// the integral where both factors vanish (beyond the box) contributes
/// `u(x) η(x)` times the remaining kernel mass.
pub fn remainder_is(u: &GridFunction, eta: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let op = FractionalLaplacian::new(u.grid(), *params)?;
    Ok(remainder_with(&op, u, eta))
}

fn remainder_with(op: &FractionalLaplacian, u: &GridFunction, eta: &GridFunction) -> GridFunction {
    let grid = op.grid();
    let weights = op.weights();
    let (uv, ev) = (u.values(), eta.values());
    let support: Vec<usize> = (0..grid.len()).filter(|&j| uv[j] != 0.0 || ev[j] != 0.0).collect();
    let near = weights.near_coefficient();
    let dim = grid.dim();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (ui, ei) = (uv[i], ev[i]);
            let mut acc = 0.0;
            for &j in &support {
                if j != i {
                    acc += op.far_coupling(i, j) * (ui - uv[j]) * (ei - ev[j]);
                }
            }
            if ui != 0.0 && ei != 0.0 {
                // box nodes off the support see (u_i)(η_i); beyond the box the
                // remaining kernel mass does the same
                let mut mass = weights.self_weight();
                for j in 0..grid.len() {
                    if j == i {
                        continue;
                    }
                    mass -= op.coupling(i, j);
                    if uv[j] == 0.0 && ev[j] == 0.0 {
                        mass += op.far_coupling(i, j);
                    }
                }
                acc += mass * ui * ei;
            }
            let mut grad = 0.0;
            for axis in 0..dim {
                let fwd = grid.neighbor(i, axis, 1);
                let bwd = grid.neighbor(i, axis, -1);
                let du = fwd.map_or(0.0, |j| uv[j]) - bwd.map_or(0.0, |j| uv[j]);
                let de = fwd.map_or(0.0, |j| ev[j]) - bwd.map_or(0.0, |j| ev[j]);
                grad += du * de;
            }
            // 2h² (du/2h)(de/2h) per axis
            acc + near * 0.5 * grad
        })
        .collect();
    GridFunction::from_values(grid, out).expect("same grid")
}

/// The four terms of the product rule, all from one quadrature.
pub struct ProductRuleTerms {
    pub product: GridFunction,
    pub eta_lu: GridFunction,
    pub u_leta: GridFunction,
    pub remainder: GridFunction,
}

impl ProductRuleTerms {
    pub fn compute(u: &GridFunction, eta: &GridFunction, params: &FractionalParams) -> Result<Self> {
        let op = FractionalLaplacian::new(u.grid(), *params)?;
        Ok(ProductRuleTerms {
            product: op.apply(&u.product(eta)),
            eta_lu: eta.product(&op.apply(u)),
            u_leta: u.product(&op.apply(eta)),
            remainder: remainder_with(&op, u, eta),
        })
    }

    /// Nodewise `(-Δ)^s(uη) − η(-Δ)^s u − u(-Δ)^s η + I_s(u,η)`.
    pub fn defect(&self) -> GridFunction {
        &(&(&self.product - &self.eta_lu) - &self.u_leta) + &self.remainder
    }
}

/// Maximum nodewise residual of the product-rule identity over the box.
pub fn product_rule_residual(u: &GridFunction, eta: &GridFunction, params: &FractionalParams) -> Result<f64> {
    Ok(ProductRuleTerms::compute(u, eta, params)?.defect().max_abs())
}

/// Localized source with the verification numbers.
pub struct LocalizedRhs {
    pub rhs: GridFunction,
    /// `‖(-Δ)^s(uη) − F‖_∞`
    pub defect: f64,
    /// product-rule residual plus `‖η‖_∞ ‖(-Δ)^s u − f‖_{∞,Ω}`
    pub bound: f64,
}

/// `F = ηf + u(-Δ)^s η − I_s(u,η)`, checked against the product-rule bound.
pub fn localized_rhs(u: &GridFunction, eta: &GridFunction, f: &GridFunction, params: &FractionalParams) -> Result<LocalizedRhs> {
    let terms = ProductRuleTerms::compute(u, eta, params)?;
    let f_omega = f.dirichlet_projection();
    let rhs = &(&eta.product(&f_omega) + &terms.u_leta) - &terms.remainder;
    let defect = (&terms.product - &rhs).max_abs();
    let grid = u.grid();
    let lu = &terms.eta_lu;
    // ‖η(Lu − f)‖_∞ without dividing by η
    let solve_defect = (0..grid.len())
        .map(|i| (lu.values()[i] - eta.values()[i] * f_omega.values()[i]).abs())
        .fold(0.0, f64::max);
    let bound = terms.defect().max_abs() + solve_defect;
    let scale = terms.product.max_abs().max(rhs.max_abs()).max(1.0);
    if defect > bound + 1e-12 * scale {
        return Err(Error::Residual { residual: defect, tolerance: bound });
    }
    Ok(LocalizedRhs { rhs, defect, bound })
}

/// Empirical constant in `‖g‖_p ≤ C (‖u‖_{W^{s,p}(ω₂)} + ‖u‖_{L^p(Ω)})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GBoundReport {
    pub s: f64,
    pub p: f64,
    pub h: f64,
    pub omega2: String,
    pub g_norm: f64,
    pub u_omega2_norm: f64,
    pub u_lp_omega: f64,
    pub ratio: f64,
}

impl GBoundReport {
    pub const CSV_HEADER: &'static str = "s,p,h,omega2,g_norm,u_omega2_norm,u_lp_omega,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_float(self.s),
            fmt_float(self.p),
            fmt_float(self.h),
            self.omega2,
            fmt_float(self.g_norm),
            fmt_float(self.u_omega2_norm),
            fmt_float(self.u_lp_omega),
            fmt_float(self.ratio)
        )
    }
}

/// Computes `g = u(-Δ)^s η − I_s(u,η)` and the ratio of its L^p norm over
/// the box to `‖u‖_{W^{s,p}(ω₂)} + ‖u‖_{L^p(Ω)}`.
pub fn g_bound_monitor(
    u: &GridFunction,
    eta: &GridFunction,
    params: &FractionalParams,
    omega2: &Region,
    p: f64,
) -> Result<GBoundReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("g-bound index p = {p} must be finite and ≥ 1")));
    }
    if omega2.separation_within(u.grid().omega()) <= 0.0 {
        return Err(Error::InvalidNesting("ω₂ must lie inside Ω".into()));
    }
    let terms = ProductRuleTerms::compute(u, eta, params)?;
    let g = &terms.u_leta - &terms.remainder;
    let g_norm = lp_norm(&g, p, &Scope::Box);
    let scope = Scope::Region(omega2.clone());
    let u_omega2_norm = lp_norm(u, p, &scope) + gagliardo_seminorm(u, params.s, p, &scope)?;
    let u_lp_omega = lp_norm(u, p, &Scope::Omega);
    let denom = u_omega2_norm + u_lp_omega;
    let ratio = if denom == 0.0 { 0.0 } else { g_norm / denom };
    Ok(GBoundReport {
        s: params.s,
        p,
        h: u.grid().h(),
        omega2: scope.to_string(),
        g_norm,
        u_omega2_norm,
        u_lp_omega,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::solve_dirichlet;
    use crate::grid::{build_cutoff, build_grid, CutoffSpec, Grid};
    use std::sync::Arc;

    fn setup(n: usize) -> Arc<Grid> {
        build_grid(1, &[[-2.0, 2.0]], n, Region::interval(-1.0, 1.0)).unwrap()
    }

    fn cutoff(g: &Arc<Grid>) -> GridFunction {
        let spec = CutoffSpec::new(Region::interval(-0.3, 0.3), Region::interval(-0.6, 0.6));
        build_cutoff(g, &spec).unwrap()
    }

    fn bump(x: &[f64]) -> f64 {
        let t = 1.0 - x[0] * x[0] / 0.64;
        if t <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / t).exp()
        }
    }

    #[test]
    fn trivial_cases_vanish() {
        let g = setup(65);
        let p = FractionalParams::new(1, 0.5).unwrap();
        let u = GridFunction::from_fn_on_omega(&g, bump);
        let eta = cutoff(&g);
        let zero = GridFunction::zeros(&g);
        assert_eq!(remainder_is(&zero, &eta, &p).unwrap().max_abs(), 0.0);
        assert_eq!(product_rule_residual(&zero, &eta, &p).unwrap(), 0.0);
        let report = g_bound_monitor(&zero, &eta, &p, &Region::interval(-0.8, 0.8), 2.0).unwrap();
        assert_eq!(report.ratio, 0.0);
        // η constant on the whole quadrature support: no η differences
        let flat = GridFunction::from_fn(&g, |_| 1.0);
        let r = remainder_is(&u, &flat, &p).unwrap();
        let box_only = u.values().iter().zip(r.values()).all(|(ui, ri)| *ui != 0.0 || *ri == 0.0);
        assert!(box_only);
    }

    #[test]
    fn remainder_is_symmetric() {
        let g = setup(97);
        let p = FractionalParams::new(1, 0.35).unwrap();
        let u = GridFunction::from_fn_on_omega(&g, |x| (1.0 - x[0] * x[0]).sqrt());
        let eta = cutoff(&g);
        let a = remainder_is(&u, &eta, &p).unwrap();
        let b = remainder_is(&eta, &u, &p).unwrap();
        assert!((&a - &b).max_abs() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn product_rule_residual_drops_under_refinement() {
        for s in [0.3, 0.5, 0.7] {
            let p = FractionalParams::new(1, s).unwrap();
            let res: Vec<f64> = [65, 129, 257]
                .iter()
                .map(|&n| {
                    let g = setup(n);
                    let u = GridFunction::from_fn_on_omega(&g, bump);
                    product_rule_residual(&u, &cutoff(&g), &p).unwrap()
                })
                .collect();
            let order = (res[0] / res[2]).log2() / 2.0;
            assert!(order >= 1.5, "s={s}: {res:?}");
        }
    }

    #[test]
    fn localized_rhs_reduces_to_source_for_full_cutoff() {
        let g = setup(65);
        let p = FractionalParams::new(1, 0.5).unwrap();
        let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
        let u = solve_dirichlet(&f, &p, &g).unwrap();
        let eta = GridFunction::from_fn(&g, |_| 1.0);
        let out = localized_rhs(&u, &eta, &f, &p).unwrap();
        assert!(out.defect <= out.bound + 1e-12);
        for &id in g.omega_nodes() {
            assert!((out.rhs.values()[id] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn localized_rhs_norm_is_stable() {
        let p = FractionalParams::new(1, 0.5).unwrap();
        let norms: Vec<f64> = [129, 257, 513]
            .iter()
            .map(|&n| {
                let g = setup(n);
                let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
                let u = solve_dirichlet(&f, &p, &g).unwrap();
                let out = localized_rhs(&u, &cutoff(&g), &f, &p).unwrap();
                lp_norm(&out.rhs, 2.0, &Scope::Box)
            })
            .collect();
        assert!((norms[2] / norms[1] - 1.0).abs() < 0.05, "{norms:?}");
    }

    #[test]
    fn g_ratio_is_homogeneous_and_stable() {
        let p = FractionalParams::new(1, 0.5).unwrap();
        let omega2 = Region::interval(-0.8, 0.8);
        let ratios: Vec<f64> = [129, 257, 513]
            .iter()
            .map(|&n| {
                let g = setup(n);
                let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
                let u = solve_dirichlet(&f, &p, &g).unwrap();
                let eta = cutoff(&g);
                let r1 = g_bound_monitor(&u, &eta, &p, &omega2, 2.0).unwrap();
                let r2 = g_bound_monitor(&u.scale(2.0), &eta, &p, &omega2, 2.0).unwrap();
                assert!((r1.ratio - r2.ratio).abs() < 1e-12 * r1.ratio);
                r1.ratio
            })
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() < 0.25, "{ratios:?}");
        }
    }

    #[test]
    fn remainder_decays_away_from_supports() {
        let g = setup(129);
        let p = FractionalParams::new(1, 0.4).unwrap();
        let u = GridFunction::from_fn_on_omega(&g, |x| if x[0].abs() < 0.2 { 1.0 } else { 0.0 });
        let eta = cutoff(&g);
        let r = remainder_is(&u, &eta, &p).unwrap();
        // outside [-0.7, 0.7] the product u η vanishes on both sides of every pair
        for id in 0..g.len() {
            let x = g.point(id)[0];
            let d = x.abs() - 0.6;
            if d > 0.1 {
                let bound = 0.2 * d.powf(-1.8);
                assert!(r.values()[id].abs() <= bound, "x={x}: {}", r.values()[id]);
            }
        }
    }
}
