//! Riemann-sum estimators for L^p, Gagliardo, Besov and potential-space norms.
//!
//! All double sums use lattice-point (cell-midpoint) evaluation of the kernel
//! and skip the diagonal. Outer loops run in parallel; every partial sum is
//! accumulated in a fixed order, so results do not depend on the thread count.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Region};
use crate::operator::{cube_exterior_integral, gauss_rule, FractionalLaplacian, FractionalParams};

/// Where a norm is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Scope {
    /// every node of the computational box
    Box,
    /// the box plus the analytic exterior contribution of the zero extension
    Space,
    /// nodes in Ω
    Omega,
    /// nodes inside a region
    Region(Region),
}

impl Scope {
    fn nodes(&self, grid: &Grid) -> Vec<usize> {
        match self {
            Scope::Box | Scope::Space => (0..grid.len()).collect(),
            Scope::Omega => grid.omega_nodes().to_vec(),
            Scope::Region(r) => grid.nodes_in(r),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Box => write!(f, "box"),
            Scope::Space => write!(f, "space"),
            Scope::Omega => write!(f, "omega"),
            Scope::Region(Region::Ball { center, radius }) => {
                write!(f, "ball(")?;
                for (i, c) in center.iter().enumerate() {
                    write!(f, "{}{c}", if i > 0 { " " } else { "" })?;
                }
                write!(f, ";{radius})")
            }
            Scope::Region(Region::Box { bounds }) => {
                write!(f, "box(")?;
                for (i, b) in bounds.iter().enumerate() {
                    write!(f, "{}{} {}", if i > 0 { ";" } else { "" }, b[0], b[1])?;
                }
                write!(f, ")")
            }
        }
    }
}

#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x.abs()
    } else {
        x.abs().powf(p)
    }
}

fn check_index(name: &str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("{name} = {p} must be at least 1")));
    }
    Ok(())
}

/// Riemann-sum L^p norm over the scope (maximum for `p = ∞`).
pub fn lp_norm(u: &GridFunction, p: f64, scope: &Scope) -> f64 {
    let grid = u.grid();
    let values = u.values();
    let nodes = scope.nodes(grid);
    if p.is_infinite() {
        return nodes.iter().map(|&i| values[i].abs()).fold(0.0, f64::max);
    }
    let sum: f64 = nodes.iter().map(|&i| pow_abs(values[i], p)).sum();
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// Lattice kernel `(|k| h)^{-N-a}` indexed by absolute offsets.
struct OffsetKernel {
    width: usize,
    table: Vec<f64>,
}

impl OffsetKernel {
    fn new(grid: &Grid, a: f64) -> Self {
        let width = grid.n();
        let dim = grid.dim();
        let rows = if dim == 2 { width } else { 1 };
        let h = grid.h();
        let mut table = vec![0.0; width * rows];
        for k1 in 0..rows {
            for k0 in 0..width {
                let r2 = (k0 * k0 + k1 * k1) as f64;
                if r2 > 0.0 {
                    table[k0 + width * k1] = (r2.sqrt() * h).powf(-(dim as f64) - a);
                }
            }
        }
        OffsetKernel { width, table }
    }

    #[inline]
    fn get(&self, a: [usize; 2], b: [usize; 2]) -> f64 {
        self.table[a[0].abs_diff(b[0]) + self.width * a[1].abs_diff(b[1])]
    }
}

/// `Σ_{i≠j} |u_i − u_j|^p |x_i − x_j|^{-N-pσ} h^{2N}` over the scope's node pairs.
fn gagliardo_sum(grid: &Grid, values: &[f64], nodes: &[usize], sigma: f64, p: f64) -> f64 {
    let kernel = OffsetKernel::new(grid, p * sigma);
    let idx: Vec<[usize; 2]> = nodes.iter().map(|&i| grid.index(i)).collect();
    let vals: Vec<f64> = nodes.iter().map(|&i| values[i]).collect();
    let partial: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let ua = vals[a];
            let mut acc = 0.0;
            for b in (a + 1)..nodes.len() {
                let d = ua - vals[b];
                if d != 0.0 {
                    acc += pow_abs(d, p) * kernel.get(idx[a], idx[b]);
                }
            }
            acc
        })
        .collect();
    let vol = grid.cell_volume();
    2.0 * partial.iter().sum::<f64>() * vol * vol
}

/// `∫_{y ∉ box} |x − y|^{-N-a} dy` for a node `x`, with the box taken to its cell faces.
fn exterior_kernel_mass(grid: &Grid, id: usize, a: f64) -> f64 {
    let x = grid.point(id);
    let half = 0.5 * grid.h();
    let bounds = grid.bounds();
    match grid.dim() {
        1 => {
            let left = x[0] - (bounds[0][0] - half);
            let right = (bounds[0][1] + half) - x[0];
            (left.powf(-a) + right.powf(-a)) / a
        }
        _ => {
            // polar integral ∫ R(θ)^{-a}/a dθ, split at the corner directions
            let lo = [bounds[0][0] - half - x[0], bounds[1][0] - half - x[1]];
            let hi = [bounds[0][1] + half - x[0], bounds[1][1] + half - x[1]];
            let corners = [(hi[0], hi[1]), (lo[0], hi[1]), (lo[0], lo[1]), (hi[0], lo[1])];
            let mut cuts: Vec<f64> = corners
                .iter()
                .map(|&(cx, cy)| cy.atan2(cx).rem_euclid(std::f64::consts::TAU))
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.push(cuts[0] + std::f64::consts::TAU);
            let rule = gauss_rule(24);
            let dist = |t: f64| -> f64 {
                let (c, s) = (t.cos(), t.sin());
                let tx = if c > 0.0 { hi[0] / c } else if c < 0.0 { lo[0] / c } else { f64::INFINITY };
                let ty = if s > 0.0 { hi[1] / s } else if s < 0.0 { lo[1] / s } else { f64::INFINITY };
                tx.min(ty)
            };
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t1 + t0);
                total += half * rule.iter().map(|&(g, wt)| wt * dist(mid + half * g).powf(-a)).sum::<f64>();
            }
            total / a
        }
    }
}

fn gagliardo_power(u: &GridFunction, sigma: f64, p: f64, scope: &Scope) -> f64 {
    let grid = u.grid();
    let nodes = scope.nodes(grid);
    let mut sum = gagliardo_sum(grid, u.values(), &nodes, sigma, p);
    if *scope == Scope::Space {
        let a = p * sigma;
        let exterior: f64 = (0..grid.len())
            .filter(|&i| u.values()[i] != 0.0)
            .map(|i| pow_abs(u.values()[i], p) * exterior_kernel_mass(grid, i, a))
            .sum();
        // ordered pairs (x in box, y outside) and (y in box, x outside)
        sum += 2.0 * exterior * grid.cell_volume();
    }
    sum
}

/// Gagliardo seminorm `[u]_{W^{σ,p}}` over the scope, `σ ∈ (0,1)`.
pub fn gagliardo_seminorm(u: &GridFunction, sigma: f64, p: f64, scope: &Scope) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidArgument(format!("Gagliardo order {sigma} outside (0,1)")));
    }
    check_index("p", p)?;
    if p.is_infinite() {
        return Err(Error::InvalidArgument("Gagliardo seminorm needs finite p".into()));
    }
    Ok(gagliardo_power(u, sigma, p, scope).powf(1.0 / p))
}

/// Central-difference partial derivatives (zero beyond the box).
pub fn gradient(u: &GridFunction) -> Vec<GridFunction> {
    let grid = u.grid();
    let values = u.values();
    let inv = 0.5 / grid.h();
    (0..grid.dim())
        .map(|axis| {
            let d: Vec<f64> = (0..grid.len())
                .map(|id| {
                    let fwd = grid.neighbor(id, axis, 1).map_or(0.0, |j| values[j]);
                    let bwd = grid.neighbor(id, axis, -1).map_or(0.0, |j| values[j]);
                    (fwd - bwd) * inv
                })
                .collect();
            GridFunction::from_values(grid, d).expect("same grid")
        })
        .collect()
}

/// Seminorm of order `σ ∈ (0, 2)`.
///
/// Below one this is the Gagliardo seminorm; at one it is `‖∇u‖_p`; above
/// one it is the Gagliardo seminorm of order `σ − 1` of the first
/// derivatives, combined in ℓ^p.
pub fn sobolev_seminorm(u: &GridFunction, sigma: f64, p: f64, scope: &Scope) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::InvalidArgument(format!("Sobolev order {sigma} outside (0,2)")));
    }
    if sigma < 1.0 {
        return gagliardo_seminorm(u, sigma, p, scope);
    }
    check_index("p", p)?;
    let grads = gradient(u);
    let mut total = 0.0;
    for g in &grads {
        total += if (sigma - 1.0).abs() < 1e-12 {
            pow_abs(lp_norm(g, p, scope), p)
        } else {
            gagliardo_power(g, sigma - 1.0, p, scope)
        };
    }
    Ok(total.powf(1.0 / p))
}

/// Besov seminorm `[u]_{B^σ_{p,q}}` of a Dirichlet-extended function.
///
/// First differences for `σ ∈ (0,1)`, second differences for `σ ∈ (1,2)`.
/// The inner L^p norm runs over every lattice point where the difference can
/// be nonzero; shifts beyond the box use the exact value for disjoint
/// supports and an analytic tail.
pub fn besov_seminorm(u: &GridFunction, sigma: f64, p: f64, q: f64) -> Result<f64> {
    let second = if sigma > 0.0 && sigma < 1.0 {
        false
    } else if sigma > 1.0 && sigma < 2.0 {
        true
    } else {
        return Err(Error::InvalidArgument(format!("Besov order {sigma} outside (0,1)∪(1,2)")));
    };
    check_index("p", p)?;
    check_index("q", q)?;
    if p.is_infinite() {
        return Err(Error::InvalidArgument("Besov estimator needs finite p".into()));
    }
    let grid = u.grid();
    let dim = grid.dim();
    let n = grid.n() as i64;
    let m = n - 1;
    let h = grid.h();
    let vol = grid.cell_volume();
    let values = u.values();
    let at = |i0: i64, i1: i64| -> f64 {
        if i0 < 0 || i0 >= n || i1 < 0 || i1 >= n {
            0.0
        } else {
            values[(i0 + n * i1) as usize]
        }
    };

    // half lattice of shifts: k1 > 0, or k1 == 0 and k0 > 0
    let shifts: Vec<[i64; 2]> = if dim == 1 {
        (1..=m).map(|k| [k, 0]).collect()
    } else {
        let mut v = Vec::new();
        for k1 in 0..=m {
            for k0 in -m..=m {
                if k1 > 0 || k0 > 0 {
                    v.push([k0, k1]);
                }
            }
        }
        v
    };
    let diff_norm_p = |k: [i64; 2]| -> f64 {
        let reach = if second { 1 } else { 0 };
        let range = |axis: usize| -> (i64, i64) {
            let ka = k[axis];
            if second {
                (-ka.abs(), n - 1 + ka.abs())
            } else {
                ((-ka).min(0), (n - 1).max(n - 1 - ka))
            }
        };
        let (a0, b0) = range(0);
        let (a1, b1) = if dim == 2 { range(1) } else { (0, 0) };
        let mut acc = 0.0;
        for i1 in a1..=b1 {
            for i0 in a0..=b0 {
                let d = if reach == 1 {
                    at(i0 + k[0], i1 + k[1]) - 2.0 * at(i0, i1) + at(i0 - k[0], i1 - k[1])
                } else {
                    at(i0 + k[0], i1 + k[1]) - at(i0, i1)
                };
                if d != 0.0 {
                    acc += pow_abs(d, p);
                }
            }
        }
        acc * vol
    };
    let total_p: f64 = values.iter().map(|&v| pow_abs(v, p)).sum::<f64>() * vol;
    let far_p = if second { (2.0 + 2f64.powf(p)) * total_p } else { 2.0 * total_p };

    let terms: Vec<(f64, f64)> = shifts
        .par_iter()
        .map(|&k| {
            let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt() * h;
            let norm = diff_norm_p(k).powf(1.0 / p);
            (norm, r)
        })
        .collect();
    if q.is_infinite() {
        let sup = terms.iter().map(|&(nm, r)| nm / r.powf(sigma)).fold(0.0, f64::max);
        return Ok(sup);
    }
    let mut sum = 0.0;
    for &(nm, r) in &terms {
        sum += 2.0 * vol * nm.powf(q) * r.powf(-(dim as f64) - q * sigma);
    }
    let edge = (m as f64 + 0.5) * h;
    sum += far_p.powf(q / p) * cube_exterior_integral(dim, q * sigma, edge);
    Ok(sum.powf(1.0 / q))
}

/// `‖u‖_p + ‖(-Δ)^s u‖_p` over the box.
pub fn potential_norm(u: &GridFunction, params: &FractionalParams, p: f64) -> Result<f64> {
    check_index("p", p)?;
    let lu = FractionalLaplacian::new(u.grid(), *params)?.apply(u);
    Ok(lp_norm(u, p, &Scope::Box) + lp_norm(&lu, p, &Scope::Box))
}

/// One evaluated (semi)norm, ready for CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub region: String,
    pub sigma: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub h: f64,
    pub seminorm: f64,
    pub norm: f64,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "region,sigma,p,q,h,seminorm,norm";

    /// Sobolev-type report: seminorm of order σ plus the L^p part.
    pub fn sobolev(u: &GridFunction, sigma: f64, p: f64, scope: &Scope) -> Result<Self> {
        let seminorm = sobolev_seminorm(u, sigma, p, scope)?;
        let base = lp_norm(u, p, scope);
        Ok(NormReport {
            region: scope.to_string(),
            sigma,
            p,
            q: None,
            h: u.grid().h(),
            seminorm,
            norm: base + seminorm,
        })
    }

    /// Besov report over the whole space.
    pub fn besov(u: &GridFunction, sigma: f64, p: f64, q: f64) -> Result<Self> {
        let seminorm = besov_seminorm(u, sigma, p, q)?;
        let base = lp_norm(u, p, &Scope::Box);
        Ok(NormReport {
            region: Scope::Space.to_string(),
            sigma,
            p,
            q: Some(q),
            h: u.grid().h(),
            seminorm,
            norm: base + seminorm,
        })
    }

    pub fn csv_row(&self) -> String {
        let q = self.q.map_or(String::new(), fmt_float);
        format!(
            "{},{},{},{},{},{},{}",
            self.region,
            fmt_float(self.sigma),
            fmt_float(self.p),
            q,
            fmt_float(self.h),
            fmt_float(self.seminorm),
            fmt_float(self.norm)
        )
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

/// Outcome of the refinement test for one exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Convergent,
    Divergent,
    /// too few levels seen
    Pending,
}

/// Divergence test on a refinement sequence of p-th power sums `S_l`
/// (grid spacing halving from one level to the next).
///
/// Lattice sums of smooth integrands carry a leading error `c h^γ` from the
/// omitted diagonal cells, with `γ = p(1 − {σ})`; when `γ` is known it is
/// removed first by Richardson extrapolation. The increments
/// `d_l = S_{l+1} − S_l` of a convergent sum then shrink geometrically,
/// while those of a divergent sum stay level or grow. Increments below
/// `min_increment` times the last sum count as zero. The rule fits the log₂
/// slope of the trailing run of significant positive increments and
/// declares divergence when it reaches `min_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    pub min_rate: f64,
    pub min_increment: f64,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        DivergenceRule { min_rate: -0.1, min_increment: 1e-3 }
    }
}

/// Leading lattice-error exponent `p(1 − {σ})` of the first- or
/// second-order difference estimators; `None` at integer orders.
pub fn lattice_error_exponent(sigma: f64, p: f64) -> Option<f64> {
    let frac = sigma - sigma.floor();
    if frac < 1e-12 {
        None
    } else {
        Some(p * (1.0 - frac))
    }
}

/// Removes a `c h^γ` term from a sequence at spacings `h, h/2, h/4, …`.
pub fn richardson(sums: &[f64], gamma: f64) -> Vec<f64> {
    let r = 2f64.powf(gamma);
    sums.windows(2).map(|w| (r * w[1] - w[0]) / (r - 1.0)).collect()
}

impl DivergenceRule {
    /// Fitted log₂ growth rate of the increments, `None` when the last
    /// increment is insignificant or fewer than two significant positive
    /// increments trail.
    pub fn increment_rate(&self, sums: &[f64]) -> Option<f64> {
        let incs: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
        let last = sums.last().map_or(0.0, |v| v.abs());
        let floor = (self.min_increment * last).max(1e-300);
        let run = incs.iter().rev().take_while(|&&d| d > floor).count();
        if run < 2 {
            return None;
        }
        let tail = &incs[incs.len() - run..];
        let logs: Vec<f64> = tail.iter().map(|d| d.log2()).collect();
        Some(slope(&logs))
    }

    /// Rate after optional extrapolation with exponent `gamma`.
    pub fn rate(&self, sums: &[f64], gamma: Option<f64>) -> Option<f64> {
        match gamma {
            Some(g) => self.increment_rate(&richardson(sums, g)),
            None => self.increment_rate(sums),
        }
    }

    /// Verdict for a sequence; extrapolation costs one level, so `gamma`
    /// needs four levels and plain sequences three.
    pub fn classify(&self, sums: &[f64], gamma: Option<f64>) -> Verdict {
        let needed = if gamma.is_some() { 4 } else { 3 };
        if sums.len() < needed {
            return Verdict::Pending;
        }
        match self.rate(sums, gamma) {
            Some(rate) if rate >= self.min_rate => Verdict::Divergent,
            _ => Verdict::Convergent,
        }
    }
}

/// Least-squares slope of `y` against `0, 1, 2, …`.
pub fn slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        num += dx * (v - my);
        den += dx * dx;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Grid> {
        build_grid(1, &[[-2.0, 2.0]], n, Region::interval(-1.0, 1.0)).unwrap()
    }

    fn bump(x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / 0.81;
        if r2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r2)).exp() * 3.0
        }
    }

    #[test]
    fn zero_function_has_zero_norms() {
        let g = line(33);
        let z = GridFunction::zeros(&g);
        assert_eq!(lp_norm(&z, 2.0, &Scope::Box), 0.0);
        assert_eq!(gagliardo_seminorm(&z, 0.5, 2.0, &Scope::Box).unwrap(), 0.0);
        assert_eq!(besov_seminorm(&z, 0.5, 2.0, 2.0).unwrap(), 0.0);
        assert_eq!(besov_seminorm(&z, 1.5, 2.0, f64::INFINITY).unwrap(), 0.0);
        let p = FractionalParams::new(1, 0.5).unwrap();
        assert_eq!(potential_norm(&z, &p, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_of_indicator_tends_to_sqrt_two() {
        let g = line(1025);
        let one = GridFunction::from_fn_on_omega(&g, |_| 1.0);
        let v = lp_norm(&one, 2.0, &Scope::Omega);
        assert!((v - 2f64.sqrt()).abs() < 5e-3, "{v}");
    }

    #[test]
    fn sup_norm_picks_peak() {
        let g = line(33);
        let mut values = vec![0.0; g.len()];
        values[16] = -3.0;
        values[10] = 1.0;
        let u = GridFunction::from_values(&g, values).unwrap();
        assert_eq!(lp_norm(&u, f64::INFINITY, &Scope::Box), 3.0);
    }

    #[test]
    fn constant_on_region_has_zero_seminorm() {
        let g = line(65);
        let u = GridFunction::from_fn_on_omega(&g, |_| 2.0);
        assert_eq!(gagliardo_seminorm(&u, 0.4, 2.0, &Scope::Omega).unwrap(), 0.0);
        assert!(gagliardo_seminorm(&u, 0.4, 2.0, &Scope::Box).unwrap() > 0.0);
    }

    #[test]
    fn besov_with_q_equal_p_matches_gagliardo_on_whole_space() {
        for (dim, n) in [(1usize, 257usize), (2, 41)] {
            let bounds = vec![[-2.0, 2.0]; dim];
            let g = build_grid(dim, &bounds, n, Region::ball(&vec![0.0; dim], 1.0)).unwrap();
            let u = GridFunction::from_fn_on_omega(&g, bump);
            for sigma in [0.3, 0.7] {
                let b = besov_seminorm(&u, sigma, 2.0, 2.0).unwrap();
                let w = gagliardo_seminorm(&u, sigma, 2.0, &Scope::Space).unwrap();
                assert!((b / w - 1.0).abs() < 0.05, "N={dim} σ={sigma}: {b} vs {w}");
            }
        }
    }

    #[test]
    fn exterior_mass_matches_one_dimensional_formula_in_symmetric_case() {
        let g = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], 17, Region::ball(&[0.0, 0.0], 1.0))
            .unwrap();
        let center = g.len() / 2;
        assert_eq!(g.point(center), [0.0, 0.0]);
        let a = 0.8;
        let r = 2.0 + 0.5 * g.h();
        let expected = cube_exterior_integral(2, a, r);
        assert!((exterior_kernel_mass(&g, center, a) / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn jump_seminorm_diverges_only_above_threshold() {
        // indicator of (0,1): finite in W^{σ,2} iff σ < 1/2
        let values = |n: usize, sigma: f64| {
            let g = line(n);
            let u = GridFunction::from_fn_on_omega(&g, |x| if x[0] > 0.0 { 1.0 } else { 0.0 });
            gagliardo_seminorm(&u, sigma, 2.0, &Scope::Omega).unwrap()
        };
        let rough = values(513, 0.7) / values(257, 0.7);
        assert!(rough >= 1.1, "{rough}");
        let v: Vec<f64> = [257, 513, 1025].iter().map(|&n| values(n, 0.3)).collect();
        assert!(v[2] / v[1] < 1.02 && v[2] / v[1] < v[1] / v[0], "{v:?}");
    }

    #[test]
    fn seminorms_are_homogeneous() {
        let g = line(129);
        let u = GridFunction::from_fn_on_omega(&g, bump);
        let a = -2.5;
        let ua = u.scale(a);
        for sigma in [0.3, 1.0, 1.4] {
            let s1 = sobolev_seminorm(&u, sigma, 2.0, &Scope::Box).unwrap();
            let s2 = sobolev_seminorm(&ua, sigma, 2.0, &Scope::Box).unwrap();
            assert!((s2 - a.abs() * s1).abs() < 1e-12 * s2);
        }
        let b1 = besov_seminorm(&u, 1.5, 2.0, 3.0).unwrap();
        let b2 = besov_seminorm(&ua, 1.5, 2.0, 3.0).unwrap();
        assert!((b2 - a.abs() * b1).abs() < 1e-12 * b2);
    }

    #[test]
    fn smooth_bump_is_stable_under_refinement() {
        for (sigma, p, q) in [(0.4, 2.0, 2.0), (0.6, 3.0, 1.5), (1.5, 2.0, 2.0), (1.3, 1.5, f64::INFINITY)] {
            let vals: Vec<f64> = [129, 257]
                .iter()
                .map(|&n| {
                    let g = line(n);
                    besov_seminorm(&GridFunction::from_fn_on_omega(&g, bump), sigma, p, q).unwrap()
                })
                .collect();
            let ratio = vals[1] / vals[0];
            assert!((0.8..=1.2).contains(&ratio), "σ={sigma} p={p} q={q}: {vals:?}");
        }
    }

    #[test]
    fn csv_row_has_seven_fields() {
        let g = line(33);
        let u = GridFunction::from_fn_on_omega(&g, bump);
        let r = NormReport::sobolev(&u, 0.5, 2.0, &Scope::Omega).unwrap();
        assert_eq!(r.csv_row().split(',').count(), 7);
        assert!(r.norm >= r.seminorm);
        assert_eq!(NormReport::CSV_HEADER.split(',').count(), 7);
    }

    #[test]
    fn richardson_removes_the_model_term_exactly() {
        let sums: Vec<f64> = (0..4).map(|l| 3.0 + 2.0 * 0.5f64.powf(0.7 * l as f64)).collect();
        for v in richardson(&sums, 0.7) {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_rule_on_model_sequences() {
        let rule = DivergenceRule::default();
        let seq = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { (0..5).map(|l| f(l as f64)).collect() };
        // convergent at rate h
        assert_eq!(rule.classify(&seq(&|l| 1.0 - 0.5f64.powf(l)), None), Verdict::Convergent);
        // power growth and logarithmic growth
        assert_eq!(rule.classify(&seq(&|l| 2f64.powf(0.3 * l)), None), Verdict::Divergent);
        assert_eq!(rule.classify(&seq(&|l| 5.0 + l), None), Verdict::Divergent);
        // slow lattice artifact on top of a convergent sum is removed
        let artifact = seq(&|l| 4.0 - 2.0 * 0.5f64.powf(0.05 * l));
        assert_eq!(rule.classify(&artifact, None), Verdict::Divergent);
        assert_eq!(rule.classify(&artifact, Some(0.05)), Verdict::Convergent);
        // too short
        assert_eq!(rule.classify(&[1.0, 2.0], None), Verdict::Pending);
        assert_eq!(rule.classify(&[1.0, 2.0, 3.0], Some(1.0)), Verdict::Pending);
        // scale free
        let grow = seq(&|l| 2f64.powf(0.3 * l));
        let scaled: Vec<f64> = grow.iter().map(|v| 1e-6 * v).collect();
        assert_eq!(rule.classify(&scaled, None), Verdict::Divergent);
    }

    #[test]
    fn lattice_error_exponent_uses_fractional_part() {
        assert!((lattice_error_exponent(0.3, 2.0).unwrap() - 1.4).abs() < 1e-12);
        assert!((lattice_error_exponent(1.25, 2.0).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(lattice_error_exponent(1.0, 2.0), None);
    }
}
