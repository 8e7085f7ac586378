//! The fractional Laplacian as a singular integral on the grid.
//!
//! Writing the principal value in symmetric form,
//!
//! ```text
//! (-Δ)^s u(x) = C/2 ∫ D(z) |z|^{-N-2s} dz,   D(z) = 2u(x) - u(x+z) - u(x-z),
//! ```
//!
//! the smooth ratio `φ(z) = D(z) / |z|²` is interpolated (piecewise linear in
//! 1D, bilinear in 2D) on the lattice `z = k h` and integrated exactly against
//! the weakly singular weight `|z|^{2-N-2s}`. Inside the central cell (1D) or
//! central square `[-h, h]²` (2D) the second-order Taylor expansion of `D`
//! gives the `-Δu · c(h, s)` correction, with `Δu` the usual second
//! difference. Beyond the lattice, where `D = 2u(x)` exactly, the kernel tail
//! is integrated analytically.
//!
//! The result is translation invariant: every grid point sees
//!
//! ```text
//! (-Δ)^s u(x_i) ≈ Σ_{k≠0} w_k (u_i - u_{i+k}) + t u_i
//! ```
//!
//! with nonnegative couplings `w_k`, which is what gives the assembled
//! Dirichlet matrix its M-matrix sign pattern.

use std::io::{Read, Write};
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Default cap on the number of Ω nodes for dense assembly.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// `C_{N,s} = s 4^s Γ((N+2s)/2) / (π^{N/2} Γ(1-s))`.
pub fn normalization_constant(dim: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::ExponentOutOfRange(s));
    }
    if dim == 0 {
        return Err(Error::Dimension(dim));
    }
    let n = dim as f64;
    let num = s * 4f64.powf(s) * gamma(0.5 * (n + 2.0 * s));
    let den = std::f64::consts::PI.powf(0.5 * n) * gamma(1.0 - s);
    Ok(num / den)
}

/// Gamma function (Lanczos approximation, ~1e-15 relative on the positive axis).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Dimension, exponent and the cached normalization constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    pub dim: usize,
    pub s: f64,
    pub c_ns: f64,
}

impl FractionalParams {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(dim));
        }
        Ok(FractionalParams {
            dim,
            s,
            c_ns: normalization_constant(dim, s)?,
        })
    }
}

pub(crate) fn gauss_rule(points: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(points).expect("positive order"));
    rule.iter().map(|(x, w)| (*x, *w)).collect()
}

fn integrate(rule: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `∫_{|y|_∞ > r} |y|^{-N-a} dy` over the exterior of a centered cube.
pub fn cube_exterior_integral(dim: usize, a: f64, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r.powf(-a) / a,
        _ => {
            let rule = gauss_rule(40);
            let angular = integrate(&rule, 0.0, std::f64::consts::FRAC_PI_4, |t| t.cos().powf(a));
            8.0 / a * angular * r.powf(-a)
        }
    }
}

/// `∫_{|y|_∞ < r} |y|^{-b} dy` over a centered square (2D, `b < 2`).
fn square_interior_integral(b: f64, r: f64) -> f64 {
    let rule = gauss_rule(40);
    let angular = integrate(&rule, 0.0, std::f64::consts::FRAC_PI_4, |t| t.cos().powf(b - 2.0));
    8.0 / (2.0 - b) * angular * r.powf(2.0 - b)
}

/// Translation-invariant quadrature weights of the discrete operator,
/// already scaled by `C_{N,s}` and the grid spacing.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    dim: usize,
    h: f64,
    max_offset: usize,
    /// far-field coupling per offset `(|k0|, |k1|)`
    far: Vec<f64>,
    /// Taylor (near-field) coupling added to nearest neighbors
    near: f64,
    /// full coupling = far + near on nearest neighbors
    coupling: Vec<f64>,
    tail: f64,
    self_weight: f64,
}

impl KernelWeights {
    /// Weights for offsets up to `max_offset` lattice steps per axis.
    pub fn new(params: &FractionalParams, h: f64, max_offset: usize) -> Result<Self> {
        if max_offset < 1 || h.is_nan() || h <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "kernel weights need h > 0 and at least one offset (h = {h}, offsets = {max_offset})"
            )));
        }
        let s = params.s;
        let scale = params.c_ns * h.powf(-2.0 * s);
        let m = max_offset;
        let (far_unit, near_unit) = match params.dim {
            1 => lattice_weights_1d(s, m),
            2 => lattice_weights_2d(s, m),
            d => return Err(Error::Dimension(d)),
        };
        let far: Vec<f64> = far_unit.iter().map(|w| w * scale).collect();
        let near = near_unit * scale;
        let mut coupling = far.clone();
        coupling[1] += near;
        if params.dim == 2 {
            coupling[m + 1] += near;
        }
        let tail = params.c_ns * cube_exterior_integral(params.dim, 2.0 * s, m as f64 * h);

        // Σ over every offset of the full lattice, in a fixed order.
        let mut total = 0.0;
        match params.dim {
            1 => {
                for w in &coupling[1..=m] {
                    total += 2.0 * w;
                }
            }
            _ => {
                for k1 in 0..=m {
                    for k0 in 0..=m {
                        if k0 == 0 && k1 == 0 {
                            continue;
                        }
                        let mult = match (k0 == 0, k1 == 0) {
                            (true, false) | (false, true) => 2.0,
                            _ => 4.0,
                        };
                        total += mult * coupling[k0 + (m + 1) * k1];
                    }
                }
            }
        }
        Ok(KernelWeights {
            dim: params.dim,
            h,
            max_offset: m,
            far,
            near,
            coupling,
            tail,
            self_weight: total + tail,
        })
    }

    /// Weights matching a grid (offsets span the whole box).
    pub fn for_grid(params: &FractionalParams, grid: &Grid) -> Result<Self> {
        if params.dim != grid.dim() {
            return Err(Error::Dimension(params.dim));
        }
        Self::new(params, grid.h(), grid.n() - 1)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    fn slot(&self, offset: [usize; 2]) -> usize {
        offset[0] + (self.max_offset + 1) * offset[1]
    }

    /// Full coupling `w_k ≥ 0` for a lattice offset given by absolute components.
    pub fn coupling(&self, offset: [usize; 2]) -> f64 {
        self.coupling[self.slot(offset)]
    }

    /// Coupling without the near-field Taylor contribution.
    pub fn far_coupling(&self, offset: [usize; 2]) -> f64 {
        self.far[self.slot(offset)]
    }

    /// Near-field Taylor coefficient `C κ h^{-2s}` attached to nearest neighbors.
    pub fn near_coefficient(&self) -> f64 {
        self.near
    }

    /// Analytic tail weight for the exterior of the lattice.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Diagonal weight: all couplings plus the tail.
    pub fn self_weight(&self) -> f64 {
        self.self_weight
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn offset_between(grid: &Grid, i: usize, j: usize) -> [usize; 2] {
    let a = grid.index(i);
    let b = grid.index(j);
    [a[0].abs_diff(b[0]), a[1].abs_diff(b[1])]
}

/// Unit-spacing 1D weights: far couplings per offset and the near-field factor.
fn lattice_weights_1d(s: f64, m: usize) -> (Vec<f64>, f64) {
    let a = 1.0 - 2.0 * s;
    let rule = gauss_rule(12);
    // (left-node, right-node) hat integrals of t^a over cell [j, j+1]
    let cell = |j: usize| -> (f64, f64) {
        let lo = j as f64;
        let hi = lo + 1.0;
        if j < 8 {
            let p1 = (hi.powf(a + 1.0) - lo.powf(a + 1.0)) / (a + 1.0);
            let p2 = (hi.powf(a + 2.0) - lo.powf(a + 2.0)) / (a + 2.0);
            (hi * p1 - p2, p2 - lo * p1)
        } else {
            let left = integrate(&rule, lo, hi, |t| (hi - t) * t.powf(a));
            let right = integrate(&rule, lo, hi, |t| (t - lo) * t.powf(a));
            (left, right)
        }
    };
    let mut omega = vec![0.0; m + 1];
    for j in 0..m {
        let (l, r) = cell(j);
        omega[j] += l;
        omega[j + 1] += r;
    }
    let mut far = vec![0.0; m + 1];
    for k in 1..=m {
        far[k] = omega[k] / (k * k) as f64;
    }
    (far, omega[0])
}

/// Unit-spacing 2D weights over the quadrant table `(|k0|, |k1|)`.
fn lattice_weights_2d(s: f64, m: usize) -> (Vec<f64>, f64) {
    let a = -2.0 * s;
    let close = gauss_rule(20);
    let distant = gauss_rule(8);
    let mi = m as i64;
    // ∫ over cell [i,i+1]×[j,j+1] of the bilinear hat at corner (ci,cj) times |t|^a
    let cell_corner = |i: i64, j: i64, ci: i64, cj: i64| -> f64 {
        let rule = if i.abs().max(j.abs()) <= 4 { &close } else { &distant };
        let (x0, y0) = (i as f64, j as f64);
        let mut acc = 0.0;
        for &(gy, wy) in rule {
            let y = y0 + 0.5 * (gy + 1.0);
            let hy = 1.0 - (y - cj as f64).abs();
            let mut row = 0.0;
            for &(gx, wx) in rule {
                let x = x0 + 0.5 * (gx + 1.0);
                let hx = 1.0 - (x - ci as f64).abs();
                row += wx * hx * (x * x + y * y).powf(0.5 * a);
            }
            acc += wy * hy * row;
        }
        0.25 * acc
    };
    let width = m + 1;
    let mut far = vec![0.0; width * width];
    let cells: Vec<(usize, f64)> = (0..width * width)
        .into_par_iter()
        .map(|slot| {
            let k0 = (slot % width) as i64;
            let k1 = (slot / width) as i64;
            if k0 == 0 && k1 == 0 {
                return (slot, 0.0);
            }
            let mut w = 0.0;
            for i in [k0 - 1, k0] {
                for j in [k1 - 1, k1] {
                    let central = (i == -1 || i == 0) && (j == -1 || j == 0);
                    let inside = i >= -mi && i < mi && j >= -mi && j < mi;
                    if !central && inside {
                        w += cell_corner(i, j, k0, k1);
                    }
                }
            }
            (slot, w / (k0 * k0 + k1 * k1) as f64)
        })
        .collect();
    for (slot, w) in cells {
        far[slot] = w;
    }
    let near = square_interior_integral(2.0 * s, 1.0) / 4.0;
    (far, near)
}

/// Matrix-free evaluation of the discrete fractional Laplacian on a grid.
#[derive(Debug, Clone)]
pub struct FractionalLaplacian {
    grid: Arc<Grid>,
    params: FractionalParams,
    weights: KernelWeights,
}

impl FractionalLaplacian {
    pub fn new(grid: &Arc<Grid>, params: FractionalParams) -> Result<Self> {
        let weights = KernelWeights::for_grid(&params, grid)?;
        Ok(FractionalLaplacian {
            grid: Arc::clone(grid),
            params,
            weights,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &FractionalParams {
        &self.params
    }

    pub fn weights(&self) -> &KernelWeights {
        &self.weights
    }

    /// Coupling between two box nodes (`i ≠ j`).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.weights.coupling(offset_between(&self.grid, i, j))
    }

    pub fn far_coupling(&self, i: usize, j: usize) -> f64 {
        self.weights.far_coupling(offset_between(&self.grid, i, j))
    }

    /// `(-Δ)^s u` at every node of the box; `u` is taken as zero beyond the box.
    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        let values = u.values();
        let support: Vec<(usize, f64)> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        let diag = self.weights.self_weight();
        let out: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for &(j, uj) in &support {
                    if j != i {
                        acc += self.coupling(i, j) * uj;
                    }
                }
                diag * values[i] - acc
            })
            .collect();
        GridFunction::from_values(&self.grid, out).expect("same grid")
    }

    /// Operator restricted to Ω acting on values given on Ω nodes.
    pub fn apply_omega(&self, omega_values: &[f64]) -> Result<Vec<f64>> {
        let u = crate::grid::extend_by_zero(omega_values, &self.grid)?;
        Ok(self.apply(&u).restrict_to_omega())
    }

    /// Dense Dirichlet matrix on the Ω nodes.
    pub fn assemble(&self, cap: usize) -> Result<OperatorMatrix> {
        let nodes = self.grid.omega_nodes();
        let m = nodes.len();
        if m > cap {
            return Err(Error::MemoryBudget { nodes: m, cap });
        }
        let diag = self.weights.self_weight();
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .enumerate()
            .map(|(a, &i)| {
                nodes
                    .iter()
                    .enumerate()
                    .map(|(b, &j)| if a == b { diag } else { -self.coupling(i, j) })
                    .collect()
            })
            .collect();
        let matrix = DMatrix::from_fn(m, m, |r, c| rows[r][c]);
        Ok(OperatorMatrix {
            matrix,
            h: self.grid.h(),
            n: self.grid.n(),
            params: self.params,
        })
    }
}

/// Applies the discrete operator to a grid function.
pub fn apply_fractional_laplacian(u: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    Ok(FractionalLaplacian::new(u.grid(), *params)?.apply(u))
}

/// Assembles the dense Dirichlet matrix with the default memory cap.
pub fn assemble_operator_matrix(grid: &Arc<Grid>, params: &FractionalParams) -> Result<OperatorMatrix> {
    FractionalLaplacian::new(grid, *params)?.assemble(DEFAULT_DENSE_CAP)
}

const DUMP_MAGIC: &[u8; 8] = b"FRACLAP1";

/// Dense operator on the Ω nodes.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub h: f64,
    /// nodes per axis of the originating grid
    pub n: usize,
    pub params: FractionalParams,
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.size();
        assert_eq!(x.len(), m, "vector length must match the operator");
        (0..m)
            .map(|r| (0..m).map(|c| self.matrix[(r, c)] * x[c]).sum())
            .collect()
    }

    /// Writes the header (N, s, n, h, rows) and row-major entries, all little-endian.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.params.dim as u64).to_le_bytes())?;
        out.write_all(&self.params.s.to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&self.h.to_le_bytes())?;
        out.write_all(&(self.size() as u64).to_le_bytes())?;
        for r in 0..self.size() {
            for c in 0..self.size() {
                out.write_all(&self.matrix[(r, c)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::InvalidArgument("not an operator dump".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |input: &mut dyn Read| -> Result<[u8; 8]> {
            input.read_exact(&mut word)?;
            Ok(word)
        };
        let dim = u64::from_le_bytes(next(&mut input)?) as usize;
        let s = f64::from_le_bytes(next(&mut input)?);
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let h = f64::from_le_bytes(next(&mut input)?);
        let rows = u64::from_le_bytes(next(&mut input)?) as usize;
        let params = FractionalParams::new(dim, s)?;
        let mut data = vec![0.0; rows * rows];
        for v in data.iter_mut() {
            *v = f64::from_le_bytes(next(&mut input)?);
        }
        Ok(OperatorMatrix {
            matrix: DMatrix::from_row_slice(rows, rows, &data),
            h,
            n,
            params,
        })
    }
}
