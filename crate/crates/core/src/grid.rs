//! Domains, uniform tensor grids and grid functions.
//!
//! A [`Grid`] covers an axis-aligned box that strictly contains the open
//! domain Ω. Nodes are numbered with the first axis running fastest, so in
//! 2D node `i0 + n * i1` sits at `(lo0 + i0 h, lo1 + i1 h)`.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of nodes per axis accepted by [`Grid::new`].
pub const MIN_NODES: usize = 8;

/// Collar required between Ω and the box, as a fraction of Ω's diameter.
pub const COLLAR_FRACTION: f64 = 0.25;

/// Open ball or open axis-aligned box in one or two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { bounds: Vec<[f64; 2]> },
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Region::Box {
            bounds: vec![[a, b]],
        }
    }

    pub fn rect(bounds: &[[f64; 2]]) -> Self {
        Region::Box {
            bounds: bounds.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { bounds } => bounds.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(dim));
        }
        match self {
            Region::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidRegion(format!("ball with radius {radius}")));
                }
            }
            Region::Box { bounds } => {
                for b in bounds {
                    if !(b[0].is_finite() && b[1].is_finite() && b[0] < b[1]) {
                        return Err(Error::InvalidRegion(format!("box side {b:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact signed Euclidean distance: negative inside, positive outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let r2: f64 = center.iter().zip(x).map(|(c, x)| (x - c) * (x - c)).sum();
                r2.sqrt() - radius
            }
            Region::Box { bounds } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for (b, &xi) in bounds.iter().zip(x) {
                    let c = 0.5 * (b[0] + b[1]);
                    let q = (xi - c).abs() - 0.5 * (b[1] - b[0]);
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
        }
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) < 0.0
    }

    /// Distance to the boundary for interior points, zero elsewhere.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        (-self.signed_distance(x)).max(0.0)
    }

    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        match self {
            Region::Ball { center, radius } => {
                center.iter().map(|c| [c - radius, c + radius]).collect()
            }
            Region::Box { bounds } => bounds.clone(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Box { bounds } => bounds
                .iter()
                .map(|b| (b[1] - b[0]).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Grows the region outward by `margin` (boxes keep square corners).
    pub fn dilate(&self, margin: f64) -> Region {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center.clone(),
                radius: radius + margin,
            },
            Region::Box { bounds } => Region::Box {
                bounds: bounds.iter().map(|b| [b[0] - margin, b[1] + margin]).collect(),
            },
        }
    }

    /// Gap between `self` and the complement of `outer`.
    ///
    /// Positive exactly when the closure of `self` lies inside `outer`; the
    /// value is the Euclidean distance from `self` to `outer`'s boundary.
    pub fn separation_within(&self, outer: &Region) -> f64 {
        match (self, outer) {
            (Region::Ball { center: c, radius: r }, Region::Ball { center: co, radius: ro }) => {
                let d: f64 = c.iter().zip(co).map(|(a, b)| (a - b).powi(2)).sum();
                ro - d.sqrt() - r
            }
            (Region::Ball { center, radius }, Region::Box { bounds }) => center
                .iter()
                .zip(bounds)
                .map(|(c, b)| (c - radius - b[0]).min(b[1] - c - radius))
                .fold(f64::INFINITY, f64::min),
            (Region::Box { bounds: inner }, Region::Box { bounds: outer }) => inner
                .iter()
                .zip(outer)
                .map(|(i, o)| (i[0] - o[0]).min(o[1] - i[1]))
                .fold(f64::INFINITY, f64::min),
            (Region::Box { bounds }, Region::Ball { center, radius }) => {
                let far: f64 = bounds
                    .iter()
                    .zip(center)
                    .map(|(b, c)| (b[0] - c).abs().max((b[1] - c).abs()).powi(2))
                    .sum();
                radius - far.sqrt()
            }
        }
    }
}

/// Uniform tensor grid over a box, with Ω membership and boundary distances.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    lower: Vec<f64>,
    n: usize,
    h: f64,
    omega: Region,
    mask: Vec<bool>,
    rho: Vec<f64>,
    omega_nodes: Vec<usize>,
    omega_slot: Vec<Option<usize>>,
}

impl Grid {
    /// Builds the grid; `bounds` must describe a box with equal side lengths.
    pub fn new(dim: usize, bounds: &[[f64; 2]], n: usize, omega: Region) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(dim));
        }
        if bounds.len() != dim || omega.dim() != dim {
            return Err(Error::InvalidRegion(format!(
                "box has {} axes and Ω has {}, grid dimension is {dim}",
                bounds.len(),
                omega.dim()
            )));
        }
        if n < MIN_NODES {
            return Err(Error::TooFewNodes { min: MIN_NODES, got: n });
        }
        omega.validate()?;
        let width = bounds[0][1] - bounds[0][0];
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidRegion(format!("box side {:?}", bounds[0])));
        }
        for b in &bounds[1..] {
            if ((b[1] - b[0]) - width).abs() > 1e-12 * width {
                return Err(Error::InvalidRegion(
                    "box sides must have equal length".to_string(),
                ));
            }
        }
        let collar = COLLAR_FRACTION * omega.diameter();
        for (axis, (b, o)) in bounds.iter().zip(omega.bounding_box()).enumerate() {
            if o[0] - b[0] < collar || b[1] - o[1] < collar {
                return Err(Error::CollarTooThin(format!(
                    "Ω spans {o:?} on axis {axis}, box {b:?} needs a collar of {collar}"
                )));
            }
        }

        let h = width / (n - 1) as f64;
        let lower: Vec<f64> = bounds.iter().map(|b| b[0]).collect();
        let total = n.pow(dim as u32);
        let mut grid = Grid {
            dim,
            lower,
            n,
            h,
            omega,
            mask: Vec::with_capacity(total),
            rho: Vec::with_capacity(total),
            omega_nodes: Vec::new(),
            omega_slot: vec![None; total],
        };
        for id in 0..total {
            let x = grid.point(id);
            let x = &x[..dim];
            let inside = grid.omega.contains(x);
            grid.mask.push(inside);
            grid.rho.push(grid.omega.boundary_distance(x));
            if inside {
                grid.omega_slot[id] = Some(grid.omega_nodes.len());
                grid.omega_nodes.push(id);
            }
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of nodes in the box.
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn omega(&self) -> &Region {
        &self.omega
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        let w = self.h * (self.n - 1) as f64;
        self.lower.iter().map(|&l| [l, l + w]).collect()
    }

    /// Volume element `h^N` of the Riemann sums.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Boundary distance ρ per node (zero outside Ω).
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Node ids inside Ω, ascending.
    pub fn omega_nodes(&self) -> &[usize] {
        &self.omega_nodes
    }

    pub fn omega_len(&self) -> usize {
        self.omega_nodes.len()
    }

    /// Position of node `id` in the Ω ordering, if it lies in Ω.
    pub fn omega_slot(&self, id: usize) -> Option<usize> {
        self.omega_slot[id]
    }

    /// Integer multi-index of a node (second entry is zero in 1D).
    pub fn index(&self, id: usize) -> [usize; 2] {
        if self.dim == 1 {
            [id, 0]
        } else {
            [id % self.n, id / self.n]
        }
    }

    pub fn node(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.n * idx[1]
    }

    /// Coordinates of node `id`; the unused entry is zero in 1D.
    pub fn point(&self, id: usize) -> [f64; 2] {
        let idx = self.index(id);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = self.lower[axis] + idx[axis] as f64 * self.h;
        }
        x
    }

    /// Neighbor of `id` shifted by `step` along `axis`, if it stays in the box.
    pub fn neighbor(&self, id: usize, axis: usize, step: isize) -> Option<usize> {
        let mut idx = self.index(id);
        let moved = idx[axis] as isize + step;
        if moved < 0 || moved >= self.n as isize {
            return None;
        }
        idx[axis] = moved as usize;
        Some(self.node(idx))
    }

    /// Nodes whose coordinates lie in `region`.
    pub fn nodes_in(&self, region: &Region) -> Vec<usize> {
        (0..self.len())
            .filter(|&id| region.contains(&self.point(id)[..self.dim]))
            .collect()
    }
}

/// Real values on every node of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    dirichlet: bool,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
            dirichlet: true,
        }
    }

    /// Wraps raw node values; the function is flagged Dirichlet-extended
    /// only if it already vanishes off Ω.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let dirichlet = values
            .iter()
            .zip(grid.mask())
            .all(|(v, &inside)| inside || *v == 0.0);
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
            dirichlet,
        })
    }

    /// Samples `f` at every node of the box.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|id| f(&grid.point(id)[..dim])).collect();
        Self::from_values(grid, values).expect("length matches by construction")
    }

    /// Samples `f` on Ω and extends by zero.
    pub fn from_fn_on_omega(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|id| {
                if grid.mask()[id] {
                    f(&grid.point(id)[..dim])
                } else {
                    0.0
                }
            })
            .collect();
        GridFunction {
            grid: Arc::clone(grid),
            values,
            dirichlet: true,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    /// Values on the Ω nodes, in [`Grid::omega_nodes`] order.
    pub fn restrict_to_omega(&self) -> Vec<f64> {
        self.grid
            .omega_nodes()
            .iter()
            .map(|&id| self.values[id])
            .collect()
    }

    /// Zeroes every node outside Ω.
    pub fn dirichlet_projection(&self) -> GridFunction {
        extend_by_zero(&self.restrict_to_omega(), &self.grid).expect("Ω length is consistent")
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        GridFunction::from_values(&self.grid, values).expect("same grid")
    }

    pub fn scale(&self, alpha: f64) -> GridFunction {
        self.map(|v| alpha * v)
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len(),
            "grid functions live on different grids"
        );
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridFunction::from_values(&self.grid, values).expect("same grid")
    }

    /// Pointwise product.
    pub fn product(&self, other: &GridFunction) -> GridFunction {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: f64) -> GridFunction {
        self.scale(rhs)
    }
}

/// Builds the grid and wraps it for sharing.
pub fn build_grid(dim: usize, bounds: &[[f64; 2]], n: usize, omega: Region) -> Result<Arc<Grid>> {
    Grid::new(dim, bounds, n, omega).map(Arc::new)
}

/// Extends values given on Ω nodes by zero to the whole box.
pub fn extend_by_zero(omega_values: &[f64], grid: &Arc<Grid>) -> Result<GridFunction> {
    if omega_values.len() != grid.omega_len() {
        return Err(Error::LengthMismatch {
            expected: grid.omega_len(),
            got: omega_values.len(),
        });
    }
    let mut values = vec![0.0; grid.len()];
    for (&id, &v) in grid.omega_nodes().iter().zip(omega_values) {
        values[id] = v;
    }
    Ok(GridFunction {
        grid: Arc::clone(grid),
        values,
        dirichlet: true,
    })
}

/// Nested regions ω̃ ⋐ ω (optionally ω ⊂ ω₁ ⊂ ω₂) and the ramp smoothness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub inner: Region,
    pub outer: Region,
    #[serde(default)]
    pub enlargement: Option<Region>,
    #[serde(default = "default_order")]
    pub order: u32,
}

fn default_order() -> u32 {
    3
}

impl CutoffSpec {
    pub fn new(inner: Region, outer: Region) -> Self {
        CutoffSpec {
            inner,
            outer,
            enlargement: None,
            order: default_order(),
        }
    }

    pub fn with_enlargement(mut self, omega2: Region) -> Self {
        self.enlargement = Some(omega2);
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    /// The intermediate set ω₁, dilated halfway from ω toward ω₂.
    pub fn omega1(&self) -> Option<Region> {
        let omega2 = self.enlargement.as_ref()?;
        let gap = self.outer.separation_within(omega2);
        let candidate = self.outer.dilate(0.5 * gap);
        if candidate.separation_within(omega2) > 0.0 {
            Some(candidate)
        } else {
            // box dilated inside a ball can poke out at the corners
            Some(self.outer.dilate(0.25 * gap))
        }
    }

    /// Checks the nesting ω̃ ⋐ ω ⋐ Ω and, when present, ω ⊂ ω₁ ⊂ ω₂ ⊂ Ω.
    pub fn validate_in(&self, omega: &Region) -> Result<()> {
        self.validate_shape()?;
        let gap = self.outer.separation_within(omega);
        if gap <= 0.0 {
            return Err(Error::InvalidNesting(format!("ω is not compactly inside Ω (gap {gap})")));
        }
        if let Some(omega2) = &self.enlargement {
            omega2.validate()?;
            let g12 = self.outer.separation_within(omega2);
            let g2 = omega2.separation_within(omega);
            if g12 <= 0.0 || g2 <= 0.0 {
                return Err(Error::InvalidNesting(format!(
                    "enlargement gaps ω→ω₂ = {g12}, ω₂→Ω = {g2}"
                )));
            }
        }
        Ok(())
    }

    /// Checks ω̃ ⋐ ω only; used for probing windows that may straddle ∂Ω.
    pub fn validate_shape(&self) -> Result<()> {
        self.inner.validate()?;
        self.outer.validate()?;
        if self.order < 2 {
            return Err(Error::InvalidNesting(format!(
                "ramp order {} must be at least 2",
                self.order
            )));
        }
        let gap = self.inner.separation_within(&self.outer);
        if gap <= 0.0 {
            return Err(Error::InvalidNesting(format!("ω̃ is not compactly inside ω (gap {gap})")));
        }
        Ok(())
    }

    /// Cut-off value at a point: 1 on ω̃, 0 off ω, smoothstep in between.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let a = self.inner.signed_distance(x);
        if a < 0.0 {
            return 1.0;
        }
        let b = -self.outer.signed_distance(x);
        if b <= 0.0 {
            return 0.0;
        }
        1.0 - smoothstep(self.order, a / (a + b))
    }
}

/// Polynomial ramp of degree `2m+1` from 0 to 1 with `m` vanishing
/// derivatives at both ends.
pub fn smoothstep(m: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let m = m as u64;
    let mut sum = 0.0;
    for k in 0..=m {
        let c = binomial(m + k, k) * binomial(2 * m + 1, m - k);
        sum += c * (-t).powi(k as i32);
    }
    (t.powi(m as i32 + 1) * sum).clamp(0.0, 1.0)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Samples the cut-off η on the grid after checking it nests inside Ω.
pub fn build_cutoff(grid: &Arc<Grid>, spec: &CutoffSpec) -> Result<GridFunction> {
    spec.validate_in(grid.omega())?;
    Ok(GridFunction::from_fn(grid, |x| spec.value_at(x)))
}

/// Samples a cut-off whose outer set may cross ∂Ω (it must stay in the box).
pub fn build_window(grid: &Arc<Grid>, spec: &CutoffSpec) -> Result<GridFunction> {
    spec.validate_shape()?;
    let bounds = grid.bounds();
    if spec.outer.separation_within(&Region::rect(&bounds)) <= 0.0 {
        return Err(Error::InvalidNesting("window leaves the computational box".into()));
    }
    Ok(GridFunction::from_fn(grid, |x| spec.value_at(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, half: f64, omega: Region) -> Arc<Grid> {
        build_grid(1, &[[-half, half]], n, omega).unwrap()
    }

    #[test]
    fn unit_spacing_grid_has_single_interior_node() {
        let g = line(9, 4.0, Region::interval(-1.0, 1.0));
        assert_eq!(g.h(), 1.0);
        let inside: Vec<f64> = g.omega_nodes().iter().map(|&id| g.point(id)[0]).collect();
        assert_eq!(inside, vec![0.0]);
    }

    #[test]
    fn domain_larger_than_box_is_rejected() {
        let err = Grid::new(1, &[[-4.0, 4.0]], 9, Region::interval(-5.0, 5.0)).unwrap_err();
        assert!(matches!(err, Error::CollarTooThin(_)));
    }

    #[test]
    fn too_few_nodes_is_rejected() {
        let err = Grid::new(1, &[[-4.0, 4.0]], 7, Region::interval(-1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::TooFewNodes { min: 8, got: 7 }));
    }

    #[test]
    fn unequal_box_sides_are_rejected() {
        let err = Grid::new(
            2,
            &[[-2.0, 2.0], [-3.0, 3.0]],
            16,
            Region::ball(&[0.0, 0.0], 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidRegion(_)));
    }

    #[test]
    fn boundary_distance_in_interval() {
        let g = line(17, 4.0, Region::interval(-1.0, 1.0));
        let id = (0..g.len()).find(|&id| g.point(id)[0] == 0.5).unwrap();
        assert_eq!(g.rho()[id], 0.5);
        assert!(g.rho().iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn rho_is_lipschitz_between_neighbors() {
        let g = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], 33, Region::ball(&[0.1, -0.2], 1.1))
            .unwrap();
        for id in 0..g.len() {
            for axis in 0..2 {
                if let Some(nb) = g.neighbor(id, axis, 1) {
                    assert!((g.rho()[id] - g.rho()[nb]).abs() <= g.h() + 1e-14);
                }
            }
        }
    }

    #[test]
    fn extend_by_zero_checks_length() {
        let g = line(17, 4.0, Region::interval(-1.0, 1.0));
        let err = extend_by_zero(&[], &g).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));

        let ones = extend_by_zero(&vec![1.0; g.omega_len()], &g).unwrap();
        for id in 0..g.len() {
            let expected = if g.mask()[id] { 1.0 } else { 0.0 };
            assert_eq!(ones.values()[id], expected);
        }
        assert!(ones.is_dirichlet());

        let zero = extend_by_zero(&vec![0.0; g.omega_len()], &g).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn restrict_then_extend_is_identity() {
        let g = line(33, 2.0, Region::interval(-1.0, 1.0));
        let u = GridFunction::from_fn_on_omega(&g, |x| (3.0 * x[0]).sin() + 0.2);
        let back = extend_by_zero(&u.restrict_to_omega(), &g).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        for m in 2..6 {
            assert_eq!(smoothstep(m, 0.0), 0.0);
            assert!((smoothstep(m, 1.0 - 1e-15) - 1.0).abs() < 1e-12);
            for i in 1..10 {
                let t = i as f64 / 10.0;
                let sum = smoothstep(m, t) + smoothstep(m, 1.0 - t);
                assert!((sum - 1.0).abs() < 1e-12, "m={m} t={t}");
            }
        }
        // m = 1 is the classic 3t² − 2t³
        assert!((smoothstep(1, 0.3) - (3.0 * 0.09 - 2.0 * 0.027)).abs() < 1e-15);
    }

    #[test]
    fn cutoff_clauses_hold_nodewise() {
        let g = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], 41, Region::ball(&[0.0, 0.0], 1.0))
            .unwrap();
        let spec = CutoffSpec::new(
            Region::ball(&[0.0, 0.0], 0.3),
            Region::rect(&[[-0.6, 0.6], [-0.6, 0.6]]),
        );
        let eta = build_cutoff(&g, &spec).unwrap();
        for id in 0..g.len() {
            let x = g.point(id);
            let v = eta.values()[id];
            if spec.inner.contains(&x) {
                assert_eq!(v, 1.0);
            } else if !spec.outer.contains(&x) {
                assert_eq!(v, 0.0);
            } else {
                assert!((0.0..=1.0).contains(&v), "x={x:?} v={v}");
            }
        }
    }

    #[test]
    fn cutoff_rejects_bad_nesting() {
        let g = line(33, 2.0, Region::interval(-1.0, 1.0));
        let touching = CutoffSpec::new(Region::interval(-0.5, 0.5), Region::interval(-0.5, 0.8));
        assert!(matches!(build_cutoff(&g, &touching), Err(Error::InvalidNesting(_))));
        let escaping = CutoffSpec::new(Region::interval(-0.5, 0.5), Region::interval(-0.7, 1.2));
        assert!(matches!(build_cutoff(&g, &escaping), Err(Error::InvalidNesting(_))));
        let bad_omega2 = CutoffSpec::new(Region::interval(-0.2, 0.2), Region::interval(-0.4, 0.4))
            .with_enlargement(Region::interval(-0.3, 0.9));
        assert!(matches!(build_cutoff(&g, &bad_omega2), Err(Error::InvalidNesting(_))));
    }

    #[test]
    fn omega1_sits_between_omega_and_omega2() {
        let spec = CutoffSpec::new(Region::interval(-0.2, 0.2), Region::interval(-0.4, 0.4))
            .with_enlargement(Region::interval(-0.8, 0.8));
        let w1 = spec.omega1().unwrap();
        let b = w1.bounding_box()[0];
        assert!((b[0] + 0.6).abs() < 1e-12 && (b[1] - 0.6).abs() < 1e-12);

        let spec = CutoffSpec::new(
            Region::ball(&[0.0, 0.0], 0.1),
            Region::rect(&[[-0.3, 0.3], [-0.3, 0.3]]),
        )
        .with_enlargement(Region::ball(&[0.0, 0.0], 0.5));
        let w1 = spec.omega1().unwrap();
        assert!(spec.outer.separation_within(&w1) > 0.0);
        assert!(w1.separation_within(spec.enlargement.as_ref().unwrap()) > 0.0);
    }

    #[test]
    fn region_round_trips_through_toml_like_json() {
        let r = Region::ball(&[0.0, 1.0], 2.0);
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"kind":"ball","center":[0.0,1.0],"radius":2.0}"#);
        let back: Region = serde_json::from_str(r#"{"kind":"box","bounds":[[-1,1]]}"#).unwrap();
        assert_eq!(back, Region::interval(-1.0, 1.0));
    }

    #[test]
    fn separations_are_exact() {
        let ball = Region::ball(&[0.0, 0.0], 1.0);
        let square = Region::rect(&[[-0.5, 0.5], [-0.5, 0.5]]);
        assert!((square.separation_within(&ball) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((Region::ball(&[0.2, 0.0], 0.3).separation_within(&ball) - 0.5).abs() < 1e-15);
        assert!((Region::ball(&[0.0, 0.0], 0.3).separation_within(&square) - 0.2).abs() < 1e-15);
    }
}
