//! Dirichlet problem `(-Δ)^s u = f` in Ω, `u = 0` on the complement.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::grid::{extend_by_zero, Grid, GridFunction};
use crate::operator::{FractionalLaplacian, FractionalParams, OperatorMatrix, DEFAULT_DENSE_CAP};

/// Relative residual accepted from the direct solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Factored Dirichlet operator, reusable for many right-hand sides.
pub struct DirichletSolver {
    grid: Arc<Grid>,
    operator: OperatorMatrix,
    factor: Cholesky<f64, Dyn>,
}

impl DirichletSolver {
    pub fn new(grid: &Arc<Grid>, params: &FractionalParams) -> Result<Self> {
        Self::with_cap(grid, params, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(grid: &Arc<Grid>, params: &FractionalParams, cap: usize) -> Result<Self> {
        let operator = FractionalLaplacian::new(grid, *params)?.assemble(cap)?;
        Self::from_matrix(grid, operator)
    }

    pub fn from_matrix(grid: &Arc<Grid>, operator: OperatorMatrix) -> Result<Self> {
        if operator.size() != grid.omega_len() {
            return Err(Error::LengthMismatch {
                expected: grid.omega_len(),
                got: operator.size(),
            });
        }
        let factor = Cholesky::new(operator.matrix.clone()).ok_or(Error::SingularMatrix)?;
        Ok(DirichletSolver {
            grid: Arc::clone(grid),
            operator,
            factor,
        })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.operator
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.operator.matrix
    }

    /// Solves `A u = f` on Ω; `f` is read on Ω nodes only.
    pub fn solve(&self, f: &GridFunction) -> Result<GridFunction> {
        let rhs = f.restrict_to_omega();
        let u = self.solve_omega(&rhs)?;
        extend_by_zero(&u, &self.grid)
    }

    /// Solves for values on Ω nodes and checks the residual.
    pub fn solve_omega(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.grid.omega_len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.omega_len(),
                got: rhs.len(),
            });
        }
        let b = DVector::from_column_slice(rhs);
        let x = self.factor.solve(&b);
        let residual = (&self.operator.matrix * &x - &b).amax();
        let scale = b.amax();
        let tolerance = SOLVE_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        if residual > tolerance {
            return Err(Error::Residual { residual, tolerance });
        }
        Ok(x.as_slice().to_vec())
    }
}

/// One-shot solve of the Dirichlet problem with source `f`.
pub fn solve_dirichlet(f: &GridFunction, params: &FractionalParams, grid: &Arc<Grid>) -> Result<GridFunction> {
    DirichletSolver::new(grid, params)?.solve(f)
}

/// `max_{x ∈ Ω} |(-Δ)^s u − f|` with the matrix-free operator.
pub fn residual_check(u: &GridFunction, f: &GridFunction, params: &FractionalParams) -> Result<f64> {
    let op = FractionalLaplacian::new(u.grid(), *params)?;
    let lu = op.apply(u);
    Ok(u.grid()
        .omega_nodes()
        .iter()
        .map(|&id| (lu.values()[id] - f.values()[id]).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Region};

    fn setup(n: usize, s: f64) -> (Arc<Grid>, FractionalParams) {
        let g = build_grid(1, &[[-1.5, 1.5]], n, Region::interval(-1.0, 1.0)).unwrap();
        (g, FractionalParams::new(1, s).unwrap())
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let (g, p) = setup(65, 0.4);
        let u = solve_dirichlet(&GridFunction::zeros(&g), &p, &g).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn solve_meets_residual_contract() {
        let (g, p) = setup(129, 0.3);
        let f = GridFunction::from_fn_on_omega(&g, |x| 1.0 + x[0].sin());
        let u = solve_dirichlet(&f, &p, &g).unwrap();
        assert!(u.is_dirichlet());
        let r = residual_check(&u, &f, &p).unwrap();
        assert!(r <= 1e-10 * f.max_abs(), "residual {r}");
    }

    #[test]
    fn residual_of_zero_against_one_is_one() {
        let (g, p) = setup(33, 0.5);
        let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
        assert_eq!(residual_check(&GridFunction::zeros(&g), &f, &p).unwrap(), 1.0);
    }

    #[test]
    fn perturbation_raises_residual_by_diagonal_weight() {
        let (g, p) = setup(65, 0.6);
        let solver = DirichletSolver::new(&g, &p).unwrap();
        let f = GridFunction::from_fn_on_omega(&g, |_| 1.0);
        let u = solver.solve(&f).unwrap();
        let eps = 1e-3;
        let slot = g.omega_len() / 3;
        let node = g.omega_nodes()[slot];
        let mut values = u.values().to_vec();
        values[node] += eps;
        let perturbed = GridFunction::from_values(&g, values).unwrap();
        let r0 = residual_check(&u, &f, &p).unwrap();
        let r1 = residual_check(&perturbed, &f, &p).unwrap();
        let diag = solver.matrix()[(slot, slot)];
        assert!(r1 - r0 >= eps * diag * (1.0 - 1e-9), "{r1} {r0} {diag}");
    }

    #[test]
    fn superposition_holds() {
        let (g, p) = setup(97, 0.45);
        let solver = DirichletSolver::new(&g, &p).unwrap();
        let f = GridFunction::from_fn_on_omega(&g, |x| x[0].cos());
        let k = GridFunction::from_fn_on_omega(&g, |x| if x[0] > 0.1 { 1.0 } else { -0.5 });
        let (a, b) = (2.5, -0.75);
        let combo = &f.scale(a) + &k.scale(b);
        let lhs = solver.solve(&combo).unwrap();
        let rhs = &solver.solve(&f).unwrap().scale(a) + &solver.solve(&k).unwrap().scale(b);
        assert!((&lhs - &rhs).max_abs() < 1e-10);
    }

    #[test]
    fn maximum_principle_and_comparison() {
        let g = build_grid(2, &[[-1.6, 1.6], [-1.6, 1.6]], 25, Region::ball(&[0.0, 0.0], 1.0))
            .unwrap();
        let p = FractionalParams::new(2, 0.4).unwrap();
        let solver = DirichletSolver::new(&g, &p).unwrap();
        let f1 = GridFunction::from_fn_on_omega(&g, |x| (x[0] - 0.2).max(0.0));
        let f2 = GridFunction::from_fn_on_omega(&g, |x| (x[0] - 0.2).max(0.0) + 0.1 * (1.0 + x[1]));
        let u1 = solver.solve(&f1).unwrap();
        let u2 = solver.solve(&f2).unwrap();
        for &id in g.omega_nodes() {
            assert!(u1.values()[id] >= 0.0);
            assert!(u2.values()[id] >= u1.values()[id]);
        }
    }
}
