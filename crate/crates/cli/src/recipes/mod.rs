//! Named experiment recipes. Each one reads its settings from a [`Config`],
//! falls back to the defaults of the matching acceptance run, and returns the
//! rendered artifacts with their checks.

mod elliptic;
mod localization;
mod operator;
mod parabolic;

use std::sync::Arc;

use fraclap_core::{build_grid, FractionalParams, Grid, GridFunction, Region};

use crate::config::{Config, ConfigError, NamedWindow};
use crate::output::{num, row, RunOutput};

/// Recipe names, in listing order.
pub const RECIPES: [&str; 9] = [
    "getoor",
    "symbol",
    "elliptic-regularity",
    "parabolic-energy",
    "semigroup-contraction",
    "product-rule",
    "g-bound",
    "regularity-sweep",
    "boundary-profile",
];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] fraclap_core::Error),
}

pub type RunResult = Result<RunOutput, RunError>;

pub fn run_recipe(config: &Config) -> RunResult {
    match config.experiment.as_str() {
        "getoor" => elliptic::getoor(config),
        "symbol" => operator::symbol(config),
        "elliptic-regularity" => elliptic::elliptic_regularity(config),
        "parabolic-energy" => parabolic::parabolic_energy(config),
        "semigroup-contraction" => parabolic::semigroup_contraction(config),
        "product-rule" | "identity-check" => localization::product_rule(config),
        "g-bound" => localization::g_bound(config),
        "regularity-sweep" => elliptic::regularity_sweep(config),
        "boundary-profile" => elliptic::boundary_profile(config),
        other => Err(invalid(format!("unknown experiment `{other}`; expected one of {}", RECIPES.join(", ")))),
    }
}

fn invalid(message: String) -> RunError {
    RunError::Config(ConfigError::Invalid(message))
}

fn grid(config: &Config, n: usize) -> Result<Arc<Grid>, RunError> {
    let dim = config.dim();
    Ok(build_grid(dim, &vec![config.extent(); dim], n, config.omega())?)
}

fn params(dim: usize, s: f64) -> Result<FractionalParams, RunError> {
    Ok(FractionalParams::new(dim, s)?)
}

fn coord_header(dim: usize) -> &'static str {
    if dim == 1 {
        "x"
    } else {
        "x,y"
    }
}

fn coords(g: &Grid, id: usize) -> Vec<String> {
    g.point(id)[..g.dim()].iter().map(|&c| num(c)).collect()
}

/// One row per Ω node: coordinates then the listed functions.
fn omega_rows(g: &Grid, columns: &[&GridFunction]) -> Vec<String> {
    g.omega_nodes()
        .iter()
        .map(|&id| {
            let mut fields = coords(g, id);
            fields.extend(columns.iter().map(|f| num(f.values()[id])));
            row(&fields)
        })
        .collect()
}

/// Probe windows: a deep-interior one and one straddling the boundary.
fn default_windows(dim: usize) -> Vec<NamedWindow> {
    if dim == 1 {
        vec![
            NamedWindow::new("interior", Region::interval(-0.3, 0.3), Region::interval(-0.5, 0.5)),
            NamedWindow::new("boundary", Region::interval(0.6, 1.1), Region::interval(0.5, 1.2)),
        ]
    } else {
        vec![
            NamedWindow::new("interior", Region::ball(&[0.0, 0.0], 0.3), Region::ball(&[0.0, 0.0], 0.5)),
            NamedWindow::new("boundary", Region::ball(&[1.0, 0.0], 0.25), Region::ball(&[1.0, 0.0], 0.35)),
        ]
    }
}

/// Compact decimal tag for file names.
fn tag(x: f64) -> String {
    format!("{x}")
}
