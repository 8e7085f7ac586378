//! Named analytic profiles for sources, test functions and initial data.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{smoothstep, Grid, GridFunction};

fn one() -> f64 {
    1.0
}

/// Analytic profile. Every variant is evaluated pointwise in R^N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `left` for `x[axis] < at`, `right` otherwise
    Jump {
        #[serde(default)]
        at: f64,
        #[serde(default)]
        left: f64,
        #[serde(default = "one")]
        right: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `amplitude (1 − |x − c|²/r²)^exponent_+`
    Power {
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "one")]
        radius: f64,
        exponent: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude exp(1 − 1/(1 − |x − c|²/r²))` inside the ball, zero outside
    Bump {
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `sin(k x[0] + phase)` times a C^∞ radial window equal to one on `|x| ≤ flat`
    Wave {
        k: f64,
        #[serde(default)]
        phase: f64,
        flat: f64,
        support: f64,
    },
}

fn dist2(x: &[f64], center: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = center.get(i).copied().unwrap_or(0.0);
            (v - c) * (v - c)
        })
        .sum()
}

/// C^∞ transition: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_transition(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Jump { at, left, right, axis } => {
                if x.get(*axis).copied().unwrap_or(0.0) < *at {
                    *left
                } else {
                    *right
                }
            }
            Profile::Power { center, radius, exponent, amplitude } => {
                let t = 1.0 - dist2(x, center) / (radius * radius);
                if t <= 0.0 {
                    0.0
                } else {
                    amplitude * t.powf(*exponent)
                }
            }
            Profile::Bump { center, radius, amplitude } => {
                let t = 1.0 - dist2(x, center) / (radius * radius);
                if t <= 0.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / t).exp()
                }
            }
            Profile::Wave { k, phase, flat, support } => {
                let r = dist2(x, &[]).sqrt();
                let w = smooth_transition((support - r) / (support - flat));
                (k * x[0] + phase).sin() * w
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            Profile::Jump { axis, .. } if *axis >= dim => bad(format!("jump axis {axis} in {dim}D")),
            Profile::Power { center, radius, .. } | Profile::Bump { center, radius, .. }
                if !(center.is_empty() || center.len() == dim) || *radius <= 0.0 =>
            {
                bad("profile center/radius do not match the dimension".into())
            }
            Profile::Wave { flat, support, .. } if !(0.0 <= *flat && flat < support) => {
                bad(format!("wave window needs 0 ≤ flat < support, got {flat}, {support}"))
            }
            _ => Ok(()),
        }
    }

    /// Samples on every box node.
    pub fn sample(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }

    /// Samples on Ω nodes, zero elsewhere.
    pub fn sample_on_omega(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn_on_omega(grid, |x| self.eval(x))
    }
}

/// Polynomial-smoothstep window of order `m`: 1 on `|x| ≤ flat`, 0 beyond `support`.
pub fn polynomial_window(m: u32, flat: f64, support: f64, x: &[f64]) -> f64 {
    let r = dist2(x, &[]).sqrt();
    smoothstep(m, (support - r) / (support - flat))
}

/// Reads node values from a CSV: either one value per line, or rows of
/// coordinates followed by the value (the last column is used). Lines that do
/// not parse as numbers (headers) are skipped.
pub fn read_node_values(path: &Path, grid: &Arc<Grid>) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in text.lines() {
        let last = line.split(',').next_back().unwrap_or("").trim();
        if last.is_empty() {
            continue;
        }
        if let Ok(v) = last.parse::<f64>() {
            values.push(v);
        }
    }
    if values.len() == grid.omega_len() && values.len() != grid.len() {
        return crate::grid::extend_by_zero(&values, grid);
    }
    GridFunction::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Region};

    #[test]
    fn profiles_evaluate_as_documented() {
        let c = Profile::Constant { value: 2.0 };
        assert_eq!(c.eval(&[0.3]), 2.0);
        let j = Profile::Jump { at: 0.0, left: 0.0, right: 1.0, axis: 0 };
        assert_eq!(j.eval(&[-0.1]), 0.0);
        assert_eq!(j.eval(&[0.0]), 1.0);
        let p = Profile::Power { center: vec![], radius: 1.0, exponent: 0.5, amplitude: 1.0 };
        assert!((p.eval(&[0.6]) - 0.8).abs() < 1e-15);
        assert_eq!(p.eval(&[1.2]), 0.0);
        let b = Profile::Bump { center: vec![0.0, 0.0], radius: 0.5, amplitude: 1.0 };
        assert_eq!(b.eval(&[0.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[0.5, 0.0]), 0.0);
        let w = Profile::Wave { k: 2.0, phase: 0.0, flat: 0.5, support: 1.0 };
        assert!((w.eval(&[0.3]) - 0.6f64.sin()).abs() < 1e-15);
        assert_eq!(w.eval(&[1.0]), 0.0);
    }

    #[test]
    fn toml_style_parsing() {
        let p: Profile = serde_json::from_str(r#"{"profile":"jump","at":0.25}"#).unwrap();
        assert_eq!(p, Profile::Jump { at: 0.25, left: 0.0, right: 1.0, axis: 0 });
        assert!(serde_json::from_str::<Profile>(r#"{"profile":"spike"}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_axis() {
        let j = Profile::Jump { at: 0.0, left: 0.0, right: 1.0, axis: 1 };
        assert!(j.validate(1).is_err());
        assert!(j.validate(2).is_ok());
    }

    #[test]
    fn csv_node_values_round_trip() {
        let g = build_grid(1, &[[-2.0, 2.0]], 17, Region::interval(-1.0, 1.0)).unwrap();
        let dir = std::env::temp_dir().join(format!("fraclap-profile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let body: String = g
            .omega_nodes()
            .iter()
            .map(|&id| format!("{},{}\n", g.point(id)[0], g.point(id)[0] + 2.0))
            .collect();
        std::fs::write(&path, format!("x,f\n{body}")).unwrap();
        let f = read_node_values(&path, &g).unwrap();
        for &id in g.omega_nodes() {
            assert_eq!(f.values()[id], g.point(id)[0] + 2.0);
        }
        assert!(f.is_dirichlet());
        std::fs::remove_dir_all(&dir).ok();
    }
}
