//! Experiment configuration (TOML).
//!
//! ```toml
//! experiment = "getoor"
//! seed = 7
//!
//! [grid]
//! dim = 1
//! extent = [-2.0, 2.0]          # per-axis box
//! levels = [129, 257, 513]      # nodes per axis, one entry per refinement
//! omega = { kind = "box", bounds = [[-1.0, 1.0]] }
//!
//! [operator]
//! s = 0.5                       # or a list
//!
//! [source]
//! profile = "jump"              # constant | jump | power | bump | wave | csv
//! at = 0.0                      # profile = "csv" takes `path`
//!
//! [time]
//! horizon = 1.0
//! steps = [64, 128]
//! theta = [1.0]
//! slack = 0.05
//! tau = 0.05                    # step of the steady-state runs
//!
//! [probe]
//! p = 2.0
//! method = "besov"              # gagliardo | besov | potential
//! sweep = [0.1, 0.2, 0.3]
//! windows = [{ name = "interior", inner = { kind = "box", bounds = [[-0.3, 0.3]] }, outer = { kind = "box", bounds = [[-0.5, 0.5]] } }]
//!
//! [cutoff]
//! inner = { kind = "box", bounds = [[-0.3, 0.3]] }
//! outer = { kind = "box", bounds = [[-0.6, 0.6]] }
//! enlargement = { kind = "box", bounds = [[-0.8, 0.8]] }
//!
//! [symbol]
//! k = [1.0, 2.0, 4.0]
//! flat = 3.0
//! support = 11.0
//! extent = 24.0
//!
//! [semigroup]
//! samples = 100
//! times = [0.1, 1.0]
//! p = [1.0, 2.0, inf]
//! steps = 10
//! ```
//!
//! Every key is optional except `experiment`; each recipe supplies its own
//! defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fraclap_core::probe::Method;
use fraclap_core::profiles::read_node_values;
use fraclap_core::{CutoffSpec, Grid, GridFunction, Profile, Region};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A scalar or a list of scalars.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    pub extent: Option<[f64; 2]>,
    pub levels: Option<Vec<usize>>,
    pub omega: Option<Region>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub s: Option<OneOrMany<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: Option<f64>,
    pub steps: Option<Vec<usize>>,
    pub theta: Option<OneOrMany<f64>>,
    pub slack: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedWindow {
    pub name: String,
    pub inner: Region,
    pub outer: Region,
}

impl NamedWindow {
    pub fn new(name: &str, inner: Region, outer: Region) -> Self {
        NamedWindow { name: name.to_string(), inner, outer }
    }

    pub fn spec(&self) -> CutoffSpec {
        CutoffSpec::new(self.inner.clone(), self.outer.clone())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub p: Option<f64>,
    pub method: Option<Method>,
    pub sweep: Option<Vec<f64>>,
    pub windows: Option<Vec<NamedWindow>>,
    pub min_rate: Option<f64>,
    pub min_increment: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSection {
    pub k: Option<Vec<f64>>,
    pub flat: Option<f64>,
    pub support: Option<f64>,
    pub extent: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSection {
    pub samples: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub steps: Option<usize>,
}

/// Source term: an analytic profile or node values read from a CSV.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Analytic(Profile),
    Csv(PathBuf),
}

impl<'de> Deserialize<'de> for SourceSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let table = toml::Table::deserialize(d)?;
        if table.get("profile").and_then(|v| v.as_str()) == Some("csv") {
            if let Some(extra) = table.keys().find(|k| *k != "profile" && *k != "path") {
                return Err(D::Error::custom(format!("unknown field `{extra}` for a csv source")));
            }
            let path = table
                .get("path")
                .and_then(|v| v.as_str())
                .ok_or_else(|| D::Error::custom("csv source needs a `path` string"))?;
            return Ok(SourceSpec::Csv(PathBuf::from(path)));
        }
        Profile::deserialize(toml::Value::Table(table))
            .map(SourceSpec::Analytic)
            .map_err(D::Error::custom)
    }
}

impl SourceSpec {
    pub fn describe(&self) -> String {
        match self {
            SourceSpec::Analytic(p) => serde_json::to_string(p).unwrap_or_default(),
            SourceSpec::Csv(path) => format!("csv:{}", path.display()),
        }
    }

    /// Samples on Ω nodes (zero outside).
    pub fn sample(&self, grid: &Arc<Grid>, base: &Path) -> fraclap_core::Result<GridFunction> {
        match self {
            SourceSpec::Analytic(p) => {
                p.validate(grid.dim())?;
                Ok(p.sample_on_omega(grid))
            }
            SourceSpec::Csv(path) => {
                let f = read_node_values(&base.join(path), grid)?;
                Ok(f.dirichlet_projection())
            }
        }
    }

    /// Constant value, if the source is a constant profile.
    pub fn constant(&self) -> Option<f64> {
        match self {
            SourceSpec::Analytic(Profile::Constant { value }) => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub operator: OperatorSection,
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub probe: ProbeSection,
    pub cutoff: Option<CutoffSpec>,
    #[serde(default)]
    pub symbol: SymbolSection,
    #[serde(default)]
    pub semigroup: SemigroupSection,
    /// directory that relative paths are resolved against
    #[serde(skip)]
    pub base: PathBuf,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl Config {
    /// Configuration with every optional key left to the recipe defaults.
    pub fn defaults(experiment: &str) -> Self {
        Config {
            experiment: experiment.to_string(),
            seed: 0,
            grid: GridSection::default(),
            operator: OperatorSection::default(),
            source: None,
            time: TimeSection::default(),
            probe: ProbeSection::default(),
            cutoff: None,
            symbol: SymbolSection::default(),
            semigroup: SemigroupSection::default(),
            base: PathBuf::from("."),
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |span| line_column(text, span.start));
            ConfigError::Parse {
                path: origin.to_string(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::parse(&text, &path.display().to_string())?;
        config.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn s_values(&self, default: &[f64]) -> Vec<f64> {
        self.operator.s.as_ref().map_or_else(|| default.to_vec(), OneOrMany::to_vec)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim.unwrap_or(1)
    }

    pub fn levels(&self, default: &[usize]) -> Vec<usize> {
        self.grid.levels.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn extent(&self) -> [f64; 2] {
        self.grid.extent.unwrap_or([-2.0, 2.0])
    }

    /// Ω: the configured region, else (−1, 1) in 1D and the unit disc in 2D.
    pub fn omega(&self) -> Region {
        self.grid.omega.clone().unwrap_or_else(|| match self.dim() {
            1 => Region::interval(-1.0, 1.0),
            _ => Region::ball(&[0.0, 0.0], 1.0),
        })
    }

    pub fn source_or(&self, default: Profile) -> SourceSpec {
        self.source.clone().unwrap_or(SourceSpec::Analytic(default))
    }

    pub fn windows_or(&self, default: Vec<NamedWindow>) -> Vec<NamedWindow> {
        self.probe.windows.clone().unwrap_or(default)
    }

    pub fn theta_values(&self, default: &[f64]) -> Vec<f64> {
        self.time.theta.as_ref().map_or_else(|| default.to_vec(), OneOrMany::to_vec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = Config::parse("experiment = \"getoor\"\n", "inline").unwrap();
        assert_eq!(c.experiment, "getoor");
        assert_eq!(c.s_values(&[0.5]), vec![0.5]);
        assert_eq!(c.omega(), Region::interval(-1.0, 1.0));
    }

    #[test]
    fn scalar_or_list() {
        let c = Config::parse("experiment = \"symbol\"\n[operator]\ns = [0.3, 0.7]\n", "inline").unwrap();
        assert_eq!(c.s_values(&[0.5]), vec![0.3, 0.7]);
        let c = Config::parse("experiment = \"symbol\"\n[operator]\ns = 0.25\n", "inline").unwrap();
        assert_eq!(c.s_values(&[0.5]), vec![0.25]);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = Config::parse("experiment = \"getoor\"\n[grid]\nlevels = [129, \n", "bad.toml").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => {
                assert!(line >= 3, "line {line}");
                assert!(column >= 1);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = Config::parse("experiment = \"getoor\"\n[grid]\nnodes = 3\n", "bad.toml").unwrap_err();
        let text = err.to_string();
        assert!(text.starts_with("bad.toml:3:"), "{text}");
        assert!(text.contains("nodes"), "{text}");
    }

    #[test]
    fn sources_parse_as_profiles_or_csv() {
        let c = Config::parse("experiment = \"x\"\n[source]\nprofile = \"jump\"\nat = 0.25\n", "inline").unwrap();
        assert_eq!(
            c.source,
            Some(SourceSpec::Analytic(Profile::Jump { at: 0.25, left: 0.0, right: 1.0, axis: 0 }))
        );
        let c = Config::parse("experiment = \"x\"\n[source]\nprofile = \"csv\"\npath = \"f.csv\"\n", "inline").unwrap();
        assert_eq!(c.source, Some(SourceSpec::Csv(PathBuf::from("f.csv"))));
        assert!(Config::parse("experiment = \"x\"\n[source]\nprofile = \"spike\"\n", "inline").is_err());
        assert!(Config::parse("experiment = \"x\"\n[source]\nprofile = \"csv\"\n", "inline").is_err());
    }

    #[test]
    fn infinite_index_is_accepted() {
        let c = Config::parse("experiment = \"x\"\n[semigroup]\np = [1.0, inf]\n", "inline").unwrap();
        assert_eq!(c.semigroup.p.unwrap()[1], f64::INFINITY);
    }
}
