//! Artifacts, check outcomes and the run manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fraclap_core::spaces::fmt_float;
use fraclap_core::Region;
use serde::Serialize;

/// Version string recorded in every manifest.
pub const CODE_VERSION: &str = concat!("fraclap ", env!("CARGO_PKG_VERSION"));

/// One output file, rendered in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, header: &str, rows: impl IntoIterator<Item = String>) -> Self {
        let mut body = String::from(header);
        body.push('\n');
        for row in rows {
            body.push_str(&row);
            body.push('\n');
        }
        Artifact { name: name.into(), body }
    }

    pub fn json(name: impl Into<String>, value: &impl Serialize) -> Self {
        let mut body = serde_json::to_string_pretty(value).expect("serializable artifact");
        body.push('\n');
        Artifact { name: name.into(), body }
    }
}

/// Joins already-formatted fields into a CSV row.
pub fn row(fields: &[String]) -> String {
    fields.join(",")
}

/// Float field with 17 significant digits.
pub fn num(x: f64) -> String {
    fmt_float(x)
}

/// A pass/fail comparison against a pinned threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    /// acceptance criterion number, when the check realizes one
    pub criterion: Option<u8>,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(criterion: Option<u8>, name: impl Into<String>, passed: bool, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            criterion,
            name: name.into(),
            passed,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    /// `measured ≤ threshold`
    pub fn at_most(criterion: Option<u8>, name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(criterion, name, measured <= threshold, measured, threshold, detail)
    }

    /// `measured ≥ threshold`
    pub fn at_least(criterion: Option<u8>, name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(criterion, name, measured >= threshold, measured, threshold, detail)
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let label = self.criterion.map_or_else(|| "-".to_string(), |c| format!("C{c}"));
        write!(
            f,
            "{status} {label:>3} {}: measured {:.6e}, threshold {:.6e} ({})",
            self.name, self.measured, self.threshold, self.detail
        )
    }
}

/// Provenance record written next to the artifacts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub code_version: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: Vec<f64>,
    pub n: Vec<usize>,
    pub tau: Vec<f64>,
    pub regions: BTreeMap<String, Region>,
    pub source: Option<String>,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(experiment: &str, seed: u64, dim: usize) -> Self {
        Manifest {
            experiment: experiment.to_string(),
            code_version: CODE_VERSION.to_string(),
            seed,
            dim,
            s: Vec::new(),
            n: Vec::new(),
            tau: Vec::new(),
            regions: BTreeMap::new(),
            source: None,
            artifacts: Vec::new(),
        }
    }

    pub fn region(mut self, name: &str, region: &Region) -> Self {
        self.regions.insert(name.to_string(), region.clone());
        self
    }
}

/// Everything a recipe produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<CheckOutcome>,
}

impl RunOutput {
    pub fn new(mut manifest: Manifest, artifacts: Vec<Artifact>, checks: Vec<CheckOutcome>) -> Self {
        manifest.artifacts = artifacts.iter().map(|a| a.name.clone()).collect();
        manifest.artifacts.push("checks.json".into());
        manifest.artifacts.push("manifest.json".into());
        RunOutput { manifest, artifacts, checks }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// All files of the run, including `checks.json` and `manifest.json`.
    pub fn files(&self) -> Vec<Artifact> {
        let mut files = self.artifacts.clone();
        files.push(Artifact::json("checks.json", &self.checks));
        files.push(Artifact::json("manifest.json", &self.manifest));
        files
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for file in self.files() {
            std::fs::write(dir.join(&file.name), file.body.as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_artifact_has_header_and_rows() {
        let a = Artifact::csv("t.csv", "a,b", vec![row(&[num(1.0), num(0.5)])]);
        assert_eq!(a.body, "a,b\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn manifest_lists_every_file() {
        let out = RunOutput::new(Manifest::new("getoor", 0, 1), vec![Artifact::csv("x.csv", "h", Vec::new())], Vec::new());
        let names: Vec<String> = out.files().into_iter().map(|f| f.name).collect();
        assert_eq!(names, out.manifest.artifacts);
        assert!(out.files().last().unwrap().body.contains("\"code_version\""));
    }

    #[test]
    fn outcome_display_marks_status() {
        let ok = CheckOutcome::at_most(Some(1), "getoor", 0.01, 0.02, "n=513");
        assert!(ok.passed);
        assert!(ok.to_string().starts_with("PASS  C1 getoor"));
        let bad = CheckOutcome::at_least(None, "gain", 0.4, 0.5, "");
        assert!(bad.to_string().starts_with("FAIL   - gain"));
    }
}
