//! The acceptance suite: the recipe runs behind criteria 1 to 8, the oracle
//! comparison (9) and the thread-count determinism check (10).

use std::fmt;

use fraclap_core::{assemble_operator_matrix, build_grid, extend_by_zero, FractionalParams, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::oracle::brute_force_apply;
use crate::output::{num, row, Artifact, CheckOutcome, Manifest, RunOutput};
use crate::recipes::{run_recipe, RunError};

/// Recipes run with their default settings by the suite.
pub const SUITE: [&str; 6] = [
    "getoor",
    "symbol",
    "product-rule",
    "parabolic-energy",
    "semigroup-contraction",
    "elliptic-regularity",
];

pub const ORACLE_TOLERANCE: f64 = 1e-12;
const ORACLE_INPUTS: usize = 20;

const TITLES: [&str; 10] = [
    "closed-form elliptic benchmark",
    "Fourier symbol",
    "product rule",
    "parabolic energy inequality",
    "semigroup contraction and positivity",
    "interior regularity gain",
    "boundary limitation",
    "steady state",
    "oracle equivalence",
    "determinism across thread counts",
];

/// Matrix path against the node-by-node quadrature for seeded random inputs,
/// alternating a line with 19 Ω nodes and a disc with 21.
pub fn oracle_check(seed: u64) -> Result<RunOutput, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line = build_grid(1, &[[-2.0, 2.0]], 41, Region::interval(-1.0, 1.0))?;
    let disc = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], 13, Region::ball(&[0.0, 0.0], 1.0))?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for sample in 0..ORACLE_INPUTS {
        let g = if sample % 2 == 0 { &line } else { &disc };
        let s: f64 = rng.gen_range(0.05..0.95);
        let values: Vec<f64> = (0..g.omega_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = FractionalParams::new(g.dim(), s)?;
        let matrix = assemble_operator_matrix(g, &p)?.mul_vec(&values);
        let brute = brute_force_apply(&extend_by_zero(&values, g)?, s);
        let diff = matrix.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = matrix.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let rel = diff / scale;
        worst = worst.max(rel);
        sizes.push(g.omega_len());
        rows.push(row(&[
            sample.to_string(),
            g.dim().to_string(),
            g.n().to_string(),
            g.omega_len().to_string(),
            num(s),
            num(diff),
            num(scale),
            num(rel),
        ]));
    }
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let checks = vec![CheckOutcome::at_most(
        Some(9),
        "matrix vs brute-force quadrature",
        worst,
        ORACLE_TOLERANCE,
        format!("largest max-norm difference relative to max |Au| over {ORACLE_INPUTS} inputs, at most {largest} Omega nodes"),
    )];
    let mut manifest = Manifest::new("oracle", seed, 1).region("line", line.omega()).region("disc", disc.omega());
    manifest.n = vec![line.n(), disc.n()];
    manifest.source = Some(format!("{ORACLE_INPUTS} random inputs uniform in (-1, 1), random s in (0.05, 0.95)"));
    let artifacts = vec![Artifact::csv("oracle.csv", "sample,dim,n,omega_nodes,s,max_diff,max_value,rel_diff", rows)];
    Ok(RunOutput::new(manifest, artifacts, checks))
}

/// Criteria 1 to 9 with default settings.
pub fn run_suite(seed: u64) -> Result<Vec<RunOutput>, RunError> {
    let mut outputs = Vec::with_capacity(SUITE.len() + 1);
    for name in SUITE {
        let mut config = Config::defaults(name);
        config.seed = seed;
        outputs.push(run_recipe(&config)?);
    }
    outputs.push(oracle_check(seed)?);
    Ok(outputs)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Names of the files that differ between two sets of runs.
pub fn differing_files(a: &[RunOutput], b: &[RunOutput]) -> Vec<String> {
    let mut out = Vec::new();
    if a.len() != b.len() {
        out.push(format!("{} runs vs {}", a.len(), b.len()));
        return out;
    }
    for (x, y) in a.iter().zip(b) {
        let (fx, fy) = (x.files(), y.files());
        if fx.len() != fy.len() {
            out.push(format!("{}: {} files vs {}", x.manifest.experiment, fx.len(), fy.len()));
            continue;
        }
        for (p, q) in fx.iter().zip(&fy) {
            if p.name != q.name || p.body != q.body {
                out.push(format!("{}/{}", x.manifest.experiment, p.name));
            }
        }
    }
    out
}

/// One summary line per acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionLine {
    pub criterion: u8,
    pub passed: bool,
    pub summary: String,
}

impl fmt::Display for CriterionLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let title = TITLES[usize::from(self.criterion) - 1];
        write!(f, "{status}  criterion {:>2}  {title}: {}", self.criterion, self.summary)
    }
}

fn criterion_line(criterion: u8, checks: &[&CheckOutcome]) -> CriterionLine {
    if checks.is_empty() {
        return CriterionLine { criterion, passed: false, summary: "no checks recorded".into() };
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let shown = checks.iter().find(|c| !c.passed).unwrap_or(&checks[0]);
    CriterionLine {
        criterion,
        passed: passed == checks.len(),
        summary: format!(
            "{passed}/{} checks pass; {} measured {}, threshold {}",
            checks.len(),
            shown.name,
            num(shown.measured),
            num(shown.threshold)
        ),
    }
}

/// Outcome of the whole suite.
pub struct Acceptance {
    pub outputs: Vec<RunOutput>,
    pub lines: Vec<CriterionLine>,
}

impl Acceptance {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    /// Text report, one line per criterion.
    pub fn report(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

/// Runs criteria 1 to 9 on pools of `threads[0]` and `threads[1]` workers
/// and compares every emitted file byte for byte.
pub fn acceptance(seed: u64, threads: [usize; 2]) -> Result<Acceptance, RunError> {
    let first = with_threads(threads[0], || run_suite(seed))?;
    let second = with_threads(threads[1], || run_suite(seed))?;
    let differing = differing_files(&first, &second);
    let file_count: usize = first.iter().map(|o| o.files().len()).sum();

    let all: Vec<&CheckOutcome> = first.iter().flat_map(|o| o.checks.iter()).collect();
    let mut lines: Vec<CriterionLine> = (1..=9u8)
        .map(|c| {
            let picked: Vec<&CheckOutcome> = all.iter().copied().filter(|k| k.criterion == Some(c)).collect();
            criterion_line(c, &picked)
        })
        .collect();
    lines.push(CriterionLine {
        criterion: 10,
        passed: differing.is_empty(),
        summary: if differing.is_empty() {
            format!("{file_count} files identical at {} and {} threads", threads[0], threads[1])
        } else {
            format!("{} of {file_count} files differ: {}", differing.len(), differing.join(", "))
        },
    });
    Ok(Acceptance { outputs: first, lines })
}
