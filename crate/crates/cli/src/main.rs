use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclap_cli::checks::acceptance;
use fraclap_cli::config::Config;
use fraclap_cli::output::RunOutput;
use fraclap_cli::recipes::{run_recipe, RunError, RECIPES};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Fractional Laplacian experiments with Dirichlet exterior data")]
struct Cli {
    /// Worker threads for the parallel kernels
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the recipe names, one per line
    List {
        /// Print a JSON array instead
        #[arg(long)]
        json: bool,
    },
    /// Run the experiment named in a configuration file
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Output directory [default: out/<experiment>]
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Exit with status 4 when a check fails
        #[arg(long)]
        check: bool,
    },
    /// Run the acceptance suite at 1 and 8 threads
    Check {
        #[arg(long, value_name = "DIR", default_value = "out/acceptance")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn list(json: bool) {
    if json {
        println!("{}", serde_json::to_string(&RECIPES).expect("names serialize"));
    } else {
        for name in RECIPES {
            println!("{name}");
        }
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("fraclap: {message}");
    ExitCode::from(code)
}

fn run_error(e: RunError) -> ExitCode {
    match e {
        RunError::Config(e) => fail(EXIT_CONFIG, e),
        RunError::Numerical(e) => fail(EXIT_NUMERICAL, e),
    }
}

fn write(output: &RunOutput, dir: &Path) -> Result<(), ExitCode> {
    output
        .write_to(dir)
        .map_err(|e| fail(EXIT_IO, format!("cannot write {}: {e}", dir.display())))
}

fn run(config_path: &Path, out: Option<PathBuf>, check: bool) -> ExitCode {
    let config = match Config::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let output = match run_recipe(&config) {
        Ok(o) => o,
        Err(e) => return run_error(e),
    };
    let dir = out.unwrap_or_else(|| Path::new("out").join(&config.experiment));
    if let Err(code) = write(&output, &dir) {
        return code;
    }
    for c in &output.checks {
        println!("{c}");
    }
    println!("wrote {} files to {}", output.files().len(), dir.display());
    if check && !output.passed() {
        return fail(EXIT_CHECK, "checks failed");
    }
    ExitCode::SUCCESS
}

fn check(out: &Path, seed: u64) -> ExitCode {
    let result = match acceptance(seed, [1, 8]) {
        Ok(r) => r,
        Err(e) => return run_error(e),
    };
    for output in &result.outputs {
        if let Err(code) = write(output, &out.join(&output.manifest.experiment)) {
            return code;
        }
    }
    let report = result.report();
    if let Err(e) = std::fs::write(out.join("acceptance.txt"), &report) {
        return fail(EXIT_IO, format!("cannot write {}: {e}", out.display()));
    }
    print!("{report}");
    if result.passed() {
        ExitCode::SUCCESS
    } else {
        fail(EXIT_CHECK, "acceptance criteria failed")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fail(EXIT_CONFIG, format!("cannot start {k} threads: {e}"));
        }
    }
    match cli.command {
        None | Some(Command::List { json: false }) => {
            list(false);
            ExitCode::SUCCESS
        }
        Some(Command::List { json: true }) => {
            list(true);
            ExitCode::SUCCESS
        }
        Some(Command::Run { config, out, check: c }) => run(&config, out, c),
        Some(Command::Check { out, seed }) => check(&out, seed),
    }
}
