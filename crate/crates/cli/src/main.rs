use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use tfa_core::config::{Config, Kind};
use tfa_core::experiment::{run, Outcome};
use tfa_core::Error;

/// Runs one experiment suite and writes its artifacts.
#[derive(Debug, Parser)]
#[command(name = "tfa", version)]
struct Cli {
    /// rf-baseline, model-oracle, column-suite, energy-suite,
    /// decompose-suite, split-suite, probe-sweep, counterexample or bochner
    kind: String,
    /// Plain-text `key = value` configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed given in the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "tfa-out")]
    out: PathBuf,
    /// Records the wall time in summary.json (breaks byte-identical reruns)
    #[arg(long)]
    timing: bool,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("tfa: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("TFA_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("TFA_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("TFA_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn load(cli: &Cli) -> Result<Config, String> {
    let kind: Kind = cli.kind.parse().map_err(|e: Error| e.to_string())?;
    let text = fs::read_to_string(&cli.config).map_err(|e| format!("cannot read {}: {e}", cli.config.display()))?;
    let base = cli.config.parent().unwrap_or(Path::new("."));
    let mut cfg = Config::parse(kind, &text, base).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string()).map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn write_outcome(dir: &Path, outcome: &Outcome, wall_time: Option<f64>) -> std::io::Result<()> {
    for a in &outcome.artifacts {
        write_atomic(dir, &a.name, &a.contents)?;
    }
    write_atomic(dir, "summary.json", &outcome.summary_json(wall_time))?;
    if !outcome.passed() {
        write_atomic(dir, "failures.json", &outcome.failures_json())?;
    } else if dir.join("failures.json").exists() {
        fs::remove_file(dir.join("failures.json"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return usage(e);
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    if let Err(e) = fs::create_dir_all(&cli.out) {
        return usage(format!("cannot create {}: {e}", cli.out.display()));
    }
    let start = Instant::now();
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e @ Error::Parse { .. }) => return usage(format!("{}: {e}", cli.config.display())),
        Err(e) => {
            eprintln!("tfa: {} aborted: {e}", cfg.kind);
            let body = serde_json::json!([{ "name": "error", "passed": false, "detail": e.to_string() }]);
            let text = serde_json::to_string_pretty(&body).expect("json") + "\n";
            if let Err(w) = write_atomic(&cli.out, "failures.json", &text) {
                eprintln!("tfa: cannot write failures.json: {w}");
            }
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let wall = cli.timing.then(|| start.elapsed().as_secs_f64());
    if let Err(e) = write_outcome(&cli.out, &outcome, wall) {
        eprintln!("tfa: cannot write outputs: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    for c in &outcome.checks {
        println!("{} {} value={} limit={}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
