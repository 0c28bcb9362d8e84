//! Scenario-driven command line front end for roughbook.
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration error,
//! 3 runtime error.

pub mod analyze;
pub mod error;
pub mod manifest;
pub mod scaling;
pub mod scenario;
pub mod simulate;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use error::CliError;
use manifest::{sha256_file, Invocation, Manifest, Mutation, OutDir, Stage, MANIFEST_FILE};
use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "roughbook", version, about = "Rough order-book simulation and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

/// Flags shared by the scenario-driven commands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Scenario JSON file
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the scenario
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo replicates (paths per T for scaling-study)
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads; 0 uses all cores
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Run the closed-form verification suite and print NDJSON results
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inject a known fault to confirm the checks catch it
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
    },
    /// Simulate one pipeline stage
    Simulate {
        #[arg(value_enum)]
        stage: Stage,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Convergence diagnostics across scale parameters T
    ScalingStudy {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated ascending T values, overriding the scenario
        #[arg(long, value_delimiter = ',')]
        t_values: Option<Vec<f64>>,
    },
    /// Roughness and depth statistics of tick/depth CSV files
    Analyze {
        #[arg(long)]
        ticks: PathBuf,
        #[arg(long)]
        depth: Option<PathBuf>,
        /// Realized-vol window in seconds (default: span/2048)
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value = "out/analyze")]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest and compare artifacts
    Reproduce {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_scenario(run: &RunArgs) -> Result<Scenario, CliError> {
    let path = run
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("--scenario is required".into()))?;
    let mut sc = Scenario::load(path)?;
    if let Some(s) = run.seed {
        sc.seed = s;
    }
    if let Some(t) = run.threads {
        sc.run.threads = t;
    }
    Ok(sc)
}

fn out_dir(run: &RunArgs, sc: &Scenario, suffix: &str) -> PathBuf {
    run.out.clone().unwrap_or_else(|| {
        sc.run
            .output_dir
            .as_ref()
            .map(PathBuf::from)
            .unwrap_or_else(|| Path::new("out").join(&sc.name))
            .join(suffix)
    })
}

fn print_lines<T: Serialize>(records: &[T]) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for r in records {
        let line = serde_json::to_string(r).map_err(CliError::runtime)?;
        writeln!(lock, "{line}").map_err(|e| CliError::io("stdout", e))?;
    }
    Ok(())
}

/// Runs an invocation into `dir` and writes its manifest.
pub fn execute(inv: &Invocation, dir: &Path, threads: usize, echo: bool) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let mut out = OutDir::create(dir)?;
    let mut failed = 0;
    match inv {
        Invocation::Verify { seed, mutate } => {
            let records = verify::run_checks(*seed, *mutate);
            failed = records.iter().filter(|r| !r.pass).count();
            out.write_json_lines("verify.ndjson", &records)?;
            if echo {
                print_lines(&records)?;
            }
        }
        Invocation::Simulate { stage, scenario } => simulate::run(*stage, scenario, &mut out)?,
        Invocation::ScalingStudy { scenario } => {
            scenario.resolve()?;
            let report = scaling::run_study(scenario)?;
            scaling::write_report(&report, &mut out)?;
            if echo {
                print_lines(&report.rows)?;
                if let Some(t) = &report.trend {
                    print_lines(&[t])?;
                }
            }
        }
        Invocation::Analyze {
            ticks,
            depth,
            window,
            inputs,
            ..
        } => {
            for (path, hash) in inputs {
                if &sha256_file(Path::new(path))? != hash {
                    return Err(CliError::Config(format!("input {path} changed since the manifest was written")));
                }
            }
            let records = analyze::run(ticks, depth.as_deref(), *window, &mut out)?;
            if echo {
                print_lines(&records)?;
            }
        }
    }
    let m = out.finish(inv.clone(), threads, start.elapsed().as_secs_f64())?;
    if failed > 0 {
        return Err(CliError::CheckFailed { failed });
    }
    Ok(m)
}

#[derive(Serialize)]
struct ArtifactCheck<'a> {
    artifact: &'a str,
    expected: &'a str,
    actual: Option<&'a str>,
    identical: bool,
}

fn reproduce(manifest: &Path, dir: &Path) -> Result<(), CliError> {
    let m = Manifest::load(manifest)?;
    let again = match execute(&m.invocation, dir, m.threads, false) {
        Ok(again) => again,
        Err(CliError::CheckFailed { .. }) => Manifest::load(&dir.join(MANIFEST_FILE))?,
        Err(e) => return Err(e),
    };
    let mut failed = 0;
    let mut lines = Vec::new();
    for (name, hash) in &m.artifacts {
        let actual = again.artifacts.get(name).map(String::as_str);
        let identical = actual == Some(hash.as_str());
        if !identical {
            failed += 1;
        }
        lines.push(ArtifactCheck {
            artifact: name,
            expected: hash,
            actual,
            identical,
        });
    }
    for name in again.artifacts.keys().filter(|k| !m.artifacts.contains_key(*k)) {
        failed += 1;
        lines.push(ArtifactCheck {
            artifact: name,
            expected: "",
            actual: again.artifacts.get(name).map(String::as_str),
            identical: false,
        });
    }
    print_lines(&lines)?;
    if failed > 0 {
        return Err(CliError::CheckFailed { failed });
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Commands::Verify { out, seed, mutate } => {
            let inv = Invocation::Verify { seed, mutate };
            match out {
                Some(dir) => execute(&inv, &dir, 1, true).map(|_| ()),
                None => {
                    let records = verify::run_checks(seed, mutate);
                    print_lines(&records)?;
                    let failed = records.iter().filter(|r| !r.pass).count();
                    if failed > 0 {
                        return Err(CliError::CheckFailed { failed });
                    }
                    Ok(())
                }
            }
        }
        Commands::Simulate { stage, run } => {
            let mut sc = load_scenario(&run)?;
            if let Some(r) = run.replicates {
                sc.run.replicates = r;
            }
            sc.resolve()?;
            let dir = out_dir(&run, &sc, &format!("{stage:?}").to_lowercase());
            let threads = sc.run.threads;
            let m = execute(
                &Invocation::Simulate {
                    stage,
                    scenario: Box::new(sc),
                },
                &dir,
                threads,
                true,
            )?;
            println!(
                "wrote {} artifacts to {} in {:.2}s",
                m.artifacts.len(),
                dir.display(),
                m.wall_time_s
            );
            Ok(())
        }
        Commands::ScalingStudy { run, t_values } => {
            let mut sc = load_scenario(&run)?;
            if let Some(r) = run.replicates {
                sc.scaling.paths = r;
            }
            if let Some(t) = t_values {
                sc.scaling.t_values = t;
            }
            sc.resolve()?;
            let dir = out_dir(&run, &sc, "scaling-study");
            let threads = sc.run.threads;
            execute(&Invocation::ScalingStudy { scenario: Box::new(sc) }, &dir, threads, true).map(|_| ())
        }
        Commands::Analyze {
            ticks,
            depth,
            window,
            out,
        } => {
            let abs = |p: &Path| std::fs::canonicalize(p).map_err(|e| CliError::io(p, e));
            let ticks = abs(&ticks)?;
            let depth = depth.as_deref().map(abs).transpose()?;
            let mut inputs = std::collections::BTreeMap::new();
            for p in std::iter::once(&ticks).chain(depth.as_ref()) {
                inputs.insert(p.display().to_string(), sha256_file(p)?);
            }
            let inv = Invocation::Analyze {
                ticks,
                depth,
                window,
                max_lag: roughbook::analytics::DEFAULT_MAX_LAG,
                inputs,
            };
            execute(&inv, &out, 1, true).map(|_| ())
        }
        Commands::Reproduce { manifest, out } => reproduce(&manifest, &out),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
