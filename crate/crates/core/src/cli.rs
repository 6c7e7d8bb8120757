//! Command-line front end.
//!
//! Data goes to files (or standard output when `-o` is omitted), messages to
//! standard error. Exit codes: 0 ok, 1 validation errors, 2 usage error,
//! 3 I/O error. `SOCNAV_THREADS` caps the worker pool (0 = automatic).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::ingest::{self, FORMAT_VERSION};
use crate::json::to_canonical_bytes;
use crate::metrics::{compute_all, MetricReport};
use crate::model::{Episode, MetricParams};
use crate::report::{self, CorpusSummary, DEFAULT_BINS};
use crate::scenarios::{self, CardRegistry, ScenarioLabel};
use crate::sim::{self, Policy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const THREADS_ENV: &str = "SOCNAV_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "socnav",
    version,
    about = "Social navigation evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RobotPolicy {
    Sfm,
    StraightLineStop,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check episode, report, summary or scenario card files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compute the metric suite. With several episodes `-o` names a directory.
    Compute {
        #[arg(required = true)]
        episodes: Vec<PathBuf>,
        /// Metric parameter file; absent fields take their defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Resampling interval (s); defaults to the robot's median interval.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        stepwise: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate episodes `{scenario}_{seed}_{i}.json` with variation seed `seed + i`.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum, default_value_t = RobotPolicy::Sfm)]
        robot_policy: RobotPolicy,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Label episodes with scenario windows.
    Classify {
        #[arg(required = true)]
        episodes: Vec<PathBuf>,
        /// Directory of card files replacing the built-in cards.
        #[arg(long)]
        cards: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Aggregate metric reports into distributions.
    Summarize {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tabulate corpus summaries side by side.
    Compare {
        /// `name=summary.json`, once per policy.
        #[arg(long = "label", required = true, value_parser = parse_label)]
        labels: Vec<(String, PathBuf)>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Convert a whitespace-separated trajectory table into an episode.
    Import {
        #[arg(long)]
        tsv: PathBuf,
        /// Frame rate of the table (Hz).
        #[arg(long)]
        hz: f64,
        #[arg(long)]
        robot: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_label(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=FILE, got `{s}`")),
    }
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("standard output: {e}"))),
    }
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn load_episode(path: &Path) -> Result<Episode, Failure> {
    ingest::parse_episode(&read(path)?).map_err(|e| invalid(path, e))
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message());
        return f.code();
    }
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Failure::Usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        // a pool built earlier in this process stays in effect
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Validate { files } => validate(&files),
        Command::Compute {
            episodes,
            params,
            dt,
            stepwise,
            output,
        } => compute(
            &episodes,
            params.as_deref(),
            dt,
            stepwise,
            output.as_deref(),
        ),
        Command::Simulate {
            scenario,
            seed,
            count,
            robot_policy,
            output,
        } => simulate(&scenario, seed, count, robot_policy, &output),
        Command::Classify {
            episodes,
            cards,
            output,
        } => classify(&episodes, cards.as_deref(), output.as_deref()),
        Command::Summarize {
            reports,
            bins,
            output,
        } => summarize(&reports, bins, output.as_deref()),
        Command::Compare { labels, output } => compare(&labels, output.as_deref()),
        Command::Import {
            tsv,
            hz,
            robot,
            output,
        } => import(&tsv, hz, robot.as_deref(), output.as_deref()),
    }
}

/// Issues found in one file, or an I/O failure.
fn check_file(path: &Path) -> Result<Vec<String>, Failure> {
    let bytes = read(path)?;
    let kind = serde_json::from_slice::<Value>(&bytes).ok().and_then(|v| {
        let o = v.as_object()?;
        Some(if o.contains_key("usage_guide") {
            "card"
        } else if o.contains_key("n_reports") {
            "summary"
        } else if o.contains_key("metrics") {
            "report"
        } else {
            "episode"
        })
    });
    let issue = |sev: &str, at: &str, msg: &dyn std::fmt::Display| {
        format!("{}{at}: {sev}: {msg}", path.display())
    };
    Ok(match kind {
        Some("card") => match scenarios::parse_card(&bytes) {
            Ok(card) => card
                .warnings()
                .iter()
                .map(|w| issue("warning", "", w))
                .collect(),
            Err(e) => vec![issue("error", "", &e)],
        },
        Some("summary") => match CorpusSummary::from_bytes(&bytes) {
            Ok(_) => Vec::new(),
            Err(e) => vec![issue("error", "", &e)],
        },
        Some("report") => report::validate_report(&bytes)
            .iter()
            .map(|i| issue("error", &i.path, &i.message))
            .collect(),
        _ => ingest::validate(&bytes)
            .iter()
            .map(|i| {
                issue(
                    if i.is_error() { "error" } else { "warning" },
                    &i.path,
                    &i.message,
                )
            })
            .collect(),
    })
}

fn validate(files: &[PathBuf]) -> Outcome {
    let results: Vec<_> = files.par_iter().map(|p| check_file(p)).collect();
    let mut errors = 0;
    for r in results {
        for line in r? {
            if line.contains(": error: ") {
                errors += 1;
            }
            eprintln!("{line}");
        }
    }
    if errors > 0 {
        return Err(Failure::Validation(format!("{errors} error(s) found")));
    }
    Ok(())
}

fn compute(
    episodes: &[PathBuf],
    params: Option<&Path>,
    dt: Option<f64>,
    stepwise: bool,
    output: Option<&Path>,
) -> Outcome {
    let params = match params {
        None => MetricParams::default(),
        Some(p) => serde_json::from_slice(&read(p)?).map_err(|e| invalid(p, e))?,
    };
    if let Some(field) = params.invalid_field() {
        return Err(Failure::Validation(format!(
            "parameter `{field}` must be positive"
        )));
    }
    if dt.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
        return Err(Failure::Usage("--dt must be positive".into()));
    }
    let many = episodes.len() > 1;
    if many {
        let dir = output
            .ok_or_else(|| Failure::Usage("-o <dir> is required with several episodes".into()))?;
        create_dir(dir)?;
    }
    let reports: Vec<_> = episodes
        .par_iter()
        .map(|path| -> Result<Vec<u8>, Failure> {
            let ep = load_episode(path)?;
            let report = compute_all(&ep, &params, dt, stepwise).map_err(|e| invalid(path, e))?;
            Ok(report.to_bytes())
        })
        .collect();
    for (path, bytes) in episodes.iter().zip(reports) {
        let bytes = bytes?;
        if many {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            let dir = output.expect("checked above");
            write(Some(&dir.join(format!("{stem}.report.json"))), &bytes)?;
        } else {
            write(output, &bytes)?;
        }
    }
    Ok(())
}

fn simulate(scenario: &str, seed: u64, count: u64, policy: RobotPolicy, dir: &Path) -> Outcome {
    if !sim::SCENARIOS.contains(&scenario) {
        return Err(Failure::Usage(format!(
            "unknown scenario `{scenario}`; expected one of {}",
            sim::SCENARIOS.join(", ")
        )));
    }
    create_dir(dir)?;
    let files: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<(String, Vec<u8>), Failure> {
            let name = format!("{scenario}_{seed}_{i}");
            let mut config = sim::generate_scenario(scenario, seed.wrapping_add(i))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            config.episode_id = name.clone();
            config.set_robot_policy(match policy {
                RobotPolicy::Sfm => Policy::Sfm,
                RobotPolicy::StraightLineStop => Policy::StraightLineStop,
            });
            let ep = sim::run(&config).map_err(|e| Failure::Validation(e.to_string()))?;
            Ok((name, ingest::serialize_episode(&ep)))
        })
        .collect();
    for f in files {
        let (name, bytes) = f?;
        write(Some(&dir.join(format!("{name}.json"))), &bytes)?;
    }
    Ok(())
}

fn classify(episodes: &[PathBuf], cards: Option<&Path>, output: Option<&Path>) -> Outcome {
    let registry = match cards {
        None => CardRegistry::builtin(),
        Some(dir) => {
            let (reg, warnings) = CardRegistry::load_dir(dir).map_err(|e| match e {
                scenarios::ScenarioError::Io { .. } if !dir.is_dir() => Failure::Io(e.to_string()),
                e => Failure::Validation(e.to_string()),
            })?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            reg
        }
    };
    let results: Vec<_> = episodes
        .par_iter()
        .map(|path| -> Result<(String, Vec<ScenarioLabel>), Failure> {
            let ep = load_episode(path)?;
            let labels = scenarios::classify(&ep, &registry, None).map_err(|e| invalid(path, e))?;
            Ok((ep.episode_id, labels))
        })
        .collect();
    let mut entries = Vec::new();
    let mut corpus = Vec::new();
    for (path, r) in episodes.iter().zip(results) {
        let (id, labels) = r?;
        entries.push(json!({
            "episode_id": id,
            "file": path.display().to_string(),
            "labels": labels,
        }));
        corpus.push(labels);
    }
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "episodes": entries,
        "coverage": scenarios::coverage_report(&corpus),
    });
    write(output, &to_canonical_bytes(&doc))
}

fn summarize(reports: &[PathBuf], bins: usize, output: Option<&Path>) -> Outcome {
    if bins == 0 {
        return Err(Failure::Usage("--bins must be at least 1".into()));
    }
    let parsed: Vec<_> = reports
        .par_iter()
        .map(|p| MetricReport::from_bytes(&read(p)?).map_err(|e| invalid(p, e)))
        .collect();
    let parsed = parsed.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary =
        report::summarize(&parsed, bins).map_err(|e| Failure::Validation(e.to_string()))?;
    write(output, &summary.to_bytes())
}

fn compare(labels: &[(String, PathBuf)], output: Option<&Path>) -> Outcome {
    let mut summaries = BTreeMap::new();
    for (name, path) in labels {
        let s = CorpusSummary::from_bytes(&read(path)?).map_err(|e| invalid(path, e))?;
        if summaries.insert(name.clone(), s).is_some() {
            return Err(Failure::Usage(format!("label `{name}` given twice")));
        }
    }
    write(output, &report::compare(&summaries).to_bytes())
}

fn import(tsv: &Path, hz: f64, robot: Option<&str>, output: Option<&Path>) -> Outcome {
    if !(hz > 0.0 && hz.is_finite()) {
        return Err(Failure::Usage("--hz must be positive".into()));
    }
    let bytes = read(tsv)?;
    let text = String::from_utf8(bytes).map_err(|e| invalid(tsv, e))?;
    let ep = ingest::import_tsv(&text, hz, robot).map_err(|e| invalid(tsv, e))?;
    write(output, &ingest::serialize_episode(&ep))
}
