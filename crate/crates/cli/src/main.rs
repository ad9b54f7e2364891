use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sheetrisk::config::{load_config, PipelineConfig, ReportFormat};
use sheetrisk::discovery::ScanRoot;
use sheetrisk::inventory::{self, DiffReport, InventorySnapshot};
use sheetrisk::pipeline::{run_pipeline, run_scan, ExitStatus};
use sheetrisk::report::{render_reports, ReportBundle};
use sheetrisk::Error;

#[derive(Parser, Debug)]
#[command(name = "sheetrisk", version, about = "Find spreadsheets, score their risk and track them across scans")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Report directory; overrides the configuration.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Also admit files modified since the last recorded scan.
    #[arg(long, global = true)]
    since_last_scan: bool,

    /// Report formats to write (csv, structured); repeatable.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Vec<ReportFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discovery only: list every spreadsheet found.
    Scan {
        /// Roots to scan when no configuration file is given.
        roots: Vec<PathBuf>,
    },
    /// Full pipeline: discover, assess, snapshot, diff and report.
    Assess { roots: Vec<PathBuf> },
    /// Re-render reports from a stored snapshot (default: the latest).
    Report { snapshot: Option<PathBuf> },
    /// Compare two snapshot files and print the difference as JSON.
    Diff { previous: PathBuf, current: PathBuf },
    /// Print the feeder edge list of a snapshot (default: the latest).
    Graph { snapshot: Option<PathBuf> },
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::parse(s).ok_or_else(|| format!("unknown format {s:?}; expected csv or structured"))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are top-level failures; exit 2 means violations.
            return if e.use_stderr() { ExitCode::from(ExitStatus::Errors.code() as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            let fields = match &e {
                Error::ConfigInvalid(errs) => serde_json::to_value(errs).unwrap_or_default(),
                _ => serde_json::Value::Array(Vec::new()),
            };
            let report = serde_json::json!({ "error": e.code(), "message": e.to_string(), "fields": fields });
            eprintln!("{report}");
            ExitCode::from(ExitStatus::Errors.code() as u8)
        }
    }
}

fn config(cli: &Cli, roots: &[PathBuf]) -> sheetrisk::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let mut c = load_config(path)?;
            if !roots.is_empty() {
                c.roots = roots.iter().map(|r| ScanRoot::new(absolute(r))).collect();
            }
            c
        }
        None => {
            let out = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("sheetrisk-out"));
            PipelineConfig::new(roots.iter().map(|r| ScanRoot::new(absolute(r))).collect(), absolute(&out))
        }
    };
    if let Some(out) = &cli.out_dir {
        let out = absolute(out);
        if cli.config.is_some() && config.catalog_dir == config.output_dir.join("catalog") {
            config.catalog_dir = out.join("catalog");
        }
        config.output_dir = out;
    }
    if cli.since_last_scan {
        config.filter.since_last_scan = true;
    }
    if !cli.format.is_empty() {
        config.report_formats = cli.format.iter().copied().collect();
    }
    Ok(config)
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// The requested snapshot, or the latest, with the one finished before it.
fn pick_snapshot(catalog: &Path, explicit: Option<&Path>) -> sheetrisk::Result<(InventorySnapshot, Option<InventorySnapshot>)> {
    let all = inventory::list_snapshots(catalog);
    let current = match explicit.or(all.last().map(|(p, _)| p.as_path())) {
        Some(p) => inventory::load_snapshot(p)?,
        None => {
            let source = io::Error::new(io::ErrorKind::NotFound, "no snapshot in catalog");
            return Err(Error::Io { path: catalog.to_path_buf(), source });
        }
    };
    let name = current.file_name();
    let previous = all
        .iter()
        .rev()
        .find(|(p, t)| *t <= current.finished_at && p.file_name().is_none_or(|n| *n != *name))
        .map(|(p, _)| inventory::load_snapshot(p))
        .transpose()?;
    Ok((current, previous))
}

fn run(cli: &Cli) -> sheetrisk::Result<ExitStatus> {
    let mut stdout = io::stdout().lock();
    let out = |e: io::Error| Error::Io { path: PathBuf::from("<stdout>"), source: e };
    match &cli.command {
        Command::Scan { roots } => {
            let discovery = run_scan(&config(cli, roots)?)?;
            for r in &discovery.records {
                writeln!(stdout, "{}\t{}\t{}\t{}", r.kind, r.extension_mismatch, r.content_hash, r.display_path()).map_err(out)?;
            }
            for e in &discovery.errors {
                eprintln!("warning: {e}");
            }
            Ok(ExitStatus::Clean)
        }
        Command::Assess { roots } => {
            let outcome = run_pipeline(&config(cli, roots)?)?;
            let s = &outcome.bundle.summary;
            writeln!(
                stdout,
                "{} records: {} high, {} medium, {} low; {} errors; {} newly high-risk; snapshot {}",
                s.record_total,
                s.by_risk.get("HIGH").unwrap_or(&0),
                s.by_risk.get("MEDIUM").unwrap_or(&0),
                s.by_risk.get("LOW").unwrap_or(&0),
                s.error_total,
                s.diff.newly_high_risk,
                outcome.snapshot_path.display()
            )
            .map_err(out)?;
            Ok(outcome.status)
        }
        Command::Report { snapshot } => {
            let settings = config(cli, &[])?;
            let (current, previous) = pick_snapshot(&settings.catalog_dir, snapshot.as_deref())?;
            let empty = InventorySnapshot::new("", current.started_at, current.started_at);
            let diff = inventory::diff(previous.as_ref().unwrap_or(&empty), &current);
            for p in render_reports(&current, &diff, &settings.report_formats, &settings.output_dir)? {
                writeln!(stdout, "{}", p.display()).map_err(out)?;
            }
            Ok(ExitStatus::for_diff(&diff))
        }
        Command::Diff { previous, current } => {
            let diff: DiffReport = inventory::diff(&inventory::load_snapshot(previous)?, &inventory::load_snapshot(current)?);
            let text = serde_json::to_string_pretty(&diff).expect("serializable");
            writeln!(stdout, "{text}").map_err(out)?;
            Ok(ExitStatus::for_diff(&diff))
        }
        Command::Graph { snapshot } => {
            let (current, _) = pick_snapshot(&config(cli, &[])?.catalog_dir, snapshot.as_deref())?;
            let bundle = ReportBundle::build(&current, &DiffReport::default());
            stdout.write_all(bundle.graph.edge_list().as_bytes()).map_err(out)?;
            Ok(ExitStatus::Clean)
        }
    }
}
