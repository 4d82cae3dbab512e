use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polarity::config::{self, ReportFormat};
use polarity::eval::{self, FailureKind};
use polarity::report::{self, RunReport};

/// Sentiment classification experiments over TF-IDF and paragraph-vector features.
#[derive(Debug, Parser)]
#[command(name = "polarity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (dataset, vectorizer, classifier) cell of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Report file; overrides the config. Without one the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<ReportFormat>,
        /// Only run this dataset (repeatable).
        #[arg(long = "dataset")]
        datasets: Vec<String>,
        /// Only run this vectorizer (repeatable).
        #[arg(long = "vectorizer")]
        vectorizers: Vec<String>,
        /// Only run this classifier (repeatable).
        #[arg(long = "classifier")]
        classifiers: Vec<String>,
    },
    /// Merge reports into one CSV row per (dataset, classifier, vectorizer) bar.
    Plotdata {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn open_output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config_path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<ReportFormat>,
    datasets: Vec<String>,
    vectorizers: Vec<String>,
    classifiers: Vec<String>,
) -> ExitCode {
    let cfg = match config::parse_config(&config_path).and_then(|c| c.select(&datasets, &vectorizers, &classifiers)) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, format_args!("{}: {e}", config_path.display())),
    };
    let master_seed = seed.unwrap_or(cfg.seed);
    let out = out.or_else(|| cfg.output.path.clone());
    let format = format.unwrap_or(cfg.output.format);
    let cells = cfg.cells();
    if cells.is_empty() {
        return fail(EXIT_CONFIG, format_args!("{}: no cells to run", config_path.display()));
    }
    log::info!("running {} cells with master seed {master_seed}", cells.len());

    let outcomes = eval::run_grid(&cells, master_seed);
    let table = report::accuracy_table(&outcomes);
    let run = RunReport::new(master_seed, outcomes);

    let written = open_output(out.as_ref()).and_then(|mut w| {
        match format {
            ReportFormat::Csv => report::write_csv(&run, &mut w).map_err(io::Error::other)?,
            ReportFormat::Json => report::write_json(&run, &mut w)?,
        }
        w.flush()
    });
    if let Err(e) = written {
        let target = out.as_ref().map_or("stdout".into(), |p| p.display().to_string());
        return fail(EXIT_RUNTIME, format_args!("{target}: {e}"));
    }
    if out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }

    let failures: Vec<_> = run.cells.iter().filter_map(|c| c.failure().map(|f| (c, f))).collect();
    for (cell, f) in &failures {
        eprintln!("error: {} / {} / {}: {}", cell.dataset, cell.vectorizer, cell.classifier, f.message);
    }
    if failures.iter().any(|(_, f)| f.kind == FailureKind::Data) {
        ExitCode::from(EXIT_DATA)
    } else if !failures.is_empty() {
        ExitCode::from(EXIT_RUNTIME)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_plotdata(reports: Vec<PathBuf>, out: Option<PathBuf>) -> ExitCode {
    let mut all = Vec::new();
    for path in &reports {
        match report::read_report(path) {
            Ok(rows) => all.push(rows),
            Err(e) => return fail(EXIT_DATA, e),
        }
    }
    let (rows, replaced) = report::merge_plot_rows(all);
    for (d, c, v) in replaced {
        log::warn!("duplicate cell {d} / {c} / {v}: keeping the last report's value");
        eprintln!("warning: duplicate cell {d} / {c} / {v}; the later report wins");
    }
    let written = open_output(out.as_ref()).and_then(|mut w| {
        report::write_plot_csv(&rows, &mut w).map_err(io::Error::other)?;
        w.flush()
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_RUNTIME, e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Run { config, seed, out, format, datasets, vectorizers, classifiers } => {
            cmd_run(config, seed, out, format, datasets, vectorizers, classifiers)
        }
        Command::Plotdata { reports, out } => cmd_plotdata(reports, out),
    }
}
