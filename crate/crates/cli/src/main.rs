use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ulr_ident::iid::{tau_table, tau_table_text};
use ulr_ident::oracle::{verify_candidate, verify_joint};
use ulr_ident::report::Command as ReportCommand;
use ulr_ident::{
    analyze_task, render_text, tau_report, ConfigFile, IdentError, ReportDocument, Task,
};

/// Identifiability analysis for unlinked linear regression.
#[derive(Parser)]
#[command(name = "ulr-ident", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    #[value(alias = "structured")]
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the solution set of a problem described by a JSON config.
    Analyze {
        config: PathBuf,
        /// Samples per side for oracle spot checks.
        #[arg(long)]
        oracle_n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the oracle spot checks.
        #[arg(long)]
        no_oracle: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zeros of tau(x) = sum |a|^(2x) - sum |b|^(2x) and the Linnik conditions.
    Tau {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        a: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        b: Vec<f64>,
        /// Write `x<TAB>tau` rows on an equispaced grid of [0, x-max].
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 4.0)]
        x_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Test whether a candidate gives the same law as beta0 (or B0).
    Verify {
        config: PathBuf,
        /// Comma-separated vector; matrix rows are separated by ';'.
        #[arg(long, allow_hyphen_values = true)]
        candidate: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<IdentError> for Failure {
    fn from(e: IdentError) -> Self {
        if e.is_numeric_failure() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn load(path: &Path) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    ConfigFile::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn resolve_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::random(), true),
    }
}

fn emit(doc: &ReportDocument, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let text = match format {
        Format::Text => render_text(doc),
        Format::Json => doc.to_json() + "\n",
    };
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::Analyze {
            config,
            oracle_n,
            seed,
            no_oracle,
            format,
            out,
        } => {
            let cfg = load(&config)?;
            let task = cfg.task()?;
            let (seed, generated) = resolve_seed(seed);
            let mut oracle = cfg.oracle.unwrap_or_default().with_seed(seed);
            if let Some(n) = oracle_n {
                oracle = oracle.with_n(n);
            }
            let mut doc = analyze_task(&task, (!no_oracle).then_some(&oracle))?;
            if !no_oracle {
                doc.seed_generated = generated;
            }
            emit(&doc, format, out.as_deref())
        }
        Cmd::Tau {
            a,
            b,
            table,
            x_max,
            points,
            format,
        } => {
            let doc = tau_report(&a, &b)?;
            if let Some(path) = table {
                let rows = tau_table(&a, &b, x_max, points)?;
                std::fs::write(&path, tau_table_text(&a, &b, &rows))
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            }
            emit(&doc, format, None)
        }
        Cmd::Verify {
            config,
            candidate,
            n,
            seed,
            format,
            out,
        } => {
            let cfg = load(&config)?;
            let task = cfg.task()?;
            let (seed, generated) = resolve_seed(seed);
            let mut oracle = cfg.oracle.unwrap_or_default().with_seed(seed);
            if let Some(n) = n {
                oracle = oracle.with_n(n);
            }
            let record = match &task {
                Task::Regression(p) => verify_candidate(p, &parse_list(&candidate)?, &oracle)?,
                Task::Mixing(m) => {
                    let rows: Vec<Vec<f64>> = candidate
                        .split(';')
                        .map(parse_list)
                        .collect::<Result<_, _>>()?;
                    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
                    if rows.iter().any(|row| row.len() != c) {
                        return Err(Failure::Usage("candidate rows differ in length".into()));
                    }
                    let mat = nalgebra::DMatrix::from_fn(r, c, |i, j| rows[i][j]);
                    verify_joint(m, &mat, &oracle)?
                }
            };
            let mut doc = ReportDocument::new(ReportCommand::Verify);
            doc.seed = Some(seed);
            doc.seed_generated = generated;
            doc.oracle_records.push(record);
            emit(&doc, format, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
