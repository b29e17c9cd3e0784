use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rdrsom::problems::maxcut_kkt;
use rdrsom::problems::snl_generate;
use rdrsom_bench::config::BenchConfig;
use rdrsom_bench::gset::parse_gset;
use rdrsom_bench::report::{emit_csv, emit_json, BenchReport};
use rdrsom_bench::{matrix_to_rows, rows_to_matrix, run_batch, run_bench};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rdrsom", version, about = "Subspace cubic-regularized Riemannian solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sensor network localization instance as JSON.
    GenSnl {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured solver on a single seed.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Writes the final point of the first configured solver as JSON rows.
        #[arg(long)]
        point_out: Option<PathBuf>,
    },
    /// Run the full seed by solver batch.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Certify a max-cut point against a Gset graph.
    Kkt {
        #[arg(long)]
        graph: PathBuf,
        /// JSON array of rows.
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status: 1 for bad input, 2 for failed runs or output errors.
enum Failure {
    Config(String),
    Run(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(_) => 2,
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn encode(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Json => emit_json(report),
        Format::Csv => emit_csv(&report.rows),
    }
}

/// Writes to `--out` if given, else to the config's output paths, else stdout.
fn emit_report(report: &BenchReport, out: Option<&Path>, format: Format) -> Result<(), Failure> {
    if out.is_some() || (report.config.output_json.is_none() && report.config.output_csv.is_none()) {
        return write_output(out, &encode(report, format));
    }
    if let Some(p) = &report.config.output_json {
        write_output(Some(p), &emit_json(report))?;
    }
    if let Some(p) = &report.config.output_csv {
        write_output(Some(p), &emit_csv(&report.rows))?;
    }
    Ok(())
}

fn summarize(report: &BenchReport) -> Result<(), Failure> {
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{} {} seed {}: {e}", r.problem, r.solver, r.seed)))
        .collect();
    eprintln!("{} runs, {} failed", report.rows.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(failed.join("\n")))
    }
}

fn load_config(path: &Path) -> Result<BenchConfig, Failure> {
    BenchConfig::load(path).map_err(|e| Failure::Config(e.to_string()))
}

#[derive(Serialize)]
struct KktOutput {
    n: usize,
    r: usize,
    fval: f64,
    resp: f64,
    resd: f64,
    pdgap: f64,
    residue: f64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenSnl { n, seed, out } => {
            let inst = snl_generate(n, seed).map_err(|e| Failure::Config(e.to_string()))?;
            let mut text = serde_json::to_string(&inst).expect("instance serializes");
            text.push('\n');
            write_output(out.as_deref(), &text)
        }
        Command::Solve {
            config,
            seed,
            out,
            format,
            point_out,
        } => {
            let mut config = load_config(&config)?;
            config.seeds = vec![seed.unwrap_or(config.seeds[0])];
            let outputs = run_batch(&config).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(path) = point_out {
                let first = config.solvers[0].name();
                let point = outputs.iter().find(|o| o.row.solver == first).and_then(|o| o.point.as_ref());
                if let Some(x) = point {
                    let text = serde_json::to_string(&matrix_to_rows(x)).expect("point serializes");
                    write_output(Some(&path), &text)?;
                }
            }
            let report = BenchReport::new(&config, outputs.into_iter().map(|o| o.row).collect());
            emit_report(&report, out.as_deref(), format)?;
            summarize(&report)
        }
        Command::Bench { config, out, format } => {
            let config = load_config(&config)?;
            let report = run_bench(&config).map_err(|e| Failure::Config(e.to_string()))?;
            emit_report(&report, out.as_deref(), format)?;
            summarize(&report)
        }
        Command::Kkt { graph, point, out } => {
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())));
            let g = parse_gset(&read(&graph)?).map_err(|e| Failure::Config(e.to_string()))?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&read(&point)?).map_err(|e| Failure::Config(format!("point: {e}")))?;
            let x = rows_to_matrix(&rows).map_err(Failure::Config)?;
            let inst = g.to_instance(Some(x.ncols())).map_err(|e| Failure::Config(e.to_string()))?;
            let kkt = maxcut_kkt(&inst, &x, rdrsom::problems::maxcut::KKT_DENSE_CAP).map_err(|e| Failure::Config(e.to_string()))?;
            let result = KktOutput {
                n: x.nrows(),
                r: x.ncols(),
                fval: rdrsom::Objective::value(&inst, &x),
                resp: kkt.resp,
                resd: kkt.resd,
                pdgap: kkt.pdgap,
                residue: kkt.residue,
            };
            let mut text = serde_json::to_string_pretty(&result).expect("kkt serializes");
            text.push('\n');
            write_output(out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("error: {msg}"),
                Failure::Run(msg) => eprintln!("run failures:\n{msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
