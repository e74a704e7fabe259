//! Offline analysis of arena exports: leaderboards, dialogue statistics,
//! correlations and synthetic battle simulation.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use arena_core::elo::{rate_all, EloConfig};
use arena_core::export::read_jsonl_file;
use arena_core::report::{
    filter_environment, render_correlations, render_stats, Column, EnvironmentStats, ReferenceTable, Report,
    ReportOptions,
};
use arena_core::simulate::SimulationConfig;
use arena_core::stats::{corpus_stats, RoleFilter, TieMethod};
use arena_core::{Environment, ExportRecord};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "analyze", version, about = "Analyze arena exports")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "table")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Leaderboard, dialogue statistics and correlations for an export.
    Report {
        #[arg(long)]
        export: PathBuf,
        #[arg(long)]
        environment: Option<Environment>,
        /// CSV with header `crs_id,value`, e.g. offline recall per CRS.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "average")]
        ties: TieMethod,
    },
    /// Utterance, word and Distinct-2 statistics.
    Stats {
        #[arg(long)]
        export: PathBuf,
        #[arg(long, default_value = "all")]
        role: RoleFilter,
        #[arg(long)]
        environment: Option<Environment>,
    },
    /// Simulates battles between CRSs of known strength.
    Simulate {
        /// JSON: {"strengths": {"id": p, ...}, "n_battles": N, "draw_probability": q}
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Battles are written here as JSON lines.
        #[arg(long)]
        out: PathBuf,
    },
    /// Spearman and Pearson correlation between two per-CRS columns.
    Correlate {
        #[arg(long)]
        export: PathBuf,
        /// Two of elo, satisfaction, reference, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<Column>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        environment: Option<Environment>,
        #[arg(long, default_value = "average")]
        ties: TieMethod,
    },
}

fn load_export(path: &PathBuf) -> Result<Vec<ExportRecord>> {
    read_jsonl_file(path).with_context(|| format!("reading export {}", path.display()))
}

fn load_reference(path: Option<&PathBuf>) -> Result<Option<ReferenceTable>> {
    path.map(|p| ReferenceTable::from_csv_file(p).with_context(|| format!("reading reference {}", p.display())))
        .transpose()
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<String> {
    let format = cli.format;
    match cli.command {
        Command::Report { export, environment, reference, ties } => {
            let records = load_export(&export)?;
            let reference = load_reference(reference.as_ref())?;
            let report = Report::build(&records, reference.as_ref(), ReportOptions { environment, ties })?;
            Ok(match format {
                Format::Json => report.to_json(),
                Format::Table => report.to_table(),
            })
        }
        Command::Stats { export, role, environment } => {
            let records = load_export(&export)?;
            let envs = match environment {
                Some(e) => vec![Some(e)],
                None => vec![None, Some(Environment::Open), Some(Environment::Closed)],
            };
            let stats: Vec<EnvironmentStats> = envs
                .into_iter()
                .map(|env| EnvironmentStats {
                    environment: env.map_or_else(|| "all".to_owned(), |e| e.to_string()),
                    stats: corpus_stats(&filter_environment(&records, env), role),
                })
                .collect();
            Ok(match format {
                Format::Json => pretty(&json!({ "role": role, "stats": stats })),
                Format::Table => format!("Dialogue statistics (role: {role})\n{}", render_stats(&stats)),
            })
        }
        Command::Simulate { config, seed, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let sim: SimulationConfig = serde_json::from_str(&text).context("parsing simulation config")?;
            let battles = sim.run(seed)?;
            let mut file = std::io::BufWriter::new(
                std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?,
            );
            for b in &battles {
                serde_json::to_writer(&mut file, b)?;
                file.write_all(b"\n")?;
            }
            file.flush()?;
            let table = rate_all(&battles, sim.strengths.keys(), &EloConfig::<f64>::default())?;
            let mut rows: Vec<_> = table.ratings.iter().map(|(id, elo)| (table.ranks[id], id, *elo)).collect();
            rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
            Ok(match format {
                Format::Json => pretty(&json!({
                    "seed": seed,
                    "battles": battles.len(),
                    "ratings": rows.iter().map(|(rank, id, elo)| json!({
                        "crs_id": id, "rank": rank, "elo": elo, "strength": sim.strengths[*id],
                    })).collect::<Vec<_>>(),
                })),
                Format::Table => {
                    let mut s = format!("Simulated {} battles (seed {seed})\n", battles.len());
                    let _ = writeln!(s, "{:<5} {:<16} {:>8} {:>9}", "rank", "crs_id", "elo", "strength");
                    for (rank, id, elo) in &rows {
                        let _ = writeln!(s, "{rank:<5} {:<16} {elo:>8.1} {:>9.3}", id.as_str(), sim.strengths[*id]);
                    }
                    s
                }
            })
        }
        Command::Correlate { export, columns, reference, environment, ties } => {
            let [x, y]: [Column; 2] = match columns.try_into() {
                Ok(pair) => pair,
                Err(v) => bail!("--columns needs exactly two names, got {}", v.len()),
            };
            if (x == Column::Reference || y == Column::Reference) && reference.is_none() {
                bail!("the reference column needs --reference");
            }
            let records = load_export(&export)?;
            let reference = load_reference(reference.as_ref())?;
            let report = Report::build(&records, reference.as_ref(), ReportOptions { environment, ties })?;
            let c = report.correlate([x, y], ties);
            Ok(match format {
                Format::Json => pretty(&serde_json::to_value(&c)?),
                Format::Table => render_correlations(&[c]),
            })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
