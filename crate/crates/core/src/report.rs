//! Leaderboard, corpus statistics and correlations over an export file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CrsId, Environment};
use crate::elo::{EloConfig, EloError};
use crate::export::{ExportError, ExportRecord};
use crate::leaderboard::{self, Leaderboard};
use crate::stats::{corpus_stats, pearson, spearman_with, CorpusStats, RoleFilter, TieMethod};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("reference table line {line}: {message}")]
    Reference { line: usize, message: String },
    #[error(transparent)]
    Elo(#[from] EloError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// External per-CRS metric, e.g. recall@10, read from a `crs_id,value` CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable(pub BTreeMap<CrsId, f64>);

impl ReferenceTable {
    pub fn from_csv<R: Read>(input: R) -> Result<Self, ReportError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header_ok = reader
            .headers()
            .map(|h| h.len() == 2 && &h[0] == "crs_id" && &h[1] == "value")
            .unwrap_or(false);
        if !header_ok {
            return Err(ReportError::Reference {
                line: 1,
                message: "header must be `crs_id,value`".into(),
            });
        }
        let mut values = BTreeMap::new();
        for row in reader.records() {
            let row = row.map_err(|e| ReportError::Reference {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let value: f64 = row[1].parse().map_err(|_| ReportError::Reference {
                line,
                message: format!("{:?} is not a number", &row[1]),
            })?;
            values.insert(CrsId::new(&row[0]), value);
        }
        Ok(Self(values))
    }

    pub fn from_csv_file(path: impl AsRef<std::path::Path>) -> Result<Self, ReportError> {
        let file = std::fs::File::open(path).map_err(ExportError::Io)?;
        Self::from_csv(file)
    }
}

/// A per-CRS column that can be correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Elo,
    Satisfaction,
    Reference,
}

impl std::str::FromStr for Column {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "elo" => Ok(Column::Elo),
            "satisfaction" => Ok(Column::Satisfaction),
            "reference" => Ok(Column::Reference),
            other => Err(ReportError::InvalidArgument(format!("unknown column {other:?}"))),
        }
    }
}

impl Column {
    fn name(self) -> &'static str {
        match self {
            Column::Elo => "elo",
            Column::Satisfaction => "satisfaction",
            Column::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub columns: [Column; 2],
    pub n: usize,
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
}

/// Computes both coefficients over the CRSs present in both columns,
/// iterated in crs_id order.
pub fn correlate(
    x: &BTreeMap<CrsId, f64>,
    y: &BTreeMap<CrsId, f64>,
    columns: [Column; 2],
    ties: TieMethod,
) -> Correlation {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .filter_map(|(id, a)| y.get(id).map(|b| (*a, *b)))
        .unzip();
    Correlation {
        columns,
        n: xs.len(),
        spearman: spearman_with(&xs, &ys, ties).ok(),
        pearson: pearson(&xs, &ys).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStats {
    pub environment: String,
    #[serde(flatten)]
    pub stats: CorpusStats<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub crs_id: CrsId,
    pub elo: f64,
    pub rank: u32,
    pub satisfaction: Option<f64>,
    pub ended_conversations: usize,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environment: String,
    pub ties: TieMethod,
    pub n_records: usize,
    pub battles_processed: usize,
    pub leaderboard: Vec<ReportRow>,
    pub stats: Vec<EnvironmentStats>,
    pub correlations: Vec<Correlation>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub environment: Option<Environment>,
    pub ties: TieMethod,
}

fn environment_name(env: Option<Environment>) -> String {
    env.map_or_else(|| "all".to_owned(), |e| e.to_string())
}

pub fn filter_environment(records: &[ExportRecord], env: Option<Environment>) -> Vec<ExportRecord> {
    records
        .iter()
        .filter(|r| env.is_none_or(|e| r.environment == e))
        .cloned()
        .collect()
}

/// Table-style statistics: word counts over all utterances, Distinct-2
/// over system responses.
pub fn dialogue_stats(records: &[ExportRecord]) -> CorpusStats<f64> {
    let all: CorpusStats<f64> = corpus_stats(records, RoleFilter::All);
    let system: CorpusStats<f64> = corpus_stats(records, RoleFilter::System);
    CorpusStats { distinct2: system.distinct2, ..all }
}

impl Report {
    pub fn build(
        records: &[ExportRecord],
        reference: Option<&ReferenceTable>,
        options: ReportOptions,
    ) -> Result<Self, ReportError> {
        let selected = filter_environment(records, options.environment);
        let board: Leaderboard<f64> = leaderboard::from_records(&selected, &EloConfig::default())?;
        let leaderboard = board
            .entries
            .iter()
            .map(|e| ReportRow {
                crs_id: e.crs_id.clone(),
                elo: e.elo,
                rank: e.rank,
                satisfaction: e.satisfaction,
                ended_conversations: e.ended_conversations,
                reference: reference.and_then(|r| r.0.get(&e.crs_id).copied()),
            })
            .collect();

        let envs: Vec<Option<Environment>> = match options.environment {
            Some(e) => vec![Some(e)],
            None => vec![None, Some(Environment::Open), Some(Environment::Closed)],
        };
        let stats = envs
            .into_iter()
            .map(|env| EnvironmentStats {
                environment: environment_name(env),
                stats: dialogue_stats(&filter_environment(&selected, env)),
            })
            .collect();

        let mut report = Report {
            environment: environment_name(options.environment),
            ties: options.ties,
            n_records: selected.len(),
            battles_processed: board.battles_processed,
            leaderboard,
            stats,
            correlations: Vec::new(),
        };
        let mut pairs = vec![[Column::Elo, Column::Satisfaction]];
        if reference.is_some() {
            pairs.push([Column::Elo, Column::Reference]);
            pairs.push([Column::Satisfaction, Column::Reference]);
        }
        report.correlations = pairs
            .into_iter()
            .map(|cols| report.correlate(cols, options.ties))
            .filter(|c| c.n >= 2)
            .collect();
        Ok(report)
    }

    pub fn column(&self, column: Column) -> BTreeMap<CrsId, f64> {
        self.leaderboard
            .iter()
            .filter_map(|row| {
                let value = match column {
                    Column::Elo => Some(row.elo),
                    Column::Satisfaction => row.satisfaction,
                    Column::Reference => row.reference,
                };
                value.map(|v| (row.crs_id.clone(), v))
            })
            .collect()
    }

    pub fn correlate(&self, columns: [Column; 2], ties: TieMethod) -> Correlation {
        correlate(&self.column(columns[0]), &self.column(columns[1]), columns, ties)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Leaderboard (environment: {}, records: {}, votes: {})",
            self.environment, self.n_records, self.battles_processed
        );
        out.push_str(&render_leaderboard(&self.leaderboard));
        out.push('\n');
        out.push_str("Dialogue statistics\n");
        out.push_str(&render_stats(&self.stats));
        out.push('\n');
        let _ = writeln!(out, "Correlations (ties: {})", tie_name(self.ties));
        out.push_str(&render_correlations(&self.correlations));
        out
    }
}

fn tie_name(t: TieMethod) -> &'static str {
    match t {
        TieMethod::Average => "average",
        TieMethod::Ordinal => "ordinal",
    }
}

fn opt(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "-".to_owned(), |v| format!("{v:.decimals$}"))
}

pub fn render_leaderboard(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.crs_id.as_str().len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<5} {:<width$} {:>8} {:>6} {:>6} {:>9}", "rank", "crs_id", "elo", "sat%", "ended", "reference");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<5} {:<width$} {:>8.1} {:>6} {:>6} {:>9}",
            r.rank,
            r.crs_id.as_str(),
            r.elo,
            opt(r.satisfaction, 1),
            r.ended_conversations,
            opt(r.reference, 3),
        );
    }
    out
}

pub fn render_stats(stats: &[EnvironmentStats]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>9} {:>6} {:>13} {:>10} {:>10}",
        "environment", "dialogues", "votes", "utt/dialogue", "words/utt", "distinct-2"
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>6} {:>13.2} {:>10.2} {:>10.3}",
            s.environment,
            s.stats.n_dialogues,
            s.stats.n_votes,
            s.stats.utterances_per_dialogue,
            s.stats.words_per_utterance,
            s.stats.distinct2,
        );
    }
    out
}

pub fn render_correlations(correlations: &[Correlation]) -> String {
    let mut out = String::new();
    if correlations.is_empty() {
        out.push_str("(none)\n");
        return out;
    }
    let _ = writeln!(out, "{:<24} {:>3} {:>9} {:>9}", "columns", "n", "spearman", "pearson");
    for c in correlations {
        let name = format!("{}~{}", c.columns[0].name(), c.columns[1].name());
        let _ = writeln!(out, "{:<24} {:>3} {:>9} {:>9}", name, c.n, opt(c.spearman, 3), opt(c.pearson, 3));
    }
    out
}
