//! JSONL dataset records: one battle per line.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Battle, Conversation, CrsId, Environment, Outcome, Sentiment, Side, Timestamp, Utterance};
use crate::elo::Matchup;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("storage error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Format {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// One dialogue of an exported battle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportSide {
    pub crs_id: CrsId,
    pub sentiment: Sentiment,
    pub utterances: Vec<Utterance>,
}

impl From<&Conversation> for ExportSide {
    fn from(c: &Conversation) -> Self {
        Self {
            crs_id: c.crs_id.clone(),
            sentiment: c.sentiment,
            utterances: c.utterances.clone(),
        }
    }
}

/// A battle flattened for publication. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub battle_id: String,
    pub user_id: String,
    pub environment: Environment,
    pub created_at: Timestamp,
    pub outcome: Outcome,
    pub feedback_text: Option<String>,
    pub side_a: ExportSide,
    pub side_b: ExportSide,
}

impl From<&Battle> for ExportRecord {
    fn from(b: &Battle) -> Self {
        Self {
            battle_id: b.battle_id.clone(),
            user_id: b.user_id.clone(),
            environment: b.environment,
            created_at: b.created_at,
            outcome: b.outcome,
            feedback_text: b.feedback_text.clone(),
            side_a: ExportSide::from(&b.side_a),
            side_b: ExportSide::from(&b.side_b),
        }
    }
}

impl ExportRecord {
    pub fn side(&self, side: Side) -> &ExportSide {
        match side {
            Side::A => &self.side_a,
            Side::B => &self.side_b,
        }
    }

    pub fn sides(&self) -> [&ExportSide; 2] {
        [&self.side_a, &self.side_b]
    }

    pub fn matchup(&self) -> Matchup {
        Matchup {
            crs_a: self.side_a.crs_id.clone(),
            crs_b: self.side_b.crs_id.clone(),
            outcome: self.outcome,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("export record serializes")
    }
}

/// Canonical export order: creation time, then battle id.
pub fn sort_records(records: &mut [ExportRecord]) {
    records.sort_by(|x, y| (x.created_at, &x.battle_id).cmp(&(y.created_at, &y.battle_id)));
}

pub fn write_jsonl<'a, W: Write>(
    records: impl IntoIterator<Item = &'a ExportRecord>,
    mut out: W,
) -> io::Result<()> {
    for record in records {
        out.write_all(record.to_json_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl_string<'a>(records: impl IntoIterator<Item = &'a ExportRecord>) -> String {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Parses JSONL; blank lines are skipped, line numbers in errors are 1-based.
pub fn parse_jsonl<R: BufRead>(input: R) -> Result<Vec<ExportRecord>, ExportError> {
    let mut records = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|source| ExportError::Format { line: index + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_jsonl_file(path: impl AsRef<std::path::Path>) -> Result<Vec<ExportRecord>, ExportError> {
    let file = std::fs::File::open(path)?;
    parse_jsonl(io::BufReader::new(file))
}
