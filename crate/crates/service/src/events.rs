//! Append-only JSONL event log.
//!
//! Every state change is one line. Derived state is rebuilt by replaying
//! the log from the start; a line is synced to disk before the request that
//! produced it is acknowledged.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use arena_core::{CrsId, Environment, Outcome, Sentiment, Side, Timestamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("event log I/O: {0}")]
    Io(#[from] io::Error),
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideAssignment {
    pub crs_id: CrsId,
    pub conversation_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        user_id: String,
    },
    BattleStarted {
        battle_id: String,
        user_id: String,
        environment: Environment,
        side_a: SideAssignment,
        side_b: SideAssignment,
    },
    /// One user utterance and the system reply to it, logged together so
    /// role alternation survives a crash between the two.
    Message {
        battle_id: String,
        side: Side,
        user_text: String,
        user_at: Timestamp,
        reply_text: String,
        /// The reply is the fallback placeholder after a backend failure.
        #[serde(default)]
        fallback: bool,
    },
    ConversationEnded {
        battle_id: String,
        side: Side,
        sentiment: Sentiment,
    },
    Vote {
        battle_id: String,
        outcome: Outcome,
    },
    Feedback {
        battle_id: String,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug)]
enum Sink {
    Memory(Vec<LoggedEvent>),
    File { file: File, path: PathBuf },
}

#[derive(Debug)]
pub struct EventLog {
    sink: Sink,
    next_seq: u64,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self { sink: Sink::Memory(Vec::new()), next_seq: 1 }
    }

    /// Opens `path` for appending and returns the events already in it.
    ///
    /// A torn final line (no trailing newline, unparsable) is cut off: it was
    /// never acknowledged.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LoggedEvent>), StorageError> {
        let path = path.as_ref().to_path_buf();
        let existing = if path.exists() { read_log(&path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let next_seq = existing.last().map_or(1, |e| e.seq + 1);
        Ok((Self { sink: Sink::File { file, path }, next_seq }, existing))
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.sink {
            Sink::File { path, .. } => Some(path),
            Sink::Memory(_) => None,
        }
    }

    /// Events held by an in-memory log.
    pub fn memory_events(&self) -> Option<&[LoggedEvent]> {
        match &self.sink {
            Sink::Memory(events) => Some(events),
            Sink::File { .. } => None,
        }
    }

    pub fn append(&mut self, at: Timestamp, event: Event) -> Result<LoggedEvent, StorageError> {
        let logged = LoggedEvent { seq: self.next_seq, at, event };
        match &mut self.sink {
            Sink::Memory(events) => events.push(logged.clone()),
            Sink::File { file, .. } => {
                let mut line = serde_json::to_vec(&logged).expect("event serializes");
                line.push(b'\n');
                file.write_all(&line)?;
                file.sync_data()?;
            }
        }
        self.next_seq += 1;
        Ok(logged)
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LoggedEvent>, StorageError> {
    let raw = std::fs::read(path)?;
    let complete = raw.last().is_none_or(|b| *b == b'\n');
    let lines: Vec<&[u8]> = raw.split(|b| *b == b'\n').filter(|l| !l.is_empty()).collect();
    let mut events = Vec::with_capacity(lines.len());
    for (index, line) in lines.iter().enumerate() {
        let last = index + 1 == lines.len();
        match serde_json::from_slice::<LoggedEvent>(line) {
            Ok(e) => events.push(e),
            Err(_) if last && !complete => {
                tracing::warn!(line = index + 1, "dropping torn final event log line");
                let keep = raw.len() - line.len();
                OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
            }
            Err(e) => {
                return Err(StorageError::Corrupt { line: index + 1, message: e.to_string() });
            }
        }
    }
    Ok(events)
}

/// Reads a JSONL log through a reader, without repairing it.
pub fn parse_log<R: BufRead>(input: R) -> Result<Vec<LoggedEvent>, StorageError> {
    let mut events = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|e| StorageError::Corrupt {
            line: index + 1,
            message: e.to_string(),
        })?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vote(id: &str) -> Event {
        Event::Vote { battle_id: id.into(), outcome: Outcome::Draw }
    }

    #[test]
    fn wire_format_is_flat_and_tagged() {
        let logged = LoggedEvent { seq: 3, at: Timestamp(7), event: vote("b") };
        assert_eq!(
            serde_json::to_string(&logged).unwrap(),
            r#"{"seq":3,"at":7,"type":"vote","battle_id":"b","outcome":"draw"}"#
        );
    }

    #[test]
    fn file_log_reopens_with_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, existing) = EventLog::open(&path).unwrap();
        assert!(existing.is_empty());
        log.append(Timestamp(1), vote("a")).unwrap();
        log.append(Timestamp(2), vote("b")).unwrap();
        drop(log);
        let (mut log, existing) = EventLog::open(&path).unwrap();
        assert_eq!(existing.len(), 2);
        assert_eq!(log.append(Timestamp(3), vote("c")).unwrap().seq, 3);
    }

    #[test]
    fn torn_tail_is_dropped_but_mid_corruption_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&LoggedEvent { seq: 1, at: Timestamp(1), event: vote("a") }).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"seq\":2,\"at\"")).unwrap();
        let events = read_log(&path).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{good}\n"));

        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(matches!(read_log(&path), Err(StorageError::Corrupt { line: 1, .. })));
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        let side = prop_oneof![Just(Side::A), Just(Side::B)];
        let text = "[a-zA-Z0-9 .,!?\"'\\\n\u{e9}]{1,40}";
        prop_oneof![
            "[0-9a-f]{8}".prop_map(|user_id| Event::SessionCreated { user_id }),
            ("[0-9a-f]{8}", "[0-9a-f]{8}", any::<bool>()).prop_map(|(b, u, open)| Event::BattleStarted {
                battle_id: b.clone(),
                user_id: u,
                environment: if open { Environment::Open } else { Environment::Closed },
                side_a: SideAssignment { crs_id: CrsId::new("x"), conversation_id: format!("{b}a") },
                side_b: SideAssignment { crs_id: CrsId::new("y"), conversation_id: format!("{b}b") },
            }),
            ("[0-9a-f]{8}", side.clone(), text, any::<i64>(), text, any::<bool>()).prop_map(
                |(battle_id, side, user_text, at, reply_text, fallback)| Event::Message {
                    battle_id,
                    side,
                    user_text,
                    user_at: Timestamp(at),
                    reply_text,
                    fallback,
                }
            ),
            ("[0-9a-f]{8}", side, any::<bool>()).prop_map(|(battle_id, side, happy)| Event::ConversationEnded {
                battle_id,
                side,
                sentiment: if happy { Sentiment::Satisfaction } else { Sentiment::Frustration },
            }),
            ("[0-9a-f]{8}", 0..3usize).prop_map(|(battle_id, o)| Event::Vote {
                battle_id,
                outcome: [Outcome::AWins, Outcome::BWins, Outcome::Draw][o],
            }),
            ("[0-9a-f]{8}", text).prop_map(|(battle_id, text)| Event::Feedback { battle_id, text }),
        ]
    }

    proptest! {
        #[test]
        fn log_lines_round_trip(events in prop::collection::vec(arb_event(), 0..20)) {
            let mut log = EventLog::in_memory();
            for (i, e) in events.into_iter().enumerate() {
                log.append(Timestamp(i as i64), e).unwrap();
            }
            let logged = log.memory_events().unwrap();
            let mut text = String::new();
            for e in logged {
                let line = serde_json::to_string(e).unwrap();
                prop_assert!(!line.contains('\n'));
                text.push_str(&line);
                text.push('\n');
            }
            prop_assert_eq!(parse_log(text.as_bytes()).unwrap(), logged.to_vec());
        }
    }
}
