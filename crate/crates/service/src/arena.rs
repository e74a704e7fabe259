use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};

use arena_core::elo::{into_replay_order, EloConfig, VoteEntry};
use arena_core::export::{sort_records, ExportRecord};
use arena_core::leaderboard;
use arena_core::{CrsDescriptor, CrsId, Environment, Outcome, Sentiment, Side, Timestamp};
use arena_gateway::{CrsRequest, Gateway};
use arena_core::{Role, Utterance};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ArenaConfig;
use crate::error::ArenaError;
use crate::events::{Event, EventLog, LoggedEvent, SideAssignment};
use crate::state::{ArenaState, Phase, SessionState};

/// Reply stored and returned when a CRS backend fails.
pub const FALLBACK_REPLY: &str = "Sorry, I am experiencing technical difficulties. Could you try again?";

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Clone)]
pub struct ArenaOptions {
    /// Seeds matchmaking and side assignment; OS entropy when `None`.
    pub seed: Option<u64>,
    pub clock: Clock,
}

impl Default for ArenaOptions {
    fn default() -> Self {
        Self { seed: None, clock: Arc::new(Timestamp::now) }
    }
}

/// The voter's choice, named by the anonymized labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteChoice {
    Crs1,
    Crs2,
    Draw,
}

impl From<VoteChoice> for Outcome {
    fn from(v: VoteChoice) -> Self {
        match v {
            VoteChoice::Crs1 => Outcome::AWins,
            VoteChoice::Crs2 => Outcome::BWins,
            VoteChoice::Draw => Outcome::Draw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideLabel {
    pub side: Side,
    pub label: String,
}

/// What a participant learns about a new battle: no CRS identities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BattleView {
    pub battle_id: String,
    pub sides: Vec<SideLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub crs_id: CrsId,
    pub display_name: String,
    pub elo: f64,
    pub rank: u32,
    pub satisfaction: Option<f64>,
    pub ended_conversations: usize,
    pub conversation_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardView {
    pub battles_processed: usize,
    pub entries: Vec<LeaderboardRow>,
}

struct Inner {
    state: ArenaState,
    log: EventLog,
}

/// The arena service: owns derived state, the event log and the gateway.
///
/// State changes go through [`Arena::commit`], which checks the transition,
/// persists the event and applies it under one lock, so the log order is
/// the apply order. Operations on one battle are additionally serialized by
/// a per-battle async lock that is held across the CRS call.
pub struct Arena {
    config: ArenaConfig,
    gateway: Gateway,
    clock: Clock,
    inner: Mutex<Inner>,
    battle_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

fn random_id() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

impl Arena {
    /// Opens the arena, replaying the event log at `config.storage_path`.
    pub fn open(config: ArenaConfig, gateway: Gateway, options: ArenaOptions) -> Result<Self, ArenaError> {
        config.validate().map_err(|e| ArenaError::InvalidArgument(e.to_string()))?;
        let registry: Vec<CrsDescriptor> = config.crs.iter().map(|e| e.descriptor()).collect();
        let (log, state) = match &config.storage_path {
            Some(path) => {
                let (log, existing) = EventLog::open(path)?;
                let state = ArenaState::replay(registry, options.seed, &existing)?;
                tracing::info!(events = existing.len(), path = %path.display(), "replayed event log");
                (log, state)
            }
            None => (EventLog::in_memory(), ArenaState::new(registry, options.seed)),
        };
        Ok(Self {
            config,
            gateway,
            clock: options.clock,
            inner: Mutex::new(Inner { state, log }),
            battle_locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ArenaConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn battle_lock(&self, battle_id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.battle_locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(battle_id.to_owned()).or_default().clone()
    }

    fn commit(&self, inner: &mut Inner, event: Event) -> Result<LoggedEvent, ArenaError> {
        inner.state.check(&event)?;
        let logged = inner.log.append((self.clock)(), event)?;
        inner.state.apply(&logged)?;
        Ok(logged)
    }

    pub fn with_state<R>(&self, f: impl FnOnce(&ArenaState) -> R) -> R {
        f(&self.lock().state)
    }

    pub fn snapshot(&self) -> serde_json::Value {
        self.with_state(ArenaState::snapshot)
    }

    /// Events of an in-memory arena; `None` when the log is on disk.
    pub fn memory_events(&self) -> Option<Vec<LoggedEvent>> {
        self.lock().log.memory_events().map(<[LoggedEvent]>::to_vec)
    }

    pub fn create_session(&self) -> Result<SessionState, ArenaError> {
        let mut inner = self.lock();
        let user_id = random_id();
        self.commit(&mut inner, Event::SessionCreated { user_id: user_id.clone() })?;
        inner.state.session(&user_id).cloned()
    }

    pub fn start_battle(&self, user_id: &str) -> Result<BattleView, ArenaError> {
        let mut inner = self.lock();
        let session = inner.state.session(user_id)?;
        if !matches!(session.phase, Phase::Idle | Phase::Done) {
            return Err(ArenaError::State {
                phase: session.phase,
                reason: "a battle is already in progress".into(),
            });
        }
        let matchmaker = inner.state.matchmaker_mut();
        let (x, y) = matchmaker.choose_pair()?;
        let (a, b) = if matchmaker.rng_mut().random_bool(0.5) { (x, y) } else { (y, x) };
        let battle_id = random_id();
        let event = Event::BattleStarted {
            battle_id: battle_id.clone(),
            user_id: user_id.to_owned(),
            environment: self.config.environment,
            side_a: SideAssignment { crs_id: a, conversation_id: random_id() },
            side_b: SideAssignment { crs_id: b, conversation_id: random_id() },
        };
        self.commit(&mut inner, event)?;
        Ok(BattleView {
            battle_id,
            sides: Side::BOTH
                .into_iter()
                .map(|side| SideLabel { side, label: side.label().to_owned() })
                .collect(),
        })
    }

    /// Sends a user message to one side and returns the system reply.
    ///
    /// Backend failures are logged and answered with [`FALLBACK_REPLY`]; the
    /// conversation stays open.
    pub async fn send_message(&self, battle_id: &str, side: Side, text: &str) -> Result<String, ArenaError> {
        if text.trim().is_empty() {
            return Err(ArenaError::InvalidArgument("message text is empty".into()));
        }
        let lock = self.battle_lock(battle_id);
        let _serial = lock.lock().await;

        let user_at = (self.clock)();
        let (crs, timeout, request) = {
            let inner = self.lock();
            let probe = Event::Message {
                battle_id: battle_id.to_owned(),
                side,
                user_text: text.to_owned(),
                user_at,
                reply_text: FALLBACK_REPLY.to_owned(),
                fallback: false,
            };
            inner.state.check(&probe)?;
            let conversation = inner.state.battle(battle_id)?.battle.side(side);
            let crs = inner
                .state
                .registry()
                .get(&conversation.crs_id)
                .cloned()
                .unwrap_or_else(|| CrsDescriptor::new(conversation.crs_id.0.clone(), "unregistered"));
            let timeout = self
                .config
                .entry(&conversation.crs_id)
                .map(|e| e.timeout())
                .unwrap_or(arena_gateway::DEFAULT_TIMEOUT);
            let user = Utterance { role: Role::User, text: text.to_owned(), timestamp: user_at };
            let request = CrsRequest::from_utterances(conversation.utterances.iter().chain([&user]));
            (crs, timeout, request)
        };

        let (reply_text, fallback) = match self.gateway.respond(&crs, &request, timeout).await {
            Ok(r) => {
                tracing::debug!(crs = %crs.crs_id, latency_ms = r.latency_ms, "crs replied");
                (r.response, false)
            }
            Err(e) => {
                tracing::warn!(crs = %crs.crs_id, battle = battle_id, error = %e, "crs failed, sending fallback");
                (FALLBACK_REPLY.to_owned(), true)
            }
        };

        let mut inner = self.lock();
        let event = Event::Message {
            battle_id: battle_id.to_owned(),
            side,
            user_text: text.to_owned(),
            user_at,
            reply_text: reply_text.clone(),
            fallback,
        };
        self.commit(&mut inner, event)?;
        Ok(reply_text)
    }

    /// Seals one side. Returns the session phase afterwards.
    pub async fn end_conversation(&self, battle_id: &str, side: Side, sentiment: Sentiment) -> Result<Phase, ArenaError> {
        let lock = self.battle_lock(battle_id);
        let _serial = lock.lock().await;
        let mut inner = self.lock();
        let event = Event::ConversationEnded { battle_id: battle_id.to_owned(), side, sentiment };
        inner.state.check(&event)?;
        let battle = &inner.state.battle(battle_id)?.battle;
        let turns = battle.side(side).user_turns() as u32;
        if turns < self.config.min_user_turns {
            return Err(ArenaError::MinTurns { required: self.config.min_user_turns, actual: turns });
        }
        let user_id = battle.user_id.clone();
        self.commit(&mut inner, event)?;
        Ok(inner.state.session(&user_id)?.phase)
    }

    pub async fn vote(&self, battle_id: &str, choice: VoteChoice) -> Result<Phase, ArenaError> {
        let lock = self.battle_lock(battle_id);
        let _serial = lock.lock().await;
        let mut inner = self.lock();
        let event = Event::Vote { battle_id: battle_id.to_owned(), outcome: choice.into() };
        self.commit(&mut inner, event)?;
        let user_id = inner.state.battle(battle_id)?.battle.user_id.clone();
        Ok(inner.state.session(&user_id)?.phase)
    }

    pub async fn submit_feedback(&self, battle_id: &str, text: &str) -> Result<(), ArenaError> {
        let lock = self.battle_lock(battle_id);
        let _serial = lock.lock().await;
        let mut inner = self.lock();
        let event = Event::Feedback { battle_id: battle_id.to_owned(), text: text.to_owned() };
        self.commit(&mut inner, event)?;
        Ok(())
    }

    /// Elo recomputed from the whole vote log, replayed by vote time.
    pub fn leaderboard(&self) -> Result<LeaderboardView, ArenaError> {
        let inner = self.lock();
        let state = &inner.state;
        let votes: Vec<VoteEntry> = state
            .voted()
            .map(|e| VoteEntry {
                voted_at: e.voted_at.unwrap_or(e.battle.created_at),
                battle_id: e.battle.battle_id.clone(),
                matchup: arena_core::Matchup {
                    crs_a: e.battle.side_a.crs_id.clone(),
                    crs_b: e.battle.side_b.crs_id.clone(),
                    outcome: e.battle.outcome,
                },
            })
            .collect();
        let mut registry: BTreeSet<CrsId> = state.registry().keys().cloned().collect();
        for entry in state.battles().values() {
            registry.insert(entry.battle.side_a.crs_id.clone());
            registry.insert(entry.battle.side_b.crs_id.clone());
        }
        let board = leaderboard::build(
            &into_replay_order(votes),
            state.sentiments(),
            &registry,
            &EloConfig::<f64>::default(),
        )?;
        let entries = board
            .entries
            .into_iter()
            .map(|e| {
                let descriptor = state.registry().get(&e.crs_id);
                LeaderboardRow {
                    display_name: descriptor.map_or_else(|| e.crs_id.0.clone(), |d| d.display_name.clone()),
                    conversation_count: descriptor.map_or(0, |d| d.conversation_count),
                    crs_id: e.crs_id,
                    elo: e.elo,
                    rank: e.rank,
                    satisfaction: e.satisfaction,
                    ended_conversations: e.ended_conversations,
                }
            })
            .collect();
        Ok(LeaderboardView { battles_processed: board.battles_processed, entries })
    }

    /// Every battle, voted or not, ordered by (created_at, battle_id).
    pub fn export(&self, environment: Option<Environment>) -> Vec<ExportRecord> {
        let inner = self.lock();
        let mut records: Vec<ExportRecord> = inner
            .state
            .battles()
            .values()
            .filter(|e| environment.is_none_or(|env| e.battle.environment == env))
            .map(|e| ExportRecord::from(&e.battle))
            .collect();
        sort_records(&mut records);
        records
    }
}
