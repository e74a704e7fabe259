//! Derived arena state and the battle state machine.
//!
//! State is only ever changed by applying a logged [`Event`]; the live
//! service and a log replay run the same code, so they cannot diverge.

use std::collections::BTreeMap;
use std::fmt;

use arena_core::{
    Battle, Conversation, CrsDescriptor, CrsId, Matchmaker, Outcome, Role, Sentiment, Side, Timestamp,
    Utterance,
};
use serde::{Deserialize, Serialize};

use crate::error::ArenaError;
use crate::events::{Event, LoggedEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Battling,
    Voting,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Idle => "idle",
            Phase::Battling => "battling",
            Phase::Voting => "voting",
            Phase::Done => "done",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub user_id: String,
    pub current_battle: Option<String>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BattleEntry {
    pub battle: Battle,
    pub voted_at: Option<Timestamp>,
}

#[derive(Debug, Clone)]
pub struct ArenaState {
    registry: BTreeMap<CrsId, CrsDescriptor>,
    sessions: BTreeMap<String, SessionState>,
    battles: BTreeMap<String, BattleEntry>,
    matchmaker: Matchmaker,
}

impl ArenaState {
    pub fn new(registry: impl IntoIterator<Item = CrsDescriptor>, seed: Option<u64>) -> Self {
        let registry: BTreeMap<CrsId, CrsDescriptor> =
            registry.into_iter().map(|d| (d.crs_id.clone(), d)).collect();
        let counts = registry.keys().map(|id| (id.clone(), 0)).collect();
        Self {
            registry,
            sessions: BTreeMap::new(),
            battles: BTreeMap::new(),
            matchmaker: Matchmaker::with_counts(counts, seed),
        }
    }

    /// Rebuilds state from a log.
    pub fn replay<'a>(
        registry: impl IntoIterator<Item = CrsDescriptor>,
        seed: Option<u64>,
        events: impl IntoIterator<Item = &'a LoggedEvent>,
    ) -> Result<Self, ArenaError> {
        let mut state = Self::new(registry, seed);
        for logged in events {
            state.apply(logged).map_err(|e| ArenaError::Replay { seq: logged.seq, reason: e.to_string() })?;
        }
        Ok(state)
    }

    pub fn registry(&self) -> &BTreeMap<CrsId, CrsDescriptor> {
        &self.registry
    }

    pub fn sessions(&self) -> &BTreeMap<String, SessionState> {
        &self.sessions
    }

    pub fn battles(&self) -> &BTreeMap<String, BattleEntry> {
        &self.battles
    }

    pub fn session(&self, user_id: &str) -> Result<&SessionState, ArenaError> {
        self.sessions
            .get(user_id)
            .ok_or_else(|| ArenaError::NotFound { kind: "session", id: user_id.to_owned() })
    }

    pub fn battle(&self, battle_id: &str) -> Result<&BattleEntry, ArenaError> {
        self.battles
            .get(battle_id)
            .ok_or_else(|| ArenaError::NotFound { kind: "battle", id: battle_id.to_owned() })
    }

    pub fn matchmaker(&self) -> &Matchmaker {
        &self.matchmaker
    }

    pub fn matchmaker_mut(&mut self) -> &mut Matchmaker {
        &mut self.matchmaker
    }

    /// Session owning `battle_id`, required to be in `phase` with that
    /// battle current.
    fn owning_session(&self, battle: &Battle, phase: Phase, action: &str) -> Result<&SessionState, ArenaError> {
        let session = self.session(&battle.user_id)?;
        if session.current_battle.as_deref() != Some(battle.battle_id.as_str()) || session.phase != phase {
            return Err(ArenaError::State {
                phase: session.phase,
                reason: format!("{action} needs phase {phase} on this battle"),
            });
        }
        Ok(session)
    }

    /// Decides whether `event` is a legal transition, without changing state.
    pub fn check(&self, event: &Event) -> Result<(), ArenaError> {
        match event {
            Event::SessionCreated { user_id } => {
                if self.sessions.contains_key(user_id) {
                    return Err(ArenaError::InvalidArgument(format!("session {user_id} exists")));
                }
            }
            Event::BattleStarted { battle_id, user_id, side_a, side_b, .. } => {
                let session = self.session(user_id)?;
                if !matches!(session.phase, Phase::Idle | Phase::Done) {
                    return Err(ArenaError::State {
                        phase: session.phase,
                        reason: "a battle is already in progress".into(),
                    });
                }
                if self.battles.contains_key(battle_id) {
                    return Err(ArenaError::InvalidArgument(format!("battle {battle_id} exists")));
                }
                if side_a.crs_id == side_b.crs_id {
                    return Err(ArenaError::InvalidArgument("a CRS cannot battle itself".into()));
                }
            }
            Event::Message { battle_id, side, user_text, reply_text, .. } => {
                let battle = &self.battle(battle_id)?.battle;
                if battle.side(*side).ended {
                    return Err(ArenaError::ConversationClosed);
                }
                self.owning_session(battle, Phase::Battling, "sending a message")?;
                if user_text.trim().is_empty() || reply_text.trim().is_empty() {
                    return Err(ArenaError::InvalidArgument("message text is empty".into()));
                }
            }
            Event::ConversationEnded { battle_id, side, sentiment } => {
                let battle = &self.battle(battle_id)?.battle;
                if battle.side(*side).ended {
                    return Err(ArenaError::ConversationClosed);
                }
                self.owning_session(battle, Phase::Battling, "ending a conversation")?;
                if !sentiment.is_final() {
                    return Err(ArenaError::InvalidArgument(
                        "sentiment must be satisfaction or frustration".into(),
                    ));
                }
            }
            Event::Vote { battle_id, outcome } => {
                let battle = &self.battle(battle_id)?.battle;
                if !battle.outcome.is_pending() {
                    return Err(ArenaError::AlreadyVoted);
                }
                self.owning_session(battle, Phase::Voting, "voting")?;
                if outcome.is_pending() {
                    return Err(ArenaError::InvalidArgument("vote must name a winner or a draw".into()));
                }
            }
            Event::Feedback { battle_id, text } => {
                let battle = &self.battle(battle_id)?.battle;
                if text.trim().is_empty() {
                    return Err(ArenaError::InvalidArgument("feedback text is empty".into()));
                }
                let phase = self.session(&battle.user_id)?.phase;
                if battle.outcome.is_pending() {
                    return Err(ArenaError::State { phase, reason: "feedback opens after the vote".into() });
                }
                if battle.feedback_text.is_some() {
                    return Err(ArenaError::State { phase, reason: "feedback already submitted".into() });
                }
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, logged: &LoggedEvent) -> Result<(), ArenaError> {
        self.check(&logged.event)?;
        let at = logged.at;
        match &logged.event {
            Event::SessionCreated { user_id } => {
                self.sessions.insert(
                    user_id.clone(),
                    SessionState { user_id: user_id.clone(), current_battle: None, phase: Phase::Idle },
                );
            }
            Event::BattleStarted { battle_id, user_id, environment, side_a, side_b } => {
                let conversation = |s: &crate::events::SideAssignment| {
                    Conversation::open(s.conversation_id.clone(), s.crs_id.clone(), user_id.clone())
                };
                let battle = Battle::new(
                    battle_id.clone(),
                    user_id.clone(),
                    conversation(side_a),
                    conversation(side_b),
                    *environment,
                    at,
                )?;
                for id in [&side_a.crs_id, &side_b.crs_id] {
                    if self.matchmaker.bump(id) {
                        if let Some(d) = self.registry.get_mut(id) {
                            d.record_conversations(1);
                        }
                    }
                }
                self.battles.insert(battle_id.clone(), BattleEntry { battle, voted_at: None });
                let session = self.sessions.get_mut(user_id).expect("checked");
                session.current_battle = Some(battle_id.clone());
                session.phase = Phase::Battling;
            }
            Event::Message { battle_id, side, user_text, user_at, reply_text, .. } => {
                let battle = &mut self.battles.get_mut(battle_id).expect("checked").battle;
                let user = Utterance { role: Role::User, text: user_text.clone(), timestamp: *user_at };
                let reply = Utterance { role: Role::System, text: reply_text.clone(), timestamp: at };
                battle.side_mut(*side).push_exchange(user, reply)?;
            }
            Event::ConversationEnded { battle_id, side, sentiment } => {
                let battle = &mut self.battles.get_mut(battle_id).expect("checked").battle;
                battle.side_mut(*side).end(*sentiment)?;
                if battle.both_ended() {
                    let user_id = battle.user_id.clone();
                    self.sessions.get_mut(&user_id).expect("checked").phase = Phase::Voting;
                }
            }
            Event::Vote { battle_id, outcome } => {
                let entry = self.battles.get_mut(battle_id).expect("checked");
                entry.battle.record_outcome(*outcome)?;
                entry.voted_at = Some(at);
                let user_id = entry.battle.user_id.clone();
                self.sessions.get_mut(&user_id).expect("checked").phase = Phase::Done;
            }
            Event::Feedback { battle_id, text } => {
                let battle = &mut self.battles.get_mut(battle_id).expect("checked").battle;
                battle.attach_feedback(text.clone())?;
            }
        }
        Ok(())
    }

    /// Everything that replay must reproduce, as comparable JSON.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "sessions": self.sessions,
            "battles": self.battles,
            "counts": self.matchmaker.counts(),
            "registry": self.registry,
        })
    }

    /// Sentiments of every conversation, for satisfaction rates.
    pub fn sentiments(&self) -> impl Iterator<Item = (&CrsId, Sentiment)> {
        self.battles.values().flat_map(|e| {
            Side::BOTH.map(|s| {
                let c = e.battle.side(s);
                (&c.crs_id, c.sentiment)
            })
        })
    }

    pub fn voted(&self) -> impl Iterator<Item = &BattleEntry> {
        self.battles.values().filter(|e| e.battle.outcome != Outcome::Pending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::SideAssignment;
    use arena_core::Environment;
    use proptest::prelude::*;

    fn registry() -> Vec<CrsDescriptor> {
        ["x", "y", "z"].map(|id| CrsDescriptor::new(id, format!("stub:{id}"))).to_vec()
    }

    // Small id spaces so that events hit existing sessions and battles.
    fn arb_event() -> impl Strategy<Value = Event> {
        let user = prop::sample::select(vec!["u1", "u2"]).prop_map(String::from);
        let battle = prop::sample::select(vec!["b1", "b2", "b3"]).prop_map(String::from);
        let side = prop_oneof![Just(Side::A), Just(Side::B)];
        prop_oneof![
            user.clone().prop_map(|user_id| Event::SessionCreated { user_id }),
            (battle.clone(), user, 0..3usize, 1..3usize).prop_map(|(battle_id, user_id, a, off)| {
                let ids = ["x", "y", "z"];
                Event::BattleStarted {
                    side_a: SideAssignment { crs_id: CrsId::from(ids[a]), conversation_id: format!("{battle_id}a") },
                    side_b: SideAssignment {
                        crs_id: CrsId::from(ids[(a + off) % 3]),
                        conversation_id: format!("{battle_id}b"),
                    },
                    battle_id,
                    user_id,
                    environment: Environment::Open,
                }
            }),
            (battle.clone(), side.clone()).prop_map(|(battle_id, side)| Event::Message {
                battle_id,
                side,
                user_text: "hi".into(),
                user_at: Timestamp(0),
                reply_text: "hello".into(),
                fallback: false,
            }),
            (battle.clone(), side, any::<bool>()).prop_map(|(battle_id, side, s)| Event::ConversationEnded {
                battle_id,
                side,
                sentiment: if s { Sentiment::Satisfaction } else { Sentiment::Frustration },
            }),
            (battle.clone(), 0..3usize).prop_map(|(battle_id, o)| Event::Vote {
                battle_id,
                outcome: [Outcome::AWins, Outcome::BWins, Outcome::Draw][o],
            }),
            battle.prop_map(|battle_id| Event::Feedback { battle_id, text: "ok".into() }),
        ]
    }

    proptest! {
        #[test]
        fn accepted_events_keep_invariants(events in prop::collection::vec(arb_event(), 0..60)) {
            let mut state = ArenaState::new(registry(), Some(1));
            let mut accepted = Vec::new();
            for (i, event) in events.into_iter().enumerate() {
                let before = state.snapshot();
                let logged = LoggedEvent { seq: i as u64 + 1, at: Timestamp(i as i64), event };
                match state.apply(&logged) {
                    Ok(()) => accepted.push(logged),
                    Err(_) => prop_assert_eq!(state.snapshot(), before, "rejected event changed state"),
                }
                for entry in state.battles().values() {
                    let b = &entry.battle;
                    prop_assert!(b.validate().is_empty());
                    prop_assert!(b.outcome.is_pending() || b.both_ended());
                }
                let total: u64 = state.matchmaker().counts().values().sum();
                prop_assert_eq!(total, 2 * state.battles().len() as u64);
            }
            let replayed = ArenaState::replay(registry(), Some(1), &accepted).unwrap();
            prop_assert_eq!(replayed.snapshot(), state.snapshot());
        }
    }
}
