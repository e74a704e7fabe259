//! Value types shared by the arena: CRS descriptors, utterances,
//! conversations and battles.
//!
//! Constructors and mutators keep every invariant; `validate` reports
//! violations on instances assembled by hand (all fields are public).
//! Deserialization goes through the same checks, so a parsed
//! [`Conversation`] or [`Battle`] is always valid.

use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Registry key of a CRS backend, e.g. `KBRD_ReDial`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CrsId(pub String);

impl CrsId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CrsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CrsId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// UTC instant as milliseconds since the Unix epoch.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn now() -> Self {
        let ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0);
        Self(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    System,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::User => "user",
            Role::System => "system",
        })
    }
}

/// Feedback attached to a conversation when the user ends it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Satisfaction,
    Frustration,
    #[default]
    NoneYet,
}

impl Sentiment {
    pub fn is_final(self) -> bool {
        !matches!(self, Sentiment::NoneYet)
    }
}

/// Vote result from the point of view of side A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AWins,
    BWins,
    Draw,
    #[default]
    Pending,
}

impl Outcome {
    /// Elo score for side A; `None` for pending battles.
    pub fn score_a(self) -> Option<f64> {
        match self {
            Outcome::AWins => Some(1.0),
            Outcome::Draw => Some(0.5),
            Outcome::BWins => Some(0.0),
            Outcome::Pending => None,
        }
    }

    pub fn is_pending(self) -> bool {
        matches!(self, Outcome::Pending)
    }
}

/// Deployment a battle was collected in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    #[default]
    Open,
    Closed,
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Environment::Open => "open",
            Environment::Closed => "closed",
        })
    }
}

impl std::str::FromStr for Environment {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(Environment::Open),
            "closed" => Ok(Environment::Closed),
            other => Err(DomainError::InvalidArgument(format!(
                "unknown environment {other:?}, expected open or closed"
            ))),
        }
    }
}

/// Position of a conversation within a battle. Serialized as 1 or 2,
/// matching the anonymized "CRS 1"/"CRS 2" labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::A, Side::B];

    pub fn label(self) -> &'static str {
        match self {
            Side::A => "CRS 1",
            Side::B => "CRS 2",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl TryFrom<u8> for Side {
    type Error = DomainError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Side::A),
            2 => Ok(Side::B),
            other => Err(DomainError::InvalidArgument(format!(
                "side must be 1 or 2, got {other}"
            ))),
        }
    }
}

impl From<Side> for u8 {
    fn from(side: Side) -> u8 {
        match side {
            Side::A => 1,
            Side::B => 2,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("conversation is closed")]
    ConversationClosed,
    #[error("battle already has an outcome")]
    AlreadyVoted,
    #[error("invariant violated: {0}")]
    Invariant(Violation),
}

/// A broken invariant, reported as data by the `validate` methods.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("utterance {index} is blank")]
    BlankUtterance { index: usize },
    #[error("utterance {index} should have role {expected}")]
    RoleAlternation { index: usize, expected: Role },
    #[error("ended conversation has no final sentiment")]
    EndedWithoutSentiment,
    #[error("open conversation carries a final sentiment")]
    SentimentBeforeEnd,
    #[error("ended conversation has an unanswered user utterance")]
    UnansweredTurn,
    #[error("both sides talk to the same CRS {0}")]
    SameCrs(CrsId),
    #[error("side {0} belongs to another user")]
    UserMismatch(Side),
    #[error("outcome recorded before both conversations ended")]
    OutcomeBeforeEnd,
    #[error("side {side}: {violation}")]
    InSide { side: Side, violation: Box<Violation> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub role: Role,
    pub text: String,
    pub timestamp: Timestamp,
}

impl Utterance {
    pub fn new(role: Role, text: impl Into<String>, timestamp: Timestamp) -> Result<Self, DomainError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DomainError::InvalidArgument("utterance text is empty".into()));
        }
        Ok(Self { role, text, timestamp })
    }
}

/// Registered CRS backend.
///
/// `endpoint` is either an HTTP base URI or a `stub:<kind>` marker for a
/// built-in backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsDescriptor {
    pub crs_id: CrsId,
    pub display_name: String,
    pub endpoint: String,
    pub conversation_count: u64,
}

impl CrsDescriptor {
    pub fn new(crs_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        let crs_id = CrsId::new(crs_id);
        Self {
            display_name: crs_id.0.clone(),
            crs_id,
            endpoint: endpoint.into(),
            conversation_count: 0,
        }
    }

    /// The stub kind named by a `stub:<kind>` endpoint.
    pub fn stub_kind(&self) -> Option<&str> {
        self.endpoint.strip_prefix("stub:")
    }

    /// Counts only move forward.
    pub fn record_conversations(&mut self, n: u64) {
        self.conversation_count += n;
    }
}

/// Ordered utterances between one user and one CRS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConversationRepr")]
pub struct Conversation {
    pub conversation_id: String,
    pub crs_id: CrsId,
    pub user_id: String,
    pub utterances: Vec<Utterance>,
    pub sentiment: Sentiment,
    pub ended: bool,
}

#[derive(Deserialize)]
struct ConversationRepr {
    conversation_id: String,
    crs_id: CrsId,
    user_id: String,
    utterances: Vec<Utterance>,
    sentiment: Sentiment,
    ended: bool,
}

impl TryFrom<ConversationRepr> for Conversation {
    type Error = DomainError;

    fn try_from(r: ConversationRepr) -> Result<Self, Self::Error> {
        let conversation = Conversation {
            conversation_id: r.conversation_id,
            crs_id: r.crs_id,
            user_id: r.user_id,
            utterances: r.utterances,
            sentiment: r.sentiment,
            ended: r.ended,
        };
        match conversation.validate().into_iter().next() {
            Some(v) => Err(DomainError::Invariant(v)),
            None => Ok(conversation),
        }
    }
}

impl Conversation {
    pub fn open(conversation_id: impl Into<String>, crs_id: CrsId, user_id: impl Into<String>) -> Self {
        Self {
            conversation_id: conversation_id.into(),
            crs_id,
            user_id: user_id.into(),
            utterances: Vec::new(),
            sentiment: Sentiment::NoneYet,
            ended: false,
        }
    }

    pub fn user_turns(&self) -> usize {
        self.utterances.iter().filter(|u| u.role == Role::User).count()
    }

    /// Appends one user utterance and the system answer to it.
    pub fn push_exchange(&mut self, user: Utterance, system: Utterance) -> Result<(), DomainError> {
        if self.ended {
            return Err(DomainError::ConversationClosed);
        }
        if user.role != Role::User || system.role != Role::System {
            return Err(DomainError::InvalidArgument(
                "an exchange is a user utterance followed by a system utterance".into(),
            ));
        }
        for u in [&user, &system] {
            if u.text.trim().is_empty() {
                return Err(DomainError::InvalidArgument("utterance text is empty".into()));
            }
        }
        if self.utterances.len() % 2 == 1 {
            return Err(DomainError::Invariant(Violation::RoleAlternation {
                index: self.utterances.len(),
                expected: Role::System,
            }));
        }
        self.utterances.push(user);
        self.utterances.push(system);
        Ok(())
    }

    /// Seals the conversation with the user's final sentiment.
    pub fn end(&mut self, sentiment: Sentiment) -> Result<(), DomainError> {
        if self.ended {
            return Err(DomainError::ConversationClosed);
        }
        if !sentiment.is_final() {
            return Err(DomainError::InvalidArgument(
                "a conversation ends with satisfaction or frustration".into(),
            ));
        }
        if self.utterances.len() % 2 == 1 {
            return Err(DomainError::Invariant(Violation::UnansweredTurn));
        }
        self.sentiment = sentiment;
        self.ended = true;
        Ok(())
    }

    /// Lists every broken invariant; empty iff the conversation is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (index, u) in self.utterances.iter().enumerate() {
            if u.text.trim().is_empty() {
                out.push(Violation::BlankUtterance { index });
            }
            let expected = if index % 2 == 0 { Role::User } else { Role::System };
            if u.role != expected {
                out.push(Violation::RoleAlternation { index, expected });
            }
        }
        if self.ended && !self.sentiment.is_final() {
            out.push(Violation::EndedWithoutSentiment);
        }
        if !self.ended && self.sentiment.is_final() {
            out.push(Violation::SentimentBeforeEnd);
        }
        if self.ended && self.utterances.len() % 2 == 1 {
            out.push(Violation::UnansweredTurn);
        }
        out
    }
}

/// One user's paired conversations with two CRSs plus the vote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BattleRepr")]
pub struct Battle {
    pub battle_id: String,
    pub user_id: String,
    pub side_a: Conversation,
    pub side_b: Conversation,
    pub outcome: Outcome,
    pub feedback_text: Option<String>,
    pub environment: Environment,
    pub created_at: Timestamp,
}

#[derive(Deserialize)]
struct BattleRepr {
    battle_id: String,
    user_id: String,
    side_a: Conversation,
    side_b: Conversation,
    outcome: Outcome,
    feedback_text: Option<String>,
    environment: Environment,
    created_at: Timestamp,
}

impl TryFrom<BattleRepr> for Battle {
    type Error = DomainError;

    fn try_from(r: BattleRepr) -> Result<Self, Self::Error> {
        let battle = Battle {
            battle_id: r.battle_id,
            user_id: r.user_id,
            side_a: r.side_a,
            side_b: r.side_b,
            outcome: r.outcome,
            feedback_text: r.feedback_text,
            environment: r.environment,
            created_at: r.created_at,
        };
        match battle.validate().into_iter().next() {
            Some(v) => Err(DomainError::Invariant(v)),
            None => Ok(battle),
        }
    }
}

impl Battle {
    /// Builds a pending battle, rejecting any broken invariant.
    pub fn new(
        battle_id: impl Into<String>,
        user_id: impl Into<String>,
        side_a: Conversation,
        side_b: Conversation,
        environment: Environment,
        created_at: Timestamp,
    ) -> Result<Self, DomainError> {
        let battle = Battle {
            battle_id: battle_id.into(),
            user_id: user_id.into(),
            side_a,
            side_b,
            outcome: Outcome::Pending,
            feedback_text: None,
            environment,
            created_at,
        };
        match battle.validate().into_iter().next() {
            Some(v) => Err(DomainError::Invariant(v)),
            None => Ok(battle),
        }
    }

    pub fn side(&self, side: Side) -> &Conversation {
        match side {
            Side::A => &self.side_a,
            Side::B => &self.side_b,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut Conversation {
        match side {
            Side::A => &mut self.side_a,
            Side::B => &mut self.side_b,
        }
    }

    pub fn both_ended(&self) -> bool {
        self.side_a.ended && self.side_b.ended
    }

    /// Writes the vote. An outcome can be written once, after both sides ended.
    pub fn record_outcome(&mut self, outcome: Outcome) -> Result<(), DomainError> {
        if !self.outcome.is_pending() {
            return Err(DomainError::AlreadyVoted);
        }
        if outcome.is_pending() {
            return Err(DomainError::InvalidArgument("cannot vote pending".into()));
        }
        if !self.both_ended() {
            return Err(DomainError::Invariant(Violation::OutcomeBeforeEnd));
        }
        self.outcome = outcome;
        Ok(())
    }

    pub fn attach_feedback(&mut self, text: impl Into<String>) -> Result<(), DomainError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DomainError::InvalidArgument("feedback text is empty".into()));
        }
        if self.feedback_text.is_some() {
            return Err(DomainError::InvalidArgument("feedback already submitted".into()));
        }
        self.feedback_text = Some(text);
        Ok(())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.side_a.crs_id == self.side_b.crs_id {
            out.push(Violation::SameCrs(self.side_a.crs_id.clone()));
        }
        for side in Side::BOTH {
            let conversation = self.side(side);
            if conversation.user_id != self.user_id {
                out.push(Violation::UserMismatch(side));
            }
            out.extend(conversation.validate().into_iter().map(|v| Violation::InSide {
                side,
                violation: Box::new(v),
            }));
        }
        if !self.outcome.is_pending() && !self.both_ended() {
            out.push(Violation::OutcomeBeforeEnd);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(role: Role, text: &str) -> Utterance {
        Utterance { role, text: text.into(), timestamp: Timestamp(0) }
    }

    fn conv(crs: &str) -> Conversation {
        Conversation::open(format!("c-{crs}"), CrsId::from(crs), "u1")
    }

    #[test]
    fn empty_open_conversation_is_valid() {
        assert!(conv("A").validate().is_empty());
    }

    #[test]
    fn ended_exchange_is_valid() {
        let mut c = conv("A");
        c.utterances = vec![utt(Role::User, "hi"), utt(Role::System, "hello")];
        c.ended = true;
        c.sentiment = Sentiment::Satisfaction;
        assert!(c.validate().is_empty());
    }

    #[test]
    fn system_first_breaks_alternation() {
        let mut c = conv("A");
        c.utterances = vec![utt(Role::System, "hello")];
        assert_eq!(
            c.validate(),
            vec![Violation::RoleAlternation { index: 0, expected: Role::User }]
        );
    }

    #[test]
    fn ended_without_sentiment_is_reported() {
        let mut c = conv("A");
        c.ended = true;
        assert_eq!(c.validate(), vec![Violation::EndedWithoutSentiment]);
    }

    #[test]
    fn zero_turn_conversation_may_end() {
        let mut c = conv("A");
        c.end(Sentiment::Frustration).unwrap();
        assert!(c.validate().is_empty());
        assert_eq!(c.user_turns(), 0);
    }

    #[test]
    fn closed_conversation_rejects_messages() {
        let mut c = conv("A");
        c.end(Sentiment::Satisfaction).unwrap();
        let err = c
            .push_exchange(utt(Role::User, "hi"), utt(Role::System, "yo"))
            .unwrap_err();
        assert_eq!(err, DomainError::ConversationClosed);
        assert_eq!(c.end(Sentiment::Frustration), Err(DomainError::ConversationClosed));
    }

    #[test]
    fn end_requires_final_sentiment() {
        let mut c = conv("A");
        assert!(matches!(c.end(Sentiment::NoneYet), Err(DomainError::InvalidArgument(_))));
        assert!(!c.ended);
    }

    #[test]
    fn blank_utterance_rejected() {
        assert!(Utterance::new(Role::User, "  \t", Timestamp(1)).is_err());
        assert!(Utterance::new(Role::User, " ok ", Timestamp(1)).is_ok());
    }

    #[test]
    fn battle_rejects_same_crs_and_foreign_user() {
        let err = Battle::new("b", "u1", conv("A"), conv("A"), Environment::Open, Timestamp(0));
        assert!(matches!(err, Err(DomainError::Invariant(Violation::SameCrs(_)))));

        let mut other = conv("B");
        other.user_id = "u2".into();
        let err = Battle::new("b", "u1", conv("A"), other, Environment::Open, Timestamp(0));
        assert!(matches!(err, Err(DomainError::Invariant(Violation::UserMismatch(Side::B)))));
    }

    #[test]
    fn outcome_written_once_after_both_end() {
        let mut b = Battle::new("b", "u1", conv("A"), conv("B"), Environment::Open, Timestamp(0)).unwrap();
        assert_eq!(
            b.record_outcome(Outcome::Draw),
            Err(DomainError::Invariant(Violation::OutcomeBeforeEnd))
        );
        b.side_mut(Side::A).end(Sentiment::Satisfaction).unwrap();
        b.side_mut(Side::B).end(Sentiment::Frustration).unwrap();
        b.record_outcome(Outcome::Draw).unwrap();
        assert_eq!(b.record_outcome(Outcome::AWins), Err(DomainError::AlreadyVoted));
        assert_eq!(b.outcome, Outcome::Draw);
        assert!(b.validate().is_empty());
    }

    #[test]
    fn deserialization_enforces_invariants() {
        let mut c = conv("A");
        c.utterances = vec![utt(Role::System, "hello")];
        let json = serde_json::to_string(&c).unwrap();
        assert!(serde_json::from_str::<Conversation>(&json).is_err());

        let ok = conv("A");
        let json = serde_json::to_string(&ok).unwrap();
        assert_eq!(serde_json::from_str::<Conversation>(&json).unwrap(), ok);
    }

    #[test]
    fn side_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Side::B).unwrap(), "2");
        assert_eq!(serde_json::from_str::<Side>("1").unwrap(), Side::A);
        assert!(serde_json::from_str::<Side>("3").is_err());
    }

    #[test]
    fn enums_use_snake_case() {
        assert_eq!(serde_json::to_string(&Outcome::AWins).unwrap(), "\"a_wins\"");
        assert_eq!(serde_json::to_string(&Sentiment::NoneYet).unwrap(), "\"none_yet\"");
        assert_eq!(serde_json::to_string(&Environment::Closed).unwrap(), "\"closed\"");
    }

    #[test]
    fn descriptor_count_only_grows() {
        let mut d = CrsDescriptor::new("KBRD_ReDial", "http://localhost:9000");
        assert_eq!(d.stub_kind(), None);
        d.record_conversations(2);
        d.record_conversations(0);
        assert_eq!(d.conversation_count, 2);
        assert_eq!(CrsDescriptor::new("s", "stub:echo").stub_kind(), Some("echo"));
    }
}
