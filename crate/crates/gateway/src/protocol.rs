//! Wire format between the arena and a CRS backend.
//!
//! `POST {endpoint}/respond` with `{"context":[{"role":..,"text":..}]}`,
//! answered by `{"response": ".."}`.

use arena_core::{Role, Utterance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub role: Role,
    pub text: String,
}

/// Full conversation so far; the last turn is the newest user utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsRequest {
    pub context: Vec<ContextTurn>,
}

impl CrsRequest {
    pub fn from_utterances<'a>(utterances: impl IntoIterator<Item = &'a Utterance>) -> Self {
        Self {
            context: utterances
                .into_iter()
                .map(|u| ContextTurn { role: u.role, text: u.text.clone() })
                .collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.context.last().is_some_and(|t| t.role == Role::User)
    }

    /// Newest user utterance.
    pub fn last_user_text(&self) -> Option<&str> {
        self.context.last().filter(|t| t.role == Role::User).map(|t| t.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsReply {
    pub response: String,
}

/// What the gateway hands back to the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrsResponse {
    pub response: String,
    pub latency_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_are_exact() {
        let req = CrsRequest {
            context: vec![
                ContextTurn { role: Role::User, text: "hi".into() },
                ContextTurn { role: Role::System, text: "hello".into() },
                ContextTurn { role: Role::User, text: "horror please".into() },
            ],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"context":[{"role":"user","text":"hi"},{"role":"system","text":"hello"},{"role":"user","text":"horror please"}]}"#
        );
        assert!(req.is_valid());
        assert_eq!(req.last_user_text(), Some("horror please"));
        let reply: CrsReply = serde_json::from_str(r#"{"response":"ok"}"#).unwrap();
        assert_eq!(reply.response, "ok");
    }

    #[test]
    fn request_must_end_with_user() {
        assert!(!CrsRequest { context: vec![] }.is_valid());
        let req = CrsRequest { context: vec![ContextTurn { role: Role::System, text: "x".into() }] };
        assert!(!req.is_valid());
    }
}
