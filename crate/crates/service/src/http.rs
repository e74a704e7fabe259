//! JSON-over-HTTP API used by the web front end.

use std::sync::Arc;

use arena_core::export::to_jsonl_string;
use arena_core::{Environment, Sentiment, Side};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arena::{Arena, BattleView, LeaderboardView, VoteChoice};
use crate::error::ArenaError;
use crate::state::Phase;

pub struct ApiError(ArenaError);

impl From<ArenaError> for ApiError {
    fn from(e: ArenaError) -> Self {
        ApiError(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(ArenaError::InvalidArgument(e.body_text()))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = self.0;
        let status = match &e {
            ArenaError::NotFound { .. } => StatusCode::NOT_FOUND,
            ArenaError::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            ArenaError::State { .. }
            | ArenaError::ConversationClosed
            | ArenaError::AlreadyVoted
            | ArenaError::MinTurns { .. } => StatusCode::CONFLICT,
            ArenaError::Matchmaker(_) => StatusCode::SERVICE_UNAVAILABLE,
            ArenaError::Storage(_) | ArenaError::Elo(_) | ArenaError::Replay { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        let mut body = json!({ "error": e.code(), "message": e.to_string() });
        if let ArenaError::MinTurns { required, actual } = e {
            body["required_turns"] = required.into();
            body["actual_turns"] = actual.into();
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<Arena>>;

#[derive(Debug, Deserialize)]
pub struct MessageBody {
    pub side: Side,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MessageReply {
    pub reply: String,
}

#[derive(Debug, Deserialize)]
pub struct EndBody {
    pub side: Side,
    pub sentiment: Sentiment,
}

#[derive(Debug, Deserialize)]
pub struct VoteBody {
    pub outcome: VoteChoice,
}

#[derive(Debug, Deserialize)]
pub struct FeedbackBody {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PhaseReply {
    pub phase: Phase,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub environment: Option<String>,
}

pub fn router(arena: Arc<Arena>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/battle", post(start_battle))
        .route("/battle/{id}/message", post(send_message))
        .route("/battle/{id}/end", post(end_conversation))
        .route("/battle/{id}/vote", post(vote))
        .route("/battle/{id}/feedback", post(feedback))
        .route("/leaderboard", get(leaderboard))
        .route("/export", get(export))
        .with_state(arena)
}

async fn create_session(State(arena): Shared) -> ApiResult<impl IntoResponse> {
    let session = arena.create_session()?;
    Ok((StatusCode::CREATED, Json(json!({ "user_id": session.user_id }))))
}

async fn start_battle(State(arena): Shared, Path(user_id): Path<String>) -> ApiResult<(StatusCode, Json<BattleView>)> {
    Ok((StatusCode::CREATED, Json(arena.start_battle(&user_id)?)))
}

async fn send_message(
    State(arena): Shared,
    Path(battle_id): Path<String>,
    body: Result<Json<MessageBody>, JsonRejection>,
) -> ApiResult<Json<MessageReply>> {
    let Json(body) = body?;
    let reply = arena.send_message(&battle_id, body.side, &body.text).await?;
    Ok(Json(MessageReply { reply }))
}

async fn end_conversation(
    State(arena): Shared,
    Path(battle_id): Path<String>,
    body: Result<Json<EndBody>, JsonRejection>,
) -> ApiResult<Json<PhaseReply>> {
    let Json(body) = body?;
    let phase = arena.end_conversation(&battle_id, body.side, body.sentiment).await?;
    Ok(Json(PhaseReply { phase }))
}

async fn vote(
    State(arena): Shared,
    Path(battle_id): Path<String>,
    body: Result<Json<VoteBody>, JsonRejection>,
) -> ApiResult<Json<PhaseReply>> {
    let Json(body) = body?;
    let phase = arena.vote(&battle_id, body.outcome).await?;
    Ok(Json(PhaseReply { phase }))
}

async fn feedback(
    State(arena): Shared,
    Path(battle_id): Path<String>,
    body: Result<Json<FeedbackBody>, JsonRejection>,
) -> ApiResult<StatusCode> {
    let Json(body) = body?;
    arena.submit_feedback(&battle_id, &body.text).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn leaderboard(State(arena): Shared) -> ApiResult<Json<LeaderboardView>> {
    Ok(Json(arena.leaderboard()?))
}

async fn export(State(arena): Shared, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let environment = match q.environment.as_deref() {
        None | Some("") | Some("all") => None,
        Some(s) => Some(s.parse::<Environment>().map_err(ArenaError::from)?),
    };
    let body = to_jsonl_string(&arena.export(environment));
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
