use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use arena_core::{CrsId, Environment, Outcome, Role, Sentiment, Side, Timestamp};
use arena_gateway::{Gateway, StubKind};
use arena_service::{
    Arena, ArenaConfig, ArenaError, ArenaOptions, ArenaState, CrsEntry, Phase, VoteChoice, FALLBACK_REPLY,
};
use axum::routing::post;
use axum::Router;

fn ticking_clock() -> arena_service::Clock {
    let t = Arc::new(AtomicI64::new(1_700_000_000_000));
    Arc::new(move || Timestamp(t.fetch_add(1, Ordering::SeqCst)))
}

fn options(seed: u64) -> ArenaOptions {
    ArenaOptions { seed: Some(seed), clock: ticking_clock() }
}

fn stub_arena(min_user_turns: u32) -> Arena {
    let config = ArenaConfig { min_user_turns, ..ArenaConfig::with_stubs() };
    Arena::open(config, Gateway::new(), options(1)).unwrap()
}

async fn play_battle(arena: &Arena, user: &str, choice: VoteChoice) -> String {
    let view = arena.start_battle(user).unwrap();
    for side in Side::BOTH {
        arena.send_message(&view.battle_id, side, "any good horror movies?").await.unwrap();
        arena.end_conversation(&view.battle_id, side, Sentiment::Satisfaction).await.unwrap();
    }
    arena.vote(&view.battle_id, choice).await.unwrap();
    view.battle_id
}

#[tokio::test]
async fn full_battle_walks_the_phases() {
    let arena = stub_arena(1);
    let user = arena.create_session().unwrap().user_id;
    assert_eq!(user.len(), 32);
    let view = arena.start_battle(&user).unwrap();
    assert_eq!(view.sides.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(), ["CRS 1", "CRS 2"]);
    let json = serde_json::to_string(&view).unwrap();
    assert!(!json.contains("stub_"), "battle view leaks CRS identity: {json}");

    let id = view.battle_id.clone();
    let reply = arena.send_message(&id, Side::A, "I like horror").await.unwrap();
    assert!(!reply.is_empty());
    arena.send_message(&id, Side::B, "hello").await.unwrap();

    let phase = arena.end_conversation(&id, Side::A, Sentiment::Satisfaction).await.unwrap();
    assert_eq!(phase, Phase::Battling);
    assert!(matches!(
        arena.vote(&id, VoteChoice::Crs1).await,
        Err(ArenaError::State { phase: Phase::Battling, .. })
    ));
    let phase = arena.end_conversation(&id, Side::B, Sentiment::Frustration).await.unwrap();
    assert_eq!(phase, Phase::Voting);
    assert_eq!(arena.vote(&id, VoteChoice::Crs2).await.unwrap(), Phase::Done);
    assert!(matches!(arena.vote(&id, VoteChoice::Crs1).await, Err(ArenaError::AlreadyVoted)));
    arena.submit_feedback(&id, "second one was better").await.unwrap();
    assert!(arena.submit_feedback(&id, "again").await.is_err());

    let records = arena.export(None);
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.outcome, Outcome::BWins);
    assert_eq!(r.feedback_text.as_deref(), Some("second one was better"));
    assert_eq!(r.side_a.sentiment, Sentiment::Satisfaction);
    assert_eq!(r.side_a.utterances.len(), 2);
    assert_eq!(r.side_a.utterances[0].role, Role::User);
    assert_eq!(r.side_a.utterances[1].role, Role::System);
    assert!(arena.export(Some(Environment::Closed)).is_empty());

    let board = arena.leaderboard().unwrap();
    assert_eq!(board.battles_processed, 1);
    let winner = &board.entries[0];
    assert_eq!(winner.crs_id, r.side_b.crs_id);
    assert_eq!(winner.elo, 1008.0);
    assert_eq!(winner.satisfaction, Some(0.0));
    assert_eq!(board.entries[1].elo, 1000.0);
    assert_eq!(board.entries[2].crs_id, r.side_a.crs_id);
    assert_eq!(board.entries[2].elo, 992.0);
}

#[tokio::test]
async fn ended_side_rejects_messages() {
    let arena = stub_arena(0);
    let user = arena.create_session().unwrap().user_id;
    let id = arena.start_battle(&user).unwrap().battle_id;
    arena.end_conversation(&id, Side::A, Sentiment::Frustration).await.unwrap();
    assert!(matches!(arena.send_message(&id, Side::A, "hi").await, Err(ArenaError::ConversationClosed)));
    assert!(matches!(
        arena.end_conversation(&id, Side::A, Sentiment::Satisfaction).await,
        Err(ArenaError::ConversationClosed)
    ));
    arena.send_message(&id, Side::B, "hi").await.unwrap();
}

#[tokio::test]
async fn min_turns_are_enforced() {
    let arena = stub_arena(2);
    let user = arena.create_session().unwrap().user_id;
    let id = arena.start_battle(&user).unwrap().battle_id;
    arena.send_message(&id, Side::A, "hi").await.unwrap();
    match arena.end_conversation(&id, Side::A, Sentiment::Satisfaction).await {
        Err(ArenaError::MinTurns { required: 2, actual: 1 }) => {}
        other => panic!("expected MinTurns, got {other:?}"),
    }
    arena.send_message(&id, Side::A, "something else").await.unwrap();
    arena.end_conversation(&id, Side::A, Sentiment::Satisfaction).await.unwrap();
}

#[tokio::test]
async fn invalid_requests() {
    let arena = stub_arena(0);
    assert!(matches!(arena.start_battle("nobody"), Err(ArenaError::NotFound { .. })));
    assert!(matches!(
        arena.send_message("missing", Side::A, "hi").await,
        Err(ArenaError::NotFound { .. })
    ));
    let user = arena.create_session().unwrap().user_id;
    let id = arena.start_battle(&user).unwrap().battle_id;
    assert!(matches!(arena.start_battle(&user), Err(ArenaError::State { .. })));
    assert!(matches!(arena.send_message(&id, Side::A, "  ").await, Err(ArenaError::InvalidArgument(_))));
    assert!(matches!(
        arena.end_conversation(&id, Side::A, Sentiment::NoneYet).await,
        Err(ArenaError::InvalidArgument(_))
    ));
    assert!(matches!(arena.submit_feedback(&id, "early").await, Err(ArenaError::State { .. })));
}

#[tokio::test]
async fn a_finished_user_can_battle_again() {
    let arena = stub_arena(0);
    let user = arena.create_session().unwrap().user_id;
    let first = play_battle(&arena, &user, VoteChoice::Draw).await;
    let second = play_battle(&arena, &user, VoteChoice::Crs1).await;
    assert_ne!(first, second);
    assert_eq!(arena.leaderboard().unwrap().battles_processed, 2);
}

#[test]
fn ten_thousand_session_ids_are_unique() {
    let arena = stub_arena(0);
    let ids: HashSet<String> = (0..10_000).map(|_| arena.create_session().unwrap().user_id).collect();
    assert_eq!(ids.len(), 10_000);
    assert!(ids.iter().all(|id| id.len() == 32 && id.chars().all(|c| c.is_ascii_hexdigit())));
}

#[test]
fn battles_are_spread_evenly() {
    let config = ArenaConfig {
        crs: (0..5)
            .map(|i| CrsEntry { crs_id: format!("crs{i}"), ..CrsEntry::stub(StubKind::ALL[i % 3]) })
            .collect(),
        ..ArenaConfig::with_stubs()
    };
    let arena = Arena::open(config, Gateway::new(), options(3)).unwrap();
    let user = arena.create_session().unwrap().user_id;
    let rt = tokio::runtime::Runtime::new().unwrap();
    for _ in 0..100 {
        let id = arena.start_battle(&user).unwrap().battle_id;
        rt.block_on(async {
            for side in Side::BOTH {
                arena.end_conversation(&id, side, Sentiment::Frustration).await.unwrap();
            }
            arena.vote(&id, VoteChoice::Draw).await.unwrap();
        });
    }
    let counts: Vec<u64> = arena.with_state(|s| s.matchmaker().counts().values().copied().collect());
    assert_eq!(counts.iter().sum::<u64>(), 200);
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1, "{counts:?}");
}

async fn spawn_backend(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

#[tokio::test]
async fn slow_backend_gets_the_fallback_and_stays_open() {
    let slow = spawn_backend(Router::new().route(
        "/respond",
        post(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            "{\"response\":\"too late\"}"
        }),
    ))
    .await;
    let config = ArenaConfig {
        crs: vec![
            CrsEntry { crs_id: "slow".into(), endpoint: slow, display_name: None, timeout_ms: Some(200) },
            CrsEntry { crs_id: "down".into(), endpoint: "http://127.0.0.1:9".into(), display_name: None, timeout_ms: Some(200) },
        ],
        ..ArenaConfig::with_stubs()
    };
    let arena = Arena::open(config, Gateway::new(), options(5)).unwrap();
    let user = arena.create_session().unwrap().user_id;
    let id = arena.start_battle(&user).unwrap().battle_id;
    for side in Side::BOTH {
        let started = Instant::now();
        let reply = arena.send_message(&id, side, "hello?").await.unwrap();
        assert_eq!(reply, FALLBACK_REPLY);
        assert!(started.elapsed() < Duration::from_secs(2));
        // still open: another message is accepted
        assert_eq!(arena.send_message(&id, side, "still there?").await.unwrap(), FALLBACK_REPLY);
    }
    let records = arena.export(None);
    assert_eq!(records[0].side_a.utterances.len(), 4);
    assert_eq!(arena.with_state(|s| s.session(&user).unwrap().phase), Phase::Battling);
}

#[tokio::test]
async fn file_log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let config = ArenaConfig { storage_path: Some(path.clone()), ..ArenaConfig::with_stubs() };

    let arena = Arena::open(config.clone(), Gateway::new(), options(9)).unwrap();
    let user = arena.create_session().unwrap().user_id;
    play_battle(&arena, &user, VoteChoice::Crs1).await;
    play_battle(&arena, &user, VoteChoice::Draw).await;
    let pending = arena.start_battle(&user).unwrap().battle_id;
    arena.send_message(&pending, Side::B, "thriller please").await.unwrap();
    let before = arena.snapshot();
    let board = arena.leaderboard().unwrap();
    drop(arena);

    let reopened = Arena::open(config, Gateway::new(), options(9)).unwrap();
    assert_eq!(reopened.snapshot(), before);
    assert_eq!(reopened.leaderboard().unwrap(), board);
    // the in-flight battle continues where it stopped
    reopened.send_message(&pending, Side::B, "another").await.unwrap();
    assert_eq!(reopened.export(None).len(), 3);
}

#[tokio::test]
async fn replay_of_memory_log_matches_live_state() {
    let arena = stub_arena(0);
    for _ in 0..3 {
        let user = arena.create_session().unwrap().user_id;
        play_battle(&arena, &user, VoteChoice::Crs2).await;
    }
    let events = arena.memory_events().unwrap();
    let registry = arena.config().crs.iter().map(CrsEntry::descriptor);
    let replayed = ArenaState::replay(registry, Some(1), &events).unwrap();
    assert_eq!(replayed.snapshot(), arena.snapshot());
}

#[tokio::test]
async fn removed_crs_stays_on_the_leaderboard() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let config = ArenaConfig { storage_path: Some(path), ..ArenaConfig::with_stubs() };
    let arena = Arena::open(config.clone(), Gateway::new(), options(2)).unwrap();
    let user = arena.create_session().unwrap().user_id;
    for _ in 0..3 {
        play_battle(&arena, &user, VoteChoice::Crs1).await;
    }
    drop(arena);

    let mut smaller = config;
    let removed = smaller.crs.pop().unwrap();
    let arena = Arena::open(smaller, Gateway::new(), options(2)).unwrap();
    let board = arena.leaderboard().unwrap();
    let ids: BTreeMap<CrsId, f64> = board.entries.iter().map(|e| (e.crs_id.clone(), e.elo)).collect();
    assert!(ids.contains_key(&CrsId::new(removed.crs_id)));
    assert_eq!(board.battles_processed, 3);
}
