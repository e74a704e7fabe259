//! Deterministic in-process CRSs for running the arena without ML backends.
//!
//! Stubs keep no memory of their own: what has already been recommended is
//! read back from the system turns of the request context, so an identical
//! context always yields an identical response.

use std::fmt;
use std::str::FromStr;

use arena_core::{CrsDescriptor, Role};

use crate::catalog::{Catalog, CatalogItem};
use crate::protocol::CrsRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StubKind {
    /// Repeats the user, prefixed with "You said: ".
    Echo,
    /// Recommends the highest-listed title not yet recommended.
    Popular,
    /// Recommends the first title whose keyword the user mentioned,
    /// otherwise behaves like `Popular`.
    Keyword,
}

impl StubKind {
    pub const ALL: [StubKind; 3] = [StubKind::Echo, StubKind::Popular, StubKind::Keyword];

    pub fn name(self) -> &'static str {
        match self {
            StubKind::Echo => "echo",
            StubKind::Popular => "popular",
            StubKind::Keyword => "keyword",
        }
    }
}

impl fmt::Display for StubKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StubKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "echo" => Ok(StubKind::Echo),
            "popular" => Ok(StubKind::Popular),
            "keyword" => Ok(StubKind::Keyword),
            other => Err(format!("unknown stub kind {other:?}")),
        }
    }
}

pub const ECHO_PREFIX: &str = "You said: ";
pub const EXHAUSTED: &str = "I have no more movies to recommend. Could you tell me more about what you like?";

pub fn register_stub(kind: StubKind) -> CrsDescriptor {
    let mut descriptor = CrsDescriptor::new(format!("stub_{kind}"), format!("stub:{kind}"));
    descriptor.display_name = format!("Stub ({kind})");
    descriptor
}

pub fn popular_sentence(title: &str) -> String {
    format!("I recommend \"{title}\". It is one of the most popular movies.")
}

pub fn keyword_sentence(keyword: &str, title: &str) -> String {
    format!("Since you like {keyword}, I recommend \"{title}\".")
}

/// Computes a stub's reply. `request` must end with a user turn.
pub fn respond(kind: StubKind, catalog: &Catalog, request: &CrsRequest) -> String {
    let user_text = request.last_user_text().unwrap_or_default();
    match kind {
        StubKind::Echo => format!("{ECHO_PREFIX}{user_text}"),
        StubKind::Popular => popular(catalog, request),
        StubKind::Keyword => {
            let words = user_words(user_text);
            let hit = fresh_items(catalog, request).find_map(|item| {
                item.keywords
                    .iter()
                    .find(|k| words.iter().any(|w| w == *k))
                    .map(|k| (k, item))
            });
            match hit {
                Some((keyword, item)) => keyword_sentence(keyword, &item.title),
                None => popular(catalog, request),
            }
        }
    }
}

fn popular(catalog: &Catalog, request: &CrsRequest) -> String {
    fresh_items(catalog, request)
        .next()
        .map(|item| popular_sentence(&item.title))
        .unwrap_or_else(|| EXHAUSTED.to_owned())
}

/// Catalog items in listing order, minus those already recommended.
fn fresh_items<'a>(catalog: &'a Catalog, request: &'a CrsRequest) -> impl Iterator<Item = &'a CatalogItem> {
    catalog.items().iter().filter(move |item| {
        let quoted = format!("\"{}\"", item.title);
        !request
            .context
            .iter()
            .any(|t| t.role == Role::System && t.text.contains(&quoted))
    })
}

fn user_words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_owned())
        .filter(|w| !w.is_empty())
        .collect()
}
