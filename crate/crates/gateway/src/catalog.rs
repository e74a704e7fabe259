//! Movie catalog backing the stub CRSs.
//!
//! Format: UTF-8, one item per line, `title<TAB>keyword,keyword,...`.
//! Order matters: earlier lines count as more popular.

use std::sync::LazyLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("catalog line {line}: {message}")]
pub struct CatalogError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogItem {
    pub title: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    items: Vec<CatalogItem>,
}

static BUNDLED: LazyLock<Catalog> = LazyLock::new(|| {
    Catalog::parse(include_str!("../data/movies.tsv")).expect("bundled catalog is well formed")
});

impl Catalog {
    pub fn bundled() -> &'static Catalog {
        &BUNDLED
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut items = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (title, keywords) = raw.split_once('\t').ok_or_else(|| CatalogError {
                line,
                message: "expected title<TAB>keywords".into(),
            })?;
            let title = title.trim();
            if title.is_empty() {
                return Err(CatalogError { line, message: "empty title".into() });
            }
            let keywords = keywords
                .split(',')
                .map(|k| k.trim().to_lowercase())
                .filter(|k| !k.is_empty())
                .collect();
            items.push(CatalogItem { title: title.to_owned(), keywords });
        }
        if items.is_empty() {
            return Err(CatalogError { line: 0, message: "catalog is empty".into() });
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[CatalogItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
