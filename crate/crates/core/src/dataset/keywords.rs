use std::collections::HashSet;
use std::path::Path;

use crate::{Error, Result};

const BUNDLED: &str = include_str!("../../data/disaster_keywords.txt");

/// Disaster keywords grouped by category, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordTable {
    categories: Vec<(String, Vec<String>)>,
}

impl KeywordTable {
    pub fn from_categories(categories: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut out = Vec::with_capacity(categories.len());
        for (name, words) in categories {
            let words: Vec<String> = words.iter().map(|w| w.trim().to_lowercase()).collect();
            if words.iter().any(String::is_empty) {
                return Err(Error::Config(format!("empty keyword in category {name:?}")));
            }
            out.push((name, words));
        }
        Ok(KeywordTable { categories: out })
    }

    /// Parses `Category: kw, kw, ...` lines. Blank lines and `#` comments are
    /// ignored.
    pub fn parse(src: &str) -> Result<Self> {
        let mut categories = Vec::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, words) = line.split_once(':').ok_or_else(|| {
                Error::Config(format!("keyword table line {}: expected `category: words`", i + 1))
            })?;
            let words = words.split(',').map(|w| w.trim().to_owned()).collect();
            categories.push((name.trim().to_owned(), words));
        }
        Self::from_categories(categories)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src)
    }

    pub fn categories(&self) -> &[(String, Vec<String>)] {
        &self.categories
    }

    /// Every keyword once, in first-seen order.
    pub fn all_keywords(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.categories
            .iter()
            .flat_map(|(_, words)| words)
            .filter(|w| seen.insert(w.as_str()))
            .cloned()
            .collect()
    }
}

impl Default for KeywordTable {
    fn default() -> Self {
        Self::parse(BUNDLED).expect("bundled keyword table")
    }
}
