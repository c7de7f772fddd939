//! Tweet ingestion and cleaning.
//!
//! Raw tweets pass through an English filter, exact-content deduplication
//! and a character-level cleaner that leaves plain single-spaced ASCII.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use log::warn;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::text::casefold;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RawTweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub content: String,
    pub language_tag: Option<String>,
    /// `None` when the export has no hashtag column or the cell is empty.
    pub hashtags: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanTweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanerConfig {
    kept_symbols: Vec<char>,
}

impl CleanerConfig {
    pub fn new(kept_symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let mut kept = Vec::new();
        for c in kept_symbols {
            if !kept.contains(&c) {
                kept.push(c);
            }
        }
        if kept.is_empty() {
            return Err(Error::Config("kept_symbols must not be empty".into()));
        }
        Ok(CleanerConfig { kept_symbols: kept })
    }

    pub fn kept_symbols(&self) -> &[char] {
        &self.kept_symbols
    }
}

impl Default for CleanerConfig {
    fn default() -> Self {
        CleanerConfig {
            kept_symbols: vec![',', '?', '!', ';'],
        }
    }
}

/// Links: `http://`, `https://` or `www.` up to the next whitespace.
pub fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap())
}

/// Keeps tweets whose content or hashtags mention any keyword
/// (case-insensitive substring match).
pub fn filter_keywords(tweets: &[RawTweet], keywords: &[String]) -> Vec<RawTweet> {
    let keys: Vec<String> = keywords.iter().map(|k| casefold(k)).collect();
    tweets
        .iter()
        .filter(|t| {
            let content = casefold(&t.content);
            let tags: Vec<String> = t
                .hashtags
                .iter()
                .flatten()
                .map(|h| casefold(h))
                .collect();
            keys.iter()
                .any(|k| content.contains(k.as_str()) || tags.iter().any(|h| h.contains(k.as_str())))
        })
        .cloned()
        .collect()
}

const ASCII_FALLBACK_RATIO: f64 = 0.9;

pub fn is_english(t: &RawTweet) -> bool {
    match &t.language_tag {
        Some(lang) => lang == "en",
        None => {
            let total = t.content.chars().count();
            let ascii = t.content.chars().filter(char::is_ascii).count();
            total == 0 || ascii as f64 >= ASCII_FALLBACK_RATIO * total as f64
        }
    }
}

pub fn filter_english(tweets: &[RawTweet]) -> Vec<RawTweet> {
    tweets.iter().filter(|t| is_english(t)).cloned().collect()
}

/// Drops tweets whose content repeats an earlier tweet's content verbatim.
pub fn dedupe(tweets: &[RawTweet]) -> Vec<RawTweet> {
    let mut seen = HashSet::new();
    tweets
        .iter()
        .filter(|t| seen.insert(t.content.as_str()))
        .cloned()
        .collect()
}

/// Cleans one tweet text. `None` means the text must be discarded.
///
/// Steps, in order:
/// 1. every non-ASCII character (emoji included) becomes a space;
/// 2. links are deleted;
/// 3. a space is appended after each `.` unless it sits between two digits;
/// 4. any other symbol outside the kept set becomes a space;
/// 5. a space is appended after each kept symbol;
/// 6. whitespace runs collapse to one space and the ends are trimmed;
/// 7. anything still non-ASCII rejects the tweet.
pub fn clean(text: &str, cfg: &CleanerConfig) -> Option<String> {
    let ascii: String = text
        .chars()
        .map(|c| if c.is_ascii() { c } else { ' ' })
        .collect();
    let delinked = url_pattern().replace_all(&ascii, "");
    let bytes = delinked.as_bytes();

    let mut out = String::with_capacity(bytes.len() + bytes.len() / 4);
    for (i, &b) in bytes.iter().enumerate() {
        let c = b as char;
        if c == '.' {
            out.push('.');
            let prev_digit = i > 0 && bytes[i - 1].is_ascii_digit();
            let next_digit = bytes.get(i + 1).is_some_and(u8::is_ascii_digit);
            if !(prev_digit && next_digit) {
                out.push(' ');
            }
        } else if cfg.kept_symbols.contains(&c) {
            out.push(c);
            out.push(' ');
        } else if is_symbol(c) {
            out.push(' ');
        } else {
            out.push(c);
        }
    }

    let normalized = out.split_whitespace().collect::<Vec<_>>().join(" ");
    normalized.is_ascii().then_some(normalized)
}

// Punctuation plus control characters; whitespace is handled by step 6.
fn is_symbol(c: char) -> bool {
    c.is_ascii_punctuation() || (c.is_ascii_control() && !c.is_ascii_whitespace())
}

/// English filter, dedupe, then clean; empty or rejected texts are dropped.
pub fn preprocess_corpus(tweets: &[RawTweet], cfg: &CleanerConfig) -> Vec<CleanTweet> {
    let english = filter_english(tweets);
    dedupe(&english)
        .into_iter()
        .filter_map(|t| {
            let content = clean(&t.content, cfg)?;
            (!content.is_empty()).then_some(CleanTweet {
                id: t.id,
                timestamp: t.timestamp,
                content,
            })
        })
        .collect()
}

/// Accepts RFC 3339 as well as the space-separated and offset-less variants
/// common in tweet exports. Offset-less times are taken as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%:z", "%Y-%m-%d %H:%M:%S%z", "%Y-%m-%dT%H:%M:%S%z"] {
        if let Ok(t) = DateTime::parse_from_str(raw, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Deserialize)]
struct RawRow {
    id: String,
    date: String,
    content: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    hashtags: Option<String>,
}

/// Reads the tweet CSV (`id,date,content[,lang][,hashtags]`). Rows with an
/// empty id or an unparseable date are skipped; the count is returned.
pub fn read_tweets_csv(path: &Path) -> Result<(Vec<RawTweet>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    for column in ["id", "date", "content"] {
        if !headers.iter().any(|h| h.trim() == column) {
            return Err(Error::MissingColumn {
                path: path.to_owned(),
                column: column.into(),
            });
        }
    }

    let mut tweets = Vec::new();
    let mut skipped = 0;
    for (i, row) in reader.deserialize::<RawRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let timestamp = match parse_timestamp(&row.date) {
            Some(t) if !row.id.trim().is_empty() => t,
            _ => {
                warn!("{}: row {}: bad id or date {:?}", path.display(), i + 2, row.date);
                skipped += 1;
                continue;
            }
        };
        let language_tag = row.lang.map(|l| l.trim().to_owned()).filter(|l| !l.is_empty());
        let hashtags = row
            .hashtags
            .map(|h| {
                h.split(';')
                    .map(|t| t.trim().trim_start_matches('#').to_owned())
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|h| !h.is_empty());
        tweets.push(RawTweet {
            id: row.id.trim().to_owned(),
            timestamp,
            content: row.content,
            language_tag,
            hashtags,
        });
    }
    Ok((tweets, skipped))
}

#[derive(Debug, Serialize, Deserialize)]
struct CleanRow {
    id: String,
    date: String,
    content: String,
}

pub fn write_clean_csv(path: &Path, tweets: &[CleanTweet]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    // the header is written explicitly so an empty corpus still has one
    w.write_record(["id", "date", "content"])
        .map_err(|e| Error::csv(path, e))?;
    for t in tweets {
        w.write_record([t.id.as_str(), &format_timestamp(&t.timestamp), &t.content])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_clean_csv(path: &Path) -> Result<Vec<CleanTweet>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<CleanRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let timestamp = parse_timestamp(&row.date).ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message: format!("bad date {:?}", row.date),
        })?;
        out.push(CleanTweet {
            id: row.id,
            timestamp,
            content: row.content,
        });
    }
    Ok(out)
}
