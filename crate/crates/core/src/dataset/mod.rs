//! Training and test data synthesis.
//!
//! Two training sets can be produced: fixed-template sentences over gazetteer
//! names, and real tweets whose location mentions are swapped for target
//! names. Both are span-tagged with GPE and DISASTER labels and stored as
//! JSONL.

mod jsonl;
mod keywords;
mod matcher;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gazetteer::{Gazetteer, LocationVerifier};
use crate::preprocess::{CleanTweet, RawTweet};
use crate::text::{casefold, char_len, char_slice};
use crate::{Error, Result};

pub use jsonl::{format_jsonl_line, parse_jsonl_line, read_jsonl, write_jsonl};
pub use keywords::KeywordTable;
pub use matcher::NameMatcher;

/// Placeholder replaced by the location name in sentence templates.
pub const PLACEHOLDER: &str = "{}";

pub const DEFAULT_TEMPLATE: &str = "{} was affected severely by the earthquake.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "GPE")]
    Gpe,
    #[serde(rename = "DISASTER")]
    Disaster,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Gpe => "GPE",
            Label::Disaster => "DISASTER",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: Label) -> Self {
        EntitySpan { start, end, label }
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedExample {
    pub text: String,
    pub spans: Vec<EntitySpan>,
}

impl AnnotatedExample {
    pub fn new(text: impl Into<String>, mut spans: Vec<EntitySpan>) -> Self {
        spans.sort();
        AnnotatedExample {
            text: text.into(),
            spans,
        }
    }

    pub fn unlabeled(text: impl Into<String>) -> Self {
        AnnotatedExample {
            text: text.into(),
            spans: Vec::new(),
        }
    }

    /// Checks bounds, ordering and non-overlap of the spans.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let len = char_len(&self.text);
        let mut prev_end = 0;
        for (i, s) in self.spans.iter().enumerate() {
            if s.start >= s.end || s.end > len {
                return Err(format!(
                    "span [{}, {}) out of bounds for text of length {len}",
                    s.start, s.end
                ));
            }
            if i > 0 && s.start < prev_end {
                return Err(format!("span [{}, {}) overlaps or is out of order", s.start, s.end));
            }
            prev_end = s.end;
        }
        Ok(())
    }

    pub fn span_text(&self, span: &EntitySpan) -> Option<&str> {
        char_slice(&self.text, span.start, span.end)
    }
}

/// One example per (template, location) pair with a GPE span over the name.
pub fn build_template_dataset(
    locations: &[String],
    templates: &[String],
) -> Result<Vec<AnnotatedExample>> {
    if locations.is_empty() {
        return Err(Error::InvalidInput("no locations for template dataset".into()));
    }
    let mut parts = Vec::with_capacity(templates.len());
    for t in templates {
        if t.matches(PLACEHOLDER).count() != 1 {
            return Err(Error::Config(format!(
                "template {t:?} must contain exactly one {PLACEHOLDER} placeholder"
            )));
        }
        let (head, tail) = t.split_once(PLACEHOLDER).unwrap();
        parts.push((head, char_len(head), tail));
    }

    let mut out = Vec::with_capacity(templates.len() * locations.len());
    for &(head, offset, tail) in &parts {
        for loc in locations {
            let text = format!("{head}{loc}{tail}");
            let span = EntitySpan::new(offset, offset + char_len(loc), Label::Gpe);
            out.push(AnnotatedExample::new(text, vec![span]));
        }
    }
    Ok(out)
}

fn inline_hashtag() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#(\w+)").unwrap())
}

/// Unique hashtags, case-folded and without the `#`. Tweets without a
/// hashtag field contribute the `#tokens` found in their content.
pub fn extract_hashtags(tweets: &[RawTweet]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in tweets {
        match &t.hashtags {
            Some(tags) => {
                out.extend(
                    tags.iter()
                        .map(|h| casefold(h.trim().trim_start_matches('#')))
                        .filter(|h| !h.is_empty()),
                );
            }
            None => {
                out.extend(inline_hashtag().captures_iter(&t.content).map(|c| casefold(&c[1])));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HashtagSet {
    pub all: BTreeSet<String>,
    pub valid_locations: BTreeSet<String>,
}

pub fn filter_location_hashtags(
    hashtags: &BTreeSet<String>,
    gazetteer: &Gazetteer,
    verifier: Option<&dyn LocationVerifier>,
) -> HashtagSet {
    let valid_locations = hashtags
        .iter()
        .filter(|h| gazetteer.validate_location(h, verifier))
        .cloned()
        .collect();
    HashtagSet {
        all: hashtags.clone(),
        valid_locations,
    }
}

/// Endless round-robin over target names. The starting position is the seed
/// reduced modulo the number of names.
#[derive(Debug, Clone)]
pub struct LocationCycle<'a> {
    names: &'a [String],
    pos: usize,
}

impl<'a> LocationCycle<'a> {
    pub fn new(names: &'a [String], seed: u64) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("no target locations to substitute".into()));
        }
        let pos = (seed % names.len() as u64) as usize;
        Ok(LocationCycle { names, pos })
    }

    pub fn next_name(&mut self) -> &'a str {
        let name = &self.names[self.pos];
        self.pos = (self.pos + 1) % self.names.len();
        name
    }
}

/// Swaps valid location mentions for target names.
///
/// Mentions are masked with `#` runs (longest match first at each position),
/// adjacent runs merge into one `#`, and every `#` is then replaced by the
/// next name from a [`LocationCycle`] shared across the whole corpus.
pub fn substitute_locations(
    tweets: &[CleanTweet],
    hashtags: &HashtagSet,
    target_locations: &[String],
    seed: u64,
) -> Result<Vec<CleanTweet>> {
    let mut cycle = LocationCycle::new(target_locations, seed)?;
    let masker = LocationMasker::new(&hashtags.valid_locations);
    Ok(tweets
        .iter()
        .map(|t| CleanTweet {
            content: fill_placeholders(&masker.mask(&t.content), &mut cycle),
            ..t.clone()
        })
        .collect())
}

struct LocationMasker {
    automaton: Option<AhoCorasick>,
}

impl LocationMasker {
    fn new(names: &BTreeSet<String>) -> Self {
        let patterns: Vec<&str> = names.iter().map(String::as_str).filter(|n| !n.is_empty()).collect();
        let automaton = (!patterns.is_empty()).then(|| {
            AhoCorasickBuilder::new()
                .ascii_case_insensitive(true)
                .match_kind(MatchKind::LeftmostLongest)
                .build(&patterns)
                .expect("location automaton")
        });
        LocationMasker { automaton }
    }

    fn mask(&self, text: &str) -> String {
        let Some(ac) = &self.automaton else {
            return text.to_owned();
        };
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for m in ac.find_iter(text) {
            out.push_str(&text[last..m.start()]);
            out.extend(std::iter::repeat_n('#', char_len(&text[m.range()])));
            last = m.end();
        }
        out.push_str(&text[last..]);
        out
    }
}

fn fill_placeholders(masked: &str, cycle: &mut LocationCycle<'_>) -> String {
    let mut out = String::with_capacity(masked.len());
    let mut in_run = false;
    for c in masked.chars() {
        if c == '#' {
            if !in_run {
                out.push_str(cycle.next_name());
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// Tags every word-bounded mention of `names` as GPE (leftmost-longest).
pub fn tag_gpe(tweets: &[CleanTweet], names: &[String]) -> Vec<AnnotatedExample> {
    let matcher = NameMatcher::new(names);
    tweets
        .iter()
        .map(|t| {
            let spans = matcher
                .find(&t.content, |_, _| true)
                .into_iter()
                .map(|(s, e)| EntitySpan::new(s, e, Label::Gpe))
                .collect();
            AnnotatedExample::new(t.content.clone(), spans)
        })
        .collect()
}

/// Adds DISASTER spans for keyword mentions that do not touch an existing
/// span.
pub fn tag_disaster(examples: &[AnnotatedExample], table: &KeywordTable) -> Vec<AnnotatedExample> {
    let matcher = NameMatcher::new(&table.all_keywords());
    examples
        .iter()
        .map(|ex| {
            let hits = matcher.find(&ex.text, |s, e| !ex.spans.iter().any(|sp| sp.overlaps(s, e)));
            let mut spans = ex.spans.clone();
            spans.extend(hits.into_iter().map(|(s, e)| EntitySpan::new(s, e, Label::Disaster)));
            AnnotatedExample::new(ex.text.clone(), spans)
        })
        .collect()
}

/// Counters for the realistic dataset build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RealisticStats {
    pub hashtags: usize,
    pub location_hashtags: usize,
    pub tweets: usize,
    pub gpe_spans: usize,
    pub disaster_spans: usize,
}

/// Hashtag extraction, verification, substitution, then GPE and DISASTER
/// tagging over `targets`.
pub fn build_realistic_dataset(
    raw: &[RawTweet],
    clean: &[CleanTweet],
    gazetteer: &Gazetteer,
    verifier: Option<&dyn LocationVerifier>,
    targets: &[String],
    keywords: &KeywordTable,
    seed: u64,
) -> Result<(Vec<AnnotatedExample>, RealisticStats)> {
    let hashtags = filter_location_hashtags(&extract_hashtags(raw), gazetteer, verifier);
    let substituted = substitute_locations(clean, &hashtags, targets, seed)?;
    let examples = tag_disaster(&tag_gpe(&substituted, targets), keywords);
    let stats = RealisticStats {
        hashtags: hashtags.all.len(),
        location_hashtags: hashtags.valid_locations.len(),
        tweets: examples.len(),
        gpe_spans: count_label(&examples, Label::Gpe),
        disaster_spans: count_label(&examples, Label::Disaster),
    };
    Ok((examples, stats))
}

/// Gold test data: GPE over the extended name set, then DISASTER.
pub fn build_test_dataset(
    clean: &[CleanTweet],
    names: &[String],
    keywords: &KeywordTable,
) -> Vec<AnnotatedExample> {
    tag_disaster(&tag_gpe(clean, names), keywords)
}

pub fn count_label(examples: &[AnnotatedExample], label: Label) -> usize {
    examples
        .iter()
        .flat_map(|e| &e.spans)
        .filter(|s| s.label == label)
        .count()
}
