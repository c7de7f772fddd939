use std::collections::HashSet;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};

use crate::text::{is_word_bounded, CharIndex};

/// Word-bounded, ASCII case-insensitive multi-pattern matcher.
///
/// All overlapping occurrences are collected from one automaton pass, those
/// not delimited by non-word characters are discarded, and the survivors are
/// reduced leftmost-longest to a non-overlapping set.
pub struct NameMatcher {
    automaton: Option<AhoCorasick>,
}

impl NameMatcher {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        let mut seen = HashSet::new();
        let patterns: Vec<&str> = names
            .iter()
            .map(AsRef::as_ref)
            .filter(|n| !n.is_empty() && seen.insert(n.to_ascii_lowercase()))
            .collect();
        let automaton = (!patterns.is_empty()).then(|| {
            AhoCorasickBuilder::new()
                .ascii_case_insensitive(true)
                .match_kind(MatchKind::Standard)
                .build(&patterns)
                .expect("name automaton")
        });
        NameMatcher { automaton }
    }

    /// Returns `(start, end)` character ranges. `accept` sees each bounded
    /// candidate (in character offsets) before the leftmost-longest pass.
    pub fn find(&self, text: &str, accept: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
        let Some(ac) = &self.automaton else {
            return Vec::new();
        };
        let index = CharIndex::new(text);
        let mut candidates: Vec<(usize, usize)> = ac
            .find_overlapping_iter(text)
            .filter(|m| is_word_bounded(text, m.start(), m.end()))
            .map(|m| (index.char_offset(m.start()), index.char_offset(m.end())))
            .filter(|&(s, e)| accept(s, e))
            .collect();
        candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        candidates.dedup();

        let mut chosen = Vec::new();
        let mut cursor = 0;
        for (s, e) in candidates {
            if s >= cursor {
                chosen.push((s, e));
                cursor = e;
            }
        }
        chosen
    }
}
