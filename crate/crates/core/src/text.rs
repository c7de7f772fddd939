//! Small string helpers shared by the matchers, tokenizer and evaluator.
//!
//! Spans everywhere in this crate are expressed in *character* offsets, the
//! convention used by the JSONL training format. Matchers work on bytes
//! internally and convert at the edges.

/// Case folding used for every name comparison.
pub fn casefold(s: &str) -> String {
    s.to_lowercase()
}

/// Characters that glue a match to its neighbours. A match is only accepted
/// when the characters on either side are not word characters.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// True when the byte range `[start, end)` of `text` is delimited by
/// non-word characters (or the string edges) on both sides.
pub fn is_word_bounded(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
}

/// Maps byte offsets of `text` to character offsets.
///
/// Built once per text; for ASCII input the mapping is the identity and no
/// table is allocated.
pub struct CharIndex {
    // byte offset -> char offset, only populated for non-ASCII text
    table: Option<Vec<usize>>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        if text.is_ascii() {
            return CharIndex { table: None };
        }
        let mut table = vec![0; text.len() + 1];
        let mut chars = 0;
        for (b, c) in text.char_indices() {
            for slot in &mut table[b..b + c.len_utf8()] {
                *slot = chars;
            }
            chars += 1;
        }
        table[text.len()] = chars;
        CharIndex { table: Some(table) }
    }

    pub fn char_offset(&self, byte: usize) -> usize {
        match &self.table {
            None => byte,
            Some(t) => t[byte],
        }
    }
}

/// Returns the substring between two character offsets, or `None` when the
/// offsets fall outside the text.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut idx = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = idx.by_ref().nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        idx.nth(end - start - 1)?
    };
    Some(&text[b_start..b_end])
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}
