//! Sequence tagger for GPE and DISASTER mentions.
//!
//! A greedy left-to-right averaged perceptron over BIO tags. Features are
//! purely orthographic and contextual; gazetteer membership is deliberately
//! not a feature, so everything the model knows about place names comes from
//! its training data.

mod model;
mod train;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotatedExample, EntitySpan, Label};

pub use model::{ModelMeta, TaggerModel};
pub use train::{batch_sizes, train, Hyperparams};

/// BIO tag. The declaration order is the tie-break order used when decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "O")]
    O,
    #[serde(rename = "B-GPE")]
    BGpe,
    #[serde(rename = "I-GPE")]
    IGpe,
    #[serde(rename = "B-DISASTER")]
    BDisaster,
    #[serde(rename = "I-DISASTER")]
    IDisaster,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::O, Tag::BGpe, Tag::IGpe, Tag::BDisaster, Tag::IDisaster];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::O => "O",
            Tag::BGpe => "B-GPE",
            Tag::IGpe => "I-GPE",
            Tag::BDisaster => "B-DISASTER",
            Tag::IDisaster => "I-DISASTER",
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn label(self) -> Option<Label> {
        match self {
            Tag::O => None,
            Tag::BGpe | Tag::IGpe => Some(Label::Gpe),
            Tag::BDisaster | Tag::IDisaster => Some(Label::Disaster),
        }
    }

    fn begin(label: Label) -> Tag {
        match label {
            Label::Gpe => Tag::BGpe,
            Label::Disaster => Tag::BDisaster,
        }
    }

    fn inside(label: Label) -> Tag {
        match label {
            Label::Gpe => Tag::IGpe,
            Label::Disaster => Tag::IDisaster,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A token with character offsets into the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '\''
}

/// Maximal runs of `[A-Za-z0-9']`; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let mut n = 0;
    for (pos, c) in text.chars().enumerate() {
        n = pos + 1;
        if is_token_char(c) {
            current.get_or_insert_with(|| (pos, String::new())).1.push(c);
        } else if let Some((start, tok)) = current.take() {
            tokens.push(Token {
                end: start + tok.len(),
                text: tok,
                start,
            });
        }
    }
    if let Some((start, tok)) = current {
        debug_assert_eq!(start + tok.len(), n);
        tokens.push(Token {
            end: start + tok.len(),
            text: tok,
            start,
        });
    }
    tokens
}

const START: &str = "<s>";
const END: &str = "</s>";

/// Collapsed word shape: `Tokyo` -> `Xx`, `USGS` -> `X`, `2024` -> `d`.
pub fn word_shape(token: &str) -> String {
    let mut shape = String::new();
    for c in token.chars() {
        let s = if c.is_ascii_uppercase() {
            'X'
        } else if c.is_ascii_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if !shape.ends_with(s) {
            shape.push(s);
        }
    }
    shape
}

fn is_title(token: &str) -> bool {
    let mut chars = token.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && chars.clone().any(|c| c.is_ascii_lowercase())
        && !chars.any(|c| c.is_ascii_uppercase())
}

/// Features of token `i` that do not depend on the previous tag.
fn static_features(tokens: &[Token], i: usize) -> Vec<String> {
    let tok = &tokens[i].text;
    let lower = tok.to_ascii_lowercase();
    let chars: Vec<char> = lower.chars().collect();

    let mut f = Vec::with_capacity(16);
    f.push("bias".to_owned());
    f.push(format!("w={lower}"));
    for k in 1..=3.min(chars.len()) {
        f.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
        f.push(format!("s{k}={}", chars[chars.len() - k..].iter().collect::<String>()));
    }
    f.push(format!("shape={}", word_shape(tok)));
    if is_title(tok) {
        f.push("title".to_owned());
    }
    let prev = i
        .checked_sub(1)
        .map_or(START.to_owned(), |j| tokens[j].text.to_ascii_lowercase());
    let next = tokens
        .get(i + 1)
        .map_or(END.to_owned(), |t| t.text.to_ascii_lowercase());
    f.push(format!("-1w={prev}"));
    f.push(format!("+1w={next}"));
    f
}

fn prev_tag_feature(prev: Option<Tag>) -> String {
    format!("-1t={}", prev.map_or(START, Tag::as_str))
}

/// Feature strings for token `i`; `prev` is `None` at the sentence start.
pub fn features(tokens: &[Token], i: usize, prev: Option<Tag>) -> Vec<String> {
    let mut f = static_features(tokens, i);
    f.push(prev_tag_feature(prev));
    f
}

/// Per-token BIO tags for a span set. Spans that cut through a token are
/// widened to whole tokens; a token already claimed by an earlier span stays
/// with it.
pub fn spans_to_tags(tokens: &[Token], spans: &[EntitySpan]) -> Vec<Tag> {
    let mut tags = vec![Tag::O; tokens.len()];
    for span in spans {
        let mut first = true;
        for (t, tok) in tokens.iter().enumerate() {
            if tok.end <= span.start || tok.start >= span.end || tags[t] != Tag::O {
                continue;
            }
            tags[t] = if first {
                Tag::begin(span.label)
            } else {
                Tag::inside(span.label)
            };
            first = false;
        }
    }
    tags
}

/// Merges B/I runs into character spans. An `I` that does not continue a run
/// of the same label opens a new span.
pub fn tags_to_spans(tokens: &[Token], tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut open: Option<Label> = None;
    for (tok, &tag) in tokens.iter().zip(tags) {
        let Some(label) = tag.label() else {
            open = None;
            continue;
        };
        let continues = matches!(tag, Tag::IGpe | Tag::IDisaster) && open == Some(label);
        if continues {
            spans.last_mut().expect("open span").end = tok.end;
        } else {
            spans.push(EntitySpan::new(tok.start, tok.end, label));
            open = Some(label);
        }
    }
    spans
}

/// Gold tags for an example.
pub fn example_tags(example: &AnnotatedExample) -> (Vec<Token>, Vec<Tag>) {
    let tokens = tokenize(&example.text);
    let tags = spans_to_tags(&tokens, &example.spans);
    (tokens, tags)
}
