//! Token- and entity-level scoring.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::Serialize;

use crate::dataset::{AnnotatedExample, Label};
use crate::tagger::{tokenize, Token};
use crate::{Error, Result};

/// Token class used for scoring; B/I distinctions are collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenClass {
    Disaster,
    Gpe,
    O,
}

impl TokenClass {
    /// Row/column order of the confusion matrix.
    pub const ORDER: [TokenClass; 3] = [TokenClass::Disaster, TokenClass::Gpe, TokenClass::O];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Disaster => "DISASTER",
            TokenClass::Gpe => "GPE",
            TokenClass::O => "O",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl From<Label> for TokenClass {
    fn from(l: Label) -> Self {
        match l {
            Label::Gpe => TokenClass::Gpe,
            Label::Disaster => TokenClass::Disaster,
        }
    }
}

/// A token takes the label of the span it intersects, `O` otherwise.
pub fn token_labels(example: &AnnotatedExample) -> Vec<(Token, TokenClass)> {
    tokenize(&example.text)
        .into_iter()
        .map(|tok| {
            let class = example
                .spans
                .iter()
                .find(|s| s.overlaps(tok.start, tok.end))
                .map_or(TokenClass::O, |s| s.label.into());
            (tok, class)
        })
        .collect()
}

/// Rows are gold classes, columns predicted, both in [`TokenClass::ORDER`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: TokenClass, pred: TokenClass) {
        self.counts[gold.index()][pred.index()] += 1;
    }

    pub fn get(&self, gold: TokenClass, pred: TokenClass) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn row_sum(&self, gold: TokenClass) -> u64 {
        self.counts[gold.index()].iter().sum()
    }

    pub fn column_sum(&self, pred: TokenClass) -> u64 {
        self.counts.iter().map(|r| r[pred.index()]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<10}", "gold\\pred");
        for c in TokenClass::ORDER {
            write!(out, "{:>10}", c.as_str()).unwrap();
        }
        out.push('\n');
        for g in TokenClass::ORDER {
            write!(out, "{:<10}", g.as_str()).unwrap();
            for p in TokenClass::ORDER {
                write!(out, "{:>10}", self.get(g, p)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn check_aligned(gold: &[AnnotatedExample], pred: &[AnnotatedExample]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "gold has {} examples, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.text != p.text {
            return Err(Error::TextMismatch {
                index,
                gold: g.text.clone(),
                pred: p.text.clone(),
            });
        }
    }
    Ok(())
}

pub fn confusion(gold: &[AnnotatedExample], pred: &[AnnotatedExample]) -> Result<ConfusionMatrix> {
    check_aligned(gold, pred)?;
    let mut cm = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        for ((_, gc), (_, pc)) in token_labels(g).into_iter().zip(token_labels(p)) {
            cm.add(gc, pc);
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    /// In [`TokenClass::ORDER`].
    pub classes: [(TokenClass, ClassMetrics); 3],
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_report(cm: &ConfusionMatrix) -> ClassReport {
    let classes = TokenClass::ORDER.map(|c| {
        let diag = cm.get(c, c);
        let precision = ratio(diag, cm.column_sum(c));
        let recall = ratio(diag, cm.row_sum(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        (
            c,
            ClassMetrics {
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
            },
        )
    });
    ClassReport {
        classes,
        accuracy: ratio(cm.trace(), cm.total()),
    }
}

impl ClassReport {
    pub fn get(&self, class: TokenClass) -> &ClassMetrics {
        &self.classes[class.index()].1
    }

    /// Plain-text table; the per-label accuracy column repeats recall.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<10}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
            "Label", "Precision", "Recall", "F1-Score", "Support", "Accuracy"
        );
        for (c, m) in &self.classes {
            writeln!(
                out,
                "{:<10}{:>10.2}{:>10.2}{:>10.2}{:>10}{:>10.2}",
                c.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support,
                m.recall
            )
            .unwrap();
        }
        writeln!(out, "\n{:<10}{:>10.4}", "accuracy", self.accuracy).unwrap();
        out
    }
}

impl Serialize for ClassReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        for (c, m) in &self.classes {
            map.serialize_entry(c.as_str(), m)?;
        }
        map.serialize_entry("accuracy", &self.accuracy)?;
        map.end()
    }
}

/// Fraction of gold spans of `label` reproduced exactly by the prediction.
/// With no gold spans of that label the score is 1.
pub fn entity_accuracy(
    gold: &[AnnotatedExample],
    pred: &[AnnotatedExample],
    label: Label,
) -> Result<f64> {
    check_aligned(gold, pred)?;
    let mut total = 0u64;
    let mut hit = 0u64;
    for (g, p) in gold.iter().zip(pred) {
        let predicted: HashSet<_> = p.spans.iter().collect();
        for s in g.spans.iter().filter(|s| s.label == label) {
            total += 1;
            if predicted.contains(s) {
                hit += 1;
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}
