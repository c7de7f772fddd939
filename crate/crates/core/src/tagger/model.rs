use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{argmax, Hyperparams};
use super::{static_features, prev_tag_feature, tags_to_spans, tokenize, Tag};
use crate::dataset::EntitySpan;
use crate::{Error, Result};

const FORMAT: &str = "quakener-tagger";
const VERSION: u32 = 1;
const KEY_SEP: char = '\u{0}';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub hyperparams: Hyperparams,
    pub dataset_fingerprint: String,
    pub examples: usize,
    pub tokens: usize,
    /// Per epoch, the fraction of training tokens the averaged weights
    /// mispredict at the end of that epoch (greedy decoding, no dropout).
    pub epoch_losses: Vec<f64>,
    /// Per epoch, the fraction of tokens mispredicted during the training
    /// pass itself, with dropout applied.
    #[serde(default)]
    pub epoch_online_errors: Vec<f64>,
}

/// Averaged perceptron weights plus training metadata. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    weights: HashMap<String, [f64; 5]>,
    meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    labels: Vec<Tag>,
    meta: ModelMeta,
    /// `"<feature>\u0000<label>" -> weight`, zero weights omitted.
    weights: BTreeMap<String, f64>,
}

impl TaggerModel {
    pub(super) fn from_parts(weights: HashMap<String, [f64; 5]>, meta: ModelMeta) -> Self {
        TaggerModel { weights, meta }
    }

    /// A model with no weights; it tags everything `O`.
    pub fn empty(meta: ModelMeta) -> Self {
        TaggerModel {
            weights: HashMap::new(),
            meta,
        }
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn labels(&self) -> [Tag; 5] {
        Tag::ALL
    }

    pub fn weight(&self, feature: &str, tag: Tag) -> f64 {
        self.weights.get(feature).map_or(0.0, |w| w[tag.index()])
    }

    pub fn num_features(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, feats: &[String]) -> Tag {
        let mut scores = [0.0; 5];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        argmax(&scores)
    }

    /// Greedy left-to-right decoding, one tag per token.
    pub fn predict_tags(&self, text: &str) -> (Vec<super::Token>, Vec<Tag>) {
        let tokens = tokenize(text);
        let mut tags = Vec::with_capacity(tokens.len());
        let mut prev = None;
        for i in 0..tokens.len() {
            let mut feats = static_features(&tokens, i);
            feats.push(prev_tag_feature(prev));
            let tag = self.score(&feats);
            tags.push(tag);
            prev = Some(tag);
        }
        (tokens, tags)
    }

    pub fn predict(&self, text: &str) -> Vec<EntitySpan> {
        let (tokens, tags) = self.predict_tags(text);
        tags_to_spans(&tokens, &tags)
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut weights = BTreeMap::new();
        for (feature, w) in &self.weights {
            for tag in Tag::ALL {
                let x = w[tag.index()];
                if x != 0.0 {
                    weights.insert(format!("{feature}{KEY_SEP}{tag}"), x);
                }
            }
        }
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            labels: Tag::ALL.to_vec(),
            meta: self.meta.clone(),
            weights,
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        if file.labels != Tag::ALL {
            return Err(Error::InvalidInput("model label set differs".into()));
        }
        let mut weights: HashMap<String, [f64; 5]> = HashMap::new();
        for (key, x) in file.weights {
            let (feature, label) = key
                .rsplit_once(KEY_SEP)
                .ok_or_else(|| Error::InvalidInput(format!("bad weight key {key:?}")))?;
            let tag = Tag::parse(label)
                .ok_or_else(|| Error::InvalidInput(format!("unknown label {label:?}")))?;
            if !x.is_finite() {
                return Err(Error::NonFiniteWeight {
                    feature: feature.into(),
                });
            }
            weights.entry(feature.to_owned()).or_default()[tag.index()] = x;
        }
        Ok(TaggerModel {
            weights,
            meta: file.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AnnotatedExample, Label};
    use crate::tagger::train;

    fn meta() -> ModelMeta {
        ModelMeta {
            hyperparams: Hyperparams::default(),
            dataset_fingerprint: String::new(),
            examples: 0,
            tokens: 0,
            epoch_losses: vec![],
            epoch_online_errors: vec![],
        }
    }

    #[test]
    fn zero_weights_predict_nothing() {
        let m = TaggerModel::empty(meta());
        assert!(m.predict("").is_empty());
        let (_, tags) = m.predict_tags("Tokyo is shaking");
        assert!(tags.iter().all(|&t| t == Tag::O));
        assert!(m.predict("Tokyo is shaking").is_empty());
    }

    #[test]
    fn learns_a_novel_place_name() {
        let frames = [
            ("{} was hit hard", 0),
            ("people in {} need water", 10),
            ("thinking of everyone in {} tonight", 23),
            ("roads near {} are closed", 11),
            ("stay safe {} friends", 10),
            ("news from {} is bad", 10),
        ];
        let mut data = Vec::new();
        for (frame, at) in frames {
            data.push(AnnotatedExample::new(
                frame.replace("{}", "Zorania"),
                vec![EntitySpan::new(at, at + 7, Label::Gpe)],
            ));
            data.push(AnnotatedExample::unlabeled(frame.replace("{}", "the city")));
        }
        let hp = Hyperparams {
            epochs: 10,
            learning_rate: 1.0,
            ..Hyperparams::default()
        };
        let m = train(&data, &hp).unwrap();
        let spans = m.predict("we pray for Zorania today");
        assert_eq!(spans, [EntitySpan::new(12, 19, Label::Gpe)]);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let data = vec![AnnotatedExample::new(
            "quake near Suzu city",
            vec![EntitySpan::new(11, 15, Label::Gpe)],
        )];
        let m = train(&data, &Hyperparams { epochs: 3, ..Hyperparams::default() }).unwrap();
        let bytes = m.to_json_bytes().unwrap();
        let back = TaggerModel::from_json_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json_bytes().unwrap(), bytes);
        assert_eq!(back.meta().hyperparams.seed, 0);
        assert_eq!(back.meta().dataset_fingerprint.len(), 64);

        assert!(TaggerModel::from_json_bytes(b"{}").is_err());
    }
}
