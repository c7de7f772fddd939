use std::collections::HashMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{ModelMeta, TaggerModel};
use super::{example_tags, prev_tag_feature, static_features, Tag};
use crate::dataset::{format_jsonl_line, AnnotatedExample};
use crate::{Error, Result};

const NUM_TAGS: usize = Tag::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    /// Probability of omitting each feature during a training update.
    pub dropout: f64,
    pub batch_start: usize,
    pub batch_stop: usize,
    pub batch_growth: f64,
    /// Scales every perceptron update. Uniform scaling leaves the decision
    /// rule unchanged, so this mainly matters for the stored magnitudes.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 40,
            dropout: 0.2,
            batch_start: 128,
            batch_stop: 256,
            batch_growth: 1.3,
            learning_rate: 1e-5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.batch_start == 0 || self.batch_stop == 0 {
            return fail("batch sizes must be positive");
        }
        if self.batch_start > self.batch_stop {
            return fail("batch_start must not exceed batch_stop");
        }
        if !(self.batch_growth.is_finite() && self.batch_growth >= 1.0) {
            return fail("batch_growth must be a finite ratio >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Batch sizes `min(stop, floor(start * growth^k))` for k = 0, 1, ...
pub fn batch_sizes(hp: &Hyperparams) -> impl Iterator<Item = usize> + '_ {
    (0..).map(move |k: i32| {
        let size = (hp.batch_start as f64 * hp.batch_growth.powi(k)).floor();
        if size >= hp.batch_stop as f64 {
            hp.batch_stop
        } else {
            size as usize
        }
    })
}

// A training sentence with its features interned.
struct Sentence {
    static_ids: Vec<Vec<usize>>,
    gold: Vec<Tag>,
}

/// Weights with lazily maintained running sums for averaging.
///
/// `step` counts finished token decisions. A weight's value is folded into
/// `totals` only when it changes, weighted by how many steps it was held.
struct Averager {
    weights: Vec<[f64; NUM_TAGS]>,
    totals: Vec<[f64; NUM_TAGS]>,
    stamps: Vec<[u64; NUM_TAGS]>,
    step: u64,
}

impl Averager {
    fn new(n_features: usize) -> Self {
        Averager {
            weights: vec![[0.0; NUM_TAGS]; n_features],
            totals: vec![[0.0; NUM_TAGS]; n_features],
            stamps: vec![[0; NUM_TAGS]; n_features],
            step: 0,
        }
    }

    fn best(&self, feats: &[usize]) -> Tag {
        best_tag(&self.weights, feats)
    }

    fn bump(&mut self, f: usize, tag: Tag, delta: f64) {
        let t = tag.index();
        self.totals[f][t] += (self.step - self.stamps[f][t]) as f64 * self.weights[f][t];
        self.stamps[f][t] = self.step;
        self.weights[f][t] += delta;
    }

    fn update(&mut self, feats: &[usize], gold: Tag, guess: Tag, rate: f64) {
        if gold != guess {
            for &f in feats {
                self.bump(f, gold, rate);
                self.bump(f, guess, -rate);
            }
        }
        self.step += 1;
    }

    fn averaged(&self) -> Vec<[f64; NUM_TAGS]> {
        let steps = self.step.max(1) as f64;
        self.weights
            .iter()
            .zip(&self.totals)
            .zip(&self.stamps)
            .map(|((w, tot), st)| {
                std::array::from_fn(|t| {
                    let total = tot[t] + (self.step - st[t]) as f64 * w[t];
                    total / steps
                })
            })
            .collect()
    }
}

fn best_tag(weights: &[[f64; NUM_TAGS]], feats: &[usize]) -> Tag {
    let mut scores = [0.0; NUM_TAGS];
    for &f in feats {
        for (s, w) in scores.iter_mut().zip(&weights[f]) {
            *s += w;
        }
    }
    argmax(&scores)
}

/// Highest score; ties go to the earliest tag in [`Tag::ALL`].
pub(super) fn argmax(scores: &[f64; NUM_TAGS]) -> Tag {
    let mut best = 0;
    for t in 1..NUM_TAGS {
        if scores[t] > scores[best] {
            best = t;
        }
    }
    Tag::ALL[best]
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, usize>,
    names: Vec<String>,
}

impl Interner {
    fn id(&mut self, f: String) -> usize {
        if let Some(&id) = self.ids.get(&f) {
            return id;
        }
        let id = self.names.len();
        self.names.push(f.clone());
        self.ids.insert(f, id);
        id
    }
}

/// SHA-256 over the JSONL serialization of the dataset.
pub fn dataset_fingerprint(dataset: &[AnnotatedExample]) -> String {
    let mut h = Sha256::new();
    for ex in dataset {
        h.update(format_jsonl_line(ex).as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Mispredicted tokens when the training set is decoded greedily with the
/// given weights and no dropout.
fn averaged_errors(
    sentences: &[Sentence],
    weights: &[[f64; NUM_TAGS]],
    prev_id: &dyn Fn(Option<Tag>) -> usize,
) -> usize {
    let mut errors = 0;
    let mut feats = Vec::new();
    for sent in sentences {
        let mut prev = None;
        for (ids, &gold) in sent.static_ids.iter().zip(&sent.gold) {
            feats.clear();
            feats.extend(ids.iter().copied());
            feats.push(prev_id(prev));
            let guess = best_tag(weights, &feats);
            errors += usize::from(guess != gold);
            prev = Some(guess);
        }
    }
    errors
}

/// Trains a tagger.
///
/// Each epoch shuffles the examples with a seeded permutation and walks them
/// in batches of growing size. Inside an example, tokens are decoded greedily
/// left to right (the predicted tag feeds the next token's features) and
/// every mistake triggers a perceptron update. With `dropout > 0` each
/// feature is independently left out of a token's decision and update.
pub fn train(dataset: &[AnnotatedExample], hp: &Hyperparams) -> Result<TaggerModel> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("training dataset is empty".into()));
    }
    hp.validate()?;
    for (i, ex) in dataset.iter().enumerate() {
        ex.validate()
            .map_err(|m| Error::InvalidInput(format!("training example {i}: {m}")))?;
    }

    let mut interner = Interner::default();
    let prev_ids: Vec<usize> = std::iter::once(None)
        .chain(Tag::ALL.into_iter().map(Some))
        .map(|p| interner.id(prev_tag_feature(p)))
        .collect();
    let prev_id = |p: Option<Tag>| prev_ids[p.map_or(0, |t| t.index() + 1)];

    let sentences: Vec<Sentence> = dataset
        .iter()
        .map(|ex| {
            let (tokens, gold) = example_tags(ex);
            let static_ids = (0..tokens.len())
                .map(|i| {
                    static_features(&tokens, i)
                        .into_iter()
                        .map(|f| interner.id(f))
                        .collect()
                })
                .collect();
            Sentence { static_ids, gold }
        })
        .collect();
    let total_tokens: usize = sentences.iter().map(|s| s.gold.len()).sum();

    let mut model = Averager::new(interner.names.len());
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut losses = Vec::with_capacity(hp.epochs);
    let mut online = Vec::with_capacity(hp.epochs);
    let mut feats = Vec::new();

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut errors = 0usize;
        let mut rest = &order[..];
        for size in batch_sizes(hp) {
            if rest.is_empty() {
                break;
            }
            let (batch, tail) = rest.split_at(size.min(rest.len()));
            rest = tail;
            for &si in batch {
                let sent = &sentences[si];
                let mut prev = None;
                for (ids, &gold) in sent.static_ids.iter().zip(&sent.gold) {
                    feats.clear();
                    feats.extend(ids.iter().copied());
                    feats.push(prev_id(prev));
                    if hp.dropout > 0.0 {
                        feats.retain(|_| !rng.gen_bool(hp.dropout));
                    }
                    let guess = model.best(&feats);
                    if guess != gold {
                        errors += 1;
                    }
                    model.update(&feats, gold, guess, hp.learning_rate);
                    prev = Some(guess);
                }
            }
        }
        let rate = |n: usize| if total_tokens == 0 { 0.0 } else { n as f64 / total_tokens as f64 };
        let loss = rate(averaged_errors(&sentences, &model.averaged(), &prev_id));
        debug!("epoch {}: loss {loss:.5}, online errors {:.5}", epoch + 1, rate(errors));
        losses.push(loss);
        online.push(rate(errors));
    }

    let averaged = model.averaged();
    let mut weights = HashMap::with_capacity(averaged.len());
    for (name, w) in interner.names.into_iter().zip(averaged) {
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteWeight { feature: name });
        }
        if w.iter().any(|&x| x != 0.0) {
            weights.insert(name, w);
        }
    }

    let meta = ModelMeta {
        hyperparams: hp.clone(),
        dataset_fingerprint: dataset_fingerprint(dataset),
        examples: dataset.len(),
        tokens: total_tokens,
        epoch_losses: losses,
        epoch_online_errors: online,
    };
    Ok(TaggerModel::from_parts(weights, meta))
}
