//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! taken relative to the directory holding the config file. Command-line
//! flags override file values.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::tagger::Hyperparams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DatasetStyle {
    Template,
    Realistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TagMode {
    Model,
    Gazetteer,
}

impl TagMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TagMode::Model => "model",
            TagMode::Gazetteer => "gazetteer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierKind {
    None,
    OpenCage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// GeoNames dump.
    pub gazetteer: Option<PathBuf>,
    /// Tweets used to build the realistic training set.
    pub tweets: Option<PathBuf>,
    /// Tweets of the event under study; defaults to `tweets`.
    pub test_tweets: Option<PathBuf>,
    /// Keyword table; the bundled one when absent.
    pub keywords: Option<PathBuf>,
    /// Target location names, one per line. Defaults to the primary names of
    /// the gazetteer records in `country`.
    pub targets: Option<PathBuf>,
    /// Template sentences, one per line.
    pub templates: Option<PathBuf>,
    pub usgs: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Upper-case ISO codes of the target country; empty means all.
    pub country: BTreeSet<String>,
    /// GeoNames feature classes counted as target locations; `None` keeps
    /// every class. Only the default target list is filtered.
    pub feature_classes: Option<BTreeSet<char>>,
    /// Corpus selection keywords; the whole keyword table when absent.
    pub corpus_keywords: Option<Vec<String>>,
    pub verifier: VerifierKind,
    pub style: DatasetStyle,
    pub mode: TagMode,
    pub min_magnitude: f64,
    pub hyperparams: Hyperparams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gazetteer: None,
            tweets: None,
            test_tweets: None,
            keywords: None,
            targets: None,
            templates: None,
            usgs: None,
            gold: None,
            pred: None,
            out_dir: PathBuf::from("out"),
            country: BTreeSet::new(),
            feature_classes: Some(BTreeSet::from(['P'])),
            corpus_keywords: None,
            verifier: VerifierKind::None,
            style: DatasetStyle::Realistic,
            mode: TagMode::Model,
            min_magnitude: 7.0,
            hyperparams: Hyperparams::default(),
        }
    }
}

fn field_err(line: usize, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {key}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| field_err(line, key, format!("{v:?}: {e}")))
}

pub fn parse_country_list(v: &str) -> BTreeSet<String> {
    v.split(',')
        .map(|c| c.trim().to_ascii_uppercase())
        .filter(|c| !c.is_empty())
        .collect()
}

/// `P,A` style class list; `all` disables the filter.
fn parse_feature_classes(v: &str) -> std::result::Result<Option<BTreeSet<char>>, String> {
    if v.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let mut out = BTreeSet::new();
    for c in v.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let mut chars = c.chars();
        match (chars.next(), chars.next()) {
            (Some(ch), None) if ch.is_ascii_alphabetic() => out.insert(ch.to_ascii_uppercase()),
            _ => return Err(format!("{c:?} is not a feature class letter")),
        };
    }
    if out.is_empty() {
        return Err("empty class list".into());
    }
    Ok(Some(out))
}

impl PipelineConfig {
    /// Parses config text. `base` anchors relative paths.
    pub fn parse(src: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            let (key, v) = (key.trim(), value.trim());
            let hp = &mut cfg.hyperparams;
            match key {
                "gazetteer" => cfg.gazetteer = Some(path(v)),
                "tweets" => cfg.tweets = Some(path(v)),
                "test_tweets" => cfg.test_tweets = Some(path(v)),
                "keywords" => cfg.keywords = Some(path(v)),
                "targets" => cfg.targets = Some(path(v)),
                "templates" => cfg.templates = Some(path(v)),
                "usgs" => cfg.usgs = Some(path(v)),
                "gold" => cfg.gold = Some(path(v)),
                "pred" => cfg.pred = Some(path(v)),
                "out_dir" => cfg.out_dir = path(v),
                "country" => cfg.country = parse_country_list(v),
                "feature_classes" => cfg.feature_classes = parse_feature_classes(v).map_err(|e| field_err(line, key, e))?,
                "corpus_keywords" => {
                    cfg.corpus_keywords = Some(
                        v.split(',')
                            .map(|k| k.trim().to_owned())
                            .filter(|k| !k.is_empty())
                            .collect(),
                    )
                }
                "verifier" => {
                    cfg.verifier = match v {
                        "none" => VerifierKind::None,
                        "opencage" => VerifierKind::OpenCage,
                        _ => return Err(field_err(line, key, format!("unknown verifier {v:?}"))),
                    }
                }
                "style" => {
                    cfg.style = clap::ValueEnum::from_str(v, true).map_err(|e| field_err(line, key, e))?
                }
                "mode" => cfg.mode = clap::ValueEnum::from_str(v, true).map_err(|e| field_err(line, key, e))?,
                "min_magnitude" => cfg.min_magnitude = parse_num(line, key, v)?,
                "seed" => hp.seed = parse_num(line, key, v)?,
                "epochs" => hp.epochs = parse_num(line, key, v)?,
                "dropout" => hp.dropout = parse_num(line, key, v)?,
                "batch_start" => hp.batch_start = parse_num(line, key, v)?,
                "batch_stop" => hp.batch_stop = parse_num(line, key, v)?,
                "batch_growth" => hp.batch_growth = parse_num(line, key, v)?,
                "learning_rate" => hp.learning_rate = parse_num(line, key, v)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&src, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn seed(&self) -> u64 {
        self.hyperparams.seed
    }

    pub fn test_tweets(&self) -> Option<&Path> {
        self.test_tweets.as_deref().or(self.tweets.as_deref())
    }

    /// Checks values shared by every stage and the existence of each input
    /// file that is set.
    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        if !self.min_magnitude.is_finite() {
            return Err(Error::Config("min_magnitude: must be finite".into()));
        }
        if self.verifier == VerifierKind::OpenCage && !cfg!(feature = "opencage") {
            return Err(Error::Config(
                "verifier: opencage support is not compiled in (enable the `opencage` feature)".into(),
            ));
        }
        let inputs = [
            ("gazetteer", &self.gazetteer),
            ("tweets", &self.tweets),
            ("test_tweets", &self.test_tweets),
            ("keywords", &self.keywords),
            ("targets", &self.targets),
            ("templates", &self.templates),
            ("usgs", &self.usgs),
        ];
        for (name, p) in inputs {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Error::Config(format!("{name}: no such file {}", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Fails with a field-level message when a stage input is not set.
    pub fn require<'a>(&self, name: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("{name}: required by this stage but not set")))
    }
}
