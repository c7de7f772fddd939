use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{DatasetStyle, PipelineConfig, TagMode, VerifierKind};
use crate::dataset::{
    build_realistic_dataset, build_template_dataset, build_test_dataset, count_label, read_jsonl,
    write_jsonl, AnnotatedExample, KeywordTable, Label, DEFAULT_TEMPLATE,
};
use crate::evaluate::{class_report, confusion, entity_accuracy};
use crate::gazetteer::{load_geonames, Gazetteer, LoadFilter, LocationVerifier};
use crate::preprocess::{
    dedupe, filter_english, filter_keywords, preprocess_corpus, read_clean_csv, read_tweets_csv,
    write_clean_csv, CleanTweet, CleanerConfig, RawTweet,
};
use crate::severity::{
    compare_maps, emit_geojson, gazetteer_country, geocode_entities, historical_country_frequencies,
    load_usgs_catalog, timeline, write_timeline_csv,
};
use crate::tagger::{train, TaggerModel};
use crate::{Error, Result};

pub const GAZETTEER_NAMES: &str = "gazetteer_names.txt";
pub const TARGETS: &str = "targets.txt";
pub const CLEAN: &str = "clean.csv";
pub const CLEAN_TEST: &str = "clean_test.csv";
pub const TRAIN_DATA: &str = "train.jsonl";
pub const MODEL: &str = "model.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const SEVERITY: &str = "severity.geojson";
pub const TIMELINE: &str = "timeline.csv";
pub const COMPARISON: &str = "comparison.json";
pub const COUNTRY_FREQUENCIES: &str = "country_frequencies.json";

pub fn tagged_file(mode: TagMode) -> String {
    format!("tagged-{}.jsonl", mode.as_str())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    stage: String,
    seed: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    counts: BTreeMap<String, Value>,
    wall_time_secs: f64,
}

/// Collects inputs, outputs and counters for one stage run.
struct StageRun<'a> {
    stage: &'static str,
    ctx: &'a Context,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    counts: BTreeMap<String, Value>,
}

impl<'a> StageRun<'a> {
    fn new(stage: &'static str, ctx: &'a Context) -> Self {
        info!("stage {stage}: start");
        StageRun {
            stage,
            ctx,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
        }
    }

    fn input(&mut self, p: &Path) {
        if !self.inputs.iter().any(|q| q == p) {
            self.inputs.push(p.to_owned());
        }
    }

    fn output(&mut self, p: PathBuf) {
        self.outputs.push(p);
    }

    fn count(&mut self, key: &str, v: impl Into<Value>) {
        let v = v.into();
        info!("stage {}: {key} = {v}", self.stage);
        self.counts.insert(key.to_owned(), v);
    }

    fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
        paths
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        let manifest = Manifest {
            stage: self.stage.to_owned(),
            seed: self.ctx.cfg.seed(),
            inputs: Self::digests(&self.inputs)?,
            outputs: Self::digests(&self.outputs)?,
            counts: self.counts,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = self.ctx.out(&format!("{}.manifest.json", self.stage));
        write_json(&path, &manifest)?;
        info!("stage {}: done in {:.3}s", self.stage, manifest.wall_time_secs);
        Ok(())
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut body = String::new();
    for l in lines {
        body.push_str(l);
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = std::collections::HashSet::new();
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && seen.insert(l.to_owned()))
        .map(str::to_owned)
        .collect())
}

/// Shared state for one invocation; expensive inputs load at most once.
pub struct Context {
    pub cfg: PipelineConfig,
    gazetteer: OnceCell<Gazetteer>,
    regional: OnceCell<Gazetteer>,
    keywords: OnceCell<KeywordTable>,
}

impl Context {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
        Ok(Context {
            cfg,
            gazetteer: OnceCell::new(),
            regional: OnceCell::new(),
            keywords: OnceCell::new(),
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn existing_out(&self, name: &str, produced_by: &str) -> Result<PathBuf> {
        let p = self.out(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::InvalidInput(format!(
                "{} is missing; run `{produced_by}` first",
                p.display()
            )))
        }
    }

    /// The whole dump; hashtag validation may name places in any country.
    fn gazetteer(&self, run: &mut StageRun) -> Result<&Gazetteer> {
        let path = self.cfg.require("gazetteer", &self.cfg.gazetteer)?;
        run.input(path);
        if let Some(g) = self.gazetteer.get() {
            return Ok(g);
        }
        let (g, stats) = load_geonames(path, &LoadFilter::default())?;
        info!(
            "gazetteer: {} records from {} lines ({} malformed, {} duplicate ids)",
            g.len(),
            stats.lines,
            stats.malformed,
            stats.duplicate_ids
        );
        Ok(self.gazetteer.get_or_init(|| g))
    }

    /// Records of the configured country, or the whole dump when none is set.
    fn regional(&self, run: &mut StageRun) -> Result<&Gazetteer> {
        let full = self.gazetteer(run)?;
        if let Some(g) = self.regional.get() {
            return Ok(g);
        }
        let g = if self.cfg.country.is_empty() {
            full.clone()
        } else {
            let sub = Gazetteer::from_records(
                full.records()
                    .iter()
                    .filter(|r| self.cfg.country.contains(&r.country_code.to_ascii_uppercase()))
                    .cloned(),
            );
            if sub.is_empty() {
                return Err(Error::EmptyGazetteer {
                    path: self.cfg.gazetteer.clone().unwrap_or_default(),
                });
            }
            sub
        };
        Ok(self.regional.get_or_init(|| g))
    }

    fn keywords(&self, run: &mut StageRun) -> Result<&KeywordTable> {
        if let Some(p) = &self.cfg.keywords {
            run.input(p);
        }
        if let Some(k) = self.keywords.get() {
            return Ok(k);
        }
        let table = match &self.cfg.keywords {
            Some(p) => KeywordTable::load(p)?,
            None => KeywordTable::default(),
        };
        Ok(self.keywords.get_or_init(|| table))
    }

    fn targets(&self, run: &mut StageRun) -> Result<Vec<String>> {
        let names = match &self.cfg.targets {
            Some(p) => {
                run.input(p);
                read_lines(p)?
            }
            None => {
                let regional = self.regional(run)?;
                match &self.cfg.feature_classes {
                    None => regional.primary_names(),
                    Some(classes) => Gazetteer::from_records(
                        regional.records().iter().filter(|r| classes.contains(&r.feature_class)).cloned(),
                    )
                    .primary_names(),
                }
            }
        };
        if names.is_empty() {
            return Err(Error::InvalidInput("no target locations".into()));
        }
        Ok(names)
    }

    fn verifier(&self) -> Option<Box<dyn LocationVerifier>> {
        match self.cfg.verifier {
            VerifierKind::None => None,
            VerifierKind::OpenCage => {
                #[cfg(feature = "opencage")]
                {
                    match crate::gazetteer::OpenCageVerifier::from_env() {
                        Some(v) => return Some(Box::new(v)),
                        None => warn!("OPENCAGE_API_KEY is not set; verifying on gazetteer evidence only"),
                    }
                }
                None
            }
        }
    }

    /// Keyword selection, English filter and dedupe over a raw export.
    fn select(&self, run: &mut StageRun, path: &Path, tag: &str) -> Result<Vec<RawTweet>> {
        run.input(path);
        let (raw, skipped) = read_tweets_csv(path)?;
        let keywords = match &self.cfg.corpus_keywords {
            Some(k) => k.clone(),
            None => self.keywords(run)?.all_keywords(),
        };
        let selected = filter_keywords(&raw, &keywords);
        let english = filter_english(&selected);
        let unique = dedupe(&english);
        run.count(&format!("{tag}_rows"), raw.len() + skipped);
        run.count(&format!("{tag}_rows_skipped"), skipped);
        run.count(&format!("{tag}_keyword_matches"), selected.len());
        run.count(&format!("{tag}_english"), english.len());
        run.count(&format!("{tag}_unique"), unique.len());
        Ok(unique)
    }

    fn clean(&self, run: &mut StageRun, path: &Path, tag: &str) -> Result<(Vec<RawTweet>, Vec<CleanTweet>)> {
        let raw = self.select(run, path, tag)?;
        let clean = preprocess_corpus(&raw, &CleanerConfig::default());
        run.count(&format!("{tag}_clean"), clean.len());
        Ok((raw, clean))
    }

    fn metadata(&self, run: &StageRun) -> Result<Value> {
        let inputs: BTreeMap<String, String> = run
            .inputs
            .iter()
            .map(|p| Ok((file_name(p), sha256_file(p)?)))
            .collect::<Result<_>>()?;
        Ok(json!({"seed": self.cfg.seed(), "inputs": inputs}))
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn ingest_gazetteer(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("ingest-gazetteer", ctx);
    let full_len = ctx.gazetteer(&mut run)?.len();
    let regional = ctx.regional(&mut run)?;
    let names = regional.name_list().to_vec();
    let regional_len = regional.len();
    let targets = ctx.targets(&mut run)?;
    run.count("records", full_len);
    run.count("regional_records", regional_len);
    run.count("names", names.len());
    run.count("targets", targets.len());
    for (name, lines) in [(GAZETTEER_NAMES, &names), (TARGETS, &targets)] {
        let p = ctx.out(name);
        write_lines(&p, lines)?;
        run.output(p);
    }
    run.finish()
}

pub fn preprocess(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("preprocess", ctx);
    let tweets = ctx.cfg.require("tweets", &ctx.cfg.tweets)?;
    let (_, clean) = ctx.clean(&mut run, tweets, "train")?;
    let p = ctx.out(CLEAN);
    write_clean_csv(&p, &clean)?;
    run.output(p);

    let test = ctx.cfg.test_tweets().expect("tweets is set");
    let (_, clean_test) = ctx.clean(&mut run, test, "test")?;
    let p = ctx.out(CLEAN_TEST);
    write_clean_csv(&p, &clean_test)?;
    run.output(p);
    run.finish()
}

pub fn build_dataset(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("build-dataset", ctx);
    let targets = ctx.targets(&mut run)?;
    let examples = match ctx.cfg.style {
        DatasetStyle::Template => {
            let templates = match &ctx.cfg.templates {
                Some(p) => {
                    run.input(p);
                    read_lines(p)?
                }
                None => vec![DEFAULT_TEMPLATE.to_owned()],
            };
            run.count("style", "template");
            run.count("templates", templates.len());
            build_template_dataset(&targets, &templates)?
        }
        DatasetStyle::Realistic => {
            let tweets = ctx.cfg.require("tweets", &ctx.cfg.tweets)?;
            let (raw, clean) = ctx.clean(&mut run, tweets, "train")?;
            let gazetteer = ctx.gazetteer(&mut run)?;
            let keywords = ctx.keywords(&mut run)?.clone();
            let verifier = ctx.verifier();
            let (examples, stats) = build_realistic_dataset(
                &raw,
                &clean,
                gazetteer,
                verifier.as_deref(),
                &targets,
                &keywords,
                ctx.cfg.seed(),
            )?;
            run.count("style", "realistic");
            run.count("hashtags", stats.hashtags);
            run.count("location_hashtags", stats.location_hashtags);
            examples
        }
    };
    run.count("targets", targets.len());
    run.count("examples", examples.len());
    run.count("gpe_spans", count_label(&examples, Label::Gpe));
    run.count("disaster_spans", count_label(&examples, Label::Disaster));
    let p = ctx.out(TRAIN_DATA);
    write_jsonl(&examples, &p)?;
    run.output(p);
    run.finish()
}

pub fn train_model(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("train", ctx);
    let data = ctx.existing_out(TRAIN_DATA, "build-dataset")?;
    run.input(&data);
    let examples = read_jsonl(&data)?;
    if examples.is_empty() {
        return Err(Error::InvalidInput(format!("{} holds no examples", data.display())));
    }
    let model = train(&examples, &ctx.cfg.hyperparams)?;
    let meta = model.meta();
    run.count("examples", meta.examples);
    run.count("tokens", meta.tokens);
    run.count("features", model.num_features());
    run.count("final_loss", meta.epoch_losses.last().copied().unwrap_or(0.0));
    let p = ctx.out(MODEL);
    model.save(&p)?;
    run.output(p);
    run.finish()
}

pub fn tag(ctx: &Context, mode: TagMode) -> Result<()> {
    let mut run = StageRun::new(if mode == TagMode::Model { "tag-model" } else { "tag-gazetteer" }, ctx);
    let input = ctx.existing_out(CLEAN_TEST, "preprocess")?;
    run.input(&input);
    let tweets = read_clean_csv(&input)?;
    let tagged: Vec<AnnotatedExample> = match mode {
        TagMode::Model => {
            let path = ctx.existing_out(MODEL, "train")?;
            run.input(&path);
            let model = TaggerModel::load(&path)?;
            tweets
                .iter()
                .map(|t| AnnotatedExample::new(t.content.clone(), model.predict(&t.content)))
                .collect()
        }
        TagMode::Gazetteer => {
            let names = ctx.regional(&mut run)?.name_list().to_vec();
            let keywords = ctx.keywords(&mut run)?.clone();
            build_test_dataset(&tweets, &names, &keywords)
        }
    };
    let with_gpe = tagged
        .iter()
        .filter(|e| e.spans.iter().any(|s| s.label == Label::Gpe))
        .count();
    run.count("tweets", tagged.len());
    run.count("tweets_with_gpe", with_gpe);
    run.count("gpe_spans", count_label(&tagged, Label::Gpe));
    run.count("disaster_spans", count_label(&tagged, Label::Disaster));
    let p = ctx.out(&tagged_file(mode));
    write_jsonl(&tagged, &p)?;
    run.output(p);
    run.finish()
}

pub fn evaluate(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("evaluate", ctx);
    let gold_path = match &ctx.cfg.gold {
        Some(p) => p.clone(),
        None => ctx.existing_out(&tagged_file(TagMode::Gazetteer), "tag --mode gazetteer")?,
    };
    let pred_path = match &ctx.cfg.pred {
        Some(p) => p.clone(),
        None => ctx.existing_out(&tagged_file(TagMode::Model), "tag --mode model")?,
    };
    run.input(&gold_path);
    run.input(&pred_path);
    let gold = read_jsonl(&gold_path)?;
    let pred = read_jsonl(&pred_path)?;
    let cm = confusion(&gold, &pred)?;
    let report = class_report(&cm);
    let gpe = entity_accuracy(&gold, &pred, Label::Gpe)?;
    let disaster = entity_accuracy(&gold, &pred, Label::Disaster)?;
    run.count("examples", gold.len());
    run.count("tokens", cm.total());
    run.count("accuracy", report.accuracy);

    let mut json = serde_json::to_value(&report)?;
    json["entity_accuracy"] = json!({"GPE": gpe, "DISASTER": disaster});
    json["confusion"] = json!({
        "labels": crate::evaluate::TokenClass::ORDER.map(|c| c.as_str()),
        "counts": cm.counts,
    });
    json["metadata"] = ctx.metadata(&run)?;
    let p = ctx.out(REPORT_JSON);
    write_json(&p, &json)?;
    run.output(p);

    let text = format!(
        "{}\nentity accuracy: GPE {gpe:.4}, DISASTER {disaster:.4}\n\nconfusion (rows gold, columns predicted)\n{}",
        report.to_text(),
        cm.to_text()
    );
    let p = ctx.out(REPORT_TEXT);
    std::fs::write(&p, &text).map_err(|e| Error::io(&p, e))?;
    run.output(p);
    print!("{text}");
    run.finish()
}

fn tagged_for_map(ctx: &Context, run: &mut StageRun) -> Result<Vec<AnnotatedExample>> {
    let path = match &ctx.cfg.pred {
        Some(p) => p.clone(),
        None => ctx.existing_out(&tagged_file(ctx.cfg.mode), &format!("tag --mode {}", ctx.cfg.mode.as_str()))?,
    };
    run.input(&path);
    read_jsonl(&path)
}

pub fn map(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("map", ctx);
    let tagged = tagged_for_map(ctx, &mut run)?;
    let (points, unresolved) = geocode_entities(&tagged, ctx.regional(&mut run)?);
    run.count("points", points.len());
    run.count("mentions", points.iter().map(|p| p.count).sum::<u64>());
    run.count("unresolved", unresolved);
    let meta = ctx.metadata(&run)?;
    let p = ctx.out(SEVERITY);
    emit_geojson(&points, &p, Some(&meta))?;
    run.output(p);
    run.finish()
}

pub fn timeline_stage(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("timeline", ctx);
    let input = ctx.existing_out(CLEAN_TEST, "preprocess")?;
    run.input(&input);
    let days = timeline(&read_clean_csv(&input)?);
    run.count("days", days.len());
    if let Some((day, n)) = days.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
        run.count("peak_day", day.to_string());
        run.count("peak_count", *n);
    }
    let p = ctx.out(TIMELINE);
    write_timeline_csv(&p, &days)?;
    run.output(p);
    run.finish()
}

pub fn compare(ctx: &Context) -> Result<()> {
    let mut run = StageRun::new("compare", ctx);
    let usgs = ctx.cfg.require("usgs", &ctx.cfg.usgs)?;
    run.input(usgs);
    let (catalog, skipped) = load_usgs_catalog(usgs)?;
    run.count("epicenters", catalog.len());
    run.count("catalog_rows_skipped", skipped);

    let full = ctx.gazetteer(&mut run)?;
    let resolver = gazetteer_country(full);
    let freq = historical_country_frequencies(&catalog, ctx.cfg.min_magnitude, &resolver);
    run.count("countries", freq.len());
    let p = ctx.out(COUNTRY_FREQUENCIES);
    write_json(
        &p,
        &json!({
            "min_magnitude": ctx.cfg.min_magnitude,
            "country_resolution": "approximate: trailing region of the place string resolved through the gazetteer",
            "frequencies": freq,
        }),
    )?;
    run.output(p);

    let tagged = tagged_for_map(ctx, &mut run)?;
    let (points, _) = geocode_entities(&tagged, ctx.regional(&mut run)?);
    let epicenters: Vec<_> = catalog
        .into_iter()
        .filter(|e| e.magnitude >= ctx.cfg.min_magnitude)
        .collect();
    let report = compare_maps(&points, &epicenters)?;
    run.count("weighted_mean_km", report.weighted_mean_km);
    let mut json = serde_json::to_value(&report)?;
    json["metadata"] = ctx.metadata(&run)?;
    let p = ctx.out(COMPARISON);
    write_json(&p, &json)?;
    run.output(p);
    run.finish()
}

pub fn all(ctx: &Context) -> Result<()> {
    ingest_gazetteer(ctx)?;
    preprocess(ctx)?;
    build_dataset(ctx)?;
    train_model(ctx)?;
    tag(ctx, TagMode::Model)?;
    tag(ctx, TagMode::Gazetteer)?;
    evaluate(ctx)?;
    map(ctx)?;
    timeline_stage(ctx)?;
    if ctx.cfg.usgs.is_some() {
        compare(ctx)?;
    } else {
        warn!("usgs is not set; skipping map comparison");
    }
    Ok(())
}
