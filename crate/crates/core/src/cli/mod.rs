//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for an invalid configuration, 1 when a stage
//! fails.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

pub use config::{DatasetStyle, PipelineConfig, TagMode, VerifierKind};
pub use stages::{sha256_file, tagged_file, Context};

use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "quakener", version, about = "Extract locations and disaster terms from earthquake tweets")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated ISO country codes for target locations.
    #[arg(long, global = true)]
    pub country: Option<String>,
    #[arg(long, global = true)]
    pub min_magnitude: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the GeoNames dump and write the name and target lists.
    IngestGazetteer,
    /// Select, filter, dedupe and clean the tweet exports.
    Preprocess,
    /// Write the training set as JSONL.
    BuildDataset {
        #[arg(long, value_enum)]
        style: Option<DatasetStyle>,
    },
    /// Train the tagger on the built dataset.
    Train,
    /// Tag the cleaned test tweets.
    Tag {
        #[arg(long, value_enum)]
        mode: Option<TagMode>,
    },
    /// Score predictions against gold annotations.
    Evaluate,
    /// Geocode tagged locations into a severity GeoJSON.
    Map,
    /// Tweets per day.
    Timeline,
    /// Compare the severity map against a USGS catalog.
    Compare,
    /// Run every stage in order.
    All {
        #[arg(long, value_enum)]
        style: Option<DatasetStyle>,
    },
}

impl Cli {
    /// File values, then flag overrides.
    pub fn resolve_config(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.hyperparams.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(c) = &self.country {
            cfg.country = config::parse_country_list(c);
        }
        if let Some(m) = self.min_magnitude {
            cfg.min_magnitude = m;
        }
        match &self.command {
            Command::BuildDataset { style: Some(s) } | Command::All { style: Some(s) } => cfg.style = *s,
            Command::Tag { mode: Some(m) } => cfg.mode = *m,
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let cfg = match cli.resolve_config() {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mode = cfg.mode;
    let result = Context::new(cfg).and_then(|ctx| match cli.command {
        Command::IngestGazetteer => stages::ingest_gazetteer(&ctx),
        Command::Preprocess => stages::preprocess(&ctx),
        Command::BuildDataset { .. } => stages::build_dataset(&ctx),
        Command::Train => stages::train_model(&ctx),
        Command::Tag { .. } => stages::tag(&ctx, mode),
        Command::Evaluate => stages::evaluate(&ctx),
        Command::Map => stages::map(&ctx),
        Command::Timeline => stages::timeline_stage(&ctx),
        Command::Compare => stages::compare(&ctx),
        Command::All { .. } => stages::all(&ctx),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    run(Cli::parse())
}
