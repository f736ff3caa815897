//! Stage orchestration: ingest, filter, classify, compile, detect, report.
//!
//! Each stage reads JSON-lines artifacts from the output directory and
//! writes its own. `manifest.json` records input and output hashes so that
//! unchanged stages are skipped and stale upstream artifacts are refused.

pub mod artifact;
pub mod config;
pub mod report;
pub mod stages;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::resolver::ApiRegistry;

pub use artifact::{Manifest, StageEntry};
pub use config::{ClassifierParams, ContextSetting, LabelSource, Paths, PipelineConfig, ReportParams};
pub use report::{feedback_correlation, summarize, FeedbackRecord, Summary};
pub use stages::{Stage, StageContext, StageRegistry};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` must be run first: {reason}")]
    Upstream { stage: String, reason: String },
    #[error("data error: {0}")]
    Data(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Upstream { .. } => 3,
            PipelineError::Data(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageOutcome {
    Ran,
    Skipped,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    registry: ApiRegistry,
    stages: StageRegistry,
}

fn upstream(stage: &str, reason: impl Into<String>) -> PipelineError {
    PipelineError::Upstream {
        stage: stage.to_string(),
        reason: reason.into(),
    }
}

impl Pipeline {
    /// Validates the whole config before anything runs.
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        Self::with_stages(cfg, StageRegistry::builtin())
    }

    pub fn with_stages(cfg: PipelineConfig, stages: StageRegistry) -> Result<Self, PipelineError> {
        let registry = cfg.validate()?;
        Ok(Pipeline {
            cfg,
            registry,
            stages,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn stages(&self) -> &StageRegistry {
        &self.stages
    }

    /// Current hashes of a stage's inputs. Every artifact input must match
    /// what its producer recorded, and the producer must itself be fresh.
    fn input_hashes(&self, stage: &dyn Stage, manifest: &Manifest) -> Result<BTreeMap<String, String>, PipelineError> {
        let mut out = BTreeMap::new();
        for input in stage.inputs(&self.cfg) {
            let Some(producer) = input.producer else {
                if !input.path.exists() {
                    return Err(PipelineError::Config(format!(
                        "{} {} does not exist",
                        input.name,
                        input.path.display()
                    )));
                }
                out.insert(input.name, artifact::hash_path(&input.path)?);
                continue;
            };
            if !input.path.exists() {
                return Err(upstream(producer, format!("{} is missing", input.path.display())));
            }
            let entry = manifest
                .stages
                .get(producer)
                .ok_or_else(|| upstream(producer, format!("{} has no manifest record", input.name)))?;
            let h = artifact::hash_path(&input.path)?;
            if entry.outputs.get(&input.name) != Some(&h) {
                return Err(upstream(
                    producer,
                    format!("{} changed since `{producer}` wrote it", input.name),
                ));
            }
            let p = self
                .stages
                .get(producer)
                .ok_or_else(|| PipelineError::Config(format!("no stage named {producer}")))?;
            if self.input_hashes(p, manifest)? != entry.inputs {
                return Err(upstream(producer, "its inputs changed since it last ran"));
            }
            out.insert(input.name, h);
        }
        Ok(out)
    }

    fn params_hash(&self, stage: &dyn Stage) -> String {
        let text = serde_json::to_string(&stage.params(&self.cfg)).expect("params serialize");
        artifact::sha256_hex(text.as_bytes())
    }

    fn up_to_date(&self, stage: &dyn Stage, entry: &StageEntry, inputs: &BTreeMap<String, String>) -> bool {
        entry.params == self.params_hash(stage)
            && &entry.inputs == inputs
            && stage.outputs(&self.cfg).iter().all(|o| {
                o.path.is_file()
                    && artifact::hash_file(&o.path).ok().as_ref() == entry.outputs.get(&o.name)
            })
    }

    /// Runs one stage unless its recorded inputs, params and outputs are all
    /// unchanged (or `force` is set).
    pub fn run_stage(&self, name: &str, force: bool) -> Result<StageOutcome, PipelineError> {
        let stage = self
            .stages
            .get(name)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {name:?}")))?;
        let out_dir = &self.cfg.paths.output;
        std::fs::create_dir_all(out_dir)
            .map_err(|e| PipelineError::Config(format!("output {}: {e}", out_dir.display())))?;
        let mut manifest = Manifest::load(out_dir)?;
        let inputs = self.input_hashes(stage, &manifest)?;
        if !force {
            if let Some(entry) = manifest.stages.get(name) {
                if self.up_to_date(stage, entry, &inputs) {
                    return Ok(StageOutcome::Skipped);
                }
            }
        }
        stage.execute(&StageContext {
            cfg: &self.cfg,
            registry: &self.registry,
        })?;
        let mut outputs = BTreeMap::new();
        for o in stage.outputs(&self.cfg) {
            outputs.insert(o.name, artifact::hash_file(&o.path)?);
        }
        manifest.stages.insert(
            name.to_string(),
            StageEntry {
                params: self.params_hash(stage),
                inputs,
                outputs,
            },
        );
        manifest.save(out_dir)?;
        Ok(StageOutcome::Ran)
    }

    /// Every registered stage whose number lies in `range`, in order.
    pub fn run(&self, range: RangeInclusive<u8>, force: bool) -> Result<Vec<(&'static str, StageOutcome)>, PipelineError> {
        let names: Vec<&'static str> = self
            .stages
            .iter()
            .filter(|s| range.contains(&s.number()))
            .map(|s| s.name())
            .collect();
        let mut done = Vec::with_capacity(names.len());
        for name in names {
            done.push((name, self.run_stage(name, force)?));
        }
        Ok(done)
    }
}
