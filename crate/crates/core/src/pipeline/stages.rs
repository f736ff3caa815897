//! The builtin stages and their artifact records.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classifier::{self, SvmModel, TokenDocument, TrainingSet};
use crate::clone::{self, CloneMatch, CompiledUnit};
use crate::ingest::{self, Diagnostics, SnippetId, SnippetRecord};
use crate::resolver::{is_security_related, ApiRegistry, FilterRecord};
use crate::rules::{self, rule_catalog, Category, Context, Label};

use super::artifact::{read_jsonl, write_atomic, write_json, write_jsonl};
use super::report::{self, FeedbackRecord, SnippetVerdict};
use super::{LabelSource, PipelineConfig, PipelineError};

pub const SNIPPETS: &str = "snippets.jsonl";
pub const INGEST_STATS: &str = "ingest_stats.json";
pub const FILTER: &str = "filter.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const VERDICTS: &str = "verdicts.jsonl";
pub const SNIPPET_IR: &str = "snippet_ir.jsonl";
pub const CORPUS_IR: &str = "corpus_ir.jsonl";
pub const MATCHES: &str = "matches.jsonl";
pub const FEEDBACK: &str = "feedback.jsonl";
pub const SUMMARY: &str = "summary.json";
pub const TIERS_CSV: &str = "feedback_tiers.csv";
pub const WARNINGS_CSV: &str = "warnings.csv";
pub const MODEL: &str = "model";
pub const CATALOG: &str = "rule_catalog";

/// Something a stage reads. `producer` is `None` for external inputs.
#[derive(Debug, Clone)]
pub struct Input {
    pub name: String,
    pub path: PathBuf,
    pub producer: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub name: String,
    pub path: PathBuf,
}

pub struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub registry: &'a ApiRegistry,
}

impl StageContext<'_> {
    pub fn artifact(&self, file: &str) -> PathBuf {
        self.cfg.paths.output.join(file)
    }
}

pub trait Stage: Send + Sync {
    fn name(&self) -> &'static str;
    /// Position in the five-step flow; several stages may share a number.
    fn number(&self) -> u8;
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input>;
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output>;
    /// Settings that change the outputs; a change forces a re-run.
    fn params(&self, _cfg: &PipelineConfig) -> serde_json::Value {
        serde_json::Value::Null
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError>;
}

fn artifact_input(cfg: &PipelineConfig, file: &str, producer: &'static str) -> Input {
    Input {
        name: file.to_string(),
        path: cfg.paths.output.join(file),
        producer: Some(producer),
    }
}

fn external(name: &str, path: &std::path::Path) -> Input {
    Input {
        name: name.to_string(),
        path: path.to_path_buf(),
        producer: None,
    }
}

fn artifact_output(cfg: &PipelineConfig, file: &str) -> Output {
    Output {
        name: file.to_string(),
        path: cfg.paths.output.join(file),
    }
}

fn registry_input(cfg: &PipelineConfig) -> Vec<Input> {
    cfg.paths
        .registry
        .iter()
        .map(|p| external("registry", p))
        .collect()
}

fn data(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub posts: usize,
    pub snippets_before_dedupe: usize,
    pub snippets: usize,
    pub diagnostics: Diagnostics,
}

pub struct IngestStage;

impl Stage for IngestStage {
    fn name(&self) -> &'static str {
        "ingest"
    }
    fn number(&self) -> u8 {
        1
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        vec![external("dump", &cfg.paths.dump)]
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![artifact_output(cfg, SNIPPETS), artifact_output(cfg, INGEST_STATS)]
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        json!({ "tag_filter": cfg.tag_filter })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let path = &ctx.cfg.paths.dump;
        let file = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let (posts, mut diagnostics) =
            ingest::parse_dump(BufReader::new(file), &ctx.cfg.tag_filter).map_err(data)?;
        let mut all = Vec::new();
        for post in &posts {
            all.extend(ingest::extract_snippets(post, &mut diagnostics));
        }
        let before = all.len();
        let snippets = ingest::dedupe(all);
        write_jsonl(&ctx.artifact(SNIPPETS), "snippets", self.name(), &snippets)?;
        write_json(
            &ctx.artifact(INGEST_STATS),
            &IngestStats {
                posts: posts.len(),
                snippets_before_dedupe: before,
                snippets: snippets.len(),
                diagnostics,
            },
        )
    }
}

pub struct FilterStage;

impl Stage for FilterStage {
    fn name(&self) -> &'static str {
        "filter"
    }
    fn number(&self) -> u8 {
        2
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        let mut v = vec![artifact_input(cfg, SNIPPETS, "ingest")];
        v.extend(registry_input(cfg));
        v
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![artifact_output(cfg, FILTER)]
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetRecord> = read_jsonl(&ctx.artifact(SNIPPETS), "snippets")?;
        let records: Vec<FilterRecord> = snippets
            .par_iter()
            .map(|s| is_security_related(s, ctx.registry))
            .collect();
        write_jsonl(&ctx.artifact(FILTER), "filter", self.name(), &records)
    }
}

/// Rule-engine verdict for one security-related snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub snippet_id: SnippetId,
    pub context: Context,
    pub label: Label,
    pub categories: BTreeSet<Category>,
    pub fired_rules: Vec<String>,
}

pub struct LabelStage;

impl Stage for LabelStage {
    fn name(&self) -> &'static str {
        "label"
    }
    fn number(&self) -> u8 {
        3
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        vec![
            artifact_input(cfg, SNIPPETS, "ingest"),
            artifact_input(cfg, FILTER, "filter"),
        ]
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        let mut v = vec![artifact_output(cfg, LABELS)];
        if let Some(p) = &cfg.paths.rule_catalog {
            v.push(Output {
                name: CATALOG.into(),
                path: p.clone(),
            });
        }
        v
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        json!({ "context": cfg.context })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetRecord> = read_jsonl(&ctx.artifact(SNIPPETS), "snippets")?;
        let filter: Vec<FilterRecord> = read_jsonl(&ctx.artifact(FILTER), "filter")?;
        let related: BTreeMap<SnippetId, &FilterRecord> = filter
            .iter()
            .filter(|f| f.related)
            .map(|f| (f.snippet_id, f))
            .collect();
        let records: Vec<LabelRecord> = snippets
            .par_iter()
            .filter_map(|s| {
                let f = related.get(&s.snippet_id)?;
                let context = ctx.cfg.context.resolve(&s.code_text);
                let v = rules::label(s, &f.resolved, context);
                Some(LabelRecord {
                    snippet_id: s.snippet_id,
                    context,
                    label: v.label,
                    categories: v.categories,
                    fired_rules: v.fired_rules,
                })
            })
            .collect();
        write_jsonl(&ctx.artifact(LABELS), "labels", self.name(), &records)?;
        if let Some(p) = &ctx.cfg.paths.rule_catalog {
            write_atomic(p, rule_catalog().to_json().as_bytes())?;
        }
        Ok(())
    }
}

/// Token documents and targets for every snippet on which some rule fired.
/// Snippets no rule speaks about carry no label signal.
pub fn training_data(
    snippets: &[SnippetRecord],
    labels: &[LabelRecord],
) -> (Vec<TokenDocument>, Vec<i8>) {
    let by_id: BTreeMap<SnippetId, &SnippetRecord> =
        snippets.iter().map(|s| (s.snippet_id, s)).collect();
    let mut docs = Vec::new();
    let mut y = Vec::new();
    for l in labels.iter().filter(|l| !l.fired_rules.is_empty()) {
        if let Some(s) = by_id.get(&l.snippet_id) {
            docs.push(classifier::tokenize(&s.code_text));
            y.push(l.label.as_target());
        }
    }
    (docs, y)
}

/// Reads the ingest and label artifacts of a finished run.
pub fn load_training_data(cfg: &PipelineConfig) -> Result<(Vec<TokenDocument>, Vec<i8>), PipelineError> {
    let out = &cfg.paths.output;
    let snippets: Vec<SnippetRecord> = read_jsonl(&out.join(SNIPPETS), "snippets")?;
    let labels: Vec<LabelRecord> = read_jsonl(&out.join(LABELS), "labels")?;
    Ok(training_data(&snippets, &labels))
}

pub struct TrainStage;

impl Stage for TrainStage {
    fn name(&self) -> &'static str {
        "train"
    }
    fn number(&self) -> u8 {
        3
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        vec![
            artifact_input(cfg, SNIPPETS, "ingest"),
            artifact_input(cfg, LABELS, "label"),
        ]
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![Output {
            name: MODEL.into(),
            path: cfg.model_path(),
        }]
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        let c = &cfg.classifier;
        json!({ "c": c.c, "epochs": c.epochs, "seed": c.seed })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let (docs, y) = load_training_data(ctx.cfg)?;
        let ts = TrainingSet::from_documents(&docs, y).map_err(data)?;
        let c = &ctx.cfg.classifier;
        let model = classifier::train(&ts, c.c, c.epochs, c.seed).map_err(data)?;
        write_atomic(&ctx.cfg.model_path(), model.to_json().as_bytes())
    }
}

/// Final label for one security-related snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub snippet_id: SnippetId,
    pub label: Label,
    pub rule_label: Label,
    pub svm_label: Label,
    pub margin: f64,
    pub fired_rules: Vec<String>,
}

pub struct ClassifyStage;

impl Stage for ClassifyStage {
    fn name(&self) -> &'static str {
        "classify"
    }
    fn number(&self) -> u8 {
        3
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        vec![
            artifact_input(cfg, SNIPPETS, "ingest"),
            artifact_input(cfg, LABELS, "label"),
            Input {
                name: MODEL.into(),
                path: cfg.model_path(),
                producer: Some("train"),
            },
        ]
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![artifact_output(cfg, VERDICTS)]
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        json!({ "label_source": cfg.label_source })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetRecord> = read_jsonl(&ctx.artifact(SNIPPETS), "snippets")?;
        let labels: Vec<LabelRecord> = read_jsonl(&ctx.artifact(LABELS), "labels")?;
        let model_path = ctx.cfg.model_path();
        let text = std::fs::read_to_string(&model_path)
            .map_err(|e| data(format!("{}: {e}", model_path.display())))?;
        let model = SvmModel::from_json(&text).map_err(data)?;
        let code: BTreeMap<SnippetId, &str> = snippets
            .iter()
            .map(|s| (s.snippet_id, s.code_text.as_str()))
            .collect();
        let records: Vec<VerdictRecord> = labels
            .par_iter()
            .filter_map(|l| {
                let p = model.predict_text(code.get(&l.snippet_id)?);
                let svm_label = Label::from_target(p.label);
                Some(VerdictRecord {
                    snippet_id: l.snippet_id,
                    label: match ctx.cfg.label_source {
                        LabelSource::Rules => l.label,
                        LabelSource::Svm => svm_label,
                    },
                    rule_label: l.label,
                    svm_label,
                    margin: p.margin,
                    fired_rules: l.fired_rules.clone(),
                })
            })
            .collect();
        write_jsonl(&ctx.artifact(VERDICTS), "verdicts", self.name(), &records)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub reason: String,
    pub message: String,
}

/// A compiled snippet, or why it could not be compiled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetIrRecord {
    pub snippet_id: SnippetId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<CompiledUnit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Rejected>,
}

pub struct CompileStage;

impl Stage for CompileStage {
    fn name(&self) -> &'static str {
        "compile"
    }
    fn number(&self) -> u8 {
        4
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        let mut v = vec![
            artifact_input(cfg, SNIPPETS, "ingest"),
            artifact_input(cfg, FILTER, "filter"),
            external("corpus", &cfg.paths.corpus),
        ];
        v.extend(registry_input(cfg));
        v
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![artifact_output(cfg, SNIPPET_IR), artifact_output(cfg, CORPUS_IR)]
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetRecord> = read_jsonl(&ctx.artifact(SNIPPETS), "snippets")?;
        let filter: Vec<FilterRecord> = read_jsonl(&ctx.artifact(FILTER), "filter")?;
        let related: BTreeSet<SnippetId> = filter
            .iter()
            .filter(|f| f.related)
            .map(|f| f.snippet_id)
            .collect();
        let records: Vec<SnippetIrRecord> = snippets
            .par_iter()
            .filter(|s| related.contains(&s.snippet_id))
            .map(|s| {
                match CompiledUnit::snippet(s.snippet_id.to_string(), &s.code_text, ctx.registry) {
                    Ok(unit) => SnippetIrRecord {
                        snippet_id: s.snippet_id,
                        unit: Some(unit),
                        rejected: None,
                    },
                    Err(r) => SnippetIrRecord {
                        snippet_id: s.snippet_id,
                        unit: None,
                        rejected: Some(Rejected {
                            reason: r.reason_code().to_string(),
                            message: r.to_string(),
                        }),
                    },
                }
            })
            .collect();
        write_jsonl(&ctx.artifact(SNIPPET_IR), "snippet_ir", self.name(), &records)?;
        let apps = clone::compile_corpus(&ctx.cfg.paths.corpus, ctx.registry).map_err(data)?;
        write_jsonl(&ctx.artifact(CORPUS_IR), "corpus_ir", self.name(), &apps)
    }
}

pub struct DetectStage;

impl Stage for DetectStage {
    fn name(&self) -> &'static str {
        "detect"
    }
    fn number(&self) -> u8 {
        5
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        vec![
            artifact_input(cfg, SNIPPET_IR, "compile"),
            artifact_input(cfg, CORPUS_IR, "compile"),
        ]
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        vec![artifact_output(cfg, MATCHES)]
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        json!({ "matching": cfg.matching })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetIrRecord> = read_jsonl(&ctx.artifact(SNIPPET_IR), "snippet_ir")?;
        let apps: Vec<CompiledUnit> = read_jsonl(&ctx.artifact(CORPUS_IR), "corpus_ir")?;
        let units: Vec<CompiledUnit> = snippets.into_iter().filter_map(|s| s.unit).collect();
        let matches = clone::detect(&units, &apps, &ctx.cfg.matching);
        write_jsonl(&ctx.artifact(MATCHES), "matches", self.name(), &matches)
    }
}

/// Everything the report stage writes into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub summary: report::Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<report::FeedbackReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_error: Option<String>,
}

pub struct ReportStage;

impl Stage for ReportStage {
    fn name(&self) -> &'static str {
        "report"
    }
    fn number(&self) -> u8 {
        5
    }
    fn inputs(&self, cfg: &PipelineConfig) -> Vec<Input> {
        let mut v = vec![
            artifact_input(cfg, SNIPPETS, "ingest"),
            artifact_input(cfg, VERDICTS, "classify"),
            artifact_input(cfg, CORPUS_IR, "compile"),
            artifact_input(cfg, MATCHES, "detect"),
        ];
        if let Some(c) = &cfg.paths.comments {
            v.push(external("comments", c));
        }
        v
    }
    fn outputs(&self, cfg: &PipelineConfig) -> Vec<Output> {
        [FEEDBACK, SUMMARY, TIERS_CSV, WARNINGS_CSV]
            .iter()
            .map(|f| artifact_output(cfg, f))
            .collect()
    }
    fn params(&self, cfg: &PipelineConfig) -> serde_json::Value {
        json!({ "report": cfg.report })
    }
    fn execute(&self, ctx: &StageContext) -> Result<(), PipelineError> {
        let snippets: Vec<SnippetRecord> = read_jsonl(&ctx.artifact(SNIPPETS), "snippets")?;
        let verdicts: Vec<VerdictRecord> = read_jsonl(&ctx.artifact(VERDICTS), "verdicts")?;
        let apps: Vec<CompiledUnit> = read_jsonl(&ctx.artifact(CORPUS_IR), "corpus_ir")?;
        let matches: Vec<CloneMatch> = read_jsonl(&ctx.artifact(MATCHES), "matches")?;
        let comments = match &ctx.cfg.paths.comments {
            Some(p) => {
                let f = File::open(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
                ingest::parse_comments(BufReader::new(f)).map_err(data)?
            }
            None => BTreeMap::new(),
        };
        let verdict_map: BTreeMap<String, SnippetVerdict> = verdicts
            .iter()
            .map(|v| {
                (
                    v.snippet_id.to_string(),
                    SnippetVerdict {
                        label: v.label,
                        fired_rules: v.fired_rules.clone(),
                    },
                )
            })
            .collect();
        let summary = report::summarize(&matches, &verdict_map, apps.len(), ctx.cfg.report.top_offenders);
        let counts = report::detection_counts(&matches);
        let by_id: BTreeMap<SnippetId, &SnippetRecord> =
            snippets.iter().map(|s| (s.snippet_id, s)).collect();
        let feedback: Vec<FeedbackRecord> = verdicts
            .iter()
            .filter(|v| v.label == Label::Insecure)
            .filter_map(|v| {
                let s = by_id.get(&v.snippet_id)?;
                let id = v.snippet_id.to_string();
                Some(FeedbackRecord {
                    snippet_id: v.snippet_id,
                    kind: s.kind,
                    score: s.score,
                    view_count: s.view_count,
                    has_warning_comment: comments
                        .get(&s.post_id)
                        .is_some_and(|c| report::has_warning(c, &ctx.cfg.report.warning_lexicon)),
                    detection_count: counts.get(id.as_str()).copied().unwrap_or(0),
                })
            })
            .collect();
        write_jsonl(&ctx.artifact(FEEDBACK), "feedback", self.name(), &feedback)?;
        let (fb, fb_err) = match report::feedback_correlation(&feedback) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        write_atomic(&ctx.artifact(TIERS_CSV), &report::tiers_csv(fb.as_ref()).map_err(data)?)?;
        write_atomic(
            &ctx.artifact(WARNINGS_CSV),
            &report::warnings_csv(fb.as_ref()).map_err(data)?,
        )?;
        write_json(
            &ctx.artifact(SUMMARY),
            &ReportDocument {
                summary,
                feedback: fb,
                feedback_error: fb_err,
            },
        )
    }
}

/// Ordered collection of stages, looked up by name.
pub struct StageRegistry {
    stages: Vec<Box<dyn Stage>>,
}

impl StageRegistry {
    pub fn new() -> Self {
        StageRegistry { stages: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = StageRegistry::new();
        r.register(Box::new(IngestStage));
        r.register(Box::new(FilterStage));
        r.register(Box::new(LabelStage));
        r.register(Box::new(TrainStage));
        r.register(Box::new(ClassifyStage));
        r.register(Box::new(CompileStage));
        r.register(Box::new(DetectStage));
        r.register(Box::new(ReportStage));
        r
    }

    /// Appends a stage; a stage with the same name is replaced in place.
    pub fn register(&mut self, stage: Box<dyn Stage>) {
        match self.stages.iter().position(|s| s.name() == stage.name()) {
            Some(i) => self.stages[i] = stage,
            None => self.stages.push(stage),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Stage> {
        self.stages.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Stage> {
        self.stages.iter().map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.stages.iter().map(|s| s.name()).collect()
    }
}

impl Default for StageRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
