use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{DEFAULT_C, DEFAULT_EPOCHS, DEFAULT_FOLDS};
use crate::clone::MatchConfig;
use crate::resolver::ApiRegistry;
use crate::rules::{infer_context, Context};

use super::PipelineError;

pub const DEFAULT_WARNING_LEXICON: [&str; 5] = ["insecure", "vulnerable", "mitm", "do not use", "unsafe"];

/// Rule context used by the label stage. `auto` infers it per snippet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextSetting {
    #[default]
    Auto,
    ClientServer,
    NonClientServer,
}

impl ContextSetting {
    pub fn resolve(self, code: &str) -> Context {
        match self {
            ContextSetting::Auto => infer_context(code),
            ContextSetting::ClientServer => Context::ClientServer,
            ContextSetting::NonClientServer => Context::NonClientServer,
        }
    }
}

impl FromStr for ContextSetting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ContextSetting::Auto),
            other => other.parse::<Context>().map(|c| match c {
                Context::ClientServer => ContextSetting::ClientServer,
                Context::NonClientServer => ContextSetting::NonClientServer,
            }),
        }
    }
}

impl fmt::Display for ContextSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextSetting::Auto => "auto",
            ContextSetting::ClientServer => "client-server",
            ContextSetting::NonClientServer => "non-client-server",
        })
    }
}

/// Which label the reports trust: the rule engine verdict or the SVM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    #[default]
    Rules,
    Svm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Stack Exchange `Posts.xml`.
    pub dump: PathBuf,
    /// `Comments.xml`; without it no snippet has warning comments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comments: Option<PathBuf>,
    /// API registry JSON; the builtin registry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    /// Where the label stage exports the rule catalog, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_catalog: Option<PathBuf>,
    /// Model file; `<output>/model.json` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// One subdirectory of Java sources per app.
    pub corpus: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub folds: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            c: DEFAULT_C,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            folds: DEFAULT_FOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportParams {
    pub warning_lexicon: Vec<String>,
    pub top_offenders: usize,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            warning_lexicon: DEFAULT_WARNING_LEXICON.iter().map(|s| s.to_string()).collect(),
            top_offenders: 10,
        }
    }
}

fn default_tags() -> BTreeSet<String> {
    BTreeSet::from(["android".to_string()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_tags")]
    pub tag_filter: BTreeSet<String>,
    #[serde(default)]
    pub context: ContextSetting,
    #[serde(default)]
    pub label_source: LabelSource,
    pub paths: Paths,
    #[serde(default)]
    pub matching: MatchConfig,
    #[serde(default)]
    pub classifier: ClassifierParams,
    #[serde(default)]
    pub report: ReportParams,
}

impl PipelineConfig {
    /// Defaults everywhere except the required paths.
    pub fn new(dump: impl Into<PathBuf>, corpus: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            tag_filter: default_tags(),
            context: ContextSetting::default(),
            label_source: LabelSource::default(),
            paths: Paths {
                dump: dump.into(),
                comments: None,
                registry: None,
                rule_catalog: None,
                model: None,
                corpus: corpus.into(),
                output: output.into(),
            },
            matching: MatchConfig::default(),
            classifier: ClassifierParams::default(),
            report: ReportParams::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Read a config file; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.dump);
        fix(&mut paths.corpus);
        fix(&mut paths.output);
        for p in [
            &mut paths.comments,
            &mut paths.registry,
            &mut paths.rule_catalog,
            &mut paths.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths
            .model
            .clone()
            .unwrap_or_else(|| self.paths.output.join("model.json"))
    }

    /// Checks every path and parameter, and loads the registry.
    pub fn validate(&self) -> Result<ApiRegistry, PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let p = &self.paths;
        if !p.dump.is_file() {
            return bad(format!("dump {} is not a file", p.dump.display()));
        }
        if !p.corpus.is_dir() {
            return bad(format!("corpus root {} is not a directory", p.corpus.display()));
        }
        if let Some(c) = &p.comments {
            if !c.is_file() {
                return bad(format!("comments {} is not a file", c.display()));
            }
        }
        if p.output.exists() && !p.output.is_dir() {
            return bad(format!("output {} is not a directory", p.output.display()));
        }
        for (what, out) in [("rule catalog", &p.rule_catalog), ("model", &p.model)] {
            if let Some(f) = out {
                if f.is_dir() {
                    return bad(format!("{what} path {} is a directory", f.display()));
                }
            }
        }
        if self.tag_filter.is_empty() {
            return bad("tag_filter is empty".into());
        }
        self.matching
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let c = &self.classifier;
        if !(c.c > 0.0 && c.c.is_finite()) {
            return bad(format!("classifier C must be positive, got {}", c.c));
        }
        if c.epochs == 0 {
            return bad("classifier epochs must be at least 1".into());
        }
        if c.folds < 2 {
            return bad(format!("classifier folds must be at least 2, got {}", c.folds));
        }
        if self.report.warning_lexicon.iter().any(|t| t.trim().is_empty()) {
            return bad("warning lexicon contains an empty term".into());
        }
        match &p.registry {
            None => Ok(ApiRegistry::builtin()),
            Some(r) => {
                let text = std::fs::read_to_string(r)
                    .map_err(|e| PipelineError::Config(format!("registry {}: {e}", r.display())))?;
                ApiRegistry::from_json(&text)
                    .map_err(|e| PipelineError::Config(format!("registry {}: {e}", r.display())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_takes_defaults() {
        let cfg = PipelineConfig::from_toml_str(
            "[paths]\ndump = \"Posts.xml\"\ncorpus = \"apps\"\noutput = \"out\"\n",
        )
        .unwrap();
        assert_eq!(cfg, PipelineConfig::new("Posts.xml", "apps", "out"));
        assert_eq!(cfg.classifier.c, 0.644);
        assert_eq!(cfg.classifier.folds, 5);
        assert_eq!(cfg.matching.similarity_threshold, 0.91);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = PipelineConfig::from_toml_str(
            "colour = 1\n[paths]\ndump = \"a\"\ncorpus = \"b\"\noutput = \"c\"\n",
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn context_setting_parses() {
        assert_eq!("auto".parse::<ContextSetting>(), Ok(ContextSetting::Auto));
        assert_eq!(
            "client-server".parse::<ContextSetting>(),
            Ok(ContextSetting::ClientServer)
        );
        assert!("server".parse::<ContextSetting>().is_err());
    }

    #[test]
    fn rebase_only_touches_relative_paths() {
        let mut cfg = PipelineConfig::new("/abs/Posts.xml", "apps", "out");
        cfg.rebase(Path::new("/base"));
        assert_eq!(cfg.paths.dump, PathBuf::from("/abs/Posts.xml"));
        assert_eq!(cfg.paths.corpus, PathBuf::from("/base/apps"));
    }
}
