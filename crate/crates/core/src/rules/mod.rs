//! Deterministic secure/insecure labeling from parameter rules.
//!
//! Rules are trait objects registered by id in a [`RuleCatalog`]; the shipped
//! catalog lives in [`builtin`]. A snippet is insecure iff at least one
//! insecure-indicator rule fires.

mod builtin;
pub mod facts;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SnippetRecord;
use crate::resolver::ResolvedElement;

pub use facts::SnippetFacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "TLS")]
    Tls,
    SymmetricCrypto,
    AsymmetricCrypto,
    Hash,
    SecureRandom,
    Authentication,
    Storage,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::Tls => "TLS",
            Category::SymmetricCrypto => "SymmetricCrypto",
            Category::AsymmetricCrypto => "AsymmetricCrypto",
            Category::Hash => "Hash",
            Category::SecureRandom => "SecureRandom",
            Category::Authentication => "Authentication",
            Category::Storage => "Storage",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    SecureIndicator,
    InsecureIndicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Context {
    ClientServer,
    NonClientServer,
}

impl FromStr for Context {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "client-server" => Ok(Context::ClientServer),
            "non-client-server" => Ok(Context::NonClientServer),
            other => Err(format!("unknown context {other:?} (client-server | non-client-server)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextCondition {
    Any,
    ClientServer,
    NonClientServer,
}

impl ContextCondition {
    pub fn admits(self, context: Context) -> bool {
        match self {
            ContextCondition::Any => true,
            ContextCondition::ClientServer => context == Context::ClientServer,
            ContextCondition::NonClientServer => context == Context::NonClientServer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Secure,
    Insecure,
}

impl Label {
    /// +1 insecure, -1 secure.
    pub fn as_target(self) -> i8 {
        match self {
            Label::Insecure => 1,
            Label::Secure => -1,
        }
    }

    pub fn from_target(y: i8) -> Self {
        if y >= 0 {
            Label::Insecure
        } else {
            Label::Secure
        }
    }
}

pub trait Rule: Send + Sync {
    fn id(&self) -> &str;
    fn category(&self) -> Category;
    fn severity(&self) -> Severity;
    fn context(&self) -> ContextCondition {
        ContextCondition::Any
    }
    fn description(&self) -> &str;
    /// Must be total: any snippet, however malformed, yields true or false.
    fn matches(&self, facts: &SnippetFacts) -> bool;
}

/// A rule whose matcher is a plain function over [`SnippetFacts`].
pub struct PatternRule {
    pub id: &'static str,
    pub category: Category,
    pub severity: Severity,
    pub context: ContextCondition,
    pub description: &'static str,
    pub matcher: fn(&SnippetFacts) -> bool,
}

impl Rule for PatternRule {
    fn id(&self) -> &str {
        self.id
    }
    fn category(&self) -> Category {
        self.category
    }
    fn severity(&self) -> Severity {
        self.severity
    }
    fn context(&self) -> ContextCondition {
        self.context
    }
    fn description(&self) -> &str {
        self.description
    }
    fn matches(&self, facts: &SnippetFacts) -> bool {
        (self.matcher)(facts)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("duplicate rule id {0}")]
    DuplicateId(String),
}

#[derive(Default)]
pub struct RuleCatalog {
    rules: Vec<Box<dyn Rule>>,
    by_id: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub id: String,
    pub category: Category,
    pub severity: Severity,
    pub context: ContextCondition,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityVerdict {
    pub label: Label,
    pub categories: BTreeSet<Category>,
    pub fired_rules: Vec<String>,
    pub rationale: String,
}

impl RuleCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut catalog = RuleCatalog::new();
        for rule in builtin::rules() {
            catalog
                .register(Box::new(rule))
                .expect("builtin rule ids are unique");
        }
        catalog
    }

    pub fn register(&mut self, rule: Box<dyn Rule>) -> Result<(), CatalogError> {
        let id = rule.id().to_string();
        if self.by_id.contains_key(&id) {
            return Err(CatalogError::DuplicateId(id));
        }
        self.by_id.insert(id, self.rules.len());
        self.rules.push(rule);
        Ok(())
    }

    /// Drop a rule; used to check that removing insecure evidence can only
    /// relax a verdict.
    pub fn without(mut self, id: &str) -> Self {
        self.rules.retain(|r| r.id() != id);
        self.by_id = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id().to_string(), i))
            .collect();
        self
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Option<&dyn Rule> {
        self.by_id.get(id).map(|&i| self.rules[i].as_ref())
    }

    pub fn rules(&self) -> impl Iterator<Item = &dyn Rule> {
        self.rules.iter().map(|r| r.as_ref())
    }

    pub fn info(&self) -> Vec<RuleInfo> {
        self.rules()
            .map(|r| RuleInfo {
                id: r.id().to_string(),
                category: r.category(),
                severity: r.severity(),
                context: r.context(),
                description: r.description().to_string(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.info()).expect("catalog serializes")
    }

    pub fn evaluate(&self, facts: &SnippetFacts, context: Context) -> SecurityVerdict {
        let fired: Vec<&dyn Rule> = self
            .rules()
            .filter(|r| r.context().admits(context) && r.matches(facts))
            .collect();
        let insecure: Vec<&dyn Rule> = fired
            .iter()
            .copied()
            .filter(|r| r.severity() == Severity::InsecureIndicator)
            .collect();
        let label = if insecure.is_empty() {
            Label::Secure
        } else {
            Label::Insecure
        };
        let describe = |rs: &[&dyn Rule]| {
            rs.iter()
                .map(|r| format!("{} ({})", r.id(), r.description()))
                .collect::<Vec<_>>()
                .join("; ")
        };
        let rationale = if !insecure.is_empty() {
            format!("insecure: {}", describe(&insecure))
        } else if !fired.is_empty() {
            format!("secure indicators only: {}", describe(&fired))
        } else {
            "no rule fired".to_string()
        };
        SecurityVerdict {
            label,
            categories: fired.iter().map(|r| r.category()).collect(),
            fired_rules: fired.iter().map(|r| r.id().to_string()).collect(),
            rationale,
        }
    }

    pub fn label_code(&self, code: &str, context: Context) -> SecurityVerdict {
        self.evaluate(&SnippetFacts::from_code(code, Vec::new()), context)
    }
}

impl SecurityVerdict {
    /// Categories of the insecure-indicator rules that fired.
    pub fn insecure_categories(&self, catalog: &RuleCatalog) -> BTreeSet<Category> {
        self.fired_rules
            .iter()
            .filter_map(|id| catalog.lookup(id))
            .filter(|r| r.severity() == Severity::InsecureIndicator)
            .map(|r| r.category())
            .collect()
    }
}

pub fn rule_catalog() -> &'static RuleCatalog {
    static CATALOG: OnceLock<RuleCatalog> = OnceLock::new();
    CATALOG.get_or_init(RuleCatalog::builtin)
}

/// ClientServer for snippets that touch network or TLS APIs, otherwise
/// NonClientServer.
pub fn infer_context(code: &str) -> Context {
    if SnippetFacts::from_code(code, Vec::new()).client_server_hint {
        Context::ClientServer
    } else {
        Context::NonClientServer
    }
}

pub fn label(snippet: &SnippetRecord, resolved: &[ResolvedElement], context: Context) -> SecurityVerdict {
    let facts = SnippetFacts::from_code(
        &snippet.code_text,
        resolved.iter().map(|r| r.resolved_fqn.clone()),
    );
    rule_catalog().evaluate(&facts, context)
}
