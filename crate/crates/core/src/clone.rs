//! Snippet containment in corpus methods.
//!
//! Each semantic block is embedded as a count vector; a snippet method is
//! contained in a corpus method when its blocks can be assigned one-to-one to
//! sufficiently similar corpus blocks and its constants and security calls
//! all occur there too. A whole snippet additionally has to keep its class
//! nesting in the corpus unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{self, build_pdg, InstrKind, IrMethod, MethodPdg, Rejection};
use crate::resolver::ApiRegistry;

pub const DIMENSIONS: usize = 2 * InstrKind::ALL.len();
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.91;
pub const TRUST_MANAGER_METHODS: [&str; 3] =
    ["checkClientTrusted", "checkServerTrusted", "getAcceptedIssuers"];

/// Upper bound on binding attempts per snippet/unit pair.
const SEARCH_BUDGET: usize = 200_000;

/// Per instruction kind: node count, then maximum out-degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SemanticVector(pub [u32; DIMENSIONS]);

impl SemanticVector {
    pub fn zero() -> Self {
        SemanticVector([0; DIMENSIONS])
    }

    pub fn node_count(&self, kind: InstrKind) -> u32 {
        self.0[2 * kind.index()]
    }

    pub fn max_out_degree(&self, kind: InstrKind) -> u32 {
        self.0[2 * kind.index() + 1]
    }

    pub fn similarity(&self, other: &SemanticVector) -> f64 {
        jaccard_similarity(&self.0, &other.0).expect("equal dimensions")
    }
}

impl fmt::Display for SemanticVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = InstrKind::ALL
            .iter()
            .filter(|k| self.node_count(**k) > 0)
            .map(|k| format!("{k:?}({},{})", self.node_count(*k), self.max_out_degree(*k)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn embed(method: &IrMethod, pdg: &MethodPdg, block: &[usize]) -> SemanticVector {
    let degrees = pdg.out_degrees();
    let mut v = SemanticVector::zero();
    for &n in block {
        let k = method.instructions[n].kind.index();
        v.0[2 * k] += 1;
        v.0[2 * k + 1] = v.0[2 * k + 1].max(degrees[n] as u32);
    }
    v
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("dimension mismatch: {0} vs {1}")]
pub struct DimensionMismatch(pub usize, pub usize);

/// Sum of element-wise minima over sum of maxima; 1.0 when both are zero.
pub fn jaccard_similarity(x: &[u32], y: &[u32]) -> Result<f64, DimensionMismatch> {
    if x.len() != y.len() {
        return Err(DimensionMismatch(x.len(), y.len()));
    }
    let (mut lo, mut hi) = (0u64, 0u64);
    for (a, b) in x.iter().zip(y) {
        lo += u64::from(*a.min(b));
        hi += u64::from(*a.max(b));
    }
    Ok(if hi == 0 { 1.0 } else { lo as f64 / hi as f64 })
}

/// Share of the multiset `x` present in `y`; 1.0 for empty `x`.
pub fn jaccard_containment<K: Ord>(x: &BTreeMap<K, usize>, y: &BTreeMap<K, usize>) -> f64 {
    let total: usize = x.values().sum();
    if total == 0 {
        return 1.0;
    }
    let hit: usize = x
        .iter()
        .map(|(k, &n)| n.min(y.get(k).copied().unwrap_or(0)))
        .sum();
    hit as f64 / total as f64
}

pub fn set_containment<K: Ord>(x: &BTreeSet<K>, y: &BTreeSet<K>) -> f64 {
    if x.is_empty() {
        return 1.0;
    }
    x.iter().filter(|k| y.contains(k)).count() as f64 / x.len() as f64
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("similarity threshold {0} outside (0, 1]")]
    Similarity(f64),
    #[error("containment threshold {0} outside (0, 1]")]
    Containment(f64),
    #[error("unknown block assigner {0:?}")]
    Assigner(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub similarity_threshold: f64,
    pub containment_threshold: f64,
    pub candidate_class_filter: bool,
    pub assigner: String,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            containment_threshold: 1.0,
            candidate_class_filter: true,
            assigner: "greedy".into(),
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = |t: f64| t > 0.0 && t <= 1.0;
        if !ok(self.similarity_threshold) {
            return Err(ConfigError::Similarity(self.similarity_threshold));
        }
        if !ok(self.containment_threshold) {
            return Err(ConfigError::Containment(self.containment_threshold));
        }
        if assigner_registry().get(&self.assigner).is_none() {
            return Err(ConfigError::Assigner(self.assigner.clone()));
        }
        Ok(())
    }

    fn block_assigner(&self) -> &'static dyn BlockAssigner {
        assigner_registry()
            .get(&self.assigner)
            .unwrap_or_else(|| assigner_registry().get("greedy").expect("default assigner"))
    }
}

/// Chooses a one-to-one assignment of snippet blocks to corpus blocks.
pub trait BlockAssigner: Send + Sync {
    fn name(&self) -> &'static str;

    /// `sim[s][a]` is the similarity of snippet block `s` and corpus block
    /// `a`. Returns, for each snippet block, its corpus block, or `None` if
    /// some snippet block stays unassigned.
    fn assign(&self, sim: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>>;
}

/// Highest similarity first; ties go to the lower snippet then corpus block.
pub struct GreedyAssigner;

impl BlockAssigner for GreedyAssigner {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn assign(&self, sim: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (s, row) in sim.iter().enumerate() {
            for (a, &j) in row.iter().enumerate() {
                if j >= threshold {
                    pairs.push((j, s, a));
                }
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let width = sim.first().map_or(0, Vec::len);
        let mut out = vec![None; sim.len()];
        let mut taken = vec![false; width];
        for (_, s, a) in pairs {
            if out[s].is_none() && !taken[a] {
                out[s] = Some(a);
                taken[a] = true;
            }
        }
        out.into_iter().collect()
    }
}

/// Maximum bipartite matching over pairs above the threshold.
pub struct MaxCardinalityAssigner;

impl BlockAssigner for MaxCardinalityAssigner {
    fn name(&self) -> &'static str {
        "max-cardinality"
    }

    fn assign(&self, sim: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
        let width = sim.first().map_or(0, Vec::len);
        let mut owner: Vec<Option<usize>> = vec![None; width];
        fn augment(
            s: usize,
            sim: &[Vec<f64>],
            threshold: f64,
            seen: &mut [bool],
            owner: &mut [Option<usize>],
        ) -> bool {
            for a in 0..owner.len() {
                if sim[s][a] >= threshold && !seen[a] {
                    seen[a] = true;
                    if owner[a].is_none_or(|o| augment(o, sim, threshold, seen, owner)) {
                        owner[a] = Some(s);
                        return true;
                    }
                }
            }
            false
        }
        for s in 0..sim.len() {
            let mut seen = vec![false; width];
            if !augment(s, sim, threshold, &mut seen, &mut owner) {
                return None;
            }
        }
        let mut out = vec![0; sim.len()];
        for (a, o) in owner.iter().enumerate() {
            if let Some(s) = o {
                out[*s] = a;
            }
        }
        Some(out)
    }
}

pub struct AssignerRegistry {
    assigners: Vec<Box<dyn BlockAssigner>>,
}

impl AssignerRegistry {
    pub fn builtin() -> Self {
        AssignerRegistry {
            assigners: vec![Box::new(GreedyAssigner), Box::new(MaxCardinalityAssigner)],
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn BlockAssigner> {
        self.assigners
            .iter()
            .find(|a| a.name() == name)
            .map(|a| a.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.assigners.iter().map(|a| a.name()).collect()
    }
}

pub fn assigner_registry() -> &'static AssignerRegistry {
    static REG: std::sync::OnceLock<AssignerRegistry> = std::sync::OnceLock::new();
    REG.get_or_init(AssignerRegistry::builtin)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledMethod {
    pub ir: IrMethod,
    pub pdg: MethodPdg,
    pub vectors: Vec<SemanticVector>,
}

impl CompiledMethod {
    pub fn new(ir: IrMethod) -> Self {
        let pdg = build_pdg(&ir);
        let vectors = pdg
            .semantic_blocks
            .iter()
            .map(|b| embed(&ir, &pdg, b))
            .collect();
        CompiledMethod { ir, pdg, vectors }
    }
}

/// A compiled snippet or corpus app.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledUnit {
    pub id: String,
    pub methods: Vec<CompiledMethod>,
    /// Source files (or the snippet itself) that failed to compile.
    pub rejected: Vec<(String, String)>,
}

impl CompiledUnit {
    pub fn from_methods(id: impl Into<String>, methods: Vec<IrMethod>) -> Self {
        let mut methods: Vec<CompiledMethod> = methods.into_iter().map(CompiledMethod::new).collect();
        methods.sort_by(|a, b| a.ir.qualified_path.cmp(&b.ir.qualified_path));
        CompiledUnit {
            id: id.into(),
            methods,
            rejected: Vec::new(),
        }
    }

    pub fn snippet(id: impl Into<String>, code: &str, registry: &ApiRegistry) -> Result<Self, Rejection> {
        Ok(Self::from_methods(id, ir::compile_snippet(code, registry)?))
    }

    /// Compile a set of named sources as one unit; failures are recorded.
    pub fn from_sources<'a>(
        id: impl Into<String>,
        sources: impl IntoIterator<Item = (&'a str, &'a str)>,
        registry: &ApiRegistry,
    ) -> Self {
        let mut methods = Vec::new();
        let mut rejected = Vec::new();
        for (name, text) in sources {
            match ir::compile(text, registry) {
                Ok(ms) => methods.extend(ms),
                Err(r) => rejected.push((name.to_string(), r.to_string())),
            }
        }
        let mut unit = Self::from_methods(id, methods);
        rejected.sort();
        unit.rejected = rejected;
        unit
    }

    /// Top-level classes that call at least one security API.
    pub fn security_classes(&self) -> BTreeSet<&str> {
        self.methods
            .iter()
            .filter(|m| !m.ir.security_method_names.is_empty())
            .map(|m| m.ir.qualified_path[0].as_str())
            .collect()
    }

    pub fn has_security_calls(&self) -> bool {
        self.methods
            .iter()
            .any(|m| !m.ir.security_method_names.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMatch {
    /// Similarity of each snippet block to its assigned corpus block.
    pub scores: Vec<f64>,
    pub empty_trustmanager: bool,
}

/// Conditions (a)-(c): block assignment, security-call containment and
/// constant containment. Empty snippet methods never match here.
pub fn match_method(sm: &CompiledMethod, am: &CompiledMethod, cfg: &MatchConfig) -> Option<MethodMatch> {
    if sm.ir.instructions.is_empty() {
        return None;
    }
    if set_containment(&sm.ir.security_method_names, &am.ir.security_method_names)
        < cfg.containment_threshold
    {
        return None;
    }
    if jaccard_containment(&sm.ir.constants, &am.ir.constants) < cfg.containment_threshold {
        return None;
    }
    if sm.vectors.len() > am.vectors.len() {
        return None;
    }
    let sim: Vec<Vec<f64>> = sm
        .vectors
        .iter()
        .map(|s| am.vectors.iter().map(|a| s.similarity(a)).collect())
        .collect();
    let assignment = cfg
        .block_assigner()
        .assign(&sim, cfg.similarity_threshold)?;
    Some(MethodMatch {
        scores: assignment
            .iter()
            .enumerate()
            .map(|(s, &a)| sim[s][a])
            .collect(),
        empty_trustmanager: false,
    })
}

/// Empty snippet methods match empty corpus methods of the same
/// trust-manager callback name.
pub fn empty_trustmanager_binding(sm: &CompiledMethod, am: &CompiledMethod) -> bool {
    let name = base_name(sm.ir.name());
    sm.ir.is_empty()
        && am.ir.is_empty()
        && TRUST_MANAGER_METHODS.contains(&name)
        && base_name(am.ir.name()) == name
}

fn base_name(n: &str) -> &str {
    n.split('#').next().unwrap_or(n)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchFlags {
    pub empty_trustmanager_case: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloneMatch {
    pub snippet_id: String,
    pub app_id: String,
    /// Snippet method path -> corpus method path.
    pub bindings: BTreeMap<String, String>,
    pub scores: BTreeMap<String, Vec<f64>>,
    pub flags: MatchFlags,
}

fn is_proper_prefix(a: &[String], b: &[String]) -> bool {
    a.len() < b.len() && b.starts_with(a)
}

struct Search<'a> {
    snippet: &'a CompiledUnit,
    app: &'a CompiledUnit,
    order: Vec<usize>,
    candidates: Vec<Vec<(usize, MethodMatch)>>,
    chosen: Vec<Option<usize>>,
    used: Vec<bool>,
    class_map: Vec<(&'a [String], &'a [String])>,
    budget: usize,
}

impl<'a> Search<'a> {
    fn consistent(&self, sc: &[String], ac: &[String]) -> Option<bool> {
        for (s2, a2) in &self.class_map {
            if *s2 == sc {
                return (*a2 == ac).then_some(false);
            }
            if *a2 == ac {
                return None;
            }
            if is_proper_prefix(s2, sc) && !is_proper_prefix(a2, ac) {
                return None;
            }
            if is_proper_prefix(sc, s2) && !is_proper_prefix(ac, a2) {
                return None;
            }
        }
        Some(true)
    }

    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let s = self.order[depth];
        let sc = self.snippet.methods[s].ir.class_path();
        for k in 0..self.candidates[s].len() {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            let a = self.candidates[s][k].0;
            if self.used[a] {
                continue;
            }
            let ac = self.app.methods[a].ir.class_path();
            let Some(new_class) = self.consistent(sc, ac) else {
                continue;
            };
            if new_class {
                self.class_map.push((sc, ac));
            }
            self.used[a] = true;
            self.chosen[s] = Some(k);
            if self.run(depth + 1) {
                return true;
            }
            self.used[a] = false;
            self.chosen[s] = None;
            if new_class {
                self.class_map.pop();
            }
        }
        false
    }
}

/// Every snippet method bound to a distinct corpus method, with snippet
/// class co-membership and nesting reproduced in the corpus unit.
pub fn match_snippet(snippet: &CompiledUnit, app: &CompiledUnit, cfg: &MatchConfig) -> Option<CloneMatch> {
    if snippet.methods.is_empty() {
        return None;
    }
    let filter: Option<BTreeSet<&str>> =
        (cfg.candidate_class_filter && snippet.has_security_calls()).then(|| app.security_classes());
    let mut candidates = Vec::with_capacity(snippet.methods.len());
    for sm in &snippet.methods {
        let mut c = Vec::new();
        for (ai, am) in app.methods.iter().enumerate() {
            if let Some(f) = &filter {
                if !f.contains(am.ir.qualified_path[0].as_str()) {
                    continue;
                }
            }
            if sm.ir.is_empty() {
                if empty_trustmanager_binding(sm, am) {
                    c.push((
                        ai,
                        MethodMatch {
                            scores: Vec::new(),
                            empty_trustmanager: true,
                        },
                    ));
                }
            } else if let Some(m) = match_method(sm, am, cfg) {
                c.push((ai, m));
            }
        }
        if c.is_empty() {
            return None;
        }
        candidates.push(c);
    }
    let mut order: Vec<usize> = (0..snippet.methods.len()).collect();
    order.sort_by_key(|&s| (candidates[s].len(), s));
    let mut search = Search {
        snippet,
        app,
        order,
        candidates,
        chosen: vec![None; snippet.methods.len()],
        used: vec![false; app.methods.len()],
        class_map: Vec::new(),
        budget: SEARCH_BUDGET,
    };
    if !search.run(0) {
        return None;
    }
    let mut bindings = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut flags = MatchFlags::default();
    for (s, k) in search.chosen.iter().enumerate() {
        let (a, m) = &search.candidates[s][k.expect("bound")];
        let sp = snippet.methods[s].ir.path_string();
        bindings.insert(sp.clone(), app.methods[*a].ir.path_string());
        scores.insert(sp, m.scores.clone());
        flags.empty_trustmanager_case |= m.empty_trustmanager;
    }
    Some(CloneMatch {
        snippet_id: snippet.id.clone(),
        app_id: app.id.clone(),
        bindings,
        scores,
        flags,
    })
}

/// A snippet match that relied on the empty trust-manager rule.
pub fn match_empty_trustmanager(
    snippet: &CompiledUnit,
    app: &CompiledUnit,
    cfg: &MatchConfig,
) -> Option<CloneMatch> {
    if !snippet.methods.iter().any(|m| m.ir.is_empty()) {
        return None;
    }
    match_snippet(snippet, app, cfg).filter(|m| m.flags.empty_trustmanager_case)
}

/// All (snippet, app) containments, ordered by snippet id then app id.
pub fn detect(snippets: &[CompiledUnit], apps: &[CompiledUnit], cfg: &MatchConfig) -> Vec<CloneMatch> {
    let mut out: Vec<CloneMatch> = snippets
        .par_iter()
        .flat_map_iter(|s| apps.iter().filter_map(move |a| match_snippet(s, a, cfg)))
        .collect();
    out.sort_by(|a, b| (&a.snippet_id, &a.app_id).cmp(&(&b.snippet_id, &b.app_id)));
    out
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn java_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            java_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "java") {
            out.push(path);
        }
    }
    Ok(())
}

/// One app per subdirectory of `root`, identified by directory name.
pub fn compile_corpus(root: &Path, registry: &ApiRegistry) -> Result<Vec<CompiledUnit>, CorpusError> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|source| CorpusError::Io {
        path: root.to_path_buf(),
        source,
    })? {
        let path = entry
            .map_err(|source| CorpusError::Io {
                path: root.to_path_buf(),
                source,
            })?
            .path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    let mut apps: Vec<CompiledUnit> = dirs
        .par_iter()
        .map(|d| compile_app(d, registry))
        .collect::<Result<_, _>>()?;
    apps.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(apps)
}

pub fn compile_app(dir: &Path, registry: &ApiRegistry) -> Result<CompiledUnit, CorpusError> {
    let mut files = Vec::new();
    java_files(dir, &mut files)?;
    files.sort();
    let mut sources = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|source| CorpusError::Io {
            path: f.clone(),
            source,
        })?;
        let rel = f.strip_prefix(dir).unwrap_or(f).to_string_lossy().into_owned();
        sources.push((rel, text));
    }
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(CompiledUnit::from_sources(
        id,
        sources.iter().map(|(n, t)| (n.as_str(), t.as_str())),
        registry,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> ApiRegistry {
        ApiRegistry::builtin()
    }

    fn snippet(code: &str) -> CompiledUnit {
        CompiledUnit::snippet("s", code, &reg()).unwrap()
    }

    fn app(src: &str) -> CompiledUnit {
        CompiledUnit::from_sources("app", [("A.java", src)], &reg())
    }

    fn vec_of(pairs: &[(InstrKind, u32, u32)]) -> SemanticVector {
        let mut v = SemanticVector::zero();
        for &(k, n, d) in pairs {
            v.0[2 * k.index()] = n;
            v.0[2 * k.index() + 1] = d;
        }
        v
    }

    #[test]
    fn embeds_chain() {
        let s = snippet("Cipher c = Cipher.getInstance(\"AES\"); return;");
        let m = &s.methods[0];
        assert_eq!(
            m.vectors[0],
            vec_of(&[(InstrKind::ConstLoad, 1, 1), (InstrKind::InvokeStatic, 1, 0)])
        );
        let s = snippet("int f() { return g(\"x\"); }");
        assert_eq!(
            s.methods[0].vectors[0],
            vec_of(&[
                (InstrKind::ConstLoad, 1, 1),
                (InstrKind::InvokeVirtual, 1, 1),
                (InstrKind::Return, 1, 0)
            ])
        );
    }

    #[test]
    fn embeds_parallel_constants() {
        let s = snippet("int f() { int x = 1 + 2; return x; }");
        assert_eq!(
            s.methods[0].vectors[0],
            vec_of(&[
                (InstrKind::ConstLoad, 2, 1),
                (InstrKind::BinaryOp, 1, 1),
                (InstrKind::Return, 1, 0)
            ])
        );
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity(&[2, 1, 0], &[1, 1, 1]), Ok(0.5));
        assert_eq!(jaccard_similarity(&[0, 0], &[0, 0]), Ok(1.0));
        assert_eq!(jaccard_similarity(&[0, 0], &[0, 3]), Ok(0.0));
        assert!(jaccard_similarity(&[1], &[1, 2]).is_err());
        let m = |xs: &[(&str, usize)]| xs.iter().map(|(k, n)| (k.to_string(), *n)).collect::<BTreeMap<_, _>>();
        assert_eq!(jaccard_containment(&m(&[("a", 1), ("b", 1)]), &m(&[("a", 1)])), 0.5);
        assert_eq!(jaccard_containment(&m(&[("a", 2)]), &m(&[("a", 1)])), 0.5);
        assert_eq!(jaccard_containment(&m(&[]), &m(&[("a", 1)])), 1.0);
    }

    #[test]
    fn assigners_agree_on_easy_case_and_differ_on_greedy_trap() {
        let sim = vec![vec![0.95, 0.99], vec![0.0, 0.93]];
        // Greedy grabs (0,1) first and strands block 1.
        assert_eq!(GreedyAssigner.assign(&sim, 0.91), None);
        assert_eq!(MaxCardinalityAssigner.assign(&sim, 0.91), Some(vec![0, 1]));
        let easy = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(GreedyAssigner.assign(&easy, 0.91), Some(vec![0, 1]));
        assert_eq!(MaxCardinalityAssigner.assign(&easy, 0.91), Some(vec![0, 1]));
        assert_eq!(assigner_registry().names(), ["greedy", "max-cardinality"]);
    }

    const AES: &str = "Cipher c = Cipher.getInstance(\"AES\");\nc.init(Cipher.ENCRYPT_MODE, key);";

    #[test]
    fn verbatim_and_mutated_methods() {
        let cfg = MatchConfig::default();
        let s = snippet(AES);
        let same = app(&format!("class A {{ void run(Key key) {{ {AES} }} }}"));
        let m = match_snippet(&s, &same, &cfg).expect("verbatim clone");
        assert!(m.scores.values().flatten().all(|&j| j == 1.0));
        let des = app(&format!("class A {{ void run(Key key) {{ {} }} }}", AES.replace("AES", "DES")));
        assert!(match_snippet(&s, &des, &cfg).is_none());
        let extra = app(&format!(
            "class A {{ void run(Key key) {{ Log.d(\"t\", \"start\"); {AES} int unused = 3; }} }}"
        ));
        assert!(match_snippet(&s, &extra, &cfg).is_some());
    }

    #[test]
    fn nesting_condition() {
        let cfg = MatchConfig::default();
        let s = snippet(
            "class K { byte[] a() { return MessageDigest.getInstance(\"SHA-256\").digest(x); } Cipher b() { return Cipher.getInstance(\"AES\"); } }",
        );
        let together = app(
            "class App { byte[] p() { return MessageDigest.getInstance(\"SHA-256\").digest(x); } Cipher q() { return Cipher.getInstance(\"AES\"); } }",
        );
        assert!(match_snippet(&s, &together, &cfg).is_some());
        let split = app(
            "class App { byte[] p() { return MessageDigest.getInstance(\"SHA-256\").digest(x); } } class Other { Cipher q() { return Cipher.getInstance(\"AES\"); } }",
        );
        assert!(match_snippet(&s, &split, &cfg).is_none());
    }

    #[test]
    fn empty_trust_manager_path() {
        let cfg = MatchConfig::default();
        let tm = "TrustManager tm = new X509TrustManager() {\n public void checkClientTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n public void checkServerTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n public X509Certificate[] getAcceptedIssuers() { return null; }\n};";
        let s = snippet(tm);
        let a = app(&format!(
            "class Net {{ void trust() {{ {tm} SSLContext ctx = SSLContext.getInstance(\"TLS\"); }} }}"
        ));
        let m = match_empty_trustmanager(&s, &a, &cfg).expect("empty trust manager");
        assert!(m.flags.empty_trustmanager_case);
        assert_eq!(m.bindings["Snippet.$1.checkServerTrusted"], "Net.$1.checkServerTrusted");

        let on_create = snippet("class X { void onCreate() { } }");
        let a2 = app("class Y { void onCreate() { } }");
        assert!(match_snippet(&on_create, &a2, &cfg).is_none());

        let logged = snippet(
            "class T implements X509TrustManager { public void checkServerTrusted(X509Certificate[] c, String a) { Log.d(\"tm\", a); } }",
        );
        assert!(!logged.methods[0].ir.is_empty());
        let a3 = app("class U { public void checkServerTrusted(X509Certificate[] c, String a) { } }");
        assert!(match_snippet(&logged, &a3, &cfg).is_none());
        let a4 = app(
            "class U { public void checkServerTrusted(X509Certificate[] c, String a) { Log.d(\"tm\", a); } }",
        );
        let m = match_snippet(&logged, &a4, &cfg).unwrap();
        assert!(!m.flags.empty_trustmanager_case);
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        let bad = MatchConfig {
            similarity_threshold: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Similarity(0.0)));
        let bad = MatchConfig {
            assigner: "hungarian".into(),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
