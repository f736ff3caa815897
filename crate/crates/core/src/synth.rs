//! Synthetic data: a labeled snippet corpus grown from the rule fixtures,
//! source-level mutation operators, and app planting for clone tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::ir::{self, compile_snippet};
use crate::lexer::{is_keyword, lex, Token, TokenKind};
use crate::resolver::ApiRegistry;
use crate::rules::{rule_catalog, Context, Label};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RuleFixture {
    pub rule: String,
    pub context: Context,
    pub label: Label,
    pub code: String,
}

#[derive(Deserialize)]
struct FixtureFile {
    fixture: Vec<RuleFixture>,
}

/// One hand-written snippet per catalog rule plus the dual-context cases.
pub fn rule_fixtures() -> Vec<RuleFixture> {
    let text = include_str!("../fixtures/rule_fixtures.toml");
    toml::from_str::<FixtureFile>(text)
        .expect("bundled rule fixtures parse")
        .fixture
}

/// Mutated copies per fixture in the bundled labeled corpus.
pub const SYNTHETIC_VARIANTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSnippet {
    /// Fixture rule id plus variant number, e.g. `SYM-aes-ecb#2`.
    pub origin: String,
    pub code: String,
    pub label: Label,
}

const PRIMITIVES: &[&str] = &[
    "int", "long", "short", "byte", "char", "boolean", "float", "double",
];

fn is_decl_type_end(t: &Token) -> bool {
    t.is_type_like()
        || t.is_punct("]")
        || t.is_punct(">")
        || (t.kind == TokenKind::Ident && PRIMITIVES.contains(&t.text.as_str()))
}

/// Names introduced by local, parameter or field declarations whose first
/// letter is lower case, in order of first appearance.
pub fn declared_names(code: &str) -> Vec<String> {
    let toks = lex(code).tokens;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for i in 1..toks.len() {
        let t = &toks[i];
        let lower = t.text.chars().next().is_some_and(|c| c.is_ascii_lowercase());
        if t.kind != TokenKind::Ident || !lower || is_keyword(&t.text) {
            continue;
        }
        let next_ok = toks
            .get(i + 1)
            .is_some_and(|n| ["=", ";", ",", ")", ":"].iter().any(|p| n.is_punct(p)));
        if is_decl_type_end(&toks[i - 1]) && next_ok && seen.insert(t.text.clone()) {
            out.push(t.text.clone());
        }
    }
    out
}

/// Replace identifier tokens (not member names, not call names) by
/// `mapping`; everything else, including literals and layout, is kept.
pub fn rename_identifiers(code: &str, mapping: &BTreeMap<String, String>) -> String {
    let toks = lex(code).tokens;
    let mut out = String::with_capacity(code.len());
    let mut last = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Ident {
            continue;
        }
        let Some(new) = mapping.get(&t.text) else {
            continue;
        };
        let after_dot = i > 0 && toks[i - 1].is_punct(".");
        let is_call = toks.get(i + 1).is_some_and(|n| n.is_punct("("));
        if after_dot || is_call {
            continue;
        }
        out.push_str(&code[last..t.offset]);
        out.push_str(new);
        last = t.offset + t.text.len();
    }
    out.push_str(&code[last..]);
    out
}

const NAME_STEMS: &[&str] = &[
    "value", "tmp", "holder", "item", "res", "buf", "obj", "ref", "data", "part",
];

/// Consistently renames every declared lower-case name to a fresh one.
pub fn rename_locals(code: &str, rng: &mut impl Rng) -> String {
    let taken: BTreeSet<String> = lex(code)
        .tokens
        .into_iter()
        .filter(|t| t.kind == TokenKind::Ident)
        .map(|t| t.text)
        .collect();
    let mut used = BTreeSet::new();
    let mut mapping = BTreeMap::new();
    for name in declared_names(code) {
        let fresh = loop {
            let cand = format!(
                "{}{}",
                NAME_STEMS.choose(rng).expect("non-empty"),
                rng.gen_range(0..1000)
            );
            if !taken.contains(&cand) && used.insert(cand.clone()) {
                break cand;
            }
        };
        mapping.insert(name, fresh);
    }
    rename_identifiers(code, &mapping)
}

const LOG_TAGS: &[&str] = &["MainActivity", "NetUtil", "CryptoHelper", "Sync", "App"];
const LOG_WORDS: &[&str] = &["start", "done", "checkpoint", "retry", "ready", "step"];

/// Adds `Log.d(..)` calls after randomly chosen statement ends and,
/// sometimes, a leading comment.
pub fn insert_log_lines(code: &str, count: usize, rng: &mut impl Rng) -> String {
    let mut lines: Vec<String> = code.lines().map(str::to_string).collect();
    for _ in 0..count {
        let spots: Vec<usize> = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.trim_end().ends_with(';'))
            .map(|(i, _)| i)
            .collect();
        let Some(&at) = spots.choose(rng) else {
            break;
        };
        let indent: String = lines[at].chars().take_while(|c| c.is_whitespace()).collect();
        lines.insert(
            at + 1,
            format!(
                "{indent}Log.d(\"{}\", \"{}\");",
                LOG_TAGS.choose(rng).expect("non-empty"),
                LOG_WORDS.choose(rng).expect("non-empty")
            ),
        );
    }
    if rng.gen_bool(0.5) {
        lines.insert(0, "// adapted from an answer".to_string());
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// Each fixture plus `variants` mutated copies (renamed locals, inserted
/// log calls). Every entry is labeled by the rule engine under the fixture's
/// context; variants whose label drifts from the fixture's are dropped.
pub fn labeled_corpus(variants: usize, seed: u64) -> Vec<LabeledSnippet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = rule_catalog();
    let mut out = Vec::new();
    for f in rule_fixtures() {
        let base = catalog.label_code(&f.code, f.context).label;
        out.push(LabeledSnippet {
            origin: format!("{}#0", f.rule),
            code: f.code.clone(),
            label: base,
        });
        for v in 1..=variants {
            let mut code = rename_locals(&f.code, &mut rng);
            let n = rng.gen_range(1..=3);
            code = insert_log_lines(&code, n, &mut rng);
            let label = catalog.label_code(&code, f.context).label;
            if label == base {
                out.push(LabeledSnippet {
                    origin: format!("{}#{v}", f.rule),
                    code,
                    label,
                });
            }
        }
    }
    out
}

/// Statement lines of a straight-line snippet (one statement per line).
fn statement_lines(code: &str) -> Vec<String> {
    code.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn line_names(line: &str) -> (BTreeSet<String>, BTreeSet<String>) {
    let toks = lex(line).tokens;
    let mut all = BTreeSet::new();
    for (i, t) in toks.iter().enumerate() {
        let lower = t.text.chars().next().is_some_and(|c| c.is_ascii_lowercase());
        let member = i > 0 && toks[i - 1].is_punct(".");
        let call = toks.get(i + 1).is_some_and(|n| n.is_punct("("));
        if t.kind == TokenKind::Ident && lower && !is_keyword(&t.text) && !member && !call {
            all.insert(t.text.clone());
        }
    }
    let defs = declared_names(line).into_iter().collect();
    (defs, all)
}

/// Swaps the first adjacent pair of statements that share no variable.
pub fn reorder_independent(code: &str) -> Option<String> {
    let mut lines = statement_lines(code);
    for i in 0..lines.len().saturating_sub(1) {
        let (_, a) = line_names(&lines[i]);
        let (_, b) = line_names(&lines[i + 1]);
        if a.is_disjoint(&b) {
            lines.swap(i, i + 1);
            return Some(lines.join("\n") + "\n");
        }
    }
    None
}

/// Unrelated statements over fresh names, inserted after the first line.
pub fn insert_unrelated(code: &str) -> String {
    let mut lines = statement_lines(code);
    let extra = [
        "int retryLimit = 5;",
        "String banner = \"welcome back\";",
        "banner = banner.trim();",
        "retryLimit = retryLimit * 2;",
    ];
    let at = 1.min(lines.len());
    for (k, e) in extra.iter().enumerate() {
        lines.insert(at + k, e.to_string());
    }
    lines.join("\n") + "\n"
}

/// Changes the first string literal (or, failing that, the first integer
/// literal) in place.
pub fn mutate_constant(code: &str) -> Option<String> {
    let toks = lex(code).tokens;
    let pick = toks
        .iter()
        .find(|t| t.kind == TokenKind::Str)
        .or_else(|| toks.iter().find(|t| t.kind == TokenKind::Int))?;
    let start = pick.offset;
    let (end, replacement) = match pick.kind {
        TokenKind::Str => {
            let close = code[start + 1..].find('"')? + start + 1;
            (close + 1, format!("\"{}X\"", &code[start + 1..close]))
        }
        _ => {
            let n: i64 = pick.text.parse().ok()?;
            (start + pick.text.len(), (n + 1).to_string())
        }
    };
    Some(format!("{}{}{}", &code[..start], replacement, &code[end..]))
}

fn call_pattern(security_name: &str) -> Option<String> {
    let (class, method) = security_name.rsplit_once('.')?;
    let simple = class.rsplit('.').next()?;
    Some(if method == "<init>" {
        format!("new {simple}(")
    } else {
        format!(".{method}(")
    })
}

fn security_names(code: &str, registry: &ApiRegistry) -> BTreeSet<String> {
    compile_snippet(code, registry)
        .map(|ms| {
            ms.into_iter()
                .flat_map(|m| m.security_method_names)
                .collect()
        })
        .unwrap_or_default()
}

/// Drops every line calling the least-used security API of the snippet.
pub fn remove_security_call(code: &str, registry: &ApiRegistry) -> Option<String> {
    let lines = statement_lines(code);
    let mut best: Option<(usize, String)> = None;
    for name in security_names(code, registry) {
        let Some(pat) = call_pattern(&name) else {
            continue;
        };
        let hits = lines.iter().filter(|l| l.contains(&pat)).count();
        if hits >= 1 && hits < lines.len() && best.as_ref().is_none_or(|(h, _)| hits < *h) {
            best = Some((hits, pat));
        }
    }
    let (_, pat) = best?;
    let kept: Vec<String> = lines.into_iter().filter(|l| !l.contains(&pat)).collect();
    Some(kept.join("\n") + "\n")
}

/// Split point (statement index) nearest the middle such that the host
/// method and its helper both call some security API.
pub fn split_point(code: &str, registry: &ApiRegistry) -> Option<usize> {
    let n = statement_lines(code).len();
    let mut ks: Vec<usize> = (1..n).collect();
    ks.sort_by_key(|&k| ((2 * k) as i64 - n as i64).abs());
    ks.into_iter().find(|&k| {
        let src = host_source("p", "Host", &Placement::Split(code.to_string(), k), 0);
        let Ok(methods) = ir::compile(&src, registry) else {
            return false;
        };
        ["configure", "configureTail"].iter().all(|name| {
            methods
                .iter()
                .any(|m| m.name() == *name && !m.security_method_names.is_empty())
        })
    })
}

/// `(type, name)` for each declaration at the start of a statement line.
fn line_declaration(line: &str) -> Option<(String, String)> {
    let name = declared_names(line).into_iter().next()?;
    let toks = lex(line).tokens;
    let at = toks.iter().position(|t| t.kind == TokenKind::Ident && t.text == name)?;
    let ty = line[..toks[at].offset].trim();
    (!ty.is_empty() && !ty.contains('=')).then(|| (ty.to_string(), name))
}

/// How a snippet body appears in a host app.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// Inside one host method.
    Inline(String),
    /// First `k` statements in the host method, the rest in a helper it calls.
    Split(String, usize),
}

/// A complete host class around statement-list code. `index` varies the
/// host's own code so hosts are not identical to one another.
pub fn host_source(package: &str, class: &str, placement: &Placement, index: usize) -> String {
    let indent = |body: &str| -> String {
        statement_lines(body)
            .iter()
            .map(|l| format!("        {l}\n"))
            .collect()
    };
    let (body, helper) = match placement {
        Placement::Inline(code) => (indent(code), String::new()),
        Placement::Split(code, k) => {
            let lines = statement_lines(code);
            let head = lines[..*k].join("\n");
            let tail = lines[*k..].join("\n");
            let used: BTreeSet<String> = lines[*k..].iter().flat_map(|l| line_names(l).1).collect();
            let passed: Vec<(String, String)> = lines[..*k]
                .iter()
                .filter_map(|l| line_declaration(l))
                .filter(|(_, n)| used.contains(n))
                .collect();
            let args: Vec<&str> = passed.iter().map(|(_, n)| n.as_str()).collect();
            let params: Vec<String> = passed.iter().map(|(t, n)| format!("{t} {n}")).collect();
            (
                format!("{}        configureTail({});\n", indent(&head), args.join(", ")),
                format!(
                    "\n    private void configureTail({}) {{\n{}    }}\n",
                    params.join(", "),
                    indent(&tail)
                ),
            )
        }
    };
    format!(
        "package {package};\n\n\
         public class {class} {{\n\
         \x20   private int counter;\n\n\
         \x20   public void onCreate() {{\n\
         \x20       counter = counter + {index};\n\
         \x20       String title = \"screen {index}\";\n\
         \x20       System.out.println(title);\n\
         \x20   }}\n\n\
         \x20   public void configure() {{\n\
         {body}\
         \x20   }}\n{helper}\n\
         \x20   public int compute(int a, int b) {{\n\
         \x20       int s = a * {mult} + b;\n\
         \x20       return s;\n\
         \x20   }}\n\
         }}\n",
        mult = index + 2,
    )
}

/// Source text with no security APIs, for filler apps.
pub fn filler_source(package: &str, class: &str, index: usize) -> String {
    format!(
        "package {package};\n\n\
         public class {class} {{\n\
         \x20   private String name = \"item {index}\";\n\n\
         \x20   public String label(int count) {{\n\
         \x20       String prefix = name.toUpperCase();\n\
         \x20       return prefix + \":\" + (count + {index});\n\
         \x20   }}\n\n\
         \x20   public int total(int[] values) {{\n\
         \x20       int sum = 0;\n\
         \x20       for (int v : values) {{\n\
         \x20           sum += v;\n\
         \x20       }}\n\
         \x20       return sum;\n\
         \x20   }}\n\
         }}\n"
    )
}

/// Compiles as a snippet; used to sanity-check generated code.
pub fn compiles(code: &str, registry: &ApiRegistry) -> bool {
    ir::compile_snippet(code, registry).is_ok()
}
