//! Typed three-address IR for snippets and corpus sources, with per-method
//! data-dependence graphs.
//!
//! Snippets are completed with [`wrap_partial`], parsed by a front end for a
//! Java subset and lowered by [`compile`]. [`build_pdg`] splits each method
//! into semantic blocks, the weakly connected components of its def-use graph.

pub mod ast;
mod lower;
pub mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::lexer::{lex, TokenKind};
use crate::resolver::ApiRegistry;
use parser::ParseErrorKind;

/// Rendering of references whose type cannot be determined.
pub const UNKNOWN_TYPE: &str = "UNKNOWNP.UNKNOWN";

pub const SNIPPET_CLASS: &str = "Snippet";
pub const SNIPPET_METHOD: &str = "snippetBody";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InstrKind {
    InvokeVirtual,
    InvokeStatic,
    InvokeConstructor,
    NewObject,
    FieldGet,
    FieldPut,
    ArrayNew,
    ArrayLoad,
    ArrayStore,
    ConstLoad,
    BinaryOp,
    Compare,
    Cast,
    Assign,
    Return,
    Throw,
}

impl InstrKind {
    pub const ALL: [InstrKind; 16] = [
        InstrKind::InvokeVirtual,
        InstrKind::InvokeStatic,
        InstrKind::InvokeConstructor,
        InstrKind::NewObject,
        InstrKind::FieldGet,
        InstrKind::FieldPut,
        InstrKind::ArrayNew,
        InstrKind::ArrayLoad,
        InstrKind::ArrayStore,
        InstrKind::ConstLoad,
        InstrKind::BinaryOp,
        InstrKind::Compare,
        InstrKind::Cast,
        InstrKind::Assign,
        InstrKind::Return,
        InstrKind::Throw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub type ValueId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrInstruction {
    pub id: usize,
    pub kind: InstrKind,
    pub uses: BTreeSet<ValueId>,
    pub defines: Option<ValueId>,
    /// Human-readable operand (callee, field, literal); not used for matching.
    pub op: String,
}

/// Multiset of normalized literal texts.
pub type Constants = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrMethod {
    pub qualified_path: Vec<String>,
    pub instructions: Vec<IrInstruction>,
    pub constants: Constants,
    pub security_method_names: BTreeSet<String>,
}

impl IrMethod {
    pub fn name(&self) -> &str {
        self.qualified_path.last().map_or("", String::as_str)
    }

    /// Enclosing (possibly nested) class path.
    pub fn class_path(&self) -> &[String] {
        &self.qualified_path[..self.qualified_path.len().saturating_sub(1)]
    }

    pub fn path_string(&self) -> String {
        self.qualified_path.join(".")
    }

    /// No instructions, constants or security calls.
    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
            && self.constants.is_empty()
            && self.security_method_names.is_empty()
    }

    pub fn constant_count(&self) -> usize {
        self.constants.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// Prose placeholders such as `(...)` stand in for elided code.
    Placeholder,
    Unsupported(String),
    Syntax { line: u32, message: String },
    /// Parsed, but nothing with a method body.
    NoMethods,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Placeholder => f.write_str("elided-code placeholder"),
            Rejection::Unsupported(what) => write!(f, "unsupported construct: {what}"),
            Rejection::Syntax { line, message } => write!(f, "syntax error at line {line}: {message}"),
            Rejection::NoMethods => f.write_str("no method bodies"),
        }
    }
}

impl Rejection {
    pub fn reason_code(&self) -> &'static str {
        match self {
            Rejection::Placeholder => "placeholder",
            Rejection::Unsupported(_) => "unsupported",
            Rejection::Syntax { .. } => "syntax",
            Rejection::NoMethods => "no-methods",
        }
    }
}

/// Complete a snippet into a compilation unit. Units that already declare a
/// top-level type are returned unchanged; bare member declarations get a
/// class wrapper; bare statements get a class and a method wrapper. Leading
/// `package`/`import` lines stay outside the wrapper.
pub fn wrap_partial(code_text: &str) -> String {
    let tokens = lex(code_text).tokens;
    let mut depth = 0i32;
    let mut has_member = false;
    let mut header_end_tok = 0;
    let mut in_header = true;
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if in_header {
            if t.is_ident("package") || t.is_ident("import") {
                while i < tokens.len() && !tokens[i].is_punct(";") {
                    i += 1;
                }
                header_end_tok = i + 1;
                i += 1;
                continue;
            }
            in_header = false;
        }
        if t.is_punct("{") {
            depth += 1;
        } else if t.is_punct("}") {
            depth -= 1;
        } else if depth == 0 {
            let prev = i.checked_sub(1).map(|p| &tokens[p]);
            let after_dot = prev.is_some_and(|p| p.is_punct(".") || p.is_punct("@"));
            if matches!(t.text.as_str(), "class" | "interface" | "enum")
                && t.kind == TokenKind::Ident
                && !after_dot
                && tokens.get(i + 1).is_some_and(|n| n.kind == TokenKind::Ident)
            {
                return code_text.to_string();
            }
            let starts_stmt = prev.is_none_or(|p| p.is_punct(";") || p.is_punct("}") || p.is_punct("{"));
            if starts_stmt
                && t.kind == TokenKind::Ident
                && matches!(t.text.as_str(), "public" | "private" | "protected")
            {
                has_member = true;
            }
            if is_method_header(&tokens, i) {
                has_member = true;
            }
        }
        i += 1;
    }
    let split = if header_end_tok == 0 {
        0
    } else {
        tokens
            .get(header_end_tok)
            .map_or(code_text.len(), |t| t.offset)
    };
    let (head, rest) = code_text.split_at(split);
    let body = rest.trim_end();
    let mut out = String::from(head);
    if has_member {
        out.push_str(&format!("class {SNIPPET_CLASS} {{\n{body}\n}}\n"));
    } else {
        out.push_str(&format!(
            "class {SNIPPET_CLASS} {{\nvoid {SNIPPET_METHOD}() {{\n{body}\n}}\n}}\n"
        ));
    }
    out
}

/// `Type name(...) [throws ...] {` starting with the name at `i`.
fn is_method_header(tokens: &[crate::lexer::Token], i: usize) -> bool {
    let t = &tokens[i];
    if t.kind != TokenKind::Ident || crate::lexer::is_keyword(&t.text) {
        return false;
    }
    if !tokens.get(i + 1).is_some_and(|n| n.is_punct("(")) {
        return false;
    }
    let Some(prev) = i.checked_sub(1).map(|p| &tokens[p]) else {
        return false;
    };
    let type_before = (prev.kind == TokenKind::Ident
        && (!crate::lexer::is_keyword(&prev.text)
            || matches!(
                prev.text.as_str(),
                "void" | "int" | "long" | "byte" | "boolean" | "char" | "short" | "float" | "double"
            )))
        || prev.is_punct(">")
        || prev.is_punct("]");
    if !type_before {
        return false;
    }
    let Some(close) = crate::scan::matching(tokens, i + 1) else {
        return false;
    };
    let mut j = close + 1;
    if tokens.get(j).is_some_and(|t| t.is_ident("throws")) {
        j += 1;
        while tokens
            .get(j)
            .is_some_and(|t| t.kind == TokenKind::Ident || t.is_punct(".") || t.is_punct(","))
        {
            j += 1;
        }
    }
    tokens.get(j).is_some_and(|t| t.is_punct("{"))
}

fn has_placeholder(tokens: &[crate::lexer::Token]) -> bool {
    tokens.iter().enumerate().any(|(i, t)| {
        if t.is_punct("\u{2026}") {
            return true;
        }
        if !t.is_punct("...") {
            return false;
        }
        // Varargs follow a type; anything else is elision.
        let prev = i.checked_sub(1).map(|p| &tokens[p]);
        !prev.is_some_and(|p| {
            (p.kind == TokenKind::Ident && !crate::lexer::is_keyword(&p.text)
                || matches!(p.text.as_str(), "byte" | "int" | "long" | "char" | "short" | "float" | "double" | "boolean"))
                || p.is_punct("]")
                || p.is_punct(">")
        }) || !tokens.get(i + 1).is_some_and(|n| n.kind == TokenKind::Ident)
    })
}

/// Lower a complete compilation unit. Methods come back sorted by path.
pub fn compile(unit_text: &str, registry: &ApiRegistry) -> Result<Vec<IrMethod>, Rejection> {
    let lexed = lex(unit_text);
    if has_placeholder(&lexed.tokens) {
        return Err(Rejection::Placeholder);
    }
    let unit = parser::parse_unit(&lexed.tokens).map_err(|e| match e.kind {
        ParseErrorKind::Unsupported(what) => Rejection::Unsupported(what.to_string()),
        ParseErrorKind::Syntax => Rejection::Syntax {
            line: e.line,
            message: e.message,
        },
    })?;
    let mut methods = lower::lower_unit(&unit, registry);
    if methods.is_empty() {
        return Err(Rejection::NoMethods);
    }
    methods.sort_by(|a, b| a.qualified_path.cmp(&b.qualified_path));
    Ok(methods)
}

pub fn compile_snippet(code_text: &str, registry: &ApiRegistry) -> Result<Vec<IrMethod>, Rejection> {
    compile(&wrap_partial(code_text), registry)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodPdg {
    pub node_count: usize,
    /// Sorted, de-duplicated def-use pairs of instruction ids.
    pub edges: Vec<(usize, usize)>,
    /// Weakly connected components, each sorted, ordered by smallest id.
    pub semantic_blocks: Vec<Vec<usize>>,
}

impl MethodPdg {
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(a, _) in &self.edges {
            deg[a] += 1;
        }
        deg
    }
}

pub fn build_pdg(m: &IrMethod) -> MethodPdg {
    let n = m.instructions.len();
    let mut def_site: BTreeMap<ValueId, usize> = BTreeMap::new();
    for ins in &m.instructions {
        if let Some(v) = ins.defines {
            def_site.insert(v, ins.id);
        }
    }
    let mut edges = BTreeSet::new();
    for ins in &m.instructions {
        for u in &ins.uses {
            if let Some(&a) = def_site.get(u) {
                if a != ins.id {
                    edges.insert((a, ins.id));
                }
            }
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut semantic_blocks: Vec<Vec<usize>> = groups.into_values().collect();
    semantic_blocks.sort_by_key(|b| b[0]);
    MethodPdg {
        node_count: n,
        edges: edges.into_iter().collect(),
        semantic_blocks,
    }
}

/// Debug dump of one method and its graph.
pub fn method_json(m: &IrMethod, pdg: &MethodPdg) -> serde_json::Value {
    let constants: Vec<&String> = m
        .constants
        .iter()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
        .collect();
    json!({
        "path": m.qualified_path,
        "instructions": m.instructions.iter().map(|i| json!({
            "id": i.id,
            "kind": i.kind,
            "uses": i.uses,
            "defines": i.defines,
            "op": i.op,
        })).collect::<Vec<_>>(),
        "edges": pdg.edges,
        "constants": constants,
        "sec_methods": m.security_method_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> ApiRegistry {
        ApiRegistry::builtin()
    }

    fn kinds(m: &IrMethod) -> Vec<InstrKind> {
        m.instructions.iter().map(|i| i.kind).collect()
    }

    #[test]
    fn wraps_statements_methods_and_leaves_classes() {
        let w = wrap_partial("int a = 1;");
        assert!(w.starts_with("class Snippet {\nvoid snippetBody() {\nint a = 1;"));
        let m = "public boolean verify(String h, SSLSession s) {\n return true;\n}";
        assert_eq!(wrap_partial(m), format!("class Snippet {{\n{m}\n}}\n"));
        let c = "public class A { void f() {} }";
        assert_eq!(wrap_partial(c), c);
        let imp = "import javax.crypto.Cipher;\nCipher c = Cipher.getInstance(\"AES\");";
        let w = wrap_partial(imp);
        assert!(w.starts_with("import javax.crypto.Cipher;\nclass Snippet"));
    }

    #[test]
    fn class_literal_does_not_count_as_declaration() {
        let w = wrap_partial("Log.d(Foo.class.getName(), \"x\");");
        assert!(w.contains("snippetBody"));
    }

    #[test]
    fn verify_returning_true() {
        let ms = compile_snippet(
            "@Override\npublic boolean verify(String hostname, SSLSession session) {\n    return true;\n}",
            &reg(),
        )
        .unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].qualified_path, ["Snippet", "verify"]);
        assert_eq!(kinds(&ms[0]), [InstrKind::ConstLoad, InstrKind::Return]);
        assert!(ms[0].constants.is_empty());
    }

    #[test]
    fn static_call_uses_constant() {
        let ms = compile_snippet("Cipher c = Cipher.getInstance(\"AES\");", &reg()).unwrap();
        let m = &ms[0];
        assert_eq!(kinds(m), [InstrKind::ConstLoad, InstrKind::InvokeStatic]);
        let c = m.instructions[0].defines.unwrap();
        assert!(m.instructions[1].uses.contains(&c));
        assert_eq!(m.constants.get("AES"), Some(&1));
        assert!(m.security_method_names.contains("javax.crypto.Cipher.getInstance"));
    }

    #[test]
    fn placeholder_is_rejected() {
        let r = compile_snippet("Cipher c = Cipher.getInstance(\"AES\");\n(...)\nc.init(k);", &reg());
        assert_eq!(r.unwrap_err(), Rejection::Placeholder);
        assert!(compile_snippet("void f(String... args) { g(args); }", &reg()).is_ok());
    }

    #[test]
    fn pdg_examples() {
        let ms = compile_snippet("int f(int q) { int a = 1; int b = g(a); return b; }", &reg()).unwrap();
        let pdg = build_pdg(&ms[0]);
        assert_eq!(pdg.semantic_blocks, vec![vec![0, 1, 2]]);
        let ms = compile_snippet("a(\"x\"); b(\"y\");", &reg()).unwrap();
        assert_eq!(build_pdg(&ms[0]).semantic_blocks.len(), 2);
        let ms = compile_snippet("class T { void e() { } }", &reg()).unwrap();
        assert!(build_pdg(&ms[0]).semantic_blocks.is_empty());
    }

    #[test]
    fn empty_trust_manager_methods_are_empty() {
        let src = "TrustManager tm = new X509TrustManager() {\n    public void checkClientTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n    public void checkServerTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n    public X509Certificate[] getAcceptedIssuers() { return null; }\n};";
        let ms = compile_snippet(src, &reg()).unwrap();
        let paths: Vec<String> = ms.iter().map(|m| m.path_string()).collect();
        assert_eq!(
            paths,
            [
                "Snippet.$1.checkClientTrusted",
                "Snippet.$1.checkServerTrusted",
                "Snippet.$1.getAcceptedIssuers",
                "Snippet.snippetBody"
            ]
        );
        assert!(ms[0].is_empty() && ms[1].is_empty());
        assert!(!ms[2].is_empty());
    }

    #[test]
    fn unknown_receivers_never_contribute_security_names() {
        let ms = compile_snippet("foo.getInstance(\"AES\"); x.init(1);", &reg()).unwrap();
        assert!(ms[0].security_method_names.is_empty());
        assert!(ms[0].instructions.iter().any(|i| i.op.starts_with(UNKNOWN_TYPE)));
    }

    #[test]
    fn typed_locals_resolve_virtual_calls() {
        let ms = compile_snippet(
            "SecureRandom sr = SecureRandom.getInstance(\"SHA1PRNG\"); sr.setSeed(seed); MessageDigest md = (MessageDigest) obj; md.update(b);",
            &reg(),
        )
        .unwrap();
        let names = &ms[0].security_method_names;
        assert!(names.contains("java.security.SecureRandom.setSeed"));
        assert!(names.contains("java.security.MessageDigest.update"));
    }

    #[test]
    fn constants_are_normalized() {
        let ms = compile_snippet(
            "byte[] k = {0x10, 16, (byte) -1}; char c = 'x'; double d = 1.50; boolean b = true; Object o = null;",
            &reg(),
        )
        .unwrap();
        let c = &ms[0].constants;
        assert_eq!(c.get("16"), Some(&2));
        assert_eq!(c.get("-1"), Some(&1));
        assert_eq!(c.get("x"), Some(&1));
        assert_eq!(c.get("1.5"), Some(&1));
        assert!(!c.contains_key("true") && !c.contains_key("null"));
    }

    #[test]
    fn overloads_get_distinct_paths() {
        let ms = compile("class A { void f() { g(); } void f(int x) { g(x); } }", &reg()).unwrap();
        let paths: Vec<String> = ms.iter().map(|m| m.path_string()).collect();
        assert_eq!(paths, ["A.f", "A.f#2"]);
    }

    #[test]
    fn syntax_errors_are_rejections() {
        let r = compile_snippet("this is not java at all", &reg());
        assert!(matches!(r, Err(Rejection::Syntax { .. })));
        let r = compile_snippet("list.forEach(x -> use(x));", &reg());
        assert_eq!(r, Err(Rejection::Unsupported("lambda".into())));
    }

    #[test]
    fn dump_has_expected_keys() {
        let ms = compile_snippet("Cipher c = Cipher.getInstance(\"AES\");", &reg()).unwrap();
        let j = method_json(&ms[0], &build_pdg(&ms[0]));
        for k in ["path", "instructions", "edges", "constants", "sec_methods"] {
            assert!(j.get(k).is_some(), "{k}");
        }
        assert_eq!(j["edges"], json!([[0, 1]]));
    }
}
