//! Security-API registry and the snippet-level resolver that maps partially
//! qualified code elements to registry classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SnippetRecord;
use crate::lexer::{lex, Token, TokenKind};
use crate::scan::{self, Receiver};

pub const REGISTRY_VERSION: u32 = 1;
pub const INIT: &str = "<init>";

const BUILTIN_REGISTRY: &str = include_str!("../data/registry.json");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported registry version {0}")]
    Version(u32),
    #[error("duplicate class {0}")]
    DuplicateClass(String),
    #[error("class {0} has no methods and is not marked marker_only")]
    NoMethods(String),
    #[error("blacklist entry {0:?} covers every class of library {1}")]
    BlacklistCoversLibrary(String, String),
    #[error("empty blacklist entry")]
    EmptyBlacklistEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub fqn: String,
    #[serde(default)]
    pub methods: BTreeSet<String>,
    #[serde(default)]
    pub fields: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub marker_only: bool,
}

impl ClassSpec {
    pub fn simple_name(&self) -> &str {
        self.fqn.rsplit('.').next().unwrap_or(&self.fqn)
    }

    pub fn package(&self) -> &str {
        self.fqn.rsplit_once('.').map_or("", |(p, _)| p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibrarySpec {
    pub name: String,
    pub classes: Vec<ClassSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    version: u32,
    libraries: Vec<LibrarySpec>,
    #[serde(default)]
    blacklist: BTreeSet<String>,
}

/// Validated, immutable registry of security libraries.
#[derive(Debug, Clone)]
pub struct ApiRegistry {
    libraries: Vec<LibrarySpec>,
    blacklist: BTreeSet<String>,
    by_fqn: HashMap<String, (usize, usize)>,
    by_simple: HashMap<String, Vec<(usize, usize)>>,
}

/// `java.util` covers `java.util` and `java.util.zip` but not `java.utility`.
pub fn package_covered(package: &str, prefix: &str) -> bool {
    package == prefix
        || package
            .strip_prefix(prefix)
            .is_some_and(|rest| rest.starts_with('.'))
}

impl ApiRegistry {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = serde_json::from_str(text)?;
        Self::new(file.version, file.libraries, file.blacklist)
    }

    pub fn new(
        version: u32,
        libraries: Vec<LibrarySpec>,
        blacklist: BTreeSet<String>,
    ) -> Result<Self, RegistryError> {
        if version != REGISTRY_VERSION {
            return Err(RegistryError::Version(version));
        }
        if blacklist.iter().any(|b| b.trim().is_empty()) {
            return Err(RegistryError::EmptyBlacklistEntry);
        }
        let mut by_fqn = HashMap::new();
        let mut by_simple: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (li, lib) in libraries.iter().enumerate() {
            for (ci, class) in lib.classes.iter().enumerate() {
                if by_fqn.insert(class.fqn.clone(), (li, ci)).is_some() {
                    return Err(RegistryError::DuplicateClass(class.fqn.clone()));
                }
                if class.methods.is_empty() && !class.marker_only {
                    return Err(RegistryError::NoMethods(class.fqn.clone()));
                }
                by_simple
                    .entry(class.simple_name().to_string())
                    .or_default()
                    .push((li, ci));
            }
            for entry in &blacklist {
                if !lib.classes.is_empty()
                    && lib
                        .classes
                        .iter()
                        .all(|c| package_covered(c.package(), entry))
                {
                    return Err(RegistryError::BlacklistCoversLibrary(
                        entry.clone(),
                        lib.name.clone(),
                    ));
                }
            }
        }
        Ok(ApiRegistry {
            libraries,
            blacklist,
            by_fqn,
            by_simple,
        })
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            version: REGISTRY_VERSION,
            libraries: self.libraries.clone(),
            blacklist: self.blacklist.clone(),
        };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn libraries(&self) -> &[LibrarySpec] {
        &self.libraries
    }

    pub fn blacklist(&self) -> &BTreeSet<String> {
        &self.blacklist
    }

    fn class_at(&self, (li, ci): (usize, usize)) -> &ClassSpec {
        &self.libraries[li].classes[ci]
    }

    pub fn class(&self, fqn: &str) -> Option<&ClassSpec> {
        self.by_fqn.get(fqn).map(|&ix| self.class_at(ix))
    }

    pub fn library_of(&self, fqn: &str) -> Option<&str> {
        self.by_fqn
            .get(fqn)
            .map(|&(li, _)| self.libraries[li].name.as_str())
    }

    pub fn classes_named<'a>(&'a self, simple: &str) -> impl Iterator<Item = &'a ClassSpec> + 'a {
        self.by_simple
            .get(simple)
            .into_iter()
            .flatten()
            .map(move |&ix| self.class_at(ix))
    }

    pub fn is_blacklisted(&self, fqn: &str) -> bool {
        let package = fqn.rsplit_once('.').map_or("", |(p, _)| p);
        self.blacklist.iter().any(|b| package_covered(package, b))
    }

    /// Candidate classes for `element` after constraint narrowing, in FQN order.
    pub fn candidates(&self, element: &CodeElement) -> Vec<&ClassSpec> {
        let mut initial: Vec<&ClassSpec> = match &element.explicit_package {
            Some(pkg) => self
                .class(&format!("{pkg}.{}", element.simple_name))
                .into_iter()
                .collect(),
            None => self.classes_named(&element.simple_name).collect(),
        };
        initial.sort_by(|a, b| a.fqn.cmp(&b.fqn));
        let mut narrowed: Vec<&ClassSpec> = initial
            .into_iter()
            .filter(|c| element.observed_methods.iter().all(|m| c.methods.contains(m)))
            .filter(|c| element.observed_fields.iter().all(|f| c.fields.contains(f)))
            .collect();
        // Overridden methods narrow only when some candidate declares them.
        if !element.declared_methods.is_empty() && narrowed.len() > 1 {
            let declaring: Vec<&ClassSpec> = narrowed
                .iter()
                .copied()
                .filter(|c| element.declared_methods.iter().any(|m| c.methods.contains(m)))
                .collect();
            if !declaring.is_empty() {
                narrowed = declaring;
            }
        }
        narrowed
    }
}

/// A code element as read from snippet text, before resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct CodeElement {
    pub simple_name: String,
    pub explicit_package: Option<String>,
    /// Methods invoked on the element (static calls, calls on typed locals,
    /// `<init>` for constructor calls).
    pub observed_methods: BTreeSet<String>,
    pub observed_fields: BTreeSet<String>,
    /// Methods the snippet declares while extending or implementing the element.
    pub declared_methods: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    TypeRef,
    MethodCall,
    FieldAccess,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResolvedElement {
    #[serde(rename = "fqn")]
    pub resolved_fqn: String,
    #[serde(skip)]
    pub simple_name: String,
    #[serde(skip, default = "default_kind")]
    pub kind: ElementKind,
    #[serde(rename = "methods")]
    pub observed_methods: BTreeSet<String>,
}

fn default_kind() -> ElementKind {
    ElementKind::MethodCall
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionStats {
    pub unresolved: usize,
    pub ambiguous: usize,
    pub blacklisted: usize,
    pub unused: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    pub resolved: BTreeSet<ResolvedElement>,
    pub stats: ResolutionStats,
}

fn is_package_segment(t: &Token) -> bool {
    t.kind == TokenKind::Ident && t.text.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

/// Split a dotted chain into (package, type, members) at the first type-like
/// segment, e.g. `javax.crypto.Cipher` -> (Some("javax.crypto"), "Cipher").
fn split_qualified(segs: &[String]) -> Option<(Option<String>, usize)> {
    let ty = segs
        .iter()
        .position(|s| s.chars().next().is_some_and(|c| c.is_ascii_uppercase()))?;
    if ty == 0 {
        return Some((None, 0));
    }
    if segs[..ty]
        .iter()
        .all(|s| s.chars().next().is_some_and(|c| c.is_ascii_lowercase()))
    {
        Some((Some(segs[..ty].join(".")), ty))
    } else {
        None
    }
}

#[derive(Default)]
struct ElementTable {
    elements: BTreeMap<(String, Option<String>), CodeElement>,
}

impl ElementTable {
    fn entry(&mut self, simple: &str, package: Option<String>) -> &mut CodeElement {
        self.elements
            .entry((simple.to_string(), package.clone()))
            .or_insert_with(|| CodeElement {
                simple_name: simple.to_string(),
                explicit_package: package,
                ..Default::default()
            })
    }
}

/// Local and field declarations `Type name` in the token stream, mapped to the
/// declared type's simple name.
pub fn declared_types(tokens: &[Token]) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for i in 0..tokens.len() {
        if !tokens[i].is_type_like() {
            continue;
        }
        if i >= 1 && tokens[i - 1].is_ident("new") {
            continue;
        }
        let mut j = i + 1;
        if tokens.get(j).is_some_and(|t| t.is_punct("<")) {
            let mut depth = 0i32;
            while j < tokens.len() {
                match tokens[j].text.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    ";" | "{" | "(" => break,
                    _ => {}
                }
                j += 1;
                if depth <= 0 {
                    break;
                }
            }
        }
        while tokens.get(j).is_some_and(|t| t.is_punct("["))
            && tokens.get(j + 1).is_some_and(|t| t.is_punct("]"))
        {
            j += 2;
        }
        let Some(var) = tokens.get(j) else { continue };
        if var.kind != TokenKind::Ident || crate::lexer::is_keyword(&var.text) {
            continue;
        }
        if tokens
            .get(j + 1)
            .is_some_and(|t| [";", "=", ",", ")", ":"].iter().any(|p| t.is_punct(p)))
        {
            out.insert(var.text.clone(), tokens[i].text.clone());
        }
    }
    out
}

/// Read type references, call chains, imports and fully qualified names from
/// snippet text. Never fails; comments are ignored.
pub fn lex_elements(code_text: &str) -> Vec<CodeElement> {
    let tokens = lex(code_text).tokens;
    let mut table = ElementTable::default();
    let mut imports: HashMap<String, String> = HashMap::new();

    // Imports: `import [static] a.b.C[.m];`
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].is_ident("import") {
            let mut j = i + 1;
            if tokens.get(j).is_some_and(|t| t.is_ident("static")) {
                j += 1;
            }
            let mut segs = Vec::new();
            while let Some(t) = tokens.get(j) {
                if t.kind == TokenKind::Ident {
                    segs.push(t.text.clone());
                } else if !t.is_punct(".") {
                    break;
                }
                j += 1;
            }
            if let Some((Some(pkg), ty)) = split_qualified(&segs) {
                imports.insert(segs[ty].clone(), pkg.clone());
                table.entry(&segs[ty], Some(pkg));
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let package_of = |simple: &str, explicit: Option<String>| -> Option<String> {
        explicit.or_else(|| imports.get(simple).cloned())
    };
    let locals = declared_types(&tokens);

    // Type references.
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_type_like() {
            continue;
        }
        let (segs, start) = scan::chain_ending_at(&tokens, i);
        if i >= 1 && tokens[i - 1].is_punct(".") {
            // Only the first type-like segment of a qualified chain counts.
            match split_qualified(&segs) {
                Some((Some(pkg), ty)) if ty == segs.len() - 1 => {
                    table.entry(&t.text, Some(pkg));
                }
                _ => {}
            }
            continue;
        }
        let _ = start;
        if i >= 1 && tokens[i - 1].is_ident("import") {
            continue;
        }
        table.entry(&t.text, package_of(&t.text, None));
    }

    // Calls.
    for call in scan::call_sites(&tokens) {
        let Receiver::Chain(segs) = &call.receiver else {
            continue;
        };
        if segs.len() == 1 || (segs.len() == 2 && segs[0] == "this") {
            let head = segs.last().unwrap();
            if let Some(ty) = locals.get(head.as_str()) {
                let pkg = package_of(ty, None);
                table
                    .entry(ty, pkg)
                    .observed_methods
                    .insert(call.method.clone());
                continue;
            }
        }
        if let Some((pkg, ty)) = split_qualified(segs) {
            // Static call only when the type is the last segment (`Type.m()`).
            if ty == segs.len() - 1 && !locals.contains_key(segs[ty].as_str()) {
                let pkg = package_of(&segs[ty], pkg);
                table
                    .entry(&segs[ty], pkg)
                    .observed_methods
                    .insert(call.method.clone());
            }
        }
    }

    // Constructor calls and anonymous subclasses.
    for new in scan::new_exprs(&tokens) {
        let Some((pkg, ty)) = split_qualified(&new.type_path) else {
            continue;
        };
        if ty != new.type_path.len() - 1 {
            continue;
        }
        let name = new.type_path[ty].clone();
        let pkg = package_of(&name, pkg);
        if new.array.is_some() {
            table.entry(&name, pkg);
            continue;
        }
        match &new.anon_body {
            Some(body) => {
                let declared: BTreeSet<String> = scan::member_methods(&tokens, body.clone())
                    .into_iter()
                    .map(|m| m.name)
                    .collect();
                table.entry(&name, pkg).declared_methods.extend(declared);
            }
            None => {
                table.entry(&name, pkg).observed_methods.insert(INIT.into());
            }
        }
    }

    // Static field access `Type.FIELD`.
    for i in 2..tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Ident || !tokens[i - 1].is_punct(".") {
            continue;
        }
        if tokens.get(i + 1).is_some_and(|n| n.is_punct("(")) {
            continue;
        }
        if !tokens[i - 2].is_type_like() || locals.contains_key(&tokens[i - 2].text) {
            continue;
        }
        if t.is_type_like() && t.text.chars().any(|c| c.is_ascii_lowercase()) {
            continue; // nested type, not a field
        }
        let (segs, _) = scan::chain_ending_at(&tokens, i - 2);
        if let Some((pkg, ty)) = split_qualified(&segs) {
            if ty == segs.len() - 1 {
                let pkg = package_of(&segs[ty], pkg);
                table
                    .entry(&segs[ty], pkg)
                    .observed_fields
                    .insert(t.text.clone());
            }
        }
    }

    // Supertypes of declared classes.
    for i in 0..tokens.len() {
        if !(tokens[i].is_ident("class") || tokens[i].is_ident("interface")) {
            continue;
        }
        if i >= 1 && tokens[i - 1].is_punct(".") {
            continue;
        }
        let Some(open) = (i..tokens.len()).find(|&k| tokens[k].is_punct("{")) else {
            continue;
        };
        let Some(close) = scan::matching(&tokens, open) else {
            continue;
        };
        let members: BTreeSet<String> = scan::member_methods(&tokens, open + 1..close)
            .into_iter()
            .map(|m| m.name)
            .collect();
        let mut k = i + 2;
        let mut in_supers = false;
        while k < open {
            let t = &tokens[k];
            if t.is_ident("extends") || t.is_ident("implements") {
                in_supers = true;
            } else if in_supers && t.is_type_like() && !tokens[k - 1].is_punct(".") {
                let (segs, _) = {
                    let mut e = k;
                    while tokens.get(e + 1).is_some_and(|n| n.is_punct("."))
                        && tokens.get(e + 2).is_some_and(|n| n.kind == TokenKind::Ident)
                    {
                        e += 2;
                    }
                    scan::chain_ending_at(&tokens, e)
                };
                if let Some((pkg, ty)) = split_qualified(&segs) {
                    let pkg = package_of(&segs[ty], pkg);
                    table
                        .entry(&segs[ty], pkg)
                        .declared_methods
                        .extend(members.iter().cloned());
                }
            }
            k += 1;
        }
    }

    // An element qualified in code also picks up the unqualified observations
    // when an import names the same package.
    let _ = is_package_segment;
    table.elements.into_values().collect()
}

/// Resolve elements against the registry. An element resolves iff exactly one
/// candidate survives narrowing; blacklisted and unused (constructor-only or
/// no methods) elements are dropped and counted.
pub fn resolve(elements: &[CodeElement], registry: &ApiRegistry) -> Resolution {
    let mut out = Resolution::default();
    let mut sorted: Vec<&CodeElement> = elements.iter().collect();
    sorted.sort();
    for element in sorted {
        let candidates = registry.candidates(element);
        let class = match candidates.as_slice() {
            [] => {
                out.stats.unresolved += 1;
                continue;
            }
            [one] => *one,
            _ => {
                out.stats.ambiguous += 1;
                continue;
            }
        };
        if registry.is_blacklisted(&class.fqn) {
            out.stats.blacklisted += 1;
            continue;
        }
        let mut used: BTreeSet<String> = element.observed_methods.clone();
        used.extend(
            element
                .declared_methods
                .iter()
                .filter(|m| class.methods.contains(*m))
                .cloned(),
        );
        if used.iter().all(|m| m == INIT) {
            out.stats.unused += 1;
            continue;
        }
        let kind = if used.iter().any(|m| m != INIT) {
            ElementKind::MethodCall
        } else if !element.observed_fields.is_empty() {
            ElementKind::FieldAccess
        } else {
            ElementKind::TypeRef
        };
        out.resolved.insert(ResolvedElement {
            resolved_fqn: class.fqn.clone(),
            simple_name: element.simple_name.clone(),
            kind,
            observed_methods: used,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub snippet_id: crate::ingest::SnippetId,
    pub related: bool,
    pub resolved: Vec<ResolvedElement>,
}

pub fn is_security_related(snippet: &SnippetRecord, registry: &ApiRegistry) -> FilterRecord {
    let resolution = resolve(&lex_elements(&snippet.code_text), registry);
    FilterRecord {
        snippet_id: snippet.snippet_id,
        related: !resolution.resolved.is_empty(),
        resolved: resolution.resolved.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn element<'a>(els: &'a [CodeElement], name: &str) -> &'a CodeElement {
        els.iter().find(|e| e.simple_name == name).unwrap()
    }

    fn resolved_fqns(code: &str) -> Vec<String> {
        resolve(&lex_elements(code), &ApiRegistry::builtin())
            .resolved
            .into_iter()
            .map(|r| r.resolved_fqn)
            .collect()
    }

    #[test]
    fn builtin_registry_loads_and_round_trips() {
        let r = ApiRegistry::builtin();
        assert!(r.class("javax.crypto.Cipher").is_some());
        let again = ApiRegistry::from_json(&r.to_json()).unwrap();
        assert_eq!(again.libraries(), r.libraries());
    }

    #[test]
    fn lexes_static_call() {
        let els = lex_elements("Cipher c = Cipher.getInstance(\"AES\");");
        let c = element(&els, "Cipher");
        assert_eq!(c.observed_methods, BTreeSet::from(["getInstance".to_string()]));
        assert_eq!(c.explicit_package, None);
    }

    #[test]
    fn import_sets_package() {
        let els = lex_elements("import javax.crypto.Cipher;");
        assert_eq!(
            element(&els, "Cipher").explicit_package.as_deref(),
            Some("javax.crypto")
        );
    }

    #[test]
    fn commented_code_yields_nothing() {
        assert!(lex_elements("// Cipher.getInstance").is_empty());
    }

    #[test]
    fn calls_on_typed_locals_are_attributed() {
        let els = lex_elements(
            "Cipher c = Cipher.getInstance(\"AES\"); c.init(Cipher.ENCRYPT_MODE, k); c.doFinal(d);",
        );
        let c = element(&els, "Cipher");
        let want: BTreeSet<String> = ["getInstance", "init", "doFinal"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(c.observed_methods, want);
        assert!(c.observed_fields.contains("ENCRYPT_MODE"));
    }

    #[test]
    fn cipher_resolves_to_javax_crypto() {
        let fqns = resolved_fqns(
            "Cipher c = Cipher.getInstance(\"AES\"); c.init(1, key); byte[] o = c.doFinal(data);",
        );
        assert_eq!(fqns, ["javax.crypto.Cipher"]);
    }

    #[test]
    fn constructor_only_configuration_is_dropped() {
        let res = resolve(
            &lex_elements("Configuration config = new Configuration();"),
            &ApiRegistry::builtin(),
        );
        assert!(res.resolved.is_empty());
        assert_eq!(res.stats.unused, 1);
    }

    #[test]
    fn base64_without_disambiguation_is_ambiguous() {
        let el = CodeElement {
            simple_name: "Base64".into(),
            ..Default::default()
        };
        let res = resolve(&[el], &ApiRegistry::builtin());
        assert!(res.resolved.is_empty());
        assert_eq!(res.stats.ambiguous, 1);
    }

    #[test]
    fn blacklisted_util_class_is_dropped() {
        let snippet = "String s = Base64.encodeToString(bytes, Base64.NO_WRAP);";
        let res = resolve(&lex_elements(snippet), &ApiRegistry::builtin());
        assert!(res.resolved.is_empty());
        assert_eq!(res.stats.blacklisted, 1);
    }

    #[test]
    fn sslcontext_snippet_is_related_ui_snippet_is_not() {
        let reg = ApiRegistry::builtin();
        let mk = |code: &str| SnippetRecord {
            snippet_id: crate::ingest::SnippetId {
                post_id: 1,
                ordinal: 0,
            },
            post_id: 1,
            kind: crate::ingest::PostKind::Question,
            parent_id: None,
            score: 0,
            view_count: 0,
            code_text: code.into(),
            hash: crate::ingest::code_hash(code),
        };
        let tls = mk("SSLContext ctx = SSLContext.getInstance(\"TLS\"); ctx.init(null, tms, null);");
        assert!(is_security_related(&tls, &reg).related);
        let ui = mk("TextView tv = (TextView) findViewById(R.id.t); tv.setOnClickListener(this); public void onClick(View v) { tv.setText(\"x\"); }");
        assert!(!is_security_related(&ui, &reg).related);
    }

    #[test]
    fn anonymous_trust_manager_counts_as_used() {
        let code = "TrustManager tm = new X509TrustManager() {\n public void checkClientTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n public void checkServerTrusted(X509Certificate[] chain, String authType) throws CertificateException { }\n public X509Certificate[] getAcceptedIssuers() { return null; }\n};";
        assert_eq!(resolved_fqns(code), ["javax.net.ssl.X509TrustManager"]);
    }

    #[test]
    fn qualified_reference_uses_explicit_package() {
        let els = lex_elements("java.security.MessageDigest md = java.security.MessageDigest.getInstance(\"SHA-256\");");
        let md: Vec<_> = els.iter().filter(|e| e.simple_name == "MessageDigest").collect();
        assert!(md
            .iter()
            .any(|e| e.explicit_package.as_deref() == Some("java.security")
                && e.observed_methods.contains("getInstance")));
    }

    #[test]
    fn explicit_package_outside_registry_is_unresolved() {
        let res = resolve(
            &lex_elements("import android.content.res.Configuration; Configuration c = getResources().getConfiguration(); c.setLocale(l);"),
            &ApiRegistry::builtin(),
        );
        assert!(res.resolved.is_empty());
    }

    #[test]
    fn registry_validation_errors() {
        let lib = |classes: Vec<ClassSpec>| LibrarySpec {
            name: "L".into(),
            classes,
        };
        let cls = |fqn: &str, methods: &[&str]| ClassSpec {
            fqn: fqn.into(),
            methods: methods.iter().map(|s| s.to_string()).collect(),
            fields: BTreeSet::new(),
            marker_only: false,
        };
        assert!(matches!(
            ApiRegistry::new(1, vec![lib(vec![cls("a.B", &["m"]), cls("a.B", &["n"])])], BTreeSet::new()),
            Err(RegistryError::DuplicateClass(_))
        ));
        assert!(matches!(
            ApiRegistry::new(1, vec![lib(vec![cls("a.B", &[])])], BTreeSet::new()),
            Err(RegistryError::NoMethods(_))
        ));
        assert!(matches!(
            ApiRegistry::new(1, vec![lib(vec![cls("a.b.C", &["m"])])], BTreeSet::from(["a".to_string()])),
            Err(RegistryError::BlacklistCoversLibrary(..))
        ));
        assert!(matches!(
            ApiRegistry::new(2, vec![], BTreeSet::new()),
            Err(RegistryError::Version(2))
        ));
    }

    #[test]
    fn package_prefix_is_segment_aware() {
        assert!(package_covered("java.util", "java.util"));
        assert!(package_covered("java.util.zip", "java.util"));
        assert!(!package_covered("java.utility", "java.util"));
    }
}
