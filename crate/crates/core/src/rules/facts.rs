//! Snippet-local facts the rule matchers look at. Everything here is read
//! from the token stream: literal arguments, the syntactic origin of key, IV
//! and salt material, overridden-method bodies and call order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;

use crate::lexer::{int_value, lex, Token, TokenKind};
use crate::resolver::declared_types;
use crate::scan::{self, CallSite, NewExpr, Receiver};

const MAX_EVAL_DEPTH: usize = 8;

const CREDENTIAL_WORDS: &[&str] = &[
    "password", "passwd", "pwd", "passphrase", "login", "token", "credential", "username",
];

const CLIENT_SERVER_WORDS: &[&str] = &[
    "SSLContext", "SSLSocket", "SSLSocketFactory", "SSLServerSocket", "HttpsURLConnection",
    "HttpURLConnection", "TrustManager", "X509TrustManager", "HostnameVerifier", "Socket",
    "ServerSocket", "URL", "HttpClient", "DefaultHttpClient", "OkHttpClient", "WebViewClient",
    "HttpPost", "HttpGet", "onReceivedSslError",
];

const LOGGING_METHODS: &[&str] = &[
    "println", "print", "printf", "printStackTrace", "d", "e", "i", "v", "w", "wtf", "log",
    "debug", "info", "warn", "error", "trace",
];

/// Syntactic origin of a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    Int(i128),
    /// Array literal of numbers.
    LiteralBytes { len: usize, zero: bool },
    /// `new byte[n]` that is never filled.
    ZeroBytes { len: Option<usize> },
    /// Bytes of a string literal (`"...".getBytes()`).
    BytesOfLiteral { len: usize },
    DigestOfLiteral,
    /// Opaque value computed only from literals (e.g. `Base64.decode("...")`).
    Static,
    /// Filled by a random generator.
    Random { len: Option<usize> },
    /// Produced by a provider (`generateKey`, `getIV`).
    Generated,
    /// Output of a password-based KDF.
    Kdf,
    /// Named constant such as `Base64.DEFAULT`.
    Constant,
    Unknown,
}

impl Value {
    fn literal_derived(&self) -> bool {
        matches!(
            self,
            Value::Str(_)
                | Value::Int(_)
                | Value::LiteralBytes { .. }
                | Value::ZeroBytes { .. }
                | Value::BytesOfLiteral { .. }
                | Value::DigestOfLiteral
                | Value::Static
        )
    }

    fn byte_len(&self) -> Option<usize> {
        match self {
            Value::Str(s) => Some(s.len()),
            Value::LiteralBytes { len, .. } | Value::BytesOfLiteral { len } => Some(*len),
            Value::ZeroBytes { len } | Value::Random { len } => *len,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Material {
    ProviderGenerated,
    Zeroed,
    Static,
    BadDerivation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transformation {
    pub algorithm: String,
    pub mode: Option<String>,
    pub padding: Option<String>,
}

impl Transformation {
    pub fn parse(raw: &str) -> Self {
        let mut parts = raw.split('/').map(|p| p.trim().to_ascii_uppercase());
        Transformation {
            algorithm: parts.next().unwrap_or_default(),
            mode: parts.next().filter(|s| !s.is_empty()),
            padding: parts.next().filter(|s| !s.is_empty()),
        }
    }

    pub fn is_aes(&self) -> bool {
        self.algorithm.starts_with("AES")
    }

    pub fn is_rsa(&self) -> bool {
        self.algorithm == "RSA"
    }

    pub fn mode_is(&self, m: &str) -> bool {
        self.mode.as_deref() == Some(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbeUse {
    pub salt: Option<Material>,
    pub salt_bits: Option<usize>,
    pub iterations: Option<i128>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DigestPurpose {
    Pbkdf,
    Signature,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DigestStrength {
    Weak,
    Sha1,
    Strong,
    Other,
}

pub fn digest_strength(name: &str) -> DigestStrength {
    let n: String = name
        .to_ascii_uppercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    if n.contains("MD2") || n.contains("MD5") {
        DigestStrength::Weak
    } else if ["SHA224", "SHA256", "SHA384", "SHA512", "SHA3"]
        .iter()
        .any(|s| n.contains(s))
    {
        DigestStrength::Strong
    } else if n.contains("SHA1") || n.contains("SHA") {
        DigestStrength::Sha1
    } else {
        DigestStrength::Other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrustManagerKind {
    Default,
    SecurePinning,
    TrustAll,
    BadPinning,
    ValidityOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerifierKind {
    AllowAll,
    BrowserCompatible,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum KeyPairAlgorithm {
    Rsa,
    Ec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedEvent {
    NextBytes,
    SetSeed { literal: bool },
}

#[derive(Debug, Clone, Default)]
pub struct SnippetFacts {
    pub tokens: Vec<Token>,
    pub resolved: BTreeSet<String>,
    pub transformations: Vec<Transformation>,
    pub tls_versions: Vec<String>,
    pub cipher_suites: Vec<String>,
    pub keys: Vec<Material>,
    pub ivs: Vec<Material>,
    pub pbe: Vec<PbeUse>,
    pub key_sizes: Vec<(KeyPairAlgorithm, u64)>,
    pub digests: Vec<(DigestPurpose, DigestStrength)>,
    pub credential_context: bool,
    pub client_server_hint: bool,
    pub trust_managers: BTreeSet<TrustManagerKind>,
    pub verifiers: BTreeSet<VerifierKind>,
    pub ssl_error_proceed: bool,
    pub ssl_error_cancel: bool,
    pub pkcs8: bool,
    pub secure_random: bool,
    pub insecure_random: bool,
    /// Per SecureRandom receiver, its seeding calls in source order.
    pub seeding: Vec<Vec<SeedEvent>>,
}

struct Extractor<'a> {
    tokens: &'a [Token],
    calls: Vec<CallSite>,
    news: Vec<NewExpr>,
    bindings: HashMap<String, Vec<Range<usize>>>,
    types: HashMap<String, String>,
}

fn type_name_of(path: &[String]) -> &str {
    path.last().map(String::as_str).unwrap_or("")
}

fn is_constant_name(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_uppercase())
        && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// `name = expr` occurrences, with the expression's token range.
fn collect_bindings(tokens: &[Token]) -> HashMap<String, Vec<Range<usize>>> {
    let mut out: HashMap<String, Vec<Range<usize>>> = HashMap::new();
    for i in 0..tokens.len().saturating_sub(1) {
        let t = &tokens[i];
        if t.kind != TokenKind::Ident || !tokens[i + 1].is_punct("=") {
            continue;
        }
        if i >= 2 && tokens[i - 1].is_punct(".") && !tokens[i - 2].is_ident("this") {
            continue;
        }
        let start = i + 2;
        let mut depth = 0i32;
        let mut end = start;
        while end < tokens.len() {
            let u = &tokens[end];
            if u.kind == TokenKind::Punct {
                match u.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                    }
                    ";" | "," if depth == 0 => break,
                    _ => {}
                }
            }
            end += 1;
        }
        if end > start {
            out.entry(t.text.clone()).or_default().push(start..end);
        }
    }
    out
}

impl<'a> Extractor<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        Extractor {
            tokens,
            calls: scan::call_sites(tokens),
            news: scan::new_exprs(tokens),
            bindings: collect_bindings(tokens),
            types: declared_types(tokens),
        }
    }

    fn text(&self, r: &Range<usize>) -> String {
        self.tokens[r.clone()]
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn receiver_var<'c>(&self, call: &'c CallSite) -> Option<&'c str> {
        match &call.receiver {
            Receiver::Chain(segs) if segs.len() == 1 => Some(segs[0].as_str()),
            Receiver::Chain(segs) if segs.len() == 2 && segs[0] == "this" => Some(segs[1].as_str()),
            _ => None,
        }
    }

    /// Static call `Type.method(...)`, also through a qualified type path.
    fn static_calls<'s>(&'s self, ty: &'s str, method: &'s str) -> impl Iterator<Item = &'s CallSite> + 's {
        self.calls.iter().filter(move |c| {
            c.method == method
                && matches!(&c.receiver, Receiver::Chain(segs) if segs.last().is_some_and(|s| s == ty))
        })
    }

    fn news_of<'s>(&'s self, ty: &'s str) -> impl Iterator<Item = &'s NewExpr> + 's {
        self.news
            .iter()
            .filter(move |n| n.array.is_none() && type_name_of(&n.type_path) == ty)
    }

    fn strip(&self, mut r: Range<usize>) -> Range<usize> {
        loop {
            if r.len() >= 2 && self.tokens[r.start].is_punct("(") {
                if let Some(close) = scan::matching(self.tokens, r.start) {
                    if close == r.end - 1 {
                        r = r.start + 1..r.end - 1;
                        continue;
                    }
                    // Cast: `(Type) expr` / `(byte[]) expr`.
                    let inner = &self.tokens[r.start + 1..close];
                    let cast = !inner.is_empty()
                        && inner[0].kind == TokenKind::Ident
                        && inner
                            .iter()
                            .all(|t| t.kind == TokenKind::Ident || t.is_punct(".") || t.is_punct("[") || t.is_punct("]"))
                        && close + 1 < r.end;
                    if cast {
                        r = close + 1..r.end;
                        continue;
                    }
                }
            }
            return r;
        }
    }

    fn eval(&self, r: Range<usize>, depth: usize, visiting: &mut HashSet<String>) -> Value {
        if depth > MAX_EVAL_DEPTH || r.is_empty() {
            return Value::Unknown;
        }
        let r = self.strip(r);
        if r.is_empty() {
            return Value::Unknown;
        }
        let toks = &self.tokens[r.clone()];
        if toks.len() == 2 && toks[0].is_punct("-") {
            if let Some(v) = int_value(&toks[1].text).filter(|_| toks[1].kind == TokenKind::Int) {
                return Value::Int(-v);
            }
        }
        if toks.len() == 1 {
            let t = &toks[0];
            return match t.kind {
                TokenKind::Str => Value::Str(t.text.clone()),
                TokenKind::Int => int_value(&t.text).map_or(Value::Unknown, Value::Int),
                TokenKind::Char => Value::Int(t.text.chars().next().map_or(0, |c| c as i128)),
                TokenKind::Ident if is_constant_name(&t.text) => Value::Constant,
                TokenKind::Ident => self.lookup(&t.text, depth, visiting),
                _ => Value::Unknown,
            };
        }
        if toks[0].is_punct("{") && scan::matching(self.tokens, r.start) == Some(r.end - 1) {
            return self.eval_initializer(r.start + 1..r.end - 1, depth, visiting);
        }
        if toks[0].is_ident("new") {
            if let Some(n) = self.news.iter().find(|n| n.type_idx == r.start + 1 && n.end == r.end - 1) {
                return self.eval_new(n, depth, visiting);
            }
        }
        // String concatenation of literals.
        if toks.iter().any(|t| t.is_punct("+")) {
            let pieces: Vec<&Token> = toks.iter().filter(|t| !t.is_punct("+")).collect();
            if pieces.iter().all(|t| t.kind == TokenKind::Str)
                && toks.iter().filter(|t| t.is_punct("+")).count() + 1 == pieces.len()
            {
                return Value::Str(pieces.iter().map(|t| t.text.as_str()).collect());
            }
            return Value::Unknown;
        }
        if toks.last().is_some_and(|t| t.is_punct(")")) {
            if let Some(call) = self
                .calls
                .iter()
                .find(|c| c.close == r.end - 1 && c.name_idx >= r.start)
            {
                return self.eval_call(call, r.start, depth, visiting);
            }
        }
        // Dotted field access.
        if toks.iter().all(|t| t.kind == TokenKind::Ident || t.is_punct(".")) {
            if toks.last().is_some_and(|t| is_constant_name(&t.text)) {
                return Value::Constant;
            }
            if toks.len() == 3 && toks[0].is_ident("this") {
                return self.lookup(&toks[2].text, depth, visiting);
            }
        }
        Value::Unknown
    }

    fn eval_initializer(&self, inner: Range<usize>, depth: usize, visiting: &mut HashSet<String>) -> Value {
        if inner.is_empty() {
            return Value::LiteralBytes { len: 0, zero: true };
        }
        let elems = scan::split_args(self.tokens, inner.start - 1, inner.end);
        let mut zero = true;
        for e in &elems {
            match self.eval(e.clone(), depth + 1, visiting) {
                Value::Int(v) => zero &= v == 0,
                _ => return Value::Unknown,
            }
        }
        Value::LiteralBytes {
            len: elems.len(),
            zero,
        }
    }

    fn eval_new(&self, n: &NewExpr, depth: usize, visiting: &mut HashSet<String>) -> Value {
        if let Some(arr) = &n.array {
            if let Some(init) = &arr.initializer {
                return self.eval_initializer(init.clone(), depth, visiting);
            }
            let len = arr.dims.first().and_then(|d| match self.eval(d.clone(), depth + 1, visiting) {
                Value::Int(v) => usize::try_from(v).ok(),
                _ => None,
            });
            return Value::ZeroBytes { len };
        }
        let arg = |i: usize| n.args.get(i).cloned();
        let pick = match type_name_of(&n.type_path) {
            "SecretKeySpec" | "DESKeySpec" | "DESedeKeySpec" | "KeyParameter" | "IvParameterSpec"
            | "String" | "BigInteger" => arg(0),
            "GCMParameterSpec" | "ParametersWithIV" => arg(1),
            "SecureRandom" | "Random" => return Value::Generated,
            _ => None,
        };
        pick.map_or(Value::Unknown, |a| self.eval(a, depth + 1, visiting))
    }

    fn eval_call(&self, call: &CallSite, start: usize, depth: usize, visiting: &mut HashSet<String>) -> Value {
        let receiver = |visiting: &mut HashSet<String>| {
            if call.name_idx >= start + 2 && self.tokens[call.name_idx - 1].is_punct(".") {
                self.eval(start..call.name_idx - 1, depth + 1, visiting)
            } else {
                Value::Unknown
            }
        };
        let first_arg = |visiting: &mut HashSet<String>| {
            call.args
                .first()
                .map_or(Value::Unknown, |a| self.eval(a.clone(), depth + 1, visiting))
        };
        match call.method.as_str() {
            "getBytes" => match receiver(visiting) {
                Value::Str(s) => Value::BytesOfLiteral { len: s.len() },
                v if v.literal_derived() => Value::BytesOfLiteral {
                    len: v.byte_len().unwrap_or(0),
                },
                _ => Value::Unknown,
            },
            "toCharArray" | "trim" | "clone" | "getEncoded" => receiver(visiting),
            "generateKey" | "generateKeyPair" | "getIV" | "getParameters" | "getPrivate"
            | "getPublic" => Value::Generated,
            "generateSeed" => Value::Random {
                len: match first_arg(visiting) {
                    Value::Int(v) => usize::try_from(v).ok(),
                    _ => None,
                },
            },
            "generateSecret" | "generateDerivedParameters" => Value::Kdf,
            "copyOf" | "copyOfRange" => first_arg(visiting),
            "digest" => {
                let mut lit = call
                    .args
                    .iter()
                    .any(|a| self.eval(a.clone(), depth + 1, visiting).literal_derived());
                if let Some(var) = self.receiver_var(call) {
                    lit |= self.calls.iter().any(|c| {
                        c.method == "update"
                            && self.receiver_var(c) == Some(var)
                            && c.args.first().is_some_and(|a| {
                                self.eval(a.clone(), depth + 1, &mut visiting.clone()).literal_derived()
                            })
                    });
                }
                if lit {
                    Value::DigestOfLiteral
                } else {
                    Value::Unknown
                }
            }
            _ => {
                if call.args.is_empty() {
                    return Value::Unknown;
                }
                let vals: Vec<Value> = call
                    .args
                    .iter()
                    .map(|a| self.eval(a.clone(), depth + 1, visiting))
                    .collect();
                let carries_literal = vals.iter().any(|v| {
                    matches!(v, Value::Str(_) | Value::LiteralBytes { .. } | Value::BytesOfLiteral { .. })
                });
                if carries_literal
                    && vals
                        .iter()
                        .all(|v| v.literal_derived() || matches!(v, Value::Constant))
                {
                    Value::Static
                } else {
                    Value::Unknown
                }
            }
        }
    }

    fn filled_by_random(&self, var: &str) -> bool {
        self.calls.iter().any(|c| {
            c.method == "nextBytes"
                && c.args.first().is_some_and(|a| {
                    let a = self.strip(a.clone());
                    a.len() == 1 && self.tokens[a.start].is_ident(var)
                })
        })
    }

    fn lookup(&self, var: &str, depth: usize, visiting: &mut HashSet<String>) -> Value {
        if !visiting.insert(var.to_string()) {
            return Value::Unknown;
        }
        let bound: Vec<Value> = self
            .bindings
            .get(var)
            .into_iter()
            .flatten()
            .map(|r| self.eval(r.clone(), depth + 1, visiting))
            .collect();
        visiting.remove(var);
        if self.filled_by_random(var) {
            let len = bound.iter().find_map(|v| match v {
                Value::ZeroBytes { len } => *len,
                _ => None,
            });
            return Value::Random { len };
        }
        bound
            .into_iter()
            .find(|v| *v != Value::Unknown)
            .unwrap_or(Value::Unknown)
    }

    fn eval_top(&self, r: &Range<usize>) -> Value {
        self.eval(r.clone(), 0, &mut HashSet::new())
    }

    fn string_arg(&self, r: &Range<usize>) -> Option<String> {
        match self.eval_top(r) {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// All string literals inside an argument, following a bare variable to
    /// its bindings.
    fn string_list(&self, r: &Range<usize>) -> Vec<String> {
        let r = self.strip(r.clone());
        let mut ranges = vec![r.clone()];
        if r.len() == 1 && self.tokens[r.start].kind == TokenKind::Ident {
            ranges.extend(self.bindings.get(&self.tokens[r.start].text).into_iter().flatten().cloned());
        }
        ranges
            .into_iter()
            .flat_map(|r| self.tokens[r].iter())
            .filter(|t| t.kind == TokenKind::Str)
            .map(|t| t.text.clone())
            .collect()
    }

    fn int_arg(&self, r: &Range<usize>) -> Option<i128> {
        match self.eval_top(r) {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    fn var_is_referenced(&self, var: &str) -> bool {
        let binding_starts: HashSet<usize> = self
            .bindings
            .get(var)
            .into_iter()
            .flatten()
            .map(|r| r.start - 2)
            .collect();
        self.tokens.iter().enumerate().any(|(i, t)| {
            t.is_ident(var)
                && !binding_starts.contains(&i)
                && !(i >= 1 && self.tokens[i - 1].is_punct("."))
        })
    }
}

fn key_material(v: &Value) -> Option<Material> {
    match v {
        Value::Generated | Value::Random { .. } | Value::Kdf => Some(Material::ProviderGenerated),
        Value::LiteralBytes { .. } | Value::ZeroBytes { .. } | Value::Str(_) | Value::Static | Value::Int(_) => {
            Some(Material::Static)
        }
        Value::BytesOfLiteral { .. } | Value::DigestOfLiteral => Some(Material::BadDerivation),
        Value::Constant | Value::Unknown => None,
    }
}

fn iv_material(v: &Value) -> Option<Material> {
    match v {
        Value::Generated | Value::Random { .. } => Some(Material::ProviderGenerated),
        Value::ZeroBytes { .. } | Value::LiteralBytes { zero: true, .. } => Some(Material::Zeroed),
        Value::LiteralBytes { .. } | Value::Str(_) | Value::Static | Value::Int(_) => Some(Material::Static),
        Value::BytesOfLiteral { .. } | Value::DigestOfLiteral | Value::Kdf => Some(Material::BadDerivation),
        Value::Constant | Value::Unknown => None,
    }
}

fn salt_material(v: &Value) -> Option<Material> {
    match v {
        Value::Generated | Value::Random { .. } => Some(Material::ProviderGenerated),
        v if v.literal_derived() => Some(Material::Static),
        _ => None,
    }
}

fn is_key_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.contains("key") && !lower.contains("keystore") && !lower.contains("keygen")
}

fn is_iv_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower == "iv"
        || lower.starts_with("iv")
            && name.get(2..).is_some_and(|r| r.starts_with(|c: char| c.is_ascii_uppercase() || c == '_'))
        || name.ends_with("Iv")
        || name.ends_with("IV")
        || lower.ends_with("_iv")
}

fn curve_bits(name: &str) -> Option<u64> {
    let mut best = None;
    let mut cur = String::new();
    for c in name.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() {
            cur.push(c);
        } else {
            if cur.len() >= 3 && best.is_none() {
                best = cur.parse().ok();
            }
            cur.clear();
        }
    }
    best
}

fn is_logging_call(call: &CallSite) -> bool {
    LOGGING_METHODS.contains(&call.method.as_str())
        || matches!(&call.receiver, Receiver::Chain(segs) if segs.first().is_some_and(|s| s == "Log" || s == "System" || s == "Logger" || s == "logger"))
}

impl SnippetFacts {
    pub fn from_code(code: &str, resolved: impl IntoIterator<Item = String>) -> Self {
        let tokens = lex(code).tokens;
        let mut facts = SnippetFacts {
            resolved: resolved.into_iter().collect(),
            ..Default::default()
        };
        let ex = Extractor::new(&tokens);
        facts.collect_crypto(&ex);
        facts.collect_tls(&ex);
        facts.collect_rng(&ex);
        facts.collect_context(&ex);
        facts.tokens = tokens;
        facts
    }

    fn collect_crypto(&mut self, ex: &Extractor<'_>) {
        for call in ex.static_calls("Cipher", "getInstance") {
            if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                let t = Transformation::parse(&s);
                if t.algorithm.starts_with("PBE") {
                    self.digests.push((DigestPurpose::Pbkdf, digest_strength(&t.algorithm)));
                }
                if t.padding.as_deref().is_some_and(|p| p.contains("PKCS8")) {
                    self.pkcs8 = true;
                }
                self.transformations.push(t);
            }
        }
        for call in ex.static_calls("SecretKeyFactory", "getInstance") {
            if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                let up = s.to_ascii_uppercase();
                if up.starts_with("PBE") || up.starts_with("PBKDF") {
                    self.digests.push((DigestPurpose::Pbkdf, digest_strength(&s)));
                }
            }
        }
        for n in ex.news_of("PKCS5S2ParametersGenerator") {
            let strength = n
                .args
                .first()
                .and_then(|a| ex.news.iter().find(|m| m.type_idx == a.start + 1))
                .map_or(DigestStrength::Sha1, |m| digest_strength(type_name_of(&m.type_path)));
            self.digests.push((DigestPurpose::Pbkdf, strength));
        }
        for call in ex.static_calls("Signature", "getInstance") {
            if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                let up = s.to_ascii_uppercase();
                let digest = up.split("WITH").next().unwrap_or(&up);
                self.digests.push((DigestPurpose::Signature, digest_strength(digest)));
            }
        }
        for call in ex.static_calls("MessageDigest", "getInstance") {
            if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                self.digests.push((DigestPurpose::Plain, digest_strength(&s)));
            }
        }
        if ex.news_of("PKCS8EncodedKeySpec").next().is_some() {
            self.pkcs8 = true;
        }

        // Key and IV material.
        let mut key_args: Vec<String> = Vec::new();
        for ty in ["SecretKeySpec", "DESKeySpec", "DESedeKeySpec", "KeyParameter"] {
            for n in ex.news_of(ty) {
                if let Some(a) = n.args.first() {
                    key_args.push(ex.text(&ex.strip(a.clone())));
                    if let Some(m) = key_material(&ex.eval_top(a)) {
                        self.keys.push(m);
                    }
                }
            }
        }
        if ex.calls.iter().any(|c| c.method == "generateKey") {
            self.keys.push(Material::ProviderGenerated);
        }
        for (ty, idx) in [("IvParameterSpec", 0), ("GCMParameterSpec", 1), ("ParametersWithIV", 1)] {
            for n in ex.news_of(ty) {
                let Some(a) = n.args.get(idx) else { continue };
                let text = ex.text(&ex.strip(a.clone()));
                let from_key = key_args.contains(&text)
                    || text.contains("getEncoded")
                    || (a.len() == 1
                        && ex.bindings.get(&ex.tokens[a.start].text).is_some_and(|bs| {
                            bs.iter().any(|b| key_args.contains(&ex.text(b)))
                        }));
                let m = if from_key {
                    Some(Material::BadDerivation)
                } else {
                    iv_material(&ex.eval_top(a))
                };
                if let Some(m) = m {
                    self.ivs.push(m);
                }
            }
        }
        if ex.calls.iter().any(|c| c.method == "getIV") {
            self.ivs.push(Material::ProviderGenerated);
        }
        // Dangling key/IV literals that are declared but never passed anywhere.
        let mut names: Vec<&String> = ex.bindings.keys().collect();
        names.sort();
        for name in names {
            if ex.var_is_referenced(name) {
                continue;
            }
            let v = ex.lookup(name, 0, &mut HashSet::new());
            let bytes_like = matches!(
                v,
                Value::LiteralBytes { .. } | Value::ZeroBytes { .. } | Value::BytesOfLiteral { .. }
            );
            if is_iv_name(name) && (bytes_like || matches!(v, Value::Str(_))) {
                if let Some(m) = iv_material(&v) {
                    self.ivs.push(m);
                }
            } else if is_key_name(name) && bytes_like {
                if let Some(m) = key_material(&v) {
                    self.keys.push(m);
                }
            }
        }

        // Password-based encryption parameters.
        let pbe_sites = ex
            .news_of("PBEKeySpec")
            .map(|n| (n.args.get(1).cloned(), n.args.get(2).cloned()))
            .chain(ex.news_of("PBEParameterSpec").map(|n| (n.args.first().cloned(), n.args.get(1).cloned())))
            .chain(
                ex.calls
                    .iter()
                    .filter(|c| c.method == "init" && c.args.len() == 3)
                    .filter(|c| {
                        ex.receiver_var(c)
                            .and_then(|v| ex.types.get(v))
                            .is_some_and(|t| t.ends_with("ParametersGenerator"))
                    })
                    .map(|c| (c.args.get(1).cloned(), c.args.get(2).cloned())),
            )
            .collect::<Vec<_>>();
        for (salt, iterations) in pbe_sites {
            let salt_value = salt.as_ref().map(|s| ex.eval_top(s));
            self.pbe.push(PbeUse {
                salt: salt_value.as_ref().and_then(salt_material),
                salt_bits: salt_value.as_ref().and_then(Value::byte_len).map(|n| n * 8),
                iterations: iterations.as_ref().and_then(|r| ex.int_arg(r)),
            });
        }

        // Asymmetric key sizes.
        let mut generators: HashMap<&str, String> = HashMap::new();
        for (var, ranges) in &ex.bindings {
            for r in ranges {
                let toks = &ex.tokens[r.clone()];
                if toks.len() >= 4 && toks[0].is_ident("KeyPairGenerator") && toks[2].is_ident("getInstance") {
                    if let Some(call) = ex.calls.iter().find(|c| c.name_idx == r.start + 2) {
                        if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                            generators.insert(var.as_str(), s.to_ascii_uppercase());
                        }
                    }
                }
            }
        }
        for call in ex.calls.iter().filter(|c| c.method == "initialize") {
            let Some(alg) = ex.receiver_var(call).and_then(|v| generators.get(v)) else {
                continue;
            };
            let Some(bits) = call.args.first().and_then(|a| ex.int_arg(a)) else {
                continue;
            };
            let Ok(bits) = u64::try_from(bits) else { continue };
            if alg.contains("RSA") {
                self.key_sizes.push((KeyPairAlgorithm::Rsa, bits));
            } else if alg.starts_with("EC") {
                self.key_sizes.push((KeyPairAlgorithm::Ec, bits));
            }
        }
        for n in ex.news_of("RSAKeyGenParameterSpec") {
            if let Some(bits) = n.args.first().and_then(|a| ex.int_arg(a)).and_then(|b| u64::try_from(b).ok()) {
                self.key_sizes.push((KeyPairAlgorithm::Rsa, bits));
            }
        }
        for n in ex.news_of("ECGenParameterSpec") {
            if let Some(bits) = n.args.first().and_then(|a| ex.string_arg(a)).and_then(|s| curve_bits(&s)) {
                self.key_sizes.push((KeyPairAlgorithm::Ec, bits));
            }
        }

        self.credential_context = ex.tokens.iter().any(|t| {
            let lower = t.text.to_ascii_lowercase();
            matches!(t.kind, TokenKind::Ident | TokenKind::Str)
                && CREDENTIAL_WORDS.iter().any(|w| lower.contains(w))
        });
    }

    fn collect_tls(&mut self, ex: &Extractor<'_>) {
        let toks = ex.tokens;
        for call in ex.static_calls("SSLContext", "getInstance") {
            if let Some(s) = call.args.first().and_then(|a| ex.string_arg(a)) {
                self.tls_versions.push(s);
            }
        }
        for call in ex.calls.iter().filter(|c| c.method == "setEnabledProtocols") {
            if let Some(a) = call.args.first() {
                self.tls_versions.extend(ex.string_list(a));
            }
        }
        let mut suites: BTreeSet<String> = BTreeSet::new();
        for call in ex.calls.iter().filter(|c| c.method == "setEnabledCipherSuites") {
            if let Some(a) = call.args.first() {
                suites.extend(ex.string_list(a));
            }
        }
        suites.extend(
            toks.iter()
                .filter(|t| t.kind == TokenKind::Str && (t.text.starts_with("TLS_") || t.text.starts_with("SSL_")))
                .map(|t| t.text.clone()),
        );
        self.cipher_suites = suites.into_iter().collect();

        // Hostname verifiers by reference.
        for t in toks.iter().filter(|t| t.kind == TokenKind::Ident) {
            match t.text.as_str() {
                "AllowAllHostnameVerifier" | "NoopHostnameVerifier" | "ALLOW_ALL_HOSTNAME_VERIFIER" | "ALLOW_ALL" => {
                    self.verifiers.insert(VerifierKind::AllowAll);
                }
                "BrowserCompatHostnameVerifier" | "BROWSER_COMPATIBLE_HOSTNAME_VERIFIER" => {
                    self.verifiers.insert(VerifierKind::BrowserCompatible);
                }
                "StrictHostnameVerifier" | "STRICT_HOSTNAME_VERIFIER" => {
                    self.verifiers.insert(VerifierKind::Strict);
                }
                _ => {}
            }
        }
        // `(h, s) -> true` handed to a verifier setter.
        for call in ex.calls.iter().filter(|c| c.method.ends_with("HostnameVerifier")) {
            for a in &call.args {
                let arg = &toks[a.clone()];
                if arg.len() >= 2 && arg[arg.len() - 2].is_punct("->") && arg[arg.len() - 1].is_ident("true") {
                    self.verifiers.insert(VerifierKind::AllowAll);
                }
            }
        }

        let decls = scan::method_decls(toks);
        for d in &decls {
            let body = &toks[d.body.clone()];
            let body_calls: Vec<&CallSite> = ex
                .calls
                .iter()
                .filter(|c| d.body.contains(&c.name_idx))
                .collect();
            match d.name.as_str() {
                "verify" if d.param_count(toks) == 2 => {
                    let returns: Vec<&Token> = body
                        .windows(2)
                        .filter(|w| w[0].is_ident("return"))
                        .map(|w| &w[1])
                        .collect();
                    let throws = body.iter().any(|t| t.is_ident("throw"));
                    if !returns.is_empty() && returns.iter().all(|t| t.is_ident("true")) && !throws {
                        self.verifiers.insert(VerifierKind::AllowAll);
                    }
                }
                "checkServerTrusted" => {
                    if let Some(kind) = classify_trust_manager(body, &body_calls) {
                        self.trust_managers.insert(kind);
                    }
                }
                "onReceivedSslError" => {
                    self.ssl_error_proceed |= body_calls.iter().any(|c| c.method == "proceed");
                    self.ssl_error_cancel |= body_calls.iter().any(|c| c.method == "cancel");
                }
                _ => {}
            }
        }
        // Bare handler calls outside a declared callback.
        for call in &ex.calls {
            let Some(var) = ex.receiver_var(call) else { continue };
            let handler = ex.types.get(var).is_some_and(|t| t == "SslErrorHandler");
            if !handler {
                continue;
            }
            match call.method.as_str() {
                "proceed" => self.ssl_error_proceed = true,
                "cancel" => self.ssl_error_cancel = true,
                _ => {}
            }
        }
        if ex.static_calls("TrustManagerFactory", "getInstance").next().is_some()
            || ex.calls.iter().any(|c| c.method == "getTrustManagers")
        {
            self.trust_managers.insert(TrustManagerKind::Default);
        }
    }

    fn collect_rng(&mut self, ex: &Extractor<'_>) {
        let toks = ex.tokens;
        let mut receivers: Vec<String> = ex
            .types
            .iter()
            .filter(|(_, t)| t.as_str() == "SecureRandom")
            .map(|(v, _)| v.clone())
            .collect();
        for (var, ranges) in &ex.bindings {
            let creates = ranges.iter().any(|r| {
                let t = &toks[r.clone()];
                (t.len() >= 2 && t[0].is_ident("new") && t[1].is_ident("SecureRandom"))
                    || (t.len() >= 3 && t[0].is_ident("SecureRandom") && t[2].is_ident("getInstance"))
            });
            if creates && !receivers.contains(var) {
                receivers.push(var.clone());
            }
        }
        receivers.sort();
        self.secure_random = !receivers.is_empty()
            || ex.news_of("SecureRandom").next().is_some()
            || ex.static_calls("SecureRandom", "getInstance").next().is_some();

        for var in &receivers {
            let mut events: Vec<(usize, SeedEvent)> = Vec::new();
            for call in &ex.calls {
                if ex.receiver_var(call) != Some(var.as_str()) {
                    continue;
                }
                match call.method.as_str() {
                    "nextBytes" => events.push((call.name_idx, SeedEvent::NextBytes)),
                    "setSeed" => {
                        let literal = call.args.first().is_some_and(|a| ex.eval_top(a).literal_derived());
                        events.push((call.name_idx, SeedEvent::SetSeed { literal }));
                    }
                    _ => {}
                }
            }
            // `new SecureRandom(seed)` seeds before any output.
            for r in ex.bindings.get(var).into_iter().flatten() {
                if let Some(n) = ex.news.iter().find(|n| n.type_idx == r.start + 1 && type_name_of(&n.type_path) == "SecureRandom") {
                    if let Some(a) = n.args.first() {
                        let literal = ex.eval_top(a).literal_derived();
                        events.push((r.start, SeedEvent::SetSeed { literal }));
                    }
                }
            }
            events.sort_by_key(|(i, _)| *i);
            if !events.is_empty() {
                self.seeding.push(events.into_iter().map(|(_, e)| e).collect());
            }
        }

        let plain_random: Vec<String> = ex
            .bindings
            .iter()
            .filter(|(_, rs)| {
                rs.iter().any(|r| {
                    let t = &toks[r.clone()];
                    t.len() >= 2 && t[0].is_ident("new") && t[1].is_ident("Random")
                })
            })
            .map(|(v, _)| v.clone())
            .collect();
        let creates_random = ex.news_of("Random").next().is_some();
        let random_bytes = ex
            .calls
            .iter()
            .any(|c| c.method == "nextBytes" && ex.receiver_var(c).is_some_and(|v| plain_random.iter().any(|p| p == v)));
        let crypto_sites = !self.keys.is_empty() || !self.ivs.is_empty() || !self.pbe.is_empty();
        self.insecure_random = creates_random && (random_bytes || crypto_sites);
    }

    fn collect_context(&mut self, ex: &Extractor<'_>) {
        self.client_server_hint = ex.tokens.iter().any(|t| match t.kind {
            TokenKind::Ident => CLIENT_SERVER_WORDS.contains(&t.text.as_str()),
            TokenKind::Str => t.text.starts_with("https://") || t.text.starts_with("http://"),
            _ => false,
        }) || !self.tls_versions.is_empty();
    }

    pub fn seeding_has(&self, pred: impl Fn(&[SeedEvent]) -> bool) -> bool {
        self.seeding.iter().any(|s| pred(s))
    }
}

fn classify_trust_manager(body: &[Token], calls: &[&CallSite]) -> Option<TrustManagerKind> {
    let names: BTreeSet<&str> = calls.iter().map(|c| c.method.as_str()).collect();
    let throws = body.iter().any(|t| t.is_ident("throw"));
    if names.contains("checkServerTrusted") {
        return Some(TrustManagerKind::Default);
    }
    let weak_ids = [
        "getSerialNumber",
        "getIssuerDN",
        "getSubjectDN",
        "getIssuerX500Principal",
        "getSubjectX500Principal",
    ];
    if weak_ids.iter().any(|n| names.contains(n)) {
        return Some(TrustManagerKind::BadPinning);
    }
    if names.contains("getPublicKey") || names.contains("getEncoded") {
        return Some(if throws {
            TrustManagerKind::SecurePinning
        } else {
            TrustManagerKind::TrustAll
        });
    }
    let non_logging: Vec<&&CallSite> = calls.iter().filter(|c| !is_logging_call(c)).collect();
    if names.contains("checkValidity") && non_logging.iter().all(|c| c.method == "checkValidity") {
        return Some(TrustManagerKind::ValidityOnly);
    }
    if !throws && non_logging.is_empty() {
        return Some(TrustManagerKind::TrustAll);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facts(code: &str) -> SnippetFacts {
        SnippetFacts::from_code(code, Vec::new())
    }

    #[test]
    fn transformation_parsing() {
        let t = Transformation::parse("AES/cbc/PKCS5Padding");
        assert_eq!(t.algorithm, "AES");
        assert_eq!(t.mode.as_deref(), Some("CBC"));
        assert_eq!(t.padding.as_deref(), Some("PKCS5PADDING"));
        assert_eq!(Transformation::parse("AES").mode, None);
    }

    #[test]
    fn static_key_from_literal_array() {
        let f = facts("byte[] k = {1, 2, 3}; SecretKeySpec s = new SecretKeySpec(k, \"AES\");");
        assert_eq!(f.keys, vec![Material::Static]);
    }

    #[test]
    fn key_from_string_bytes_is_bad_derivation() {
        let f = facts("SecretKeySpec s = new SecretKeySpec(\"MyDifficultPassw\".getBytes(\"UTF-8\"), \"AES\");");
        assert_eq!(f.keys, vec![Material::BadDerivation]);
    }

    #[test]
    fn random_iv_is_provider_generated() {
        let f = facts("byte[] iv = new byte[16]; SecureRandom r = new SecureRandom(); r.nextBytes(iv); IvParameterSpec p = new IvParameterSpec(iv);");
        assert_eq!(f.ivs, vec![Material::ProviderGenerated]);
        assert_eq!(f.seeding, vec![vec![SeedEvent::NextBytes]]);
    }

    #[test]
    fn unfilled_iv_is_zeroed() {
        let f = facts("IvParameterSpec p = new IvParameterSpec(new byte[16]);");
        assert_eq!(f.ivs, vec![Material::Zeroed]);
    }

    #[test]
    fn iv_from_key_bytes() {
        let f = facts("byte[] kb = getKey(); SecretKeySpec k = new SecretKeySpec(kb, \"AES\"); IvParameterSpec iv = new IvParameterSpec(kb);");
        assert!(f.ivs.contains(&Material::BadDerivation));
    }

    #[test]
    fn pbe_parameters() {
        let f = facts("byte[] salt = new byte[8]; new SecureRandom().nextBytes(salt); PBEKeySpec spec = new PBEKeySpec(pw, salt, 1000, 256);");
        assert_eq!(
            f.pbe,
            vec![PbeUse {
                salt: Some(Material::ProviderGenerated),
                salt_bits: Some(64),
                iterations: Some(1000)
            }]
        );
    }

    #[test]
    fn rsa_key_size() {
        let f = facts("KeyPairGenerator kpg = KeyPairGenerator.getInstance(\"RSA\"); kpg.initialize(1024);");
        assert_eq!(f.key_sizes, vec![(KeyPairAlgorithm::Rsa, 1024)]);
        let f = facts("ECGenParameterSpec s = new ECGenParameterSpec(\"secp192r1\");");
        assert_eq!(f.key_sizes, vec![(KeyPairAlgorithm::Ec, 192)]);
    }

    #[test]
    fn trust_manager_shapes() {
        let empty = facts("public void checkServerTrusted(X509Certificate[] c, String a) throws CertificateException { }");
        assert!(empty.trust_managers.contains(&TrustManagerKind::TrustAll));
        let validity = facts("public void checkServerTrusted(X509Certificate[] c, String a) throws CertificateException { for (X509Certificate x : c) { x.checkValidity(); } }");
        assert!(validity.trust_managers.contains(&TrustManagerKind::ValidityOnly));
        let serial = facts("public void checkServerTrusted(X509Certificate[] c, String a) throws CertificateException { if (!c[0].getSerialNumber().equals(PIN)) throw new CertificateException(); }");
        assert!(serial.trust_managers.contains(&TrustManagerKind::BadPinning));
    }

    #[test]
    fn seeding_order() {
        let f = facts("SecureRandom sr = new SecureRandom(); sr.nextBytes(b); sr.setSeed(s);");
        assert_eq!(f.seeding, vec![vec![SeedEvent::NextBytes, SeedEvent::SetSeed { literal: false }]]);
        let f = facts("byte[] keyStart = \"this is a key\".getBytes(); SecureRandom sr = SecureRandom.getInstance(\"SHA1PRNG\"); sr.setSeed(keyStart);");
        assert_eq!(f.seeding, vec![vec![SeedEvent::SetSeed { literal: true }]]);
        assert!(f.keys.is_empty());
    }

    #[test]
    fn digest_strengths() {
        assert_eq!(digest_strength("MD5"), DigestStrength::Weak);
        assert_eq!(digest_strength("SHA-256"), DigestStrength::Strong);
        assert_eq!(digest_strength("SHA-1"), DigestStrength::Sha1);
        assert_eq!(digest_strength("PBKDF2WithHmacSHA1"), DigestStrength::Sha1);
        assert_eq!(digest_strength("PBKDF2WithHmacSHA256"), DigestStrength::Strong);
    }

    #[test]
    fn curve_names() {
        assert_eq!(curve_bits("secp256r1"), Some(256));
        assert_eq!(curve_bits("prime192v1"), Some(192));
        assert_eq!(curve_bits("P-224"), Some(224));
    }
}
