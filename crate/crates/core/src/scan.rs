//! Structural queries over a token stream that does not need to parse:
//! bracket matching, call sites, `new` expressions and method declarations.

use std::ops::Range;

use crate::lexer::{is_keyword, Token, TokenKind};

const CONTROL_KEYWORDS: &[&str] = &[
    "if", "while", "for", "switch", "catch", "synchronized", "return", "new", "throw", "try",
    "do", "else", "case", "assert", "super", "this",
];

/// Index of the bracket closing the one at `open`, if balanced.
pub fn matching(tokens: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match tokens.get(open)?.text.as_str() {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        "{" => ("{", "}"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == o {
            depth += 1;
        } else if t.text == c {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Split `tokens[open+1..close]` on top-level commas.
pub fn split_args(tokens: &[Token], open: usize, close: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if close <= open + 1 {
        return out;
    }
    let mut depth = 0i32;
    let mut start = open + 1;
    for (i, t) in tokens.iter().enumerate().take(close).skip(open + 1) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                out.push(start..i);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(start..close);
    out
}

/// Dotted identifier chain ending at `end` (inclusive), e.g. `javax.crypto.Cipher`.
/// Returns the segments and the index of the first segment.
pub fn chain_ending_at(tokens: &[Token], end: usize) -> (Vec<String>, usize) {
    let mut segs = vec![tokens[end].text.clone()];
    let mut start = end;
    while start >= 2
        && tokens[start - 1].is_punct(".")
        && tokens[start - 2].kind == TokenKind::Ident
    {
        start -= 2;
        segs.push(tokens[start].text.clone());
    }
    segs.reverse();
    (segs, start)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Receiver {
    /// Unqualified call `m(...)`.
    Implicit,
    /// Dotted identifier chain before the method name (`sr`, `Cipher`,
    /// `javax.crypto.Cipher`, `this.tm`).
    Chain(Vec<String>),
    /// Result of another expression (`foo().m()`, `"s".getBytes()`).
    Expr(usize),
}

#[derive(Debug, Clone)]
pub struct CallSite {
    pub method: String,
    pub name_idx: usize,
    pub receiver: Receiver,
    pub open: usize,
    pub close: usize,
    pub args: Vec<Range<usize>>,
}

pub fn call_sites(tokens: &[Token]) -> Vec<CallSite> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Ident || is_keyword(&t.text) {
            continue;
        }
        if !tokens.get(i + 1).is_some_and(|n| n.is_punct("(")) {
            continue;
        }
        if is_method_decl_name(tokens, i) || preceded_by_new(tokens, i) {
            continue;
        }
        let Some(close) = matching(tokens, i + 1) else {
            continue;
        };
        let receiver = if i >= 1 && tokens[i - 1].is_punct(".") {
            if i >= 2 && tokens[i - 2].kind == TokenKind::Ident {
                let (segs, _) = chain_ending_at(tokens, i - 2);
                Receiver::Chain(segs)
            } else {
                Receiver::Expr(i - 2)
            }
        } else {
            // A preceding identifier or type means this is a declaration.
            if i >= 1
                && (tokens[i - 1].kind == TokenKind::Ident
                    && !CONTROL_KEYWORDS.contains(&tokens[i - 1].text.as_str())
                    || tokens[i - 1].is_punct(">")
                    || tokens[i - 1].is_punct("]"))
            {
                continue;
            }
            Receiver::Implicit
        };
        out.push(CallSite {
            method: t.text.clone(),
            name_idx: i,
            receiver,
            open: i + 1,
            close,
            args: split_args(tokens, i + 1, close),
        });
    }
    out
}

fn preceded_by_new(tokens: &[Token], i: usize) -> bool {
    let (_, start) = chain_ending_at(tokens, i);
    start >= 1 && tokens[start - 1].is_ident("new")
}

#[derive(Debug, Clone)]
pub struct NewExpr {
    /// Dotted type path as written.
    pub type_path: Vec<String>,
    pub type_idx: usize,
    pub args: Vec<Range<usize>>,
    /// Anonymous class body (exclusive of braces).
    pub anon_body: Option<Range<usize>>,
    /// `new T[...]` or `new T[] {...}` creation.
    pub array: Option<ArrayCreation>,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub struct ArrayCreation {
    pub dims: Vec<Range<usize>>,
    pub initializer: Option<Range<usize>>,
}

pub fn new_exprs(tokens: &[Token]) -> Vec<NewExpr> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        if !tokens[i].is_ident("new") {
            continue;
        }
        let mut j = i + 1;
        if tokens.get(j).is_none_or(|t| t.kind != TokenKind::Ident) {
            continue;
        }
        let type_idx = j;
        let mut type_path = vec![tokens[j].text.clone()];
        while tokens.get(j + 1).is_some_and(|t| t.is_punct("."))
            && tokens.get(j + 2).is_some_and(|t| t.kind == TokenKind::Ident)
        {
            j += 2;
            type_path.push(tokens[j].text.clone());
        }
        j += 1;
        if tokens.get(j).is_some_and(|t| t.is_punct("<")) {
            let mut depth = 0i32;
            while j < tokens.len() {
                match tokens[j].text.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    _ => {}
                }
                j += 1;
                if depth <= 0 {
                    break;
                }
            }
        }
        match tokens.get(j) {
            Some(t) if t.is_punct("(") => {
                let Some(close) = matching(tokens, j) else {
                    continue;
                };
                let args = split_args(tokens, j, close);
                let mut end = close;
                let anon_body = if tokens.get(close + 1).is_some_and(|t| t.is_punct("{")) {
                    matching(tokens, close + 1).map(|b| {
                        end = b;
                        close + 2..b
                    })
                } else {
                    None
                };
                out.push(NewExpr {
                    type_path,
                    type_idx,
                    args,
                    anon_body,
                    array: None,
                    end,
                });
            }
            Some(t) if t.is_punct("[") => {
                let mut dims = Vec::new();
                let mut k = j;
                while tokens.get(k).is_some_and(|t| t.is_punct("[")) {
                    let Some(c) = matching(tokens, k) else {
                        break;
                    };
                    if c > k + 1 {
                        dims.push(k + 1..c);
                    }
                    k = c + 1;
                }
                let mut end = k.saturating_sub(1);
                let initializer = if tokens.get(k).is_some_and(|t| t.is_punct("{")) {
                    matching(tokens, k).map(|c| {
                        end = c;
                        k + 1..c
                    })
                } else {
                    None
                };
                out.push(NewExpr {
                    type_path,
                    type_idx,
                    args: Vec::new(),
                    anon_body: None,
                    array: Some(ArrayCreation { dims, initializer }),
                    end,
                });
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub name: String,
    pub name_idx: usize,
    pub params: Range<usize>,
    pub body: Range<usize>,
}

impl MethodDecl {
    pub fn param_count(&self, tokens: &[Token]) -> usize {
        if self.params.is_empty() {
            0
        } else {
            split_args(tokens, self.params.start - 1, self.params.end).len()
        }
    }
}

/// `name ( ... ) [throws A, B] {` where `name` is not a call or `new` target.
fn is_method_decl_name(tokens: &[Token], i: usize) -> bool {
    method_decl_at(tokens, i).is_some()
}

fn method_decl_at(tokens: &[Token], i: usize) -> Option<MethodDecl> {
    let t = &tokens[i];
    if t.kind != TokenKind::Ident || is_keyword(&t.text) {
        return None;
    }
    if !tokens.get(i + 1)?.is_punct("(") {
        return None;
    }
    if i >= 1 && tokens[i - 1].is_punct(".") || preceded_by_new(tokens, i) {
        return None;
    }
    let close = matching(tokens, i + 1)?;
    let mut j = close + 1;
    if tokens.get(j).is_some_and(|t| t.is_ident("throws")) {
        j += 1;
        while let Some(t) = tokens.get(j) {
            if t.kind == TokenKind::Ident || t.is_punct(".") || t.is_punct(",") {
                j += 1;
            } else {
                break;
            }
        }
    }
    if !tokens.get(j)?.is_punct("{") {
        return None;
    }
    let body_end = matching(tokens, j)?;
    Some(MethodDecl {
        name: t.text.clone(),
        name_idx: i,
        params: i + 2..close,
        body: j + 1..body_end,
    })
}

pub fn method_decls(tokens: &[Token]) -> Vec<MethodDecl> {
    (0..tokens.len())
        .filter_map(|i| method_decl_at(tokens, i))
        .collect()
}

/// Method declarations whose name sits directly inside `body` (depth 0 of that
/// range), e.g. the members of an anonymous class body.
pub fn member_methods(tokens: &[Token], body: Range<usize>) -> Vec<MethodDecl> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    for i in body.clone() {
        let t = &tokens[i];
        if depth == 0 {
            if let Some(m) = method_decl_at(tokens, i) {
                if m.body.end <= body.end {
                    out.push(m);
                }
            }
        }
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "{" | "(" => depth += 1,
                "}" | ")" => depth -= 1,
                _ => {}
            }
        }
    }
    out
}
