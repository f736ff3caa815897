//! Tolerant tokenizer for Java-like source text.
//!
//! Forum snippets are frequently truncated or mixed with prose, so the lexer
//! never fails: malformed input (unterminated strings or comments) is lexed on
//! a best-effort basis and reported through [`Lexed::problems`].

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Identifier or punctuation text; the unescaped contents for string and
    /// char literals; the raw spelling for numbers.
    pub text: String,
    pub line: u32,
    pub offset: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_ident(&self, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == name
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::Int | TokenKind::Float | TokenKind::Str | TokenKind::Char
        )
    }

    /// Identifier that starts with an upper-case letter (type-name convention).
    pub fn is_type_like(&self) -> bool {
        self.kind == TokenKind::Ident
            && self.text.chars().next().is_some_and(|c| c.is_ascii_uppercase())
            && !is_keyword(&self.text)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Str => write!(f, "\"{}\"", self.text),
            TokenKind::Char => write!(f, "'{}'", self.text),
            _ => f.write_str(&self.text),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub problems: Vec<String>,
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

// Longest first so greedy matching works.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Replace `//` and `/* */` comments with whitespace, leaving string and char
/// literals untouched. Newlines inside block comments are preserved so line
/// numbers stay stable.
pub fn strip_comments(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '"' || c == '\'' {
            let end = skip_quoted(&chars, i);
            out.extend(&chars[i..end]);
            i = end;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            out.push(' ');
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            out.push(' ');
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                if chars[i] == '\n' {
                    out.push('\n');
                }
                i += 1;
            }
            i = (i + 2).min(chars.len());
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Index one past the closing quote (or end of line when unterminated).
fn skip_quoted(chars: &[char], start: usize) -> usize {
    let quote = chars[start];
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    chars.len()
}

fn unescape(body: &[char]) -> String {
    let mut out = String::with_capacity(body.len());
    let mut i = 0;
    while i < body.len() {
        let c = body[i];
        if c != '\\' || i + 1 >= body.len() {
            out.push(c);
            i += 1;
            continue;
        }
        let e = body[i + 1];
        i += 2;
        match e {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            's' => out.push(' '),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap_or(0);
                let mut n = 1;
                while n < 3 && i < body.len() && body[i].is_digit(8) {
                    v = v * 8 + body[i].to_digit(8).unwrap_or(0);
                    i += 1;
                    n += 1;
                }
                out.push(char::from_u32(v).unwrap_or('\u{fffd}'));
            }
            'u' => {
                while i < body.len() && body[i] == 'u' {
                    i += 1;
                }
                let hex: String = body[i..(i + 4).min(body.len())].iter().collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) if hex.len() == 4 => {
                        out.push(ch);
                        i += 4;
                    }
                    _ => out.push_str("\\u"),
                }
            }
            other => out.push(other),
        }
    }
    out
}

pub fn lex(src: &str) -> Lexed {
    let mut lexed = Lexed::default();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let plain: Vec<char> = chars.iter().map(|&(_, c)| c).collect();
    let mut line = 1u32;
    let mut i = 0;
    while i < plain.len() {
        let c = plain[i];
        let offset = chars[i].0;
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && plain.get(i + 1) == Some(&'/') {
            while i < plain.len() && plain[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && plain.get(i + 1) == Some(&'*') {
            let start_line = line;
            i += 2;
            while i < plain.len() && !(plain[i] == '*' && plain.get(i + 1) == Some(&'/')) {
                if plain[i] == '\n' {
                    line += 1;
                }
                i += 1;
            }
            if i >= plain.len() {
                lexed
                    .problems
                    .push(format!("line {start_line}: unterminated block comment"));
            }
            i = (i + 2).min(plain.len());
            continue;
        }
        let push = |lexed: &mut Lexed, kind, text: String| {
            lexed.tokens.push(Token {
                kind,
                text,
                line,
                offset,
            })
        };
        if c == '"' || c == '\'' {
            let end = skip_quoted(&plain, i);
            let closed = end > i + 1 && plain[end - 1] == c && end - 1 > i;
            let body_end = if closed { end - 1 } else { end };
            if !closed {
                lexed
                    .problems
                    .push(format!("line {line}: unterminated literal"));
            }
            let text = unescape(&plain[i + 1..body_end]);
            let kind = if c == '"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            };
            push(&mut lexed, kind, text);
            i = end;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && plain.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let (end, is_float) = scan_number(&plain, i);
            let text: String = plain[i..end].iter().collect();
            let kind = if is_float {
                TokenKind::Float
            } else {
                TokenKind::Int
            };
            push(&mut lexed, kind, text);
            i = end;
            continue;
        }
        if is_ident_start(c) {
            let mut end = i + 1;
            while end < plain.len() && is_ident_part(plain[end]) {
                end += 1;
            }
            push(&mut lexed, TokenKind::Ident, plain[i..end].iter().collect());
            i = end;
            continue;
        }
        let op = OPERATORS.iter().find(|op| {
            op.chars()
                .enumerate()
                .all(|(k, oc)| plain.get(i + k) == Some(&oc))
        });
        let text = match op {
            Some(op) => op.to_string(),
            None => c.to_string(),
        };
        i += text.chars().count();
        push(&mut lexed, TokenKind::Punct, text);
    }
    lexed
}

fn scan_number(s: &[char], start: usize) -> (usize, bool) {
    let mut i = start;
    let mut is_float = false;
    if s[i] == '0' && matches!(s.get(i + 1), Some('x' | 'X' | 'b' | 'B')) {
        i += 2;
        while i < s.len() && (s[i].is_ascii_hexdigit() || s[i] == '_') {
            i += 1;
        }
        if i < s.len() && matches!(s[i], 'l' | 'L') {
            i += 1;
        }
        return (i, false);
    }
    while i < s.len() && (s[i].is_ascii_digit() || s[i] == '_') {
        i += 1;
    }
    if i < s.len() && s[i] == '.' && s.get(i + 1).is_none_or(|d| d.is_ascii_digit()) {
        // `1.` followed by an identifier is a member access on an int, which
        // Java rejects anyway; treat `1.` as a float only if not `..`.
        if s.get(i + 1) != Some(&'.') {
            is_float = true;
            i += 1;
            while i < s.len() && (s[i].is_ascii_digit() || s[i] == '_') {
                i += 1;
            }
        }
    }
    if i < s.len() && matches!(s[i], 'e' | 'E') {
        let mut j = i + 1;
        if j < s.len() && matches!(s[j], '+' | '-') {
            j += 1;
        }
        if j < s.len() && s[j].is_ascii_digit() {
            is_float = true;
            i = j;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    if i < s.len() && matches!(s[i], 'f' | 'F' | 'd' | 'D') {
        is_float = true;
        i += 1;
    } else if i < s.len() && matches!(s[i], 'l' | 'L') {
        i += 1;
    }
    (i, is_float)
}

/// Canonical decimal text of an integer literal (`0x10L` -> `16`).
pub fn int_value(raw: &str) -> Option<i128> {
    let t: String = raw
        .chars()
        .filter(|&c| c != '_' && c != 'l' && c != 'L')
        .collect();
    let (digits, radix) = if let Some(h) = t.strip_prefix("0x").or(t.strip_prefix("0X")) {
        (h.to_string(), 16)
    } else if let Some(b) = t.strip_prefix("0b").or(t.strip_prefix("0B")) {
        (b.to_string(), 2)
    } else if t.len() > 1 && t.starts_with('0') {
        (t[1..].to_string(), 8)
    } else {
        (t, 10)
    };
    i128::from_str_radix(&digits, radix).ok()
}

pub fn float_value(raw: &str) -> Option<f64> {
    let t: String = raw
        .chars()
        .filter(|&c| c != '_' && !matches!(c, 'f' | 'F' | 'd' | 'D'))
        .collect();
    t.parse::<f64>().ok()
}

/// Normalized constant text for a literal token. Booleans and `null` are not
/// literals at the token level (they lex as identifiers) and yield `None`.
pub fn normalize_literal(tok: &Token) -> Option<String> {
    match tok.kind {
        TokenKind::Str | TokenKind::Char => Some(tok.text.clone()),
        TokenKind::Int => int_value(&tok.text).map(|v| v.to_string()),
        TokenKind::Float => float_value(&tok.text).map(|v| format!("{v:?}")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex(src).tokens.into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn lexes_call_with_string() {
        assert_eq!(
            texts("Cipher.getInstance(\"AES\");"),
            ["Cipher", ".", "getInstance", "(", "AES", ")", ";"]
        );
    }

    #[test]
    fn comments_are_dropped_but_urls_in_strings_survive() {
        let l = lex("// Cipher.getInstance\nString u = \"http://x\"; /* y */");
        let t: Vec<_> = l.tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(t, ["String", "u", "=", "http://x", ";"]);
        assert_eq!(l.tokens[0].line, 2);
    }

    #[test]
    fn strip_comments_keeps_lines() {
        let s = strip_comments("a /* x\ny */ b // c\nd \"//e\"");
        assert_eq!(s.lines().count(), 3);
        assert!(s.contains("\"//e\""));
        assert!(!s.contains('c'));
    }

    #[test]
    fn operators_are_greedy() {
        assert_eq!(texts("a >>>= b ... c"), ["a", ">>>=", "b", "...", "c"]);
    }

    #[test]
    fn numeric_literals_normalize() {
        let l = lex("0x0A 010 1_000L 2.50f 1e3 .5");
        let n: Vec<_> = l.tokens.iter().filter_map(normalize_literal).collect();
        assert_eq!(n, ["10", "8", "1000", "2.5", "1000.0", "0.5"]);
    }

    #[test]
    fn escapes_are_decoded() {
        let l = lex(r#""a\"b\n" 'A'"#);
        assert_eq!(l.tokens[0].text, "a\"b\n");
        assert_eq!(l.tokens[1].text, "A");
    }

    #[test]
    fn unterminated_string_is_tolerated() {
        let l = lex("String s = \"abc\nint x;");
        assert_eq!(l.problems.len(), 1);
        assert!(l.tokens.iter().any(|t| t.is_ident("int")));
    }
}
