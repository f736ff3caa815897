//! Recursive-descent parser for the Java subset in [`super::ast`].

use std::fmt;

use super::ast::*;
use crate::lexer::{int_value, normalize_literal, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// A construct outside the subset, such as lambdas.
    Unsupported(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

type PResult<T> = Result<T, ParseError>;

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "synchronized", "native",
    "transient", "volatile", "strictfp", "default",
];

const PRIMITIVES: &[&str] = &[
    "byte", "short", "char", "int", "long", "float", "double", "boolean", "void",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

fn binary_prec(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 3,
        "&&" => 4,
        "|" => 5,
        "^" => 6,
        "&" => 7,
        "==" | "!=" => 8,
        "<" | ">" | "<=" | ">=" | "instanceof" => 9,
        "<<" | ">>" | ">>>" => 10,
        "+" | "-" => 11,
        "*" | "/" | "%" => 12,
        _ => return None,
    })
}

#[derive(Clone, Copy)]
struct Pos {
    i: usize,
    /// `>` characters already consumed from a `>>` or `>>>` token.
    sub: usize,
}

pub struct Parser<'a> {
    toks: &'a [Token],
    pos: Pos,
}

pub fn parse_unit(tokens: &[Token]) -> PResult<Unit> {
    let mut p = Parser::new(tokens);
    p.unit()
}

impl<'a> Parser<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Parser {
            toks,
            pos: Pos { i: 0, sub: 0 },
        }
    }

    fn text_at(&self, i: usize) -> &str {
        match self.toks.get(i) {
            Some(t) if t.kind == TokenKind::Punct || t.kind == TokenKind::Ident => &t.text,
            _ => "",
        }
    }

    fn peek(&self) -> &str {
        let t = self.text_at(self.pos.i);
        &t[self.pos.sub.min(t.len())..]
    }

    fn peek_at(&self, k: usize) -> &str {
        if k == 0 {
            self.peek()
        } else {
            self.text_at(self.pos.i + k)
        }
    }

    fn tok(&self) -> Option<&Token> {
        self.toks.get(self.pos.i)
    }

    fn at_end(&self) -> bool {
        self.pos.i >= self.toks.len()
    }

    fn line(&self) -> u32 {
        self.toks
            .get(self.pos.i)
            .or(self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn is_ident_tok(&self) -> bool {
        self.tok().is_some_and(|t| t.kind == TokenKind::Ident)
    }

    fn advance(&mut self) {
        self.pos = Pos {
            i: self.pos.i + 1,
            sub: 0,
        };
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.pos.sub == 0 && self.peek() == s && self.tok().is_some_and(|t| t.kind != TokenKind::Str && t.kind != TokenKind::Char) {
            self.advance();
            true
        } else {
            false
        }
    }

    /// Consume one `>` even when it is glued into `>>` or `>>>`.
    fn eat_close_angle(&mut self) -> bool {
        let len = match self.text_at(self.pos.i) {
            ">" => 1,
            ">>" => 2,
            ">>>" => 3,
            _ => return false,
        };
        self.pos.sub += 1;
        if self.pos.sub >= len {
            self.advance();
        }
        true
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError {
            kind: ParseErrorKind::Syntax,
            line: self.line(),
            message: msg.into(),
        })
    }

    fn unsupported<T>(&self, what: &'static str) -> PResult<T> {
        Err(ParseError {
            kind: ParseErrorKind::Unsupported(what),
            line: self.line(),
            message: format!("{what} not supported"),
        })
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else if self.at_end() {
            self.err(format!("expected `{s}` at end of input"))
        } else {
            let found = self.tok().map(|t| t.to_string()).unwrap_or_default();
            self.err(format!("expected `{s}`, found `{found}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.tok() {
            Some(t) if t.kind == TokenKind::Ident && self.pos.sub == 0 => {
                let s = t.text.clone();
                self.advance();
                Ok(s)
            }
            Some(t) => {
                let s = t.to_string();
                self.err(format!("expected identifier, found `{s}`"))
            }
            None => self.err("expected identifier at end of input"),
        }
    }

    fn skip_annotations(&mut self) -> PResult<()> {
        while self.peek() == "@" && self.peek_at(1) != "interface" {
            self.advance();
            self.ident()?;
            while self.eat(".") {
                self.ident()?;
            }
            if self.peek() == "(" {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1;
        while depth > 0 {
            if self.at_end() {
                return self.err(format!("unbalanced `{open}`"));
            }
            if self.eat(open) {
                depth += 1;
            } else if self.eat(close) {
                depth -= 1;
            } else {
                self.advance();
            }
        }
        Ok(())
    }

    /// Modifiers and annotations; returns whether `static` was present.
    fn modifiers(&mut self) -> PResult<bool> {
        let mut is_static = false;
        loop {
            self.skip_annotations()?;
            let t = self.peek();
            // `default` opens a switch label inside statements but is a
            // modifier only before a declaration.
            if MODIFIERS.contains(&t) && !(t == "default" && self.peek_at(1) == ":") {
                is_static |= t == "static";
                self.advance();
            } else {
                return Ok(is_static);
            }
        }
    }

    fn type_args(&mut self) -> PResult<()> {
        if !self.eat("<") {
            return Ok(());
        }
        if self.eat_close_angle() {
            return Ok(());
        }
        loop {
            self.skip_annotations()?;
            if self.eat("?") {
                if self.eat("extends") || self.eat("super") {
                    self.type_name()?;
                }
            } else {
                self.type_name()?;
                while self.eat("&") {
                    self.type_name()?;
                }
            }
            if self.eat_close_angle() {
                return Ok(());
            }
            self.expect(",")?;
        }
    }

    fn type_params(&mut self) -> PResult<()> {
        if self.peek() != "<" {
            return Ok(());
        }
        self.advance();
        loop {
            self.skip_annotations()?;
            self.ident()?;
            if self.eat("extends") {
                self.type_name()?;
                while self.eat("&") {
                    self.type_name()?;
                }
            }
            if self.eat_close_angle() {
                return Ok(());
            }
            self.expect(",")?;
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let mut name = self.ident()?;
        self.type_args()?;
        while self.peek() == "." && self.toks.get(self.pos.i + 1).is_some_and(|t| t.kind == TokenKind::Ident) && self.peek_at(1) != "class" {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
            self.type_args()?;
        }
        let mut dims = 0;
        while self.peek() == "[" && self.peek_at(1) == "]" {
            self.advance();
            self.advance();
            dims += 1;
        }
        if self.eat("...") {
            dims += 1;
        }
        Ok(TypeName { name, dims })
    }

    fn dims(&mut self) -> usize {
        let mut d = 0;
        while self.peek() == "[" && self.peek_at(1) == "]" {
            self.advance();
            self.advance();
            d += 1;
        }
        d
    }

    pub fn unit(&mut self) -> PResult<Unit> {
        let mut unit = Unit::default();
        self.skip_annotations()?;
        if self.eat("package") {
            unit.package = Some(self.qualified()?);
            self.expect(";")?;
        }
        while self.eat("import") {
            self.eat("static");
            let mut name = self.qualified()?;
            if self.eat(".") {
                self.expect("*")?;
                name.push_str(".*");
            }
            self.expect(";")?;
            unit.imports.push(name);
        }
        while !self.at_end() {
            if self.eat(";") {
                continue;
            }
            self.modifiers()?;
            unit.classes.push(self.class_decl()?);
        }
        Ok(unit)
    }

    fn qualified(&mut self) -> PResult<String> {
        let mut s = self.ident()?;
        while self.peek() == "." && self.is_ident_at(1) {
            self.advance();
            s.push('.');
            s.push_str(&self.ident()?);
        }
        Ok(s)
    }

    fn is_ident_at(&self, k: usize) -> bool {
        self.toks
            .get(self.pos.i + k)
            .is_some_and(|t| t.kind == TokenKind::Ident)
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let is_enum = self.peek() == "enum";
        if self.peek() == "@" && self.peek_at(1) == "interface" {
            self.advance();
        }
        if !(self.eat("class") || self.eat("interface") || self.eat("enum")) {
            return self.err("expected class declaration");
        }
        let name = self.ident()?;
        self.type_params()?;
        let mut supertypes = Vec::new();
        loop {
            if self.eat("extends") || self.eat("implements") {
                supertypes.push(self.type_name()?);
                while self.eat(",") {
                    supertypes.push(self.type_name()?);
                }
            } else {
                break;
            }
        }
        let members = self.class_body(&name, is_enum)?;
        Ok(ClassDecl {
            name,
            supertypes,
            members,
        })
    }

    fn class_body(&mut self, class_name: &str, is_enum: bool) -> PResult<Vec<Member>> {
        self.expect("{")?;
        let mut members = Vec::new();
        if is_enum {
            self.enum_constants(class_name, &mut members)?;
        }
        while !self.eat("}") {
            if self.at_end() {
                return self.err("unterminated class body");
            }
            if self.eat(";") {
                continue;
            }
            if self.peek() == "{" {
                members.push(Member::Initializer(self.block()?));
                continue;
            }
            if self.peek() == "static" && self.peek_at(1) == "{" {
                self.advance();
                members.push(Member::Initializer(self.block()?));
                continue;
            }
            let is_static = self.modifiers()?;
            if matches!(self.peek(), "class" | "interface" | "enum")
                || (self.peek() == "@" && self.peek_at(1) == "interface")
            {
                members.push(Member::Class(self.class_decl()?));
                continue;
            }
            self.type_params()?;
            if self.peek() == class_name && self.peek_at(1) == "(" {
                self.advance();
                let params = self.params()?;
                let body = self.method_tail()?;
                members.push(Member::Method(MethodDecl {
                    name: "<init>".into(),
                    is_static: false,
                    params,
                    body,
                }));
                continue;
            }
            let ty = self.type_name()?;
            let name = self.ident()?;
            if self.peek() == "(" {
                let params = self.params()?;
                self.dims();
                let body = self.method_tail()?;
                members.push(Member::Method(MethodDecl {
                    name,
                    is_static,
                    params,
                    body,
                }));
            } else {
                let vars = self.declarators(ty.clone(), name)?;
                self.expect(";")?;
                members.push(Member::Field { is_static, ty, vars });
            }
        }
        Ok(members)
    }

    fn enum_constants(&mut self, class_name: &str, members: &mut Vec<Member>) -> PResult<()> {
        let mut vars = Vec::new();
        while self.is_ident_tok() && self.pos.sub == 0 {
            self.skip_annotations()?;
            let name = self.ident()?;
            if self.peek() == "(" {
                self.skip_balanced("(", ")")?;
            }
            if self.peek() == "{" {
                let body = self.class_body(&name, false)?;
                members.push(Member::Class(ClassDecl {
                    name: name.clone(),
                    supertypes: vec![],
                    members: body,
                }));
            }
            vars.push(VarDecl {
                name,
                ty: TypeName {
                    name: class_name.to_string(),
                    dims: 0,
                },
                init: None,
            });
            if !self.eat(",") {
                break;
            }
        }
        self.eat(";");
        if !vars.is_empty() {
            members.push(Member::Field {
                is_static: true,
                ty: TypeName {
                    name: class_name.to_string(),
                    dims: 0,
                },
                vars,
            });
        }
        Ok(())
    }

    fn params(&mut self) -> PResult<Vec<(TypeName, String)>> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            self.modifiers()?;
            let mut ty = self.type_name()?;
            let name = self.ident()?;
            ty.dims += self.dims();
            out.push((ty, name));
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn method_tail(&mut self) -> PResult<Option<Block>> {
        if self.eat("throws") {
            self.type_name()?;
            while self.eat(",") {
                self.type_name()?;
            }
        }
        if self.eat(";") {
            return Ok(None);
        }
        if self.eat("default") {
            self.expr()?;
            self.expect(";")?;
            return Ok(None);
        }
        Ok(Some(self.block()?))
    }

    fn declarators(&mut self, ty: TypeName, first: String) -> PResult<Vec<VarDecl>> {
        let mut vars = Vec::new();
        let mut name = first;
        loop {
            let mut vty = ty.clone();
            vty.dims += self.dims();
            let init = if self.eat("=") {
                Some(self.var_init()?)
            } else {
                None
            };
            vars.push(VarDecl {
                name,
                ty: vty,
                init,
            });
            if !self.eat(",") {
                return Ok(vars);
            }
            name = self.ident()?;
        }
    }

    fn var_init(&mut self) -> PResult<Init> {
        if self.peek() == "{" {
            Ok(Init::Array(self.array_init()?))
        } else {
            Ok(Init::Expr(self.expr()?))
        }
    }

    fn array_init(&mut self) -> PResult<Vec<Init>> {
        self.expect("{")?;
        let mut items = Vec::new();
        loop {
            if self.eat("}") {
                return Ok(items);
            }
            items.push(self.var_init()?);
            if !self.eat(",") {
                self.expect("}")?;
                return Ok(items);
            }
        }
    }

    pub fn block(&mut self) -> PResult<Block> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.eat("}") {
            if self.at_end() {
                return self.err("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let kw = self.peek().to_string();
        match kw.as_str() {
            "{" => return Ok(Stmt::Block(self.block()?)),
            ";" => {
                self.advance();
                return Ok(Stmt::Empty);
            }
            "if" => {
                self.advance();
                let c = self.paren_expr()?;
                let then = Box::new(self.stmt()?);
                let els = if self.eat("else") {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                return Ok(Stmt::If(c, then, els));
            }
            "while" => {
                self.advance();
                let c = self.paren_expr()?;
                return Ok(Stmt::While(c, Box::new(self.stmt()?)));
            }
            "do" => {
                self.advance();
                let body = Box::new(self.stmt()?);
                self.expect("while")?;
                let c = self.paren_expr()?;
                self.expect(";")?;
                return Ok(Stmt::DoWhile(body, c));
            }
            "for" => return self.for_stmt(),
            "try" => return self.try_stmt(),
            "switch" => return self.switch_stmt(),
            "synchronized" if self.peek_at(1) == "(" => {
                self.advance();
                let e = self.paren_expr()?;
                return Ok(Stmt::Sync(e, self.block()?));
            }
            "return" => {
                self.advance();
                if self.eat(";") {
                    return Ok(Stmt::Return(None));
                }
                let e = self.expr()?;
                self.expect(";")?;
                return Ok(Stmt::Return(Some(e)));
            }
            "throw" => {
                self.advance();
                let e = self.expr()?;
                self.expect(";")?;
                return Ok(Stmt::Throw(e));
            }
            "break" | "continue" => {
                self.advance();
                if self.is_ident_tok() {
                    self.advance();
                }
                self.expect(";")?;
                return Ok(Stmt::Jump);
            }
            "assert" => {
                self.advance();
                let c = self.expr()?;
                let msg = if self.eat(":") { Some(self.expr()?) } else { None };
                self.expect(";")?;
                return Ok(Stmt::Assert(c, msg));
            }
            "class" | "interface" | "enum" | "abstract" | "static" => {
                self.modifiers()?;
                return Ok(Stmt::Class(self.class_decl()?));
            }
            _ => {}
        }
        if self.is_ident_tok() && self.peek_at(1) == ":" && !crate::lexer::is_keyword(&kw) {
            self.advance();
            self.advance();
            return self.stmt();
        }
        if let Some(vars) = self.try_local_decl()? {
            self.expect(";")?;
            return Ok(Stmt::Local(vars));
        }
        if self.peek() == "final" || self.peek() == "@" {
            self.modifiers()?;
            if matches!(self.peek(), "class" | "interface" | "enum") {
                return Ok(Stmt::Class(self.class_decl()?));
            }
            return self.err("expected declaration after modifier");
        }
        let e = self.expr()?;
        self.expect(";")?;
        Ok(Stmt::Expr(e))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    /// Speculatively parse `[final] Type name ...`; rewinds on mismatch.
    fn try_local_decl(&mut self) -> PResult<Option<Vec<VarDecl>>> {
        let save = self.pos;
        let had_mods = matches!(self.peek(), "final" | "@");
        if self.modifiers().is_err() {
            self.pos = save;
            return Ok(None);
        }
        if matches!(self.peek(), "class" | "interface" | "enum") {
            self.pos = save;
            return Ok(None);
        }
        if !self.is_ident_tok() || crate::lexer::is_keyword(self.peek()) && !PRIMITIVES.contains(&self.peek()) {
            self.pos = save;
            return Ok(None);
        }
        let ty = match self.type_name() {
            Ok(t) => t,
            Err(e) => {
                if had_mods {
                    return Err(e);
                }
                self.pos = save;
                return Ok(None);
            }
        };
        let name_ok = self.is_ident_tok()
            && !crate::lexer::is_keyword(self.peek())
            && matches!(self.peek_at(1), "=" | ";" | "," | "[" | ":");
        if !name_ok {
            if had_mods {
                return self.err("malformed local declaration");
            }
            self.pos = save;
            return Ok(None);
        }
        let name = self.ident()?;
        Ok(Some(self.declarators(ty, name)?))
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        self.expect("for")?;
        self.expect("(")?;
        let save = self.pos;
        self.modifiers()?;
        if self.is_ident_tok() {
            if let Ok(ty) = self.type_name() {
                if self.is_ident_tok() && self.peek_at(1) == ":" {
                    let name = self.ident()?;
                    self.expect(":")?;
                    let iter = self.expr()?;
                    self.expect(")")?;
                    let body = Box::new(self.stmt()?);
                    return Ok(Stmt::ForEach {
                        var: VarDecl {
                            name,
                            ty,
                            init: None,
                        },
                        iter,
                        body,
                    });
                }
            }
        }
        self.pos = save;
        let mut init = Vec::new();
        if !self.eat(";") {
            if let Some(vars) = self.try_local_decl()? {
                init.push(Stmt::Local(vars));
            } else {
                init.push(Stmt::Expr(self.expr()?));
                while self.eat(",") {
                    init.push(Stmt::Expr(self.expr()?));
                }
            }
            self.expect(";")?;
        }
        let cond = if self.peek() == ";" {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect(";")?;
        let mut update = Vec::new();
        if self.peek() != ")" {
            update.push(self.expr()?);
            while self.eat(",") {
                update.push(self.expr()?);
            }
        }
        self.expect(")")?;
        let body = Box::new(self.stmt()?);
        Ok(Stmt::For {
            init,
            cond,
            update,
            body,
        })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        self.expect("try")?;
        let mut resources = Vec::new();
        if self.eat("(") {
            loop {
                if self.eat(")") {
                    break;
                }
                self.modifiers()?;
                let ty = self.type_name()?;
                let name = self.ident()?;
                self.expect("=")?;
                let init = Some(Init::Expr(self.expr()?));
                resources.push(VarDecl { name, ty, init });
                if !self.eat(";") {
                    self.expect(")")?;
                    break;
                }
            }
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat("catch") {
            self.expect("(")?;
            self.modifiers()?;
            let ty = self.type_name()?;
            while self.eat("|") {
                self.type_name()?;
            }
            let name = self.ident()?;
            self.expect(")")?;
            catches.push(Catch {
                ty,
                name,
                body: self.block()?,
            });
        }
        let finally = if self.eat("finally") {
            Some(self.block()?)
        } else {
            None
        };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return self.err("try without catch or finally");
        }
        Ok(Stmt::Try {
            resources,
            body,
            catches,
            finally,
        })
    }

    fn switch_stmt(&mut self) -> PResult<Stmt> {
        self.expect("switch")?;
        let scrutinee = self.paren_expr()?;
        self.expect("{")?;
        let mut groups: Vec<Block> = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            if self.eat("case") {
                self.expr()?;
                while self.eat(",") {
                    self.expr()?;
                }
            } else if self.eat("default") {
            } else if groups.is_empty() {
                return self.err("expected `case` in switch");
            } else {
                let stmt = self.stmt()?;
                groups.last_mut().expect("group").push(stmt);
                continue;
            }
            if self.eat("->") {
                let stmt = if self.peek() == "{" {
                    Stmt::Block(self.block()?)
                } else if matches!(self.peek(), "throw" | "return") {
                    self.stmt()?
                } else {
                    let e = self.expr()?;
                    self.expect(";")?;
                    Stmt::Expr(e)
                };
                groups.push(vec![stmt]);
            } else {
                self.expect(":")?;
                groups.push(Vec::new());
            }
        }
        Ok(Stmt::Switch(scrutinee, groups))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.ternary()?;
        let op = self.peek().to_string();
        if self.pos.sub == 0 && ASSIGN_OPS.contains(&op.as_str()) && self.tok().is_some_and(|t| t.kind == TokenKind::Punct) {
            self.advance();
            if !matches!(lhs, Expr::Name(_) | Expr::Field(..) | Expr::Index(..)) {
                return self.err("invalid assignment target");
            }
            let rhs = self.expr()?;
            return Ok(Expr::Assign(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let c = self.binary(3)?;
        if self.eat("?") {
            let a = self.ternary()?;
            self.expect(":")?;
            let b = self.ternary()?;
            return Ok(Expr::Cond(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.pos.sub != 0 || self.tok().is_some_and(|t| t.kind != TokenKind::Punct && t.kind != TokenKind::Ident) {
                return Ok(lhs);
            }
            let op = self.peek().to_string();
            let Some(prec) = binary_prec(&op) else {
                return Ok(lhs);
            };
            if prec < min {
                return Ok(lhs);
            }
            self.advance();
            if op == "instanceof" {
                self.eat("final");
                let ty = self.type_name()?;
                if self.is_ident_tok() && !crate::lexer::is_keyword(self.peek()) {
                    self.advance();
                }
                lhs = Expr::InstanceOf(Box::new(lhs), ty);
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek().to_string();
        let is_punct = self.tok().is_some_and(|t| t.kind == TokenKind::Punct);
        if is_punct {
            match t.as_str() {
                "-" | "+" => {
                    self.advance();
                    if t == "-" {
                        if let Some(lit) = self.negated_literal() {
                            return self.postfix(Expr::Lit(lit));
                        }
                    }
                    let e = self.unary()?;
                    return Ok(if t == "-" {
                        Expr::Unary(t, Box::new(e))
                    } else {
                        e
                    });
                }
                "!" | "~" => {
                    self.advance();
                    let e = self.unary()?;
                    return Ok(Expr::Unary(t, Box::new(e)));
                }
                "++" | "--" => {
                    self.advance();
                    let e = self.unary()?;
                    return Ok(Expr::Step(Box::new(e), t == "++"));
                }
                "(" => {
                    if let Some(cast) = self.try_cast()? {
                        return Ok(cast);
                    }
                }
                _ => {}
            }
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn negated_literal(&mut self) -> Option<Lit> {
        let tok = self.tok()?;
        let text = match tok.kind {
            TokenKind::Int => int_value(&tok.text).map(|v| (-v).to_string())?,
            TokenKind::Float => {
                let v = normalize_literal(tok)?;
                match v.strip_prefix('-') {
                    Some(rest) => rest.to_string(),
                    None => format!("-{v}"),
                }
            }
            _ => return None,
        };
        self.advance();
        Some(Lit::Num(text))
    }

    fn try_cast(&mut self) -> PResult<Option<Expr>> {
        let save = self.pos;
        self.advance();
        if self.lambda_ahead_paren() {
            return self.unsupported("lambda");
        }
        if PRIMITIVES.contains(&self.peek()) {
            let ty = self.type_name()?;
            self.expect(")")?;
            let e = self.unary()?;
            return Ok(Some(Expr::Cast(ty, Box::new(e))));
        }
        if !self.is_ident_tok() {
            self.pos = save;
            return Ok(None);
        }
        let start = self.pos.i;
        let ty = match self.type_name() {
            Ok(t) => t,
            Err(_) => {
                self.pos = save;
                return Ok(None);
            }
        };
        let generic = self.toks[start..self.pos.i].iter().any(|t| t.is_punct("<"));
        let looks_like_type = ty.dims > 0
            || generic
            || ty.simple().chars().next().is_some_and(|c| c.is_ascii_uppercase());
        if looks_like_type && self.eat(")") {
            let next_ok = match self.tok() {
                Some(t) => match t.kind {
                    TokenKind::Ident => !matches!(t.text.as_str(), "instanceof"),
                    TokenKind::Punct => matches!(t.text.as_str(), "(" | "!" | "~"),
                    _ => true,
                },
                None => false,
            };
            if next_ok {
                let e = self.unary()?;
                return Ok(Some(Expr::Cast(ty, Box::new(e))));
            }
        }
        self.pos = save;
        Ok(None)
    }

    /// After an opening parenthesis: is this a lambda parameter list?
    fn lambda_ahead_paren(&self) -> bool {
        let mut depth = 1;
        let mut i = self.pos.i;
        while let Some(t) = self.toks.get(i) {
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
                if depth == 0 {
                    return self.toks.get(i + 1).is_some_and(|n| n.is_punct("->"));
                }
            } else if t.is_punct(";") || t.is_punct("{") {
                return false;
            }
            i += 1;
        }
        false
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.tok().cloned() else {
            return self.err("expected expression at end of input");
        };
        match tok.kind {
            TokenKind::Int | TokenKind::Float => {
                self.advance();
                let v = normalize_literal(&tok).unwrap_or(tok.text.clone());
                return Ok(Expr::Lit(Lit::Num(v)));
            }
            TokenKind::Str => {
                self.advance();
                return Ok(Expr::Lit(Lit::Str(tok.text)));
            }
            TokenKind::Char => {
                self.advance();
                return Ok(Expr::Lit(Lit::Char(tok.text)));
            }
            _ => {}
        }
        let t = self.peek().to_string();
        match t.as_str() {
            "(" => {
                self.advance();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            "true" | "false" => {
                self.advance();
                Ok(Expr::Lit(Lit::Bool(t == "true")))
            }
            "null" => {
                self.advance();
                Ok(Expr::Lit(Lit::Null))
            }
            "this" | "super" => {
                self.advance();
                if self.peek() == "(" {
                    return Ok(Expr::CtorCall(self.args()?));
                }
                Ok(if t == "this" { Expr::This } else { Expr::Super })
            }
            "new" => self.new_expr(),
            "::" => self.unsupported("method reference"),
            _ if tok.kind == TokenKind::Ident => {
                if crate::lexer::is_keyword(&t) && !PRIMITIVES.contains(&t.as_str()) {
                    return self.err(format!("unexpected keyword `{t}`"));
                }
                self.advance();
                if self.peek() == "->" {
                    return self.unsupported("lambda");
                }
                if self.peek() == "(" {
                    let args = self.args()?;
                    return Ok(Expr::Call(None, t, args));
                }
                if PRIMITIVES.contains(&t.as_str()) {
                    let dims = self.dims();
                    if self.eat(".") && self.eat("class") {
                        return Ok(Expr::Lit(Lit::Class(format!("{t}{}", "[]".repeat(dims)))));
                    }
                    return self.err(format!("unexpected type `{t}`"));
                }
                Ok(Expr::Name(t))
            }
            _ => {
                let found = tok.to_string();
                self.err(format!("unexpected `{found}`"))
            }
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn new_expr(&mut self) -> PResult<Expr> {
        self.expect("new")?;
        self.skip_annotations()?;
        let mut name = self.ident()?;
        self.type_args()?;
        while self.peek() == "." && self.is_ident_at(1) {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
            self.type_args()?;
        }
        if self.peek() == "[" {
            let mut lens = Vec::new();
            let mut dims = 0;
            while self.peek() == "[" {
                self.advance();
                if self.eat("]") {
                    dims += 1;
                } else {
                    lens.push(self.expr()?);
                    self.expect("]")?;
                    dims += 1;
                }
            }
            let init = if self.peek() == "{" {
                Some(self.array_init()?)
            } else {
                None
            };
            if lens.is_empty() && init.is_none() {
                return self.err("array creation without size or initializer");
            }
            return Ok(Expr::NewArray(TypeName { name, dims }, lens, init));
        }
        let ty = TypeName { name, dims: 0 };
        let args = self.args()?;
        let body = if self.peek() == "{" {
            let members = self.class_body("", false)?;
            Some(ClassDecl {
                name: String::new(),
                supertypes: vec![ty.clone()],
                members,
            })
        } else {
            None
        };
        Ok(Expr::New(ty, args, body))
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            if self.pos.sub != 0 {
                return Ok(e);
            }
            match self.peek() {
                "." => {
                    self.advance();
                    if self.peek() == "<" {
                        self.type_args()?;
                    }
                    match self.peek() {
                        "class" => {
                            self.advance();
                            let Some(name) = dotted(&e) else {
                                return self.err("`.class` on a non-type");
                            };
                            e = Expr::Lit(Lit::Class(name));
                        }
                        "new" => {
                            let inner = self.new_expr()?;
                            e = inner;
                        }
                        "this" => {
                            self.advance();
                            e = Expr::This;
                        }
                        _ => {
                            let name = self.ident()?;
                            if self.peek() == "(" {
                                let args = self.args()?;
                                e = Expr::Call(Some(Box::new(e)), name, args);
                            } else {
                                e = Expr::Field(Box::new(e), name);
                            }
                        }
                    }
                }
                "[" => {
                    self.advance();
                    if self.peek() == "]" {
                        // `String[].class`
                        self.advance();
                        let Some(name) = dotted(&e) else {
                            return self.err("unexpected `[]`");
                        };
                        let mut dims = 1 + self.dims();
                        if self.eat(".") && self.eat("class") {
                            let mut n = name;
                            while dims > 0 {
                                n.push_str("[]");
                                dims -= 1;
                            }
                            e = Expr::Lit(Lit::Class(n));
                            continue;
                        }
                        return self.err("unexpected `[]`");
                    }
                    let idx = self.expr()?;
                    self.expect("]")?;
                    e = Expr::Index(Box::new(e), Box::new(idx));
                }
                "++" | "--" => {
                    let inc = self.peek() == "++";
                    self.advance();
                    e = Expr::Step(Box::new(e), inc);
                }
                "::" => return self.unsupported("method reference"),
                _ => return Ok(e),
            }
        }
    }
}

fn dotted(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.clone()),
        Expr::Field(t, n) => dotted(t).map(|p| format!("{p}.{n}")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::lex;

    fn unit(src: &str) -> PResult<Unit> {
        parse_unit(&lex(src).tokens)
    }

    fn body(src: &str) -> Block {
        let u = unit(&format!("class A {{ void m() {{ {src} }} }}")).unwrap();
        match &u.classes[0].members[0] {
            Member::Method(m) => m.body.clone().unwrap(),
            _ => panic!(),
        }
    }

    #[test]
    fn parses_generic_declaration_with_shift_token() {
        let b = body("Map<String, List<byte[]>> m = new HashMap<>(); int x = a >> 2;");
        assert_eq!(b.len(), 2);
        match &b[1] {
            Stmt::Local(v) => assert!(matches!(v[0].init, Some(Init::Expr(Expr::Binary(ref op, ..))) if op == ">>")),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn distinguishes_cast_from_parenthesized_expression() {
        let b = body("Object o = (SSLSocket) f.createSocket(); int y = (a) + b; byte z = (byte) 0xA9;");
        let init = |i: usize| match &b[i] {
            Stmt::Local(v) => v[0].init.clone().unwrap(),
            _ => panic!(),
        };
        assert!(matches!(init(0), Init::Expr(Expr::Cast(..))));
        assert!(matches!(init(1), Init::Expr(Expr::Binary(..))));
        assert!(matches!(init(2), Init::Expr(Expr::Cast(..))));
    }

    #[test]
    fn negative_literals_fold() {
        let b = body("int x = -0x10;");
        match &b[0] {
            Stmt::Local(v) => {
                assert!(matches!(&v[0].init, Some(Init::Expr(Expr::Lit(Lit::Num(n)))) if n == "-16"))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn anonymous_class_with_annotations() {
        let b = body(
            "TrustManager tm = new X509TrustManager() { @Override public X509Certificate[] getAcceptedIssuers() { return null; } };",
        );
        match &b[0] {
            Stmt::Local(v) => match &v[0].init {
                Some(Init::Expr(Expr::New(t, _, Some(c)))) => {
                    assert_eq!(t.name, "X509TrustManager");
                    assert_eq!(c.members.len(), 1);
                }
                other => panic!("{other:?}"),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn lambdas_are_unsupported() {
        let e = unit("class A { void m() { run(() -> go()); } }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Unsupported("lambda"));
        let e = unit("class A { void m() { list.forEach(x -> go(x)); } }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Unsupported("lambda"));
    }

    #[test]
    fn control_flow_statements() {
        let b = body(
            "for (int i = 0; i < n; i++) { x += i; } for (String s : list) {} \
             try (InputStream in = open()) { read(in); } catch (IOException | RuntimeException e) { } finally { close(); } \
             switch (k) { case 1: a(); break; default: b(); } do { i--; } while (i > 0); label: while (true) break label;",
        );
        assert_eq!(b.len(), 6);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = unit("class A {\n void m() {\n int x = ;\n }\n}").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.line, 3);
    }

    #[test]
    fn enum_and_interface_members() {
        let u = unit("interface I { void f(); } enum E { A, B(1) { void g() {} }; int v; }").unwrap();
        assert_eq!(u.classes.len(), 2);
    }
}
