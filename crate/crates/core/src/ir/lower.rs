//! AST to IR lowering.
//!
//! Locals are bound directly to the value ids of their defining instruction,
//! so a local read costs nothing and only plain copies emit `Assign`. There
//! are no phi nodes: after a branch or loop the textually last definition of
//! a variable is the one later reads see. Names that are never declared
//! behave like extra parameters (no defining instruction).

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::{Constants, InstrKind, IrInstruction, IrMethod, ValueId, UNKNOWN_TYPE};
use crate::resolver::ApiRegistry;

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Named(String),
    Unknown,
}

#[derive(Debug, Clone)]
struct Val {
    id: Option<ValueId>,
    ty: Ty,
}

impl Val {
    fn none(ty: Ty) -> Self {
        Val { id: None, ty }
    }
}

struct TypeEnv<'r> {
    registry: &'r ApiRegistry,
    package: Option<String>,
    imports: Vec<String>,
    /// Types declared in the unit itself shadow registry classes.
    local_types: HashSet<String>,
}

impl TypeEnv<'_> {
    /// Registry FQN for a type as written, if it is a known, non-blacklisted
    /// security class.
    fn registry_fqn(&self, written: &str, method: &str) -> Option<String> {
        let reg = self.registry;
        let ok = |fqn: &str| reg.class(fqn).is_some() && !reg.is_blacklisted(fqn);
        if written.contains('.') {
            return ok(written).then(|| written.to_string());
        }
        if self.local_types.contains(written) {
            return None;
        }
        for imp in &self.imports {
            if let Some(pkg) = imp.strip_suffix(".*") {
                let fqn = format!("{pkg}.{written}");
                if ok(&fqn) {
                    return Some(fqn);
                }
            } else if imp.rsplit('.').next() == Some(written) {
                return ok(imp).then(|| imp.clone());
            }
        }
        if let Some(pkg) = &self.package {
            let fqn = format!("{pkg}.{written}");
            if ok(&fqn) {
                return Some(fqn);
            }
        }
        let named: Vec<_> = reg
            .classes_named(written)
            .filter(|c| !reg.is_blacklisted(&c.fqn))
            .collect();
        match named.as_slice() {
            [] => None,
            [one] => Some(one.fqn.clone()),
            many => {
                let declaring: Vec<_> = many
                    .iter()
                    .filter(|c| c.methods.iter().any(|m| m == method))
                    .collect();
                match declaring.as_slice() {
                    [one] => Some(one.fqn.clone()),
                    _ => None,
                }
            }
        }
    }
}

struct ClassInfo {
    path: Vec<String>,
    fields: HashMap<String, (Ty, bool)>,
    static_methods: HashSet<String>,
    anon_count: usize,
}

pub fn lower_unit(unit: &Unit, registry: &ApiRegistry) -> Vec<IrMethod> {
    let mut local_types = HashSet::new();
    for c in &unit.classes {
        collect_type_names(c, &mut local_types);
    }
    let env = TypeEnv {
        registry,
        package: unit.package.clone(),
        imports: unit.imports.clone(),
        local_types,
    };
    let mut lw = Lowerer {
        env: &env,
        classes: Vec::new(),
        out: Vec::new(),
    };
    for c in &unit.classes {
        let name = match &unit.package {
            Some(p) => format!("{p}.{}", c.name),
            None => c.name.clone(),
        };
        lw.class(c, vec![name]);
    }
    lw.out
}

fn collect_type_names(c: &ClassDecl, out: &mut HashSet<String>) {
    if !c.name.is_empty() {
        out.insert(c.name.clone());
    }
    for m in &c.members {
        if let Member::Class(n) = m {
            collect_type_names(n, out);
        }
    }
}

struct Lowerer<'e, 'r> {
    env: &'e TypeEnv<'r>,
    classes: Vec<ClassInfo>,
    out: Vec<IrMethod>,
}

impl Lowerer<'_, '_> {
    fn class(&mut self, decl: &ClassDecl, path: Vec<String>) {
        let mut fields = HashMap::new();
        let mut static_methods = HashSet::new();
        for m in &decl.members {
            match m {
                Member::Field { is_static, vars, .. } => {
                    for v in vars {
                        fields.insert(v.name.clone(), (Ty::Named(v.ty.name.clone()), *is_static));
                    }
                }
                Member::Method(md) if md.is_static => {
                    static_methods.insert(md.name.clone());
                }
                _ => {}
            }
        }
        self.classes.push(ClassInfo {
            path: path.clone(),
            fields,
            static_methods,
            anon_count: 0,
        });

        let has_init = decl.members.iter().any(|m| match m {
            Member::Field { vars, .. } => vars.iter().any(|v| v.init.is_some()),
            Member::Initializer(_) => true,
            _ => false,
        });
        if has_init {
            let mut b = self.body();
            for m in &decl.members {
                match m {
                    Member::Field { vars, .. } => {
                        for v in vars {
                            if let Some(init) = &v.init {
                                let val = self.init(&mut b, init, &v.ty);
                                b.emit(InstrKind::FieldPut, &[val.id], false, format!("this.{}", v.name));
                            }
                        }
                    }
                    Member::Initializer(block) => self.block(&mut b, block),
                    _ => {}
                }
            }
            self.finish(b, path.iter().cloned().chain(["<fields>".to_string()]).collect());
        }

        let mut seen: HashMap<&str, usize> = HashMap::new();
        for m in &decl.members {
            match m {
                Member::Method(md) => {
                    let n = seen.entry(md.name.as_str()).or_insert(0);
                    *n += 1;
                    let name = if *n == 1 {
                        md.name.clone()
                    } else {
                        format!("{}#{}", md.name, n)
                    };
                    if let Some(body) = &md.body {
                        let mut b = self.body();
                        for (ty, pname) in &md.params {
                            let v = b.fresh();
                            b.bind(pname, Some(v), Ty::Named(ty.name.clone()));
                        }
                        self.block(&mut b, body);
                        let mut p = path.clone();
                        p.push(name);
                        self.finish(b, p);
                    }
                }
                Member::Class(inner) => {
                    let mut p = path.clone();
                    p.push(inner.name.clone());
                    self.class(inner, p);
                }
                _ => {}
            }
        }
        self.classes.pop();
    }

    fn body(&self) -> Body {
        Body {
            instructions: Vec::new(),
            constants: Constants::new(),
            sec: BTreeSet::new(),
            next_value: 0,
            scopes: vec![HashMap::new()],
        }
    }

    fn finish(&mut self, b: Body, path: Vec<String>) {
        self.out.push(IrMethod {
            qualified_path: path,
            instructions: b.instructions,
            constants: b.constants,
            security_method_names: b.sec,
        });
    }

    fn current(&self) -> &ClassInfo {
        self.classes.last().expect("inside a class")
    }

    fn field(&self, name: &str) -> Option<Ty> {
        self.classes
            .iter()
            .rev()
            .find_map(|c| c.fields.get(name).map(|(t, _)| t.clone()))
    }

    fn security(&self, b: &mut Body, ty: &Ty, method: &str) {
        if let Ty::Named(t) = ty {
            if let Some(fqn) = self.env.registry_fqn(t, method) {
                b.sec.insert(format!("{fqn}.{method}"));
            }
        }
    }

    fn anonymous(&mut self, decl: &ClassDecl) {
        let cur = self.classes.last_mut().expect("inside a class");
        cur.anon_count += 1;
        let mut path = cur.path.clone();
        path.push(format!("${}", cur.anon_count));
        self.class(decl, path);
    }

    fn block(&mut self, b: &mut Body, stmts: &[Stmt]) {
        b.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(b, s);
        }
        b.scopes.pop();
    }

    fn scoped(&mut self, b: &mut Body, s: &Stmt) {
        b.scopes.push(HashMap::new());
        self.stmt(b, s);
        b.scopes.pop();
    }

    fn local(&mut self, b: &mut Body, v: &VarDecl) {
        let ty = Ty::Named(v.ty.name.clone());
        let val = match &v.init {
            Some(init) => self.init(b, init, &v.ty).id,
            None => None,
        };
        b.declare(&v.name, val, ty);
    }

    fn init(&mut self, b: &mut Body, init: &Init, ty: &TypeName) -> Val {
        match init {
            Init::Expr(e) => self.copy_or_value(b, e),
            Init::Array(items) => {
                let elem = TypeName {
                    name: ty.name.clone(),
                    dims: ty.dims.saturating_sub(1),
                };
                let arr = b.emit(InstrKind::ArrayNew, &[], true, format!("{}[]", ty.name));
                self.array_items(b, arr, items, &elem);
                Val {
                    id: arr,
                    ty: Ty::Named(ty.name.clone()),
                }
            }
        }
    }

    fn array_items(&mut self, b: &mut Body, arr: Option<ValueId>, items: &[Init], elem: &TypeName) {
        for item in items {
            let v = self.init(b, item, elem);
            b.emit(InstrKind::ArrayStore, &[arr, v.id], false, String::new());
        }
    }

    /// Value of `e`; a bare read of a bound local becomes an explicit copy.
    fn copy_or_value(&mut self, b: &mut Body, e: &Expr) -> Val {
        let v = self.expr(b, e);
        if let Expr::Name(n) = e {
            if b.lookup(n).is_some() && v.id.is_some() {
                let id = b.emit(InstrKind::Assign, &[v.id], true, n.clone());
                return Val { id, ty: v.ty };
            }
        }
        v
    }

    fn stmt(&mut self, b: &mut Body, s: &Stmt) {
        match s {
            Stmt::Local(vars) => {
                for v in vars {
                    self.local(b, v);
                }
            }
            Stmt::Expr(e) => {
                self.expr(b, e);
            }
            Stmt::If(c, t, e) => {
                self.expr(b, c);
                self.scoped(b, t);
                if let Some(e) = e {
                    self.scoped(b, e);
                }
            }
            Stmt::While(c, body) => {
                self.expr(b, c);
                self.scoped(b, body);
            }
            Stmt::DoWhile(body, c) => {
                self.scoped(b, body);
                self.expr(b, c);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                b.scopes.push(HashMap::new());
                for s in init {
                    self.stmt(b, s);
                }
                if let Some(c) = cond {
                    self.expr(b, c);
                }
                self.scoped(b, body);
                for u in update {
                    self.expr(b, u);
                }
                b.scopes.pop();
            }
            Stmt::ForEach { var, iter, body } => {
                let it = self.expr(b, iter);
                b.scopes.push(HashMap::new());
                let elem = b.emit(InstrKind::ArrayLoad, &[it.id], true, String::new());
                b.declare(&var.name, elem, Ty::Named(var.ty.name.clone()));
                self.stmt(b, body);
                b.scopes.pop();
            }
            Stmt::Try {
                resources,
                body,
                catches,
                finally,
            } => {
                b.scopes.push(HashMap::new());
                for r in resources {
                    self.local(b, r);
                }
                self.block(b, body);
                b.scopes.pop();
                for c in catches {
                    b.scopes.push(HashMap::new());
                    let v = b.fresh();
                    b.declare(&c.name, Some(v), Ty::Named(c.ty.name.clone()));
                    self.block(b, &c.body);
                    b.scopes.pop();
                }
                if let Some(f) = finally {
                    self.block(b, f);
                }
            }
            Stmt::Switch(e, groups) => {
                self.expr(b, e);
                for g in groups {
                    self.block(b, g);
                }
            }
            Stmt::Sync(e, block) => {
                self.expr(b, e);
                self.block(b, block);
            }
            Stmt::Return(e) => {
                let v = e.as_ref().map(|e| self.expr(b, e));
                b.emit(InstrKind::Return, &[v.and_then(|v| v.id)], false, String::new());
            }
            Stmt::Throw(e) => {
                let v = self.expr(b, e);
                b.emit(InstrKind::Throw, &[v.id], false, String::new());
            }
            Stmt::Block(block) => self.block(b, block),
            Stmt::Class(c) => {
                let mut p = self.current().path.clone();
                p.push(c.name.clone());
                self.class(c, p);
            }
            Stmt::Assert(c, m) => {
                self.expr(b, c);
                if let Some(m) = m {
                    self.expr(b, m);
                }
            }
            Stmt::Jump | Stmt::Empty => {}
        }
    }

    /// Dotted type name when `e` is a name chain rooted at something that is
    /// neither a local nor a field and that contains a capitalized segment.
    fn static_prefix(&self, b: &Body, e: &Expr) -> Option<String> {
        let mut segs = Vec::new();
        let mut cur = e;
        loop {
            match cur {
                Expr::Field(t, n) => {
                    segs.push(n.as_str());
                    cur = t;
                }
                Expr::Name(n) => {
                    segs.push(n.as_str());
                    break;
                }
                _ => return None,
            }
        }
        segs.reverse();
        let root = segs[0];
        if b.lookup(root).is_some() || self.field(root).is_some() {
            return None;
        }
        if !segs
            .iter()
            .any(|s| s.chars().next().is_some_and(|c| c.is_ascii_uppercase()))
        {
            return None;
        }
        Some(segs.join("."))
    }

    fn literal(&mut self, b: &mut Body, lit: &Lit) -> Val {
        let (text, constant, ty) = match lit {
            Lit::Num(n) => (n.clone(), true, "number"),
            Lit::Str(s) => (s.clone(), true, "String"),
            Lit::Char(c) => (c.clone(), true, "char"),
            Lit::Bool(v) => (v.to_string(), false, "boolean"),
            Lit::Null => ("null".to_string(), false, "null"),
            Lit::Class(c) => (format!("{c}.class"), false, "Class"),
        };
        if constant {
            *b.constants.entry(text.clone()).or_insert(0) += 1;
        }
        let id = b.emit(InstrKind::ConstLoad, &[], true, text);
        Val {
            id,
            ty: Ty::Named(ty.to_string()),
        }
    }

    fn expr(&mut self, b: &mut Body, e: &Expr) -> Val {
        match e {
            Expr::Lit(l) => self.literal(b, l),
            Expr::Name(n) => {
                if let Some((id, ty)) = b.lookup(n) {
                    return Val { id, ty };
                }
                if let Some(ty) = self.field(n) {
                    let id = b.emit(InstrKind::FieldGet, &[], true, format!("this.{n}"));
                    return Val { id, ty };
                }
                Val::none(Ty::Unknown)
            }
            Expr::This => Val::none(Ty::Named(
                self.current().path.last().cloned().unwrap_or_default(),
            )),
            Expr::Super => Val::none(Ty::Unknown),
            Expr::Field(target, name) => {
                if let Some(t) = self.static_prefix(b, target) {
                    let id = b.emit(InstrKind::FieldGet, &[], true, format!("{t}.{name}"));
                    return Val { id, ty: Ty::Unknown };
                }
                if matches!(**target, Expr::This) {
                    let ty = self.field(name).unwrap_or(Ty::Unknown);
                    let id = b.emit(InstrKind::FieldGet, &[], true, format!("this.{name}"));
                    return Val { id, ty };
                }
                let t = self.expr(b, target);
                let id = b.emit(InstrKind::FieldGet, &[t.id], true, format!(".{name}"));
                Val { id, ty: Ty::Unknown }
            }
            Expr::Call(target, name, args) => self.call(b, target.as_deref(), name, args),
            Expr::CtorCall(args) => {
                let vals: Vec<Option<ValueId>> = args.iter().map(|a| self.expr(b, a).id).collect();
                b.emit(InstrKind::InvokeConstructor, &vals, false, "<init>".into());
                Val::none(Ty::Unknown)
            }
            Expr::New(ty, args, body) => {
                let obj = b.emit(InstrKind::NewObject, &[], true, ty.name.clone());
                let mut uses = vec![obj];
                for a in args {
                    uses.push(self.expr(b, a).id);
                }
                b.emit(InstrKind::InvokeConstructor, &uses, false, format!("{}.<init>", ty.name));
                let t = Ty::Named(ty.name.clone());
                self.security(b, &t, "<init>");
                if let Some(decl) = body {
                    self.anonymous(decl);
                }
                Val { id: obj, ty: t }
            }
            Expr::NewArray(ty, lens, init) => {
                let uses: Vec<Option<ValueId>> = lens.iter().map(|l| self.expr(b, l).id).collect();
                let arr = b.emit(InstrKind::ArrayNew, &uses, true, format!("{}[]", ty.name));
                if let Some(items) = init {
                    let elem = TypeName {
                        name: ty.name.clone(),
                        dims: ty.dims.saturating_sub(1),
                    };
                    self.array_items(b, arr, items, &elem);
                }
                Val {
                    id: arr,
                    ty: Ty::Named(ty.name.clone()),
                }
            }
            Expr::Index(a, i) => {
                let av = self.expr(b, a);
                let iv = self.expr(b, i);
                let id = b.emit(InstrKind::ArrayLoad, &[av.id, iv.id], true, String::new());
                Val { id, ty: av.ty }
            }
            Expr::Unary(op, inner) => {
                let v = self.expr(b, inner);
                let kind = if op == "!" {
                    InstrKind::Compare
                } else {
                    InstrKind::BinaryOp
                };
                let id = b.emit(kind, &[v.id], true, op.clone());
                Val { id, ty: v.ty }
            }
            Expr::Step(target, inc) => {
                let cur = self.expr(b, target);
                let op = if *inc { "+1" } else { "-1" };
                let id = b.emit(InstrKind::BinaryOp, &[cur.id], true, op.into());
                self.store(b, target, id);
                Val { id, ty: cur.ty }
            }
            Expr::Binary(op, l, r) => {
                let lv = self.expr(b, l);
                let rv = self.expr(b, r);
                let kind = if matches!(op.as_str(), "==" | "!=" | "<" | ">" | "<=" | ">=") {
                    InstrKind::Compare
                } else {
                    InstrKind::BinaryOp
                };
                let id = b.emit(kind, &[lv.id, rv.id], true, op.clone());
                Val { id, ty: lv.ty }
            }
            Expr::Assign(op, target, rhs) => {
                let v = if op == "=" {
                    self.copy_or_value(b, rhs)
                } else {
                    let cur = self.expr(b, target);
                    let r = self.expr(b, rhs);
                    let id = b.emit(
                        InstrKind::BinaryOp,
                        &[cur.id, r.id],
                        true,
                        op.trim_end_matches('=').to_string(),
                    );
                    Val { id, ty: cur.ty }
                };
                self.store(b, target, v.id);
                if let Expr::Name(n) = &**target {
                    if b.lookup(n).is_none() && self.field(n).is_none() {
                        b.declare_free(n, v.id, v.ty.clone());
                    }
                }
                v
            }
            Expr::Cond(c, x, y) => {
                let cv = self.expr(b, c);
                let xv = self.expr(b, x);
                let yv = self.expr(b, y);
                let id = b.emit(InstrKind::Assign, &[cv.id, xv.id, yv.id], true, "?:".into());
                Val { id, ty: xv.ty }
            }
            Expr::Cast(ty, inner) => {
                let v = self.expr(b, inner);
                let id = b.emit(InstrKind::Cast, &[v.id], true, ty.name.clone());
                Val {
                    id,
                    ty: Ty::Named(ty.name.clone()),
                }
            }
            Expr::InstanceOf(inner, ty) => {
                let v = self.expr(b, inner);
                let id = b.emit(InstrKind::Compare, &[v.id], true, format!("instanceof {}", ty.name));
                Val {
                    id,
                    ty: Ty::Named("boolean".into()),
                }
            }
        }
    }

    /// Write `value` back into an assignable expression.
    fn store(&mut self, b: &mut Body, target: &Expr, value: Option<ValueId>) {
        match target {
            Expr::Name(n) => {
                if b.lookup(n).is_some() {
                    b.rebind(n, value);
                } else if self.field(n).is_some() {
                    b.emit(InstrKind::FieldPut, &[value], false, format!("this.{n}"));
                }
            }
            Expr::Field(obj, name) => {
                if let Some(t) = self.static_prefix(b, obj) {
                    b.emit(InstrKind::FieldPut, &[value], false, format!("{t}.{name}"));
                } else if matches!(**obj, Expr::This) {
                    b.emit(InstrKind::FieldPut, &[value], false, format!("this.{name}"));
                } else {
                    let o = self.expr(b, obj);
                    b.emit(InstrKind::FieldPut, &[o.id, value], false, format!(".{name}"));
                }
            }
            Expr::Index(a, i) => {
                let av = self.expr(b, a);
                let iv = self.expr(b, i);
                b.emit(InstrKind::ArrayStore, &[av.id, iv.id, value], false, String::new());
            }
            _ => {}
        }
    }

    fn call(&mut self, b: &mut Body, target: Option<&Expr>, name: &str, args: &[Expr]) -> Val {
        match target {
            None => {
                let vals: Vec<Option<ValueId>> = args.iter().map(|a| self.expr(b, a).id).collect();
                let kind = if self.current().static_methods.contains(name) {
                    InstrKind::InvokeStatic
                } else {
                    InstrKind::InvokeVirtual
                };
                let id = b.emit(kind, &vals, true, name.to_string());
                Val { id, ty: Ty::Unknown }
            }
            Some(t) => {
                if let Some(ty_name) = self.static_prefix(b, t) {
                    let vals: Vec<Option<ValueId>> = args.iter().map(|a| self.expr(b, a).id).collect();
                    let id = b.emit(InstrKind::InvokeStatic, &vals, true, format!("{ty_name}.{name}"));
                    let ty = Ty::Named(ty_name);
                    self.security(b, &ty, name);
                    let factory = name == "getInstance" || name.starts_with("getDefault");
                    return Val {
                        id,
                        ty: if factory { ty } else { Ty::Unknown },
                    };
                }
                let recv = self.expr(b, t);
                let mut uses = vec![recv.id];
                for a in args {
                    uses.push(self.expr(b, a).id);
                }
                let owner = match &recv.ty {
                    Ty::Named(n) => n.clone(),
                    Ty::Unknown => UNKNOWN_TYPE.to_string(),
                };
                let id = b.emit(InstrKind::InvokeVirtual, &uses, true, format!("{owner}.{name}"));
                self.security(b, &recv.ty, name);
                Val { id, ty: Ty::Unknown }
            }
        }
    }
}

struct Body {
    instructions: Vec<IrInstruction>,
    constants: Constants,
    sec: BTreeSet<String>,
    next_value: ValueId,
    scopes: Vec<HashMap<String, (Option<ValueId>, Ty)>>,
}

impl Body {
    fn fresh(&mut self) -> ValueId {
        let v = self.next_value;
        self.next_value += 1;
        v
    }

    fn emit(&mut self, kind: InstrKind, uses: &[Option<ValueId>], define: bool, op: String) -> Option<ValueId> {
        let defines = define.then(|| self.fresh());
        self.instructions.push(IrInstruction {
            id: self.instructions.len(),
            kind,
            uses: uses.iter().flatten().copied().collect(),
            defines,
            op,
        });
        defines
    }

    fn lookup(&self, name: &str) -> Option<(Option<ValueId>, Ty)> {
        self.scopes.iter().rev().find_map(|s| s.get(name).cloned())
    }

    fn bind(&mut self, name: &str, v: Option<ValueId>, ty: Ty) {
        self.scopes
            .last_mut()
            .expect("scope")
            .insert(name.to_string(), (v, ty));
    }

    fn declare(&mut self, name: &str, v: Option<ValueId>, ty: Ty) {
        self.bind(name, v, ty);
    }

    /// Undeclared names assigned to become method-wide locals.
    fn declare_free(&mut self, name: &str, v: Option<ValueId>, ty: Ty) {
        self.scopes[0].insert(name.to_string(), (v, ty));
    }

    fn rebind(&mut self, name: &str, v: Option<ValueId>) {
        if let Some(slot) = self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name)) {
            slot.0 = v;
        }
    }
}
