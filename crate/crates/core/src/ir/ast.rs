//! Syntax tree for the supported Java subset.

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    /// Dotted name without type arguments, e.g. `javax.crypto.Cipher`.
    pub name: String,
    pub dims: usize,
}

impl TypeName {
    pub fn simple(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Unit {
    pub package: Option<String>,
    pub imports: Vec<String>,
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub name: String,
    pub supertypes: Vec<TypeName>,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone)]
pub enum Member {
    Field {
        is_static: bool,
        ty: TypeName,
        vars: Vec<VarDecl>,
    },
    Method(MethodDecl),
    Initializer(Block),
    Class(ClassDecl),
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    /// `<init>` for constructors.
    pub name: String,
    pub is_static: bool,
    pub params: Vec<(TypeName, String)>,
    pub body: Option<Block>,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeName,
    pub init: Option<Init>,
}

#[derive(Debug, Clone)]
pub enum Init {
    Expr(Expr),
    Array(Vec<Init>),
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone)]
pub struct Catch {
    pub ty: TypeName,
    pub name: String,
    pub body: Block,
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Local(Vec<VarDecl>),
    Expr(Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    DoWhile(Box<Stmt>, Expr),
    For {
        init: Vec<Stmt>,
        cond: Option<Expr>,
        update: Vec<Expr>,
        body: Box<Stmt>,
    },
    ForEach {
        var: VarDecl,
        iter: Expr,
        body: Box<Stmt>,
    },
    Try {
        resources: Vec<VarDecl>,
        body: Block,
        catches: Vec<Catch>,
        finally: Option<Block>,
    },
    Switch(Expr, Vec<Block>),
    Sync(Expr, Block),
    Return(Option<Expr>),
    Throw(Expr),
    Block(Block),
    Class(ClassDecl),
    Assert(Expr, Option<Expr>),
    Jump,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    /// Normalized constant text.
    Num(String),
    Str(String),
    Char(String),
    Bool(bool),
    Null,
    /// `Foo.class`
    Class(String),
}

#[derive(Debug, Clone)]
pub enum Expr {
    Lit(Lit),
    Name(String),
    This,
    Super,
    Field(Box<Expr>, String),
    Call(Option<Box<Expr>>, String, Vec<Expr>),
    /// Explicit `this(...)` or `super(...)` constructor call.
    CtorCall(Vec<Expr>),
    New(TypeName, Vec<Expr>, Option<ClassDecl>),
    NewArray(TypeName, Vec<Expr>, Option<Vec<Init>>),
    Index(Box<Expr>, Box<Expr>),
    Unary(String, Box<Expr>),
    /// `x++`, `--x` and friends; the flag is true for increments.
    Step(Box<Expr>, bool),
    Binary(String, Box<Expr>, Box<Expr>),
    Assign(String, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Cast(TypeName, Box<Expr>),
    InstanceOf(Box<Expr>, TypeName),
}
