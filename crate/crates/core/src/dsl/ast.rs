use std::fmt;

/// Source position, 1-based. Spans never take part in AST equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    /// `num * pi / den`.
    Angle { num: f64, den: f64 },
    Word(Ident),
    Str(String),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub key: Ident,
    pub value: Value,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ctor {
    pub name: Ident,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Born,
    Chsh,
    Activation,
    Witness,
    Conditional,
    Span,
    Purify,
    Consistency,
    Regroup,
}

impl RunKind {
    pub const ALL: [RunKind; 9] = [
        RunKind::Born,
        RunKind::Chsh,
        RunKind::Activation,
        RunKind::Witness,
        RunKind::Conditional,
        RunKind::Span,
        RunKind::Purify,
        RunKind::Consistency,
        RunKind::Regroup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RunKind::Born => "born",
            RunKind::Chsh => "chsh",
            RunKind::Activation => "activation",
            RunKind::Witness => "witness",
            RunKind::Conditional => "conditional",
            RunKind::Span => "span",
            RunKind::Purify => "purify",
            RunKind::Consistency => "consistency",
            RunKind::Regroup => "regroup",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `run.quantity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub run: Ident,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateInit {
    Ctor { ctor: Ctor, on: Ident },
    Product(Ident, Ident),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    System { id: Ident, ctor: Ctor },
    State { id: Ident, init: StateInit },
    Measure { id: Ident, ctor: Ctor, on: Ident },
    Transform { id: Ident, ctor: Ctor },
    Run { kind: RunKind, args: Vec<Arg>, name: Option<Ident> },
    Assert { lhs: Quantity, cmp: Cmp, expected: f64, tol: Option<f64> },
    Emit { format: Format, path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub name: String,
    pub statements: Vec<Statement>,
}

impl Script {
    /// Name a run is known by in tables and assertions.
    pub fn run_label(kind: RunKind, name: &Option<Ident>) -> String {
        match name {
            Some(id) => id.name.clone(),
            None => kind.name().to_string(),
        }
    }
}
