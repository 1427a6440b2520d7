use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::DslError;

/// Accepted keys of a constructor or run block.
pub(crate) struct Schema {
    pub name: &'static str,
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
}

const fn schema(name: &'static str, required: &'static [&'static str], optional: &'static [&'static str]) -> Schema {
    Schema { name, required, optional }
}

const PURE_KEYS: &[&str] = &["phases", "parity", "tail", "sigma", "tau"];

pub(crate) const SYSTEM_CTORS: &[Schema] = &[schema("composite", &["d", "bits", "antibits"], &[])];

pub(crate) const STATE_CTORS: &[Schema] = &[
    schema("entpair", &["p"], &["parity"]),
    schema("basis", &["digits"], &[]),
    schema("pure", &["coeffs"], PURE_KEYS),
    schema("pair", &["alphas"], &["r", "phases"]),
    schema("classical", &["probs"], &[]),
    schema("separable", &["gamma"], &[]),
    schema("random", &[], &["rank"]),
];

pub(crate) const MEASURE_CTORS: &[Schema] = &[
    schema("basis", &[], &[]),
    schema("unit", &[], &[]),
    schema("witness", &["p"], &["parity"]),
    schema("projector", &["coeffs"], PURE_KEYS),
    schema("side", &["side", "angle"], &[]),
];

pub(crate) const TRANSFORM_CTORS: &[Schema] = &[
    schema("reversible", &[], &["x", "z", "sigma", "tau"]),
    schema("channel", &["table"], &[]),
];

pub(crate) fn run_schema(kind: RunKind) -> Schema {
    match kind {
        RunKind::Born => schema("born", &["state", "measure"], &["transform"]),
        RunKind::Chsh => schema("chsh", &[], &["alice0", "alice1", "bob0", "bob1"]),
        RunKind::Activation => schema("activation", &["state"], &[]),
        RunKind::Witness => schema("witness", &["p"], &["grid", "parity", "state"]),
        RunKind::Conditional => schema("conditional", &["state", "measure", "targets"], &[]),
        RunKind::Span => schema("span", &["system"], &[]),
        RunKind::Purify => schema("purify", &["state"], &["antibits"]),
        RunKind::Consistency => schema("consistency", &["system"], &["trials", "control"]),
        RunKind::Regroup => schema("regroup", &["state"], &[]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeclKind {
    System,
    State,
    Measure,
    Transform,
}

impl DeclKind {
    fn noun(self) -> &'static str {
        match self {
            DeclKind::System => "system",
            DeclKind::State => "state",
            DeclKind::Measure => "measurement",
            DeclKind::Transform => "transform",
        }
    }

    /// Argument keys whose values name a declaration of this kind.
    fn for_key(key: &str) -> Option<Self> {
        match key {
            "system" => Some(DeclKind::System),
            "state" => Some(DeclKind::State),
            "measure" => Some(DeclKind::Measure),
            "transform" => Some(DeclKind::Transform),
            _ => None,
        }
    }
}

const KEYWORDS: &[&str] = &["system", "state", "measure", "transform", "run", "assert", "emit"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    decls: HashMap<String, (DeclKind, Span)>,
    runs: HashMap<String, Span>,
    emitted: bool,
}

pub fn parse_script(text: &str) -> Result<Script, DslError> {
    parse_named("script", text)
}

pub fn parse_named(name: &str, text: &str) -> Result<Script, DslError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        decls: HashMap::new(),
        runs: HashMap::new(),
        emitted: false,
    };
    let mut statements = Vec::new();
    let mut last_line = 0;
    while p.peek() != &Tok::Eof {
        let span = p.span();
        if span.line == last_line {
            return Err(DslError::syntax(span, "expected a new line before the next statement"));
        }
        statements.push(p.statement()?);
        last_line = p.tokens[p.pos - 1].span.line;
    }
    Ok(Script {
        name: name.to_string(),
        statements,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, DslError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> DslError {
        DslError::syntax(self.span(), format!("expected {what}, found {}", self.peek().describe()))
    }

    fn ident(&mut self, what: &str) -> Result<Ident, DslError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn declare(&mut self, id: &Ident, kind: DeclKind) -> Result<(), DslError> {
        if KEYWORDS.contains(&id.name.as_str()) || id.name == "pi" {
            return Err(DslError::syntax(id.span, format!("`{}` is reserved", id.name)));
        }
        if let Some((_, prev)) = self.decls.get(&id.name) {
            return Err(DslError::syntax(
                id.span,
                format!("`{}` is already defined at {prev}", id.name),
            ));
        }
        self.decls.insert(id.name.clone(), (kind, id.span));
        Ok(())
    }

    fn reference(&self, id: &Ident, kind: DeclKind) -> Result<(), DslError> {
        match self.decls.get(&id.name) {
            None => Err(DslError::undefined(id.span, format!("undefined {} `{}`", kind.noun(), id.name))),
            Some((k, _)) if *k != kind => Err(DslError::syntax(
                id.span,
                format!("`{}` is a {}, expected a {}", id.name, k.noun(), kind.noun()),
            )),
            Some(_) => Ok(()),
        }
    }

    fn statement(&mut self) -> Result<Statement, DslError> {
        let span = self.span();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("a statement keyword")),
        };
        let kind = match kw.as_str() {
            "system" => {
                self.bump();
                let id = self.ident("a system name")?;
                self.expect(Tok::Assign, "`=`")?;
                let ctor = self.ctor(SYSTEM_CTORS, "system")?;
                self.declare(&id, DeclKind::System)?;
                StmtKind::System { id, ctor }
            }
            "state" => {
                self.bump();
                let id = self.ident("a state name")?;
                self.expect(Tok::Assign, "`=`")?;
                let init = if matches!(self.peek(), Tok::Ident(s) if s == "product") {
                    self.product()?
                } else {
                    let ctor = self.ctor(STATE_CTORS, "state")?;
                    self.keyword("on")?;
                    let on = self.ident("a system name")?;
                    self.reference(&on, DeclKind::System)?;
                    StateInit::Ctor { ctor, on }
                };
                self.declare(&id, DeclKind::State)?;
                StmtKind::State { id, init }
            }
            "measure" => {
                self.bump();
                let id = self.ident("a measurement name")?;
                self.expect(Tok::Assign, "`=`")?;
                let ctor = self.ctor(MEASURE_CTORS, "measurement")?;
                self.keyword("on")?;
                let on = self.ident("a system name")?;
                self.reference(&on, DeclKind::System)?;
                self.declare(&id, DeclKind::Measure)?;
                StmtKind::Measure { id, ctor, on }
            }
            "transform" => {
                self.bump();
                let id = self.ident("a transform name")?;
                self.expect(Tok::Assign, "`=`")?;
                let ctor = self.ctor(TRANSFORM_CTORS, "transform")?;
                self.declare(&id, DeclKind::Transform)?;
                StmtKind::Transform { id, ctor }
            }
            "run" => {
                self.bump();
                let k = self.ident("a run kind")?;
                let Some(kind) = RunKind::from_name(&k.name) else {
                    let names: Vec<&str> = RunKind::ALL.iter().map(|r| r.name()).collect();
                    return Err(DslError::syntax(
                        k.span,
                        format!("unknown run kind `{}`; expected one of {}", k.name, names.join(", ")),
                    ));
                };
                self.expect(Tok::LBrace, "`{`")?;
                let args = self.args(Tok::RBrace)?;
                self.check_args(&run_schema(kind), &args, k.span, "run")?;
                let name = if matches!(self.peek(), Tok::Ident(s) if s == "as") {
                    self.bump();
                    let id = self.ident("a run name")?;
                    if let Some(prev) = self.runs.get(&id.name) {
                        return Err(DslError::syntax(
                            id.span,
                            format!("run `{}` is already defined at {prev}", id.name),
                        ));
                    }
                    Some(id)
                } else {
                    None
                };
                let label = Script::run_label(kind, &name);
                self.runs.entry(label).or_insert(span);
                StmtKind::Run { kind, args, name }
            }
            "assert" => {
                self.bump();
                let run = self.ident("a run name")?;
                if !self.runs.contains_key(&run.name) {
                    return Err(DslError::undefined(run.span, format!("undefined run `{}`", run.name)));
                }
                self.expect(Tok::Dot, "`.`")?;
                let name = self.ident("a quantity name")?;
                let cmp = match self.bump().tok {
                    Tok::EqEq => Cmp::Eq,
                    Tok::Lt => Cmp::Lt,
                    Tok::Le => Cmp::Le,
                    Tok::Gt => Cmp::Gt,
                    Tok::Ge => Cmp::Ge,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("a comparison (==, <, <=, >, >=)"));
                    }
                };
                let expected = self.number()?;
                let tol = if matches!(self.peek(), Tok::Ident(s) if s == "tol") {
                    self.bump();
                    Some(self.number()?)
                } else {
                    None
                };
                StmtKind::Assert {
                    lhs: Quantity { run, name },
                    cmp,
                    expected,
                    tol,
                }
            }
            "emit" => {
                self.bump();
                let f = self.ident("`csv` or `json`")?;
                let format = match f.name.as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(DslError::syntax(f.span, format!("expected `csv` or `json`, found `{}`", f.name))),
                };
                let path = match self.bump().tok {
                    Tok::Str(s) => s,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("an output path string"));
                    }
                };
                if self.emitted {
                    return Err(DslError::syntax(span, "only one emit statement is allowed"));
                }
                self.emitted = true;
                StmtKind::Emit { format, path }
            }
            other => {
                return Err(DslError::syntax(
                    span,
                    format!("unknown keyword `{other}`; expected one of {}", KEYWORDS.join(", ")),
                ))
            }
        };
        Ok(Statement { kind, span })
    }

    fn product(&mut self) -> Result<StateInit, DslError> {
        let start = self.bump().span;
        self.expect(Tok::LParen, "`(`")?;
        let mut ids = Vec::new();
        while *self.peek() != Tok::RParen {
            ids.push(self.ident("a state name")?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RParen {
                return Err(self.unexpected("`,` or `)`"));
            }
        }
        self.bump();
        if ids.len() != 2 {
            return Err(DslError::syntax(
                start,
                format!("arity error: `product` takes 2 states, got {}", ids.len()),
            ));
        }
        for id in &ids {
            self.reference(id, DeclKind::State)?;
        }
        let b = ids.pop().expect("two ids");
        let a = ids.pop().expect("two ids");
        Ok(StateInit::Product(a, b))
    }

    fn ctor(&mut self, schemas: &[Schema], what: &str) -> Result<Ctor, DslError> {
        let name = self.ident(&format!("a {what} constructor"))?;
        let Some(schema) = schemas.iter().find(|s| s.name == name.name) else {
            let names: Vec<&str> = schemas.iter().map(|s| s.name).collect();
            return Err(DslError::syntax(
                name.span,
                format!("unknown {what} constructor `{}`; expected one of {}", name.name, names.join(", ")),
            ));
        };
        self.expect(Tok::LParen, "`(`")?;
        let args = self.args(Tok::RParen)?;
        self.check_args(schema, &args, name.span, what)?;
        Ok(Ctor { name, args })
    }

    fn args(&mut self, close: Tok) -> Result<Vec<Arg>, DslError> {
        let mut args = Vec::new();
        loop {
            if *self.peek() == close {
                self.bump();
                return Ok(args);
            }
            let key = self.ident("an argument name or closing bracket")?;
            self.expect(Tok::Assign, "`=`")?;
            let value = self.value()?;
            if let (Some(kind), Value::Word(id)) = (DeclKind::for_key(&key.name), &value) {
                self.reference(id, kind)?;
            }
            args.push(Arg {
                span: key.span,
                key,
                value,
            });
            if *self.peek() == Tok::Comma {
                self.bump();
            }
        }
    }

    fn check_args(&self, schema: &Schema, args: &[Arg], at: Span, what: &str) -> Result<(), DslError> {
        for (i, a) in args.iter().enumerate() {
            let k = a.key.name.as_str();
            if !schema.required.contains(&k) && !schema.optional.contains(&k) {
                return Err(DslError::syntax(
                    a.span,
                    format!("{what} `{}` has no argument `{k}`", schema.name),
                ));
            }
            if args[..i].iter().any(|b| b.key.name == k) {
                return Err(DslError::syntax(a.span, format!("argument `{k}` given twice")));
            }
            if let Some(kind) = DeclKind::for_key(k) {
                if !matches!(a.value, Value::Word(_)) {
                    return Err(DslError::syntax(a.span, format!("`{k}` must name a {}", kind.noun())));
                }
            }
        }
        for req in schema.required {
            if !args.iter().any(|a| a.key.name == *req) {
                return Err(DslError::syntax(
                    at,
                    format!("arity error: {what} `{}` requires `{req}`", schema.name),
                ));
            }
        }
        Ok(())
    }

    fn value(&mut self) -> Result<Value, DslError> {
        match self.peek().clone() {
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    if *self.peek() == Tok::RBracket {
                        self.bump();
                        return Ok(Value::List(items));
                    }
                    items.push(self.value()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBracket => {}
                        _ => return Err(self.unexpected("`,` or `]`")),
                    }
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Ident(s) if s != "pi" => {
                let span = self.bump().span;
                Ok(Value::Word(Ident { name: s, span }))
            }
            _ => self.numeric(),
        }
    }

    /// `[-] (INT | FLOAT) [* pi] [/ num]` or `[-] pi [/ num]`.
    fn numeric(&mut self) -> Result<Value, DslError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let sign = if neg { -1.0 } else { 1.0 };
        let lead = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Some(Value::Int(if neg { -i } else { i }))
            }
            Tok::Float(x) => {
                self.bump();
                Some(Value::Float(sign * x))
            }
            Tok::Ident(s) if s == "pi" => None,
            _ => return Err(self.unexpected("a value")),
        };
        let num = match lead {
            None => {
                self.bump();
                sign
            }
            Some(v) if *self.peek() == Tok::Star => {
                self.bump();
                self.keyword("pi")?;
                match v {
                    Value::Int(i) => i as f64,
                    Value::Float(x) => x,
                    _ => unreachable!(),
                }
            }
            Some(v) => {
                if *self.peek() == Tok::Slash {
                    return Err(DslError::syntax(self.span(), "division is only allowed after `pi`"));
                }
                return Ok(v);
            }
        };
        let den = if *self.peek() == Tok::Slash {
            self.bump();
            match self.bump().tok {
                Tok::Int(i) if i != 0 => i as f64,
                Tok::Float(x) if x != 0.0 => x,
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("a nonzero denominator"));
                }
            }
        } else {
            1.0
        };
        Ok(Value::Angle { num, den })
    }

    fn number(&mut self) -> Result<f64, DslError> {
        let span = self.span();
        match self.numeric()? {
            Value::Int(i) => Ok(i as f64),
            Value::Float(x) => Ok(x),
            Value::Angle { num, den } => Ok(num * std::f64::consts::PI / den),
            _ => Err(DslError::syntax(span, "expected a number")),
        }
    }
}
