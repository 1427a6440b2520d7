use std::fmt::Write;

use super::ast::*;

/// Canonical source text of a script; reparses to an equal AST.
pub fn pretty_print(script: &Script) -> String {
    let mut out = String::new();
    for stmt in &script.statements {
        statement(&mut out, &stmt.kind);
        out.push('\n');
    }
    out
}

fn statement(out: &mut String, kind: &StmtKind) {
    match kind {
        StmtKind::System { id, ctor: c } => {
            let _ = write!(out, "system {} = {}", id.name, ctor(c));
        }
        StmtKind::State { id, init } => match init {
            StateInit::Ctor { ctor: c, on } => {
                let _ = write!(out, "state {} = {} on {}", id.name, ctor(c), on.name);
            }
            StateInit::Product(a, b) => {
                let _ = write!(out, "state {} = product({}, {})", id.name, a.name, b.name);
            }
        },
        StmtKind::Measure { id, ctor: c, on } => {
            let _ = write!(out, "measure {} = {} on {}", id.name, ctor(c), on.name);
        }
        StmtKind::Transform { id, ctor: c } => {
            let _ = write!(out, "transform {} = {}", id.name, ctor(c));
        }
        StmtKind::Run { kind, args: a, name } => {
            let body = args(a);
            if body.is_empty() {
                let _ = write!(out, "run {} {{}}", kind.name());
            } else {
                let _ = write!(out, "run {} {{ {body} }}", kind.name());
            }
            if let Some(n) = name {
                let _ = write!(out, " as {}", n.name);
            }
        }
        StmtKind::Assert {
            lhs,
            cmp,
            expected,
            tol,
        } => {
            let _ = write!(
                out,
                "assert {}.{} {} {}",
                lhs.run.name,
                lhs.name.name,
                cmp.symbol(),
                real(*expected)
            );
            if let Some(t) = tol {
                let _ = write!(out, " tol {}", real(*t));
            }
        }
        StmtKind::Emit { format, path } => {
            let _ = write!(out, "emit {} {}", format.name(), string(path));
        }
    }
}

fn ctor(c: &Ctor) -> String {
    format!("{}({})", c.name.name, args(&c.args))
}

fn args(args: &[Arg]) -> String {
    args.iter()
        .map(|a| format!("{}={}", a.key.name, value(&a.value)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(x) => real(*x),
        Value::Angle { num, den } => {
            let mut s = if *num == 1.0 {
                "pi".to_string()
            } else if *num == -1.0 {
                "-pi".to_string()
            } else {
                format!("{}*pi", compact(*num))
            };
            if *den != 1.0 {
                let _ = write!(s, "/{}", compact(*den));
            }
            s
        }
        Value::Word(id) => id.name.clone(),
        Value::Str(s) => string(s),
        Value::List(items) => format!("[{}]", items.iter().map(value).collect::<Vec<_>>().join(", ")),
    }
}

/// Float literal that lexes back as a float with the same value.
fn real(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Integral values print without a fraction; they reparse as integers and
/// convert to the same float.
fn compact(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        real(x)
    }
}

fn string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
