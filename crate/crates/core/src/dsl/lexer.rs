use super::ast::Span;
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Assign,
    EqEq,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("number {i}"),
            Tok::Float(x) => format!("number {x}"),
            Tok::Str(_) => "string".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let start = i;
        let single = |t: Tok| Some((t, 1));
        let next = chars.get(i + 1).copied();
        let simple = match c {
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '{' => single(Tok::LBrace),
            '}' => single(Tok::RBrace),
            '[' => single(Tok::LBracket),
            ']' => single(Tok::RBracket),
            ',' => single(Tok::Comma),
            '.' if !next.is_some_and(|n| n.is_ascii_digit()) => single(Tok::Dot),
            '-' => single(Tok::Minus),
            '*' => single(Tok::Star),
            '/' => single(Tok::Slash),
            '=' if next == Some('=') => Some((Tok::EqEq, 2)),
            '=' => single(Tok::Assign),
            '<' if next == Some('=') => Some((Tok::Le, 2)),
            '<' => single(Tok::Lt),
            '>' if next == Some('=') => Some((Tok::Ge, 2)),
            '>' => single(Tok::Gt),
            _ => None,
        };
        if let Some((tok, len)) = simple {
            out.push(Token { tok, span });
            i += len;
            col += len;
            continue;
        }
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(DslError::lex(span, "unterminated string literal"));
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                _ => {
                                    return Err(DslError::lex(
                                        Span { line, col: col + (i - start) },
                                        "unknown escape; expected \\\", \\\\ or \\n",
                                    ))
                                }
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                col += i - start;
                out.push(Token { tok: Tok::Str(s), span });
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut is_float = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        is_float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                if chars.get(i).is_some_and(|ch| ch.is_alphanumeric() || *ch == '_') {
                    return Err(DslError::lex(span, "malformed number"));
                }
                let text: String = chars[start..i].iter().collect();
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| DslError::lex(span, "malformed number"))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| DslError::lex(span, "integer out of range"))?)
                };
                col += i - start;
                out.push(Token { tok, span });
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    span,
                });
            }
            other => return Err(DslError::lex(span, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_symbols() {
        assert_eq!(
            toks("x=1e-9 2 .5 <= # c\n"),
            vec![
                Tok::Ident("x".into()),
                Tok::Assign,
                Tok::Float(1e-9),
                Tok::Int(2),
                Tok::Float(0.5),
                Tok::Le,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_tracked() {
        let t = tokenize("a\n  bb").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
    }

    #[test]
    fn lexical_errors() {
        assert!(tokenize("\"open").is_err());
        assert!(tokenize("a $ b").is_err());
        assert!(tokenize("12ab").is_err());
    }
}
