//! S-expression reader with source positions.

use super::PddlError;

/// 1-based line/column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    /// Lowercased symbol.
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head symbol of a list, if the list starts with an atom.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }
}

enum Token {
    Open(Pos),
    Close(Pos),
    Sym(String, Pos),
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = src.chars().peekable();
    let mut current: Option<(String, Pos)> = None;

    fn flush(current: &mut Option<(String, Pos)>, out: &mut Vec<Token>) {
        if let Some((s, p)) = current.take() {
            out.push(Token::Sym(s.to_lowercase(), p));
        }
    }

    while let Some(c) = chars.next() {
        let here = Pos { line, column };
        match c {
            '(' => {
                flush(&mut current, &mut out);
                out.push(Token::Open(here));
            }
            ')' => {
                flush(&mut current, &mut out);
                out.push(Token::Close(here));
            }
            ';' => {
                flush(&mut current, &mut out);
                // comment to end of line
                for n in chars.by_ref() {
                    if n == '\n' {
                        line += 1;
                        column = 1;
                        break;
                    }
                }
                continue;
            }
            c if c.is_whitespace() => flush(&mut current, &mut out),
            c => match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), here)),
            },
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    flush(&mut current, &mut out);
    out
}

/// Parse exactly one top-level s-expression from `src`.
pub fn parse_one(src: &str) -> Result<Sexpr, PddlError> {
    let tokens = tokenize(src);
    let mut stack: Vec<(Vec<Sexpr>, Pos)> = Vec::new();
    let mut result: Option<Sexpr> = None;

    for tok in tokens {
        if result.is_some() {
            let pos = match tok {
                Token::Open(p) | Token::Close(p) | Token::Sym(_, p) => p,
            };
            return Err(PddlError::parse(pos, "unexpected content after the top-level expression"));
        }
        match tok {
            Token::Open(p) => stack.push((Vec::new(), p)),
            Token::Close(p) => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| PddlError::parse(p, "unbalanced ')'"))?;
                let list = Sexpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            Token::Sym(s, p) => match stack.last_mut() {
                Some((parent, _)) => parent.push(Sexpr::Atom(s, p)),
                None => return Err(PddlError::parse(p, format!("expected '(' but found '{s}'"))),
            },
        }
    }

    if let Some((_, open)) = stack.pop() {
        let line = src.split('\n').count();
        let column = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        return Err(PddlError::parse(
            Pos { line, column },
            format!("unexpected end of input: missing ')' for the list opened at {}:{}", open.line, open.column),
        ));
    }
    result.ok_or_else(|| PddlError::parse(Pos { line: 1, column: 1 }, "empty input"))
}
