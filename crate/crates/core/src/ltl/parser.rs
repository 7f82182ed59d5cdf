//! Grammar, loosest binding first:
//!
//! ```text
//! implies := or ("->" implies)?
//! or      := and ("||" and)*
//! and     := unary ("&&" unary)*
//! unary   := ("!" | "X" | "G" | "F") unary | binary
//! binary  := primary (("U" | "R") unary)?
//! primary := "true" | "false" | "wasEvent(" id ")" | "wasAction(" id ")" | "(" implies ")"
//! ```
//!
//! `U` and `R` associate to the right. A run of `X`/`G`/`F` letters such as
//! `GF` is read as nested unary operators.

use thiserror::Error;

use super::Ltl;
use crate::model::{ModelError, SymbolResolver};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("parse error at offset {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<LtlError>,
    },
}

impl From<ModelError> for LtlError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownSymbol(s) => LtlError::UnknownSymbol(s),
            other => LtlError::Parse {
                pos: 0,
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let two = text.get(i..i + 2);
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '!' => {
                out.push((i, Tok::Not));
                i += 1;
            }
            '&' if two == Some("&&") => {
                out.push((i, Tok::And));
                i += 2;
            }
            '|' if two == Some("||") => {
                out.push((i, Tok::Or));
                i += 2;
            }
            '-' if two == Some("->") => {
                out.push((i, Tok::Implies));
                i += 2;
            }
            _ if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(LtlError::Parse {
                    pos: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'t, R> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    symbols: R,
    _text: &'t str,
}

impl<R: SymbolResolver> Parser<'_, R> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, LtlError> {
        Err(LtlError::Parse {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LtlError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {tok:?}"))
        }
    }

    fn implies(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Ltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Ltl::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Ltl::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltl, LtlError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Ltl::not(self.unary()?))
            }
            Some(Tok::Ident(id)) if is_unary_run(id) => {
                let ops = id.clone();
                self.pos += 1;
                let mut f = self.unary()?;
                for op in ops.chars().rev() {
                    f = match op {
                        'X' => Ltl::next(f),
                        'G' => Ltl::globally(f),
                        _ => Ltl::finally(f),
                    };
                }
                Ok(f)
            }
            _ => self.binary(),
        }
    }

    fn binary(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.primary()?;
        match self.peek() {
            Some(Tok::Ident(id)) if id == "U" => {
                self.pos += 1;
                Ok(Ltl::until(lhs, self.unary()?))
            }
            Some(Tok::Ident(id)) if id == "R" => {
                self.pos += 1;
                Ok(Ltl::release(lhs, self.unary()?))
            }
            _ => Ok(lhs),
        }
    }

    fn primary(&mut self) -> Result<Ltl, LtlError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implies()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(id)) => match id.as_str() {
                "true" => {
                    self.pos += 1;
                    Ok(Ltl::True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(Ltl::False)
                }
                "wasEvent" | "wasAction" => {
                    self.pos += 1;
                    self.expect(Tok::LParen)?;
                    let Some(Tok::Ident(name)) = self.peek().cloned() else {
                        return self.err("expected a symbol name");
                    };
                    self.pos += 1;
                    self.expect(Tok::RParen)?;
                    if id == "wasEvent" {
                        Ok(Ltl::WasEvent(self.symbols.event(&name)?))
                    } else {
                        Ok(Ltl::WasAction(self.symbols.action(&name)?))
                    }
                }
                other => self.err(format!("unexpected identifier `{other}`")),
            },
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

fn is_unary_run(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| matches!(c, 'X' | 'G' | 'F'))
}

pub fn parse_ltl<R: SymbolResolver>(text: &str, symbols: R) -> Result<Ltl, LtlError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        symbols,
        _text: text,
    };
    let f = p.implies()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

/// One formula per line; blank lines and `#` comments are skipped.
pub fn parse_ltl_file<R: SymbolResolver>(text: &str, mut symbols: R) -> Result<Vec<Ltl>, LtlError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = parse_ltl(line, &mut symbols).map_err(|e| LtlError::Line {
            line: i + 1,
            source: Box::new(e),
        })?;
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;

    fn ab() -> Alphabet {
        Alphabet::numbered(2, 2).unwrap()
    }

    #[test]
    fn parses_response_property() {
        let f = parse_ltl("G(wasEvent(e1) -> F(wasAction(z1)))", &ab()).unwrap();
        assert_eq!(
            f,
            Ltl::globally(Ltl::implies(
                Ltl::WasEvent(0),
                Ltl::finally(Ltl::WasAction(0))
            ))
        );
    }

    #[test]
    fn parses_first_cycle_property() {
        let f = parse_ltl("wasAction(z1) && X(wasAction(z1) || wasAction(z2))", &ab()).unwrap();
        assert_eq!(
            f,
            Ltl::and(
                Ltl::WasAction(0),
                Ltl::next(Ltl::or(Ltl::WasAction(0), Ltl::WasAction(1)))
            )
        );
    }

    #[test]
    fn unknown_symbol() {
        assert_eq!(
            parse_ltl("wasEvent(e9)", &ab()).unwrap_err(),
            LtlError::UnknownSymbol("e9".into())
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let a = &ab();
        let p = || Ltl::WasAction(0);
        let q = || Ltl::WasAction(1);
        let r = || Ltl::WasEvent(0);
        assert_eq!(
            parse_ltl("wasAction(z1) -> wasAction(z2) -> wasEvent(e1)", a).unwrap(),
            Ltl::implies(p(), Ltl::implies(q(), r()))
        );
        assert_eq!(
            parse_ltl("wasAction(z1) || wasAction(z2) && wasEvent(e1)", a).unwrap(),
            Ltl::or(p(), Ltl::and(q(), r()))
        );
        assert_eq!(
            parse_ltl("G wasAction(z1) U wasAction(z2)", a).unwrap(),
            Ltl::globally(Ltl::until(p(), q()))
        );
        assert_eq!(
            parse_ltl("wasAction(z1) U wasAction(z2) R wasEvent(e1)", a).unwrap(),
            Ltl::until(p(), Ltl::release(q(), r()))
        );
        assert_eq!(
            parse_ltl("GF wasAction(z1)", a).unwrap(),
            Ltl::globally(Ltl::finally(p()))
        );
        assert_eq!(parse_ltl("!true", a).unwrap(), Ltl::not(Ltl::True));
    }

    #[test]
    fn reports_positions() {
        match parse_ltl("wasAction(z1) &&", &ab()) {
            Err(LtlError::Parse { pos, .. }) => assert_eq!(pos, 16),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_ltl("(true", &ab()), Err(LtlError::Parse { .. })));
        assert!(matches!(parse_ltl("true false", &ab()), Err(LtlError::Parse { .. })));
    }

    #[test]
    fn file_with_comments() {
        let fs = parse_ltl_file("# props\nG(wasAction(z1))\n\nF(wasEvent(e2))\n", &ab()).unwrap();
        assert_eq!(fs.len(), 2);
        let err = parse_ltl_file("true\nwasEvent(e7)", &ab()).unwrap_err();
        assert!(matches!(err, LtlError::Line { line: 2, .. }));
    }
}
