//! Recursive-descent parser for the sentence grammar
//!
//! ```text
//! sentence := block+ ":" matrix
//! block    := ("forall" | "exists") ident+
//! matrix   := "true" | atom ("&" atom)*
//! atom     := ident "(" ident ("," ident)* ")" | ident "=" ident
//! ```
//!
//! `#` starts a comment running to the end of the line.

use std::collections::HashMap;

use super::{Atom, Block, PhSentence, Quantifier, DUMMY_PREFIX};
use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Amp,
    Equals,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Equals => "`=`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const KEYWORDS: [&str; 3] = ["forall", "exists", "true"];

fn span_at(text: &str, offset: usize) -> Span {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    Span {
        offset,
        line,
        column,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '&' => Some(Tok::Amp),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, i));
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        return Err(Error::Parse {
            span: span_at(text, i),
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            span: span_at(self.text, offset),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(
                self.offset(),
                format!("expected {}, found {}", want.describe(), self.peek().describe()),
            )
        }
    }

    /// A user identifier: not a keyword, not in the reserved namespace.
    fn ident(&mut self, what: &str) -> Result<(String, usize)> {
        match self.bump() {
            (Tok::Ident(s), off) => {
                if KEYWORDS.contains(&s.as_str()) {
                    return self.error(off, format!("keyword `{s}` cannot be used as {what}"));
                }
                if s.starts_with(DUMMY_PREFIX) {
                    return self.error(
                        off,
                        format!("identifiers starting with `{DUMMY_PREFIX}` are reserved"),
                    );
                }
                Ok((s, off))
            }
            (t, off) => self.error(off, format!("expected {what}, found {}", t.describe())),
        }
    }

    fn quantifier(&self) -> Option<Quantifier> {
        match self.peek() {
            Tok::Ident(s) if s == "forall" => Some(Quantifier::Forall),
            Tok::Ident(s) if s == "exists" => Some(Quantifier::Exists),
            _ => None,
        }
    }

    fn sentence(&mut self) -> Result<PhSentence> {
        let mut prefix = Vec::new();
        let mut bound: HashMap<String, usize> = HashMap::new();
        while let Some(q) = self.quantifier() {
            let kw = self.bump().1;
            let mut vars = Vec::new();
            while let Tok::Ident(s) = self.peek() {
                if KEYWORDS.contains(&s.as_str()) {
                    break;
                }
                let (v, off) = self.ident("a variable")?;
                if bound.insert(v.clone(), off).is_some() {
                    return self.error(off, format!("variable `{v}` is bound twice"));
                }
                vars.push(v);
            }
            if vars.is_empty() {
                return self.error(kw, format!("`{}` binds no variables", q.keyword()));
            }
            prefix.push(Block {
                quantifier: q,
                variables: vars,
            });
        }
        if prefix.is_empty() {
            return self.error(self.offset(), "a sentence starts with `forall` or `exists`");
        }
        self.expect(Tok::Colon)?;

        let mut matrix = Vec::new();
        if matches!(self.peek(), Tok::Ident(s) if s == "true") {
            self.bump();
        } else {
            loop {
                matrix.push(self.atom(&bound)?);
                if *self.peek() == Tok::Amp {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if *self.peek() != Tok::End {
            return self.error(
                self.offset(),
                format!("expected `&` or end of input, found {}", self.peek().describe()),
            );
        }
        PhSentence::new(prefix, matrix)
    }

    fn variable_use(&mut self, bound: &HashMap<String, usize>) -> Result<String> {
        let (v, off) = self.ident("a variable")?;
        if !bound.contains_key(&v) {
            return self.error(off, format!("variable `{v}` is not bound"));
        }
        Ok(v)
    }

    fn atom(&mut self, bound: &HashMap<String, usize>) -> Result<Atom> {
        if *self.peek() == Tok::End {
            return self.error(self.offset(), "empty matrix (write `true` for no atoms)");
        }
        let start = self.offset();
        let (head, _) = self.ident("a relation symbol or variable")?;
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let mut args = vec![self.variable_use(bound)?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.variable_use(bound)?);
                }
                self.expect(Tok::RParen)?;
                Ok(Atom::Rel {
                    relation: head,
                    args,
                })
            }
            Tok::Equals => {
                if !bound.contains_key(&head) {
                    return self.error(start, format!("variable `{head}` is not bound"));
                }
                self.bump();
                let rhs = self.variable_use(bound)?;
                Ok(Atom::Eq(head, rhs))
            }
            t => {
                let t = t.describe();
                self.error(self.offset(), format!("expected `(` or `=`, found {t}"))
            }
        }
    }
}

pub fn parse_sentence(text: &str) -> Result<PhSentence> {
    let toks = lex(text)?;
    Parser { text, toks, pos: 0 }.sentence()
}
