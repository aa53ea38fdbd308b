use std::fmt;

use thiserror::Error;

use super::{CmpOp, Restriction};

const MAX_NESTING: usize = 256;

/// Syntax error with the byte offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Keyword {
    And,
    Or,
    Not,
}

pub(super) fn keyword(word: &str) -> Option<Keyword> {
    if word.eq_ignore_ascii_case("and") {
        Some(Keyword::And)
    } else if word.eq_ignore_ascii_case("or") {
        Some(Keyword::Or)
    } else if word.eq_ignore_ascii_case("not") {
        Some(Keyword::Not)
    } else {
        None
    }
}

pub(super) fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ':' | '<' | '>' | '=' | '!' | '"' | '\\')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    LParen,
    RParen,
    Colon,
    Op(CmpOp),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w:?}"),
            Tok::Quoted(w) => write!(f, "quoted {w:?}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Op(op) => write!(f, "'{}'", op.symbol()),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            out.push((pos, tok));
            continue;
        }
        match c {
            '<' | '>' | '=' | '!' => {
                chars.next();
                let eq = chars.next_if(|&(_, n)| n == '=').is_some();
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    ('>', true) => CmpOp::Ge,
                    ('=', false) => CmpOp::Eq,
                    ('!', true) => CmpOp::Ne,
                    _ => {
                        return Err(ParseError {
                            offset: pos,
                            expected: "comparison operator".into(),
                            found: format!("{:?}", &text[pos..pos + if eq { 2 } else { 1 }]),
                        })
                    }
                };
                out.push((pos, Tok::Op(op)));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((esc, '\\')) => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => s.push(e),
                            _ => {
                                return Err(ParseError {
                                    offset: esc,
                                    expected: "'\\\"' or '\\\\' escape".into(),
                                    found: "invalid escape".into(),
                                })
                            }
                        },
                        Some((_, ch)) => s.push(ch),
                        None => {
                            return Err(ParseError {
                                offset: pos,
                                expected: "closing '\"'".into(),
                                found: "end of input".into(),
                            })
                        }
                    }
                }
                out.push((pos, Tok::Quoted(s)));
            }
            '\\' => {
                return Err(ParseError {
                    offset: pos,
                    expected: "name, value or operator".into(),
                    found: "'\\'".into(),
                })
            }
            _ => {
                let mut end = pos;
                while let Some((i, ch)) = chars.next_if(|&(_, ch)| is_word_char(ch)) {
                    end = i + ch.len_utf8();
                }
                out.push((pos, Tok::Word(text[pos..end].to_string())));
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

fn is_number(s: &str) -> bool {
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.into(),
            found: self.peek().to_string(),
        }
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        matches!(self.peek(), Tok::Word(w) if keyword(w) == Some(kw))
    }

    fn expr(&mut self) -> Result<Restriction, ParseError> {
        let mut terms = vec![self.term()?];
        while self.at_keyword(Keyword::Or) {
            self.bump();
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Restriction::Or(terms) })
    }

    fn term(&mut self) -> Result<Restriction, ParseError> {
        let mut factors = vec![self.factor()?];
        while self.at_keyword(Keyword::And) {
            self.bump();
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Restriction::And(factors) })
    }

    fn factor(&mut self) -> Result<Restriction, ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.error("shallower nesting"));
        }
        let out = self.factor_inner();
        self.nesting -= 1;
        out
    }

    fn factor_inner(&mut self) -> Result<Restriction, ParseError> {
        if self.at_keyword(Keyword::Not) {
            self.bump();
            return Ok(Restriction::not(self.factor()?));
        }
        let name = match self.peek() {
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("')', AND or OR"));
                }
                self.bump();
                return Ok(inner);
            }
            Tok::Word(w) if keyword(w).is_none() => w.clone(),
            Tok::Quoted(q) if !q.is_empty() => q.clone(),
            _ => return Err(self.error("attribute name, NOT or '('")),
        };
        self.bump();
        match self.peek().clone() {
            Tok::Colon => {
                self.bump();
                match self.peek().clone() {
                    Tok::Word(value) | Tok::Quoted(value) => {
                        self.bump();
                        Ok(Restriction::Pair { name, value })
                    }
                    _ => Err(self.error("attribute value")),
                }
            }
            Tok::Op(op) => {
                self.bump();
                match self.peek().clone() {
                    Tok::Word(num) if is_number(&num) => {
                        let value: f64 = num.parse().map_err(|_| self.error("decimal number"))?;
                        if !value.is_finite() {
                            return Err(self.error("finite decimal number"));
                        }
                        self.bump();
                        Ok(Restriction::Compare { name, op, value })
                    }
                    _ => Err(self.error("decimal number")),
                }
            }
            _ => Err(self.error("':' or comparison operator")),
        }
    }
}

/// Parses restriction text. Whitespace-only input is `MatchAll`.
pub fn parse_restriction(text: &str) -> Result<Restriction, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        nesting: 0,
    };
    if *parser.peek() == Tok::End {
        return Ok(Restriction::MatchAll);
    }
    let ast = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("AND, OR or end of input"));
    }
    Ok(ast)
}
