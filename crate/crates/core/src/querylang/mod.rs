//! Tree-structured attribute restrictions.
//!
//! ```text
//! expr    := term { OR term }
//! term    := factor { AND factor }
//! factor  := NOT factor | "(" expr ")" | pair | compare
//! pair    := name ":" value
//! compare := name op number        op ∈ { <, <=, >, >=, =, != }
//! ```
//!
//! Keywords are case-insensitive, names and values are not. Names and values
//! may be double-quoted (`\"` and `\\` escapes). Empty input means "match
//! everything".

pub mod generate;
mod parser;
mod resolve;

use std::fmt;

use crate::model::{AttrValue, AttributeMap};

pub use parser::{parse_restriction, ParseError};
pub use resolve::resolve_candidates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

/// Parsed restriction. `MatchAll` only appears as the whole tree; `And` and
/// `Or` always have at least two children.
#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    MatchAll,
    And(Vec<Restriction>),
    Or(Vec<Restriction>),
    Not(Box<Restriction>),
    Pair { name: String, value: String },
    Compare { name: String, op: CmpOp, value: f64 },
}

impl Restriction {
    pub fn pair(name: impl Into<String>, value: impl Into<String>) -> Self {
        Restriction::Pair {
            name: name.into(),
            value: value.into(),
        }
    }

    pub fn compare(name: impl Into<String>, op: CmpOp, value: f64) -> Self {
        Restriction::Compare {
            name: name.into(),
            op,
            value,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Restriction) -> Self {
        Restriction::Not(Box::new(inner))
    }

    /// Checks the structural invariants a printer and parser rely on.
    pub fn is_valid(&self) -> bool {
        fn inner(node: &Restriction) -> bool {
            match node {
                Restriction::MatchAll => false,
                Restriction::And(c) | Restriction::Or(c) => c.len() >= 2 && c.iter().all(inner),
                Restriction::Not(c) => inner(c),
                Restriction::Pair { name, .. } => !name.is_empty(),
                Restriction::Compare { name, value, .. } => !name.is_empty() && value.is_finite(),
            }
        }
        matches!(self, Restriction::MatchAll) || inner(self)
    }

    pub fn depth(&self) -> usize {
        match self {
            Restriction::And(c) | Restriction::Or(c) => 1 + c.iter().map(Restriction::depth).max().unwrap_or(0),
            Restriction::Not(c) => 1 + c.depth(),
            _ => 1,
        }
    }
}

/// Canonical, fully parenthesized text. `parse_restriction(&format_ast(a)) == a`
/// for every valid tree.
pub fn format_ast(ast: &Restriction) -> String {
    ast.to_string()
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restriction::MatchAll => Ok(()),
            Restriction::And(children) | Restriction::Or(children) => {
                let sep = if matches!(self, Restriction::And(_)) { " AND " } else { " OR " };
                f.write_str("(")?;
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{child}")?;
                }
                f.write_str(")")
            }
            Restriction::Not(child) => write!(f, "(NOT {child})"),
            Restriction::Pair { name, value } => {
                write!(f, "{}:{}", quote_if_needed(name, true), quote_if_needed(value, false))
            }
            Restriction::Compare { name, op, value } => {
                write!(f, "({} {} {})", quote_if_needed(name, true), op.symbol(), value)
            }
        }
    }
}

fn quote_if_needed(s: &str, is_name: bool) -> String {
    let plain = !s.is_empty()
        && s.chars().all(parser::is_word_char)
        && !(is_name && parser::keyword(s).is_some());
    if plain {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Evaluates a restriction against one attribute map. A missing attribute
/// makes `Pair` and `Compare` false.
pub fn evaluate_restriction(ast: &Restriction, attributes: &AttributeMap) -> bool {
    match ast {
        Restriction::MatchAll => true,
        Restriction::And(c) => c.iter().all(|x| evaluate_restriction(x, attributes)),
        Restriction::Or(c) => c.iter().any(|x| evaluate_restriction(x, attributes)),
        Restriction::Not(c) => !evaluate_restriction(c, attributes),
        Restriction::Pair { name, value } => {
            matches!(attributes.get(name), Some(AttrValue::Str(v)) if v == value)
        }
        Restriction::Compare { name, op, value } => {
            matches!(attributes.get(name), Some(AttrValue::Num(v)) if op.apply(*v, *value))
        }
    }
}
