//! Formula lexing, parsing and structural analysis.

mod ast;
mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet};

pub use ast::{BinaryOp, CellRef, Expr, Literal, NameRef, UnaryOp};
pub use lexer::{tokenize, Op, Qualifier, RefPart, RefToken, Spanned, Token, ERROR_LITERALS};
pub use parser::{parse, parse_tokens, MAX_NESTING};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("lex error at offset {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl FormulaError {
    pub(crate) fn lex(offset: usize, message: impl Into<String>) -> Self {
        Self::Lex { offset, message: message.into() }
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Self::Parse { offset, message: message.into() }
    }

    pub fn offset(&self) -> usize {
        match self {
            Self::Lex { offset, .. } | Self::Parse { offset, .. } => *offset,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Lex { .. } => "lex-error",
            Self::Parse { .. } => "parse-error",
        }
    }
}

/// Maximum number of IF calls on any root-to-leaf path.
pub fn if_nesting_depth(expr: &Expr) -> usize {
    // Iterative to stay safe on hand-built trees deeper than the parser allows.
    let mut best = 0;
    let mut stack = vec![(expr, 0usize)];
    while let Some((e, above)) = stack.pop() {
        let here = above + usize::from(is_if(e));
        best = best.max(here);
        stack.extend(e.children().into_iter().map(|c| (c, here)));
    }
    best
}

fn is_if(e: &Expr) -> bool {
    matches!(e, Expr::Call { name, .. } if normalize_function(name) == "IF")
}

/// Uppercased function name without the `_xlfn.` / `_xlws.` storage prefixes.
pub fn normalize_function(name: &str) -> String {
    let upper = name.to_ascii_uppercase();
    let mut s = upper.as_str();
    loop {
        match s.strip_prefix("_XLFN.").or_else(|| s.strip_prefix("_XLWS.")) {
            Some(rest) => s = rest,
            None => return s.to_string(),
        }
    }
}

/// Occurrence count per normalized function name.
pub fn function_census(expr: &Expr) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    expr.visit(|e| {
        if let Expr::Call { name, .. } = e {
            *out.entry(normalize_function(name)).or_insert(0) += 1;
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefScope {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RefTarget {
    pub scope: RefScope,
    /// `[n]` external workbook index, 1-based; present iff external.
    pub workbook_index: Option<u32>,
    pub sheet: Option<String>,
    pub range_text: String,
}

impl RefTarget {
    fn from_qualifier(q: Option<&Qualifier>, range_text: String) -> Self {
        let q = q.cloned().unwrap_or_default();
        let scope = if q.workbook.is_some() { RefScope::External } else { RefScope::Internal };
        Self { scope, workbook_index: q.workbook, sheet: q.sheet, range_text }
    }

    pub fn is_external(&self) -> bool {
        self.scope == RefScope::External
    }
}

/// Every cell reference and range, in source order, duplicates kept. A range
/// between two plain references is reported once, qualified by its first end.
pub fn extract_refs(expr: &Expr) -> Vec<RefTarget> {
    let mut out = Vec::new();
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        match e {
            Expr::Range { start, end } => {
                if let (Expr::CellRef(a), Expr::CellRef(b)) = (start.as_ref(), end.as_ref()) {
                    out.push(RefTarget::from_qualifier(a.qualifier.as_ref(), format!("{}:{}", a.text, b.text)));
                    continue;
                }
            }
            Expr::CellRef(r) => out.push(RefTarget::from_qualifier(r.qualifier.as_ref(), r.text.clone())),
            _ => {}
        }
        stack.extend(e.children().into_iter().rev());
    }
    out
}

/// External workbook indexes used anywhere, including `[n]!Name` forms.
pub fn external_indexes(expr: &Expr) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    expr.visit(|e| {
        let q = match e {
            Expr::CellRef(r) => r.qualifier.as_ref(),
            Expr::NameRef(n) => n.qualifier.as_ref(),
            _ => None,
        };
        if let Some(n) = q.and_then(|q| q.workbook) {
            out.insert(n);
        }
    });
    out
}

/// Structural facts about one formula.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormulaSummary {
    pub if_depth: usize,
    pub functions: BTreeMap<String, usize>,
    pub refs: Vec<RefTarget>,
    pub external_indexes: BTreeSet<u32>,
}

impl FormulaSummary {
    pub fn of(expr: &Expr) -> Self {
        Self {
            if_depth: if_nesting_depth(expr),
            functions: function_census(expr),
            refs: extract_refs(expr),
            external_indexes: external_indexes(expr),
        }
    }
}

/// Parses and summarizes; a single leading `=` is tolerated.
pub fn analyze(text: &str) -> Result<FormulaSummary, FormulaError> {
    let body = text.strip_prefix('=').unwrap_or(text);
    parse(body).map(|e| FormulaSummary::of(&e))
}
