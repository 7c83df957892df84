//! A SPARQL subset: `PREFIX`, `SELECT [DISTINCT]`, basic graph patterns,
//! `FILTER` with `regex` or a language test, `LIMIT` and `OFFSET`.
//!
//! Regular expressions use the syntax of the [`regex`] crate; the only flag
//! accepted is `i`. Results are ordered by the canonical encoding of the
//! selected terms so that output is deterministic.

mod eval;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;

use crate::model::Term;

pub use eval::{evaluate, plan_order};
pub use parser::parse_query;

/// Variable name to bound term.
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Term(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => write!(f, "{t}"),
            PatternTerm::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.s, &self.p, &self.o]
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.s, self.p, self.o)
    }
}

/// A compiled regular expression that compares by source text.
#[derive(Debug, Clone)]
pub struct RegexFilter {
    pub var: String,
    pub pattern: String,
    pub case_insensitive: bool,
    compiled: Regex,
}

impl RegexFilter {
    pub fn new(
        var: impl Into<String>,
        pattern: impl Into<String>,
        case_insensitive: bool,
    ) -> Result<Self, regex::Error> {
        let pattern = pattern.into();
        let compiled = regex::RegexBuilder::new(&pattern).case_insensitive(case_insensitive).build()?;
        Ok(Self { var: var.into(), pattern, case_insensitive, compiled })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.compiled.is_match(text)
    }
}

impl PartialEq for RegexFilter {
    fn eq(&self, other: &Self) -> bool {
        self.var == other.var && self.pattern == other.pattern && self.case_insensitive == other.case_insensitive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterExpr {
    /// Matches literals whose lexical value matches the pattern; IRIs never match.
    Regex(RegexFilter),
    /// Matches literals with the given language tag; `""` selects untagged literals.
    LangEq { var: String, tag: String },
}

impl FilterExpr {
    pub fn var(&self) -> &str {
        match self {
            FilterExpr::Regex(r) => &r.var,
            FilterExpr::LangEq { var, .. } => var,
        }
    }

    pub fn accepts(&self, term: &Term) -> bool {
        match self {
            FilterExpr::Regex(r) => term.is_literal() && r.is_match(term.value()),
            FilterExpr::LangEq { tag, .. } => term.is_literal() && term.lang().unwrap_or("") == tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Star,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub prefixes: BTreeMap<String, String>,
    pub select: Selection,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    pub limit: Option<usize>,
    pub offset: usize,
}

impl Query {
    /// Output variables: the select list, or for `*` every pattern variable in
    /// order of first appearance.
    pub fn projection(&self) -> Vec<String> {
        match &self.select {
            Selection::Vars(vars) => vars.clone(),
            Selection::Star => {
                let mut out: Vec<String> = Vec::new();
                for v in self.patterns.iter().flat_map(TriplePattern::vars) {
                    if !out.iter().any(|o| o == v) {
                        out.push(v.to_string());
                    }
                }
                out
            }
        }
    }
}
