use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Spanned, Tok};
use super::{FilterExpr, PatternTerm, Query, RegexFilter, Selection, TriplePattern};
use crate::error::ParseError;
use crate::model::{normalize_lang, Term};
use crate::vocab;

/// Parses a query.
///
/// Keywords are case-insensitive. Besides syntax errors this rejects unknown
/// prefixes, regex flags other than `i`, patterns that fail to compile, and
/// selected or filtered variables that no triple pattern mentions.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let end = text.lines().count().max(1);
    let end_col = text.lines().last().map_or(1, |l| l.chars().count() + 1);
    let mut parser = Parser { tokens, pos: 0, end: (end, end_col), prefixes: BTreeMap::new() };
    parser.query()
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    prefixes: BTreeMap<String, String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens.get(self.pos).map_or(self.end, |s| (s.line, s.column))
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::new(line, column, message)
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of query".to_string(),
            Some(Tok::Var(v)) => format!("?{v}"),
            Some(Tok::IriRef(i)) => format!("<{i}>"),
            Some(Tok::PName(p, l)) => format!("{p}:{l}"),
            Some(Tok::Word(w)) => w.clone(),
            Some(Tok::Str(s)) => format!("\"{s}\""),
            Some(Tok::LangTag(t)) => format!("@{t}"),
            Some(Tok::Integer(n)) | Some(Tok::Decimal(n)) => n.clone(),
            Some(Tok::Punct(c)) => c.to_string(),
            Some(Tok::DoubleCaret) => "^^".to_string(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        tok
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(word))
    }

    fn eat_word(&mut self, word: &str) -> bool {
        let hit = self.at_word(word);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        if self.eat_word(word) {
            Ok(())
        } else {
            Err(self.error(format!("expected {word}, found {}", self.describe())))
        }
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.at_punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}', found {}", self.describe())))
        }
    }

    fn query(&mut self) -> PResult<Query> {
        while self.eat_word("PREFIX") {
            let Some(Tok::PName(name, local)) = self.peek().cloned() else {
                return Err(self.error(format!("expected prefix name, found {}", self.describe())));
            };
            if !local.is_empty() {
                return Err(self.error(format!("expected prefix name, found {name}:{local}")));
            }
            self.pos += 1;
            let Some(Tok::IriRef(iri)) = self.peek().cloned() else {
                return Err(self.error(format!("expected IRI, found {}", self.describe())));
            };
            self.pos += 1;
            self.prefixes.insert(name, iri);
        }

        self.expect_word("SELECT")?;
        let distinct = self.eat_word("DISTINCT");
        let mut select_spans = Vec::new();
        let select = if self.at_punct('*') {
            self.pos += 1;
            Selection::Star
        } else {
            let mut vars = Vec::new();
            while let Some(Tok::Var(v)) = self.peek().cloned() {
                select_spans.push((v.clone(), self.here()));
                self.pos += 1;
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            if vars.is_empty() {
                return Err(self.error(format!("expected '*' or variables, found {}", self.describe())));
            }
            Selection::Vars(vars)
        };

        self.eat_word("WHERE");
        self.expect_punct('{')?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            if self.at_punct('}') {
                self.pos += 1;
                break;
            }
            if self.peek().is_none() {
                return Err(self.error("expected '}', found end of query"));
            }
            if self.eat_word("FILTER") {
                let span = self.here();
                filters.push((self.filter()?, span));
            } else {
                self.triples_block(&mut patterns)?;
            }
        }

        let mut limit = None;
        let mut offset = 0;
        loop {
            if self.eat_word("LIMIT") {
                limit = Some(self.integer()?);
            } else if self.eat_word("OFFSET") {
                offset = self.integer()?;
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return Err(self.error(format!("unexpected {} after query", self.describe())));
        }

        let bound: BTreeSet<&str> = patterns.iter().flat_map(TriplePattern::vars).collect();
        for (var, (line, column)) in &select_spans {
            if !bound.contains(var.as_str()) {
                return Err(ParseError::new(
                    *line,
                    *column,
                    format!("selected variable ?{var} is not used in any pattern"),
                ));
            }
        }
        for (filter, (line, column)) in &filters {
            if !bound.contains(filter.var()) {
                return Err(ParseError::new(
                    *line,
                    *column,
                    format!("filter variable ?{} is not used in any pattern", filter.var()),
                ));
            }
        }

        Ok(Query {
            prefixes: std::mem::take(&mut self.prefixes),
            select,
            distinct,
            patterns,
            filters: filters.into_iter().map(|(f, _)| f).collect(),
            limit,
            offset,
        })
    }

    fn integer(&mut self) -> PResult<usize> {
        match self.peek().cloned() {
            Some(Tok::Integer(n)) => {
                let value = n.parse().map_err(|_| self.error(format!("integer {n} is too large")))?;
                self.pos += 1;
                Ok(value)
            }
            _ => Err(self.error(format!("expected non-negative integer, found {}", self.describe()))),
        }
    }

    fn triples_block(&mut self, out: &mut Vec<TriplePattern>) -> PResult<()> {
        let s = self.node(false)?;
        loop {
            let p = self.verb()?;
            loop {
                let o = self.node(true)?;
                out.push(TriplePattern { s: s.clone(), p: p.clone(), o });
                if self.at_punct(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.at_punct(';') {
                while self.at_punct(';') {
                    self.pos += 1;
                }
                if self.at_punct('.') || self.at_punct('}') {
                    break;
                }
            } else {
                break;
            }
        }
        if self.at_punct('.') {
            self.pos += 1;
        } else if !self.at_punct('}') && !self.at_word("FILTER") {
            return Err(self.error(format!("expected '.', found {}", self.describe())));
        }
        Ok(())
    }

    fn verb(&mut self) -> PResult<PatternTerm> {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == "a") {
            self.pos += 1;
            return Ok(PatternTerm::Term(Term::vocab(vocab::RDF_TYPE)));
        }
        let term = self.node(false)?;
        if let PatternTerm::Term(t) = &term {
            if t.is_literal() {
                return Err(self.error("a literal cannot be a predicate"));
            }
        }
        Ok(term)
    }

    fn node(&mut self, allow_literal: bool) -> PResult<PatternTerm> {
        let start = self.pos;
        match self.next() {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::IriRef(iri)) => self.make_iri(start, iri),
            Some(Tok::PName(prefix, local)) => {
                let ns = self.prefixes.get(&prefix).cloned().ok_or_else(|| {
                    self.pos = start;
                    self.error(format!("unknown prefix '{prefix}:'"))
                })?;
                self.make_iri(start, format!("{ns}{local}"))
            }
            Some(Tok::Str(value)) if allow_literal => match self.peek().cloned() {
                Some(Tok::LangTag(tag)) => {
                    let lit = Term::lang_literal(value, &tag).map_err(|e| self.error(e.to_string()))?;
                    self.pos += 1;
                    Ok(PatternTerm::Term(lit))
                }
                Some(Tok::DoubleCaret) => {
                    self.pos += 1;
                    let dt_start = self.pos;
                    let PatternTerm::Term(dt) = self.node(false)? else {
                        self.pos = dt_start;
                        return Err(self.error("datatype must be an IRI"));
                    };
                    Ok(PatternTerm::Term(typed(&value, dt.value())))
                }
                _ => Ok(PatternTerm::Term(Term::literal(value))),
            },
            Some(Tok::Integer(n)) if allow_literal => Ok(PatternTerm::Term(typed(&n, vocab::XSD_INTEGER))),
            Some(Tok::Decimal(n)) if allow_literal => Ok(PatternTerm::Term(typed(&n, vocab::XSD_DECIMAL))),
            Some(Tok::Word(w)) if allow_literal && (w == "true" || w == "false") => {
                Ok(PatternTerm::Term(typed(&w, vocab::XSD_BOOLEAN)))
            }
            _ => {
                self.pos = start;
                let what = if allow_literal { "a term or variable" } else { "an IRI or variable" };
                Err(self.error(format!("expected {what}, found {}", self.describe())))
            }
        }
    }

    fn make_iri(&mut self, start: usize, iri: String) -> PResult<PatternTerm> {
        Term::iri(iri).map(PatternTerm::Term).map_err(|e| {
            self.pos = start;
            self.error(e.to_string())
        })
    }

    /// After `FILTER`: either a parenthesised expression or a bare call.
    fn filter(&mut self) -> PResult<FilterExpr> {
        if self.at_punct('(') {
            self.pos += 1;
            let expr = self.filter_call()?;
            self.expect_punct(')')?;
            Ok(expr)
        } else {
            self.filter_call()
        }
    }

    fn filter_call(&mut self) -> PResult<FilterExpr> {
        if self.eat_word("regex") {
            self.expect_punct('(')?;
            let var = self.var()?;
            self.expect_punct(',')?;
            let pattern_at = self.here();
            let pattern = self.string()?;
            let mut case_insensitive = false;
            if self.at_punct(',') {
                self.pos += 1;
                let flags_at = self.here();
                let flags = self.string()?;
                match flags.as_str() {
                    "" => {}
                    "i" => case_insensitive = true,
                    other => {
                        return Err(ParseError::new(
                            flags_at.0,
                            flags_at.1,
                            format!("unsupported regex flags \"{other}\" (only \"i\" is accepted)"),
                        ))
                    }
                }
            }
            self.expect_punct(')')?;
            let filter = RegexFilter::new(var, pattern, case_insensitive)
                .map_err(|e| ParseError::new(pattern_at.0, pattern_at.1, format!("invalid regex: {e}")))?;
            Ok(FilterExpr::Regex(filter))
        } else if self.at_word("lang") {
            let var = self.lang_call()?;
            self.expect_punct('=')?;
            let tag = self.tag()?;
            Ok(FilterExpr::LangEq { var, tag })
        } else if self.eat_word("langMatches") {
            self.expect_punct('(')?;
            let var = self.lang_call()?;
            self.expect_punct(',')?;
            let tag = self.tag()?;
            self.expect_punct(')')?;
            Ok(FilterExpr::LangEq { var, tag })
        } else {
            Err(self.error(format!("expected regex, lang or langMatches, found {}", self.describe())))
        }
    }

    fn lang_call(&mut self) -> PResult<String> {
        self.expect_word("lang")?;
        self.expect_punct('(')?;
        let var = self.var()?;
        self.expect_punct(')')?;
        Ok(var)
    }

    fn tag(&mut self) -> PResult<String> {
        let at = self.here();
        let tag = self.string()?;
        if tag.is_empty() {
            return Ok(tag);
        }
        normalize_lang(&tag).map_err(|e| ParseError::new(at.0, at.1, e.to_string()))
    }

    fn var(&mut self) -> PResult<String> {
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(format!("expected variable, found {}", self.describe()))),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().cloned() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected string, found {}", self.describe()))),
        }
    }
}

fn typed(lexical: &str, datatype: &str) -> Term {
    if datatype == vocab::XSD_STRING {
        Term::literal(lexical)
    } else {
        Term::literal(format!("{lexical}^^<{datatype}>"))
    }
}
