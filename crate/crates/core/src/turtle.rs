//! Turtle and N-Triples reading and writing, plus snapshot files.
//!
//! The reader accepts the Turtle grammar without blank nodes or collections:
//! `@prefix`/`@base` (and the SPARQL-style `PREFIX`/`BASE`), prefixed names,
//! the `a` keyword, `;` and `,` lists, short and long string literals with
//! language tags or datatypes, numeric and boolean shorthands, and `#` comments.
//! N-Triples documents are read by the same parser.
//!
//! Datatyped literals are folded into plain literals whose value carries the
//! datatype, as in `"5"^^<...#integer>` becoming the value `5^^<...#integer>`.
//! `xsd:string` literals become plain literals.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, ParseError, Result};
use crate::model::{normalize_lang, Term, Triple};
use crate::store::TripleStore;
use crate::vocab::{self, STANDARD_PREFIXES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdfFormat {
    Turtle,
    NTriples,
}

impl RdfFormat {
    /// Guess from a file extension (`.ttl` or `.nt`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ttl" | "turtle" => Some(Self::Turtle),
            "nt" => Some(Self::NTriples),
            _ => None,
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            Self::Turtle => "text/turtle",
            Self::NTriples => "application/n-triples",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Turtle => "turtle",
            Self::NTriples => "ntriples",
        }
    }
}

impl FromStr for RdfFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "turtle" | "ttl" | "text/turtle" => Ok(Self::Turtle),
            "ntriples" | "n-triples" | "nt" | "application/n-triples" => Ok(Self::NTriples),
            other => Err(format!("unknown RDF format {other:?} (expected turtle or ntriples)")),
        }
    }
}

/// Parses a Turtle (or N-Triples) document into triples in document order.
///
/// Relative IRIs are resolved against `base`; without a base they are an error.
/// Nothing is returned on a syntax error.
pub fn parse_turtle(text: &str, base: Option<&str>) -> Result<Vec<Triple>, ParseError> {
    let mut parser = Parser::new(text, base);
    parser.document()?;
    Ok(parser.triples)
}

/// Parses a document in the given format.
pub fn parse(text: &str, format: RdfFormat, base: Option<&str>) -> Result<Vec<Triple>, ParseError> {
    match format {
        RdfFormat::Turtle | RdfFormat::NTriples => parse_turtle(text, base),
    }
}

pub fn serialize(store: &TripleStore, format: RdfFormat) -> String {
    match format {
        RdfFormat::Turtle => to_turtle(store, &[]),
        RdfFormat::NTriples => to_ntriples(store),
    }
}

/// One line per triple, sorted by the canonical encoding of (s, p, o).
pub fn to_ntriples(store: &TripleStore) -> String {
    let mut out = String::new();
    for t in store.iter() {
        let _ = writeln!(out, "{t}");
    }
    out
}

/// Turtle grouped by subject. The standard prefixes plus `extra_prefixes` are
/// declared and used wherever the local part is a plain name.
pub fn to_turtle(store: &TripleStore, extra_prefixes: &[(&str, &str)]) -> String {
    if store.is_empty() {
        return String::new();
    }
    let mut prefixes: Vec<(&str, &str)> = STANDARD_PREFIXES.to_vec();
    prefixes.extend_from_slice(extra_prefixes);
    prefixes.sort();
    prefixes.dedup_by(|a, b| a.0 == b.0);

    let mut out = String::new();
    for (name, ns) in &prefixes {
        let _ = writeln!(out, "@prefix {name}: <{ns}> .");
    }

    let render = |term: &Term| -> String {
        if let Some(iri) = term.as_iri() {
            // Longest namespace wins so nested namespaces abbreviate sensibly.
            let best = prefixes
                .iter()
                .filter(|(_, ns)| iri.starts_with(ns) && is_plain_local(&iri[ns.len()..]))
                .max_by_key(|(_, ns)| ns.len());
            if let Some((name, ns)) = best {
                return format!("{name}:{}", &iri[ns.len()..]);
            }
        }
        term.canonical()
    };

    let mut current_subject: Option<Term> = None;
    let mut current_predicate: Option<Term> = None;
    for t in store.iter() {
        if current_subject.as_ref() != Some(t.subject()) {
            if current_subject.is_some() {
                out.push_str(" .\n");
            }
            let _ = write!(out, "\n{}", render(t.subject()));
            current_subject = Some(t.subject().clone());
            current_predicate = None;
        }
        if current_predicate.as_ref() == Some(t.predicate()) {
            let _ = write!(out, " ,\n        {}", render(t.object()));
        } else {
            if current_predicate.is_some() {
                out.push_str(" ;");
            }
            let verb = if t.predicate().value() == vocab::RDF_TYPE { "a".to_string() } else { render(t.predicate()) };
            let _ = write!(out, "\n    {verb} {}", render(t.object()));
            current_predicate = Some(t.predicate().clone());
        }
    }
    out.push_str(" .\n");
    out
}

fn is_plain_local(local: &str) -> bool {
    let mut chars = local.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Writes the sorted N-Triples form of `store` to `path`, replacing any previous file.
pub fn save_snapshot(store: &TripleStore, path: &Path) -> Result<()> {
    let tmp = path.with_extension("nt.tmp");
    let write = || -> std::io::Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(to_ntriples(store).as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a snapshot written by [`save_snapshot`].
pub fn load_snapshot(path: &Path) -> Result<TripleStore> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let triples = parse_turtle(&text, None)?;
    Ok(triples.into_iter().collect())
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    base: Option<String>,
    prefixes: HashMap<String, String>,
    triples: Vec<Triple>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str, base: Option<&str>) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            base: base.map(str::to_string),
            prefixes: HashMap::new(),
            triples: Vec::new(),
        }
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        ParseError::new(line, column, message)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.pos, message)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> PResult<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    /// True if the input continues with `word` (ASCII, case-insensitive) followed by whitespace.
    fn at_keyword(&self, word: &str) -> bool {
        let n = word.chars().count();
        word.chars().enumerate().all(|(i, w)| self.peek_at(i).is_some_and(|c| c.eq_ignore_ascii_case(&w)))
            && self.peek_at(n).is_some_and(|c| c.is_whitespace() || c == '<')
    }

    fn document(&mut self) -> PResult<()> {
        loop {
            self.skip_ws();
            let Some(c) = self.peek() else { return Ok(()) };
            if c == '@' {
                self.at_directive()?;
            } else if self.at_keyword("PREFIX") {
                self.pos += 6;
                self.prefix_body()?;
            } else if self.at_keyword("BASE") {
                self.pos += 4;
                self.base_body()?;
            } else {
                self.triples_statement()?;
                self.expect('.')?;
            }
        }
    }

    fn at_directive(&mut self) -> PResult<()> {
        let start = self.pos;
        self.pos += 1;
        let word = self.take_while(|c| c.is_ascii_alphabetic());
        match word.as_str() {
            "prefix" => {
                self.prefix_body()?;
                self.expect('.')
            }
            "base" => {
                self.base_body()?;
                self.expect('.')
            }
            _ => Err(self.error_at(start, format!("unknown directive '@{word}'"))),
        }
    }

    fn prefix_body(&mut self) -> PResult<()> {
        self.skip_ws();
        let start = self.pos;
        let name = self.take_while(is_pn_char);
        if name.ends_with('.') || name.starts_with(|c: char| !c.is_alphabetic()) && !name.is_empty() {
            return Err(self.error_at(start, format!("invalid prefix name '{name}'")));
        }
        if self.peek() != Some(':') {
            return Err(self.error("expected ':' after prefix name"));
        }
        self.pos += 1;
        self.skip_ws();
        let iri = self.iriref()?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn base_body(&mut self) -> PResult<()> {
        self.skip_ws();
        let iri = self.iriref()?;
        self.base = Some(iri);
        Ok(())
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn triples_statement(&mut self) -> PResult<()> {
        self.skip_ws();
        let subject = self.subject()?;
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> PResult<Term> {
        match self.peek() {
            Some('<') => self.iri_term(),
            Some('_') if self.peek_at(1) == Some(':') => Err(self.error("blank nodes are not supported")),
            Some('[') => Err(self.error("blank nodes are not supported")),
            Some('(') => Err(self.error("collections are not supported")),
            Some('"') | Some('\'') => Err(self.error("a literal cannot be a subject")),
            Some(c) if is_pn_start(c) || c == ':' => self.prefixed_name(),
            Some(c) => Err(self.error(format!("unexpected '{c}' where a subject was expected"))),
            None => Err(self.error("unexpected end of input where a subject was expected")),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> PResult<()> {
        loop {
            self.skip_ws();
            let predicate = self.verb()?;
            loop {
                self.skip_ws();
                let object = self.object()?;
                let triple =
                    Triple::new(subject.clone(), predicate.clone(), object).map_err(|e| self.error(e.to_string()))?;
                self.triples.push(triple);
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            // Repeated or trailing semicolons are allowed.
            while self.peek() == Some(';') {
                self.pos += 1;
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> PResult<Term> {
        if self.peek() == Some('a')
            && self.peek_at(1).is_none_or(|c| c.is_whitespace() || matches!(c, '<' | '"' | '\''))
        {
            self.pos += 1;
            return Ok(Term::vocab(vocab::RDF_TYPE));
        }
        match self.peek() {
            Some('<') => self.iri_term(),
            Some(c) if is_pn_start(c) || c == ':' => self.prefixed_name(),
            Some('_') | Some('[') => Err(self.error("blank nodes are not supported")),
            Some(c) => Err(self.error(format!("unexpected '{c}' where a predicate was expected"))),
            None => Err(self.error("unexpected end of input where a predicate was expected")),
        }
    }

    fn object(&mut self) -> PResult<Term> {
        match self.peek() {
            Some('<') => self.iri_term(),
            Some('"') | Some('\'') => self.literal(),
            Some('_') if self.peek_at(1) == Some(':') => Err(self.error("blank nodes are not supported")),
            Some('[') => Err(self.error("blank nodes are not supported")),
            Some('(') => Err(self.error("collections are not supported")),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-' | '.') => self.numeric(),
            Some(_) if self.at_boolean() => self.boolean(),
            Some(c) if is_pn_start(c) || c == ':' => self.prefixed_name(),
            Some(c) => Err(self.error(format!("unexpected '{c}' where an object was expected"))),
            None => Err(self.error("unexpected end of input where an object was expected")),
        }
    }

    fn at_boolean(&self) -> bool {
        ["true", "false"].iter().any(|w| {
            let n = w.len();
            w.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
                && self.peek_at(n).is_none_or(|c| !is_pn_char(c) && c != ':')
        })
    }

    fn boolean(&mut self) -> PResult<Term> {
        let word = self.take_while(|c| c.is_ascii_alphabetic());
        Ok(typed_literal(&word, vocab::XSD_BOOLEAN))
    }

    fn numeric(&mut self) -> PResult<Term> {
        let start = self.pos;
        let mut text = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            text.push(c);
            self.pos += 1;
        }
        text.push_str(&self.take_while(|c| c.is_ascii_digit()));
        let mut datatype = vocab::XSD_INTEGER;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            text.push('.');
            text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            datatype = vocab::XSD_DECIMAL;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            let mut exp = String::from("e");
            self.pos += 1;
            if let Some(c @ ('+' | '-')) = self.peek() {
                exp.push(c);
                self.pos += 1;
            }
            let digits = self.take_while(|c| c.is_ascii_digit());
            if digits.is_empty() {
                self.pos = save;
            } else {
                text.push_str(&exp);
                text.push_str(&digits);
                datatype = vocab::XSD_DOUBLE;
            }
        }
        if !text.chars().any(|c| c.is_ascii_digit()) {
            return Err(self.error_at(start, "malformed numeric literal"));
        }
        Ok(typed_literal(&text, datatype))
    }

    fn literal(&mut self) -> PResult<Term> {
        let value = self.string()?;
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                let tag = normalize_lang(&tag).map_err(|e| self.error_at(start, e.to_string()))?;
                Ok(Term::lang_literal(value, &tag).expect("tag already normalized"))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.pos += 2;
                let datatype = match self.peek() {
                    Some('<') => self.iri_term()?,
                    _ => self.prefixed_name()?,
                };
                Ok(typed_literal(&value, datatype.value()))
            }
            _ => Ok(Term::literal(value)),
        }
    }

    fn string(&mut self) -> PResult<String> {
        let start = self.pos;
        let quote = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.pos += 2;
        }
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error_at(start, "unterminated string literal"));
            };
            match c {
                '\\' => out.push(self.escape()?),
                c if c == quote && !long => return Ok(out),
                c if c == quote && self.peek() == Some(quote) && self.peek_at(1) == Some(quote) => {
                    self.pos += 2;
                    return Ok(out);
                }
                '\n' | '\r' if !long => {
                    return Err(self.error_at(self.pos - 1, "line break in short string literal"));
                }
                c => out.push(c),
            }
        }
    }

    fn escape(&mut self) -> PResult<char> {
        let at = self.pos - 1;
        match self.bump() {
            Some('t') => Ok('\t'),
            Some('b') => Ok('\u{8}'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('f') => Ok('\u{c}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.hex_escape(4, at),
            Some('U') => self.hex_escape(8, at),
            _ => Err(self.error_at(at, "invalid escape sequence")),
        }
    }

    fn hex_escape(&mut self, width: usize, at: usize) -> PResult<char> {
        let digits: String = (0..width).filter_map(|_| self.bump()).collect();
        if digits.len() != width {
            return Err(self.error_at(at, "truncated unicode escape"));
        }
        u32::from_str_radix(&digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error_at(at, format!("invalid unicode escape '{digits}'")))
    }

    fn iri_term(&mut self) -> PResult<Term> {
        let start = self.pos;
        let iri = self.iriref()?;
        Term::iri(iri).map_err(|e| self.error_at(start, e.to_string()))
    }

    /// Reads `<...>` and resolves it against the base.
    fn iriref(&mut self) -> PResult<String> {
        let start = self.pos;
        if self.peek() != Some('<') {
            return Err(self.error("expected '<'"));
        }
        self.pos += 1;
        let mut raw = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error_at(start, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let at = self.pos - 1;
                    let c = match self.bump() {
                        Some('u') => self.hex_escape(4, at)?,
                        Some('U') => self.hex_escape(8, at)?,
                        _ => return Err(self.error_at(at, "invalid escape in IRI")),
                    };
                    raw.push(c);
                }
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.error_at(self.pos - 1, format!("invalid character {c:?} in IRI")));
                }
                Some(c) if (c as u32) < 0x20 => {
                    return Err(self.error_at(self.pos - 1, "control character in IRI"));
                }
                Some(c) => raw.push(c),
            }
        }
        self.resolve(&raw).map_err(|m| self.error_at(start, m))
    }

    fn resolve(&self, raw: &str) -> Result<String, String> {
        if has_scheme(raw) {
            return Ok(raw.to_string());
        }
        let Some(base) = &self.base else {
            return Err(format!("relative IRI <{raw}> without a base"));
        };
        if raw.is_empty() {
            return Ok(base.clone());
        }
        let base_url = url::Url::parse(base).map_err(|e| format!("invalid base IRI <{base}>: {e}"))?;
        base_url.join(raw).map(String::from).map_err(|e| format!("cannot resolve <{raw}> against <{base}>: {e}"))
    }

    fn prefixed_name(&mut self) -> PResult<Term> {
        let start = self.pos;
        let prefix = self.take_while(is_pn_char);
        if prefix.ends_with('.') {
            return Err(self.error_at(start, format!("invalid prefix '{prefix}'")));
        }
        if self.peek() != Some(':') {
            let word = if prefix.is_empty() { self.peek().map(String::from).unwrap_or_default() } else { prefix };
            return Err(self.error_at(start, format!("unexpected '{word}'")));
        }
        self.pos += 1;
        let Some(ns) = self.prefixes.get(&prefix).cloned() else {
            return Err(self.error_at(start, format!("undeclared prefix '{prefix}:'")));
        };
        let local = self.local_name()?;
        Term::iri(format!("{ns}{local}")).map_err(|e| self.error_at(start, e.to_string()))
    }

    fn local_name(&mut self) -> PResult<String> {
        let mut out = String::new();
        loop {
            match self.peek() {
                Some('\\') => {
                    let at = self.pos;
                    self.pos += 1;
                    match self.bump() {
                        Some(c) if "_~.-!$&'()*+,;=/?#@%".contains(c) => out.push(c),
                        _ => return Err(self.error_at(at, "invalid escape in local name")),
                    }
                }
                Some('%') => {
                    let at = self.pos;
                    let hex: String = (1..=2).filter_map(|i| self.peek_at(i)).collect();
                    if hex.len() != 2 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                        return Err(self.error_at(at, "invalid percent escape in local name"));
                    }
                    out.push('%');
                    out.push_str(&hex);
                    self.pos += 3;
                }
                // A dot is part of the name only when more name characters follow.
                Some('.') if self.peek_at(1).is_some_and(|c| is_pn_char(c) || c == ':') && !out.is_empty() => {
                    out.push('.');
                    self.pos += 1;
                }
                Some(c) if (is_pn_char(c) && c != '.') || c == ':' => {
                    out.push(c);
                    self.pos += 1;
                }
                _ => return Ok(out),
            }
        }
    }
}

fn has_scheme(iri: &str) -> bool {
    let mut chars = iri.chars();
    if !chars.next().is_some_and(|c| c.is_ascii_alphabetic()) {
        return false;
    }
    for c in chars {
        match c {
            ':' => return true,
            c if c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.') => {}
            _ => return false,
        }
    }
    false
}

fn is_pn_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c.is_ascii_digit()
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\u{B7}')
}

fn typed_literal(lexical: &str, datatype: &str) -> Term {
    if datatype == vocab::XSD_STRING {
        Term::literal(lexical)
    } else {
        Term::literal(format!("{lexical}^^<{datatype}>"))
    }
}
