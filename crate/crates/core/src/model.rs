//! RDF terms and triples.
//!
//! Terms order by their canonical N-Triples encoding (`<iri>`, `"literal"@lang`)
//! compared code point by code point. The comparison walks the encodings lazily
//! so sorting and index lookups never allocate.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI must not be empty")]
    EmptyIri,
    #[error("invalid character {1:?} in IRI {0:?}")]
    InvalidIri(String, char),
    #[error("invalid language tag {0:?}")]
    InvalidLang(String),
    #[error("triple subject must be an IRI, got {0}")]
    SubjectNotIri(Term),
    #[error("triple predicate must be an IRI, got {0}")]
    PredicateNotIri(Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Iri,
    Literal,
}

/// An RDF node: an IRI or a (possibly language-tagged) literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    kind: TermKind,
    value: String,
    lang: Option<String>,
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, TermError> {
        let value = value.into();
        validate_iri(&value)?;
        Ok(Self { kind: TermKind::Iri, value, lang: None })
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Self { kind: TermKind::Literal, value: value.into(), lang: None }
    }

    /// Language-tagged literal. The tag is lowercased before validation.
    pub fn lang_literal(value: impl Into<String>, lang: &str) -> Result<Self, TermError> {
        let lang = normalize_lang(lang)?;
        Ok(Self { kind: TermKind::Literal, value: value.into(), lang: Some(lang) })
    }

    /// IRI constructor for compile-time vocabulary constants.
    pub(crate) fn vocab(value: &'static str) -> Self {
        debug_assert!(validate_iri(value).is_ok());
        Self { kind: TermKind::Iri, value: value.to_string(), lang: None }
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn lang(&self) -> Option<&str> {
        self.lang.as_deref()
    }

    /// IRI value, or `None` for literals.
    pub fn as_iri(&self) -> Option<&str> {
        self.is_iri().then_some(self.value.as_str())
    }

    /// The canonical N-Triples encoding of this term.
    pub fn canonical(&self) -> String {
        self.canonical_chars().collect()
    }

    fn canonical_chars(&self) -> impl Iterator<Item = char> + '_ {
        let open = if self.is_iri() { '<' } else { '"' };
        std::iter::once(open).chain(self.canonical_tail(0))
    }

    /// Encoding of the value from byte offset `from` on, plus the closing
    /// delimiter and any language tag.
    fn canonical_tail(&self, from: usize) -> impl Iterator<Item = char> + '_ {
        let iri = self.is_iri();
        let close = if iri { '>' } else { '"' };
        let body = self.value[from..].chars().flat_map(move |c| if iri { Escape::iri(c) } else { Escape::literal(c) });
        let lang = self.lang.as_deref().into_iter().flat_map(|l| std::iter::once('@').chain(l.chars()));
        body.chain(std::iter::once(close)).chain(lang)
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.kind != other.kind {
            return self.canonical_chars().cmp(other.canonical_chars());
        }
        // Equal leading characters encode identically, so skip them.
        let mut common = self.value.bytes().zip(other.value.bytes()).take_while(|(a, b)| a == b).count();
        while !self.value.is_char_boundary(common) {
            common -= 1;
        }
        self.canonical_tail(common).cmp(other.canonical_tail(common))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use fmt::Write;
        self.canonical_chars().try_for_each(|c| f.write_char(c))
    }
}

/// Up to ten output characters for one escaped input character.
struct Escape {
    buf: [char; 10],
    pos: usize,
    len: usize,
}

impl Escape {
    fn one(c: char) -> Self {
        let mut buf = ['\0'; 10];
        buf[0] = c;
        Self { buf, pos: 0, len: 1 }
    }

    fn two(c: char) -> Self {
        let mut buf = ['\0'; 10];
        buf[0] = '\\';
        buf[1] = c;
        Self { buf, pos: 0, len: 2 }
    }

    fn unicode(c: char) -> Self {
        let mut buf = ['\0'; 10];
        let code = c as u32;
        let (marker, width) = if code <= 0xFFFF { ('u', 4) } else { ('U', 8) };
        buf[0] = '\\';
        buf[1] = marker;
        for i in 0..width {
            let nibble = (code >> (4 * (width - 1 - i))) & 0xF;
            buf[2 + i] = char::from_digit(nibble, 16).unwrap().to_ascii_uppercase();
        }
        Self { buf, pos: 0, len: 2 + width }
    }

    fn literal(c: char) -> Self {
        match c {
            '"' => Self::two('"'),
            '\\' => Self::two('\\'),
            '\n' => Self::two('n'),
            '\r' => Self::two('r'),
            '\t' => Self::two('t'),
            c if (c as u32) < 0x20 || c == '\u{7F}' => Self::unicode(c),
            c => Self::one(c),
        }
    }

    fn iri(c: char) -> Self {
        if iri_needs_escape(c) {
            Self::unicode(c)
        } else {
            Self::one(c)
        }
    }
}

impl Iterator for Escape {
    type Item = char;

    fn next(&mut self) -> Option<char> {
        (self.pos < self.len).then(|| {
            self.pos += 1;
            self.buf[self.pos - 1]
        })
    }
}

/// Characters that are legal in a stored IRI but must be `\u`-escaped in IRIREF syntax.
fn iri_needs_escape(c: char) -> bool {
    matches!(c, '"' | '{' | '}' | '|' | '^' | '`' | '\\') || (c as u32) < 0x20 || c == '\u{7F}'
}

fn validate_iri(value: &str) -> Result<(), TermError> {
    if value.is_empty() {
        return Err(TermError::EmptyIri);
    }
    match value.chars().find(|&c| c.is_whitespace() || c == '<' || c == '>') {
        Some(c) => Err(TermError::InvalidIri(value.to_string(), c)),
        None => Ok(()),
    }
}

/// Lowercases and checks a tag against `[a-z]{2}(-[a-z0-9]{2,8})*`.
pub fn normalize_lang(tag: &str) -> Result<String, TermError> {
    let lower = tag.to_ascii_lowercase();
    let mut parts = lower.split('-');
    let primary_ok = parts.next().is_some_and(|p| p.len() == 2 && p.bytes().all(|b| b.is_ascii_lowercase()));
    let rest_ok =
        parts.all(|p| (2..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
    if primary_ok && rest_ok {
        Ok(lower)
    } else {
        Err(TermError::InvalidLang(tag.to_string()))
    }
}

/// A (subject, predicate, object) statement. Subject and predicate are IRIs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        if !subject.is_iri() {
            return Err(TermError::SubjectNotIri(subject));
        }
        if !predicate.is_iri() {
            return Err(TermError::PredicateNotIri(predicate));
        }
        Ok(Self { subject, predicate, object })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Term, Term) {
        (self.subject, self.predicate, self.object)
    }

    /// One N-Triples line without the trailing newline.
    pub fn to_ntriples(&self) -> String {
        format!("{} {} {} .", self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
