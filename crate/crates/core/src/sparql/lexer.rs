use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Var(String),
    IriRef(String),
    PName(String, String),
    Word(String),
    Str(String),
    LangTag(String),
    Integer(String),
    Decimal(String),
    Punct(char),
    DoubleCaret,
}

#[derive(Debug, Clone)]
pub(super) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    Lexer { chars: text.chars().collect(), pos: 0, line: 1, column: 1 }.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(|&c| pred(c)) {
            out.push(c);
            self.bump();
        }
        out
    }

    fn run(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while self.bump().is_some_and(|c| c != '\n') {}
                } else {
                    break;
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else { return Ok(out) };
            let err = |m: String| ParseError::new(line, column, m);
            let tok = match c {
                '?' | '$' => {
                    self.bump();
                    let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                        return Err(err(format!("invalid variable name '{c}{name}'")));
                    }
                    Tok::Var(name)
                }
                '<' => {
                    self.bump();
                    let iri = self.take_while(|c| c != '>' && !c.is_whitespace() && c != '<');
                    if self.bump() != Some('>') {
                        return Err(err("unterminated IRI".to_string()));
                    }
                    Tok::IriRef(iri)
                }
                '"' | '\'' => Tok::Str(self.string(c).map_err(err)?),
                '@' => {
                    self.bump();
                    let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                    if tag.is_empty() {
                        return Err(err("expected language tag after '@'".to_string()));
                    }
                    Tok::LangTag(tag)
                }
                '^' if self.peek_at(1) == Some('^') => {
                    self.bump();
                    self.bump();
                    Tok::DoubleCaret
                }
                c if c.is_ascii_digit() => {
                    let mut n = self.take_while(|c| c.is_ascii_digit());
                    if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                        n.push('.');
                        n.push_str(&self.take_while(|c| c.is_ascii_digit()));
                        Tok::Decimal(n)
                    } else {
                        Tok::Integer(n)
                    }
                }
                c if c.is_alphabetic() || c == '_' || c == ':' => {
                    let prefix = self.take_while(is_name_char);
                    if self.peek() == Some(':') {
                        self.bump();
                        let mut local = String::new();
                        loop {
                            match self.peek() {
                                Some(c) if is_name_char(c) || c == ':' => {
                                    local.push(c);
                                    self.bump();
                                }
                                Some('.') if self.peek_at(1).is_some_and(is_name_char) => {
                                    local.push('.');
                                    self.bump();
                                }
                                _ => break,
                            }
                        }
                        Tok::PName(prefix, local)
                    } else {
                        Tok::Word(prefix)
                    }
                }
                '{' | '}' | '(' | ')' | '.' | ',' | ';' | '*' | '=' => {
                    self.bump();
                    Tok::Punct(c)
                }
                c => return Err(err(format!("unexpected character '{c}'"))),
            };
            out.push(Spanned { tok, line, column });
        }
    }

    fn string(&mut self, quote: char) -> Result<String, String> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err("unterminated string literal".to_string()),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('t') => out.push('\t'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('b') => out.push('\u{8}'),
                    Some('f') => out.push('\u{c}'),
                    Some('"') => out.push('"'),
                    Some('\'') => out.push('\''),
                    Some('\\') => out.push('\\'),
                    Some(u @ ('u' | 'U')) => {
                        let width = if u == 'u' { 4 } else { 8 };
                        let hex: String = (0..width).filter_map(|_| self.bump()).collect();
                        let c = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| format!("invalid unicode escape '\\{u}{hex}'"))?;
                        out.push(c);
                    }
                    _ => return Err("invalid escape sequence in string".to_string()),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
