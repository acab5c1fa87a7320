//! Reader for the grammar-source format.
//!
//! ```text
//! ; comment to end of line
//! name := parent & other-parent & [ PATH.TO.FEATURE value, FEATURE #tag, ... ].
//! "quoted orth" := lextype & [ ... ].
//! %suffix (mu n) (bu n)
//! %weight 2
//! ```
//!
//! Lists may be written `< a, b >` (ending in `null`) and difference lists
//! `<! a, b !>`; both expand to `cons`/`FIRST`/`REST` structures.
//!
//! Annotation lines (`%...`) attach to the definition that follows them.
//! Feature names are case-insensitive and normalised to upper case; type
//! names are case-sensitive.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// One conjunct of a value description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Type(String),
    Str(String),
    Tag(String),
    Avm(Vec<(Vec<String>, Conj)>),
    List(Vec<Conj>),
    DiffList(Vec<Conj>),
}

/// `term & term & ...`
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Conj(pub Vec<Term>);

impl Conj {
    /// Type names appearing directly in the conjunction.
    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|t| match t {
            Term::Type(s) => Some(s.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// Ordered `(match replacement)` suffix rewrites; `*` matches the empty string.
    Suffix(Vec<(String, String)>),
    Prefix(Vec<(String, String)>),
    Weight(i32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub body: Conj,
    pub annotations: Vec<Annotation>,
    pub line: usize,
    pub col: usize,
}

impl Definition {
    pub fn parents(&self) -> Vec<&str> {
        self.body.type_names().collect()
    }

    pub fn weight(&self) -> i32 {
        self.annotations
            .iter()
            .find_map(|a| match a {
                Annotation::Weight(w) => Some(*w),
                _ => None,
            })
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Tag(String),
    Define,
    Amp,
    LBrack,
    RBrack,
    Comma,
    Dot,
    End,
    LAngle,
    RAngle,
    LDiff,
    RDiff,
    Annot(Annotation),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Tag(s) => write!(f, "#{s}"),
            Tok::Define => f.write_str("`:=`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("path `.`"),
            Tok::End => f.write_str("`.`"),
            Tok::LAngle => f.write_str("`<`"),
            Tok::RAngle => f.write_str("`>`"),
            Tok::LDiff => f.write_str("`<!`"),
            Tok::RDiff => f.write_str("`!>`"),
            Tok::Annot(_) => f.write_str("annotation"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '_' | '*' | '+' | '\'' | '/')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
            at_line_start: true,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.at_line_start = true;
        } else {
            self.col += 1;
            if !c.is_whitespace() {
                self.at_line_start = false;
            }
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let (line, col) = (self.line, self.col);
            if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '%' && self.at_line_start {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                let ann = parse_annotation(&text).map_err(|m| ParseError { line, col, msg: m })?;
                out.push((Tok::Annot(ann), line, col));
                continue;
            }
            let tok = match c {
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Define
                    } else {
                        return Err(self.err("expected `:=`"));
                    }
                }
                '&' => {
                    self.bump();
                    Tok::Amp
                }
                '<' => {
                    self.bump();
                    if self.chars.peek() == Some(&'!') {
                        self.bump();
                        Tok::LDiff
                    } else {
                        Tok::LAngle
                    }
                }
                '>' => {
                    self.bump();
                    Tok::RAngle
                }
                '!' => {
                    self.bump();
                    if self.chars.peek() == Some(&'>') {
                        self.bump();
                        Tok::RDiff
                    } else {
                        return Err(self.err("expected `!>`"));
                    }
                }
                '[' => {
                    self.bump();
                    Tok::LBrack
                }
                ']' => {
                    self.bump();
                    Tok::RBrack
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '.' => {
                    self.bump();
                    match self.chars.peek() {
                        Some(&n) if is_ident_char(n) => Tok::Dot,
                        _ => Tok::End,
                    }
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(ParseError {
                                    line,
                                    col,
                                    msg: "unterminated string".into(),
                                })
                            }
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some(e) => s.push(e),
                                None => return Err(self.err("unterminated escape")),
                            },
                            Some(ch) => s.push(ch),
                        }
                    }
                    Tok::Str(s)
                }
                '#' => {
                    self.bump();
                    let mut s = String::new();
                    while let Some(&n) = self.chars.peek() {
                        if !is_ident_char(n) {
                            break;
                        }
                        s.push(n);
                        self.bump();
                    }
                    if s.is_empty() {
                        return Err(self.err("empty coreference tag"));
                    }
                    Tok::Tag(s)
                }
                c if is_ident_char(c) => {
                    let mut s = String::new();
                    while let Some(&n) = self.chars.peek() {
                        if !is_ident_char(n) {
                            break;
                        }
                        s.push(n);
                        self.bump();
                    }
                    Tok::Ident(s)
                }
                other => return Err(self.err(format!("unexpected character {other:?}"))),
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

fn parse_annotation(text: &str) -> Result<Annotation, String> {
    let text = text.trim_start_matches('%');
    let (kw, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    match kw {
        "suffix" | "prefix" => {
            let mut pairs = Vec::new();
            let mut rest = rest.trim();
            while !rest.is_empty() {
                let Some(stripped) = rest.strip_prefix('(') else {
                    return Err(format!("expected `(` in %{kw} annotation"));
                };
                let Some(close) = stripped.find(')') else {
                    return Err(format!("unclosed `(` in %{kw} annotation"));
                };
                let inner: Vec<&str> = stripped[..close].split_whitespace().collect();
                if inner.len() != 2 {
                    return Err(format!("%{kw} pattern needs exactly two parts"));
                }
                let norm = |s: &str| if s == "*" { String::new() } else { s.to_string() };
                pairs.push((norm(inner[0]), norm(inner[1])));
                rest = stripped[close + 1..].trim_start();
            }
            if pairs.is_empty() {
                return Err(format!("%{kw} annotation without patterns"));
            }
            Ok(if kw == "suffix" {
                Annotation::Suffix(pairs)
            } else {
                Annotation::Prefix(pairs)
            })
        }
        "weight" => rest
            .trim()
            .parse::<i32>()
            .map(Annotation::Weight)
            .map_err(|_| format!("bad %weight value {:?}", rest.trim())),
        other => Err(format!("unknown annotation %{other}")),
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.1, t.2))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {want}, found {t}"))),
            None => Err(self.err(format!("expected {want}, found end of input"))),
        }
    }

    fn definitions(&mut self) -> Result<Vec<Definition>, ParseError> {
        let mut defs = Vec::new();
        let mut pending = Vec::new();
        while let Some(tok) = self.peek().cloned() {
            match tok {
                Tok::Annot(a) => {
                    pending.push(a);
                    self.pos += 1;
                }
                Tok::Ident(name) | Tok::Str(name) => {
                    let (line, col) = self.here();
                    self.pos += 1;
                    self.expect(&Tok::Define)?;
                    let body = self.conj()?;
                    self.expect(&Tok::End)?;
                    defs.push(Definition {
                        name,
                        body,
                        annotations: std::mem::take(&mut pending),
                        line,
                        col,
                    });
                }
                other => return Err(self.err(format!("expected a definition, found {other}"))),
            }
        }
        if !pending.is_empty() {
            return Err(self.err("annotation not followed by a definition"));
        }
        Ok(defs)
    }

    fn conj(&mut self) -> Result<Conj, ParseError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(Conj(terms))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(Term::Type(s)),
            Some(Tok::Str(s)) => Ok(Term::Str(s)),
            Some(Tok::Tag(s)) => Ok(Term::Tag(s)),
            Some(Tok::LBrack) => {
                let mut feats = Vec::new();
                if self.peek() == Some(&Tok::RBrack) {
                    self.pos += 1;
                    return Ok(Term::Avm(feats));
                }
                loop {
                    let path = self.path()?;
                    let value = self.conj()?;
                    feats.push((path, value));
                    match self.next() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RBrack) => break,
                        _ => {
                            self.pos -= 1;
                            return Err(self.err("expected `,` or `]`"));
                        }
                    }
                }
                Ok(Term::Avm(feats))
            }
            Some(open @ (Tok::LAngle | Tok::LDiff)) => {
                let close = if open == Tok::LAngle { Tok::RAngle } else { Tok::RDiff };
                let mut items = Vec::new();
                if self.peek() != Some(&close) {
                    loop {
                        items.push(self.conj()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(&close)?;
                Ok(if open == Tok::LAngle {
                    Term::List(items)
                } else {
                    Term::DiffList(items)
                })
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected a value, found {t}")))
            }
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn path(&mut self) -> Result<Vec<String>, ParseError> {
        let mut path = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Ident(f)) => path.push(f.to_uppercase()),
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected a feature name"));
                }
            }
            if self.peek() == Some(&Tok::Dot) {
                self.pos += 1;
            } else {
                return Ok(path);
            }
        }
    }
}

/// Parse a grammar-source text into its definitions.
pub fn parse_source(src: &str) -> Result<Vec<Definition>, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    Parser { toks, pos: 0 }.definitions()
}

/// Parse a single value description such as `[ A #1, B #1 ]`.
pub fn parse_conj(src: &str) -> Result<Conj, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let c = p.conj()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input after value"));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_definition_with_paths_and_tags() {
        let defs =
            parse_source("; types\nhead-comp := phrase & [ synsem.local.head #h, HD-DTR.SYNSEM.LOCAL.HEAD #h ].")
                .unwrap();
        assert_eq!(defs.len(), 1);
        let d = &defs[0];
        assert_eq!(d.name, "head-comp");
        assert_eq!(d.parents(), vec!["phrase"]);
        let Term::Avm(feats) = &d.body.0[1] else { panic!() };
        assert_eq!(feats[0].0, vec!["SYNSEM", "LOCAL", "HEAD"]);
        assert_eq!(feats[0].1, Conj(vec![Term::Tag("h".into())]));
    }

    #[test]
    fn annotations_attach_to_next_definition() {
        let defs = parse_source("%suffix (mu n) (bu n) (* chatta)\n%weight -2\nnd-rule := lex-rule.\nx := y.").unwrap();
        assert_eq!(
            defs[0].annotations[0],
            Annotation::Suffix(vec![
                ("mu".into(), "n".into()),
                ("bu".into(), "n".into()),
                ("".into(), "chatta".into())
            ])
        );
        assert_eq!(defs[0].weight(), -2);
        assert!(defs[1].annotations.is_empty());
    }

    #[test]
    fn quoted_names_and_strings() {
        let defs = parse_source("\"\\\"\" := quote-le & [ PHON \"a;b\" ].").unwrap();
        assert_eq!(defs[0].name, "\"");
        let Term::Avm(f) = &defs[0].body.0[1] else { panic!() };
        assert_eq!(f[0].1 .0[0], Term::Str("a;b".into()));
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_source("a := b.\nc := [ X ].").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("expected a value"), "{err}");
    }

    #[test]
    fn list_sugar() {
        let c = parse_conj("[ RELS <! [ PRED \"a\" ], #x !>, L < > ]").unwrap();
        let Term::Avm(f) = &c.0[0] else { panic!() };
        assert!(matches!(&f[0].1 .0[0], Term::DiffList(items) if items.len() == 2));
        assert!(matches!(&f[1].1 .0[0], Term::List(items) if items.is_empty()));
    }

    #[test]
    fn tag_with_conjunction() {
        let c = parse_conj("[ LAST #d & [ FIRST x ] ]").unwrap();
        let Term::Avm(f) = &c.0[0] else { panic!() };
        assert_eq!(f[0].1 .0.len(), 2);
    }
}
