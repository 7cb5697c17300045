//! Recursive-descent parser for the basic-graph-pattern query subset.

use crate::store::{Iri, PrefixMap, Slot, Term, TriplePattern, XSD_INTEGER, XSD_STRING};

use super::{Order, Query, QueryError, Select};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    IriRef(String),
    PName(String, String),
    Var(String),
    Str(String),
    Int(i64),
    Word(String),
    Punct(char),
    DoubleCaret,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '%' | ':')
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize, message: impl Into<String>) -> QueryError {
        QueryError::syntax(self.src, at, message)
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let rest = &self.src[self.pos..];
        let n = rest.find(|c| !f(c)).unwrap_or(rest.len());
        self.pos += n;
        &rest[..n]
    }

    fn next(&mut self) -> Result<(usize, Tok), QueryError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((start, Tok::Eof));
        };
        let tok = match c {
            '<' => {
                self.pos += 1;
                let body = self.take_while(|c| c != '>' && !c.is_whitespace());
                if self.peek_char() != Some('>') {
                    return Err(self.err(start, "unterminated IRI"));
                }
                self.pos += 1;
                Tok::IriRef(body.to_string())
            }
            '?' | '$' => {
                self.pos += 1;
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name.is_empty() {
                    return Err(self.err(start, "empty variable name"));
                }
                Tok::Var(name.to_string())
            }
            '"' | '\'' => Tok::Str(self.string(c)?),
            '^' if self.src[self.pos..].starts_with("^^") => {
                self.pos += 2;
                Tok::DoubleCaret
            }
            '{' | '}' | '[' | ']' | '(' | ')' | '.' | ',' | ';' | '*' => {
                self.pos += c.len_utf8();
                Tok::Punct(c)
            }
            c if c.is_ascii_digit() || ((c == '-' || c == '+') && self.next_is_digit()) => {
                self.pos += 1;
                self.take_while(|c| c.is_ascii_digit());
                let text = &self.src[start..self.pos];
                Tok::Int(text.parse().map_err(|_| self.err(start, "integer out of range"))?)
            }
            c if c.is_alphabetic() || c == '_' || c == ':' => {
                let word = self.take_while(|c| c.is_alphanumeric() || c == '_' || c == '-');
                if self.peek_char() == Some(':') {
                    self.pos += 1;
                    let mut local = self.take_while(is_pn_char);
                    // a trailing '.' terminates the statement
                    while let Some(stripped) = local.strip_suffix('.') {
                        local = stripped;
                        self.pos -= 1;
                    }
                    Tok::PName(word.to_string(), local.to_string())
                } else {
                    Tok::Word(word.to_string())
                }
            }
            other => return Err(self.err(start, format!("unexpected character {other:?}"))),
        };
        Ok((start, tok))
    }

    fn next_is_digit(&self) -> bool {
        self.src[self.pos..].chars().nth(1).is_some_and(|c| c.is_ascii_digit())
    }

    fn string(&mut self, quote: char) -> Result<String, QueryError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                c if c == quote => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or_else(|| self.err(start, "unterminated string"))?;
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '"' | '\'' | '\\' => e,
                        other => {
                            return Err(self.err(self.pos + i, format!("unknown escape \\{other}")))
                        }
                    });
                }
                c => out.push(c),
            }
        }
        Err(self.err(start, "unterminated string"))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    prefixes: PrefixMap,
    patterns: Vec<TriplePattern>,
    fresh: usize,
    vars_seen: Vec<String>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, base: &PrefixMap) -> Result<Self, QueryError> {
        let mut lex = Lexer { src, pos: 0 };
        let (at, tok) = lex.next()?;
        Ok(Parser {
            lex,
            tok,
            at,
            prefixes: base.clone(),
            patterns: Vec::new(),
            fresh: 0,
            vars_seen: Vec::new(),
        })
    }

    fn bump(&mut self) -> Result<Tok, QueryError> {
        let (at, tok) = self.lex.next()?;
        self.at = at;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn err(&self, message: impl Into<String>) -> QueryError {
        self.lex.err(self.at, message)
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), QueryError> {
        if !self.is_word(kw) {
            return Err(self.err(format!("expected {kw}")));
        }
        self.bump()?;
        Ok(())
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
        if self.tok != Tok::Punct(c) {
            return Err(self.err(format!("expected '{c}'")));
        }
        self.bump()?;
        Ok(())
    }

    fn var(&mut self, name: String) -> Result<String, QueryError> {
        if is_fresh(&name) {
            return Err(self.err(format!("variable ?{name} is reserved")));
        }
        if !self.vars_seen.contains(&name) {
            self.vars_seen.push(name.clone());
        }
        Ok(name)
    }

    fn expect_var(&mut self) -> Result<String, QueryError> {
        let at = self.at;
        match self.bump()? {
            Tok::Var(v) => Ok(v),
            _ => Err(self.lex.err(at, "expected variable")),
        }
    }

    fn resolve_pname(&self, prefix: &str, local: &str) -> Result<Iri, QueryError> {
        match self.prefixes.expand(prefix, local) {
            Some(Ok(iri)) => Ok(iri),
            Some(Err(_)) => Err(self.err(format!("invalid IRI {prefix}:{local}"))),
            None => Err(QueryError::UnknownPrefix(prefix.to_string())),
        }
    }

    fn iri_ref(&self, body: &str) -> Result<Iri, QueryError> {
        Iri::new(body).map_err(|_| self.err(format!("invalid IRI <{body}>")))
    }

    fn parse(mut self) -> Result<Query, QueryError> {
        while self.is_word("PREFIX") {
            self.bump()?;
            let Tok::PName(name, local) = self.bump()? else {
                return Err(self.err("expected prefix name"));
            };
            if !local.is_empty() {
                return Err(self.err("expected `name:` in PREFIX"));
            }
            let Tok::IriRef(body) = self.bump()? else {
                return Err(self.err("expected <iri> in PREFIX"));
            };
            self.iri_ref(&body)?;
            self.prefixes.insert(name, body);
        }

        self.expect_word("SELECT")?;
        let mut select_at = Vec::new();
        let select = if self.tok == Tok::Punct('*') {
            self.bump()?;
            Select::All
        } else {
            let mut vars = Vec::new();
            while let Tok::Var(v) = &self.tok {
                let v = v.clone();
                if is_fresh(&v) {
                    return Err(self.err(format!("variable ?{v} is reserved")));
                }
                select_at.push(self.at);
                vars.push(v);
                self.bump()?;
            }
            if vars.is_empty() {
                return Err(self.err("expected '*' or variables after SELECT"));
            }
            Select::Vars(vars)
        };

        if self.is_word("WHERE") {
            self.bump()?;
        }
        self.expect_punct('{')?;
        let mut statements = 0;
        loop {
            match &self.tok {
                Tok::Punct('}') => break,
                Tok::Punct('.') => {
                    self.bump()?;
                }
                Tok::Eof => return Err(self.err("missing '}'")),
                _ => {
                    let subject = self.subject()?;
                    self.property_list(&subject, false)?;
                    statements += 1;
                    match &self.tok {
                        Tok::Punct('.') | Tok::Punct('}') => {}
                        _ => return Err(self.err("expected '.' or '}'")),
                    }
                }
            }
        }
        self.expect_punct('}')?;

        let mut order_by = None;
        if self.is_word("ORDER") {
            self.bump()?;
            self.expect_word("BY")?;
            let order = if self.is_word("ASC") {
                Some(Order::Asc)
            } else if self.is_word("DESC") {
                Some(Order::Desc)
            } else {
                None
            };
            let var = match order {
                Some(o) => {
                    self.bump()?;
                    self.expect_punct('(')?;
                    let v = self.expect_var()?;
                    self.expect_punct(')')?;
                    (v, o)
                }
                None => (self.expect_var()?, Order::Asc),
            };
            order_by = Some(var);
        }
        if self.tok != Tok::Eof {
            return Err(self.err("unexpected input after query"));
        }

        if let Select::Vars(vars) = &select {
            for (v, at) in vars.iter().zip(select_at) {
                if !self.vars_seen.contains(v) {
                    return Err(self
                        .lex
                        .err(at, format!("selected variable ?{v} does not occur in WHERE")));
                }
            }
        }

        Ok(Query {
            prefixes: self.prefixes,
            select,
            patterns: self.patterns,
            order_by,
            statements,
            variables: self.vars_seen,
        })
    }

    fn fresh_var(&mut self) -> Slot {
        let v = format!("_b{}", self.fresh);
        self.fresh += 1;
        Slot::Var(v)
    }

    fn subject(&mut self) -> Result<Slot, QueryError> {
        let at = self.at;
        match self.bump()? {
            Tok::Var(v) => Ok(Slot::Var(self.var(v)?)),
            Tok::IriRef(b) => Ok(Slot::Term(Term::Iri(self.iri_ref(&b)?))),
            Tok::PName(p, l) => Ok(Slot::Term(Term::Iri(self.resolve_pname(&p, &l)?))),
            Tok::Punct('[') => self.blank(),
            _ => Err(self.lex.err(at, "expected subject")),
        }
    }

    /// Called after '['; returns the fresh variable standing for the node.
    fn blank(&mut self) -> Result<Slot, QueryError> {
        let node = self.fresh_var();
        if self.tok != Tok::Punct(']') {
            self.property_list(&node, true)?;
        }
        self.expect_punct(']')?;
        Ok(node)
    }

    fn verb(&mut self) -> Result<Slot, QueryError> {
        if matches!(&self.tok, Tok::Word(w) if w == "a") {
            self.bump()?;
            return Ok(Slot::Term(Term::Iri(Iri::new(RDF_TYPE).expect("valid"))));
        }
        let at = self.at;
        match self.bump()? {
            Tok::Var(v) => Ok(Slot::Var(self.var(v)?)),
            Tok::IriRef(b) => Ok(Slot::Term(Term::Iri(self.iri_ref(&b)?))),
            Tok::PName(p, l) => Ok(Slot::Term(Term::Iri(self.resolve_pname(&p, &l)?))),
            _ => Err(self.lex.err(at, "expected predicate")),
        }
    }

    fn object(&mut self) -> Result<Slot, QueryError> {
        let at = self.at;
        match self.bump()? {
            Tok::Var(v) => Ok(Slot::Var(self.var(v)?)),
            Tok::IriRef(b) => Ok(Slot::Term(Term::Iri(self.iri_ref(&b)?))),
            Tok::PName(p, l) => Ok(Slot::Term(Term::Iri(self.resolve_pname(&p, &l)?))),
            Tok::Int(n) => Ok(Slot::Term(Term::Int(n))),
            Tok::Str(s) => {
                if self.tok != Tok::DoubleCaret {
                    return Ok(Slot::Term(Term::Str(s)));
                }
                self.bump()?;
                let dt = match self.bump()? {
                    Tok::IriRef(b) => self.iri_ref(&b)?,
                    Tok::PName(p, l) => self.resolve_pname(&p, &l)?,
                    _ => return Err(self.err("expected datatype IRI")),
                };
                match dt.as_str() {
                    XSD_STRING => Ok(Slot::Term(Term::Str(s))),
                    XSD_INTEGER => s
                        .trim()
                        .parse()
                        .map(|n| Slot::Term(Term::Int(n)))
                        .map_err(|_| self.err(format!("invalid integer literal {s:?}"))),
                    other => Err(self.err(format!("unsupported datatype <{other}>"))),
                }
            }
            Tok::Punct('[') => self.blank(),
            _ => Err(self.lex.err(at, "expected object")),
        }
    }

    /// Predicate-object pairs sharing `subject`. Outside brackets ';'
    /// separates pairs and ',' separates objects; inside brackets both
    /// separate pairs.
    fn property_list(&mut self, subject: &Slot, bracketed: bool) -> Result<(), QueryError> {
        loop {
            let verb = self.verb()?;
            loop {
                let object = self.object()?;
                self.patterns
                    .push(TriplePattern::new(subject.clone(), verb.clone(), object));
                if !bracketed && self.tok == Tok::Punct(',') {
                    self.bump()?;
                    continue;
                }
                break;
            }
            let sep = matches!(self.tok, Tok::Punct(';')) || (bracketed && self.tok == Tok::Punct(','));
            if !sep {
                return Ok(());
            }
            self.bump()?;
            // tolerate a dangling ';'
            if matches!(self.tok, Tok::Punct('.') | Tok::Punct(']') | Tok::Punct('}')) {
                return Ok(());
            }
        }
    }
}

pub(super) fn is_fresh(name: &str) -> bool {
    name.strip_prefix("_b")
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

pub(super) fn parse(text: &str, base: &PrefixMap) -> Result<Query, QueryError> {
    Parser::new(text, base)?.parse()
}
