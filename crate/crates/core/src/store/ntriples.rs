//! Line-oriented N-Triples subset used for persistence.

use super::{Iri, Term, Triple, XSD_INTEGER, XSD_STRING};

fn escape_literal(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
}

/// N-Triples form of a term: `<iri>`, `"text"` or `"n"^^<xsd:integer>`.
pub fn format_term(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.to_string(),
        Term::Str(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            escape_literal(s, &mut out);
            out.push('"');
            out
        }
        Term::Int(n) => format!("\"{n}\"^^<{XSD_INTEGER}>"),
    }
}

struct LineParser<'a> {
    rest: &'a str,
}

impl<'a> LineParser<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn iri(&mut self) -> Result<Iri, String> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected `<` at `{}`", preview(self.rest)))?;
        let end = body.find('>').ok_or("unterminated IRI")?;
        self.rest = &body[end + 1..];
        Iri::new(&body[..end]).map_err(|e| e.to_string())
    }

    fn literal(&mut self) -> Result<String, String> {
        let mut chars = self.rest[1..].char_indices();
        let mut out = String::new();
        loop {
            let (i, c) = chars.next().ok_or("unterminated literal")?;
            match c {
                '"' => {
                    self.rest = &self.rest[1 + i + 1..];
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    match e {
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        't' => out.push('\t'),
                        'u' | 'U' => {
                            let width = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..width)
                                .map(|_| chars.next().map(|(_, h)| h))
                                .collect::<Option<String>>()
                                .ok_or("short unicode escape")?;
                            let code = u32::from_str_radix(&hex, 16).map_err(|_| "bad unicode escape")?;
                            out.push(char::from_u32(code).ok_or("invalid code point")?);
                        }
                        other => return Err(format!("unknown escape `\\{other}`")),
                    }
                }
                _ => out.push(c),
            }
        }
    }

    fn object(&mut self) -> Result<Term, String> {
        self.skip_ws();
        if self.rest.starts_with('<') {
            return Ok(Term::Iri(self.iri()?));
        }
        if !self.rest.starts_with('"') {
            return Err(format!("expected an IRI or literal at `{}`", preview(self.rest)));
        }
        let lexical = self.literal()?;
        if let Some(after) = self.rest.strip_prefix("^^") {
            self.rest = after;
            let datatype = self.iri()?;
            return match datatype.as_str() {
                XSD_INTEGER => lexical
                    .parse::<i64>()
                    .map(Term::Int)
                    .map_err(|_| format!("`{lexical}` is not an integer")),
                XSD_STRING => Ok(Term::Str(lexical)),
                other => Err(format!("unsupported datatype <{other}>")),
            };
        }
        if self.rest.starts_with('@') {
            return Err("language-tagged literals are not supported".into());
        }
        Ok(Term::Str(lexical))
    }
}

fn preview(s: &str) -> &str {
    match s.char_indices().nth(20) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Parses one line; blank lines and `#` comments yield `None`.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut p = LineParser { rest: trimmed };
    let subject = p.iri()?;
    let predicate = p.iri()?;
    let object = p.object()?;
    p.skip_ws();
    if p.rest != "." {
        return Err(format!("expected ` .` at end of line, found `{}`", preview(p.rest)));
    }
    Ok(Some(Triple { subject, predicate, object }))
}
