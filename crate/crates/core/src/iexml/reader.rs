use std::collections::BTreeMap;

use super::{parse_concept_id, AnnotatedDocument, Annotation, IeXmlError, Location, Span};
use crate::group::SemanticGroup;

/// Resolves the body of a character or entity reference (`amp`, `#10`, `#x41`).
pub(super) fn decode_entity(body: &str) -> Option<char> {
    match body {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        _ => {
            let num = body.strip_prefix('#')?;
            let code = match num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse::<u32>().ok()?,
            };
            char::from_u32(code)
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

type Attrs = BTreeMap<String, String>;

enum Tag {
    Open { name: String, attrs: Attrs, empty: bool },
    Close(String),
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn location_at(&self, pos: usize) -> Location {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        Location {
            line,
            column: before[line_start..].chars().count() + 1,
        }
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> IeXmlError {
        IeXmlError::Xml {
            location: self.location_at(pos),
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> IeXmlError {
        self.error_at(self.pos, message)
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    /// Skips whitespace, comments and processing instructions.
    fn skip_misc(&mut self) -> Result<(), IeXmlError> {
        loop {
            self.skip_ws();
            if self.rest().starts_with("<!--") {
                self.skip_comment()?;
            } else if self.rest().starts_with("<?") {
                let start = self.pos;
                match self.rest().find("?>") {
                    Some(i) => self.pos += i + 2,
                    None => return Err(self.error_at(start, "unterminated processing instruction")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn skip_comment(&mut self) -> Result<(), IeXmlError> {
        let start = self.pos;
        match self.rest()[4..].find("-->") {
            Some(i) => {
                self.pos += 4 + i + 3;
                Ok(())
            }
            None => Err(self.error_at(start, "unterminated comment")),
        }
    }

    fn name(&mut self) -> Result<String, IeXmlError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            let ok = c.is_alphanumeric()
                || c == '_'
                || c == ':'
                || (self.pos > start && (c == '-' || c == '.'));
            if !ok {
                break;
            }
            self.bump();
        }
        if self.pos == start {
            return Err(self.error("expected a name"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn entity(&mut self) -> Result<char, IeXmlError> {
        let start = self.pos;
        self.bump();
        let end = self
            .rest()
            .find(';')
            .filter(|&i| i <= 10)
            .ok_or_else(|| self.error_at(start, "unterminated character reference"))?;
        let body = &self.rest()[..end];
        let c = decode_entity(body)
            .ok_or_else(|| self.error_at(start, format!("unknown reference `&{body};`")))?;
        self.pos += end + 1;
        Ok(c)
    }

    fn attr_value(&mut self) -> Result<String, IeXmlError> {
        let quote = match self.bump() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.error("expected a quoted attribute value")),
        };
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated attribute value")),
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(value);
                }
                Some('<') => return Err(self.error("`<` in attribute value")),
                Some('&') => value.push(self.entity()?),
                Some(c) => {
                    self.bump();
                    value.push(c);
                }
            }
        }
    }

    /// Parses a tag starting at `<` (not a comment).
    fn tag(&mut self) -> Result<Tag, IeXmlError> {
        let start = self.pos;
        self.bump();
        if self.eat("/") {
            let name = self.name()?;
            self.skip_ws();
            if !self.eat(">") {
                return Err(self.error("expected `>`"));
            }
            return Ok(Tag::Close(name));
        }
        let name = self.name()?;
        let mut attrs = Attrs::new();
        loop {
            let had_ws = self.peek().is_some_and(char::is_whitespace);
            self.skip_ws();
            if self.eat("/>") {
                return Ok(Tag::Open { name, attrs, empty: true });
            }
            if self.eat(">") {
                return Ok(Tag::Open { name, attrs, empty: false });
            }
            if self.peek().is_none() {
                return Err(self.error_at(start, format!("unterminated tag `<{name}`")));
            }
            if !had_ws {
                return Err(self.error("expected whitespace between attributes"));
            }
            let attr_pos = self.pos;
            let key = self.name()?;
            self.skip_ws();
            if !self.eat("=") {
                return Err(self.error("expected `=`"));
            }
            self.skip_ws();
            let value = self.attr_value()?;
            if attrs.insert(key.clone(), value).is_some() {
                return Err(self.error_at(attr_pos, format!("duplicate attribute `{key}`")));
            }
        }
    }

    /// Character data up to the next `<`; returns the decoded text.
    fn text(&mut self) -> Result<String, IeXmlError> {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            match c {
                '<' => break,
                '&' => out.push(self.entity()?),
                _ => {
                    self.bump();
                    out.push(c);
                }
            }
        }
        Ok(out)
    }

    fn expect_close(&mut self, name: &str) -> Result<(), IeXmlError> {
        let pos = self.pos;
        match self.tag()? {
            Tag::Close(n) if n == name => Ok(()),
            _ => Err(self.error_at(pos, format!("expected `</{name}>`"))),
        }
    }
}

struct OpenEntity {
    index: usize,
    raw_start: usize,
    text_start: usize,
}

fn parse_sentence(
    cur: &mut Cursor<'_>,
    sentence_index: usize,
    annotations: &mut Vec<Annotation>,
) -> Result<String, IeXmlError> {
    let content_start = cur.pos;
    let mut raw_cp = 0usize;
    let mut plain: Vec<char> = Vec::new();
    let mut entities: Vec<OpenEntity> = Vec::new();
    let mut other: Vec<String> = Vec::new();

    loop {
        let here = cur.pos;
        match cur.peek() {
            None => return Err(cur.error_at(content_start, "unterminated sentence")),
            Some('<') if cur.rest().starts_with("<!--") => {
                cur.skip_comment()?;
                raw_cp += cur.src[here..cur.pos].chars().count();
            }
            Some('<') => {
                let tag = cur.tag()?;
                let tag_cp = cur.src[here..cur.pos].chars().count();
                match tag {
                    Tag::Close(name) if name == "s" => {
                        if !entities.is_empty() {
                            return Err(cur.error_at(here, "`</s>` closes a sentence with an open `<e>`"));
                        }
                        if !other.is_empty() {
                            return Err(cur.error_at(here, format!("unclosed `<{}>`", other[other.len() - 1])));
                        }
                        let raw = cur.src[content_start..here].to_string();
                        return Ok(raw);
                    }
                    Tag::Close(name) if name == "e" => {
                        if !other.is_empty() {
                            return Err(cur.error_at(here, format!("`</e>` closes inside `<{}>`", other[other.len() - 1])));
                        }
                        let open = entities
                            .pop()
                            .ok_or_else(|| cur.error_at(here, "`</e>` without matching `<e>`"))?;
                        let a = &mut annotations[open.index];
                        a.span = Span::new(open.raw_start, raw_cp);
                        a.text_span = Span::new(open.text_start, plain.len());
                        a.surface = plain[open.text_start..].iter().collect();
                        if a.text_span.is_empty() {
                            return Err(cur.error_at(here, "entity with empty content"));
                        }
                    }
                    Tag::Close(name) => {
                        if other.pop().as_deref() != Some(name.as_str()) {
                            return Err(cur.error_at(here, format!("unexpected `</{name}>`")));
                        }
                    }
                    Tag::Open { name, attrs, empty } if name == "e" => {
                        if empty {
                            return Err(cur.error_at(here, "entity with empty content"));
                        }
                        let loc = cur.location_at(here);
                        let concepts = match attrs.get("id") {
                            Some(id) => parse_concept_id(id).map_err(|e| e.with_location(loc))?,
                            None => Vec::new(),
                        };
                        let group = match attrs.get("group") {
                            Some(g) => g.trim().parse::<SemanticGroup>().map_err(|e| {
                                IeXmlError::MalformedId {
                                    id: g.clone(),
                                    reason: e.to_string(),
                                    location: Some(loc),
                                }
                            })?,
                            None => match concepts.first() {
                                Some(c) => c.group,
                                None => {
                                    return Err(IeXmlError::MalformedId {
                                        id: String::new(),
                                        reason: "entity has neither `id` nor `group`".into(),
                                        location: Some(loc),
                                    })
                                }
                            },
                        };
                        raw_cp += tag_cp;
                        entities.push(OpenEntity {
                            index: annotations.len(),
                            raw_start: raw_cp,
                            text_start: plain.len(),
                        });
                        annotations.push(Annotation {
                            span: Span::new(raw_cp, raw_cp),
                            text_span: Span::new(plain.len(), plain.len()),
                            surface: String::new(),
                            group,
                            concepts,
                            sentence_index,
                        });
                        continue;
                    }
                    Tag::Open { name, empty, .. } => {
                        if name == "s" || name == "doc" {
                            return Err(cur.error_at(here, format!("`<{name}>` inside a sentence")));
                        }
                        if !empty {
                            other.push(name);
                        }
                    }
                }
                raw_cp += tag_cp;
            }
            Some(_) => {
                let text = cur.text()?;
                raw_cp += cur.src[here..cur.pos].chars().count();
                plain.extend(text.chars());
            }
        }
    }
}

fn parse_doc_element(cur: &mut Cursor<'_>, attrs: Attrs) -> Result<AnnotatedDocument, IeXmlError> {
    let mut attrs = attrs;
    let mut doc = AnnotatedDocument::new(
        attrs
            .remove("id")
            .ok_or_else(|| cur.error("`<doc>` without `id`"))?,
    );
    doc.title = attrs.remove("title").unwrap_or_default();
    doc.date = attrs.remove("date").unwrap_or_default();
    doc.journal = attrs.remove("journal");

    loop {
        cur.skip_misc()?;
        let here = cur.pos;
        if cur.peek() != Some('<') {
            if cur.peek().is_none() {
                return Err(cur.error("unterminated `<doc>`"));
            }
            return Err(cur.error("text outside sentences"));
        }
        match cur.tag()? {
            Tag::Close(name) if name == "doc" => return Ok(doc),
            Tag::Open { name, empty, .. } if name == "authors" => {
                if empty {
                    continue;
                }
                loop {
                    cur.skip_misc()?;
                    let pos = cur.pos;
                    match cur.tag()? {
                        Tag::Close(n) if n == "authors" => break,
                        Tag::Open { name, empty, .. } if name == "a" => {
                            if empty {
                                doc.authors.push(String::new());
                            } else {
                                doc.authors.push(cur.text()?);
                                cur.expect_close("a")?;
                            }
                        }
                        _ => return Err(cur.error_at(pos, "expected `<a>` or `</authors>`")),
                    }
                }
            }
            Tag::Open { name, attrs, empty } if name == "s" => {
                let index = doc.sentences.len();
                if let Some(i) = attrs.get("i") {
                    if i.trim().parse::<usize>().ok() != Some(index) {
                        return Err(cur.error_at(here, format!("sentence index `{i}` out of sequence (expected {index})")));
                    }
                }
                if empty {
                    doc.sentences.push(String::new());
                } else {
                    let raw = parse_sentence(cur, index, &mut doc.annotations)?;
                    doc.sentences.push(raw);
                }
            }
            Tag::Open { name, .. } => {
                return Err(cur.error_at(here, format!("unexpected `<{name}>` in document")))
            }
            Tag::Close(name) => return Err(cur.error_at(here, format!("unexpected `</{name}>`"))),
        }
    }
}

/// Parses a `<corpus>` of documents, or a single `<doc>` root.
pub fn parse_corpus(xml_text: &str) -> Result<Vec<AnnotatedDocument>, IeXmlError> {
    let mut cur = Cursor { src: xml_text, pos: 0 };
    cur.skip_misc()?;
    if cur.peek().is_none() {
        return Ok(Vec::new());
    }
    if cur.peek() != Some('<') {
        return Err(cur.error("expected a root element"));
    }
    let root_pos = cur.pos;
    let docs = match cur.tag()? {
        Tag::Open { name, attrs, .. } if name == "doc" => vec![parse_doc_element(&mut cur, attrs)?],
        Tag::Open { name, empty, .. } if name == "corpus" => {
            let mut docs = Vec::new();
            if !empty {
                loop {
                    cur.skip_misc()?;
                    let pos = cur.pos;
                    if cur.peek().is_none() {
                        return Err(cur.error_at(root_pos, "unterminated `<corpus>`"));
                    }
                    match cur.tag()? {
                        Tag::Close(n) if n == "corpus" => break,
                        Tag::Open { name, attrs, empty: false } if name == "doc" => {
                            docs.push(parse_doc_element(&mut cur, attrs)?)
                        }
                        _ => return Err(cur.error_at(pos, "expected `<doc>` or `</corpus>`")),
                    }
                }
            }
            docs
        }
        _ => return Err(cur.error_at(root_pos, "root must be `<doc>` or `<corpus>`")),
    };
    cur.skip_misc()?;
    if cur.peek().is_some() {
        return Err(cur.error("content after the root element"));
    }
    Ok(docs)
}

/// Parses exactly one document (a `<doc>` root, or a `<corpus>` holding one).
pub fn parse_document(xml_text: &str) -> Result<AnnotatedDocument, IeXmlError> {
    let mut docs = parse_corpus(xml_text)?;
    if docs.len() != 1 {
        return Err(IeXmlError::Xml {
            location: Location { line: 1, column: 1 },
            message: format!("expected exactly one document, found {}", docs.len()),
        });
    }
    Ok(docs.pop().expect("length checked"))
}
