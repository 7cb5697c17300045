use std::cmp::Reverse;
use std::fmt::Write as _;

use super::{AnnotatedDocument, Annotation, Span};

pub(super) struct RenderedSentence {
    pub markup: String,
    pub placed: Vec<Annotation>,
    pub dropped: Vec<Annotation>,
}

/// Renders plain sentence text plus mentions (by `text_span`) into canonical
/// IeXML markup, recomputing raw spans and surfaces of the placed mentions.
pub(super) fn render_sentence(text: &str, mut mentions: Vec<Annotation>) -> RenderedSentence {
    let chars: Vec<char> = text.chars().collect();
    // Outer mentions open first; equal spans keep their input order.
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| {
        let s = mentions[i].text_span;
        (s.start, Reverse(s.end), i)
    });

    let mut keep = vec![false; mentions.len()];
    let mut stack: Vec<Span> = Vec::new();
    for &i in &order {
        let s = mentions[i].text_span;
        if s.is_empty() || s.end > chars.len() {
            continue;
        }
        while stack.last().is_some_and(|top| top.end <= s.start) {
            stack.pop();
        }
        if stack.last().is_some_and(|top| top.end < s.end) {
            continue;
        }
        stack.push(s);
        keep[i] = true;
    }

    let mut markup = String::with_capacity(text.len() + 48 * mentions.len());
    let mut raw_len = 0usize;
    let mut raw_spans: Vec<Span> = vec![Span::new(0, 0); mentions.len()];
    let mut opened: Vec<usize> = Vec::new();
    let mut next = order.iter().copied().filter(|&i| keep[i]).peekable();

    for pos in 0..=chars.len() {
        while let Some(&top) = opened.last() {
            if mentions[top].text_span.end != pos {
                break;
            }
            raw_spans[top].end = raw_len;
            markup.push_str("</e>");
            raw_len += 4;
            opened.pop();
        }
        while let Some(&i) = next.peek() {
            if mentions[i].text_span.start != pos {
                break;
            }
            let tag = open_tag(&mentions[i]);
            raw_len += tag.chars().count();
            markup.push_str(&tag);
            raw_spans[i].start = raw_len;
            opened.push(i);
            next.next();
        }
        if let Some(&c) = chars.get(pos) {
            raw_len += push_escaped_text(&mut markup, c);
        }
    }
    debug_assert!(opened.is_empty());

    let mut placed = Vec::new();
    let mut dropped = Vec::new();
    let mut taken: Vec<Option<Annotation>> = mentions.drain(..).map(Some).collect();
    for &i in &order {
        let mut m = taken[i].take().expect("each mention visited once");
        if keep[i] {
            m.span = raw_spans[i];
            m.surface = chars[m.text_span.start..m.text_span.end].iter().collect();
            placed.push(m);
        } else {
            dropped.push(m);
        }
    }
    RenderedSentence {
        markup,
        placed,
        dropped,
    }
}

fn open_tag(a: &Annotation) -> String {
    let mut tag = String::from("<e");
    if let Some(id) = a.id_attr() {
        let _ = write!(tag, " id=\"{}\"", escape_attr(&id));
    }
    if a.concepts.first().map(|c| c.group) != Some(a.group) {
        let _ = write!(tag, " group=\"{}\"", a.group);
    }
    tag.push('>');
    tag
}

/// Appends `c` escaped for character data, returning the code points written.
fn push_escaped_text(out: &mut String, c: char) -> usize {
    let rep = match c {
        '&' => "&amp;",
        '<' => "&lt;",
        '>' => "&gt;",
        _ => {
            out.push(c);
            return 1;
        }
    };
    out.push_str(rep);
    rep.len()
}

pub(super) fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        push_escaped_text(&mut out, c);
    }
    out
}

pub(super) fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            _ => out.push(c),
        }
    }
    out
}

/// Removes tags and comments and resolves character references.
pub(super) fn strip_markup(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(c) = rest.chars().next() {
        match c {
            '<' => {
                let end = if rest.starts_with("<!--") {
                    rest.find("-->").map(|i| i + 3)
                } else {
                    rest.find('>').map(|i| i + 1)
                };
                rest = &rest[end.unwrap_or(rest.len())..];
            }
            '&' => match rest.find(';').and_then(|i| {
                super::reader::decode_entity(&rest[1..i]).map(|ch| (ch, i + 1))
            }) {
                Some((ch, used)) => {
                    out.push(ch);
                    rest = &rest[used..];
                }
                None => {
                    out.push('&');
                    rest = &rest[1..];
                }
            },
            _ => {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    out
}

fn write_document(out: &mut String, doc: &AnnotatedDocument) {
    let _ = write!(
        out,
        "<doc id=\"{}\" title=\"{}\" date=\"{}\"",
        escape_attr(&doc.doc_id),
        escape_attr(&doc.title),
        escape_attr(&doc.date)
    );
    if let Some(journal) = &doc.journal {
        let _ = write!(out, " journal=\"{}\"", escape_attr(journal));
    }
    out.push_str(">\n");
    if !doc.authors.is_empty() {
        out.push_str("<authors>");
        for a in &doc.authors {
            let _ = write!(out, "<a>{}</a>", escape_text(a));
        }
        out.push_str("</authors>\n");
    }
    for (i, raw) in doc.sentences.iter().enumerate() {
        let text = strip_markup(raw);
        let mentions: Vec<Annotation> = doc.annotations_in(i).cloned().collect();
        let rendered = render_sentence(&text, mentions);
        debug_assert!(rendered.dropped.is_empty(), "parsed annotations always nest");
        let _ = writeln!(out, "<s i=\"{i}\">{}</s>", rendered.markup);
    }
    out.push_str("</doc>\n");
}

/// Canonical IeXML for one document. Sentence markup is regenerated from the
/// annotation model, so `parse_document(serialize_document(d)) == d` for any
/// document whose markup is already canonical.
pub fn serialize_document(doc: &AnnotatedDocument) -> String {
    let mut out = String::new();
    write_document(&mut out, doc);
    out
}

/// Several documents under a `<corpus>` root.
pub fn serialize_corpus(docs: &[AnnotatedDocument]) -> String {
    let mut out = String::from("<corpus>\n");
    for d in docs {
        write_document(&mut out, d);
    }
    out.push_str("</corpus>\n");
    out
}
