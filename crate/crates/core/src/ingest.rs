//! Stack Exchange `Posts.xml` ingestion and code-block extraction.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

fn error_offset<R>(reader: &Reader<R>) -> u64 {
    match reader.error_position() {
        0 => reader.buffer_position(),
        p => p,
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("I/O error reading dump: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostKind {
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: u64,
    pub kind: PostKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
    pub score: i64,
    pub view_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_answer_id: Option<u64>,
    pub body_html: String,
}

/// `post_id` plus the ordinal of the `<code>` region inside the post body.
/// Serialized as `"<post_id>-<ordinal>"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SnippetId {
    pub post_id: u64,
    pub ordinal: u32,
}

impl fmt::Display for SnippetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.post_id, self.ordinal)
    }
}

impl FromStr for SnippetId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, o) = s
            .split_once('-')
            .ok_or_else(|| format!("bad snippet id {s:?}"))?;
        Ok(SnippetId {
            post_id: p.parse().map_err(|_| format!("bad snippet id {s:?}"))?,
            ordinal: o.parse().map_err(|_| format!("bad snippet id {s:?}"))?,
        })
    }
}

impl Serialize for SnippetId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SnippetId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 64-bit digest of whitespace-normalized code, hex encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodeHash(pub u64);

impl fmt::Display for CodeHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for CodeHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CodeHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(CodeHash)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub snippet_id: SnippetId,
    pub post_id: u64,
    pub kind: PostKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u64>,
    pub score: i64,
    pub view_count: u64,
    pub code_text: String,
    pub hash: CodeHash,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rows_seen: u64,
    pub rows_missing_attributes: u64,
    pub rows_other_type: u64,
    pub unbalanced_code_tags: u64,
    pub short_inline_spans: u64,
}

/// Streaming reader over `<row .../>` elements. Yields matched questions and
/// the answers whose parent question was matched earlier in the stream.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    tag_filter: HashSet<String>,
    matched_questions: HashSet<u64>,
    diagnostics: Diagnostics,
    done: bool,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R, tag_filter: &BTreeSet<String>) -> Self {
        DumpReader {
            reader: Reader::from_reader(input),
            buf: Vec::new(),
            tag_filter: tag_filter.iter().map(|t| t.to_lowercase()).collect(),
            matched_questions: HashSet::new(),
            diagnostics: Diagnostics::default(),
            done: false,
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    fn malformed(&self, message: impl ToString) -> IngestError {
        IngestError::Malformed {
            offset: error_offset(&self.reader),
            message: message.to_string(),
        }
    }

    fn accept_row(&mut self, row: RawRow) -> Option<PostRecord> {
        match row.kind {
            PostKind::Question => {
                if !row.tags.iter().any(|t| self.tag_filter.contains(t)) {
                    return None;
                }
                self.matched_questions.insert(row.post_id);
            }
            PostKind::Answer => {
                if !row
                    .parent_id
                    .is_some_and(|p| self.matched_questions.contains(&p))
                {
                    return None;
                }
            }
        }
        Some(PostRecord {
            post_id: row.post_id,
            kind: row.kind,
            parent_id: row.parent_id,
            tags: row.tags,
            score: row.score,
            view_count: row.view_count,
            accepted_answer_id: row.accepted_answer_id,
            body_html: row.body,
        })
    }
}

struct RawRow {
    post_id: u64,
    kind: PostKind,
    parent_id: Option<u64>,
    tags: BTreeSet<String>,
    score: i64,
    view_count: u64,
    accepted_answer_id: Option<u64>,
    body: String,
}

enum RowOutcome {
    Row(RawRow),
    Missing,
    OtherType,
}

/// Attribute values keyed by name, already XML-unescaped.
pub(crate) fn row_attributes(
    e: &BytesStart<'_>,
) -> Result<Vec<(String, String)>, quick_xml::Error> {
    let mut out = Vec::new();
    for attr in e.attributes() {
        let attr = attr.map_err(quick_xml::Error::InvalidAttr)?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr.unescape_value()?.into_owned();
        out.push((key, value));
    }
    Ok(out)
}

fn parse_row(attrs: &[(String, String)]) -> RowOutcome {
    let get = |name: &str| {
        attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    };
    let Some(id) = get("Id").and_then(|v| v.parse::<u64>().ok()).filter(|&v| v >= 1) else {
        return RowOutcome::Missing;
    };
    let kind = match get("PostTypeId") {
        Some("1") => PostKind::Question,
        Some("2") => PostKind::Answer,
        Some(_) => return RowOutcome::OtherType,
        None => return RowOutcome::Missing,
    };
    let (Some(body), Some(score)) = (get("Body"), get("Score").and_then(|s| s.parse().ok()))
    else {
        return RowOutcome::Missing;
    };
    let parent_id = get("ParentId").and_then(|v| v.parse().ok());
    let tags = get("Tags").map(parse_tags);
    match kind {
        PostKind::Answer if parent_id.is_none() => return RowOutcome::Missing,
        PostKind::Question if tags.is_none() => return RowOutcome::Missing,
        _ => {}
    }
    let view_count = match kind {
        PostKind::Question => get("ViewCount").and_then(|v| v.parse().ok()).unwrap_or(0),
        PostKind::Answer => 0,
    };
    RowOutcome::Row(RawRow {
        post_id: id,
        kind,
        parent_id: if kind == PostKind::Answer {
            parent_id
        } else {
            None
        },
        tags: if kind == PostKind::Question {
            tags.unwrap_or_default()
        } else {
            BTreeSet::new()
        },
        score,
        view_count,
        accepted_answer_id: get("AcceptedAnswerId").and_then(|v| v.parse().ok()),
        body: body.to_string(),
    })
}

/// Tags come as `<a><b>` in older dumps and `|a|b|` in newer ones.
pub fn parse_tags(raw: &str) -> BTreeSet<String> {
    raw.split(['<', '>', '|'])
        .map(|t| t.trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<PostRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    return Some(Err(self.malformed(e)));
                }
            };
            let attrs = match event {
                Event::Eof => {
                    self.done = true;
                    return None;
                }
                Event::Empty(ref e) | Event::Start(ref e) if e.name().as_ref() == b"row" => {
                    row_attributes(e)
                }
                _ => continue,
            };
            let attrs = match attrs {
                Ok(a) => a,
                Err(e) => {
                    self.done = true;
                    return Some(Err(self.malformed(e)));
                }
            };
            self.diagnostics.rows_seen += 1;
            match parse_row(&attrs) {
                RowOutcome::Missing => self.diagnostics.rows_missing_attributes += 1,
                RowOutcome::OtherType => self.diagnostics.rows_other_type += 1,
                RowOutcome::Row(row) => {
                    if let Some(post) = self.accept_row(row) {
                        return Some(Ok(post));
                    }
                }
            }
        }
    }
}

/// Collect all matching posts. Answers must follow their question in the
/// stream, which holds for dumps ordered by `Id`.
pub fn parse_dump<R: BufRead>(
    input: R,
    tag_filter: &BTreeSet<String>,
) -> Result<(Vec<PostRecord>, Diagnostics), IngestError> {
    let mut reader = DumpReader::new(input, tag_filter);
    let mut posts = Vec::new();
    for post in reader.by_ref() {
        posts.push(post?);
    }
    let diagnostics = reader.diagnostics().clone();
    Ok((posts, diagnostics))
}

/// Decode the HTML entities Stack Exchange leaves inside post bodies.
pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let Some(end) = rest[..rest.len().min(12)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..end];
        let decoded = match entity {
            "lt" => Some('<'),
            "gt" => Some('>'),
            "amp" => Some('&'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some('\u{a0}'),
            e if e.starts_with("#x") || e.starts_with("#X") => {
                u32::from_str_radix(&e[2..], 16).ok().and_then(char::from_u32)
            }
            e if e.starts_with('#') => e[1..].parse().ok().and_then(char::from_u32),
            _ => None,
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[end + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Collapse intra-line whitespace runs, trim each line and drop blank lines.
pub fn normalize_whitespace(code: &str) -> String {
    code.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn code_hash(code: &str) -> CodeHash {
    let digest = Sha256::digest(normalize_whitespace(code).as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    CodeHash(u64::from_be_bytes(bytes))
}

fn word_token_count(code: &str) -> usize {
    crate::classifier::tokenize(code).tokens.len()
}

/// One raw `<code>` region located in a body.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeRegion {
    pub ordinal: u32,
    pub text: String,
    pub inline: bool,
    pub unbalanced: bool,
}

/// Locate `<code>` regions in document order. Regions directly inside `<pre>`
/// are blocks; all others are inline spans.
pub fn code_regions(body_html: &str) -> Vec<CodeRegion> {
    let lower = body_html.to_ascii_lowercase();
    let mut regions = Vec::new();
    let mut cursor = 0;
    let mut ordinal = 0;
    while let Some(rel) = lower[cursor..].find("<code") {
        let tag_start = cursor + rel;
        let after_name = tag_start + 5;
        let next = lower[after_name..].chars().next();
        if !matches!(next, Some('>') | Some(' ') | Some('\t') | Some('\n')) {
            cursor = after_name;
            continue;
        }
        let Some(open_end) = lower[tag_start..].find('>').map(|p| tag_start + p + 1) else {
            break;
        };
        let before = lower[..tag_start].trim_end();
        let inline = !(before.ends_with('>')
            && before
                .rfind('<')
                .is_some_and(|p| before[p..].starts_with("<pre")));
        let (inner_end, close_end, unbalanced) = match lower[open_end..].find("</code>") {
            Some(p) => (open_end + p, open_end + p + 7, false),
            None => (body_html.len(), body_html.len(), true),
        };
        regions.push(CodeRegion {
            ordinal,
            text: decode_entities(&body_html[open_end..inner_end]),
            inline,
            unbalanced,
        });
        ordinal += 1;
        cursor = close_end;
    }
    regions
}

/// Extract snippet records from one post, updating the diagnostics tally.
/// Inline spans with fewer than two tokens are dropped; ordinals still count
/// them so ids stay stable.
pub fn extract_snippets(post: &PostRecord, diagnostics: &mut Diagnostics) -> Vec<SnippetRecord> {
    let mut out = Vec::new();
    for region in code_regions(&post.body_html) {
        if region.unbalanced {
            diagnostics.unbalanced_code_tags += 1;
        }
        if region.text.trim().is_empty() {
            continue;
        }
        if region.inline && word_token_count(&region.text) < 2 {
            diagnostics.short_inline_spans += 1;
            continue;
        }
        out.push(SnippetRecord {
            snippet_id: SnippetId {
                post_id: post.post_id,
                ordinal: region.ordinal,
            },
            post_id: post.post_id,
            kind: post.kind,
            parent_id: post.parent_id,
            score: post.score,
            view_count: post.view_count,
            hash: code_hash(&region.text),
            code_text: region.text,
        });
    }
    out
}

/// Keep the first snippet per normalized hash, preserving order.
pub fn dedupe(snippets: Vec<SnippetRecord>) -> Vec<SnippetRecord> {
    let mut seen = HashSet::new();
    snippets
        .into_iter()
        .filter(|s| seen.insert(s.hash))
        .collect()
}

/// Comments fixture in Stack Exchange `Comments.xml` row format
/// (`<row Id=".." PostId=".." Text=".."/>`).
pub fn parse_comments<R: BufRead>(
    input: R,
) -> Result<std::collections::BTreeMap<u64, Vec<String>>, IngestError> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut out: std::collections::BTreeMap<u64, Vec<String>> = Default::default();
    loop {
        buf.clear();
        let ev = reader
            .read_event_into(&mut buf)
            .map_err(|e| IngestError::Malformed {
                offset: error_offset(&reader),
                message: e.to_string(),
            })?;
        match ev {
            Event::Eof => break,
            Event::Empty(ref e) | Event::Start(ref e) if e.name().as_ref() == b"row" => {
                let attrs = row_attributes(e).map_err(|err| IngestError::Malformed {
                    offset: error_offset(&reader),
                    message: err.to_string(),
                })?;
                let get = |n: &str| attrs.iter().find(|(k, _)| k == n).map(|(_, v)| v.clone());
                if let (Some(pid), Some(text)) =
                    (get("PostId").and_then(|p| p.parse().ok()), get("Text"))
                {
                    out.entry(pid).or_default().push(text);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filter(tags: &[&str]) -> BTreeSet<String> {
        tags.iter().map(|s| s.to_string()).collect()
    }

    fn post(body: &str) -> PostRecord {
        PostRecord {
            post_id: 7,
            kind: PostKind::Answer,
            parent_id: Some(3),
            tags: BTreeSet::new(),
            score: 2,
            view_count: 0,
            accepted_answer_id: None,
            body_html: body.into(),
        }
    }

    const DUMP: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" Score="3" ViewCount="10" Tags="&lt;android&gt;&lt;ssl&gt;" Body="&lt;p&gt;q&lt;/p&gt;" />
  <row Id="2" PostTypeId="2" ParentId="1" Score="1" Body="&lt;pre&gt;&lt;code&gt;a();&lt;/code&gt;&lt;/pre&gt;" />
  <row Id="3" PostTypeId="1" Score="0" ViewCount="4" Tags="&lt;ios&gt;" Body="x" />
  <row Id="4" PostTypeId="2" ParentId="3" Score="1" Body="y" />
  <row Id="5" PostTypeId="1" Score="0" Body="no tags" />
  <row Id="6" PostTypeId="5" Score="0" Body="wiki" />
  <row Id="7" PostTypeId="1" Score="-2" Tags="|Android|" Body="z" />
</posts>"#;

    #[test]
    fn selects_tagged_questions_and_their_answers() {
        let (posts, diag) = parse_dump(DUMP.as_bytes(), &filter(&["android"])).unwrap();
        let ids: Vec<u64> = posts.iter().map(|p| p.post_id).collect();
        assert_eq!(ids, [1, 2, 7]);
        assert_eq!(diag.rows_seen, 7);
        assert_eq!(diag.rows_missing_attributes, 1);
        assert_eq!(diag.rows_other_type, 1);
        assert_eq!(posts[0].view_count, 10);
        assert_eq!(posts[2].view_count, 0);
        assert_eq!(posts[2].score, -2);
    }

    #[test]
    fn empty_dump_and_empty_filter() {
        let (posts, _) = parse_dump("".as_bytes(), &filter(&["android"])).unwrap();
        assert!(posts.is_empty());
        let (posts, _) = parse_dump(DUMP.as_bytes(), &BTreeSet::new()).unwrap();
        assert!(posts.is_empty());
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let bad = "<posts><row Id=\"1\" PostTypeId=\"1\" Score=\"1\" Tags=\"&lt;android&gt;\" Body=\"a\" /><row Id=\"2\" </posts>";
        let err = parse_dump(bad.as_bytes(), &filter(&["android"])).unwrap_err();
        match err {
            IngestError::Malformed { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_blocks_get_ordinals() {
        let p = post("<pre><code>a</code></pre><p>t</p><pre><code>b</code></pre>");
        let s = extract_snippets(&p, &mut Diagnostics::default());
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].code_text, "a");
        assert_eq!(s[1].snippet_id.ordinal, 1);
        assert_eq!(s[1].snippet_id.to_string(), "7-1");
    }

    #[test]
    fn entities_are_decoded() {
        let p = post("<pre><code>if (a &amp;&amp; b &lt; c) x = &quot;&#65;&#x42;&quot;;</code></pre>");
        let s = extract_snippets(&p, &mut Diagnostics::default());
        assert_eq!(s[0].code_text, "if (a && b < c) x = \"AB\";");
    }

    #[test]
    fn no_code_yields_nothing() {
        assert!(extract_snippets(&post("<p>hello</p>"), &mut Diagnostics::default()).is_empty());
    }

    #[test]
    fn short_inline_spans_are_dropped() {
        let p = post("<p>use <code>Cipher</code> via <code>Cipher.getInstance</code></p>");
        let mut d = Diagnostics::default();
        let s = extract_snippets(&p, &mut d);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].snippet_id.ordinal, 1);
        assert_eq!(d.short_inline_spans, 1);
    }

    #[test]
    fn unbalanced_code_runs_to_end() {
        let p = post("<pre><code>int a = 1;\nint b = 2;</p>");
        let mut d = Diagnostics::default();
        let s = extract_snippets(&p, &mut d);
        assert_eq!(s.len(), 1);
        assert!(s[0].code_text.starts_with("int a = 1;"));
        assert_eq!(d.unbalanced_code_tags, 1);
    }

    #[test]
    fn dedupe_collapses_whitespace_variants() {
        let p1 = post("<pre><code>int a = 1;\n  foo(a);</code></pre>");
        let p2 = post("<pre><code>  int   a = 1;\n\nfoo(a);  </code></pre>");
        let mut s = extract_snippets(&p1, &mut Diagnostics::default());
        s.extend(extract_snippets(&p2, &mut Diagnostics::default()));
        assert_eq!(s.len(), 2);
        let d = dedupe(s.clone());
        assert_eq!(d, vec![s[0].clone()]);
        assert_eq!(dedupe(d.clone()), d);
    }

    #[test]
    fn snippet_record_json_fields() {
        let p = post("<pre><code>a();</code></pre>");
        let s = &extract_snippets(&p, &mut Diagnostics::default())[0];
        let v: serde_json::Value = serde_json::to_value(s).unwrap();
        for f in ["snippet_id", "post_id", "kind", "score", "view_count", "code_text", "hash"] {
            assert!(v.get(f).is_some(), "missing {f}");
        }
        assert_eq!(v["kind"], "answer");
        let back: SnippetRecord = serde_json::from_value(v).unwrap();
        assert_eq!(&back, s);
    }

    #[test]
    fn comments_fixture_parses() {
        let xml = r#"<comments><row Id="1" PostId="5" Text="This is insecure!" /><row Id="2" PostId="5" Text="ok" /></comments>"#;
        let c = parse_comments(xml.as_bytes()).unwrap();
        assert_eq!(c[&5].len(), 2);
    }
}
