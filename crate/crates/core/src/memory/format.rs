//! The Markdown memory file.
//!
//! Entries and summaries are blocks between HTML-comment markers; anything
//! outside a block is kept verbatim. Blocks read from disk remember their
//! original bytes and are re-emitted unchanged unless their fields change,
//! so hand formatting inside untouched blocks survives a rewrite.
//!
//! ```text
//! <!-- agentclick:entry id=<32hex> kind=email loaded=true created=<ms> -->
//! **Reason:** use emoji and adopt a lighter style
//!
//! Before:
//! ```text
//! Dear Dana,
//! ```
//! <!-- /agentclick:entry -->
//! ```

use std::collections::HashSet;

use super::{MemoryError, Summary};
use crate::model::{MemoryEntry, ProposalKind};

const ENTRY_OPEN: &str = "<!-- agentclick:entry ";
const ENTRY_CLOSE: &str = "<!-- /agentclick:entry -->";
const SUMMARY_OPEN: &str = "<!-- agentclick:summary ";
const SUMMARY_CLOSE: &str = "<!-- /agentclick:summary -->";
const REASON_PREFIX: &str = "**Reason:**";

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment {
    Text(String),
    Entry { entry: MemoryEntry, raw: Option<Raw<MemoryEntry>> },
    Summary { summary: Summary, raw: Option<Raw<Summary>> },
}

/// Bytes of a block as read, plus the value they decoded to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Raw<T> {
    text: String,
    decoded: T,
}

pub(crate) fn parse(text: &str) -> Result<Vec<Segment>, MemoryError> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut segments = Vec::new();
    let mut prose = String::new();
    let mut seen_ids = HashSet::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let trimmed = line.trim_end();
        let is_entry = trimmed.starts_with(ENTRY_OPEN.trim_end());
        let is_summary = trimmed.starts_with(SUMMARY_OPEN.trim_end());
        if trimmed.starts_with("<!-- /agentclick:") {
            return Err(malformed(i + 1, "closing marker without an opening marker"));
        }
        if !is_entry && !is_summary {
            prose.push_str(line);
            i += 1;
            continue;
        }
        let close = if is_entry { ENTRY_CLOSE } else { SUMMARY_CLOSE };
        let open_line = i + 1;
        let mut j = i + 1;
        loop {
            let Some(body_line) = lines.get(j) else {
                return Err(malformed(open_line, "block is never closed"));
            };
            let t = body_line.trim_end();
            if t == close {
                break;
            }
            if t.starts_with("<!-- agentclick:") || t.starts_with("<!-- /agentclick:") {
                return Err(malformed(j + 1, "marker inside an unclosed block"));
            }
            j += 1;
        }
        if !prose.is_empty() {
            segments.push(Segment::Text(std::mem::take(&mut prose)));
        }
        let raw_text: String = lines[i..=j].concat();
        let body: String = lines[i + 1..j].concat();
        let attrs = parse_attrs(trimmed, open_line)?;
        if is_entry {
            let entry = decode_entry(&attrs, &body, open_line)?;
            if !seen_ids.insert(entry.entry_id.clone()) {
                return Err(MemoryError::DuplicateEntry { line: open_line, entry_id: entry.entry_id });
            }
            segments.push(Segment::Entry { raw: Some(Raw { text: raw_text, decoded: entry.clone() }), entry });
        } else {
            let summary = decode_summary(&attrs, &body, open_line)?;
            segments.push(Segment::Summary { raw: Some(Raw { text: raw_text, decoded: summary.clone() }), summary });
        }
        i = j + 1;
    }
    if !prose.is_empty() {
        segments.push(Segment::Text(prose));
    }
    Ok(segments)
}

pub(crate) fn serialize(segments: &[Segment]) -> String {
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Entry { entry, raw } => match raw {
                Some(raw) if &raw.decoded == entry => out.push_str(&raw.text),
                _ => out.push_str(&render_entry(entry)),
            },
            Segment::Summary { summary, raw } => match raw {
                Some(raw) if &raw.decoded == summary => out.push_str(&raw.text),
                _ => out.push_str(&render_summary(summary)),
            },
        }
    }
    out
}

fn malformed(line: usize, message: impl Into<String>) -> MemoryError {
    MemoryError::Malformed { line, message: message.into() }
}

fn parse_attrs(marker: &str, line: usize) -> Result<Vec<(String, String)>, MemoryError> {
    let inner = marker
        .strip_prefix("<!--")
        .and_then(|m| m.strip_suffix("-->"))
        .ok_or_else(|| malformed(line, "marker must be a single-line HTML comment"))?;
    let mut tokens = inner.split_whitespace();
    tokens.next(); // agentclick:entry / agentclick:summary
    tokens
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| malformed(line, format!("expected key=value, found `{tok}`")))
        })
        .collect()
}

fn attr<'a>(attrs: &'a [(String, String)], key: &str, line: usize) -> Result<&'a str, MemoryError> {
    attrs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| malformed(line, format!("missing `{key}`")))
}

fn check_known(attrs: &[(String, String)], known: &[&str], line: usize) -> Result<(), MemoryError> {
    match attrs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        Some((k, _)) => Err(malformed(line, format!("unknown attribute `{k}`"))),
        None => Ok(()),
    }
}

fn decode_entry(attrs: &[(String, String)], body: &str, line: usize) -> Result<MemoryEntry, MemoryError> {
    check_known(attrs, &["id", "kind", "loaded", "created", "truncated"], line)?;
    let entry_id = attr(attrs, "id", line)?.to_string();
    let kind: ProposalKind = attr(attrs, "kind", line)?.parse().map_err(|e| malformed(line, format!("{e}")))?;
    let loaded = match attr(attrs, "loaded", line)? {
        "true" => true,
        "false" => false,
        other => return Err(malformed(line, format!("loaded must be true or false, found `{other}`"))),
    };
    let created_at = attr(attrs, "created", line)?
        .parse()
        .map_err(|_| malformed(line, "created must be integer milliseconds"))?;
    let truncated: Vec<&str> = attrs
        .iter()
        .find(|(k, _)| k == "truncated")
        .map(|(_, v)| v.split(',').collect())
        .unwrap_or_default();

    let reason_at = body.find(REASON_PREFIX).ok_or_else(|| malformed(line, "entry has no **Reason:** line"))?;
    let rest = &body[reason_at + REASON_PREFIX.len()..];
    let reason_end = ["\nBefore:\n", "\nAfter:\n"]
        .iter()
        .filter_map(|m| rest.find(m))
        .min()
        .unwrap_or(rest.len());
    let reason = rest[..reason_end].trim().to_string();
    if reason.is_empty() {
        return Err(malformed(line, "empty reason"));
    }
    let mut tail = &rest[reason_end..];
    let mut snippet = |label: &str| -> Result<Option<String>, MemoryError> {
        let marker = format!("\n{label}:\n");
        match tail.find(&marker) {
            Some(at) if tail[..at].trim().is_empty() => {
                let (content, used) = fenced(&tail[at + marker.len()..], line)?;
                tail = &tail[at + marker.len() + used..];
                Ok(Some(content))
            }
            _ => Ok(None),
        }
    };
    let before = snippet("Before")?;
    let after = snippet("After")?;
    Ok(MemoryEntry {
        entry_id,
        kind,
        reason,
        before,
        after,
        created_at,
        loaded,
        before_truncated: truncated.contains(&"before"),
        after_truncated: truncated.contains(&"after"),
    })
}

/// Reads a fenced code block at the start of `text`, returning its content
/// and the number of bytes consumed.
fn fenced(text: &str, line: usize) -> Result<(String, usize), MemoryError> {
    let (open, rest) = text.split_once('\n').ok_or_else(|| malformed(line, "unterminated snippet fence"))?;
    let ticks = open.trim_end().chars().take_while(|&c| c == '`').count();
    if ticks < 3 {
        return Err(malformed(line, "snippet must be a fenced code block"));
    }
    let fence = "`".repeat(ticks);
    let mut offset = 0;
    for l in rest.split_inclusive('\n') {
        if l.trim_end() == fence {
            let content = &rest[..offset];
            let consumed = open.len() + 1 + offset + l.len();
            return Ok((content.strip_suffix('\n').unwrap_or(content).to_string(), consumed));
        }
        offset += l.len();
    }
    Err(malformed(line, "unterminated snippet fence"))
}

fn fence_for(content: &str) -> String {
    let longest = content
        .split(|c| c != '`')
        .map(str::len)
        .max()
        .unwrap_or(0);
    "`".repeat(longest.max(2) + 1)
}

pub(crate) fn render_entry(entry: &MemoryEntry) -> String {
    let mut out = format!(
        "{ENTRY_OPEN}id={} kind={} loaded={} created={}",
        entry.entry_id, entry.kind, entry.loaded, entry.created_at
    );
    let truncated: Vec<&str> = [(entry.before_truncated, "before"), (entry.after_truncated, "after")]
        .into_iter()
        .filter_map(|(flag, name)| flag.then_some(name))
        .collect();
    if !truncated.is_empty() {
        out.push_str(&format!(" truncated={}", truncated.join(",")));
    }
    out.push_str(" -->\n");
    out.push_str(&format!("{REASON_PREFIX} {}\n", entry.reason));
    for (label, snippet) in [("Before", &entry.before), ("After", &entry.after)] {
        if let Some(text) = snippet {
            let fence = fence_for(text);
            out.push_str(&format!("\n{label}:\n{fence}text\n{text}\n{fence}\n"));
        }
    }
    out.push_str(ENTRY_CLOSE);
    out.push('\n');
    out
}

fn decode_summary(attrs: &[(String, String)], body: &str, line: usize) -> Result<Summary, MemoryError> {
    check_known(attrs, &["id", "created"], line)?;
    Ok(Summary {
        summary_id: attr(attrs, "id", line)?.to_string(),
        created_at: attr(attrs, "created", line)?
            .parse()
            .map_err(|_| malformed(line, "created must be integer milliseconds"))?,
        text: body.strip_suffix('\n').unwrap_or(body).to_string(),
    })
}

pub(crate) fn render_summary(summary: &Summary) -> String {
    format!(
        "{SUMMARY_OPEN}id={} created={} -->\n{}\n{SUMMARY_CLOSE}\n",
        summary.summary_id, summary.created_at, summary.text
    )
}
