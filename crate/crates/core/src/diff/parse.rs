use std::fmt::Write as _;

use super::ChangeSet;
use crate::model::{FileChange, FileStatus, Hunk, HunkLine, LineTag};

const NO_NEWLINE: &str = "\\ No newline at end of file";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("line {line}: malformed hunk header `{text}`")]
    MalformedHunkHeader { line: usize, text: String },
    #[error("line {line}: `---` header not followed by `+++`")]
    MissingNewHeader { line: usize },
    #[error("line {line}: hunk outside of a file section")]
    OrphanHunk { line: usize },
    #[error("line {line}: hunk body does not match header counts (-{old_len} +{new_len})")]
    CountMismatch { line: usize, old_len: u32, new_len: u32 },
    #[error("line {line}: hunk overlaps or precedes the previous hunk in {path}")]
    Overlap { line: usize, path: String },
    #[error("line {line}: unexpected `{NO_NEWLINE}` marker")]
    StrayNoNewline { line: usize },
}

const DEV_NULL: &str = "/dev/null";

struct FileHeader {
    old: String,
    new: String,
}

fn header_path(rest: &str) -> String {
    // "a/path\t2024-01-01 ..." -> "a/path"
    let rest = rest.trim_end_matches(['\n', '\r']);
    rest.split('\t').next().unwrap_or("").to_string()
}

fn file_change(header: &FileHeader, hunks: Vec<Hunk>) -> FileChange {
    let git_style = (header.old == DEV_NULL || header.old.starts_with("a/"))
        && (header.new == DEV_NULL || header.new.starts_with("b/"))
        && !(header.old == DEV_NULL && header.new == DEV_NULL);
    let strip = |p: &str| -> String {
        if git_style && p != DEV_NULL {
            p[2..].to_string()
        } else {
            p.to_string()
        }
    };
    let (status, path) = if header.old == DEV_NULL {
        (FileStatus::Added, strip(&header.new))
    } else if header.new == DEV_NULL {
        (FileStatus::Deleted, strip(&header.old))
    } else {
        (FileStatus::Modified, strip(&header.new))
    };
    let (old_content, new_content) = match status {
        FileStatus::Added => (None, Some(side_text(&hunks, LineTag::Del))),
        FileStatus::Deleted => (Some(side_text(&hunks, LineTag::Add)), None),
        FileStatus::Modified => (None, None),
    };
    FileChange { path, status, old_content, new_content, hunks }
}

/// Rebuilds one side of a whole-file hunk set, skipping lines tagged `skip`.
fn side_text(hunks: &[Hunk], skip: LineTag) -> String {
    let mut out = String::new();
    for hunk in hunks {
        let side: Vec<&HunkLine> = hunk.lines.iter().filter(|l| l.tag != skip).collect();
        let missing = if skip == LineTag::Del { hunk.new_missing_newline } else { hunk.old_missing_newline };
        for (i, line) in side.iter().enumerate() {
            out.push_str(&line.text);
            if !(missing && i + 1 == side.len()) {
                out.push('\n');
            }
        }
    }
    out
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    match s.split_once(',') {
        Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let body = line.strip_prefix("@@ -")?;
    let (ranges, _) = body.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (old_start, old_len) = parse_range(old)?;
    let (new_start, new_len) = parse_range(new)?;
    Some((old_start, old_len, new_start, new_len))
}

/// Parses unified diff text into per-file hunks.
///
/// Lines outside file sections (`diff --git`, `index`, mode lines, prose)
/// are ignored. Line text keeps any `\r`; only the `\n` is stripped.
pub fn parse_unified_diff(text: &str) -> Result<ChangeSet, DiffError> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut files = Vec::new();
    let mut current: Option<(FileHeader, Vec<Hunk>)> = None;
    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let line_no = i + 1;
        let line = raw.strip_suffix('\n').unwrap_or(raw);
        if let Some(rest) = line.strip_prefix("--- ") {
            let next = lines.get(i + 1).map(|l| l.strip_suffix('\n').unwrap_or(l));
            let Some(new_rest) = next.and_then(|n| n.strip_prefix("+++ ")) else {
                return Err(DiffError::MissingNewHeader { line: line_no });
            };
            if let Some((header, hunks)) = current.take() {
                files.push(file_change(&header, hunks));
            }
            current = Some((FileHeader { old: header_path(rest), new: header_path(new_rest) }, Vec::new()));
            i += 2;
            continue;
        }
        if line.starts_with("@@") {
            let Some((header, hunks)) = current.as_mut() else {
                return Err(DiffError::OrphanHunk { line: line_no });
            };
            let (old_start, old_len, new_start, new_len) = parse_hunk_header(line)
                .ok_or_else(|| DiffError::MalformedHunkHeader { line: line_no, text: line.to_string() })?;
            let mut hunk = Hunk {
                old_start,
                old_len,
                new_start,
                new_len,
                lines: Vec::new(),
                old_missing_newline: false,
                new_missing_newline: false,
            };
            let (mut old_seen, mut new_seen) = (0u32, 0u32);
            i += 1;
            let mismatch = |line| DiffError::CountMismatch { line, old_len, new_len };
            while old_seen < old_len || new_seen < new_len {
                let Some(body) = lines.get(i) else {
                    return Err(mismatch(lines.len()));
                };
                let body_line = body.strip_suffix('\n').unwrap_or(body);
                let (tag, text) = match body_line.as_bytes().first() {
                    Some(b' ') => (LineTag::Context, &body_line[1..]),
                    Some(b'+') => (LineTag::Add, &body_line[1..]),
                    Some(b'-') => (LineTag::Del, &body_line[1..]),
                    // some tools drop the space on empty context lines
                    None => (LineTag::Context, ""),
                    Some(b'\\') if body_line.starts_with(NO_NEWLINE) => {
                        mark_no_newline(&mut hunk, i + 1)?;
                        i += 1;
                        continue;
                    }
                    _ => return Err(mismatch(i + 1)),
                };
                match tag {
                    LineTag::Context => {
                        old_seen += 1;
                        new_seen += 1;
                    }
                    LineTag::Del => old_seen += 1,
                    LineTag::Add => new_seen += 1,
                }
                if old_seen > old_len || new_seen > new_len {
                    return Err(mismatch(i + 1));
                }
                hunk.lines.push(HunkLine { tag, text: text.to_string() });
                i += 1;
            }
            if let Some(marker) = lines.get(i) {
                if marker.starts_with(NO_NEWLINE) {
                    mark_no_newline(&mut hunk, i + 1)?;
                    i += 1;
                }
            }
            // a body line right after a satisfied hunk means the header undercounted
            if let Some(after) = lines.get(i) {
                let after = after.strip_suffix('\n').unwrap_or(after);
                let stray = after.starts_with(' ')
                    || (after.starts_with('+') && !after.starts_with("+++ "))
                    || (after.starts_with('-') && !after.starts_with("--- "));
                if stray {
                    return Err(mismatch(i + 1));
                }
            }
            if let Some(prev) = hunks.last() {
                if hunk.old_index() < prev.old_index() + prev.old_len as usize {
                    return Err(DiffError::Overlap { line: line_no, path: header.new.clone() });
                }
            }
            hunks.push(hunk);
            continue;
        }
        i += 1;
    }
    if let Some((header, hunks)) = current.take() {
        files.push(file_change(&header, hunks));
    }
    Ok(ChangeSet { files })
}

fn mark_no_newline(hunk: &mut Hunk, line: usize) -> Result<(), DiffError> {
    match hunk.lines.last().map(|l| l.tag) {
        Some(LineTag::Context) => {
            hunk.old_missing_newline = true;
            hunk.new_missing_newline = true;
        }
        Some(LineTag::Del) => hunk.old_missing_newline = true,
        Some(LineTag::Add) => hunk.new_missing_newline = true,
        None => return Err(DiffError::StrayNoNewline { line }),
    }
    Ok(())
}

/// Renders a change set as git-style unified diff text.
pub fn render_unified_diff(changes: &ChangeSet) -> String {
    let mut out = String::new();
    for file in &changes.files {
        let (old, new) = match file.status {
            FileStatus::Added => (DEV_NULL.to_string(), format!("b/{}", file.path)),
            FileStatus::Deleted => (format!("a/{}", file.path), DEV_NULL.to_string()),
            FileStatus::Modified => (format!("a/{}", file.path), format!("b/{}", file.path)),
        };
        let _ = writeln!(out, "--- {old}");
        let _ = writeln!(out, "+++ {new}");
        for hunk in &file.hunks {
            let _ = writeln!(
                out,
                "@@ -{},{} +{},{} @@",
                hunk.old_start, hunk.old_len, hunk.new_start, hunk.new_len
            );
            let last_old = hunk.lines.iter().rposition(|l| l.tag != LineTag::Add);
            let last_new = hunk.lines.iter().rposition(|l| l.tag != LineTag::Del);
            for (idx, line) in hunk.lines.iter().enumerate() {
                let prefix = match line.tag {
                    LineTag::Context => ' ',
                    LineTag::Add => '+',
                    LineTag::Del => '-',
                };
                out.push(prefix);
                out.push_str(&line.text);
                out.push('\n');
                let marks_old = hunk.old_missing_newline && Some(idx) == last_old;
                let marks_new = hunk.new_missing_newline && Some(idx) == last_new;
                if marks_old || marks_new {
                    out.push_str(NO_NEWLINE);
                    out.push('\n');
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_FILES: &str = "\
diff --git a/src/train.py b/src/train.py
index 111..222 100644
--- a/src/train.py
+++ b/src/train.py
@@ -1,3 +1,4 @@
 import torch
+import torchvision
 
 def main():
@@ -10,2 +11,2 @@ def main():
-    epochs = 5
+    epochs = 50
     run(epochs)
--- /dev/null
+++ b/README.md
@@ -0,0 +1,2 @@
+# Trainer
+Run `python src/train.py`.
";

    #[test]
    fn empty_input_has_no_files() {
        assert_eq!(parse_unified_diff("").unwrap().files.len(), 0);
    }

    #[test]
    fn two_file_diff() {
        let cs = parse_unified_diff(TWO_FILES).unwrap();
        assert_eq!(cs.files.len(), 2);
        assert_eq!(cs.files[0].path, "src/train.py");
        assert_eq!(cs.files[0].status, FileStatus::Modified);
        assert_eq!(cs.files[0].hunks.len(), 2);
        assert_eq!(cs.files[0].hunks[0].lines[2].text, "");
        assert_eq!(cs.files[1].status, FileStatus::Added);
        assert_eq!(cs.files[1].new_content.as_deref(), Some("# Trainer\nRun `python src/train.py`.\n"));
    }

    #[test]
    fn header_count_mismatch_is_reported() {
        let bad = "--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n-a\n+b\n";
        assert!(matches!(parse_unified_diff(bad), Err(DiffError::CountMismatch { .. })));
        let over = "--- a/x\n+++ b/x\n@@ -1,1 +1,1 @@\n-a\n+b\n+c\n";
        assert!(matches!(parse_unified_diff(over), Err(DiffError::CountMismatch { line: 6, .. })));
    }

    #[test]
    fn malformed_header_and_orphans() {
        let bad = "--- a/x\n+++ b/x\n@@ -1,x +1 @@\n";
        assert!(matches!(parse_unified_diff(bad), Err(DiffError::MalformedHunkHeader { line: 3, .. })));
        assert!(matches!(parse_unified_diff("@@ -1 +1 @@\n-a\n+b\n"), Err(DiffError::OrphanHunk { line: 1 })));
        assert!(matches!(parse_unified_diff("--- a/x\nfoo\n"), Err(DiffError::MissingNewHeader { line: 1 })));
    }

    #[test]
    fn overlapping_hunks_rejected() {
        let bad = "--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n a\n-b\n+c\n@@ -2,1 +2,1 @@\n-b\n+d\n";
        assert!(matches!(parse_unified_diff(bad), Err(DiffError::Overlap { .. })));
    }

    #[test]
    fn no_newline_markers_and_crlf() {
        let text = "--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n a\r\n-b\n\\ No newline at end of file\n+c\n\\ No newline at end of file\n";
        let cs = parse_unified_diff(text).unwrap();
        let h = &cs.files[0].hunks[0];
        assert!(h.old_missing_newline && h.new_missing_newline);
        assert_eq!(h.lines[0].text, "a\r");
        assert_eq!(render_unified_diff(&cs), text);
    }

    #[test]
    fn render_round_trip() {
        let cs = parse_unified_diff(TWO_FILES).unwrap();
        assert_eq!(parse_unified_diff(&render_unified_diff(&cs)).unwrap(), cs);
    }
}
