mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;

use agentclick::diff::*;
use agentclick::model::*;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn gnu_diff(args: &[&str], a: &std::path::Path, b: &std::path::Path) -> String {
    let out = Command::new("diff").args(args).arg(a).arg(b).output().expect("diff(1) is installed");
    assert!(out.status.code() == Some(1), "diff exited {:?}", out.status);
    String::from_utf8(out.stdout).unwrap()
}

/// Counts what each hunk body says about its own header, independently of
/// the parser.
fn header_counts(text: &str) -> Vec<(u32, u32, usize, usize)> {
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("@@ -") {
            let mut parts = rest.split(' ');
            let len = |s: &str| s.split(',').nth(1).map_or(1, |n| n.parse().unwrap());
            let old = len(parts.next().unwrap());
            let new = len(parts.next().unwrap().trim_start_matches('+'));
            out.push((old, new, 0, 0));
        } else if let Some(last) = out.last_mut() {
            match line.as_bytes().first() {
                Some(b' ') => {
                    last.2 += 1;
                    last.3 += 1;
                }
                Some(b'-') if !line.starts_with("--- ") => last.2 += 1,
                Some(b'+') if !line.starts_with("+++ ") => last.3 += 1,
                _ => {}
            }
        }
    }
    out
}

#[test]
fn twenty_line_pair_from_gnu_diff() {
    let dir = tempfile::tempdir().unwrap();
    let old: String = (1..=20).map(|i| format!("line {i}\n")).collect();
    let new: String = (1..=20)
        .filter(|i| *i != 7)
        .map(|i| match i {
            3 => "line three\n".to_string(),
            15 => "line 15\nline 15b\n".to_string(),
            _ => format!("line {i}\n"),
        })
        .collect();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    std::fs::write(&a, &old).unwrap();
    std::fs::write(&b, &new).unwrap();
    for context in 0..=3 {
        let text = gnu_diff(&[&format!("-U{context}")], &a, &b);
        let cs = parse_unified_diff(&text).unwrap();
        let counts = header_counts(&text);
        assert_eq!(cs.files.len(), 1);
        assert_eq!(cs.hunk_count(), counts.len(), "-U{context}");
        for (hunk, (old_len, new_len, old_seen, new_seen)) in cs.files[0].hunks.iter().zip(&counts) {
            assert_eq!((hunk.old_len, hunk.new_len), (*old_len, *new_len));
            assert_eq!((*old_seen, *new_seen), (*old_len as usize, *new_len as usize));
        }
        let all: BTreeSet<usize> = (0..cs.hunk_count()).collect();
        assert_eq!(apply_hunks(&old, &cs.files[0].hunks, &all).unwrap(), new);
    }
}

/// Where a hunk's new side must sit in the patched text, per its header.
fn new_side_at(text: &str, hunk: &Hunk) -> bool {
    let lines: Vec<&str> = text.split_inclusive('\n').map(|l| l.strip_suffix('\n').unwrap_or(l)).collect();
    let start = if hunk.new_len == 0 { hunk.new_start as usize } else { hunk.new_start as usize - 1 };
    let new_side: Vec<&str> = hunk.lines.iter().filter(|l| l.tag != LineTag::Del).map(|l| l.text.as_str()).collect();
    lines.get(start..start + new_side.len()) == Some(&new_side[..])
}

#[test]
fn every_subset_gets_headers_that_match_its_own_result() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rng(9);
    for case in 0..30 {
        let old: String = (0..30).map(|i| format!("row {i}\n")).collect();
        let new: String = (0..30)
            .filter_map(|i| match rng.random_range(0..6) {
                0 => None,
                1 => Some(format!("row {i} changed\nextra {i}\n")),
                2 => Some(format!("inserted {i}\nrow {i}\n")),
                _ => Some(format!("row {i}\n")),
            })
            .collect();
        let (a, b) = (dir.path().join(format!("{case}.a")), dir.path().join(format!("{case}.b")));
        std::fs::write(&a, &old).unwrap();
        std::fs::write(&b, &new).unwrap();
        if old == new {
            continue;
        }
        let mut cs = parse_unified_diff(&gnu_diff(&["-U0"], &a, &b)).unwrap();
        cs.files[0].path = "f".into();
        cs.files[0].old_content = Some(old.clone());
        cs.files[0].new_content = Some(new.clone());
        let n = cs.files[0].hunks.len().min(8);
        for mask in 0u32..(1 << n) {
            let mut decisions = BTreeMap::new();
            for (h, _) in cs.files[0].hunks.iter().enumerate() {
                let approve = h < n && mask & (1 << h) != 0;
                decisions.insert(HunkKey::new("f", h), if approve { HunkDecision::Approved } else { HunkDecision::Rejected });
            }
            let p = materialize_decisions(&cs, &decisions, &[]).unwrap();
            for side in [&p.approved, &p.rejected] {
                let Some(file) = side.files.first() else { continue };
                let result = if side == &p.approved {
                    file.new_content.clone().unwrap()
                } else {
                    let all: BTreeSet<usize> = (0..file.hunks.len()).collect();
                    apply_hunks(&old, &file.hunks, &all).unwrap()
                };
                for hunk in &file.hunks {
                    assert!(new_side_at(&result, hunk), "case {case} mask {mask:b}: {hunk:?}");
                }
                let reparsed = parse_unified_diff(&render_unified_diff(side)).unwrap();
                let all: BTreeSet<usize> = (0..reparsed.files[0].hunks.len()).collect();
                assert_eq!(apply_hunks(&old, &reparsed.files[0].hunks, &all).unwrap(), result);
            }
        }
    }
}

#[test]
fn recursive_diff_of_two_files_gives_two_file_changes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    std::fs::write(a.join("one.py"), "x = 1\ny = 2\n").unwrap();
    std::fs::write(b.join("one.py"), "x = 1\ny = 3\n").unwrap();
    std::fs::write(a.join("two.py"), "print('a')\n").unwrap();
    std::fs::write(b.join("two.py"), "print('b')\nprint('c')\n").unwrap();
    let text = gnu_diff(&["-ruN"], &a, &b);
    let cs = parse_unified_diff(&text).unwrap();
    assert_eq!(cs.files.len(), 2);
    assert!(cs.files.iter().all(|f| f.hunks.len() == 1));
}

#[test]
fn rejected_remainder_carries_only_rejected_notes() {
    let mut rng = rng(3);
    for _ in 0..500 {
        let code = gen_code(&mut rng);
        let cs = ChangeSet { files: code.files.clone() };
        let mut decisions = BTreeMap::new();
        for f in &cs.files {
            for h in 0..f.hunks.len() {
                let d = if rng.random_bool(0.5) { HunkDecision::Approved } else { HunkDecision::Rejected };
                decisions.insert(HunkKey::new(f.path.clone(), h), d);
            }
        }
        let p = materialize_decisions(&cs, &decisions, &code.line_annotations).unwrap();
        let rejected: BTreeSet<&HunkKey> =
            decisions.iter().filter(|(_, d)| **d == HunkDecision::Rejected).map(|(k, _)| k).collect();
        let want: Vec<&LineAnnotation> = code
            .line_annotations
            .iter()
            .filter(|a| rejected.contains(&HunkKey::new(a.path.clone(), a.hunk_index)))
            .collect();
        let mut got: Vec<&LineAnnotation> = p.rejected_notes.iter().collect();
        let mut want = want;
        got.sort_by_key(|a| (&a.path, a.hunk_index, a.line_offset, &a.note));
        want.sort_by_key(|a| (&a.path, a.hunk_index, a.line_offset, &a.note));
        assert_eq!(got, want);
    }
}

#[test]
fn pending_and_dangling_decisions_are_refused() {
    let mut rng = rng(4);
    let code = gen_code(&mut rng);
    let cs = ChangeSet { files: code.files.clone() };
    assert!(matches!(materialize_decisions(&cs, &BTreeMap::new(), &[]), Err(MaterializeError::Pending { .. })));
    let mut decisions = BTreeMap::new();
    decisions.insert(HunkKey::new("nowhere.py", 0), HunkDecision::Approved);
    assert!(matches!(materialize_decisions(&cs, &decisions, &[]), Err(MaterializeError::DanglingKey { .. })));
}

/// Hunks by path and old-side identity; new-side starts shift with the subset.
fn hunk_multiset(cs: &ChangeSet) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = cs
        .files
        .iter()
        .flat_map(|f| f.hunks.iter().map(move |h| (f.path.clone(), format!("{:?}", Hunk { new_start: 0, ..h.clone() }))))
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_is_identity_on_hunks(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = ChangeSet { files: gen_code(&mut rng).files };
        let text = render_unified_diff(&cs);
        let back = parse_unified_diff(&text).unwrap();
        prop_assert_eq!(back.files.len(), cs.files.len());
        for (a, b) in back.files.iter().zip(&cs.files) {
            prop_assert_eq!(&a.path, &b.path);
            prop_assert_eq!(a.status, b.status);
            prop_assert_eq!(&a.hunks, &b.hunks);
        }
        prop_assert_eq!(render_unified_diff(&back), text);
    }

    #[test]
    fn partition_is_a_split_of_the_hunk_multiset(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cs = ChangeSet { files: gen_code(&mut rng).files };
        let mut decisions = BTreeMap::new();
        for f in &cs.files {
            for h in 0..f.hunks.len() {
                let d = if rng.random_bool(0.5) { HunkDecision::Approved } else { HunkDecision::Rejected };
                decisions.insert(HunkKey::new(f.path.clone(), h), d);
            }
        }
        let p = materialize_decisions(&cs, &decisions, &[]).unwrap();
        let mut keys: Vec<&HunkKey> = p.approved_keys.iter().chain(&p.rejected_keys).collect();
        keys.sort();
        let all: Vec<&HunkKey> = decisions.keys().collect();
        prop_assert_eq!(keys, all);
        for k in &p.approved_keys {
            prop_assert_eq!(decisions[k], HunkDecision::Approved);
        }
        let mut joined = hunk_multiset(&p.approved);
        joined.extend(hunk_multiset(&p.rejected));
        joined.sort();
        prop_assert_eq!(joined, hunk_multiset(&cs));
    }
}
