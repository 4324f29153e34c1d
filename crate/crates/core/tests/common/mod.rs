#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use agentclick::api::{self, RunningServer, ServerConfig};
use agentclick::model::*;
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

pub const TOKEN: &str = "test-token-0123456789abcdef";

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "alpha", "batch", "cifar", "epoch", "gpu", "lunch", "tuesday", "résumé", "naïve", "🙂", "\"quoted\"", "a\\b",
    "<tag>", "x=1", "tab\there", "end.",
];

pub fn text(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn hex_id(rng: &mut StdRng) -> String {
    format!("{:032x}", rng.random::<u128>())
}

fn plan_step_type(rng: &mut StdRng) -> PlanStepType {
    *[PlanStepType::ToolCall, PlanStepType::FileOp, PlanStepType::CodeExec, PlanStepType::Analysis, PlanStepType::Other]
        .choose(rng)
        .unwrap()
}

pub fn gen_plan(rng: &mut StdRng, steps: usize) -> PlanArtifact {
    PlanArtifact {
        steps: (0..steps)
            .map(|i| PlanStep {
                step_id: format!("s{i}"),
                description: text(rng, 6),
                step_type: plan_step_type(rng),
                constraints: (0..rng.random_range(0..3)).map(|_| text(rng, 4)).collect(),
            })
            .collect(),
    }
}

fn gen_hunks(rng: &mut StdRng) -> Vec<Hunk> {
    let mut hunks = Vec::new();
    let mut cursor = 1u32;
    let mut delta = 0i64;
    for _ in 0..rng.random_range(1..4) {
        let gap = rng.random_range(0..5);
        let mut lines: Vec<HunkLine> = (0..rng.random_range(1..7))
            .map(|_| {
                let tag = *[LineTag::Context, LineTag::Add, LineTag::Del].choose(rng).unwrap();
                HunkLine { tag, text: text(rng, 3) }
            })
            .collect();
        if lines.iter().all(|l| l.tag == LineTag::Add) {
            lines.push(HunkLine { tag: LineTag::Context, text: "ctx".into() });
        }
        let old_len = lines.iter().filter(|l| l.tag != LineTag::Add).count() as u32;
        let new_len = lines.iter().filter(|l| l.tag != LineTag::Del).count() as u32;
        let old_start = cursor + gap;
        let new_start = (old_start as i64 + delta).max(0) as u32;
        delta += new_len as i64 - old_len as i64;
        cursor = old_start + old_len;
        hunks.push(Hunk { old_start, old_len, new_start, new_len, lines, old_missing_newline: false, new_missing_newline: false });
    }
    hunks
}

fn whole_file_hunk(content_lines: &[String], tag: LineTag) -> Hunk {
    let n = content_lines.len() as u32;
    let (old_start, old_len, new_start, new_len) = if tag == LineTag::Add { (0, 0, 1, n) } else { (1, n, 0, 0) };
    Hunk {
        old_start,
        old_len,
        new_start,
        new_len,
        lines: content_lines.iter().map(|t| HunkLine { tag, text: t.clone() }).collect(),
        old_missing_newline: false,
        new_missing_newline: false,
    }
}

pub fn gen_code(rng: &mut StdRng) -> CodeArtifact {
    let mut files = Vec::new();
    for i in 0..rng.random_range(1..4) {
        let path = format!("src/f{i}.py");
        let file = match rng.random_range(0..4) {
            0 => {
                let lines: Vec<String> = (0..rng.random_range(1..5)).map(|_| text(rng, 3)).collect();
                FileChange {
                    path,
                    status: FileStatus::Added,
                    old_content: None,
                    new_content: Some(lines.iter().map(|l| format!("{l}\n")).collect()),
                    hunks: vec![whole_file_hunk(&lines, LineTag::Add)],
                }
            }
            1 => {
                let lines: Vec<String> = (0..rng.random_range(1..5)).map(|_| text(rng, 3)).collect();
                FileChange {
                    path,
                    status: FileStatus::Deleted,
                    old_content: Some(lines.iter().map(|l| format!("{l}\n")).collect()),
                    new_content: None,
                    hunks: vec![whole_file_hunk(&lines, LineTag::Del)],
                }
            }
            _ => FileChange { path, status: FileStatus::Modified, old_content: None, new_content: None, hunks: gen_hunks(rng) },
        };
        files.push(file);
    }
    let mut hunk_decisions = BTreeMap::new();
    let mut line_annotations = Vec::new();
    for f in &files {
        for (h, hunk) in f.hunks.iter().enumerate() {
            if rng.random_bool(0.3) {
                let d = *[HunkDecision::Approved, HunkDecision::Rejected, HunkDecision::Pending].choose(rng).unwrap();
                hunk_decisions.insert(HunkKey::new(f.path.clone(), h), d);
            }
            if rng.random_bool(0.2) {
                line_annotations.push(LineAnnotation {
                    path: f.path.clone(),
                    hunk_index: h,
                    line_offset: rng.random_range(0..hunk.lines.len()),
                    note: text(rng, 4),
                });
            }
        }
    }
    CodeArtifact { command: "python train.py".into(), explanation: text(rng, 8), files, diff: None, hunk_decisions, line_annotations }
}

pub fn gen_entry(rng: &mut StdRng) -> MemoryEntry {
    MemoryEntry {
        entry_id: hex_id(rng),
        kind: *ProposalKind::ALL.choose(rng).unwrap(),
        reason: text(rng, 6),
        before: rng.random_bool(0.5).then(|| text(rng, 6)),
        after: rng.random_bool(0.5).then(|| text(rng, 6)),
        created_at: rng.random_range(0..2_000_000_000_000),
        loaded: rng.random_bool(0.5),
        before_truncated: false,
        after_truncated: false,
    }
}

pub fn gen_artifact(rng: &mut StdRng, kind: ProposalKind) -> ArtifactPayload {
    match kind {
        ProposalKind::Email => {
            let inbox: Vec<InboxItem> = (0..rng.random_range(0..4))
                .map(|i| InboxItem {
                    message_id: format!("m{i}"),
                    from: "dana@example.com".into(),
                    subject: text(rng, 4),
                    received_at: rng.random_range(0..2_000_000_000_000),
                })
                .collect();
            let selected_message = match inbox.choose(rng) {
                Some(m) if rng.random_bool(0.5) => Some(FullMessage {
                    message_id: m.message_id.clone(),
                    headers: BTreeMap::from([("Subject".to_string(), m.subject.clone())]),
                    body: text(rng, 10),
                }),
                _ => None,
            };
            let draft = (0..rng.random_range(1..6))
                .map(|i| Paragraph { paragraph_id: format!("p{i}"), text: text(rng, 8) })
                .collect();
            ArtifactPayload::Email(EmailArtifact { inbox, selected_message, draft })
        }
        ProposalKind::Plan => {
            let n = rng.random_range(1..9);
            ArtifactPayload::Plan(gen_plan(rng, n))
        }
        ProposalKind::Code => ArtifactPayload::Code(gen_code(rng)),
        ProposalKind::Memory => {
            let touched_entries = (0..rng.random_range(0..4)).map(|_| gen_entry(rng)).collect();
            ArtifactPayload::Memory(MemoryArtifact { summary_draft: text(rng, 10), touched_entries })
        }
        ProposalKind::Trajectory => {
            let mut failed = false;
            let steps = (0..rng.random_range(1..7))
                .map(|i| {
                    let mut status = *[TrajStatus::Ok, TrajStatus::Failed, TrajStatus::Recovered].choose(rng).unwrap();
                    if status == TrajStatus::Recovered && !failed {
                        status = TrajStatus::Ok;
                    }
                    failed |= status == TrajStatus::Failed;
                    TrajStep {
                        step_id: format!("t{i}"),
                        step_type: *[TrajStepType::ToolCall, TrajStepType::ToolResult, TrajStepType::Error, TrajStepType::Retry, TrajStepType::Message]
                            .choose(rng)
                            .unwrap(),
                        status,
                        detail: text(rng, 6),
                        tokens: rng.random_bool(0.5).then(|| rng.random_range(0..10_000)),
                        annotations: Vec::new(),
                    }
                })
                .collect();
            ArtifactPayload::Trajectory(TrajectoryArtifact { steps })
        }
        ProposalKind::Approval => {
            let options: Vec<ApprovalOption> = (0..rng.random_range(1..5))
                .map(|i| ApprovalOption { option_id: format!("o{i}"), label: text(rng, 3) })
                .collect();
            let selected = options.choose(rng).filter(|_| rng.random_bool(0.3)).map(|o| o.option_id.clone());
            ArtifactPayload::Approval(ApprovalArtifact { prompt: text(rng, 6), options, selected })
        }
    }
}

pub fn proposal_for(payload: ArtifactPayload) -> Proposal {
    Proposal { kind: payload.kind(), title: "generated".into(), agent_session_id: "agent-1".into(), created_at: 0, payload }
}

/// A random action for `artifact`. Most are applicable; about one in ten
/// references something that does not exist.
pub fn gen_action(rng: &mut StdRng, artifact: &ArtifactPayload) -> ActionOp {
    let dangling = rng.random_bool(0.1);
    let pick = |rng: &mut StdRng, ids: Vec<String>| -> Option<String> {
        if dangling {
            Some("missing-id".into())
        } else {
            ids.choose(rng).cloned()
        }
    };
    let fallback = ActionOp::Reject { reason: rng.random_bool(0.5).then(|| text(rng, 4)) };
    let op = match artifact {
        ArtifactPayload::Email(e) => {
            let ids: Vec<String> = e.draft.iter().map(|p| p.paragraph_id.clone()).collect();
            match rng.random_range(0..3) {
                0 => pick(rng, ids).map(|id| ActionOp::EditParagraph { paragraph_id: id, new_text: text(rng, 8) }),
                1 => pick(rng, ids).map(|id| ActionOp::DeleteParagraph { paragraph_id: id }),
                _ => Some(ActionOp::RewriteRequest { paragraph_id: pick(rng, ids), reason: text(rng, 5) }),
            }
        }
        ArtifactPayload::Plan(p) => {
            let ids: Vec<String> = p.steps.iter().map(|s| s.step_id.clone()).collect();
            match rng.random_range(0..5) {
                0 => pick(rng, ids).map(|id| ActionOp::EditStep { step_id: id, new_description: text(rng, 6) }),
                1 => pick(rng, ids).map(|id| ActionOp::RemoveStep { step_id: id }),
                2 => pick(rng, ids).map(|id| ActionOp::AddConstraint { step_id: id, constraint: text(rng, 5) }),
                3 => {
                    let mut order = ids;
                    order.shuffle(rng);
                    if dangling {
                        order.push("missing-id".into());
                    }
                    Some(ActionOp::ReorderSteps { new_order: order })
                }
                _ => Some(ActionOp::RewriteRequest { paragraph_id: None, reason: text(rng, 5) }),
            }
        }
        ArtifactPayload::Code(c) => {
            let hunks: Vec<(String, usize, usize)> = c
                .files
                .iter()
                .flat_map(|f| f.hunks.iter().enumerate().map(|(i, h)| (f.path.clone(), i, h.lines.len())))
                .collect();
            let target = if dangling { Some(("src/missing.py".to_string(), 0, 1)) } else { hunks.choose(rng).cloned() };
            match (rng.random_range(0..3), target) {
                (0, Some((path, hunk_index, _))) => Some(ActionOp::SetHunkDecision {
                    path,
                    hunk_index,
                    decision: *[HunkDecision::Approved, HunkDecision::Rejected, HunkDecision::Pending].choose(rng).unwrap(),
                }),
                (1, Some((path, hunk_index, n))) => Some(ActionOp::AnnotateLine {
                    path,
                    hunk_index,
                    line_offset: rng.random_range(0..n),
                    note: text(rng, 4),
                }),
                _ => Some(ActionOp::RewriteRequest { paragraph_id: None, reason: text(rng, 5) }),
            }
        }
        ArtifactPayload::Memory(m) => {
            let ids: Vec<String> = m.touched_entries.iter().map(|e| e.entry_id.clone()).collect();
            match rng.random_range(0..3) {
                0 => Some(ActionOp::EditSummary { new_text: text(rng, 10) }),
                1 => pick(rng, ids).map(|id| ActionOp::LoadEntry { entry_id: id }),
                _ => pick(rng, ids).map(|id| ActionOp::UnloadEntry { entry_id: id }),
            }
        }
        ArtifactPayload::Trajectory(t) => {
            let ids: Vec<String> = t.steps.iter().map(|s| s.step_id.clone()).collect();
            pick(rng, ids).map(|id| ActionOp::AnnotateStep { step_id: id, guidance: text(rng, 6) })
        }
        ArtifactPayload::Approval(a) => {
            let ids: Vec<String> = a.options.iter().map(|o| o.option_id.clone()).collect();
            pick(rng, ids).map(|id| ActionOp::SelectOption { option_id: id })
        }
    };
    if rng.random_bool(0.05) {
        return ActionOp::Approve {};
    }
    op.unwrap_or(fallback)
}

const COMPATIBLE: &[(&str, &[&str])] = &[
    ("email", &["edit_paragraph", "delete_paragraph", "rewrite_request", "approve", "reject"]),
    ("plan", &["edit_step", "reorder_steps", "remove_step", "add_constraint", "rewrite_request", "approve", "reject"]),
    ("code", &["set_hunk_decision", "annotate_line", "rewrite_request", "approve", "reject"]),
    ("memory", &["edit_summary", "load_entry", "unload_entry", "approve", "reject"]),
    ("trajectory", &["annotate_step", "approve", "reject"]),
    ("approval", &["select_option", "approve", "reject"]),
];

pub fn oracle_compatible(kind: &str, action: &str) -> bool {
    COMPATIBLE.iter().any(|(k, names)| *k == kind && names.contains(&action))
}

fn find_mut<'a>(list: &'a mut Value, key: &str, id: &str) -> Option<&'a mut Value> {
    list.as_array_mut()?.iter_mut().find(|v| v[key] == id)
}

fn position(list: &Value, key: &str, id: &str) -> Option<usize> {
    list.as_array()?.iter().position(|v| v[key] == id)
}

fn non_blank(v: &Value) -> bool {
    v.as_str().is_some_and(|s| !s.trim().is_empty())
}

/// Applies an action to an artifact using plain JSON manipulation. `None`
/// means the action must be refused.
pub fn oracle_reduce(artifact: &Value, action: &Value) -> Option<Value> {
    let kind = artifact["kind"].as_str()?;
    let ty = action["type"].as_str()?;
    if !oracle_compatible(kind, ty) {
        return None;
    }
    let mut a = artifact.clone();
    match ty {
        "approve" | "reject" => {}
        "edit_paragraph" => {
            find_mut(&mut a["draft"], "paragraph_id", action["paragraph_id"].as_str()?)?["text"] = action["new_text"].clone();
        }
        "delete_paragraph" => {
            let i = position(&a["draft"], "paragraph_id", action["paragraph_id"].as_str()?)?;
            a["draft"].as_array_mut()?.remove(i);
        }
        "rewrite_request" => {
            if !non_blank(&action["reason"]) {
                return None;
            }
            if let Some(target) = action["paragraph_id"].as_str() {
                let found = match kind {
                    "email" => position(&a["draft"], "paragraph_id", target).is_some(),
                    "plan" => position(&a["steps"], "step_id", target).is_some(),
                    "code" => position(&a["files"], "path", target).is_some(),
                    _ => false,
                };
                if !found {
                    return None;
                }
            }
        }
        "edit_step" => {
            find_mut(&mut a["steps"], "step_id", action["step_id"].as_str()?)?["description"] = action["new_description"].clone();
        }
        "remove_step" => {
            let i = position(&a["steps"], "step_id", action["step_id"].as_str()?)?;
            a["steps"].as_array_mut()?.remove(i);
        }
        "add_constraint" => {
            if !non_blank(&action["constraint"]) {
                return None;
            }
            let step = find_mut(&mut a["steps"], "step_id", action["step_id"].as_str()?)?;
            step["constraints"].as_array_mut()?.push(action["constraint"].clone());
        }
        "reorder_steps" => {
            let order = action["new_order"].as_array()?;
            let steps = a["steps"].as_array()?.clone();
            if order.len() != steps.len() {
                return None;
            }
            let mut out = Vec::new();
            let mut used = vec![false; steps.len()];
            for id in order {
                let i = steps.iter().position(|s| &s["step_id"] == id)?;
                if used[i] {
                    return None;
                }
                used[i] = true;
                out.push(steps[i].clone());
            }
            a["steps"] = Value::Array(out);
        }
        "set_hunk_decision" | "annotate_line" => {
            let path = action["path"].as_str()?;
            let idx = action["hunk_index"].as_u64()? as usize;
            let file = a["files"].as_array()?.iter().find(|f| f["path"] == path)?;
            let hunk = file["hunks"].as_array()?.get(idx)?.clone();
            if ty == "annotate_line" {
                if action["line_offset"].as_u64()? as usize >= hunk["lines"].as_array()?.len() {
                    return None;
                }
                a["line_annotations"].as_array_mut()?.push(json!({
                    "path": path, "hunk_index": idx, "line_offset": action["line_offset"], "note": action["note"],
                }));
            } else {
                let list = a["hunk_decisions"].as_array_mut()?;
                list.retain(|d| !(d["path"] == path && d["hunk_index"] == idx));
                list.push(json!({"path": path, "hunk_index": idx, "decision": action["decision"]}));
                list.sort_by(|x, y| {
                    (x["path"].as_str(), x["hunk_index"].as_u64()).cmp(&(y["path"].as_str(), y["hunk_index"].as_u64()))
                });
            }
        }
        "edit_summary" => {
            if !non_blank(&action["new_text"]) {
                return None;
            }
            a["summary_draft"] = action["new_text"].clone();
        }
        "load_entry" | "unload_entry" => {
            let entry = find_mut(&mut a["touched_entries"], "entry_id", action["entry_id"].as_str()?)?;
            entry["loaded"] = Value::Bool(ty == "load_entry");
        }
        "annotate_step" => {
            if !non_blank(&action["guidance"]) {
                return None;
            }
            let step = find_mut(&mut a["steps"], "step_id", action["step_id"].as_str()?)?;
            step["annotations"].as_array_mut()?.push(action["guidance"].clone());
        }
        "select_option" => {
            let id = action["option_id"].as_str()?;
            position(&a["options"], "option_id", id)?;
            a["selected"] = Value::String(id.into());
        }
        _ => return None,
    }
    Some(a)
}

pub fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap()
}

pub fn server_config(dir: &Path) -> ServerConfig {
    ServerConfig {
        port: 0,
        data_dir: Some(dir.join("data")),
        memory_file: dir.join("MEMORY.md"),
        token: Some(TOKEN.into()),
        fsync: false,
        ..ServerConfig::default()
    }
}

pub async fn start_server(dir: &Path) -> RunningServer {
    api::start(server_config(dir)).await.expect("server starts")
}

/// A small HTTP helper bound to one server.
pub struct Http {
    pub base: String,
    pub client: reqwest::Client,
    pub token: Option<String>,
}

impl Http {
    pub fn new(base: &str) -> Self {
        Http { base: base.to_string(), client: agentclick::harness::client(), token: Some(TOKEN.into()) }
    }

    pub fn anonymous(base: &str) -> Self {
        Http { token: None, ..Http::new(base) }
    }

    fn req(&self, method: reqwest::Method, path: &str) -> reqwest::RequestBuilder {
        let mut r = self.client.request(method, format!("{}/api/v1{}", self.base, path));
        if let Some(t) = &self.token {
            r = r.bearer_auth(t);
        }
        r
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        finish(self.req(reqwest::Method::GET, path)).await
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        finish(self.req(reqwest::Method::POST, path).json(body)).await
    }

    pub async fn put(&self, path: &str, body: &Value) -> (u16, Value) {
        finish(self.req(reqwest::Method::PUT, path).json(body)).await
    }

    pub async fn raw(&self, method: reqwest::Method, path: &str) -> reqwest::RequestBuilder {
        self.req(method, path)
    }

    pub async fn submit(&self, proposal: &Proposal) -> String {
        let (status, body) = self.post("/proposals", &to_value(proposal)).await;
        assert_eq!(status, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

pub async fn finish(req: reqwest::RequestBuilder) -> (u16, Value) {
    let resp = req.send().await.expect("request");
    let status = resp.status().as_u16();
    let bytes = resp.bytes().await.expect("body");
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, body)
}
