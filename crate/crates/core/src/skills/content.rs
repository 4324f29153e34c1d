use std::fmt::Write;

use serde::Serialize;

use super::{sub_skill_name, sub_skill_path, Frontmatter, SkillFile, MAIN_SKILL, TOKEN_ENV};
use crate::model::*;
use crate::samples;

const EXAMPLE_SESSION: &str = "<session_id>";
const EXAMPLE_ACTION: &str = "<action_id>";
const EXAMPLE_TIME: i64 = 1_767_225_600_000;

fn when_to_use(kind: ProposalKind) -> &'static str {
    match kind {
        ProposalKind::Email => "before sending, replying to or forwarding any email",
        ProposalKind::Plan => "before executing a multi-step plan with side effects",
        ProposalKind::Code => "before applying file edits or running a generated command",
        ProposalKind::Memory => "when compacting or revising what you remember about the user",
        ProposalKind::Trajectory => "after a run with failures or retries, to get guidance for the next attempt",
        ProposalKind::Approval => "for any other yes/no or pick-one decision",
    }
}

fn description(kind: ProposalKind) -> &'static str {
    match kind {
        ProposalKind::Email => "Submit an inbox view and a reply draft for paragraph-level human review.",
        ProposalKind::Plan => "Submit a step plan so a human can edit, reorder, remove or constrain steps before execution.",
        ProposalKind::Code => "Submit a unified diff for per-hunk approval and line annotations.",
        ProposalKind::Memory => "Submit a memory summary draft so a human can edit it and choose which preference entries stay loaded.",
        ProposalKind::Trajectory => "Submit an execution trace so a human can annotate failed or recovered steps.",
        ProposalKind::Approval => "Ask a human to pick one option or approve a single prompt.",
    }
}

pub(super) fn main_skill(base: &str, auth: &str) -> SkillFile {
    let mut b = String::new();
    b.push_str("# AgentClick\n\n");
    b.push_str(
        "Route anything a human should look at before you act through the AgentClick server. \
You submit a typed proposal, wait for the outcome, and continue with the artifact the human returns. \
Never act on the original proposal once it has been submitted.\n\n",
    );
    b.push_str("## Connect\n\n");
    let _ = writeln!(b, "The server listens at `{base}`. If it is not running, start it with:\n");
    b.push_str("```sh\nagentclick serve --memory-file ./MEMORY.md\n```\n\n");
    let _ = writeln!(b, "Send this header on every request:\n\n```text\n{auth}\n```\n");
    if auth.contains(TOKEN_ENV) {
        let _ = writeln!(b, "Read the token from the `{TOKEN_ENV}` environment variable. Do not write it to files.\n");
    }
    b.push_str("Bodies are JSON with `Content-Type: application/json`.\n\n");

    b.push_str("## Protocol\n\n");
    let _ = writeln!(
        b,
        "1. At the start of a task, send `GET {base}/api/v1/memory?loaded=true` and follow every returned entry's `reason`. \
Each entry records a correction the human made earlier."
    );
    let _ = writeln!(
        b,
        "2. Send `POST {base}/api/v1/proposals` with a proposal body: `kind`, `title`, `agent_session_id` and `payload`. \
A `201` response carries `session_id`, `review_url` and `revision`. Show `review_url` to the human."
    );
    let _ = writeln!(b, "3. Send `GET {base}/api/v1/proposals/<session_id>/outcome?wait_ms=30000` in a loop:");
    for line in [
        "`200`: the review is finished. The body has `decision`, `final_artifact`, `action_log`, `rewrite_reasons` and `revision`. \
Proceed only if `decision` is `approved`, and use `final_artifact` as-is.",
        "`202`: the human wants a rewrite. The body has `reasons` and `revision`. Rework the artifact, then update it (step 4).",
        "`204`: nothing yet. Poll again.",
    ] {
        let _ = writeln!(b, "   - {line}");
    }
    let _ = writeln!(
        b,
        "4. Send `PUT {base}/api/v1/proposals/<session_id>/artifact` with `{{\"artifact\": <payload>, \"base_revision\": <revision>}}`. \
A `409` response carries `current_revision` and `missed_events`: fold those in and retry with the new revision. \
A `410` means the session is already closed.\n"
    );
    b.push_str("A `422` response lists `errors`, each with a `path` and a `message`. Fix the named field and resubmit.\n\n");

    b.push_str("## Sub-skills\n\n");
    b.push_str("| name | path | when |\n|---|---|---|\n");
    for kind in ProposalKind::ALL {
        let _ = writeln!(b, "| {} | {} | {} |", sub_skill_name(kind), sub_skill_path(kind), when_to_use(kind));
    }
    SkillFile {
        relative_path: MAIN_SKILL.to_string(),
        frontmatter: Some(Frontmatter {
            name: "agentclick".into(),
            description: "Route proposals through a human reviewer before acting, and apply remembered preferences.".into(),
        }),
        body: b,
    }
}

fn schema(kind: ProposalKind) -> &'static str {
    match kind {
        ProposalKind::Email => {
            "- `inbox`: list of `{message_id, from, subject, received_at}`.\n\
- `selected_message`: optional `{message_id, headers, body}`; `message_id` must appear in `inbox`.\n\
- `draft`: list of `{paragraph_id, text}` with unique ids.\n"
        }
        ProposalKind::Plan => {
            "- `steps`: list of `{step_id, description, step_type, constraints}` with unique ids.\n\
- `step_type` is one of `tool_call`, `file_op`, `code_exec`, `analysis`, `other`.\n\
- `constraints`: list of strings; reviewers append to it.\n"
        }
        ProposalKind::Code => {
            "- `command`: optional command you intend to run.\n\
- `explanation`: what the change does.\n\
- `files`: list of `{path, status, old_content, new_content, hunks}`; `status` is `added`, `deleted` or `modified`.\n\
- `diff`: optional unified diff text. Files and hunks are filled from it, so `files` may be left empty when `diff` is given.\n\
- `hunk_decisions` and `line_annotations` are written by the reviewer; submit them empty.\n"
        }
        ProposalKind::Memory => {
            "- `summary_draft`: your proposed summary text.\n\
- `touched_entries`: the memory entries this summary covers, as returned by the memory read, each with `entry_id`, `kind`, `reason` and `loaded`.\n"
        }
        ProposalKind::Trajectory => {
            "- `steps`: list of `{step_id, step_type, status, detail, tokens, annotations}` with unique ids.\n\
- `step_type` is one of `tool_call`, `tool_result`, `error`, `retry`, `message`.\n\
- `status` is `ok`, `failed` or `recovered`; a `recovered` step must follow a `failed` one.\n"
        }
        ProposalKind::Approval => {
            "- `prompt`: the question for the human.\n\
- `options`: non-empty list of `{option_id, label}`.\n\
- `selected`: optional preselected `option_id`.\n"
        }
    }
}

fn action_notes(kind: ProposalKind) -> &'static str {
    match kind {
        ProposalKind::Email => {
            "Edited and deleted paragraphs arrive in `final_artifact.draft`. A `rewrite_request` reaches you as a `202` with the human's reason. \
Rewrite the named paragraph (or the whole draft when no paragraph is named), keep the same `paragraph_id` values, and update the artifact. \
Send the email only after a `200` with `decision` `approved`, and send `final_artifact.draft` verbatim.\n"
        }
        ProposalKind::Plan => {
            "Execute `final_artifact.steps` in the order given, skipping nothing and adding nothing. \
Treat every string in a step's `constraints` as a hard requirement for that step. A `rewrite_request` arrives as a `202`; revise the plan and update it.\n"
        }
        ProposalKind::Code => {
            "Apply only hunks whose decision in `final_artifact.hunk_decisions` is `approved`. \
Rejected hunks come back with `line_annotations` explaining why; rework those and submit a new proposal for them. \
Run `command` only after a `200` with `decision` `approved`.\n"
        }
        ProposalKind::Memory => {
            "On approval the server stores `final_artifact.summary_draft` in the memory file. \
Entries the human unloaded stop appearing in `GET` memory reads with `loaded=true`; do not apply them.\n"
        }
        ProposalKind::Trajectory => {
            "Read each step's `annotations` in `final_artifact`. They are guidance for the next attempt; apply them before retrying. \
Guidance is also stored in memory and will come back on later memory reads.\n"
        }
        ProposalKind::Approval => {
            "Act on `final_artifact.selected` when `decision` is `approved`. Treat `rejected` and `expired` as a no.\n"
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("sample values serialize")
}

fn example_outcome(kind: ProposalKind) -> ReviewOutcome {
    let mut artifact = samples::sample_for(kind);
    normalize_artifact(&mut artifact).expect("samples are valid");
    let action = ReviewAction {
        action_id: EXAMPLE_ACTION.to_string(),
        op: samples::sample_action(kind),
        reviewer_note: None,
        timestamp: EXAMPLE_TIME,
    };
    let final_artifact = reduce(&artifact, &action).expect("sample action applies");
    let rewrite_reasons = action.op.preference_reason().map(str::to_string).into_iter().collect();
    ReviewOutcome {
        session_id: EXAMPLE_SESSION.to_string(),
        decision: Decision::Approved,
        final_artifact,
        action_log: vec![LoggedAction { sequence_number: 1, action }],
        rewrite_reasons,
        revision: 1,
    }
}

pub(super) fn sub_skill(kind: ProposalKind, base: &str, auth: &str) -> SkillFile {
    let mut b = String::new();
    let _ = writeln!(b, "# AgentClick: {kind} review\n");
    let _ = writeln!(b, "Use this {}.\n", when_to_use(kind));
    let _ = writeln!(b, "## Payload\n\nSubmit `kind` `{kind}` with a `payload` object:\n");
    b.push_str(schema(kind));
    b.push_str("\n## Review actions\n\nThe human may apply these actions:\n\n");
    for name in allowed_actions(kind) {
        let _ = writeln!(b, "- `{name}`");
    }
    b.push_str("\nAll of them are recorded in `action_log` in order.\n\n## Result handling\n\n");
    b.push_str(action_notes(kind));

    let mut request = serde_json::to_value(samples::proposal(&format!("Example {kind} proposal"), samples::sample_for(kind)))
        .expect("sample values serialize");
    if let Some(obj) = request.as_object_mut() {
        obj.remove("created_at");
    }
    let _ = writeln!(
        b,
        "\n## Example\n\nSend `POST {base}/api/v1/proposals` with `{auth}` and this body:\n\n```json\n{}\n```\n",
        pretty(&request)
    );
    if kind == ProposalKind::Email {
        let interim = serde_json::json!({ "reasons": [samples::EMOJI_REASON], "revision": 1 });
        let _ = writeln!(
            b,
            "While you poll `GET {base}/api/v1/proposals/{EXAMPLE_SESSION}/outcome?wait_ms=30000`, a rewrite request arrives as `202`:\n\n```json\n{}\n```\n",
            pretty(&interim)
        );
    }
    let _ = writeln!(
        b,
        "A finished review returns `200` from `GET {base}/api/v1/proposals/{EXAMPLE_SESSION}/outcome?wait_ms=30000`:\n\n```json\n{}\n```",
        pretty(&example_outcome(kind))
    );
    SkillFile {
        relative_path: sub_skill_path(kind),
        frontmatter: Some(Frontmatter { name: sub_skill_name(kind), description: description(kind).into() }),
        body: b,
    }
}
