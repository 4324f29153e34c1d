//! Canonical sample artifacts, one or more per kind.
//!
//! These feed the generated skill files, the scenario scripts and the test
//! suite, so the documented wire examples and the tested ones are the same
//! values.

use std::collections::BTreeMap;

use crate::model::*;

pub const CHECKPOINT_CONSTRAINT: &str = "Save checkpoint every 10 epochs + best model by val accuracy";
pub const GPU_CONSTRAINT: &str = "Monitor GPU utilization; ensure >90% utilization for efficiency";
pub const EMOJI_REASON: &str = "use emoji and adopt a lighter style";

pub fn proposal(title: &str, payload: ArtifactPayload) -> Proposal {
    Proposal {
        kind: payload.kind(),
        title: title.to_string(),
        agent_session_id: "demo-agent".to_string(),
        created_at: 0,
        payload,
    }
}

fn step(id: &str, step_type: PlanStepType, description: &str) -> PlanStep {
    PlanStep { step_id: id.into(), description: description.into(), step_type, constraints: Vec::new() }
}

/// A seven-step plan for training ResNet-18 on CIFAR-10.
pub fn resnet_plan() -> ArtifactPayload {
    ArtifactPayload::Plan(PlanArtifact {
        steps: vec![
            step("environment-setup", PlanStepType::ToolCall, "Create a virtualenv and install torch and torchvision"),
            step("data-pipeline", PlanStepType::FileOp, "Write data.py: CIFAR-10 loaders with crop/flip augmentation"),
            step("framework-config", PlanStepType::Analysis, "Use PyTorch; SGD lr=0.1 momentum=0.9, cosine schedule, 200 epochs"),
            step("training-loop", PlanStepType::FileOp, "Write train.py with the ResNet-18 training loop"),
            step("execution", PlanStepType::CodeExec, "Run python train.py on the GPU"),
            step("checkpointing", PlanStepType::FileOp, "Persist weights to checkpoints/"),
            step("evaluation", PlanStepType::CodeExec, "Evaluate the final model on the CIFAR-10 test split"),
        ],
    })
}

fn inbox() -> Vec<InboxItem> {
    vec![
        InboxItem {
            message_id: "msg-presentation".into(),
            from: "dana@example.com".into(),
            subject: "Draft slides for Thursday".into(),
            received_at: 1_760_000_000_000,
        },
        InboxItem {
            message_id: "msg-lunch".into(),
            from: "lee@example.com".into(),
            subject: "Team lunch?".into(),
            received_at: 1_760_000_600_000,
        },
    ]
}

fn selected(message_id: &str, body: &str) -> FullMessage {
    let mut headers = BTreeMap::new();
    headers.insert("To".to_string(), "me@example.com".to_string());
    FullMessage { message_id: message_id.into(), headers, body: body.into() }
}

fn paragraphs(texts: &[&str]) -> Vec<Paragraph> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Paragraph { paragraph_id: format!("p{}", i + 1), text: t.to_string() })
        .collect()
}

/// A formal reply to a message about a presentation draft.
pub fn formal_email() -> ArtifactPayload {
    ArtifactPayload::Email(EmailArtifact {
        inbox: inbox(),
        selected_message: Some(selected("msg-presentation", "Could you take a look at the slides before Thursday?")),
        draft: paragraphs(&[
            "Dear Dana,",
            "Thank you for sharing the presentation draft. I have reviewed the slides and find the structure sound; I shall forward detailed comments by Wednesday.",
            "Kind regards,",
        ]),
    })
}

/// The same reply after a lighter-style rewrite.
pub fn casual_email() -> ArtifactPayload {
    ArtifactPayload::Email(EmailArtifact {
        inbox: inbox(),
        selected_message: Some(selected("msg-presentation", "Could you take a look at the slides before Thursday?")),
        draft: paragraphs(&[
            "Hi Dana! 👋",
            "Thanks for the draft 🎉 The slides flow nicely, I'll send notes by Wednesday 😊",
            "Cheers,",
        ]),
    })
}

/// A reply to the second inbox message.
pub fn lunch_email() -> ArtifactPayload {
    ArtifactPayload::Email(EmailArtifact {
        inbox: inbox(),
        selected_message: Some(selected("msg-lunch", "Lunch on Friday?")),
        draft: paragraphs(&["Hi Lee,", "Friday works for me.", "Best,"]),
    })
}

pub const TRAIN_PY_OLD: &str = "import torch\nfrom model import resnet18\n\n\ndef main():\n    model = resnet18()\n    epochs = 5\n    lr = 0.1\n    train(model, epochs, lr)\n\n\nif __name__ == \"__main__\":\n    main()\n";
pub const TRAIN_PY_NEW: &str = "import torch\nimport torchvision\nfrom model import resnet18\n\n\ndef main():\n    model = resnet18()\n    epochs = 50\n    lr = 0.1\n    train(model, epochs, lr)\n\n\nif __name__ == \"__main__\":\n    main()\n";
pub const CODE_DIFF: &str = "\
--- a/src/train.py
+++ b/src/train.py
@@ -1,2 +1,3 @@
 import torch
+import torchvision
 from model import resnet18
@@ -6,3 +7,3 @@
     model = resnet18()
-    epochs = 5
+    epochs = 50
     lr = 0.1
--- /dev/null
+++ b/config.yaml
@@ -0,0 +1,2 @@
+seed: 42
+batch_size: 128
";

/// A two-file change submitted as diff text plus full file contents.
/// Hunks are filled in from the diff at validation time.
pub fn code_change() -> ArtifactPayload {
    ArtifactPayload::Code(CodeArtifact {
        command: "python src/train.py".into(),
        explanation: "Import torchvision and train for 50 epochs; add a config file.".into(),
        files: vec![
            FileChange {
                path: "src/train.py".into(),
                status: FileStatus::Modified,
                old_content: Some(TRAIN_PY_OLD.into()),
                new_content: Some(TRAIN_PY_NEW.into()),
                hunks: Vec::new(),
            },
            FileChange {
                path: "config.yaml".into(),
                status: FileStatus::Added,
                old_content: None,
                new_content: Some("seed: 42\nbatch_size: 128\n".into()),
                hunks: Vec::new(),
            },
        ],
        diff: Some(CODE_DIFF.into()),
        hunk_decisions: BTreeMap::new(),
        line_annotations: Vec::new(),
    })
}

/// `code_change` with its hunks filled in.
pub fn code_change_parsed() -> ArtifactPayload {
    let mut payload = code_change();
    normalize_artifact(&mut payload).expect("sample code change is valid");
    payload
}

pub fn entry(entry_id: &str, kind: ProposalKind, reason: &str) -> MemoryEntry {
    MemoryEntry {
        entry_id: entry_id.into(),
        kind,
        reason: reason.into(),
        before: None,
        after: None,
        created_at: 1_760_000_000_000,
        loaded: true,
        before_truncated: false,
        after_truncated: false,
    }
}

pub fn memory_summary() -> ArtifactPayload {
    ArtifactPayload::Memory(MemoryArtifact {
        summary_draft: "Replies to colleagues are casual and use emoji. Training runs checkpoint every 10 epochs.".into(),
        touched_entries: vec![
            entry("0f1e2d3c4b5a69788796a5b4c3d2e1f0", ProposalKind::Email, EMOJI_REASON),
            entry("1f1e2d3c4b5a69788796a5b4c3d2e1f0", ProposalKind::Plan, CHECKPOINT_CONSTRAINT),
            entry("2f1e2d3c4b5a69788796a5b4c3d2e1f0", ProposalKind::Code, "prefer pathlib over os.path"),
        ],
    })
}

fn traj(id: &str, step_type: TrajStepType, status: TrajStatus, detail: &str, tokens: Option<u64>) -> TrajStep {
    TrajStep { step_id: id.into(), step_type, status, detail: detail.into(), tokens, annotations: Vec::new() }
}

/// A run with one failed tool call that a retry recovered.
pub fn flaky_trajectory() -> ArtifactPayload {
    ArtifactPayload::Trajectory(TrajectoryArtifact {
        steps: vec![
            traj("t1", TrajStepType::ToolCall, TrajStatus::Ok, "pip install torch", Some(120)),
            traj("t2", TrajStepType::Error, TrajStatus::Failed, "CUDA out of memory at batch_size=512", Some(80)),
            traj("t3", TrajStepType::Retry, TrajStatus::Recovered, "retry with batch_size=128", Some(95)),
            traj("t4", TrajStepType::Message, TrajStatus::Ok, "training finished, test acc 93.1%", None),
        ],
    })
}

pub fn deploy_approval() -> ArtifactPayload {
    ArtifactPayload::Approval(ApprovalArtifact {
        prompt: "Deploy the trained model?".into(),
        options: vec![
            ApprovalOption { option_id: "staging".into(), label: "Deploy to staging".into() },
            ApprovalOption { option_id: "production".into(), label: "Deploy to production".into() },
        ],
        selected: None,
    })
}

/// One sample per kind, in `ProposalKind::ALL` order.
pub fn all_artifacts() -> Vec<ArtifactPayload> {
    vec![formal_email(), resnet_plan(), code_change_parsed(), memory_summary(), flaky_trajectory(), deploy_approval()]
}

pub fn sample_for(kind: ProposalKind) -> ArtifactPayload {
    match kind {
        ProposalKind::Email => formal_email(),
        ProposalKind::Plan => resnet_plan(),
        ProposalKind::Code => code_change(),
        ProposalKind::Memory => memory_summary(),
        ProposalKind::Trajectory => flaky_trajectory(),
        ProposalKind::Approval => deploy_approval(),
    }
}

/// A representative review action per kind.
pub fn sample_action(kind: ProposalKind) -> ActionOp {
    match kind {
        ProposalKind::Email => ActionOp::RewriteRequest { paragraph_id: Some("p2".into()), reason: EMOJI_REASON.into() },
        ProposalKind::Plan => ActionOp::AddConstraint { step_id: "training-loop".into(), constraint: CHECKPOINT_CONSTRAINT.into() },
        ProposalKind::Code => ActionOp::SetHunkDecision { path: "src/train.py".into(), hunk_index: 0, decision: HunkDecision::Approved },
        ProposalKind::Memory => ActionOp::UnloadEntry { entry_id: "2f1e2d3c4b5a69788796a5b4c3d2e1f0".into() },
        ProposalKind::Trajectory => ActionOp::AnnotateStep { step_id: "t2".into(), guidance: "start at batch_size=128 on this GPU".into() },
        ProposalKind::Approval => ActionOp::SelectOption { option_id: "staging".into() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::apply_hunks;

    #[test]
    fn samples_are_valid() {
        for kind in ProposalKind::ALL {
            let mut payload = sample_for(kind);
            assert!(normalize_artifact(&mut payload).is_ok(), "{kind}");
            assert_eq!(payload.kind(), kind);
            let action = ReviewAction::new(sample_action(kind));
            assert!(reduce(&payload, &action).is_ok(), "{kind}");
        }
    }

    #[test]
    fn code_sample_diff_matches_contents() {
        let ArtifactPayload::Code(code) = code_change_parsed() else { panic!() };
        let all = (0..code.files[0].hunks.len()).collect();
        assert_eq!(apply_hunks(TRAIN_PY_OLD, &code.files[0].hunks, &all).unwrap(), TRAIN_PY_NEW);
    }
}
