mod common;

use agentclick::model::*;
use agentclick::samples;
use common::*;
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// A plan as a plain list of (id, description, constraints).
type NaivePlan = Vec<(String, String, Vec<String>)>;

fn naive(plan: &PlanArtifact) -> NaivePlan {
    plan.steps.iter().map(|s| (s.step_id.clone(), s.description.clone(), s.constraints.clone())).collect()
}

fn naive_apply(plan: &mut NaivePlan, op: &ActionOp) -> bool {
    let idx = |plan: &NaivePlan, id: &str| plan.iter().position(|s| s.0 == id);
    match op {
        ActionOp::EditStep { step_id, new_description } => match idx(plan, step_id) {
            Some(i) => {
                plan[i].1 = new_description.clone();
                true
            }
            None => false,
        },
        ActionOp::RemoveStep { step_id } => match idx(plan, step_id) {
            Some(i) => {
                plan.remove(i);
                true
            }
            None => false,
        },
        ActionOp::AddConstraint { step_id, constraint } => match idx(plan, step_id) {
            Some(i) => {
                plan[i].2.push(constraint.clone());
                true
            }
            None => false,
        },
        ActionOp::ReorderSteps { new_order } => {
            let mut sorted_new = new_order.clone();
            sorted_new.sort();
            let mut sorted_old: Vec<String> = plan.iter().map(|s| s.0.clone()).collect();
            sorted_old.sort();
            if sorted_new != sorted_old {
                return false;
            }
            let old = plan.clone();
            *plan = new_order.iter().map(|id| old.iter().find(|s| &s.0 == id).unwrap().clone()).collect();
            true
        }
        _ => unreachable!(),
    }
}

#[test]
fn fifty_plan_edits_match_a_naive_list_model() {
    for seed in 0..200 {
        let mut rng = rng(seed);
        let mut artifact = ArtifactPayload::Plan(gen_plan(&mut rng, 10));
        let ArtifactPayload::Plan(p) = &artifact else { unreachable!() };
        let mut model = naive(p);
        for _ in 0..50 {
            let ids: Vec<String> = model.iter().map(|s| s.0.clone()).collect();
            let target = if rng.random_bool(0.9) { ids.choose(&mut rng).cloned() } else { None }.unwrap_or_else(|| "gone".into());
            let op = match rng.random_range(0..4) {
                0 => ActionOp::EditStep { step_id: target, new_description: text(&mut rng, 5) },
                1 => ActionOp::RemoveStep { step_id: target },
                2 => ActionOp::AddConstraint { step_id: target, constraint: text(&mut rng, 4) },
                _ => {
                    let mut order = ids;
                    order.shuffle(&mut rng);
                    if rng.random_bool(0.1) {
                        order.pop();
                    }
                    ActionOp::ReorderSteps { new_order: order }
                }
            };
            let accepted = naive_apply(&mut model, &op);
            match reduce(&artifact, &ReviewAction::new(op.clone())) {
                Ok(next) => {
                    assert!(accepted, "seed {seed}: reducer accepted {op:?}");
                    artifact = next;
                }
                Err(_) => assert!(!accepted, "seed {seed}: reducer refused {op:?}"),
            }
            let ArtifactPayload::Plan(p) = &artifact else { unreachable!() };
            assert_eq!(naive(p), model, "seed {seed}");
        }
    }
}

#[test]
fn random_actions_match_the_json_oracle_for_every_kind() {
    let mut rng = rng(0xBEEF);
    let mut applied = 0;
    for i in 0..3000 {
        let artifact = gen_artifact(&mut rng, ProposalKind::ALL[i % 6]);
        let action = ReviewAction::new(gen_action(&mut rng, &artifact));
        let want = oracle_reduce(&to_value(&artifact), &to_value(&action));
        match (reduce(&artifact, &action), want) {
            (Ok(got), Some(want)) => {
                assert_eq!(to_value(&got), want, "case {i}: {:?}", action.op);
                applied += 1;
            }
            (Err(_), None) => {}
            (got, want) => panic!("case {i}: {:?} reducer={got:?} oracle={want:?}", action.op),
        }
    }
    assert!(applied > 2000);
}

#[test]
fn task_constraints_land_verbatim() {
    let plan = samples::resnet_plan();
    let check = "Save checkpoint every 10 epochs + best model by val accuracy";
    let gpu = "Monitor GPU utilization; ensure >90% utilization for efficiency";
    let a = reduce(&plan, &ReviewAction::new(ActionOp::AddConstraint { step_id: "training-loop".into(), constraint: check.into() }))
        .unwrap();
    let b = reduce(&a, &ReviewAction::new(ActionOp::AddConstraint { step_id: "execution".into(), constraint: gpu.into() })).unwrap();
    let ArtifactPayload::Plan(p) = b else { panic!() };
    assert_eq!(p.steps[3].constraints, vec![check.to_string()]);
    assert_eq!(p.steps[4].constraints, vec![gpu.to_string()]);
}

fn ids(a: &ArtifactPayload) -> Vec<String> {
    match a {
        ArtifactPayload::Email(e) => e.draft.iter().map(|p| p.paragraph_id.clone()).collect(),
        ArtifactPayload::Plan(p) => p.steps.iter().map(|s| s.step_id.clone()).collect(),
        ArtifactPayload::Trajectory(t) => t.steps.iter().map(|s| s.step_id.clone()).collect(),
        ArtifactPayload::Memory(m) => m.touched_entries.iter().map(|e| e.entry_id.clone()).collect(),
        ArtifactPayload::Approval(a) => a.options.iter().map(|o| o.option_id.clone()).collect(),
        ArtifactPayload::Code(c) => c.files.iter().map(|f| f.path.clone()).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn reduce_is_pure(seed in any::<u64>(), k in 0usize..6) {
        let mut rng = rng(seed);
        let artifact = gen_artifact(&mut rng, ProposalKind::ALL[k]);
        let snapshot = artifact.clone();
        let action = ReviewAction::new(gen_action(&mut rng, &artifact));
        let first = reduce(&artifact, &action);
        let second = reduce(&artifact, &action);
        prop_assert_eq!(first, second);
        prop_assert_eq!(artifact, snapshot);
    }

    #[test]
    fn actions_outside_the_table_never_succeed(seed in any::<u64>(), k in 0usize..6, other in 0usize..6) {
        let mut rng = rng(seed);
        let artifact = gen_artifact(&mut rng, ProposalKind::ALL[k]);
        let donor = gen_artifact(&mut rng, ProposalKind::ALL[other]);
        let op = gen_action(&mut rng, &donor);
        let compatible = oracle_compatible(ProposalKind::ALL[k].as_str(), op.name());
        let result = reduce(&artifact, &ReviewAction::new(op));
        if !compatible {
            let incompatible = matches!(result, Err(ReduceError::Incompatible { .. }));
            prop_assert!(incompatible);
        }
    }

    #[test]
    fn ids_are_stable_and_delete_removes_one(seed in any::<u64>(), k in 0usize..6) {
        let mut rng = rng(seed);
        let artifact = gen_artifact(&mut rng, ProposalKind::ALL[k]);
        let op = gen_action(&mut rng, &artifact);
        let removes = matches!(op, ActionOp::DeleteParagraph { .. } | ActionOp::RemoveStep { .. });
        let reorders = matches!(op, ActionOp::ReorderSteps { .. });
        if let Ok(next) = reduce(&artifact, &ReviewAction::new(op)) {
            let (before, after) = (ids(&artifact), ids(&next));
            if removes {
                prop_assert_eq!(after.len() + 1, before.len());
                prop_assert!(after.iter().all(|id| before.contains(id)));
            } else if reorders {
                let (mut b, mut a) = (before, after);
                b.sort();
                a.sort();
                prop_assert_eq!(a, b);
            } else {
                prop_assert_eq!(after, before);
            }
        }
    }

    #[test]
    fn intents_leave_content_unchanged(seed in any::<u64>(), k in 0usize..6, reason in "[a-z ]{1,20}[a-z]") {
        let mut rng = rng(seed);
        let artifact = gen_artifact(&mut rng, ProposalKind::ALL[k]);
        prop_assert_eq!(reduce(&artifact, &ReviewAction::new(ActionOp::Approve {})).unwrap(), artifact.clone());
        prop_assert_eq!(reduce(&artifact, &ReviewAction::new(ActionOp::Reject { reason: Some(reason.clone()) })).unwrap(), artifact.clone());
        if oracle_compatible(artifact.kind().as_str(), "rewrite_request") {
            let op = ActionOp::RewriteRequest { paragraph_id: None, reason };
            prop_assert_eq!(reduce(&artifact, &ReviewAction::new(op)).unwrap(), artifact);
        }
    }
}
