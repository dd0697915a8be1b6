use std::collections::HashSet;

use nexthint_core::catalog::Catalog;
use nexthint_core::snapshot::synth::{keystroke_log, SynthOptions};
use nexthint_core::snapshot::{
    build_step_sequence, dedup, normalize_source, EmbeddedChecker, PipelineOptions, Snapshot, StepSequence,
    SyntaxChecker,
};
use proptest::prelude::*;

fn run(raw: &[Snapshot]) -> StepSequence {
    build_step_sequence(raw, "s", "e", &EmbeddedChecker, PipelineOptions::default()).unwrap()
}

fn check_invariants(raw: &[Snapshot], seq: &StepSequence) {
    // subsequence: each step appears in raw after the previous one
    let mut pos = 0;
    for step in &seq.steps {
        let found = raw[pos..].iter().position(|r| r == step);
        assert!(found.is_some(), "step {} is not in the raw log in order", step.seq_index);
        pos += found.unwrap() + 1;
    }
    for step in &seq.steps {
        assert!(EmbeddedChecker.is_valid(&step.source).unwrap());
    }
    for w in seq.steps.windows(2) {
        assert_ne!(normalize_source(&w[0].source), normalize_source(&w[1].source));
    }
    assert_eq!(seq.steps.len() + seq.provenance.len(), raw.len());
    let removed: HashSet<u64> = seq.provenance.iter().map(|r| r.index).collect();
    assert_eq!(removed.len(), seq.provenance.len());
    assert!(seq.steps.iter().all(|s| !removed.contains(&s.seq_index)));
    let again = run(&seq.steps);
    assert_eq!(again.steps, seq.steps, "not idempotent");
}

fn programs() -> Vec<String> {
    Catalog::builtin()
        .exercises()
        .iter()
        .filter_map(|e| e.model_solution.clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_logs_satisfy_invariants(seed in any::<u64>(), which in 0usize..3) {
        let program = &programs()[which];
        let raw = keystroke_log(program, seed, SynthOptions::default());
        let seq = run(&raw);
        check_invariants(&raw, &seq);
        prop_assert_eq!(&seq.steps.last().unwrap().source, program);
    }

    #[test]
    fn arbitrary_line_logs_satisfy_invariants(
        states in prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec![
                "x = 1", "x = 1  ", "y = x + 1", "print(x)", "print(y)", "if x:", "    pass", "z = (", "",
            ]), 0..5),
            0..25,
        )
    ) {
        let raw: Vec<Snapshot> = states
            .iter()
            .enumerate()
            .map(|(i, lines)| Snapshot::new(i as u64, i as i64, lines.join("\n")))
            .collect();
        let seq = run(&raw);
        check_invariants(&raw, &seq);
    }

    #[test]
    fn dedup_keeps_first(sources in prop::collection::vec("[ab]{0,2} ?", 1..20)) {
        let raw: Vec<Snapshot> = sources.iter().enumerate().map(|(i, s)| Snapshot::new(i as u64, 0, s.as_str())).collect();
        let out = dedup(&raw);
        prop_assert_eq!(&out[0], &raw[0]);
    }
}

#[test]
fn all_invalid_is_empty_with_full_provenance() {
    let raw: Vec<Snapshot> = (0..5).map(|i| Snapshot::new(i, 0, format!("x = ({i}"))).collect();
    let seq = run(&raw);
    assert!(seq.steps.is_empty());
    assert_eq!(seq.provenance.len(), 5);
}

#[test]
fn clean_sequence_is_fixpoint() {
    let raw = vec![
        Snapshot::new(0, 0, "n = int(input())"),
        Snapshot::new(1, 1, "n = int(input())\nfor i in range(n):\n    pass"),
        Snapshot::new(2, 2, "n = int(input())\nfor i in range(n):\n    pass\nprint(n)"),
    ];
    assert_eq!(run(&raw).steps, raw);
}
