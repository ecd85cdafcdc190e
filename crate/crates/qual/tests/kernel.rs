use qual::assert::{simplify, LeqMethod, Mode};
use qual::kernel::{check_derivation, fuzz_soundness, parse_derivation, CheckedTriple, KernelError, RuleKind};
use qual::semantics::{holds_semantically, DomainBounds};
use qual::smt::SolverHandle;

const CHOICE: &str = r#"
; pay on the left branch, then take a refund
(B:Seq {}
  (B:ChoiceL {C2: "tick(5);"}
    (B:Tick {P: "x", C: "tick(1);"}))
  (B:Tick {P: "x - 1", C: "tick(-2);"}))
"#;

fn bounds() -> DomainBounds {
    DomainBounds::uniform(-3, 3)
}

fn holds(t: &CheckedTriple) -> bool {
    holds_semantically(t.mode, &t.pre, &t.cmd, &t.post, &bounds(), &["x".to_string()], &[]).unwrap().is_true()
}

#[test]
fn derivation_text_checks_under_both_methods() {
    let d = parse_derivation(CHOICE).unwrap();
    assert_eq!(d.size(), 4);
    let b = bounds();
    let h = SolverHandle::default();
    let by_enum = check_derivation(&d, LeqMethod::Bounded(&b)).unwrap();
    let by_smt = check_derivation(&d, LeqMethod::Smt(&h)).unwrap();
    assert_eq!(by_enum, by_smt);
    assert_eq!(by_smt.mode, Mode::B);
    assert_eq!(simplify(&by_smt.post).to_string(), "x + 1");
    assert!(holds(&by_smt));
}

#[test]
fn ill_fitting_premises_are_rejected() {
    // The second premise does not start from the first one's postcondition.
    let gap = CHOICE.replace("\"x - 1\"", "\"x + 4\"");
    let d = parse_derivation(&gap).unwrap();
    match check_derivation(&d, LeqMethod::Bounded(&bounds())) {
        Err(KernelError::Schema { rule, at, .. } | KernelError::SideCondition { rule, at, .. }) => {
            assert_eq!(rule.kind, RuleKind::Seq);
            assert_eq!(at, "root");
        }
        other => panic!("{other:?}"),
    }
    // SeqL only exists in the exhausting system.
    assert!(matches!(parse_derivation("(B:SeqL {})"), Err(KernelError::Syntax { .. })));
}

#[test]
fn syntax_errors_report_the_line() {
    match parse_derivation("(B:Tick {P: \"1\",\n  C: \"tick(1);\"\n") {
        Err(KernelError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_derivation("(B:Tick {P: \"1\", P: \"2\"})"), Err(KernelError::Syntax { .. })));
}

#[test]
fn small_fuzz_run_is_sound_and_covers_every_system() {
    let report = fuzz_soundness(7, 60, (-2, 2));
    assert!(report.passed(), "{:?}", report.failures.first());
    assert_eq!(report.checked, 60);
    assert_eq!(report.per_mode.len(), 3);
    assert!(report.per_mode.values().all(|&n| n == 20));
}
