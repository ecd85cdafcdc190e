use qual::assert::{leq_bounded, parse_res, LeqResult};
use qual::gen::{random_bool, random_res};
use qual::lang::{parse_bool, DeclKind};
use qual::semantics::DomainBounds;
use qual::semantics::State;
use qual::smt::sexp::{parse_all, Sx};
use qual::smt::{
    check_query, check_query_bounded, decode_array, mangle, query_script, replay, run_solver, solve, Query, Replay,
    SatAnswer, SmtOutcome, SolverError, SolverHandle,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn query(hyp: &str, lhs: &str, rhs: &str) -> Query {
    Query { hyp: parse_bool(hyp).unwrap(), lhs: parse_res(lhs).unwrap(), rhs: parse_res(rhs).unwrap() }
}

/// A stand-in solver that ignores its input and prints `answer`.
fn fake_solver(tag: &str, answer: &str) -> (SolverHandle, PathBuf) {
    let path = std::env::temp_dir().join(format!("qual-fake-{tag}-{}.sh", std::process::id()));
    std::fs::write(&path, format!("#!/bin/sh\ncat > /dev/null &\nprintf '{answer}\\n'\n")).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    (SolverHandle::from_command_line(path.to_str().unwrap()), path)
}

#[test]
fn s_expressions_parse_with_comments_and_strings() {
    let xs = parse_all("(a (b -3)) ; trailing\n\"x y\" c").unwrap();
    assert_eq!(xs.len(), 3);
    assert_eq!(xs[0].head(), Some("a"));
    assert_eq!(xs[0].items()[1].items()[1].as_int(), Some(-3));
    assert_eq!(parse_all("(- 4)").unwrap()[0].as_int(), Some(-4));
    assert!(parse_all("(a (b)").is_err());
}

#[test]
fn names_are_mangled_by_kind() {
    assert_eq!(mangle("x", DeclKind::Scalar), "v_x");
    assert_eq!(mangle("a", DeclKind::Array), "a_a");
    assert_ne!(mangle("x'", DeclKind::Scalar), mangle("x", DeclKind::Scalar));
}

#[test]
fn scripts_declare_every_symbol_once() {
    let q = query("n >= 0", "min([n >= 0], n + 1)", "max(n, a[0])");
    let s = query_script(&q, "ALL");
    assert!(s.contains("(set-logic ALL)"));
    assert_eq!(s.matches("(declare-const v_n Int)").count(), 1);
    assert_eq!(s.matches("(declare-const a_a (Array Int Int))").count(), 1);
    assert!(s.trim_end().ends_with("(check-sat)"));
    assert!(parse_all(&s).is_ok());
}

#[test]
fn array_models_decode() {
    let c = parse_all("((as const (Array Int Int)) 7)").unwrap();
    let a = decode_array(&c[0]).unwrap();
    assert_eq!((a.get(-100), a.get(5)), (7, 7));

    let s = parse_all("(store (store ((as const (Array Int Int)) 0) 1 5) 3 (- 2))").unwrap();
    let a = decode_array(&s[0]).unwrap();
    assert_eq!([a.get(0), a.get(1), a.get(3)], [0, 5, -2]);

    let l = parse_all("(lambda ((x!1 Int)) (ite (= x!1 2) 9 (ite (= x!1 0) 4 1)))").unwrap();
    let a = decode_array(&l[0]).unwrap();
    assert_eq!([a.get(0), a.get(1), a.get(2)], [4, 1, 9]);

    assert!(decode_array(&Sx::atom("a!0")).is_none());
}

#[test]
fn replay_classifies_models() {
    let q = query("x > 0", "x + 1", "x");
    assert_eq!(replay(&q, &State::new().with("x", 2)), Replay::Confirmed);
    // The hypothesis fails, so the model does not refute anything.
    assert_eq!(replay(&q, &State::new().with("x", -1)), Replay::Contradicted);
    let ok = query("true", "x", "x + 1");
    assert_eq!(replay(&ok, &State::new().with("x", 0)), Replay::Contradicted);
    let bound = query("true", "(sup t. min(t, [t <= x]))", "x - 1");
    assert!(matches!(replay(&bound, &State::new().with("x", 0)), Replay::Inconclusive(_)));
}

#[test]
fn solver_proves_and_refutes() {
    let h = SolverHandle::default();
    let proved = check_query(&h, &query("x >= 0", "min([x >= 0], x)", "x + 1")).unwrap();
    assert_eq!(proved.outcome, SmtOutcome::Proved);
    assert!(proved.replay.is_none());

    let refuted = check_query(&h, &query("x >= 0 && x <= 5", "x * 2", "x + 3")).unwrap();
    match refuted.outcome {
        SmtOutcome::Refuted(s) => assert!(s.get("x").unwrap() > 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(refuted.replay, Some(Replay::Confirmed));

    let arrays = check_query(&h, &query("a[0] > 0", "a[0]", "0")).unwrap();
    assert!(matches!(arrays.outcome, SmtOutcome::Refuted(_)));
    assert_eq!(arrays.replay, Some(Replay::Confirmed));

    // Quantified bound: for all t, t <= x implies t <= x + 1.
    let binder = check_query(&h, &query("true", "(sup t. min(t, [t <= x]))", "x + 1")).unwrap();
    assert_eq!(binder.outcome, SmtOutcome::Proved);
}

#[test]
fn bounded_queries_confine_scalars() {
    let h = SolverHandle::default();
    // False only for x > 10, so it holds inside [-3, 3].
    let q = query("true", "min([x <= 10], 0)", "1");
    assert!(matches!(check_query(&h, &query("true", "x", "10")).unwrap().outcome, SmtOutcome::Refuted(_)));
    assert_eq!(check_query_bounded(&h, &q, 3).unwrap().outcome, SmtOutcome::Proved);
    assert_eq!(check_query_bounded(&h, &query("true", "x", "10"), 3).unwrap().outcome, SmtOutcome::Proved);
    match check_query_bounded(&h, &query("true", "x", "2"), 3).unwrap().outcome {
        SmtOutcome::Refuted(s) => assert_eq!(s.get("x").unwrap(), 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn raw_scripts_run() {
    let h = SolverHandle::default();
    let sat = "(declare-const x Int)\n(assert (> x 2))\n(check-sat)\n";
    let unsat = "(declare-const x Int)\n(assert (and (> x 2) (< x 1)))\n(check-sat)\n";
    assert!(matches!(run_solver(&h, sat).unwrap(), SmtOutcome::Refuted(_)));
    assert_eq!(run_solver(&h, unsat).unwrap(), SmtOutcome::Proved);
    match solve(&h, sat, &["x".to_string()]).unwrap() {
        SatAnswer::Sat(m) => assert!(m["x"].as_int().unwrap() > 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn solver_failures_are_reported() {
    let missing = SolverHandle::from_command_line("/nonexistent/solver");
    assert!(matches!(run_solver(&missing, "(check-sat)\n"), Err(SolverError::Launch(..))));

    let (unknown, p1) = fake_solver("unknown", "unknown");
    assert!(matches!(run_solver(&unknown, "(check-sat)\n").unwrap(), SmtOutcome::Unknown(_)));

    let (broken, p2) = fake_solver("error", "(error \"bad input\")");
    assert!(matches!(run_solver(&broken, "(check-sat)\n"), Err(SolverError::Output(_))));

    let (silent, p3) = fake_solver("silent", "");
    let h = SolverHandle { timeout_ms: 200, ..silent };
    assert!(matches!(run_solver(&h, "(check-sat)\n").unwrap(), SmtOutcome::Unknown(_)));
    for p in [p1, p2, p3] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn trivial_scripts_and_array_axioms() {
    let h = SolverHandle::default();
    assert_eq!(run_solver(&h, "(assert false)(check-sat)\n").unwrap(), SmtOutcome::Proved);
    assert_eq!(run_solver(&h, "(assert true)(check-sat)\n").unwrap(), SmtOutcome::Refuted(State::new()));
    let read_over_write =
        "(declare-const a (Array Int Int))\n(assert (not (= (select (store a 2 9) 2) 9)))\n(check-sat)\n";
    assert_eq!(run_solver(&h, read_over_write).unwrap(), SmtOutcome::Proved);
    let cells = query("a[3] == 4 && a[2] == 9", "a[3] + a[2]", "13");
    assert_eq!(check_query(&h, &cells).unwrap().outcome, SmtOutcome::Proved);
}

#[test]
fn tiny_timeouts_report_unknown() {
    // Nonlinear and quantified, so no answer arrives within a millisecond.
    let hard = "(declare-fun f (Int) Int)\n\
        (assert (forall ((x Int) (y Int)) (=> (and (> x 1) (> y 1)) (not (= (* x y) (f (* x x)))))))\n\
        (assert (forall ((x Int)) (> (f x) (* x x x))))\n\
        (check-sat)\n";
    let h = SolverHandle { timeout_ms: 1, ..SolverHandle::default() };
    assert_eq!(run_solver(&h, hard).unwrap(), SmtOutcome::Unknown("timeout".into()));
}

/// Unbounded answers against enumeration on `[-3, 3]`: a proof holds on the
/// box, a refutation replays, and a counterexample on the box is never proved.
#[test]
fn encoding_agrees_with_enumeration() {
    let h = SolverHandle::default();
    let b = DomainBounds::uniform(-3, 3);
    let vars = vec!["x".to_string(), "y".to_string()];
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let (mut proved, mut refuted) = (0, 0);
    for _ in 0..500 {
        let q = Query {
            hyp: random_bool(&mut rng, &vars, 1),
            lhs: random_res(&mut rng, &vars, 3),
            rhs: random_res(&mut rng, &vars, 3),
        };
        let boxed = leq_bounded_under(&q, &b);
        let out = check_query(&h, &q).unwrap();
        match out.outcome {
            SmtOutcome::Proved => {
                proved += 1;
                assert!(boxed, "proved but false on the box: {q:?}");
            }
            SmtOutcome::Refuted(_) => {
                refuted += 1;
                assert_eq!(out.replay, Some(Replay::Confirmed), "{q:?}");
            }
            SmtOutcome::Unknown(_) => {}
        }
    }
    assert!(proved > 50 && refuted > 50, "{proved} proved, {refuted} refuted");
}

fn leq_bounded_under(q: &Query, b: &DomainBounds) -> bool {
    let guarded = qual::assert::Res::min(q.lhs.clone(), qual::assert::Res::Guard(q.hyp.clone()));
    matches!(leq_bounded(&guarded, &q.rhs, b), LeqResult::True)
}
