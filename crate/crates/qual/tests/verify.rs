use qual::assert::Mode;
use qual::lang::{parse_factored, parse_program, Program};
use qual::smt::{SolverError, SolverHandle};
use qual::verify::{check, gen_vcs, statuses, CheckOptions, VcStatus, Verdict};
use std::path::PathBuf;

fn corpus(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn verdict(prog: &Program, mode: Mode) -> Verdict {
    check(prog, mode, &CheckOptions::default()).unwrap().verdict
}

#[test]
fn straight_line_forward_and_backward() {
    let prog = parse_program("int x;\n//@ pre [x == 1; 3]\n//@ post [x == 2; 1]\nx = x + 1;\ntick(2);\n").unwrap();
    assert_eq!(verdict(&prog, Mode::F), Verdict::Valid);
    assert_eq!(verdict(&prog, Mode::B), Verdict::Valid);
    // The run is deterministic and total, so both directions agree.
    for (post, valid) in [("[x == 2; 0]", false), ("[x == 2; 2]", true), ("[x == 3; 1]", false)] {
        let mut p = prog.clone();
        p.annotations.post = Some(parse_factored(post).unwrap());
        for mode in [Mode::F, Mode::B] {
            assert_eq!(verdict(&p, mode).is_valid(), valid, "{post} in {}", mode.tag());
        }
    }
}

#[test]
fn refutations_carry_replayed_witnesses() {
    let prog = corpus("conditional_p1q1.imp");
    let report = check(&prog, Mode::B, &CheckOptions::default()).unwrap();
    match &report.verdict {
        Verdict::Invalid { label, witness } => {
            assert_eq!(label, "main");
            assert_ne!(witness.get("x").unwrap(), 42);
        }
        other => panic!("{other}"),
    }
    assert_eq!(report.verdict.exit_code(), 1);
}

#[test]
fn conditions_are_labelled_per_loop() {
    let prog = corpus("password.imp");
    let labels: Vec<String> = gen_vcs(&prog, Mode::F).unwrap().into_iter().map(|v| v.label).collect();
    assert_eq!(labels, ["loop0:entry", "loop0:step", "main"]);
    let report = check(&prog, Mode::F, &CheckOptions::default()).unwrap();
    assert!(statuses(&report).values().all(|s| *s == "proved"), "{:?}", statuses(&report));
}

#[test]
fn exhaustive_mode_on_the_producer_consumer() {
    let prog = corpus("producer_consumer.imp");
    let report = check(&prog, Mode::BD, &CheckOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Valid, "{:?}", statuses(&report));
    // Without an exhaustion index the loop is only credited with zero
    // iterations, which cannot reach the postcondition for n > 0.
    let mut bare = prog.clone();
    bare.annotations.loops[0].exhaust = None;
    let v = verdict(&bare, Mode::BD);
    assert!(matches!(v, Verdict::Invalid { .. }), "{v}");
}

#[test]
fn missing_annotations_are_ill_formed() {
    let prog = parse_program("int x;\n//@ pre [top; 0]\nx = 1;\n").unwrap();
    let v = verdict(&prog, Mode::B);
    assert!(matches!(v, Verdict::IllFormed(_)), "{v}");
    assert_eq!(v.exit_code(), 3);
    let unannotated =
        parse_program("int x;\n//@ pre [top; 0]\n//@ post [top; 0]\nwhile (x > 0) { x = x - 1; }\n").unwrap();
    assert!(matches!(verdict(&unannotated, Mode::F), Verdict::IllFormed(_)));
}

#[test]
fn dumped_scripts_are_written_per_condition() {
    let dir = std::env::temp_dir().join(format!("qual-dump-{}", std::process::id()));
    let prog = corpus("password.imp");
    let opts = CheckOptions { dump_dir: Some(dir.clone()), ..CheckOptions::default() };
    check(&prog, Mode::F, &opts).unwrap();
    let mut files: Vec<String> =
        std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files.len(), 3);
    let text = std::fs::read_to_string(dir.join(&files[0])).unwrap();
    assert!(text.contains("(check-sat)"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_solver_is_an_error() {
    let prog = corpus("conditional_p1q1.imp");
    let opts =
        CheckOptions { solver: SolverHandle::from_command_line("/nonexistent/solver"), ..CheckOptions::default() };
    assert!(matches!(check(&prog, Mode::B, &opts), Err(SolverError::Launch(..))));
}

#[test]
fn sorting_conditions_are_proved_or_bounded() {
    let prog = corpus("insertion_sort.imp");
    let report = check(&prog, Mode::B, &CheckOptions { fallback_bound: Some(5), ..CheckOptions::default() }).unwrap();
    for r in &report.vcs {
        assert!(matches!(r.status, VcStatus::Proved | VcStatus::ProvedBounded(5)), "{}: {:?}", r.vc.label, r.status);
    }
    assert!(report.verdict.is_valid());
}

#[test]
fn generation_and_dumps_are_deterministic() {
    let prog = corpus("quicksort.imp");
    let first = format!("{:?}", gen_vcs(&prog, Mode::B).unwrap());
    assert_eq!(first, format!("{:?}", gen_vcs(&prog, Mode::B).unwrap()));
    let read_dump = |tag: &str| {
        let dir = std::env::temp_dir().join(format!("qual-stable-{tag}-{}", std::process::id()));
        let opts = CheckOptions { dump_dir: Some(dir.clone()), ..CheckOptions::default() };
        check(&corpus("password.imp"), Mode::F, &opts).unwrap();
        let mut files: Vec<(String, String)> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read_to_string(e.path()).unwrap())
            })
            .collect();
        files.sort();
        std::fs::remove_dir_all(dir).unwrap();
        files
    };
    assert_eq!(read_dump("a"), read_dump("b"));
}
