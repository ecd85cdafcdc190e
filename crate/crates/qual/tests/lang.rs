use proptest::prelude::*;
use qual::gen::{random_command, GenConfig};
use qual::lang::{
    desugar, mod_set, parse_bool, parse_command, parse_program, print_program, subst, Command, DeclKind, Expr,
    FreeVars, ParseError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn names(xs: &[&str]) -> std::collections::BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn program_declarations_and_annotations() {
    let src = "int n;\nint a[];\nint k = 2;\n//@ pre [n >= 0; n]\n//@ post [top; 0]\ntick(k);\n";
    let prog = parse_program(src).unwrap();
    assert_eq!(prog.kinds().get("a"), Some(&DeclKind::Array));
    assert_eq!(prog.scalars(), vec!["n".to_string(), "k".to_string()]);
    assert_eq!(prog.arrays(), vec!["a".to_string()]);
    // A global initializer becomes an assignment at the start of the body.
    assert_eq!(prog.body, Command::seq(Command::Assign("k".into(), Expr::Num(2)), Command::Tick(Expr::var("k"))));
    assert_eq!(prog.annotations.pre.as_ref().unwrap().to_string(), "[n >= 0; n]");
}

#[test]
fn printed_programs_reparse_identically() {
    let src = "int n;\nint a[];\n//@ pre [n >= 0; n]\n//@ post [top; 0]\n{\n    int i = 0;\n    //@ loop iters: n; subvar i0 -> [i == i0; n - i0]\n    while (i < n) {\n        a[i] = i;\n        i = i + 1;\n    }\n}\n";
    let prog = parse_program(src).unwrap();
    let again = parse_program(&print_program(&prog)).unwrap();
    assert_eq!(again.body, prog.body);
    assert_eq!(again.annotations.pre, prog.annotations.pre);
    assert_eq!(again.annotations.post, prog.annotations.post);
    let strip = |p: &qual::lang::Program| {
        p.annotations.loops.iter().map(|l| (l.iters.clone(), l.subvar.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&again), strip(&prog));
}

#[test]
fn undeclared_identifiers_are_reported_with_position() {
    match parse_program("int x;\nx = y + 1;\n") {
        Err(ParseError::Undeclared { name, line, .. }) => {
            assert_eq!(name, "y");
            assert_eq!(line, 2);
        }
        other => panic!("{other:?}"),
    }
    assert!(parse_program("int x;\nx = ;\n").is_err());
    assert!(parse_program("int x;\nint x;\n").is_err());
}

#[test]
fn locals_shadow_and_scope() {
    let c = parse_command("{ int t = x; y = t; } x = 1;").unwrap();
    assert_eq!(c.free_vars(), names(&["x", "y"]));
    assert_eq!(mod_set(&c), names(&["x", "y"]));
}

#[test]
fn desugared_conditional_is_a_guarded_choice() {
    let c = parse_command("if (x > 0) { tick(1); } else { skip; }").unwrap();
    let b = parse_bool("x > 0").unwrap();
    let want = Command::choice(
        Command::seq(Command::Assume(b.clone()), Command::Tick(Expr::Num(1))),
        Command::seq(Command::Assume(b.negate()), Command::Skip),
    );
    assert_eq!(c, want);
    assert_eq!(desugar(&c), c);
}

#[test]
fn demonic_if_is_an_unguarded_choice() {
    let c = parse_command("if (demon) { tick(1); } else { tick(2); }").unwrap();
    assert_eq!(c, Command::choice(Command::Tick(Expr::Num(1)), Command::Tick(Expr::Num(2))));
}

#[test]
fn while_loop_shape() {
    let c = parse_command("while (x < 3) { x = x + 1; }").unwrap();
    let Command::Seq(lp, exit) = c else { panic!() };
    assert!(matches!(*lp, Command::Loop(..)));
    assert_eq!(*exit, Command::Assume(parse_bool("!(x < 3)").unwrap()));
}

#[test]
fn substitution_renames_free_occurrences_only() {
    let c = parse_command("x = x + y; { int x; x = 3; }").unwrap();
    let d = subst(&c, "z", "x").unwrap();
    assert_eq!(d, parse_command("z = z + y; { int x; x = 3; }").unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_commands_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_command(&mut rng, &GenConfig::default());
        let again = parse_command(&c.to_string()).unwrap();
        prop_assert_eq!(again, c);
    }

    #[test]
    fn modified_variables_are_free(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_command(&mut rng, &GenConfig::default());
        prop_assert!(mod_set(&c).is_subset(&c.free_vars()));
    }
}
