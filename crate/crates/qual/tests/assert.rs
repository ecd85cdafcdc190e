use proptest::prelude::*;
use qual::assert::{eval_res, leq, leq_bounded, lift, parse_res, simplify, ExtInt, LeqMethod, LeqResult, Mode, Res};
use qual::gen::random_res;
use qual::lang::parse_factored;
use qual::semantics::{ArrayVal, DomainBounds, State};
use qual::smt::SolverHandle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vars() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

fn value(r: &Res, s: &State) -> ExtInt {
    eval_res(r, s, &DomainBounds::uniform(-3, 3)).unwrap()
}

#[test]
fn guards_and_infinities() {
    let s = State::new().with("x", 2);
    assert_eq!(value(&parse_res("[x > 1]").unwrap(), &s), ExtInt::PosInf);
    assert_eq!(value(&parse_res("[x > 5]").unwrap(), &s), ExtInt::NegInf);
    assert_eq!(value(&parse_res("min([x > 1], x + 1)").unwrap(), &s), ExtInt::Fin(3));
    assert_eq!(value(&parse_res("max([x > 5], x) - 4").unwrap(), &s), ExtInt::Fin(-2));
    assert_eq!(value(&parse_res("(sup t. min(t, [t < x]))").unwrap(), &s), ExtInt::Fin(1));
}

#[test]
fn lifting_depends_on_the_direction() {
    let f = parse_factored("[x >= 0; x + 1]").unwrap();
    let neg = State::new().with("x", -1);
    let pos = State::new().with("x", 2);
    assert_eq!(value(&lift(&f, Mode::F), &neg), ExtInt::PosInf);
    assert_eq!(value(&lift(&f, Mode::B), &neg), ExtInt::NegInf);
    assert_eq!(value(&lift(&f, Mode::BD), &pos), ExtInt::Fin(3));
    assert_eq!(value(&lift(&f, Mode::F), &pos), ExtInt::Fin(3));
}

#[test]
fn quantified_specs_over_arrays() {
    let f = parse_factored("[forall I in [0, n). a[I] >= I; n]").unwrap();
    let r = lift(&f, Mode::B);
    let good = State::new().with("n", 3).with_array("a", ArrayVal::from_slice(&[0, 1, 5]));
    let bad = State::new().with("n", 3).with_array("a", ArrayVal::from_slice(&[0, 0, 5]));
    assert_eq!(value(&r, &good), ExtInt::Fin(3));
    assert_eq!(value(&r, &bad), ExtInt::NegInf);
}

#[test]
fn simplifier_normalizes_common_shapes() {
    let r = parse_res("min(max(x, x), [0 == 0])").unwrap();
    assert_eq!(simplify(&r).to_string(), "x");
    let r = parse_res("(sup x1. min(x1 + y, [x1 == y + 1]))").unwrap();
    let s = simplify(&r);
    assert!(!s.has_binder(), "{s}");
    assert_eq!(value(&s, &State::new().with("y", 2)), ExtInt::Fin(5));
}

#[test]
fn bounded_and_solver_leq_on_known_pairs() {
    let h = SolverHandle::default();
    let b = DomainBounds::uniform(-3, 3);
    let cases = [("min(x, y)", "max(x, y)", true), ("x + 1", "x", false), ("[x > 0]", "max([x > 0], 3)", true)];
    for (l, r, want) in cases {
        let (l, r) = (parse_res(l).unwrap(), parse_res(r).unwrap());
        assert_eq!(leq_bounded(&l, &r, &b).holds(), want, "{l} ⪯ {r}");
        let smt = leq(&l, &r, LeqMethod::Smt(&h));
        assert_eq!(smt.holds(), want, "{l} ⪯ {r}: {smt:?}");
        if !want {
            assert!(matches!(smt, LeqResult::False(Some(_))), "{smt:?}");
        }
    }
}

#[test]
fn solver_agrees_with_enumeration_on_random_pairs() {
    let h = SolverHandle::default();
    let b = DomainBounds::uniform(-3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut refuted = 0;
    for _ in 0..40 {
        let l = random_res(&mut rng, &vars(), 2);
        let r = random_res(&mut rng, &vars(), 2);
        let bounded = leq_bounded(&l, &r, &b);
        match leq(&l, &r, LeqMethod::Smt(&h)) {
            // Valid over all integers implies valid on the box.
            LeqResult::True => assert_eq!(bounded, LeqResult::True, "{l} ⪯ {r}"),
            LeqResult::False(Some(w)) => {
                refuted += 1;
                let (a, c) = (eval_res(&l, &w, &b).unwrap(), eval_res(&r, &w, &b).unwrap());
                assert!(a > c, "witness {w} does not refute {l} ⪯ {r}");
            }
            LeqResult::False(None) | LeqResult::Unknown(_) => {}
        }
        // A counterexample on the box is a counterexample over the integers.
        if let LeqResult::False(Some(_)) = bounded {
            assert!(!leq(&l, &r, LeqMethod::Smt(&h)).holds(), "{l} ⪯ {r}");
        }
    }
    assert!(refuted > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_res(&mut rng, &vars(), 4);
        let again = parse_res(&r.to_string()).unwrap();
        for s in DomainBounds::uniform(-2, 2).states(&vars(), &[]) {
            prop_assert_eq!(value(&again, &s), value(&r, &s), "{} reparsed as {}", r, again);
        }
    }

    #[test]
    fn simplify_preserves_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_res(&mut rng, &vars(), 4);
        let s2 = simplify(&r);
        for s in DomainBounds::uniform(-3, 3).states(&vars(), &[]) {
            prop_assert_eq!(value(&s2, &s), value(&r, &s), "{} simplified to {}", r, s2);
        }
    }

    #[test]
    fn leq_is_reflexive_and_respects_min_max(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_res(&mut rng, &vars(), 3);
        let c = random_res(&mut rng, &vars(), 3);
        let b = DomainBounds::uniform(-2, 2);
        prop_assert!(leq_bounded(&a, &a, &b).holds());
        prop_assert!(leq_bounded(&Res::min(a.clone(), c.clone()), &a, &b).holds());
        prop_assert!(leq_bounded(&a, &Res::max(a.clone(), c.clone()), &b).holds());
    }
}
