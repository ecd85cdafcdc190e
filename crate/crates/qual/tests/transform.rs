//! Transformers against a reference interpreter that lives only in this file:
//! it walks loop-free core commands directly, collecting every final state
//! with its resource change and lowest level, and computes the three
//! transformer values from those runs.

use proptest::prelude::*;
use qual::assert::{eval_res, parse_res, simplify, ExtInt, Res};
use qual::gen::{random_command, random_res, GenConfig};
use qual::lang::{parse_command, Command};
use qual::semantics::{eval_bool, eval_expr, DomainBounds, State};
use qual::transform::{sp, wp, wp_diamond};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DOMAIN: (i64, i64) = (-3, 3);

/// Runs from resource 0: `(final state, final resource, lowest level)`.
fn runs(c: &Command, s: State) -> Vec<(State, i64, i64)> {
    match c {
        Command::Skip => vec![(s, 0, 0)],
        Command::Assign(x, e) => {
            let v = eval_expr(&s, e).unwrap();
            vec![(s.with(x, v), 0, 0)]
        }
        Command::Assume(b) => {
            if eval_bool(&s, b).unwrap() {
                vec![(s, 0, 0)]
            } else {
                vec![]
            }
        }
        Command::Tick(e) => {
            let q = -eval_expr(&s, e).unwrap();
            vec![(s, q, q.min(0))]
        }
        Command::Seq(a, b) => runs(a, s)
            .into_iter()
            .flat_map(|(t, q1, l1)| runs(b, t).into_iter().map(move |(u, q2, l2)| (u, q1 + q2, l1.min(q1 + l2))))
            .collect(),
        Command::Choice(a, b) => {
            let mut out = runs(a, s.clone());
            out.extend(runs(b, s));
            out
        }
        Command::Local(x, body) => {
            let outer = s.scalars.get(x).copied();
            let mut out = Vec::new();
            for v in DOMAIN.0..=DOMAIN.1 {
                for (mut t, q, l) in runs(body, s.clone().with(x, v)) {
                    match outer {
                        Some(o) => t.set(x, o),
                        None => {
                            t.scalars.remove(x);
                        }
                    }
                    out.push((t, q, l));
                }
            }
            out
        }
        other => panic!("not a loop-free core command: {other}"),
    }
}

fn plus(a: ExtInt, d: i64) -> ExtInt {
    match a {
        ExtInt::Fin(v) => ExtInt::Fin(v + d),
        inf => inf,
    }
}

fn ref_wp(c: &Command, q: &Res, s: &State, b: &DomainBounds, diamond: bool) -> ExtInt {
    runs(c, s.clone())
        .into_iter()
        .map(|(t, dq, l)| {
            let v = plus(eval_res(q, &t, b).unwrap(), -dq);
            if diamond {
                v.min(ExtInt::Fin(-l))
            } else {
                v
            }
        })
        .max()
        .unwrap_or(ExtInt::NegInf)
}

fn ref_sp(c: &Command, p: &Res, tau: &State, inits: &[State], b: &DomainBounds) -> ExtInt {
    let mut best = ExtInt::PosInf;
    for s in inits {
        let pv = eval_res(p, s, b).unwrap();
        for (t, dq, _) in runs(c, s.clone()) {
            if &t == tau {
                best = best.min(plus(pv, dq));
            }
        }
    }
    best
}

fn setup() -> (DomainBounds, Vec<State>) {
    let b = DomainBounds::uniform(DOMAIN.0, DOMAIN.1);
    let states = b.states(&["x".to_string(), "y".to_string()], &[]);
    (b, states)
}

fn value(r: &Res, s: &State, b: &DomainBounds) -> ExtInt {
    eval_res(r, s, b).unwrap()
}

#[test]
fn random_programs_match_the_reference() {
    let (b, states) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = GenConfig::default();
    for _ in 0..300 {
        let c = random_command(&mut rng, &cfg);
        let p = random_res(&mut rng, &cfg.vars, 3);
        let q = random_res(&mut rng, &cfg.vars, 3);
        let wp_r = wp(&c, &q).unwrap().result;
        let wpd_r = wp_diamond(&c, &q).unwrap().result;
        let sp_r = sp(&c, &p).unwrap().result;
        for s in &states {
            assert_eq!(value(&wp_r, s, &b), ref_wp(&c, &q, s, &b, false), "wp of {c} at {s}, Q = {q}");
            assert_eq!(value(&wpd_r, s, &b), ref_wp(&c, &q, s, &b, true), "wpd of {c} at {s}, Q = {q}");
            assert_eq!(value(&sp_r, s, &b), ref_sp(&c, &p, s, &states, &b), "sp of {c} at {s}, P = {p}");
        }
    }
}

/// Values computed once with the reference interpreter above and frozen.
#[test]
fn frozen_reference_values() {
    let (b, _) = setup();
    let at = |x: i64, y: i64| State::new().with("x", x).with("y", y);
    let cond = parse_command("if (x == 1) { tick(2); x = 0; } else { tick(1); }").unwrap();
    let zero = Res::num(0);
    assert_eq!(value(&wp(&cond, &zero).unwrap().result, &at(1, 0), &b), ExtInt::Fin(2));
    assert_eq!(value(&wp(&cond, &zero).unwrap().result, &at(-3, 0), &b), ExtInt::Fin(1));

    let spend_refund = parse_command("tick(3); tick(-2);").unwrap();
    assert_eq!(value(&wp(&spend_refund, &zero).unwrap().result, &at(0, 0), &b), ExtInt::Fin(1));
    assert_eq!(value(&wp_diamond(&spend_refund, &zero).unwrap().result, &at(0, 0), &b), ExtInt::Fin(1));
    let refund_spend = parse_command("tick(-2); tick(3);").unwrap();
    assert_eq!(value(&wp_diamond(&refund_spend, &zero).unwrap().result, &at(0, 0), &b), ExtInt::Fin(1));
    assert_eq!(value(&wp_diamond(&refund_spend, &Res::num(5)).unwrap().result, &at(0, 0), &b), ExtInt::Fin(1));

    // Forward through an overwrite: only x = y is reachable.
    let copy = parse_command("x = y; tick(x);").unwrap();
    let p = parse_res("x + y").unwrap();
    let sp_r = sp(&copy, &p).unwrap().result;
    assert_eq!(value(&sp_r, &at(2, 2), &b), ExtInt::Fin(-3));
    assert_eq!(value(&sp_r, &at(-1, -1), &b), ExtInt::Fin(-3));
    assert_eq!(value(&sp_r, &at(1, 2), &b), ExtInt::PosInf);

    // A local read before it is written is chosen angelically backward.
    let havoc = parse_command("{ int t; tick(t); }").unwrap();
    assert_eq!(value(&wp(&havoc, &zero).unwrap().result, &at(0, 0), &b), ExtInt::Fin(3));
    assert_eq!(value(&wp_diamond(&havoc, &zero).unwrap().result, &at(0, 0), &b), ExtInt::Fin(3));
    for (c, s) in [(&cond, at(1, 0)), (&spend_refund, at(0, 0)), (&havoc, at(0, 0))] {
        assert_eq!(value(&wp(c, &zero).unwrap().result, &s, &b), ref_wp(c, &zero, &s, &b, false));
    }
}

/// The simplifier reasons over all integers while evaluation cuts binders to
/// the domain, so the two agree only when every binder is pinned by a guard
/// to a value inside the domain. Backward binders for assignments range over
/// final values, which the generator keeps in the domain; `local` binders and
/// forward binders can be unconstrained and are left out.
#[test]
fn simplified_backward_transformers_keep_their_values() {
    let (b, states) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = GenConfig { allow_local: false, ..GenConfig::default() };
    for _ in 0..200 {
        let c = random_command(&mut rng, &cfg);
        let q = random_res(&mut rng, &cfg.vars, 3);
        for r in [wp(&c, &q).unwrap().result, wp_diamond(&c, &q).unwrap().result] {
            let s2 = simplify(&r);
            for s in &states {
                assert_eq!(value(&r, s, &b), value(&s2, s, &b), "simplify changed {r} into {s2} at {s}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Raising the postcondition by `k` raises the backward transformer by `k`.
    #[test]
    fn wp_commutes_with_constant_shifts(seed in any::<u64>(), k in -3i64..=3) {
        let (b, states) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig::default();
        let c = random_command(&mut rng, &cfg);
        let q = random_res(&mut rng, &cfg.vars, 2);
        let shifted = Res::add(q.clone(), Res::num(k));
        let base = wp(&c, &q).unwrap().result;
        let moved = wp(&c, &shifted).unwrap().result;
        for s in &states {
            prop_assert_eq!(value(&moved, s, &b), plus(value(&base, s, &b), k));
        }
    }

    /// Requiring exhaustion can only lower the best starting resource.
    #[test]
    fn diamond_is_below_plain(seed in any::<u64>()) {
        let (b, states) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig::default();
        let c = random_command(&mut rng, &cfg);
        let q = random_res(&mut rng, &cfg.vars, 2);
        let plain = wp(&c, &q).unwrap().result;
        let diamond = wp_diamond(&c, &q).unwrap().result;
        for s in &states {
            prop_assert!(value(&diamond, s, &b) <= value(&plain, s, &b));
        }
    }

    /// Both transformers are monotone in their assertion.
    #[test]
    fn transformers_are_monotone(seed in any::<u64>()) {
        let (b, states) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig::default();
        let c = random_command(&mut rng, &cfg);
        let lo = random_res(&mut rng, &cfg.vars, 2);
        let hi = Res::max(lo.clone(), random_res(&mut rng, &cfg.vars, 2));
        let pairs = [
            (wp(&c, &lo).unwrap().result, wp(&c, &hi).unwrap().result),
            (sp(&c, &lo).unwrap().result, sp(&c, &hi).unwrap().result),
        ];
        for (a, z) in &pairs {
            for s in &states {
                prop_assert!(value(a, s, &b) <= value(z, s, &b));
            }
        }
    }
}
