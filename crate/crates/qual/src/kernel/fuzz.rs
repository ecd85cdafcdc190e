//! Soundness fuzzing: random derivations are checked by the kernel, and every
//! accepted conclusion is decided by brute force over a finite domain.
//!
//! Derivations are built bottom-up. A rule is drawn at random; premises that
//! must agree on an intermediate assertion are produced by canonical
//! builders that derive a triple for a given command from a given pre (F) or
//! post (B, BD) assertion. Candidates that the kernel rejects, typically
//! because a BD side condition fails, are discarded and redrawn.
//!
//! Loop bodies always start with `assume(v < hi); v = v + 1` on a counter
//! `v` the rest of the body never assigns, so every run of every generated
//! loop terminates within the domain width and enumeration never truncates.

use super::{check_derivation, CheckedTriple, Derivation, Rule, RuleKind};
use crate::assert::{LeqMethod, Mode, Res};
use crate::gen::{random_bool, random_command, random_expr, random_res, GenConfig};
use crate::lang::{mod_set, BoolExpr, CmpOp, Command, Expr, FreeVars, Name};
use crate::semantics::{holds_semantically, DomainBounds, State, Truth};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct FuzzFailure {
    pub derivation: String,
    pub triple: String,
    /// Counterexample state, or `None` when the judgment could not be decided.
    pub witness: Option<State>,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct FuzzReport {
    /// Accepted derivations whose conclusions were decided.
    pub checked: usize,
    /// Candidates the kernel rejected, or whose assertions nest too many
    /// binders to decide cheaply, and that were redrawn.
    pub rejected: usize,
    pub truncated: usize,
    pub failures: Vec<FuzzFailure>,
    pub per_mode: BTreeMap<Mode, usize>,
    pub rule_counts: BTreeMap<Rule, usize>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.truncated == 0
    }
}

const VARS: [&str; 3] = ["x", "y", "z"];
const ATTEMPTS_PER_SLOT: usize = 400;

/// Checks `count` random derivations, cycling through F, B and BD. States
/// and binders range over `domain` for the variables `x`, `y`, `z`.
pub fn fuzz_soundness(seed: u64, count: usize, domain: (i64, i64)) -> FuzzReport {
    let bounds = DomainBounds::uniform(domain.0, domain.1);
    let vars: Vec<Name> = VARS.iter().map(|s| s.to_string()).collect();
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg: GenConfig {
            vars: vars.clone(),
            locals: vec!["t".into()],
            domain,
            depth: 2,
            max_tick: 3,
            allow_local: true,
        },
        bounds: bounds.clone(),
    };
    let mut report = FuzzReport::default();
    for slot in 0..count {
        let mode = Mode::ALL[slot % 3];
        let mut accepted = None;
        for _ in 0..ATTEMPTS_PER_SLOT {
            let Some(d) = b.derive(mode, 3) else {
                report.rejected += 1;
                continue;
            };
            match check_derivation(&d, LeqMethod::Bounded(&bounds)) {
                Ok(t) if tractable(&t) => {
                    accepted = Some((d, t));
                    break;
                }
                _ => report.rejected += 1,
            }
        }
        let Some((d, t)) = accepted else {
            report.failures.push(FuzzFailure {
                derivation: String::new(),
                triple: String::new(),
                witness: None,
                reason: format!("no {mode} derivation accepted after {ATTEMPTS_PER_SLOT} attempts"),
            });
            continue;
        };
        d.rules(&mut report.rule_counts);
        *report.per_mode.entry(mode).or_default() += 1;
        report.checked += 1;
        let fail =
            |witness, reason: String| FuzzFailure { derivation: d.to_string(), triple: t.to_string(), witness, reason };
        match holds_semantically(t.mode, &t.pre, &t.cmd, &t.post, &bounds, &vars, &[]) {
            Ok(Truth::True) => {}
            Ok(Truth::False(s)) => report.failures.push(fail(Some(s), "conclusion does not hold".into())),
            Ok(Truth::Truncated) => report.truncated += 1,
            Err(e) => report.failures.push(fail(None, format!("evaluation error: {e}"))),
        }
    }
    report
}

struct Builder {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    bounds: DomainBounds,
}

fn rule(mode: Mode, kind: RuleKind) -> Derivation {
    Derivation::new(Rule { mode, kind })
}

/// Deepest nesting of `sup`/`inf` binders; bounded evaluation costs grow
/// exponentially in it.
fn binder_depth(r: &Res) -> usize {
    match r {
        Res::Lit(_) | Res::Arith(_) | Res::Guard(_) => 0,
        Res::Min(a, b) | Res::Max(a, b) | Res::Add(a, b) => binder_depth(a).max(binder_depth(b)),
        Res::Sub(a, _) => binder_depth(a),
        Res::Sup(_, a) | Res::Inf(_, a) => 1 + binder_depth(a),
    }
}

const MAX_BINDER_DEPTH: usize = 3;

fn tractable(t: &CheckedTriple) -> bool {
    binder_depth(&t.pre) <= MAX_BINDER_DEPTH && binder_depth(&t.post) <= MAX_BINDER_DEPTH
}

impl Builder {
    fn conclude(&self, d: &Derivation) -> Option<CheckedTriple> {
        check_derivation(d, LeqMethod::Bounded(&self.bounds)).ok().filter(tractable)
    }

    fn vars(&self) -> Vec<Name> {
        self.cfg.vars.clone()
    }

    fn res(&mut self) -> Res {
        let vars = self.vars();
        random_res(&mut self.rng, &vars, 2)
    }

    /// Assertion that is at most `cap` everywhere.
    fn res_below(&mut self, cap: i64) -> Res {
        let r = self.res();
        Res::min(r, Res::num(cap))
    }

    fn small_cmd(&mut self) -> Command {
        let mut cfg = self.cfg.clone();
        cfg.depth = self.rng.gen_range(1..=3);
        random_command(&mut self.rng, &cfg)
    }

    fn loop_body(&mut self) -> Command {
        let v = self.cfg.vars.choose(&mut self.rng).unwrap().clone();
        let mut cfg = self.cfg.clone();
        cfg.vars.retain(|x| *x != v);
        cfg.depth = self.rng.gen_range(1..=2);
        let rest = random_command(&mut self.rng, &cfg);
        let counter = Command::seq(
            Command::Assume(BoolExpr::Cmp(CmpOp::Lt, Expr::var(&v), Expr::Num(self.cfg.domain.1))),
            Command::Assign(v.clone(), Expr::add(Expr::var(&v), Expr::Num(1))),
        );
        Command::seq(counter, rest)
    }

    fn atomic(&mut self) -> Command {
        let vars = self.vars();
        match self.rng.gen_range(0..4) {
            0 => Command::Skip,
            1 => {
                let x = vars.choose(&mut self.rng).unwrap().clone();
                match self.rng.gen_range(0..2) {
                    0 => Command::Assign(x, Expr::Num(self.rng.gen_range(self.cfg.domain.0..=self.cfg.domain.1))),
                    _ => Command::Assign(x, Expr::Var(vars.choose(&mut self.rng).unwrap().clone())),
                }
            }
            2 => Command::Assume(random_bool(&mut self.rng, &vars, 1)),
            _ => Command::Tick(Expr::Num(self.rng.gen_range(-3..=3))),
        }
    }

    /// Random derivation in `mode` of depth at most `depth`.
    fn derive(&mut self, mode: Mode, depth: usize) -> Option<Derivation> {
        let kinds: Vec<RuleKind> = RuleKind::ALL
            .into_iter()
            .filter(|k| k.exists_in(mode))
            .filter(|k| {
                depth > 0
                    || matches!(
                        k,
                        RuleKind::Skip | RuleKind::Assign | RuleKind::Assume | RuleKind::Tick | RuleKind::LoopZero
                    )
            })
            .collect();
        let kind = *kinds.choose(&mut self.rng).unwrap();
        let sub = depth.saturating_sub(1);
        Some(match kind {
            RuleKind::Skip | RuleKind::Assign | RuleKind::Assume | RuleKind::Tick => {
                let c = match kind {
                    RuleKind::Skip => Command::Skip,
                    _ => loop {
                        let c = self.atomic();
                        let fits = matches!(
                            (kind, &c),
                            (RuleKind::Assign, Command::Assign(..))
                                | (RuleKind::Assume, Command::Assume(..))
                                | (RuleKind::Tick, Command::Tick(..))
                        );
                        if fits {
                            break c;
                        }
                    },
                };
                // BD caps sometimes exceed what the side condition allows, so
                // that the kernel has candidates to reject.
                let slack = if self.rng.gen_bool(0.3) { self.rng.gen_range(1..=2) } else { 0 };
                let p = match (&c, mode) {
                    (Command::Tick(Expr::Num(e)), Mode::BD) => self.res_below((*e).max(0) + slack),
                    (_, Mode::BD) => self.res_below(slack),
                    _ => self.res(),
                };
                let d = rule(mode, kind).arg("P", &p);
                if kind == RuleKind::Skip {
                    d
                } else {
                    d.arg("C", &c)
                }
            }
            RuleKind::Seq => {
                if mode == Mode::F {
                    let d1 = self.derive(mode, sub)?;
                    let t1 = self.conclude(&d1)?;
                    let c = self.small_cmd();
                    let d2 = self.forward(&c, &t1.post)?;
                    rule(mode, kind).premise(d1).premise(d2)
                } else {
                    let d2 = self.derive(mode, sub)?;
                    let t2 = self.conclude(&d2)?;
                    let c = self.small_cmd();
                    let d1 = self.backward(Mode::B, &c, &t2.pre)?;
                    rule(mode, kind).premise(d1).premise(d2)
                }
            }
            RuleKind::SeqL | RuleKind::SeqR => {
                let (first, second) = if kind == RuleKind::SeqL { (Mode::BD, Mode::B) } else { (Mode::B, Mode::BD) };
                let d2 = self.derive(second, sub)?;
                let t2 = self.conclude(&d2)?;
                let c = self.small_cmd();
                let d1 = self.backward(first, &c, &t2.pre)?;
                rule(mode, kind).premise(d1).premise(d2)
            }
            RuleKind::ChoiceL | RuleKind::ChoiceR => {
                let d = self.derive(mode, sub)?;
                let other = self.small_cmd();
                let key = if kind == RuleKind::ChoiceL { "C2" } else { "C1" };
                rule(mode, kind).arg(key, &other).premise(d)
            }
            RuleKind::Loop => {
                let body = self.loop_body();
                let c = Command::lp(body);
                match mode {
                    Mode::F => {
                        let p = self.res();
                        self.forward(&c, &p)?
                    }
                    Mode::B => {
                        let q = self.res();
                        self.backward(Mode::B, &c, &q)?
                    }
                    Mode::BD => {
                        let q = self.res_below(0);
                        self.exhausting_loop(&c, &q, true)?
                    }
                }
            }
            RuleKind::LoopZero => {
                let body = self.loop_body();
                let slack = if self.rng.gen_bool(0.3) { 1 } else { 0 };
                let p = self.res_below(slack);
                rule(mode, kind).arg("P", &p).arg("C", &body)
            }
            RuleKind::Local => {
                let d = self.derive(mode, sub)?;
                let mut pool = self.vars();
                pool.push("t".into());
                let x = pool.choose(&mut self.rng).unwrap().clone();
                rule(mode, kind).arg("x", x).premise(d)
            }
            RuleKind::Disj => {
                let d1 = self.derive(mode, sub)?;
                let t1 = self.conclude(&d1)?;
                let mut out = rule(mode, kind).premise(d1);
                for _ in 0..self.rng.gen_range(1..=2) {
                    let d = match mode {
                        Mode::F => {
                            let p = self.res();
                            self.forward(&t1.cmd, &p)?
                        }
                        Mode::B => {
                            let q = self.res();
                            self.backward(Mode::B, &t1.cmd, &q)?
                        }
                        Mode::BD => {
                            let q = self.res_below(0);
                            self.backward(Mode::BD, &t1.cmd, &q)?
                        }
                    };
                    out = out.premise(d);
                }
                out
            }
            RuleKind::Constancy => {
                let d = self.derive(mode, sub)?;
                let t = self.conclude(&d)?;
                let frame = self.frame_vars(&t.cmd);
                let b = random_bool(&mut self.rng, &frame, 1);
                rule(mode, kind).arg("B", &b).premise(d)
            }
            RuleKind::Relax => {
                let d = self.derive(mode, sub)?;
                let t = self.conclude(&d)?;
                let frame = self.frame_vars(&t.cmd);
                let e = Res::Arith(random_expr(&mut self.rng, &frame, 1));
                let f = if mode == Mode::BD && self.rng.gen_bool(0.9) { Res::min(e, Res::num(0)) } else { e };
                rule(mode, kind).arg("F", &f).premise(d)
            }
            RuleKind::Cons => {
                let d = self.derive(mode, sub)?;
                let t = self.conclude(&d)?;
                let (p, q) = self.weaken(&t);
                rule(mode, kind).arg("P", &p).arg("Q", &q).premise(d)
            }
            RuleKind::Subst => {
                let d = self.derive(mode, sub)?;
                let t = self.conclude(&d)?;
                let mut used = t.pre.free_vars();
                used.extend(t.post.free_vars());
                used.extend(t.cmd.free_vars());
                let free: Vec<Name> = self.vars().into_iter().filter(|v| !used.contains(v)).collect();
                let y = free.choose(&mut self.rng)?.clone();
                let x = used
                    .iter()
                    .filter(|v| VARS.contains(&v.as_str()))
                    .collect::<Vec<_>>()
                    .choose(&mut self.rng)
                    .map(|v| (*v).clone())?;
                rule(mode, kind).arg("x", x).arg("y", y).premise(d)
            }
        })
    }

    fn frame_vars(&self, c: &Command) -> Vec<Name> {
        let m = mod_set(c);
        self.cfg.vars.iter().filter(|v| !m.contains(*v)).cloned().collect()
    }

    /// Consequence parameters: a pre below the premise's and a post above it.
    fn weaken(&mut self, t: &CheckedTriple) -> (Res, Res) {
        let p = if self.rng.gen_bool(0.7) { Res::min(t.pre.clone(), self.res()) } else { t.pre.clone() };
        let q = if self.rng.gen_bool(0.7) { Res::max(t.post.clone(), self.res()) } else { t.post.clone() };
        (p, q)
    }

    /// Derivation of `[p] c [_]` in the forward system.
    fn forward(&mut self, c: &Command, p: &Res) -> Option<Derivation> {
        let m = Mode::F;
        Some(match c {
            Command::Skip => rule(m, RuleKind::Skip).arg("P", p),
            Command::Assign(..) => rule(m, RuleKind::Assign).arg("P", p).arg("C", c),
            Command::Tick(_) => rule(m, RuleKind::Tick).arg("P", p).arg("C", c),
            Command::Assume(b) => {
                // The rule's pre is P ⋎ [¬B], which is above P.
                let inner = rule(m, RuleKind::Assume).arg("P", p).arg("C", c);
                let post = Res::max(p.clone(), Res::guard(b.negate()));
                rule(m, RuleKind::Cons).arg("P", p).arg("Q", &post).premise(inner)
            }
            Command::Seq(a, b) => {
                let d1 = self.forward(a, p)?;
                let t1 = self.conclude(&d1)?;
                let d2 = self.forward(b, &t1.post)?;
                rule(m, RuleKind::Seq).premise(d1).premise(d2)
            }
            Command::Choice(a, b) => {
                if self.rng.gen_bool(0.5) {
                    rule(m, RuleKind::ChoiceL).arg("C2", b).premise(self.forward(a, p)?)
                } else {
                    rule(m, RuleKind::ChoiceR).arg("C1", a).premise(self.forward(b, p)?)
                }
            }
            Command::Local(x, body) => {
                let inner = rule(m, RuleKind::Local).arg("x", x).premise(self.forward(body, p)?);
                let t = self.conclude(&inner)?;
                rule(m, RuleKind::Cons).arg("P", p).arg("Q", &t.post).premise(inner)
            }
            Command::Loop(body, _) => {
                let k = self.rng.gen_range(0..=2);
                if k == 0 {
                    return Some(rule(m, RuleKind::Loop).arg("P", p).arg("C", body));
                }
                let mut out = rule(m, RuleKind::Loop);
                let mut cur = p.clone();
                for _ in 0..k {
                    let d = self.forward(body, &cur)?;
                    cur = self.conclude(&d)?.post;
                    out = out.premise(d);
                }
                out
            }
            Command::ArrayAssign(..) | Command::If(..) | Command::While(..) => return None,
        })
    }

    /// Derivation of `[_] c [q]` in `mode` (B or BD).
    fn backward(&mut self, mode: Mode, c: &Command, q: &Res) -> Option<Derivation> {
        // Wraps an atomic rule instance so that its post becomes exactly `q`.
        let close = |this: &Self, inner: Derivation| -> Option<Derivation> {
            let t = this.conclude(&inner)?;
            Some(rule(mode, RuleKind::Cons).arg("P", &t.pre).arg("Q", q).premise(inner))
        };
        Some(match c {
            Command::Skip => rule(mode, RuleKind::Skip).arg("P", q),
            Command::Assign(x, e) => {
                let inner = rule(mode, RuleKind::Assign).arg("P", q.subst_var(x, e)).arg("C", c);
                close(self, inner)?
            }
            Command::Assume(_) => close(self, rule(mode, RuleKind::Assume).arg("P", q).arg("C", c))?,
            Command::Tick(e) => {
                let inner = rule(mode, RuleKind::Tick).arg("P", Res::add_expr(q.clone(), e.clone())).arg("C", c);
                close(self, inner)?
            }
            Command::Seq(a, b) => {
                let (ma, mb, kind) = match mode {
                    Mode::BD if self.rng.gen_bool(0.5) => (Mode::BD, Mode::B, RuleKind::SeqL),
                    Mode::BD => (Mode::B, Mode::BD, RuleKind::SeqR),
                    _ => (mode, mode, RuleKind::Seq),
                };
                let d2 = self.backward(mb, b, q)?;
                let t2 = self.conclude(&d2)?;
                let d1 = self.backward(ma, a, &t2.pre)?;
                rule(mode, kind).premise(d1).premise(d2)
            }
            Command::Choice(a, b) => {
                if self.rng.gen_bool(0.5) {
                    rule(mode, RuleKind::ChoiceL).arg("C2", b).premise(self.backward(mode, a, q)?)
                } else {
                    rule(mode, RuleKind::ChoiceR).arg("C1", a).premise(self.backward(mode, b, q)?)
                }
            }
            Command::Local(x, body) => {
                let inner = rule(mode, RuleKind::Local).arg("x", x).premise(self.backward(mode, body, q)?);
                close(self, inner)?
            }
            Command::Loop(..) if mode == Mode::BD => self.exhausting_loop(c, q, false)?,
            Command::Loop(body, _) => {
                let k = self.rng.gen_range(0..=2);
                if k == 0 {
                    return Some(rule(mode, RuleKind::Loop).arg("P", q).arg("C", body));
                }
                let mut premises = Vec::new();
                let mut cur = q.clone();
                for _ in 0..k {
                    let d = self.backward(mode, body, &cur)?;
                    cur = self.conclude(&d)?.pre;
                    premises.push(d);
                }
                premises.reverse();
                premises.into_iter().fold(rule(mode, RuleKind::Loop), Derivation::premise)
            }
            Command::ArrayAssign(..) | Command::If(..) | Command::While(..) => return None,
        })
    }

    /// BD derivation of `[_] c⋆ [q]`, by `LoopZero` or by a family built
    /// backward from `q` whose member `m` also has an exhausting derivation.
    fn exhausting_loop(&mut self, c: &Command, q: &Res, prefer_iterations: bool) -> Option<Derivation> {
        let Command::Loop(body, _) = c else { return None };
        let zero_weight = if prefer_iterations { 0.15 } else { 0.4 };
        if self.rng.gen_bool(zero_weight) {
            return Some(rule(Mode::BD, RuleKind::LoopZero).arg("P", q).arg("C", body));
        }
        let k = self.rng.gen_range(1..=2);
        let m = self.rng.gen_range(0..k);
        let mut chain = Vec::new();
        let mut special = None;
        let mut cur = q.clone();
        for n in (0..k).rev() {
            if n == m {
                let dd = self.backward(Mode::BD, body, &cur)?;
                let pre = self.conclude(&dd)?.pre;
                // The B premise for the same step is weakened to the BD pre.
                let db = self.backward(Mode::B, body, &cur)?;
                let db = rule(Mode::B, RuleKind::Cons).arg("P", &pre).arg("Q", &cur).premise(db);
                chain.push(db);
                special = Some(dd);
                cur = pre;
            } else {
                let db = self.backward(Mode::B, body, &cur)?;
                cur = self.conclude(&db)?.pre;
                chain.push(db);
            }
        }
        chain.reverse();
        let out = chain.into_iter().fold(rule(Mode::BD, RuleKind::Loop).arg("m", m), Derivation::premise);
        Some(out.premise(special?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_is_sound() {
        let r = fuzz_soundness(11, 30, (-2, 2));
        for f in &r.failures {
            eprintln!("{}\n{}\n{:?} {}", f.derivation, f.triple, f.witness, f.reason);
        }
        assert!(r.passed(), "{} failures, {} truncated", r.failures.len(), r.truncated);
        assert_eq!(r.checked, 30);
        assert_eq!(r.per_mode.values().sum::<usize>(), 30);
    }

    #[test]
    fn campaigns_are_reproducible() {
        let a = fuzz_soundness(5, 9, (-2, 2));
        let b = fuzz_soundness(5, 9, (-2, 2));
        assert_eq!(a.rule_counts, b.rule_counts);
        assert_eq!(a.rejected, b.rejected);
    }
}
