//! Random programs and assertions for property tests and fuzzing.
//!
//! Generated commands are closed over the value domain `[lo, hi]`: every
//! assignment either stores a constant or variable from the domain, or is
//! guarded by an `assume` that keeps the stored value inside it. Runs that
//! start inside the domain therefore stay inside it, which is what lets
//! bounded evaluation of `sup`/`inf` binders agree with the semantics.

use crate::assert::{ExtInt, Res};
use crate::lang::{desugar, BoolExpr, CmpOp, Command, Expr, Name};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Program variables.
    pub vars: Vec<Name>,
    /// Names available for `local` blocks.
    pub locals: Vec<Name>,
    /// Inclusive value domain.
    pub domain: (i64, i64),
    /// Maximum nesting depth of generated commands.
    pub depth: usize,
    /// Tick amounts are drawn from `[-max_tick, max_tick]` or are expressions.
    pub max_tick: i64,
    pub allow_local: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            vars: vec!["x".into(), "y".into()],
            locals: vec!["t".into()],
            domain: (-3, 3),
            depth: 5,
            max_tick: 3,
            allow_local: true,
        }
    }
}

impl GenConfig {
    fn constant<R: Rng>(&self, rng: &mut R) -> i64 {
        rng.gen_range(self.domain.0..=self.domain.1)
    }
}

fn pick<'a, R: Rng>(rng: &mut R, names: &'a [Name]) -> &'a Name {
    names.choose(rng).expect("non-empty name pool")
}

/// Small integer expression over `vars`.
pub fn random_expr<R: Rng>(rng: &mut R, vars: &[Name], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return if vars.is_empty() || rng.gen_bool(0.4) {
            Expr::Num(rng.gen_range(-3..=3))
        } else {
            Expr::Var(pick(rng, vars).clone())
        };
    }
    let a = random_expr(rng, vars, depth - 1);
    let b = random_expr(rng, vars, depth - 1);
    match rng.gen_range(0..5) {
        0 => Expr::add(a, b),
        1 => Expr::sub(a, b),
        2 => Expr::mul(Expr::Num(rng.gen_range(-2..=2)), a),
        3 => Expr::neg(a),
        _ => Expr::Div(Box::new(a), *[2, -2, 3].choose(rng).unwrap()),
    }
}

fn random_cmp<R: Rng>(rng: &mut R) -> CmpOp {
    *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).unwrap()
}

/// Quantifier-free boolean expression over `vars`.
pub fn random_bool<R: Rng>(rng: &mut R, vars: &[Name], depth: usize) -> BoolExpr {
    if depth == 0 || rng.gen_bool(0.5) {
        if rng.gen_bool(0.05) {
            return BoolExpr::Const(rng.gen_bool(0.5));
        }
        return BoolExpr::Cmp(random_cmp(rng), random_expr(rng, vars, 1), random_expr(rng, vars, 1));
    }
    let a = random_bool(rng, vars, depth - 1);
    match rng.gen_range(0..3) {
        0 => BoolExpr::And(Box::new(a), Box::new(random_bool(rng, vars, depth - 1))),
        1 => BoolExpr::Or(Box::new(a), Box::new(random_bool(rng, vars, depth - 1))),
        _ => BoolExpr::Not(Box::new(a)),
    }
}

/// Assignment to `x` whose result stays in the domain.
pub fn closed_assign<R: Rng>(rng: &mut R, cfg: &GenConfig, x: &Name, vars: &[Name]) -> Command {
    match rng.gen_range(0..3) {
        0 => Command::Assign(x.clone(), Expr::Num(cfg.constant(rng))),
        1 => Command::Assign(x.clone(), Expr::Var(pick(rng, vars).clone())),
        _ => {
            let e = random_expr(rng, vars, 2);
            let (lo, hi) = cfg.domain;
            let guard = BoolExpr::And(
                Box::new(BoolExpr::Cmp(CmpOp::Le, Expr::Num(lo), e.clone())),
                Box::new(BoolExpr::Cmp(CmpOp::Le, e.clone(), Expr::Num(hi))),
            );
            Command::seq(Command::Assume(guard), Command::Assign(x.clone(), e))
        }
    }
}

/// Loop-free core command of depth at most `cfg.depth`.
pub fn random_command<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Command {
    desugar(&command_in(rng, cfg, &cfg.vars.clone(), cfg.depth))
}

fn command_in<R: Rng>(rng: &mut R, cfg: &GenConfig, scope: &[Name], depth: usize) -> Command {
    let leaf = depth <= 1 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..10) {
            0 => Command::Skip,
            1..=3 => {
                let x = pick(rng, scope).clone();
                closed_assign(rng, cfg, &x, scope)
            }
            4 | 5 => Command::Assume(random_bool(rng, scope, 1)),
            6..=8 => {
                if rng.gen_bool(0.7) {
                    Command::Tick(Expr::Num(rng.gen_range(-cfg.max_tick..=cfg.max_tick)))
                } else {
                    Command::Tick(random_expr(rng, scope, 1))
                }
            }
            _ => {
                let x = pick(rng, scope).clone();
                closed_assign(rng, cfg, &x, scope)
            }
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0..=3 => Command::seq(command_in(rng, cfg, scope, d), command_in(rng, cfg, scope, d)),
        4 | 5 => Command::choice(command_in(rng, cfg, scope, d), command_in(rng, cfg, scope, d)),
        6 | 7 => Command::If(
            random_bool(rng, scope, 1),
            Box::new(command_in(rng, cfg, scope, d)),
            Box::new(command_in(rng, cfg, scope, d)),
        ),
        _ => {
            let fresh: Vec<&Name> = cfg.locals.iter().filter(|l| !scope.contains(l)).collect();
            match fresh.choose(rng) {
                Some(t) if cfg.allow_local => {
                    let t = (*t).clone();
                    let mut inner = scope.to_vec();
                    inner.push(t.clone());
                    Command::Local(t, Box::new(command_in(rng, cfg, &inner, d)))
                }
                _ => Command::seq(command_in(rng, cfg, scope, d), command_in(rng, cfg, scope, d)),
            }
        }
    }
}

/// Resource assertion over `vars` with finite sums only, so evaluation never
/// adds opposite infinities.
pub fn random_res<R: Rng>(rng: &mut R, vars: &[Name], depth: usize) -> Res {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..10) {
            0 => Res::Lit(if rng.gen_bool(0.5) { ExtInt::PosInf } else { ExtInt::NegInf }),
            1..=3 => Res::num(rng.gen_range(-4..=4)),
            4..=6 => Res::Arith(random_expr(rng, vars, 2)),
            _ => Res::Guard(random_bool(rng, vars, 1)),
        };
    }
    let a = random_res(rng, vars, depth - 1);
    match rng.gen_range(0..4) {
        0 => Res::Min(Box::new(a), Box::new(random_res(rng, vars, depth - 1))),
        1 => Res::Max(Box::new(a), Box::new(random_res(rng, vars, depth - 1))),
        2 => Res::Add(Box::new(a), Box::new(Res::Arith(random_expr(rng, vars, 1)))),
        _ => Res::Sub(Box::new(a), random_expr(rng, vars, 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{enumerate, DomainBounds};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_stay_in_the_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = GenConfig::default();
        let bounds = DomainBounds::uniform(-3, 3);
        let vars = cfg.vars.clone();
        for _ in 0..200 {
            let c = random_command(&mut rng, &cfg);
            assert!(c.is_core() && c.is_loop_free());
            for s in bounds.states(&vars, &[]) {
                for o in enumerate(&c, &s, 0, &bounds).unwrap().outcomes {
                    for x in &vars {
                        let v = o.state.get(x).unwrap();
                        assert!((-3..=3).contains(&v), "{c}\nleaves the domain: {x} = {v}");
                    }
                }
            }
        }
    }
}
