//! Strongest post, weakest pre and exhaustive weakest pre of loop-free commands.
//!
//! Outputs are built with the smart constructors of [`Res`] only; callers
//! that want a compact form run [`simplify`] themselves. The unsimplified
//! form is what the brute-force oracle compares against, since it keeps
//! every binder's range semantics intact under bounded evaluation.

use crate::assert::{simplify, Res};
use crate::lang::analysis::rename_local;
use crate::lang::{ArrayExpr, BoolExpr, CmpOp, Command, Expr, FreeVars, Name, NameSet, Subst};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("transformers are defined for loop-free commands only")]
    LoopPresent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformerResult {
    pub result: Res,
    /// True when the simplified result has no `sup`/`inf` binder left.
    pub certifying: bool,
}

impl TransformerResult {
    fn new(result: Res) -> TransformerResult {
        let certifying = !simplify(&result).has_binder();
        TransformerResult { result, certifying }
    }
}

/// Source of fresh names, shared across one verification task so that the
/// generated names are stable for identical inputs.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    counter: usize,
    avoid: NameSet,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh::default()
    }

    /// Reserves names that generated variables must never collide with.
    pub fn avoid(&mut self, names: impl IntoIterator<Item = Name>) {
        self.avoid.extend(names);
    }

    /// `{base}'{k}` for the next counter value not in the avoided set.
    pub fn name(&mut self, base: &str, also: &NameSet) -> Name {
        let stem = base.split('\'').next().unwrap_or(base);
        loop {
            self.counter += 1;
            let n = format!("{stem}'{}", self.counter);
            if !self.avoid.contains(&n) && !also.contains(&n) {
                self.avoid.insert(n.clone());
                return n;
            }
        }
    }
}

pub(crate) fn neq(a: Expr, b: Expr) -> BoolExpr {
    BoolExpr::Cmp(CmpOp::Ne, a, b)
}

/// Binder name for `local x. c` under an assertion `r`: `x` itself unless it
/// would capture a free occurrence in `r`, in which case the body is renamed.
pub(crate) fn open_local(x: &Name, c: &Command, r: &Res, fresh: &mut Fresh) -> (Name, Command) {
    if r.mentions(x) {
        let mut also = r.free_vars();
        also.extend(c.free_vars());
        let y = fresh.name(x, &also);
        let body = rename_local(x, c, &y);
        (y, body)
    } else {
        (x.clone(), c.clone())
    }
}

/// Strongest post of an atomic command (skip, assignments, assume, tick).
pub(crate) fn sp_atom(c: &Command, p: &Res, fresh: &mut Fresh) -> Res {
    match c {
        Command::Skip => p.clone(),
        Command::Assign(x, e) => {
            let mut also = p.free_vars();
            also.extend(e.free_vars());
            let x1 = fresh.name(x, &also);
            let old = Expr::Var(x1.clone());
            Res::inf(&x1, Res::max(p.subst_var(x, &old), Res::guard(neq(Expr::var(x), e.subst_var(x, &old)))))
        }
        Command::ArrayAssign(a, i, v) => {
            let mut also = p.free_vars();
            also.extend(i.free_vars());
            also.extend(v.free_vars());
            let w = fresh.name("w", &also);
            let current = ArrayExpr::Var(a.clone());
            if !i.mentions(a) && !v.mentions(a) {
                // The index is unchanged by the update, so only the overwritten
                // cell is unknown.
                let before = ArrayExpr::Store(Box::new(current), Box::new(i.clone()), Box::new(Expr::Var(w.clone())));
                let moved =
                    Res::guard(neq(Expr::Read(Box::new(ArrayExpr::Var(a.clone())), Box::new(i.clone())), v.clone()));
                return Res::max(moved, Res::inf(&w, p.subst(&Subst::Array(a, &before))));
            }
            let j = fresh.name("i", &also);
            let before =
                ArrayExpr::Store(Box::new(current), Box::new(Expr::Var(j.clone())), Box::new(Expr::Var(w.clone())));
            let s = Subst::Array(a, &before);
            let body = Res::max_all([
                p.subst(&s),
                Res::guard(neq(Expr::Var(j.clone()), i.subst(&s))),
                Res::guard(neq(
                    Expr::Read(Box::new(ArrayExpr::Var(a.clone())), Box::new(Expr::Var(j.clone()))),
                    v.subst(&s),
                )),
            ]);
            Res::inf(&j, Res::inf(&w, body))
        }
        Command::Assume(b) => Res::max(p.clone(), Res::guard(b.negate())),
        Command::Tick(e) => Res::sub(p.clone(), e.clone()),
        _ => unreachable!("not an atomic command"),
    }
}

/// Weakest pre of an atomic command.
pub(crate) fn wp_atom(c: &Command, q: &Res) -> Res {
    match c {
        Command::Skip => q.clone(),
        Command::Assign(x, e) => q.subst_var(x, e),
        Command::ArrayAssign(a, i, v) => {
            let after = ArrayExpr::Store(Box::new(ArrayExpr::Var(a.clone())), Box::new(i.clone()), Box::new(v.clone()));
            q.subst(&Subst::Array(a, &after))
        }
        Command::Assume(b) => Res::min(q.clone(), Res::guard(b.clone())),
        Command::Tick(e) => Res::add_expr(q.clone(), e.clone()),
        _ => unreachable!("not an atomic command"),
    }
}

/// Exhaustive weakest pre of an atomic command: the run must also reach a
/// level of at most zero.
pub(crate) fn wpd_atom(c: &Command, q: &Res) -> Res {
    match c {
        Command::Tick(e) => Res::min(Res::add_expr(q.clone(), e.clone()), Res::max(Res::num(0), Res::Arith(e.clone()))),
        _ => Res::min(wp_atom(c, q), Res::num(0)),
    }
}

pub(crate) fn is_atom(c: &Command) -> bool {
    matches!(c, Command::Skip | Command::Assign(..) | Command::ArrayAssign(..) | Command::Assume(_) | Command::Tick(_))
}

fn core(c: &Command) -> Command {
    if c.is_core() {
        c.clone()
    } else {
        crate::lang::desugar(c)
    }
}

fn sp_rec(c: &Command, p: Res, fresh: &mut Fresh) -> Result<Res, TransformError> {
    Ok(match c {
        _ if is_atom(c) => sp_atom(c, &p, fresh),
        Command::Seq(a, b) => {
            let mid = sp_rec(a, p, fresh)?;
            sp_rec(b, mid, fresh)?
        }
        Command::Choice(a, b) => Res::min(sp_rec(a, p.clone(), fresh)?, sp_rec(b, p, fresh)?),
        Command::Local(x, body) => {
            let (y, body) = open_local(x, body, &p, fresh);
            Res::inf(&y, sp_rec(&body, p, fresh)?)
        }
        _ => return Err(TransformError::LoopPresent),
    })
}

fn wp_rec(c: &Command, q: Res, fresh: &mut Fresh) -> Result<Res, TransformError> {
    Ok(match c {
        _ if is_atom(c) => wp_atom(c, &q),
        Command::Seq(a, b) => {
            let mid = wp_rec(b, q, fresh)?;
            wp_rec(a, mid, fresh)?
        }
        Command::Choice(a, b) => Res::max(wp_rec(a, q.clone(), fresh)?, wp_rec(b, q, fresh)?),
        Command::Local(x, body) => {
            let (y, body) = open_local(x, body, &q, fresh);
            Res::sup(&y, wp_rec(&body, q, fresh)?)
        }
        _ => return Err(TransformError::LoopPresent),
    })
}

fn wpd_rec(c: &Command, q: Res, fresh: &mut Fresh) -> Result<Res, TransformError> {
    Ok(match c {
        _ if is_atom(c) => wpd_atom(c, &q),
        Command::Seq(a, b) => {
            // The level may drop to zero in either half.
            let late = wp_rec(b, q.clone(), fresh)?;
            let first = wpd_rec(a, late, fresh)?;
            let early = wpd_rec(b, q, fresh)?;
            let second = wp_rec(a, early, fresh)?;
            Res::max(first, second)
        }
        Command::Choice(a, b) => Res::max(wpd_rec(a, q.clone(), fresh)?, wpd_rec(b, q, fresh)?),
        Command::Local(x, body) => {
            let (y, body) = open_local(x, body, &q, fresh);
            Res::sup(&y, wpd_rec(&body, q, fresh)?)
        }
        _ => return Err(TransformError::LoopPresent),
    })
}

fn fresh_for(c: &Command, r: &Res) -> Fresh {
    let mut fresh = Fresh::new();
    fresh.avoid(c.free_vars());
    fresh.avoid(r.free_vars());
    fresh
}

pub fn sp_with(c: &Command, p: &Res, fresh: &mut Fresh) -> Result<TransformerResult, TransformError> {
    sp_rec(&core(c), p.clone(), fresh).map(TransformerResult::new)
}

pub fn wp_with(c: &Command, q: &Res, fresh: &mut Fresh) -> Result<TransformerResult, TransformError> {
    wp_rec(&core(c), q.clone(), fresh).map(TransformerResult::new)
}

pub fn wp_diamond_with(c: &Command, q: &Res, fresh: &mut Fresh) -> Result<TransformerResult, TransformError> {
    wpd_rec(&core(c), q.clone(), fresh).map(TransformerResult::new)
}

/// Lowest postcondition of `c` from `p`.
pub fn sp(c: &Command, p: &Res) -> Result<TransformerResult, TransformError> {
    sp_with(c, p, &mut fresh_for(c, p))
}

/// Greatest precondition of `c` for `q`.
pub fn wp(c: &Command, q: &Res) -> Result<TransformerResult, TransformError> {
    wp_with(c, q, &mut fresh_for(c, q))
}

/// Greatest precondition of `c` for `q` over runs whose level reaches zero.
pub fn wp_diamond(c: &Command, q: &Res) -> Result<TransformerResult, TransformError> {
    wp_diamond_with(c, q, &mut fresh_for(c, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert::{eval_res, parse_res, ExtInt};
    use crate::lang::parse_command;
    use crate::semantics::{DomainBounds, State};

    fn cmd(s: &str) -> Command {
        parse_command(s).unwrap()
    }

    fn at(r: &Res, pairs: &[(&str, i64)]) -> ExtInt {
        let mut s = State::new();
        for (x, v) in pairs {
            s.set(x, *v);
        }
        eval_res(r, &s, &DomainBounds::uniform(-10, 10)).unwrap()
    }

    #[test]
    fn assume_rows() {
        let p = parse_res("x").unwrap();
        let b = crate::lang::parse_bool("x > 0").unwrap();
        assert_eq!(sp(&Command::Assume(b.clone()), &p).unwrap().result, Res::max(p.clone(), Res::guard(b.negate())));
        assert_eq!(wp(&Command::Assume(b.clone()), &p).unwrap().result, Res::min(p, Res::guard(b)));
    }

    #[test]
    fn tick_rows() {
        let q = Res::num(5);
        let t = cmd("tick(2);");
        assert_eq!(at(&sp(&t, &q).unwrap().result, &[]), ExtInt::Fin(3));
        assert_eq!(at(&wp(&t, &q).unwrap().result, &[]), ExtInt::Fin(7));
        assert_eq!(at(&wp_diamond(&t, &q).unwrap().result, &[]), ExtInt::Fin(2));
    }

    #[test]
    fn conditional_wp() {
        let c = cmd("if (x == 42) { tick(2); } else { tick(1); }");
        let r = wp(&c, &Res::num(0)).unwrap().result;
        assert_eq!(at(&r, &[("x", 42)]), ExtInt::Fin(2));
        assert_eq!(at(&r, &[("x", 0)]), ExtInt::Fin(1));
    }

    #[test]
    fn diamond_sequence_takes_the_better_split() {
        let c = cmd("tick(10); tick(-5);");
        let r = wp_diamond(&c, &Res::num(5)).unwrap().result;
        assert_eq!(at(&r, &[]), ExtInt::Fin(10));
        let c = cmd("skip; tick(1);");
        assert_eq!(at(&wp_diamond(&c, &Res::num(0)).unwrap().result, &[]), ExtInt::Fin(1));
    }

    #[test]
    fn assign_sp_uses_fresh_names() {
        let c = cmd("x = x + 1;");
        let r = sp(&c, &parse_res("x").unwrap()).unwrap();
        assert!(r.result.to_string().contains("x'1"), "{}", r.result);
        assert_eq!(at(&r.result, &[("x", 3)]), ExtInt::Fin(2));
        assert!(r.certifying);
    }

    #[test]
    fn loops_are_rejected() {
        let c = cmd("loop { tick(1); }");
        assert_eq!(wp(&c, &Res::num(0)), Err(TransformError::LoopPresent));
    }

    #[test]
    fn local_binder_is_renamed_away_from_the_assertion() {
        let c = cmd("{ int x; x = 3; y = x; }");
        let r = wp(&c, &parse_res("x + y").unwrap()).unwrap().result;
        assert_eq!(at(&r, &[("x", 1), ("y", 0)]), ExtInt::Fin(4));
    }
}
