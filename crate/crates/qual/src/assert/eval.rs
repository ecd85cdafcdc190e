use super::{ExtInt, Res};
use crate::semantics::{eval_bool, eval_expr, DomainBounds, EvalError, State};

/// Value of `r` at `s`. `Sup`/`Inf` binders range over `bounds.quant_range`.
pub fn eval_res(r: &Res, s: &State, bounds: &DomainBounds) -> Result<ExtInt, EvalError> {
    eval_in(r, s, Some(bounds))
}

/// Like `eval_res` but fails on any `Sup`/`Inf` instead of bounding it.
pub fn eval_res_unbounded_ok(r: &Res, s: &State) -> Result<ExtInt, EvalError> {
    eval_in(r, s, None)
}

fn is_leaf(r: &Res) -> bool {
    matches!(r, Res::Lit(_) | Res::Arith(_) | Res::Guard(_))
}

/// Orders operands so a leaf is evaluated before a compound term. Guards
/// produced by assignments then cut off the binder ranges below them.
fn cheap_first<'a>(a: &'a Res, b: &'a Res) -> (&'a Res, &'a Res) {
    if is_leaf(b) && !is_leaf(a) {
        (b, a)
    } else {
        (a, b)
    }
}

fn eval_in(r: &Res, s: &State, bounds: Option<&DomainBounds>) -> Result<ExtInt, EvalError> {
    Ok(match r {
        Res::Lit(v) => *v,
        Res::Arith(e) => ExtInt::Fin(eval_expr(s, e)?),
        Res::Guard(b) => {
            if eval_bool(s, b)? {
                ExtInt::PosInf
            } else {
                ExtInt::NegInf
            }
        }
        Res::Min(a, b) => {
            let (a, b) = cheap_first(a, b);
            let va = eval_in(a, s, bounds)?;
            if va == ExtInt::NegInf {
                return Ok(va);
            }
            va.min(eval_in(b, s, bounds)?)
        }
        Res::Max(a, b) => {
            let (a, b) = cheap_first(a, b);
            let va = eval_in(a, s, bounds)?;
            if va == ExtInt::PosInf {
                return Ok(va);
            }
            va.max(eval_in(b, s, bounds)?)
        }
        Res::Add(a, b) => eval_in(a, s, bounds)?.checked_add(eval_in(b, s, bounds)?)?,
        Res::Sub(a, e) => eval_in(a, s, bounds)?.sub_fin(eval_expr(s, e)?)?,
        Res::Sup(x, body) | Res::Inf(x, body) => {
            let bounds = bounds.ok_or_else(|| EvalError::Unranged(x.clone()))?;
            let is_sup = matches!(r, Res::Sup(..));
            let mut acc = if is_sup { ExtInt::NegInf } else { ExtInt::PosInf };
            let mut inner = s.clone();
            for v in bounds.quant_range.0..=bounds.quant_range.1 {
                inner.set(x, v);
                let val = eval_in(body, &inner, Some(bounds))?;
                acc = if is_sup { acc.max(val) } else { acc.min(val) };
                if (is_sup && acc == ExtInt::PosInf) || (!is_sup && acc == ExtInt::NegInf) {
                    break;
                }
            }
            acc
        }
    })
}
