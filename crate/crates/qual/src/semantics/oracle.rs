//! Brute-force evaluation of the triple judgments over a finite domain.
//!
//! Runs are enumerated once at initial resource 0 and shifted: a run from
//! `(σ, 0)` ending in `(τ, q0)` with minimal level `l0` corresponds to a run
//! from `(σ, p)` ending in `(τ, p + q0)` with level `p + l0`.

use super::bounds::DomainBounds;
use super::exec::enumerate;
use super::state::{EvalError, State};
use crate::assert::{eval_res, ExtInt, Mode, Res};
use crate::lang::{Command, Name};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    /// A state at which the judgment fails: the initial state for backward
    /// triples, the final state for forward ones.
    False(State),
    /// Some enumeration reached the unroll cap.
    Truncated,
}

impl Truth {
    pub fn is_true(&self) -> bool {
        matches!(self, Truth::True)
    }
}

fn shifted(base: ExtInt, delta: i64) -> ExtInt {
    match base {
        ExtInt::Fin(v) => {
            v.checked_add(delta).map_or(if delta > 0 { ExtInt::PosInf } else { ExtInt::NegInf }, ExtInt::Fin)
        }
        inf => inf,
    }
}

/// `sup{p : ∃τ,q. q ≤ Q(τ) ∧ ⟨C,σ,p⟩ ⇓ ⟨τ,q⟩}`, or with `diamond` the same
/// over runs whose minimal level is at most 0. Also reports truncation.
pub fn pre_value(
    c: &Command,
    q: &Res,
    s: &State,
    bounds: &DomainBounds,
    diamond: bool,
) -> Result<(ExtInt, bool), EvalError> {
    let en = enumerate(c, s, 0, bounds)?;
    let mut best = ExtInt::NegInf;
    for o in &en.outcomes {
        // q0 + p ≤ Q(τ)  iff  p ≤ Q(τ) − q0
        let mut v = shifted(eval_res(q, &o.state, bounds)?, o.q.checked_neg().ok_or(EvalError::Overflow)?);
        if diamond {
            // l0 + p ≤ 0  iff  p ≤ −l0
            v = v.min(ExtInt::Fin(o.l.checked_neg().ok_or(EvalError::Overflow)?));
        }
        best = best.max(v);
    }
    Ok((best, en.truncated))
}

/// `τ ↦ inf{q : ∃σ,p. p ≥ P(σ) ∧ ⟨C,σ,p⟩ ⇓ ⟨τ,q⟩}` for every initial state
/// in `inits`; final states never reached map to `+∞` (absent).
pub fn post_values(
    c: &Command,
    p: &Res,
    inits: &[State],
    bounds: &DomainBounds,
) -> Result<(BTreeMap<State, ExtInt>, bool), EvalError> {
    let mut table: BTreeMap<State, ExtInt> = BTreeMap::new();
    let mut truncated = false;
    for s in inits {
        let pv = eval_res(p, s, bounds)?;
        if pv == ExtInt::PosInf {
            continue;
        }
        let en = enumerate(c, s, 0, bounds)?;
        truncated |= en.truncated;
        for o in en.outcomes {
            let v = shifted(pv, o.q);
            let slot = table.entry(o.state).or_insert(ExtInt::PosInf);
            *slot = (*slot).min(v);
        }
    }
    Ok((table, truncated))
}

/// Value of the forward transformer at one final state.
pub fn post_value(
    c: &Command,
    p: &Res,
    tau: &State,
    inits: &[State],
    bounds: &DomainBounds,
) -> Result<(ExtInt, bool), EvalError> {
    let (table, truncated) = post_values(c, p, inits, bounds)?;
    Ok((table.get(tau).copied().unwrap_or(ExtInt::PosInf), truncated))
}

/// Decides `[P] C [Q]` in `mode` with states ranging over `bounds` for the
/// given scalar and array names.
pub fn holds_semantically(
    mode: Mode,
    p: &Res,
    c: &Command,
    q: &Res,
    bounds: &DomainBounds,
    scalars: &[Name],
    arrays: &[Name],
) -> Result<Truth, EvalError> {
    let states = bounds.states(scalars, arrays);
    let mut truncated = false;
    let mut failure = None;
    match mode {
        Mode::B | Mode::BD => {
            for s in &states {
                let pv = eval_res(p, s, bounds)?;
                if pv == ExtInt::NegInf {
                    continue;
                }
                let (best, tr) = pre_value(c, q, s, bounds, mode == Mode::BD)?;
                truncated |= tr;
                if pv > best && failure.is_none() {
                    failure = Some(s.clone());
                }
            }
        }
        Mode::F => {
            let (table, tr) = post_values(c, p, &states, bounds)?;
            truncated |= tr;
            for t in &states {
                let qv = eval_res(q, t, bounds)?;
                let post = table.get(t).copied().unwrap_or(ExtInt::PosInf);
                if post > qv {
                    failure = Some(t.clone());
                    break;
                }
            }
        }
    }
    Ok(if truncated {
        Truth::Truncated
    } else {
        match failure {
            Some(s) => Truth::False(s),
            None => Truth::True,
        }
    })
}
