use super::{eval_res, sorted_names, Res};
use crate::lang::{BoolExpr, DeclKind};
use crate::semantics::{DomainBounds, State};
use crate::smt::{check_query, Query, Replay, SmtOutcome, SolverHandle};

#[derive(Clone, Copy, Debug)]
pub enum LeqMethod<'a> {
    Smt(&'a SolverHandle),
    Bounded(&'a DomainBounds),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeqResult {
    True,
    /// Carries a state where the left side exceeds the right, when one is known.
    False(Option<State>),
    Unknown(String),
}

impl LeqResult {
    pub fn holds(&self) -> bool {
        matches!(self, LeqResult::True)
    }
}

/// Pointwise `p ⪯ q`.
pub fn leq(p: &Res, q: &Res, method: LeqMethod) -> LeqResult {
    match method {
        LeqMethod::Bounded(b) => leq_bounded(p, q, b),
        LeqMethod::Smt(h) => {
            let query = Query { hyp: BoolExpr::Const(true), lhs: p.clone(), rhs: q.clone() };
            match check_query(h, &query) {
                Err(e) => LeqResult::Unknown(e.to_string()),
                Ok(out) => match (out.outcome, out.replay) {
                    (SmtOutcome::Proved, _) => LeqResult::True,
                    (SmtOutcome::Refuted(s), Some(Replay::Confirmed)) => LeqResult::False(Some(s)),
                    (SmtOutcome::Refuted(_), Some(Replay::Inconclusive(why))) => LeqResult::Unknown(why),
                    (SmtOutcome::Refuted(_), _) => LeqResult::Unknown("model does not replay".into()),
                    (SmtOutcome::Unknown(r), _) => LeqResult::Unknown(r),
                },
            }
        }
    }
}

/// `p ⪯ q` checked on every state within `bounds`, with sup/inf binders
/// ranging over `bounds.quant_range`.
pub fn leq_bounded(p: &Res, q: &Res, bounds: &DomainBounds) -> LeqResult {
    let mut names = sorted_names(p);
    names.extend(sorted_names(q));
    let scalars: Vec<_> = names.iter().filter(|(_, k)| **k == DeclKind::Scalar).map(|(n, _)| n.clone()).collect();
    let arrays: Vec<_> = names.iter().filter(|(_, k)| **k == DeclKind::Array).map(|(n, _)| n.clone()).collect();
    for s in bounds.states(&scalars, &arrays) {
        match (eval_res(p, &s, bounds), eval_res(q, &s, bounds)) {
            (Ok(a), Ok(b)) if a > b => return LeqResult::False(Some(s)),
            (Ok(_), Ok(_)) => {}
            (Err(e), _) | (_, Err(e)) => return LeqResult::Unknown(e.to_string()),
        }
    }
    LeqResult::True
}
