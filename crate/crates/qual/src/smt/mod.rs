//! SMT-LIB encoding of ⪯-queries and an external solver driver.

mod encode;
pub mod sexp;
mod solver;

pub use encode::{encode_query, expand_universals, mangle, Encoded, Query, SmtSort};
pub use solver::{solve, SatAnswer, SolverError, SolverHandle};

use crate::assert::eval_res_unbounded_ok;
use crate::semantics::{eval_bool, ArrayVal, State};
use sexp::Sx;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtOutcome {
    Proved,
    /// Satisfying assignment for the negated claim.
    Refuted(State),
    Unknown(String),
}

/// Result of re-evaluating a solver model on the original query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Replay {
    /// The model violates the claim under concrete evaluation.
    Confirmed,
    /// Concrete evaluation is impossible (unsupported model value or binders).
    Inconclusive(String),
    /// The model satisfies the claim; the solver answer is not trusted.
    Contradicted,
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub outcome: SmtOutcome,
    pub replay: Option<Replay>,
    pub script: String,
}

/// Runs a raw script; `sat` yields an empty refutation state.
pub fn run_solver(handle: &SolverHandle, script: &str) -> Result<SmtOutcome, SolverError> {
    Ok(match solve(handle, script, &[])? {
        SatAnswer::Unsat => SmtOutcome::Proved,
        SatAnswer::Sat(_) => SmtOutcome::Refuted(State::new()),
        SatAnswer::Unknown(r) => SmtOutcome::Unknown(r),
    })
}

/// Script text for a query, as sent to the solver.
pub fn query_script(q: &Query, logic: &str) -> String {
    encode_query(q).script(logic)
}

pub fn check_query(handle: &SolverHandle, q: &Query) -> Result<QueryOutcome, SolverError> {
    run_encoded(handle, q, &encode_query(q))
}

/// Bounded variant: program scalars in `[-b, b]`, universals expanded over `[-4b, 4b]`.
pub fn check_query_bounded(handle: &SolverHandle, q: &Query, b: i64) -> Result<QueryOutcome, SolverError> {
    run_encoded(handle, q, &encode_query(q).bounded(b))
}

fn run_encoded(handle: &SolverHandle, q: &Query, enc: &Encoded) -> Result<QueryOutcome, SolverError> {
    let script = enc.script(&handle.logic);
    let symbols: Vec<String> = enc.program.iter().map(|(s, _, _)| s.clone()).collect();
    let (outcome, replay) = match solve(handle, &script, &symbols)? {
        SatAnswer::Unsat => (SmtOutcome::Proved, None),
        SatAnswer::Unknown(r) => (SmtOutcome::Unknown(r), None),
        SatAnswer::Sat(values) => {
            let mut state = State::new();
            let mut missing = None;
            for (smt, name, sort) in &enc.program {
                match (sort, values.get(smt)) {
                    (SmtSort::Int, Some(v)) => match v.as_int() {
                        Some(n) => state.set(name, n),
                        None => missing = Some(format!("non-integer value for {name}")),
                    },
                    (SmtSort::IntArray, Some(v)) => match decode_array(v) {
                        Some(a) => {
                            state.arrays.insert(name.clone(), a);
                        }
                        None => missing = Some(format!("undecodable array value for {name}")),
                    },
                    (_, None) => missing = Some(format!("no value for {name}")),
                }
            }
            let replay = match missing {
                Some(why) => Replay::Inconclusive(why),
                None => replay(q, &state),
            };
            (SmtOutcome::Refuted(state), Some(replay))
        }
    };
    Ok(QueryOutcome { outcome, replay, script })
}

/// Evaluates both sides of the query at `s`.
pub fn replay(q: &Query, s: &State) -> Replay {
    match eval_bool(s, &q.hyp) {
        Ok(false) => return Replay::Contradicted,
        Ok(true) => {}
        Err(e) => return Replay::Inconclusive(e.to_string()),
    }
    if q.lhs.has_binder() || q.rhs.has_binder() {
        return Replay::Inconclusive("sup/inf binders cannot be evaluated exactly".into());
    }
    let l = eval_res_unbounded_ok(&q.lhs, s);
    let r = eval_res_unbounded_ok(&q.rhs, s);
    match (l, r) {
        (Ok(l), Ok(r)) if l > r => Replay::Confirmed,
        (Ok(_), Ok(_)) => Replay::Contradicted,
        (Err(e), _) | (_, Err(e)) => Replay::Inconclusive(e.to_string()),
    }
}

/// Decodes constant arrays, store chains and `lambda`/`ite` tables.
pub fn decode_array(v: &Sx) -> Option<ArrayVal> {
    match v.head() {
        Some("store") => {
            let it = v.items();
            let mut base = decode_array(it.get(1)?)?;
            base.set(it.get(2)?.as_int()?, it.get(3)?.as_int()?);
            Some(base)
        }
        Some("lambda") => {
            let it = v.items();
            let var = match it.get(1)?.items().first()?.items().first()? {
                Sx::Atom(a) => a.clone(),
                _ => return None,
            };
            decode_table(it.get(2)?, &var)
        }
        _ => {
            // ((as const (Array Int Int)) k)
            let it = v.items();
            if it.len() == 2 && it[0].head() == Some("as") {
                if let Some(Sx::Atom(c)) = it[0].items().get(1) {
                    if c == "const" {
                        return Some(ArrayVal::constant(it[1].as_int()?));
                    }
                }
            }
            None
        }
    }
}

fn decode_table(body: &Sx, var: &str) -> Option<ArrayVal> {
    if let Some(n) = body.as_int() {
        return Some(ArrayVal::constant(n));
    }
    if body.head() == Some("ite") {
        let it = body.items();
        let cond = it.get(1)?;
        if cond.head() != Some("=") {
            return None;
        }
        let (a, b) = (cond.items().get(1)?, cond.items().get(2)?);
        let key = match (a, b) {
            (Sx::Atom(x), k) if x == var => k.as_int()?,
            (k, Sx::Atom(x)) if x == var => k.as_int()?,
            _ => return None,
        };
        let then = it.get(2)?.as_int()?;
        let mut rest = decode_table(it.get(3)?, var)?;
        rest.set(key, then);
        return Some(rest);
    }
    None
}
