use crate::lang::{ArrayExpr, BoolExpr, Expr, Name};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("+oo + -oo is undefined")]
    UndefinedSum,
    #[error("sup/inf binder `{0}` has no evaluation range")]
    Unranged(Name),
}

/// A total function ℤ → ℤ: a default value plus finitely many overrides.
/// Overrides equal to the default are never stored, so derived equality is
/// extensional equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayVal {
    default: i64,
    over: BTreeMap<i64, i64>,
}

impl ArrayVal {
    pub fn constant(default: i64) -> ArrayVal {
        ArrayVal { default, over: BTreeMap::new() }
    }

    pub fn from_slice(values: &[i64]) -> ArrayVal {
        let mut a = ArrayVal::default();
        for (i, v) in values.iter().enumerate() {
            a.set(i as i64, *v);
        }
        a
    }

    pub fn get(&self, i: i64) -> i64 {
        self.over.get(&i).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, i: i64, v: i64) {
        if v == self.default {
            self.over.remove(&i);
        } else {
            self.over.insert(i, v);
        }
    }

    pub fn store(&self, i: i64, v: i64) -> ArrayVal {
        let mut out = self.clone();
        out.set(i, v);
        out
    }

    pub fn default_value(&self) -> i64 {
        self.default
    }

    pub fn overrides(&self) -> &BTreeMap<i64, i64> {
        &self.over
    }
}

impl fmt::Display for ArrayVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, v)) in self.over.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {v}")?;
        }
        if !self.over.is_empty() {
            write!(f, ", ")?;
        }
        write!(f, "_: {}}}", self.default)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub scalars: BTreeMap<Name, i64>,
    pub arrays: BTreeMap<Name, ArrayVal>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn with(mut self, x: &str, v: i64) -> State {
        self.scalars.insert(x.to_string(), v);
        self
    }

    pub fn with_array(mut self, a: &str, v: ArrayVal) -> State {
        self.arrays.insert(a.to_string(), v);
        self
    }

    pub fn get(&self, x: &str) -> Result<i64, EvalError> {
        self.scalars.get(x).copied().ok_or_else(|| EvalError::Unbound(x.to_string()))
    }

    pub fn array(&self, a: &str) -> Result<&ArrayVal, EvalError> {
        self.arrays.get(a).ok_or_else(|| EvalError::Unbound(a.to_string()))
    }

    pub fn set(&mut self, x: &str, v: i64) {
        self.scalars.insert(x.to_string(), v);
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, v) in &self.scalars {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{x}={v}")?;
        }
        for (a, v) in &self.arrays {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a}={v}")?;
        }
        Ok(())
    }
}

fn ck(v: Option<i64>) -> Result<i64, EvalError> {
    v.ok_or(EvalError::Overflow)
}

pub fn eval_expr(s: &State, e: &Expr) -> Result<i64, EvalError> {
    match e {
        Expr::Num(n) => Ok(*n),
        Expr::Var(x) => s.get(x),
        Expr::Read(a, i) => {
            let i = eval_expr(s, i)?;
            read_array(s, a, i)
        }
        Expr::Neg(a) => ck(eval_expr(s, a)?.checked_neg()),
        Expr::Add(a, b) => ck(eval_expr(s, a)?.checked_add(eval_expr(s, b)?)),
        Expr::Sub(a, b) => ck(eval_expr(s, a)?.checked_sub(eval_expr(s, b)?)),
        Expr::Mul(a, b) => ck(eval_expr(s, a)?.checked_mul(eval_expr(s, b)?)),
        Expr::Div(a, d) => ck(eval_expr(s, a)?.checked_div_euclid(*d)),
        Expr::Ite(c, a, b) => {
            if eval_bool(s, c)? {
                eval_expr(s, a)
            } else {
                eval_expr(s, b)
            }
        }
    }
}

/// Reads `a[i]` applying the read-over-write laws along the store chain.
fn read_array(s: &State, a: &ArrayExpr, i: i64) -> Result<i64, EvalError> {
    match a {
        ArrayExpr::Var(name) => Ok(s.array(name)?.get(i)),
        ArrayExpr::Store(inner, k, v) => {
            if eval_expr(s, k)? == i {
                eval_expr(s, v)
            } else {
                read_array(s, inner, i)
            }
        }
    }
}

pub fn eval_array(s: &State, a: &ArrayExpr) -> Result<ArrayVal, EvalError> {
    match a {
        ArrayExpr::Var(name) => Ok(s.array(name)?.clone()),
        ArrayExpr::Store(inner, k, v) => {
            let mut base = eval_array(s, inner)?;
            base.set(eval_expr(s, k)?, eval_expr(s, v)?);
            Ok(base)
        }
    }
}

pub fn eval_bool(s: &State, b: &BoolExpr) -> Result<bool, EvalError> {
    match b {
        BoolExpr::Const(v) => Ok(*v),
        BoolExpr::Cmp(op, x, y) => Ok(op.holds(eval_expr(s, x)?, eval_expr(s, y)?)),
        BoolExpr::Not(x) => Ok(!eval_bool(s, x)?),
        BoolExpr::And(x, y) => Ok(eval_bool(s, x)? && eval_bool(s, y)?),
        BoolExpr::Or(x, y) => Ok(eval_bool(s, x)? || eval_bool(s, y)?),
        BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
            let want = matches!(b, BoolExpr::Exists(..));
            let lo = eval_expr(s, lo)?;
            let hi = eval_expr(s, hi)?;
            let mut inner = s.clone();
            for v in lo..hi {
                inner.set(i, v);
                if eval_bool(&inner, body)? == want {
                    return Ok(want);
                }
            }
            Ok(!want)
        }
        BoolExpr::ArrayEq(x, y) => Ok(eval_array(s, x)? == eval_array(s, y)?),
    }
}
