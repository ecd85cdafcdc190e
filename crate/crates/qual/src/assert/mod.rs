//! Resource functions `State → ℤ ∪ {±∞}` and factored assertions.

mod eval;
mod leq;
mod parse;
mod simplify;

pub use eval::{eval_res, eval_res_unbounded_ok};
pub use leq::{leq, leq_bounded, LeqMethod, LeqResult};
pub use parse::parse_res;
pub use simplify::{linear_solve, simplify};

use crate::lang::analysis::{fresh_variant, FreeVars, Subst};
use crate::lang::{BoolExpr, Expr, Name, NameSet};
use crate::semantics::EvalError;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtInt {
    NegInf,
    Fin(i64),
    PosInf,
}

impl ExtInt {
    pub fn checked_add(self, other: ExtInt) -> Result<ExtInt, EvalError> {
        use ExtInt::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(EvalError::UndefinedSum),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Fin(a), Fin(b)) => a.checked_add(b).map(Fin).ok_or(EvalError::Overflow),
        }
    }

    pub fn sub_fin(self, e: i64) -> Result<ExtInt, EvalError> {
        match self {
            ExtInt::Fin(a) => a.checked_sub(e).map(ExtInt::Fin).ok_or(EvalError::Overflow),
            inf => Ok(inf),
        }
    }

    pub fn fin(self) -> Option<i64> {
        match self {
            ExtInt::Fin(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtInt::Fin(_))
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::NegInf => write!(f, "-oo"),
            ExtInt::Fin(v) => write!(f, "{v}"),
            ExtInt::PosInf => write!(f, "+oo"),
        }
    }
}

/// Symbolic resource function. `Sup`/`Inf` bind a scalar variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Res {
    Lit(ExtInt),
    Arith(Expr),
    /// `[B]`: `+∞` where `B` holds, `−∞` elsewhere.
    Guard(BoolExpr),
    Min(Box<Res>, Box<Res>),
    Max(Box<Res>, Box<Res>),
    Add(Box<Res>, Box<Res>),
    Sub(Box<Res>, Expr),
    Sup(Name, Box<Res>),
    Inf(Name, Box<Res>),
}

pub const POS_INF: Res = Res::Lit(ExtInt::PosInf);
pub const NEG_INF: Res = Res::Lit(ExtInt::NegInf);

impl Res {
    pub fn num(n: i64) -> Res {
        Res::Arith(Expr::Num(n))
    }

    pub fn guard(b: BoolExpr) -> Res {
        match b {
            BoolExpr::Const(true) => POS_INF,
            BoolExpr::Const(false) => NEG_INF,
            b => Res::Guard(b),
        }
    }

    fn top_value(&self) -> Option<ExtInt> {
        match self {
            Res::Lit(v) => Some(*v),
            Res::Guard(BoolExpr::Const(true)) => Some(ExtInt::PosInf),
            Res::Guard(BoolExpr::Const(false)) => Some(ExtInt::NegInf),
            _ => None,
        }
    }

    /// `a ⋏ b`, dropping `+∞` operands and absorbing `−∞`.
    pub fn min(a: Res, b: Res) -> Res {
        match (a.top_value(), b.top_value()) {
            (Some(ExtInt::PosInf), _) => b,
            (_, Some(ExtInt::PosInf)) => a,
            (Some(ExtInt::NegInf), _) | (_, Some(ExtInt::NegInf)) => NEG_INF,
            _ => Res::Min(Box::new(a), Box::new(b)),
        }
    }

    /// `a ⋎ b`, dropping `−∞` operands and absorbing `+∞`.
    pub fn max(a: Res, b: Res) -> Res {
        match (a.top_value(), b.top_value()) {
            (Some(ExtInt::NegInf), _) => b,
            (_, Some(ExtInt::NegInf)) => a,
            (Some(ExtInt::PosInf), _) | (_, Some(ExtInt::PosInf)) => POS_INF,
            _ => Res::Max(Box::new(a), Box::new(b)),
        }
    }

    /// `a + b`; merges finite arithmetic operands.
    pub fn add(a: Res, b: Res) -> Res {
        match (a, b) {
            (Res::Arith(Expr::Num(0)), b) => b,
            (a, Res::Arith(Expr::Num(0))) => a,
            (Res::Arith(x), Res::Arith(y)) => Res::Arith(Expr::add(x, y)),
            (a, b) => Res::Add(Box::new(a), Box::new(b)),
        }
    }

    /// `a − e` for a finite expression `e`.
    pub fn sub(a: Res, e: Expr) -> Res {
        match (a, e) {
            (a, Expr::Num(0)) => a,
            (Res::Arith(x), e) => Res::Arith(Expr::sub(x, e)),
            (a, e) => Res::Sub(Box::new(a), e),
        }
    }

    /// `a + e` for a finite expression `e`.
    pub fn add_expr(a: Res, e: Expr) -> Res {
        Res::add(a, Res::Arith(e))
    }

    pub fn sup(x: &str, body: Res) -> Res {
        Res::Sup(x.to_string(), Box::new(body))
    }

    pub fn inf(x: &str, body: Res) -> Res {
        Res::Inf(x.to_string(), Box::new(body))
    }

    pub fn min_all(items: impl IntoIterator<Item = Res>) -> Res {
        items.into_iter().fold(POS_INF, Res::min)
    }

    pub fn max_all(items: impl IntoIterator<Item = Res>) -> Res {
        items.into_iter().fold(NEG_INF, Res::max)
    }

    pub fn has_binder(&self) -> bool {
        match self {
            Res::Lit(_) | Res::Arith(_) | Res::Guard(_) => false,
            Res::Min(a, b) | Res::Max(a, b) | Res::Add(a, b) => a.has_binder() || b.has_binder(),
            Res::Sub(a, _) => a.has_binder(),
            Res::Sup(..) | Res::Inf(..) => true,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Res::Lit(_) | Res::Arith(_) | Res::Guard(_) => 1,
            Res::Min(a, b) | Res::Max(a, b) | Res::Add(a, b) => 1 + a.size() + b.size(),
            Res::Sub(a, _) | Res::Sup(_, a) | Res::Inf(_, a) => 1 + a.size(),
        }
    }

    /// Capture-avoiding substitution.
    pub fn subst(&self, s: &Subst) -> Res {
        match self {
            Res::Lit(v) => Res::Lit(*v),
            Res::Arith(e) => Res::Arith(e.subst(s)),
            Res::Guard(b) => Res::Guard(b.subst(s)),
            Res::Min(a, b) => Res::Min(Box::new(a.subst(s)), Box::new(b.subst(s))),
            Res::Max(a, b) => Res::Max(Box::new(a.subst(s)), Box::new(b.subst(s))),
            Res::Add(a, b) => Res::Add(Box::new(a.subst(s)), Box::new(b.subst(s))),
            Res::Sub(a, e) => Res::Sub(Box::new(a.subst(s)), e.subst(s)),
            Res::Sup(x, body) | Res::Inf(x, body) => {
                let (x2, body2) = subst_binder(x, body, s);
                if matches!(self, Res::Sup(..)) {
                    Res::Sup(x2, Box::new(body2))
                } else {
                    Res::Inf(x2, Box::new(body2))
                }
            }
        }
    }

    pub fn subst_var(&self, x: &str, e: &Expr) -> Res {
        self.subst(&Subst::Scalar(x, e))
    }

    pub fn rename(&self, x: &str, y: &str) -> Res {
        self.subst_var(x, &Expr::var(y))
    }
}

fn subst_binder(x: &Name, body: &Res, s: &Subst) -> (Name, Res) {
    let (target, repl_fv) = match s {
        Subst::Scalar(t, e) => (*t, e.free_vars()),
        Subst::Array(t, a) => (*t, a.free_vars()),
    };
    if x == target || !body.mentions(target) {
        return (x.clone(), body.clone());
    }
    if repl_fv.contains(x) {
        let mut avoid = body.free_vars();
        avoid.extend(repl_fv);
        avoid.insert(x.clone());
        let y = fresh_variant(x, &avoid);
        let renamed = body.subst(&Subst::Scalar(x, &Expr::Var(y.clone())));
        (y, renamed.subst(s))
    } else {
        (x.clone(), body.subst(s))
    }
}

impl FreeVars for Res {
    fn collect_free(&self, out: &mut NameSet) {
        match self {
            Res::Lit(_) => {}
            Res::Arith(e) => e.collect_free(out),
            Res::Guard(b) => b.collect_free(out),
            Res::Min(a, b) | Res::Max(a, b) | Res::Add(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Res::Sub(a, e) => {
                a.collect_free(out);
                e.collect_free(out);
            }
            Res::Sup(x, body) | Res::Inf(x, body) => {
                let mut inner = body.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
        }
    }
}

fn res_prec(r: &Res) -> u8 {
    match r {
        Res::Add(..) | Res::Sub(..) => 1,
        Res::Arith(Expr::Add(..) | Expr::Sub(..)) => 1,
        _ => 2,
    }
}

fn write_res(f: &mut fmt::Formatter<'_>, r: &Res, min_prec: u8) -> fmt::Result {
    let paren = res_prec(r) < min_prec;
    if paren {
        write!(f, "(")?;
    }
    match r {
        Res::Lit(v) => write!(f, "{v}")?,
        Res::Arith(e) => write!(f, "{e}")?,
        Res::Guard(b) => write!(f, "[{b}]")?,
        Res::Min(a, b) => {
            write!(f, "min(")?;
            write_res(f, a, 0)?;
            write!(f, ", ")?;
            write_res(f, b, 0)?;
            write!(f, ")")?;
        }
        Res::Max(a, b) => {
            write!(f, "max(")?;
            write_res(f, a, 0)?;
            write!(f, ", ")?;
            write_res(f, b, 0)?;
            write!(f, ")")?;
        }
        Res::Add(a, b) => {
            write_res(f, a, 1)?;
            write!(f, " + ")?;
            write_res(f, b, 2)?;
        }
        Res::Sub(a, e) => {
            write_res(f, a, 1)?;
            match e {
                Expr::Add(..) | Expr::Sub(..) => write!(f, " - ({e})")?,
                _ => write!(f, " - {e}")?,
            }
        }
        Res::Sup(x, body) => {
            write!(f, "(sup {x}. ")?;
            write_res(f, body, 0)?;
            write!(f, ")")?;
        }
        Res::Inf(x, body) => {
            write!(f, "(inf {x}. ")?;
            write_res(f, body, 0)?;
            write!(f, ")")?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Res {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_res(f, self, 0)
    }
}

/// `[spec; res]`: a specification predicate paired with a finite resource bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factored {
    pub spec: BoolExpr,
    pub res: Expr,
}

impl Factored {
    pub fn new(spec: BoolExpr, res: Expr) -> Factored {
        Factored { spec, res }
    }

    pub fn subst_var(&self, x: &str, e: &Expr) -> Factored {
        Factored { spec: self.spec.subst_var(x, e), res: self.res.subst_var(x, e) }
    }

    pub fn free_vars(&self) -> NameSet {
        let mut out = self.spec.free_vars();
        out.extend(self.res.free_vars());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Forward triples.
    F,
    /// Backward triples.
    B,
    /// Backward triples whose witness run exhausts the resource.
    BD,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::F, Mode::B, Mode::BD];

    pub fn tag(self) -> &'static str {
        match self {
            Mode::F => "f",
            Mode::B => "b",
            Mode::BD => "bd",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f" => Ok(Mode::F),
            "b" => Ok(Mode::B),
            "bd" | "b-diamond" => Ok(Mode::BD),
            other => Err(format!("unknown mode `{other}` (expected f, b or bd)")),
        }
    }
}

/// Resource function of a factored assertion: `[¬S] ⋎ R` forward,
/// `[S] ⋏ R` backward.
pub fn lift(f: &Factored, mode: Mode) -> Res {
    let res = Res::Arith(f.res.clone());
    match mode {
        Mode::F => Res::max(Res::guard(f.spec.negate()), res),
        Mode::B | Mode::BD => Res::min(Res::guard(f.spec.clone()), res),
    }
}

/// Free names of `r` with the sort of each occurrence.
pub fn sorted_names(r: &Res) -> std::collections::BTreeMap<Name, crate::lang::DeclKind> {
    use crate::lang::parser::{sorted_free_names, sorted_free_names_expr};
    let mut out = std::collections::BTreeMap::new();
    match r {
        Res::Lit(_) => {}
        Res::Arith(e) => out.extend(sorted_free_names_expr(e)),
        Res::Guard(b) => out.extend(sorted_free_names(b)),
        Res::Min(a, b) | Res::Max(a, b) | Res::Add(a, b) => {
            out.extend(sorted_names(a));
            out.extend(sorted_names(b));
        }
        Res::Sub(a, e) => {
            out.extend(sorted_names(a));
            out.extend(sorted_free_names_expr(e));
        }
        Res::Sup(x, body) | Res::Inf(x, body) => {
            let mut inner = sorted_names(body);
            if inner.get(x) == Some(&crate::lang::DeclKind::Scalar) {
                inner.remove(x);
            }
            out.extend(inner);
        }
    }
    out
}
