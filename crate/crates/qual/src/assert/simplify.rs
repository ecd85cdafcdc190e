//! Semantics-preserving rewrites over ℤ: constant folding, guard splitting,
//! pushing finite offsets to the leaves and eliminating `Sup`/`Inf` binders.

use super::{ExtInt, Res, NEG_INF, POS_INF};
use crate::lang::analysis::{fresh_variant, FreeVars};
use crate::lang::{ArrayExpr, BoolExpr, CmpOp, Expr};
use std::collections::BTreeMap;

pub fn simplify(r: &Res) -> Res {
    match r {
        Res::Lit(v) => Res::Lit(*v),
        Res::Arith(e) => Res::Arith(norm_expr(e)),
        Res::Guard(b) => guard(&fold_bool(&b.nnf())),
        Res::Min(..) => {
            let mut items = Vec::new();
            flatten(r, true, &mut items);
            build(items.iter().map(|r| simplify(r)).collect(), true)
        }
        Res::Max(..) => {
            let mut items = Vec::new();
            flatten(r, false, &mut items);
            build(items.iter().map(|r| simplify(r)).collect(), false)
        }
        Res::Add(a, b) => add(simplify(a), simplify(b)),
        Res::Sub(a, e) => shift(simplify(a), &norm_expr(&Expr::neg(e.clone()))),
        Res::Sup(x, body) => quant(x, simplify(body), true),
        Res::Inf(x, body) => quant(x, simplify(body), false),
    }
}

fn flatten<'a>(r: &'a Res, is_min: bool, out: &mut Vec<&'a Res>) {
    match r {
        Res::Min(a, b) if is_min => {
            flatten(a, is_min, out);
            flatten(b, is_min, out);
        }
        Res::Max(a, b) if !is_min => {
            flatten(a, is_min, out);
            flatten(b, is_min, out);
        }
        _ => out.push(r),
    }
}

fn flatten_owned(r: Res, is_min: bool, out: &mut Vec<Res>) {
    match r {
        Res::Min(a, b) if is_min => {
            flatten_owned(*a, is_min, out);
            flatten_owned(*b, is_min, out);
        }
        Res::Max(a, b) if !is_min => {
            flatten_owned(*a, is_min, out);
            flatten_owned(*b, is_min, out);
        }
        other => out.push(other),
    }
}

/// Rebuilds a ⋏ (or ⋎) of already simplified operands.
fn build(items: Vec<Res>, is_min: bool) -> Res {
    let (unit, absorb) = if is_min { (ExtInt::PosInf, ExtInt::NegInf) } else { (ExtInt::NegInf, ExtInt::PosInf) };
    let mut flat = Vec::new();
    for it in items {
        flatten_owned(it, is_min, &mut flat);
    }
    let mut out: Vec<Res> = Vec::new();
    let mut konst: Option<i64> = None;
    for it in flat {
        match it {
            Res::Lit(v) if v == unit => {}
            Res::Lit(v) if v == absorb => return Res::Lit(absorb),
            Res::Lit(ExtInt::Fin(n)) | Res::Arith(Expr::Num(n)) => {
                konst = Some(match konst {
                    None => n,
                    Some(k) if is_min => k.min(n),
                    Some(k) => k.max(n),
                });
            }
            other => {
                if !out.contains(&other) {
                    out.push(other);
                }
            }
        }
    }
    if let Some(k) = konst {
        out.push(Res::num(k));
    }
    let mut iter = out.into_iter();
    match iter.next() {
        None => Res::Lit(unit),
        Some(first) => iter.fold(first, |acc, r| {
            if is_min {
                Res::Min(Box::new(acc), Box::new(r))
            } else {
                Res::Max(Box::new(acc), Box::new(r))
            }
        }),
    }
}

fn guard(b: &BoolExpr) -> Res {
    match b {
        BoolExpr::Const(true) => POS_INF,
        BoolExpr::Const(false) => NEG_INF,
        BoolExpr::And(x, y) => build(vec![guard(x), guard(y)], true),
        BoolExpr::Or(x, y) => build(vec![guard(x), guard(y)], false),
        other => Res::Guard(other.clone()),
    }
}

fn add(a: Res, b: Res) -> Res {
    match (a, b) {
        (a, Res::Arith(e)) => shift(a, &e),
        (Res::Arith(e), b) => shift(b, &e),
        (a, Res::Lit(ExtInt::Fin(n))) => shift(a, &Expr::Num(n)),
        (Res::Lit(ExtInt::Fin(n)), b) => shift(b, &Expr::Num(n)),
        (a, b) => Res::Add(Box::new(a), Box::new(b)),
    }
}

/// Adds the finite expression `e` to every leaf of `r`.
fn shift(r: Res, e: &Expr) -> Res {
    if *e == Expr::Num(0) {
        return r;
    }
    match r {
        Res::Lit(ExtInt::Fin(n)) => Res::Arith(norm_expr(&Expr::add(Expr::Num(n), e.clone()))),
        lit @ Res::Lit(_) => lit,
        Res::Arith(a) => Res::Arith(norm_expr(&Expr::add(a, e.clone()))),
        g @ Res::Guard(_) => g,
        Res::Min(a, b) => build(vec![shift(*a, e), shift(*b, e)], true),
        Res::Max(a, b) => build(vec![shift(*a, e), shift(*b, e)], false),
        Res::Add(a, b) => Res::Add(Box::new(shift(*a, e)), b),
        Res::Sub(a, f) => shift(*a, &norm_expr(&Expr::sub(e.clone(), f))),
        Res::Sup(x, body) => {
            let (x, body) = avoid_binder(x, *body, e);
            Res::Sup(x, Box::new(shift(body, e)))
        }
        Res::Inf(x, body) => {
            let (x, body) = avoid_binder(x, *body, e);
            Res::Inf(x, Box::new(shift(body, e)))
        }
    }
}

/// Renames binder `x` if it occurs in `e`, so `e` can be moved under it.
fn avoid_binder(x: String, body: Res, e: &Expr) -> (String, Res) {
    if !e.mentions(&x) {
        return (x, body);
    }
    let mut avoid = body.free_vars();
    avoid.extend(e.free_vars());
    avoid.insert(x.clone());
    let y = fresh_variant(&x, &avoid);
    let body = body.rename(&x, &y);
    (y, body)
}

/// Eliminates or narrows `sup x. body` (`is_sup`) or `inf x. body`, with
/// `body` already simplified. Every rewrite is exact over ℤ.
fn quant(x: &str, body: Res, is_sup: bool) -> Res {
    if !body.mentions(x) {
        return body;
    }
    // sup distributes over ⋎, inf over ⋏.
    let (dist_min, elim_min) = (!is_sup, is_sup);
    match body {
        Res::Min(..) | Res::Max(..) => {
            let is_min = matches!(body, Res::Min(..));
            let mut items = Vec::new();
            flatten_owned(body, is_min, &mut items);
            if is_min == dist_min {
                return build(items.into_iter().map(|r| quant(x, r, is_sup)).collect(), is_min);
            }
            debug_assert_eq!(is_min, elim_min);
            // One-point rule: sup x. ([x = t] ⋏ A) = A[t/x], inf x. ([x ≠ t] ⋎ A) = A[t/x].
            let want = if is_sup { CmpOp::Eq } else { CmpOp::Ne };
            if let Some(pos) = items.iter().position(|r| point_of(x, r, want).is_some()) {
                let t = point_of(x, &items[pos], want).expect("checked above");
                items.remove(pos);
                let rest = build(items, is_min);
                return simplify(&rest.subst_var(x, &t));
            }
            let (free, bound): (Vec<Res>, Vec<Res>) = items.into_iter().partition(|r| !r.mentions(x));
            if free.is_empty() {
                let inner = build(bound, is_min);
                return wrap(x, inner, is_sup);
            }
            let inner = quant(x, build(bound, is_min), is_sup);
            build(free.into_iter().chain(std::iter::once(inner)).collect(), is_min)
        }
        Res::Guard(ref b) if solvable_atom(x, b) => {
            // A comparison with unit coefficient on x is both satisfiable and falsifiable.
            if is_sup {
                POS_INF
            } else {
                NEG_INF
            }
        }
        other => wrap(x, other, is_sup),
    }
}

fn wrap(x: &str, body: Res, is_sup: bool) -> Res {
    if is_sup {
        Res::sup(x, body)
    } else {
        Res::inf(x, body)
    }
}

/// `t` when `r` is the guard `[x op t]` (up to linear rearrangement) with `t` free of `x`.
fn point_of(x: &str, r: &Res, op: CmpOp) -> Option<Expr> {
    match r {
        Res::Guard(BoolExpr::Cmp(o, l, rhs)) if *o == op => linear_solve(x, l, rhs),
        _ => None,
    }
}

fn solvable_atom(x: &str, b: &BoolExpr) -> bool {
    match b {
        BoolExpr::Cmp(_, l, r) => linear_solve(x, l, r).is_some(),
        _ => false,
    }
}

/// Solves `l = r` for `x` when `x` occurs linearly with coefficient ±1.
pub fn linear_solve(x: &str, l: &Expr, r: &Expr) -> Option<Expr> {
    let lin = Lin::of(&Expr::sub(l.clone(), r.clone()))?;
    let xv = Expr::var(x);
    let c = *lin.terms.get(&xv)?;
    let mut rest = lin.clone();
    rest.terms.remove(&xv);
    if rest.terms.keys().any(|atom| atom.mentions(x)) {
        return None;
    }
    // c·x + rest = 0
    match c {
        1 => rest.scale(-1).map(|r| r.to_expr()),
        -1 => Some(rest.to_expr()),
        _ => None,
    }
}

/// Linear combination of non-linear atoms plus a constant.
#[derive(Clone, Debug, Default)]
struct Lin {
    terms: BTreeMap<Expr, i64>,
    konst: i64,
}

impl Lin {
    fn of(e: &Expr) -> Option<Lin> {
        Some(match e {
            Expr::Num(n) => Lin { terms: BTreeMap::new(), konst: *n },
            Expr::Add(a, b) => Lin::of(a)?.plus(&Lin::of(b)?)?,
            Expr::Sub(a, b) => Lin::of(a)?.plus(&Lin::of(b)?.scale(-1)?)?,
            Expr::Neg(a) => Lin::of(a)?.scale(-1)?,
            Expr::Mul(a, b) => {
                let la = Lin::of(a)?;
                let lb = Lin::of(b)?;
                if la.terms.is_empty() {
                    lb.scale(la.konst)?
                } else if lb.terms.is_empty() {
                    la.scale(lb.konst)?
                } else {
                    Lin::atom(Expr::mul(la.to_expr(), lb.to_expr()))
                }
            }
            Expr::Div(a, d) => {
                let la = Lin::of(a)?;
                if la.terms.is_empty() {
                    Lin { terms: BTreeMap::new(), konst: la.konst.checked_div_euclid(*d)? }
                } else {
                    Lin::atom(Expr::Div(Box::new(la.to_expr()), *d))
                }
            }
            Expr::Var(_) => Lin::atom(e.clone()),
            Expr::Read(a, i) => Lin::atom(Expr::Read(Box::new(norm_array(a)), Box::new(norm_expr(i)))),
            Expr::Ite(c, a, b) => {
                let c = fold_bool(c);
                match c {
                    BoolExpr::Const(true) => Lin::of(a)?,
                    BoolExpr::Const(false) => Lin::of(b)?,
                    c => Lin::atom(Expr::Ite(Box::new(c), Box::new(norm_expr(a)), Box::new(norm_expr(b)))),
                }
            }
        })
    }

    fn atom(e: Expr) -> Lin {
        Lin { terms: BTreeMap::from([(e, 1)]), konst: 0 }
    }

    fn plus(mut self, o: &Lin) -> Option<Lin> {
        self.konst = self.konst.checked_add(o.konst)?;
        for (t, c) in &o.terms {
            let e = self.terms.entry(t.clone()).or_insert(0);
            *e = e.checked_add(*c)?;
            if *e == 0 {
                self.terms.remove(t);
            }
        }
        Some(self)
    }

    fn scale(mut self, k: i64) -> Option<Lin> {
        if k == 0 {
            return Some(Lin::default());
        }
        self.konst = self.konst.checked_mul(k)?;
        for c in self.terms.values_mut() {
            *c = c.checked_mul(k)?;
        }
        Some(self)
    }

    fn to_expr(&self) -> Expr {
        let term = |t: &Expr, c: i64| if c == 1 { t.clone() } else { Expr::mul(Expr::Num(c), t.clone()) };
        let pos: Vec<_> = self.terms.iter().filter(|(_, c)| **c > 0).collect();
        let neg: Vec<_> = self.terms.iter().filter(|(_, c)| **c < 0).collect();
        let mut acc: Option<Expr> = None;
        for (t, c) in pos {
            let tm = term(t, *c);
            acc = Some(match acc {
                None => tm,
                Some(a) => Expr::add(a, tm),
            });
        }
        if acc.is_none() && self.konst != 0 {
            acc = Some(Expr::Num(self.konst));
        }
        let konst_used = acc.as_ref().is_some_and(|a| *a == Expr::Num(self.konst) && self.konst != 0);
        for (t, c) in neg {
            acc = Some(match acc {
                None => term(t, *c),
                Some(a) => Expr::sub(a, term(t, -*c)),
            });
        }
        let mut out = acc.unwrap_or(Expr::Num(0));
        if !konst_used && self.konst != 0 {
            out = if self.konst > 0 {
                Expr::add(out, Expr::Num(self.konst))
            } else {
                Expr::sub(out, Expr::Num(-self.konst))
            };
        }
        out
    }
}

/// Canonical linear form of an expression; unchanged if normalization overflows.
pub(crate) fn norm_expr(e: &Expr) -> Expr {
    Lin::of(e).map(|l| l.to_expr()).unwrap_or_else(|| e.clone())
}

fn norm_array(a: &ArrayExpr) -> ArrayExpr {
    match a {
        ArrayExpr::Var(_) => a.clone(),
        ArrayExpr::Store(inner, i, v) => {
            ArrayExpr::Store(Box::new(norm_array(inner)), Box::new(norm_expr(i)), Box::new(norm_expr(v)))
        }
    }
}

/// Normalizes the arithmetic inside `b` and folds closed comparisons.
pub(crate) fn fold_bool(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::Const(_) => b.clone(),
        BoolExpr::Cmp(op, l, r) => {
            let diff = Lin::of(&Expr::sub(l.clone(), r.clone()));
            match diff {
                Some(d) if d.terms.is_empty() => BoolExpr::Const(op.holds(d.konst, 0)),
                _ => BoolExpr::Cmp(*op, norm_expr(l), norm_expr(r)),
            }
        }
        BoolExpr::Not(x) => match fold_bool(x) {
            BoolExpr::Const(v) => BoolExpr::Const(!v),
            other => BoolExpr::Not(Box::new(other)),
        },
        BoolExpr::And(x, y) => match (fold_bool(x), fold_bool(y)) {
            (BoolExpr::Const(false), _) | (_, BoolExpr::Const(false)) => BoolExpr::Const(false),
            (a, b) => BoolExpr::and(a, b),
        },
        BoolExpr::Or(x, y) => match (fold_bool(x), fold_bool(y)) {
            (BoolExpr::Const(true), _) | (_, BoolExpr::Const(true)) => BoolExpr::Const(true),
            (a, b) => BoolExpr::or(a, b),
        },
        BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
            let is_all = matches!(b, BoolExpr::Forall(..));
            let (lo, hi) = (norm_expr(lo), norm_expr(hi));
            let body = fold_bool(body);
            let empty = match Lin::of(&Expr::sub(hi.clone(), lo.clone())) {
                Some(d) if d.terms.is_empty() => d.konst <= 0,
                _ => false,
            };
            if empty {
                return BoolExpr::Const(is_all);
            }
            match body {
                BoolExpr::Const(v) if v == is_all => BoolExpr::Const(is_all),
                body if !body.mentions(i) && is_all => {
                    // Nonempty range unknown: keep the quantifier.
                    BoolExpr::Forall(i.clone(), lo, hi, Box::new(body))
                }
                body if is_all => BoolExpr::Forall(i.clone(), lo, hi, Box::new(body)),
                body => BoolExpr::Exists(i.clone(), lo, hi, Box::new(body)),
            }
        }
        BoolExpr::ArrayEq(x, y) => {
            let (x, y) = (norm_array(x), norm_array(y));
            if x == y {
                BoolExpr::Const(true)
            } else {
                BoolExpr::ArrayEq(x, y)
            }
        }
    }
}
