//! Encoding of `∀σ. hyp ⟹ lhs(σ) ≤ rhs(σ)` as a satisfiability query for
//! its negation.
//!
//! `lhs ≤ rhs` over `ℤ ∪ {±∞}` holds iff every integer `t` with `t ≤ lhs`
//! also satisfies `t ≤ rhs`. The predicate `t ≤ R` is defined by recursion on
//! `R`, which removes infinities: guards become formulas, ⋏/⋎ become ∧/∨,
//! `sup`/`inf` become ∃/∀ and `A + B` splits `t` with an existential.

use super::sexp::Sx;
use crate::assert::{sorted_names, ExtInt, Res};
use crate::lang::parser::sorted_free_names;
use crate::lang::{ArrayExpr, BoolExpr, CmpOp, DeclKind, Expr, Name};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmtSort {
    Int,
    IntArray,
}

impl SmtSort {
    fn sx(self) -> Sx {
        match self {
            SmtSort::Int => Sx::atom("Int"),
            SmtSort::IntArray => Sx::app("Array", vec![Sx::atom("Int"), Sx::atom("Int")]),
        }
    }
}

/// `∀σ. hyp ⟹ lhs ⪯ rhs`.
#[derive(Clone, Debug)]
pub struct Query {
    pub hyp: BoolExpr,
    pub lhs: Res,
    pub rhs: Res,
}

#[derive(Clone, Debug)]
pub struct Encoded {
    /// Program symbols: SMT name, source name, sort.
    pub program: Vec<(String, Name, SmtSort)>,
    /// Constants introduced for hoisted existentials.
    pub skolems: Vec<(String, SmtSort)>,
    pub formula: Sx,
}

pub fn mangle(x: &str, kind: DeclKind) -> String {
    let body = x.replace('\'', "!q");
    match kind {
        DeclKind::Scalar => format!("v_{body}"),
        DeclKind::Array => format!("a_{body}"),
    }
}

struct Encoder {
    counter: usize,
    env: Vec<(Name, String)>,
}

impl Encoder {
    fn fresh(&mut self, prefix: &str, base: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}_{}", self.counter, base.replace('\'', "!q"))
    }

    fn scalar(&self, x: &str) -> Sx {
        for (n, s) in self.env.iter().rev() {
            if n == x {
                return Sx::atom(s.clone());
            }
        }
        Sx::atom(mangle(x, DeclKind::Scalar))
    }

    fn expr(&mut self, e: &Expr) -> Sx {
        match e {
            Expr::Num(n) => Sx::int(*n),
            Expr::Var(x) => self.scalar(x),
            Expr::Read(a, i) => Sx::app("select", vec![self.array(a), self.expr(i)]),
            Expr::Neg(a) => Sx::app("-", vec![self.expr(a)]),
            Expr::Add(a, b) => Sx::app("+", vec![self.expr(a), self.expr(b)]),
            Expr::Sub(a, b) => Sx::app("-", vec![self.expr(a), self.expr(b)]),
            Expr::Mul(a, b) => Sx::app("*", vec![self.expr(a), self.expr(b)]),
            Expr::Div(a, d) => Sx::app("div", vec![self.expr(a), Sx::int(*d)]),
            Expr::Ite(c, a, b) => {
                let c = self.boolean(c, true);
                Sx::app("ite", vec![c, self.expr(a), self.expr(b)])
            }
        }
    }

    fn array(&mut self, a: &ArrayExpr) -> Sx {
        match a {
            ArrayExpr::Var(x) => Sx::atom(mangle(x, DeclKind::Array)),
            ArrayExpr::Store(inner, i, v) => Sx::app("store", vec![self.array(inner), self.expr(i), self.expr(v)]),
        }
    }

    /// `b` when `pos`, else `¬b`, in negation normal form.
    fn boolean(&mut self, b: &BoolExpr, pos: bool) -> Sx {
        match b {
            BoolExpr::Const(v) => {
                if *v == pos {
                    Sx::t()
                } else {
                    Sx::f()
                }
            }
            BoolExpr::Cmp(op, l, r) => {
                let op = if pos { *op } else { op.negate() };
                let (l, r) = (self.expr(l), self.expr(r));
                match op {
                    CmpOp::Eq => Sx::app("=", vec![l, r]),
                    CmpOp::Ne => Sx::app("not", vec![Sx::app("=", vec![l, r])]),
                    CmpOp::Lt => Sx::app("<", vec![l, r]),
                    CmpOp::Le => Sx::app("<=", vec![l, r]),
                    CmpOp::Gt => Sx::app(">", vec![l, r]),
                    CmpOp::Ge => Sx::app(">=", vec![l, r]),
                }
            }
            BoolExpr::Not(x) => self.boolean(x, !pos),
            BoolExpr::And(x, y) | BoolExpr::Or(x, y) => {
                let conj = matches!(b, BoolExpr::And(..)) == pos;
                let items = vec![self.boolean(x, pos), self.boolean(y, pos)];
                if conj {
                    Sx::and(items)
                } else {
                    Sx::or(items)
                }
            }
            BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
                let universal = matches!(b, BoolExpr::Forall(..)) == pos;
                let lo = self.expr(lo);
                let hi = self.expr(hi);
                let name = self.fresh("q", i);
                let iv = Sx::atom(name.clone());
                self.env.push((i.clone(), name.clone()));
                let inner = self.boolean(body, pos);
                self.env.pop();
                let in_range = vec![Sx::app("<=", vec![lo, iv.clone()]), Sx::app("<", vec![iv, hi])];
                if universal {
                    let out_of_range = in_range.into_iter().map(|a| Sx::app("not", vec![a])).collect();
                    quantifier("forall", &name, Sx::or(vec![Sx::or(out_of_range), inner]))
                } else {
                    let mut parts = in_range;
                    parts.push(inner);
                    quantifier("exists", &name, Sx::and(parts))
                }
            }
            BoolExpr::ArrayEq(x, y) => {
                let eq = Sx::app("=", vec![self.array(x), self.array(y)]);
                if pos {
                    eq
                } else {
                    Sx::app("not", vec![eq])
                }
            }
        }
    }

    /// `t ≤ r` when `pos`, else `t > r`.
    fn le(&mut self, t: &Sx, r: &Res, pos: bool) -> Sx {
        match r {
            Res::Lit(ExtInt::PosInf) => bool_sx(pos),
            Res::Lit(ExtInt::NegInf) => bool_sx(!pos),
            Res::Lit(ExtInt::Fin(n)) => cmp_t(t, Sx::int(*n), pos),
            Res::Arith(e) => {
                let e = self.expr(e);
                cmp_t(t, e, pos)
            }
            Res::Guard(b) => self.boolean(b, pos),
            Res::Min(a, b) | Res::Max(a, b) => {
                let conj = matches!(r, Res::Min(..)) == pos;
                let items = vec![self.le(t, a, pos), self.le(t, b, pos)];
                if conj {
                    Sx::and(items)
                } else {
                    Sx::or(items)
                }
            }
            Res::Add(a, b) => {
                // t ≤ A + B  iff  ∃u. u ≤ A ∧ t − u ≤ B
                let name = self.fresh("u", "split");
                let u = Sx::atom(name.clone());
                let rest = Sx::app("-", vec![t.clone(), u.clone()]);
                let la = self.le(&u, a, pos);
                let lb = self.le(&rest, b, pos);
                if pos {
                    quantifier("exists", &name, Sx::and(vec![la, lb]))
                } else {
                    quantifier("forall", &name, Sx::or(vec![la, lb]))
                }
            }
            Res::Sub(a, e) => {
                let e = self.expr(e);
                let shifted = Sx::app("+", vec![t.clone(), e]);
                self.le(&shifted, a, pos)
            }
            Res::Sup(x, body) | Res::Inf(x, body) => {
                let existential = matches!(r, Res::Sup(..)) == pos;
                let name = self.fresh("b", x);
                self.env.push((x.clone(), name.clone()));
                let inner = self.le(t, body, pos);
                self.env.pop();
                quantifier(if existential { "exists" } else { "forall" }, &name, inner)
            }
        }
    }
}

fn bool_sx(v: bool) -> Sx {
    if v {
        Sx::t()
    } else {
        Sx::f()
    }
}

fn cmp_t(t: &Sx, e: Sx, pos: bool) -> Sx {
    Sx::app(if pos { "<=" } else { ">" }, vec![t.clone(), e])
}

fn quantifier(q: &str, name: &str, body: Sx) -> Sx {
    if body.is_true() || body.is_false() {
        return body;
    }
    Sx::app(q, vec![Sx::List(vec![Sx::List(vec![Sx::atom(name), Sx::atom("Int")])]), body])
}

fn binder_name(q: &Sx) -> String {
    match &q.items()[1] {
        Sx::List(bs) => match &bs[0] {
            Sx::List(b) => match &b[0] {
                Sx::Atom(n) => n.clone(),
                _ => unreachable!("malformed binder"),
            },
            _ => unreachable!("malformed binder"),
        },
        _ => unreachable!("malformed binder"),
    }
}

/// Replaces existentials that are not under a universal by constants.
fn hoist(f: Sx, skolems: &mut Vec<(String, SmtSort)>) -> Sx {
    match f.head() {
        Some("and") | Some("or") => {
            let head = f.head().unwrap().to_string();
            let items: Vec<Sx> = f.items()[1..].iter().cloned().map(|x| hoist(x, skolems)).collect();
            if head == "and" {
                Sx::and(items)
            } else {
                Sx::or(items)
            }
        }
        Some("exists") => {
            skolems.push((binder_name(&f), SmtSort::Int));
            hoist(f.items()[2].clone(), skolems)
        }
        _ => f,
    }
}

/// Replaces every universal reachable through ∧/∨/∃/∀ by the conjunction of
/// its instances over `[-w, w]`. The result is weaker than the input.
pub fn expand_universals(f: &Sx, w: i64) -> Sx {
    match f.head() {
        Some("and") => Sx::and(f.items()[1..].iter().map(|x| expand_universals(x, w)).collect()),
        Some("or") => Sx::or(f.items()[1..].iter().map(|x| expand_universals(x, w)).collect()),
        Some("exists") => {
            let name = binder_name(f);
            quantifier("exists", &name, expand_universals(&f.items()[2], w))
        }
        Some("forall") => {
            let name = binder_name(f);
            let body = expand_universals(&f.items()[2], w);
            Sx::and((-w..=w).map(|c| body.replace(&name, &Sx::int(c))).collect())
        }
        _ => f.clone(),
    }
}

pub fn encode_query(q: &Query) -> Encoded {
    let mut enc = Encoder { counter: 0, env: Vec::new() };
    let t = Sx::atom("t_0");
    let hyp = enc.boolean(&q.hyp, true);
    let lhs = enc.le(&t, &q.lhs, true);
    let rhs = enc.le(&t, &q.rhs, false);
    let mut skolems = vec![("t_0".to_string(), SmtSort::Int)];
    let formula = hoist(Sx::and(vec![hyp, lhs, rhs]), &mut skolems);
    let mut names: BTreeMap<Name, DeclKind> = sorted_free_names(&q.hyp);
    names.extend(sorted_names(&q.lhs));
    names.extend(sorted_names(&q.rhs));
    let program = names
        .into_iter()
        .map(|(n, k)| {
            let sort = if k == DeclKind::Array { SmtSort::IntArray } else { SmtSort::Int };
            (mangle(&n, k), n, sort)
        })
        .collect();
    Encoded { program, skolems, formula }
}

impl Encoded {
    /// Variant for the bounded fallback: program scalars confined to `[-b, b]`
    /// and universals expanded over `[-4b, 4b]`.
    pub fn bounded(&self, b: i64) -> Encoded {
        let w = 4 * b;
        let expanded = expand_universals(&self.formula, w);
        let mut skolems = self.skolems.clone();
        let body = hoist(expanded, &mut skolems);
        let mut parts = Vec::new();
        for (smt, _, sort) in &self.program {
            if *sort == SmtSort::Int {
                let v = Sx::atom(smt.clone());
                parts.push(Sx::app("<=", vec![Sx::int(-b), v.clone()]));
                parts.push(Sx::app("<=", vec![v, Sx::int(b)]));
            }
        }
        parts.push(body);
        Encoded { program: self.program.clone(), skolems, formula: Sx::and(parts) }
    }

    pub fn script(&self, logic: &str) -> String {
        let mut s = String::new();
        writeln!(s, "(set-option :produce-models true)").unwrap();
        writeln!(s, "(set-logic {logic})").unwrap();
        for (smt, _, sort) in &self.program {
            writeln!(s, "(declare-const {smt} {})", sort.sx()).unwrap();
        }
        for (smt, sort) in &self.skolems {
            writeln!(s, "(declare-const {smt} {})", sort.sx()).unwrap();
        }
        writeln!(s, "(assert {})", self.formula).unwrap();
        writeln!(s, "(check-sat)").unwrap();
        s
    }
}
