use super::ast::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("`{0}` occurs free in the command")]
    NotFresh(Name),
    #[error("renaming `{from}` to `{to}` would be captured by `local {to}`")]
    Capture { from: Name, to: Name },
}

/// First `{base}_{k}` (k ≥ 1) not in `avoid`.
pub fn fresh_variant(base: &str, avoid: &NameSet) -> Name {
    (1..).map(|k| format!("{base}_{k}")).find(|n| !avoid.contains(n)).expect("unbounded search")
}

pub trait FreeVars {
    fn collect_free(&self, out: &mut NameSet);

    fn free_vars(&self) -> NameSet {
        let mut out = NameSet::new();
        self.collect_free(&mut out);
        out
    }

    fn mentions(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }
}

impl FreeVars for Expr {
    fn collect_free(&self, out: &mut NameSet) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Read(a, i) => {
                a.collect_free(out);
                i.collect_free(out);
            }
            Expr::Neg(a) | Expr::Div(a, _) => a.collect_free(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Expr::Ite(c, a, b) => {
                c.collect_free(out);
                a.collect_free(out);
                b.collect_free(out);
            }
        }
    }
}

impl FreeVars for ArrayExpr {
    fn collect_free(&self, out: &mut NameSet) {
        match self {
            ArrayExpr::Var(a) => {
                out.insert(a.clone());
            }
            ArrayExpr::Store(a, i, v) => {
                a.collect_free(out);
                i.collect_free(out);
                v.collect_free(out);
            }
        }
    }
}

impl FreeVars for BoolExpr {
    fn collect_free(&self, out: &mut NameSet) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Cmp(_, a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            BoolExpr::Not(a) => a.collect_free(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
                lo.collect_free(out);
                hi.collect_free(out);
                let mut inner = body.free_vars();
                inner.remove(i);
                out.extend(inner);
            }
            BoolExpr::ArrayEq(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
        }
    }
}

impl FreeVars for Command {
    fn collect_free(&self, out: &mut NameSet) {
        match self {
            Command::Skip => {}
            Command::Assign(x, e) => {
                out.insert(x.clone());
                e.collect_free(out);
            }
            Command::ArrayAssign(a, i, v) => {
                out.insert(a.clone());
                i.collect_free(out);
                v.collect_free(out);
            }
            Command::Assume(b) => b.collect_free(out),
            Command::Tick(e) => e.collect_free(out),
            Command::Seq(a, b) | Command::Choice(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Command::Loop(c, _) => c.collect_free(out),
            Command::Local(x, c) => {
                let mut inner = c.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Command::If(b, c1, c2) => {
                b.collect_free(out);
                c1.collect_free(out);
                c2.collect_free(out);
            }
            Command::While(b, c, _) => {
                b.collect_free(out);
                c.collect_free(out);
            }
        }
    }
}

/// Names assigned by `c`, excluding names bound by an enclosing `local`.
pub fn mod_set(c: &Command) -> NameSet {
    let mut out = NameSet::new();
    collect_mod(c, &mut out);
    out
}

fn collect_mod(c: &Command, out: &mut NameSet) {
    match c {
        Command::Assign(x, _) | Command::ArrayAssign(x, _, _) => {
            out.insert(x.clone());
        }
        Command::Seq(a, b) | Command::Choice(a, b) | Command::If(_, a, b) => {
            collect_mod(a, out);
            collect_mod(b, out);
        }
        Command::Loop(b, _) | Command::While(_, b, _) => collect_mod(b, out),
        Command::Local(x, b) => {
            let mut inner = mod_set(b);
            inner.remove(x);
            out.extend(inner);
        }
        Command::Skip | Command::Assume(_) | Command::Tick(_) => {}
    }
}

/// Replace `if` and `while` by their core encodings. Idempotent.
pub fn desugar(c: &Command) -> Command {
    match c {
        Command::If(b, c1, c2) => Command::choice(
            Command::seq(Command::Assume(b.clone()), desugar(c1)),
            Command::seq(Command::Assume(b.negate()), desugar(c2)),
        ),
        Command::While(b, body, tag) => Command::seq(
            Command::Loop(Box::new(Command::seq(Command::Assume(b.clone()), desugar(body))), *tag),
            Command::Assume(b.negate()),
        ),
        Command::Seq(a, b) => Command::seq(desugar(a), desugar(b)),
        Command::Choice(a, b) => Command::choice(desugar(a), desugar(b)),
        Command::Loop(b, tag) => Command::Loop(Box::new(desugar(b)), *tag),
        Command::Local(x, b) => Command::local(x, desugar(b)),
        other => other.clone(),
    }
}

/// A substitution of one name by a term of matching sort.
#[derive(Clone, Debug)]
pub enum Subst<'a> {
    Scalar(&'a str, &'a Expr),
    Array(&'a str, &'a ArrayExpr),
}

impl Subst<'_> {
    fn target(&self) -> &str {
        match self {
            Subst::Scalar(x, _) | Subst::Array(x, _) => x,
        }
    }

    fn replacement_fv(&self) -> NameSet {
        match self {
            Subst::Scalar(_, e) => e.free_vars(),
            Subst::Array(_, a) => a.free_vars(),
        }
    }
}

impl Expr {
    pub fn subst(&self, s: &Subst) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(x) => match s {
                Subst::Scalar(y, e) if x == y => (*e).clone(),
                _ => self.clone(),
            },
            Expr::Read(a, i) => Expr::Read(Box::new(a.subst(s)), Box::new(i.subst(s))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.subst(s))),
            Expr::Div(a, k) => Expr::Div(Box::new(a.subst(s)), *k),
            Expr::Add(a, b) => Expr::add(a.subst(s), b.subst(s)),
            Expr::Sub(a, b) => Expr::sub(a.subst(s), b.subst(s)),
            Expr::Mul(a, b) => Expr::mul(a.subst(s), b.subst(s)),
            Expr::Ite(c, a, b) => Expr::Ite(Box::new(c.subst(s)), Box::new(a.subst(s)), Box::new(b.subst(s))),
        }
    }

    pub fn subst_var(&self, x: &str, e: &Expr) -> Expr {
        self.subst(&Subst::Scalar(x, e))
    }

    /// Rename every free occurrence of `x` (scalar or array) to `y`.
    pub fn rename(&self, x: &str, y: &str) -> Expr {
        self.subst(&Subst::Scalar(x, &Expr::Var(y.to_string()))).subst(&Subst::Array(x, &ArrayExpr::Var(y.to_string())))
    }
}

impl ArrayExpr {
    pub fn subst(&self, s: &Subst) -> ArrayExpr {
        match self {
            ArrayExpr::Var(a) => match s {
                Subst::Array(b, t) if a == b => (*t).clone(),
                _ => self.clone(),
            },
            ArrayExpr::Store(a, i, v) => {
                ArrayExpr::Store(Box::new(a.subst(s)), Box::new(i.subst(s)), Box::new(v.subst(s)))
            }
        }
    }
}

impl BoolExpr {
    pub fn subst(&self, s: &Subst) -> BoolExpr {
        match self {
            BoolExpr::Const(_) => self.clone(),
            BoolExpr::Cmp(op, a, b) => BoolExpr::Cmp(*op, a.subst(s), b.subst(s)),
            BoolExpr::Not(a) => BoolExpr::Not(Box::new(a.subst(s))),
            BoolExpr::And(a, b) => BoolExpr::And(Box::new(a.subst(s)), Box::new(b.subst(s))),
            BoolExpr::Or(a, b) => BoolExpr::Or(Box::new(a.subst(s)), Box::new(b.subst(s))),
            BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
                let lo = lo.subst(s);
                let hi = hi.subst(s);
                let (i, body) = subst_under_binder(i, body, s);
                if matches!(self, BoolExpr::Forall(..)) {
                    BoolExpr::Forall(i, lo, hi, Box::new(body))
                } else {
                    BoolExpr::Exists(i, lo, hi, Box::new(body))
                }
            }
            BoolExpr::ArrayEq(a, b) => BoolExpr::ArrayEq(a.subst(s), b.subst(s)),
        }
    }

    pub fn subst_var(&self, x: &str, e: &Expr) -> BoolExpr {
        self.subst(&Subst::Scalar(x, e))
    }

    pub fn rename(&self, x: &str, y: &str) -> BoolExpr {
        self.subst(&Subst::Scalar(x, &Expr::Var(y.to_string()))).subst(&Subst::Array(x, &ArrayExpr::Var(y.to_string())))
    }
}

fn subst_under_binder(i: &Name, body: &BoolExpr, s: &Subst) -> (Name, BoolExpr) {
    if i == s.target() {
        return (i.clone(), body.clone());
    }
    let repl = s.replacement_fv();
    if repl.contains(i) && body.mentions(s.target()) {
        let mut avoid = repl;
        avoid.extend(body.free_vars());
        avoid.insert(s.target().to_string());
        let j = fresh_variant(i, &avoid);
        let renamed = body.subst(&Subst::Scalar(i, &Expr::Var(j.clone())));
        (j, renamed.subst(s))
    } else {
        (i.clone(), body.subst(s))
    }
}

/// Capture-avoiding renaming `c[y/x]` of free occurrences of `x`.
pub fn subst(c: &Command, y: &str, x: &str) -> Result<Command, SubstError> {
    if x != y && c.mentions(y) {
        return Err(SubstError::NotFresh(y.to_string()));
    }
    rename_command(c, x, y)
}

fn rename_command(c: &Command, x: &str, y: &str) -> Result<Command, SubstError> {
    let r = |n: &Name| if n == x { y.to_string() } else { n.clone() };
    Ok(match c {
        Command::Skip => Command::Skip,
        Command::Assign(v, e) => Command::Assign(r(v), e.rename(x, y)),
        Command::ArrayAssign(a, i, v) => Command::ArrayAssign(r(a), i.rename(x, y), v.rename(x, y)),
        Command::Assume(b) => Command::Assume(b.rename(x, y)),
        Command::Tick(e) => Command::Tick(e.rename(x, y)),
        Command::Seq(a, b) => Command::seq(rename_command(a, x, y)?, rename_command(b, x, y)?),
        Command::Choice(a, b) => Command::choice(rename_command(a, x, y)?, rename_command(b, x, y)?),
        Command::Loop(b, tag) => Command::Loop(Box::new(rename_command(b, x, y)?), *tag),
        Command::Local(v, b) if v == x => Command::Local(v.clone(), b.clone()),
        Command::Local(v, b) => {
            if v == y && b.mentions(x) {
                return Err(SubstError::Capture { from: x.to_string(), to: y.to_string() });
            }
            Command::Local(v.clone(), Box::new(rename_command(b, x, y)?))
        }
        Command::If(b, c1, c2) => {
            Command::If(b.rename(x, y), Box::new(rename_command(c1, x, y)?), Box::new(rename_command(c2, x, y)?))
        }
        Command::While(b, body, tag) => Command::While(b.rename(x, y), Box::new(rename_command(body, x, y)?), *tag),
    })
}

/// Alpha-renames the binder of `local x. body` to `y`, which must not occur in `body`.
pub fn rename_local(x: &str, body: &Command, y: &str) -> Command {
    rename_command(body, x, y).expect("fresh binder cannot be captured")
}

/// True when every execution of `c` writes `x` before reading it, so the
/// initial value of `x` is unobservable.
pub fn writes_before_read(x: &str, c: &Command) -> bool {
    match c {
        Command::Assign(v, e) => v == x && !e.mentions(x),
        Command::Seq(a, b) => {
            if writes_before_read(x, a) {
                true
            } else if !a.mentions(x) {
                writes_before_read(x, b)
            } else {
                false
            }
        }
        Command::Choice(a, b) | Command::If(_, a, b) => {
            !matches!(c, Command::If(cond, ..) if cond.mentions(x))
                && writes_before_read(x, a)
                && writes_before_read(x, b)
        }
        Command::Local(v, b) => v != x && writes_before_read(x, b),
        _ => false,
    }
}
