use std::collections::BTreeSet;

pub type Name = String;
pub type NameSet = BTreeSet<Name>;

/// Integer expression. `Ite` only appears in annotations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Num(i64),
    Var(Name),
    Read(Box<ArrayExpr>, Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Euclidean division by a nonzero literal.
    Div(Box<Expr>, i64),
    Ite(Box<BoolExpr>, Box<Expr>, Box<Expr>),
}

/// Array-valued term: a named array or a functional update `a{i -> v}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArrayExpr {
    Var(Name),
    Store(Box<ArrayExpr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Boolean expression. Quantifiers range over the half-open interval `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    Const(bool),
    Cmp(CmpOp, Expr, Expr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Forall(Name, Expr, Expr, Box<BoolExpr>),
    Exists(Name, Expr, Expr, Box<BoolExpr>),
    ArrayEq(ArrayExpr, ArrayExpr),
}

/// Commands. `If` and `While` are surface forms removed by `desugar`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Skip,
    Assign(Name, Expr),
    ArrayAssign(Name, Expr, Expr),
    Assume(BoolExpr),
    Tick(Expr),
    Seq(Box<Command>, Box<Command>),
    Choice(Box<Command>, Box<Command>),
    /// Loop body plus the index of its annotation, if any.
    Loop(Box<Command>, Option<usize>),
    Local(Name, Box<Command>),
    If(BoolExpr, Box<Command>, Box<Command>),
    While(BoolExpr, Box<Command>, Option<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeclKind {
    Scalar,
    Array,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub kind: DeclKind,
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn read(a: &str, idx: Expr) -> Expr {
        Expr::Read(Box::new(ArrayExpr::Var(a.to_string())), Box::new(idx))
    }
}

impl ArrayExpr {
    /// Name of the array at the bottom of a store chain.
    pub fn root(&self) -> &Name {
        match self {
            ArrayExpr::Var(a) => a,
            ArrayExpr::Store(inner, _, _) => inner.root(),
        }
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> BoolExpr {
        BoolExpr::Cmp(op, a, b)
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        match (&a, &b) {
            (BoolExpr::Const(true), _) => b,
            (_, BoolExpr::Const(true)) => a,
            _ => BoolExpr::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        match (&a, &b) {
            (BoolExpr::Const(false), _) => b,
            (_, BoolExpr::Const(false)) => a,
            _ => BoolExpr::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn and_all(items: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        items.into_iter().fold(BoolExpr::Const(true), BoolExpr::and)
    }

    /// Logical negation that flips `=`/`≠`, constants and double negation, and
    /// wraps everything else in `Not`.
    pub fn negate(&self) -> BoolExpr {
        match self {
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            BoolExpr::Cmp(CmpOp::Eq, a, b) => BoolExpr::Cmp(CmpOp::Ne, a.clone(), b.clone()),
            BoolExpr::Cmp(CmpOp::Ne, a, b) => BoolExpr::Cmp(CmpOp::Eq, a.clone(), b.clone()),
            BoolExpr::Not(inner) => (**inner).clone(),
            other => BoolExpr::Not(Box::new(other.clone())),
        }
    }

    /// Negation normal form: negations pushed to comparisons, which are flipped.
    pub fn nnf(&self) -> BoolExpr {
        self.nnf_with(false)
    }

    fn nnf_with(&self, neg: bool) -> BoolExpr {
        match self {
            BoolExpr::Const(b) => BoolExpr::Const(*b != neg),
            BoolExpr::Cmp(op, a, b) => {
                let op = if neg { op.negate() } else { *op };
                BoolExpr::Cmp(op, a.clone(), b.clone())
            }
            BoolExpr::Not(inner) => inner.nnf_with(!neg),
            BoolExpr::And(a, b) if !neg => BoolExpr::and(a.nnf_with(false), b.nnf_with(false)),
            BoolExpr::And(a, b) => BoolExpr::or(a.nnf_with(true), b.nnf_with(true)),
            BoolExpr::Or(a, b) if !neg => BoolExpr::or(a.nnf_with(false), b.nnf_with(false)),
            BoolExpr::Or(a, b) => BoolExpr::and(a.nnf_with(true), b.nnf_with(true)),
            BoolExpr::Forall(i, lo, hi, body) if !neg => {
                BoolExpr::Forall(i.clone(), lo.clone(), hi.clone(), Box::new(body.nnf_with(false)))
            }
            BoolExpr::Forall(i, lo, hi, body) => {
                BoolExpr::Exists(i.clone(), lo.clone(), hi.clone(), Box::new(body.nnf_with(true)))
            }
            BoolExpr::Exists(i, lo, hi, body) if !neg => {
                BoolExpr::Exists(i.clone(), lo.clone(), hi.clone(), Box::new(body.nnf_with(false)))
            }
            BoolExpr::Exists(i, lo, hi, body) => {
                BoolExpr::Forall(i.clone(), lo.clone(), hi.clone(), Box::new(body.nnf_with(true)))
            }
            BoolExpr::ArrayEq(a, b) => {
                let eq = BoolExpr::ArrayEq(a.clone(), b.clone());
                if neg {
                    BoolExpr::Not(Box::new(eq))
                } else {
                    eq
                }
            }
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            BoolExpr::Const(_) | BoolExpr::ArrayEq(..) => false,
            BoolExpr::Cmp(_, a, b) => a.has_quantifier() || b.has_quantifier(),
            BoolExpr::Not(a) => a.has_quantifier(),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => a.has_quantifier() || b.has_quantifier(),
            BoolExpr::Forall(..) | BoolExpr::Exists(..) => true,
        }
    }
}

impl Expr {
    pub fn has_quantifier(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Read(a, i) => a.has_quantifier() || i.has_quantifier(),
            Expr::Neg(a) | Expr::Div(a, _) => a.has_quantifier(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.has_quantifier() || b.has_quantifier(),
            Expr::Ite(c, a, b) => c.has_quantifier() || a.has_quantifier() || b.has_quantifier(),
        }
    }
}

impl ArrayExpr {
    pub fn has_quantifier(&self) -> bool {
        match self {
            ArrayExpr::Var(_) => false,
            ArrayExpr::Store(a, i, v) => a.has_quantifier() || i.has_quantifier() || v.has_quantifier(),
        }
    }
}

impl Command {
    pub fn seq(a: Command, b: Command) -> Command {
        Command::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Command, b: Command) -> Command {
        Command::Choice(Box::new(a), Box::new(b))
    }

    pub fn local(x: &str, c: Command) -> Command {
        Command::Local(x.to_string(), Box::new(c))
    }

    pub fn lp(c: Command) -> Command {
        Command::Loop(Box::new(c), None)
    }

    pub fn seq_all(items: Vec<Command>) -> Command {
        let mut iter = items.into_iter().rev();
        match iter.next() {
            None => Command::Skip,
            Some(last) => iter.fold(last, |acc, c| Command::seq(c, acc)),
        }
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Command::Loop(..) | Command::While(..) => false,
            Command::Seq(a, b) | Command::Choice(a, b) => a.is_loop_free() && b.is_loop_free(),
            Command::If(_, a, b) => a.is_loop_free() && b.is_loop_free(),
            Command::Local(_, c) => c.is_loop_free(),
            _ => true,
        }
    }

    pub fn is_core(&self) -> bool {
        match self {
            Command::If(..) | Command::While(..) => false,
            Command::Seq(a, b) | Command::Choice(a, b) => a.is_core() && b.is_core(),
            Command::Loop(c, _) | Command::Local(_, c) => c.is_core(),
            _ => true,
        }
    }

    /// Number of AST nodes, used to bound generated programs.
    pub fn size(&self) -> usize {
        match self {
            Command::Seq(a, b) | Command::Choice(a, b) | Command::If(_, a, b) => 1 + a.size() + b.size(),
            Command::Loop(c, _) | Command::Local(_, c) | Command::While(_, c, _) => 1 + c.size(),
            _ => 1,
        }
    }
}
