//! Proof-checking kernel for the three triple systems.
//!
//! A [`Derivation`] names a rule, supplies the parameters the rule cannot
//! recover from its premises, and lists the premise derivations. The checker
//! recomputes every conclusion from the rule schema and discharges side
//! conditions with a chosen [`LeqMethod`]; it never trusts a conclusion
//! written by the caller.
//!
//! Parameters by rule (all values are strings in the text form):
//!
//! | rule | parameters |
//! |------|-----------|
//! | `Skip` | `P` |
//! | `Assign`, `Assume`, `Tick` | `P`, `C` (the atomic command) |
//! | `Seq`, `SeqL`, `SeqR`, `Disj` | none |
//! | `ChoiceL` / `ChoiceR` | `C2` / `C1`, the branch not covered by the premise |
//! | `Loop` | `P` and `C` when there are no premises; `m` in BD mode |
//! | `LoopZero` | `P`, `C` (the loop body) |
//! | `Local` | `x` |
//! | `Constancy` | `B` |
//! | `Relax` | `F` |
//! | `Cons` | `P`, `Q` |
//! | `Subst` | `x`, `y` |
//!
//! Two commands count as the same when they are equal up to renaming of
//! `local` binders. Two assertions count as the same when their simplified
//! forms coincide or each is below the other under the side-condition method.

mod fuzz;
mod syntax;

pub use fuzz::{fuzz_soundness, FuzzFailure, FuzzReport};
pub use syntax::parse_derivation;

use crate::assert::{leq, parse_res, simplify, LeqMethod, LeqResult, Mode, Res};
use crate::lang::{mod_set, parse_bool, parse_command, subst, BoolExpr, Command, Expr, FreeVars, Name, NameSet};
use crate::semantics::State;
use crate::transform::Fresh;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Skip,
    Assign,
    Assume,
    Tick,
    Seq,
    SeqL,
    SeqR,
    ChoiceL,
    ChoiceR,
    Loop,
    LoopZero,
    Local,
    Disj,
    Constancy,
    Relax,
    Cons,
    Subst,
}

impl RuleKind {
    pub const ALL: [RuleKind; 17] = [
        RuleKind::Skip,
        RuleKind::Assign,
        RuleKind::Assume,
        RuleKind::Tick,
        RuleKind::Seq,
        RuleKind::SeqL,
        RuleKind::SeqR,
        RuleKind::ChoiceL,
        RuleKind::ChoiceR,
        RuleKind::Loop,
        RuleKind::LoopZero,
        RuleKind::Local,
        RuleKind::Disj,
        RuleKind::Constancy,
        RuleKind::Relax,
        RuleKind::Cons,
        RuleKind::Subst,
    ];

    fn name(self) -> &'static str {
        match self {
            RuleKind::Skip => "Skip",
            RuleKind::Assign => "Assign",
            RuleKind::Assume => "Assume",
            RuleKind::Tick => "Tick",
            RuleKind::Seq => "Seq",
            RuleKind::SeqL => "SeqL",
            RuleKind::SeqR => "SeqR",
            RuleKind::ChoiceL => "ChoiceL",
            RuleKind::ChoiceR => "ChoiceR",
            RuleKind::Loop => "Loop",
            RuleKind::LoopZero => "LoopZero",
            RuleKind::Local => "Local",
            RuleKind::Disj => "Disj",
            RuleKind::Constancy => "Constancy",
            RuleKind::Relax => "Relax",
            RuleKind::Cons => "Cons",
            RuleKind::Subst => "Subst",
        }
    }

    /// `Seq` belongs to F and B; the split sequencing rules and `LoopZero`
    /// to BD only.
    pub fn exists_in(self, mode: Mode) -> bool {
        match self {
            RuleKind::Seq => mode != Mode::BD,
            RuleKind::SeqL | RuleKind::SeqR | RuleKind::LoopZero => mode == Mode::BD,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub mode: Mode,
    pub kind: RuleKind,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.mode {
            Mode::F => "F",
            Mode::B => "B",
            Mode::BD => "BD",
        };
        write!(f, "{m}:{}", self.kind.name())
    }
}

impl std::str::FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Rule, String> {
        let (m, k) = s.split_once(':').ok_or_else(|| format!("rule `{s}` lacks a `MODE:` prefix"))?;
        let mode = match m {
            "F" => Mode::F,
            "B" => Mode::B,
            "BD" | "B◇" => Mode::BD,
            _ => return Err(format!("unknown system `{m}` in `{s}`")),
        };
        let kind = RuleKind::ALL.into_iter().find(|r| r.name() == k).ok_or_else(|| format!("unknown rule `{k}`"))?;
        if !kind.exists_in(mode) {
            return Err(format!("rule `{k}` does not exist in system {m}"));
        }
        Ok(Rule { mode, kind })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub args: BTreeMap<String, String>,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule) -> Derivation {
        Derivation { rule, args: BTreeMap::new(), premises: Vec::new() }
    }

    pub fn arg(mut self, key: &str, value: impl fmt::Display) -> Derivation {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn premise(mut self, d: Derivation) -> Derivation {
        self.premises.push(d);
        self
    }

    /// Number of rule applications.
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn rules(&self, out: &mut BTreeMap<Rule, usize>) {
        *out.entry(self.rule).or_default() += 1;
        for p in &self.premises {
            p.rules(out);
        }
    }
}

/// A triple established by the kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedTriple {
    pub mode: Mode,
    pub pre: Res,
    pub cmd: Command,
    pub post: Res,
}

impl fmt::Display for CheckedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmd = self.cmd.to_string().replace('\n', " ");
        write!(f, "⊢{} [{}] {} [{}]", self.mode.tag().to_uppercase(), self.pre, cmd, self.post)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("derivation syntax error on line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    /// The premises or parameters do not fit the rule. `at` is the path of
    /// premise indices from the root.
    #[error("{rule} at {at}: {msg}")]
    Schema { rule: Rule, at: String, msg: String },
    #[error("{rule} at {at}: side condition {what} fails{}", witness.as_ref().map(|s| format!(" at {s}")).unwrap_or_default())]
    SideCondition { rule: Rule, at: String, what: String, witness: Option<State> },
    #[error("{rule} at {at}: side condition {what} could not be decided: {reason}")]
    Undecided { rule: Rule, at: String, what: String, reason: String },
}

/// Checks `d` and returns the triple it proves.
pub fn check_derivation(d: &Derivation, method: LeqMethod) -> Result<CheckedTriple, KernelError> {
    let mut k = Kernel { method, fresh: Fresh::new() };
    k.fresh.avoid(d.mentioned_names());
    k.check(d, "root")
}

impl Derivation {
    /// Every identifier appearing in a parameter, so generated names avoid them.
    fn mentioned_names(&self) -> NameSet {
        let mut out = NameSet::new();
        let mut stack = vec![self];
        while let Some(d) = stack.pop() {
            for v in d.args.values() {
                let mut word = String::new();
                for c in v.chars().chain(std::iter::once(' ')) {
                    if c.is_alphanumeric() || c == '_' || c == '\'' {
                        word.push(c);
                    } else if !word.is_empty() {
                        out.insert(std::mem::take(&mut word));
                    }
                }
            }
            stack.extend(d.premises.iter());
        }
        out
    }
}

struct Kernel<'a> {
    method: LeqMethod<'a>,
    fresh: Fresh,
}

struct Node<'d> {
    d: &'d Derivation,
    at: String,
}

impl Node<'_> {
    fn rule(&self) -> Rule {
        self.d.rule
    }

    fn schema(&self, msg: impl Into<String>) -> KernelError {
        KernelError::Schema { rule: self.rule(), at: self.at.clone(), msg: msg.into() }
    }

    fn raw(&self, key: &str) -> Result<&str, KernelError> {
        self.d.args.get(key).map(String::as_str).ok_or_else(|| self.schema(format!("missing parameter `{key}`")))
    }

    fn res(&self, key: &str) -> Result<Res, KernelError> {
        parse_res(self.raw(key)?).map_err(|e| self.schema(format!("parameter `{key}`: {e}")))
    }

    fn cmd(&self, key: &str) -> Result<Command, KernelError> {
        parse_command(self.raw(key)?).map_err(|e| self.schema(format!("parameter `{key}`: {e}")))
    }

    fn boolean(&self, key: &str) -> Result<BoolExpr, KernelError> {
        parse_bool(self.raw(key)?).map_err(|e| self.schema(format!("parameter `{key}`: {e}")))
    }

    fn name(&self, key: &str) -> Result<Name, KernelError> {
        let v = self.raw(key)?.trim();
        let ok = v.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && v.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'');
        if ok {
            Ok(v.to_string())
        } else {
            Err(self.schema(format!("parameter `{key}` is not a variable name")))
        }
    }

    fn index(&self, key: &str) -> Result<usize, KernelError> {
        self.raw(key)?.trim().parse().map_err(|_| self.schema(format!("parameter `{key}` is not a natural number")))
    }

    fn arity(&self, n: usize) -> Result<(), KernelError> {
        if self.d.premises.len() == n {
            Ok(())
        } else {
            Err(self.schema(format!("expects {n} premise(s), found {}", self.d.premises.len())))
        }
    }

    fn premise_mode(&self, i: usize, t: &CheckedTriple, want: Mode) -> Result<(), KernelError> {
        if t.mode == want {
            Ok(())
        } else {
            Err(self.schema(format!("premise {i} is a {} triple, expected {}", t.mode, want)))
        }
    }

    fn disjoint(&self, what: &str, names: &NameSet, c: &Command) -> Result<(), KernelError> {
        let m = mod_set(c);
        match names.intersection(&m).next() {
            None => Ok(()),
            Some(x) => Err(KernelError::SideCondition {
                rule: self.rule(),
                at: self.at.clone(),
                what: format!("{what} (`{x}` is modified by the command)"),
                witness: None,
            }),
        }
    }
}

/// Structural equality up to renaming of `local` binders.
pub fn alpha_eq(a: &Command, b: &Command) -> bool {
    match (a, b) {
        (Command::Seq(a1, a2), Command::Seq(b1, b2)) | (Command::Choice(a1, a2), Command::Choice(b1, b2)) => {
            alpha_eq(a1, b1) && alpha_eq(a2, b2)
        }
        (Command::Loop(a1, _), Command::Loop(b1, _)) => alpha_eq(a1, b1),
        (Command::Local(x, a1), Command::Local(y, b1)) => {
            if x == y {
                return alpha_eq(a1, b1);
            }
            let mut avoid = a1.free_vars();
            avoid.extend(b1.free_vars());
            avoid.insert(x.clone());
            avoid.insert(y.clone());
            let z = crate::lang::fresh_variant("bound", &avoid);
            let ra = crate::lang::analysis::rename_local(x, a1, &z);
            let rb = crate::lang::analysis::rename_local(y, b1, &z);
            alpha_eq(&ra, &rb)
        }
        _ => a == b,
    }
}

impl Kernel<'_> {
    fn leq(&self, n: &Node, what: &str, a: &Res, b: &Res) -> Result<(), KernelError> {
        match leq(a, b, self.method) {
            LeqResult::True => Ok(()),
            LeqResult::False(witness) => Err(KernelError::SideCondition {
                rule: n.rule(),
                at: n.at.clone(),
                what: format!("{what}: {a} ⪯ {b}"),
                witness,
            }),
            LeqResult::Unknown(reason) => Err(KernelError::Undecided {
                rule: n.rule(),
                at: n.at.clone(),
                what: format!("{what}: {a} ⪯ {b}"),
                reason,
            }),
        }
    }

    fn same(&self, n: &Node, what: &str, a: &Res, b: &Res) -> Result<(), KernelError> {
        if a == b || simplify(a) == simplify(b) {
            return Ok(());
        }
        self.leq(n, what, a, b)?;
        self.leq(n, what, b, a)
    }

    fn same_cmd(&self, n: &Node, what: &str, a: &Command, b: &Command) -> Result<(), KernelError> {
        if alpha_eq(a, b) {
            Ok(())
        } else {
            Err(n.schema(format!("{what}: commands differ")))
        }
    }

    fn check(&mut self, d: &Derivation, at: &str) -> Result<CheckedTriple, KernelError> {
        let mut prem = Vec::with_capacity(d.premises.len());
        for (i, p) in d.premises.iter().enumerate() {
            prem.push(self.check(p, &format!("{at}.{i}"))?);
        }
        let n = Node { d, at: at.to_string() };
        let mode = d.rule.mode;
        let triple = |pre: Res, cmd: Command, post: Res| CheckedTriple { mode, pre, cmd, post };
        match d.rule.kind {
            RuleKind::Skip => {
                n.arity(0)?;
                let p = n.res("P")?;
                if mode == Mode::BD {
                    self.leq(&n, "P ⪯ 0", &p, &Res::num(0))?;
                }
                Ok(triple(p.clone(), Command::Skip, p))
            }
            RuleKind::Assign => {
                n.arity(0)?;
                let p = n.res("P")?;
                let c = n.cmd("C")?;
                let Command::Assign(x, e) = &c else {
                    return Err(n.schema("`C` must be a scalar assignment"));
                };
                let mut also = p.free_vars();
                also.extend(e.free_vars());
                also.insert(x.clone());
                let x1 = self.fresh.name(x, &also);
                let old = Expr::Var(x1.clone());
                let shifted = p.subst_var(x, &old);
                let e_old = e.subst_var(x, &old);
                let post = match mode {
                    Mode::F => Res::inf(
                        &x1,
                        Res::max(shifted, Res::guard(BoolExpr::Cmp(crate::lang::CmpOp::Ne, Expr::var(x), e_old))),
                    ),
                    Mode::B | Mode::BD => Res::sup(
                        &x1,
                        Res::min(shifted, Res::guard(BoolExpr::Cmp(crate::lang::CmpOp::Eq, Expr::var(x), e_old))),
                    ),
                };
                if mode == Mode::BD {
                    self.leq(&n, "P ⪯ 0", &p, &Res::num(0))?;
                }
                Ok(triple(p, c, post))
            }
            RuleKind::Assume => {
                n.arity(0)?;
                let p = n.res("P")?;
                let c = n.cmd("C")?;
                let Command::Assume(b) = &c else {
                    return Err(n.schema("`C` must be an assume"));
                };
                let r = match mode {
                    Mode::F => Res::max(p.clone(), Res::guard(b.negate())),
                    Mode::B | Mode::BD => Res::min(p.clone(), Res::guard(b.clone())),
                };
                if mode == Mode::BD {
                    self.leq(&n, "P ⪯ 0", &p, &Res::num(0))?;
                }
                Ok(triple(r.clone(), c, r))
            }
            RuleKind::Tick => {
                n.arity(0)?;
                let p = n.res("P")?;
                let c = n.cmd("C")?;
                let Command::Tick(e) = &c else {
                    return Err(n.schema("`C` must be a tick"));
                };
                let post = Res::sub(p.clone(), e.clone());
                if mode == Mode::BD {
                    self.leq(&n, "P ⋏ (P − e) ⪯ 0", &Res::min(p.clone(), post.clone()), &Res::num(0))?;
                }
                Ok(triple(p, c, post))
            }
            RuleKind::Seq | RuleKind::SeqL | RuleKind::SeqR => {
                n.arity(2)?;
                let (m1, m2) = match d.rule.kind {
                    RuleKind::SeqL => (Mode::BD, Mode::B),
                    RuleKind::SeqR => (Mode::B, Mode::BD),
                    _ => (mode, mode),
                };
                n.premise_mode(0, &prem[0], m1)?;
                n.premise_mode(1, &prem[1], m2)?;
                self.same(&n, "middle assertion", &prem[0].post, &prem[1].pre)?;
                let [a, b]: [CheckedTriple; 2] = prem.try_into().expect("arity checked");
                Ok(triple(a.pre, Command::seq(a.cmd, b.cmd), b.post))
            }
            RuleKind::ChoiceL | RuleKind::ChoiceR => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let t = prem.into_iter().next().expect("arity checked");
                let cmd = if d.rule.kind == RuleKind::ChoiceL {
                    Command::choice(t.cmd, n.cmd("C2")?)
                } else {
                    Command::choice(n.cmd("C1")?, t.cmd)
                };
                Ok(triple(t.pre, cmd, t.post))
            }
            RuleKind::Loop => self.check_loop(&n, prem),
            RuleKind::LoopZero => {
                n.arity(0)?;
                let p = n.res("P")?;
                let body = n.cmd("C")?;
                self.leq(&n, "P ⪯ 0", &p, &Res::num(0))?;
                Ok(triple(p.clone(), Command::lp(body), p))
            }
            RuleKind::Local => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let x = n.name("x")?;
                let t = prem.into_iter().next().expect("arity checked");
                let bind = |r: Res| match mode {
                    Mode::F => Res::inf(&x, r),
                    Mode::B | Mode::BD => Res::sup(&x, r),
                };
                Ok(triple(bind(t.pre), Command::local(&x, t.cmd), bind(t.post)))
            }
            RuleKind::Disj => {
                if prem.is_empty() {
                    return Err(n.schema("expects at least one premise"));
                }
                for (i, t) in prem.iter().enumerate() {
                    n.premise_mode(i, t, mode)?;
                    self.same_cmd(&n, &format!("premise {i}"), &prem[0].cmd, &t.cmd)?;
                }
                let cmd = prem[0].cmd.clone();
                let (pres, posts): (Vec<Res>, Vec<Res>) = prem.into_iter().map(|t| (t.pre, t.post)).unzip();
                let join = |items: Vec<Res>| match mode {
                    Mode::F => Res::min_all(items),
                    Mode::B | Mode::BD => Res::max_all(items),
                };
                Ok(triple(join(pres), cmd, join(posts)))
            }
            RuleKind::Constancy => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let b = n.boolean("B")?;
                let t = prem.into_iter().next().expect("arity checked");
                n.disjoint("fv(B) ∩ mod(C) = ∅", &b.free_vars(), &t.cmd)?;
                let g = Res::guard(b);
                let with = |r: Res| match mode {
                    Mode::F => Res::max(r, g.clone()),
                    Mode::B | Mode::BD => Res::min(r, g.clone()),
                };
                Ok(triple(with(t.pre), t.cmd, with(t.post)))
            }
            RuleKind::Relax => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let f = n.res("F")?;
                let t = prem.into_iter().next().expect("arity checked");
                n.disjoint("fv(F) ∩ mod(C) = ∅", &f.free_vars(), &t.cmd)?;
                if mode == Mode::BD {
                    self.leq(&n, "F ⪯ 0", &f, &Res::num(0))?;
                }
                Ok(triple(Res::add(t.pre, f.clone()), t.cmd, Res::add(t.post, f)))
            }
            RuleKind::Cons => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let p = n.res("P")?;
                let q = n.res("Q")?;
                let t = prem.into_iter().next().expect("arity checked");
                self.leq(&n, "strengthened pre", &p, &t.pre)?;
                self.leq(&n, "weakened post", &t.post, &q)?;
                Ok(triple(p, t.cmd, q))
            }
            RuleKind::Subst => {
                n.arity(1)?;
                n.premise_mode(0, &prem[0], mode)?;
                let x = n.name("x")?;
                let y = n.name("y")?;
                let t = prem.into_iter().next().expect("arity checked");
                let mut used = t.pre.free_vars();
                used.extend(t.post.free_vars());
                used.extend(t.cmd.free_vars());
                if x != y && used.contains(&y) {
                    return Err(KernelError::SideCondition {
                        rule: n.rule(),
                        at: n.at.clone(),
                        what: format!("`{y}` must not occur free in the premise"),
                        witness: None,
                    });
                }
                let cmd = subst(&t.cmd, &y, &x).map_err(|e| n.schema(e.to_string()))?;
                Ok(triple(t.pre.rename(&x, &y), cmd, t.post.rename(&x, &y)))
            }
        }
    }

    fn check_loop(&mut self, n: &Node, prem: Vec<CheckedTriple>) -> Result<CheckedTriple, KernelError> {
        let mode = n.rule().mode;
        let (chain, special) = if mode == Mode::BD {
            let m = n.index("m")?;
            let mut chain = prem;
            let Some(last) = chain.pop() else {
                return Err(n.schema("expects the iteration premises followed by one exhausting premise"));
            };
            if m >= chain.len() {
                return Err(n.schema(format!("exhausting iteration m = {m} must be below k = {}", chain.len())));
            }
            (chain, Some((m, last)))
        } else {
            (prem, None)
        };
        let chain_mode = if mode == Mode::BD { Mode::B } else { mode };
        if chain.is_empty() {
            if mode == Mode::BD {
                return Err(n.schema("a loop with zero iterations is derived by LoopZero in this system"));
            }
            let p = n.res("P")?;
            let body = n.cmd("C")?;
            return Ok(CheckedTriple { mode, pre: p.clone(), cmd: Command::lp(body), post: p });
        }
        for (i, t) in chain.iter().enumerate() {
            n.premise_mode(i, t, chain_mode)?;
            self.same_cmd(n, &format!("premise {i}"), &chain[0].cmd, &t.cmd)?;
            if i > 0 {
                self.same(n, &format!("family member {i}"), &chain[i - 1].post, &t.pre)?;
            }
        }
        if let Some((m, t)) = &special {
            let idx = chain.len();
            n.premise_mode(idx, t, Mode::BD)?;
            self.same_cmd(n, "exhausting premise", &chain[0].cmd, &t.cmd)?;
            self.same(n, &format!("family member {m}"), &chain[*m].pre, &t.pre)?;
            self.same(n, &format!("family member {}", m + 1), &chain[*m].post, &t.post)?;
        }
        let pre = chain[0].pre.clone();
        let post = chain[chain.len() - 1].post.clone();
        let body = chain.into_iter().next().expect("non-empty").cmd;
        Ok(CheckedTriple { mode, pre, cmd: Command::lp(body), post })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{holds_semantically, DomainBounds};

    fn bounds() -> DomainBounds {
        DomainBounds::uniform(-3, 3)
    }

    fn check(src: &str) -> Result<CheckedTriple, KernelError> {
        let b = bounds();
        check_derivation(&parse_derivation(src).unwrap(), LeqMethod::Bounded(&b))
    }

    fn valid(t: &CheckedTriple, vars: &[&str]) -> bool {
        let vars: Vec<Name> = vars.iter().map(|s| s.to_string()).collect();
        holds_semantically(t.mode, &t.pre, &t.cmd, &t.post, &bounds(), &vars, &[]).unwrap().is_true()
    }

    /// For loops without a bound the enumeration truncates; the explored
    /// runs must still not refute the conclusion.
    fn not_refuted(t: &CheckedTriple) -> bool {
        let r = holds_semantically(t.mode, &t.pre, &t.cmd, &t.post, &bounds(), &[], &[]).unwrap();
        !matches!(r, crate::semantics::Truth::False(_))
    }

    #[test]
    fn rule_names_parse_per_system() {
        assert_eq!("BD:SeqL".parse::<Rule>().unwrap().to_string(), "BD:SeqL");
        assert_eq!("B◇:Tick".parse::<Rule>().unwrap().mode, Mode::BD);
        assert!("F:SeqL".parse::<Rule>().is_err());
        assert!("BD:Seq".parse::<Rule>().is_err());
        assert!("F:LoopZero".parse::<Rule>().is_err());
    }

    #[test]
    fn counting_loop_family() {
        // P(n) = n over three iterations of `tick(-1)`.
        let step = |n: i64| format!("(F:Tick {{P: \"{n}\", C: \"tick(-1);\"}})");
        let src = format!("(F:Loop {{}} {} {} {})", step(0), step(1), step(2));
        let t = check(&src).unwrap();
        assert_eq!(simplify(&t.pre), Res::num(0));
        assert_eq!(simplify(&t.post), Res::num(3));
        assert!(matches!(t.cmd, Command::Loop(..)));
        assert!(not_refuted(&t));
    }

    #[test]
    fn broken_family_is_rejected() {
        let src = "(F:Loop {} (F:Tick {P: \"0\", C: \"tick(-1);\"}) (F:Tick {P: \"5\", C: \"tick(-1);\"}))";
        assert!(matches!(check(src), Err(KernelError::SideCondition { .. })));
    }

    #[test]
    fn assign_forward_and_backward() {
        let f = check("(F:Assign {P: \"x\", C: \"x = x + 1;\"})").unwrap();
        assert!(valid(&f, &["x"]));
        let b = check("(B:Assign {P: \"x\", C: \"x = 0;\"})").unwrap();
        assert!(valid(&b, &["x"]));
    }

    #[test]
    fn exhausting_side_conditions() {
        assert!(check("(BD:Skip {P: \"0\"})").is_ok());
        assert!(matches!(check("(BD:Skip {P: \"1\"})"), Err(KernelError::SideCondition { .. })));
        // P ⋏ (P − 2) ⪯ 0 holds for P = 2: the tick passes through level 0.
        let t = check("(BD:Tick {P: \"2\", C: \"tick(2);\"})").unwrap();
        assert!(valid(&t, &[]));
        assert!(check("(BD:Tick {P: \"3\", C: \"tick(2);\"})").is_err());
        assert!(check("(BD:Relax {F: \"1\"} (BD:Skip {P: \"0\"}))").is_err());
    }

    #[test]
    fn sequencing_splits_in_exhausting_system() {
        let src = "(BD:SeqL {} (BD:Tick {P: \"1\", C: \"tick(1);\"}) (B:Tick {P: \"1 - 1\", C: \"tick(-4);\"}))";
        let t = check(src).unwrap();
        assert_eq!(t.mode, Mode::BD);
        assert!(valid(&t, &[]));
        let wrong = "(BD:SeqL {} (B:Tick {P: \"1\", C: \"tick(1);\"}) (B:Tick {P: \"0\", C: \"tick(1);\"}))";
        assert!(matches!(check(wrong), Err(KernelError::Schema { .. })));
    }

    #[test]
    fn exhausting_loop_needs_matching_witness_iteration() {
        let b = |p: i64| format!("(B:Tick {{P: \"{p}\", C: \"tick(1);\"}})");
        let d = |p: i64| format!("(BD:Tick {{P: \"{p}\", C: \"tick(1);\"}})");
        let ok = format!("(BD:Loop {{m: \"1\"}} {} {} {})", b(2), b(1), d(1));
        let t = check(&ok).unwrap();
        assert!(not_refuted(&t));
        let bad_index = format!("(BD:Loop {{m: \"2\"}} {} {} {})", b(2), b(1), d(1));
        assert!(check(&bad_index).is_err());
        let mismatched = format!("(BD:Loop {{m: \"0\"}} {} {} {})", b(2), b(1), d(1));
        assert!(check(&mismatched).is_err());
    }

    #[test]
    fn frame_conditions_are_syntactic() {
        assert!(check("(F:Constancy {B: \"y > 0\"} (F:Assign {P: \"0\", C: \"x = 1;\"}))").is_ok());
        assert!(check("(F:Constancy {B: \"x > 0\"} (F:Assign {P: \"0\", C: \"x = 1;\"}))").is_err());
        assert!(check("(B:Relax {F: \"x\"} (B:Assign {P: \"0\", C: \"x = 1;\"}))").is_err());
    }

    #[test]
    fn subst_requires_fresh_target() {
        let t = check("(B:Subst {x: \"x\", y: \"z\"} (B:Assign {P: \"x\", C: \"x = y;\"}))").unwrap();
        assert!(t.cmd.mentions("z") && !t.cmd.mentions("x"));
        assert!(valid(&t, &["y", "z"]));
        assert!(check("(B:Subst {x: \"x\", y: \"y\"} (B:Assign {P: \"x\", C: \"x = y;\"}))").is_err());
    }

    #[test]
    fn disjunction_requires_one_command() {
        let ok = "(B:Disj {} (B:Tick {P: \"x\", C: \"tick(1);\"}) (B:Tick {P: \"2\", C: \"tick(1);\"}))";
        let t = check(ok).unwrap();
        assert!(valid(&t, &["x"]));
        let bad = "(B:Disj {} (B:Tick {P: \"x\", C: \"tick(1);\"}) (B:Tick {P: \"2\", C: \"tick(2);\"}))";
        assert!(check(bad).is_err());
    }

    #[test]
    fn local_commands_compare_up_to_renaming() {
        let a = parse_command("{ int t; t = 1; x = t; }").unwrap();
        let b = parse_command("{ int u; u = 1; x = u; }").unwrap();
        let c = parse_command("{ int u; u = 1; x = x; }").unwrap();
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn consequence_checks_both_directions() {
        assert!(check("(F:Cons {P: \"0\", Q: \"5\"} (F:Tick {P: \"1\", C: \"tick(-2);\"}))").is_ok());
        assert!(check("(F:Cons {P: \"2\", Q: \"5\"} (F:Tick {P: \"1\", C: \"tick(-2);\"}))").is_err());
        assert!(check("(F:Cons {P: \"0\", Q: \"2\"} (F:Tick {P: \"1\", C: \"tick(-2);\"}))").is_err());
    }
}
