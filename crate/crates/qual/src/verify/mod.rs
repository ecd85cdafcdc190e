//! Annotation-driven verification: loop summaries from subvariant families,
//! verification-condition generation per mode, and verdict assembly.

use crate::assert::{lift, simplify, ExtInt, Factored, Mode, Res};
use crate::lang::{mod_set, BoolExpr, CmpOp, Command, Expr, FreeVars, Name, NameSet, Program};
use crate::semantics::State;
use crate::smt::{
    check_query, check_query_bounded, query_script, QueryOutcome, Replay, SmtOutcome, SolverError, SolverHandle,
};
use crate::transform::{is_atom, open_local, sp_atom, wp_atom, wpd_atom, Fresh};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

/// Annotation attached to one loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSpec {
    /// Number of iterations `k`; must not mention variables the body modifies.
    pub iters: Expr,
    /// Index variable of the subvariant family.
    pub index: Name,
    /// `[S(n); R(n)]` with `n` = `index`.
    pub subvar: Factored,
    /// Assertion on unmodified variables added to both summary sides.
    pub prefix: Option<Factored>,
    /// Iteration at which the resource is exhausted (exhaustive mode only).
    pub exhaust: Option<Expr>,
    /// Source line of the pragma.
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub pre: Option<Factored>,
    pub post: Option<Factored>,
    /// Indexed by the tag stored in `Command::Loop`.
    pub loops: Vec<LoopSpec>,
}

/// One verification condition `hyp ⟹ lhs ⪯ rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vc {
    pub label: String,
    pub mode: Mode,
    pub hyp: BoolExpr,
    pub lhs: Res,
    pub rhs: Res,
    /// Source line (0 for the whole program) and the rule the condition discharges.
    pub line: usize,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IllFormed(pub String);

impl fmt::Display for IllFormed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn ge0(e: Expr) -> BoolExpr {
    BoolExpr::Cmp(CmpOp::Le, Expr::Num(0), e)
}

fn lt(a: Expr, b: Expr) -> BoolExpr {
    BoolExpr::Cmp(CmpOp::Lt, a, b)
}

/// Pre and post of the loop summary: the subvariant at `0` and at `k`, both
/// conjoined with `0 ≤ k` (exhaustive mode: `0 ≤ m < k`) and shifted by the
/// constant prefix.
pub fn loop_summary(spec: &LoopSpec, mode: Mode) -> (Factored, Factored) {
    let at = |e: &Expr| spec.subvar.subst_var(&spec.index, e);
    let bound = match (mode, &spec.exhaust) {
        (Mode::BD, Some(m)) => BoolExpr::and(ge0(m.clone()), lt(m.clone(), spec.iters.clone())),
        _ => ge0(spec.iters.clone()),
    };
    let close = |f: Factored| {
        let mut spec_part = BoolExpr::and(f.spec, bound.clone());
        let mut res = f.res;
        if let Some(pf) = &spec.prefix {
            spec_part = BoolExpr::and(spec_part, pf.spec.clone());
            res = Expr::add(res, pf.res.clone());
        }
        Factored::new(spec_part, res)
    };
    (close(at(&Expr::Num(0))), close(at(&spec.iters)))
}

fn check_loop(spec: &LoopSpec, body: &Command) -> Result<(), IllFormed> {
    let modified = mod_set(body);
    let clash = |what: &str, fv: NameSet| -> Result<(), IllFormed> {
        match fv.intersection(&modified).next() {
            Some(x) => {
                Err(IllFormed(format!("line {}: {what} mentions `{x}`, which the loop body modifies", spec.line)))
            }
            None => Ok(()),
        }
    };
    clash("iteration count", spec.iters.free_vars())?;
    if let Some(m) = &spec.exhaust {
        clash("exhaustion index", m.free_vars())?;
    }
    if let Some(p) = &spec.prefix {
        clash("constant prefix", p.free_vars())?;
    }
    if body.mentions(&spec.index) {
        return Err(IllFormed(format!(
            "line {}: subvariant index `{}` occurs in the loop body",
            spec.line, spec.index
        )));
    }
    Ok(())
}

struct Gen<'a> {
    loops: &'a [LoopSpec],
    fresh: Fresh,
    vcs: Vec<Vc>,
}

impl Gen<'_> {
    fn spec(&self, tag: Option<usize>) -> Result<&LoopSpec, IllFormed> {
        tag.and_then(|t| self.loops.get(t)).ok_or_else(|| IllFormed("loop without a `//@ loop` annotation".into()))
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, label: String, mode: Mode, hyp: &BoolExpr, lhs: Res, rhs: Res, line: usize, rule: &str) {
        if self.vcs.iter().any(|v| v.mode == mode && &v.hyp == hyp && v.lhs == lhs && v.rhs == rhs) {
            return;
        }
        let mut unique = label.clone();
        let mut k = 1;
        while self.vcs.iter().any(|v| v.label == unique) {
            k += 1;
            unique = format!("{label}#{k}");
        }
        self.vcs.push(Vc { label: unique, mode, hyp: hyp.clone(), lhs, rhs, line, rule: rule.to_string() });
    }

    fn step_ctx(ctx: &BoolExpr, spec: &LoopSpec) -> BoolExpr {
        let n = Expr::Var(spec.index.clone());
        BoolExpr::and_all([ctx.clone(), ge0(n.clone()), lt(n, spec.iters.clone())])
    }

    fn tag(tag: Option<usize>) -> String {
        format!("loop{}", tag.unwrap_or(0))
    }

    fn fwd(&mut self, c: &Command, p: Res, ctx: &BoolExpr) -> Result<Res, IllFormed> {
        Ok(match c {
            _ if is_atom(c) => sp_atom(c, &p, &mut self.fresh),
            Command::Seq(a, b) => {
                let mid = self.fwd(a, p, ctx)?;
                self.fwd(b, mid, ctx)?
            }
            Command::Choice(a, b) => {
                let l = self.fwd(a, p.clone(), ctx)?;
                Res::min(l, self.fwd(b, p, ctx)?)
            }
            Command::Local(x, body) => {
                let (y, body) = open_local(x, body, &p, &mut self.fresh);
                Res::inf(&y, self.fwd(&body, p, ctx)?)
            }
            Command::Loop(body, tag) => {
                let spec = self.spec(*tag)?.clone();
                check_loop(&spec, body)?;
                let (pre, post) = loop_summary(&spec, Mode::F);
                let name = Self::tag(*tag);
                self.push(format!("{name}:entry"), Mode::F, ctx, p, lift(&pre, Mode::F), spec.line, "F:Cons");
                let n = Expr::Var(spec.index.clone());
                let inner = Self::step_ctx(ctx, &spec);
                let start = lift(&spec.subvar, Mode::F);
                let reached = self.fwd(body, start, &inner)?;
                let next = lift(&spec.subvar.subst_var(&spec.index, &Expr::add(n, Expr::Num(1))), Mode::F);
                self.push(format!("{name}:step"), Mode::F, &inner, reached, next, spec.line, "F:Loop");
                lift(&post, Mode::F)
            }
            _ => return Err(IllFormed("surface command left after desugaring".into())),
        })
    }

    /// Backward steps `[P(n)] body [P(n+1)]` for `0 ≤ n < k`.
    fn b_steps(&mut self, spec: &LoopSpec, body: &Command, ctx: &BoolExpr, name: &str) -> Result<(), IllFormed> {
        let n = Expr::Var(spec.index.clone());
        let inner = Self::step_ctx(ctx, spec);
        let next = lift(&spec.subvar.subst_var(&spec.index, &Expr::add(n, Expr::Num(1))), Mode::B);
        let need = self.bwd(body, next, &inner)?;
        self.push(format!("{name}:step"), Mode::B, &inner, lift(&spec.subvar, Mode::B), need, spec.line, "B:Loop");
        Ok(())
    }

    fn bwd(&mut self, c: &Command, q: Res, ctx: &BoolExpr) -> Result<Res, IllFormed> {
        Ok(match c {
            _ if is_atom(c) => wp_atom(c, &q),
            Command::Seq(a, b) => {
                let mid = self.bwd(b, q, ctx)?;
                self.bwd(a, mid, ctx)?
            }
            Command::Choice(a, b) => {
                let l = self.bwd(a, q.clone(), ctx)?;
                Res::max(l, self.bwd(b, q, ctx)?)
            }
            Command::Local(x, body) => {
                let (y, body) = open_local(x, body, &q, &mut self.fresh);
                Res::sup(&y, self.bwd(&body, q, ctx)?)
            }
            Command::Loop(body, tag) => {
                let spec = self.spec(*tag)?.clone();
                check_loop(&spec, body)?;
                let (pre, post) = loop_summary(&spec, Mode::B);
                let name = Self::tag(*tag);
                self.push(format!("{name}:exit"), Mode::B, ctx, lift(&post, Mode::B), q, spec.line, "B:Cons");
                self.b_steps(&spec, body, ctx, &name)?;
                lift(&pre, Mode::B)
            }
            _ => return Err(IllFormed("surface command left after desugaring".into())),
        })
    }

    /// True when `c` contains a loop annotated with an exhaustion index.
    fn drops_in(&self, c: &Command) -> bool {
        match c {
            Command::Loop(body, tag) => {
                tag.and_then(|t| self.loops.get(t)).is_some_and(|s| s.exhaust.is_some()) || self.drops_in(body)
            }
            Command::Seq(a, b) | Command::Choice(a, b) => self.drops_in(a) || self.drops_in(b),
            Command::Local(_, body) => self.drops_in(body),
            _ => false,
        }
    }

    fn bwdd(&mut self, c: &Command, q: Res, ctx: &BoolExpr) -> Result<Res, IllFormed> {
        Ok(match c {
            _ if is_atom(c) => wpd_atom(c, &q),
            // The exhaustion point of an annotated loop fixes the half in which
            // the level drops; otherwise both splits are kept.
            Command::Seq(a, b) if self.drops_in(b) => {
                let early = self.bwdd(b, q, ctx)?;
                self.bwd(a, early, ctx)?
            }
            Command::Seq(a, b) if self.drops_in(a) => {
                let late = self.bwd(b, q, ctx)?;
                self.bwdd(a, late, ctx)?
            }
            Command::Seq(a, b) => {
                let late = self.bwd(b, q.clone(), ctx)?;
                let first = self.bwdd(a, late, ctx)?;
                let early = self.bwdd(b, q, ctx)?;
                let second = self.bwd(a, early, ctx)?;
                Res::max(first, second)
            }
            Command::Choice(a, b) => {
                let l = self.bwdd(a, q.clone(), ctx)?;
                Res::max(l, self.bwdd(b, q, ctx)?)
            }
            Command::Local(x, body) => {
                let (y, body) = open_local(x, body, &q, &mut self.fresh);
                Res::sup(&y, self.bwdd(&body, q, ctx)?)
            }
            Command::Loop(body, tag) => {
                let spec = self.spec(*tag)?.clone();
                check_loop(&spec, body)?;
                // Zero iterations: the level is the initial resource.
                let zero = Res::min(q.clone(), Res::num(0));
                let Some(m) = spec.exhaust.clone() else {
                    return Ok(zero);
                };
                let (pre, post) = loop_summary(&spec, Mode::BD);
                let name = Self::tag(*tag);
                self.push(format!("{name}:exit"), Mode::BD, ctx, lift(&post, Mode::BD), q, spec.line, "BD:Cons");
                self.b_steps(&spec, body, ctx, &name)?;
                let at_m = BoolExpr::and_all([ctx.clone(), ge0(m.clone()), lt(m.clone(), spec.iters.clone())]);
                let next = lift(&spec.subvar.subst_var(&spec.index, &Expr::add(m.clone(), Expr::Num(1))), Mode::BD);
                let need = self.bwdd(body, next, &at_m)?;
                let have = lift(&spec.subvar.subst_var(&spec.index, &m), Mode::BD);
                self.push(format!("{name}:exhaust"), Mode::BD, &at_m, have, need, spec.line, "BD:Loop");
                Res::max(zero, lift(&pre, Mode::BD))
            }
            _ => return Err(IllFormed("surface command left after desugaring".into())),
        })
    }
}

fn annotation_names(ann: &AnnotationSet) -> NameSet {
    let mut out = NameSet::new();
    for f in [&ann.pre, &ann.post].into_iter().flatten() {
        out.extend(f.free_vars());
    }
    for l in &ann.loops {
        out.extend(l.subvar.free_vars());
        out.extend(l.iters.free_vars());
        out.insert(l.index.clone());
        if let Some(p) = &l.prefix {
            out.extend(p.free_vars());
        }
        if let Some(m) = &l.exhaust {
            out.extend(m.free_vars());
        }
    }
    out
}

/// Verification conditions for `prog` in `mode`, in generation order.
pub fn gen_vcs(prog: &Program, mode: Mode) -> Result<Vec<Vc>, IllFormed> {
    let ann = &prog.annotations;
    let pre = ann.pre.as_ref().ok_or_else(|| IllFormed("missing `//@ pre` annotation".into()))?;
    let post = ann.post.as_ref().ok_or_else(|| IllFormed("missing `//@ post` annotation".into()))?;
    let mut fresh = Fresh::new();
    fresh.avoid(prog.decls.iter().map(|d| d.name.clone()));
    fresh.avoid(prog.body.free_vars());
    fresh.avoid(annotation_names(ann));
    let mut g = Gen { loops: &ann.loops, fresh, vcs: Vec::new() };
    let top = BoolExpr::Const(true);
    match mode {
        Mode::F => {
            let out = g.fwd(&prog.body, lift(pre, Mode::F), &top)?;
            g.push("main".into(), mode, &top, out, lift(post, Mode::F), 0, "F:Cons");
        }
        Mode::B => {
            let need = g.bwd(&prog.body, lift(post, Mode::B), &top)?;
            g.push("main".into(), mode, &top, lift(pre, Mode::B), need, 0, "B:Cons");
        }
        Mode::BD => {
            let need = g.bwdd(&prog.body, lift(post, Mode::BD), &top)?;
            g.push("main".into(), mode, &top, lift(pre, Mode::BD), need, 0, "BD:Cons");
        }
    }
    Ok(g.vcs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VcStatus {
    Proved,
    /// Proved only over the bounded fallback domain.
    ProvedBounded(i64),
    /// Solver model confirmed by concrete evaluation.
    Refuted(State),
    Unknown(String),
    Error(String),
}

impl VcStatus {
    pub fn tag(&self) -> &'static str {
        match self {
            VcStatus::Proved => "proved",
            VcStatus::ProvedBounded(_) => "proved-bounded",
            VcStatus::Refuted(_) => "refuted",
            VcStatus::Unknown(_) => "unknown",
            VcStatus::Error(_) => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct VcReport {
    pub vc: Vc,
    pub lhs: Res,
    pub rhs: Res,
    pub status: VcStatus,
    pub millis: u128,
    /// Number of solver processes started for this condition.
    pub solver_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    ValidBounded(i64),
    Invalid { label: String, witness: State },
    Unknown { label: String, reason: String },
    IllFormed(String),
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Valid => "Valid",
            Verdict::ValidBounded(_) => "Valid-bounded",
            Verdict::Invalid { .. } => "Invalid",
            Verdict::Unknown { .. } => "Unknown",
            Verdict::IllFormed(_) => "IllFormed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Valid => 0,
            Verdict::Invalid { .. } => 1,
            Verdict::ValidBounded(_) | Verdict::Unknown { .. } => 2,
            Verdict::IllFormed(_) => 3,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => write!(f, "Valid"),
            Verdict::ValidBounded(b) => write!(f, "Valid-bounded (bound {b})"),
            Verdict::Invalid { label, witness } => write!(f, "Invalid at {label}: {witness}"),
            Verdict::Unknown { label, reason } => write!(f, "Unknown at {label}: {reason}"),
            Verdict::IllFormed(r) => write!(f, "IllFormed: {r}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub solver: SolverHandle,
    /// Bound for re-checking conditions the solver leaves open.
    pub fallback_bound: Option<i64>,
    /// Directory receiving one `.smt2` file per condition.
    pub dump_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub mode: Mode,
    pub verdict: Verdict,
    pub vcs: Vec<VcReport>,
}

fn trivially_holds(lhs: &Res, rhs: &Res) -> bool {
    lhs == rhs || *lhs == Res::Lit(ExtInt::NegInf) || *rhs == Res::Lit(ExtInt::PosInf)
}

fn classify(out: &QueryOutcome) -> Option<VcStatus> {
    match (&out.outcome, &out.replay) {
        (SmtOutcome::Proved, _) => Some(VcStatus::Proved),
        (SmtOutcome::Refuted(s), Some(Replay::Confirmed)) => Some(VcStatus::Refuted(s.clone())),
        (SmtOutcome::Refuted(_), Some(Replay::Contradicted)) => {
            Some(VcStatus::Unknown("solver model does not violate the condition".into()))
        }
        (SmtOutcome::Refuted(_), Some(Replay::Inconclusive(why))) => {
            Some(VcStatus::Unknown(format!("model not replayable: {why}")))
        }
        (SmtOutcome::Refuted(_), None) => Some(VcStatus::Unknown("model not replayed".into())),
        (SmtOutcome::Unknown(_), _) => None,
    }
}

fn discharge(vc: &Vc, opts: &CheckOptions) -> VcReport {
    let start = Instant::now();
    let lhs = simplify(&vc.lhs);
    let rhs = simplify(&vc.rhs);
    let query = crate::smt::Query { hyp: vc.hyp.clone(), lhs: lhs.clone(), rhs: rhs.clone() };
    let mut calls = 0;
    let status = if trivially_holds(&lhs, &rhs) {
        VcStatus::Proved
    } else {
        calls += 1;
        match check_query(&opts.solver, &query) {
            Err(e) => VcStatus::Error(e.to_string()),
            Ok(out) => match (classify(&out), &out.outcome, opts.fallback_bound) {
                (Some(s), _, _) => s,
                (None, SmtOutcome::Unknown(reason), Some(b)) => {
                    calls += 1;
                    match check_query_bounded(&opts.solver, &query, b) {
                        Err(e) => VcStatus::Error(e.to_string()),
                        Ok(bout) => match classify(&bout) {
                            Some(VcStatus::Proved) => VcStatus::ProvedBounded(b),
                            Some(other) => other,
                            None => VcStatus::Unknown(format!("{reason}; bounded re-check also unknown")),
                        },
                    }
                }
                (None, SmtOutcome::Unknown(reason), None) => VcStatus::Unknown(reason.clone()),
                (None, _, _) => VcStatus::Unknown("unclassified solver answer".into()),
            },
        }
    };
    VcReport { vc: vc.clone(), lhs, rhs, status, millis: start.elapsed().as_millis(), solver_calls: calls }
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Writes the solver script of every condition of `vcs` into `dir`.
pub fn dump_scripts(vcs: &[Vc], dir: &std::path::Path, logic: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, vc) in vcs.iter().enumerate() {
        let q = crate::smt::Query { hyp: vc.hyp.clone(), lhs: simplify(&vc.lhs), rhs: simplify(&vc.rhs) };
        let path = dir.join(format!("{:02}-{}-{}.smt2", i, vc.mode, file_label(&vc.label)));
        std::fs::write(path, query_script(&q, logic))?;
    }
    Ok(())
}

/// Combines per-condition outcomes: any refutation makes the verdict
/// Invalid, otherwise any open condition makes it Unknown.
pub fn assemble(vcs: &[VcReport]) -> Verdict {
    if let Some(r) = vcs.iter().find(|r| matches!(r.status, VcStatus::Refuted(_))) {
        if let VcStatus::Refuted(w) = &r.status {
            return Verdict::Invalid { label: r.vc.label.clone(), witness: w.clone() };
        }
    }
    for r in vcs {
        match &r.status {
            VcStatus::Unknown(reason) | VcStatus::Error(reason) => {
                return Verdict::Unknown { label: r.vc.label.clone(), reason: reason.clone() }
            }
            _ => {}
        }
    }
    match vcs
        .iter()
        .filter_map(|r| match r.status {
            VcStatus::ProvedBounded(b) => Some(b),
            _ => None,
        })
        .min()
    {
        Some(b) => Verdict::ValidBounded(b),
        None => Verdict::Valid,
    }
}

/// Generates and discharges all conditions; each runs in its own thread with
/// its own solver process.
pub fn check(prog: &Program, mode: Mode, opts: &CheckOptions) -> Result<CheckReport, SolverError> {
    let vcs = match gen_vcs(prog, mode) {
        Ok(v) => v,
        Err(e) => return Ok(CheckReport { mode, verdict: Verdict::IllFormed(e.0), vcs: Vec::new() }),
    };
    if let Some(dir) = &opts.dump_dir {
        dump_scripts(&vcs, dir, &opts.solver.logic)
            .map_err(|e| SolverError::Output(format!("cannot write {}: {e}", dir.display())))?;
    }
    let reports: Vec<VcReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = vcs.iter().map(|vc| scope.spawn(move || discharge(vc, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("condition thread panicked")).collect()
    });
    if let Some(err) = reports.iter().find_map(|r| match &r.status {
        VcStatus::Error(e) if e.starts_with("cannot launch") => Some(e.clone()),
        _ => None,
    }) {
        return Err(SolverError::Launch(opts.solver.cmd.join(" "), err));
    }
    let verdict = assemble(&reports);
    Ok(CheckReport { mode, verdict, vcs: reports })
}

/// Per-label status table, convenient for tests and reports.
pub fn statuses(report: &CheckReport) -> BTreeMap<String, &'static str> {
    report.vcs.iter().map(|r| (r.vc.label.clone(), r.status.tag())).collect()
}
