use super::bounds::DomainBounds;
use super::state::{eval_bool, eval_expr, EvalError, State};
use crate::lang::analysis::writes_before_read;
use crate::lang::{Command, FreeVars};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Result of a terminating run: final state, residual resource `q` and the
/// lowest resource level `l` seen along the way.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    pub state: State,
    pub q: i64,
    pub l: i64,
}

impl Outcome {
    /// Whether the run's resource counter dropped to zero or below.
    pub fn exhausts(&self) -> bool {
        self.l <= 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Left,
    Right,
    Unroll(usize),
    Value(i64),
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Left => write!(f, "L"),
            Decision::Right => write!(f, "R"),
            Decision::Unroll(n) => write!(f, "{n}"),
            Decision::Value(v) => write!(f, "v:{v}"),
        }
    }
}

/// Resolves every nondeterministic site of one run, in execution order:
/// `L`/`R` for choices, a count for loops, `v:<int>` for `local` initial values.
/// A `local` whose initial value is unobservable takes no entry and starts at 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChoiceScript(pub Vec<Decision>);

impl FromStr for ChoiceScript {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let d = match item {
                "L" | "l" => Decision::Left,
                "R" | "r" => Decision::Right,
                _ => {
                    if let Some(v) = item.strip_prefix("v:") {
                        Decision::Value(v.parse().map_err(|_| format!("bad value `{item}`"))?)
                    } else {
                        Decision::Unroll(item.parse().map_err(|_| format!("bad decision `{item}`"))?)
                    }
                }
            };
            out.push(d);
        }
        Ok(ChoiceScript(out))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("script exhausted at {0}")]
    ScriptExhausted(&'static str),
    #[error("script misshapen: expected {expected}, found `{found}`")]
    ScriptMismatch { expected: &'static str, found: Decision },
    #[error("{0} unused script entries")]
    ScriptLeftover(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

struct Cursor<'a> {
    items: &'a [Decision],
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self, site: &'static str) -> Result<Decision, ExecError> {
        let d = *self.items.get(self.pos).ok_or(ExecError::ScriptExhausted(site))?;
        self.pos += 1;
        Ok(d)
    }
}

fn ck(v: Option<i64>) -> Result<i64, EvalError> {
    v.ok_or(EvalError::Overflow)
}

/// Runs the path selected by `script`. `Ok(None)` means the path is stuck on a
/// failing `assume`.
pub fn exec(c: &Command, s: &State, p: i64, script: &ChoiceScript) -> Result<Option<Outcome>, ExecError> {
    let mut cur = Cursor { items: &script.0, pos: 0 };
    let out = exec_in(c, s.clone(), p, &mut cur)?;
    if out.is_some() && cur.pos < script.0.len() {
        return Err(ExecError::ScriptLeftover(script.0.len() - cur.pos));
    }
    Ok(out)
}

fn exec_in(c: &Command, mut s: State, p: i64, cur: &mut Cursor) -> Result<Option<Outcome>, ExecError> {
    Ok(match c {
        Command::Skip => Some(Outcome { state: s, q: p, l: p }),
        Command::Assign(x, e) => {
            let v = eval_expr(&s, e)?;
            s.set(x, v);
            Some(Outcome { state: s, q: p, l: p })
        }
        Command::ArrayAssign(a, i, e) => {
            let i = eval_expr(&s, i)?;
            let v = eval_expr(&s, e)?;
            s.arrays.entry(a.clone()).or_default().set(i, v);
            Some(Outcome { state: s, q: p, l: p })
        }
        Command::Assume(b) => {
            if eval_bool(&s, b)? {
                Some(Outcome { state: s, q: p, l: p })
            } else {
                None
            }
        }
        Command::Tick(e) => {
            let q = ck(p.checked_sub(eval_expr(&s, e)?))?;
            Some(Outcome { state: s, q, l: p.min(q) })
        }
        Command::Seq(a, b) => match exec_in(a, s, p, cur)? {
            None => None,
            Some(o1) => exec_in(b, o1.state, o1.q, cur)?.map(|o2| Outcome { l: o1.l.min(o2.l), ..o2 }),
        },
        Command::Choice(a, b) => match cur.next("choice")? {
            Decision::Left => exec_in(a, s, p, cur)?,
            Decision::Right => exec_in(b, s, p, cur)?,
            found => return Err(ExecError::ScriptMismatch { expected: "L or R", found }),
        },
        Command::Loop(body, _) => {
            let n = match cur.next("loop")? {
                Decision::Unroll(n) => n,
                found => return Err(ExecError::ScriptMismatch { expected: "unroll count", found }),
            };
            let mut acc = Outcome { state: s, q: p, l: p };
            for _ in 0..n {
                match exec_in(body, acc.state, acc.q, cur)? {
                    None => return Ok(None),
                    Some(o) => acc = Outcome { l: acc.l.min(o.l), ..o },
                }
            }
            Some(acc)
        }
        Command::Local(x, body) if writes_before_read(x, body) || !body.mentions(x) => {
            let outer = s.scalars.get(x).copied();
            s.set(x, 0);
            exec_in(body, s, p, cur)?.map(|mut o| {
                restore(&mut o.state, x, outer);
                o
            })
        }
        Command::Local(x, body) => {
            let v = match cur.next("local")? {
                Decision::Value(v) => v,
                found => return Err(ExecError::ScriptMismatch { expected: "local value", found }),
            };
            let outer = s.scalars.get(x).copied();
            s.set(x, v);
            exec_in(body, s, p, cur)?.map(|mut o| {
                restore(&mut o.state, x, outer);
                o
            })
        }
        Command::If(b, c1, c2) => {
            if eval_bool(&s, b)? {
                exec_in(c1, s, p, cur)?
            } else {
                exec_in(c2, s, p, cur)?
            }
        }
        Command::While(b, body, _) => {
            let mut acc = Outcome { state: s, q: p, l: p };
            while eval_bool(&acc.state, b)? {
                match exec_in(body, acc.state, acc.q, cur)? {
                    None => return Ok(None),
                    Some(o) => acc = Outcome { l: acc.l.min(o.l), ..o },
                }
            }
            Some(acc)
        }
    })
}

fn restore(s: &mut State, x: &str, outer: Option<i64>) {
    match outer {
        Some(v) => s.set(x, v),
        None => {
            s.scalars.remove(x);
        }
    }
}

/// All outcomes reachable within the unroll cap and local-value range.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enumeration {
    pub outcomes: BTreeSet<Outcome>,
    /// Some loop could still iterate when the cap was reached.
    pub truncated: bool,
}

pub fn enumerate(c: &Command, s: &State, p: i64, bounds: &DomainBounds) -> Result<Enumeration, EvalError> {
    let mut truncated = false;
    let start = Outcome { state: s.clone(), q: p, l: p };
    let outcomes = run(c, start, bounds, &mut truncated)?;
    Ok(Enumeration { outcomes, truncated })
}

/// Runs `c` from the configuration `(o.state, o.q)`, folding `o.l` into the
/// resulting minimal levels.
fn run(c: &Command, o: Outcome, b: &DomainBounds, trunc: &mut bool) -> Result<BTreeSet<Outcome>, EvalError> {
    let mut out = BTreeSet::new();
    match c {
        Command::Seq(c1, c2) => {
            for mid in run(c1, o, b, trunc)? {
                out.extend(run(c2, mid, b, trunc)?);
            }
        }
        Command::Choice(c1, c2) => {
            out.extend(run(c1, o.clone(), b, trunc)?);
            out.extend(run(c2, o, b, trunc)?);
        }
        Command::Loop(body, _) => {
            let mut frontier: BTreeSet<Outcome> = BTreeSet::from([o]);
            for _ in 0..b.unroll_cap {
                out.extend(frontier.iter().cloned());
                let mut next = BTreeSet::new();
                for f in frontier {
                    next.extend(run(body, f, b, trunc)?);
                }
                frontier = next;
                if frontier.is_empty() {
                    break;
                }
            }
            if !frontier.is_empty() {
                out.extend(frontier.iter().cloned());
                for f in frontier {
                    if !run(body, f, b, trunc)?.is_empty() {
                        *trunc = true;
                        break;
                    }
                }
            }
        }
        Command::Local(x, body) => {
            let outer = o.state.scalars.get(x).copied();
            let values: Vec<i64> = if writes_before_read(x, body) || !body.mentions(x) {
                vec![b.local_values(x).0]
            } else {
                let (lo, hi) = b.local_values(x);
                (lo..=hi).collect()
            };
            for v in values {
                let mut start = o.clone();
                start.state.set(x, v);
                for mut r in run(body, start, b, trunc)? {
                    restore(&mut r.state, x, outer);
                    out.insert(r);
                }
            }
        }
        Command::While(cond, body, _) => {
            let desugared = Command::seq(
                Command::Loop(Box::new(Command::seq(Command::Assume(cond.clone()), (**body).clone())), None),
                Command::Assume(cond.negate()),
            );
            return run(&desugared, o, b, trunc);
        }
        Command::If(cond, c1, c2) => {
            let chosen = if eval_bool(&o.state, cond)? { c1 } else { c2 };
            return run(chosen, o, b, trunc);
        }
        atomic => {
            let l0 = o.l;
            let mut cur = Cursor { items: &[], pos: 0 };
            if let Some(r) = exec_in(atomic, o.state, o.q, &mut cur).map_err(|e| match e {
                ExecError::Eval(e) => e,
                _ => unreachable!("atomic commands consume no script"),
            })? {
                out.insert(Outcome { l: l0.min(r.l), ..r });
            }
        }
    }
    Ok(out)
}
