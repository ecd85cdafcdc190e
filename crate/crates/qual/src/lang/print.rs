//! Printer whose output re-parses to the identical AST.

use super::ast::*;
use super::Program;
use crate::assert::Factored;
use crate::verify::LoopSpec;
use std::fmt::{self, Display, Write};

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        _ => 3,
    }
}

fn write_expr(f: &mut impl Write, e: &Expr, min_prec: u8) -> fmt::Result {
    let paren = expr_prec(e) < min_prec;
    if paren {
        f.write_char('(')?;
    }
    match e {
        Expr::Num(n) => write!(f, "{n}")?,
        Expr::Var(x) => f.write_str(x)?,
        Expr::Read(a, i) => {
            write_array(f, a)?;
            f.write_char('[')?;
            write_expr(f, i, 0)?;
            f.write_char(']')?;
        }
        Expr::Neg(a) => {
            f.write_str("-(")?;
            write_expr(f, a, 0)?;
            f.write_char(')')?;
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write_expr(f, a, 1)?;
            f.write_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " })?;
            write_expr(f, b, 2)?;
        }
        Expr::Mul(a, b) => {
            write_expr(f, a, 2)?;
            f.write_str(" * ")?;
            write_expr(f, b, 3)?;
        }
        Expr::Div(a, d) => {
            write_expr(f, a, 2)?;
            write!(f, " / {d}")?;
        }
        Expr::Ite(c, a, b) => {
            f.write_str("(if ")?;
            write_bool(f, c, 0)?;
            f.write_str(" then ")?;
            write_expr(f, a, 0)?;
            f.write_str(" else ")?;
            write_expr(f, b, 0)?;
            f.write_char(')')?;
        }
    }
    if paren {
        f.write_char(')')?;
    }
    Ok(())
}

fn write_array(f: &mut impl Write, a: &ArrayExpr) -> fmt::Result {
    match a {
        ArrayExpr::Var(x) => f.write_str(x),
        ArrayExpr::Store(inner, i, v) => {
            write_array(f, inner)?;
            f.write_char('{')?;
            write_expr(f, i, 0)?;
            f.write_str(" -> ")?;
            write_expr(f, v, 0)?;
            f.write_char('}')
        }
    }
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        _ => 3,
    }
}

fn write_bool(f: &mut impl Write, b: &BoolExpr, min_prec: u8) -> fmt::Result {
    let paren = bool_prec(b) < min_prec;
    if paren {
        f.write_char('(')?;
    }
    match b {
        BoolExpr::Const(true) => f.write_str("true")?,
        BoolExpr::Const(false) => f.write_str("false")?,
        BoolExpr::Cmp(op, x, y) => {
            write_expr(f, x, 0)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, y, 0)?;
        }
        BoolExpr::Not(x) => {
            f.write_char('!')?;
            match **x {
                BoolExpr::Const(_) | BoolExpr::Not(_) | BoolExpr::ArrayEq(..) => write_bool(f, x, 3)?,
                _ => {
                    f.write_char('(')?;
                    write_bool(f, x, 0)?;
                    f.write_char(')')?;
                }
            }
        }
        BoolExpr::Or(x, y) => {
            write_bool(f, x, 1)?;
            f.write_str(" || ")?;
            write_bool(f, y, 2)?;
        }
        BoolExpr::And(x, y) => {
            write_bool(f, x, 2)?;
            f.write_str(" && ")?;
            write_bool(f, y, 3)?;
        }
        BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
            let kw = if matches!(b, BoolExpr::Forall(..)) { "forall" } else { "exists" };
            write!(f, "({kw} {i} in [")?;
            write_expr(f, lo, 0)?;
            f.write_str(", ")?;
            write_expr(f, hi, 0)?;
            f.write_str("). ")?;
            write_bool(f, body, 0)?;
            f.write_char(')')?;
        }
        BoolExpr::ArrayEq(x, y) => {
            f.write_str("same(")?;
            write_array(f, x)?;
            f.write_str(", ")?;
            write_array(f, y)?;
            f.write_char(')')?;
        }
    }
    if paren {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Display for ArrayExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_array(f, self)
    }
}

impl Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bool(f, self, 0)
    }
}

impl Display for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}; {}]", self.spec, self.res)
    }
}

struct Printer<'a> {
    out: String,
    loops: &'a [LoopSpec],
}

impl Printer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    /// Prints `c` as a statement list, flattening the right spine of `Seq`.
    fn seq(&mut self, c: &Command, depth: usize) {
        match c {
            Command::Seq(a, b) => {
                self.stmt(a, depth);
                self.seq(b, depth);
            }
            _ => self.stmt(c, depth),
        }
    }

    fn block(&mut self, head: &str, c: &Command, depth: usize) {
        self.line(depth, &format!("{head}{{"));
        self.seq(c, depth + 1);
        self.line(depth, "}");
    }

    fn loop_pragma(&mut self, tag: Option<usize>, depth: usize) {
        if let Some(spec) = tag.and_then(|t| self.loops.get(t)) {
            let mut text = format!("//@ loop iters: {}; subvar {} -> {}", spec.iters, spec.index, spec.subvar);
            if let Some(p) = &spec.prefix {
                write!(text, "; prefix {p}").unwrap();
            }
            if let Some(m) = &spec.exhaust {
                write!(text, "; exhaust: {m}").unwrap();
            }
            self.line(depth, &text);
        }
    }

    fn stmt(&mut self, c: &Command, depth: usize) {
        match c {
            Command::Skip => self.line(depth, "skip;"),
            Command::Assign(x, e) => self.line(depth, &format!("{x} = {e};")),
            Command::ArrayAssign(a, i, v) => self.line(depth, &format!("{a}[{i}] = {v};")),
            Command::Assume(b) => self.line(depth, &format!("assume({b});")),
            Command::Tick(e) => self.line(depth, &format!("tick({e});")),
            Command::Seq(..) => self.block("", c, depth),
            Command::Choice(a, b) => {
                self.block("choose ", a, depth);
                self.block("or ", b, depth);
            }
            Command::Loop(body, tag) => {
                self.loop_pragma(*tag, depth);
                self.block("loop ", body, depth);
            }
            Command::Local(x, body) => {
                self.line(depth, "{");
                self.line(depth + 1, &format!("int {x};"));
                self.seq(body, depth + 1);
                self.line(depth, "}");
            }
            Command::If(b, c1, c2) => {
                self.block(&format!("if ({b}) "), c1, depth);
                self.block("else ", c2, depth);
            }
            Command::While(b, body, tag) => {
                self.loop_pragma(*tag, depth);
                self.block(&format!("while ({b}) "), body, depth);
            }
        }
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer { out: String::new(), loops: &[] };
        p.seq(self, 0);
        f.write_str(p.out.trim_end())
    }
}

/// Prints a program: declarations, then pre/post annotations, then the body.
pub fn print_program(prog: &Program) -> String {
    let mut p = Printer { out: String::new(), loops: &prog.annotations.loops };
    for d in &prog.decls {
        match d.kind {
            DeclKind::Scalar => p.line(0, &format!("int {};", d.name)),
            DeclKind::Array => p.line(0, &format!("int {}[];", d.name)),
        }
    }
    if let Some(pre) = &prog.annotations.pre {
        p.line(0, &format!("//@ pre {pre}"));
    }
    if let Some(post) = &prog.annotations.post {
        p.line(0, &format!("//@ post {post}"));
    }
    if !matches!(prog.body, Command::Skip) {
        p.seq(&prog.body, 0);
    }
    p.out
}
