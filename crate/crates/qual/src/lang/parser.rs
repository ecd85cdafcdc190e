use super::analysis::desugar;
use super::ast::*;
use super::lexer::{tokenize, SyntaxError, Tok, Token};
use super::Program;
use crate::assert::Factored;
use crate::verify::{AnnotationSet, LoopSpec};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { name: Name, line: usize, col: usize },
    #[error("{line}:{col}: quantifier or conditional term in executable position")]
    QuantifierInCode { line: usize, col: usize },
}

type PResult<T> = Result<T, ParseError>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    globals: Vec<Decl>,
    scopes: Vec<Vec<Name>>,
    index_stack: Vec<Name>,
    loops: Vec<LoopSpec>,
    pending_loop: Option<LoopSpec>,
    pre: Option<Factored>,
    post: Option<Factored>,
    check: bool,
}

/// Parse an annotated program and desugar its body.
pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src, true)?;
    let body = p.parse_seq(true)?;
    p.expect_eof()?;
    if p.pending_loop.is_some() {
        return Err(p.err("loop annotation not followed by a loop"));
    }
    let program = Program {
        decls: p.globals.clone(),
        body: desugar(&body),
        surface: body,
        annotations: AnnotationSet { pre: p.pre.take(), post: p.post.take(), loops: p.loops.clone() },
    };
    let kinds = program.kinds();
    for f in program.annotations.pre.iter().chain(program.annotations.post.iter()) {
        check_factored(f, &kinds, &[], 1, 1)?;
    }
    Ok(program)
}

/// Parse a command without declaration checks (used for derivation files).
pub fn parse_command(src: &str) -> PResult<Command> {
    let mut p = Parser::new(src, false)?;
    let c = p.parse_seq(false)?;
    p.expect_eof()?;
    Ok(desugar(&c))
}

pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src, false)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_bool(src: &str) -> PResult<BoolExpr> {
    let mut p = Parser::new(src, false)?;
    let b = p.bool_expr()?;
    p.expect_eof()?;
    Ok(b)
}

pub fn parse_factored(src: &str) -> PResult<Factored> {
    let mut p = Parser::new(src, false)?;
    let f = p.factored()?;
    p.expect_eof()?;
    Ok(f)
}

/// Free names of a boolean expression with the sort of each occurrence.
pub fn sorted_free_names(b: &BoolExpr) -> BTreeMap<Name, DeclKind> {
    let mut out = BTreeMap::new();
    walk_bool(b, &mut Vec::new(), &mut out);
    out
}

pub fn sorted_free_names_expr(e: &Expr) -> BTreeMap<Name, DeclKind> {
    let mut out = BTreeMap::new();
    walk_expr(e, &mut Vec::new(), &mut out);
    out
}

fn walk_expr(e: &Expr, bound: &mut Vec<Name>, out: &mut BTreeMap<Name, DeclKind>) {
    match e {
        Expr::Num(_) => {}
        Expr::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone(), DeclKind::Scalar);
            }
        }
        Expr::Read(a, i) => {
            walk_array(a, bound, out);
            walk_expr(i, bound, out);
        }
        Expr::Neg(a) | Expr::Div(a, _) => walk_expr(a, bound, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            walk_expr(a, bound, out);
            walk_expr(b, bound, out);
        }
        Expr::Ite(c, a, b) => {
            walk_bool(c, bound, out);
            walk_expr(a, bound, out);
            walk_expr(b, bound, out);
        }
    }
}

fn walk_array(a: &ArrayExpr, bound: &mut Vec<Name>, out: &mut BTreeMap<Name, DeclKind>) {
    match a {
        ArrayExpr::Var(x) => {
            out.insert(x.clone(), DeclKind::Array);
        }
        ArrayExpr::Store(inner, i, v) => {
            walk_array(inner, bound, out);
            walk_expr(i, bound, out);
            walk_expr(v, bound, out);
        }
    }
}

fn walk_bool(b: &BoolExpr, bound: &mut Vec<Name>, out: &mut BTreeMap<Name, DeclKind>) {
    match b {
        BoolExpr::Const(_) => {}
        BoolExpr::Cmp(_, x, y) => {
            walk_expr(x, bound, out);
            walk_expr(y, bound, out);
        }
        BoolExpr::Not(x) => walk_bool(x, bound, out),
        BoolExpr::And(x, y) | BoolExpr::Or(x, y) => {
            walk_bool(x, bound, out);
            walk_bool(y, bound, out);
        }
        BoolExpr::Forall(i, lo, hi, body) | BoolExpr::Exists(i, lo, hi, body) => {
            walk_expr(lo, bound, out);
            walk_expr(hi, bound, out);
            bound.push(i.clone());
            walk_bool(body, bound, out);
            bound.pop();
        }
        BoolExpr::ArrayEq(x, y) => {
            walk_array(x, bound, out);
            walk_array(y, bound, out);
        }
    }
}

fn check_names(
    found: BTreeMap<Name, DeclKind>,
    kinds: &BTreeMap<Name, DeclKind>,
    extra_scalars: &[Name],
    line: usize,
    col: usize,
) -> PResult<()> {
    for (name, kind) in found {
        let ok = kinds.get(&name) == Some(&kind) || (kind == DeclKind::Scalar && extra_scalars.contains(&name));
        if !ok {
            return Err(ParseError::Undeclared { name, line, col });
        }
    }
    Ok(())
}

fn check_factored(
    f: &Factored,
    kinds: &BTreeMap<Name, DeclKind>,
    extra: &[Name],
    line: usize,
    col: usize,
) -> PResult<()> {
    check_names(sorted_free_names(&f.spec), kinds, extra, line, col)?;
    check_names(sorted_free_names_expr(&f.res), kinds, extra, line, col)
}

fn expr_is_code(e: &Expr) -> bool {
    !e.has_quantifier() && !has_ite(e)
}

fn has_ite(e: &Expr) -> bool {
    match e {
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Read(a, i) => array_has_ite(a) || has_ite(i),
        Expr::Neg(a) | Expr::Div(a, _) => has_ite(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => has_ite(a) || has_ite(b),
        Expr::Ite(..) => true,
    }
}

fn array_has_ite(a: &ArrayExpr) -> bool {
    match a {
        ArrayExpr::Var(_) => false,
        ArrayExpr::Store(..) => true,
    }
}

fn bool_is_code(b: &BoolExpr) -> bool {
    match b {
        BoolExpr::Const(_) => true,
        BoolExpr::Cmp(_, x, y) => expr_is_code(x) && expr_is_code(y),
        BoolExpr::Not(x) => bool_is_code(x),
        BoolExpr::And(x, y) | BoolExpr::Or(x, y) => bool_is_code(x) && bool_is_code(y),
        BoolExpr::Forall(..) | BoolExpr::Exists(..) | BoolExpr::ArrayEq(..) => false,
    }
}

impl Parser {
    pub(crate) fn new(src: &str, check: bool) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            globals: Vec::new(),
            scopes: Vec::new(),
            index_stack: Vec::new(),
            loops: Vec::new(),
            pending_loop: None,
            pre: None,
            post: None,
            check,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax(SyntaxError { line, col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {}", describe(self.peek()))))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(x) if !is_reserved(&x) => {
                self.bump();
                Ok(x)
            }
            other => Err(self.err(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn int_lit(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.bump() {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => Err(self.err(format!("expected integer literal, found {}", describe(&other)))),
        }
    }

    // ---------- scope bookkeeping ----------

    fn kinds_in_scope(&self) -> BTreeMap<Name, DeclKind> {
        let mut kinds: BTreeMap<Name, DeclKind> = self.globals.iter().map(|d| (d.name.clone(), d.kind)).collect();
        for scope in &self.scopes {
            for x in scope {
                kinds.insert(x.clone(), DeclKind::Scalar);
            }
        }
        kinds
    }

    fn check_code_expr(&self, e: &Expr, at: (usize, usize)) -> PResult<()> {
        if !self.check {
            return Ok(());
        }
        if !expr_is_code(e) {
            return Err(ParseError::QuantifierInCode { line: at.0, col: at.1 });
        }
        check_names(sorted_free_names_expr(e), &self.kinds_in_scope(), &[], at.0, at.1)
    }

    fn check_code_bool(&self, b: &BoolExpr, at: (usize, usize)) -> PResult<()> {
        if !self.check {
            return Ok(());
        }
        if !bool_is_code(b) {
            return Err(ParseError::QuantifierInCode { line: at.0, col: at.1 });
        }
        check_names(sorted_free_names(b), &self.kinds_in_scope(), &[], at.0, at.1)
    }

    fn check_target(&self, x: &str, kind: DeclKind, at: (usize, usize)) -> PResult<()> {
        if self.check && self.kinds_in_scope().get(x) != Some(&kind) {
            return Err(ParseError::Undeclared { name: x.to_string(), line: at.0, col: at.1 });
        }
        Ok(())
    }

    // ---------- statements ----------

    /// Parse statements up to `}` or end of input.
    fn parse_seq(&mut self, top: bool) -> PResult<Command> {
        let mut items = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Sym("}") => break,
                Tok::PragmaStart(kw) => self.pragma(&kw, top)?,
                Tok::Ident(kw) if kw == "int" => {
                    let at = self.here();
                    self.bump();
                    let x = self.ident()?;
                    let is_array = if self.eat_sym("[") {
                        self.expect_sym("]")?;
                        true
                    } else {
                        false
                    };
                    let init = if self.eat_sym("=") {
                        if is_array {
                            return Err(self.err("array declarations take no initializer"));
                        }
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    self.expect_sym(";")?;
                    if top {
                        if self.globals.iter().any(|d| d.name == x) {
                            return Err(self.err(format!("`{x}` declared twice")));
                        }
                        let kind = if is_array { DeclKind::Array } else { DeclKind::Scalar };
                        self.globals.push(Decl { name: x.clone(), kind });
                        if let Some(e) = init {
                            self.check_code_expr(&e, at)?;
                            items.push(Command::Assign(x, e));
                        }
                    } else {
                        if is_array {
                            return Err(ParseError::Syntax(SyntaxError {
                                line: at.0,
                                col: at.1,
                                msg: "arrays can only be declared at top level".into(),
                            }));
                        }
                        self.scopes.push(vec![x.clone()]);
                        let result = (|| -> PResult<Command> {
                            let init_cmd = match init {
                                Some(e) => {
                                    self.check_code_expr(&e, at)?;
                                    Some(Command::Assign(x.clone(), e))
                                }
                                None => None,
                            };
                            let rest = self.parse_seq(false)?;
                            Ok(match (init_cmd, rest) {
                                (None, rest) => rest,
                                (Some(a), Command::Skip) => a,
                                (Some(a), rest) => Command::seq(a, rest),
                            })
                        })();
                        self.scopes.pop();
                        items.push(Command::Local(x, Box::new(result?)));
                        break;
                    }
                }
                _ => {
                    let s = self.statement()?;
                    items.push(s);
                }
            }
        }
        Ok(Command::seq_all(items))
    }

    fn pragma(&mut self, kw: &str, top: bool) -> PResult<()> {
        let at = self.here();
        self.bump();
        match kw {
            "pre" | "post" => {
                if !top {
                    return Err(self.err(format!("`{kw}` annotation must be at top level")));
                }
                let f = self.factored()?;
                let slot = if kw == "pre" { &mut self.pre } else { &mut self.post };
                if slot.is_some() {
                    return Err(ParseError::Syntax(SyntaxError {
                        line: at.0,
                        col: at.1,
                        msg: format!("duplicate `{kw}` annotation"),
                    }));
                }
                *slot = Some(f);
            }
            _ => {
                if self.pending_loop.is_some() {
                    return Err(self.err("two loop annotations for one loop"));
                }
                let spec = self.loop_spec(at.0)?;
                if self.check {
                    let kinds = self.kinds_in_scope();
                    if kinds.contains_key(&spec.index) || self.index_stack.contains(&spec.index) {
                        return Err(ParseError::Syntax(SyntaxError {
                            line: at.0,
                            col: at.1,
                            msg: format!("subvariant index `{}` is not fresh", spec.index),
                        }));
                    }
                    let mut extra = self.index_stack.clone();
                    check_names(sorted_free_names_expr(&spec.iters), &kinds, &extra, at.0, at.1)?;
                    if let Some(m) = &spec.exhaust {
                        check_names(sorted_free_names_expr(m), &kinds, &extra, at.0, at.1)?;
                    }
                    if let Some(pf) = &spec.prefix {
                        check_factored(pf, &kinds, &extra, at.0, at.1)?;
                    }
                    extra.push(spec.index.clone());
                    check_factored(&spec.subvar, &kinds, &extra, at.0, at.1)?;
                }
                self.pending_loop = Some(spec);
            }
        }
        if !matches!(self.peek(), Tok::PragmaEnd) {
            return Err(self.err(format!("unexpected {} in annotation", describe(self.peek()))));
        }
        self.bump();
        Ok(())
    }

    fn loop_spec(&mut self, line: usize) -> PResult<LoopSpec> {
        let mut iters = None;
        let mut subvar = None;
        let mut prefix = None;
        let mut exhaust = None;
        loop {
            if self.eat_kw("iters") {
                self.expect_sym(":")?;
                iters = Some(self.expr()?);
            } else if self.eat_kw("subvar") {
                let n = self.ident()?;
                self.expect_sym("->")?;
                subvar = Some((n, self.factored()?));
            } else if self.eat_kw("prefix") {
                prefix = Some(self.factored()?);
            } else if self.eat_kw("exhaust") {
                self.expect_sym(":")?;
                exhaust = Some(self.expr()?);
            } else {
                return Err(self.err(format!(
                    "expected `iters`, `subvar`, `prefix` or `exhaust`, found {}",
                    describe(self.peek())
                )));
            }
            if !self.eat_sym(";") {
                break;
            }
            if matches!(self.peek(), Tok::PragmaEnd) {
                break;
            }
        }
        let iters = iters.ok_or_else(|| self.err("loop annotation lacks `iters`"))?;
        let (index, subvar) = subvar.ok_or_else(|| self.err("loop annotation lacks `subvar`"))?;
        Ok(LoopSpec { iters, index, subvar, prefix, exhaust, line })
    }

    fn block_or_stmt(&mut self) -> PResult<Command> {
        if self.is_sym("{") {
            self.block()
        } else {
            self.statement()
        }
    }

    fn block(&mut self) -> PResult<Command> {
        self.expect_sym("{")?;
        self.scopes.push(Vec::new());
        let body = self.parse_seq(false);
        self.scopes.pop();
        let body = body?;
        self.expect_sym("}")?;
        Ok(body)
    }

    fn take_loop_tag(&mut self) -> Option<usize> {
        self.pending_loop.take().map(|spec| {
            self.loops.push(spec);
            self.loops.len() - 1
        })
    }

    fn loop_body(&mut self, tag: Option<usize>) -> PResult<Command> {
        let pushed = tag.map(|t| self.loops[t].index.clone());
        if let Some(n) = &pushed {
            self.index_stack.push(n.clone());
        }
        let body = self.block_or_stmt();
        if pushed.is_some() {
            self.index_stack.pop();
        }
        body
    }

    fn statement(&mut self) -> PResult<Command> {
        let at = self.here();
        if self.pending_loop.is_some() && !self.is_kw("while") && !self.is_kw("loop") {
            return Err(self.err("loop annotation must be followed by `while` or `loop`"));
        }
        if self.is_sym("{") {
            return self.block();
        }
        let kw = match self.peek() {
            Tok::Ident(x) => x.clone(),
            other => return Err(self.err(format!("expected statement, found {}", describe(other)))),
        };
        match kw.as_str() {
            "skip" => {
                self.bump();
                self.expect_sym(";")?;
                Ok(Command::Skip)
            }
            "assume" => {
                self.bump();
                self.expect_sym("(")?;
                let b = self.bool_expr()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                self.check_code_bool(&b, at)?;
                Ok(Command::Assume(b))
            }
            "tick" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                self.check_code_expr(&e, at)?;
                Ok(Command::Tick(e))
            }
            "if" => {
                self.bump();
                self.expect_sym("(")?;
                let demon = self.is_kw("demon") && matches!(self.peek_at(1), Tok::Sym(")"));
                let cond = if demon {
                    self.bump();
                    None
                } else {
                    Some(self.bool_expr()?)
                };
                self.expect_sym(")")?;
                let then = self.block_or_stmt()?;
                let els = if self.eat_kw("else") { self.block_or_stmt()? } else { Command::Skip };
                match cond {
                    None => Ok(Command::choice(then, els)),
                    Some(b) => {
                        self.check_code_bool(&b, at)?;
                        Ok(Command::If(b, Box::new(then), Box::new(els)))
                    }
                }
            }
            "while" => {
                self.bump();
                let tag = self.take_loop_tag();
                self.expect_sym("(")?;
                let b = self.bool_expr()?;
                self.expect_sym(")")?;
                self.check_code_bool(&b, at)?;
                let body = self.loop_body(tag)?;
                Ok(Command::While(b, Box::new(body), tag))
            }
            "loop" => {
                self.bump();
                let tag = self.take_loop_tag();
                let body = self.loop_body(tag)?;
                Ok(Command::Loop(Box::new(body), tag))
            }
            "choose" => {
                self.bump();
                let a = self.block_or_stmt()?;
                self.expect_kw("or")?;
                let b = self.block_or_stmt()?;
                Ok(Command::choice(a, b))
            }
            _ => {
                let x = self.ident()?;
                if self.eat_sym("[") {
                    let idx = self.expr()?;
                    self.expect_sym("]")?;
                    self.expect_sym("=")?;
                    let v = self.expr()?;
                    self.expect_sym(";")?;
                    self.check_target(&x, DeclKind::Array, at)?;
                    self.check_code_expr(&idx, at)?;
                    self.check_code_expr(&v, at)?;
                    Ok(Command::ArrayAssign(x, idx, v))
                } else {
                    self.expect_sym("=")?;
                    let e = self.expr()?;
                    self.expect_sym(";")?;
                    self.check_target(&x, DeclKind::Scalar, at)?;
                    self.check_code_expr(&e, at)?;
                    Ok(Command::Assign(x, e))
                }
            }
        }
    }

    // ---------- assertions ----------

    pub(crate) fn factored(&mut self) -> PResult<Factored> {
        self.expect_sym("[")?;
        let spec = self.bool_expr()?;
        self.expect_sym(";")?;
        let res = self.expr()?;
        self.expect_sym("]")?;
        Ok(Factored { spec, res })
    }

    pub(crate) fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_and()?;
        while self.eat_sym("||") {
            let rhs = self.bool_and()?;
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bool_and(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_not()?;
        while self.eat_sym("&&") {
            let rhs = self.bool_not()?;
            lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bool_not(&mut self) -> PResult<BoolExpr> {
        if self.eat_sym("!") {
            Ok(BoolExpr::Not(Box::new(self.bool_not()?)))
        } else {
            self.bool_atom()
        }
    }

    fn bool_atom(&mut self) -> PResult<BoolExpr> {
        if self.eat_kw("true") || self.eat_kw("top") {
            return Ok(BoolExpr::Const(true));
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::Const(false));
        }
        for (kw, is_forall) in [("forall", true), ("exists", false)] {
            if self.eat_kw(kw) {
                let i = self.ident()?;
                self.expect_kw("in")?;
                self.expect_sym("[")?;
                let lo = self.expr()?;
                self.expect_sym(",")?;
                let hi = self.expr()?;
                self.expect_sym(")")?;
                self.expect_sym(".")?;
                let body = Box::new(self.bool_expr()?);
                return Ok(if is_forall {
                    BoolExpr::Forall(i, lo, hi, body)
                } else {
                    BoolExpr::Exists(i, lo, hi, body)
                });
            }
        }
        if self.is_kw("if") {
            let save = self.pos;
            self.bump();
            let c = self.bool_expr()?;
            if self.eat_kw("then") {
                let save_then = self.pos;
                if let Ok(a) = self.bool_expr() {
                    if self.eat_kw("else") {
                        if let Ok(b) = self.bool_expr() {
                            if !self.starts_arith_continuation() {
                                return Ok(BoolExpr::Or(
                                    Box::new(BoolExpr::And(Box::new(c.clone()), Box::new(a))),
                                    Box::new(BoolExpr::And(Box::new(c.negate()), Box::new(b))),
                                ));
                            }
                        }
                    }
                }
                let _ = save_then;
            }
            self.pos = save;
        }
        if self.is_kw("same") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            let a = self.array_term()?;
            self.expect_sym(",")?;
            let b = self.array_term()?;
            self.expect_sym(")")?;
            return Ok(BoolExpr::ArrayEq(a, b));
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.bool_expr() {
                if self.eat_sym(")") && !self.starts_arith_continuation() {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            other => return Err(self.err(format!("expected comparison, found {}", describe(other)))),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(BoolExpr::Cmp(op, lhs, rhs))
    }

    fn starts_arith_continuation(&self) -> bool {
        matches!(self.peek(), Tok::Sym("+" | "-" | "*" | "/" | "==" | "!=" | "<" | "<=" | ">" | ">=" | "["))
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym("+") {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat_sym("-") {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    pub(crate) fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym("*") {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.is_sym("/") {
                self.bump();
                let at = self.here();
                let d = self.int_lit()?;
                if d == 0 {
                    return Err(ParseError::Syntax(SyntaxError {
                        line: at.0,
                        col: at.1,
                        msg: "division by zero".into(),
                    }));
                }
                lhs = Expr::Div(Box::new(lhs), d);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            if let Tok::Int(n) = self.peek_at(1).clone() {
                self.bump();
                self.bump();
                return Ok(Expr::Num(-n));
            }
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let c = self.bool_expr()?;
                self.expect_kw("then")?;
                let a = self.expr()?;
                self.expect_kw("else")?;
                let b = self.expr()?;
                Ok(Expr::Ite(Box::new(c), Box::new(a), Box::new(b)))
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                if self.is_sym("[") || self.is_sym("{") {
                    let mut arr = ArrayExpr::Var(x);
                    while self.eat_sym("{") {
                        let i = self.expr()?;
                        self.expect_sym("->")?;
                        let v = self.expr()?;
                        self.expect_sym("}")?;
                        arr = ArrayExpr::Store(Box::new(arr), Box::new(i), Box::new(v));
                    }
                    self.expect_sym("[")?;
                    let idx = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Read(Box::new(arr), Box::new(idx)))
                } else {
                    Ok(Expr::Var(x))
                }
            }
            other => Err(self.err(format!("expected expression, found {}", describe(&other)))),
        }
    }

    fn array_term(&mut self) -> PResult<ArrayExpr> {
        let mut arr = ArrayExpr::Var(self.ident()?);
        while self.eat_sym("{") {
            let i = self.expr()?;
            self.expect_sym("->")?;
            let v = self.expr()?;
            self.expect_sym("}")?;
            arr = ArrayExpr::Store(Box::new(arr), Box::new(i), Box::new(v));
        }
        Ok(arr)
    }

    pub(crate) fn peek_tok(&self) -> &Tok {
        self.peek()
    }

    pub(crate) fn peek_tok_at(&self, k: usize) -> &Tok {
        self.peek_at(k)
    }

    pub(crate) fn advance(&mut self) {
        self.bump();
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        self.err(msg)
    }

    pub(crate) fn expect(&mut self, s: &str) -> PResult<()> {
        self.expect_sym(s)
    }
}

const RESERVED: [&str; 22] = [
    "int", "if", "else", "while", "skip", "assume", "tick", "choose", "or", "loop", "forall", "exists", "in", "then",
    "top", "true", "false", "min", "max", "sup", "inf", "oo",
];

pub(crate) fn is_reserved(x: &str) -> bool {
    RESERVED.contains(&x)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(x) => format!("`{x}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::PragmaStart(k) => format!("annotation `{k}`"),
        Tok::PragmaEnd => "end of annotation".into(),
        Tok::Eof => "end of input".into(),
    }
}
