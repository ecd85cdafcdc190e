use super::{Res, NEG_INF, POS_INF};
use crate::lang::lexer::Tok;
use crate::lang::parser::{ParseError, Parser};

/// Parses the resource-function syntax: `min(R, R)`, `max(R, R)`, `[B]`,
/// `(sup x. R)`, `(inf x. R)`, `+oo`, `-oo`, `R + R`, `R - e` and plain
/// integer expressions.
pub fn parse_res(src: &str) -> Result<Res, ParseError> {
    let mut p = Parser::new(src, false)?;
    let r = res_sum(&mut p)?;
    p.expect_eof()?;
    Ok(r)
}

fn is_ident(t: &Tok, s: &str) -> bool {
    matches!(t, Tok::Ident(x) if x == s)
}

fn res_sum(p: &mut Parser) -> Result<Res, ParseError> {
    let mut lhs = res_unit(p)?;
    loop {
        if matches!(p.peek_tok(), Tok::Sym("+")) && !is_ident(p.peek_tok_at(1), "oo") {
            p.advance();
            let rhs = res_unit(p)?;
            lhs = Res::add(lhs, rhs);
        } else if matches!(p.peek_tok(), Tok::Sym("-")) && !is_ident(p.peek_tok_at(1), "oo") {
            p.advance();
            match res_unit(p)? {
                Res::Arith(e) => lhs = Res::sub(lhs, e),
                _ => return Err(p.error("only finite expressions can be subtracted")),
            }
        } else {
            return Ok(lhs);
        }
    }
}

fn res_unit(p: &mut Parser) -> Result<Res, ParseError> {
    let t0 = p.peek_tok().clone();
    let t1 = p.peek_tok_at(1).clone();
    if is_ident(&t0, "oo") {
        p.advance();
        return Ok(POS_INF);
    }
    if matches!(t0, Tok::Sym("+" | "-")) && is_ident(&t1, "oo") {
        p.advance();
        p.advance();
        return Ok(if matches!(t0, Tok::Sym("+")) { POS_INF } else { NEG_INF });
    }
    if (is_ident(&t0, "min") || is_ident(&t0, "max")) && matches!(t1, Tok::Sym("(")) {
        p.advance();
        p.advance();
        let a = res_sum(p)?;
        p.expect(",")?;
        let b = res_sum(p)?;
        p.expect(")")?;
        return Ok(if is_ident(&t0, "min") {
            Res::Min(Box::new(a), Box::new(b))
        } else {
            Res::Max(Box::new(a), Box::new(b))
        });
    }
    if matches!(t0, Tok::Sym("[")) {
        p.advance();
        let b = p.bool_expr()?;
        p.expect("]")?;
        return Ok(Res::Guard(b));
    }
    if matches!(t0, Tok::Sym("(")) {
        if is_ident(&t1, "sup") || is_ident(&t1, "inf") {
            p.advance();
            p.advance();
            let x = p.ident()?;
            p.expect(".")?;
            let body = res_sum(p)?;
            p.expect(")")?;
            return Ok(if is_ident(&t1, "sup") { Res::sup(&x, body) } else { Res::inf(&x, body) });
        }
        let save = p.position();
        if let Ok(e) = p.term() {
            if !matches!(p.peek_tok(), Tok::Sym("," | ")" | "+" | "-" | "]") | Tok::Eof) {
                return Err(p.error("unexpected token after expression"));
            }
            return Ok(Res::Arith(e));
        }
        p.reset(save);
        p.advance();
        let r = res_sum(p)?;
        p.expect(")")?;
        return Ok(r);
    }
    Ok(Res::Arith(p.term()?))
}
