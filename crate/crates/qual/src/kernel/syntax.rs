//! Text form of derivations:
//!
//! ```text
//! (B:Seq {}
//!   (B:Tick {P: "5", C: "tick(2);"})
//!   (B:Tick {P: "5 - 2", C: "tick(1);"}))
//! ```
//!
//! Argument values are double-quoted strings with `\"`, `\\` and `\n`
//! escapes. A `;` outside a string starts a comment running to the end of
//! the line. The argument map may be omitted when empty.

use super::{Derivation, KernelError, Rule};
use std::collections::BTreeMap;
use std::fmt;

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> KernelError {
        let line = self.src[..self.pos].matches('\n').count() + 1;
        KernelError::Syntax { line, msg: msg.into() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while !matches!(self.bump(), None | Some('\n')) {}
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), KernelError> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.err(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.err(format!("expected `{want}`, found end of input"))),
        }
    }

    /// Identifier; rule names additionally contain `:` and `◇`.
    fn word(&mut self, rule_name: bool) -> Result<&'a str, KernelError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || (rule_name && matches!(c, ':' | '◇')) {
                self.bump();
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.err("expected a name"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn string(&mut self) -> Result<String, KernelError> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some(c @ ('"' | '\\')) => out.push(c),
                    other => return Err(self.err(format!("bad escape `\\{}`", other.unwrap_or(' ')))),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn args(&mut self) -> Result<BTreeMap<String, String>, KernelError> {
        let mut out = BTreeMap::new();
        self.skip_ws();
        if self.peek() != Some('{') {
            return Ok(out);
        }
        self.bump();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.bump();
            return Ok(out);
        }
        loop {
            let key = self.word(false)?.to_string();
            self.expect(':')?;
            let value = self.string()?;
            if out.insert(key.clone(), value).is_some() {
                return Err(self.err(format!("duplicate argument `{key}`")));
            }
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some('}') => return Ok(out),
                _ => return Err(self.err("expected `,` or `}` in argument map")),
            }
        }
    }

    fn derivation(&mut self) -> Result<Derivation, KernelError> {
        self.expect('(')?;
        let name = self.word(true)?;
        let rule: Rule = name.parse().map_err(|m: String| self.err(m))?;
        let args = self.args()?;
        let mut premises = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('(') => premises.push(self.derivation()?),
                Some(')') => {
                    self.bump();
                    return Ok(Derivation { rule, args, premises });
                }
                Some(c) => return Err(self.err(format!("unexpected `{c}`"))),
                None => return Err(self.err("unclosed derivation")),
            }
        }
    }
}

pub fn parse_derivation(src: &str) -> Result<Derivation, KernelError> {
    let mut r = Reader { src, pos: 0 };
    let d = r.derivation()?;
    r.skip_ws();
    if r.pos < src.len() {
        return Err(r.err("trailing input after derivation"));
    }
    Ok(d)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Derivation {
    fn write(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        write!(f, "{:indent$}({}", "", self.rule, indent = depth * 2)?;
        if !self.args.is_empty() {
            let items: Vec<String> = self.args.iter().map(|(k, v)| format!("{k}: {}", quote(v))).collect();
            write!(f, " {{{}}}", items.join(", "))?;
        }
        for p in &self.premises {
            writeln!(f)?;
            p.write(f, depth + 1)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "(B:Seq\n  (B:Tick {C: \"tick(2);\", P: \"5\"})\n  (B:Tick {C: \"tick(1);\", P: \"a \\\"quoted\\\" value\"}))";
        let d = parse_derivation(text).unwrap();
        assert_eq!(d.premises.len(), 2);
        assert_eq!(d.premises[1].args["P"], "a \"quoted\" value");
        assert_eq!(d.to_string(), text);
        assert_eq!(parse_derivation(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn comments_and_empty_maps() {
        let d = parse_derivation("; leading comment\n(F:Seq {} ; trailing\n (F:Skip {P: \"0\"}) (F:Skip {P: \"0\"}))")
            .unwrap();
        assert!(d.args.is_empty());
        assert_eq!(d.premises.len(), 2);
    }

    #[test]
    fn errors_carry_lines() {
        match parse_derivation("(F:Skip\n {P: 0})") {
            Err(KernelError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_derivation("(F:Nope)").is_err());
        assert!(parse_derivation("(B:SeqL)").is_err());
        assert!(parse_derivation("(F:Skip) extra").is_err());
    }
}
