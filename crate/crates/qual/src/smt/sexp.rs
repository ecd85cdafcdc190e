use std::fmt;

/// S-expression used both for emitted SMT-LIB terms and for parsing solver output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

impl Sx {
    pub fn atom(s: impl Into<String>) -> Sx {
        Sx::Atom(s.into())
    }

    pub fn int(n: i64) -> Sx {
        if n < 0 {
            Sx::List(vec![Sx::atom("-"), Sx::atom(n.unsigned_abs().to_string())])
        } else {
            Sx::atom(n.to_string())
        }
    }

    pub fn app(head: &str, args: Vec<Sx>) -> Sx {
        let mut v = Vec::with_capacity(args.len() + 1);
        v.push(Sx::atom(head));
        v.extend(args);
        Sx::List(v)
    }

    pub fn t() -> Sx {
        Sx::atom("true")
    }

    pub fn f() -> Sx {
        Sx::atom("false")
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Sx::Atom(a) if a == "true")
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Sx::Atom(a) if a == "false")
    }

    pub fn and(items: Vec<Sx>) -> Sx {
        let mut out = Vec::new();
        for it in items {
            if it.is_false() {
                return Sx::f();
            }
            if it.is_true() {
                continue;
            }
            match it {
                Sx::List(v) if v.first().is_some_and(|h| h.head_is("and")) => out.extend(v.into_iter().skip(1)),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Sx::t(),
            1 => out.pop().unwrap(),
            _ => Sx::app("and", out),
        }
    }

    pub fn or(items: Vec<Sx>) -> Sx {
        let mut out = Vec::new();
        for it in items {
            if it.is_true() {
                return Sx::t();
            }
            if it.is_false() {
                continue;
            }
            match it {
                Sx::List(v) if v.first().is_some_and(|h| h.head_is("or")) => out.extend(v.into_iter().skip(1)),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Sx::f(),
            1 => out.pop().unwrap(),
            _ => Sx::app("or", out),
        }
    }

    fn head_is(&self, s: &str) -> bool {
        matches!(self, Sx::Atom(a) if a == s)
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Sx::List(v) => match v.first() {
                Some(Sx::Atom(a)) => Some(a),
                _ => None,
            },
            Sx::Atom(_) => None,
        }
    }

    pub fn items(&self) -> &[Sx] {
        match self {
            Sx::List(v) => v,
            Sx::Atom(_) => &[],
        }
    }

    /// Replaces every atom equal to `name`. Bound names are globally unique,
    /// so no capture check is needed.
    pub fn replace(&self, name: &str, with: &Sx) -> Sx {
        match self {
            Sx::Atom(a) if a == name => with.clone(),
            Sx::Atom(_) => self.clone(),
            Sx::List(v) => Sx::List(v.iter().map(|x| x.replace(name, with)).collect()),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sx::Atom(a) => a.parse().ok(),
            Sx::List(v) if v.len() == 2 && v[0].head_is("-") => v[1].as_int().and_then(|n| n.checked_neg()),
            _ => None,
        }
    }
}

impl fmt::Display for Sx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sx::Atom(a) => f.write_str(a),
            Sx::List(v) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every complete s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sx>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() {
        if chars[*pos].is_whitespace() {
            *pos += 1;
        } else if chars[*pos] == ';' {
            while *pos < chars.len() && chars[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<Sx, String> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        None => Err("unexpected end of solver output".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err("unbalanced parentheses in solver output".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sx::List(items));
                    }
                    _ => items.push(parse_one(chars, pos)?),
                }
            }
        }
        Some(')') => Err("unexpected `)` in solver output".into()),
        Some('"') => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() {
                if chars[*pos] == '"' {
                    if chars.get(*pos + 1) == Some(&'"') {
                        *pos += 2;
                        continue;
                    }
                    *pos += 1;
                    break;
                }
                *pos += 1;
            }
            Ok(Sx::Atom(chars[start..*pos].iter().collect()))
        }
        Some('|') => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() && chars[*pos] != '|' {
                *pos += 1;
            }
            *pos += 1;
            Ok(Sx::Atom(chars[start..(*pos).min(chars.len())].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < chars.len() && !chars[*pos].is_whitespace() && chars[*pos] != '(' && chars[*pos] != ')' {
                *pos += 1;
            }
            Ok(Sx::Atom(chars[start..*pos].iter().collect()))
        }
    }
}
