use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    /// Start of an annotation comment; carries the leading keyword.
    PragmaStart(String),
    PragmaEnd,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const SYMBOLS: [&str; 25] = [
    "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",", ".", ":", "=", "<", ">", "+",
    "-", "*", "/", "!",
];

const PRAGMA_KEYWORDS: [&str; 3] = ["pre", "post", "loop"];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut in_pragma = false;
    let lines: Vec<&str> = src.lines().collect();
    let mut ln = 0;
    let mut in_block_comment = false;
    while ln < lines.len() {
        let line = lines[ln];
        let trimmed = line.trim_start();
        let mut start_col = 0;
        if !in_block_comment && trimmed.starts_with("//@") {
            let offset = line.len() - trimmed.len() + 3;
            let rest = &line[offset..];
            let first_word: String =
                rest.trim_start().chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
            if PRAGMA_KEYWORDS.contains(&first_word.as_str()) {
                if in_pragma {
                    out.push(Token { tok: Tok::PragmaEnd, line: ln + 1, col: 1 });
                }
                let kw_col = offset + rest.len() - rest.trim_start().len();
                out.push(Token { tok: Tok::PragmaStart(first_word.clone()), line: ln + 1, col: kw_col + 1 });
                start_col = kw_col + first_word.len();
            } else if in_pragma {
                start_col = offset;
            } else {
                return Err(SyntaxError {
                    line: ln + 1,
                    col: offset + 1,
                    msg: format!("annotation must start with one of {PRAGMA_KEYWORDS:?}"),
                });
            }
            in_pragma = true;
            lex_line(line, start_col, ln + 1, &mut out, &mut in_block_comment)?;
        } else {
            if in_pragma {
                out.push(Token { tok: Tok::PragmaEnd, line: ln + 1, col: 1 });
                in_pragma = false;
            }
            lex_line(line, start_col, ln + 1, &mut out, &mut in_block_comment)?;
        }
        ln += 1;
    }
    if in_pragma {
        out.push(Token { tok: Tok::PragmaEnd, line: lines.len() + 1, col: 1 });
    }
    out.push(Token { tok: Tok::Eof, line: lines.len() + 1, col: 1 });
    Ok(out)
}

fn lex_line(
    line: &str,
    start: usize,
    ln: usize,
    out: &mut Vec<Token>,
    in_block_comment: &mut bool,
) -> Result<(), SyntaxError> {
    let bytes = line.as_bytes();
    let mut i = start;
    while i < bytes.len() {
        if *in_block_comment {
            if bytes[i..].starts_with(b"*/") {
                *in_block_comment = false;
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        if !bytes[i].is_ascii() {
            return Err(SyntaxError { line: ln, col: i + 1, msg: "non-ASCII character".into() });
        }
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if bytes[i..].starts_with(b"//") {
            break;
        }
        if bytes[i..].starts_with(b"/*") {
            *in_block_comment = true;
            i += 2;
            continue;
        }
        let col = i + 1;
        if c.is_ascii_digit() {
            let end = line[i..].find(|ch: char| !ch.is_ascii_digit()).map_or(line.len(), |k| i + k);
            let value = line[i..end].parse::<i64>().map_err(|_| SyntaxError {
                line: ln,
                col,
                msg: format!("integer literal `{}` out of range", &line[i..end]),
            })?;
            out.push(Token { tok: Tok::Int(value), line: ln, col });
            i = end;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = line[i..]
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''))
                .map_or(line.len(), |k| i + k);
            out.push(Token { tok: Tok::Ident(line[i..end].to_string()), line: ln, col });
            i = end;
            continue;
        }
        match SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) {
            Some(sym) => {
                out.push(Token { tok: Tok::Sym(sym), line: ln, col });
                i += sym.len();
            }
            None => return Err(SyntaxError { line: ln, col, msg: format!("unexpected character `{c}`") }),
        }
    }
    Ok(())
}
