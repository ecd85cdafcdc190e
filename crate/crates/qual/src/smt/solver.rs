use super::sexp::{parse_all, Sx};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverHandle {
    /// Program and arguments; the script is written to its standard input.
    pub cmd: Vec<String>,
    pub timeout_ms: u64,
    pub logic: String,
}

impl Default for SolverHandle {
    fn default() -> Self {
        SolverHandle { cmd: vec!["z3".into(), "-in".into(), "-smt2".into()], timeout_ms: 20_000, logic: "ALL".into() }
    }
}

impl SolverHandle {
    /// Splits a command line on whitespace.
    pub fn from_command_line(line: &str) -> SolverHandle {
        let mut cmd: Vec<String> = line.split_whitespace().map(String::from).collect();
        if cmd.len() == 1 && cmd[0].ends_with("z3") {
            cmd.extend(["-in".to_string(), "-smt2".to_string()]);
        }
        SolverHandle { cmd, ..SolverHandle::default() }
    }

    fn is_z3(&self) -> bool {
        self.cmd.first().is_some_and(|c| c.ends_with("z3"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("cannot launch solver `{0}`: {1}")]
    Launch(String, String),
    #[error("unparseable solver output: {0}")]
    Output(String),
}

/// Raw answer to a satisfiability query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatAnswer {
    Unsat,
    /// Values of the requested symbols.
    Sat(BTreeMap<String, Sx>),
    Unknown(String),
}

struct Session {
    child: Child,
    lines: Receiver<String>,
    deadline: Instant,
}

impl Session {
    fn send(&mut self, text: &str) {
        if let Some(stdin) = self.child.stdin.as_mut() {
            let _ = stdin.write_all(text.as_bytes());
            let _ = stdin.flush();
        }
    }

    /// Next complete s-expression or bare atom line; `None` on timeout or EOF.
    fn next_item(&mut self) -> Result<Option<String>, SolverError> {
        let mut buf = String::new();
        loop {
            let now = Instant::now();
            if now >= self.deadline {
                return Ok(None);
            }
            match self.lines.recv_timeout(self.deadline - now) {
                Ok(line) => {
                    if buf.is_empty() && line.trim().is_empty() {
                        continue;
                    }
                    buf.push_str(&line);
                    buf.push('\n');
                    if balanced(&buf) {
                        return Ok(Some(buf.trim().to_string()));
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => {
                    if buf.trim().is_empty() {
                        return Ok(None);
                    }
                    return Err(SolverError::Output(buf));
                }
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn balanced(s: &str) -> bool {
    let mut depth = 0i64;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => depth += 1,
            ')' if !in_str => depth -= 1,
            _ => {}
        }
    }
    depth <= 0 && !in_str
}

/// Runs `script` (which must end with `(check-sat)`) and, on `sat`, asks for
/// the values of `symbols`.
pub fn solve(handle: &SolverHandle, script: &str, symbols: &[String]) -> Result<SatAnswer, SolverError> {
    let (prog, args) =
        handle.cmd.split_first().ok_or_else(|| SolverError::Launch(String::new(), "empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::Launch(handle.cmd.join(" "), e.to_string()))?;
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    });
    let mut session =
        Session { child, lines: rx, deadline: Instant::now() + Duration::from_millis(handle.timeout_ms + 1000) };
    if handle.is_z3() {
        session.send(&format!("(set-option :timeout {})\n", handle.timeout_ms));
    }
    session.send(script);
    let answer = loop {
        match session.next_item()? {
            None => return Ok(SatAnswer::Unknown("timeout".into())),
            Some(item) if item.starts_with("(error") => return Err(SolverError::Output(item)),
            Some(item) => break item,
        }
    };
    match answer.as_str() {
        "unsat" => {
            session.send("(exit)\n");
            Ok(SatAnswer::Unsat)
        }
        "unknown" => {
            session.send("(get-info :reason-unknown)\n");
            let reason = session.next_item()?.unwrap_or_else(|| "timeout".into());
            session.send("(exit)\n");
            let reason = reason.trim_matches(|c| c == '(' || c == ')').replace(":reason-unknown", "");
            let reason = reason.trim().trim_matches('"').to_string();
            if reason.contains("timeout") || reason.contains("canceled") {
                Ok(SatAnswer::Unknown("timeout".into()))
            } else {
                Ok(SatAnswer::Unknown(reason))
            }
        }
        "sat" => {
            let mut values = BTreeMap::new();
            if !symbols.is_empty() {
                session.send(&format!("(get-value ({}))\n", symbols.join(" ")));
                let item =
                    session.next_item()?.ok_or_else(|| SolverError::Output("no model values before timeout".into()))?;
                if item.starts_with("(error") {
                    return Err(SolverError::Output(item));
                }
                let parsed = parse_all(&item).map_err(SolverError::Output)?;
                for pair in parsed.first().map(|p| p.items()).unwrap_or(&[]) {
                    if let [Sx::Atom(name), value] = pair.items() {
                        values.insert(name.clone(), value.clone());
                    }
                }
            }
            session.send("(exit)\n");
            Ok(SatAnswer::Sat(values))
        }
        other => Err(SolverError::Output(other.to_string())),
    }
}
