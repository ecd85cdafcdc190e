mod report;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qual::assert::{lift, parse_res, simplify, LeqMethod, Mode};
use qual::kernel::{check_derivation, fuzz_soundness, parse_derivation, KernelError};
use qual::lang::{parse_factored, parse_program, DeclKind, Program};
use qual::semantics::{enumerate, exec, ArrayVal, ChoiceScript, DomainBounds, State};
use qual::smt::{query_script, Query, SolverHandle};
use qual::transform::{sp, wp, wp_diamond};
use qual::verify::{check, gen_vcs, CheckOptions, Verdict};
use report::{outcome_json, state_json, SCHEMA};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Exit code for ill-formed input and tool errors.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qual",
    version,
    about = "Under-approximate resource reasoning: interpreter, verifier and proof kernel"
)]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify an annotated program.
    Check(CheckArgs),
    /// Execute one run selected by a choice script.
    Run(RunArgs),
    /// List every outcome reachable within the unroll cap.
    Enumerate(EnumerateArgs),
    /// Print verification conditions, or a transformer applied to a loop-free program.
    Vc(VcArgs),
    /// Check a derivation file.
    KernelCheck(KernelArgs),
    /// Check random derivations against brute-force semantics.
    Fuzz(FuzzArgs),
    /// Verify the bundled programs against the golden manifest.
    Corpus(CorpusArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Solver command line; the script is written to its standard input.
    #[arg(long, default_value = "z3")]
    solver_cmd: String,
    /// Per-query solver timeout in milliseconds.
    #[arg(long, default_value_t = 20_000)]
    timeout_ms: u64,
}

impl SolverArgs {
    fn handle(&self) -> SolverHandle {
        let mut h = SolverHandle::from_command_line(&self.solver_cmd);
        h.timeout_ms = self.timeout_ms;
        h
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    /// Annotated program.
    file: PathBuf,
    /// Proof system: f (forward), b (backward) or bd (backward, resource exhausted).
    #[arg(long, default_value = "b", value_parser = parse_mode)]
    mode: Mode,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write one SMT-LIB script per condition into this directory.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
    /// Re-check conditions the solver leaves open over `[-N, N]`.
    #[arg(long)]
    fallback_bound: Option<i64>,
    #[arg(long, value_enum, default_value = "text")]
    report: ReportFormat,
    /// Replace the program's precondition, e.g. "[x == 42; 2]".
    #[arg(long)]
    pre: Option<String>,
    /// Replace the program's postcondition.
    #[arg(long)]
    post: Option<String>,
}

#[derive(Args)]
struct StateArgs {
    /// Program to execute.
    file: PathBuf,
    /// Initial values as `x=3` or `a=[1,2,3]`; unmentioned variables start at 0.
    values: Vec<String>,
    /// Initial resource.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    resource: i64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Decisions in execution order: L/R per choice, a count per loop, v:<int> per local.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    script: String,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Maximum iterations explored per loop.
    #[arg(long, default_value_t = 8)]
    unroll: usize,
    /// Initial values tried for `local` variables, as `lo,hi`.
    #[arg(long, default_value = "-3,3", value_parser = parse_range, allow_hyphen_values = true)]
    local_range: (i64, i64),
}

#[derive(Clone, Copy, ValueEnum)]
enum Transformer {
    Sp,
    Wp,
    Wpd,
}

#[derive(Args)]
struct VcArgs {
    /// Annotated program.
    file: PathBuf,
    /// Proof system for the generated conditions: f, b or bd.
    #[arg(long, default_value = "b", value_parser = parse_mode)]
    mode: Mode,
    /// Apply a transformer to the program body instead of generating conditions.
    #[arg(long, value_enum, requires = "assertion")]
    transformer: Option<Transformer>,
    /// Assertion the transformer starts from.
    #[arg(long)]
    assertion: Option<String>,
    /// SMT-LIB logic named in the printed scripts.
    #[arg(long, default_value = "ALL")]
    logic: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bounded,
    Smt,
}

#[derive(Args)]
struct KernelArgs {
    /// Derivation file.
    file: PathBuf,
    /// How side conditions `P ⪯ Q` are decided.
    #[arg(long, value_enum, default_value = "smt")]
    method: Method,
    /// Scalar and binder range for the bounded method, as `lo,hi`.
    #[arg(long, default_value = "-3,3", value_parser = parse_range, allow_hyphen_values = true)]
    bounds: (i64, i64),
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct FuzzArgs {
    /// Number of derivations to check.
    #[arg(long, default_value_t = 500)]
    count: usize,
    /// Value domain of the fuzzed variables, as `lo,hi`.
    #[arg(long, default_value = "-2,2", value_parser = parse_range, allow_hyphen_values = true)]
    bounds: (i64, i64),
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory holding the programs and `manifest.txt`.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Re-check conditions the solver leaves open over `[-N, N]`
    #[arg(long, default_value_t = 5)]
    fallback_bound: i64,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, found `{s}`"))?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    if lo > hi {
        return Err(format!("empty range {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn load_program(path: &Path) -> Result<Program> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&src).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Writes to stdout; a closed pipe (`qual ... | head`) is not an error.
fn write_stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(json_mode: bool, value: &Value, text: impl FnOnce() -> String) {
    if json_mode {
        write_stdout(&format!("{}\n", serde_json::to_string_pretty(value).expect("serializable")));
    } else {
        write_stdout(&text());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if cli.json {
                let v = json!({ "schema": SCHEMA, "error": format!("{e:#}"), "exit_code": EXIT_ERROR });
                write_stdout(&format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Cmd::Check(a) => cmd_check(cli, a),
        Cmd::Run(a) => cmd_run(cli, a),
        Cmd::Enumerate(a) => cmd_enumerate(cli, a),
        Cmd::Vc(a) => cmd_vc(cli, a),
        Cmd::KernelCheck(a) => cmd_kernel(cli, a),
        Cmd::Fuzz(a) => cmd_fuzz(cli, a),
        Cmd::Corpus(a) => cmd_corpus(cli, a),
    }
}

fn override_annotations(prog: &mut Program, pre: Option<&str>, post: Option<&str>) -> Result<()> {
    let kinds = prog.kinds();
    for (slot, text, what) in [(&mut prog.annotations.pre, pre, "pre"), (&mut prog.annotations.post, post, "post")] {
        if let Some(text) = text {
            let f = parse_factored(text).map_err(|e| anyhow!("--{what}: {e}"))?;
            if let Some(x) = f.free_vars().into_iter().find(|x| !kinds.contains_key(x)) {
                bail!("--{what} mentions undeclared `{x}`");
            }
            *slot = Some(f);
        }
    }
    Ok(())
}

fn cmd_check(cli: &Cli, a: &CheckArgs) -> Result<u8> {
    let start = Instant::now();
    let file = a.file.display().to_string();
    let json_mode = cli.json || a.report == ReportFormat::Json;
    let mut prog = match load_program(&a.file) {
        Ok(p) => p,
        Err(e) => {
            let v = Verdict::IllFormed(format!("{e:#}"));
            let out = json!({ "schema": SCHEMA, "command": "check", "file": file, "mode": a.mode.tag(), "verdict": v.tag(), "exit_code": v.exit_code(), "reason": format!("{e:#}") });
            emit(json_mode, &out, || format!("verdict: {v}\n"));
            return Ok(v.exit_code() as u8);
        }
    };
    override_annotations(&mut prog, a.pre.as_deref(), a.post.as_deref())?;
    let opts =
        CheckOptions { solver: a.solver.handle(), fallback_bound: a.fallback_bound, dump_dir: a.dump_smt.clone() };
    let rep = check(&prog, a.mode, &opts)?;
    let out = report::check_json(&file, &rep, start.elapsed().as_millis() as u64);
    emit(json_mode, &out, || report::check_text(&file, &rep));
    Ok(rep.verdict.exit_code() as u8)
}

/// Initial state over the program's declarations; returns the names that
/// were not given a value and default to 0.
fn initial_state(prog: &Program, values: &[String]) -> Result<(State, Vec<String>)> {
    let kinds = prog.kinds();
    let mut s = State::new();
    let mut given = std::collections::BTreeSet::new();
    for item in values {
        let (name, value) = item.split_once('=').ok_or_else(|| anyhow!("expected `name=value`, found `{item}`"))?;
        let name = name.trim();
        match kinds.get(name) {
            None => bail!("`{name}` is not a declared variable"),
            Some(DeclKind::Scalar) => {
                let v: i64 = value.trim().parse().map_err(|_| anyhow!("bad integer for `{name}`: `{value}`"))?;
                s.set(name, v);
            }
            Some(DeclKind::Array) => {
                let inner = value.trim().strip_prefix('[').and_then(|v| v.strip_suffix(']'));
                let inner = inner.ok_or_else(|| anyhow!("array `{name}` expects `[v0,v1,...]`"))?;
                let cells: Vec<i64> = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|_| anyhow!("bad array entry `{t}`")))
                    .collect::<Result<_>>()?;
                s = s.with_array(name, ArrayVal::from_slice(&cells));
            }
        }
        given.insert(name.to_string());
    }
    let mut defaulted = Vec::new();
    for (name, kind) in &kinds {
        if given.contains(name) {
            continue;
        }
        defaulted.push(name.clone());
        match kind {
            DeclKind::Scalar => s.set(name, 0),
            DeclKind::Array => s = s.with_array(name, ArrayVal::constant(0)),
        }
    }
    Ok((s, defaulted))
}

fn cmd_run(_cli: &Cli, a: &RunArgs) -> Result<u8> {
    let prog = load_program(&a.state.file)?;
    let (s, defaulted) = initial_state(&prog, &a.state.values)?;
    let script: ChoiceScript = a.script.parse().map_err(|e: String| anyhow!("--script: {e}"))?;
    let out = exec(&prog.surface, &s, a.state.resource, &script)?;
    let value = match &out {
        Some(o) => {
            let mut v = outcome_json(o);
            v["schema"] = json!(SCHEMA);
            v["defaulted"] = json!(defaulted);
            v
        }
        None => json!({ "schema": SCHEMA, "blocked": true, "state": null, "defaulted": defaulted }),
    };
    // The run result is JSON in both output modes.
    write_stdout(&format!("{}\n", serde_json::to_string(&value).expect("serializable")));
    Ok(0)
}

fn cmd_enumerate(cli: &Cli, a: &EnumerateArgs) -> Result<u8> {
    let prog = load_program(&a.state.file)?;
    let (s, defaulted) = initial_state(&prog, &a.state.values)?;
    let bounds = DomainBounds { unroll_cap: a.unroll, local_range: a.local_range, ..DomainBounds::default() };
    let en = enumerate(&prog.body, &s, a.state.resource, &bounds)?;
    let value = json!({
        "schema": SCHEMA,
        "command": "enumerate",
        "initial": state_json(&s),
        "defaulted": defaulted,
        "outcomes": en.outcomes.iter().map(outcome_json).collect::<Vec<_>>(),
        "truncated": en.truncated,
    });
    emit(cli.json, &value, || {
        let mut t = String::new();
        for o in &en.outcomes {
            t.push_str(&format!("{}  q={} l={}\n", o.state, o.q, o.l));
        }
        t.push_str(&format!("{} outcome(s){}\n", en.outcomes.len(), if en.truncated { ", truncated" } else { "" }));
        t
    });
    Ok(0)
}

fn cmd_vc(cli: &Cli, a: &VcArgs) -> Result<u8> {
    let prog = load_program(&a.file)?;
    if let Some(t) = a.transformer {
        let text = a.assertion.as_deref().expect("required by clap");
        let lift_mode = match t {
            Transformer::Sp => Mode::F,
            Transformer::Wp => Mode::B,
            Transformer::Wpd => Mode::BD,
        };
        // A factored `[spec; e]` is lifted in the transformer's own mode.
        let r = match parse_res(text) {
            Ok(r) => r,
            Err(e) => match parse_factored(text) {
                Ok(f) => lift(&f, lift_mode),
                Err(_) => bail!("--assertion: {e}"),
            },
        };
        let (name, out) = match t {
            Transformer::Sp => ("sp", sp(&prog.body, &r)?),
            Transformer::Wp => ("wp", wp(&prog.body, &r)?),
            Transformer::Wpd => ("wpd", wp_diamond(&prog.body, &r)?),
        };
        let simple = simplify(&out.result);
        let value = json!({
            "schema": SCHEMA,
            "command": "vc",
            "transformer": name,
            "assertion": r.to_string(),
            "result": out.result.to_string(),
            "simplified": simple.to_string(),
            "certifying": out.certifying,
        });
        emit(cli.json, &value, || {
            format!("{name}: {}\nsimplified: {simple}\ncertifying: {}\n", out.result, out.certifying)
        });
        return Ok(0);
    }
    let vcs = match gen_vcs(&prog, a.mode) {
        Ok(v) => v,
        Err(e) => {
            let v = Verdict::IllFormed(e.0);
            emit(cli.json, &report::verdict_json(&v), || format!("verdict: {v}\n"));
            return Ok(EXIT_ERROR);
        }
    };
    let items: Vec<(String, String, String, String, Value)> = vcs
        .iter()
        .map(|vc| {
            let q = Query { hyp: vc.hyp.clone(), lhs: simplify(&vc.lhs), rhs: simplify(&vc.rhs) };
            let script = query_script(&q, &a.logic);
            let v = json!({
                "label": vc.label,
                "rule": vc.rule,
                "line": vc.line,
                "hypothesis": vc.hyp.to_string(),
                "lhs": q.lhs.to_string(),
                "rhs": q.rhs.to_string(),
                "smt": script,
            });
            (vc.label.clone(), q.hyp.to_string(), q.lhs.to_string(), q.rhs.to_string(), v)
        })
        .collect();
    let value = json!({
        "schema": SCHEMA,
        "command": "vc",
        "mode": a.mode.tag(),
        "vcs": items.iter().map(|i| i.4.clone()).collect::<Vec<_>>(),
    });
    emit(cli.json, &value, || {
        let mut t = String::new();
        for (label, hyp, lhs, rhs, v) in &items {
            t.push_str(&format!("== {label} ({})\n   {hyp}\n ⟹ {lhs}\n ⪯ {rhs}\n", v["rule"].as_str().unwrap_or("")));
            t.push_str(v["smt"].as_str().unwrap_or(""));
            t.push('\n');
        }
        t
    });
    Ok(0)
}

fn cmd_kernel(cli: &Cli, a: &KernelArgs) -> Result<u8> {
    let src = std::fs::read_to_string(&a.file).with_context(|| format!("cannot read {}", a.file.display()))?;
    let bounds = DomainBounds::uniform(a.bounds.0, a.bounds.1);
    let handle = a.solver.handle();
    let method = match a.method {
        Method::Bounded => LeqMethod::Bounded(&bounds),
        Method::Smt => LeqMethod::Smt(&handle),
    };
    let result = parse_derivation(&src).and_then(|d| check_derivation(&d, method));
    let (code, value) = match &result {
        Ok(t) => (
            0,
            json!({
                "schema": SCHEMA,
                "command": "kernel-check",
                "accepted": true,
                "mode": t.mode.tag(),
                "pre": t.pre.to_string(),
                "command_text": t.cmd.to_string(),
                "post": t.post.to_string(),
            }),
        ),
        Err(e) => {
            let code = match e {
                KernelError::Syntax { .. } => EXIT_ERROR,
                KernelError::Undecided { .. } => 2,
                KernelError::Schema { .. } | KernelError::SideCondition { .. } => 1,
            };
            (code, json!({ "schema": SCHEMA, "command": "kernel-check", "accepted": false, "error": e.to_string() }))
        }
    };
    emit(cli.json, &value, || match &result {
        Ok(t) => format!("accepted: {t}\n"),
        Err(e) => format!("rejected: {e}\n"),
    });
    Ok(code)
}

fn cmd_fuzz(cli: &Cli, a: &FuzzArgs) -> Result<u8> {
    let seed = cli.seed.unwrap_or(0);
    let start = Instant::now();
    let r = fuzz_soundness(seed, a.count, a.bounds);
    let elapsed = start.elapsed().as_millis() as u64;
    let value = json!({
        "schema": SCHEMA,
        "command": "fuzz",
        "seed": seed,
        "count": a.count,
        "bounds": [a.bounds.0, a.bounds.1],
        "checked": r.checked,
        "rejected": r.rejected,
        "truncated": r.truncated,
        "passed": r.passed(),
        "per_mode": r.per_mode.iter().map(|(m, n)| (m.tag().to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
        "rule_counts": r.rule_counts.iter().map(|(k, n)| (k.to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
        "failures": r.failures.iter().map(|f| json!({
            "derivation": f.derivation,
            "triple": f.triple,
            "witness": f.witness.as_ref().map(state_json),
            "reason": f.reason,
        })).collect::<Vec<_>>(),
        "elapsed_ms": elapsed,
    });
    emit(cli.json, &value, || {
        let mut t = format!(
            "checked {} derivations ({} redrawn), {} failure(s), {} truncated, {elapsed} ms\n",
            r.checked,
            r.rejected,
            r.failures.len(),
            r.truncated
        );
        for f in &r.failures {
            t.push_str(&format!("FAIL {}\n  {}\n{}\n", f.reason, f.triple, f.derivation));
        }
        t
    });
    Ok(if r.passed() { 0 } else { 1 })
}

struct ManifestEntry {
    file: String,
    expected: Vec<(Mode, String)>,
}

fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let file = parts.next().expect("non-empty line").to_string();
        let mut expected = Vec::new();
        for item in parts {
            let (m, v) =
                item.split_once('=').ok_or_else(|| anyhow!("manifest line {}: expected `mode=Verdict`", n + 1))?;
            expected.push((m.parse().map_err(|e: String| anyhow!("manifest line {}: {e}", n + 1))?, v.to_string()));
        }
        if expected.is_empty() {
            bail!("manifest line {}: no expected verdicts", n + 1);
        }
        out.push(ManifestEntry { file, expected });
    }
    Ok(out)
}

fn corpus_dir(arg: Option<&PathBuf>) -> PathBuf {
    if let Some(d) = arg {
        return d.clone();
    }
    let local = PathBuf::from("corpus");
    if local.join("manifest.txt").exists() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn cmd_corpus(cli: &Cli, a: &CorpusArgs) -> Result<u8> {
    let dir = corpus_dir(a.dir.as_ref());
    let entries = read_manifest(&dir)?;
    let opts = CheckOptions { solver: a.solver.handle(), fallback_bound: Some(a.fallback_bound), dump_dir: None };
    let mut rows = Vec::new();
    let mut all_pass = true;
    for e in &entries {
        let prog = load_program(&dir.join(&e.file))?;
        let mut checks = Vec::new();
        let mut pass = true;
        for (mode, want) in &e.expected {
            let rep = check(&prog, *mode, &opts)?;
            let got = rep.verdict.tag();
            pass &= got == want;
            checks.push(json!({ "mode": mode.tag(), "expected": want, "actual": got }));
        }
        all_pass &= pass;
        rows.push(json!({ "file": e.file, "pass": pass, "checks": checks }));
    }
    let value = json!({ "schema": SCHEMA, "command": "corpus", "entries": rows, "passed": all_pass });
    emit(cli.json, &value, || {
        let mut t = String::new();
        for r in &rows {
            let detail: Vec<String> = r["checks"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| format!("{}={}", c["mode"].as_str().unwrap(), c["actual"].as_str().unwrap()))
                .collect();
            let tag = if r["pass"].as_bool().unwrap() { "pass" } else { "FAIL" };
            t.push_str(&format!("{tag}  {:<26} {}\n", r["file"].as_str().unwrap(), detail.join(" ")));
        }
        t.push_str(&format!(
            "{}/{} entries pass\n",
            rows.iter().filter(|r| r["pass"] == json!(true)).count(),
            rows.len()
        ));
        t
    });
    Ok(if all_pass { 0 } else { 1 })
}
