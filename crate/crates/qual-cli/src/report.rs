//! JSON and text rendering. Every JSON document carries `schema`; keys are
//! emitted in sorted order, so output is byte-stable apart from the
//! `millis` / `elapsed_ms` timing fields.

use qual::assert::Res;
use qual::semantics::{ArrayVal, Outcome, State};
use qual::verify::{CheckReport, VcReport, VcStatus, Verdict};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "qual-report/1";

pub fn array_json(a: &ArrayVal) -> Value {
    let cells: Map<String, Value> = a.overrides().iter().map(|(i, v)| (i.to_string(), json!(v))).collect();
    json!({ "default": a.default_value(), "cells": cells })
}

pub fn state_json(s: &State) -> Value {
    let mut out = Map::new();
    for (x, v) in &s.scalars {
        out.insert(x.clone(), json!(v));
    }
    for (a, v) in &s.arrays {
        out.insert(a.clone(), array_json(v));
    }
    Value::Object(out)
}

pub fn outcome_json(o: &Outcome) -> Value {
    json!({ "state": state_json(&o.state), "q": o.q, "l": o.l })
}

fn res_text(r: &Res) -> String {
    r.to_string()
}

fn status_json(s: &VcStatus) -> Value {
    match s {
        VcStatus::Proved => json!({ "status": "proved" }),
        VcStatus::ProvedBounded(b) => json!({ "status": "proved-bounded", "bound": b }),
        VcStatus::Refuted(w) => json!({ "status": "refuted", "witness": state_json(w) }),
        VcStatus::Unknown(r) => json!({ "status": "unknown", "reason": r }),
        VcStatus::Error(r) => json!({ "status": "error", "reason": r }),
    }
}

fn vc_json(r: &VcReport) -> Value {
    let mut v = json!({
        "label": r.vc.label,
        "rule": r.vc.rule,
        "line": r.vc.line,
        "hypothesis": r.vc.hyp.to_string(),
        "lhs": res_text(&r.lhs),
        "rhs": res_text(&r.rhs),
        "solver_calls": r.solver_calls,
        "millis": r.millis as u64,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, status_json(&r.status)) {
        dst.extend(src);
    }
    v
}

pub fn verdict_json(v: &Verdict) -> Value {
    let mut out = json!({ "verdict": v.tag(), "exit_code": v.exit_code() });
    let extra = match v {
        Verdict::Valid => json!({}),
        Verdict::ValidBounded(b) => json!({ "bound": b }),
        Verdict::Invalid { label, witness } => json!({ "failed_vc": label, "witness": state_json(witness) }),
        Verdict::Unknown { label, reason } => json!({ "failed_vc": label, "reason": reason }),
        Verdict::IllFormed(reason) => json!({ "reason": reason }),
    };
    if let (Value::Object(dst), Value::Object(src)) = (&mut out, extra) {
        dst.extend(src);
    }
    out
}

pub fn check_json(file: &str, report: &CheckReport, elapsed_ms: u64) -> Value {
    let mut out = json!({
        "schema": SCHEMA,
        "command": "check",
        "file": file,
        "mode": report.mode.tag(),
        "truncated": false,
        "vcs": report.vcs.iter().map(vc_json).collect::<Vec<_>>(),
        "stats": {
            "vcs": report.vcs.len(),
            "solver_calls": report.vcs.iter().map(|r| r.solver_calls).sum::<usize>(),
            "elapsed_ms": elapsed_ms,
        },
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut out, verdict_json(&report.verdict)) {
        dst.extend(src);
    }
    out
}

pub fn check_text(file: &str, report: &CheckReport) -> String {
    let mut s = format!("{file} ({} mode)\n", report.mode.tag());
    for r in &report.vcs {
        let detail = match &r.status {
            VcStatus::Proved => String::new(),
            VcStatus::ProvedBounded(b) => format!(" within bound {b}"),
            VcStatus::Refuted(w) => format!(" at {w}"),
            VcStatus::Unknown(why) | VcStatus::Error(why) => format!(": {why}"),
        };
        // Whole-program conditions have no source line.
        let line = if r.vc.line == 0 { "-".to_string() } else { r.vc.line.to_string() };
        s.push_str(&format!("  {:<15} {:<24} line {:<4} {}ms{}\n", r.status.tag(), r.vc.label, line, r.millis, detail));
        if matches!(r.status, VcStatus::Refuted(_) | VcStatus::Unknown(_)) {
            s.push_str(&format!("      {} ⪯ {}\n", r.lhs, r.rhs));
        }
    }
    s.push_str(&format!("verdict: {}\n", report.verdict));
    s
}
