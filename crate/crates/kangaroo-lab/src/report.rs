//! Deterministic report rendering. Every command prints a human-readable
//! summary followed by a machine block of stable key=value lines; the
//! machine block is byte-identical across runs on the same input.

use crate::analysis::{AnalysisReport, CondStatus, ConditionEval, Verdict};
use crate::blowup::TransformResult;
use crate::contact::{factorial, ContactFrame, Divisor, ResidualOrder};
use crate::ideal::{Ideal, OrderVal};
use crate::search::{OracleOutcome, SearchOutcome};
use std::fmt::Write as _;

pub const MACHINE_MARKER: &str = "--- machine ---";

/// Ordered key=value lines; insertion order is the output order.
#[derive(Debug, Default)]
pub struct MachineBlock {
    lines: Vec<(String, String)>,
}

impl MachineBlock {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::from(MACHINE_MARKER);
        out.push('\n');
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

fn opt_u32(v: Option<u32>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

fn opt_ord(v: Option<OrderVal>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

pub fn divisor_str(d: &Divisor) -> String {
    let parts: Vec<String> = d.s.iter().map(|s| s.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn frame_w(frame: &ContactFrame) -> String {
    frame.w.map_or_else(|| "-".into(), |w| w.to_string())
}

fn contact_locus(frame: &ContactFrame) -> String {
    if frame.q_total.is_zero() {
        "V(z)".into()
    } else {
        format!("V(z - ({}))", frame.q_total.to_grammar())
    }
}

fn cond_key(status: &CondStatus) -> &'static str {
    match status {
        CondStatus::Pass => "pass",
        CondStatus::Fail(_) => "fail",
        CondStatus::Skipped(_) => "skip",
    }
}

fn push_conditions(mb: &mut MachineBlock, conds: Option<&ConditionEval>) {
    for i in 1..=9 {
        let v = conds.map_or("-", |c| cond_key(&c.status[i - 1]));
        mb.push(&format!("cond.{i}"), v);
    }
}

fn conditions_human(out: &mut String, conds: &ConditionEval) {
    for (i, s) in conds.status.iter().enumerate() {
        let _ = writeln!(out, "  ({}) {s}", i + 1);
    }
    if let Some(n) = &conds.witness_n {
        let _ = writeln!(out, "  witness N = {}", n.to_grammar());
    }
}

/// Report for the maximal-contact analysis of a single ideal.
pub fn render_analyze(frame: &ContactFrame, res: &ResidualOrder, d: &Divisor) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "c={}, o={}, w={}, maximal contact: {}",
        frame.c,
        frame.o,
        frame_w(frame),
        contact_locus(frame)
    );
    let _ = writeln!(out, "status: {:?}, cleaning iterations: {}", frame.status, frame.iterations);
    match res.value {
        Some(v) => {
            let _ = writeln!(out, "residual order {v} with divisor {}", divisor_str(d));
        }
        None => {
            let _ = writeln!(out, "no residual order for divisor {}", divisor_str(d));
        }
    }
    let mut mb = MachineBlock::default();
    mb.push("c", frame.c);
    mb.push("o", frame.o);
    mb.push("w", frame_w(frame));
    mb.push("resord", opt_u32(res.value));
    out.push_str(&mb.render());
    out
}

/// Report for a bare blowup (weak and divisor transforms, no detection).
pub fn render_blowup(frame: &ContactFrame, j1: &Ideal, tr: &TransformResult) -> String {
    let mut out = String::new();
    for g in j1.gens() {
        let _ = writeln!(out, "weak transform generator: {}", g.to_grammar());
    }
    let _ = writeln!(out, "order after blowup: {}", j1.ord());
    let _ = writeln!(
        out,
        "divisor after: {} (exceptional multiplicity {})",
        divisor_str(&tr.divisor),
        tr.exceptional_multiplicity
    );
    if !tr.lost_components.is_empty() {
        let _ = writeln!(
            out,
            "divisor components lost in the chart: {:?}",
            tr.lost_components
        );
    }
    let mut mb = MachineBlock::default();
    mb.push("c", frame.c);
    mb.push("ord.after", j1.ord());
    mb.push("divisor.after", divisor_str(&tr.divisor));
    mb.push("em", tr.exceptional_multiplicity);
    out.push_str(&mb.render());
    out
}

fn moh_summary(rep: &AnalysisReport) -> Option<String> {
    let before = rep.residual_before?;
    let after = rep.residual_after?;
    let p = rep.frame_before.ideal.field()?.p();
    let step = factorial(rep.frame_before.c) / p;
    Some(if after as u64 == before as u64 + step {
        "equality".into()
    } else {
        format!("slack {}", before as i64 + step as i64 - after as i64)
    })
}

/// Full detection report with the canonical machine keys.
pub fn render_detect(rep: &AnalysisReport) -> String {
    let frame = &rep.frame_before;
    let mut out = String::new();
    match rep.verdict {
        Verdict::Kangaroo => {
            let conds = rep.conditions.as_ref().expect("evaluated on detection");
            let _ = writeln!(
                out,
                "KANGAROO: residual order {} -> {}; conditions 1-9: {}; Moh bound: {}",
                opt_u32(rep.residual_before),
                opt_u32(rep.residual_after),
                if conds.all_pass() { "pass" } else { "mixed" },
                moh_summary(rep).unwrap_or_else(|| "-".into())
            );
        }
        Verdict::NoIncrease => {
            let _ = writeln!(
                out,
                "NO INCREASE: residual order {} -> {}",
                opt_u32(rep.residual_before),
                opt_u32(rep.residual_after)
            );
        }
        Verdict::OrderDropped => {
            let _ = writeln!(
                out,
                "ORDER DROPPED: {} -> {} under the blowup",
                frame.c,
                opt_ord(rep.ord_after)
            );
        }
        Verdict::NotPermissible => {
            let _ = writeln!(out, "NOT PERMISSIBLE: the center fails the admissibility checks");
        }
        Verdict::IncompatibleDivisor => {
            let _ = writeln!(out, "INCOMPATIBLE DIVISOR: coefficient ideal not divisible");
        }
        Verdict::PurePower => {
            let _ = writeln!(out, "PURE POWER: the ideal is a power of the contact coordinate");
        }
    }
    let _ = writeln!(
        out,
        "c={}, o={}, w={}, maximal contact: {}",
        frame.c,
        frame.o,
        frame_w(frame),
        contact_locus(frame)
    );
    if let Some(d1) = &rep.divisor_after {
        let _ = writeln!(out, "divisor after: {}", divisor_str(d1));
    }
    if let Some(conds) = &rep.conditions {
        conditions_human(&mut out, conds);
    }
    if let Some(prop) = &rep.auxiliary {
        let _ = writeln!(
            out,
            "auxiliary bound: {} < {} <= {} via h = {}{}",
            prop.residual_before,
            prop.residual_after,
            prop.bound,
            prop.h.to_grammar(),
            match prop.sigma_match {
                Some(true) => "; sigma construction agrees",
                Some(false) => "; sigma construction differs",
                None => "",
            }
        );
    }
    for note in &rep.notes {
        let _ = writeln!(out, "note: {note}");
    }
    let mut mb = MachineBlock::default();
    mb.push("c", frame.c);
    mb.push("o", frame.o);
    mb.push("w", frame_w(frame));
    mb.push("resord.before", opt_u32(rep.residual_before));
    mb.push("resord.after", opt_u32(rep.residual_after));
    push_conditions(&mut mb, rep.conditions.as_ref());
    mb.push("verdict", rep.verdict);
    out.push_str(&mb.render());
    out
}

/// Condition-centric view of a detection run.
pub fn render_check_theorem(rep: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", rep.verdict);
    match &rep.conditions {
        Some(conds) => {
            conditions_human(&mut out, conds);
            if let Some(cone) = &conds.cone {
                let _ = writeln!(
                    out,
                    "cone: m={}, e={}, w={}, F = {}",
                    cone.m,
                    cone.e,
                    cone.w,
                    cone.f.to_grammar()
                );
            }
        }
        None => {
            let _ = writeln!(out, "conditions not evaluated for this verdict");
        }
    }
    let mut mb = MachineBlock::default();
    mb.push("c", rep.frame_before.c);
    mb.push("resord.before", opt_u32(rep.residual_before));
    mb.push("resord.after", opt_u32(rep.residual_after));
    push_conditions(&mut mb, rep.conditions.as_ref());
    mb.push("verdict", rep.verdict);
    out.push_str(&mb.render());
    out
}

pub fn render_search(outcome: &SearchOutcome) -> String {
    let mut out = String::new();
    let kangaroos: Vec<_> = outcome.results.iter().filter(|r| r.is_kangaroo()).collect();
    let _ = writeln!(
        out,
        "enumerated {} candidates ({} p-power skips, {} evaluated), {} residual-order increases",
        outcome.enumerated,
        outcome.skipped_powers,
        outcome.evaluated,
        kangaroos.len()
    );
    for r in &kangaroos {
        let _ = writeln!(
            out,
            "F = {}; divisor {}; residual order {} -> {}",
            r.f.to_grammar(),
            divisor_str(&r.divisor),
            opt_u32(r.report.residual_before),
            opt_u32(r.report.residual_after)
        );
    }
    let mut mb = MachineBlock::default();
    mb.push("search.enumerated", outcome.enumerated);
    mb.push("search.skipped", outcome.skipped_powers);
    mb.push("search.evaluated", outcome.evaluated);
    mb.push("search.kangaroos", kangaroos.len());
    for (k, r) in kangaroos.iter().enumerate() {
        mb.push(&format!("kang.{k}.f"), r.f.to_grammar());
        mb.push(&format!("kang.{k}.divisor"), divisor_str(&r.divisor));
        mb.push(
            &format!("kang.{k}.resord.before"),
            opt_u32(r.report.residual_before),
        );
        mb.push(
            &format!("kang.{k}.resord.after"),
            opt_u32(r.report.residual_after),
        );
    }
    out.push_str(&mb.render());
    out
}

pub fn render_oracle(outcome: &OracleOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} candidates, {} oracle checks, {} discrepancies",
        outcome.candidates,
        outcome.checks,
        outcome.discrepancies.len()
    );
    for d in &outcome.discrepancies {
        let _ = writeln!(out, "discrepancy: {d}");
    }
    let mut mb = MachineBlock::default();
    mb.push("oracle.candidates", outcome.candidates);
    mb.push("oracle.checks", outcome.checks);
    mb.push("oracle.discrepancies", outcome.discrepancies.len());
    for (k, d) in outcome.discrepancies.iter().enumerate() {
        mb.push(&format!("oracle.mismatch.{k}"), d);
    }
    out.push_str(&mb.render());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::detect_kangaroo;
    use crate::scenario::{parse_scenario, WORKED};

    #[test]
    fn detect_report_has_the_stable_keys() {
        let sc = parse_scenario(WORKED, None).unwrap();
        let rep = detect_kangaroo(&sc.ideal().unwrap(), &sc.divisor, sc.chart().unwrap()).unwrap();
        let text = render_detect(&rep);
        assert!(text.starts_with("KANGAROO: residual order 2 -> 3"));
        let machine = text.split(MACHINE_MARKER).nth(1).unwrap();
        for key in [
            "c=2", "o=4", "w=2", "resord.before=2", "resord.after=3", "cond.1=pass",
            "cond.9=pass", "verdict=kangaroo",
        ] {
            assert!(machine.contains(&format!("\n{key}\n")), "missing {key} in {machine}");
        }
    }

    #[test]
    fn detect_report_is_deterministic() {
        let sc = parse_scenario(WORKED, None).unwrap();
        let rep = detect_kangaroo(&sc.ideal().unwrap(), &sc.divisor, sc.chart().unwrap()).unwrap();
        assert_eq!(render_detect(&rep), render_detect(&rep));
    }
}
