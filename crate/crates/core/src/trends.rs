//! Qualitative trend checks over sweep tables.
//!
//! Each check reads seed-averaged values from the tables and reports PASS,
//! FAIL, or SKIP when a needed grid point is absent.

use std::fmt;

use crate::config::FemtoMode;
use crate::output::{SweepTables, TableKind};
use crate::sched::SchedulerKind;
use crate::traffic::FlowClass;

use FemtoMode::{Off, On};
use SchedulerKind::{Fls, LogRule, Pf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub id: u32,
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

impl fmt::Display for TrendCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}: {}", self.verdict, self.id, self.name, self.detail)
    }
}

/// Absolute gap required between FLS and PF video PLR.
pub const VIDEO_PLR_GAP: f64 = 0.01;
/// Minimum femto-on / femto-off spectral-efficiency ratio.
pub const SE_GAIN: f64 = 1.2;

struct Lookup<'a> {
    tables: &'a SweepTables,
    missing: Vec<String>,
}

impl Lookup<'_> {
    fn get(&mut self, kind: TableKind, ues: usize, s: SchedulerKind, m: FemtoMode) -> f64 {
        match self.tables.table(kind).and_then(|t| t.get(ues, s, m)) {
            Some(v) => v,
            None => {
                self.missing.push(format!("{} ues={ues} {}_{}", kind.file_name(), s, m));
                f64::NAN
            }
        }
    }

    fn finish(self, id: u32, name: &'static str, ok: bool, detail: String) -> TrendCheck {
        let (verdict, detail) = if self.missing.is_empty() {
            (if ok { Verdict::Pass } else { Verdict::Fail }, detail)
        } else {
            (Verdict::Skip, format!("missing {}", self.missing.join(", ")))
        };
        TrendCheck { id, name, verdict, detail }
    }
}

fn lookup(t: &SweepTables) -> Lookup<'_> {
    Lookup { tables: t, missing: Vec::new() }
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

/// Video PLR: FLS < Log-Rule < PF at 20 and 30 UEs, macro only.
pub fn video_plr_ordering(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let k = TableKind::Plr(FlowClass::Video);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [20, 30] {
        let (f, g, p) = (l.get(k, n, Fls, Off), l.get(k, n, LogRule, Off), l.get(k, n, Pf, Off));
        ok &= f < g && g < p && p - f >= VIDEO_PLR_GAP;
        parts.push(format!("ues={n}: fls={} logrule={} pf={}", f4(f), f4(g), f4(p)));
    }
    l.finish(4, "video PLR FLS < LogRule < PF", ok, parts.join("; "))
}

/// Aggregate BE throughput: PF ≥ FLS at 20 UEs in both femto modes.
pub fn be_throughput_pf_over_fls(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let k = TableKind::Throughput(FlowClass::BestEffort);
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [Off, On] {
        let (p, f) = (l.get(k, 20, Pf, m), l.get(k, 20, Fls, m));
        ok &= p >= f;
        parts.push(format!("femto {m}: pf={p:.0} fls={f:.0} bps"));
    }
    l.finish(5, "BE throughput PF >= FLS", ok, parts.join("; "))
}

/// VoIP PLR below video PLR for every scheduler at 15 UEs and above.
pub fn voip_below_video(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let counts: Vec<usize> = t
        .table(TableKind::Plr(FlowClass::Video))
        .map(|tb| tb.rows.iter().map(|r| r.0).filter(|&n| n >= 15).collect())
        .unwrap_or_default();
    if counts.is_empty() {
        l.missing.push(format!("{} ues>=15", TableKind::Plr(FlowClass::Video).file_name()));
    }
    let mut ok = true;
    let mut worst = String::new();
    for n in &counts {
        for s in SchedulerKind::ALL {
            let v = l.get(TableKind::Plr(FlowClass::Voip), *n, s, Off);
            let w = l.get(TableKind::Plr(FlowClass::Video), *n, s, Off);
            if !(v < w) && ok {
                worst = format!("ues={n} {s}: voip={} video={}", f4(v), f4(w));
                ok = false;
            }
        }
    }
    let detail = if ok { format!("holds at ues {counts:?} for all schedulers") } else { worst };
    l.finish(6, "VoIP PLR < video PLR", ok, detail)
}

/// With femtos at 20 UEs: BE PLR rises for all schedulers and spectral
/// efficiency grows at least 1.2×.
pub fn femto_effects(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let k = TableKind::Plr(FlowClass::BestEffort);
    let mut plr_ok = true;
    let mut se_ok = true;
    let mut parts = Vec::new();
    for s in SchedulerKind::ALL {
        let (off, on) = (l.get(k, 20, s, Off), l.get(k, 20, s, On));
        plr_ok &= on > off;
        let (se_off, se_on) = (
            l.get(TableKind::SpectralEfficiency, 20, s, Off),
            l.get(TableKind::SpectralEfficiency, 20, s, On),
        );
        se_ok &= se_on >= SE_GAIN * se_off;
        parts.push(format!(
            "{s}: be_plr {} -> {}, se {:.3} -> {:.3} ({:.2}x)",
            f4(off),
            f4(on),
            se_off,
            se_on,
            se_on / se_off
        ));
    }
    let summary = format!(
        "be_plr_rises={} se_gain_ok={}",
        if plr_ok { "yes" } else { "no" },
        if se_ok { "yes" } else { "no" }
    );
    parts.insert(0, summary);
    l.finish(7, "femto: BE PLR up and SE >= 1.2x", plr_ok && se_ok, parts.join("; "))
}

/// Video fairness: FLS > Log-Rule > PF at 20, 25 and 30 UEs, macro only.
pub fn video_fairness_ordering(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let k = TableKind::Fairness(FlowClass::Video);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [20, 25, 30] {
        let (f, g, p) = (l.get(k, n, Fls, Off), l.get(k, n, LogRule, Off), l.get(k, n, Pf, Off));
        ok &= f > g && g > p;
        parts.push(format!("ues={n}: fls={} logrule={} pf={}", f4(f), f4(g), f4(p)));
    }
    l.finish(8, "video fairness FLS > LogRule > PF", ok, parts.join("; "))
}

/// Video PLR non-decreasing over 10 → 20 → 30 UEs for each scheduler.
pub fn load_monotonicity(t: &SweepTables) -> TrendCheck {
    let mut l = lookup(t);
    let k = TableKind::Plr(FlowClass::Video);
    let mut ok = true;
    let mut parts = Vec::new();
    for s in SchedulerKind::ALL {
        let v: Vec<f64> = [10, 20, 30].iter().map(|&n| l.get(k, n, s, Off)).collect();
        ok &= v[0] <= v[1] && v[1] <= v[2];
        parts.push(format!("{s}: {} -> {} -> {}", f4(v[0]), f4(v[1]), f4(v[2])));
    }
    l.finish(9, "video PLR non-decreasing in load", ok, parts.join("; "))
}

/// Every trend check, in criterion order.
pub fn evaluate(t: &SweepTables) -> Vec<TrendCheck> {
    vec![
        video_plr_ordering(t),
        be_throughput_pf_over_fls(t),
        voip_below_video(t),
        femto_effects(t),
        video_fairness_ordering(t),
        load_monotonicity(t),
    ]
}
