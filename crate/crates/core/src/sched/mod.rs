//! Downlink packet schedulers: proportional fair, Log-Rule and the two-level
//! frame level scheduler (FLS).
//!
//! PF and Log-Rule grant each RB independently to the flow with the highest
//! metric, using that RB's achievable rate as the instantaneous rate and the
//! flow's wideband moving average as the reference rate. Ties go to the
//! lowest flow id. A flow whose backlog is already covered by earlier grants
//! in the same TTI is no longer a candidate.

pub mod fls;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::CqiTable;
use crate::error::{Error, Result};
use crate::grid::{CellId, FlowId, RbAllocation};
use crate::traffic::FlowClass;

pub use fls::{drain_frames, fls_allocate_tti, fls_quota, FlsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Pf,
    #[serde(rename = "logrule")]
    LogRule,
    Fls,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Pf, SchedulerKind::Fls, SchedulerKind::LogRule];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchedulerKind::Pf => "pf",
            SchedulerKind::LogRule => "logrule",
            SchedulerKind::Fls => "fls",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pf" => Ok(SchedulerKind::Pf),
            "logrule" => Ok(SchedulerKind::LogRule),
            "fls" => Ok(SchedulerKind::Fls),
            other => Err(Error::config(
                "sched",
                format!("unknown scheduler `{other}` (valid: pf, logrule, fls)"),
            )),
        }
    }
}

/// What the Log-Rule multiplies by `a_i = 5 / d_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueMeasure {
    /// Head-of-line delay in seconds.
    #[default]
    HolDelay,
    /// Queue length in bits.
    QueueBits,
}

/// Scheduler view of one flow for one TTI.
#[derive(Debug, Clone, Copy)]
pub struct FlowContext<'a> {
    pub id: FlowId,
    pub class: FlowClass,
    pub delay_target_s: f64,
    pub hol_delay_s: f64,
    pub backlog_bits: u64,
    /// Wideband moving-average served rate.
    pub avg_rate_bps: f64,
    /// CQI of the owning UE on every RB.
    pub cqi: &'a [u8],
}

impl FlowContext<'_> {
    fn queue_term(&self, measure: QueueMeasure) -> f64 {
        match measure {
            QueueMeasure::HolDelay => self.hol_delay_s,
            QueueMeasure::QueueBits => self.backlog_bits as f64,
        }
    }
}

/// Proportional fair: instantaneous over average rate.
pub fn pf_metric(inst_rate_bps: f64, avg_rate_bps: f64) -> f64 {
    inst_rate_bps / avg_rate_bps
}

/// Log-Rule: `ln(1 + (5/d)·q) · inst/avg`.
pub fn logrule_metric(inst_rate_bps: f64, avg_rate_bps: f64, queue: f64, delay_target_s: f64) -> f64 {
    let a = 5.0 / delay_target_s;
    (1.0 + a * queue).ln() * pf_metric(inst_rate_bps, avg_rate_bps)
}

/// One step of the exponential moving average over `horizon_ttis`.
pub fn update_avg_rate(avg_rate_bps: f64, served_bits: u64, tti_s: f64, horizon_ttis: f64) -> f64 {
    let beta = 1.0 / horizon_ttis;
    (1.0 - beta) * avg_rate_bps + beta * (served_bits as f64 / tti_s)
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    pub kind: SchedulerKind,
    pub table: CqiTable,
    pub tti_s: f64,
    pub logrule_queue: QueueMeasure,
}

impl Scheduler {
    pub fn new(kind: SchedulerKind, table: CqiTable, tti_s: f64) -> Self {
        Scheduler {
            kind,
            table,
            tti_s,
            logrule_queue: QueueMeasure::HolDelay,
        }
    }

    /// Metric of `flow` on an RB that carries `rb_bits` for it.
    pub fn metric(&self, flow: &FlowContext<'_>, rb_bits: u32) -> f64 {
        let inst = f64::from(rb_bits) / self.tti_s;
        match self.kind {
            SchedulerKind::LogRule if flow.class.is_real_time() => logrule_metric(
                inst,
                flow.avg_rate_bps,
                flow.queue_term(self.logrule_queue),
                flow.delay_target_s,
            ),
            _ => pf_metric(inst, flow.avg_rate_bps),
        }
    }

    /// Build the RB allocation of `cell` for this TTI.
    pub fn allocate_tti(
        &self,
        tti_index: u64,
        cell: CellId,
        flows: &[FlowContext<'_>],
        n_rbs: usize,
        fls: &mut FlsState,
    ) -> RbAllocation {
        let mut alloc = RbAllocation::empty(tti_index, cell, n_rbs);
        match self.kind {
            SchedulerKind::Fls => fls_allocate_tti(self, flows, fls, &mut alloc),
            _ => {
                let mut residual: Vec<u64> = flows.iter().map(|f| f.backlog_bits).collect();
                self.metric_allocate(flows, &mut residual, |_| true, &mut alloc);
            }
        }
        alloc
    }

    /// Per-RB metric argmax over the flows accepted by `eligible`, for every
    /// RB still free in `alloc`.
    pub(crate) fn metric_allocate(
        &self,
        flows: &[FlowContext<'_>],
        residual: &mut [u64],
        eligible: impl Fn(&FlowContext<'_>) -> bool,
        alloc: &mut RbAllocation,
    ) {
        for rb in 0..alloc.n_rbs() {
            if !alloc.is_free(rb) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (i, f) in flows.iter().enumerate() {
                if residual[i] == 0 || !eligible(f) {
                    continue;
                }
                let bits = self.table.rb_capacity_bits(f.cqi[rb]);
                if bits == 0 {
                    continue;
                }
                let m = self.metric(f, bits);
                let better = match best {
                    None => true,
                    Some((j, bm)) => m > bm || (m == bm && f.id < flows[j].id),
                };
                if better {
                    best = Some((i, m));
                }
            }
            if let Some((i, _)) = best {
                let bits = u64::from(self.table.rb_capacity_bits(flows[i].cqi[rb]));
                alloc.assign(rb, flows[i].id).expect("rb checked free");
                residual[i] = residual[i].saturating_sub(bits);
            }
        }
    }
}
