//! Frame level scheduler.
//!
//! Upper level, once per 10 ms frame: every real-time flow receives a
//! transmission quota from a linear drain law,
//!
//!   quota = min(q, ceil(q / M) + expiring),   M = max(1, floor(d / frame))
//!
//! where `q` is the queued volume, `d` the delay target and `expiring` the
//! volume whose deadline falls inside the coming frame. A queue that receives
//! no further arrivals drains completely within `M` frames.
//!
//! Lower level, every TTI: real-time flows with quota left are served on
//! their best-CQI RBs first (pairs visited in descending CQI order), then the
//! remaining RBs go to best-effort flows under the PF rule.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use super::{FlowContext, Scheduler};
use crate::grid::{FlowId, RbAllocation};

/// Number of frames over which a queue is drained.
pub fn drain_frames(delay_target_s: f64, frame_s: f64) -> u64 {
    ((delay_target_s / frame_s + 1e-9).floor() as u64).max(1)
}

/// Frame quota for a queue holding `queue_bits`.
pub fn fls_quota(queue_bits: u64, drain_frames: u64, expiring_bits: u64) -> u64 {
    let m = drain_frames.max(1);
    (queue_bits.div_ceil(m) + expiring_bits).min(queue_bits)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowQuota {
    /// Quota assigned at the start of the frame.
    pub granted_bits: u64,
    /// Quota not yet consumed.
    pub residual_bits: u64,
    /// RB capacity handed out in phase 1 during this frame.
    pub phase1_bits: u64,
}

/// Inputs to one quota refresh.
#[derive(Debug, Clone, Copy)]
pub struct QuotaInput {
    pub flow: FlowId,
    pub queue_bits: u64,
    pub expiring_bits: u64,
    pub delay_target_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlsState {
    frame_index: Option<u64>,
    quotas: BTreeMap<FlowId, FlowQuota>,
}

impl FlsState {
    /// Recompute every real-time flow's quota at a frame boundary.
    pub fn refresh(&mut self, frame_index: u64, frame_s: f64, inputs: impl IntoIterator<Item = QuotaInput>) {
        self.frame_index = Some(frame_index);
        self.quotas.clear();
        for inp in inputs {
            let m = drain_frames(inp.delay_target_s, frame_s);
            let q = fls_quota(inp.queue_bits, m, inp.expiring_bits);
            self.quotas.insert(
                inp.flow,
                FlowQuota {
                    granted_bits: q,
                    residual_bits: q,
                    phase1_bits: 0,
                },
            );
        }
    }

    pub fn frame_index(&self) -> Option<u64> {
        self.frame_index
    }

    pub fn quota(&self, flow: FlowId) -> FlowQuota {
        self.quotas.get(&flow).copied().unwrap_or_default()
    }

    pub fn set_residual(&mut self, flow: FlowId, bits: u64) {
        let q = self.quotas.entry(flow).or_default();
        q.granted_bits = q.granted_bits.max(bits);
        q.residual_bits = bits;
    }

    pub fn quotas(&self) -> impl Iterator<Item = (FlowId, FlowQuota)> + '_ {
        self.quotas.iter().map(|(&f, &q)| (f, q))
    }
}

/// Two-phase TTI allocation. Writes consumed quota back into `state`.
pub fn fls_allocate_tti(
    sched: &Scheduler,
    flows: &[FlowContext<'_>],
    state: &mut FlsState,
    alloc: &mut RbAllocation,
) {
    let table = &sched.table;
    let mut backlog: Vec<u64> = flows.iter().map(|f| f.backlog_bits).collect();
    let mut quota: Vec<u64> = flows
        .iter()
        .map(|f| if f.class.is_real_time() { state.quota(f.id).residual_bits } else { 0 })
        .collect();

    // phase 1: real-time quotas, best CQI first
    let mut pairs: Vec<(u8, FlowId, usize, usize)> = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        if quota[i] == 0 || backlog[i] == 0 {
            continue;
        }
        for (rb, &c) in f.cqi.iter().enumerate().take(alloc.n_rbs()) {
            if table.rb_capacity_bits(c) > 0 {
                pairs.push((c, f.id, rb, i));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(c, id, rb, _)| (Reverse(c), id, rb));
    let mut phase1 = vec![0u64; flows.len()];
    for (c, id, rb, i) in pairs {
        if quota[i] == 0 || backlog[i] == 0 || !alloc.is_free(rb) {
            continue;
        }
        let bits = u64::from(table.rb_capacity_bits(c));
        alloc.assign(rb, id).expect("rb checked free");
        quota[i] = quota[i].saturating_sub(bits);
        backlog[i] = backlog[i].saturating_sub(bits);
        phase1[i] += bits;
    }
    for (i, f) in flows.iter().enumerate() {
        if let Some(q) = state.quotas.get_mut(&f.id) {
            q.residual_bits = quota[i];
            q.phase1_bits += phase1[i];
        }
    }

    // phase 2: leftovers to best effort under PF
    sched.metric_allocate(flows, &mut backlog, |f| !f.class.is_real_time(), alloc);
}
