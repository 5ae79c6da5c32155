//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use femtosched::channel::CqiTable;
use femtosched::grid::FlowId;
use femtosched::sched::{FlowContext, FlsState, Scheduler, SchedulerKind};
use femtosched::traffic::FlowClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TTI_S: f64 = 1e-3;

/// Owned counterpart of `FlowContext`.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: FlowId,
    pub class: FlowClass,
    pub delay_target_s: f64,
    pub hol_delay_s: f64,
    pub backlog_bits: u64,
    pub avg_rate_bps: f64,
    pub cqi: Vec<u8>,
}

impl Fixture {
    pub fn ctx(&self) -> FlowContext<'_> {
        FlowContext {
            id: self.id,
            class: self.class,
            delay_target_s: self.delay_target_s,
            hol_delay_s: self.hol_delay_s,
            backlog_bits: self.backlog_bits,
            avg_rate_bps: self.avg_rate_bps,
            cqi: &self.cqi,
        }
    }
}

pub fn ctxs(fx: &[Fixture]) -> Vec<FlowContext<'_>> {
    fx.iter().map(Fixture::ctx).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random flows over `n_rbs` RBs with distinct shuffled ids. Every flow is
/// backlogged far beyond one TTI of capacity.
pub fn random_flows(r: &mut impl Rng, n_flows: usize, n_rbs: usize, classes: &[FlowClass]) -> Vec<Fixture> {
    let mut ids: Vec<FlowId> = (0..n_flows * 3).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, r.random_range(0..=i));
    }
    (0..n_flows)
        .map(|i| {
            let class = classes[r.random_range(0..classes.len())];
            Fixture {
                id: ids[i],
                class,
                delay_target_s: if class.is_real_time() { 0.1 } else { 0.0 },
                hol_delay_s: r.random_range(0.0..0.1),
                backlog_bits: 1_000_000,
                avg_rate_bps: r.random_range(1e3..5e6),
                cqi: (0..n_rbs).map(|_| r.random_range(0..=15)).collect(),
            }
        })
        .collect()
}

pub fn scheduler(kind: SchedulerKind) -> Scheduler {
    Scheduler::new(kind, CqiTable::default(), TTI_S)
}

pub fn allocate(kind: SchedulerKind, flows: &[Fixture], n_rbs: usize) -> Vec<Option<FlowId>> {
    scheduler(kind)
        .allocate_tti(0, 0, &ctxs(flows), n_rbs, &mut FlsState::default())
        .assignments()
        .to_vec()
}

/// Independent PF oracle: per RB, the flow maximizing
/// `(capacity / tti) / avg`, lowest id on ties, skipping flows that cannot
/// use the RB or whose backlog is already covered.
pub fn pf_oracle(flows: &[Fixture], n_rbs: usize) -> Vec<Option<FlowId>> {
    let table = CqiTable::default();
    let mut left: Vec<u64> = flows.iter().map(|f| f.backlog_bits).collect();
    let mut out = vec![None; n_rbs];
    for (rb, slot) in out.iter_mut().enumerate() {
        let mut best: Option<(f64, FlowId, usize)> = None;
        for (i, f) in flows.iter().enumerate() {
            let bits = table.rb_capacity_bits(f.cqi[rb]);
            if left[i] == 0 || bits == 0 {
                continue;
            }
            let m = f64::from(bits) / TTI_S / f.avg_rate_bps;
            let wins = match best {
                None => true,
                Some((bm, bid, _)) => m > bm || (m == bm && f.id < bid),
            };
            if wins {
                best = Some((m, f.id, i));
            }
        }
        if let Some((_, id, i)) = best {
            *slot = Some(id);
            left[i] = left[i].saturating_sub(u64::from(table.rb_capacity_bits(flows[i].cqi[rb])));
        }
    }
    out
}

/// Fabricated sweep results on the default grid in which every trend holds.
pub fn healthy_results() -> Vec<femtosched::sweep::SweepResult> {
    use femtosched::config::{FemtoMode, SweepParams};
    use femtosched::sweep::{grid_points, ClassSummary, SweepResult};
    grid_points(&SweepParams::default())
        .into_iter()
        .map(|p| {
            let n = p.n_ues as f64;
            let (video_plr, fairness, be_tput) = match p.sched {
                SchedulerKind::Fls => (0.001 * n, 0.9, 1.0e6),
                SchedulerKind::LogRule => (0.002 * n, 0.8, 1.5e6),
                SchedulerKind::Pf => (0.004 * n, 0.7, 2.0e6),
            };
            let on = p.femto == FemtoMode::On;
            SweepResult {
                point: p,
                seeds: vec![1],
                classes: [
                    ClassSummary { plr: Some(video_plr), fairness: Some(fairness), throughput_bps: Some(128e3 * n) },
                    ClassSummary { plr: Some(video_plr / 2.0), fairness: Some(0.95), throughput_bps: Some(6e3 * n) },
                    ClassSummary {
                        plr: Some(if on { 0.6 } else { 0.5 }),
                        fairness: Some(0.5),
                        throughput_bps: Some(be_tput),
                    },
                ],
                spectral_efficiency: Some(if on { 2.0 } else { 1.0 }),
            }
        })
        .collect()
}

/// Real-time fixtures sharing one delay target and one HOL delay.
pub fn equal_hol_flows(r: &mut impl Rng) -> Vec<Fixture> {
    let n = r.random_range(1..10);
    let hol = r.random_range(0.001..0.1);
    let mut flows = random_flows(r, n, 25, &[FlowClass::Video, FlowClass::Voip]);
    for f in &mut flows {
        f.hol_delay_s = hol;
        f.delay_target_s = 0.1;
    }
    flows
}

/// Fixtures on which Log-Rule with equal HOL delays departs from PF.
pub fn logrule_pf_mismatches(fixtures: u64, seed: u64) -> usize {
    let mut r = rng(seed);
    (0..fixtures)
        .filter(|_| {
            let flows = equal_hol_flows(&mut r);
            allocate(SchedulerKind::LogRule, &flows, 25) != allocate(SchedulerKind::Pf, &flows, 25)
        })
        .count()
}

/// Fixtures on which FLS without quotas departs from PF over best effort.
pub fn fls_pf_mismatches(fixtures: u64, seed: u64) -> usize {
    let mut r = rng(seed);
    (0..fixtures)
        .filter(|_| {
            let n = r.random_range(1..10);
            let flows = random_flows(&mut r, n, 25, &FlowClass::ALL);
            let be_only: Vec<Fixture> = flows.iter().filter(|f| !f.class.is_real_time()).cloned().collect();
            allocate(SchedulerKind::Fls, &flows, 25) != pf_oracle(&be_only, 25)
        })
        .count()
}

/// Largest relative deviation from the mean of bits served to `n_flows`
/// backlogged flows on identical static channels after `ttis` PF TTIs.
pub fn pf_equalization_spread(n_flows: usize, ttis: u64) -> f64 {
    let s = scheduler(SchedulerKind::Pf);
    let mut flows: Vec<Fixture> = (0..n_flows)
        .map(|i| Fixture {
            id: i,
            class: FlowClass::BestEffort,
            delay_target_s: 0.0,
            hol_delay_s: 0.0,
            backlog_bits: u64::MAX / 2,
            avg_rate_bps: 1e5,
            cqi: vec![9; 25],
        })
        .collect();
    let mut served = vec![0u64; n_flows];
    for tti in 0..ttis {
        let alloc = s.allocate_tti(tti, 0, &ctxs(&flows), 25, &mut FlsState::default());
        let mut bits = vec![0u64; n_flows];
        for (rb, id) in alloc.grants() {
            bits[id] += u64::from(s.table.rb_capacity_bits(flows[id].cqi[rb]));
        }
        for (i, f) in flows.iter_mut().enumerate() {
            served[i] += bits[i];
            f.avg_rate_bps = femtosched::sched::update_avg_rate(f.avg_rate_bps, bits[i], TTI_S, 1000.0);
        }
    }
    let mean = served.iter().sum::<u64>() as f64 / n_flows as f64;
    served.iter().map(|&s| (s as f64 - mean).abs() / mean).fold(0.0, f64::max)
}
