//! Per-TTI simulation loop.
//!
//! Each TTI runs, in order: fading update and CQI computation, traffic
//! arrivals, deadline drops, FLS quota refresh on frame boundaries,
//! per-cell scheduling, transmission, average-rate update and metric
//! accounting. Interference uses the RB activity of the previous TTI so
//! cells can be scheduled independently; the first TTI assumes every cell
//! transmits on every RB.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::channel::{dbm_to_mw, noise_dbm, CqiTable, FadingField};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::grid::{CellId, GridConfig, RbAllocation, Tti, TTIS_PER_FRAME};
use crate::metrics::{throughput_bps, FlowMetrics, MetricsReport};
use crate::rng::substream;
use crate::scenario::{build_topology, Topology};
use crate::sched::fls::QuotaInput;
use crate::sched::{update_avg_rate, FlowContext, FlsState, Scheduler};
use crate::traffic::{
    CbrSource, FlowClass, FlowQueue, FlowSpec, Packet, TrafficSource, VideoSource, VideoTrace, VoipSource,
};

#[derive(Debug, Clone)]
struct UeState {
    serving: CellId,
    fading: Option<FadingField>,
    /// Mean received power per RB from every cell, mW.
    rx_mw: Vec<f64>,
    cqi: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub id: usize,
    pub ue: usize,
    pub cell: CellId,
    pub spec: FlowSpec,
    pub queue: FlowQueue,
    source: TrafficSource,
    pub avg_rate_bps: f64,
}

#[derive(Debug, Clone)]
struct CellState {
    flows: Vec<usize>,
    fls: FlsState,
    active: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Snapshot {
    /// Generated bits minus the backlog carried into the window, so the
    /// window's offered load includes that backlog and PLR stays within [0, 1].
    generated: u64,
    delivered: u64,
    dropped: u64,
}

/// One grant as recorded in the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrantEvent {
    pub tti: u64,
    pub cell: CellId,
    pub rb: usize,
    pub flow: usize,
    pub cqi: u8,
    pub bits: u64,
}

impl GrantEvent {
    pub fn to_line(&self) -> String {
        format!("{} {} {} {} {} {}", self.tti, self.cell, self.rb, self.flow, self.cqi, self.bits)
    }
}

pub const EVENT_LOG_HEADER: &str = "# tti cell rb flow cqi bits";

pub struct Simulation {
    cfg: ScenarioConfig,
    grid: GridConfig,
    topology: Topology,
    scheduler: Scheduler,
    noise_mw_per_rb: f64,
    ues: Vec<UeState>,
    flows: Vec<FlowState>,
    cells: Vec<CellState>,
    tti: u64,
    total_ttis: u64,
    warmup_ttis: u64,
    snapshot: Vec<Snapshot>,
    ema_horizon: f64,
    event_log: Option<Vec<GrantEvent>>,
    last_allocations: Vec<RbAllocation>,
    arrivals: Vec<Packet>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let table = cfg.cqi_table()?;
        let trace = Arc::new(cfg.video_trace()?);
        let topology = build_topology(cfg, seed)?;
        Self::with_parts(cfg, seed, topology, table, trace)
    }

    /// Simulate a hand-built topology. Used for fixtures; the topology may be
    /// empty.
    pub fn from_topology(cfg: &ScenarioConfig, seed: u64, topology: Topology) -> Result<Self> {
        let table = cfg.cqi_table()?;
        let trace = Arc::new(cfg.video_trace()?);
        Self::with_parts(cfg, seed, topology, table, trace)
    }

    fn with_parts(
        cfg: &ScenarioConfig,
        seed: u64,
        topology: Topology,
        table: CqiTable,
        trace: Arc<VideoTrace>,
    ) -> Result<Self> {
        let grid = GridConfig::new(cfg.bandwidth_mhz)?;
        let n_rbs = grid.n_rbs;
        let tti_s = grid.tti_s;
        let noise_mw_per_rb = dbm_to_mw(noise_dbm(
            grid.rb_width_hz,
            cfg.cells.noise_density_dbm_hz,
            cfg.cells.noise_figure_db,
        ));
        let doppler = cfg.propagation.doppler_hz();
        // scheduler bootstrap: one RB at CQI 1 per TTI
        let avg0 = f64::from(table.rb_capacity_bits(1).max(1)) / tti_s;

        let ues = topology
            .ues
            .iter()
            .map(|u| UeState {
                serving: u.serving,
                fading: cfg.propagation.fading.then(|| {
                    FadingField::new(n_rbs, doppler, tti_s, &mut substream(seed, "fading", &[u.id as u64]))
                }),
                rx_mw: topology.links[u.id].iter().map(|l| l.rx_mw_per_rb()).collect(),
                cqi: vec![0; n_rbs],
            })
            .collect::<Vec<_>>();

        let mut cells: Vec<CellState> = topology
            .cells
            .iter()
            .map(|_| CellState {
                flows: Vec::new(),
                fls: FlsState::default(),
                active: vec![true; n_rbs],
            })
            .collect();

        let mut flows = Vec::with_capacity(topology.flows.len());
        for f in &topology.flows {
            let spec = cfg.traffic.flow_spec(f.class);
            let mut rng = substream(seed, "traffic", &[f.id as u64]);
            let randomize = cfg.traffic.randomize_phase;
            let source = match f.class {
                FlowClass::Video => {
                    let start = if randomize { rng.random::<f64>() * trace.period_s() / trace.len() as f64 } else { 0.0 };
                    let first = if randomize { rng.random_range(0..trace.len()) } else { 0 };
                    TrafficSource::Video(VideoSource::new(trace.clone(), start, first))
                }
                FlowClass::Voip => TrafficSource::Voip(VoipSource::new(
                    cfg.traffic.voip_on_mean_s,
                    cfg.traffic.voip_off_mean_s,
                    rng,
                )?),
                FlowClass::BestEffort => TrafficSource::BestEffort(CbrSource::new(spec.rate_bps)),
            };
            let cell = topology.ues[f.ue].serving;
            cells[cell].flows.push(f.id);
            flows.push(FlowState {
                id: f.id,
                ue: f.ue,
                cell,
                queue: FlowQueue::new(spec.capacity_bits),
                spec,
                source,
                avg_rate_bps: avg0,
            });
        }

        let mut scheduler = Scheduler::new(cfg.sched, table, tti_s);
        scheduler.logrule_queue = cfg.scheduler.logrule_queue;
        let n_flows = flows.len();
        Ok(Simulation {
            cfg: cfg.clone(),
            grid,
            topology,
            scheduler,
            noise_mw_per_rb,
            ues,
            flows,
            cells,
            tti: 0,
            total_ttis: cfg.total_ttis(),
            warmup_ttis: cfg.warmup_ttis(),
            snapshot: vec![Snapshot::default(); n_flows],
            ema_horizon: cfg.scheduler.ema_ttis,
            event_log: None,
            last_allocations: Vec::new(),
            arrivals: Vec::new(),
        })
    }

    /// Record every grant from now on.
    pub fn enable_event_log(&mut self) {
        self.event_log = Some(Vec::new());
    }

    pub fn events(&self) -> &[GrantEvent] {
        self.event_log.as_deref().unwrap_or(&[])
    }

    pub fn write_event_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{EVENT_LOG_HEADER}")?;
        for e in self.events() {
            writeln!(w, "{}", e.to_line())?;
        }
        Ok(())
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn flows(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn is_finished(&self) -> bool {
        self.tti >= self.total_ttis
    }

    /// Allocations made in the most recent TTI, one per cell.
    pub fn last_allocations(&self) -> &[RbAllocation] {
        &self.last_allocations
    }

    /// Current CQI of every RB for `ue`.
    pub fn ue_cqi(&self, ue: usize) -> &[u8] {
        &self.ues[ue].cqi
    }

    fn update_links(&mut self) {
        let first = self.tti == 0;
        let n_rbs = self.grid.n_rbs;
        let table = &self.scheduler.table;
        let cells = &self.cells;
        // only cells with attached flows ever transmit after the first TTI
        let transmitting: Vec<CellId> = (0..cells.len())
            .filter(|&c| first || !cells[c].flows.is_empty())
            .collect();
        for ue in &mut self.ues {
            if let Some(f) = ue.fading.as_mut() {
                if !first {
                    f.advance();
                }
            }
            let s = ue.serving;
            for rb in 0..n_rbs {
                let fade = ue.fading.as_ref().map_or(1.0, |f| f.power(rb));
                let signal = ue.rx_mw[s] * fade;
                let mut interference = 0.0;
                for &c in &transmitting {
                    if c != s && cells[c].active[rb] {
                        interference += ue.rx_mw[c];
                    }
                }
                let sinr = signal / (self.noise_mw_per_rb + interference);
                ue.cqi[rb] = table.sinr_to_cqi(10.0 * sinr.log10());
            }
        }
    }

    /// Advance the simulation by one TTI.
    pub fn step(&mut self) -> Result<()> {
        let tti = Tti::new(self.tti);
        let tti_s = self.grid.tti_s;
        let now = tti.start_s();

        if self.tti == self.warmup_ttis {
            for (s, f) in self.snapshot.iter_mut().zip(&self.flows) {
                *s = Snapshot {
                    generated: f.queue.generated_bits - f.queue.queued_bits(),
                    delivered: f.queue.delivered_bits,
                    dropped: f.queue.dropped_bits(),
                };
            }
        }

        // (1) channel
        self.update_links();

        // (2) arrivals, (3) expiry
        for f in &mut self.flows {
            self.arrivals.clear();
            f.source.generate(now, now + tti_s, &mut self.arrivals);
            for p in self.arrivals.drain(..) {
                f.queue.enqueue(p);
            }
            if f.spec.class.is_real_time() {
                f.queue.drop_expired(now, f.spec.delay_target_s);
            }
        }

        // (4) frame-level quotas
        if tti.frame_start {
            let frame_s = self.grid.frame_s;
            for cell in &mut self.cells {
                let flows = &self.flows;
                cell.fls.refresh(
                    tti.frame_index(),
                    frame_s,
                    cell.flows.iter().map(|&i| &flows[i]).filter(|f| f.spec.class.is_real_time()).map(|f| {
                        QuotaInput {
                            flow: f.id,
                            queue_bits: f.queue.queued_bits(),
                            expiring_bits: f.queue.expiring_bits(now + frame_s, f.spec.delay_target_s),
                            delay_target_s: f.spec.delay_target_s,
                        }
                    }),
                );
            }
        }

        // (5) scheduling
        let n_rbs = self.grid.n_rbs;
        let mut allocations = Vec::with_capacity(self.cells.len());
        for (cid, cell) in self.cells.iter_mut().enumerate() {
            let contexts: Vec<FlowContext<'_>> = cell
                .flows
                .iter()
                .map(|&i| {
                    let f = &self.flows[i];
                    FlowContext {
                        id: f.id,
                        class: f.spec.class,
                        delay_target_s: f.spec.delay_target_s,
                        hol_delay_s: f.queue.hol_delay_s(now),
                        backlog_bits: f.queue.queued_bits(),
                        avg_rate_bps: f.avg_rate_bps,
                        cqi: &self.ues[f.ue].cqi,
                    }
                })
                .collect();
            let alloc = self.scheduler.allocate_tti(self.tti, cid, &contexts, n_rbs, &mut cell.fls);
            for (rb, a) in alloc.assignments().iter().enumerate() {
                cell.active[rb] = a.is_some();
            }
            allocations.push(alloc);
        }

        // (6) transmission
        let mut served = vec![0u64; self.flows.len()];
        for alloc in &allocations {
            for (rb, fid) in alloc.grants() {
                let f = &mut self.flows[fid];
                if f.cell != alloc.cell {
                    return Err(Error::Invariant(format!(
                        "cell {} granted rb {rb} to foreign flow {fid}",
                        alloc.cell
                    )));
                }
                let cqi = self.ues[f.ue].cqi[rb];
                let cap = u64::from(self.scheduler.table.rb_capacity_bits(cqi));
                if f.queue.is_empty() {
                    return Err(Error::Invariant(format!("rb {rb} granted to empty flow {fid}")));
                }
                let bits = f.queue.dequeue_bits(cap);
                served[fid] += bits;
                if let Some(log) = self.event_log.as_mut() {
                    log.push(GrantEvent {
                        tti: self.tti,
                        cell: alloc.cell,
                        rb,
                        flow: fid,
                        cqi,
                        bits,
                    });
                }
            }
        }

        // (7) average rates
        for (f, &bits) in self.flows.iter_mut().zip(&served) {
            f.avg_rate_bps = update_avg_rate(f.avg_rate_bps, bits, tti_s, self.ema_horizon);
        }
        debug_assert!(self.flows.iter().all(|f| f.queue.is_conserved()));

        self.last_allocations = allocations;
        self.tti += 1;
        Ok(())
    }

    /// Step until the configured duration is reached.
    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Check conservation on every flow.
    pub fn check_conservation(&self) -> Result<()> {
        for f in &self.flows {
            if !f.queue.is_conserved() {
                return Err(Error::Invariant(format!("flow {} breaks bit conservation", f.id)));
            }
        }
        Ok(())
    }

    /// FNV-1a digest of every queue counter, backlog and average rate.
    pub fn state_digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        mix(self.tti);
        for f in &self.flows {
            mix(f.queue.generated_bits);
            mix(f.queue.delivered_bits);
            mix(f.queue.dropped_deadline_bits);
            mix(f.queue.dropped_overflow_bits);
            mix(f.queue.queued_bits());
            mix(f.avg_rate_bps.to_bits());
        }
        for u in &self.ues {
            for &c in &u.cqi {
                mix(u64::from(c));
            }
        }
        h
    }

    /// Metrics over the post-warm-up window.
    pub fn report(&self) -> MetricsReport {
        let measured_ttis = self.tti.saturating_sub(self.warmup_ttis);
        let measured_s = measured_ttis as f64 * self.grid.tti_s;
        let flows = self
            .flows
            .iter()
            .zip(&self.snapshot)
            .map(|(f, s)| {
                let (generated, delivered, dropped) = if measured_ttis > 0 {
                    (
                        f.queue.generated_bits - s.generated,
                        f.queue.delivered_bits - s.delivered,
                        f.queue.dropped_bits() - s.dropped,
                    )
                } else {
                    (0, 0, 0)
                };
                FlowMetrics {
                    flow_id: f.id,
                    ue_id: f.ue,
                    cell_id: f.cell,
                    class: f.spec.class,
                    generated_bits: generated,
                    delivered_bits: delivered,
                    dropped_bits: dropped,
                    throughput_bps: throughput_bps(delivered, measured_s),
                    plr: (measured_s > 0.0).then(|| crate::metrics::plr(dropped, generated)),
                }
            })
            .collect();
        MetricsReport::build(
            self.cfg.sched,
            self.cfg.femto,
            self.topology.ues.len(),
            measured_s,
            flows,
            self.grid.bandwidth_hz(),
        )
    }

    pub fn frames_elapsed(&self) -> u64 {
        self.tti / TTIS_PER_FRAME
    }
}

/// Build, run and report one simulation.
pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<MetricsReport> {
    let mut sim = Simulation::new(cfg, seed)?;
    sim.run_to_end()?;
    Ok(sim.report())
}
