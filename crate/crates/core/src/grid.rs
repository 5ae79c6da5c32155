//! Downlink time/frequency lattice.
//!
//! Time is divided into 10 ms frames of ten 1 ms subframes (TTIs), each made
//! of two 0.5 ms slots. Frequency is divided into 180 kHz resource blocks of
//! twelve 15 kHz subcarriers. Scheduling happens once per TTI on RB pairs;
//! slots are carried as metadata only.

use crate::error::{Error, Result};

pub const TTI_S: f64 = 1e-3;
pub const FRAME_S: f64 = 1e-2;
pub const TTIS_PER_FRAME: u64 = 10;
pub const SLOT_S: f64 = 5e-4;
pub const SUBCARRIERS_PER_RB: u32 = 12;
pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;
pub const RB_WIDTH_HZ: f64 = 180e3;

pub type FlowId = usize;
pub type CellId = usize;

/// Supported channel bandwidths and their RB counts.
pub const BANDWIDTH_TABLE: [(f64, usize); 6] = [
    (1.4, 6),
    (3.0, 15),
    (5.0, 25),
    (10.0, 50),
    (15.0, 75),
    (20.0, 100),
];

/// Number of resource blocks available in a channel of `bandwidth_mhz`.
pub fn rbs_for_bandwidth(bandwidth_mhz: f64) -> Result<usize> {
    BANDWIDTH_TABLE
        .iter()
        .find(|(bw, _)| (bw - bandwidth_mhz).abs() < 1e-9)
        .map(|&(_, n)| n)
        .ok_or(Error::UnsupportedBandwidth(bandwidth_mhz))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub bandwidth_mhz: f64,
    pub n_rbs: usize,
    pub tti_s: f64,
    pub frame_s: f64,
    pub slot_s: f64,
    pub subcarriers_per_rb: u32,
    pub subcarrier_spacing_hz: f64,
    pub rb_width_hz: f64,
}

impl GridConfig {
    pub fn new(bandwidth_mhz: f64) -> Result<Self> {
        Ok(GridConfig {
            bandwidth_mhz,
            n_rbs: rbs_for_bandwidth(bandwidth_mhz)?,
            tti_s: TTI_S,
            frame_s: FRAME_S,
            slot_s: SLOT_S,
            subcarriers_per_rb: SUBCARRIERS_PER_RB,
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
            rb_width_hz: RB_WIDTH_HZ,
        })
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_mhz * 1e6
    }

    /// Spectrum actually occupied by the RBs (the rest is guard band).
    pub fn occupied_hz(&self) -> f64 {
        self.n_rbs as f64 * self.rb_width_hz
    }
}

/// One tick of the scheduling clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tti {
    pub index: u64,
    /// Set on the first TTI of every frame.
    pub frame_start: bool,
}

impl Tti {
    pub fn new(index: u64) -> Self {
        Tti {
            index,
            frame_start: index.is_multiple_of(TTIS_PER_FRAME),
        }
    }

    pub fn start_s(&self) -> f64 {
        self.index as f64 * TTI_S
    }

    pub fn frame_index(&self) -> u64 {
        self.index / TTIS_PER_FRAME
    }
}

/// Number of whole TTIs in `duration_s`.
pub fn tti_count(duration_s: f64) -> u64 {
    if duration_s <= 0.0 {
        return 0;
    }
    // absorb representation error so 0.01 / 1e-3 counts as 10
    (duration_s / TTI_S + 1e-9).floor() as u64
}

/// Consecutive TTIs covering `duration_s`, starting at index 0.
pub fn tti_clock(duration_s: f64) -> TtiClock {
    TtiClock::starting_at(0, duration_s)
}

#[derive(Debug, Clone)]
pub struct TtiClock {
    next: u64,
    end: u64,
}

impl TtiClock {
    pub fn starting_at(first: u64, duration_s: f64) -> Self {
        TtiClock {
            next: first,
            end: first + tti_count(duration_s),
        }
    }
}

impl Iterator for TtiClock {
    type Item = Tti;

    fn next(&mut self) -> Option<Tti> {
        if self.next >= self.end {
            return None;
        }
        let t = Tti::new(self.next);
        self.next += 1;
        Some(t)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for TtiClock {}

/// RB-to-flow assignment of one cell for one TTI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbAllocation {
    pub tti_index: u64,
    pub cell: CellId,
    assignments: Vec<Option<FlowId>>,
}

impl RbAllocation {
    pub fn empty(tti_index: u64, cell: CellId, n_rbs: usize) -> Self {
        RbAllocation {
            tti_index,
            cell,
            assignments: vec![None; n_rbs],
        }
    }

    pub fn n_rbs(&self) -> usize {
        self.assignments.len()
    }

    /// Grant `rb` to `flow`. Fails if the RB is out of range or already taken.
    pub fn assign(&mut self, rb: usize, flow: FlowId) -> Result<()> {
        let n = self.assignments.len();
        match self.assignments.get_mut(rb) {
            None => Err(Error::Invariant(format!("rb {rb} outside [0, {n})"))),
            Some(Some(prev)) => Err(Error::Invariant(format!(
                "rb {rb} already granted to flow {prev}"
            ))),
            Some(slot) => {
                *slot = Some(flow);
                Ok(())
            }
        }
    }

    pub fn owner(&self, rb: usize) -> Option<FlowId> {
        self.assignments.get(rb).copied().flatten()
    }

    pub fn is_free(&self, rb: usize) -> bool {
        self.owner(rb).is_none()
    }

    pub fn assignments(&self) -> &[Option<FlowId>] {
        &self.assignments
    }

    /// `(rb, flow)` pairs for every granted RB, in RB order.
    pub fn grants(&self) -> impl Iterator<Item = (usize, FlowId)> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(rb, f)| f.map(|f| (rb, f)))
    }

    pub fn assigned_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_some()).count()
    }

    pub fn unassigned_count(&self) -> usize {
        self.n_rbs() - self.assigned_count()
    }
}
