//! Flow sources and per-flow packet queues.
//!
//! Every UE carries three downlink flows: a trace-driven video stream, a
//! G.729 VoIP stream with exponential talk spurts and silences, and a
//! best-effort stream offered at a constant bit rate that keeps its queue
//! backlogged.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowClass {
    #[serde(rename = "video")]
    Video,
    #[serde(rename = "voip")]
    Voip,
    #[serde(rename = "be")]
    BestEffort,
}

impl FlowClass {
    pub const ALL: [FlowClass; 3] = [FlowClass::Video, FlowClass::Voip, FlowClass::BestEffort];

    pub fn as_str(&self) -> &'static str {
        match self {
            FlowClass::Video => "video",
            FlowClass::Voip => "voip",
            FlowClass::BestEffort => "be",
        }
    }

    pub fn is_real_time(&self) -> bool {
        !matches!(self, FlowClass::BestEffort)
    }

    pub fn index(&self) -> usize {
        match self {
            FlowClass::Video => 0,
            FlowClass::Voip => 1,
            FlowClass::BestEffort => 2,
        }
    }
}

impl fmt::Display for FlowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlowClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "video" => Ok(FlowClass::Video),
            "voip" => Ok(FlowClass::Voip),
            "be" => Ok(FlowClass::BestEffort),
            other => Err(Error::config("class", format!("unknown flow class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub class: FlowClass,
    /// Mean offered rate.
    pub rate_bps: f64,
    /// Maximum tolerated queueing delay; 0 for best effort.
    pub delay_target_s: f64,
    /// Tail-drop limit, `None` for unbounded.
    pub capacity_bits: Option<u64>,
}

impl FlowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class.is_real_time() {
            if !(self.rate_bps > 0.0) {
                return Err(Error::config(
                    format!("traffic.{}_rate_bps", self.class),
                    "real-time flows need a positive rate",
                ));
            }
            if !(self.delay_target_s > 0.0) {
                return Err(Error::config(
                    format!("traffic.{}_delay_s", self.class),
                    "real-time flows need a positive delay target",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub size_bits: u64,
    pub arrival_s: f64,
}

/// FIFO of one flow with delivery and loss accounting, all in bits.
#[derive(Debug, Clone, Default)]
pub struct FlowQueue {
    packets: VecDeque<Packet>,
    queued_bits: u64,
    capacity_bits: Option<u64>,
    pub generated_bits: u64,
    pub delivered_bits: u64,
    pub dropped_deadline_bits: u64,
    pub dropped_overflow_bits: u64,
}

impl FlowQueue {
    pub fn new(capacity_bits: Option<u64>) -> Self {
        FlowQueue {
            capacity_bits,
            ..Default::default()
        }
    }

    /// Append a packet; returns false and counts an overflow drop if it does
    /// not fit.
    pub fn enqueue(&mut self, p: Packet) -> bool {
        debug_assert!(self.packets.back().is_none_or(|b| b.arrival_s <= p.arrival_s));
        self.generated_bits += p.size_bits;
        if let Some(cap) = self.capacity_bits {
            if self.queued_bits + p.size_bits > cap {
                self.dropped_overflow_bits += p.size_bits;
                return false;
            }
        }
        self.queued_bits += p.size_bits;
        self.packets.push_back(p);
        true
    }

    pub fn queued_bits(&self) -> u64 {
        self.queued_bits
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn head(&self) -> Option<&Packet> {
        self.packets.front()
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    /// Age of the head-of-line packet, 0 when empty.
    pub fn hol_delay_s(&self, now_s: f64) -> f64 {
        self.packets.front().map_or(0.0, |p| now_s - p.arrival_s)
    }

    /// Drop every packet older than `delay_target_s`. Expired packets always
    /// form a prefix of the FIFO. A non-positive target disables expiry.
    pub fn drop_expired(&mut self, now_s: f64, delay_target_s: f64) -> u64 {
        if delay_target_s <= 0.0 {
            return 0;
        }
        let mut dropped = 0;
        while let Some(p) = self.packets.front() {
            if now_s - p.arrival_s > delay_target_s {
                dropped += p.size_bits;
                self.packets.pop_front();
            } else {
                break;
            }
        }
        self.queued_bits -= dropped;
        self.dropped_deadline_bits += dropped;
        dropped
    }

    /// Bits of queued packets whose deadline is at or before `horizon_s`.
    pub fn expiring_bits(&self, horizon_s: f64, delay_target_s: f64) -> u64 {
        if delay_target_s <= 0.0 {
            return 0;
        }
        self.packets
            .iter()
            .take_while(|p| horizon_s - p.arrival_s >= delay_target_s - 1e-9)
            .map(|p| p.size_bits)
            .sum()
    }

    /// Serve up to `grant_bits` from the head; a packet that does not fit is
    /// segmented and its remainder stays at the head.
    pub fn dequeue_bits(&mut self, grant_bits: u64) -> u64 {
        let mut left = grant_bits;
        while left > 0 {
            let Some(head) = self.packets.front_mut() else { break };
            if head.size_bits <= left {
                left -= head.size_bits;
                self.packets.pop_front();
            } else {
                head.size_bits -= left;
                left = 0;
            }
        }
        let delivered = grant_bits - left;
        self.queued_bits -= delivered;
        self.delivered_bits += delivered;
        delivered
    }

    pub fn dropped_bits(&self) -> u64 {
        self.dropped_deadline_bits + self.dropped_overflow_bits
    }

    /// generated = delivered + dropped + queued
    pub fn is_conserved(&self) -> bool {
        self.generated_bits
            == self.delivered_bits
                + self.dropped_deadline_bits
                + self.dropped_overflow_bits
                + self.queued_bits
    }
}

/// Video frame schedule replayed in a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrace {
    /// `(offset_s, size_bits)` per packet, offsets non-decreasing.
    entries: Vec<(f64, u64)>,
    period_s: f64,
}

pub const VIDEO_FPS: f64 = 25.0;
pub const VIDEO_GOP: usize = 12;
/// I-frame size relative to a P-frame in the synthetic trace.
pub const VIDEO_I_TO_P: u64 = 4;

impl VideoTrace {
    /// Deterministic GOP pattern (one I-frame then eleven P-frames at 25 fps)
    /// whose mean rate is `rate_bps`.
    pub fn synthetic(rate_bps: f64) -> Self {
        let frame_s = 1.0 / VIDEO_FPS;
        let weights = VIDEO_I_TO_P + (VIDEO_GOP as u64 - 1);
        let p_bits = (rate_bps * frame_s * VIDEO_GOP as f64 / weights as f64).round() as u64;
        let entries = (0..VIDEO_GOP)
            .map(|k| {
                let size = if k == 0 { VIDEO_I_TO_P * p_bits } else { p_bits };
                (k as f64 * frame_s, size.max(1))
            })
            .collect();
        VideoTrace {
            entries,
            period_s: VIDEO_GOP as f64 * frame_s,
        }
    }

    /// Read `<time_offset_ms> <size_bytes>` lines and rescale sizes so the
    /// looped trace averages `rate_bps`.
    pub fn load(path: &Path, rate_bps: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, rate_bps)
    }

    pub fn parse(text: &str, origin: &Path, rate_bps: f64) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (i, l) in text.lines().enumerate() {
            let line = l.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(err(i + 1, format!("expected `<time_ms> <bytes>`, got `{line}`")));
            }
            let t: f64 = f[0]
                .parse()
                .map_err(|_| err(i + 1, format!("bad time `{}`", f[0])))?;
            let b: f64 = f[1]
                .parse()
                .map_err(|_| err(i + 1, format!("bad size `{}`", f[1])))?;
            if !(t >= 0.0 && t.is_finite()) || !(b > 0.0 && b.is_finite()) {
                return Err(err(i + 1, "time must be >= 0 and size > 0".into()));
            }
            if raw.last().is_some_and(|&(prev, _)| t < prev * 1e-3) {
                return Err(err(i + 1, "time offsets must be non-decreasing".into()));
            }
            raw.push((t * 1e-3, b * 8.0));
        }
        if raw.len() < 2 {
            return Err(err(0, "trace needs at least two packets".into()));
        }
        let first = raw[0].0;
        let last = raw[raw.len() - 1].0;
        let gap = (last - first) / (raw.len() - 1) as f64;
        if !(gap > 0.0) {
            return Err(err(0, "trace spans zero time".into()));
        }
        let period_s = last - first + gap;
        let total: f64 = raw.iter().map(|&(_, b)| b).sum();
        let scale = rate_bps * period_s / total;
        let entries = raw
            .iter()
            .map(|&(t, b)| (t - first, ((b * scale).round() as u64).max(1)))
            .collect();
        Ok(VideoTrace { entries, period_s })
    }

    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    pub fn mean_rate_bps(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<u64>() as f64 / self.period_s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct VideoSource {
    trace: Arc<VideoTrace>,
    offset_s: f64,
    cycle: u64,
    idx: usize,
}

impl VideoSource {
    /// `start_s` shifts the whole trace; `first_entry` picks where in the
    /// loop playback begins.
    pub fn new(trace: Arc<VideoTrace>, start_s: f64, first_entry: usize) -> Self {
        let idx = first_entry % trace.len();
        VideoSource {
            offset_s: start_s - trace.entries[idx].0,
            trace,
            cycle: 0,
            idx,
        }
    }

    fn next_time(&self) -> f64 {
        self.offset_s + self.cycle as f64 * self.trace.period_s + self.trace.entries[self.idx].0
    }

    fn generate(&mut self, start_s: f64, end_s: f64, out: &mut Vec<Packet>) {
        loop {
            let t = self.next_time();
            if t >= end_s {
                break;
            }
            out.push(Packet {
                size_bits: self.trace.entries[self.idx].1,
                arrival_s: t.max(start_s),
            });
            self.idx += 1;
            if self.idx == self.trace.len() {
                self.idx = 0;
                self.cycle += 1;
            }
        }
    }
}

/// G.729 frame plus RTP-equivalent header: 20 + 12 bytes.
pub const VOIP_PACKET_BITS: u64 = (20 + 12) * 8;
pub const VOIP_INTERVAL_S: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct VoipSource {
    on: bool,
    state_end_s: f64,
    on_dist: Exp<f64>,
    off_dist: Exp<f64>,
    rng: SimRng,
    on_time_s: f64,
    last_t: f64,
    spurt_start_s: f64,
    spurt_sent: u64,
    pending_off: Option<f64>,
}

impl VoipSource {
    /// Starts ON with probability `on_mean / (on_mean + off_mean)`.
    pub fn new(on_mean_s: f64, off_mean_s: f64, mut rng: SimRng) -> Result<Self> {
        let dist = |m: f64, key: &str| {
            if m > 0.0 {
                Exp::new(1.0 / m).map_err(|e| Error::config(key, e.to_string()))
            } else {
                Err(Error::config(key, "must be > 0"))
            }
        };
        let on_dist = dist(on_mean_s, "traffic.voip_on_mean_s")?;
        let off_dist = dist(off_mean_s, "traffic.voip_off_mean_s")?;
        let on = rng.random_bool(on_mean_s / (on_mean_s + off_mean_s));
        Ok(Self::with_state(on, on_dist, off_dist, rng))
    }

    /// Deterministic start: ON at t = 0 for exactly `on_s`, then OFF for `off_s`.
    pub fn scripted(on_s: f64, off_s: f64, rng: SimRng) -> Self {
        let mut s = Self::with_state(true, Exp::new(1.0).unwrap(), Exp::new(1.0).unwrap(), rng);
        s.state_end_s = on_s;
        s.pending_off = Some(off_s);
        s
    }

    fn with_state(on: bool, on_dist: Exp<f64>, off_dist: Exp<f64>, mut rng: SimRng) -> Self {
        let first = if on { on_dist.sample(&mut rng) } else { off_dist.sample(&mut rng) };
        VoipSource {
            on,
            state_end_s: first,
            spurt_start_s: 0.0,
            spurt_sent: 0,
            on_dist,
            off_dist,
            rng,
            on_time_s: 0.0,
            last_t: 0.0,
            pending_off: None,
        }
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    /// Time spent ON up to the end of the last generated window.
    pub fn on_time_s(&self) -> f64 {
        self.on_time_s
    }

    fn toggle(&mut self) {
        let at = self.state_end_s;
        self.on = !self.on;
        let len = if self.on {
            self.spurt_start_s = at;
            self.spurt_sent = 0;
            self.on_dist.sample(&mut self.rng)
        } else {
            self.pending_off.take().unwrap_or_else(|| self.off_dist.sample(&mut self.rng))
        };
        self.state_end_s = at + len;
    }

    fn generate(&mut self, start_s: f64, end_s: f64, out: &mut Vec<Packet>) {
        loop {
            if self.on {
                loop {
                    let t = self.spurt_start_s + self.spurt_sent as f64 * VOIP_INTERVAL_S;
                    if t >= end_s || t >= self.state_end_s {
                        break;
                    }
                    out.push(Packet {
                        size_bits: VOIP_PACKET_BITS,
                        arrival_s: t.max(start_s),
                    });
                    self.spurt_sent += 1;
                }
                let seg_end = self.state_end_s.min(end_s);
                self.on_time_s += (seg_end - self.last_t).max(0.0);
            }
            if self.state_end_s >= end_s {
                break;
            }
            self.last_t = self.state_end_s;
            self.toggle();
        }
        self.last_t = end_s;
    }
}

/// Constant-bit-rate source that emits one chunk per generation window.
#[derive(Debug, Clone)]
pub struct CbrSource {
    rate_bps: f64,
    carry_bits: f64,
}

impl CbrSource {
    pub fn new(rate_bps: f64) -> Self {
        CbrSource {
            rate_bps,
            carry_bits: 0.0,
        }
    }

    fn generate(&mut self, start_s: f64, end_s: f64, out: &mut Vec<Packet>) {
        self.carry_bits += self.rate_bps * (end_s - start_s);
        let bits = self.carry_bits.floor();
        if bits >= 1.0 {
            self.carry_bits -= bits;
            out.push(Packet {
                size_bits: bits as u64,
                arrival_s: start_s,
            });
        }
    }
}

// Sources are created once per flow, so the VoIP variant's size is harmless.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum TrafficSource {
    Video(VideoSource),
    Voip(VoipSource),
    BestEffort(CbrSource),
}

impl TrafficSource {
    /// Packets arriving in `[start_s, end_s)`, appended to `out` in order.
    pub fn generate(&mut self, start_s: f64, end_s: f64, out: &mut Vec<Packet>) {
        match self {
            TrafficSource::Video(s) => s.generate(start_s, end_s, out),
            TrafficSource::Voip(s) => s.generate(start_s, end_s, out),
            TrafficSource::BestEffort(s) => s.generate(start_s, end_s, out),
        }
    }
}
