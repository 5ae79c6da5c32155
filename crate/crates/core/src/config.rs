//! Scenario configuration.
//!
//! Scenarios are TOML documents. Every key has a default, so a scenario file
//! only needs the values it changes. Command-line overrides use dotted keys
//! (`traffic.be_rate_bps=2e6`) and are checked against the same key tree.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{CqiTable, PropagationParams};
use crate::error::{Error, Result};
use crate::grid::{rbs_for_bandwidth, TTI_S};
use crate::sched::{QueueMeasure, SchedulerKind};
use crate::traffic::{FlowClass, FlowSpec, VideoTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub bandwidth_mhz: f64,
    pub sched: SchedulerKind,
    pub n_ues: usize,
    pub femto: bool,
    pub duration_s: f64,
    /// Leading interval excluded from every metric.
    pub warmup_s: f64,
    pub seed: u64,
    /// CQI table file; empty for the built-in table.
    pub cqi_table: String,
    /// Fixed UE positions `[x_m, y_m]`; empty to draw them at random.
    pub ue_positions: Vec<[f64; 2]>,
    pub cells: CellParams,
    pub propagation: PropagationParams,
    pub buildings: BuildingParams,
    pub traffic: TrafficParams,
    pub scheduler: SchedulerParams,
    pub sweep: SweepParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            bandwidth_mhz: 5.0,
            sched: SchedulerKind::Pf,
            n_ues: 20,
            femto: false,
            duration_s: 30.0,
            warmup_s: 1.0,
            seed: 1,
            cqi_table: String::new(),
            ue_positions: Vec::new(),
            cells: CellParams::default(),
            propagation: PropagationParams::default(),
            buildings: BuildingParams::default(),
            traffic: TrafficParams::default(),
            scheduler: SchedulerParams::default(),
            sweep: SweepParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellParams {
    pub macro_radius_m: f64,
    /// Total eNB power, spread evenly over all RBs.
    pub macro_tx_dbm: f64,
    /// Total HeNB power, spread evenly over all RBs.
    pub femto_tx_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Redraw a randomly placed UE (position and shadowing) while its mean
    /// macro SNR is below the lowest CQI threshold.
    pub coverage: bool,
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            macro_radius_m: 1500.0,
            macro_tx_dbm: 43.0,
            femto_tx_dbm: 20.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            coverage: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    /// Indoor UEs attach to their own building's HeNB, everyone else to the eNB.
    Closed,
    /// Every UE attaches to the strongest cell.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeRegion {
    /// Uniform over the building district (streets and buildings).
    District,
    /// Uniform over the whole macro disk.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildingParams {
    pub columns: usize,
    pub rows: usize,
    pub size_m: f64,
    /// Street width between neighbouring buildings.
    pub street_m: f64,
    /// District center relative to the eNB.
    pub center_x_m: f64,
    pub center_y_m: f64,
    pub access: Access,
    pub ue_region: UeRegion,
}

impl Default for BuildingParams {
    fn default() -> Self {
        BuildingParams {
            columns: 8,
            rows: 7,
            size_m: 25.0,
            street_m: 10.0,
            center_x_m: 1250.0,
            center_y_m: 0.0,
            access: Access::Closed,
            ue_region: UeRegion::District,
        }
    }
}

impl BuildingParams {
    pub fn count(&self) -> usize {
        self.columns * self.rows
    }

    pub fn pitch_m(&self) -> f64 {
        self.size_m + self.street_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficParams {
    pub video_rate_bps: f64,
    pub video_delay_s: f64,
    /// Packet trace replayed by every video flow; empty for the built-in
    /// GOP pattern.
    pub video_trace: String,
    pub voip_delay_s: f64,
    pub voip_on_mean_s: f64,
    pub voip_off_mean_s: f64,
    /// Offered rate of each best-effort source.
    pub be_rate_bps: f64,
    pub be_queue_bytes: u64,
    /// Queue limit of real-time flows; 0 for unbounded.
    pub rt_queue_bytes: u64,
    /// Randomize each source's start phase.
    pub randomize_phase: bool,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            video_rate_bps: 128e3,
            video_delay_s: 0.15,
            video_trace: String::new(),
            voip_delay_s: 0.1,
            voip_on_mean_s: 3.0,
            voip_off_mean_s: 3.0,
            be_rate_bps: 20e6,
            be_queue_bytes: 1 << 20,
            rt_queue_bytes: 0,
            randomize_phase: true,
        }
    }
}

impl TrafficParams {
    pub fn flow_spec(&self, class: FlowClass) -> FlowSpec {
        let rt_cap = (self.rt_queue_bytes > 0).then_some(self.rt_queue_bytes * 8);
        match class {
            FlowClass::Video => FlowSpec {
                class,
                rate_bps: self.video_rate_bps,
                delay_target_s: self.video_delay_s,
                capacity_bits: rt_cap,
            },
            FlowClass::Voip => FlowSpec {
                class,
                rate_bps: 8.4e3,
                delay_target_s: self.voip_delay_s,
                capacity_bits: rt_cap,
            },
            FlowClass::BestEffort => FlowSpec {
                class,
                rate_bps: self.be_rate_bps,
                delay_target_s: 0.0,
                capacity_bits: Some(self.be_queue_bytes * 8),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerParams {
    /// Averaging horizon of the served-rate EMA, in TTIs.
    pub ema_ttis: f64,
    pub logrule_queue: QueueMeasure,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        SchedulerParams {
            ema_ttis: 1000.0,
            logrule_queue: QueueMeasure::HolDelay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FemtoMode {
    Off,
    On,
}

impl FemtoMode {
    pub fn enabled(&self) -> bool {
        matches!(self, FemtoMode::On)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FemtoMode::Off => "off",
            FemtoMode::On => "on",
        }
    }
}

impl fmt::Display for FemtoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FemtoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(FemtoMode::Off),
            "on" => Ok(FemtoMode::On),
            other => Err(Error::config("femto", format!("unknown femto mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub ue_counts: Vec<usize>,
    pub femto_modes: Vec<FemtoMode>,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            ue_counts: vec![5, 10, 15, 20, 25, 30],
            femto_modes: vec![FemtoMode::Off, FemtoMode::On],
            schedulers: SchedulerKind::ALL.to_vec(),
            seeds: vec![1, 2, 3],
        }
    }
}

impl ScenarioConfig {
    /// Read a scenario file and apply `key=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table =
            toml::from_str(text).map_err(|e| Error::config("<scenario>", e.to_string()))?;
        check_keys(&tree, &valid_keys(), "")?;
        for ov in overrides {
            apply_override(&mut tree, ov)?;
        }
        let cfg: ScenarioConfig = toml::Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<scenario>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.cqi_table, &mut self.traffic.video_trace] {
            if !p.is_empty() && Path::new(p.as_str()).is_relative() {
                *p = base.join(&*p).to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        rbs_for_bandwidth(self.bandwidth_mhz)
            .map_err(|e| Error::config("bandwidth_mhz", e.to_string()))?;
        if self.n_ues == 0 {
            return Err(Error::config("n_ues", "need at least one UE"));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::config("duration_s", "must be > 0"));
        }
        if !(self.warmup_s >= 0.0) || self.warmup_s > self.duration_s {
            return Err(Error::config("warmup_s", "must lie in [0, duration_s]"));
        }
        if !self.ue_positions.is_empty() && self.ue_positions.len() != self.n_ues {
            return Err(Error::config(
                "ue_positions",
                format!("{} positions for {} UEs", self.ue_positions.len(), self.n_ues),
            ));
        }
        if !(self.cells.macro_radius_m > 0.0) {
            return Err(Error::config("cells.macro_radius_m", "must be > 0"));
        }
        self.propagation.validate()?;
        let b = &self.buildings;
        if self.femto && b.count() == 0 {
            return Err(Error::config("buildings", "femtocells need at least one building"));
        }
        if !(b.size_m > 0.0) || !(b.street_m >= 0.0) {
            return Err(Error::config("buildings.size_m", "size must be > 0, street >= 0"));
        }
        for class in FlowClass::ALL {
            self.traffic.flow_spec(class).validate()?;
        }
        if !(self.traffic.be_rate_bps >= 0.0) {
            return Err(Error::config("traffic.be_rate_bps", "must be >= 0"));
        }
        if !(self.scheduler.ema_ttis >= 1.0) {
            return Err(Error::config("scheduler.ema_ttis", "must be >= 1"));
        }
        let s = &self.sweep;
        for (key, empty) in [
            ("sweep.ue_counts", s.ue_counts.is_empty()),
            ("sweep.femto_modes", s.femto_modes.is_empty()),
            ("sweep.schedulers", s.schedulers.is_empty()),
            ("sweep.seeds", s.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::config(key, "must not be empty"));
            }
        }
        if s.ue_counts.contains(&0) {
            return Err(Error::config("sweep.ue_counts", "UE counts must be >= 1"));
        }
        Ok(())
    }

    pub fn cqi_table(&self) -> Result<CqiTable> {
        if self.cqi_table.is_empty() {
            Ok(CqiTable::default())
        } else {
            CqiTable::load(Path::new(&self.cqi_table))
        }
    }

    pub fn video_trace(&self) -> Result<VideoTrace> {
        let t = &self.traffic;
        if t.video_trace.is_empty() {
            Ok(VideoTrace::synthetic(t.video_rate_bps))
        } else {
            VideoTrace::load(&PathBuf::from(&t.video_trace), t.video_rate_bps)
        }
    }

    pub fn total_ttis(&self) -> u64 {
        crate::grid::tti_count(self.duration_s)
    }

    pub fn warmup_ttis(&self) -> u64 {
        crate::grid::tti_count(self.warmup_s)
    }

    pub fn tti_s(&self) -> f64 {
        TTI_S
    }
}

/// Every dotted key accepted in a scenario file or override.
pub fn valid_keys() -> Vec<String> {
    let tree: toml::Table = toml::from_str(&ScenarioConfig::default().to_toml())
        .expect("default config round-trips");
    let mut keys = Vec::new();
    flatten(&tree, "", &mut keys);
    // optional list absent from the default tree
    keys.push("ue_positions".into());
    keys.sort();
    keys.dedup();
    keys
}

fn flatten(t: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(sub) => flatten(sub, &key, out),
            _ => out.push(key),
        }
    }
}

fn check_keys(t: &toml::Table, valid: &[String], prefix: &str) -> Result<()> {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(sub) if valid.iter().any(|vk| vk.starts_with(&format!("{key}."))) => {
                check_keys(sub, valid, &key)?
            }
            _ if valid.contains(&key) => {}
            _ => return Err(unknown_key(&key, valid)),
        }
    }
    Ok(())
}

fn unknown_key(key: &str, valid: &[String]) -> Error {
    Error::config(key, format!("unknown key; valid keys: {}", valid.join(", ")))
}

/// Apply one `dotted.key=value` override to a parsed scenario tree.
pub fn apply_override(tree: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let valid = valid_keys();
    if !valid.iter().any(|k| k == key) {
        return Err(unknown_key(key, &valid));
    }
    let value = parse_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut node = tree;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
