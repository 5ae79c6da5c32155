//! Throughput, packet loss, Jain fairness and spectral efficiency.

use serde::{Deserialize, Serialize};

use crate::sched::SchedulerKind;
use crate::traffic::FlowClass;

/// Mean delivered rate over the measurement window; absent for an empty
/// window.
pub fn throughput_bps(delivered_bits: u64, measured_s: f64) -> Option<f64> {
    (measured_s > 0.0).then(|| delivered_bits as f64 / measured_s)
}

/// Fraction of generated traffic lost to deadline expiry or overflow.
pub fn plr(dropped_bits: u64, generated_bits: u64) -> f64 {
    if generated_bits == 0 {
        0.0
    } else {
        dropped_bits as f64 / generated_bits as f64
    }
}

/// Jain's index `(Σx)² / (N·Σx²)`; absent when every entry is zero.
pub fn jain_fairness(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let sum: f64 = xs.iter().sum();
    let sq: f64 = xs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return None;
    }
    Some(sum * sum / (xs.len() as f64 * sq))
}

/// Delivered bits per second per Hz of system bandwidth.
pub fn spectral_efficiency(delivered_bits: u64, measured_s: f64, bandwidth_hz: f64) -> Option<f64> {
    (measured_s > 0.0 && bandwidth_hz > 0.0).then(|| delivered_bits as f64 / (measured_s * bandwidth_hz))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub flow_id: usize,
    pub ue_id: usize,
    pub cell_id: usize,
    pub class: FlowClass,
    pub generated_bits: u64,
    pub delivered_bits: u64,
    pub dropped_bits: u64,
    pub throughput_bps: Option<f64>,
    pub plr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: FlowClass,
    pub n_flows: usize,
    /// Pooled over the class: Σ dropped / Σ generated.
    pub plr: Option<f64>,
    pub fairness: Option<f64>,
    pub mean_throughput_bps: Option<f64>,
    /// Sum over the class's flows.
    pub total_throughput_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheduler: SchedulerKind,
    pub femto: bool,
    pub n_ues: usize,
    pub measured_duration_s: f64,
    pub flows: Vec<FlowMetrics>,
    pub classes: Vec<ClassMetrics>,
    pub spectral_efficiency: Option<f64>,
}

impl MetricsReport {
    pub fn build(
        scheduler: SchedulerKind,
        femto: bool,
        n_ues: usize,
        measured_duration_s: f64,
        flows: Vec<FlowMetrics>,
        bandwidth_hz: f64,
    ) -> Self {
        let window = measured_duration_s > 0.0;
        let classes = FlowClass::ALL
            .iter()
            .map(|&class| {
                let members: Vec<&FlowMetrics> = flows.iter().filter(|f| f.class == class).collect();
                let generated: u64 = members.iter().map(|f| f.generated_bits).sum();
                let dropped: u64 = members.iter().map(|f| f.dropped_bits).sum();
                let tputs: Option<Vec<f64>> = members.iter().map(|f| f.throughput_bps).collect();
                let tputs = tputs.filter(|t| !t.is_empty());
                ClassMetrics {
                    class,
                    n_flows: members.len(),
                    plr: window.then(|| plr(dropped, generated)),
                    fairness: tputs.as_deref().and_then(jain_fairness),
                    mean_throughput_bps: tputs.as_ref().map(|t| t.iter().sum::<f64>() / t.len() as f64),
                    total_throughput_bps: tputs.as_ref().map(|t| t.iter().sum()),
                }
            })
            .collect();
        let delivered: u64 = flows.iter().map(|f| f.delivered_bits).sum();
        MetricsReport {
            scheduler,
            femto,
            n_ues,
            measured_duration_s,
            spectral_efficiency: spectral_efficiency(delivered, measured_duration_s, bandwidth_hz),
            flows,
            classes,
        }
    }

    pub fn class(&self, class: FlowClass) -> &ClassMetrics {
        &self.classes[class.index()]
    }
}
