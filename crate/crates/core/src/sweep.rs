//! UE-count × femto-mode × scheduler experiment grid with seed averaging.

use rayon::prelude::*;

use crate::config::{FemtoMode, ScenarioConfig, SweepParams};
use crate::engine;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::sched::SchedulerKind;
use crate::traffic::FlowClass;

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub n_ues: usize,
    pub femto: FemtoMode,
    pub sched: SchedulerKind,
}

impl GridPoint {
    /// Column label used in the sweep tables, e.g. `fls_on`.
    pub fn column(&self) -> String {
        column_label(self.sched, self.femto)
    }
}

pub fn column_label(sched: SchedulerKind, femto: FemtoMode) -> String {
    format!("{}_{}", sched.as_str(), femto.as_str())
}

/// Seed-averaged class metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassSummary {
    pub plr: Option<f64>,
    pub fairness: Option<f64>,
    /// Aggregate class throughput, bits/s.
    pub throughput_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub point: GridPoint,
    pub seeds: Vec<u64>,
    /// Indexed by `FlowClass::index`.
    pub classes: [ClassSummary; 3],
    pub spectral_efficiency: Option<f64>,
}

impl SweepResult {
    pub fn class(&self, class: FlowClass) -> &ClassSummary {
        &self.classes[class.index()]
    }
}

/// Arithmetic mean; absent if any input is absent or the list is empty.
pub fn mean_present(xs: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for x in xs {
        sum += x?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Average per-seed reports of the same grid point.
pub fn average(point: GridPoint, seeds: &[u64], reports: &[MetricsReport]) -> SweepResult {
    let classes = FlowClass::ALL.map(|c| ClassSummary {
        plr: mean_present(reports.iter().map(|r| r.class(c).plr)),
        fairness: mean_present(reports.iter().map(|r| r.class(c).fairness)),
        throughput_bps: mean_present(reports.iter().map(|r| r.class(c).total_throughput_bps)),
    });
    SweepResult {
        point,
        seeds: seeds.to_vec(),
        classes,
        spectral_efficiency: mean_present(reports.iter().map(|r| r.spectral_efficiency)),
    }
}

/// Grid points of a plan in table order: UE count, then femto mode, then
/// scheduler.
pub fn grid_points(plan: &SweepParams) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n_ues in &plan.ue_counts {
        for &femto in &plan.femto_modes {
            for &sched in &plan.schedulers {
                out.push(GridPoint { n_ues, femto, sched });
            }
        }
    }
    out
}

pub fn point_config(base: &ScenarioConfig, p: GridPoint) -> ScenarioConfig {
    ScenarioConfig {
        n_ues: p.n_ues,
        femto: p.femto.enabled(),
        sched: p.sched,
        ..base.clone()
    }
}

/// Run every (grid point, seed) pair of `base.sweep`. Runs are independent
/// and may execute in any order; results come back in grid order.
pub fn run_sweep(base: &ScenarioConfig) -> Result<Vec<SweepResult>> {
    let plan = &base.sweep;
    base.validate()?;
    let points = grid_points(plan);
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| plan.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let reports: Vec<Result<MetricsReport>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let p = points[i];
            engine::run(&point_config(base, p), seed).map_err(|e| match e {
                Error::Invariant(m) => Error::Invariant(format!(
                    "run ues={} femto={} sched={} seed={seed}: {m}",
                    p.n_ues, p.femto, p.sched
                )),
                other => other,
            })
        })
        .collect();
    let mut reports = reports.into_iter();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let per_seed = reports.by_ref().take(plan.seeds.len()).collect::<Result<Vec<_>>>()?;
        out.push(average(p, &plan.seeds, &per_seed));
    }
    Ok(out)
}
