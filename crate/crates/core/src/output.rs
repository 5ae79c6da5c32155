//! CSV writers and readers for run and sweep outputs.
//!
//! Every file has a one-line header and uses `.` as the decimal separator.
//! Absent values are written as `NA`. Floats use Rust's shortest round-trip
//! formatting, so reading a file and writing it back is a fixed point.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::FemtoMode;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::sched::SchedulerKind;
use crate::sweep::{column_label, SweepResult};
use crate::traffic::FlowClass;

pub const NA: &str = "NA";

pub fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => NA.to_string(),
    }
}

pub fn parse_value(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s == NA {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Some(x)),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `metrics.csv`: one row per flow.
pub fn write_flow_metrics(path: &Path, report: &MetricsReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .flows
        .iter()
        .map(|f| {
            vec![
                f.flow_id.to_string(),
                f.ue_id.to_string(),
                f.class.as_str().to_string(),
                fmt_value(f.throughput_bps),
                fmt_value(f.plr),
            ]
        })
        .collect();
    write_rows(path, &["flow_id", "ue_id", "class", "throughput_bps", "plr"], &rows)
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "scheduler",
    "femto",
    "ues",
    "class",
    "fairness",
    "plr",
    "mean_throughput_bps",
    "total_throughput_bps",
    "spectral_efficiency",
];

/// `summary.csv`: one row per flow class.
pub fn write_summary(path: &Path, report: &MetricsReport) -> Result<()> {
    let femto = if report.femto { FemtoMode::On } else { FemtoMode::Off };
    let rows: Vec<Vec<String>> = report
        .classes
        .iter()
        .map(|c| {
            vec![
                report.scheduler.as_str().to_string(),
                femto.as_str().to_string(),
                report.n_ues.to_string(),
                c.class.as_str().to_string(),
                fmt_value(c.fairness),
                fmt_value(c.plr),
                fmt_value(c.mean_throughput_bps),
                fmt_value(c.total_throughput_bps),
                fmt_value(report.spectral_efficiency),
            ]
        })
        .collect();
    write_rows(path, &SUMMARY_HEADER, &rows)
}

/// Write both single-run files into `dir`.
pub fn write_run(dir: &Path, report: &MetricsReport) -> Result<()> {
    ensure_dir(dir)?;
    write_flow_metrics(&dir.join("metrics.csv"), report)?;
    write_summary(&dir.join("summary.csv"), report)
}

/// Metric tables produced by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TableKind {
    Fairness(FlowClass),
    Plr(FlowClass),
    Throughput(FlowClass),
    SpectralEfficiency,
}

impl TableKind {
    pub fn all() -> Vec<TableKind> {
        let mut v = Vec::new();
        for c in FlowClass::ALL {
            v.push(TableKind::Fairness(c));
        }
        for c in FlowClass::ALL {
            v.push(TableKind::Plr(c));
        }
        for c in FlowClass::ALL {
            v.push(TableKind::Throughput(c));
        }
        v.push(TableKind::SpectralEfficiency);
        v
    }

    pub fn file_name(&self) -> String {
        match self {
            TableKind::Fairness(c) => format!("fairness_{}.csv", c.as_str()),
            TableKind::Plr(c) => format!("plr_{}.csv", c.as_str()),
            TableKind::Throughput(c) => format!("throughput_{}.csv", c.as_str()),
            TableKind::SpectralEfficiency => "spectral_efficiency.csv".to_string(),
        }
    }

    fn value(&self, r: &SweepResult) -> Option<f64> {
        match self {
            TableKind::Fairness(c) => r.class(*c).fairness,
            TableKind::Plr(c) => r.class(*c).plr,
            TableKind::Throughput(c) => r.class(*c).throughput_bps,
            TableKind::SpectralEfficiency => r.spectral_efficiency,
        }
    }
}

/// Rows are UE counts, columns `<scheduler>_<femto>`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
}

impl Table {
    pub fn from_results(kind: TableKind, results: &[SweepResult]) -> Table {
        let mut columns: Vec<String> = Vec::new();
        let mut cells: BTreeMap<usize, BTreeMap<String, Option<f64>>> = BTreeMap::new();
        for r in results {
            let col = r.point.column();
            if !columns.contains(&col) {
                columns.push(col.clone());
            }
            cells.entry(r.point.n_ues).or_default().insert(col, kind.value(r));
        }
        // keep femto-off columns ahead of femto-on columns
        let order = |c: &String| c.ends_with("_on");
        columns.sort_by_key(order);
        let rows = cells
            .into_iter()
            .map(|(ues, m)| (ues, columns.iter().map(|c| m.get(c).copied().flatten()).collect()))
            .collect();
        Table { columns, rows }
    }

    pub fn get(&self, ues: usize, sched: SchedulerKind, femto: FemtoMode) -> Option<f64> {
        let col = column_label(sched, femto);
        let j = self.columns.iter().position(|c| *c == col)?;
        self.rows.iter().find(|(u, _)| *u == ues).and_then(|(_, v)| v[j])
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut header = vec!["ues"];
        header.extend(self.columns.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(u, vals)| {
                let mut r = vec![u.to_string()];
                r.extend(vals.iter().map(|v| fmt_value(*v)));
                r
            })
            .collect();
        write_rows(path, &header, &rows)
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Csv {
                path: path.to_path_buf(),
                message: "missing or unreadable".to_string(),
            },
            _ => csv_err(path, e),
        })?;
        let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
        if header.get(0) != Some("ues") {
            return Err(csv_err(path, "first column must be `ues`"));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = i + 2;
            let ues = rec[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| csv_err(path, format!("line {line}: bad UE count `{}`", &rec[0])))?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| parse_value(s).map_err(|m| csv_err(path, format!("line {line}: {m}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push((ues, vals));
        }
        Ok(Table { columns, rows })
    }
}

/// All sweep tables, keyed by kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTables {
    pub tables: BTreeMap<TableKind, Table>,
}

impl SweepTables {
    pub fn from_results(results: &[SweepResult]) -> Self {
        SweepTables {
            tables: TableKind::all()
                .into_iter()
                .map(|k| (k, Table::from_results(k, results)))
                .collect(),
        }
    }

    pub fn table(&self, kind: TableKind) -> Option<&Table> {
        self.tables.get(&kind)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(dir)?;
        let mut out = Vec::new();
        for (k, t) in &self.tables {
            let p = dir.join(k.file_name());
            t.write(&p)?;
            out.push(p);
        }
        Ok(out)
    }

    /// Load every table; the first missing file is reported by name.
    pub fn read(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "output directory not found"),
            ));
        }
        let mut tables = BTreeMap::new();
        for k in TableKind::all() {
            let p = dir.join(k.file_name());
            if !p.is_file() {
                return Err(Error::Csv {
                    path: p,
                    message: "missing sweep table".to_string(),
                });
            }
            tables.insert(k, Table::read(&p)?);
        }
        Ok(SweepTables { tables })
    }
}
