//! SINR to CQI mapping and per-RB transport capacity.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAX_CQI: u8 = 15;
const LEVELS: usize = 16;

/// Resource elements carrying data in one RB pair: 12 subcarriers times
/// 11 OFDM symbols (14 per subframe minus 3 control symbols).
pub const DATA_SYMBOLS_PER_TTI: u32 = 11;
pub const DATA_RES_PER_RB: u32 = 12 * DATA_SYMBOLS_PER_TTI;

const DEFAULT_TABLE: &str = include_str!("../../assets/cqi_table.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct CqiTable {
    thresholds_db: [f64; LEVELS],
    efficiency: [f64; LEVELS],
    capacity_bits: [u32; LEVELS],
}

impl Default for CqiTable {
    fn default() -> Self {
        CqiTable::parse(DEFAULT_TABLE, Path::new("<builtin cqi table>"))
            .expect("builtin CQI table is valid")
    }
}

impl CqiTable {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CqiTable::parse(&text, path)
    }

    /// Parse the `<cqi> <threshold_db> <efficiency>` text format.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut thresholds_db = [f64::NAN; LEVELS];
        let mut efficiency = [f64::NAN; LEVELS];
        let mut seen = [false; LEVELS];

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(lineno, format!("expected 3 fields, got {}", fields.len())));
            }
            let cqi: usize = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad cqi `{}`", fields[0])))?;
            if cqi >= LEVELS {
                return Err(err(lineno, format!("cqi {cqi} outside 0..=15")));
            }
            if seen[cqi] {
                return Err(err(lineno, format!("duplicate cqi {cqi}")));
            }
            let th: f64 = fields[1]
                .parse()
                .map_err(|_| err(lineno, format!("bad threshold `{}`", fields[1])))?;
            let eff: f64 = fields[2]
                .parse()
                .map_err(|_| err(lineno, format!("bad efficiency `{}`", fields[2])))?;
            if !(eff >= 0.0 && eff.is_finite()) || th.is_nan() {
                return Err(err(lineno, "threshold/efficiency out of range".into()));
            }
            seen[cqi] = true;
            thresholds_db[cqi] = th;
            efficiency[cqi] = eff;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(err(0, format!("cqi {missing} missing")));
        }
        for c in 1..LEVELS {
            if thresholds_db[c] <= thresholds_db[c - 1] || efficiency[c] < efficiency[c - 1] {
                return Err(err(0, format!("table not monotone at cqi {c}")));
            }
        }
        if efficiency[0] != 0.0 {
            return Err(err(0, "cqi 0 must carry no data".into()));
        }
        let mut capacity_bits = [0u32; LEVELS];
        for (c, cap) in capacity_bits.iter_mut().enumerate() {
            *cap = (efficiency[c] * DATA_RES_PER_RB as f64).floor() as u32;
        }
        Ok(CqiTable {
            thresholds_db,
            efficiency,
            capacity_bits,
        })
    }

    /// Highest CQI whose threshold does not exceed `sinr_db`.
    pub fn sinr_to_cqi(&self, sinr_db: f64) -> u8 {
        if sinr_db.is_nan() {
            return 0;
        }
        // thresholds are strictly increasing; index 0 is -inf
        let above = self.thresholds_db.partition_point(|&t| t <= sinr_db);
        above.saturating_sub(1) as u8
    }

    /// Bits one RB carries in one TTI at `cqi`.
    pub fn rb_capacity_bits(&self, cqi: u8) -> u32 {
        self.capacity_bits[cqi.min(MAX_CQI) as usize]
    }

    pub fn threshold_db(&self, cqi: u8) -> f64 {
        self.thresholds_db[cqi as usize]
    }

    pub fn efficiency(&self, cqi: u8) -> f64 {
        self.efficiency[cqi as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let t = CqiTable::default();
        assert_eq!(t.sinr_to_cqi(-30.0), 0);
        assert_eq!(t.sinr_to_cqi(30.0), 15);
        assert_eq!(t.sinr_to_cqi(f64::NEG_INFINITY), 0);
        assert_eq!(t.sinr_to_cqi(f64::INFINITY), 15);
    }

    #[test]
    fn boundaries_map_to_higher_cqi() {
        let t = CqiTable::default();
        for c in 1..=MAX_CQI {
            let th = t.threshold_db(c);
            // linear scan oracle
            let oracle = (0..=MAX_CQI).filter(|&k| t.threshold_db(k) <= th).max().unwrap();
            assert_eq!(t.sinr_to_cqi(th), c);
            assert_eq!(oracle, c);
            assert_eq!(t.sinr_to_cqi(th - 1e-9), c - 1);
        }
    }

    #[test]
    fn capacity_values() {
        let t = CqiTable::default();
        assert_eq!(t.rb_capacity_bits(0), 0);
        assert_eq!(t.rb_capacity_bits(15), 733);
        assert_eq!(t.rb_capacity_bits(1), 20);
        for c in 0..MAX_CQI {
            assert!(t.rb_capacity_bits(c + 1) >= t.rb_capacity_bits(c));
        }
    }

    #[test]
    fn thresholds_follow_capacity_fit() {
        let t = CqiTable::default();
        for c in 1..=MAX_CQI {
            let fit = 10.0 * (2f64.powf(t.efficiency(c)) - 1.0).log10();
            assert!((fit - t.threshold_db(c)).abs() < 1e-4, "cqi {c}");
        }
    }

    #[test]
    fn parse_rejects_bad_tables() {
        let p = Path::new("x");
        assert!(CqiTable::parse("0 -inf 0.0\n", p).is_err());
        let mut lines: Vec<String> = DEFAULT_TABLE.lines().map(String::from).collect();
        lines.retain(|l| !l.starts_with("7 "));
        assert!(CqiTable::parse(&lines.join("\n"), p).is_err());
        let swapped = DEFAULT_TABLE.replace("8 4.4229", "8 0.1");
        assert!(CqiTable::parse(&swapped, p).is_err());
    }
}
