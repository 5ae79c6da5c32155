//! Link budget: path loss, wall penetration, shadowing, fast fading, SINR.

pub mod cqi;
pub mod fading;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cqi::CqiTable;
pub use fading::{doppler_hz, FadingField, JakesProcess};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationParams {
    /// Path loss at 1 km, dB.
    pub pathloss_a: f64,
    /// Path loss slope, dB per decade of distance.
    pub pathloss_b: f64,
    /// Attenuation of one outer wall, dB.
    pub penetration_db: f64,
    pub shadowing_mean_db: f64,
    pub shadowing_sigma_db: f64,
    pub ue_speed_kmh: f64,
    pub carrier_hz: f64,
    /// Distances below this are clamped before evaluating path loss.
    pub min_distance_m: f64,
    /// Disable to run with flat (0 dB) fast fading.
    pub fading: bool,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            pathloss_a: 128.1,
            pathloss_b: 37.6,
            penetration_db: 10.0,
            shadowing_mean_db: 0.0,
            shadowing_sigma_db: 8.0,
            ue_speed_kmh: 3.0,
            carrier_hz: 2e9,
            min_distance_m: 10.0,
            fading: true,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::config("propagation.shadowing_sigma_db", "must be >= 0"));
        }
        if !(self.penetration_db >= 0.0) {
            return Err(Error::config("propagation.penetration_db", "must be >= 0"));
        }
        if !(self.ue_speed_kmh >= 0.0) {
            return Err(Error::config("propagation.ue_speed_kmh", "must be >= 0"));
        }
        if !(self.min_distance_m > 0.0) {
            return Err(Error::config("propagation.min_distance_m", "must be > 0"));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::config("propagation.carrier_hz", "must be > 0"));
        }
        Ok(())
    }

    /// `a + b·log10(d)` with `d` in km, clamped below at `min_distance_m`.
    pub fn path_loss_db(&self, d_km: f64) -> Result<f64> {
        if !(d_km > 0.0) {
            return Err(Error::Domain(format!("distance must be > 0 km, got {d_km}")));
        }
        let d = d_km.max(self.min_distance_m / 1000.0);
        Ok(self.pathloss_a + self.pathloss_b * d.log10())
    }

    pub fn ue_speed_mps(&self) -> f64 {
        self.ue_speed_kmh / 3.6
    }

    pub fn doppler_hz(&self) -> f64 {
        doppler_hz(self.ue_speed_mps(), self.carrier_hz)
    }

    pub fn shadowing(&self) -> Shadowing {
        Shadowing {
            mean_db: self.shadowing_mean_db,
            sigma_db: self.shadowing_sigma_db,
        }
    }
}

/// Macro urban path loss with the default constants.
pub fn path_loss_db(d_km: f64) -> Result<f64> {
    PropagationParams::default().path_loss_db(d_km)
}

#[derive(Debug, Clone, Copy)]
pub struct Shadowing {
    pub mean_db: f64,
    pub sigma_db: f64,
}

impl Shadowing {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_db == 0.0 {
            return self.mean_db;
        }
        Normal::new(self.mean_db, self.sigma_db)
            .expect("sigma validated non-negative")
            .sample(rng)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Thermal noise over `bandwidth_hz` including the receiver noise figure.
pub fn noise_dbm(bandwidth_hz: f64, density_dbm_hz: f64, noise_figure_db: f64) -> f64 {
    density_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Received power from a transmitter after every loss term, in dBm.
pub fn received_dbm(
    tx_dbm: f64,
    path_loss_db: f64,
    walls: u32,
    penetration_db: f64,
    shadowing_db: f64,
    fading_db: f64,
) -> f64 {
    tx_dbm - path_loss_db - walls as f64 * penetration_db - shadowing_db + fading_db
}

/// SINR in dB from a serving power and a set of interferer powers (all dBm).
/// The sum is done in linear units.
pub fn sinr_db(
    signal_dbm: f64,
    interferers_dbm: impl IntoIterator<Item = f64>,
    noise_dbm: f64,
) -> f64 {
    let i: f64 = interferers_dbm.into_iter().map(dbm_to_mw).sum();
    mw_to_dbm(dbm_to_mw(signal_dbm) / (dbm_to_mw(noise_dbm) + i))
}

/// Per-RB link quality of one UE for one TTI.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkState {
    pub per_rb_sinr_db: Vec<f64>,
    pub per_rb_cqi: Vec<u8>,
    /// Σ_rb capacity(cqi_rb) / tti, the instantaneous achievable rate.
    pub wideband_rate_bps: f64,
}

impl LinkState {
    pub fn from_sinr(per_rb_sinr_db: Vec<f64>, table: &CqiTable, tti_s: f64) -> Self {
        let per_rb_cqi: Vec<u8> = per_rb_sinr_db.iter().map(|&s| table.sinr_to_cqi(s)).collect();
        let bits: u64 = per_rb_cqi
            .iter()
            .map(|&c| u64::from(table.rb_capacity_bits(c)))
            .sum();
        LinkState {
            per_rb_sinr_db,
            per_rb_cqi,
            wideband_rate_bps: bits as f64 / tti_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn path_loss_reference_points() {
        assert_eq!(path_loss_db(1.0).unwrap(), 128.1);
        assert!((path_loss_db(0.1).unwrap() - 90.5).abs() < 1e-12);
        let two = 128.1 + 37.6 * 2f64.log10();
        assert!((path_loss_db(2.0).unwrap() - two).abs() < 1e-12);
        assert!((path_loss_db(2.0).unwrap() - 139.418).abs() < 1e-3);
    }

    #[test]
    fn path_loss_domain_and_floor() {
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-1.0).is_err());
        let floor = path_loss_db(0.01).unwrap();
        assert_eq!(path_loss_db(0.001).unwrap(), floor);
        assert_eq!(path_loss_db(1e-9).unwrap(), floor);
    }

    #[test]
    fn zero_sigma_shadowing_is_constant() {
        let s = Shadowing { mean_db: 0.0, sigma_db: 0.0 };
        let mut rng = substream(1, "shadowing", &[]);
        assert!((0..100).all(|_| s.sample(&mut rng) == 0.0));
    }

    #[test]
    fn sinr_noise_only() {
        assert!((sinr_db(0.0, [], -100.0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sinr_equal_interferer() {
        let s = sinr_db(-60.0, [-60.0], -250.0);
        assert!(s.abs() < 1e-9, "{s}");
    }

    #[test]
    fn noise_for_one_rb() {
        let n = noise_dbm(180e3, -174.0, 9.0);
        assert!((n - (-174.0 + 52.5527 + 9.0)).abs() < 1e-3, "{n}");
    }

    #[test]
    fn link_state_rate_is_sum_of_rb_capacities() {
        let t = CqiTable::default();
        let sinr = vec![-20.0, 0.0, 5.0, 30.0];
        let ls = LinkState::from_sinr(sinr, &t, 1e-3);
        assert_eq!(ls.per_rb_cqi, vec![0, 5, 8, 15]);
        assert_eq!(ls.wideband_rate_bps, (115 + 252 + 733) as f64 / 1e-3);
    }
}
