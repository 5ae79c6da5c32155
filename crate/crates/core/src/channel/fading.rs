//! Rayleigh fast fading from a sum-of-sinusoids Jakes generator.
//!
//! Each (UE, RB) pair owns an independent process
//!
//!   h(t) = sqrt(2/M) Σ_n [cos ψ_n cos(ω t cos α_n + φ) + j sin ψ_n cos(ω t sin α_n + φ)]
//!
//! with α_n = (2πn − π + θ) / 4M and θ, φ, ψ_n uniform on [−π, π), ω = 2π f_D.
//! E|h|² = 1 and the ensemble autocorrelation follows J₀(2π f_D τ).

use std::f64::consts::PI;

use rand::Rng;

use crate::rng::SimRng;

pub const OSCILLATORS: usize = 8;

/// Doppler shift for a terminal moving at `speed_mps` on `carrier_hz`.
pub fn doppler_hz(speed_mps: f64, carrier_hz: f64) -> f64 {
    speed_mps * carrier_hz / 299_792_458.0
}

#[derive(Debug, Clone)]
pub struct JakesProcess {
    // per oscillator: weight and angular frequency of the I and Q branches
    w_i: [f64; OSCILLATORS],
    w_q: [f64; OSCILLATORS],
    om_i: [f64; OSCILLATORS],
    om_q: [f64; OSCILLATORS],
    phase: f64,
}

impl JakesProcess {
    pub fn new(doppler_hz: f64, rng: &mut SimRng) -> Self {
        let m = OSCILLATORS as f64;
        let theta = rng.random_range(-PI..PI);
        let phase = rng.random_range(-PI..PI);
        let omega = 2.0 * PI * doppler_hz;
        let scale = (2.0 / m).sqrt();
        let mut p = JakesProcess {
            w_i: [0.0; OSCILLATORS],
            w_q: [0.0; OSCILLATORS],
            om_i: [0.0; OSCILLATORS],
            om_q: [0.0; OSCILLATORS],
            phase,
        };
        for n in 0..OSCILLATORS {
            let psi = rng.random_range(-PI..PI);
            let alpha = (2.0 * PI * (n + 1) as f64 - PI + theta) / (4.0 * m);
            p.w_i[n] = scale * psi.cos();
            p.w_q[n] = scale * psi.sin();
            p.om_i[n] = omega * alpha.cos();
            p.om_q[n] = omega * alpha.sin();
        }
        p
    }

    /// Complex gain at time `t_s`.
    pub fn gain(&self, t_s: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for n in 0..OSCILLATORS {
            re += self.w_i[n] * (self.om_i[n] * t_s + self.phase).cos();
            im += self.w_q[n] * (self.om_q[n] * t_s + self.phase).cos();
        }
        (re, im)
    }

    pub fn power(&self, t_s: f64) -> f64 {
        let (re, im) = self.gain(t_s);
        re * re + im * im
    }
}

/// Complex rotation state for stepping a process by a fixed time increment.
#[derive(Debug, Clone)]
struct Phasors {
    // e^{j(ω_n t + φ)} for the I then Q branch oscillators
    z: [(f64, f64); 2 * OSCILLATORS],
    rot: [(f64, f64); 2 * OSCILLATORS],
    w: [f64; 2 * OSCILLATORS],
}

impl Phasors {
    fn new(p: &JakesProcess, t0: f64, dt: f64) -> Self {
        let mut s = Phasors {
            z: [(0.0, 0.0); 2 * OSCILLATORS],
            rot: [(0.0, 0.0); 2 * OSCILLATORS],
            w: [0.0; 2 * OSCILLATORS],
        };
        for n in 0..OSCILLATORS {
            for (k, om, w) in [(n, p.om_i[n], p.w_i[n]), (n + OSCILLATORS, p.om_q[n], p.w_q[n])] {
                let a = om * t0 + p.phase;
                s.z[k] = (a.cos(), a.sin());
                s.rot[k] = ((om * dt).cos(), (om * dt).sin());
                s.w[k] = w;
            }
        }
        s
    }

    fn power(&self) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for n in 0..OSCILLATORS {
            re += self.w[n] * self.z[n].0;
            im += self.w[n + OSCILLATORS] * self.z[n + OSCILLATORS].0;
        }
        re * re + im * im
    }

    fn advance(&mut self) {
        for (z, r) in self.z.iter_mut().zip(self.rot.iter()) {
            *z = (z.0 * r.0 - z.1 * r.1, z.0 * r.1 + z.1 * r.0);
        }
    }
}

/// Fading of every RB of one UE's serving link, stepped once per TTI.
#[derive(Debug, Clone)]
pub struct FadingField {
    processes: Vec<JakesProcess>,
    phasors: Vec<Phasors>,
    power: Vec<f64>,
    step: u64,
    dt: f64,
    rephase_every: u64,
}

impl FadingField {
    /// One independent process per RB, all drawn from `rng`.
    pub fn new(n_rbs: usize, doppler_hz: f64, tti_s: f64, rng: &mut SimRng) -> Self {
        let processes: Vec<_> = (0..n_rbs).map(|_| JakesProcess::new(doppler_hz, rng)).collect();
        let phasors = processes.iter().map(|p| Phasors::new(p, 0.0, tti_s)).collect();
        let mut f = FadingField {
            processes,
            phasors,
            power: vec![0.0; n_rbs],
            step: 0,
            dt: tti_s,
            rephase_every: 1000,
        };
        f.refresh_power();
        f
    }

    fn refresh_power(&mut self) {
        for (pw, ph) in self.power.iter_mut().zip(&self.phasors) {
            *pw = ph.power();
        }
    }

    /// Move to the next TTI.
    pub fn advance(&mut self) {
        self.step += 1;
        if self.step.is_multiple_of(self.rephase_every) {
            // re-anchor on the exact phase to stop rounding drift
            let t = self.step as f64 * self.dt;
            for (ph, p) in self.phasors.iter_mut().zip(&self.processes) {
                *ph = Phasors::new(p, t, self.dt);
            }
        } else {
            for ph in &mut self.phasors {
                ph.advance();
            }
        }
        self.refresh_power();
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Linear power gain of `rb` at the current step.
    pub fn power(&self, rb: usize) -> f64 {
        self.power[rb]
    }

    pub fn gain_db(&self, rb: usize) -> f64 {
        10.0 * self.power[rb].log10()
    }

    /// Gain in dB at an arbitrary TTI, evaluated directly.
    pub fn gain_db_at(&self, tti_index: u64, rb: usize) -> f64 {
        10.0 * self.processes[rb].power(tti_index as f64 * self.dt).log10()
    }
}
