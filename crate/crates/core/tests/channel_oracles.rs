use std::f64::consts::PI;

use femtosched::channel::cqi::MAX_CQI;
use femtosched::channel::{
    dbm_to_mw, doppler_hz, noise_dbm, path_loss_db, received_dbm, sinr_db, CqiTable, FadingField,
    JakesProcess, PropagationParams,
};
use femtosched::rng::substream;

/// Bessel J0 by Simpson quadrature of (1/π)∫₀^π cos(x sin θ) dθ.
fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

#[test]
fn j0_quadrature_reference_values() {
    assert!((bessel_j0(0.0) - 1.0).abs() < 1e-12);
    assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-10);
    assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-10);
}

#[test]
fn fading_mean_power_is_unity() {
    // 10^4 independent processes × 100 samples 50 ms apart
    let fd = doppler_hz(3.0 / 3.6, 2e9);
    let mut rng = substream(21, "fading", &[]);
    let mut sum = 0.0;
    let mut n = 0;
    for _ in 0..10_000 {
        let p = JakesProcess::new(fd, &mut rng);
        for k in 0..100 {
            sum += p.power(k as f64 * 0.05);
            n += 1;
        }
    }
    let mean = sum / n as f64;
    assert!((mean - 1.0).abs() < 0.05, "mean power {mean}");
}

#[test]
fn fading_autocorrelation_follows_j0() {
    let fd = doppler_hz(3.0 / 3.6, 2e9);
    let mut rng = substream(22, "fading", &[]);
    let procs: Vec<JakesProcess> = (0..20_000).map(|_| JakesProcess::new(fd, &mut rng)).collect();
    for tau in [0.0, 0.01, 0.02, 0.04, 0.06, 0.1, 0.15, 0.2] {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (i, p) in procs.iter().enumerate() {
            let t0 = (i % 50) as f64 * 0.37;
            let (a_re, a_im) = p.gain(t0);
            let (b_re, b_im) = p.gain(t0 + tau);
            acc += a_re * b_re + a_im * b_im;
            norm += a_re * a_re + a_im * a_im;
        }
        let r = acc / norm;
        let j = bessel_j0(2.0 * PI * fd * tau);
        assert!((r - j).abs() < 0.05, "tau={tau}: {r} vs J0={j}");
    }
}

#[test]
fn fading_field_steps_per_tti() {
    let fd = doppler_hz(3.0 / 3.6, 2e9);
    let mut f = FadingField::new(25, fd, 1e-3, &mut substream(23, "fading", &[0]));
    for k in 0..3000u64 {
        assert_eq!(f.step(), k);
        for rb in [0, 12, 24] {
            assert!((f.gain_db(rb) - f.gain_db_at(k, rb)).abs() < 1e-6, "tti {k} rb {rb}");
        }
        f.advance();
    }
}

#[test]
fn shadowing_moments() {
    let sh = PropagationParams::default().shadowing();
    let mut rng = substream(24, "shadowing", &[]);
    let xs: Vec<f64> = (0..100_000).map(|_| sh.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 0.1, "mean {mean}");
    assert!((sd - 8.0).abs() < 0.1, "sd {sd}");
}

#[test]
fn path_loss_reference_points() {
    assert_eq!(path_loss_db(1.0).unwrap(), 128.1);
    assert!((path_loss_db(0.1).unwrap() - 90.5).abs() < 1e-12);
    assert!((path_loss_db(2.0).unwrap() - (128.1 + 37.6 * 2f64.log10())).abs() < 1e-12);
}

#[test]
fn two_cell_sinr_matches_linear_oracle() {
    // UE 300 m from its eNB and 700 m from an interfering eNB, one wall to
    // the interferer, per-RB powers
    let per_rb = 43.0 - 10.0 * 25f64.log10();
    let s = received_dbm(per_rb, path_loss_db(0.3).unwrap(), 0, 10.0, 2.5, 0.0);
    let i = received_dbm(per_rb, path_loss_db(0.7).unwrap(), 1, 10.0, -1.0, 0.0);
    let n = noise_dbm(180e3, -174.0, 9.0);

    let lin = |db: f64| 10f64.powf(db / 10.0);
    let s_mw = lin(per_rb - (128.1 + 37.6 * 0.3f64.log10()) - 2.5);
    let i_mw = lin(per_rb - (128.1 + 37.6 * 0.7f64.log10()) - 10.0 + 1.0);
    let n_mw = lin(-174.0 + 10.0 * 180e3f64.log10() + 9.0);
    let oracle = 10.0 * (s_mw / (i_mw + n_mw)).log10();
    assert!((sinr_db(s, [i], n) - oracle).abs() < 1e-9);
    assert!((dbm_to_mw(s) - s_mw).abs() / s_mw < 1e-12);
}

#[test]
fn cqi_boundaries() {
    let t = CqiTable::default();
    assert_eq!(t.sinr_to_cqi(f64::NEG_INFINITY), 0);
    assert_eq!(t.sinr_to_cqi(f64::NAN), 0);
    assert_eq!(t.sinr_to_cqi(100.0), MAX_CQI);
    for c in 1..=MAX_CQI {
        let th = t.threshold_db(c);
        assert_eq!(t.sinr_to_cqi(th), c, "at threshold of {c}");
        assert_eq!(t.sinr_to_cqi(th - 1e-9), c - 1, "just below threshold of {c}");
        assert!(t.rb_capacity_bits(c) > t.rb_capacity_bits(c - 1));
        // capacity-fitting: log2(1 + SINR) at the threshold equals the efficiency
        let eff = (1.0 + 10f64.powf(th / 10.0)).log2();
        assert!((eff - t.efficiency(c)).abs() < 1e-3, "cqi {c}: {eff}");
    }
    assert_eq!(t.rb_capacity_bits(0), 0);
}

#[test]
fn cqi_mapping_is_monotone() {
    let t = CqiTable::default();
    let mut prev = 0;
    for k in 0..=6000 {
        let c = t.sinr_to_cqi(-20.0 + k as f64 * 0.01);
        assert!(c >= prev);
        prev = c;
    }
}
