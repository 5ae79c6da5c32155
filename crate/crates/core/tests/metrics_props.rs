use femtosched::metrics::{jain_fairness, plr, spectral_efficiency, throughput_bps};
use proptest::prelude::*;

fn rates() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1e7, 1..60).prop_filter("not all zero", |v| v.iter().any(|&x| x > 0.0))
}

proptest! {
    #[test]
    fn fairness_is_bounded(xs in rates()) {
        let f = jain_fairness(&xs).unwrap();
        let n = xs.len() as f64;
        prop_assert!(f >= 1.0 / n - 1e-12 && f <= 1.0 + 1e-12, "{f}");
    }

    #[test]
    fn fairness_is_scale_invariant(xs in rates(), k in 1e-3f64..1e3) {
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        let (a, b) = (jain_fairness(&xs).unwrap(), jain_fairness(&scaled).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn fairness_is_permutation_invariant(xs in rates(), seed in any::<u64>()) {
        let mut p = xs.clone();
        let mut s = seed;
        for i in (1..p.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            p.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert!((jain_fairness(&xs).unwrap() - jain_fairness(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn plr_is_monotone_in_drops(gen in 1u64..1_000_000, a in 0u64..1_000_000, b in 0u64..1_000_000) {
        let (lo, hi) = (a.min(b).min(gen), a.max(b).min(gen));
        prop_assert!(plr(lo, gen) <= plr(hi, gen));
        prop_assert!((0.0..=1.0).contains(&plr(hi, gen)));
    }

    #[test]
    fn rates_scale_with_bits(bits in 0u64..1u64 << 40, secs in 0.001f64..100.0) {
        let t = throughput_bps(bits, secs).unwrap();
        let se = spectral_efficiency(bits, secs, 5e6).unwrap();
        prop_assert!((se - t / 5e6).abs() <= 1e-9 * se.max(1.0));
    }
}

#[test]
fn fairness_extremes() {
    assert_eq!(jain_fairness(&[7.0; 10]), Some(1.0));
    let mut one = vec![0.0; 10];
    one[3] = 2.0;
    assert_eq!(jain_fairness(&one), Some(0.1));
}
