use std::sync::Arc;

use femtosched::rng::substream;
use femtosched::traffic::{
    FlowQueue, Packet, TrafficSource, VideoSource, VideoTrace, VoipSource, VOIP_INTERVAL_S,
    VOIP_PACKET_BITS,
};
use proptest::prelude::*;

fn drive(src: &mut TrafficSource, seconds: f64, window_s: f64) -> Vec<Packet> {
    let mut out = Vec::new();
    let n = (seconds / window_s).round() as u64;
    for k in 0..n {
        src.generate(k as f64 * window_s, (k + 1) as f64 * window_s, &mut out);
    }
    out
}

#[test]
fn voip_duty_cycle_over_long_run() {
    let mut src = TrafficSource::Voip(VoipSource::new(3.0, 3.0, substream(31, "traffic", &[1])).unwrap());
    let out = drive(&mut src, 1000.0, 0.01);
    let TrafficSource::Voip(v) = &src else { unreachable!() };
    let duty = v.on_time_s() / 1000.0;
    assert!((duty - 0.5).abs() < 0.05, "duty {duty}");
    // one packet every 20 ms while ON, up to one per spurt of rounding
    let expected = v.on_time_s() / VOIP_INTERVAL_S;
    assert!((out.len() as f64 - expected).abs() / expected < 0.02, "{} vs {expected}", out.len());
    assert!(out.iter().all(|p| p.size_bits == VOIP_PACKET_BITS));
    assert!(out.windows(2).all(|w| w[0].arrival_s <= w[1].arrival_s));
}

#[test]
fn voip_one_second_on_gives_fifty_packets() {
    let mut s = TrafficSource::Voip(VoipSource::scripted(1.0, 100.0, substream(32, "traffic", &[])));
    let out = drive(&mut s, 3.0, 1e-3);
    assert_eq!(out.len(), 50);
    assert_eq!(out.iter().map(|p| p.size_bits).sum::<u64>(), 50 * 256);
}

#[test]
fn synthetic_video_mean_rate() {
    let trace = Arc::new(VideoTrace::synthetic(128e3));
    for first in [0, 5, 11] {
        let mut s = TrafficSource::Video(VideoSource::new(trace.clone(), 0.013, first));
        let out = drive(&mut s, 10.0, 1e-3);
        let rate = out.iter().map(|p| p.size_bits).sum::<u64>() as f64 / 10.0;
        assert!((rate - 128e3).abs() / 128e3 < 0.01, "first={first}: {rate}");
    }
}

#[test]
fn window_size_does_not_change_arrivals() {
    let trace = Arc::new(VideoTrace::synthetic(128e3));
    let mk = || TrafficSource::Video(VideoSource::new(trace.clone(), 0.007, 3));
    assert_eq!(drive(&mut mk(), 2.0, 1e-3), drive(&mut mk(), 2.0, 1e-2));
}

fn packets() -> impl Strategy<Value = Vec<Packet>> {
    prop::collection::vec((1u64..2000, 0.0f64..0.01), 0..100).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(bits, gap)| {
                t += gap;
                Packet { size_bits: bits, arrival_s: t }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn drop_expired_matches_filter(pk in packets(), now in 0.0f64..1.5, d in 0.01f64..0.3) {
        let mut q = FlowQueue::new(None);
        for p in &pk {
            q.enqueue(*p);
        }
        let dropped = q.drop_expired(now, d);
        let keep: Vec<Packet> = pk.iter().copied().filter(|p| now - p.arrival_s <= d).collect();
        let gone: u64 = pk.iter().filter(|p| now - p.arrival_s > d).map(|p| p.size_bits).sum();
        prop_assert_eq!(dropped, gone);
        prop_assert_eq!(q.packets().copied().collect::<Vec<_>>(), keep);
        prop_assert_eq!(q.drop_expired(now, d), 0);
        prop_assert!(q.is_conserved());
    }

    #[test]
    fn queue_conserves_bits(
        ops in prop::collection::vec((0u8..3, 1u64..5000), 1..300),
        cap in prop::option::of(1000u64..20_000),
    ) {
        let mut q = FlowQueue::new(cap);
        let mut t = 0.0;
        for (op, x) in ops {
            t += 0.001;
            match op {
                0 => {
                    q.enqueue(Packet { size_bits: x, arrival_s: t });
                }
                1 => {
                    let before = q.queued_bits();
                    let got = q.dequeue_bits(x);
                    prop_assert_eq!(got, x.min(before));
                }
                _ => {
                    q.drop_expired(t, 0.05);
                }
            }
            prop_assert!(q.is_conserved());
            prop_assert_eq!(q.queued_bits(), q.packets().map(|p| p.size_bits).sum::<u64>());
            if let Some(c) = cap {
                prop_assert!(q.queued_bits() <= c);
            }
        }
    }

    #[test]
    fn expiring_bits_is_a_prefix_sum(pk in packets(), horizon in 0.0f64..1.5, d in 0.01f64..0.3) {
        let mut q = FlowQueue::new(None);
        for p in &pk {
            q.enqueue(*p);
        }
        let e = q.expiring_bits(horizon, d);
        prop_assert!(e <= q.queued_bits());
        prop_assert!(q.expiring_bits(horizon + 0.01, d) >= e);
    }
}
