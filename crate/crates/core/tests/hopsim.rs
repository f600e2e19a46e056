use std::time::Instant;

use jamlab::hopsim::*;
use proptest::prelude::*;

fn plan(n: usize) -> ChannelPlan {
    ChannelPlan { n_channels: n, ..ChannelPlan::default() }
}

fn run(p: &ChannelPlan, j: &JammerProcess, s: &PredictionSource, pol: &HopPolicyConfig, n: usize) -> SimulationReport {
    run_simulation(p, j, s, pol, n, 11).unwrap()
}

fn processes(n: usize) -> Vec<JammerProcess> {
    let p = plan(n);
    vec![
        JammerProcess::StaticBand { channels: vec![0, n / 2] },
        JammerProcess::Sweep { period_slots: 16, width: 1 },
        JammerProcess::Sweep { period_slots: 5, width: 3 },
        JammerProcess::RandomHopper { seed: 3, count: 2 },
        JammerProcess::Broadband { center_hz: p.center_hz(n / 2), width_hz: 2.0 * p.channel_bandwidth_hz },
    ]
}

#[test]
fn oracle_delivers_everything_when_a_clear_channel_is_in_reach() {
    let p = plan(16);
    for j in processes(16) {
        let r = run(&p, &j, &PredictionSource::Oracle, &HopPolicyConfig::default(), 1000);
        assert_eq!(r.delivery_ratio(), 1.0, "{}", j.name());
        assert_eq!(r.summary.prediction.false_positives + r.summary.prediction.false_negatives, 0);
    }
}

#[test]
fn always_clear_never_leaves_the_start_channel() {
    let p = plan(16);
    let j = JammerProcess::StaticBand { channels: vec![0] };
    let r = run(&p, &j, &PredictionSource::AlwaysClear, &HopPolicyConfig::default(), 200);
    assert_eq!(r.delivery_ratio(), 0.0);
    assert_eq!(r.summary.hop_count, 0);
    assert!(r.slots.iter().all(|s| s.channel == 0));

    // A 1-in-16 sweep hits the parked channel once per period.
    let sweep = JammerProcess::Sweep { period_slots: 16, width: 1 };
    let r = run(&p, &sweep, &PredictionSource::AlwaysClear, &HopPolicyConfig::default(), 160);
    assert_eq!(r.summary.delivered, 150);
}

#[test]
fn sweep_ground_truth() {
    let p = plan(16);
    let j = JammerProcess::Sweep { period_slots: 16, width: 1 };
    for s in 0..64 {
        assert_eq!(j.jammed_channels(&p, s), vec![s % 16]);
    }
    let slow = JammerProcess::Sweep { period_slots: 32, width: 1 };
    assert_eq!(slow.jammed_channels(&p, 3), vec![1]);
}

#[test]
fn unreachable_clear_channel_stalls_the_oracle() {
    // Channels 0..=5 jammed, transmitter parked on 0, reach 2: nothing clear.
    let p = plan(16);
    let j = JammerProcess::StaticBand { channels: (0..=5).collect() };
    let pol = HopPolicyConfig { shift_limit_channels: Some(2), ..HopPolicyConfig::default() };
    let r = run(&p, &j, &PredictionSource::Oracle, &pol, 10);
    assert_eq!(r.delivery_ratio(), 0.0);
    let r = run(&p, &j, &PredictionSource::Oracle, &HopPolicyConfig::unlimited(), 10);
    assert_eq!(r.delivery_ratio(), 1.0);
    assert_eq!(r.slots[0].channel, 6);
}

#[test]
fn thousand_slots_are_fast_and_deterministic() {
    let p = plan(16);
    let j = JammerProcess::RandomHopper { seed: 5, count: 3 };
    let src = PredictionSource::Random { p_jammed: 0.2, seed: 9 };
    let t = Instant::now();
    let a = run(&p, &j, &src, &HopPolicyConfig::default(), 1000);
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let b = run(&p, &j, &src, &HopPolicyConfig::default(), 1000);
    assert_eq!(a.slots_jsonl().unwrap(), b.slots_jsonl().unwrap());
    assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
    assert_eq!(a.slots.len(), 1000);
}

fn process_strategy() -> impl Strategy<Value = JammerProcess> {
    prop_oneof![
        prop::collection::vec(0usize..12, 0..6).prop_map(|channels| JammerProcess::StaticBand { channels }),
        (1usize..40, 1usize..5).prop_map(|(period_slots, width)| JammerProcess::Sweep { period_slots, width }),
        (any::<u64>(), 0usize..6).prop_map(|(seed, count)| JammerProcess::RandomHopper { seed, count }),
        (0.0f64..12.0, 0.0f64..8.0).prop_map(|(c, w)| {
            let p = plan(12);
            JammerProcess::Broadband { center_hz: p.base_freq_hz + c * p.channel_bandwidth_hz, width_hz: w * p.channel_bandwidth_hz }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hops_respect_the_shift_limit(j in process_strategy(), limit in 1usize..6, start in 0usize..12, p_jam in 0.0f64..1.0, seed in any::<u64>()) {
        let p = plan(12);
        let pol = HopPolicyConfig { shift_limit_channels: Some(limit), stay_if_clear: true, initial_channel: start };
        for src in [PredictionSource::Oracle, PredictionSource::Random { p_jammed: p_jam, seed }] {
            let r = run_simulation(&p, &j, &src, &pol, 120, seed).unwrap();
            prop_assert!(r.summary.max_hop_distance <= limit);
            prop_assert_eq!(r.slots[0].previous_channel, start);
            for w in r.slots.windows(2) {
                prop_assert_eq!(w[1].previous_channel, w[0].channel);
            }
            for s in &r.slots {
                prop_assert!(s.channel.abs_diff(s.previous_channel) <= limit);
                prop_assert_eq!(s.delivered, !s.true_jammed.contains(&s.channel));
                prop_assert_eq!(s.hopped, s.channel != s.previous_channel);
            }
        }
    }

    #[test]
    fn unlimited_reach_sandwich(j in process_strategy(), p_jam in 0.0f64..1.0, seed in any::<u64>()) {
        let p = plan(12);
        let pol = HopPolicyConfig::unlimited();
        let n = 150;
        let oracle = run_simulation(&p, &j, &PredictionSource::Oracle, &pol, n, seed).unwrap();
        let random = run_simulation(&p, &j, &PredictionSource::Random { p_jammed: p_jam, seed }, &pol, n, seed).unwrap();
        let clear = run_simulation(&p, &j, &PredictionSource::AlwaysClear, &pol, n, seed).unwrap();
        prop_assert!(random.summary.delivered <= oracle.summary.delivered);
        prop_assert!(clear.summary.delivered <= oracle.summary.delivered);
        // The oracle only misses slots where every channel is jammed.
        let full = (0..n).filter(|&s| j.jammed_channels(&p, s).len() == 12).count();
        prop_assert_eq!(oracle.summary.delivered, n - full);
    }
}
