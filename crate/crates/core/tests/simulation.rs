use dwt_core::mass_index::MassIndex;
use dwt_core::rng::SampleStreams;
use dwt_core::sim::{grow_profile, grow_profile_with, grow_tree, GrowOptions, ProfileState};
use dwt_core::WeightSpec;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = WeightSpec> {
    prop_oneof![
        (0.5f64..3.0).prop_map(|v| WeightSpec::constant(v).unwrap()),
        (0.0f64..3.0).prop_map(|a| WeightSpec::polynomial(a).unwrap()),
        (0.5f64..4.0).prop_map(|c| WeightSpec::exponential(c).unwrap()),
        (0.1f64..2.5).prop_map(|c| WeightSpec::subexp_quotient(c).unwrap()),
        (0.1f64..0.9).prop_map(|b| WeightSpec::stretched_exp(b).unwrap()),
        (0.2f64..2.0).prop_map(|a| WeightSpec::superexp(a).unwrap()),
        (0.2f64..2.0).prop_map(|a| WeightSpec::factorial_power(a).unwrap()),
        Just(WeightSpec::logarithmic()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_depths_reproduce_the_profile(spec in spec_strategy(), n in 1u64..3_000, seed in any::<u64>()) {
        let (tree, trace) = grow_tree(&spec, n, seed, &GrowOptions::default()).unwrap();
        prop_assert_eq!(tree.len() as u64, n);
        prop_assert_eq!(tree.profile(), trace.profile.clone());
        prop_assert_eq!(trace.profile.iter().sum::<u64>(), n);
        prop_assert_eq!(trace.final_depth + 1, trace.profile.len() as u64);
        prop_assert!(trace.profile.iter().all(|&c| c > 0));
        for v in 1..tree.len() {
            let p = tree.parent(v).unwrap();
            prop_assert_eq!(tree.depth(v), tree.depth(p) + 1);
            prop_assert!(p < v);
        }
        prop_assert_eq!(tree.longest_path().len() as u64, trace.final_depth + 1);
    }

    #[test]
    fn power_of_two_rescaling_is_bit_exact(spec in spec_strategy(), j in -6i32..7, n in 2u64..4_000, seed in any::<u64>()) {
        let opts = GrowOptions { record_attachments: true, checkpoints: vec![n / 2, n], ..Default::default() };
        let scaled = spec.clone().scaled(2f64.powi(j)).unwrap();
        let a = grow_profile(&spec, n, seed, &opts).unwrap();
        let b = grow_profile(&scaled, n, seed, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn checkpoints_follow_a_single_growing_run(spec in spec_strategy(), n in 10u64..2_000, seed in any::<u64>()) {
        let sizes = vec![1, n / 3, n / 2, n];
        let opts = GrowOptions { checkpoints: sizes.clone(), checkpoint_profiles: true, ..Default::default() };
        let full = grow_profile(&spec, n, seed, &opts).unwrap();
        for c in &full.checkpoints {
            let prefix = grow_profile(&spec, c.n, seed, &GrowOptions::default()).unwrap();
            prop_assert_eq!(prefix.final_depth, c.depth);
            prop_assert_eq!(Some(prefix.profile), c.profile.clone());
            prop_assert_eq!(c.z, c.n - c.depth);
        }
        let mut depths: Vec<u64> = full.checkpoints.iter().map(|c| c.depth).collect();
        let sorted = { let mut d = depths.clone(); d.sort_unstable(); d };
        prop_assert_eq!(&mut depths, &sorted);
    }

    #[test]
    fn attachment_probabilities_match_direct_weights(spec in spec_strategy(), steps in 1usize..300, seed in any::<u64>()) {
        let mut rng = SampleStreams::new(seed, 0).attach;
        let mut state = ProfileState::new(&spec);
        for _ in 0..steps {
            state.step(&mut rng);
        }
        let top = state.max_depth();
        let logs: Vec<f64> = (0..=top)
            .map(|r| (state.count(r) as f64).ln() + spec.shape_log_weight(r as u64))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        for r in 0..=top {
            let direct = (logs[r] - m).exp() / z;
            let got = state.attachment_probability(r);
            prop_assert!((direct - got).abs() <= 1e-9 * direct.max(1e-300) + 1e-15, "depth {}: {} vs {}", r, got, direct);
        }
    }

    #[test]
    fn mass_index_matches_naive_prefix_sums(values in prop::collection::vec(0.0f64..10.0, 1..200), edits in prop::collection::vec((0usize..200, 0.0f64..10.0), 0..50)) {
        let mut naive = values.clone();
        let mut index = MassIndex::from_values(values);
        for (pos, v) in edits {
            let pos = pos % naive.len();
            naive[pos] = v;
            index.set(pos, v);
        }
        let mut acc = 0.0;
        for (i, v) in naive.iter().enumerate() {
            prop_assert!((index.prefix(i) - acc).abs() <= 1e-9 * (1.0 + acc));
            acc += v;
        }
        prop_assert!((index.total() - acc).abs() <= 1e-9 * (1.0 + acc));
    }
}

#[test]
fn same_seed_same_trace_and_streams_differ_per_sample() {
    let spec = WeightSpec::exponential(1.5).unwrap();
    let opts = GrowOptions { track_tau: true, record_attachments: true, ..Default::default() };
    let a = grow_profile(&spec, 5_000, 9, &opts).unwrap();
    let b = grow_profile(&spec, 5_000, 9, &opts).unwrap();
    assert_eq!(a, b);
    let mut s0 = SampleStreams::new(9, 0);
    let mut s1 = SampleStreams::new(9, 1);
    let t0 = grow_profile_with(&spec, 5_000, &mut s0.attach, &mut s0.clock, &opts).unwrap();
    let t1 = grow_profile_with(&spec, 5_000, &mut s1.attach, &mut s1.clock, &opts).unwrap();
    assert_eq!(t0, a);
    assert_ne!(t0.attachments, t1.attachments);
}

#[test]
fn clock_does_not_perturb_the_attachment_sequence() {
    let spec = WeightSpec::polynomial(1.5).unwrap();
    let plain = GrowOptions { record_attachments: true, ..Default::default() };
    let clocked = GrowOptions { track_tau: true, ..plain.clone() };
    let a = grow_profile(&spec, 3_000, 4, &plain).unwrap();
    let b = grow_profile(&spec, 3_000, 4, &clocked).unwrap();
    assert_eq!(a.attachments, b.attachments);
    assert!(b.tau_n.unwrap() > 0.0);
}
