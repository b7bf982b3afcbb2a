mod common;

use common::{random_dataset, rng};
use gfarfe::eluder::{eluder_dim, stage_summands};
use gfarfe::fclass::{FunctionClass, LinearFeatures, StageDataset, StageEntry};
use proptest::prelude::*;

#[test]
fn repeated_point_is_harmonic() {
    let class = FunctionClass::tabular(1, 1, 1.0);
    let mut data = StageDataset::new(0, 1.0, 1.0).unwrap();
    for _ in 0..4 {
        data.push(StageEntry {
            state: 0,
            action: 0,
            next_state: 0,
            sigma_bar: 1.0,
        })
        .unwrap();
    }
    let report = eluder_dim(&class, &[data], 1.0).unwrap();
    let harmonic: f64 = (1..=4).map(|i| 1.0 / i as f64).sum();
    assert!((report.per_stage[0] - 25.0 / 12.0).abs() < 1e-15);
    assert!((report.aggregate - harmonic).abs() < 1e-15);
}

#[test]
fn elliptical_bound_on_random_sequences() {
    let mut r = rng(3, "eluder-bound");
    let alpha = 0.5;
    for (s_count, a_count) in [(2, 2), (5, 4), (10, 4), (4, 5)] {
        let d = (s_count * a_count) as f64;
        for k in [16, 256, 4096] {
            let data = random_dataset(&mut r, s_count, a_count, k, 1.0, alpha);
            let bound = 2.0 * d * (1.0 + k as f64 / alpha.powi(2)).ln();
            let tab = FunctionClass::tabular(s_count, a_count, 1.0);
            let lin = FunctionClass::linear(LinearFeatures::one_hot(s_count, a_count), 1.0);
            let dt = eluder_dim(&tab, std::slice::from_ref(&data), alpha)
                .unwrap()
                .per_stage[0];
            let dl = eluder_dim(&lin, &[data], alpha).unwrap().per_stage[0];
            assert!(dt <= bound && dl <= bound, "{dt} {dl} > {bound}");
            assert!((dt - dl).abs() < 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn summands_in_unit_interval_and_prefix_monotone(
        entries in prop::collection::vec((0..3usize, 0..2usize, 0.3f64..2.0), 0..60),
        cut in 0usize..60,
    ) {
        let mut data = StageDataset::new(0, 1.0, 0.3).unwrap();
        for (s, a, sb) in entries {
            data.push(StageEntry { state: s, action: a, next_state: 0, sigma_bar: sb }).unwrap();
        }
        let class = FunctionClass::tabular(3, 2, 1.0);
        let summands = stage_summands(&class, &data, 0.3).unwrap();
        prop_assert!(summands.iter().all(|x| (0.0..=1.0).contains(x)));
        let prefix = data.prefix(cut.min(data.len()));
        let short = eluder_dim(&class, &[prefix], 0.3).unwrap().per_stage[0];
        let full = eluder_dim(&class, &[data], 0.3).unwrap().per_stage[0];
        prop_assert!(short <= full + 1e-12);
    }
}
