mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridloop::allocation::{assign_quantiles, bucket_sizes};
use gridloop::expansion::split_point;
use gridloop::powerflow::{reactive_load, run_timeseries, InjectionSeries};
use gridloop::scenario::{default_quantiles, load_grid, write_grid};

proptest! {
    #[test]
    fn split_point_matches_enumeration(steps in prop::collection::vec(1u32..200, 1..40)) {
        let mut d = vec![0.0];
        for s in steps {
            d.push(d.last().unwrap() + s as f64);
        }
        prop_assert_eq!(split_point(&d).unwrap(), common::split_point_enumerated(&d));
    }

    #[test]
    fn buckets_cover_everyone(n in 0usize..500) {
        let sizes = bucket_sizes(n, &default_quantiles());
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sizes[0] - sizes[4] <= 1);
    }

    #[test]
    fn higher_peak_never_lower_band(peaks in prop::collection::vec(0.0f64..50.0, 1..120)) {
        let named: Vec<(String, f64)> = peaks.iter().enumerate().map(|(i, p)| (format!("B{i:03}"), *p)).collect();
        let a = assign_quantiles(&named, 1.0, &default_quantiles()).unwrap();
        for x in &a {
            for y in &a {
                if x.peak_kw > y.peak_kw {
                    prop_assert!(x.quantile >= y.quantile);
                }
            }
        }
    }

    #[test]
    fn slack_covers_load_and_losses(seed in any::<u64>(), n in 1usize..25) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = common::random_tree(&mut rng, n);
        let mut inj = InjectionSeries::zeros(n + 1, vec![1.0, 2.0]);
        for t in 0..2 {
            for i in 1..=n {
                let p = rng.gen_range(-10.0..10.0);
                inj.p_kw[t][i] = p;
                inj.q_kvar[t][i] = reactive_load(p, 0.95);
            }
        }
        let res = run_timeseries(&grid, &inj).unwrap();
        for (t, s) in res.steps.iter().enumerate() {
            let load: f64 = inj.p_kw[t].iter().sum();
            prop_assert!(s.losses_kw() >= 0.0);
            prop_assert!((s.slack_p_kw - load - s.losses_kw()).abs() < 1e-4);
            prop_assert!(common::power_mismatch(&grid, s, &inj.p_kw[t], &inj.q_kvar[t]) < 1e-6);
        }
    }
}

#[test]
fn grid_round_trips_through_csv() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = common::random_tree(&mut rng, 12);
    let dir = tempfile::tempdir().unwrap();
    write_grid(&grid, dir.path()).unwrap();
    assert_eq!(load_grid(dir.path()).unwrap(), grid);
}
