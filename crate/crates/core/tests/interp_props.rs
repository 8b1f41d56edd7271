mod common;

use common::{arb_term_set, random_interp, random_scalar_linear};
use proptest::prelude::*;
use termnet::interp::preimage_histogram;
use termnet::mincut::min_cut_value;
use termnet::{Alpha, DEFAULT_BUDGET};

fn alpha_grid() -> Vec<Alpha> {
    let mut grid: Vec<Alpha> = (0..=16).map(|i| Alpha::ratio(i, 4)).collect();
    grid.extend([Alpha::integer(7), Alpha::integer(20), Alpha::INF]);
    grid
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conservation(ts in arb_term_set(4, 3), q in 2u32..4, seed in any::<u64>()) {
        let rep = preimage_histogram(&random_interp(&ts, q, seed), &ts, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(rep.total_inputs(), (q as u128).pow(ts.k() as u32));
    }

    #[test]
    fn one_to_one_below_dispersion_below_min_cut(ts in arb_term_set(4, 3), q in 2u32..4, seed in any::<u64>()) {
        let rep = preimage_histogram(&random_interp(&ts, q, seed), &ts, DEFAULT_BUDGET).unwrap();
        let rho = min_cut_value(&ts);
        prop_assert!(rep.one_image_size() <= rep.image_size());
        prop_assert!(rep.image_size() <= (q as u64).pow(rho as u32));
        if rho < ts.k() {
            prop_assert!(rep.one_image_size() < (q as u64).pow(rho as u32));
        }
    }

    #[test]
    fn renyi_is_non_increasing(ts in arb_term_set(4, 3), q in 2u32..4, seed in any::<u64>()) {
        let rep = preimage_histogram(&random_interp(&ts, q, seed), &ts, DEFAULT_BUDGET).unwrap();
        let values: Vec<f64> = alpha_grid().into_iter().map(|a| rep.renyi(a)).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{values:?}");
        }
    }

    #[test]
    fn hartley_is_dispersion(ts in arb_term_set(4, 3), q in 2u32..4, seed in any::<u64>()) {
        let rep = preimage_histogram(&random_interp(&ts, q, seed), &ts, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(rep.renyi(Alpha::ZERO), rep.dispersion().value());
    }

    #[test]
    fn linear_maps_are_flat(ts in arb_term_set(4, 3), p in prop::sample::select(vec![2u32, 3, 5]), seed in any::<u64>()) {
        let rep = preimage_histogram(&random_scalar_linear(&ts, p, seed), &ts, DEFAULT_BUDGET).unwrap();
        prop_assert!(rep.is_flat());
        let h0 = rep.renyi(Alpha::ZERO);
        for a in alpha_grid() {
            prop_assert!((rep.renyi(a) - h0).abs() < 1e-9);
        }
        // injective exactly when some output is unique
        let full = (p as u64).pow(ts.k() as u32);
        if rep.one_image_size() > 0 {
            prop_assert_eq!(rep.image_size(), full);
            prop_assert_eq!(min_cut_value(&ts), ts.k());
        } else {
            prop_assert!(rep.image_size() < full);
        }
    }
}
