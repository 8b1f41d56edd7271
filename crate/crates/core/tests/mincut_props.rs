mod common;

use common::arb_term_set;
use proptest::prelude::*;
use termnet::mincut::min_cut_value;
use termnet::{build_dag, diversify, min_cut, min_cut_wrt, verify_certificate};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cut_bounds_and_menger(ts in arb_term_set(5, 3)) {
        let dag = build_dag(&ts);
        let cert = min_cut(&dag);
        prop_assert!(cert.value <= ts.k());
        prop_assert!(cert.value <= dag.targets().len());
        prop_assert_eq!(cert.paths.len(), cert.value);
        prop_assert_eq!(cert.cut.len(), cert.value);
        let check = verify_certificate(&dag, &cert);
        prop_assert!(check.is_valid(), "{:?}", check.problems);
    }

    #[test]
    fn diversification_keeps_min_cut(ts in arb_term_set(5, 3)) {
        prop_assert_eq!(min_cut_value(&ts), min_cut_value(&diversify(&ts)));
    }

    #[test]
    fn restricted_cut_is_certified(ts in arb_term_set(5, 3), pick in any::<u8>()) {
        let keep: Vec<String> = ts
            .variables()
            .iter()
            .enumerate()
            .filter(|(i, _)| pick >> i & 1 == 1)
            .map(|(_, v)| v.clone())
            .collect();
        let (dag, cert) = min_cut_wrt(&ts, &keep).unwrap();
        prop_assert!(cert.value <= keep.len());
        prop_assert!(verify_certificate(&dag, &cert).is_valid());
    }
}
