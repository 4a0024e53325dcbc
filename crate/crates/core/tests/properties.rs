use std::sync::Arc;

use proptest::prelude::*;

use vilenkin_core::hardy::{hardy_quasinorm, lp_norm, weak_lp_norm};
use vilenkin_core::kernels::{conditional_expectation, partial_sum};
use vilenkin_core::transform::{fast_transform, inverse_transform, naive_transform};
use vilenkin_core::{Complex64, GridFunction, MartingaleView, RadixSystem};

fn system() -> impl Strategy<Value = Arc<RadixSystem>> {
    prop::collection::vec(2u32..6, 1..5).prop_map(|r| Arc::new(RadixSystem::new(r).unwrap()))
}

fn function() -> impl Strategy<Value = GridFunction> {
    system().prop_flat_map(|sys| {
        let n = sys.len();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
            let values = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            GridFunction::new(sys.clone(), values).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_matches_naive(f in function()) {
        let gap = fast_transform(&f).max_distance(&naive_transform(&f));
        prop_assert!(gap < 1e-10);
        prop_assert!(inverse_transform(&fast_transform(&f)).max_distance(&f).unwrap() < 1e-10);
    }

    #[test]
    fn parseval(f in function()) {
        let energy = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / f.values().len() as f64;
        prop_assert!((fast_transform(&f).energy() - energy).abs() < 1e-10 * energy.max(1.0));
    }

    #[test]
    fn lacunary_partial_sums_are_expectations(f in function()) {
        let sys = f.system_arc().clone();
        for n in 0..=sys.resolution() {
            let s = partial_sum(&f, sys.m_pow(n)).unwrap();
            let e = conditional_expectation(&f, n).unwrap();
            prop_assert!(s.max_distance(&e).unwrap() < 1e-10);
        }
    }

    #[test]
    fn norm_ordering(f in function(), p in 0.2f64..2.0) {
        let h = hardy_quasinorm(&MartingaleView::new(f.clone()), p).unwrap();
        let strong = lp_norm(&f, p).unwrap();
        let weak = weak_lp_norm(&f, p).unwrap();
        prop_assert!(weak <= strong * (1.0 + 1e-12));
        prop_assert!(strong <= h * (1.0 + 1e-12));
    }
}
