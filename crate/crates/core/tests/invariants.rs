use proptest::prelude::*;

use sumprod_core::expsum::{fourth_moment, parseval_check};
use sumprod_core::harness::{check_energy_connection, check_katz_koester, check_sumprod};
use sumprod_core::projective::build_theorem2_arrangement;
use sumprod_core::sets::{additive_energy, bilinear_solution_count, sumset};
use sumprod_core::{FieldModulus, ResidueSet};

fn set(p: u64, xs: Vec<u64>) -> ResidueSet {
    ResidueSet::new(FieldModulus::new(p).unwrap(), xs).unwrap()
}

fn small_set(p: u64, max: usize) -> impl Strategy<Value = ResidueSet> {
    prop::collection::vec(0..p, 1..=max).prop_map(move |xs| set(p, xs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_sits_between_cauchy_schwarz_and_trivial(a in small_set(101, 12), b in small_set(101, 12)) {
        let e = additive_energy(&a, &b).unwrap().exact_value();
        let (na, nb) = (a.len() as u128, b.len() as u128);
        let s = sumset(&a, &b).unwrap().len() as u128;
        prop_assert!(na * na * nb * nb <= e * s);
        prop_assert!(e <= na * nb * na.min(nb));
    }

    #[test]
    fn incidences_equal_bilinear_solutions(a in small_set(31, 5), b in small_set(31, 5), c in small_set(31, 5)) {
        let arr = build_theorem2_arrangement(&a, &b, &c).unwrap();
        prop_assert_eq!(arr.count_incidences() as u128, bilinear_solution_count(&a, &b, &c).unwrap());
    }

    #[test]
    fn exact_rows_never_fail(a in small_set(53, 10), c in small_set(53, 10)) {
        prop_assert!(check_katz_koester(&a, &c).unwrap().iter().all(|r| !r.exact_failed()));
        prop_assert!(check_sumprod(&a).unwrap().iter().all(|r| !r.exact_failed()));
        let units = a.without_zero();
        if !units.is_empty() {
            prop_assert!(check_energy_connection(&units, 1).unwrap().iter().all(|r| !r.exact_failed()));
        }
    }

    #[test]
    fn character_identities(a in small_set(211, 40)) {
        let (lhs, rhs) = parseval_check(&a);
        prop_assert!((lhs - rhs).abs() <= 1e-6 * rhs);
        let (moment, pe) = fourth_moment(&a).unwrap();
        prop_assert_eq!(pe, 211 * additive_energy(&a, &a).unwrap().exact_value());
        prop_assert!((moment - pe as f64).abs() <= 1e-6 * pe as f64);
    }
}
