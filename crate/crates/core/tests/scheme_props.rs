use proptest::prelude::*;

use samplex::schemes::{
    binary_expansion_points, check_lemma1_conditions, check_prop4_condition, check_thm7_condition,
    half_landau_points, theorem6_points, uniform_is_thm7_optimal, uniform_points, vanishing_exponents,
};
use samplex::search::next_subset;
use samplex::{Error, SignalSpec};

fn spec(period: f64, n1: usize, n: usize) -> SignalSpec {
    SignalSpec::uniform(period, n1, n, 1.0, 1.0).unwrap()
}

#[test]
fn uniform_exponential_sums_match_divisibility_scan() {
    for n2 in 1..=16 {
        for n1 in 1..=n2 {
            let sp = spec(1.0, n1, n2 - n1 + 1);
            for m in 1..=64 {
                let checked = check_thm7_condition(&uniform_points(m, 1.0), &sp).satisfied;
                assert_eq!(checked, uniform_is_thm7_optimal(m, &sp), "N1={n1} N2={n2} M={m}");
                if m > 2 * n2 {
                    assert!(checked);
                }
            }
        }
    }
}

#[test]
fn binary_expansion_meets_exponential_sums() {
    let mut collisions = 0;
    for n1 in 1..=6 {
        for n in 1..=4 {
            let sp = spec(2.0, n1, n);
            match binary_expansion_points(&sp) {
                Ok(s) => {
                    assert_eq!(s.len(), 1 << vanishing_exponents(&sp).len());
                    assert!(check_thm7_condition(&s, &sp).satisfied, "N1={n1} N={n}");
                }
                Err(Error::SchemeCollision { .. }) => collisions += 1,
                Err(e) => panic!("N1={n1} N={n}: {e}"),
            }
        }
    }
    assert!(collisions < 24, "{collisions} of 24 bands collide");
}

#[test]
fn theorem6_sets_meet_pairwise_lattice() {
    for n in 1..=9 {
        for n1 in (1..=30).filter(|n1| (2 * n1 - 1) % n == 0) {
            let sp = spec(1.0, n1, n);
            for m in (n + 1)..=(2 * n) {
                let s = theorem6_points(m, &sp).unwrap();
                assert!(check_lemma1_conditions(&s, &sp).satisfied, "N={n} N1={n1} M={m}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn half_landau_subsets_stay_on_lattice(
        n1 in 1usize..20, n in 1usize..9, tau in 0.0f64..5.0, period in 0.5f64..4.0, mask in 1u32..512,
    ) {
        let sp = spec(period, n1, n);
        let grid = half_landau_points(n, &sp, tau).unwrap();
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!idx.is_empty());
        let sub = grid.subset(&idx).unwrap();
        prop_assert!(check_lemma1_conditions(&sub, &sp).satisfied);
        prop_assert!(check_prop4_condition(&sub, &sp).satisfied);
    }

    #[test]
    fn schemes_are_sorted_and_reduced(pts in proptest::collection::vec(-10.0f64..10.0, 1..12), period in 0.5f64..3.0) {
        if let Ok(s) = samplex::SamplingScheme::new(pts, period) {
            prop_assert!(s.instants().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.instants().iter().all(|&t| (0.0..period).contains(&t)));
        }
    }

    #[test]
    fn uniform_gaps_are_equal(m in 1usize..80, period in 0.1f64..10.0) {
        let s = uniform_points(m, period);
        prop_assert_eq!(s.len(), m);
        for w in s.instants().windows(2) {
            prop_assert!((w[1] - w[0] - period / m as f64).abs() <= 1e-12 * period);
        }
    }
}

#[test]
fn every_grid_subset_passes_lemma1() {
    let sp = spec(1.0, 3, 7);
    let grid = half_landau_points(7, &sp, 0.02).unwrap();
    for m in 1..=7 {
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            assert!(check_lemma1_conditions(&grid.subset(&idx).unwrap(), &sp).satisfied);
            if !next_subset(&mut idx, 7) {
                break;
            }
        }
    }
}
