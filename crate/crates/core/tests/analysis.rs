use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellcap_core::caps::build_classified_cover;
use shellcap_core::energy::{additive_energy, rep_counts};
use shellcap_core::expsum::{dyadic_sum, dyadic_sum_majorant, DyadicSumSpec};
use shellcap_core::norms::{
    exact_grid_side, lp_norm_auto, lp_norm_cosine, lp_norm_even, lp_norm_grid, make_quasimode, proven_region_threshold,
    CoefficientVector, Exponent, NormMethod, QuasimodeKind, Rational,
};
use shellcap_core::{enumerate_shell, IntVec3, QuadraticForm};

fn pair_energy(points: &[IntVec3]) -> u128 {
    let mut sums: HashMap<IntVec3, u128> = HashMap::new();
    for a in points {
        for b in points {
            *sums.entry(*a + *b).or_default() += 1;
        }
    }
    sums.values().map(|c| c * c).sum()
}

fn random_points(seed: u64, n: usize, range: i64) -> Vec<IntVec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<IntVec3> = (0..n)
        .map(|_| IntVec3::new(rng.gen_range(-range..=range), rng.gen_range(-range..=range), rng.gen_range(-range..=range)))
        .collect();
    v.sort();
    v.dedup();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_matches_pair_count(seed in any::<u64>(), n in 1usize..40) {
        let pts = random_points(seed, n, 4);
        prop_assert_eq!(additive_energy(&pts, 2).unwrap(), pair_energy(&pts));
        let table = rep_counts(&pts, 2).unwrap();
        prop_assert_eq!(table.total(), (pts.len() * pts.len()) as u128);
    }

    #[test]
    fn energy_is_translation_invariant(seed in any::<u64>(), shift in prop::array::uniform3(-50i64..50)) {
        let pts = random_points(seed, 20, 3);
        let moved: Vec<IntVec3> = pts.iter().map(|p| *p + IntVec3(shift)).collect();
        prop_assert_eq!(additive_energy(&pts, 2).unwrap(), additive_energy(&moved, 2).unwrap());
        prop_assert_eq!(additive_energy(&pts, 3).unwrap(), additive_energy(&moved, 3).unwrap());
    }

    #[test]
    fn grid_norm_agrees_with_exact_even_norm(seed in any::<u64>(), n in 1usize..12) {
        let pts = random_points(seed, n, 3);
        let f = CoefficientVector::from_integer(pts.iter().map(|&p| (p, 1)).collect()).unwrap();
        let exact = lp_norm_even(&f, 2).unwrap().norm;
        let grid = lp_norm_grid(&f, 4.0, exact_grid_side(4, f.max_coordinate())).unwrap();
        prop_assert!((grid / exact - 1.0).abs() < 1e-10, "{} vs {}", grid, exact);
        let l2 = lp_norm_grid(&f, 2.0, exact_grid_side(2, f.max_coordinate())).unwrap();
        prop_assert!((l2 - (pts.len() as f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn dyadic_sum_respects_majorant(
        lambda in 3.0f64..40.0, k in 0u32..3, x in prop::array::uniform3(0.0f64..1.0),
    ) {
        let m = 1u64 << k;
        let spec = DyadicSumSpec::new(lambda, 1.0 / lambda, m, x).unwrap();
        prop_assert!(dyadic_sum(&spec).norm() <= dyadic_sum_majorant(&spec) * (1.0 + 1e-12));
    }

    #[test]
    fn dyadic_sum_is_radial(lambda in 3.0f64..40.0, x in prop::array::uniform3(0.01f64..0.99)) {
        let spec = |y| DyadicSumSpec::new(lambda, 0.5 / lambda, 2, y).unwrap();
        let s = dyadic_sum(&spec(x));
        let reflected = dyadic_sum(&spec([1.0 - x[0], 1.0 - x[1], 1.0 - x[2]]));
        let permuted = dyadic_sum(&spec([x[2], x[0], x[1]]));
        prop_assert!((s - reflected).norm() < 1e-9 * (1.0 + s.norm()));
        prop_assert!((s - permuted).norm() < 1e-9 * (1.0 + s.norm()));
    }

    #[test]
    fn region_rational_and_real_agree(a in 40i128..2000, b in 10i128..200) {
        prop_assume!(a > 2 * b);
        let exact = proven_region_threshold(Exponent::Rational(Rational::new(a, b))).unwrap();
        let real = proven_region_threshold(Exponent::Real(a as f64 / b as f64)).unwrap();
        prop_assert!((exact.exponent - real.exponent).abs() < 1e-12);
        prop_assert!(exact.exponent < 0.0 && exact.exponent >= -1.0);
    }
}

#[test]
fn quasimode_norms_agree_across_methods() {
    let q = QuadraticForm::identity();
    let shell = enumerate_shell(&q, 9.0, 0.2).unwrap();
    let cover = build_classified_cover(&shell);
    let point = make_quasimode(&shell, QuasimodeKind::Point).unwrap();
    let pts = point.points().to_vec();
    let even = lp_norm_even(&point, 2).unwrap();
    assert_eq!(even.power.to_f64() as u128, pair_energy(&pts));

    let t = exact_grid_side(4, point.max_coordinate());
    let cosine = lp_norm_cosine(&point, 4.0, t).unwrap();
    let grid = lp_norm_grid(&point, 4.0, t).unwrap();
    assert!((cosine / even.norm - 1.0).abs() < 1e-10);
    assert!((grid / even.norm - 1.0).abs() < 1e-10);
    let (auto, method) = lp_norm_auto(&point, 4).unwrap();
    assert_eq!(method, NormMethod::EvenExact);
    assert_eq!(auto, even.norm);

    for cap in cover.iter().filter(|c| c.n_points() >= 2) {
        let f = make_quasimode(&shell, QuasimodeKind::Cap(cap)).unwrap();
        assert_eq!(additive_energy(&cap.members, 2).unwrap(), pair_energy(&cap.members));
        let e = lp_norm_even(&f, 2).unwrap();
        assert_eq!(e.power.to_f64() as u128, pair_energy(&cap.members));
    }
}
