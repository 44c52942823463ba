use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

use super::kernel::{exact_scan, ExactFrac, ExactTerm};
use super::*;
use crate::contfrac::IrrationalSpec;

const BITS: u32 = 200;

/// `‖q(a + b√d)/2‖` from an integer square root at `2^-200` resolution.
fn norm_oracle(q: u64, a: i64, b: i64, d: u64) -> f64 {
    let one = BigInt::one() << BITS;
    let root = num_integer::Roots::sqrt(&(BigInt::from(d) * BigInt::from(q) * BigInt::from(q) * &one * &one));
    let v = BigInt::from(a) * BigInt::from(q) * &one + BigInt::from(b) * root;
    let scale = &one * 2;
    let r = num_integer::Integer::mod_floor(&v, &scale);
    let n = if r.clone() * 2 > scale { &scale - r } else { r };
    BigRational::new(n, scale).to_f64().unwrap()
}

fn golden_norm(q: u64) -> f64 {
    norm_oracle(q, 1, 1, 5)
}

fn sqrt2_norm(q: u64) -> f64 {
    norm_oracle(q, 0, 2, 2)
}

fn golden() -> Alpha {
    Alpha::new(IrrationalSpec::golden()).unwrap()
}

fn sqrt2() -> Alpha {
    Alpha::new(IrrationalSpec::sqrt2()).unwrap()
}

fn contains(r: &SumReport, v: f64) -> bool {
    r.value_lo <= v * (1.0 + 1e-15) && v * (1.0 - 1e-15) <= r.value_hi
}

#[test]
fn golden_inverse_sq_small() {
    let r = sum_inverse_sq(&golden(), 3).unwrap();
    let oracle = 2.0 * (golden_norm(1).powi(-2) + golden_norm(2).powi(-2));
    assert_eq!(r.q_k, 3);
    assert!(r.exact);
    assert!(contains(&r, oracle), "{r:?} vs {oracle}");
    assert!((r.value - 49.597).abs() < 1e-3);
    assert!((r.normalized_ratio - 5.51).abs() < 5e-3);
    assert_eq!(r.term_count, 4);
}

#[test]
fn golden_inverse_l1_small() {
    let r = sum_inverse_l1(&golden(), 3).unwrap();
    let oracle = 2.0 * (1.0 / golden_norm(1) + 1.0 / golden_norm(2));
    assert!(contains(&r, oracle));
    assert!((r.value - 13.708).abs() < 1e-3);
}

#[test]
fn two_terms_at_k2() {
    let a = golden();
    let r = sum_inverse_sq(&a, 2).unwrap();
    assert_eq!(r.term_count, 2);
    assert!(contains(&r, 2.0 / golden_norm(1).powi(2)));
    let r = sum_inverse_l1(&a, 2).unwrap();
    assert!(contains(&r, 2.0 / golden_norm(1)));
}

#[test]
fn inverse_sq_matches_oracle_on_both_paths() {
    // k = 20 for √2 crosses EXACT_LIMIT and uses the float path
    let a = sqrt2();
    for k in [8, 12, 16] {
        let r = sum_inverse_sq(&a, k).unwrap();
        let oracle: f64 = 2.0 * (1..r.q_k).map(|q| sqrt2_norm(q).powi(-2)).sum::<f64>();
        assert!((r.value - oracle).abs() <= 1e-12 * oracle, "k={k}: {} vs {oracle}", r.value);
        assert!(r.value_lo <= r.value && r.value <= r.value_hi);
    }
    let r = sum_inverse_sq(&a, 12).unwrap();
    assert!(!r.exact && r.q_k == 33461);
}

#[test]
fn ratio_lower_bound() {
    for a in [golden(), sqrt2()] {
        for r in sum_inverse_sq_range(&a, 2..=18).unwrap() {
            let qk = r.q_k as f64;
            let qk1 = a.q_u64(r.k - 1).unwrap() as f64;
            assert!(r.normalized_ratio >= 2.0 * (qk / (qk + qk1)).powi(2));
            assert!(r.value_lo * (1.0 + 1e-15) >= 2.0 * qk * qk / ((1.0 + qk1 / qk).powi(2)));
        }
    }
}

#[test]
fn negative_side_matches_positive() {
    for a in [golden(), sqrt2()] {
        let (p, pe) = inverse_sq_side(&a, 15, false).unwrap();
        let (n, ne) = inverse_sq_side(&a, 15, true).unwrap();
        assert!((p - n).abs() <= pe + ne, "{p} vs {n}");
    }
}

#[test]
fn slice_blocks_rebracket_exactly() {
    let a = Alpha::new(IrrationalSpec::euler()).unwrap();
    for k in 1..=6 {
        let qk = a.q_u64(k).unwrap() as f64;
        let (blocks, whole) = slice_block_sums(&a, k, qk.sqrt().max(1.0)).unwrap();
        let mut acc = ScaledInterval::zero();
        for b in &blocks {
            acc.add(b);
        }
        assert_eq!(acc, whole);
        assert_eq!(blocks.len() as u64, a.quotient(k + 1).unwrap().to_u64().unwrap());
    }
}

#[test]
fn slice_first_term_at_full_cap() {
    let a = golden();
    let frac = ExactFrac::new(&a).unwrap();
    for k in 2..12 {
        let qk = a.q_u64(k).unwrap();
        let t = &exact_scan(&frac, qk, qk + 1, &ExactTerm::SliceSq(vec![qk as f64])).unwrap()[0];
        assert_eq!(t.lo, BigInt::one() << OUT_BITS);
        assert_eq!(t.hi, BigInt::one() << OUT_BITS);
    }
}

#[test]
fn slice_unit_cap_bound() {
    let a = sqrt2();
    for k in 1..=15 {
        let r = sum_slice_min(&a, k, 1.0).unwrap();
        assert!(r.value_hi <= 4.0 / r.q_k as f64);
        assert_eq!(r.term_count, 2 * (a.q_u64(k + 1).unwrap() - r.q_k));
    }
}

#[test]
fn slice_golden_matches_oracle() {
    let a = golden();
    let r = sum_slice_min(&a, 10, 89.0).unwrap();
    assert_eq!(r.q_k, 89);
    let oracle: f64 = 2.0
        * (89..144u64)
            .map(|q| (golden_norm(q).powi(-2)).min(89.0 * 89.0) / (q * q) as f64)
            .sum::<f64>();
    assert!(contains(&r, oracle) || (r.value - oracle).abs() < 1e-13 * oracle);
    assert!(r.exact);
}

#[test]
fn slice_monotone_in_cap() {
    let a = golden();
    let rows = sum_slice_min_range(&a, 3..=20, &|_, q| {
        let mut caps = vec![1.0, (q as f64).sqrt(), q as f64 / 2.0, q as f64];
        caps.retain(|&c| c >= 1.0);
        caps.sort_by(f64::total_cmp);
        caps
    }).unwrap();
    for row in rows {
        for w in row.windows(2) {
            assert!(w[0].value <= w[1].value, "{:?} {:?}", w[0], w[1]);
        }
    }
}

#[test]
fn slice_l1_bounds() {
    let a = golden();
    for k in 2..=15 {
        let r = sum_slice_min_l1(&a, k, 1.0, 0.5).unwrap();
        assert!(r.value_hi <= 2.0 / 0.5 * (r.q_k as f64).powf(-0.5));
        let lo = sum_slice_min_l1(&a, k, 3.0f64.min(r.q_k as f64), 0.9).unwrap();
        let hi = sum_slice_min_l1(&a, k, 3.0f64.min(r.q_k as f64), 0.1).unwrap();
        assert!(lo.value <= hi.value);
    }
}

#[test]
fn slice_l1_matches_oracle() {
    let a = sqrt2();
    let r = sum_slice_min_l1(&a, 6, 8.0, 0.5).unwrap();
    let (qk, qk1) = (a.q_u64(6).unwrap(), a.q_u64(7).unwrap());
    let oracle: f64 = 2.0
        * (qk..qk1)
            .map(|q| (1.0 / sqrt2_norm(q)).min(8.0) * (q as f64).powf(-1.5))
            .sum::<f64>();
    assert!((r.value - oracle).abs() <= 1e-13 * oracle);
    assert!(r.value_lo <= oracle && oracle <= r.value_hi);
}

#[test]
fn argument_checks() {
    let a = golden();
    assert!(matches!(sum_inverse_sq(&a, 1), Err(Error::InvalidArgument { .. })));
    assert!(matches!(sum_slice_min(&a, 5, 0.5), Err(Error::InvalidArgument { .. })));
    assert!(matches!(sum_slice_min(&a, 5, 9.0), Err(Error::InvalidArgument { .. })));
    assert!(matches!(sum_slice_min_l1(&a, 5, 2.0, 1.0), Err(Error::InvalidArgument { .. })));
}

#[test]
fn capped_closed_forms() {
    let qk = 13.0;
    let f = BVFunction::CappedInverseSquare { threshold: 2.0 * qk };
    assert_eq!(f.integral(), 8.0 * qk - 4.0);
    assert_eq!(f.variation(), 8.0 * qk * qk - 8.0);
    assert_eq!(f.eval(0.0), 4.0 * qk * qk);
    // midpoint rule on the even half
    let n = 2_000_000;
    let h = 0.5 / n as f64;
    let integral: f64 = 2.0 * (0..n).map(|i| f.eval_even((i as f64 + 0.5) * h)).sum::<f64>() * h;
    assert!((integral - f.integral()).abs() < 1e-3);
    let g = BVFunction::CappedInverse { threshold: 10.0 };
    let integral: f64 = 2.0 * (0..n).map(|i| g.eval_even((i as f64 + 0.5) * h)).sum::<f64>() * h;
    assert!((integral - g.integral()).abs() < 1e-6);
    assert_eq!(g.variation(), 16.0);
}

#[test]
fn piecewise_linear_closed_forms() {
    let f = BVFunction::PiecewiseLinear {
        knots: vec![(0.0, 1.0), (0.1, -0.5), (0.3, 0.8), (0.5, 0.2)],
    };
    f.validate().unwrap();
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    let integral: f64 = (0..n).map(|i| f.eval((i as f64 + 0.5) * h)).sum::<f64>() * h;
    assert!((integral - f.integral()).abs() < 1e-9);
    let var: f64 = (0..n).map(|i| (f.eval((i + 1) as f64 * h) - f.eval(i as f64 * h)).abs()).sum();
    assert!((var - f.variation()).abs() < 1e-9);
    assert_eq!(BVFunction::tent().variation(), 1.0);
    assert!(BVFunction::PiecewiseLinear { knots: vec![(0.0, 1.0)] }.validate().is_err());
}

#[test]
fn dk_cos_golden_example() {
    let r = denjoy_koksma_check(&BVFunction::cos(), &golden(), 4, &BigRational::from_integer(0.into())).unwrap();
    assert_eq!(r.q_n, 5);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let oracle: f64 = (0..5).map(|j| (2.0 * std::f64::consts::PI * j as f64 * g).cos()).sum();
    assert!((r.lhs - oracle.abs()).abs() < 1e-12);
    assert!((r.lhs - 0.026).abs() < 1e-3, "{}", r.lhs);
    assert!(r.pass && r.bound == 4.0);
}

#[test]
fn dk_constant_is_exact() {
    let x = BigRational::new(3.into(), 7.into());
    for r in denjoy_koksma_scan(&BVFunction::constant(2.5), &sqrt2(), 15, &x).unwrap() {
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.birkhoff_sum, 2.5 * r.q_n as f64);
    }
}

#[test]
fn dk_capped_budget() {
    let a = golden();
    for k in [4, 8, 12] {
        let qk = a.q_u64(k).unwrap() as f64;
        let f = BVFunction::CappedInverseSquare { threshold: 2.0 * qk };
        let x = BigRational::new(1.into(), 3.into());
        let r = denjoy_koksma_check(&f, &a, k, &x).unwrap();
        assert!(r.pass, "{r:?}");
        let budget = f.eval(0.0) + qk * f.integral() + f.variation();
        assert_eq!(budget, 4.0 * qk * qk + qk * (8.0 * qk - 4.0) + (8.0 * qk * qk - 8.0));
        assert!(r.birkhoff_sum <= r.mean_term + r.bound);
    }
}

#[test]
fn dk_scan_matches_direct_evaluation() {
    let a = sqrt2();
    let f = BVFunction::PiecewiseLinear {
        knots: vec![(0.0, 1.0), (0.1, -0.5), (0.3, 0.8), (0.5, 0.2)],
    };
    let x = BigRational::new(2.into(), 9.into());
    let reports = denjoy_koksma_scan(&f, &a, 10, &x).unwrap();
    for r in &reports {
        let direct: f64 = (0..r.q_n).map(|j| f.eval(2.0 / 9.0 + j as f64 * 2f64.sqrt())).sum();
        assert!((r.birkhoff_sum - direct).abs() < 1e-9 * r.q_n as f64);
        assert!(r.pass && r.lhs <= r.lhs_hi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dk_passes_for_random_rational_points(num in 0i64..10_000, n in 0usize..14) {
        let x = BigRational::new(num.into(), 10_000.into());
        let a = golden();
        for f in [BVFunction::cos(), BVFunction::tent(), BVFunction::CappedInverse { threshold: 21.0 }] {
            let r = denjoy_koksma_check(&f, &a, n, &x).unwrap();
            prop_assert!(r.pass, "{:?}", r);
        }
    }

    #[test]
    fn sums_are_nonnegative_and_ordered(k in 2usize..16) {
        let a = sqrt2();
        let r = sum_inverse_sq(&a, k).unwrap();
        prop_assert!(r.value_lo >= 0.0 && r.value_lo <= r.value && r.value <= r.value_hi);
        let l = sum_inverse_l1(&a, k).unwrap();
        prop_assert!(l.value <= r.value);
        prop_assert_eq!(l.term_count, 2 * (r.q_k - 1));
    }

    #[test]
    fn trig_variation_dominates(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..5)) {
        let f = BVFunction::TrigPoly { mean: 0.0, cos_coeffs: coeffs };
        let n = 20_000;
        let var: f64 = (0..n).map(|i| (f.eval((i + 1) as f64 / n as f64) - f.eval(i as f64 / n as f64)).abs()).sum();
        prop_assert!(var <= f.variation() * (1.0 + 1e-9));
    }
}
