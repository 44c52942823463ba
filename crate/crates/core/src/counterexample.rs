//! A `C¹` cocycle whose rigidity along `q_n` is only logarithmic:
//! `φ(x) = (1/C) Σ_{k>=2} 2cos(2π q_k x) / (q_k (log q_k)²)`.

use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::contfrac::Alpha;
use crate::dynamics::{geometric_ratio, BirkhoffProfile, Envelope, FourierObservable, Psi};
use crate::error::{Error, Result};
use crate::numeric::{fixed_norm, ln_big};

/// Number of indices summed explicitly when fixing `C`.
const C_TERMS: usize = 64;

#[derive(Debug, Clone)]
pub struct CounterexamplePhi {
    alpha: Alpha,
    k: usize,
    c: f64,
    phi: FourierObservable,
    variation: f64,
}

impl CounterexamplePhi {
    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    /// Truncation index `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Normalization constant `C`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn observable(&self) -> &FourierObservable {
        &self.phi
    }

    /// `Σ_k 8/(C (log q_k)²)`, an upper bound on `Var(φ)`.
    pub fn variation_bound(&self) -> f64 {
        self.variation
    }
}

/// `C = 1 + 32 (Σ_{k=2}^{K'} (log q_k)^-2 + tail)` where the tail past the last
/// summed index `k_0 - 1` uses `q_k >= 2^{(k-1)/2}`:
/// `Σ_{k>=k_0} 4/((k-1)² log²2) <= 4/((k_0 - 2) log²2)`.
fn normalization(alpha: &Alpha, k: usize) -> f64 {
    let k_prime = k.max(C_TERMS).min(alpha.max_index());
    let head: f64 = (2..=k_prime).map(|j| ln_big(alpha.q(j).expect("index checked")).powi(-2)).sum();
    let tail = 4.0 / ((k_prime - 1) as f64 * LN_2 * LN_2);
    1.0 + 32.0 * (head + tail)
}

pub fn build(alpha: &Alpha, k: usize) -> Result<CounterexamplePhi> {
    if k < 3 {
        return Err(Error::arg("K", "must be >= 3"));
    }
    let c = normalization(alpha, k);
    let mut modes = Vec::with_capacity(k - 1);
    let mut variation = 0.0;
    for j in 2..=k {
        let q = alpha.q_u64(j)?;
        let l2 = (q as f64).ln().powi(2);
        modes.push((q as i64, Complex64::new(1.0 / (c * q as f64 * l2), 0.0)));
        variation += 8.0 / (c * l2);
    }
    let envelope = Envelope::Tame {
        psi: Psi::ScaledLogSquare { scale: c },
    };
    let phi = FourierObservable::new(0.0, modes, Some(envelope))?;
    debug_assert!(variation < 0.5);
    Ok(CounterexamplePhi {
        alpha: alpha.clone(),
        k,
        c,
        phi,
        variation,
    })
}

/// Which index supplies the `(log q_n)^-4` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantCase {
    /// `q_n ‖q_n α‖ < 1/2`: the term `k = n`.
    Same,
    /// `q_n ‖q_n α‖ > 1/2`, hence `q_{n+1} < 2 q_n`: the term `k = n + 1`.
    Next,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub n: usize,
    pub q_n: u64,
    /// `q_n ‖q_n α‖`.
    pub q_norm: f64,
    pub case: DominantCase,
    pub dominant_k: usize,
    /// The dominant term of `D̂` alone.
    pub dominant_term: f64,
    /// `dominant_term · (log q_n)^4`, the empirical constant.
    pub dominant_normalized: f64,
    pub d_hat: f64,
    /// `D̂ · (log q_n)^4`.
    pub normalized: f64,
    /// `D̂ / exp(-(log log q_n)^{1+δ})`.
    pub threshold_ratio: f64,
    /// `max |S_{q_n}(φ)|` on the midpoint grid.
    pub sup_grid: f64,
    /// For the `Next` case, the exact check `q_{n+1} < 2 q_n`.
    pub next_lt_double: Option<bool>,
}

/// Decide `q_n ‖q_n α‖ < 1/2` from a certified bracket.
fn classify(alpha: &Alpha, q: &BigInt) -> Result<(DominantCase, f64)> {
    let nv = alpha.dist_nearest_int(q, 64)?;
    let qr = BigRational::from_integer(q.clone());
    let half = BigRational::new(1.into(), 2.into());
    let (lo, hi) = (&nv.lo * &qr, &nv.hi * &qr);
    let case = if hi < half {
        DominantCase::Same
    } else if lo > half {
        DominantCase::Next
    } else {
        return Err(Error::PrecisionExhausted(format!("cannot compare q‖qα‖ with 1/2 at q = {q}")));
    };
    Ok((case, nv.mid_f64() * crate::numeric::rational_to_f64(&qr)))
}

/// `D̂_{q_n} = ‖q_nα‖² + Σ_k 2|c_{q_k}|² |g_{q_k}(q_n)|²` over the stored modes,
/// with `‖S_{q_n}‖ = |S_{q_n}|` since `|S_{q_n}| < 1/2`.
pub fn lower_bound_table(phi: &CounterexamplePhi, n_start: usize, n_end: usize, grid: usize, delta: f64) -> Result<Vec<LowerBoundRow>> {
    if n_start < 2 || n_end >= phi.k || n_start > n_end {
        return Err(Error::arg("n_range", format!("must satisfy 2 <= a <= b <= K - 1 = {}", phi.k - 1)));
    }
    if grid < 64 {
        return Err(Error::arg("grid", "must be >= 64"));
    }
    if !(delta > 0.0) {
        return Err(Error::arg("delta", "must be positive"));
    }
    let alpha = &phi.alpha;
    let rot = alpha.rotation();
    (n_start..=n_end)
        .into_par_iter()
        .map(|n| {
            let q_big = alpha.q(n)?;
            let q = alpha.q_u64(n)?;
            let (case, q_norm) = classify(alpha, q_big)?;
            let mut d_hat = fixed_norm(rot.multiple(q as i128).0).powi(2);
            let mut terms = Vec::with_capacity(phi.phi.modes().len());
            for &(qk, c) in phi.phi.modes() {
                let (g, _) = geometric_ratio(&rot, qk, q)?;
                let t = 2.0 * c.norm_sqr() * g.norm_sqr();
                terms.push(t);
                d_hat += t;
            }
            let (dominant_k, next_lt_double) = match case {
                DominantCase::Same => (n, None),
                DominantCase::Next => (n + 1, Some(alpha.q(n + 1)? < &(q_big * 2))),
            };
            // modes are stored for k = 2..=K in increasing order
            let dominant_term = terms[dominant_k - 2];
            let l4 = (q as f64).ln().powi(4);
            let profile = BirkhoffProfile::new(alpha, &phi.phi, q)?;
            let sup_grid = profile.oscillation_grid(grid).into_iter().fold(0.0f64, |m, s| m.max(s.abs()));
            Ok(LowerBoundRow {
                n,
                q_n: q,
                q_norm,
                case,
                dominant_k,
                dominant_term,
                dominant_normalized: dominant_term * l4,
                d_hat,
                normalized: d_hat * l4,
                threshold_ratio: d_hat * (q as f64).ln().ln().powf(1.0 + delta).exp(),
                sup_grid,
                next_lt_double,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::IrrationalSpec;
    use crate::dynamics::birkhoff_direct;
    use proptest::prelude::*;

    fn golden() -> Alpha {
        Alpha::new(IrrationalSpec::golden()).unwrap()
    }

    #[test]
    fn construction() {
        let a = golden();
        let phi = build(&a, 3).unwrap();
        let obs = phi.observable();
        assert_eq!(obs.mean(), 0.0);
        assert_eq!(obs.modes().len(), 2);
        // golden: q_2 = 2, q_3 = 3
        let (l2, l3) = (2f64.ln().powi(2), 3f64.ln().powi(2));
        let closed = 8.0 / (phi.c() * l2) + 8.0 / (phi.c() * l3);
        assert!((phi.variation_bound() - closed).abs() < 1e-15);
        assert!((obs.variation_bound() - closed).abs() < 1e-14);
        assert!(phi.variation_bound() < 0.5);
        for q in -40i64..=40 {
            let c = obs.coeff(q);
            if q.abs() == 2 || q.abs() == 3 {
                assert!((c.re - 1.0 / (phi.c() * q.abs() as f64 * (q.abs() as f64).ln().powi(2))).abs() < 1e-16);
            } else {
                assert_eq!(c, Complex64::new(0.0, 0.0));
            }
        }
        assert!(build(&a, 2).is_err());
    }

    #[test]
    fn c_covers_the_full_series() {
        let a = golden();
        let phi = build(&a, 30).unwrap();
        // the infinite series for golden, summed far past any truncation
        let full: f64 = (2..=200).map(|j| ln_big(a.q(j).unwrap()).powi(-2)).sum();
        assert!(8.0 * full / phi.c() < 0.5);
        assert_eq!(phi.c(), build(&a, 10).unwrap().c());
    }

    #[test]
    fn table_cases_and_bounds() {
        let a = golden();
        let phi = build(&a, 20).unwrap();
        let rows = lower_bound_table(&phi, 2, 19, 512, 0.1).unwrap();
        for row in &rows {
            assert!(row.sup_grid < 0.5);
            assert!(row.dominant_term <= row.d_hat);
            assert!(row.d_hat >= 0.0 && row.d_hat.is_finite());
            match row.case {
                DominantCase::Same => assert!(row.q_norm < 0.5),
                DominantCase::Next => {
                    assert!(row.q_norm > 0.5);
                    assert_eq!(row.next_lt_double, Some(true));
                }
            }
        }
        assert!(lower_bound_table(&phi, 2, 20, 512, 0.1).is_err());
        assert!(lower_bound_table(&phi, 1, 10, 512, 0.1).is_err());
    }

    #[test]
    fn next_case_occurs() {
        // [0; 10, 1, 10, 1, ...]: after a large a_n and a_{n+1} = 1 the product
        // q_n‖q_nα‖ exceeds 1/2
        let cf: Vec<i64> = std::iter::once(0).chain((0..150).map(|i| if i % 2 == 0 { 10 } else { 1 })).collect();
        let a = Alpha::new(IrrationalSpec::explicit(&cf)).unwrap();
        let phi = build(&a, 14).unwrap();
        let rows = lower_bound_table(&phi, 2, 13, 256, 0.1).unwrap();
        assert!(rows.iter().any(|r| r.case == DominantCase::Next));
        assert!(rows.iter().any(|r| r.case == DominantCase::Same));
        for row in rows {
            let exact = a.q(row.n).unwrap() * 2 > *a.q(row.n + 1).unwrap();
            if row.case == DominantCase::Next {
                assert!(exact && row.q_norm > 0.5);
                assert!(row.dominant_normalized > 0.0);
            }
            assert!(row.sup_grid < 0.5);
        }
    }

    #[test]
    fn d_hat_matches_quadrature() {
        let a = golden();
        let phi = build(&a, 12).unwrap();
        let rows = lower_bound_table(&phi, 4, 8, 256, 0.1).unwrap();
        let g = 4000;
        for row in rows {
            let quad: f64 = (0..g)
                .map(|i| birkhoff_direct(phi.observable(), &a, (i as f64 + 0.5) / g as f64, row.q_n).powi(2))
                .sum::<f64>()
                / g as f64;
            let rn = crate::numeric::torus_norm(row.q_n as f64 * a.frac_f64());
            assert!((row.d_hat - (rn * rn + quad)).abs() < 1e-9 * row.d_hat, "n={}", row.n);
        }
    }

    #[test]
    fn truncation_is_monotone() {
        let a = golden();
        let small = lower_bound_table(&build(&a, 12).unwrap(), 3, 11, 128, 0.1).unwrap();
        let large = lower_bound_table(&build(&a, 24).unwrap(), 3, 11, 128, 0.1).unwrap();
        for (s, l) in small.iter().zip(&large) {
            assert!(s.d_hat <= l.d_hat);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn variation_below_half(quotients in proptest::collection::vec(1i64..50, 30..40)) {
            let mut cf = vec![0];
            cf.extend(quotients);
            let a = Alpha::new(IrrationalSpec::explicit(&cf)).unwrap();
            let phi = build(&a, 12).unwrap();
            prop_assert!(phi.variation_bound() < 0.5);
        }
    }
}
