//! A resolved rotation number: cached expansion, convergents and a 128-bit
//! fixed-point image of `frac(α)` for fast orbit arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::surd::QuadElement;
use super::{convergents_of, Convergent, IrrationalSpec, QuotientStream};
use crate::error::{Error, Result};
use crate::numeric::{fixed_from_rational, pad_down, pad_up, rational_to_f64, TWO_POW_M128, UNIT_ROUNDOFF};

/// Working precision (bits) for exact arithmetic unless overridden.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

const MAX_TERMS: usize = 50_000;

/// A certified bracket `[lo, hi]` of `‖qα‖`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormValue {
    pub lo: BigRational,
    pub hi: BigRational,
    /// True when no input uncertainty enters (surd or explicit expansion).
    pub exact: bool,
    /// The exact value in `Q(√d)` for surd inputs.
    pub surd: Option<QuadElement>,
}

impl NormValue {
    /// A binary64 lower bound.
    pub fn lo_f64(&self) -> f64 {
        pad_down(rational_to_f64(&self.lo), 2.0 * UNIT_ROUNDOFF, 0.0).max(0.0)
    }

    /// A binary64 upper bound.
    pub fn hi_f64(&self) -> f64 {
        pad_up(rational_to_f64(&self.hi), 2.0 * UNIT_ROUNDOFF, 0.0).min(0.5)
    }

    pub fn mid_f64(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(2.into())))
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// Rotation by `frac(α)` in 128-bit fixed point with a bound on the step error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRotation {
    pub step: u128,
    pub err: f64,
}

impl FixedRotation {
    /// Fixed-point `frac(mα)` and a bound on its error.
    #[inline]
    pub fn multiple(&self, m: i128) -> (u128, f64) {
        let pos = self.step.wrapping_mul(m as u128);
        (pos, m.unsigned_abs() as f64 * self.err * (1.0 + 2.0 * UNIT_ROUNDOFF))
    }

    /// Rotation by `-α`.
    pub fn negated(&self) -> Self {
        FixedRotation {
            step: self.step.wrapping_neg(),
            err: self.err,
        }
    }
}

/// α together with everything derived from its expansion.
#[derive(Debug, Clone)]
pub struct Alpha {
    spec: IrrationalSpec,
    precision: u32,
    quotients: Vec<BigInt>,
    convergents: Vec<Convergent>,
    fixed: u128,
    fixed_err: f64,
}

impl Alpha {
    pub fn new(spec: IrrationalSpec) -> Result<Self> {
        Self::with_precision(spec, DEFAULT_PRECISION_BITS)
    }

    /// Expand until `q_M > 2^(precision + 8)` or the input runs out.
    pub fn with_precision(spec: IrrationalSpec, precision: u32) -> Result<Self> {
        let mut stream = QuotientStream::new(&spec)?;
        let target = BigInt::one() << (precision as usize + 8);
        let mut quotients = Vec::new();
        let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
        // keep one quotient past the target so that q_{M+1} is known
        let mut past_target = 0;
        while quotients.len() < MAX_TERMS && past_target < 2 {
            match stream.next_quotient() {
                Ok(a) => {
                    if !quotients.is_empty() {
                        let next = &a * &q + &q_prev;
                        q_prev = std::mem::replace(&mut q, next);
                    }
                    quotients.push(a);
                    if q > target {
                        past_target += 1;
                    }
                }
                Err(Error::PrecisionExhausted(_)) => break,
                Err(e) => return Err(e),
            }
        }
        if quotients.len() < 2 {
            return Err(Error::PrecisionExhausted(
                "α must provide at least two partial quotients".into(),
            ));
        }
        let convergents = convergents_of(&quotients);
        let mut alpha = Alpha {
            spec,
            precision,
            quotients,
            convergents,
            fixed: 0,
            fixed_err: 0.0,
        };
        let (lo, hi) = alpha.frac_bracket_best()?;
        alpha.fixed = fixed_from_rational(&lo);
        alpha.fixed_err = rational_to_f64(&(&hi - &lo)) * (1.0 + 4.0 * UNIT_ROUNDOFF) + TWO_POW_M128;
        Ok(alpha)
    }

    pub fn spec(&self) -> &IrrationalSpec {
        &self.spec
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn quotients(&self) -> &[BigInt] {
        &self.quotients
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    /// Largest `n` with `q_n` available.
    pub fn max_index(&self) -> usize {
        self.convergents.len() - 1
    }

    pub fn convergent(&self, n: usize) -> Result<&Convergent> {
        self.convergents.get(n).ok_or_else(|| {
            Error::PrecisionExhausted(format!(
                "q_{n} is beyond the {} certified convergents of {}",
                self.convergents.len(),
                self.spec
            ))
        })
    }

    pub fn q(&self, n: usize) -> Result<&BigInt> {
        Ok(&self.convergent(n)?.q)
    }

    /// `q_n` as a machine integer.
    pub fn q_u64(&self, n: usize) -> Result<u64> {
        self.q(n)?
            .to_u64()
            .ok_or_else(|| Error::RangeTooLarge(format!("q_{n} does not fit in 64 bits")))
    }

    /// Partial quotient `a_n`.
    pub fn quotient(&self, n: usize) -> Result<&BigInt> {
        self.quotients
            .get(n)
            .ok_or_else(|| Error::PrecisionExhausted(format!("a_{n} is not certified")))
    }

    /// `frac(α)` in 128-bit fixed point, truncated.
    pub fn fixed(&self) -> u128 {
        self.fixed
    }

    /// Bound on `|fixed / 2^128 - frac(α)|`.
    pub fn fixed_err(&self) -> f64 {
        self.fixed_err
    }

    pub fn frac_f64(&self) -> f64 {
        crate::numeric::fixed_to_unit(self.fixed)
    }

    /// Fixed-point `frac(mα)` for `|m| < 2^64` and a bound on its error.
    pub fn fixed_multiple(&self, m: i128) -> (u128, f64) {
        self.rotation().multiple(m)
    }

    pub fn rotation(&self) -> FixedRotation {
        FixedRotation {
            step: self.fixed,
            err: self.fixed_err,
        }
    }

    /// Rational bracket of `frac(α)` of width at most `2^-bits`.
    pub fn frac_bracket(&self, bits: u32) -> Result<(BigRational, BigRational)> {
        let tol = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
        match &self.spec {
            IrrationalSpec::QuadraticSurd(_) => {
                let e = self.frac_surd().expect("surd spec");
                Ok(e.bracket(bits as usize))
            }
            IrrationalSpec::DecimalApprox(_) => {
                let (lo, hi) = self.frac_bracket_best()?;
                if &hi - &lo > tol {
                    return Err(Error::PrecisionExhausted(format!(
                        "decimal input cannot bracket frac(α) to 2^-{bits}"
                    )));
                }
                Ok((lo, hi))
            }
            IrrationalSpec::ExplicitCf(_) => {
                let a0 = BigRational::from_integer(self.quotients[0].clone());
                for m in 0..self.convergents.len() {
                    let (lo, hi) = self.cf_bracket(m);
                    if &hi - &lo <= tol {
                        return Ok((lo - &a0, hi - &a0));
                    }
                }
                Err(Error::PrecisionExhausted(format!(
                    "explicit expansion cannot bracket α to 2^-{bits}"
                )))
            }
        }
    }

    /// The tightest bracket of `frac(α)` available.
    fn frac_bracket_best(&self) -> Result<(BigRational, BigRational)> {
        match &self.spec {
            IrrationalSpec::QuadraticSurd(_) => self.frac_bracket(self.precision.max(160)),
            IrrationalSpec::ExplicitCf(_) => {
                let a0 = BigRational::from_integer(self.quotients[0].clone());
                let (lo, hi) = self.cf_bracket(self.convergents.len() - 1);
                Ok((lo - &a0, hi - a0))
            }
            IrrationalSpec::DecimalApprox(d) => {
                let lo = &d.value - &d.error;
                let hi = &d.value + &d.error;
                let fl = lo.floor();
                if hi.floor() != fl {
                    return Err(Error::PrecisionExhausted(
                        "decimal interval straddles an integer".into(),
                    ));
                }
                Ok((lo - &fl, hi - fl))
            }
        }
    }

    /// Bracket of α from the expansion up to index `m`.
    fn cf_bracket(&self, m: usize) -> (BigRational, BigRational) {
        let last = self.convergents.len() - 1;
        let c = &self.convergents[m];
        let a = BigRational::new(c.p.clone(), c.q.clone());
        let b = if m < last {
            let d = &self.convergents[m + 1];
            BigRational::new(d.p.clone(), d.q.clone())
        } else {
            // α = [a_0; ..., a_m, x] with x > 1, so it sits between p_m/q_m and
            // the mediant with the previous convergent
            let (pp, qp) = if m == 0 {
                (BigInt::one(), BigInt::zero())
            } else {
                let d = &self.convergents[m - 1];
                (d.p.clone(), d.q.clone())
            };
            BigRational::new(&c.p + pp, &c.q + qp)
        };
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// `frac(α)` as an element of `Q(√d)` for surd inputs.
    pub fn frac_surd(&self) -> Option<QuadElement> {
        match &self.spec {
            IrrationalSpec::QuadraticSurd(s) => {
                let e = QuadElement::new(s.a.clone(), s.b.clone(), s.d.clone(), s.c.clone());
                let fl = e.floor();
                Some(QuadElement::new(&e.x - &fl * &e.z, e.y, e.d, e.z))
            }
            _ => None,
        }
    }

    /// Certified `‖qα‖` with bracket width at most `2^-precision`.
    pub fn dist_nearest_int(&self, q: &BigInt, precision: u32) -> Result<NormValue> {
        if let Some(g) = self.frac_surd() {
            // qα - m with m the nearest integer to qα
            let x = q * &g.x;
            let y = q * &g.y;
            let two = BigInt::from(2);
            let m = crate::numeric::floor_surd(&(&two * &x + &g.z), &(&two * &y), &g.d, &(&two * &g.z));
            let diff = QuadElement::new(x - &m * &g.z, y, g.d.clone(), g.z.clone()).abs();
            let (lo, hi) = diff.bracket(precision as usize + 1);
            let half = BigRational::new(BigInt::one(), two);
            return Ok(NormValue {
                lo: if lo.is_negative() { BigRational::zero() } else { lo },
                hi: if hi > half { half } else { hi },
                exact: true,
                surd: Some(diff),
            });
        }
        let bits = precision + 1 + q.bits() as u32;
        let (lo, hi) = self.frac_bracket(bits)?;
        let qr = BigRational::from_integer(q.clone());
        let (a, b) = (&lo * &qr, &hi * &qr);
        let (lo, hi) = norm_interval(&a, &b);
        Ok(NormValue {
            lo,
            hi,
            exact: self.spec.is_exact(),
            surd: None,
        })
    }
}

/// Range of `‖t‖` over `t ∈ [a, b]`, assuming `b - a < 1/2`.
pub(crate) fn norm_interval(a: &BigRational, b: &BigRational) -> (BigRational, BigRational) {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let norm = |t: &BigRational| {
        let r = t - t.floor();
        if r > half {
            BigRational::one() - r
        } else {
            r
        }
    };
    let (na, nb) = (norm(a), norm(b));
    let contains_int = a.ceil() <= *b;
    let sa = a - &half;
    let contains_half = sa.ceil() <= b - &half;
    let lo = if contains_int {
        BigRational::zero()
    } else if na < nb {
        na.clone()
    } else {
        nb.clone()
    };
    let hi = if contains_half {
        half
    } else if na > nb {
        na
    } else {
        nb
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn golden_norm_is_exact() {
        let a = Alpha::new(IrrationalSpec::golden()).unwrap();
        let v = a.dist_nearest_int(&BigInt::one(), 64).unwrap();
        assert!(v.exact);
        // (3 - √5)/2 = 0.3819660112501051...
        assert!((v.mid_f64() - 0.381_966_011_250_105_1).abs() < 1e-15);
        let s = v.surd.unwrap();
        assert_eq!(s.cmp_elem(&QuadElement::new(3.into(), (-1).into(), 5.into(), 2.into())), std::cmp::Ordering::Equal);
    }

    #[test]
    fn cf_and_surd_brackets_agree() {
        let surd = Alpha::new(IrrationalSpec::sqrt2()).unwrap();
        let cf = Alpha::new(IrrationalSpec::explicit(&[1; 1].iter().chain([2; 200].iter()).copied().collect::<Vec<_>>())).unwrap();
        for q in [1u32, 7, 12, 1000, 99_991] {
            let q = BigInt::from(q);
            let a = surd.dist_nearest_int(&q, 100).unwrap();
            let b = cf.dist_nearest_int(&q, 100).unwrap();
            assert!(a.lo <= b.hi && b.lo <= a.hi);
            assert!(b.width() <= rat(1, 1) / BigRational::from_integer(BigInt::one() << 100usize));
        }
    }

    #[test]
    fn fixed_point_image() {
        let a = Alpha::new(IrrationalSpec::golden()).unwrap();
        assert!((a.frac_f64() - 0.618_033_988_749_894_9).abs() < 1e-16);
        assert!(a.fixed_err() < 1e-38);
        let e = Alpha::new(IrrationalSpec::euler()).unwrap();
        assert!((e.frac_f64() - (std::f64::consts::E - 2.0)).abs() < 4e-16);
    }

    #[test]
    fn norm_interval_cases() {
        let (lo, hi) = norm_interval(&rat(9, 10), &rat(11, 10));
        assert_eq!((lo, hi), (rat(0, 1), rat(1, 10)));
        let (lo, hi) = norm_interval(&rat(4, 10), &rat(6, 10));
        assert_eq!((lo, hi), (rat(4, 10), rat(1, 2)));
        let (lo, hi) = norm_interval(&rat(-13, 10), &rat(-12, 10));
        assert_eq!((lo, hi), (rat(2, 10), rat(3, 10)));
    }

    #[test]
    fn finite_list_limits_precision() {
        let a = Alpha::new(IrrationalSpec::explicit(&[0, 1, 1, 1])).unwrap();
        assert!(a.dist_nearest_int(&BigInt::one(), 1).is_ok());
        assert!(matches!(
            a.dist_nearest_int(&BigInt::one(), 40),
            Err(Error::PrecisionExhausted(_))
        ));
    }
}
