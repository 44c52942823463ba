//! Small numerical building blocks shared across modules: torus arithmetic in
//! 128-bit fixed point, compensated summation, and conversions between big
//! rationals and binary fixed point.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// 2^-64 as an f64.
pub const TWO_POW_M64: f64 = 1.0 / 18_446_744_073_709_551_616.0;
/// 2^-128 as an f64.
pub const TWO_POW_M128: f64 = TWO_POW_M64 * TWO_POW_M64;

/// Unit roundoff for binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Distance from `x` to the nearest integer.
#[inline]
pub fn torus_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Reduce `x` to `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of the circle `R/Z` stored as a 128-bit binary fraction.
#[inline]
pub fn fixed_to_unit(pos: u128) -> f64 {
    ((pos >> 64) as u64) as f64 * TWO_POW_M64
}

/// Signed representative in `[-1/2, 1/2)` of a fixed-point circle point.
#[inline]
pub fn fixed_to_signed(pos: u128) -> f64 {
    (((pos >> 64) as u64) as i64) as f64 * TWO_POW_M64
}

/// `‖pos‖` for a fixed-point circle point.
#[inline]
pub fn fixed_norm(pos: u128) -> f64 {
    (((pos >> 64) as u64) as i64).unsigned_abs() as f64 * TWO_POW_M64
}

/// Fixed-point image of a real number reduced mod 1 (truncated toward -inf).
pub fn fixed_from_f64(x: f64) -> u128 {
    let r = wrap_unit(x);
    // r has at most 53 significant bits, so r * 2^64 is exact.
    let hi = (r * 18_446_744_073_709_551_616.0) as u128;
    hi << 64
}

/// `floor(frac(r) * 2^128)` for a rational `r`.
pub fn fixed_from_rational(r: &BigRational) -> u128 {
    let num = r.numer();
    let den = r.denom();
    let frac_num = num.mod_floor(den);
    let scaled: BigInt = (frac_num << 128usize).div_floor(den);
    scaled.to_u128().unwrap_or(u128::MAX)
}

/// Exact rational value of a finite f64.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// `floor(r * 2^bits)`.
pub fn floor_scaled(r: &BigRational, bits: usize) -> BigInt {
    (r.numer() << bits).div_floor(r.denom())
}

/// `ceil(r * 2^bits)`.
pub fn ceil_scaled(r: &BigRational, bits: usize) -> BigInt {
    let n: BigInt = r.numer() << bits;
    -((-n).div_floor(r.denom()))
}

/// Convert a binary fixed-point integer `v / 2^bits` to f64 (round to nearest).
pub fn scaled_to_f64(v: &BigInt, bits: usize) -> f64 {
    let sign = v.sign();
    let mag = v.abs();
    let len = mag.bits() as i64;
    if len == 0 {
        return 0.0;
    }
    let shift = len - 60;
    let (m, e) = if shift > 0 {
        ((&mag >> shift as usize).to_u64().unwrap_or(0), shift - bits as i64)
    } else {
        (mag.to_u64().unwrap_or(0), -(bits as i64))
    };
    let out = m as f64 * 2f64.powi(e as i32);
    if sign == Sign::Minus {
        -out
    } else {
        out
    }
}

/// Round-to-nearest f64 of a big rational.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let nb = r.numer().abs().bits() as i64;
    let db = r.denom().bits() as i64;
    // Scale so the quotient carries ~64 significant bits.
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (r.numer() << shift as usize).div_floor(r.denom())
    } else {
        (r.numer() >> (-shift) as usize).div_floor(r.denom())
    };
    let mut v = scaled_to_f64(&q, 0);
    v *= 2f64.powi(-(shift as i32));
    v
}

/// Natural logarithm of a positive big integer.
pub fn ln_big(q: &BigInt) -> f64 {
    let bits = q.bits();
    if bits <= 60 {
        return q.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 60;
    let top = (q >> shift as usize).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `q^p` for a positive big integer via logarithms.
pub fn pow_big(q: &BigInt, p: f64) -> f64 {
    (p * ln_big(q)).exp()
}

/// Exact `frac(m * x)` for a dyadic `x` (any finite f64) and big integer `m`,
/// returned as an f64 in `[0, 1)`.
pub fn frac_of_product(m: &BigInt, x: f64) -> f64 {
    let xr = rational_from_f64(x);
    let prod = BigRational::from_integer(m.clone()) * xr;
    let fl = prod.floor();
    rational_to_f64(&(prod - fl))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Push `x` down by a relative `rel` plus an absolute `abs` margin.
#[inline]
pub fn pad_down(x: f64, rel: f64, abs: f64) -> f64 {
    x - x.abs() * rel - abs
}

/// Push `x` up by a relative `rel` plus an absolute `abs` margin.
#[inline]
pub fn pad_up(x: f64, rel: f64, abs: f64) -> f64 {
    x + x.abs() * rel + abs
}

/// Integer square root (floor) of a non-negative big integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative(), "isqrt of negative number");
    n.sqrt()
}

/// `floor((x + y*sqrt(d)) / z)` computed exactly; `d` must not be a perfect
/// square and `z` must be nonzero.
pub fn floor_surd(x: &BigInt, y: &BigInt, d: &BigInt, z: &BigInt) -> BigInt {
    // y*sqrt(d) lies strictly between s and s+1 (as signed integers) where
    // s = floor(y*sqrt(d)).
    let y2d = y * y * d;
    let r = isqrt(&y2d);
    let s = if y.is_negative() {
        -(&r) - BigInt::one()
    } else {
        r
    };
    // numerator lies strictly inside (x+s, x+s+1)
    let lo = x + &s;
    if y.is_zero() {
        return x.div_floor(z);
    }
    if z.is_positive() {
        lo.div_floor(z)
    } else {
        // (x + y√d)/z = -(x + y√d)/|z|, numerator' in (-(lo+1), -lo)
        let nz = -z;
        (-(&lo) - BigInt::one()).div_floor(&nz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_norm_basics() {
        assert_eq!(torus_norm(0.25), 0.25);
        assert_eq!(torus_norm(0.75), 0.25);
        assert!((torus_norm(-1.1) - 0.1).abs() < 1e-15);
        assert!(torus_norm(3.5) <= 0.5);
    }

    #[test]
    fn fixed_point_views() {
        let half = 1u128 << 127;
        assert_eq!(fixed_to_unit(half), 0.5);
        assert_eq!(fixed_to_signed(half), -0.5);
        assert_eq!(fixed_norm(half), 0.5);
        let q = fixed_from_f64(0.75);
        assert_eq!(fixed_to_unit(q), 0.75);
        assert_eq!(fixed_norm(q), 0.25);
    }

    #[test]
    fn floor_surd_matches_float() {
        let d = BigInt::from(5);
        for (x, y, z) in [(1, 1, 2), (-3, 1, 2), (1, -1, 2), (7, -3, -4), (0, 5, 3), (-11, -2, 5)] {
            let exact = floor_surd(&BigInt::from(x), &BigInt::from(y), &d, &BigInt::from(z));
            let approx = ((x as f64 + y as f64 * 5f64.sqrt()) / z as f64).floor();
            assert_eq!(exact, BigInt::from(approx as i64), "({x}+{y}√5)/{z}");
        }
    }

    #[test]
    fn rational_round_trip() {
        for x in [0.1, -2.5, 1e-30, 12345.678] {
            assert_eq!(rational_to_f64(&rational_from_f64(x)), x);
        }
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((rational_to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn frac_of_product_exact() {
        let m = BigInt::from(10u64.pow(15)) * BigInt::from(1000);
        // 0.5 is dyadic so the product is an integer.
        assert_eq!(frac_of_product(&m, 0.5), 0.0);
        assert!((frac_of_product(&BigInt::from(3), 0.25) - 0.75).abs() < 1e-18);
    }
}
