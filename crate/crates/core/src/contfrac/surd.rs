//! Exact arithmetic in `Q(√d)`: elements `(x + y√d)/z` with integer
//! coordinates, used to evaluate `‖qα‖` without rounding for quadratic
//! irrationals.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::numeric::{floor_surd, isqrt};

/// `(x + y√d) / z` with `z > 0` and `d` a positive non-square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadElement {
    pub x: BigInt,
    pub y: BigInt,
    pub d: BigInt,
    pub z: BigInt,
}

/// Exact sign of `x + y√d`.
pub fn sign_of(x: &BigInt, y: &BigInt, d: &BigInt) -> Ordering {
    let sx = x.sign_cmp();
    let sy = y.sign_cmp();
    match (sx, sy) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (a, b) if a == b => a,
        (a, _) => {
            // Opposite signs: compare x^2 against y^2 d.
            let lhs = x * x;
            let rhs = y * y * d;
            match lhs.cmp(&rhs) {
                Ordering::Greater => a,
                Ordering::Less => a.reverse(),
                Ordering::Equal => Ordering::Equal,
            }
        }
    }
}

trait SignCmp {
    fn sign_cmp(&self) -> Ordering;
}

impl SignCmp for BigInt {
    fn sign_cmp(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl QuadElement {
    pub fn new(x: BigInt, y: BigInt, d: BigInt, z: BigInt) -> Self {
        assert!(!z.is_zero(), "zero denominator");
        if z.is_negative() {
            QuadElement { x: -x, y: -y, d, z: -z }
        } else {
            QuadElement { x, y, d, z }
        }
    }

    pub fn signum(&self) -> Ordering {
        sign_of(&self.x, &self.y, &self.d)
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            QuadElement {
                x: -&self.x,
                y: -&self.y,
                d: self.d.clone(),
                z: self.z.clone(),
            }
        } else {
            self.clone()
        }
    }

    /// `floor(self * 2^bits)`.
    pub fn floor_scaled(&self, bits: usize) -> BigInt {
        floor_surd(&(&self.x << bits), &(&self.y << bits), &self.d, &self.z)
    }

    /// `floor(self)`.
    pub fn floor(&self) -> BigInt {
        floor_surd(&self.x, &self.y, &self.d, &self.z)
    }

    /// Rational bracket `[lo, hi]` of width `2^-bits` around the value.
    pub fn bracket(&self, bits: usize) -> (BigRational, BigRational) {
        let f = self.floor_scaled(bits);
        let den = BigInt::one() << bits;
        (
            BigRational::new(f.clone(), den.clone()),
            BigRational::new(f + 1, den),
        )
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, _) = self.bracket(80);
        crate::numeric::rational_to_f64(&lo)
    }

    /// Exact comparison with a rational number.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        // (x + y√d)/z - n/m  has the sign of  (x m - n z) + y m √d
        let m = r.denom();
        let n = r.numer();
        let x = &self.x * m - n * &self.z;
        let y = &self.y * m;
        sign_of(&x, &y, &self.d)
    }

    /// Exact comparison with another element over the same `d`.
    pub fn cmp_elem(&self, other: &QuadElement) -> Ordering {
        assert_eq!(self.d, other.d, "elements of different quadratic fields");
        // x1/z1 - x2/z2 + (y1/z1 - y2/z2)√d
        let x = &self.x * &other.z - &other.x * &self.z;
        let y = &self.y * &other.z - &other.y * &self.z;
        sign_of(&x, &y, &self.d)
    }
}

/// State of the periodic continued-fraction algorithm for `(P + √D)/Q`.
#[derive(Debug, Clone)]
pub(crate) struct SurdCf {
    p: BigInt,
    q: BigInt,
    big_d: BigInt,
    root: BigInt,
}

impl SurdCf {
    /// Start the expansion of `(a + b√d)/c`; `b != 0`, `d` non-square.
    pub(crate) fn new(a: &BigInt, b: &BigInt, d: &BigInt, c: &BigInt) -> Self {
        // Bring to (P + √D)/Q with positive radical coefficient.
        let (a, b, c) = if b.is_negative() {
            (-a, -b, -c)
        } else {
            (a.clone(), b.clone(), c.clone())
        };
        let mut p = a;
        let mut big_d = &b * &b * d;
        let mut q = c;
        if !(&big_d - &p * &p).is_multiple_of(&q) {
            let aq = q.abs();
            p *= &aq;
            big_d *= &aq * &aq;
            q *= aq;
        }
        let root = isqrt(&big_d);
        SurdCf { p, q, big_d, root }
    }

    pub(crate) fn next_quotient(&mut self) -> BigInt {
        let a = if self.q.is_positive() {
            (&self.p + &self.root).div_floor(&self.q)
        } else {
            (-&self.p - &self.root - BigInt::one()).div_floor(&(-&self.q))
        };
        let p_next = &a * &self.q - &self.p;
        let q_next = (&self.big_d - &p_next * &p_next) / &self.q;
        self.p = p_next;
        self.q = q_next;
        a
    }
}
