//! Continued fractions of irrationals: certified expansion, convergents,
//! growth classification and rigorous evaluation of `‖qα‖`.

mod alpha;
mod spec;
pub mod surd;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

pub use alpha::{Alpha, FixedRotation, NormValue, DEFAULT_PRECISION_BITS};
pub use spec::{parse_decimal, parse_scientific, CfSource, DecimalApprox, IrrationalSpec, QuadraticSurd};

use crate::error::{Error, Result};
use surd::SurdCf;

/// The `n`-th convergent `p/q` of α.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigInt,
    pub q: BigInt,
}

/// Outcome of [`classify_growth`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GrowthClass {
    /// Indices `k` with `q_{k+1} >= q_k^2`.
    Case1 { indices: Vec<usize> },
    Case2,
}

/// Minimum number of qualifying indices for [`GrowthClass::Case1`].
pub const CASE1_MIN_INDICES: usize = 3;

#[derive(Debug, Clone)]
enum StreamState {
    Surd(SurdCf),
    Finite(Vec<BigInt>),
    Euler,
    Square { q_prev: BigInt, q_cur: BigInt },
    Decimal { lo: BigRational, hi: BigRational, live: bool },
}

/// Incremental producer of partial quotients.
#[derive(Debug, Clone)]
pub struct QuotientStream {
    state: StreamState,
    index: usize,
}

impl QuotientStream {
    pub fn new(spec: &IrrationalSpec) -> Result<Self> {
        spec.validate()?;
        let state = match spec {
            IrrationalSpec::QuadraticSurd(s) => StreamState::Surd(SurdCf::new(&s.a, &s.b, &s.d, &s.c)),
            IrrationalSpec::ExplicitCf(CfSource::Finite(list)) => StreamState::Finite(list.clone()),
            IrrationalSpec::ExplicitCf(CfSource::Euler) => StreamState::Euler,
            IrrationalSpec::ExplicitCf(CfSource::SquareGrowth) => StreamState::Square {
                q_prev: BigInt::zero(),
                q_cur: BigInt::one(),
            },
            IrrationalSpec::DecimalApprox(d) => StreamState::Decimal {
                lo: &d.value - &d.error,
                hi: &d.value + &d.error,
                live: true,
            },
        };
        Ok(QuotientStream { state, index: 0 })
    }

    /// Index of the next quotient to be produced.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn next_quotient(&mut self) -> Result<BigInt> {
        let i = self.index;
        let a = match &mut self.state {
            StreamState::Surd(cf) => cf.next_quotient(),
            StreamState::Finite(list) => list.get(i).cloned().ok_or_else(|| {
                Error::PrecisionExhausted(format!(
                    "explicit expansion has only {} partial quotients",
                    list.len()
                ))
            })?,
            StreamState::Euler => BigInt::from(euler_quotient(i)),
            StreamState::Square { q_prev, q_cur } => {
                // a_0 = 0, a_1 = 2, a_{n+1} = q_n
                let a = match i {
                    0 => BigInt::zero(),
                    1 => BigInt::from(2),
                    _ => q_cur.clone(),
                };
                if i > 0 {
                    let next = &a * &*q_cur + &*q_prev;
                    *q_prev = std::mem::replace(q_cur, next);
                }
                a
            }
            StreamState::Decimal { lo, hi, live } => {
                if !*live {
                    return Err(Error::PrecisionExhausted(format!(
                        "decimal approximation cannot certify a_{i}"
                    )));
                }
                let a = lo.floor().to_integer();
                let b = hi.floor().to_integer();
                if a != b {
                    *live = false;
                    return Err(Error::PrecisionExhausted(format!(
                        "decimal approximation cannot certify a_{i}"
                    )));
                }
                let fa = BigRational::from_integer(a.clone());
                let lo_rem = &*lo - &fa;
                let hi_rem = &*hi - &fa;
                if lo_rem.is_zero() {
                    *live = false;
                } else {
                    *lo = hi_rem.recip();
                    *hi = lo_rem.recip();
                }
                a
            }
        };
        self.index += 1;
        Ok(a)
    }
}

fn euler_quotient(i: usize) -> u64 {
    match i {
        0 => 2,
        _ if i % 3 == 2 => 2 * (i as u64 + 1) / 3,
        _ => 1,
    }
}

/// Partial quotients `a_0, ..., a_{n_terms}` of α.
pub fn expand(spec: &IrrationalSpec, n_terms: usize) -> Result<Vec<BigInt>> {
    if n_terms == 0 {
        return Err(Error::arg("n_terms", "must be at least 1"));
    }
    let mut stream = QuotientStream::new(spec)?;
    (0..=n_terms).map(|_| stream.next_quotient()).collect()
}

/// Convergents `p_n/q_n` for every prefix of `quotients`.
pub fn convergents_of(quotients: &[BigInt]) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    for (n, a) in quotients.iter().enumerate() {
        if n == 0 {
            p_prev = BigInt::one();
            q_prev = BigInt::zero();
            p = a.clone();
            q = BigInt::one();
        } else {
            let p_next = a * &p + &p_prev;
            let q_next = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
        }
        out.push(Convergent {
            n,
            p: p.clone(),
            q: q.clone(),
        });
    }
    out
}

/// Convergents `0..=n_max` of the expansion `quotients`.
pub fn convergents(quotients: &[BigInt], n_max: usize) -> Result<Vec<Convergent>> {
    if quotients.len() < n_max + 1 {
        return Err(Error::arg(
            "quotients",
            format!("need {} partial quotients, got {}", n_max + 1, quotients.len()),
        ));
    }
    Ok(convergents_of(&quotients[..=n_max]))
}

/// Indices `1 <= k <= horizon` with `q_k >= 2` and `q_{k+1} >= q_k^2`; Case 1
/// when there are at least [`CASE1_MIN_INDICES`] of them.
pub fn classify_growth(quotients: &[BigInt], horizon: usize) -> Result<GrowthClass> {
    if quotients.len() < horizon + 2 {
        return Err(Error::arg(
            "horizon",
            format!(
                "horizon {horizon} needs {} partial quotients, got {}",
                horizon + 2,
                quotients.len()
            ),
        ));
    }
    let conv = convergents_of(&quotients[..horizon + 2]);
    let two = BigInt::from(2);
    let indices: Vec<usize> = (1..=horizon)
        .filter(|&k| conv[k].q >= two && conv[k + 1].q >= &conv[k].q * &conv[k].q)
        .collect();
    if indices.len() >= CASE1_MIN_INDICES {
        Ok(GrowthClass::Case1 { indices })
    } else {
        Ok(GrowthClass::Case2)
    }
}

/// `‖qα‖` bracketed to width `2^-precision`.
pub fn dist_nearest_int(q: &BigInt, spec: &IrrationalSpec, precision: u32) -> Result<NormValue> {
    if !q.is_positive() {
        return Err(Error::arg("q", "must be >= 1"));
    }
    let alpha = Alpha::with_precision(spec.clone(), (precision + q.bits() as u32 + 16).max(DEFAULT_PRECISION_BITS))?;
    alpha.dist_nearest_int(q, precision)
}

/// `gcd(p, q) == 1` check used by invariant tests.
pub fn is_reduced(c: &Convergent) -> bool {
    c.p.gcd(&c.q).is_one()
}
