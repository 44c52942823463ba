//! Summation kernels over orbit segments `{qα : start <= q < end}`.
//!
//! The float path walks `frac(qα)` in 128-bit fixed point, converts norms to
//! binary64 chunk by chunk and sums with per-chunk accumulators followed by a
//! compensated reduction in a fixed order. The exact path works with integer
//! brackets of `frac(qα)` at `2^-bits` resolution.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::contfrac::{Alpha, FixedRotation};
use crate::error::{Error, Result};
use crate::numeric::{rational_from_f64, CompensatedSum, TWO_POW_M64, UNIT_ROUNDOFF};

pub(crate) const CHUNK: usize = 1024;
const SUPER_BLOCK: u64 = 1 << 20;
/// Relative summation error allowance: 8 lanes of `CHUNK / 8` terms plus the
/// compensated reductions.
pub(crate) const SUM_REL_ERR: f64 = 150.0 * UNIT_ROUNDOFF;

/// Result of a float scan: `M` sums plus the smallest computed norm.
#[derive(Debug, Clone)]
pub(crate) struct FloatScan {
    pub sums: Vec<f64>,
    pub min_norm: f64,
    /// Bound on the absolute error of every computed norm.
    pub norm_err: f64,
}

impl FloatScan {
    /// Relative perturbation of each norm, `|ã - a| / a`.
    pub fn rho(&self) -> Result<f64> {
        let floor = self.min_norm - self.norm_err;
        if floor <= 0.0 {
            return Err(Error::PrecisionExhausted(
                "orbit error is comparable to the smallest norm".into(),
            ));
        }
        Ok(UNIT_ROUNDOFF + self.norm_err / floor)
    }
}

/// Sum `kernel` over chunks of norms `‖qα‖` for `start <= q < end`.
///
/// The kernel receives the norms of a chunk, the `q` of its first entry and an
/// output slice of length `m` that it must overwrite with its chunk sums.
pub(crate) fn float_scan<K>(rot: FixedRotation, start: u64, end: u64, m: usize, kernel: &K) -> FloatScan
where
    K: Fn(&[f64], u64, &mut [f64]) + Sync + ?Sized,
{
    let blocks: Vec<(u64, u64)> = (start..end)
        .step_by(SUPER_BLOCK as usize)
        .map(|s| (s, (s + SUPER_BLOCK).min(end)))
        .collect();
    let parts: Vec<(Vec<CompensatedSum>, f64)> = blocks
        .par_iter()
        .map(|&(s, e)| scan_block(rot, s, e, m, kernel))
        .collect();
    let mut sums = vec![CompensatedSum::new(); m];
    let mut min_norm = f64::INFINITY;
    for (acc, mn) in &parts {
        for (s, a) in sums.iter_mut().zip(acc) {
            s.add(a.value());
        }
        min_norm = min_norm.min(*mn);
    }
    FloatScan {
        sums: sums.iter().map(|s| s.value()).collect(),
        min_norm,
        norm_err: TWO_POW_M64 + end as f64 * rot.err * 1.01 + (CHUNK as f64 / 2.0 + 2.0) * TWO_POW_M64,
    }
}

#[inline(always)]
fn scan_block_body<K>(rot: FixedRotation, s: u64, e: u64, m: usize, kernel: &K) -> (Vec<CompensatedSum>, f64)
where
    K: Fn(&[f64], u64, &mut [f64]) + ?Sized,
{
    let (mut pos, _) = rot.multiple(s as i128);
    let step = rot.step;
    let step64 = (step.wrapping_add(1 << 63) >> 64) as u64;
    let mut buf = [0.0f64; CHUNK];
    let mut out = vec![0.0f64; m];
    let mut acc = vec![CompensatedSum::new(); m];
    let mut mn = f64::INFINITY;
    let mut q = s;
    while q < e {
        let n = ((e - q) as usize).min(CHUNK);
        fill_norms(&mut buf[..n], (pos >> 64) as u64, step64);
        pos = pos.wrapping_add(step.wrapping_mul(n as u128));
        mn = buf[..n].iter().fold(mn, |a, &b| a.min(b));
        kernel(&buf[..n], q, &mut out);
        for (a, &v) in acc.iter_mut().zip(&out) {
            a.add(v);
        }
        q += n as u64;
    }
    (acc, mn)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512dq")]
unsafe fn scan_block_wide<K>(rot: FixedRotation, s: u64, e: u64, m: usize, kernel: &K) -> (Vec<CompensatedSum>, f64)
where
    K: Fn(&[f64], u64, &mut [f64]) + ?Sized,
{
    scan_block_body(rot, s, e, m, kernel)
}

fn scan_block<K>(rot: FixedRotation, s: u64, e: u64, m: usize, kernel: &K) -> (Vec<CompensatedSum>, f64)
where
    K: Fn(&[f64], u64, &mut [f64]) + ?Sized,
{
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512dq") {
        // SAFETY: the required features were detected at runtime.
        return unsafe { scan_block_wide(rot, s, e, m, kernel) };
    }
    scan_block_body(rot, s, e, m, kernel)
}

/// Norms of `hi + j·step` read as signed 64-bit fractions. Truncating the
/// anchor and rounding the step cost at most `(j/2 + 1)·2^-64` per entry.
#[inline(always)]
fn fill_norms(buf: &mut [f64], hi: u64, step: u64) {
    let norm = |p: u64| ((p as i64) as f64 * TWO_POW_M64).abs();
    let mut p: [u64; 8] = std::array::from_fn(|l| hi.wrapping_add((l as u64).wrapping_mul(step)));
    let stride = step.wrapping_mul(8);
    let mut it = buf.chunks_exact_mut(8);
    for ch in &mut it {
        for l in 0..8 {
            ch[l] = norm(p[l]);
            p[l] = p[l].wrapping_add(stride);
        }
    }
    for (b, &p) in it.into_remainder().iter_mut().zip(&p) {
        *b = norm(p);
    }
}

/// Eight-lane sum of `term(i)` for `i < n`.
#[inline]
pub(crate) fn lane_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    let mut acc = [0.0f64; 8];
    let full = n / 8 * 8;
    let mut i = 0;
    while i < full {
        for (l, a) in acc.iter_mut().enumerate() {
            *a += term(i + l);
        }
        i += 8;
    }
    for (l, idx) in (full..n).enumerate() {
        acc[l] += term(idx);
    }
    fold_lanes(acc)
}

/// Pairwise fold of eight lane accumulators.
#[inline(always)]
pub(crate) fn fold_lanes(a: [f64; 8]) -> f64 {
    ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]))
}

/// `frac(α)` as an integer `A` with `frac(α) ∈ [A, A + err) · 2^-bits`.
#[derive(Debug, Clone)]
pub(crate) struct ExactFrac {
    a: BigInt,
    err: BigInt,
    bits: usize,
    modulus: BigInt,
}

impl ExactFrac {
    pub fn new(alpha: &Alpha) -> Result<Self> {
        let bits = alpha.precision() as usize;
        let (a, err) = match alpha.frac_surd() {
            Some(g) => (g.floor_scaled(bits), BigInt::one()),
            None => {
                let (lo, _) = alpha.frac_bracket(bits as u32 + 2)?;
                (crate::numeric::floor_scaled(&lo, bits), BigInt::from(2))
            }
        };
        Ok(ExactFrac {
            a,
            err,
            bits,
            modulus: BigInt::one() << bits,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Integer bracket `[lo, hi]` of `‖qα‖ · 2^bits`.
    pub fn norm(&self, q: u64) -> Result<(BigInt, BigInt)> {
        let qb = BigInt::from(q);
        let p = (&qb * &self.a).mod_floor(&self.modulus);
        let w = &qb * &self.err;
        let end = &p + &w;
        if end >= self.modulus {
            return Err(Error::PrecisionExhausted(format!(
                "cannot separate {q}α from an integer at 2^-{} resolution",
                self.bits
            )));
        }
        let half = &self.modulus >> 1;
        let nrm = |v: &BigInt| {
            if v > &half {
                &self.modulus - v
            } else {
                v.clone()
            }
        };
        let (na, nb) = (nrm(&p), nrm(&end));
        let hi = if p <= half && half <= end {
            half.clone()
        } else {
            na.clone().max(nb.clone())
        };
        let lo = na.min(nb);
        if lo.is_zero() {
            return Err(Error::PrecisionExhausted("norm bracket touches zero".into()));
        }
        Ok((lo, hi))
    }
}

/// Integer brackets summed at scale `2^-OUT_BITS`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledInterval {
    pub lo: BigInt,
    pub hi: BigInt,
}

/// Fractional bits of exact-path sums.
pub const OUT_BITS: usize = 128;

impl ScaledInterval {
    pub fn zero() -> Self {
        ScaledInterval {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
        }
    }

    pub fn add(&mut self, other: &ScaledInterval) {
        self.lo += &other.lo;
        self.hi += &other.hi;
    }

    pub fn lo_f64(&self) -> f64 {
        crate::numeric::pad_down(crate::numeric::scaled_to_f64(&self.lo, OUT_BITS), 2.0 * UNIT_ROUNDOFF, 0.0)
    }

    pub fn hi_f64(&self) -> f64 {
        crate::numeric::pad_up(crate::numeric::scaled_to_f64(&self.hi, OUT_BITS), 2.0 * UNIT_ROUNDOFF, 0.0)
    }

    pub fn mid_f64(&self) -> f64 {
        crate::numeric::scaled_to_f64(&((&self.lo + &self.hi) >> 1), OUT_BITS)
    }
}

/// Exact-path terms for the supported sum kinds.
#[derive(Debug, Clone)]
pub(crate) enum ExactTerm {
    /// `1 / ‖qα‖²`.
    InverseSq,
    /// `1 / ‖qα‖`.
    InverseL1,
    /// `min(1/‖qα‖², c²) / q²` for each cap.
    SliceSq(Vec<f64>),
}

impl ExactTerm {
    pub fn outputs(&self) -> usize {
        match self {
            ExactTerm::SliceSq(c) => c.len(),
            _ => 1,
        }
    }
}

/// Exact bracketed sums over `start <= q < end`.
pub(crate) fn exact_scan(frac: &ExactFrac, start: u64, end: u64, term: &ExactTerm) -> Result<Vec<ScaledInterval>> {
    let b = frac.bits();
    let mut out = vec![ScaledInterval::zero(); term.outputs()];
    // c² at scale 2^-OUT_BITS, rounded outward
    let caps: Vec<(BigInt, BigInt)> = match term {
        ExactTerm::SliceSq(cs) => cs
            .iter()
            .map(|&c| {
                let r = rational_from_f64(c);
                let sq = &r * &r;
                let n: BigInt = sq.numer() << OUT_BITS;
                (n.div_floor(sq.denom()), n.div_ceil(sq.denom()))
            })
            .collect(),
        _ => Vec::new(),
    };
    let num_sq = BigInt::one() << (2 * b + OUT_BITS);
    let num_l1 = BigInt::one() << (b + OUT_BITS);
    for q in start..end {
        let (nlo, nhi) = frac.norm(q)?;
        match term {
            ExactTerm::InverseSq => {
                out[0].lo += num_sq.div_floor(&(&nhi * &nhi));
                out[0].hi += num_sq.div_ceil(&(&nlo * &nlo));
            }
            ExactTerm::InverseL1 => {
                out[0].lo += num_l1.div_floor(&nhi);
                out[0].hi += num_l1.div_ceil(&nlo);
            }
            ExactTerm::SliceSq(_) => {
                let t_lo = num_sq.div_floor(&(&nhi * &nhi));
                let t_hi = num_sq.div_ceil(&(&nlo * &nlo));
                let q2 = BigInt::from(q) * BigInt::from(q);
                for (o, (c_lo, c_hi)) in out.iter_mut().zip(&caps) {
                    let lo = t_lo.clone().min(c_lo.clone());
                    let hi = t_hi.clone().min(c_hi.clone());
                    o.lo += lo.div_floor(&q2);
                    o.hi += hi.div_ceil(&q2);
                }
            }
        }
    }
    debug_assert!(out.iter().all(|o| !o.lo.is_negative() && o.lo <= o.hi));
    Ok(out)
}

/// `q` as f64, exactly.
pub(crate) fn q_f64(q: u64) -> Result<f64> {
    if q >= 1 << 53 {
        return Err(Error::RangeTooLarge(format!("q = {q} exceeds 2^53")));
    }
    Ok(q.to_f64().unwrap_or(f64::NAN))
}
