//! Diophantine sums over `‖qα‖` and the Denjoy–Koksma inequality.
//!
//! Sums run over `q > 0` and are doubled; the integrands are even in `q`.
//! Segments with `q < EXACT_LIMIT` are summed on the exact path (integer
//! brackets at the working precision), longer ones on the float path with a
//! certified error bound.

mod dk;
pub(crate) mod kernel;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::contfrac::Alpha;
use crate::error::{Error, Result};
use crate::numeric::UNIT_ROUNDOFF;
use kernel::{exact_scan, float_scan, fold_lanes, lane_sum, q_f64, ExactFrac, ExactTerm, CHUNK, SUM_REL_ERR};

pub use dk::{denjoy_koksma_check, denjoy_koksma_scan, DkReport};
pub use kernel::{ScaledInterval, OUT_BITS};

/// Segments ending at or below this `q` use the exact path.
pub const EXACT_LIMIT: u64 = 10_000;

/// Largest number of orbit points a single request may scan.
pub const MAX_TERMS: u64 = 1 << 36;

/// Even, 1-periodic test functions of bounded variation with closed-form
/// integral and variation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BVFunction {
    /// `T²` on `‖z‖ <= 1/T`, `1/‖z‖²` elsewhere.
    CappedInverseSquare { threshold: f64 },
    /// `T` on `‖z‖ <= 1/T`, `1/‖z‖` elsewhere.
    CappedInverse { threshold: f64 },
    /// `mean + Σ a_m cos(2π m z)`, `cos_coeffs[m-1] = a_m`.
    TrigPoly { mean: f64, cos_coeffs: Vec<f64> },
    /// Linear interpolation in `‖z‖` through `(b_i, v_i)`, `0 = b_0 < ... < b_k = 1/2`.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl BVFunction {
    pub fn cos() -> Self {
        BVFunction::TrigPoly {
            mean: 0.0,
            cos_coeffs: vec![1.0],
        }
    }

    pub fn constant(k: f64) -> Self {
        BVFunction::TrigPoly {
            mean: k,
            cos_coeffs: Vec::new(),
        }
    }

    /// `z ↦ ‖z‖`.
    pub fn tent() -> Self {
        BVFunction::PiecewiseLinear {
            knots: vec![(0.0, 0.0), (0.5, 0.5)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BVFunction::CappedInverseSquare { threshold } | BVFunction::CappedInverse { threshold } => {
                if !(threshold.is_finite() && *threshold >= 2.0) {
                    return Err(Error::arg("threshold", "must be finite and >= 2"));
                }
            }
            BVFunction::TrigPoly { mean, cos_coeffs } => {
                if !mean.is_finite() || cos_coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::arg("cos_coeffs", "must be finite"));
                }
            }
            BVFunction::PiecewiseLinear { knots } => {
                if knots.len() < 2 || knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 0.5 {
                    return Err(Error::arg("knots", "must run from 0 to 1/2"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) || knots.iter().any(|k| !k.1.is_finite()) {
                    return Err(Error::arg("knots", "breakpoints must increase and values be finite"));
                }
            }
        }
        Ok(())
    }

    /// Value at a point of the circle.
    pub fn eval(&self, z: f64) -> f64 {
        let s = z - z.round();
        match self {
            BVFunction::TrigPoly { mean, cos_coeffs } => {
                mean + cos_coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * (2.0 * std::f64::consts::PI * (m + 1) as f64 * s).cos())
                    .sum::<f64>()
            }
            _ => self.eval_even(s.abs()),
        }
    }

    /// Value as a function of `a = ‖z‖` (all variants are even).
    #[inline]
    pub(crate) fn eval_even(&self, a: f64) -> f64 {
        match self {
            BVFunction::CappedInverseSquare { threshold } => {
                let t = threshold * threshold;
                (1.0 / (a * a)).min(t)
            }
            BVFunction::CappedInverse { threshold } => (1.0 / a).min(*threshold),
            BVFunction::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|k| k.0 <= a).clamp(1, knots.len() - 1);
                let (b0, v0) = knots[i - 1];
                let (b1, v1) = knots[i];
                v0 + (a - b0) * ((v1 - v0) / (b1 - b0))
            }
            BVFunction::TrigPoly { .. } => self.eval(a),
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            BVFunction::CappedInverseSquare { threshold } => 4.0 * threshold - 4.0,
            BVFunction::CappedInverse { threshold } => 2.0 + 2.0 * (threshold / 2.0).ln(),
            BVFunction::TrigPoly { mean, .. } => *mean,
            BVFunction::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
                .sum(),
        }
    }

    /// Total variation over the circle; for trigonometric polynomials with
    /// several modes this is the upper bound `Σ 4m|a_m|`.
    pub fn variation(&self) -> f64 {
        match self {
            BVFunction::CappedInverseSquare { threshold } => 2.0 * threshold * threshold - 8.0,
            BVFunction::CappedInverse { threshold } => 2.0 * threshold - 4.0,
            BVFunction::TrigPoly { cos_coeffs, .. } => cos_coeffs
                .iter()
                .enumerate()
                .map(|(m, a)| 4.0 * (m + 1) as f64 * a.abs())
                .sum(),
            BVFunction::PiecewiseLinear { knots } => 2.0 * knots.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum::<f64>(),
        }
    }

    /// Lipschitz constant in `‖z‖` (used for error propagation).
    pub(crate) fn lipschitz(&self) -> f64 {
        match self {
            BVFunction::CappedInverseSquare { threshold } => 2.0 * threshold.powi(3),
            BVFunction::CappedInverse { threshold } => threshold * threshold,
            BVFunction::TrigPoly { cos_coeffs, .. } => cos_coeffs
                .iter()
                .enumerate()
                .map(|(m, a)| 2.0 * std::f64::consts::PI * (m + 1) as f64 * a.abs())
                .sum(),
            BVFunction::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Which of the four sums a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SumKind {
    /// `Σ_{0<|q|<q_k} 1/‖qα‖²`.
    InverseSq,
    /// `Σ_{q_k<=|q|<q_{k+1}} min(1/‖qα‖², c²)/q²`.
    SliceMin,
    /// `Σ_{0<|q|<q_k} 1/‖qα‖`.
    InverseL1,
    /// `Σ_{q_k<=|q|<q_{k+1}} min(1/‖qα‖, c)/|q|^{1+ε}`.
    SliceMinL1,
}

/// One evaluated sum with a certified enclosure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumReport {
    pub kind: SumKind,
    pub k: usize,
    pub q_k: u64,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub value: f64,
    pub value_lo: f64,
    pub value_hi: f64,
    pub normalized_ratio: f64,
    pub term_count: u64,
    /// Whether every term came from the exact path.
    pub exact: bool,
}

/// A certified sum over one side (`q > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Enclosure {
    value: f64,
    err: f64,
    exact: bool,
}

impl Enclosure {
    const ZERO: Enclosure = Enclosure {
        value: 0.0,
        err: 0.0,
        exact: true,
    };

    fn from_scaled(s: &ScaledInterval) -> Self {
        let lo = s.lo_f64();
        let hi = s.hi_f64();
        let value = s.mid_f64();
        Enclosure {
            value,
            err: (hi - value).max(value - lo),
            exact: true,
        }
    }

    fn plus(self, o: Enclosure) -> Self {
        let value = self.value + o.value;
        Enclosure {
            value,
            err: (self.err + o.err + value.abs() * UNIT_ROUNDOFF) * (1.0 + 2.0 * UNIT_ROUNDOFF),
            exact: self.exact && o.exact,
        }
    }

    fn doubled(self) -> Self {
        Enclosure {
            value: 2.0 * self.value,
            err: 2.0 * self.err,
            exact: self.exact,
        }
    }
}

/// Per-term relative error model of a float kernel: `rho_mult * ρ + u_mult * u`.
#[derive(Debug, Clone, Copy)]
struct TermError {
    rho_mult: f64,
    u_mult: f64,
}

fn float_enclosures<K>(
    alpha: &Alpha,
    start: u64,
    end: u64,
    outputs: usize,
    model: TermError,
    kernel: &K,
) -> Result<Vec<Enclosure>>
where
    K: Fn(&[f64], u64, &mut [f64]) + Sync,
{
    if end - start > MAX_TERMS {
        return Err(Error::RangeTooLarge(format!(
            "{} terms exceed the direct-summation limit {MAX_TERMS}",
            end - start
        )));
    }
    q_f64(end)?;
    let scan = float_scan(alpha.rotation(), start, end, outputs, kernel);
    let rho = scan.rho()?;
    let rel = (model.rho_mult * rho + model.u_mult * UNIT_ROUNDOFF) * 1.01 + SUM_REL_ERR;
    Ok(scan
        .sums
        .iter()
        .map(|&v| Enclosure {
            value: v,
            err: v.abs() * rel,
            exact: false,
        })
        .collect())
}

/// Chunk kernel of the squared slice sums, one output per cap.
#[inline(always)]
fn slice_sq_chunk(a: &[f64], q0: u64, out: &mut [f64], caps: &[f64]) {
    for (o, c) in out.chunks_mut(4).zip(caps.chunks(4)) {
        match c.len() {
            1 => slice_sq_pass::<1>(a, q0, o, c),
            2 => slice_sq_pass::<2>(a, q0, o, c),
            3 => slice_sq_pass::<3>(a, q0, o, c),
            _ => slice_sq_pass::<4>(a, q0, o, c),
        }
    }
}

/// Lane sums of `min(1/(q a), c/q)²` for `N` caps in one pass. The division
/// `1/(q·a)` costs 2u plus the norm error; `1/q = a/(q·a)` costs 3u with the
/// norm error cancelling.
#[inline(always)]
fn slice_sq_pass<const N: usize>(a: &[f64], q0: u64, out: &mut [f64], caps: &[f64]) {
    let caps: [f64; N] = std::array::from_fn(|j| caps[j]);
    let mut acc = [[0.0f64; 8]; N];
    // q < 2^53 so q0 + i is exact
    let base = q0 as f64;
    let term = |i: usize, x: f64, c: f64| {
        let inv = 1.0 / ((base + i as f64) * x);
        let y = c * (inv * x);
        let t = if y < inv { y } else { inv };
        t * t
    };
    let mut it = a.chunks_exact(8);
    let mut i0 = 0;
    for ch in &mut it {
        for l in 0..8 {
            for j in 0..N {
                acc[j][l] += term(i0 + l, ch[l], caps[j]);
            }
        }
        i0 += 8;
    }
    for (l, &x) in it.remainder().iter().enumerate() {
        for j in 0..N {
            acc[j][l] += term(i0 + l, x, caps[j]);
        }
    }
    for (o, acc) in out.iter_mut().zip(acc) {
        *o = fold_lanes(acc);
    }
}

/// Weighted sum kinds evaluated over arbitrary segments.
#[derive(Debug, Clone)]
enum Integrand {
    InverseSq,
    InverseL1,
    SliceSq(Vec<f64>),
    SliceL1 { caps: Vec<f64>, eps: f64 },
}

impl Integrand {
    fn outputs(&self) -> usize {
        match self {
            Integrand::SliceSq(c) | Integrand::SliceL1 { caps: c, .. } => c.len(),
            _ => 1,
        }
    }

    fn exact_term(&self) -> Option<ExactTerm> {
        match self {
            Integrand::InverseSq => Some(ExactTerm::InverseSq),
            Integrand::InverseL1 => Some(ExactTerm::InverseL1),
            Integrand::SliceSq(c) => Some(ExactTerm::SliceSq(c.clone())),
            Integrand::SliceL1 { .. } => None,
        }
    }
}

/// Sum `integrand` over `start <= q < end`, one enclosure per output.
fn segment(alpha: &Alpha, exact: Option<&ExactFrac>, start: u64, end: u64, integrand: &Integrand) -> Result<Vec<Enclosure>> {
    let m = integrand.outputs();
    if start >= end {
        return Ok(vec![Enclosure::ZERO; m]);
    }
    if let (Some(frac), Some(term)) = (exact, integrand.exact_term()) {
        if end <= EXACT_LIMIT {
            return Ok(exact_scan(frac, start, end, &term)?
                .iter()
                .map(Enclosure::from_scaled)
                .collect());
        }
    }
    match integrand {
        Integrand::InverseSq => float_enclosures(
            alpha,
            start,
            end,
            1,
            TermError { rho_mult: 2.0, u_mult: 3.0 },
            &|a: &[f64], _q0: u64, out: &mut [f64]| {
                out[0] = lane_sum(a.len(), |i| 1.0 / (a[i] * a[i]));
            },
        ),
        Integrand::InverseL1 => float_enclosures(
            alpha,
            start,
            end,
            1,
            TermError { rho_mult: 1.0, u_mult: 2.0 },
            &|a: &[f64], _q0: u64, out: &mut [f64]| {
                out[0] = lane_sum(a.len(), |i| 1.0 / a[i]);
            },
        ),
        Integrand::SliceSq(caps) => float_enclosures(
            alpha,
            start,
            end,
            caps.len(),
            TermError { rho_mult: 2.0, u_mult: 10.0 },
            &|a: &[f64], q0: u64, out: &mut [f64]| slice_sq_chunk(a, q0, out, caps),
        ),
        Integrand::SliceL1 { caps, eps } => {
            let p = -(1.0 + eps);
            float_enclosures(
                alpha,
                start,
                end,
                caps.len(),
                TermError { rho_mult: 1.0, u_mult: 8.0 },
                &|a: &[f64], q0: u64, out: &mut [f64]| {
                    let n = a.len();
                    let mut w = [0.0f64; CHUNK];
                    let mut r = [0.0f64; CHUNK];
                    let (w, r) = (&mut w[..n], &mut r[..n]);
                    for (i, ((w, r), &a)) in w.iter_mut().zip(r.iter_mut()).zip(a).enumerate() {
                        *w = ((q0 + i as u64) as f64).powf(p);
                        *r = 1.0 / a;
                    }
                    for (o, &c) in out.iter_mut().zip(caps) {
                        *o = lane_sum(n, |i| r[i].min(c) * w[i]);
                    }
                },
            )
        }
    }
}

fn exact_frac(alpha: &Alpha) -> Option<ExactFrac> {
    ExactFrac::new(alpha).ok()
}

fn check_k(alpha: &Alpha, k: usize, min_k: usize) -> Result<()> {
    if k < min_k {
        return Err(Error::arg("k", format!("must be >= {min_k}")));
    }
    alpha.q(k + 1).map(|_| ())
}

fn whole_reports(alpha: &Alpha, ks: std::ops::RangeInclusive<usize>, integrand: Integrand, kind: SumKind) -> Result<Vec<SumReport>> {
    let (k_lo, k_hi) = (*ks.start(), *ks.end());
    check_k(alpha, k_lo, 2)?;
    check_k(alpha, k_hi, 2)?;
    let frac = exact_frac(alpha);
    let mut acc = Enclosure::ZERO;
    let mut start = 1u64;
    let mut out = Vec::new();
    for k in 1..=k_hi {
        let end = alpha.q_u64(k)?;
        if end > start {
            acc = acc.plus(segment(alpha, frac.as_ref(), start, end, &integrand)?[0]);
            start = end;
        }
        if k >= k_lo {
            let total = acc.doubled();
            let qk = end as f64;
            let norm = match kind {
                SumKind::InverseSq => qk * qk,
                _ => qk * (qk + 1.0).ln(),
            };
            out.push(report(kind, k, end, None, None, total, total.value / norm, 2 * (end - 1)));
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn report(kind: SumKind, k: usize, q_k: u64, c: Option<f64>, eps: Option<f64>, e: Enclosure, ratio: f64, term_count: u64) -> SumReport {
    SumReport {
        kind,
        k,
        q_k,
        c,
        eps,
        value: e.value,
        value_lo: (e.value - e.err).max(0.0),
        value_hi: e.value + e.err,
        normalized_ratio: ratio,
        term_count,
        exact: e.exact,
    }
}

/// `Σ_{0<|q|<q_k} 1/‖qα‖²` with ratio `value / q_k²`.
pub fn sum_inverse_sq(alpha: &Alpha, k: usize) -> Result<SumReport> {
    Ok(whole_reports(alpha, k..=k, Integrand::InverseSq, SumKind::InverseSq)?.remove(0))
}

/// [`sum_inverse_sq`] for every `k` in a range, in one pass.
pub fn sum_inverse_sq_range(alpha: &Alpha, ks: std::ops::RangeInclusive<usize>) -> Result<Vec<SumReport>> {
    whole_reports(alpha, ks, Integrand::InverseSq, SumKind::InverseSq)
}

/// `Σ_{0<|q|<q_k} 1/‖qα‖` with ratio `value / (q_k log(q_k + 1))`.
pub fn sum_inverse_l1(alpha: &Alpha, k: usize) -> Result<SumReport> {
    Ok(whole_reports(alpha, k..=k, Integrand::InverseL1, SumKind::InverseL1)?.remove(0))
}

/// [`sum_inverse_l1`] for every `k` in a range, in one pass.
pub fn sum_inverse_l1_range(alpha: &Alpha, ks: std::ops::RangeInclusive<usize>) -> Result<Vec<SumReport>> {
    whole_reports(alpha, ks, Integrand::InverseL1, SumKind::InverseL1)
}

fn check_caps(caps: &[f64], qk: u64) -> Result<()> {
    for &c in caps {
        if !(c >= 1.0 && c <= qk as f64) {
            return Err(Error::arg("c", format!("must lie in [1, q_k] = [1, {qk}], got {c}")));
        }
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg("eps", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Slice sums for each `k` in `ks`, with caps chosen per `k` by `caps_for(k, q_k)`.
fn slice_reports(
    alpha: &Alpha,
    ks: std::ops::RangeInclusive<usize>,
    eps: Option<f64>,
    caps_for: &dyn Fn(usize, u64) -> Vec<f64>,
) -> Result<Vec<Vec<SumReport>>> {
    let (k_lo, k_hi) = (*ks.start(), *ks.end());
    check_k(alpha, k_lo, 1)?;
    check_k(alpha, k_hi, 1)?;
    if let Some(e) = eps {
        check_eps(e)?;
    }
    let frac = exact_frac(alpha);
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let qk = alpha.q_u64(k)?;
        let qk1 = alpha.q_u64(k + 1)?;
        let caps = caps_for(k, qk);
        check_caps(&caps, qk)?;
        let (integrand, kind) = match eps {
            None => (Integrand::SliceSq(caps.clone()), SumKind::SliceMin),
            Some(e) => (Integrand::SliceL1 { caps: caps.clone(), eps: e }, SumKind::SliceMinL1),
        };
        let sums = segment(alpha, frac.as_ref(), qk, qk1, &integrand)?;
        let row = caps
            .iter()
            .zip(sums)
            .map(|(&c, s)| {
                let total = s.doubled();
                let q = qk as f64;
                let ratio = match eps {
                    None => total.value * q / c,
                    Some(e) => total.value * q.powf(e) / (c + 1.0).ln(),
                };
                report(kind, k, qk, Some(c), eps, total, ratio, 2 * (qk1 - qk))
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// `Σ_{q_k<=|q|<q_{k+1}} min(1/‖qα‖², c²)/q²` with ratio `value · q_k / c`.
pub fn sum_slice_min(alpha: &Alpha, k: usize, c: f64) -> Result<SumReport> {
    Ok(slice_reports(alpha, k..=k, None, &|_, _| vec![c])?.remove(0).remove(0))
}

/// [`sum_slice_min`] for every `k` in a range and several caps per `k`.
pub fn sum_slice_min_range(
    alpha: &Alpha,
    ks: std::ops::RangeInclusive<usize>,
    caps_for: &dyn Fn(usize, u64) -> Vec<f64>,
) -> Result<Vec<Vec<SumReport>>> {
    slice_reports(alpha, ks, None, caps_for)
}

/// `Σ_{q_k<=|q|<q_{k+1}} min(1/‖qα‖, c)/|q|^{1+ε}` with ratio
/// `value · q_k^ε / log(c + 1)`.
pub fn sum_slice_min_l1(alpha: &Alpha, k: usize, c: f64, eps: f64) -> Result<SumReport> {
    Ok(slice_reports(alpha, k..=k, Some(eps), &|_, _| vec![c])?.remove(0).remove(0))
}

/// [`sum_slice_min_l1`] for every `k` in a range and several caps per `k`.
pub fn sum_slice_min_l1_range(
    alpha: &Alpha,
    ks: std::ops::RangeInclusive<usize>,
    eps: f64,
    caps_for: &dyn Fn(usize, u64) -> Vec<f64>,
) -> Result<Vec<Vec<SumReport>>> {
    slice_reports(alpha, ks, Some(eps), caps_for)
}

/// Exact-path sums of `min(1/‖qα‖², c²)/q²` over `q > 0` in the blocks
/// `[j q_k, (j+1) q_k)` for `1 <= j < a_{k+1}` followed by the tail block
/// `[a_{k+1} q_k, q_{k+1})`, and over the whole slice.
pub fn slice_block_sums(alpha: &Alpha, k: usize, c: f64) -> Result<(Vec<ScaledInterval>, ScaledInterval)> {
    check_k(alpha, k, 1)?;
    let qk = alpha.q_u64(k)?;
    let qk1 = alpha.q_u64(k + 1)?;
    check_caps(&[c], qk)?;
    if qk1 > EXACT_LIMIT {
        return Err(Error::RangeTooLarge(format!(
            "block decomposition uses the exact path, q_(k+1) = {qk1} > {EXACT_LIMIT}"
        )));
    }
    let frac = ExactFrac::new(alpha)?;
    let term = ExactTerm::SliceSq(vec![c]);
    let a = alpha
        .quotient(k + 1)?
        .to_u64()
        .ok_or_else(|| Error::RangeTooLarge("partial quotient".into()))?;
    let mut blocks = Vec::new();
    for j in 1..a {
        blocks.push(exact_scan(&frac, j * qk, (j + 1) * qk, &term)?.remove(0));
    }
    blocks.push(exact_scan(&frac, a * qk, qk1, &term)?.remove(0));
    let whole = exact_scan(&frac, qk, qk1, &term)?.remove(0);
    Ok((blocks, whole))
}

/// One side (`q > 0` or `q < 0`) of `Σ_{0<|q|<q_k} 1/‖qα‖²` on the float path,
/// returned as `(value, certified error)`.
pub fn inverse_sq_side(alpha: &Alpha, k: usize, negative: bool) -> Result<(f64, f64)> {
    check_k(alpha, k, 2)?;
    let end = alpha.q_u64(k)?;
    let kernel = |a: &[f64], _q0: u64, out: &mut [f64]| {
        out[0] = lane_sum(a.len(), |i| 1.0 / (a[i] * a[i]));
    };
    let rot = if negative {
        alpha.rotation().negated()
    } else {
        alpha.rotation()
    };
    let scan = float_scan(rot, 1, end, 1, &kernel);
    let rho = scan.rho()?;
    let v = scan.sums[0];
    Ok((v, v * ((2.0 * rho + 3.0 * UNIT_ROUNDOFF) * 1.01 + SUM_REL_ERR)))
}

#[cfg(test)]
mod tests;
