//! Denjoy–Koksma checks `|Σ_{j<q_n} f(x + jα) - q_n ∫f| <= Var(f)` with a
//! certified bound on the floating-point error of the left-hand side.

use std::f64::consts::PI;

use num_rational::BigRational;
use serde::Serialize;

use super::kernel::{fold_lanes, CHUNK, SUM_REL_ERR};
use super::BVFunction;
use crate::contfrac::Alpha;
use crate::error::{Error, Result};
use crate::numeric::{fixed_from_rational, fixed_to_signed, rational_to_f64, CompensatedSum, TWO_POW_M128, TWO_POW_M64, UNIT_ROUNDOFF};

const U: f64 = UNIT_ROUNDOFF;

/// Outcome of one Denjoy–Koksma check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DkReport {
    pub n: usize,
    pub q_n: u64,
    pub x: f64,
    /// `Σ_{j<q_n} f(x + jα)`.
    pub birkhoff_sum: f64,
    /// `q_n ∫f`.
    pub mean_term: f64,
    pub lhs: f64,
    /// Certified upper bound on the true left-hand side.
    pub lhs_hi: f64,
    /// `Var(f)`.
    pub bound: f64,
    pub pass: bool,
}

/// Per-term error model `rel · |f| + abs`.
struct EvalError {
    rel: f64,
    abs: f64,
}

fn eval_error(f: &BVFunction, eta: f64, chunk: usize) -> EvalError {
    match f {
        BVFunction::CappedInverseSquare { threshold } => EvalError {
            rel: 2.02 * (U + 1.01 * eta * threshold) + 3.0 * U,
            abs: 0.0,
        },
        BVFunction::CappedInverse { threshold } => EvalError {
            rel: 1.01 * (U + 1.01 * eta * threshold) + 2.0 * U,
            abs: 0.0,
        },
        BVFunction::PiecewiseLinear { knots } => {
            let l = f.lipschitz();
            let vmax = knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max);
            EvalError {
                rel: 0.0,
                abs: l * (eta + 0.5 * U) + 4.0 * U * (vmax + 0.5 * l),
            }
        }
        BVFunction::TrigPoly { cos_coeffs, .. } => {
            // 8 lanes anchored by sin_cos at each chunk start, each rotated by 8mα
            // at most CHUNK/8 times; the CHUNK factor below over-covers that
            let modes = cos_coeffs.len() as f64;
            let abs = cos_coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let m = (i + 1) as f64;
                    let anchor = 2.0 * PI * m * (eta + 0.5 * U) + 3.0 * U;
                    let step = 2.0 * PI * m * (eta + 0.5 * U) + 3.0 * U;
                    a.abs() * (anchor + chunk as f64 * (step + 6.0 * U) + modes * U)
                })
                .sum();
            EvalError { rel: 0.0, abs }
        }
    }
}

/// Plain and absolute sums of `g(‖pos‖)` along `pos, pos + step, ...`,
/// accumulated lane by lane exactly as `lane_sum` does. Positions run on
/// the top 64 bits with the step rounded, which moves each one by at most
/// `(1 + len/2) 2^-64`.
#[inline(always)]
fn lane_sums(len: usize, pos: u128, step: u128, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let hi = (pos >> 64) as u64;
    let step = (step.wrapping_add(1 << 63) >> 64) as u64;
    let at = |j: usize| ((hi.wrapping_add((j as u64).wrapping_mul(step)) as i64) as f64 * TWO_POW_M64).abs();
    let mut acc = [0.0f64; 8];
    let mut abs = [0.0f64; 8];
    let full = len / 8 * 8;
    let mut i = 0;
    while i < full {
        for l in 0..8 {
            let v = g(at(i + l));
            acc[l] += v;
            abs[l] += v.abs();
        }
        i += 8;
    }
    for l in 0..len - full {
        let v = g(at(full + l));
        acc[l] += v;
        abs[l] += v.abs();
    }
    (fold_lanes(acc), fold_lanes(abs))
}

/// [`lane_sums`] compiled for AVX-512 when the CPU has it.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512dq")]
unsafe fn lane_sums_wide(len: usize, pos: u128, step: u128, g: impl Fn(f64) -> f64) -> (f64, f64) {
    lane_sums(len, pos, step, g)
}

#[inline(always)]
fn chunk_sums(len: usize, pos: u128, step: u128, g: impl Fn(f64) -> f64) -> (f64, f64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512dq") {
        // SAFETY: the required features were detected at run time
        return unsafe { lane_sums_wide(len, pos, step, g) };
    }
    lane_sums(len, pos, step, g)
}

/// Piecewise-linear knots with the slopes precomputed; evaluates exactly like
/// [`BVFunction::eval_even`].
struct Segments {
    /// `(b_{i-1}, v_{i-1}, slope)` of each segment.
    pieces: Vec<(f64, f64, f64)>,
}

impl Segments {
    fn new(f: &BVFunction) -> Self {
        let pieces = match f {
            BVFunction::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| (w[0].0, w[0].1, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
                .collect(),
            _ => Vec::new(),
        };
        Segments { pieces }
    }

    /// The segment is the last one whose start is `<= a` (the first one below
    /// its start); selects instead of branches so the loop vectorizes.
    #[inline(always)]
    fn eval_n<const N: usize>(pieces: &[(f64, f64, f64); N], a: f64) -> f64 {
        let mut p = pieces[0];
        for q in &pieces[1..] {
            if a >= q.0 {
                p = *q;
            }
        }
        p.1 + (a - p.0) * p.2
    }

    fn sums(&self, len: usize, pos: u128, step: u128) -> (f64, f64) {
        macro_rules! fixed {
            ($n:literal) => {{
                let pieces: [(f64, f64, f64); $n] = self.pieces[..].try_into().expect("length checked");
                chunk_sums(len, pos, step, |a| Self::eval_n(&pieces, a))
            }};
        }
        match self.pieces.len() {
            1 => fixed!(1),
            2 => fixed!(2),
            3 => fixed!(3),
            4 => fixed!(4),
            _ => chunk_sums(len, pos, step, |a| {
                let mut p = self.pieces[0];
                for q in &self.pieces[1..] {
                    if a >= q.0 {
                        p = *q;
                    }
                }
                p.1 + (a - p.0) * p.2
            }),
        }
    }
}

/// Adds `a_m cos(2π m z)` over the chunk into `vals` and returns the plain
/// and absolute lane sums. Eight lanes are anchored by `sin_cos` and each is
/// rotated by `8mα`.
#[inline(always)]
fn trig_chunk(vals: &mut [f64], pos: u128, step: u128, coeffs: &[f64], steps: &[(f64, f64)]) -> (f64, f64) {
    vals.fill(0.0);
    for (i, (a, &(ws, wc))) in coeffs.iter().zip(steps).enumerate() {
        let m = (i + 1) as f64;
        let (mut zs, mut zc) = ([0.0f64; 8], [0.0f64; 8]);
        let mut p = pos;
        for l in 0..8 {
            (zs[l], zc[l]) = (2.0 * PI * m * fixed_to_signed(p)).sin_cos();
            p = p.wrapping_add(step);
        }
        let mut blocks = vals.chunks_exact_mut(8);
        for block in &mut blocks {
            for l in 0..8 {
                block[l] += a * zc[l];
                let c = zc[l] * wc - zs[l] * ws;
                zs[l] = zs[l] * wc + zc[l] * ws;
                zc[l] = c;
            }
        }
        for (l, v) in blocks.into_remainder().iter_mut().enumerate() {
            *v += a * zc[l];
        }
    }
    let (mut acc, mut abs) = ([0.0f64; 8], [0.0f64; 8]);
    let blocks = vals.chunks_exact(8);
    let rest = blocks.remainder();
    for block in blocks {
        for l in 0..8 {
            acc[l] += block[l];
            abs[l] += block[l].abs();
        }
    }
    for (l, v) in rest.iter().enumerate() {
        acc[l] += v;
        abs[l] += v.abs();
    }
    (fold_lanes(acc), fold_lanes(abs))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512dq")]
unsafe fn trig_chunk_wide(vals: &mut [f64], pos: u128, step: u128, coeffs: &[f64], steps: &[(f64, f64)]) -> (f64, f64) {
    trig_chunk(vals, pos, step, coeffs, steps)
}

fn trig_sums(vals: &mut [f64], pos: u128, step: u128, coeffs: &[f64], steps: &[(f64, f64)]) -> (f64, f64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512dq") {
        // SAFETY: the required features were detected at run time
        return unsafe { trig_chunk_wide(vals, pos, step, coeffs, steps) };
    }
    trig_chunk(vals, pos, step, coeffs, steps)
}

/// Checks for every `n <= n_max` from a single pass over the orbit of `x`.
pub fn denjoy_koksma_scan(f: &BVFunction, alpha: &Alpha, n_max: usize, x: &BigRational) -> Result<Vec<DkReport>> {
    f.validate()?;
    let q_max = alpha.q_u64(n_max)?;
    if q_max > super::MAX_TERMS {
        return Err(Error::RangeTooLarge(format!("q_{n_max} = {q_max} orbit points")));
    }
    let rot = alpha.rotation();
    let x0 = fixed_from_rational(x);
    let xf = rational_to_f64(x);
    // absolute error of every position after conversion to binary64, with the
    // rounded 64-bit step inside a chunk
    let eta = TWO_POW_M128 + q_max as f64 * rot.err * 1.01 + (CHUNK as f64 / 2.0 + 2.0) * TWO_POW_M64;
    let model = eval_error(f, eta, CHUNK);
    let integral = f.integral();
    let var = f.variation();
    let (trig, mean, coeffs): (bool, f64, &[f64]) = match f {
        BVFunction::TrigPoly { mean, cos_coeffs } => (true, *mean, cos_coeffs),
        _ => (false, 0.0, &[]),
    };
    // rotations by 8mα: each of 8 interleaved lanes advances 8 orbit points
    let steps: Vec<(f64, f64)> = (1..=coeffs.len())
        .map(|m| {
            let (p, _) = rot.multiple(8 * m as i128);
            (2.0 * PI * fixed_to_signed(p)).sin_cos()
        })
        .collect();

    let segments = Segments::new(f);

    let mut total = CompensatedSum::new();
    let mut abs_total = CompensatedSum::new();
    let mut reports = Vec::with_capacity(n_max + 1);
    let mut done = 0u64;
    let mut vals = [0.0f64; CHUNK];
    for n in 0..=n_max {
        let q = alpha.q_u64(n)?;
        while done < q {
            let len = ((q - done) as usize).min(CHUNK);
            let (offset, _) = rot.multiple(done as i128);
            let pos = x0.wrapping_add(offset);
            let (sum, abs_sum) = match f {
                BVFunction::CappedInverseSquare { threshold } => {
                    let t = threshold * threshold;
                    chunk_sums(len, pos, rot.step, |a| (1.0 / (a * a)).min(t))
                }
                BVFunction::CappedInverse { threshold } => chunk_sums(len, pos, rot.step, |a| (1.0 / a).min(*threshold)),
                BVFunction::PiecewiseLinear { .. } => segments.sums(len, pos, rot.step),
                BVFunction::TrigPoly { .. } => trig_sums(&mut vals[..len], pos, rot.step, coeffs, &steps),
            };
            total.add(sum);
            abs_total.add(abs_sum);
            done += len as u64;
        }
        let qf = q as f64;
        let s = total.value();
        let abs_sum = abs_total.value();
        // the constant part of a trigonometric polynomial cancels exactly
        let (birkhoff_sum, diff, mean_term) = if !trig {
            let mt = qf * integral;
            (s, s - mt, mt)
        } else {
            (s + qf * mean, s, qf * mean)
        };
        let lhs = diff.abs();
        let err = model.rel * abs_sum * 1.01
            + model.abs * qf * 1.01
            + SUM_REL_ERR * abs_sum
            + 6.0 * U * mean_term.abs()
            + 2.0 * U * lhs;
        let lhs_hi = lhs + err;
        reports.push(DkReport {
            n,
            q_n: q,
            x: xf,
            birkhoff_sum,
            mean_term,
            lhs,
            lhs_hi,
            bound: var,
            pass: lhs_hi <= var * (1.0 - 8.0 * U),
        });
    }
    Ok(reports)
}

/// The Denjoy–Koksma check at `q_n` for the orbit of `x`.
pub fn denjoy_koksma_check(f: &BVFunction, alpha: &Alpha, n: usize, x: &BigRational) -> Result<DkReport> {
    Ok(denjoy_koksma_scan(f, alpha, n, x)?.pop().expect("n_max + 1 reports"))
}
