//! Birkhoff sums `S_r(φ)(x) = Σ_{j<r} φ(x + jα)` along the rotation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::FourierObservable;
use crate::contfrac::{Alpha, FixedRotation};
use crate::error::{Error, Result};
use crate::numeric::{fixed_from_f64, fixed_to_signed, fixed_to_unit, wrap_unit, CompensatedSum};

/// `(sin πθ, e(θ/2))` for a fixed-point `θ`, using the signed representative.
#[inline]
fn half_angle(pos: u128) -> (f64, Complex64) {
    let s = fixed_to_signed(pos);
    let (sn, cs) = (PI * s).sin_cos();
    (sn, Complex64::new(cs, sn))
}

/// `(1 - e(qrα)) / (1 - e(qα))` and `|1 - e(qα)|`.
pub(crate) fn geometric_ratio(rot: &FixedRotation, q: u64, r: u64) -> Result<(Complex64, f64)> {
    let qr = (q as i128)
        .checked_mul(r as i128)
        .ok_or_else(|| Error::RangeTooLarge(format!("q·r = {q}·{r}")))?;
    let (p1, _) = rot.multiple(qr);
    let (p0, _) = rot.multiple(q as i128);
    let (s1, h1) = half_angle(p1);
    let (s0, h0) = half_angle(p0);
    if s0 == 0.0 {
        return Err(Error::PrecisionExhausted(format!("qα is an integer at 2^-64 for q = {q}")));
    }
    // 1 - e(θ) = -2i sin(πθ) e(θ/2)
    Ok((h1 * h0.conj() * (s1 / s0), 2.0 * s0.abs()))
}

/// `S_r(φ)` as the trigonometric polynomial `c_0 r + Σ 2Re(w_q e(qx))`.
#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffProfile {
    pub r: u64,
    /// `c_0 · r`.
    pub constant: f64,
    /// `(q, w_q)` with `w_q = c_q (1 - e(qrα)) / (1 - e(qα))`.
    pub weights: Vec<(u64, Complex64)>,
    /// Bound on `sup|·|` of the omitted modes.
    pub tail: f64,
}

impl BirkhoffProfile {
    /// All stored modes, no tail.
    pub fn new(alpha: &Alpha, phi: &FourierObservable, r: u64) -> Result<Self> {
        Self::truncated(alpha, phi, r, u64::MAX)
    }

    /// Modes with `q <= q_tail`; the rest are bounded by
    /// `2 env(q) min{2/|1 - e(qα)|, r}`.
    pub fn truncated(alpha: &Alpha, phi: &FourierObservable, r: u64, q_tail: u64) -> Result<Self> {
        let rot = alpha.rotation();
        let mut weights = Vec::new();
        let mut tail = 0.0;
        for &(q, c) in phi.modes() {
            let (g, den) = geometric_ratio(&rot, q, r)?;
            if q <= q_tail {
                weights.push((q, c * g));
            } else {
                tail += 2.0 * phi.coeff_bound(q, c) * (2.0 / den).min(r as f64);
            }
        }
        Ok(BirkhoffProfile {
            r,
            constant: phi.mean() * r as f64,
            weights,
            tail,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.constant + self.oscillation(x)
    }

    /// `S_r(φ)(x) - c_0 r`.
    pub fn oscillation(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .map(|&(q, w)| {
                let (s, c) = (2.0 * PI * (q as f64 * x).fract()).sin_cos();
                2.0 * (w * Complex64::new(c, s)).re
            })
            .sum()
    }

    /// Oscillating part on the midpoint grid `x_i = (i + 1/2)/g`, with each
    /// angle `q x_i mod 1` reduced exactly in integers.
    pub fn oscillation_grid(&self, g: usize) -> Vec<f64> {
        let two_g = 2 * g as u128;
        let mut out = vec![0.0; g];
        for &(q, w) in &self.weights {
            let q = q as u128 % two_g;
            for (i, o) in out.iter_mut().enumerate() {
                let k = (q * (2 * i as u128 + 1)) % two_g;
                let (s, c) = (2.0 * PI * (k as f64 / two_g as f64)).sin_cos();
                *o += 2.0 * (w.re * c - w.im * s);
            }
        }
        out
    }

    /// `Σ_{q>0} 2|w_q|`, a bound on `sup|S_r(φ) - c_0 r|` (plus the tail).
    pub fn sup_bound(&self) -> f64 {
        self.weights.iter().map(|w| 2.0 * w.1.norm()).sum::<f64>() + self.tail
    }

    /// Lipschitz constant of the stored part: `Σ 4πq|w_q|`.
    pub fn lipschitz(&self) -> f64 {
        self.weights.iter().map(|&(q, w)| 4.0 * PI * q as f64 * w.norm()).sum()
    }
}

/// One step of `T(x, y) = (x + α, y + φ(x))`.
pub fn apply(alpha: &Alpha, phi: &FourierObservable, point: (f64, f64)) -> (f64, f64) {
    let (x, y) = point;
    (wrap_unit(x + alpha.frac_f64()), wrap_unit(y + phi.eval(x)))
}

/// `S_r(φ)(x)` by accumulation along the orbit; positions are exact 128-bit
/// fixed-point multiples of α.
pub fn birkhoff_direct(phi: &FourierObservable, alpha: &Alpha, x: f64, r: u64) -> f64 {
    let step = alpha.fixed();
    let mut pos = fixed_from_f64(x);
    let mut acc = CompensatedSum::new();
    for _ in 0..r {
        acc.add(phi.eval_fixed(pos));
        pos = pos.wrapping_add(step);
    }
    acc.value()
}

/// `S_r(φ)(x) = c_0 r + Σ_{q≠0} c_q e(qx)(1 - e(qrα))/(1 - e(qα))`.
pub fn birkhoff_fourier(phi: &FourierObservable, alpha: &Alpha, x: f64, r: u64) -> Result<f64> {
    if r == 0 {
        return Err(Error::arg("r", "must be >= 1"));
    }
    Ok(BirkhoffProfile::new(alpha, phi, r)?.eval(x))
}

/// `|Σ_{j<N} e(q(x + jα))| / N` against the geometric-series bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistributionReport {
    pub q: i64,
    pub n: u64,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn equidistribution_check(alpha: &Alpha, x: f64, n: u64, q: i64) -> Result<EquidistributionReport> {
    if q == 0 {
        return Err(Error::arg("q", "must be nonzero"));
    }
    if n == 0 {
        return Err(Error::arg("N", "must be >= 1"));
    }
    let step = alpha.fixed().wrapping_mul(q as u128);
    let mut pos = fixed_from_f64(x).wrapping_mul(q as u128);
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    for _ in 0..n {
        let (s, c) = (2.0 * PI * fixed_to_unit(pos)).sin_cos();
        re.add(c);
        im.add(s);
        pos = pos.wrapping_add(step);
    }
    let lhs = re.value().hypot(im.value()) / n as f64;
    let (p, _) = alpha.rotation().multiple(q as i128);
    let norm = crate::numeric::fixed_norm(p);
    let bound = if norm > 0.0 {
        (1.0 / (2.0 * n as f64 * norm)).min(1.0)
    } else {
        1.0
    };
    Ok(EquidistributionReport {
        q,
        n,
        lhs,
        bound,
        pass: lhs <= bound + 1e-12,
    })
}
