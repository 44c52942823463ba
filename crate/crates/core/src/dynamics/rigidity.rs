//! Rigidity times `r_n = ℓ_n q_n` and the distances `D_n` along them.

use std::f64::consts::PI;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use super::birkhoff::{geometric_ratio, BirkhoffProfile};
use super::{FourierObservable, Psi};
use crate::contfrac::{classify_growth, Alpha, GrowthClass};
use crate::error::{Error, Result};
use crate::numeric::{fixed_norm, fixed_to_signed, frac_of_product, torus_norm};

/// Parameters of the rigidity construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityConfig {
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub n_start: usize,
    pub n_end: usize,
    pub grid_size: usize,
}

impl RigidityConfig {
    /// `δ = ε/10`, `λ = ε/100`, grid of 1024 points.
    pub fn new(eps: f64, n_start: usize, n_end: usize) -> Self {
        RigidityConfig {
            eps,
            delta: eps / 10.0,
            lambda: eps / 100.0,
            n_start,
            n_end,
            grid_size: 1024,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::arg("eps", "must be positive"));
        }
        if !(0.0 < self.lambda && self.lambda < self.delta && self.delta < self.eps) {
            return Err(Error::arg("delta", "need 0 < lambda < delta < eps"));
        }
        if self.grid_size < 64 {
            return Err(Error::arg("grid_size", "must be >= 64"));
        }
        if self.n_start > self.n_end {
            return Err(Error::arg("n_range", "empty range"));
        }
        Ok(())
    }

    /// Whether `0 < ε < 1/100`, the range covered by the theory.
    pub fn in_hypothesis(&self) -> bool {
        self.eps > 0.0 && self.eps < 0.01
    }
}

/// Bound/threshold pair for the Dirichlet choice of `ℓ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllRule {
    /// `ℓ <= q_n^δ`, `‖ℓ q_n c_0‖ < q_n^{-δ}`.
    Power { delta: f64 },
    /// `ℓ <= λ(n)^{1/2}`, `‖ℓ q_n c_0‖ < λ(n)^{-1/2}`.
    SqrtLambda { lambda_n: f64 },
    /// `ℓ <= ψ(q_n)^{1/10}`, `‖ℓ q_n c_0‖ < ψ(q_n)^{-1/10}`.
    PsiTenth(Psi),
}

impl EllRule {
    /// `(bound, threshold)` at `q_n`.
    pub fn pair(&self, q_n: u64) -> (f64, f64) {
        let b = match *self {
            EllRule::Power { delta } => (q_n as f64).powf(delta),
            EllRule::SqrtLambda { lambda_n } => lambda_n.sqrt(),
            EllRule::PsiTenth(psi) => psi.eval(q_n as f64).powf(0.1),
        };
        (b, 1.0 / b)
    }
}

/// Chosen `ℓ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EllChoice {
    pub ell: u64,
    /// Whether the Dirichlet box bound `1/(⌊B⌋ + 1)` replaced the strict threshold.
    pub relaxed: bool,
}

/// `‖m c_0‖` with `m c_0` reduced exactly.
fn norm_of_multiple(m: u64, c0: f64) -> f64 {
    torus_norm(frac_of_product(&BigInt::from(m), c0))
}

/// Smallest `0 < ℓ <= q_n^δ` with `‖ℓ q_n c_0‖ < q_n^{-δ}`.
pub fn choose_ell(alpha: &Alpha, n: usize, c0: f64, delta: f64) -> Result<EllChoice> {
    if !(delta > 0.0) {
        return Err(Error::arg("delta", "must be positive"));
    }
    choose_ell_general(alpha, n, c0, &EllRule::Power { delta })
}

/// Smallest `ℓ` under a caller-supplied bound/threshold pair `(B, θ)`; falls
/// back to `‖ℓ q_n c_0‖ <= 1/(⌊B⌋ + 1)`, which Dirichlet guarantees once `B >= 1`.
pub fn choose_ell_general(alpha: &Alpha, n: usize, c0: f64, rule: &EllRule) -> Result<EllChoice> {
    if !c0.is_finite() {
        return Err(Error::arg("c0", "must be finite"));
    }
    let q = alpha.q_u64(n)?;
    let (bound, threshold) = rule.pair(q);
    if !(bound >= 1.0) {
        return Err(Error::NoSolution(format!("bound {bound} < 1 leaves no admissible ℓ at n = {n}")));
    }
    let top = bound.floor().min(1e7) as u64;
    let norms: Vec<f64> = (1..=top).map(|l| norm_of_multiple(l * q, c0)).collect();
    if let Some(i) = norms.iter().position(|&d| d < threshold) {
        return Ok(EllChoice {
            ell: i as u64 + 1,
            relaxed: false,
        });
    }
    let box_bound = 1.0 / (top as f64 + 1.0);
    match norms.iter().position(|&d| d <= box_bound) {
        Some(i) => Ok(EllChoice {
            ell: i as u64 + 1,
            relaxed: true,
        }),
        None => Err(Error::NoSolution(format!("no ℓ <= {top} at n = {n}"))),
    }
}

/// Parseval surrogate `D̂` with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Hat {
    /// `‖rα‖² + ‖c_0 r‖² + Σ_{0<|q|<=Q} |c_q|² |(1 - e(qrα))/(1 - e(qα))|²`.
    pub value: f64,
    /// Certified bound on the omitted modes.
    pub tail: f64,
    /// Truncation frequency `Q`.
    pub q_tail: u64,
}

/// `‖rα‖` from the fixed-point rotation.
fn rotation_norm(alpha: &Alpha, r: u64) -> f64 {
    fixed_norm(alpha.rotation().multiple(r as i128).0)
}

/// `D̂(r)`; the truncation `Q` doubles from 64 until the certified tail is at
/// most `10^-3` of the partial sum or every stored mode is included.
pub fn rigidity_l2_hat(alpha: &Alpha, phi: &FourierObservable, r: u64) -> Result<L2Hat> {
    if r == 0 {
        return Err(Error::arg("r", "must be >= 1"));
    }
    let rot = alpha.rotation();
    let head = rotation_norm(alpha, r).powi(2) + norm_of_multiple(r, phi.mean()).powi(2);
    // (q, |c_q|² |g_q|², tail weight)
    let terms: Vec<(u64, f64, f64)> = phi
        .modes()
        .iter()
        .map(|&(q, c)| {
            let (g, den) = geometric_ratio(&rot, q, r)?;
            let cap = (2.0 / den).min(r as f64);
            Ok((q, 2.0 * c.norm_sqr() * g.norm_sqr(), 2.0 * (phi.coeff_bound(q, c) * cap).powi(2)))
        })
        .collect::<Result<_>>()?;
    let mut q_tail = 64u64;
    loop {
        let value = head + terms.iter().filter(|t| t.0 <= q_tail).map(|t| t.1).sum::<f64>();
        let tail: f64 = terms.iter().filter(|t| t.0 > q_tail).map(|t| t.2).sum();
        if tail <= 1e-3 * value || q_tail >= phi.q_max() {
            return Ok(L2Hat { value, tail, q_tail: q_tail.min(phi.q_max()) });
        }
        q_tail = q_tail.saturating_mul(2);
    }
}

/// Grid quadrature with a Richardson-style error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridValue {
    pub value: f64,
    /// `|value(G) - value(2G)|`.
    pub quad_err: f64,
}

fn l2_on_grid(profile: &BirkhoffProfile, g: usize) -> f64 {
    let osc = profile.oscillation_grid(g);
    osc.iter().map(|&s| torus_norm(profile.constant + s).powi(2)).sum::<f64>() / g as f64
}

/// `‖rα‖² + (1/G) Σ_i ‖S_r(φ)(x_i)‖²` on the midpoint grid.
pub fn rigidity_l2_direct(alpha: &Alpha, phi: &FourierObservable, r: u64, grid_size: usize) -> Result<GridValue> {
    if grid_size < 64 {
        return Err(Error::arg("grid_size", "must be >= 64"));
    }
    let profile = BirkhoffProfile::new(alpha, phi, r)?;
    let head = rotation_norm(alpha, r).powi(2);
    let coarse = head + l2_on_grid(&profile, grid_size);
    let fine = head + l2_on_grid(&profile, 2 * grid_size);
    Ok(GridValue {
        value: coarse,
        quad_err: (coarse - fine).abs(),
    })
}

/// Certified upper bound on `sup_x (‖rα‖ + ‖S_r(φ)(x)‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupValue {
    pub value: f64,
    pub grid_max: f64,
    /// Lipschitz slack `L/(2G)` plus the truncation tail.
    pub slack: f64,
}

pub fn rigidity_sup(alpha: &Alpha, phi: &FourierObservable, r: u64, grid_size: usize) -> Result<SupValue> {
    if grid_size < 64 {
        return Err(Error::arg("grid_size", "must be >= 64"));
    }
    let profile = BirkhoffProfile::new(alpha, phi, r)?;
    let grid_max = profile
        .oscillation_grid(grid_size)
        .iter()
        .map(|&s| torus_norm(profile.constant + s))
        .fold(0.0, f64::max);
    let slack = profile.lipschitz() / (2.0 * grid_size as f64) + profile.tail;
    let head = rotation_norm(alpha, r);
    Ok(SupValue {
        value: head + (grid_max + slack).min(0.5),
        grid_max: head + grid_max,
        slack,
    })
}

/// One row of the rigidity table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityEntry {
    pub n: usize,
    pub q_n: u64,
    pub ell_n: u64,
    pub ell_relaxed: bool,
    pub r_n: u64,
    pub d_l2_hat: f64,
    pub d_l2_hat_tail: f64,
    pub d_l2_direct: f64,
    pub d_l2_direct_err: f64,
    pub d_sup: f64,
    /// `r_n^{-λ}`.
    pub bound: f64,
}

/// Indices of the table: the Case-1 subsequence when α has one within the
/// range, every `n` otherwise.
pub fn rigidity_indices(alpha: &Alpha, n_start: usize, n_end: usize) -> Result<Vec<usize>> {
    let all: Vec<usize> = (n_start..=n_end).collect();
    if alpha.quotients().len() < n_end + 2 {
        return Ok(all);
    }
    match classify_growth(alpha.quotients(), n_end)? {
        GrowthClass::Case1 { indices } => Ok(indices.into_iter().filter(|&k| k >= n_start).collect()),
        GrowthClass::Case2 => Ok(all),
    }
}

fn entry(alpha: &Alpha, phi: &FourierObservable, config: &RigidityConfig, n: usize) -> Result<RigidityEntry> {
    let q = alpha.q_u64(n)?;
    let ell = choose_ell(alpha, n, phi.mean(), config.delta)?;
    let r = ell
        .ell
        .checked_mul(q)
        .ok_or_else(|| Error::RangeTooLarge(format!("r_{n} overflows")))?;
    let hat = rigidity_l2_hat(alpha, phi, r)?;
    let direct = rigidity_l2_direct(alpha, phi, r, config.grid_size)?;
    let sup = rigidity_sup(alpha, phi, r, config.grid_size)?;
    Ok(RigidityEntry {
        n,
        q_n: q,
        ell_n: ell.ell,
        ell_relaxed: ell.relaxed,
        r_n: r,
        d_l2_hat: hat.value,
        d_l2_hat_tail: hat.tail,
        d_l2_direct: direct.value,
        d_l2_direct_err: direct.quad_err,
        d_sup: sup.value,
        bound: (r as f64).powf(-config.lambda),
    })
}

/// The full table for `n` in the configured range; rows are computed in
/// parallel and returned in increasing `n`.
pub fn build_rigidity_sequence(alpha: &Alpha, phi: &FourierObservable, config: &RigidityConfig) -> Result<Vec<RigidityEntry>> {
    config.validate()?;
    rigidity_indices(alpha, config.n_start, config.n_end)?
        .par_iter()
        .map(|&n| entry(alpha, phi, config, n))
        .collect()
}

/// PR-rigidity sums for a character `f(x, y) = e(ax + by)` along one `r_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrRow {
    pub n: usize,
    pub r_n: u64,
    /// `⌊r_n^{ε/400}⌋`.
    pub k_max: u64,
    /// `‖f∘T^{r_n} - f‖²`.
    pub base: f64,
    /// `Σ_{|k|<=k_max} ‖f∘T^{k r_n} - f‖²` by quadrature.
    pub measured: f64,
    /// `Σ_{|k|<=k_max} k² ‖f∘T^{r_n} - f‖²`.
    pub bound: f64,
}

/// `‖f∘T^m - f‖²_{L²(Leb)}` for `f = e(ax + by)`, by midpoint quadrature.
pub fn character_displacement_sq(alpha: &Alpha, phi: &FourierObservable, freq: (i64, i64), m: u64, grid_size: usize) -> Result<f64> {
    let (a, b) = freq;
    let shift = fixed_to_signed(alpha.rotation().multiple(a as i128 * m as i128).0);
    if b == 0 {
        return Ok(4.0 * (PI * shift).sin().powi(2));
    }
    let profile = BirkhoffProfile::new(alpha, phi, m)?;
    let osc = profile.oscillation_grid(grid_size);
    let total: f64 = osc
        .iter()
        .map(|&s| {
            let theta = shift + b as f64 * (profile.constant + s);
            4.0 * (PI * theta).sin().powi(2)
        })
        .sum();
    Ok(total / grid_size as f64)
}

pub fn pr_rigidity_check(alpha: &Alpha, phi: &FourierObservable, config: &RigidityConfig, freq: (i64, i64)) -> Result<Vec<PrRow>> {
    config.validate()?;
    rigidity_indices(alpha, config.n_start, config.n_end)?
        .par_iter()
        .map(|&n| {
            let q = alpha.q_u64(n)?;
            let ell = choose_ell(alpha, n, phi.mean(), config.delta)?;
            let r = ell.ell * q;
            let k_max = ((r as f64).powf(config.eps / 400.0).floor() as u64).max(1);
            let base = character_displacement_sq(alpha, phi, freq, r, config.grid_size)?;
            let mut measured = 0.0;
            for k in 1..=k_max {
                // negative k give the same value by invariance of Lebesgue measure
                measured += 2.0 * character_displacement_sq(alpha, phi, freq, k * r, config.grid_size)?;
            }
            let k = k_max as f64;
            Ok(PrRow {
                n,
                r_n: r,
                k_max,
                base,
                measured,
                bound: base * k * (k + 1.0) * (2.0 * k + 1.0) / 3.0,
            })
        })
        .collect()
}
