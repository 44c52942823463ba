//! Special flows under a positive roof over the rotation, and Rokhlin
//! extensions `E(x, y) = (x + α, L_{f(x)}(y))`.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::contfrac::Alpha;
use crate::dynamics::{parse_real, BirkhoffProfile, FourierObservable};
use crate::error::{Error, Result};
use crate::numeric::{fixed_from_f64, fixed_norm, fixed_to_unit, frac_of_product, torus_norm, wrap_unit};

/// Grid used to certify the roof minimum.
const ROOF_GRID: usize = 4096;

/// Fiber points at which Rokhlin displacements are sampled.
const FIBER_SAMPLES: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// A strictly positive roof `f` with a certified lower bound `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofFunction {
    f: FourierObservable,
    min: f64,
}

impl RoofFunction {
    /// `m` is the better of `c_0 - Σ 2|c_q|` and the grid minimum less `Lip/(2G)`.
    pub fn new(f: FourierObservable) -> Result<Self> {
        let by_coeffs = f.mean() - f.sup_oscillation();
        let slack = f.lipschitz() / (2.0 * ROOF_GRID as f64);
        let by_grid = (0..ROOF_GRID)
            .map(|i| f.eval((i as f64 + 0.5) / ROOF_GRID as f64))
            .fold(f64::INFINITY, f64::min)
            - slack;
        let min = by_coeffs.max(by_grid);
        if !(f.mean() > 0.0) {
            return Err(Error::arg("roof", "mean β must be positive"));
        }
        if !(min > 0.0) {
            return Err(Error::arg("roof", format!("cannot certify a positive minimum (got {min:.3e})")));
        }
        Ok(RoofFunction { f, min })
    }

    pub fn observable(&self) -> &FourierObservable {
        &self.f
    }

    /// Certified `min f > 0`.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// `β = ∫f`.
    pub fn beta(&self) -> f64 {
        self.f.mean()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    fn eval_fixed(&self, pos: u128) -> f64 {
        self.f.eval_fixed(pos)
    }
}

/// `<observable spec>+β`, or a bare observable spec with positive mean.
impl FromStr for RoofFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((head, tail)) = s.rsplit_once('+') {
            if let Ok(beta) = parse_real(tail.trim()) {
                let f: FourierObservable = head.parse()?;
                return RoofFunction::new(f.shifted(beta));
            }
        }
        RoofFunction::new(s.parse()?)
    }
}

/// A point `(x, s)` with `0 <= s < f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialFlowPoint {
    pub x: f64,
    pub s: f64,
}

/// `T_t(x, s) = (x + Nα, s + t - S_N(f)(x))` with `S_N <= s + t < S_{N+1}`.
/// For `N < 0`, `S_N = -Σ_{N<=j<0} f(x + jα)`.
pub fn special_flow_step(alpha: &Alpha, roof: &RoofFunction, point: SpecialFlowPoint, t: f64) -> Result<SpecialFlowPoint> {
    Ok(flow_with_count(alpha, roof, point, t)?.0)
}

/// The flow together with the crossing count `N`.
fn flow_with_count(alpha: &Alpha, roof: &RoofFunction, point: SpecialFlowPoint, t: f64) -> Result<(SpecialFlowPoint, i64)> {
    let u = point.s + t;
    if !u.is_finite() || !point.x.is_finite() {
        return Err(Error::arg("t", "must be finite"));
    }
    let step = alpha.fixed();
    let mut pos = fixed_from_f64(point.x);
    let limit = (u.abs() / roof.min).ceil() as i64 + 2;
    let (mut n, mut s_n) = (0i64, 0.0f64);
    if u >= 0.0 {
        loop {
            let next = s_n + roof.eval_fixed(pos);
            if u < next {
                break;
            }
            s_n = next;
            pos = pos.wrapping_add(step);
            n += 1;
            debug_assert!(n <= limit);
        }
    } else {
        while s_n > u {
            pos = pos.wrapping_sub(step);
            s_n -= roof.eval_fixed(pos);
            n -= 1;
            debug_assert!(-n <= limit);
        }
    }
    let s = (u - s_n).max(0.0);
    Ok((SpecialFlowPoint { x: fixed_to_unit(pos), s }, n))
}

/// Re-express a point of `T × R` in the fundamental domain.
pub fn canonicalize(alpha: &Alpha, roof: &RoofFunction, point: SpecialFlowPoint) -> Result<SpecialFlowPoint> {
    special_flow_step(alpha, roof, SpecialFlowPoint { x: wrap_unit(point.x), s: 0.0 }, point.s)
}

/// Computable stand-in for the quotient metric: the smallest
/// `‖x - x''‖ + |s - s''|` over the images `(x'', s'')` of `(x', s')` under at
/// most one gluing in either direction. It bounds the true metric from above.
pub fn flow_distance(alpha: &Alpha, roof: &RoofFunction, p: SpecialFlowPoint, q: SpecialFlowPoint) -> f64 {
    let a = alpha.frac_f64();
    let direct = torus_norm(p.x - q.x) + (p.s - q.s).abs();
    // (x', s') ~ (x' - α, s' + f(x' - α))
    let back = wrap_unit(q.x - a);
    let up = torus_norm(p.x - back) + (p.s - (q.s + roof.eval(back))).abs();
    // (x', s') ~ (x' + α, s' - f(x'))
    let down = torus_norm(p.x - (q.x + a)) + (p.s - (q.s - roof.eval(q.x))).abs();
    direct.min(up).min(down)
}

/// One row of the special-flow rigidity table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRigidityRow {
    pub n: usize,
    pub q_n: u64,
    pub v_n: u64,
    pub j_n: i64,
    /// No `v <= q^{1+γ}` met the threshold; `v_n` is the best found.
    pub relaxed: bool,
    /// `q^γ sup|S_q(f - β)|`.
    pub oscillation_term: f64,
    /// `|t v - j q β|`.
    pub time_term: f64,
    /// `q^γ ‖qα‖`.
    pub rotation_term: f64,
    pub bound: f64,
    /// `bound · v^{ε/2000}`.
    pub normalized: f64,
    /// `|j| sup|S_q(f - β)| + |t v - j q β| + |j| ‖qα‖`, which bounds the
    /// displacement through the triangle inequality.
    pub chain_bound: f64,
    /// Largest surrogate displacement `D̃(T_{tv}(p), p)` over the start grid.
    pub measured: f64,
}

/// Parameters of the special-flow rigidity table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConfig {
    pub t: f64,
    pub eps: f64,
    pub gamma: f64,
    pub n_start: usize,
    pub n_end: usize,
    /// Grid for the `sup |S_q|` estimate.
    pub grid_size: usize,
    /// Start points per axis for the measured displacement.
    pub sample_points: usize,
}

impl FlowConfig {
    /// `γ = ε/1000`, a 1024-point grid and 16 start abscissae.
    pub fn new(t: f64, eps: f64, n_start: usize, n_end: usize) -> Self {
        FlowConfig {
            t,
            eps,
            gamma: eps / 1000.0,
            n_start,
            n_end,
            grid_size: 1024,
            sample_points: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.t == 0.0 {
            return Err(Error::arg("t", "must be finite and nonzero"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::arg("eps", "must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::arg("gamma", "must be positive"));
        }
        if self.n_start > self.n_end {
            return Err(Error::arg("n_range", "start exceeds end"));
        }
        if self.grid_size < 64 {
            return Err(Error::arg("grid_size", "must be >= 64"));
        }
        if self.sample_points == 0 {
            return Err(Error::arg("sample_points", "must be >= 1"));
        }
        Ok(())
    }
}

/// Smallest `0 < v <= bound` with `‖vθ‖ < tau`. The first `v` to beat a
/// threshold is a record of `‖vθ‖`, hence a continued-fraction denominator of
/// `θ`, so only those are tried. Falls back to the best denominator.
fn dirichlet_multiplier(theta: f64, bound: f64, tau: f64) -> (u64, bool) {
    let th = BigRational::from_float(theta).expect("finite θ");
    let th = &th - th.floor();
    let (mut num, mut den) = (th.numer().clone(), th.denom().clone());
    let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::from(1));
    let mut best = (1u64, f64::INFINITY);
    loop {
        let Some(v) = q_cur.to_u64().filter(|&v| (v as f64) <= bound) else {
            return (best.0, true);
        };
        let norm = torus_norm(frac_of_product(&q_cur, theta));
        if norm < tau {
            return (v, false);
        }
        if norm < best.1 {
            best = (v, norm);
        }
        if num.is_zero() {
            return (best.0, true);
        }
        let a = &den / &num;
        let rem = &den - &a * &num;
        den = std::mem::replace(&mut num, rem);
        let next = &a * &q_cur + &q_prev;
        q_prev = std::mem::replace(&mut q_cur, next);
    }
}

/// `sup_x |S_q(φ)(x)|` on the midpoint grid, plus the Lipschitz slack.
fn sup_abs(alpha: &Alpha, phi: &FourierObservable, r: u64, grid: usize) -> Result<(f64, f64)> {
    let profile = BirkhoffProfile::new(alpha, phi, r)?;
    let grid_max = profile
        .oscillation_grid(grid)
        .iter()
        .map(|&s| (profile.constant + s).abs())
        .fold(0.0, f64::max);
    Ok((grid_max, profile.lipschitz() / (2.0 * grid as f64) + profile.tail))
}

pub fn flow_rigidity(alpha: &Alpha, roof: &RoofFunction, config: &FlowConfig) -> Result<Vec<FlowRigidityRow>> {
    config.validate()?;
    let beta = roof.beta();
    let centered = roof.observable().mean_zero();
    let t = config.t;
    (config.n_start..=config.n_end)
        .into_par_iter()
        .map(|n| {
            let q = alpha.q_u64(n)?;
            let qf = q as f64;
            let q_gamma = qf.powf(config.gamma);
            let (v, relaxed) = dirichlet_multiplier(t / (qf * beta), qf.powf(1.0 + config.gamma), qf.powf(-1.0 - config.gamma));
            let j = (v as f64 * t / (qf * beta)).round() as i64;
            let (grid_max, slack) = sup_abs(alpha, &centered, q, config.grid_size)?;
            let sup_s = grid_max + slack;
            let rot = fixed_norm(alpha.rotation().multiple(q as i128).0);
            let time_term = (t * v as f64 - j as f64 * qf * beta).abs();
            let bound = q_gamma * sup_s + time_term + q_gamma * rot;
            let jq = (j as i128)
                .checked_mul(q as i128)
                .filter(|m| m.unsigned_abs() < 1 << 63)
                .ok_or_else(|| Error::RangeTooLarge(format!("j·q = {j}·{q}")))?;
            let chain_bound = j.unsigned_abs() as f64 * (sup_s + rot) + time_term;
            let measured = measured_displacement(alpha, roof, &centered, t * v as f64, jq, config.sample_points)?;
            Ok(FlowRigidityRow {
                n,
                q_n: q,
                v_n: v,
                j_n: j,
                relaxed,
                oscillation_term: q_gamma * sup_s,
                time_term,
                rotation_term: q_gamma * rot,
                bound,
                normalized: bound * (v as f64).powf(config.eps / 2000.0),
                chain_bound,
                measured,
            })
        })
        .collect()
}

/// `max_p D̃(T_τ(p), p)` with `τ = t v`, using `T_τ(x, s) = T_{τ - S_m(f)(x)}(x + mα, s)`
/// for `m = j q`, so only a short residual flow is integrated.
fn measured_displacement(
    alpha: &Alpha,
    roof: &RoofFunction,
    centered: &FourierObservable,
    tau: f64,
    m: i128,
    points: usize,
) -> Result<f64> {
    let beta = roof.beta();
    // S_m(f) for m < 0 is -S_{|m|}(f)(x + mα)
    let profile = BirkhoffProfile::new(alpha, centered, m.unsigned_abs() as u64)?;
    let (shift, _) = alpha.rotation().multiple(m);
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let x = (i as f64 + 0.5) / points as f64;
        let xm = wrap_unit(x + fixed_to_unit(shift));
        let s_m = if m >= 0 {
            m as f64 * beta + profile.eval(x)
        } else {
            -(-(m as f64) * beta + profile.eval(xm))
        };
        for level in [0.0, 0.25, 0.5, 0.75] {
            let p = SpecialFlowPoint { x, s: level * roof.eval(x) };
            let image = special_flow_step(alpha, roof, SpecialFlowPoint { x: xm, s: p.s }, tau - s_m)?;
            worst = worst.max(flow_distance(alpha, roof, image, p));
        }
    }
    Ok(worst)
}

/// A flow `L_t` on a fiber `Y` that is `lipschitz()`-Lipschitz in `t`.
pub trait FiberFlow: Sync {
    fn act(&self, t: f64, y: f64) -> f64;
    fn lipschitz(&self) -> f64;
    /// The metric `ρ` on `Y`.
    fn distance(&self, y: f64, z: f64) -> f64;
}

/// `L_t(y) = y + ct` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFlow {
    pub c: f64,
}

impl FiberFlow for LinearFlow {
    fn act(&self, t: f64, y: f64) -> f64 {
        wrap_unit(y + self.c * t)
    }

    fn lipschitz(&self) -> f64 {
        self.c.abs()
    }

    fn distance(&self, y: f64, z: f64) -> f64 {
        torus_norm(y - z)
    }
}

/// `linear:c` or `identity`.
impl FromStr for LinearFlow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            _ if s.trim() == "identity" => Ok(LinearFlow { c: 0.0 }),
            Some(("linear", c)) => Ok(LinearFlow {
                c: parse_real(c.trim()).map_err(|_| Error::arg("L", "expected linear:<c>"))?,
            }),
            _ => Err(Error::arg("L", format!("unknown flow `{s}`"))),
        }
    }
}

/// One step of `E_{f,L}(x, y) = (x + α, L_{f(x)}(y))`.
pub fn rokhlin_apply(alpha: &Alpha, f: &FourierObservable, flow: &dyn FiberFlow, point: (f64, f64)) -> (f64, f64) {
    (wrap_unit(point.0 + alpha.frac_f64()), flow.act(f.eval(point.0), point.1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RokhlinRow {
    pub n: usize,
    pub q_n: u64,
    pub rotation_norm: f64,
    /// Grid maximum of `|S_q(f)|` and its Lipschitz slack.
    pub sup_s: f64,
    pub sup_slack: f64,
    /// `‖qα‖ + Lip(L) (sup_s + sup_slack)`.
    pub bound: f64,
    /// `bound · q^{ε/200}`.
    pub normalized: f64,
    /// `‖qα‖ + max ρ(L_{S_q(f)(x)}(y), y)` on the grid.
    pub measured: f64,
}

pub fn rokhlin_rigidity(
    alpha: &Alpha,
    f: &FourierObservable,
    flow: &dyn FiberFlow,
    eps: f64,
    n_start: usize,
    n_end: usize,
    grid: usize,
) -> Result<Vec<RokhlinRow>> {
    if f.mean() != 0.0 {
        return Err(Error::arg("f", "must have mean zero"));
    }
    if !(eps > 0.0) {
        return Err(Error::arg("eps", "must be positive"));
    }
    if grid < 64 {
        return Err(Error::arg("grid_size", "must be >= 64"));
    }
    if n_start > n_end {
        return Err(Error::arg("n_range", "start exceeds end"));
    }
    (n_start..=n_end)
        .into_par_iter()
        .map(|n| {
            let q = alpha.q_u64(n)?;
            let rot = fixed_norm(alpha.rotation().multiple(q as i128).0);
            let profile = BirkhoffProfile::new(alpha, f, q)?;
            let sums = profile.oscillation_grid(grid);
            let sup_s = sums.iter().map(|s| s.abs()).fold(0.0, f64::max);
            let sup_slack = profile.lipschitz() / (2.0 * grid as f64) + profile.tail;
            let bound = rot + flow.lipschitz() * (sup_s + sup_slack);
            let moved = sums
                .iter()
                .flat_map(|&s| FIBER_SAMPLES.iter().map(move |&y| flow.distance(flow.act(s, y), y)))
                .fold(0.0, f64::max);
            Ok(RokhlinRow {
                n,
                q_n: q,
                rotation_norm: rot,
                sup_s,
                sup_slack,
                bound,
                normalized: bound * (q as f64).powf(eps / 200.0),
                measured: rot + moved,
            })
        })
        .collect()
}
