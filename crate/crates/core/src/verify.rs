//! The invariant suite behind `skewrig verify`: every module's properties at
//! desk scale, reported as one deterministic row per check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contfrac::{classify_growth, expand, Alpha, DecimalApprox, GrowthClass, IrrationalSpec};
use crate::counterexample::{self, DominantCase};
use crate::diophantine::{denjoy_koksma_scan, slice_block_sums, sum_inverse_sq_range, BVFunction, ScaledInterval};
use crate::dynamics::{
    birkhoff_direct, birkhoff_fourier, character_displacement_sq, choose_ell, rigidity_l2_direct, rigidity_l2_hat, rigidity_sup,
    FourierObservable,
};
use crate::error::Result;
use crate::flows::{flow_distance, rokhlin_rigidity, special_flow_step, LinearFlow, RoofFunction, SpecialFlowPoint};
use crate::mobius::{disjointness_sum, sieve, Orbit};
use crate::numeric::torus_norm;

/// Seed shared by every randomized check.
const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub cases: u64,
    pub violations: u64,
    pub detail: String,
}

/// `(cases, violations, detail)` from one check body.
type Outcome = Result<(u64, u64, String)>;

fn run(module: &'static str, name: &'static str, body: impl FnOnce() -> Outcome) -> CheckResult {
    match body() {
        Ok((cases, violations, detail)) => CheckResult {
            module,
            name,
            pass: violations == 0 && cases > 0,
            cases,
            violations,
            detail,
        },
        Err(e) => CheckResult {
            module,
            name,
            pass: false,
            cases: 0,
            violations: 0,
            detail: format!("error: {e}"),
        },
    }
}

fn surds() -> Result<Vec<Alpha>> {
    Ok(vec![Alpha::new(IrrationalSpec::golden())?, Alpha::new(IrrationalSpec::sqrt2())?])
}

fn two_mode() -> FourierObservable {
    FourierObservable::trig(0.0, &[(1, 0.25, 0.0), (2, 0.0, -0.125)]).expect("hermitian")
}

fn random_trig(rng: &mut ChaCha8Rng, modes: i64, scale: f64) -> FourierObservable {
    let coeffs: Vec<(i64, f64, f64)> = (1..=modes)
        .map(|q| {
            let s = scale / (q * q) as f64;
            (q, s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0))
        })
        .collect();
    FourierObservable::trig(0.0, &coeffs).expect("hermitian")
}

/// `‖qα‖` in 128-bit fixed point.
fn fixed_dist(alpha: &Alpha, q: u64) -> u128 {
    let p = alpha.rotation().multiple(q as i128).0;
    p.min(p.wrapping_neg())
}

fn contfrac_checks(out: &mut Vec<CheckResult>) {
    out.push(run("contfrac", "recurrence", || {
        let (mut cases, mut bad) = (0, 0);
        for spec in [IrrationalSpec::golden(), IrrationalSpec::sqrt2(), IrrationalSpec::euler()] {
            let a = Alpha::new(spec)?;
            let c = a.convergents();
            for n in 1..40 {
                let an = a.quotient(n + 1)?;
                cases += 1;
                if c[n + 1].q != an * &c[n].q + &c[n - 1].q || c[n + 1].p != an * &c[n].p + &c[n - 1].p || !c[n].p.gcd(&c[n].q).is_one() {
                    bad += 1;
                }
            }
        }
        Ok((cases, bad, "q_{n+1} = a_{n+1} q_n + q_{n-1} for n < 40".into()))
    }));
    out.push(run("contfrac", "norm_brackets", || {
        let (mut cases, mut bad) = (0, 0);
        for a in surds()? {
            for n in 1..=40 {
                let (q, q1) = (a.q(n)?, a.q(n + 1)?);
                let v = a.dist_nearest_int(q, 256)?;
                cases += 1;
                if !(BigRational::new(1.into(), q1 + q) < v.lo && v.hi < BigRational::new(1.into(), q1.clone())) {
                    bad += 1;
                }
            }
        }
        Ok((cases, bad, "1/(q_{n+1}+q_n) < ‖q_nα‖ < 1/q_{n+1}, exact".into()))
    }));
    out.push(run("contfrac", "best_approximation", || {
        let (mut cases, mut bad) = (0, 0);
        for a in surds()? {
            for n in 1..=10 {
                let best = fixed_dist(&a, a.q_u64(n)?);
                for q in 1..a.q_u64(n + 1)? {
                    cases += 1;
                    if fixed_dist(&a, q) < best {
                        bad += 1;
                    }
                }
            }
        }
        Ok((cases, bad, "‖q_nα‖ <= ‖qα‖ for 0 < q < q_{n+1}, n <= 10".into()))
    }));
    out.push(run("contfrac", "round_trip", || {
        let list = [0i64, 3, 7, 15, 1, 292, 1, 1, 1, 2, 1, 3];
        let got = expand(&IrrationalSpec::explicit(&list), list.len() - 1)?;
        let bad = got.iter().zip(list).filter(|(g, l)| **g != BigInt::from(*l)).count() as u64;
        Ok((list.len() as u64, bad + (got.len() != list.len()) as u64, "expand(cf:L, |L|) = L".into()))
    }));
    out.push(run("contfrac", "decimal_agrees_with_surd", || {
        let golden = Alpha::new(IrrationalSpec::golden())?;
        let (lo, _) = golden.frac_bracket(1100)?;
        let dec = DecimalApprox::truncate(&(lo + BigRational::one()), 300)?;
        let approx = Alpha::new(IrrationalSpec::DecimalApprox(dec))?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut bad = 0;
        for _ in 0..200 {
            let q = BigInt::from(rng.gen_range(1..=1_000_000u64));
            let (a, b) = (golden.dist_nearest_int(&q, 200)?, approx.dist_nearest_int(&q, 200)?);
            if a.hi < b.lo || b.hi < a.lo {
                bad += 1;
            }
        }
        Ok((200, bad, "‖qα‖ brackets overlap for q <= 10^6".into()))
    }));
    out.push(run("contfrac", "growth_classes", || {
        let g = Alpha::new(IrrationalSpec::golden())?;
        let s = Alpha::new("rule:square".parse()?)?;
        let case2 = classify_growth(g.quotients(), 30)? == GrowthClass::Case2;
        let case1 = matches!(classify_growth(s.quotients(), 6)?, GrowthClass::Case1 { .. });
        Ok((2, (!case2) as u64 + (!case1) as u64, "golden is Case 2, square growth is Case 1".into()))
    }));
}

fn diophantine_checks(out: &mut Vec<CheckResult>) {
    out.push(run("diophantine", "denjoy_koksma", || {
        let (mut cases, mut bad) = (0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst: f64 = 0.0;
        for a in surds()? {
            let q8 = a.q_u64(8)? as f64;
            let fs = [
                BVFunction::cos(),
                BVFunction::tent(),
                BVFunction::CappedInverse { threshold: q8 },
                BVFunction::CappedInverseSquare { threshold: 2.0 * q8 },
            ];
            for f in &fs {
                for _ in 0..10 {
                    let x = BigRational::new(rng.gen_range(0..1000).into(), 1000.into());
                    for r in denjoy_koksma_scan(f, &a, 16, &x)? {
                        cases += 1;
                        worst = worst.max(r.lhs / r.bound);
                        if !r.pass {
                            bad += 1;
                        }
                    }
                }
            }
        }
        Ok((cases, bad, format!("max lhs/Var = {worst:.6}")))
    }));
    out.push(run("diophantine", "inverse_sq_lower_bound", || {
        let (mut cases, mut bad) = (0, 0);
        let mut top: f64 = 0.0;
        for a in surds()? {
            for r in sum_inverse_sq_range(&a, 5..=15)? {
                let qk = r.q_k as f64;
                let qk1 = a.q_u64(r.k - 1)? as f64;
                cases += 1;
                top = top.max(r.normalized_ratio);
                if r.normalized_ratio < 2.0 * (qk / (qk + qk1)).powi(2) {
                    bad += 1;
                }
            }
        }
        Ok((cases, bad, format!("max ratio = {top:.6}")))
    }));
    out.push(run("diophantine", "block_rebracketing", || {
        let a = Alpha::new(IrrationalSpec::euler())?;
        let mut bad = 0;
        for k in 1..=6 {
            let qk = a.q_u64(k)? as f64;
            let (blocks, whole) = slice_block_sums(&a, k, qk.sqrt().max(1.0))?;
            let mut acc = ScaledInterval::zero();
            blocks.iter().for_each(|b| acc.add(b));
            if acc != whole || blocks.len() as u64 != a.quotient(k + 1)?.to_u64().unwrap_or(0) {
                bad += 1;
            }
        }
        Ok((6, bad, "slice = Σ blocks exactly".into()))
    }));
}

fn dynamics_checks(out: &mut Vec<CheckResult>) {
    out.push(run("dynamics", "cocycle_identity", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut bad = 0;
        for _ in 0..50 {
            let phi = random_trig(&mut rng, 4, 0.5);
            let (m, n, x): (u64, u64, f64) = (rng.gen_range(0..1000), rng.gen_range(0..1000), rng.gen());
            let xm = (x + crate::numeric::frac_of_product(&m.into(), a.frac_f64())).rem_euclid(1.0);
            let whole = birkhoff_direct(&phi, &a, x, m + n);
            let split = birkhoff_direct(&phi, &a, x, m) + birkhoff_direct(&phi, &a, xm, n);
            if (whole - split).abs() > 1e-12 * (1.0 + whole.abs()) + 1e-11 {
                bad += 1;
            }
        }
        Ok((50, bad, "S_{m+n}(x) = S_m(x) + S_n(x + mα)".into()))
    }));
    out.push(run("dynamics", "fourier_matches_direct", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
        let (mut bad, mut worst) = (0, 0.0f64);
        for _ in 0..100 {
            let phi = random_trig(&mut rng, 6, 0.3);
            let (x, r): (f64, u64) = (rng.gen(), rng.gen_range(1..=1000));
            let d = (birkhoff_direct(&phi, &a, x, r) - birkhoff_fourier(&phi, &a, x, r)?).abs();
            worst = worst.max(d);
            if d > 1e-9 {
                bad += 1;
            }
        }
        Ok((100, bad, format!("max difference {worst:.3e}")))
    }));
    out.push(run("dynamics", "parseval_and_domination", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
        let (mut cases, mut bad, mut worst) = (0, 0, 0.0f64);
        for _ in 0..10 {
            let phi = random_trig(&mut rng, 4, 0.2);
            for n in 4..=12 {
                let r = a.q_u64(n)?;
                let hat = rigidity_l2_hat(&a, &phi, r)?.value;
                let direct = rigidity_l2_direct(&a, &phi, r, 256)?;
                let sup = rigidity_sup(&a, &phi, r, 256)?;
                cases += 1;
                let rel = (hat - direct.value).abs() / hat;
                worst = worst.max(rel);
                if rel > 1e-3 || direct.value > hat + direct.quad_err + 1e-12 || sup.value.powi(2) < direct.value - direct.quad_err - 1e-12 {
                    bad += 1;
                }
            }
        }
        Ok((cases, bad, format!("max relative hat/direct gap {worst:.3e}")))
    }));
    out.push(run("dynamics", "ell_is_minimal", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let c0 = 0.5f64.sqrt();
        let (mut cases, mut bad) = (0, 0);
        for n in 5..=20 {
            let q = a.q_u64(n)?;
            let bound = (q as f64).powf(0.3);
            let choice = choose_ell(&a, n, c0, 0.3)?;
            let scan = (1..=bound.floor() as u64)
                .find(|&l| torus_norm(crate::numeric::frac_of_product(&BigInt::from(l * q), c0)) < 1.0 / bound);
            cases += 1;
            if scan.map_or(!choice.relaxed, |l| l != choice.ell) {
                bad += 1;
            }
        }
        Ok((cases, bad, "choose_ell agrees with a brute scan, c_0 = 1/√2".into()))
    }));
    out.push(run("dynamics", "character_scaling", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let phi = two_mode();
        let (mut cases, mut bad) = (0, 0);
        for n in 3..8 {
            let r = a.q_u64(n)?;
            let base = character_displacement_sq(&a, &phi, (1, 1), r, 256)?;
            for k in 1..=10u64 {
                cases += 1;
                if character_displacement_sq(&a, &phi, (1, 1), k * r, 256)? > (k * k) as f64 * base + 1e-9 {
                    bad += 1;
                }
            }
        }
        Ok((cases, bad, "‖f∘T^{kr} - f‖² <= k²‖f∘T^r - f‖²".into()))
    }));
}

fn counterexample_checks(out: &mut Vec<CheckResult>) {
    out.push(run("counterexample", "variation_and_cases", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let phi = counterexample::build(&a, 30)?;
        let rows = counterexample::lower_bound_table(&phi, 2, 29, 512, 0.1)?;
        let mut bad = (phi.variation_bound() >= 0.5) as u64;
        for r in &rows {
            let next_ok = r.case == DominantCase::Same || r.next_lt_double == Some(true);
            if r.sup_grid >= 0.5 || !next_ok || r.dominant_term > r.d_hat {
                bad += 1;
            }
        }
        Ok((rows.len() as u64 + 1, bad, format!("C = {:.6}, Var <= {:.6}", phi.c(), phi.variation_bound())))
    }));
}

fn mobius_checks(out: &mut Vec<CheckResult>) {
    out.push(run("mobius", "sieve_matches_trial_division", || {
        let t = sieve(10_000)?;
        let mut bad = 0;
        for n in 1..=10_000u64 {
            let (mut m, mut k, mut sign, mut square) = (n, 2u64, 1i8, false);
            while k * k <= m {
                if m % k == 0 {
                    m /= k;
                    square |= m % k == 0;
                    sign = -sign;
                }
                k += 1;
            }
            if m > 1 {
                sign = -sign;
            }
            if t.mu(n as usize) != if square { 0 } else { sign } {
                bad += 1;
            }
        }
        Ok((10_000, bad, "μ(n) for n <= 10^4".into()))
    }));
    out.push(run("mobius", "mertens_and_prefixes", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let t = sieve(1_000_000)?;
        let m = t.mertens(1_000_000);
        let long = disjointness_sum(&a, &two_mode(), (1, 1), (0.0, 0.0), 20_000, &[1000, 5000])?;
        let short = disjointness_sum(&a, &two_mode(), (1, 1), (0.0, 0.0), 5000, &[1000])?;
        let bad = (m.abs() > 1000) as u64 + (long.checkpoints[..2] != short.checkpoints[..]) as u64;
        Ok((2, bad, format!("M(10^6) = {m}")))
    }));
    out.push(run("mobius", "orbit_drift", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let phi = two_mode().shifted(0.5f64.sqrt());
        let mut orbit = Orbit::new(&a, &phi, 0.3, 0.6);
        let n = 200_000u64;
        for _ in 0..n {
            orbit.advance();
        }
        let x = (0.3 + crate::numeric::frac_of_product(&n.into(), a.frac_f64())).rem_euclid(1.0);
        let y = 0.6 + birkhoff_direct(&phi, &a, 0.3, n);
        let (dx, dy) = (torus_norm(orbit.x() - x), torus_norm(orbit.y() - y));
        Ok((1, (dx.max(dy) > 1e-9) as u64, format!("drift {:.3e}", dx.max(dy))))
    }));
}

fn flows_checks(out: &mut Vec<CheckResult>) {
    out.push(run("flows", "semigroup_and_budget", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let roof: RoofFunction = "trig:1=0.15,0+1".parse()?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
        let (mut bad, mut worst) = (0, 0.0f64);
        for _ in 0..100 {
            let x: f64 = rng.gen();
            let p = SpecialFlowPoint { x, s: rng.gen::<f64>() * roof.eval(x) };
            let (t1, t2): (f64, f64) = (rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0));
            let two = special_flow_step(&a, &roof, special_flow_step(&a, &roof, p, t1)?, t2)?;
            let one = special_flow_step(&a, &roof, p, t1 + t2)?;
            let d = flow_distance(&a, &roof, two, one);
            worst = worst.max(d);
            let t: f64 = rng.gen_range(-5.0..5.0);
            let moved = flow_distance(&a, &roof, special_flow_step(&a, &roof, p, t)?, p);
            if d > 1e-9 || moved > t.abs() + 1e-12 {
                bad += 1;
            }
        }
        Ok((100, bad, format!("max semigroup defect {worst:.3e}")))
    }));
    out.push(run("flows", "rokhlin_matches_skew_product", || {
        let a = Alpha::new(IrrationalSpec::golden())?;
        let f = two_mode();
        let rows = rokhlin_rigidity(&a, &f, &LinearFlow { c: 1.0 }, 0.5, 3, 20, 256)?;
        let mut bad = 0;
        for r in &rows {
            let sup = rigidity_sup(&a, &f, r.q_n, 256)?;
            if (r.measured - sup.grid_max).abs() > 1e-6 * sup.grid_max {
                bad += 1;
            }
        }
        Ok((rows.len() as u64, bad, "linear L with c = 1 against the sup path".into()))
    }));
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    contfrac_checks(&mut out);
    diophantine_checks(&mut out);
    dynamics_checks(&mut out);
    counterexample_checks(&mut out);
    mobius_checks(&mut out);
    flows_checks(&mut out);
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes() {
        for r in super::run_all() {
            assert!(r.pass, "{}::{} failed: {}", r.module, r.name, r.detail);
        }
    }
}
