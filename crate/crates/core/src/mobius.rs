//! The Möbius function and the averages `(1/N) Σ_{n<=N} f(T^n p) μ(n)`
//! along one orbit of the skew product.

use std::f64::consts::PI;

use serde::Serialize;

use crate::contfrac::Alpha;
use crate::dynamics::FourierObservable;
use crate::error::{Error, Result};
use crate::numeric::{fixed_from_f64, CompensatedSum};

/// `μ(1..=N)`, stored at indices `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusTable {
    values: Vec<i8>,
}

impl MobiusTable {
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `μ(n)` for `1 <= n <= N`.
    pub fn mu(&self, n: usize) -> i8 {
        assert!(n >= 1 && n < self.values.len(), "μ({n}) is outside the table");
        self.values[n]
    }

    pub fn values(&self) -> &[i8] {
        &self.values[1..]
    }

    /// Mertens function `M(n) = Σ_{k<=n} μ(k)`.
    pub fn mertens(&self, n: usize) -> i64 {
        self.values[1..=n].iter().map(|&m| m as i64).sum()
    }
}

fn alloc<T: Clone>(len: usize, fill: T) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| Error::Resource(format!("cannot allocate {len} sieve entries")))?;
    v.resize(len, fill);
    Ok(v)
}

/// Linear sieve: every composite is crossed out once, by its least prime.
pub fn sieve(n: usize) -> Result<MobiusTable> {
    if n == 0 {
        return Err(Error::arg("N", "must be >= 1"));
    }
    let mut values = alloc(n + 1, 0i8)?;
    let mut composite = alloc(n + 1, false)?;
    let mut primes: Vec<usize> = Vec::new();
    values[1] = 1;
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            values[i] = -1;
        }
        for &p in &primes {
            let m = i * p;
            if m > n {
                break;
            }
            composite[m] = true;
            if i % p == 0 {
                values[m] = 0;
                break;
            }
            values[m] = -values[i];
        }
    }
    Ok(MobiusTable { values })
}

/// Running average at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    /// Character frequencies `(a, b)` of `f = e(ax + by)`.
    pub freq: (i64, i64),
    pub checkpoints: Vec<Checkpoint>,
}

/// `y` modulo 1 as an unevaluated pair `hi + lo`, `hi ∈ [0, 1)`.
#[derive(Debug, Clone, Copy)]
struct FiberCoordinate {
    hi: f64,
    lo: f64,
}

impl FiberCoordinate {
    fn new(y: f64) -> Self {
        FiberCoordinate { hi: y.rem_euclid(1.0), lo: 0.0 }
    }

    #[inline]
    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (v - bb);
        // subtracting the integer part is exact
        self.hi = s - s.floor();
        self.lo += err;
        if self.lo.abs() > 1e-10 {
            let s = self.hi + self.lo;
            self.lo -= s - self.hi;
            self.hi = s - s.floor();
        }
    }

    /// `frac(b · y)`.
    #[inline]
    fn scaled_frac(&self, b: i64) -> f64 {
        let bf = b as f64;
        let p = bf * self.hi;
        // the fma recovers the rounding error of b·hi
        let e = bf.mul_add(self.hi, -p);
        (p - p.floor()) + e + bf * self.lo
    }

    fn value(&self) -> f64 {
        (self.hi + self.lo).rem_euclid(1.0)
    }
}

/// The orbit `T^n(x_0, y_0)` for `n = 1, 2, ...`: `x` in exact 128-bit fixed
/// point, `y` with compensated accumulation.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    phi: &'a FourierObservable,
    step: u128,
    x: u128,
    y: FiberCoordinate,
}

impl<'a> Orbit<'a> {
    pub fn new(alpha: &Alpha, phi: &'a FourierObservable, x0: f64, y0: f64) -> Self {
        Orbit {
            phi,
            step: alpha.fixed(),
            x: fixed_from_f64(x0),
            y: FiberCoordinate::new(y0),
        }
    }

    #[inline]
    pub fn advance(&mut self) {
        self.y.add(self.phi.eval_fixed(self.x));
        self.x = self.x.wrapping_add(self.step);
    }

    pub fn x(&self) -> f64 {
        crate::numeric::fixed_to_unit(self.x)
    }

    pub fn y(&self) -> f64 {
        self.y.value()
    }

    /// Phase of `e(ax + by)` at the current point, in turns.
    #[inline]
    fn phase(&self, a: i64, b: i64) -> f64 {
        let xa = crate::numeric::fixed_to_unit(self.x.wrapping_mul(a as u128));
        xa + self.y.scaled_frac(b)
    }
}

fn check_frequencies(freqs: &[(i64, i64)]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::arg("freq", "at least one frequency is required"));
    }
    if freqs.iter().any(|&(_, b)| b.unsigned_abs() >= 1 << 20) {
        return Err(Error::arg("freq", "|b| must be below 2^20"));
    }
    Ok(())
}

/// One orbit pass accumulating `e(ax_n + by_n) μ(n)` for several characters.
pub fn disjointness_sums(
    alpha: &Alpha,
    phi: &FourierObservable,
    freqs: &[(i64, i64)],
    start: (f64, f64),
    n: u64,
    checkpoints: &[u64],
) -> Result<Vec<DecayProfile>> {
    check_frequencies(freqs)?;
    if n == 0 {
        return Err(Error::arg("N", "must be >= 1"));
    }
    let mut marks: Vec<u64> = checkpoints.to_vec();
    marks.push(n);
    marks.sort_unstable();
    marks.dedup();
    if marks[0] == 0 || *marks.last().unwrap() > n {
        return Err(Error::arg("checkpoints", format!("must lie in [1, N] with N = {n}")));
    }
    let size = usize::try_from(n).map_err(|_| Error::arg("N", "too large for this platform"))?;
    let mu = sieve(size)?;
    let mut orbit = Orbit::new(alpha, phi, start.0, start.1);
    let mut sums = vec![(CompensatedSum::new(), CompensatedSum::new()); freqs.len()];
    let mut profiles: Vec<DecayProfile> = freqs
        .iter()
        .map(|&freq| DecayProfile { freq, checkpoints: Vec::with_capacity(marks.len()) })
        .collect();
    let mut next = 0;
    for k in 1..=n {
        orbit.advance();
        let m = mu.values[k as usize];
        if m != 0 {
            for (i, &(a, b)) in freqs.iter().enumerate() {
                let (s, c) = (2.0 * PI * orbit.phase(a, b)).sin_cos();
                sums[i].0.add(m as f64 * c);
                sums[i].1.add(m as f64 * s);
            }
        }
        if k == marks[next] {
            for (i, p) in profiles.iter_mut().enumerate() {
                let re = sums[i].0.value() / k as f64;
                let im = sums[i].1.value() / k as f64;
                p.checkpoints.push(Checkpoint { n: k, re, im, abs: re.hypot(im) });
            }
            next += 1;
        }
    }
    Ok(profiles)
}

/// `disjointness_sums` for a single character.
pub fn disjointness_sum(
    alpha: &Alpha,
    phi: &FourierObservable,
    freq: (i64, i64),
    start: (f64, f64),
    n: u64,
    checkpoints: &[u64],
) -> Result<DecayProfile> {
    Ok(disjointness_sums(alpha, phi, &[freq], start, n, checkpoints)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::IrrationalSpec;
    use crate::dynamics::birkhoff_direct;
    use proptest::prelude::*;

    fn trial_mu(mut n: u64) -> i8 {
        let mut sign = 1;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                sign = -sign;
            }
            p += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }

    #[test]
    fn small_values() {
        let t = sieve(10).unwrap();
        assert_eq!(t.values(), &[1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(t.mu(4), 0);
        assert!(sieve(0).is_err());
        assert_eq!(sieve(1).unwrap().values(), &[1]);
    }

    #[test]
    fn matches_trial_factorization() {
        let t = sieve(20_000).unwrap();
        for n in 1..=20_000 {
            assert_eq!(t.mu(n), trial_mu(n as u64), "n = {n}");
        }
    }

    #[test]
    fn squarefree_density() {
        let n = 1_000_000;
        let t = sieve(n).unwrap();
        let count = t.values().iter().filter(|&&m| m != 0).count() as f64;
        let predicted = n as f64 * 6.0 / (PI * PI);
        assert!((count - predicted).abs() < 0.01 * predicted);
        assert!(t.mertens(n).abs() as f64 / n as f64 <= 1e-3);
    }

    #[test]
    fn multiplicativity() {
        let t = sieve(100_000).unwrap();
        for m in 1..300usize {
            for n in 1..300usize {
                if num_integer::gcd(m, n) == 1 {
                    assert_eq!(t.mu(m * n), t.mu(m) * t.mu(n));
                }
            }
        }
    }

    fn golden() -> Alpha {
        Alpha::new(IrrationalSpec::golden()).unwrap()
    }

    fn two_mode() -> FourierObservable {
        FourierObservable::trig(0.0, &[(1, 0.25, 0.0), (2, 0.0, -0.125)]).unwrap()
    }

    #[test]
    fn constant_character_is_mertens() {
        let a = golden();
        let p = disjointness_sum(&a, &two_mode(), (0, 0), (0.1, 0.2), 10_000, &[100, 1000]).unwrap();
        let t = sieve(10_000).unwrap();
        for c in &p.checkpoints {
            assert_eq!(c.re, t.mertens(c.n as usize) as f64 / c.n as f64);
            assert_eq!(c.im, 0.0);
        }
        assert_eq!(p.checkpoints.len(), 3);
    }

    #[test]
    fn rotation_character_oracle() {
        // φ ≡ 0, b = 0: (1/N) Σ e(anα) μ(n) evaluated directly
        let a = golden();
        let n = 5000u64;
        let p = disjointness_sum(&a, &FourierObservable::zero(), (1, 0), (0.0, 0.0), n, &[]).unwrap();
        let t = sieve(n as usize).unwrap();
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let (mut re, mut im) = (0.0, 0.0);
        for k in 1..=n {
            let th = crate::numeric::frac_of_product(&k.into(), alpha);
            re += t.mu(k as usize) as f64 * (2.0 * PI * th).cos();
            im += t.mu(k as usize) as f64 * (2.0 * PI * th).sin();
        }
        let c = p.checkpoints[0];
        assert!((c.re - re / n as f64).abs() < 1e-12);
        assert!((c.im - im / n as f64).abs() < 1e-12);
    }

    #[test]
    fn orbit_tracks_the_cocycle() {
        let a = golden();
        let phi = two_mode().shifted(0.5f64.sqrt());
        let mut orbit = Orbit::new(&a, &phi, 0.3, 0.6);
        for _ in 0..100_000 {
            orbit.advance();
        }
        let x = (0.3 + crate::numeric::frac_of_product(&100_000u64.into(), a.frac_f64())).rem_euclid(1.0);
        assert!(crate::numeric::torus_norm(orbit.x() - x) < 1e-9);
        let s = birkhoff_direct(&phi, &a, 0.3, 100_000);
        assert!(crate::numeric::torus_norm(orbit.y() - (0.6 + s)) < 1e-9);
    }

    #[test]
    fn prefixes_and_repeat_runs_agree() {
        let a = golden();
        let phi = two_mode();
        let long = disjointness_sum(&a, &phi, (1, 1), (0.0, 0.0), 20_000, &[1000, 5000]).unwrap();
        let short = disjointness_sum(&a, &phi, (1, 1), (0.0, 0.0), 5000, &[1000]).unwrap();
        assert_eq!(&long.checkpoints[..2], &short.checkpoints[..]);
        let again = disjointness_sum(&a, &phi, (1, 1), (0.0, 0.0), 20_000, &[1000, 5000]).unwrap();
        assert_eq!(long, again);
        let multi = disjointness_sums(&a, &phi, &[(0, 1), (1, 1)], (0.0, 0.0), 20_000, &[1000, 5000]).unwrap();
        assert_eq!(multi[1], long);
        assert!(disjointness_sum(&a, &phi, (1, 1), (0.0, 0.0), 100, &[200]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn averages_are_bounded(a in -5i64..5, b in -5i64..5, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let alpha = golden();
            let p = disjointness_sum(&alpha, &two_mode(), (a, b), (x, y), 2000, &[1, 10, 100]).unwrap();
            for c in p.checkpoints {
                prop_assert!(c.abs <= 1.0 + 1e-12);
            }
        }
    }
}
