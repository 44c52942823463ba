//! Real-valued observables on the circle given by finitely many Fourier modes.

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Certified decay of the Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `|c_q| <= a / |q|^exponent`.
    Power { a: f64, exponent: f64 },
    /// `|c_q| <= 1 / (|q| ψ(|q|))`.
    Tame { psi: Psi },
}

/// Nondecreasing `ψ` with `ψ(z) → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    /// `log(shift + z)`.
    Log { shift: f64 },
    /// `scale · log(z)²`.
    ScaledLogSquare { scale: f64 },
}

impl Psi {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Psi::Log { shift } => (shift + z).ln(),
            Psi::ScaledLogSquare { scale } => scale * z.ln().powi(2),
        }
    }
}

impl Envelope {
    /// Upper bound on `|c_q|` for `q != 0`.
    pub fn bound(&self, q: u64) -> f64 {
        let z = q as f64;
        match *self {
            Envelope::Power { a, exponent } => a / z.powf(exponent),
            Envelope::Tame { psi } => {
                let p = psi.eval(z);
                if p > 0.0 {
                    1.0 / (z * p)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Power { a, exponent } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::arg("envelope", "A must be positive"));
                }
                if !(exponent > 1.0 && exponent.is_finite()) {
                    return Err(Error::arg("envelope", "exponent must exceed 1"));
                }
            }
            Envelope::Tame { psi } => match psi {
                Psi::Log { shift } if shift >= 1.0 => {}
                Psi::ScaledLogSquare { scale } if scale > 0.0 => {}
                _ => return Err(Error::arg("envelope", "psi must be positive and nondecreasing")),
            },
        }
        Ok(())
    }
}

/// `φ(x) = c_0 + Σ_{q≠0} c_q e(qx)` with `c_{-q} = conj(c_q)`; modes not
/// stored are zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierObservable {
    mean: f64,
    /// `(q, c_q)` for `q > 0`, increasing in `q`.
    modes: Vec<(u64, Complex64)>,
    envelope: Option<Envelope>,
}

/// Entry of a coefficient file: `[q, re, im]`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FileEntry {
    Triple(i64, f64, f64),
    Named { q: i64, re: f64, #[serde(default)] im: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FileForm {
    List(Vec<FileEntry>),
    Full {
        coeffs: Vec<FileEntry>,
        #[serde(default)]
        envelope: Option<Envelope>,
    },
}

fn e(theta: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * theta).sin_cos();
    Complex64::new(c, s)
}

impl FourierObservable {
    /// Builds an observable from signed modes; `q` and `-q` must agree up to
    /// conjugation when both are given.
    pub fn new(mean: f64, modes: Vec<(i64, Complex64)>, envelope: Option<Envelope>) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::arg("c0", "must be finite"));
        }
        let mut pos: Vec<(u64, Complex64)> = Vec::with_capacity(modes.len());
        for (q, c) in modes {
            if q == 0 {
                return Err(Error::arg("coeffs", "q = 0 is the mean c0"));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::arg("coeffs", format!("c_{q} is not finite")));
            }
            let (k, v) = if q > 0 { (q as u64, c) } else { (q.unsigned_abs(), c.conj()) };
            match pos.iter().find(|m| m.0 == k) {
                Some(m) if m.1 != v => {
                    return Err(Error::arg("coeffs", format!("c_{{-{k}}} must be the conjugate of c_{k}")));
                }
                Some(_) => {}
                None => pos.push((k, v)),
            }
        }
        if pos.is_empty() {
            pos.push((1, Complex64::new(0.0, 0.0)));
        }
        pos.sort_by_key(|m| m.0);
        if let Some(env) = &envelope {
            env.validate()?;
            for &(q, c) in &pos {
                if c.norm() > env.bound(q) * (1.0 + 1e-12) {
                    return Err(Error::arg("coeffs", format!("|c_{q}| = {} exceeds the envelope", c.norm())));
                }
            }
        }
        Ok(FourierObservable {
            mean,
            modes: pos,
            envelope,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c0: f64) -> Self {
        Self::new(c0, Vec::new(), None).expect("constant observable")
    }

    /// `cos(2πx)`.
    pub fn cos() -> Self {
        Self::new(0.0, vec![(1, Complex64::new(0.5, 0.0))], None).expect("cosine")
    }

    /// Trigonometric polynomial `c0 + Σ 2Re(c_q e(qx))` from `(q, re, im)` triples.
    pub fn trig(c0: f64, modes: &[(i64, f64, f64)]) -> Result<Self> {
        Self::new(c0, modes.iter().map(|&(q, re, im)| (q, Complex64::new(re, im))).collect(), None)
    }

    /// `modes` coefficients with `|c_q| = a/q^exponent` and phases drawn from
    /// a ChaCha8 stream seeded by `seed`.
    pub fn envelope_family(a: f64, exponent: f64, seed: u64, modes: u64, c0: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::arg("modes", "must be >= 1"));
        }
        let env = Envelope::Power { a, exponent };
        env.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (1..=modes)
            .map(|q| {
                let phase: f64 = rng.gen();
                (q as i64, e(phase) * env.bound(q))
            })
            .collect();
        Self::new(c0, coeffs, Some(env))
    }

    /// Reads a JSON list of `[q, re, im]` triples (or `{"q","re","im"}`
    /// objects), optionally wrapped as `{"coeffs": [...], "envelope": {...}}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::arg("phi", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let form: FileForm = serde_json::from_str(text).map_err(|e| Error::arg("phi", format!("bad coefficient file: {e}")))?;
        let (entries, envelope) = match form {
            FileForm::List(l) => (l, None),
            FileForm::Full { coeffs, envelope } => (coeffs, envelope),
        };
        let mut mean = 0.0;
        let mut modes = Vec::new();
        for entry in entries {
            let (q, re, im) = match entry {
                FileEntry::Triple(q, re, im) => (q, re, im),
                FileEntry::Named { q, re, im } => (q, re, im),
            };
            if q == 0 {
                if im != 0.0 {
                    return Err(Error::arg("phi", "c0 must be real"));
                }
                mean = re;
            } else {
                modes.push((q, Complex64::new(re, im)));
            }
        }
        Self::new(mean, modes, envelope)
    }

    /// `c_0`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Stored modes `(q, c_q)` with `q > 0`.
    pub fn modes(&self) -> &[(u64, Complex64)] {
        &self.modes
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    /// Largest stored frequency.
    pub fn q_max(&self) -> u64 {
        self.modes.last().map_or(1, |m| m.0)
    }

    /// `c_q` for any integer `q`.
    pub fn coeff(&self, q: i64) -> Complex64 {
        if q == 0 {
            return Complex64::new(self.mean, 0.0);
        }
        let k = q.unsigned_abs();
        match self.modes.binary_search_by_key(&k, |m| m.0) {
            Ok(i) if q > 0 => self.modes[i].1,
            Ok(i) => self.modes[i].1.conj(),
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Bound on `|c_q|` used for tails: the envelope when declared, the
    /// stored coefficient otherwise.
    pub(crate) fn coeff_bound(&self, q: u64, c: Complex64) -> f64 {
        self.envelope.map_or(c.norm(), |env| env.bound(q))
    }

    /// The same observable with `c_0 = 0`.
    pub fn mean_zero(&self) -> Self {
        FourierObservable {
            mean: 0.0,
            ..self.clone()
        }
    }

    /// Adds `k` to the mean.
    pub fn shifted(&self, k: f64) -> Self {
        FourierObservable {
            mean: self.mean + k,
            ..self.clone()
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|&(q, c)| 2.0 * (c * e((q as f64 * x).fract())).re)
                .sum::<f64>()
    }

    /// Value at a 128-bit fixed-point circle point; `q · x mod 1` is exact.
    pub fn eval_fixed(&self, pos: u128) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|&(q, c)| 2.0 * (c * e(crate::numeric::fixed_to_signed(pos.wrapping_mul(q as u128)))).re)
                .sum::<f64>()
    }

    /// Partial sum over `|q| <= q_tail` and a bound on the omitted modes.
    pub fn eval_truncated(&self, x: f64, q_tail: u64) -> (f64, f64) {
        let mut v = self.mean;
        let mut tail = 0.0;
        for &(q, c) in &self.modes {
            if q <= q_tail {
                v += 2.0 * (c * e((q as f64 * x).fract())).re;
            } else {
                tail += 2.0 * self.coeff_bound(q, c);
            }
        }
        (v, tail)
    }

    /// Upper bound on the total variation: `Σ_{q>0} 8q|c_q|`.
    pub fn variation_bound(&self) -> f64 {
        self.modes.iter().map(|&(q, c)| 8.0 * q as f64 * c.norm()).sum()
    }

    /// Lipschitz constant `Σ_{q>0} 4πq|c_q|`.
    pub fn lipschitz(&self) -> f64 {
        self.modes.iter().map(|&(q, c)| 4.0 * PI * q as f64 * c.norm()).sum()
    }

    /// Bound on `sup|φ - c_0|`: `Σ 2|c_q|`.
    pub fn sup_oscillation(&self) -> f64 {
        self.modes.iter().map(|m| 2.0 * m.1.norm()).sum()
    }
}

fn num(field: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::arg(field, format!("`{s}` is not a number")))
}

impl FromStr for FourierObservable {
    type Err = Error;

    /// `trig:1=re,im;2=re,im;c0=v`, `envelope:A,exponent,seed[,modes[,c0]]`
    /// or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::arg("phi", "expected trig:, envelope: or file:"))?;
        match kind.trim() {
            "trig" => {
                let mut c0 = 0.0;
                let mut modes = Vec::new();
                for item in body.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                    let (k, v) = item
                        .split_once('=')
                        .ok_or_else(|| Error::arg("phi", format!("`{item}` is not q=re,im")))?;
                    let k = k.trim().trim_start_matches('q');
                    if k == "c0" || k == "0" {
                        c0 = num("phi", v)?;
                        continue;
                    }
                    let q: i64 = k.parse().map_err(|_| Error::arg("phi", format!("bad frequency `{k}`")))?;
                    let (re, im) = match v.split_once(',') {
                        Some((re, im)) => (num("phi", re)?, num("phi", im)?),
                        None => (num("phi", v)?, 0.0),
                    };
                    modes.push((q, Complex64::new(re, im)));
                }
                FourierObservable::new(c0, modes, None)
            }
            "envelope" => {
                let parts: Vec<&str> = body.split(',').collect();
                if !(3..=5).contains(&parts.len()) {
                    return Err(Error::arg("phi", "envelope:A,exponent,seed[,modes[,c0]]"));
                }
                let a = num("phi", parts[0])?;
                let exponent = num("phi", parts[1])?;
                let seed: u64 = parts[2].trim().parse().map_err(|_| Error::arg("phi", "seed must be an integer"))?;
                let modes: u64 = match parts.get(3) {
                    Some(m) => m.trim().parse().map_err(|_| Error::arg("phi", "modes must be an integer"))?,
                    None => 50,
                };
                let c0 = match parts.get(4) {
                    Some(c) => parse_real(c)?,
                    None => 0.0,
                };
                FourierObservable::envelope_family(a, exponent, seed, modes, c0)
            }
            "file" => FourierObservable::from_json_file(Path::new(body.trim())),
            other => Err(Error::arg("phi", format!("unknown observable kind `{other}`"))),
        }
    }
}

/// A real number, also accepting `sqrt(k)`, `1/sqrt(k)` and `a/b`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("1/sqrt(").and_then(|t| t.strip_suffix(')')) {
        return Ok(1.0 / num("value", inner)?.sqrt());
    }
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|t| t.strip_suffix(')')) {
        return Ok(num("value", inner)?.sqrt());
    }
    if let Some((a, b)) = s.split_once('/') {
        return Ok(num("value", a)? / num("value", b)?);
    }
    num("value", s)
}
