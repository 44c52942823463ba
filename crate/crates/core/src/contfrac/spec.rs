use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// `(a + b√d) / c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub a: BigInt,
    pub b: BigInt,
    pub d: BigInt,
    pub c: BigInt,
}

impl QuadraticSurd {
    pub fn new(a: i64, b: i64, d: i64, c: i64) -> Self {
        QuadraticSurd {
            a: a.into(),
            b: b.into(),
            d: d.into(),
            c: c.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_zero() {
            return Err(Error::InvalidSpec("surd denominator c must be nonzero".into()));
        }
        if !self.d.is_positive() {
            return Err(Error::InvalidSpec("surd radicand d must be positive".into()));
        }
        let r = self.d.sqrt();
        if &r * &r == self.d {
            return Err(Error::NotIrrational(format!("d = {} is a perfect square", self.d)));
        }
        if self.b.is_zero() {
            return Err(Error::NotIrrational("b = 0 gives a rational number".into()));
        }
        Ok(())
    }
}

/// Partial quotients given explicitly: a finite prefix or a generating rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfSource {
    /// `[a_0; a_1, ..., a_L]`, a prefix of some irrational's expansion.
    Finite(Vec<BigInt>),
    /// Euler's number, `[2; 1, 2, 1, 1, 4, 1, 1, 6, ...]`.
    Euler,
    /// `[0; 2, q_1, q_2, ...]`: each quotient equals the previous denominator,
    /// so `q_{n+1} >= q_n^2` at every index.
    SquareGrowth,
}

/// A decimal approximation `value ± error`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalApprox {
    pub digits: String,
    pub value: BigRational,
    pub error: BigRational,
}

impl DecimalApprox {
    pub fn new(digits: &str, error: BigRational) -> Result<Self> {
        let value = parse_decimal(digits)?;
        let d = DecimalApprox {
            digits: digits.to_string(),
            value,
            error,
        };
        d.validate()?;
        Ok(d)
    }

    /// Truncate a rational to `places` decimal digits after the point, with a
    /// certified error of `10^-places`.
    pub fn truncate(x: &BigRational, places: usize) -> Result<Self> {
        let scale = BigInt::from(10u32).pow(places as u32);
        let scaled = (x * BigRational::from_integer(scale.clone())).floor().to_integer();
        let neg = scaled.is_negative();
        let mag = scaled.abs().to_string();
        let padded = if mag.len() <= places {
            format!("{}{}", "0".repeat(places + 1 - mag.len()), mag)
        } else {
            mag
        };
        let (int, frac) = padded.split_at(padded.len() - places);
        let digits = format!("{}{}.{}", if neg { "-" } else { "" }, int, frac);
        DecimalApprox::new(&digits, BigRational::new(BigInt::one(), scale))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.error.is_positive() {
            return Err(Error::InvalidSpec("decimal error bound must be positive".into()));
        }
        let scale = if self.value.abs() > BigRational::one() {
            self.value.abs()
        } else {
            BigRational::one()
        };
        let limit = scale * BigRational::new(BigInt::one(), BigInt::from(10u32).pow(30));
        if self.error >= limit {
            return Err(Error::InvalidSpec(
                "decimal error bound must be below 1e-30 of the value's scale".into(),
            ));
        }
        Ok(())
    }
}

/// A representation of the rotation number α.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrrationalSpec {
    QuadraticSurd(QuadraticSurd),
    ExplicitCf(CfSource),
    DecimalApprox(DecimalApprox),
}

impl IrrationalSpec {
    /// `(1 + √5)/2`.
    pub fn golden() -> Self {
        IrrationalSpec::QuadraticSurd(QuadraticSurd::new(1, 1, 5, 2))
    }

    pub fn sqrt2() -> Self {
        IrrationalSpec::QuadraticSurd(QuadraticSurd::new(0, 1, 2, 1))
    }

    pub fn euler() -> Self {
        IrrationalSpec::ExplicitCf(CfSource::Euler)
    }

    pub fn explicit(quotients: &[i64]) -> Self {
        IrrationalSpec::ExplicitCf(CfSource::Finite(
            quotients.iter().map(|&a| BigInt::from(a)).collect(),
        ))
    }

    /// Euler's number to `places` decimals, from the factorial series.
    pub fn euler_decimal(places: usize) -> Self {
        IrrationalSpec::DecimalApprox(
            DecimalApprox::truncate(&euler_rational(places + 10), places)
                .expect("e truncation is well formed"),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IrrationalSpec::QuadraticSurd(s) => s.validate(),
            IrrationalSpec::ExplicitCf(CfSource::Finite(list)) => {
                if list.is_empty() {
                    return Err(Error::InvalidSpec("empty partial-quotient list".into()));
                }
                if let Some(i) = list.iter().skip(1).position(|a| a < &BigInt::one()) {
                    return Err(Error::InvalidSpec(format!(
                        "partial quotient a_{} must be >= 1",
                        i + 1
                    )));
                }
                Ok(())
            }
            IrrationalSpec::ExplicitCf(_) => Ok(()),
            IrrationalSpec::DecimalApprox(d) => d.validate(),
        }
    }

    /// Whether `‖qα‖` evaluation is exact (no input uncertainty).
    pub fn is_exact(&self) -> bool {
        !matches!(self, IrrationalSpec::DecimalApprox(_))
    }
}

/// `Σ_{k<=n} 1/k!` with `n` large enough that the tail is below `10^-digits`.
fn euler_rational(digits: usize) -> BigRational {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut k = 0u32;
    let bound = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits as u32 + 2));
    while term > bound {
        sum += &term;
        k += 1;
        term /= BigRational::from_integer(BigInt::from(k));
    }
    sum
}

/// Parse `[-]int[.frac]` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidSpec(format!("malformed decimal `{s}`"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{}{}", if int.is_empty() { "0" } else { int }, frac);
    let num: BigInt = all.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Parse `mantissa[e±exp]` (e.g. `1e-300`, `2.5e-40`) or `n/d` into an exact
/// rational.
pub fn parse_scientific(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return Err(Error::InvalidSpec(format!("zero denominator in `{s}`")));
        }
        return Ok(n / d);
    }
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let e: i64 = e
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("malformed exponent in `{s}`")))?;
            (m, e)
        }
        None => (s, 0),
    };
    let m = parse_decimal(mant)?;
    let p = BigRational::from_integer(BigInt::from(10u32).pow(exp.unsigned_abs() as u32));
    Ok(if exp >= 0 { m * p } else { m / p })
}

fn parse_ints(list: &str) -> Result<Vec<BigInt>> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::InvalidSpec(format!("malformed integer `{t}`")))
        })
        .collect()
}

impl FromStr for IrrationalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s {
            "golden" => IrrationalSpec::golden(),
            "sqrt2" => IrrationalSpec::sqrt2(),
            "e" | "rule:e" => IrrationalSpec::euler(),
            "rule:square" => IrrationalSpec::ExplicitCf(CfSource::SquareGrowth),
            _ => {
                if let Some(rest) = s.strip_prefix("surd:") {
                    let v = parse_ints(rest)?;
                    if v.len() != 4 {
                        return Err(Error::InvalidSpec("surd needs a,b,d,c".into()));
                    }
                    IrrationalSpec::QuadraticSurd(QuadraticSurd {
                        a: v[0].clone(),
                        b: v[1].clone(),
                        d: v[2].clone(),
                        c: v[3].clone(),
                    })
                } else if let Some(rest) = s.strip_prefix("cf:") {
                    IrrationalSpec::ExplicitCf(CfSource::Finite(parse_ints(rest)?))
                } else if let Some(rest) = s.strip_prefix("dec:") {
                    let (digits, err) = rest.split_once('@').ok_or_else(|| {
                        Error::InvalidSpec("decimal spec needs `<digits>@<err>`".into())
                    })?;
                    IrrationalSpec::DecimalApprox(DecimalApprox::new(
                        digits,
                        parse_scientific(err)?,
                    )?)
                } else {
                    return Err(Error::InvalidSpec(format!("unknown alpha spec `{s}`")));
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for IrrationalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrationalSpec::QuadraticSurd(s) => write!(f, "surd:{},{},{},{}", s.a, s.b, s.d, s.c),
            IrrationalSpec::ExplicitCf(CfSource::Finite(list)) => {
                let parts: Vec<String> = list.iter().map(|a| a.to_string()).collect();
                write!(f, "cf:{}", parts.join(","))
            }
            IrrationalSpec::ExplicitCf(CfSource::Euler) => write!(f, "rule:e"),
            IrrationalSpec::ExplicitCf(CfSource::SquareGrowth) => write!(f, "rule:square"),
            IrrationalSpec::DecimalApprox(d) => {
                write!(f, "dec:{}@{}/{}", d.digits, d.error.numer(), d.error.denom())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_and_structured() {
        assert_eq!("golden".parse::<IrrationalSpec>().unwrap(), IrrationalSpec::golden());
        assert_eq!(
            "surd:0,1,2,1".parse::<IrrationalSpec>().unwrap(),
            IrrationalSpec::sqrt2()
        );
        assert_eq!(
            "cf:0,1,1,1".parse::<IrrationalSpec>().unwrap(),
            IrrationalSpec::explicit(&[0, 1, 1, 1])
        );
        let d: IrrationalSpec = "dec:3.14159265358979323846264338327950288419716939937510@1e-50"
            .parse()
            .unwrap();
        assert!(matches!(d, IrrationalSpec::DecimalApprox(_)));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            "surd:0,1,4,1".parse::<IrrationalSpec>(),
            Err(Error::NotIrrational(_))
        ));
        assert!("cf:0,1,0,2".parse::<IrrationalSpec>().is_err());
        // error bound too coarse to be useful
        assert!("dec:3.14159@1e-5".parse::<IrrationalSpec>().is_err());
        assert!("dec:3.14@0".parse::<IrrationalSpec>().is_err());
        assert!("bogus".parse::<IrrationalSpec>().is_err());
    }

    #[test]
    fn euler_decimal_prefix() {
        let IrrationalSpec::DecimalApprox(d) = IrrationalSpec::euler_decimal(40) else {
            panic!()
        };
        assert_eq!(d.digits, "2.7182818284590452353602874713526624977572");
    }

    #[test]
    fn display_round_trips() {
        for s in ["surd:1,1,5,2", "cf:0,2,3,4", "rule:e", "rule:square"] {
            let spec: IrrationalSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }
}
