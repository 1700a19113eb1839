//! Exact rational coefficients.
//!
//! All algebraic computation in this crate is carried out over the
//! rationals with arbitrary-precision integers; floating point appears
//! only in the diagnostics module.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always in canonical form (gcd 1, denominator > 0).
pub type Rat = BigRational;

/// Shorthand for an integer rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for n/d.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer in rational literal: {0}")]
    BadInteger(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
}

/// Parses "p" or "p/q" with optional leading sign on p.
pub fn parse_rat(text: &str) -> Result<Rat, RatParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RatParseError::Empty);
    }
    let (num_str, den_str) = match text.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (text, None),
    };
    let num: BigInt = num_str
        .parse()
        .map_err(|_| RatParseError::BadInteger(num_str.to_string()))?;
    let den: BigInt = match den_str {
        Some(d) => d
            .parse()
            .map_err(|_| RatParseError::BadInteger(d.to_string()))?,
        None => BigInt::from(1),
    };
    if den.is_zero() {
        return Err(RatParseError::ZeroDenominator);
    }
    Ok(Rat::new(num, den))
}

/// Canonical text form: "p" for integers, "p/q" otherwise.
pub fn format_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy conversion to f64 (used only by diagnostics).
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Magnitudes outside the f64 range: recover the value via logs.
        if r.is_zero() {
            0.0
        } else {
            let sign = if r.is_negative() { -1.0 } else { 1.0 };
            sign * ln_abs(r).map_or(f64::INFINITY, f64::exp)
        }
    })
}

/// Natural log of |r|, exact in the integer bit lengths; None for zero.
/// Robust against magnitudes far outside the f64 range.
pub fn ln_abs(r: &Rat) -> Option<f64> {
    if r.is_zero() {
        return None;
    }
    Some(ln_big(r.numer()) - ln_big(r.denom()))
}

fn ln_big(v: &BigInt) -> f64 {
    let mag = v.magnitude();
    if mag.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = mag.bits();
    if bits <= 52 {
        return mag.to_f64().unwrap().ln();
    }
    let shift = bits - 52;
    let top = mag >> shift;
    top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Sign-aware helper used when scanning eigenvalue bounds.
pub fn rat_abs(r: &Rat) -> Rat {
    if r.is_negative() {
        -r.clone()
    } else {
        r.clone()
    }
}

/// Floor of a non-negative rational as u32 (saturating).
pub fn rat_floor_u32(r: &Rat) -> u32 {
    let f = r.floor();
    let n = f.numer();
    if n.sign() == Sign::Minus {
        0
    } else {
        n.to_u32().unwrap_or(u32::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/2", "-7", "0", "22/7", "-5/3"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
    }

    #[test]
    fn parse_normalizes() {
        assert_eq!(parse_rat("4/6").unwrap(), rat(2, 3));
        assert_eq!(parse_rat("-4/6").unwrap(), rat(-2, 3));
    }

    #[test]
    fn parse_rejects_zero_denominator() {
        assert_eq!(parse_rat("1/0"), Err(RatParseError::ZeroDenominator));
    }

    #[test]
    fn ln_abs_handles_large_values() {
        // 300! overflows f64; ln must still be finite and accurate.
        let mut f = Rat::from_integer(BigInt::from(1));
        for k in 2..=300i64 {
            f *= rat_int(k);
        }
        let expected: f64 = (2..=300).map(|k| (k as f64).ln()).sum();
        let got = ln_abs(&f).unwrap();
        assert!((got - expected).abs() < 1e-6 * expected.abs());
    }
}
