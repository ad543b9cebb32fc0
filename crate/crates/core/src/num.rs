//! Exact rational helpers and float/rational conversion.
//!
//! Polytope data lives in exact rationals; solver data lives in `f64`.
//! Conversions that feed a soundness-relevant bound always round toward
//! the side that keeps the bound valid.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type QVec = Vec<Rational>;

/// Default denominator for rationalizing cut normals.
pub const NORMAL_DENOMINATOR: i64 = 1_000_000;
/// Default denominator for rationalizing probabilities and bounds.
pub const BOUND_DENOMINATOR: i64 = 1_000_000_000;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn vec_to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Nearest rational with the given denominator.
pub fn round_to(x: f64, den: i64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize non-finite value {x}");
    let scaled = (x * den as f64).round();
    Rational::new(BigInt::from(scaled as i128), BigInt::from(den))
}

/// Smallest k/den with k/den >= x.
pub fn round_up(x: f64, den: i64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize non-finite value {x}");
    let mut k = (x * den as f64).ceil() as i128;
    // guard against the product rounding down
    while (k as f64) / (den as f64) < x {
        k += 1;
    }
    Rational::new(BigInt::from(k), BigInt::from(den))
}

/// Largest k/den with k/den <= x.
pub fn round_down(x: f64, den: i64) -> Rational {
    -round_up(-x, den)
}

/// Exact rational value of a finite double.
pub fn exact(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn format_q(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_q(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Max-abs normalization in floating point.
pub fn normalize_max_abs(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
    m
}

pub fn is_nonnegative(q: &Rational) -> bool {
    !q.is_negative()
}

/// Neumaier-compensated dot product.
pub fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let t = x * y;
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

pub fn log2_safe(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else {
        f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_directions() {
        let up = round_up(2.0f64.sqrt() * 2.0, BOUND_DENOMINATOR);
        assert!(to_f64(&up) >= 2.0 * 2.0f64.sqrt());
        let down = round_down(0.1, 7);
        assert!(to_f64(&down) <= 0.1);
        assert_eq!(round_to(0.5, 10), ratio(1, 2));
    }

    #[test]
    fn parse_and_format() {
        let q = ratio(-3, 6);
        assert_eq!(format_q(&q), "-1/2");
        assert_eq!(parse_q("-1/2").unwrap(), q);
        assert_eq!(parse_q("7").unwrap(), int(7));
        assert!(parse_q("1/0").is_none());
    }

    #[test]
    fn exact_float() {
        assert_eq!(exact(0.25), ratio(1, 4));
    }
}
