//! Exact rational helpers for closed-form success probabilities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// `base^exp` for a non-negative or negative integer exponent.
pub fn pow(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Stirling number of the second kind `S(n, k)`.
pub fn stirling2(n: u64, k: u64) -> BigInt {
    if n == 0 && k == 0 {
        return BigInt::one();
    }
    if n == 0 || k == 0 || k > n {
        return BigInt::zero();
    }
    let mut row = vec![BigInt::zero(); k as usize + 1];
    row[0] = BigInt::one();
    for i in 1..=n {
        for j in (1..=k.min(i) as usize).rev() {
            row[j] = BigInt::from(j) * &row[j] + &row[j - 1];
        }
        row[0] = BigInt::zero();
    }
    row[k as usize].clone()
}

/// Best rational approximation with denominator ≤ `max_den` that matches `x`
/// to within `tol`, found by continued-fraction expansion.
pub fn recognize(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as u128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x.abs()).abs() <= tol {
            let n = h1 as i64;
            return Some((if neg { -n } else { n }, k1 as u64));
        }
        let frac = v - a as f64;
        if frac < 1e-300 {
            break;
        }
        v = 1.0 / frac;
    }
    None
}

/// `"p/q"` for a recognisable rational, otherwise `None`.
pub fn rational_string(x: f64) -> Option<String> {
    let tol = 1e-14_f64.max(x.abs() * 1e-12);
    recognize(x, 1_000_000, tol).map(|(n, d)| {
        if d == 1 {
            n.to_string()
        } else {
            format!("{n}/{d}")
        }
    })
}

/// Parses `"p/q"` or an integer.
pub fn parse(s: &str) -> crate::Result<Rational> {
    let bad = || crate::Error::Parse(format!("not a rational number: {s:?}"));
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

pub fn display(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.is_negative() {
        format!("-{}/{}", r.numer().abs(), r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
