//! Exact conversion between rationals and decimal strings.
//!
//! Certificates store every number as text. Dyadic rationals have terminating
//! decimal expansions, so they are written out in full and read back exactly;
//! anything else is written as `num/den`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Parses `[-]digits[.digits][e[-]digits]` or `num/den` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("'{s}' is not a decimal number");
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Exact decimal text if the expansion terminates, otherwise `num/den`.
pub fn format_exact(r: &BigRational) -> String {
    let den = r.denom();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut d, mut twos, mut fives) = (den.clone(), 0usize, 0usize);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r.numer() * num_traits::pow(BigInt::from(10), places) / den;
    let neg = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if places == 0 {
        out.push_str(&digits);
        return out;
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    out.push_str(int);
    out.push('.');
    out.push_str(frac);
    out
}

/// Nearest multiple of `2^-frac_bits` to a finite `x`.
pub fn dyadic_from_f64(x: f64, frac_bits: u32) -> BigRational {
    let scaled = (x * 2f64.powi(frac_bits as i32)).round();
    let num = BigInt::from(scaled as i128);
    BigRational::new(num, BigInt::one() << frac_bits)
}

/// Lossy conversion for reporting.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
