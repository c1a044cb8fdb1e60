//! Checks of the final counting bounds against the 3x+1 map itself.
//!
//! A verified certificate at level `k` and growth rate `lambda` implies, for
//! every `a = 2 mod 3` off the cycle `{1, 2}`,
//!
//! ```text
//! pi*_a(2^y a) >= Delta_1 * c[a mod 3^k] * lambda^y,   Delta_1 = 1 / (4 max c).
//! ```
//!
//! [`check_lower_bound`] compares both sides exactly for small `y`. The
//! headline check compares `pi_1(x)` with `x^0.84`, also exactly, via
//! `pi^25 >= x^21`.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rayon::prelude::*;

use crate::certificate::{CertStatus, Certificate};
use crate::collatz::{pi_a_prefix, pi_a_star, pow3};
use crate::decimal::to_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub y: u32,
    /// `2^y a`.
    pub x: u64,
    pub lhs: u64,
    pub rhs: BigRational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport {
    pub a: u64,
    pub k: u32,
    pub lambda: BigRational,
    pub delta1: BigRational,
    /// `c[a mod 3^k]`.
    pub c: BigRational,
    pub rows: Vec<BoundRow>,
}

impl BoundCheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,k,y,x,pi_star,bound,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{}",
                self.a,
                self.k,
                r.y,
                r.x,
                r.lhs,
                to_f64(&r.rhs),
                r.pass
            );
        }
        out
    }
}

/// Compares `pi*_a(2^y a)` with `Delta_1 c lambda^y` for `y = 0..=y_max`.
pub fn check_lower_bound(a: u64, cert: &Certificate, y_max: u32) -> Result<BoundCheckReport> {
    if a == 1 || a == 2 {
        return Err(Error::CycleTarget(a));
    }
    if a % 3 != 2 {
        return Err(Error::InvalidTarget(a));
    }
    if cert.status != CertStatus::Verified {
        return Err(Error::UnverifiedCertificate);
    }
    let class = a % pow3(cert.k);
    let c = cert
        .principal(class)
        .cloned()
        .ok_or_else(|| Error::MissingVariable(format!("c[{class}]")))?;
    let delta1 = (BigRational::from_integer(BigInt::from(4)) * cert.c_max()).recip();
    let rows = (0..=y_max)
        .into_par_iter()
        .map(|y| {
            let x = 1u64
                .checked_shl(y)
                .and_then(|p| p.checked_mul(a))
                .filter(|_| y < 64)
                .ok_or(Error::Overflow(a))?;
            let lhs = pi_a_star(a, x)?;
            let rhs = &delta1 * &c * num_traits::pow(cert.lambda.clone(), y as usize);
            let pass = BigRational::from_integer(BigInt::from(lhs)) >= rhs;
            Ok(BoundRow { y, x, lhs, rhs, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCheckReport {
        a,
        k: cert.k,
        lambda: cert.lambda.clone(),
        delta1,
        c,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlineRow {
    pub x: u64,
    pub count: u64,
    /// `x^0.84`.
    pub bound: f64,
    /// `count / x^0.84`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlineReport {
    pub rows: Vec<HeadlineRow>,
}

impl HeadlineReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,pi_1,x_pow_0.84,margin,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.3},{:.6},{}",
                r.x, r.count, r.bound, r.margin, r.pass
            );
        }
        out
    }
}

/// `pi_1(x) >= x^0.84` for each `x`, by direct iteration.
pub fn check_theorem61(x_values: &[u64], budget: u64) -> Result<HeadlineReport> {
    let x_max = x_values.iter().copied().max().unwrap_or(0);
    let prefix = pi_a_prefix(1, x_max, budget)?;
    let rows = x_values
        .iter()
        .map(|&x| {
            let count = prefix[x as usize];
            let bound = (x as f64).powf(0.84);
            // 0.84 = 21/25
            let pass = BigUint::from(count).pow(25) >= BigUint::from(x).pow(21);
            HeadlineRow {
                x,
                count,
                bound,
                margin: count as f64 / bound,
                pass,
            }
        })
        .collect();
    Ok(HeadlineReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collatz::DEFAULT_STEP_BUDGET;
    use crate::lp::LpVar;

    fn verified_trivial(k: u32) -> Certificate {
        let mut c = Certificate::trivial_nt(k);
        c.status = CertStatus::Verified;
        c
    }

    #[test]
    fn first_row_always_passes() {
        let r = check_lower_bound(5, &verified_trivial(2), 0).unwrap();
        assert_eq!(r.rows.len(), 1);
        // 5 and 3 -> 5
        assert_eq!(r.rows[0].lhs, 2);
        assert_eq!(r.delta1, BigRational::new(1.into(), 4.into()));
        assert!(r.passed());
    }

    #[test]
    fn rejected_targets() {
        let c = verified_trivial(2);
        assert_eq!(check_lower_bound(2, &c, 3).unwrap_err(), Error::CycleTarget(2));
        assert_eq!(check_lower_bound(1, &c, 3).unwrap_err(), Error::CycleTarget(1));
        assert_eq!(check_lower_bound(7, &c, 3).unwrap_err(), Error::InvalidTarget(7));
        assert_eq!(
            check_lower_bound(5, &Certificate::trivial_nt(2), 3).unwrap_err(),
            Error::UnverifiedCertificate
        );
    }

    #[test]
    fn lhs_column_is_nondecreasing() {
        let r = check_lower_bound(11, &verified_trivial(3), 15).unwrap();
        assert!(r.rows.windows(2).all(|w| w[0].lhs <= w[1].lhs));
        assert!(r.passed());
    }

    #[test]
    fn rhs_is_delta_c_lambda_power() {
        let mut c = verified_trivial(2);
        c.lambda = BigRational::new(3.into(), 2.into());
        c.values.insert(LpVar::Principal(8), BigRational::from_integer(2.into()));
        c.values.insert(LpVar::Objective, BigRational::from_integer(2.into()));
        let r = check_lower_bound(17, &c, 4).unwrap();
        assert_eq!(r.c, BigRational::from_integer(2.into()));
        assert_eq!(r.delta1, BigRational::new(1.into(), 8.into()));
        // 1/8 * 2 * (3/2)^4 = 81/64
        assert_eq!(r.rows[4].rhs, BigRational::new(81.into(), 64.into()));
        assert_eq!(r.rows[4].x, 17 * 16);
    }

    #[test]
    fn headline_counts() {
        let r = check_theorem61(&[10, 10_000], DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(r.rows[0].count, 10);
        assert_eq!(r.rows[1].count, 10_000);
        assert!(r.passed());
        assert!(r.to_csv().starts_with("x,pi_1,x_pow_0.84,margin,pass\n10,10,"));
    }
}
