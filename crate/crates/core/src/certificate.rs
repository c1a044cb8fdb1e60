//! Feasibility certificates and their independent verification.
//!
//! A [`Certificate`] is a `lambda` and an exact assignment of every program
//! variable. [`check_certificate`] evaluates each constraint of a
//! [`LinearProgram`] with interval arithmetic, rounding the left side up and
//! the right side down, so `Verified` is a proof that the program is feasible
//! at that `lambda`. Constraints without a power of `lambda` (the bounds, and
//! `x <= y` at equal shifts) are compared exactly.
//!
//! An [`InfeasibilityWitness`] is a positive vector `u` and `theta < 1` with
//! `F(u) <= theta * u`, where `F` is the right side of the direct form with
//! each `cprev` at its largest allowed value. No `c >= 1` can then satisfy
//! `c <= F(c)`. [`check_infeasibility`] re-derives that bound from the program
//! itself with upward rounding.
//!
//! # File format
//!
//! ```text
//! # difference-inequality LP certificate
//! family NT
//! k 2
//! lambda 1.353393554687500
//! precision_bits 64
//! status verified
//! c[2] = 1.83154296875
//! cprev[2] = 1
//! Cmax = 1.83154296875
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::collatz::{classes, pow3};
use crate::decimal::{format_exact, parse_decimal, to_f64};
use crate::error::{Error, Result};
use crate::interval::{CoefficientTable, Interval};
use crate::lp::{build_lp_from_system, build_lp_nt, Family, LinearProgram, LpVar};
use crate::shift::ExponentShift;
use crate::tree::{NodeKind, System};

/// Default working precision of checks, in fractional bits.
pub const DEFAULT_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub family: Family,
    pub k: u32,
    pub lambda: BigRational,
    pub precision_bits: u32,
    pub status: CertStatus,
    pub values: BTreeMap<LpVar, BigRational>,
}

impl Certificate {
    /// `lambda = 1` with every principal and `cprev` value `1`.
    pub fn trivial_nt(k: u32) -> Certificate {
        let one = BigRational::one();
        let mut values: BTreeMap<LpVar, BigRational> =
            classes(k).map(|m| (LpVar::Principal(m), one.clone())).collect();
        values.extend(classes(k - 1).map(|m| (LpVar::Previous(m), one.clone())));
        values.insert(LpVar::Objective, one.clone());
        Certificate {
            family: Family::Nt,
            k,
            lambda: one,
            precision_bits: DEFAULT_BITS,
            status: CertStatus::Unverified,
            values,
        }
    }

    pub fn value(&self, var: LpVar) -> Option<&BigRational> {
        self.values.get(&var)
    }

    pub fn principal(&self, m: u64) -> Option<&BigRational> {
        self.values.get(&LpVar::Principal(m))
    }

    pub fn principal_values(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.values.iter().filter_map(|(v, x)| match v {
            LpVar::Principal(m) => Some((*m, x)),
            _ => None,
        })
    }

    /// Largest principal value.
    pub fn c_max(&self) -> BigRational {
        self.principal_values()
            .map(|(_, x)| x.clone())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Smallest principal value over the lifts of `b` mod `3^(k-1)`.
    pub fn lift_min(&self, b: u64) -> Option<BigRational> {
        let step = pow3(self.k - 1);
        (0..3)
            .map(|j| self.principal(b + j * step).cloned())
            .collect::<Option<Vec<_>>>()?
            .into_iter()
            .min()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# difference-inequality LP certificate\n");
        let _ = writeln!(out, "family {}", self.family);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "lambda {}", format_exact(&self.lambda));
        let _ = writeln!(out, "precision_bits {}", self.precision_bits);
        let status = match self.status {
            CertStatus::Verified => "verified",
            CertStatus::Unverified => "unverified",
        };
        let _ = writeln!(out, "status {status}");
        for (var, x) in &self.values {
            let _ = writeln!(out, "{var} = {}", format_exact(x));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Certificate> {
        let mut family = None;
        let mut k = None;
        let mut lambda = None;
        let mut bits = DEFAULT_BITS;
        let mut status = CertStatus::Unverified;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((name, value)) = line.split_once('=') {
                let var = LpVar::from_str(name).map_err(err)?;
                let x = parse_decimal(value).map_err(err)?;
                values.insert(var, x);
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err(format!("unrecognised line '{line}'")))?;
            let value = value.trim();
            match key {
                "family" => family = Some(Family::from_str(value).map_err(err)?),
                "k" => k = Some(value.parse::<u32>().map_err(|e| err(e.to_string()))?),
                "lambda" => lambda = Some(parse_decimal(value).map_err(err)?),
                "precision_bits" => {
                    bits = value.parse::<u32>().map_err(|e| err(e.to_string()))?
                }
                "status" => {
                    status = match value {
                        "verified" => CertStatus::Verified,
                        "unverified" => CertStatus::Unverified,
                        other => return Err(err(format!("unknown status '{other}'"))),
                    }
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            msg: format!("certificate has no {what}"),
        };
        Ok(Certificate {
            family: family.ok_or_else(|| missing("family"))?,
            k: k.ok_or_else(|| missing("level"))?,
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
            precision_bits: bits,
            status,
            values,
        })
    }
}

/// Outcome of checking a certificate against a program.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Verified,
    /// `id` indexes `lp.constraints`; the bounds `1 <= c[m] <= Cmax` follow
    /// as ids `constraints.len() + 2*i` (lower) and `+ 1` (upper) for the
    /// `i`-th principal variable. `slack` is negative.
    FailedConstraint { id: usize, slack: f64 },
}

impl CheckOutcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, CheckOutcome::Verified)
    }
}

fn coefficient_map(
    lambda: &BigRational,
    bits: u32,
    shifts: impl IntoIterator<Item = ExponentShift>,
) -> Result<HashMap<ExponentShift, Interval>> {
    let mut table = CoefficientTable::new(lambda, bits)?;
    let distinct: HashSet<ExponentShift> = shifts.into_iter().collect();
    let mut distinct: Vec<_> = distinct.into_iter().collect();
    distinct.sort();
    Ok(distinct.into_iter().map(|s| (s, table.get(s))).collect())
}

/// Evaluates every constraint of `lp` at the certificate's values with
/// adverse rounding.
pub fn check_certificate(lp: &LinearProgram, cert: &Certificate) -> Result<CheckOutcome> {
    if cert.family != lp.family {
        return Err(Error::FamilyMismatch {
            cert: cert.family.to_string(),
            lp: lp.family.to_string(),
        });
    }
    if cert.k != lp.k {
        return Err(Error::LevelMismatch { cert: cert.k, lp: lp.k });
    }
    let bits = cert.precision_bits.max(1);
    let mut exact: HashMap<LpVar, BigRational> = HashMap::with_capacity(lp.variables.len());
    for &var in &lp.variables {
        let x = match (cert.value(var), var) {
            (Some(x), _) => x.clone(),
            (None, LpVar::Objective) => cert.c_max(),
            (None, _) => return Err(Error::MissingVariable(var.to_string())),
        };
        exact.insert(var, x);
    }
    let vals: HashMap<LpVar, Interval> = exact
        .iter()
        .map(|(&v, x)| (v, Interval::from_rational(x, bits)))
        .collect();
    let coefs = coefficient_map(
        &cert.lambda,
        bits,
        lp.constraints
            .iter()
            .flat_map(|c| c.rhs.iter().map(move |t| t.shift - c.lhs.shift)),
    )?;
    let scale = BigInt::one() << bits;
    let slack_f64 = |s: &BigRational| to_f64(s);
    let failures: Vec<(usize, BigRational)> = lp
        .constraints
        .par_iter()
        .enumerate()
        .filter_map(|(id, c)| {
            let slack = if c.rhs.iter().all(|t| t.shift == c.lhs.shift) {
                // no lambda involved: compare exactly
                let rhs: BigRational = c.rhs.iter().map(|t| exact[&t.var].clone()).sum();
                rhs - &exact[&c.lhs.var]
            } else {
                let lhs_hi = vals[&c.lhs.var].hi_raw().clone();
                let rhs_lo: BigInt = c
                    .rhs
                    .iter()
                    .map(|t| {
                        let coef = &coefs[&(t.shift - c.lhs.shift)];
                        // all quantities are positive, so lo * lo is the lower product
                        let prod = coef.lo_raw() * vals[&t.var].lo_raw();
                        num_integer::Integer::div_floor(&prod, &scale)
                    })
                    .sum();
                BigRational::new(rhs_lo - lhs_hi, scale.clone())
            };
            (slack < BigRational::zero()).then_some((id, slack))
        })
        .collect();
    if let Some((id, s)) = failures.into_iter().min_by_key(|(id, _)| *id) {
        return Ok(CheckOutcome::FailedConstraint {
            id,
            slack: slack_f64(&s),
        });
    }
    let cmax = &exact[&LpVar::Objective];
    let one = BigRational::one();
    for (i, m) in lp.principal_classes().enumerate() {
        let v = &exact[&LpVar::Principal(m)];
        let base = lp.constraints.len() + 2 * i;
        if *v < one {
            return Ok(CheckOutcome::FailedConstraint {
                id: base,
                slack: slack_f64(&(v - &one)),
            });
        }
        if v > cmax {
            return Ok(CheckOutcome::FailedConstraint {
                id: base + 1,
                slack: slack_f64(&(cmax - v)),
            });
        }
    }
    Ok(CheckOutcome::Verified)
}

/// Checks and stamps the status of a certificate.
pub fn verify_into(lp: &LinearProgram, mut cert: Certificate) -> Result<(Certificate, CheckOutcome)> {
    let outcome = check_certificate(lp, &cert)?;
    cert.status = if outcome.is_verified() {
        CertStatus::Verified
    } else {
        CertStatus::Unverified
    };
    Ok((cert, outcome))
}

fn require_verified(lp: &LinearProgram, cert: Certificate) -> Result<Certificate> {
    match verify_into(lp, cert)? {
        (cert, CheckOutcome::Verified) => Ok(cert),
        (_, CheckOutcome::FailedConstraint { id, slack }) => {
            Err(Error::ConstraintViolated { id, slack })
        }
    }
}

/// Carries a direct-form certificate over to the tree form of `system`: each
/// auxiliary takes the smallest principal value among its m-node's children.
pub fn extend_certificate_nt_to_el(cert_nt: &Certificate, system: &System) -> Result<Certificate> {
    if cert_nt.family != Family::Nt {
        return Err(Error::FamilyMismatch {
            cert: cert_nt.family.to_string(),
            lp: Family::Nt.to_string(),
        });
    }
    if cert_nt.k != system.k {
        return Err(Error::LevelMismatch {
            cert: cert_nt.k,
            lp: system.k,
        });
    }
    let mut values: BTreeMap<LpVar, BigRational> = cert_nt
        .principal_values()
        .map(|(m, x)| (LpVar::Principal(m), x.clone()))
        .collect();
    for tree in &system.trees {
        for (i, m) in tree.m_nodes().into_iter().enumerate() {
            let min = tree
                .node(m)
                .children
                .iter()
                .filter(|&&c| tree.node(c).kind == NodeKind::P)
                .map(|&c| {
                    let class = tree.node(c).class;
                    cert_nt
                        .principal(class)
                        .cloned()
                        .ok_or_else(|| Error::MissingVariable(LpVar::Principal(class).to_string()))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .min()
                .ok_or_else(|| Error::MalformedTree(format!("m-node {m} has no children")))?;
            values.insert(
                LpVar::Aux {
                    tree: tree.root_class(),
                    index: i + 1,
                },
                min,
            );
        }
    }
    let cert = Certificate {
        family: Family::El,
        k: cert_nt.k,
        lambda: cert_nt.lambda.clone(),
        precision_bits: cert_nt.precision_bits,
        status: CertStatus::Unverified,
        values,
    };
    require_verified(
        &build_lp_from_system(system, Family::El)?,
        cert.values_with_objective(),
    )
}

/// Tripled direct-form certificate at level `k + 1`:
/// `c[m + j*3^k] = c[m]`.
pub fn lift_certificate(cert: &Certificate) -> Result<Certificate> {
    if cert.family != Family::Nt {
        return Err(Error::FamilyMismatch {
            cert: cert.family.to_string(),
            lp: Family::Nt.to_string(),
        });
    }
    let k = cert.k + 1;
    let step = pow3(cert.k);
    let mut values = BTreeMap::new();
    for m in classes(k) {
        let base = m % step;
        let x = cert
            .principal(base)
            .ok_or_else(|| Error::MissingVariable(LpVar::Principal(base).to_string()))?;
        values.insert(LpVar::Principal(m), x.clone());
    }
    let mut lifted = Certificate {
        family: Family::Nt,
        k,
        lambda: cert.lambda.clone(),
        precision_bits: cert.precision_bits,
        status: CertStatus::Unverified,
        values,
    };
    for b in classes(k - 1) {
        let min = lifted.lift_min(b).expect("all principals present");
        lifted.values.insert(LpVar::Previous(b), min);
    }
    let lifted = lifted.values_with_objective();
    require_verified(&build_lp_nt(k)?, lifted)
}

impl Certificate {
    /// Sets `Cmax` to the largest principal value.
    pub fn values_with_objective(mut self) -> Certificate {
        let cmax = self.c_max();
        self.values.insert(LpVar::Objective, cmax);
        self
    }
}

/// `F(u) <= theta * u` with `theta < 1` for the direct form at `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityWitness {
    pub k: u32,
    pub lambda: BigRational,
    pub precision_bits: u32,
    /// Indexed by principal class.
    pub u: BTreeMap<u64, BigRational>,
    /// Upper bound on the contraction ratio.
    pub theta: BigRational,
}

/// Re-derives `F(u) <= theta * u` from the constraints of `lp` with upward
/// rounding. Returns whether the witness proves infeasibility.
pub fn check_infeasibility(lp: &LinearProgram, w: &InfeasibilityWitness) -> Result<bool> {
    if lp.family != Family::Nt {
        return Err(Error::FamilyMismatch {
            cert: Family::Nt.to_string(),
            lp: lp.family.to_string(),
        });
    }
    if w.k != lp.k {
        return Err(Error::LevelMismatch { cert: w.k, lp: lp.k });
    }
    if w.theta >= BigRational::one() {
        return Ok(false);
    }
    let bits = w.precision_bits;
    let mut vals: HashMap<LpVar, Interval> = HashMap::new();
    for m in lp.principal_classes() {
        let x = w
            .u
            .get(&m)
            .ok_or_else(|| Error::MissingVariable(LpVar::Principal(m).to_string()))?;
        if *x <= BigRational::zero() {
            return Ok(false);
        }
        vals.insert(LpVar::Principal(m), Interval::from_rational(x, bits));
    }
    let coefs = coefficient_map(
        &w.lambda,
        bits,
        lp.constraints
            .iter()
            .flat_map(|c| c.rhs.iter().map(move |t| t.shift - c.lhs.shift)),
    )?;
    let scale = BigInt::one() << bits;
    let upper = |c: &crate::lp::LpConstraint, vals: &HashMap<LpVar, Interval>| -> Option<BigInt> {
        let mut sum = BigInt::zero();
        for t in &c.rhs {
            let coef = &coefs[&(t.shift - c.lhs.shift)];
            let prod = coef.hi_raw() * vals.get(&t.var)?.hi_raw();
            sum += num_integer::Integer::div_ceil(&prod, &scale);
        }
        Some(sum)
    };
    // largest value each cprev may take: the smallest of its upper bounds
    let mut prev: HashMap<LpVar, BigInt> = HashMap::new();
    for c in &lp.constraints {
        if let LpVar::Previous(_) = c.lhs.var {
            let ub = upper(c, &vals)
                .ok_or_else(|| Error::MissingVariable(format!("rhs of {}", c.lhs.var)))?;
            prev.entry(c.lhs.var)
                .and_modify(|v| {
                    if ub < *v {
                        *v = ub.clone()
                    }
                })
                .or_insert(ub);
        }
    }
    for (var, hi) in prev {
        vals.insert(var, Interval::from_raw(hi.clone(), hi, bits));
    }
    let theta = Interval::from_rational(&w.theta, bits);
    for c in &lp.constraints {
        if let LpVar::Principal(_) = c.lhs.var {
            let f_hi = upper(c, &vals)
                .ok_or_else(|| Error::MissingVariable(format!("rhs of {}", c.lhs.var)))?;
            // theta * u rounded down
            let bound = num_integer::Integer::div_floor(
                &(theta.lo_raw() * vals[&c.lhs.var].lo_raw()),
                &scale,
            );
            if f_hi > bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
