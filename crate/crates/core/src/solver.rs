//! Feasibility of the direct form by power iteration, and the search for the
//! largest feasible `lambda`.
//!
//! With each `cprev[b]` at its largest allowed value (the minimum over the
//! three lifts), the direct form reads `c <= F(c)` where
//!
//! ```text
//! F(c)[m] = lambda^-2 c[4m] + lambda^(alpha-2) min lifts((4m-2)/3)   m = 2 mod 9
//!         = lambda^-2 c[4m]                                          m = 5 mod 9
//!         = lambda^-2 c[4m] + lambda^(alpha-1) min lifts((2m-1)/3)   m = 8 mod 9
//! ```
//!
//! `F` is monotone and positively homogeneous. The damped iteration
//! `c <- (c + F(c)) / 2`, normalised to `min c = 1`, runs in `f64` from the
//! all-ones vector; every iterate is tested rigorously in fixed point:
//!
//! * `F(c) >= c` with downward rounding proves feasibility;
//! * `F(u) <= theta u` with `theta < 1` and upward rounding proves
//!   infeasibility.

use std::fs;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
#[cfg(test)]
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::certificate::{
    check_certificate, check_infeasibility, CertStatus, Certificate, CheckOutcome,
    InfeasibilityWitness,
};
use crate::collatz::{class_count, classes, classify_branch, Branch, ResidueClass};
use crate::decimal::{dyadic_from_f64, format_exact, parse_decimal, to_f64};
use crate::error::{Error, Result};
use crate::interval::{CoefficientTable, Interval};
use crate::lp::{build_lp_nt, Family, LpVar};
use crate::shift::{ExponentShift, ALPHA_F64};

const PAR_THRESHOLD: usize = 1 << 12;

/// Index form of the operator at level `k`; class `m` has index `(m-2)/3`.
#[derive(Debug, Clone)]
pub struct Operator {
    k: u32,
    succ: Vec<u32>,
    branch: Vec<Branch>,
    lifts: Vec<[u32; 3]>,
}

fn idx(m: u64) -> u32 {
    ((m - 2) / 3) as u32
}

impl Operator {
    pub fn new(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidLevel(k, 2));
        }
        let n = class_count(k);
        let mut op = Operator {
            k,
            succ: Vec::with_capacity(n),
            branch: Vec::with_capacity(n),
            lifts: Vec::with_capacity(n),
        };
        for m in classes(k) {
            let info = classify_branch(ResidueClass::new(k, m)?)?;
            op.succ.push(idx(info.successor));
            op.branch.push(info.branch);
            op.lifts.push(info.lift.map_or([0; 3], |l| l.members.map(idx)));
        }
        Ok(op)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    fn min_of<T: Ord + Clone>(&self, i: usize, c: &[T]) -> T {
        let [a, b, d] = self.lifts[i];
        c[a as usize]
            .clone()
            .min(c[b as usize].clone())
            .min(c[d as usize].clone())
    }

    fn apply_one(&self, i: usize, c: &[f64], coef: &[f64; 3]) -> f64 {
        let base = coef[0] * c[self.succ[i] as usize];
        let [a, b, d] = self.lifts[i];
        let min = || c[a as usize].min(c[b as usize]).min(c[d as usize]);
        match self.branch[i] {
            Branch::D1 => base + coef[1] * min(),
            Branch::D2 => base,
            Branch::D3 => base + coef[2] * min(),
        }
    }

    /// `F(c)` with coefficients `[lambda^-2, lambda^(alpha-2), lambda^(alpha-1)]`.
    pub fn apply(&self, c: &[f64], coef: &[f64; 3]) -> Vec<f64> {
        if self.len() >= PAR_THRESHOLD {
            (0..self.len())
                .into_par_iter()
                .map(|i| self.apply_one(i, c, coef))
                .collect()
        } else {
            (0..self.len()).map(|i| self.apply_one(i, c, coef)).collect()
        }
    }

    /// `F(c)` on fixed-point values `c * 2^-bits` with coefficients of the
    /// same scale, each product rounded down (`up = false`) or up.
    pub fn apply_fixed(&self, c: &[BigInt], coef: &[BigInt; 3], bits: u32, up: bool) -> Vec<BigInt> {
        let round = |x: BigInt| -> BigInt {
            if up {
                (x + ((BigInt::one() << bits) - 1)) >> bits
            } else {
                x >> bits
            }
        };
        let one = |i: usize| {
            let base = round(&coef[0] * &c[self.succ[i] as usize]);
            match self.branch[i] {
                Branch::D1 => base + round(&coef[1] * self.min_of(i, c)),
                Branch::D2 => base,
                Branch::D3 => base + round(&coef[2] * self.min_of(i, c)),
            }
        };
        if self.len() >= PAR_THRESHOLD {
            (0..self.len()).into_par_iter().map(one).collect()
        } else {
            (0..self.len()).map(one).collect()
        }
    }
}

/// Float coefficients for the iteration.
pub fn float_coefficients(lambda: f64) -> [f64; 3] {
    [
        lambda.powf(-2.0),
        lambda.powf(ALPHA_F64 - 2.0),
        lambda.powf(ALPHA_F64 - 1.0),
    ]
}

/// A positive vector indexed by the classes of `[3^k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorState {
    pub k: u32,
    pub c: Vec<f64>,
}

/// One application of `F` at `lambda`.
pub fn eval_operator(state: &OperatorState, lambda: f64) -> Result<OperatorState> {
    if !(1.0..=2.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda.to_string()));
    }
    let op = Operator::new(state.k)?;
    if state.c.len() != op.len() {
        return Err(Error::InvalidLevel(state.k, 2));
    }
    Ok(OperatorState {
        k: state.k,
        c: op.apply(&state.c, &float_coefficients(lambda)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterConfig {
    /// Relative spread of `F(c)/c` below which the iteration is considered
    /// converged without a decision.
    pub tol: f64,
    pub max_iter: u64,
    /// Fractional bits of the fixed-point checks.
    pub bits: u32,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iter: 20_000,
            bits: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Certificate),
    Infeasible(InfeasibilityWitness),
    Undetermined {
        iterations: u64,
        ratio_lo: f64,
        ratio_hi: f64,
    },
}

struct FixedCoefs {
    lo: [BigInt; 3],
    hi: [BigInt; 3],
}

fn fixed_coefficients(lambda: &BigRational, bits: u32) -> Result<FixedCoefs> {
    let mut table = CoefficientTable::new(lambda, bits)?;
    let shifts = [
        ExponentShift::SUCCESSOR,
        ExponentShift::D1_MIN,
        ExponentShift::D3_MIN,
    ];
    let vals: Vec<Interval> = shifts.iter().map(|&s| table.get(s)).collect();
    Ok(FixedCoefs {
        lo: [0, 1, 2].map(|i| vals[i].lo_raw().clone()),
        hi: [0, 1, 2].map(|i| vals[i].hi_raw().clone()),
    })
}

fn quantise(c: &[f64], qbits: u32) -> Vec<BigRational> {
    c.iter().map(|&x| dyadic_from_f64(x, qbits)).collect()
}

fn to_fixed(q: &[BigRational], qbits: u32, bits: u32) -> Vec<BigInt> {
    // q has denominator dividing 2^qbits, qbits <= bits
    q.iter()
        .map(|r| ((r.numer() << qbits) / r.denom()) << (bits - qbits))
        .collect()
}

fn quant_bits(bits: u32) -> u32 {
    (bits.saturating_sub(24)).clamp(16, 50)
}

fn feasible_certificate(
    op: &Operator,
    lambda: &BigRational,
    c: &[f64],
    coefs: &FixedCoefs,
    bits: u32,
) -> Option<Certificate> {
    let qbits = quant_bits(bits);
    let q = quantise(c, qbits);
    let fixed = to_fixed(&q, qbits, bits);
    let f = op.apply_fixed(&fixed, &coefs.lo, bits, false);
    if f.iter().zip(&fixed).any(|(fi, ci)| fi < ci) || q.iter().any(|x| *x < BigRational::one()) {
        return None;
    }
    let mut cert = Certificate {
        family: Family::Nt,
        k: op.k,
        lambda: lambda.clone(),
        precision_bits: bits,
        status: CertStatus::Verified,
        values: classes(op.k)
            .zip(q)
            .map(|(m, x)| (LpVar::Principal(m), x))
            .collect(),
    };
    for b in classes(op.k - 1) {
        let min = cert.lift_min(b).expect("all principals present");
        cert.values.insert(LpVar::Previous(b), min);
    }
    Some(cert.values_with_objective())
}

fn infeasibility_witness(
    op: &Operator,
    lambda: &BigRational,
    c: &[f64],
    coefs: &FixedCoefs,
    bits: u32,
) -> Option<InfeasibilityWitness> {
    let qbits = quant_bits(bits);
    let q = quantise(c, qbits);
    let fixed = to_fixed(&q, qbits, bits);
    if fixed.iter().any(|x| x <= &BigInt::zero()) {
        return None;
    }
    let f = op.apply_fixed(&fixed, &coefs.hi, bits, true);
    // theta = max ceil(F(u)_i / u_i) in units of 2^-bits
    let theta_raw = f
        .iter()
        .zip(&fixed)
        .map(|(fi, ui)| num_integer::Integer::div_ceil(&(fi << bits), ui))
        .max()?;
    if theta_raw >= BigInt::one() << bits {
        return None;
    }
    Some(InfeasibilityWitness {
        k: op.k,
        lambda: lambda.clone(),
        precision_bits: bits,
        u: classes(op.k).zip(q).collect(),
        theta: BigRational::new(theta_raw, BigInt::one() << bits),
    })
}

/// Iterates from the all-ones vector until one side is certified.
pub fn power_iterate(k: u32, lambda: &BigRational, cfg: &IterConfig) -> Result<Feasibility> {
    let op = Operator::new(k)?;
    let coefs = fixed_coefficients(lambda, cfg.bits)?;
    let fcoef = float_coefficients(to_f64(lambda));
    let mut c = vec![1.0f64; op.len()];
    let (mut ratio_lo, mut ratio_hi) = (f64::NAN, f64::NAN);
    let mut next_attempt = 0u64;
    let mut gap = 1u64;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let f = op.apply(&c, &fcoef);
        let (lo, hi) = f
            .iter()
            .zip(&c)
            .map(|(fi, ci)| fi / ci)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        (ratio_lo, ratio_hi) = (lo, hi);
        if (lo >= 1.0 || hi < 1.0) && it >= next_attempt {
            if lo >= 1.0 {
                if let Some(cert) = feasible_certificate(&op, lambda, &c, &coefs, cfg.bits) {
                    return Ok(Feasibility::Feasible(cert));
                }
            } else if let Some(w) = infeasibility_witness(&op, lambda, &c, &coefs, cfg.bits) {
                return Ok(Feasibility::Infeasible(w));
            }
            // the fixed-point check can lag the float one; back off
            next_attempt = it + gap;
            gap = (gap * 2).min(64);
        }
        if hi - lo <= cfg.tol * hi && lo < 1.0 && hi >= 1.0 {
            break;
        }
        let mut next: Vec<f64> = c.iter().zip(&f).map(|(a, b)| 0.5 * (a + b)).collect();
        let min = next.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min.is_finite() && min > 0.0) {
            break;
        }
        next.iter_mut().for_each(|x| *x /= min);
        c = next;
    }
    Ok(Feasibility::Undetermined {
        iterations,
        ratio_lo,
        ratio_hi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Stop once `lambda_hi - lambda_lo <= tol`.
    pub tol: f64,
    pub iter: IterConfig,
    /// Precision cap for escalation on undetermined outcomes.
    pub max_bits: u32,
    /// File holding the current bracket, rewritten after every step.
    pub checkpoint: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            iter: IterConfig::default(),
            max_bits: 512,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSearchResult {
    pub k: u32,
    pub lambda_lo: BigRational,
    pub lambda_hi: BigRational,
    /// `log2(lambda_lo)`.
    pub gamma: f64,
    pub c_max: f64,
    /// Mean of the principal values.
    pub cbar_k: f64,
    /// Mean of the lift minima.
    pub cbar_prev: f64,
    pub difference: f64,
    /// Largest relative slack `(F(c) - c) / c` of the branch constraints.
    pub max_relative_slack: f64,
    pub certificate: Certificate,
    pub witness: InfeasibilityWitness,
    pub steps: u32,
}

/// Decides one `lambda`, raising precision and iteration limits on
/// undetermined outcomes.
pub fn decide(k: u32, lambda: &BigRational, cfg: &SearchConfig) -> Result<Feasibility> {
    let mut iter = cfg.iter;
    loop {
        match power_iterate(k, lambda, &iter)? {
            Feasibility::Undetermined { .. } => {
                if iter.bits * 2 > cfg.max_bits {
                    return Err(Error::PrecisionExhausted(cfg.max_bits));
                }
                iter.bits *= 2;
                iter.max_iter *= 2;
            }
            decided => return Ok(decided),
        }
    }
}

fn read_checkpoint(path: &PathBuf, k: u32) -> Option<(BigRational, BigRational)> {
    let text = fs::read_to_string(path).ok()?;
    let mut fields = std::collections::HashMap::new();
    for line in text.lines() {
        if let Some((key, v)) = line.split_once(char::is_whitespace) {
            fields.insert(key.to_string(), v.trim().to_string());
        }
    }
    if fields.get("k")?.parse::<u32>().ok()? != k {
        return None;
    }
    Some((
        parse_decimal(fields.get("lo")?).ok()?,
        parse_decimal(fields.get("hi")?).ok()?,
    ))
}

fn write_checkpoint(path: &PathBuf, k: u32, lo: &BigRational, hi: &BigRational) -> Result<()> {
    let text = format!("k {k}\nlo {}\nhi {}\n", format_exact(lo), format_exact(hi));
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| Error::Parse {
            line: 0,
            msg: format!("cannot write checkpoint {}: {e}", path.display()),
        })
}

/// Bisection on `[1, 2]` with certified endpoints.
pub fn search_lambda(k: u32, cfg: &SearchConfig) -> Result<LambdaSearchResult> {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let start = cfg
        .checkpoint
        .as_ref()
        .and_then(|p| read_checkpoint(p, k))
        .filter(|(lo, hi)| &one <= lo && lo < hi && hi <= &two);
    let (mut lo, mut hi) = start.clone().unwrap_or((one.clone(), two.clone()));
    let mut cert = match decide(k, &lo, cfg)? {
        Feasibility::Feasible(c) => c,
        _ if start.is_some() => return search_lambda(k, &SearchConfig { checkpoint: None, ..cfg.clone() }),
        _ => return Err(Error::LambdaOutOfRange(format!("{} is not feasible", format_exact(&lo)))),
    };
    let mut witness = match decide(k, &hi, cfg)? {
        Feasibility::Infeasible(w) => w,
        _ if start.is_some() => return search_lambda(k, &SearchConfig { checkpoint: None, ..cfg.clone() }),
        _ => return Err(Error::LambdaOutOfRange(format!("{} is not infeasible", format_exact(&hi)))),
    };
    let tol = BigRational::from_float(cfg.tol).unwrap_or_else(|| BigRational::new(1.into(), BigInt::from(10u64.pow(7))));
    let mut steps = 0;
    while &hi - &lo > tol {
        let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
        match decide(k, &mid, cfg)? {
            Feasibility::Feasible(c) => {
                lo = mid;
                cert = c;
            }
            Feasibility::Infeasible(w) => {
                hi = mid;
                witness = w;
            }
            Feasibility::Undetermined { .. } => unreachable!("decide never returns undetermined"),
        }
        steps += 1;
        if let Some(path) = &cfg.checkpoint {
            write_checkpoint(path, k, &lo, &hi)?;
        }
    }
    // independent re-checks on the program itself
    let lp = build_lp_nt(k)?;
    if let CheckOutcome::FailedConstraint { id, slack } = check_certificate(&lp, &cert)? {
        return Err(Error::ConstraintViolated { id, slack });
    }
    if !check_infeasibility(&lp, &witness)? {
        return Err(Error::ConstraintViolated {
            id: usize::MAX,
            slack: to_f64(&(witness.theta.clone() - BigRational::one())),
        });
    }
    Ok(summarise(k, lo, hi, cert, witness, steps))
}

fn summarise(
    k: u32,
    lo: BigRational,
    hi: BigRational,
    cert: Certificate,
    witness: InfeasibilityWitness,
    steps: u32,
) -> LambdaSearchResult {
    let principal: Vec<f64> = cert.principal_values().map(|(_, x)| to_f64(x)).collect();
    let prev: Vec<f64> = cert
        .values
        .iter()
        .filter(|(v, _)| matches!(v, LpVar::Previous(_)))
        .map(|(_, x)| to_f64(x))
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let cbar_k = mean(&principal);
    let cbar_prev = mean(&prev);
    let op = Operator::new(k).expect("valid level");
    let f = op.apply(&principal, &float_coefficients(to_f64(&lo)));
    let max_relative_slack = f
        .iter()
        .zip(&principal)
        .map(|(fi, ci)| (fi - ci) / ci)
        .fold(0.0f64, f64::max);
    LambdaSearchResult {
        k,
        gamma: to_f64(&lo).log2(),
        c_max: to_f64(&cert.c_max()),
        cbar_k,
        cbar_prev,
        difference: cbar_k - cbar_prev,
        max_relative_slack,
        lambda_lo: lo,
        lambda_hi: hi,
        certificate: cert,
        witness,
        steps,
    }
}

/// One row of the growth-rate table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub k: u32,
    pub gamma: f64,
    pub lambda: f64,
    pub c_max: f64,
    pub cbar_k: f64,
    pub cbar_prev: f64,
    pub difference: f64,
    /// `cbar_k <= lambda^-2 cbar_k + (lambda^(alpha-1) + lambda^(alpha-2)) cbar_prev / 3`,
    /// checked with outward rounding.
    pub summed_inequality: bool,
}

pub const TABLE2_HEADER: &str = "k,gamma_k,lambda_k,C_k_max,cbar_k_k,cbar_k-1_k,difference";

impl Table2Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.7},{:.7},{:.7},{:.7},{:.7},{:.7}",
            self.k, self.gamma, self.lambda, self.c_max, self.cbar_k, self.cbar_prev, self.difference
        )
    }
}

/// Averages of the certificate, exactly.
fn exact_means(cert: &Certificate) -> (BigRational, BigRational) {
    let mut sums = (BigRational::zero(), BigRational::zero());
    let mut counts = (0i64, 0i64);
    for (v, x) in &cert.values {
        match v {
            LpVar::Principal(_) => {
                sums.0 += x;
                counts.0 += 1;
            }
            LpVar::Previous(_) => {
                sums.1 += x;
                counts.1 += 1;
            }
            _ => {}
        }
    }
    (
        sums.0 / BigRational::from_integer(counts.0.max(1).into()),
        sums.1 / BigRational::from_integer(counts.1.max(1).into()),
    )
}

/// Whether the averaged inequality holds on a direct-form certificate.
pub fn summed_inequality_holds(cert: &Certificate) -> Result<bool> {
    let bits = cert.precision_bits.max(64);
    let mut table = CoefficientTable::new(&cert.lambda, bits)?;
    let (ck, cp) = exact_means(cert);
    let ck_i = Interval::from_rational(&ck, bits);
    let cp_i = Interval::from_rational(&cp, bits);
    let rhs = table
        .get(ExponentShift::SUCCESSOR)
        .mul(&ck_i)
        .add(
            &table
                .get(ExponentShift::D3_MIN)
                .add(&table.get(ExponentShift::D1_MIN))
                .mul(&cp_i)
                .div_int(3),
        );
    Ok(ck_i.hi_raw() <= rhs.lo_raw())
}

pub fn table2_row(result: &LambdaSearchResult) -> Result<Table2Row> {
    Ok(Table2Row {
        k: result.k,
        gamma: result.gamma,
        lambda: to_f64(&result.lambda_lo),
        c_max: result.c_max,
        cbar_k: result.cbar_k,
        cbar_prev: result.cbar_prev,
        difference: result.difference,
        summed_inequality: summed_inequality_holds(&result.certificate)?,
    })
}
