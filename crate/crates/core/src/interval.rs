//! Fixed-point interval arithmetic with outward rounding.
//!
//! An [`Interval`] holds `[lo, hi] * 2^-bits` with big-integer endpoints, so
//! every operation rounds its lower end down and its upper end up and the
//! exact result is always enclosed. On top of that sit rigorous enclosures of
//! `exp` and `ln` (Taylor and atanh series with explicit tail bounds), which
//! give the LP coefficients `lambda^(p + q*alpha)` at any requested precision.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::shift::ExponentShift;

/// Extra bits carried through transcendental evaluations.
const GUARD_BITS: u32 = 64;

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits
}

/// Closed interval `[lo, hi] * 2^-bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

impl Interval {
    pub fn from_raw(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi, bits }
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        let v = BigInt::from(n) << bits;
        Self {
            lo: v.clone(),
            hi: v,
            bits,
        }
    }

    pub fn one(bits: u32) -> Self {
        Self::from_int(1, bits)
    }

    pub fn zero(bits: u32) -> Self {
        Self::from_int(0, bits)
    }

    /// Tightest enclosure of `num/den` (`den > 0`).
    pub fn from_ratio(num: &BigInt, den: &BigInt, bits: u32) -> Self {
        let scaled = num << bits;
        Self {
            lo: floor_div(&scaled, den),
            hi: ceil_div(&scaled, den),
            bits,
        }
    }

    pub fn from_rational(r: &BigRational, bits: u32) -> Self {
        Self::from_ratio(r.numer(), r.denom(), bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo_raw(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi_raw(&self) -> &BigInt {
        &self.hi
    }

    pub fn lo_rational(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.bits))
    }

    pub fn hi_rational(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.bits))
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        &self.lo_rational() <= r && r <= &self.hi_rational()
    }

    /// Width `hi - lo` in units of `2^-bits`.
    pub fn width_raw(&self) -> BigInt {
        &self.hi - &self.lo
    }

    fn check_bits(&self, other: &Interval) {
        assert_eq!(self.bits, other.bits, "interval precision mismatch");
    }

    /// Re-expresses at another precision, rounding outward.
    pub fn rescale(&self, bits: u32) -> Interval {
        use std::cmp::Ordering::*;
        match bits.cmp(&self.bits) {
            Equal => self.clone(),
            Greater => Interval {
                lo: &self.lo << (bits - self.bits),
                hi: &self.hi << (bits - self.bits),
                bits,
            },
            Less => {
                let d = pow2(self.bits - bits);
                Interval {
                    lo: floor_div(&self.lo, &d),
                    hi: ceil_div(&self.hi, &d),
                    bits,
                }
            }
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            bits: self.bits,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        Interval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
            bits: self.bits,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
            bits: self.bits,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        let d = pow2(self.bits);
        if !self.lo.is_negative() && !other.lo.is_negative() {
            return Interval {
                lo: floor_div(&(&self.lo * &other.lo), &d),
                hi: ceil_div(&(&self.hi * &other.hi), &d),
                bits: self.bits,
            };
        }
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let min = products.iter().min().expect("four products");
        let max = products.iter().max().expect("four products");
        Interval {
            lo: floor_div(min, &d),
            hi: ceil_div(max, &d),
            bits: self.bits,
        }
    }

    /// Division by an interval that is strictly positive.
    pub fn div(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        assert!(other.lo.is_positive(), "divisor must be strictly positive");
        let lo_num = &self.lo << self.bits;
        let hi_num = &self.hi << self.bits;
        // dividing by the larger divisor shrinks magnitude
        let lo_den = if self.lo.is_negative() { &other.lo } else { &other.hi };
        let hi_den = if self.hi.is_negative() { &other.hi } else { &other.lo };
        Interval {
            lo: floor_div(&lo_num, lo_den),
            hi: ceil_div(&hi_num, hi_den),
            bits: self.bits,
        }
    }

    pub fn mul_int(&self, n: i64) -> Interval {
        let n = BigInt::from(n);
        let (a, b) = (&self.lo * &n, &self.hi * &n);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Interval {
            lo,
            hi,
            bits: self.bits,
        }
    }

    pub fn div_int(&self, n: u64) -> Interval {
        assert!(n > 0);
        let n = BigInt::from(n);
        Interval {
            lo: floor_div(&self.lo, &n),
            hi: ceil_div(&self.hi, &n),
            bits: self.bits,
        }
    }

    /// Hull of two intervals.
    pub fn hull(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            bits: self.bits,
        }
    }

    /// Pointwise minimum, monotone in both arguments.
    pub fn min(&self, other: &Interval) -> Interval {
        self.check_bits(other);
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().min(other.hi.clone()),
            bits: self.bits,
        }
    }

    fn abs_max(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    /// Enclosure of `exp` over the interval.
    pub fn exp(&self) -> Interval {
        let lo = exp_point(&self.lo, self.bits);
        let hi = exp_point(&self.hi, self.bits);
        Interval {
            lo: lo.lo,
            hi: hi.hi,
            bits: self.bits,
        }
    }

    /// Enclosure of `ln` over an interval contained in `[1, 2]`.
    pub fn ln_unit(&self) -> Interval {
        let one = pow2(self.bits);
        assert!(self.lo >= one && self.hi <= &one << 1, "ln_unit needs [1, 2]");
        let lo = ln_point(&self.lo, self.bits);
        let hi = ln_point(&self.hi, self.bits);
        Interval {
            lo: lo.lo,
            hi: hi.hi,
            bits: self.bits,
        }
    }
}

/// `exp(v * 2^-bits)` enclosed at precision `bits`.
fn exp_point(v: &BigInt, bits: u32) -> Interval {
    if v.is_zero() {
        return Interval::one(bits);
    }
    // reduce to |r| < 1/2, r = v / 2^s, then square s times
    let mag = v.abs().bits() as i64;
    let s = (mag - bits as i64 + 1).max(0) as u32;
    let work = bits + s + GUARD_BITS;
    let r_raw = v << (work - bits - s);
    let r = Interval::from_raw(r_raw.clone(), r_raw, work);
    let mut sum = Interval::one(work);
    let mut term = Interval::one(work);
    let mut n = 1u64;
    loop {
        term = term.mul(&r).div_int(n);
        sum = sum.add(&term);
        n += 1;
        if term.abs_max() <= BigInt::one() {
            break;
        }
    }
    // remaining terms shrink by at least 1/2 each
    let tail = term.abs_max() * 2 + 2;
    sum.lo -= &tail;
    sum.hi += &tail;
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    sum.rescale(bits)
}

/// `ln(x * 2^-bits)` for `x * 2^-bits` in `[1, 2]`, enclosed at `bits`.
fn ln_point(x: &BigInt, bits: u32) -> Interval {
    let one = pow2(bits);
    if *x == one {
        return Interval::zero(bits);
    }
    let work = bits + GUARD_BITS;
    let xw = x << GUARD_BITS;
    let onew = pow2(work);
    let t = Interval::from_ratio(&(&xw - &onew), &(&xw + &onew), 2 * work).rescale(work);
    atanh_series(&t).mul_int(2).rescale(bits)
}

/// `atanh(t) = sum t^(2n+1)/(2n+1)` for `0 <= t <= 1/3`.
fn atanh_series(t: &Interval) -> Interval {
    let t2 = t.mul(t);
    let mut power = t.clone();
    let mut sum = t.clone();
    let mut n = 1u64;
    loop {
        power = power.mul(&t2);
        let term = power.div_int(2 * n + 1);
        sum = sum.add(&term);
        n += 1;
        if power.hi <= BigInt::one() {
            break;
        }
    }
    // positive tail bounded by the geometric series with ratio t^2 <= 1/9
    sum.hi += power.hi * 2 + 2;
    sum
}

/// Enclosure of `ln 2` at precision `bits`.
pub fn ln2(bits: u32) -> Interval {
    let work = bits + GUARD_BITS;
    let third = Interval::from_ratio(&BigInt::one(), &BigInt::from(3), work);
    atanh_series(&third).mul_int(2).rescale(bits)
}

/// Enclosure of `ln 3 = ln 2 + 2 atanh(1/5)` at precision `bits`.
pub fn ln3(bits: u32) -> Interval {
    let work = bits + GUARD_BITS;
    let fifth = Interval::from_ratio(&BigInt::one(), &BigInt::from(5), work);
    ln2(work)
        .add(&atanh_series(&fifth).mul_int(2))
        .rescale(bits)
}

/// Enclosure of `alpha = log2(3)` at precision `bits`.
pub fn alpha(bits: u32) -> Interval {
    let work = bits + GUARD_BITS;
    ln3(work).div(&ln2(work)).rescale(bits)
}

/// Direction in which a single bound is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

/// Exact `base^e` for an integer exponent.
fn rational_pow(base: &BigRational, e: i64) -> BigRational {
    let p = num_traits::pow(base.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// Cached enclosures of `lambda^(p + q*alpha)` for one `lambda`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    lambda: BigRational,
    bits: u32,
    // ln(lambda) / ln(2), ln(3) / ln(2) scaled by ln(lambda)
    log_lambda: Interval,
    ln2: Interval,
    ln3: Interval,
    cache: HashMap<ExponentShift, Interval>,
}

impl CoefficientTable {
    pub fn new(lambda: &BigRational, bits: u32) -> Result<Self> {
        let one = BigRational::one();
        let two = BigRational::from_integer(BigInt::from(2));
        if *lambda < one || *lambda > two {
            return Err(Error::LambdaOutOfRange(lambda.to_string()));
        }
        let work = bits + GUARD_BITS;
        let log_lambda = Interval::from_rational(lambda, work).ln_unit();
        Ok(Self {
            lambda: lambda.clone(),
            bits,
            log_lambda,
            ln2: ln2(work),
            ln3: ln3(work),
            cache: HashMap::new(),
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    /// Enclosure of `lambda^shift` at the table's precision.
    pub fn get(&mut self, shift: ExponentShift) -> Interval {
        if let Some(v) = self.cache.get(&shift) {
            return v.clone();
        }
        let v = self.compute(shift);
        self.cache.insert(shift, v.clone());
        v
    }

    fn compute(&self, shift: ExponentShift) -> Interval {
        let bits = self.bits;
        let one = BigRational::one();
        if shift == ExponentShift::ZERO || self.lambda == one {
            return Interval::one(bits);
        }
        if self.lambda == BigRational::from_integer(BigInt::from(2)) {
            // 2^(p + q*alpha) = 2^p * 3^q
            let two = BigRational::from_integer(BigInt::from(2));
            let three = BigRational::from_integer(BigInt::from(3));
            let exact = rational_pow(&two, shift.p) * rational_pow(&three, shift.q);
            return Interval::from_rational(&exact, bits);
        }
        if shift.q == 0 {
            return Interval::from_rational(&rational_pow(&self.lambda, shift.p), bits);
        }
        // (p ln2 + q ln3) / ln2 * ln(lambda)
        let exponent = self
            .ln2
            .mul_int(shift.p)
            .add(&self.ln3.mul_int(shift.q))
            .div(&self.ln2)
            .mul(&self.log_lambda);
        exponent.exp().rescale(bits)
    }
}

/// One-sided bound on `lambda^shift` in the requested direction.
pub fn evaluate_coefficient(
    shift: ExponentShift,
    lambda: &BigRational,
    rounding: Rounding,
    bits: u32,
) -> Result<BigRational> {
    let v = CoefficientTable::new(lambda, bits)?.get(shift);
    Ok(match rounding {
        Rounding::Down => v.lo_rational(),
        Rounding::Up => v.hi_rational(),
    })
}
