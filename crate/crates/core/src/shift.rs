//! Exact time shifts `p + q*alpha` with `alpha = log2(3)`.
//!
//! Every shift produced by the inequality system is an integer combination of
//! `1` and `alpha`, so shifts are stored as the pair `(p, q)`. Since `alpha` is
//! irrational the pair is unique, equality is pair equality, and ordering is
//! decided exactly: first against a rational bracket of `alpha`, and if that
//! is inconclusive by comparing `3^q` with `2^-p` in big integers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigUint;

/// `alpha = log2(3)` as an `f64`, for reporting only.
pub const ALPHA_F64: f64 = 1.584_962_500_721_156_2;

// Continued-fraction convergents of log2(3) on either side of it:
// 176251/111202 < alpha < 301994/190537.
pub(crate) const ALPHA_LO: (i128, i128) = (176_251, 111_202);
pub(crate) const ALPHA_HI: (i128, i128) = (301_994, 190_537);

/// The shift `p + q*alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ExponentShift {
    pub p: i64,
    pub q: i64,
}

impl ExponentShift {
    pub const ZERO: ExponentShift = ExponentShift { p: 0, q: 0 };
    /// Successor term of every branch.
    pub const SUCCESSOR: ExponentShift = ExponentShift { p: -2, q: 0 };
    /// Minimum term of a `m = 2 mod 9` class.
    pub const D1_MIN: ExponentShift = ExponentShift { p: -2, q: 1 };
    /// Minimum term of a `m = 8 mod 9` class.
    pub const D3_MIN: ExponentShift = ExponentShift { p: -1, q: 1 };

    pub const fn new(p: i64, q: i64) -> Self {
        Self { p, q }
    }

    pub fn to_f64(self) -> f64 {
        self.p as f64 + self.q as f64 * ALPHA_F64
    }

    /// Sign of `p + q*alpha`.
    pub fn signum(self) -> Ordering {
        sign_of(self.p, self.q)
    }

    /// Advanced terms have shift `>= 0`.
    pub fn is_advanced(self) -> bool {
        self.signum() != Ordering::Less
    }
}

fn sign_of(p: i64, q: i64) -> Ordering {
    if q == 0 {
        return p.cmp(&0);
    }
    let (p128, q128) = (p as i128, q as i128);
    // bracket of p + q*alpha, scaled by the positive denominators
    let (low, high) = if q > 0 {
        (
            p128 * ALPHA_LO.1 + q128 * ALPHA_LO.0,
            p128 * ALPHA_HI.1 + q128 * ALPHA_HI.0,
        )
    } else {
        (
            p128 * ALPHA_HI.1 + q128 * ALPHA_HI.0,
            p128 * ALPHA_LO.1 + q128 * ALPHA_LO.0,
        )
    };
    if low > 0 {
        return Ordering::Greater;
    }
    if high < 0 {
        return Ordering::Less;
    }
    exact_sign(p, q)
}

fn exact_sign(p: i64, q: i64) -> Ordering {
    // normalise to q > 0, flipping the answer
    let (p, q, flip) = if q < 0 { (-p, -q, true) } else { (p, q, false) };
    let positive = if p >= 0 {
        true
    } else {
        // q*alpha > -p  <=>  3^q > 2^-p
        let three = BigUint::from(3u32).pow(q as u32);
        let two = BigUint::from(1u32) << (-p) as u64;
        three > two
    };
    let ord = if positive {
        Ordering::Greater
    } else {
        Ordering::Less
    };
    if flip {
        ord.reverse()
    } else {
        ord
    }
}

impl Ord for ExponentShift {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        sign_of(self.p - other.p, self.q - other.q)
    }
}

impl PartialOrd for ExponentShift {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ExponentShift {
    type Output = ExponentShift;
    fn add(self, rhs: Self) -> Self {
        ExponentShift::new(self.p + rhs.p, self.q + rhs.q)
    }
}

impl Sub for ExponentShift {
    type Output = ExponentShift;
    fn sub(self, rhs: Self) -> Self {
        ExponentShift::new(self.p - rhs.p, self.q - rhs.q)
    }
}

impl Neg for ExponentShift {
    type Output = ExponentShift;
    fn neg(self) -> Self {
        ExponentShift::new(-self.p, -self.q)
    }
}

/// Renders as e.g. `0`, `-2`, `α-3`, `2α-5`, `-α`.
impl fmt::Display for ExponentShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alpha = match self.q {
            0 => String::new(),
            1 => "α".to_string(),
            -1 => "-α".to_string(),
            q => format!("{q}α"),
        };
        match (self.q, self.p) {
            (0, p) => write!(f, "{p}"),
            (_, 0) => write!(f, "{alpha}"),
            (_, p) if p > 0 => write!(f, "{alpha}+{p}"),
            (_, p) => write!(f, "{alpha}{p}"),
        }
    }
}
