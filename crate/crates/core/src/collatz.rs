//! The 3x+1 map, its inverse, the two orbit-counting functions and residue
//! classes mod 3^k.
//!
//! All trajectory arithmetic runs in `u128` with checked operations, so
//! starting values anywhere in `u64` are handled and an overflow surfaces as
//! [`Error::Overflow`] instead of wrapping.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Default per-trajectory step budget for [`pi_a`].
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

/// `T(n) = n/2` for even `n`, `(3n+1)/2` for odd `n`.
#[allow(clippy::manual_div_ceil)]
pub fn t_step(n: u64) -> u128 {
    let n = n as u128;
    if n.is_multiple_of(2) {
        n / 2
    } else {
        (3 * n + 1) / 2
    }
}

/// Checked variant of [`t_step`] on wide integers.
pub fn t_step_wide(n: u128) -> Option<u128> {
    if n.is_multiple_of(2) {
        Some(n / 2)
    } else {
        n.checked_mul(3)?.checked_add(1).map(|v| v / 2)
    }
}

/// All `p` with `T(p) = n`: always `2n`, plus `(2n-1)/3` when `n = 2 mod 3`.
pub fn preimages(n: u64) -> Vec<u128> {
    let n = n as u128;
    let mut out = vec![2 * n];
    if n % 3 == 2 {
        out.push((2 * n - 1) / 3);
    }
    out
}

fn check_target(a: u64) -> Result<()> {
    if a == 0 || a.is_multiple_of(3) {
        Err(Error::InvalidTarget(a))
    } else {
        Ok(())
    }
}

/// Counts `n <= x` whose orbit reaches `a` with every iterate along the way
/// bounded by `x`.
pub fn pi_a_star(a: u64, x: u64) -> Result<u64> {
    check_target(a)?;
    if x < a {
        return Ok(0);
    }
    let x = x as u128;
    let mut count = 0u64;
    let mut queue = VecDeque::from([a as u128]);
    while let Some(v) = queue.pop_front() {
        count += 1;
        // a cycle through the backward tree must pass through `a` itself
        let double = 2 * v;
        if double <= x && double != a as u128 {
            queue.push_back(double);
        }
        if v % 3 == 2 {
            let odd = (2 * v - 1) / 3;
            if odd <= x && odd != a as u128 {
                queue.push_back(odd);
            }
        }
    }
    Ok(count)
}

/// For every `n` in `1..=x`, whether the forward orbit of `n` visits `a`.
///
/// Index 0 is unused. Values already decided are reused as soon as a
/// trajectory drops below its starting point; cycles are caught by Brent's
/// method so a trajectory that loops without meeting `a` is rejected rather
/// than iterated until the budget runs out.
pub fn visit_flags(a: u64, x: u64, budget: u64) -> Result<Vec<bool>> {
    check_target(a)?;
    let len = usize::try_from(x).map_err(|_| Error::Overflow(x))? + 1;
    let mut flags = vec![false; len];
    let target = a as u128;
    for n in 1..=x {
        let start = n as u128;
        let mut v = start;
        let mut steps = 0u64;
        // Brent cycle detection state
        let mut saved = v;
        let mut power = 1u64;
        let mut lam = 0u64;
        let hit = loop {
            if v == target {
                break true;
            }
            if v < start {
                break flags[v as usize];
            }
            if steps >= budget {
                return Err(Error::BudgetExceeded { n, budget });
            }
            v = t_step_wide(v).ok_or(Error::Overflow(n))?;
            steps += 1;
            lam += 1;
            if v == saved {
                // revisited: the orbit cycles without having met `a`
                break v == target;
            }
            if lam == power {
                saved = v;
                power *= 2;
                lam = 0;
            }
        };
        flags[n as usize] = hit;
    }
    Ok(flags)
}

/// Counts `n <= x` whose forward orbit visits `a`.
pub fn pi_a(a: u64, x: u64, budget: u64) -> Result<u64> {
    Ok(visit_flags(a, x, budget)?.iter().filter(|&&f| f).count() as u64)
}

/// `pi_a(a, x)` for every `x` in `0..=x_max` in one pass.
pub fn pi_a_prefix(a: u64, x_max: u64, budget: u64) -> Result<Vec<u64>> {
    let flags = visit_flags(a, x_max, budget)?;
    let mut acc = 0u64;
    Ok(flags
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if i > 0 && f {
                acc += 1;
            }
            acc
        })
        .collect())
}

/// Counting functions for a fixed target `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryCounter {
    a: u64,
    budget: u64,
}

impl TrajectoryCounter {
    pub fn new(a: u64) -> Result<Self> {
        check_target(a)?;
        Ok(Self {
            a,
            budget: DEFAULT_STEP_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn target(&self) -> u64 {
        self.a
    }

    pub fn pi_star(&self, x: u64) -> u64 {
        pi_a_star(self.a, x).expect("target validated at construction")
    }

    pub fn pi(&self, x: u64) -> Result<u64> {
        pi_a(self.a, x, self.budget)
    }
}

/// `3^k`, panicking past `u64` range (k > 40 never occurs in practice).
pub fn pow3(k: u32) -> u64 {
    3u64.checked_pow(k).expect("3^k overflows u64")
}

/// Number of classes in `[3^k]`, i.e. `3^(k-1)`.
pub fn class_count(k: u32) -> usize {
    if k == 0 {
        0
    } else {
        pow3(k - 1) as usize
    }
}

/// The classes `2, 5, 8, ..., 3^k - 1` of `[3^k]` in increasing order.
pub fn classes(k: u32) -> impl Iterator<Item = u64> {
    (0..class_count(k) as u64).map(|i| 3 * i + 2)
}

/// A residue class `m mod 3^k` with `m = 2 mod 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueClass {
    k: u32,
    m: u64,
}

impl ResidueClass {
    pub fn new(k: u32, m: u64) -> Result<Self> {
        if k == 0 || k > 40 {
            return Err(Error::InvalidLevel(k, 1));
        }
        if m >= pow3(k) || m % 3 != 2 {
            return Err(Error::InvalidClass { k, m });
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Position of the class in increasing order, `(m - 2) / 3`.
    pub fn index(&self) -> usize {
        ((self.m - 2) / 3) as usize
    }

    pub fn modulus(&self) -> u64 {
        pow3(self.k)
    }
}

/// Which of the three inequality shapes governs a class, by `m mod 9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `m = 2 mod 9`: successor term plus a minimum at shift `alpha - 2`.
    D1,
    /// `m = 5 mod 9`: successor term only.
    D2,
    /// `m = 8 mod 9`: successor term plus a minimum at shift `alpha - 1`.
    D3,
}

impl Branch {
    pub fn of(m: u64) -> Branch {
        match m % 9 {
            2 => Branch::D1,
            5 => Branch::D2,
            8 => Branch::D3,
            r => panic!("class {m} (= {r} mod 9) is not 2 mod 3"),
        }
    }
}

/// The three lifts `{b, b + 3^(k-1), b + 2*3^(k-1)}` of a class `b` mod
/// `3^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lift {
    pub base: u64,
    pub members: [u64; 3],
}

impl Lift {
    pub fn of(k: u32, base: u64) -> Lift {
        let step = pow3(k - 1);
        let base = base % step;
        Lift {
            base,
            members: [base, base + step, base + 2 * step],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchInfo {
    pub branch: Branch,
    /// `4m mod 3^k`.
    pub successor: u64,
    /// Present for D1 and D3.
    pub lift: Option<Lift>,
}

/// Branch data of a class at level `k >= 2`.
pub fn classify_branch(c: ResidueClass) -> Result<BranchInfo> {
    let k = c.k();
    if k < 2 {
        return Err(Error::InvalidLevel(k, 2));
    }
    let m = c.m();
    let modulus = c.modulus();
    let branch = Branch::of(m);
    let successor = (4 * m) % modulus;
    let lift = match branch {
        Branch::D1 => Some(Lift::of(k, (4 * m - 2) / 3)),
        Branch::D2 => None,
        Branch::D3 => Some(Lift::of(k, (2 * m - 1) / 3)),
    };
    Ok(BranchInfo {
        branch,
        successor,
        lift,
    })
}
