//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is never captured. The process exits
//! non-zero if any criterion fails, except the ones registered as
//! unattainable at desk scale, which still print FAIL with the reason.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use difineq::certificate::{
    check_certificate, check_infeasibility, extend_certificate_nt_to_el, lift_certificate, CertStatus,
    Certificate, CheckOutcome,
};
use difineq::collatz::{classes, pi_a_prefix, pi_a_star, pow3, t_step_wide};
use difineq::eliminate::{eliminate_level, stream_stats, SplitOrder};
use difineq::lp::{build_lp, build_lp_base, build_lp_el, build_lp_nt, Family, LpConstraint, LpVar, Term};
use difineq::solver::{decide, float_coefficients, search_lambda, Feasibility, LambdaSearchResult, Operator, SearchConfig};
use difineq::tree::System;
use difineq::verifier::{check_lower_bound, check_theorem61};
use difineq::ExponentShift;

type Outcome = Result<String, String>;

/// Published values: k, gamma, lambda, C_max, cbar_kk, cbar_(k-1)k.
const PUBLISHED: [(u32, f64, f64, f64, f64, f64); 10] = [
    (2, 0.4365880, 1.3534010, 1.8316920, 1.5237640, 1.0000000),
    (3, 0.6112620, 1.5275960, 3.4881908, 2.1014900, 1.6994294),
    (4, 0.6891080, 1.6122870, 5.4951954, 2.7869040, 2.4010985),
    (5, 0.7335790, 1.6627590, 9.0756176, 3.4648343, 3.0771822),
    (6, 0.7608180, 1.6944520, 12.8769418, 3.9667005, 3.5825321),
    (7, 0.7825670, 1.7201900, 20.1963763, 4.8122983, 4.4061650),
    (8, 0.8031960, 1.7449630, 29.1315157, 5.2028179, 4.8181536),
    (9, 0.8168300, 1.7615320, 43.3394210, 5.8102043, 5.4164870),
    (10, 0.8295450, 1.7771270, 64.9801068, 6.4567870, 6.0648572),
    (11, 0.8417560, 1.7922310, 98.4009647, 7.1552344, 6.7695583),
];
const LAMBDA_TOL: f64 = 1e-3;
const GAMMA_TOL: f64 = 1e-3;
const RELATIVE_TOL: f64 = 0.02;
const RANDOM_CASES: u32 = 1000;

struct Report {
    failed: Vec<String>,
    unattainable: Vec<String>,
}

impl Report {
    fn run(&mut self, id: &str, what: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut outcome = f();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(b)) = (&outcome, budget) {
            if elapsed > b {
                outcome = Err(format!("{detail}; took {elapsed:.1?}, budget {b:?}"));
            }
        }
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:<3} PASS  {what} [{secs:.2}s] {detail}"),
            Err(detail) => {
                println!("criterion {id:<3} FAIL  {what} [{secs:.2}s] {detail}");
                self.failed.push(id.to_string());
            }
        }
    }

    fn run_unattainable(&mut self, id: &str, what: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:<3} PASS  {what} [{secs:.2}s] {detail}"),
            Err(detail) => {
                println!("criterion {id:<3} FAIL  {what} [{secs:.2}s] unattainable: {detail}");
                self.unattainable.push(id.to_string());
            }
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn f64_of(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

fn verified(lp_family: Family, cert: &Certificate) -> Result<(), String> {
    let lp = build_lp(cert.k, lp_family).map_err(err)?;
    match check_certificate(&lp, cert).map_err(err)? {
        CheckOutcome::Verified => Ok(()),
        CheckOutcome::FailedConstraint { id, slack } => Err(format!(
            "{lp_family} k={} lambda={:.7}: constraint {id} fails by {slack:e}",
            cert.k,
            f64_of(&cert.lambda)
        )),
    }
}

// ---------------------------------------------------------------- criterion 1

fn tree_sizes() -> Outcome {
    let want = [(2, 3, 8), (3, 10, 84), (4, 41, 12829)];
    let mut got = Vec::new();
    for (k, depth, literals) in want {
        let s = eliminate_level(k, SplitOrder::Bfs).map_err(err)?.max_stats();
        ensure(s.depth == depth && s.literals == literals, || {
            format!("k={k}: got ({}, {}), want ({depth}, {literals})", s.depth, s.literals)
        })?;
        got.push(format!("({}, {})", s.depth, s.literals));
    }
    Ok(got.join(" "))
}

// ---------------------------------------------------------------- criterion 2

fn constraint_key(c: &LpConstraint) -> (String, BTreeSet<String>) {
    (c.lhs.to_string(), c.rhs.iter().map(Term::to_string).collect())
}

fn worked_example_k2() -> Outcome {
    let s = ExponentShift::new;
    let c = |m, p, q| Term::new(LpVar::Principal(m), s(p, q));
    let a = |tree, index, p, q| Term::new(LpVar::Aux { tree, index }, s(p, q));
    let row = |lhs: Term, rhs: Vec<Term>| LpConstraint { lhs, rhs };
    let golden = vec![
        row(c(2, 0, 0), vec![c(8, -2, 0), a(2, 1, -2, 1)]),
        row(a(2, 1, -2, 1), vec![c(2, -2, 1)]),
        row(a(2, 1, -2, 1), vec![c(5, -2, 1)]),
        row(a(2, 1, -2, 1), vec![c(8, -2, 1)]),
        row(c(5, 0, 0), vec![c(2, -2, 0)]),
        row(c(8, 0, 0), vec![c(5, -2, 0), a(8, 1, -1, 1)]),
        row(a(8, 1, -1, 1), vec![c(8, -3, 1), a(8, 2, -3, 2)]),
        row(a(8, 1, -1, 1), vec![c(2, -3, 1)]),
        row(a(8, 2, -3, 2), vec![c(8, -5, 2), a(8, 3, -5, 3)]),
        row(a(8, 2, -3, 2), vec![c(2, -5, 2)]),
        row(a(8, 3, -5, 3), vec![c(2, -5, 3)]),
        row(a(8, 3, -5, 3), vec![c(5, -5, 3)]),
        row(a(8, 3, -5, 3), vec![c(8, -5, 3)]),
    ];

    let el = eliminate_level(2, SplitOrder::Bfs).map_err(err)?;
    let t8 = el.system.tree_for(8).ok_or("no tree for class 8")?;
    let m_nodes = t8.m_nodes().len();
    let leaves: BTreeSet<(u64, ExponentShift)> = t8
        .leaves()
        .iter()
        .map(|&l| (t8.node(l).class, t8.node(l).shift))
        .collect();
    let want_leaves: BTreeSet<(u64, ExponentShift)> = [
        (5, s(-2, 0)),
        (8, s(-3, 1)),
        (2, s(-3, 1)),
        (8, s(-5, 2)),
        (2, s(-5, 2)),
        (2, s(-5, 3)),
        (5, s(-5, 3)),
        (8, s(-5, 3)),
    ]
    .into_iter()
    .collect();
    ensure(m_nodes == 3, || format!("class 8 tree has {m_nodes} m-nodes"))?;
    ensure(t8.leaves().len() == 8 && leaves == want_leaves, || {
        format!("class 8 leaf labels {leaves:?}")
    })?;

    let lp = build_lp_el(2).map_err(err)?;
    let mut got: Vec<_> = lp.constraints.iter().map(constraint_key).collect();
    let mut want: Vec<_> = golden.iter().map(constraint_key).collect();
    got.sort();
    want.sort();
    ensure(got == want, || {
        let missing: Vec<_> = want.iter().filter(|w| !got.contains(w)).collect();
        let extra: Vec<_> = got.iter().filter(|g| !want.contains(g)).collect();
        format!("missing {missing:?}, unexpected {extra:?}")
    })?;
    Ok("3 m-nodes, 8 leaves, 13 constraints match term for term".into())
}

// ---------------------------------------------------------------- criterion 3/4

fn compare_row(r: &LambdaSearchResult) -> Result<String, String> {
    let &(_, gamma, lambda, c_max, cbar_k, cbar_prev) =
        PUBLISHED.iter().find(|row| row.0 == r.k).ok_or("no published row")?;
    let lo = f64_of(&r.lambda_lo);
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    let checks = [
        ("lambda", (lo - lambda).abs(), LAMBDA_TOL),
        ("gamma", (r.gamma - gamma).abs(), GAMMA_TOL),
        ("C_max", rel(r.c_max, c_max), RELATIVE_TOL),
        ("cbar_kk", rel(r.cbar_k, cbar_k), RELATIVE_TOL),
        ("cbar_k-1k", rel(r.cbar_prev, cbar_prev), RELATIVE_TOL),
    ];
    for (name, dev, tol) in checks {
        ensure(dev <= tol, || format!("k={}: {name} off by {dev:.3e} (tolerance {tol:e})", r.k))?;
    }
    ensure(r.certificate.status == CertStatus::Verified, || format!("k={}: certificate unverified", r.k))?;
    Ok(format!("k={} lambda={lo:.7} gamma={:.7}", r.k, r.gamma))
}

fn searches(ks: std::ops::RangeInclusive<u32>) -> Result<Vec<LambdaSearchResult>, String> {
    ks.map(|k| search_lambda(k, &SearchConfig::default()).map_err(err)).collect()
}

fn growth_rates(results: &[LambdaSearchResult]) -> Outcome {
    let lines: Vec<String> = results.iter().map(compare_row).collect::<Result<_, _>>()?;
    Ok(lines.last().cloned().unwrap_or_default())
}

fn extended(results: &[LambdaSearchResult]) -> Outcome {
    let mut out = Vec::new();
    for r in results {
        out.push(compare_row(r)?);
    }
    let g11 = results.iter().find(|r| r.k == 11).map(|r| r.gamma).ok_or("k=11 missing")?;
    ensure(g11 >= 0.84, || format!("gamma_11 = {g11} < 0.84"))?;
    Ok(out.join("; "))
}

// ---------------------------------------------------------------- criterion 5

/// Every lower endpoint the bisection visits, with its certificate.
fn bisection_lows(k: u32, cfg: &SearchConfig) -> Result<Vec<Certificate>, String> {
    let tol = rat(1, 10_000_000);
    let (mut lo, mut hi) = (BigRational::one(), rat(2, 1));
    let mut out = Vec::new();
    match decide(k, &lo, cfg).map_err(err)? {
        Feasibility::Feasible(c) => out.push(c),
        other => return Err(format!("lambda=1 not feasible: {other:?}")),
    }
    while &hi - &lo > tol {
        let mid = (&lo + &hi) / rat(2, 1);
        match decide(k, &mid, cfg).map_err(err)? {
            Feasibility::Feasible(c) => {
                lo = mid;
                out.push(c);
            }
            _ => hi = mid,
        }
    }
    Ok(out)
}

fn extension_to_el() -> Outcome {
    let cfg = SearchConfig::default();
    let mut checked = 0;
    for k in [2, 3] {
        let system = eliminate_level(k, SplitOrder::Bfs).map_err(err)?.system;
        let el_lp = build_lp_el(k).map_err(err)?;
        let mut certs = Vec::new();
        for lambda in [BigRational::one(), rat(6, 5)] {
            match decide(k, &lambda, &cfg).map_err(err)? {
                Feasibility::Feasible(c) => certs.push(c),
                other => return Err(format!("k={k} lambda={lambda}: {other:?}")),
            }
        }
        certs.extend(bisection_lows(k, &cfg)?);
        for nt in &certs {
            let el = extend_certificate_nt_to_el(nt, &system).map_err(|e| {
                format!("k={k} lambda={:.9}: {e}", f64_of(&nt.lambda))
            })?;
            // independent check on a freshly built program
            ensure(check_certificate(&el_lp, &el).map_err(err)?.is_verified(), || {
                format!("k={k} lambda={:.9}: EL certificate rejected", f64_of(&nt.lambda))
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} extended certificates verified"))
}

// ---------------------------------------------------------------- criterion 6

fn trivial_nt() -> Outcome {
    for k in 2..=8 {
        verified(Family::Nt, &Certificate::trivial_nt(k))?;
    }
    Ok("k=2..8".into())
}

fn trivial_el_small() -> Outcome {
    for k in 2..=4 {
        let system = eliminate_level(k, SplitOrder::Bfs).map_err(err)?.system;
        let el = extend_certificate_nt_to_el(&Certificate::trivial_nt(k), &system).map_err(err)?;
        verified(Family::El, &el)?;
    }
    Ok("k=2..4".into())
}

/// The eliminated trees beyond k = 4 have to exist before their program can
/// be checked; report how far the streaming count gets on the first class
/// that outgrows the probe.
fn trivial_el_large() -> Outcome {
    const PROBE: u64 = 10_000_000;
    let mut notes = Vec::new();
    for k in 5..=8 {
        let mut blocked = None;
        for m in classes(k).filter(|m| m % 9 == 8) {
            let r = stream_stats(k, m, PROBE).map_err(err)?;
            if !r.complete {
                blocked = Some((m, r.depth));
                break;
            }
        }
        match blocked {
            Some((m, depth)) => notes.push(format!("k={k}: class {m} tree exceeds {PROBE} leaves (depth >= {depth})")),
            None => {
                let system = eliminate_level(k, SplitOrder::Bfs).map_err(err)?.system;
                let el = extend_certificate_nt_to_el(&Certificate::trivial_nt(k), &system).map_err(err)?;
                verified(Family::El, &el)?;
            }
        }
    }
    if notes.is_empty() {
        Ok("k=5..8".into())
    } else {
        Err(format!("eliminated system not materialisable; {}", notes.join("; ")))
    }
}

// ---------------------------------------------------------------- criterion 7

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: RANDOM_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn instance() -> impl Strategy<Value = (u32, f64, Vec<f64>, Vec<f64>)> {
    (2u32..=4).prop_flat_map(|k| {
        let n = pow3(k - 1) as usize;
        (
            Just(k),
            1.0f64..2.0,
            prop::collection::vec(0.5f64..50.0, n),
            prop::collection::vec(0.0f64..10.0, n),
        )
    })
}

fn operator_properties() -> Outcome {
    let mut r = runner();
    r.run(&instance(), |(k, lambda, c, d)| {
        let op = Operator::new(k).unwrap();
        let coef = float_coefficients(lambda);
        let f = op.apply(&c, &coef);
        let bigger: Vec<f64> = c.iter().zip(&d).map(|(x, y)| x + y).collect();
        let g = op.apply(&bigger, &coef);
        for (i, (a, b)) in f.iter().zip(&g).enumerate() {
            prop_assert!(a <= b, "monotonicity at index {}", i);
        }
        for t in [0.25, 2.0, 8.0] {
            let scaled: Vec<f64> = c.iter().map(|x| t * x).collect();
            let h = op.apply(&scaled, &coef);
            for (a, b) in h.iter().zip(&f) {
                prop_assert_eq!(*a, t * b);
            }
        }
        let t = d[0] + 0.5;
        let scaled: Vec<f64> = c.iter().map(|x| t * x).collect();
        for (a, b) in op.apply(&scaled, &coef).iter().zip(&f) {
            prop_assert!((a - t * b).abs() <= 1e-12 * a.abs());
        }
        Ok(())
    })
    .map_err(err)?;

    let mut r = runner();
    r.run(&instance(), |(k, lambda, c, _)| {
        let coef = float_coefficients(lambda);
        let small = Operator::new(k).unwrap().apply(&c, &coef);
        let lifted: Vec<f64> = classes(k + 1).map(|m| c[((m % pow3(k)) / 3) as usize]).collect();
        let big = Operator::new(k + 1).unwrap().apply(&lifted, &coef);
        for (i, m) in classes(k + 1).enumerate() {
            prop_assert!(big[i] >= small[((m % pow3(k)) / 3) as usize], "lift at class {}", m);
        }
        Ok(())
    })
    .map_err(err)?;
    Ok(format!("{RANDOM_CASES} instances each for monotonicity, homogeneity and lifting of the operator"))
}

fn certificate_lifting(results: &[LambdaSearchResult]) -> Outcome {
    let cfg = SearchConfig::default();
    let tops: BTreeMap<u32, f64> = results.iter().map(|r| (r.k, f64_of(&r.lambda_lo))).collect();
    let mut r = runner();
    let strategy = (2u32..=3).prop_flat_map(|k| (Just(k), 0.0f64..1.0));
    r.run(&strategy, |(k, u)| {
        // any lambda below the certified endpoint is feasible
        let top = tops[&k] - 1e-4;
        let lambda = BigRational::from_float(1.0 + u * (top - 1.0)).unwrap();
        let cert = match decide(k, &lambda, &cfg).unwrap() {
            Feasibility::Feasible(c) => c,
            other => return Err(TestCaseError::fail(format!("k={k} lambda={lambda}: {other:?}"))),
        };
        let lifted = lift_certificate(&cert).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(lifted.k, k + 1);
        prop_assert!(verified(Family::Nt, &lifted).is_ok());
        Ok(())
    })
    .map_err(err)?;
    for r in results.iter().filter(|r| r.k < 7) {
        let lifted = lift_certificate(&r.certificate).map_err(err)?;
        verified(Family::Nt, &lifted)?;
    }
    Ok(format!("{RANDOM_CASES} random certificates and every searched certificate lift"))
}

fn monotone_lambda(results: &[LambdaSearchResult]) -> Outcome {
    for w in results.windows(2) {
        ensure(w[0].lambda_lo <= w[1].lambda_lo, || {
            format!("lambda_lo drops from k={} to k={}", w[0].k, w[1].k)
        })?;
    }
    let v: Vec<String> = results.iter().map(|r| format!("{:.5}", f64_of(&r.lambda_lo))).collect();
    Ok(v.join(" <= "))
}

// ---------------------------------------------------------------- criterion 8

/// pi*_a(x) for every x up to `x_max` by iterating each start forward.
fn forward_scan(a: u64, x_max: u64) -> Vec<u64> {
    let mut starts_at = vec![0u64; x_max as usize + 1];
    for n in 1..=x_max {
        let mut v = n as u128;
        let mut peak = v;
        let mut seen = BTreeSet::new();
        loop {
            if v == a as u128 {
                if peak <= x_max as u128 {
                    starts_at[peak.max(n as u128) as usize] += 1;
                }
                break;
            }
            if peak > x_max as u128 || !seen.insert(v) {
                break;
            }
            v = t_step_wide(v).unwrap();
            peak = peak.max(v);
        }
    }
    let mut acc = 0;
    starts_at
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect()
}

fn counting_oracle() -> Outcome {
    const X_MAX: u64 = 2000;
    let mut targets = 0;
    for a in (1..=50u64).filter(|a| a % 3 != 0) {
        let oracle = forward_scan(a, X_MAX);
        let pi = pi_a_prefix(a, X_MAX, 100_000).map_err(err)?;
        for x in 1..=X_MAX {
            let star = pi_a_star(a, x).map_err(err)?;
            ensure(star == oracle[x as usize], || {
                format!("a={a} x={x}: backward {star}, forward {}", oracle[x as usize])
            })?;
            ensure(star <= pi[x as usize], || format!("a={a} x={x}: pi* {star} > pi {}", pi[x as usize]))?;
        }
        targets += 1;
    }
    let p = pi_a_star(2, 4).map_err(err)?;
    ensure(p == 3, || format!("pi*_2(4) = {p}"))?;
    Ok(format!("{targets} targets, x=1..{X_MAX}; pi*_2(4) = 3"))
}

// ---------------------------------------------------------------- criterion 9

fn bound_checks(results: &[LambdaSearchResult]) -> Outcome {
    let k2 = results.iter().find(|r| r.k == 2).ok_or("no k=2 search")?;
    for a in [5, 11, 17, 23] {
        let rep = check_lower_bound(a, &k2.certificate, 15).map_err(err)?;
        ensure(rep.passed(), || format!("a={a}: some row fails"))?;
    }
    let head = check_theorem61(&[10_000, 100_000, 1_000_000], 100_000).map_err(err)?;
    ensure(head.passed(), || "pi_1(x) < x^0.84".into())?;
    let margins: Vec<String> = head.rows.iter().map(|r| format!("{:.2}", r.margin)).collect();
    Ok(format!("a in {{5,11,17,23}}, y<=15; headline margins {}", margins.join(", ")))
}

fn bound_checks_all_certificates(results: &[LambdaSearchResult]) -> Outcome {
    let mut rows = 0;
    for r in results {
        for a in (5..=100u64).filter(|a| a % 3 == 2) {
            let rep = check_lower_bound(a, &r.certificate, 15).map_err(err)?;
            ensure(rep.passed(), || format!("k={} a={a}: some row fails", r.k))?;
            rows += rep.rows.len();
        }
    }
    Ok(format!("{rows} rows over k=2..7, a<=100"))
}

// ---------------------------------------------------------------- direct vs base tree form

fn base_from_direct(nt: &Certificate, system: &System) -> Result<Certificate, String> {
    let mut values: BTreeMap<LpVar, BigRational> =
        nt.principal_values().map(|(m, v)| (LpVar::Principal(m), v.clone())).collect();
    for t in &system.trees {
        for (i, &id) in t.m_nodes().iter().enumerate() {
            let min = t
                .node(id)
                .children
                .iter()
                .map(|&c| nt.principal(t.node(c).class).cloned().ok_or("missing principal"))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .min()
                .ok_or("empty m-node")?;
            values.insert(LpVar::Aux { tree: t.root_class(), index: i + 1 }, min);
        }
    }
    Ok(Certificate {
        family: Family::Base,
        values,
        ..nt.clone()
    }
    .values_with_objective())
}

fn direct_from_base(base: &Certificate) -> Certificate {
    let k = base.k;
    let mut values: BTreeMap<LpVar, BigRational> =
        base.principal_values().map(|(m, v)| (LpVar::Principal(m), v.clone())).collect();
    for b in classes(k - 1) {
        values.insert(LpVar::Previous(b), base.lift_min(b).expect("complete certificate"));
    }
    Certificate {
        family: Family::Nt,
        values,
        ..base.clone()
    }
    .values_with_objective()
}

/// A base-form solution maps to a direct-form one (cprev = lift minimum) and
/// back (auxiliary = minimum of its m-node), so feasibility agrees; checked
/// both ways where feasible, and by an infeasibility witness elsewhere.
fn direct_vs_base() -> Outcome {
    let cfg = SearchConfig::default();
    let mut summary = Vec::new();
    for k in [2, 3] {
        let system = difineq::tree::build_system(k).map_err(err)?;
        let nt_lp = build_lp_nt(k).map_err(err)?;
        let base_lp = build_lp_base(k).map_err(err)?;
        let mut pattern = String::new();
        for i in 0..10 {
            let lambda = rat(10 + i, 10);
            match decide(k, &lambda, &cfg).map_err(err)? {
                Feasibility::Feasible(nt) => {
                    let base = base_from_direct(&nt, &system)?;
                    ensure(check_certificate(&base_lp, &base).map_err(err)?.is_verified(), || {
                        format!("k={k} lambda={lambda}: base certificate rejected")
                    })?;
                    let back = direct_from_base(&base);
                    ensure(check_certificate(&nt_lp, &back).map_err(err)?.is_verified(), || {
                        format!("k={k} lambda={lambda}: round trip rejected")
                    })?;
                    pattern.push('F');
                }
                Feasibility::Infeasible(w) => {
                    ensure(check_infeasibility(&nt_lp, &w).map_err(err)?, || {
                        format!("k={k} lambda={lambda}: witness rejected")
                    })?;
                    pattern.push('I');
                }
                other => return Err(format!("k={k} lambda={lambda}: {other:?}")),
            }
        }
        summary.push(format!("k={k} {pattern}"));
    }
    Ok(format!("lambda=1.0..1.9: {}", summary.join(", ")))
}

fn main() {
    let mut report = Report {
        failed: Vec::new(),
        unattainable: Vec::new(),
    };
    println!("acceptance suite");

    report.run("1", "eliminated tree sizes for k=2..4 equal (3,8) (10,84) (41,12829)", Some(Duration::from_secs(120)), tree_sizes);
    report.run("2", "k=2 eliminated trees and their program match the worked example", None, worked_example_k2);

    let start = Instant::now();
    let results = searches(2..=7);
    let search_time = start.elapsed();
    let results = match results {
        Ok(r) => r,
        Err(e) => {
            println!("criterion 3   FAIL  search for k=2..7 aborted: {e}");
            std::process::exit(1);
        }
    };
    report.run("3", "growth rates for k=2..7 within 1e-3, C_max and averages within 2%", Some(Duration::from_secs(600)), || {
        let detail = growth_rates(&results)?;
        Ok(format!("{detail}; searches took {search_time:.1?}"))
    });
    report.run("4", "slow: k=10,11 within 1e-3 and gamma_11 >= 0.84", Some(Duration::from_secs(7200)), || {
        extended(&searches(10..=11)?)
    });
    report.run("5", "direct certificates extend to verified eliminated ones (k=2,3)", None, extension_to_el);
    report.run("6a", "lambda=1, c=1 verifies for the direct form, k<=8", None, trivial_nt);
    report.run("6b", "lambda=1, c=1 verifies for the eliminated form, k<=4", None, trivial_el_small);
    report.run_unattainable("6c", "lambda=1, c=1 verifies for the eliminated form, k=5..8", trivial_el_large);
    report.run("7a", "operator monotone, homogeneous and lift-compatible", None, operator_properties);
    report.run("7b", "certificates lift from k to k+1", None, || certificate_lifting(&results));
    report.run("7c", "lambda_lo nondecreasing over k=2..7", None, || monotone_lambda(&results));
    report.run("8", "backward counts equal the forward-scan oracle", None, counting_oracle);
    report.run("9a", "lower bound for a in {5,11,17,23} and headline count", None, || bound_checks(&results));
    report.run("9b", "lower bound for every certificate, a<=100, y<=15", None, || bound_checks_all_certificates(&results));
    report.run("10", "direct and base tree programs agree on lambda=1.0..1.9", None, direct_vs_base);

    println!(
        "summary: {} failed, {} unattainable{}",
        report.failed.len(),
        report.unattainable.len(),
        if report.unattainable.is_empty() {
            String::new()
        } else {
            format!(" ({})", report.unattainable.join(", "))
        }
    );
    if !report.failed.is_empty() {
        std::process::exit(1);
    }
}
