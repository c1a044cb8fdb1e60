//! `difineq`: build, eliminate, solve and verify the 3x+1 difference
//! inequality systems from the command line.
//!
//! Exit status is 0 on success, 1 when a verification fails or a computation
//! cannot be completed, and 2 on usage errors (bad flags, unreadable input).

use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use difineq::certificate::{
    check_certificate, extend_certificate_nt_to_el, CertStatus, Certificate, CheckOutcome,
};
use difineq::collatz::DEFAULT_STEP_BUDGET;
use difineq::decimal::{format_exact, parse_decimal, to_f64};
use difineq::eliminate::{eliminate_level, stream_level, SplitOrder};
use difineq::lp::{build_lp, Family};
use difineq::solver::{search_lambda, table2_row, IterConfig, SearchConfig, TABLE2_HEADER};
use difineq::tree::build_system;
use difineq::verifier::{check_lower_bound, check_theorem61};

/// Largest level whose eliminated system is built in memory by default.
const MATERIALISE_MAX_K: u32 = 4;

#[derive(Parser, Debug)]
#[command(name = "difineq", version, about = "Difference-inequality lower bounds for the 3x+1 problem")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the base inequality trees at level k.
    BuildSystem {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Eliminate advanced terms and report tree sizes.
    Eliminate {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "bfs")]
        order: SplitOrder,
        /// Write the eliminated trees here.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Per-class statistics as CSV, to the given file or stdout.
        #[arg(long, num_args = 0..=1)]
        stats: Option<Option<PathBuf>>,
        /// Allow k >= 5, counted by streaming without building the trees.
        #[arg(long)]
        allow_huge: bool,
        /// Leaf budget per class when streaming.
        #[arg(long, default_value_t = 1_000_000_000)]
        max_literals: u64,
    },
    /// Write the linear program at level k.
    BuildLp {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "nt")]
        family: Family,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Bracket the largest feasible lambda and write the certificate.
    SearchLambda {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: u64,
        #[arg(long, default_value_t = 64)]
        precision_bits: u32,
        /// Certificate family to write; el is derived from the nt one.
        #[arg(long, default_value = "nt")]
        family: Family,
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Bracket file to resume from and update after each step.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check a certificate against its linear program.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        /// Defaults to the certificate's own family.
        #[arg(long)]
        family: Option<Family>,
    },
    /// Largest eliminated tree per level, as CSV.
    Table1 {
        #[arg(long, default_value = "2..4", value_parser = parse_range)]
        k_range: RangeInclusive<u32>,
        #[arg(long)]
        allow_huge: bool,
        #[arg(long, default_value_t = 1_000_000_000)]
        max_literals: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth rates and certificate averages per level, as CSV.
    Table2 {
        #[arg(long, default_value = "2..6", value_parser = parse_range)]
        k_range: RangeInclusive<u32>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: u64,
        #[arg(long, default_value_t = 64)]
        precision_bits: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare pi*_a(2^y a) with the certified lower bound.
    VerifyBound {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 15)]
        ymax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare pi_1(x) with x^0.84.
    VerifyHeadline {
        /// Comma-separated values such as 1e4,1e5,1e6.
        #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e4,1e5,1e6")]
        x: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad input from the command line; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A check ran and failed; exits with status 1.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let bad = || format!("'{s}' is not a range like 2..6");
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b) = (
        a.trim().parse::<u32>().map_err(|_| bad())?,
        b.trim().parse::<u32>().map_err(|_| bad())?,
    );
    if a < 2 || b < a {
        return Err(format!("range {s} must satisfy 2 <= start <= end"));
    }
    Ok(a..=b)
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let r = parse_decimal(s)?;
    if !r.is_integer() {
        return Err(format!("'{s}' is not an integer"));
    }
    match r.to_integer().to_string().parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("'{s}' is not a positive integer that fits in 64 bits")),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_input(flag: &str, path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{flag}: cannot read {}: {e}", path.display())))
}

fn read_certificate(path: &Path) -> Result<Certificate> {
    Certificate::from_text(&read_input("--cert", path)?)
        .map_err(|e| usage(format!("--cert: {}: {e}", path.display())))
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(usage(format!("--k must be at least 2, got {k}")));
    }
    Ok(())
}

fn search_config(tol: f64, max_iter: u64, bits: u32, checkpoint: Option<PathBuf>) -> Result<SearchConfig> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(usage(format!("--tol must lie in (0, 1), got {tol}")));
    }
    if !(16..=512).contains(&bits) {
        return Err(usage(format!("--precision-bits must lie in 16..=512, got {bits}")));
    }
    Ok(SearchConfig {
        tol,
        iter: IterConfig {
            max_iter,
            bits,
            ..IterConfig::default()
        },
        checkpoint,
        ..SearchConfig::default()
    })
}

fn stats_rows(k: u32, order: SplitOrder, allow_huge: bool, max_literals: u64) -> Result<Vec<(u64, String, String)>> {
    if k <= MATERIALISE_MAX_K {
        let el = eliminate_level(k, order)?;
        return Ok(el
            .stats
            .iter()
            .map(|(m, s)| (*m, s.depth.to_string(), s.literals.to_string()))
            .collect());
    }
    if !allow_huge {
        return Err(usage(format!(
            "the eliminated system at k = {k} is too large to build; pass --allow-huge to count it by streaming"
        )));
    }
    let fmt = |v: u64, complete: bool| if complete { v.to_string() } else { format!(">={v}") };
    Ok(stream_level(k, max_literals)?
        .into_iter()
        .map(|r| (r.class, fmt(r.depth, r.complete), fmt(r.literals, r.complete)))
        .collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildSystem { k, emit } => {
            check_k(k)?;
            write_out(emit.as_deref(), &build_system(k)?.to_text())
        }
        Command::Eliminate {
            k,
            order,
            emit,
            stats,
            allow_huge,
            max_literals,
        } => {
            check_k(k)?;
            if k <= MATERIALISE_MAX_K {
                let el = eliminate_level(k, order)?;
                if let Some(p) = &emit {
                    write_out(Some(p), &el.system.to_text())?;
                }
            } else if emit.is_some() {
                return Err(usage(format!("--emit is only available for k <= {MATERIALISE_MAX_K}")));
            }
            let rows = stats_rows(k, order, allow_huge, max_literals)?;
            let mut csv = String::from("k,class,depth,literals\n");
            for (m, d, l) in &rows {
                let _ = writeln!(csv, "{k},{m},{d},{l}");
            }
            match &stats {
                Some(p) => write_out(p.as_deref(), &csv),
                None if emit.is_none() => write_out(None, &csv),
                None => Ok(()),
            }
        }
        Command::BuildLp { k, family, emit } => {
            check_k(k)?;
            if family != Family::Nt && k > MATERIALISE_MAX_K {
                return Err(usage(format!("--family {family} is only available for k <= {MATERIALISE_MAX_K}")));
            }
            write_out(emit.as_deref(), &build_lp(k, family)?.to_text())
        }
        Command::SearchLambda {
            k,
            tol,
            max_iter,
            precision_bits,
            family,
            emit,
            checkpoint,
        } => {
            check_k(k)?;
            if family == Family::El && k > MATERIALISE_MAX_K {
                return Err(usage(format!("--family el is only available for k <= {MATERIALISE_MAX_K}")));
            }
            let cfg = search_config(tol, max_iter, precision_bits, checkpoint)?;
            let r = search_lambda(k, &cfg)?;
            let cert = match family {
                Family::Nt => r.certificate.clone(),
                _ => extend_certificate_nt_to_el(&r.certificate, &eliminate_level(k, SplitOrder::Bfs)?.system)?,
            };
            eprintln!(
                "k = {k}: lambda in [{}, {}], gamma = {:.7}, C_max = {:.7}, {} bisection steps",
                format_exact(&r.lambda_lo),
                format_exact(&r.lambda_hi),
                r.gamma,
                r.c_max,
                r.steps
            );
            write_out(emit.as_deref(), &cert.to_text())
        }
        Command::Verify { cert, family } => {
            let mut c = read_certificate(&cert)?;
            let family = family.unwrap_or(c.family);
            if family != Family::Nt && c.k > MATERIALISE_MAX_K {
                return Err(usage(format!("--family {family} is only available for k <= {MATERIALISE_MAX_K}")));
            }
            if family != c.family {
                if !(c.family == Family::Nt && family == Family::El) {
                    return Err(usage(format!("--family {family} does not apply to a {} certificate", c.family)));
                }
                let system = eliminate_level(c.k, SplitOrder::Bfs)?.system;
                c = match extend_certificate_nt_to_el(&c, &system) {
                    Ok(el) => el,
                    Err(difineq::Error::ConstraintViolated { id, slack }) => {
                        bail!(Failed(format!("extended certificate fails constraint {id} with slack {slack:e}")))
                    }
                    Err(e) => return Err(e.into()),
                };
            }
            let lp = build_lp(c.k, family)?;
            match check_certificate(&lp, &c)? {
                CheckOutcome::Verified => {
                    println!("verified: family {family}, k = {}, lambda = {}", c.k, format_exact(&c.lambda));
                    Ok(())
                }
                CheckOutcome::FailedConstraint { id, slack } => {
                    let what = lp
                        .constraints
                        .get(id)
                        .map_or_else(|| "a bound 1 <= c <= Cmax".to_string(), |c| c.to_string());
                    Err(anyhow!(Failed(format!("constraint {id} fails with slack {slack:e}: {what}"))))
                }
            }
        }
        Command::Table1 {
            k_range,
            allow_huge,
            max_literals,
            out,
        } => {
            let mut csv = String::from("k,depth,literals\n");
            for k in k_range {
                let rows = stats_rows(k, SplitOrder::Bfs, allow_huge, max_literals)?;
                let key = |s: &str| s.trim_start_matches(">=").parse::<u64>().unwrap_or(0);
                let depth = rows.iter().max_by_key(|r| key(&r.1)).map(|r| r.1.clone()).unwrap_or_default();
                let literals = rows.iter().max_by_key(|r| key(&r.2)).map(|r| r.2.clone()).unwrap_or_default();
                let _ = writeln!(csv, "{k},{depth},{literals}");
            }
            write_out(out.as_deref(), &csv)
        }
        Command::Table2 {
            k_range,
            tol,
            max_iter,
            precision_bits,
            out,
        } => {
            let cfg = search_config(tol, max_iter, precision_bits, None)?;
            let mut csv = format!("{TABLE2_HEADER}\n");
            let mut all_hold = true;
            for k in k_range {
                let row = table2_row(&search_lambda(k, &cfg)?)?;
                all_hold &= row.summed_inequality;
                let _ = writeln!(csv, "{}", row.to_csv());
            }
            write_out(out.as_deref(), &csv)?;
            if !all_hold {
                bail!(Failed("the summed inequality fails on a certificate".into()));
            }
            Ok(())
        }
        Command::VerifyBound { a, cert, ymax, out } => {
            let c = read_certificate(&cert)?;
            if c.status != CertStatus::Verified {
                return Err(usage(format!("{} is not a verified certificate", cert.display())));
            }
            let report = match check_lower_bound(a, &c, ymax) {
                Err(e @ (difineq::Error::CycleTarget(_) | difineq::Error::InvalidTarget(_))) => {
                    return Err(usage(e.to_string()))
                }
                other => other?,
            };
            write_out(out.as_deref(), &report.to_csv())?;
            if !report.passed() {
                bail!(Failed(format!(
                    "bound fails for a = {a} (Delta_1 = {:.6})",
                    to_f64(&report.delta1)
                )));
            }
            Ok(())
        }
        Command::VerifyHeadline { x, budget, out } => {
            let report = check_theorem61(&x, budget)?;
            write_out(out.as_deref(), &report.to_csv())?;
            if !report.passed() {
                bail!(Failed("pi_1(x) < x^0.84 for some x".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
