use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{SuiteReport, TrialRecord};
use crate::arith::{divisor_count, gcd, is_prime_u64, mod_inverse, primes_up_to};
use crate::error::{Error, Result};
use crate::exp_sums::precise::PreciseTable;
use crate::exp_sums::{complete_cubic_sum, CubicTable, ShiftSpec};
use crate::weyl_sums::{hq_decompose_check, lemma1_sides, WeylContext};

pub const SUITE_NAMES: [&str; 8] = [
    "product-formula",
    "lv-envelope",
    "gcd-sum",
    "m4",
    "s4-prime-bound",
    "s-a0-envelope",
    "decompose-identity",
    "lemma1",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteName {
    ProductFormula,
    LvEnvelope,
    GcdSum,
    M4,
    S4PrimeBound,
    SA0Envelope,
    DecomposeIdentity,
    Lemma1,
}

impl SuiteName {
    pub fn as_str(&self) -> &'static str {
        use SuiteName::*;
        match self {
            ProductFormula => "product-formula",
            LvEnvelope => "lv-envelope",
            GcdSum => "gcd-sum",
            M4 => "m4",
            S4PrimeBound => "s4-prime-bound",
            SA0Envelope => "s-a0-envelope",
            DecomposeIdentity => "decompose-identity",
            Lemma1 => "lemma1",
        }
    }

    /// Pass threshold on the per-trial ratio.
    pub fn threshold(&self) -> f64 {
        use SuiteName::*;
        match self {
            // identity residual divided by its tolerance
            ProductFormula | M4 | DecomposeIdentity => 1.0,
            LvEnvelope => 10.0,
            GcdSum => 1.0,
            S4PrimeBound => 4.0,
            SA0Envelope => 10.0,
            Lemma1 => 20.0,
        }
    }

    /// Default size bound: the modulus range for most suites, the largest
    /// `v, w` for `m4`, and the largest prime for `s4-prime-bound`.
    pub fn default_bound(&self) -> u64 {
        use SuiteName::*;
        match self {
            ProductFormula => 500,
            M4 => 50,
            S4PrimeBound => 97,
            GcdSum => 10_000,
            LvEnvelope | SA0Envelope | DecomposeIdentity | Lemma1 => 10_000,
        }
    }

    pub fn default_trials(&self) -> u64 {
        use SuiteName::*;
        match self {
            ProductFormula => 1000,
            LvEnvelope => 10_000,
            M4 => 5,
            S4PrimeBound => 2,
            DecomposeIdentity => 200,
            _ => 1000,
        }
    }
}

impl FromStr for SuiteName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use SuiteName::*;
        Ok(match s {
            "product-formula" => ProductFormula,
            "lv-envelope" => LvEnvelope,
            "gcd-sum" => GcdSum,
            "m4" => M4,
            "s4-prime-bound" => S4PrimeBound,
            "s-a0-envelope" => SA0Envelope,
            "decompose-identity" => DecomposeIdentity,
            "lemma1" => Lemma1,
            other => return Err(Error::UnknownSuite(other.to_string())),
        })
    }
}

/// Parameters of a suite run.
///
/// `trials` is the number of random instances, except for `m4` (samples per
/// coprime pair) and `s4-prime-bound` (values of `c` per prime, the first
/// being `c = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteParams {
    pub trials: u64,
    pub seed: u64,
    pub bound: u64,
    /// Largest modulus any single evaluation may use.
    pub max_q: u64,
}

impl SuiteParams {
    pub fn defaults(name: SuiteName, seed: u64) -> Self {
        SuiteParams {
            trials: name.default_trials(),
            seed,
            bound: name.default_bound(),
            max_q: 1 << 22,
        }
    }
}

const PRODUCT_TOL: f64 = 1e-6;
const M4_TOL: f64 = 1e-6;
const DECOMPOSE_TOL: f64 = 1e-8;

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn unit_mod(rng: &mut ChaCha8Rng, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    loop {
        let a = rng.random_range(1..q);
        if gcd(a, q) == 1 {
            return a;
        }
    }
}

/// `Σ_{H₂−H₁<h≤H₂} (h,v)^ρ` and `(H₁ + min(v,H₂))·d(v)`.
pub fn gcd_sum_sides(v: u64, h1: u64, h2: u64, rho: f64) -> (f64, f64) {
    let lhs: f64 = ((h2 - h1 + 1)..=h2).map(|h| (gcd(h, v) as f64).powf(rho)).sum();
    let rhs = (h1 + v.min(h2)) as f64 * divisor_count(v) as f64;
    (lhs, rhs)
}

fn record(trial: u64, inputs: String, lhs: f64, rhs: f64) -> TrialRecord {
    TrialRecord { trial, inputs, lhs, rhs, ratio: lhs / rhs }
}

/// Runs a named property over seeded random instances.
pub fn run_suite(name: &str, params: &SuiteParams) -> Result<SuiteReport> {
    let suite: SuiteName = name.parse()?;
    if params.bound == 0 {
        return Err(Error::InvalidInput("size bound must be positive".into()));
    }
    let start = Instant::now();
    let (records, skipped) = match suite {
        SuiteName::M4 => m4(params)?,
        SuiteName::S4PrimeBound => s4_prime_bound(params)?,
        _ => {
            check_bound(suite, params)?;
            let out: Vec<Option<TrialRecord>> = (0..params.trials)
                .into_par_iter()
                .map(|trial| random_trial(suite, params, trial))
                .collect::<Result<_>>()?;
            let skipped = out.iter().filter(|r| r.is_none()).count() as u64;
            (out.into_iter().flatten().collect(), skipped)
        }
    };
    Ok(SuiteReport::assemble(
        suite,
        params,
        suite.threshold(),
        records,
        skipped,
        start.elapsed(),
    ))
}

fn check_bound(suite: SuiteName, p: &SuiteParams) -> Result<()> {
    let largest = match suite {
        SuiteName::ProductFormula => p.bound.saturating_mul(p.bound),
        _ => p.bound,
    };
    if largest > p.max_q {
        return Err(Error::Resource(format!(
            "suite {} needs moduli up to {largest}, budget is {}",
            suite.as_str(),
            p.max_q
        )));
    }
    Ok(())
}

fn random_trial(suite: SuiteName, p: &SuiteParams, trial: u64) -> Result<Option<TrialRecord>> {
    let mut rng = trial_rng(p.seed, trial);
    let bound = p.bound;
    Ok(Some(match suite {
        SuiteName::ProductFormula => {
            let (u, v) = loop {
                let u = rng.random_range(1..=bound);
                let v = rng.random_range(1..=bound);
                if gcd(u, v) == 1 {
                    break (u, v);
                }
            };
            let q = u * v;
            let a = rng.random_range(0..q) as i64;
            let h = rng.random_range(0..q) as i64;
            let lhs = complete_cubic_sum(a, h, q);
            let rhs = complete_cubic_sum(a * (v * v % u.max(1)) as i64, h, u)
                * complete_cubic_sum(a * (u * u % v.max(1)) as i64, h, v);
            record(trial, format!("a={a},h={h},u={u},v={v}"), lhs.dist(&rhs), PRODUCT_TOL)
        }
        SuiteName::LvEnvelope => {
            let q = rng.random_range(1..=bound);
            let a = unit_mod(&mut rng, q);
            let h = rng.random_range(0..q);
            let s = complete_cubic_sum(a as i64, h as i64, q).abs();
            let env = (q as f64).sqrt()
                * (gcd(q, h) as f64).powf(0.25)
                * divisor_count(q) as f64;
            record(trial, format!("a={a},h={h},q={q}"), s, env)
        }
        SuiteName::GcdSum => {
            let v = rng.random_range(1..=bound);
            let h2 = rng.random_range(1..=2 * v);
            let h1 = rng.random_range(1..=h2);
            let rho = [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4usize)];
            let (lhs, rhs) = gcd_sum_sides(v, h1, h2, rho);
            record(trial, format!("v={v},h1={h1},h2={h2},rho={rho}"), lhs, rhs)
        }
        SuiteName::SA0Envelope => {
            let q = rng.random_range(1..=bound);
            let a = unit_mod(&mut rng, q);
            let s = complete_cubic_sum(a as i64, 0, q).abs();
            record(trial, format!("a={a},q={q}"), s, (q as f64).powf(2.0 / 3.0))
        }
        SuiteName::DecomposeIdentity => {
            let q = rng.random_range(1..=bound);
            let a = unit_mod(&mut rng, q);
            let t = rng.random_range(0.0..=q as f64);
            let ctx = WeylContext::new(a as i64, q, q)?;
            let residual = hq_decompose_check(&ctx, t, p.max_q)?;
            record(trial, format!("a={a},q={q},t={t}"), residual, DECOMPOSE_TOL * q as f64)
        }
        SuiteName::Lemma1 => {
            let q = rng.random_range(2..=bound.max(2));
            // N ranges over [q^{2/3}, q]
            let n_min = (1..=q).find(|&n| (q as u128).pow(2) <= (n as u128).pow(3)).unwrap();
            let n = rng.random_range(n_min..=q);
            let a = unit_mod(&mut rng, q);
            let ctx = WeylContext::new(a as i64, q, n)?;
            let (lhs, rhs) = lemma1_sides(&ctx, p.max_q)?;
            record(trial, format!("a={a},q={q},N={n}"), lhs, rhs)
        }
        SuiteName::M4 | SuiteName::S4PrimeBound => unreachable!("enumerated suites"),
    }))
}

/// `S₄(c,m,u,t;vw) = S₄(cw²,m,u,w̄t;v)·S₄(cv²,m,u,v̄t;w)` over all ordered pairs
/// `1 ≤ v, w ≤ bound`; non-coprime pairs are skipped.
fn m4(p: &SuiteParams) -> Result<(Vec<TrialRecord>, u64)> {
    let bound = p.bound;
    if bound * bound > p.max_q {
        return Err(Error::Resource(format!("m4 moduli up to {} exceed budget", bound * bound)));
    }
    let pairs: Vec<(u64, u64)> = (1..=bound)
        .flat_map(|v| (1..=bound).map(move |w| (v, w)))
        .collect();
    let results: Vec<Result<Vec<TrialRecord>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(v, w))| {
            if gcd(v, w) != 1 {
                return Ok(Vec::new());
            }
            let mut rng = trial_rng(p.seed, idx as u64);
            let (w_inv, v_inv) = (mod_inverse(w, v).unwrap(), mod_inverse(v, w).unwrap());
            let mut out = Vec::new();
            for s in 0..p.trials {
                let vw = v * w;
                let c = unit_mod(&mut rng, vw) as i64;
                let m = rng.random_range(0..vw) as i64;
                let u = rng.random_range(0..vw) as i64;
                let t = rng.random_range(0..vw) as i64;
                let spec = ShiftSpec::new(m, u);
                let lhs = PreciseTable::new(c, vw).s4(spec, t);
                let left = PreciseTable::new(c * (w * w) as i64, v).s4(spec, (w_inv as i64) * t);
                let right = PreciseTable::new(c * (v * v) as i64, w).s4(spec, (v_inv as i64) * t);
                out.push(record(
                    idx as u64 * p.trials + s,
                    format!("c={c},m={m},u={u},t={t},v={v},w={w}"),
                    (lhs - left * right).abs(),
                    M4_TOL,
                ));
            }
            Ok(out)
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = 0;
    for (r, &(v, w)) in results.into_iter().zip(&pairs) {
        let r = r?;
        if gcd(v, w) != 1 {
            skipped += 1;
        }
        records.extend(r);
    }
    Ok((records, skipped))
}

/// `max_{m,u,t} |S₄(c,m,u,t;p)| / (p^{5/2}·(p,t,m,u)^{1/2})` for every prime
/// `p ≤ bound`, one record per `(p, c)`.
fn s4_prime_bound(p: &SuiteParams) -> Result<(Vec<TrialRecord>, u64)> {
    if p.bound > p.max_q {
        return Err(Error::Resource(format!("prime bound {} exceeds budget", p.bound)));
    }
    let jobs: Vec<(u64, u64)> = primes_up_to(p.bound)
        .into_iter()
        .flat_map(|prime| (0..p.trials.max(1)).map(move |k| (prime, k)))
        .collect();
    let records: Vec<Result<TrialRecord>> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(prime, k))| {
            let c = if k == 0 {
                1
            } else {
                unit_mod(&mut trial_rng(p.seed, idx as u64), prime)
            };
            let (worst, lhs, env) = s4_prime_max(c, prime, p.max_q)?;
            Ok(TrialRecord {
                trial: idx as u64,
                inputs: format!("p={prime},c={c},argmax={worst:?}"),
                lhs,
                rhs: env,
                ratio: lhs / env,
            })
        })
        .collect();
    Ok((records.into_iter().collect::<Result<_>>()?, 0))
}

/// Worst `(m,u,t)` for one prime, with `|S₄|` and its envelope there.
pub(crate) fn s4_prime_max(c: u64, prime: u64, max_q: u64) -> Result<((u64, u64, u64), f64, f64)> {
    debug_assert!(is_prime_u64(prime));
    let table = CubicTable::new(c as i64, prime, max_q)?;
    let base = (prime as f64).powf(2.5);
    let mut best = ((0, 0, 0), 0.0, 1.0, -1.0);
    for m in 0..prime {
        for u in 0..prime {
            let all = table.s4_all(ShiftSpec::new(m as i64, u as i64));
            for (t, v) in all.iter().enumerate() {
                let g = if m == 0 && u == 0 && t == 0 { prime } else { 1 };
                let env = base * (g as f64).sqrt();
                let ratio = v.abs() / env;
                if ratio > best.3 {
                    best = ((m, u, t as u64), v.abs(), env, ratio);
                }
            }
        }
    }
    Ok((best.0, best.1, best.2))
}
