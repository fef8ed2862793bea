//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Run a subset with `cargo test -p cubic-weyl --test acceptance -- 3 11`.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cubic_weyl::arith::{gcd, primes_up_to};
use cubic_weyl::exp_sums::{complete_cubic_spectrum, CubicTable, ShiftSpec};
use cubic_weyl::factor::factorize_u64;
use cubic_weyl::factor_plan::split_q;
use cubic_weyl::harness::{
    abc_quality, exponent_scan, iteration_trace, run_suite, theorem2_corpus, CorpusSummary, SuiteName, SuiteParams,
    SUITE_NAMES,
};
use cubic_weyl::quad_field::{cyclotomic_factors, pell_fundamental, pell_power, smooth_approx};
use cubic_weyl::report::{scan_csv, suite_csv, to_json};
use cubic_weyl::{Limits, QuadraticIrrational};
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn suite(name: &str, trials: u64, bound: u64) -> cubic_weyl::SuiteReport {
    let mut p = SuiteParams::defaults(name.parse::<SuiteName>().unwrap(), SEED);
    p.trials = trials;
    p.bound = bound;
    run_suite(name, &p).unwrap()
}

fn c1_product_formula() -> Verdict {
    let r = suite("product-formula", 1000, 500);
    let worst = r.records.iter().map(|t| t.lhs).fold(0.0, f64::max);
    let ok = r.pass && r.records.len() == 1000 && within(r.runtime, Duration::from_secs(30));
    verdict(ok, format!("1000 trials, max residual {worst:.2e} (≤ 1e-6), {:.1?}", r.runtime))
}

fn c2_m4() -> Verdict {
    let r = suite("m4", 5, 50);
    let worst = r.records.iter().map(|t| t.lhs).fold(0.0, f64::max);
    // coprime ordered pairs in [1,50]²
    let pairs = (1..=50u64).flat_map(|v| (1..=50u64).map(move |w| (v, w))).filter(|&(v, w)| gcd(v, w) == 1).count();
    let ok = r.pass && r.records.len() == 5 * pairs && within(r.runtime, Duration::from_secs(60));
    verdict(ok, format!("{pairs} coprime pairs × 5, max residual {worst:.2e} (≤ 1e-6), {:.1?}", r.runtime))
}

/// `S₄(c,m,u,t;p) = p·Σ_{w,x,y} e((c(w³−x³−y³+z³) + u(w−x) + m(w−y))/p)` with
/// `z = x+y−w−t`, from expanding the four complete sums and summing over `n`.
fn s4_oracle(c: u64, m: u64, u: u64, t: u64, p: u64, roots: &[(f64, f64)]) -> (f64, f64) {
    let cube = |x: u64| x * x % p * x % p;
    let (mut re, mut im) = (0.0, 0.0);
    for w in 0..p {
        for x in 0..p {
            for y in 0..p {
                let z = (x + y + 2 * p - w - t % p) % p;
                let k = (c * ((cube(w) + cube(z) + 2 * p - cube(x) - cube(y)) % p)
                    + u * ((w + p - x) % p)
                    + m * ((w + p - y) % p))
                    % p;
                re += roots[k as usize].0;
                im += roots[k as usize].1;
            }
        }
    }
    (p as f64 * re, p as f64 * im)
}

fn c3_s4_prime_bound() -> Verdict {
    let start = Instant::now();
    let r = suite("s4-prime-bound", 6, 97);
    let mut oracle_err: f64 = 0.0;
    for p in primes_up_to(13) {
        let p = p as u64;
        let roots: Vec<(f64, f64)> = (0..p).map(|k| (TAU * k as f64 / p as f64).cos()).zip((0..p).map(|k| (TAU * k as f64 / p as f64).sin())).collect();
        for c in (1..p).take(3) {
            let table = CubicTable::new(c as i64, p, 1 << 20).unwrap();
            for m in 0..p {
                for u in 0..p {
                    let all = table.s4_all(ShiftSpec::new(m as i64, u as i64));
                    for t in 0..p {
                        let (re, im) = s4_oracle(c, m, u, t, p, &roots);
                        let v = all[t as usize];
                        oracle_err = oracle_err.max((v.re - re).hypot(v.im - im) / (p as f64).powi(4));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let worst = r.records.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    let ok = r.pass && oracle_err < 1e-10 && within(elapsed, Duration::from_secs(600));
    verdict(
        ok,
        format!(
            "measured C = {:.4} at {} (needs ≤ 4); spectrum vs direct oracle p ≤ 13: rel err {oracle_err:.1e}; {elapsed:.1?}",
            r.max_ratio, worst.inputs
        ),
    )
}

fn c4_lv_envelope() -> Verdict {
    let r = suite("lv-envelope", 10_000, 10_000);
    verdict(r.pass && r.records.len() == 10_000, format!("10000 trials, max ratio {:.4} (≤ 10), {:.1?}", r.max_ratio, r.runtime))
}

fn c5_decompose() -> Verdict {
    let r = suite("decompose-identity", 200, 10_000);
    let worst = r.records.iter().map(|t| t.lhs / t.rhs * 1e-8).fold(0.0, f64::max);
    verdict(r.pass && r.records.len() == 200, format!("200 trials, max residual/q {worst:.2e} (≤ 1e-8), {:.1?}", r.runtime))
}

fn c6_parseval() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut parseval, mut agree) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let q = rng.random_range(1..=4096u64);
        let a = loop {
            let a = rng.random_range(0..q.max(2)) % q;
            if gcd(a, q) == 1 {
                break a;
            }
        };
        let spec = complete_cubic_spectrum(a as i64, q, 1 << 20).unwrap();
        let total: f64 = spec.iter().map(|v| v.re * v.re + v.im * v.im).sum();
        parseval = parseval.max((total - (q * q) as f64).abs() / (q * q) as f64);
        // direct sums from an independent root table
        let roots: Vec<(f64, f64)> = (0..q).map(|k| (TAU * k as f64 / q as f64).sin_cos()).collect();
        let cubes: Vec<u64> = (0..q).map(|n| (a as u128 * (n as u128).pow(3) % q as u128) as u64).collect();
        for (h, v) in spec.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &cn) in cubes.iter().enumerate() {
                let (s, c) = roots[((cn + (h as u64 * n as u64) % q) % q) as usize];
                re += c;
                im += s;
            }
            agree = agree.max((v.re - re).hypot(v.im - im) / (q as f64).sqrt());
        }
    }
    verdict(
        parseval <= 1e-4 && agree <= 1e-6,
        format!("100 moduli ≤ 4096: Parseval rel err {parseval:.1e} (≤ 1e-4), spectrum vs direct {agree:.1e}·√q (≤ 1e-6)"),
    )
}

fn c7_pell() -> Verdict {
    let mut checked = 0;
    for d in [2u64, 3, 5, 7, 13] {
        let unit = pell_fundamental(d).unwrap();
        // ηⁿ by repeated multiplication in Z[√d]
        let (a, b) = (BigInt::from(unit.a().clone()), BigInt::from(unit.b().clone()));
        let (mut p, mut q) = (BigInt::one(), BigInt::from(0));
        for n in 1..=60u64 {
            (p, q) = (&p * &a + BigInt::from(d) * &q * &b, &p * &b + &q * &a);
            let t = pell_power(&unit, n).unwrap();
            if BigInt::from(t.p.clone()) != p || BigInt::from(t.q.clone()) != q {
                return verdict(false, format!("d={d} n={n}: power mismatch"));
            }
            if &p * &p - BigInt::from(d) * &q * &q != BigInt::one() {
                return verdict(false, format!("d={d} n={n}: Pell identity fails"));
            }
            let prod = cyclotomic_factors(&unit, n).unwrap().into_iter().fold(unit.b().clone(), |acc, (_, r)| acc * r);
            if BigInt::from(prod) != q {
                return verdict(false, format!("d={d} n={n}: b·∏r_k ≠ q_n"));
            }
            checked += 1;
        }
    }
    verdict(true, format!("{checked} (d, n) pairs exact"))
}

fn c8_smoothness() -> Verdict {
    let alpha = QuadraticIrrational::sqrt(2).unwrap();
    let r = smooth_approx(&alpha, 20_000, 1.0).unwrap();
    // independent trial division of 13860
    let mut rest = 13_860u64;
    let mut largest = 1;
    for p in 2..=rest {
        while rest % p == 0 {
            rest /= p;
            largest = p;
        }
    }
    let expo = (largest as f64).ln() / 13_860f64.ln();
    let ok = r.m == Some(6)
        && r.q == BigUint::from(13_860u32)
        && r.factorization.to_string() == "2^2*3^2*5*7*11"
        && largest == 11
        && r.smoothness_exponent <= 0.26
        && (r.smoothness_exponent - expo).abs() < 1e-12;
    verdict(ok, format!("m={:?}, q={} = {}, exponent {:.4} (≤ 0.26)", r.m, r.q, r.factorization, r.smoothness_exponent))
}

fn c9_trace() -> Verdict {
    let start = Instant::now();
    let split = split_q(&factorize_u64(2310).unwrap(), 200).unwrap();
    let mut blocks = 0;
    let mut worst = f64::INFINITY;
    let mut hold = true;
    for a in [1i64, 13, 17, 2309] {
        let t = iteration_trace(&split, a, 1 << 20).unwrap();
        let s = &t.summary;
        blocks += s.blocks;
        worst = worst.min(s.min_etab_slack).min(s.min_sig3_slack);
        hold &= s.inequalities_hold;
    }
    let elapsed = start.elapsed();
    verdict(
        hold && within(elapsed, Duration::from_secs(300)),
        format!(
            "split ({}, {}, {}), 4 values of a, {blocks} blocks, min (etab)/(Sig3) slack {worst:.3e}, {elapsed:.1?}",
            split.q1, split.q2, split.q3
        ),
    )
}

fn c10_scan() -> Verdict {
    let start = Instant::now();
    let alpha = QuadraticIrrational::sqrt(2).unwrap();
    let recs = exponent_scan(&alpha, 1 << 10, 1 << 17, 0.25, &Limits::default()).unwrap();
    let elapsed = start.elapsed();
    let slope = recs.last().and_then(|r| r.slope).unwrap_or(f64::NAN);
    verdict(
        slope <= 0.77 && within(elapsed, Duration::from_secs(300)),
        format!("α=√2, N=2^10..2^17: slope {slope:.4} (≤ 0.77), {elapsed:.1?}"),
    )
}

fn corpus_alphas() -> Vec<QuadraticIrrational> {
    let mut v: Vec<_> = [2u64, 3, 5, 6, 7, 10, 11, 13].iter().map(|&d| QuadraticIrrational::sqrt(d).unwrap()).collect();
    v.push(QuadraticIrrational::new(1, 1, 2, 5).unwrap());
    v
}

fn c11_theorem2() -> Verdict {
    let start = Instant::now();
    let inst = theorem2_corpus(&corpus_alphas(), 2_000_000, 8, &Limits::default()).unwrap();
    let elapsed = start.elapsed();
    match CorpusSummary::of(&inst) {
        None => verdict(false, "no feasible (split, N) instance in the corpus"),
        Some(s) => verdict(
            s.spread <= 10.0,
            format!(
                "{} instances, measured C = {:.4}, median {:.4}, max/median {:.2} (≤ 10), {elapsed:.1?}",
                s.instances, s.measured_c, s.median_ratio, s.spread
            ),
        ),
    }
}

fn c12_determinism() -> Verdict {
    let small = |name: &str| {
        let mut p = SuiteParams::defaults(name.parse::<SuiteName>().unwrap(), 7);
        p.trials = p.trials.min(40);
        p.bound = match name {
            "m4" => 12,
            "s4-prime-bound" => 31,
            "product-formula" => 100,
            _ => p.bound.min(3000),
        };
        p
    };
    for name in SUITE_NAMES {
        let p = small(name);
        let (a, b) = (run_suite(name, &p).unwrap(), run_suite(name, &p).unwrap());
        if to_json(&a) != to_json(&b) || suite_csv(&a) != suite_csv(&b) {
            return verdict(false, format!("{name} differs between runs"));
        }
    }
    let alpha = QuadraticIrrational::sqrt(3).unwrap();
    let scan = || scan_csv(&exponent_scan(&alpha, 64, 4096, 0.25, &Limits::default()).unwrap());
    let split = split_q(&factorize_u64(2310).unwrap(), 200).unwrap();
    let trace = || to_json(&iteration_trace(&split, 1, 1 << 20).unwrap());
    let abc = || to_json(&abc_quality(2, 30).unwrap());
    let corpus = || to_json(&theorem2_corpus(&corpus_alphas()[..2], 100_000, 4, &Limits::default()).unwrap());
    let ok = scan() == scan() && trace() == trace() && abc() == abc() && corpus() == corpus();
    verdict(ok, format!("{} suites plus scan, trace, abc and corpus reports byte-identical", SUITE_NAMES.len()))
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 12] = [
    (1, "product formula", c1_product_formula),
    (2, "multiplicativity of S4", c2_m4),
    (3, "S4 prime envelope", c3_s4_prime_bound),
    (4, "Loxton-Vaughan envelope", c4_lv_envelope),
    (5, "decomposition identity", c5_decompose),
    (6, "Parseval and spectrum", c6_parseval),
    (7, "Pell and cyclotomic exactness", c7_pell),
    (8, "smoothness certification", c8_smoothness),
    (9, "Cauchy-Schwarz trace", c9_trace),
    (10, "exponent scan", c10_scan),
    (11, "composite bound corpus", c11_theorem2),
    (12, "determinism", c12_determinism),
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("acceptance {id:>2} {tag} {name}: {} [{:.1?}]", v.detail, start.elapsed());
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
