use std::fs;

use cubic_weyl::exp_sums::complete_cubic_spectrum;
use cubic_weyl::factor::factorize_u64;
use cubic_weyl::factor_plan::split_q;
use cubic_weyl::harness::{abc_quality, exponent_scan, iteration_trace, run_suite, SuiteName, SuiteParams};
use cubic_weyl::quad_field::smooth_approx;
use cubic_weyl::report::{abc_csv, scan_csv, suite_csv, to_json};
use cubic_weyl::weyl_sums::{precision_for, weyl_sum};
use cubic_weyl::{Error, FactorSplit, QuadraticIrrational, Result};
use serde_json::json;

use crate::config::{AlphaSpec, Config, Format};

/// What a subcommand produced: the report text and whether its checks passed.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, pass: true }
    }
}

pub fn write(cfg: &Config, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Resource(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn json_only(cfg: &Config, cmd: &str) -> Result<()> {
    if cfg.format == Format::Csv {
        return Err(Error::InvalidInput(format!("{cmd} reports are JSON only")));
    }
    Ok(())
}

pub fn approx(cfg: &Config, d: Option<u64>, alpha: Option<AlphaSpec>, bound: u64, eps: f64) -> Result<Outcome> {
    let alpha: QuadraticIrrational = match (d, alpha) {
        (Some(d), None) => QuadraticIrrational::sqrt(d)?,
        (None, Some(a)) => a.quadratic()?.clone(),
        _ => return Err(Error::InvalidInput("give exactly one of --d and --alpha".into())),
    };
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("--eps must be positive".into()));
    }
    let r = smooth_approx(&alpha, bound, eps)?;
    let text = match cfg.format {
        Format::Json => to_json(&json!({ "alpha": alpha.to_string(), "bound": bound, "eps": eps, "approx": r })),
        Format::Csv => csv_rows(
            &["a", "q", "err_bound", "factorization", "smoothness_exponent", "n", "m", "certified"],
            &[vec![
                r.a.to_string(),
                r.q.to_string(),
                r.err_bound.to_string(),
                r.factorization.to_string(),
                r.smoothness_exponent.to_string(),
                r.n.to_string(),
                r.m.map(|m| m.to_string()).unwrap_or_default(),
                r.certified.to_string(),
            ]],
        ),
    };
    Ok(Outcome::ok(text))
}

pub fn sum(cfg: &Config, alpha: &AlphaSpec, n: u64) -> Result<Outcome> {
    let v = weyl_sum(&alpha.0, n, &cfg.limits)?;
    let bits = precision_for(n);
    let text = match cfg.format {
        Format::Json => to_json(&json!({
            "alpha": alpha.0,
            "N": n,
            "re": v.re,
            "im": v.im,
            "abs": v.abs(),
            "err": v.err,
            "precision_bits": bits,
        })),
        Format::Csv => csv_rows(
            &["N", "re", "im", "abs", "err"],
            &[vec![n.to_string(), v.re.to_string(), v.im.to_string(), v.abs().to_string(), v.err.to_string()]],
        ),
    };
    Ok(Outcome::ok(text))
}

pub fn spectrum(cfg: &Config, a: i64, q: u64) -> Result<Outcome> {
    if q == 0 {
        return Err(Error::InvalidInput("--q must be positive".into()));
    }
    let values = complete_cubic_spectrum(a, q, cfg.limits.max_q)?;
    let text = match cfg.format {
        Format::Json => {
            let rows: Vec<_> = values
                .iter()
                .enumerate()
                .map(|(h, v)| json!({ "h": h, "re": v.re, "im": v.im, "err": v.err }))
                .collect();
            to_json(&json!({ "a": a, "q": q, "values": rows }))
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = values
                .iter()
                .enumerate()
                .map(|(h, v)| vec![h.to_string(), v.re.to_string(), v.im.to_string(), v.abs().to_string(), v.err.to_string()])
                .collect();
            csv_rows(&["h", "re", "im", "abs", "err"], &rows)
        }
    };
    Ok(Outcome::ok(text))
}

pub fn split(cfg: &Config, q: u64, n: u64) -> Result<Outcome> {
    if q == 0 || n == 0 {
        return Err(Error::InvalidInput("--q and --N must be positive".into()));
    }
    let s = split_q(&factorize_u64(q)?, n)?;
    let text = match cfg.format {
        Format::Json => to_json(&json!({
            "split": s,
            "q": s.q(),
            "K": s.k(),
            "M": s.big_m(),
            "U": s.big_u(),
        })),
        Format::Csv => csv_rows(
            &["q0", "q1", "q2", "q3", "N", "K", "M", "U"],
            &[[s.q0, s.q1, s.q2, s.q3, s.n, s.k(), s.big_m(), s.big_u()].iter().map(u64::to_string).collect()],
        ),
    };
    Ok(Outcome::ok(text))
}

pub fn verify(cfg: &Config, suite: &str, trials: Option<u64>, bound: Option<u64>) -> Result<Outcome> {
    let name: SuiteName = suite.parse()?;
    let mut params = SuiteParams::defaults(name, cfg.seed);
    params.max_q = cfg.limits.max_q;
    if let Some(t) = trials {
        params.trials = t;
    }
    if let Some(b) = bound {
        params.bound = b;
    }
    let report = run_suite(suite, &params)?;
    eprintln!(
        "{}: max ratio {:.6} (threshold {}), {} records, {} skipped, {} in {:.2?}",
        report.suite,
        report.max_ratio,
        report.threshold,
        report.records.len(),
        report.skipped,
        if report.pass { "pass" } else { "FAIL" },
        report.runtime,
    );
    let text = match cfg.format {
        Format::Json => to_json(&report),
        Format::Csv => suite_csv(&report),
    };
    Ok(Outcome { text, pass: report.pass })
}

pub fn trace(cfg: &Config, q: Option<u64>, parts: Option<(u64, u64, u64)>, n: u64, a: i64) -> Result<Outcome> {
    json_only(cfg, "trace")?;
    let split = match (q, parts) {
        (Some(q), None) => split_q(&factorize_u64(q)?, n)?,
        (None, Some((q1, q2, q3))) => FactorSplit::new(q1, q2, q3, n)?,
        _ => return Err(Error::InvalidInput("give either --q or all of --q1 --q2 --q3".into())),
    };
    let report = iteration_trace(&split, a, cfg.limits.max_q)?;
    let s = &report.summary;
    eprintln!(
        "trace q={} N={}: {} blocks, min slacks etab {:.3e} sig2 {:.3e} sig3 {:.3e} sig5 {:.3e}, {}",
        split.q(),
        n,
        s.blocks,
        s.min_etab_slack,
        s.min_sig2_slack,
        s.min_sig3_slack,
        s.min_sig5_slack,
        if s.inequalities_hold { "hold" } else { "VIOLATED" },
    );
    let pass = s.inequalities_hold;
    Ok(Outcome { text: to_json(&report), pass })
}

pub fn scan(cfg: &Config, alpha: &AlphaSpec, n_min: u64, n_max: u64, eps: f64) -> Result<Outcome> {
    let records = exponent_scan(alpha.quadratic()?, n_min, n_max, eps, &cfg.limits)?;
    let text = match cfg.format {
        Format::Json => to_json(&json!({
            "alpha": alpha.0,
            "slope": records.last().and_then(|r| r.slope),
            "records": records,
        })),
        Format::Csv => scan_csv(&records),
    };
    Ok(Outcome::ok(text))
}

pub fn abc(cfg: &Config, d: u64, n_max: u64) -> Result<Outcome> {
    if n_max == 0 {
        return Err(Error::InvalidInput("--n-max must be positive".into()));
    }
    let rows = abc_quality(d, n_max)?;
    let text = match cfg.format {
        Format::Json => to_json(&json!({ "d": d, "rows": rows })),
        Format::Csv => abc_csv(&rows),
    };
    Ok(Outcome::ok(text))
}
