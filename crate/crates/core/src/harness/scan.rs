use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{big_ln, Factorization};
use crate::factor_plan::{genthm_rhs, powerful_part, split_q, FactorSplit};
use crate::quad_field::{factor_q_n, pell_fundamental, pell_powers, smooth_approx, QuadraticIrrational};
use crate::weyl_sums::{for_each_partial, weyl_sum, Alpha};
use crate::Limits;

/// One point of an exponent scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub n: u64,
    pub abs_sum: f64,
    /// `max_{N'≤N} |S(α,N')|`.
    pub running_sup: f64,
    /// Least-squares slope of `log running_sup` against `log N` over the
    /// records so far; `None` with a single point.
    pub slope: Option<f64>,
    /// Denominator of the smooth approximation used at this `N`.
    pub q: Option<u64>,
    /// `|S(α,N)| / genthm_rhs` with `C = 1, ε = 0` when a split exists.
    pub thm2_ratio: Option<f64>,
}

/// Least-squares slope of `ys` against `xs`; `None` for fewer than two points.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Ratio of `|S(α,N)|` to the composite bound for the smooth approximation
/// with denominator at most `N^{3/2}`, when one exists and splits.
fn thm2_at(alpha: &QuadraticIrrational, n: u64, abs_sum: f64, eps: f64) -> Option<(u64, f64)> {
    let bound = (n as f64).powf(1.5).floor() as u64;
    let approx = smooth_approx(alpha, bound, eps).ok()?;
    let q = approx.q.to_u64()?;
    let split = split_q(&approx.factorization, n).ok()?;
    Some((q, abs_sum / genthm_rhs(&split, approx.delta, 0.0, 1.0)))
}

/// `|S(α,N)|` at each power of two in `[n_min, n_max]`, with the running
/// supremum over all `N' ≤ N` and the fitted log-log slope.
pub fn exponent_scan(
    alpha: &QuadraticIrrational,
    n_min: u64,
    n_max: u64,
    eps: f64,
    limits: &Limits,
) -> Result<Vec<ScanRecord>> {
    if !n_min.is_power_of_two() || !n_max.is_power_of_two() || n_min > n_max {
        return Err(Error::InvalidInput(format!(
            "scan range {n_min}..{n_max} must be powers of two in increasing order"
        )));
    }
    let mut records = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut sup = 0.0f64;
    for_each_partial(&Alpha::Quadratic(alpha.clone()), n_max, limits, |n, v| {
        let abs = v.abs();
        sup = sup.max(abs);
        if n >= n_min && n.is_power_of_two() {
            xs.push((n as f64).ln());
            ys.push(sup.ln());
            records.push(ScanRecord {
                n,
                abs_sum: abs,
                running_sup: sup,
                slope: fit_slope(&xs, &ys),
                q: None,
                thm2_ratio: None,
            });
        }
    })?;
    for rec in &mut records {
        if let Some((q, ratio)) = thm2_at(alpha, rec.n, rec.abs_sum, eps) {
            rec.q = Some(q);
            rec.thm2_ratio = Some(ratio);
        }
    }
    Ok(records)
}

/// A feasible `(split, N)` instance for the composite bound.
#[derive(Clone, Debug, Serialize)]
pub struct Thm2Instance {
    pub alpha: String,
    pub n: u64,
    pub a: i64,
    pub q: u64,
    pub delta: f64,
    pub split: FactorSplit,
    pub abs_sum: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusSummary {
    pub instances: usize,
    /// Corpus-wide constant: the largest `|S|/rhs`.
    pub measured_c: f64,
    pub median_ratio: f64,
    /// `measured_c / median_ratio`.
    pub spread: f64,
}

impl CorpusSummary {
    pub fn of(instances: &[Thm2Instance]) -> Option<Self> {
        if instances.is_empty() {
            return None;
        }
        let mut r: Vec<f64> = instances.iter().map(|i| i.ratio).collect();
        r.sort_by(|a, b| a.total_cmp(b));
        let median = if r.len() % 2 == 1 {
            r[r.len() / 2]
        } else {
            0.5 * (r[r.len() / 2 - 1] + r[r.len() / 2])
        };
        let max = *r.last().unwrap();
        Some(CorpusSummary { instances: r.len(), measured_c: max, median_ratio: median, spread: max / median })
    }
}

/// Every feasible `(split, N)` built from the Pell-power denominators of
/// each `α`: for each reduced denominator `q ≤ q_max` and each `N` on a
/// geometric grid of `steps` points in `[q^{2/3}, q]`, split `q` and, if the
/// split is valid, compare `|S(α,N)|` with the composite bound.
pub fn theorem2_corpus(
    alphas: &[QuadraticIrrational],
    q_max: u64,
    steps: u32,
    limits: &Limits,
) -> Result<Vec<Thm2Instance>> {
    let mut out = Vec::new();
    for alpha in alphas {
        let unit = pell_fundamental(alpha.d())?;
        let c = alpha.c();
        let mut n_idx = 1u64;
        loop {
            let bound = pell_powers(&unit, n_idx).pop().unwrap().q * c;
            if bound > BigUint::from(q_max) {
                break;
            }
            let bound = bound.to_u64().unwrap();
            // eps large enough that every index counts as a multiple
            let approx = smooth_approx(alpha, bound, 4.0)?;
            n_idx += 1;
            let Some((a, q)) = approx.residues() else { continue };
            let lo = (q as f64).powf(2.0 / 3.0).ceil();
            let mut seen = Vec::new();
            for i in 0..=steps {
                let n = (lo * (q as f64 / lo).powf(i as f64 / steps.max(1) as f64)).round() as u64;
                let n = n.clamp(1, q);
                if seen.contains(&n) {
                    continue;
                }
                seen.push(n);
                let Ok(split) = split_q(&approx.factorization, n) else { continue };
                let abs_sum = weyl_sum(&Alpha::Quadratic(alpha.clone()), n, limits)?.abs();
                let rhs = genthm_rhs(&split, approx.delta, 0.0, 1.0);
                out.push(Thm2Instance {
                    alpha: alpha.to_string(),
                    n,
                    a: a as i64,
                    q,
                    delta: approx.delta,
                    split,
                    abs_sum,
                    rhs,
                    ratio: abs_sum / rhs,
                });
            }
        }
    }
    Ok(out)
}

/// One row of the powerful-part report for `v = q_n`.
#[derive(Clone, Debug, Serialize)]
pub struct AbcRow {
    pub n: u64,
    pub v: String,
    pub v0: Option<String>,
    /// `log v₀ / log v`; zero for `v = 1`.
    pub exponent: Option<f64>,
    /// Set when `v` could not be factored within budget.
    pub flagged: bool,
}

/// `log(powerful part of q_n) / log q_n` for `n = 1..=n_max`.
pub fn abc_quality(d: u64, n_max: u64) -> Result<Vec<AbcRow>> {
    let unit = pell_fundamental(d)?;
    let powers = pell_powers(&unit, n_max);
    Ok(powers
        .into_iter()
        .map(|t| {
            let v = t.q.to_string();
            match factor_q_n(&unit, t.n) {
                Ok(f) => abc_row(t.n, v, &f, &t.q),
                Err(_) => AbcRow { n: t.n, v, v0: None, exponent: None, flagged: true },
            }
        })
        .collect())
}

fn abc_row(n: u64, v: String, f: &Factorization, q: &BigUint) -> AbcRow {
    let v0 = powerful_part(f);
    let lv = big_ln(q);
    let exponent = if lv > 0.0 { big_ln(&v0) / lv } else { 0.0 };
    AbcRow { n, v, v0: Some(v0.to_string()), exponent: Some(exponent), flagged: false }
}
