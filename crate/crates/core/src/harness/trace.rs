//! Direct evaluation of the block sums `η(r)`, `η₁ … η₆` for a split
//! `q = q₁q₂q₃`, checking each Cauchy–Schwarz and triangle-inequality step
//! and recording the ratios of the envelope steps.
//!
//! For block `r`, `I = ((r−1)K, (r−1)K + L*]` is the interval attaining
//! `η(r)`, `I(m) = {n : n, n + m·q₁ ∈ I}` and `I(m,u) = {n : n, n + u·q₂ ∈ I(m)}`.
//! Both halves of the `h` range are traced; the negative half uses
//! `S(a,−h;q) = S(−a,h;q)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exp_sums::{linear_sum_t, reduce, unit, CubicTable, ShiftSpec};
use crate::factor_plan::FactorSplit;

/// Largest modulus accepted by [`iteration_trace`].
pub const TRACE_MAX_Q: u64 = 10_000;
/// At most this many shifts `|m| ≤ M` (resp. `|u| ≤ U`) per side are traced.
pub const TRACE_MAX_SHIFT: i64 = 12;
/// Relative rounding allowance on the exact inequalities.
const SLACK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct RRow {
    /// `+1` or `−1` half of the `h` range.
    pub half: i8,
    pub r: u64,
    pub eta: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `η₁η₂ − M²η²`.
    pub etab_slack: f64,
    /// `M·Σ_m |η₃(r,m)| − η₂`.
    pub sig2_slack: f64,
    /// `|η₂ − Σ_{|m|≤M} (M−|m|)·η₃(r,m)|`.
    pub eta2_identity: f64,
    /// `η₁ / (q₁(K + q₁))`.
    pub sig1_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MRow {
    pub half: i8,
    pub r: u64,
    pub m: i64,
    pub eta3: f64,
    pub eta4: f64,
    pub eta5: f64,
    /// `η₄η₅/U² − |η₃|²`.
    pub sig3_slack: f64,
    /// `U·Σ_u |η₆(r,m,u)| − η₅`.
    pub sig5_slack: f64,
    /// `|η₅ − Σ_{|u|≤U} (U−|u|)·η₆(r,m,u)|`.
    pub eta5_identity: f64,
    /// `η₄ / (q₂²(K + q₂))`.
    pub sig4_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct URow {
    pub half: i8,
    pub r: u64,
    pub m: i64,
    pub u: i64,
    pub eta6: f64,
    /// `|η₆| / (q₃⁻¹ Σ_t min(K, q₃/|t|)·|S₄(t)|)`.
    pub e6e_ratio: f64,
    /// `|η₆ − q₃⁻¹ Σ_t S₄(t) Σ_{n∈I(m,u)} e(−nt/q₃)|`.
    pub completion_identity: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TraceSummary {
    pub blocks: u64,
    /// Smallest slack of each exact inequality, relative to its right side.
    pub min_etab_slack: f64,
    pub min_sig2_slack: f64,
    pub min_sig3_slack: f64,
    pub min_sig5_slack: f64,
    pub max_sig1_ratio: f64,
    pub max_sig4_ratio: f64,
    pub max_e6e_ratio: f64,
    pub max_identity_residual: f64,
    /// Every exact inequality holds within rounding.
    pub inequalities_hold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub split: FactorSplit,
    pub a: i64,
    pub k: u64,
    pub big_m: u64,
    pub big_u: u64,
    pub summary: TraceSummary,
    pub r_rows: Vec<RRow>,
    pub m_rows: Vec<MRow>,
    pub u_rows: Vec<URow>,
}

struct Tables {
    full: CubicTable,
    t1: CubicTable,
    tb: CubicTable,
    t2: CubicTable,
    t3: CubicTable,
}

impl Tables {
    fn new(a: i64, split: &FactorSplit, max_q: u64) -> Result<Self> {
        let (q1, q2, q3) = (split.q1 as i64, split.q2 as i64, split.q3 as i64);
        let q = split.q();
        let a = reduce(a, q) as i64;
        let b = a * q1 * q1 % (q2 * q3);
        Ok(Tables {
            full: CubicTable::new(a, q, max_q)?,
            t1: CubicTable::new(a * (q2 * q3 % q1).pow(2) % q1.max(1), split.q1, max_q)?,
            tb: CubicTable::new(b, split.q2 * split.q3, max_q)?,
            t2: CubicTable::new(b * q3 * q3 % q2, split.q2, max_q)?,
            t3: CubicTable::new(b * q2 * q2 % q3, split.q3, max_q)?,
        })
    }
}

fn shifts(bound: u64) -> Vec<i64> {
    let b = (bound as i64).min(TRACE_MAX_SHIFT);
    (-b..=b).collect()
}

/// Inclusive integer interval; empty when `lo > hi`.
#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: i64,
    hi: i64,
}

impl Interval {
    /// `{n : n, n + s ∈ self}`.
    fn shifted_overlap(&self, s: i64) -> Interval {
        Interval { lo: self.lo.max(self.lo - s), hi: self.hi.min(self.hi - s) }
    }
    fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }
    fn iter(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
    fn len(&self) -> i64 {
        (self.hi - self.lo + 1).max(0)
    }
}

fn rel(slack: f64, scale: f64) -> f64 {
    slack / scale.max(1.0)
}

/// Traces every inequality of the two A-process iterations and the
/// completion step for `S(a/q, N)` with the given split.
pub fn iteration_trace(split: &FactorSplit, a: i64, max_q: u64) -> Result<TraceReport> {
    let q = split.q();
    if q > TRACE_MAX_Q {
        return Err(Error::Resource(format!("trace modulus {q} exceeds {TRACE_MAX_Q}")));
    }
    if num_integer::gcd(reduce(a, q), q) != 1 {
        return Err(Error::InvalidInput(format!("a = {a} is not coprime to q = {q}")));
    }
    let (k, big_m, big_u) = (split.k(), split.big_m(), split.big_u());
    if big_m == 0 || big_u == 0 {
        return Err(Error::InfeasibleSplit("M or U is zero".into()));
    }
    let mut report = TraceReport {
        split: split.clone(),
        a,
        k,
        big_m,
        big_u,
        summary: TraceSummary {
            min_etab_slack: f64::INFINITY,
            min_sig2_slack: f64::INFINITY,
            min_sig3_slack: f64::INFINITY,
            min_sig5_slack: f64::INFINITY,
            ..Default::default()
        },
        r_rows: Vec::new(),
        m_rows: Vec::new(),
        u_rows: Vec::new(),
    };
    for (half, a_half, limit) in [(1i8, a, q / 2), (-1i8, -a, (q - 1) / 2)] {
        let tables = Tables::new(a_half, split, max_q)?;
        trace_half(split, half, &tables, limit, &mut report);
    }
    let s = &mut report.summary;
    s.inequalities_hold = [s.min_etab_slack, s.min_sig2_slack, s.min_sig3_slack, s.min_sig5_slack]
        .iter()
        .all(|&x| x >= -SLACK_TOL)
        && s.max_e6e_ratio <= 1.0 + SLACK_TOL;
    Ok(report)
}

fn trace_half(split: &FactorSplit, half: i8, t: &Tables, limit: u64, report: &mut TraceReport) {
    let k = split.k() as i64;
    let q1 = split.q1 as i64;
    let big_m = split.big_m() as i64;
    let m_range = shifts(split.big_m());
    let limit = limit as i64;

    // product formula sanity: S(a,h;q) = S(a',h;q₁)·S(b,h;q₂q₃)
    for h in 0..t.full.modulus() as i64 {
        let prod = t.t1.s(h) * t.tb.s(h);
        let res = prod.dist(&t.full.s(h));
        report.summary.max_identity_residual = report.summary.max_identity_residual.max(res);
    }

    let mut r = 1i64;
    while (r - 1) * k < limit {
        let start = (r - 1) * k;
        // η(r) and its maximising interval
        let mut running = Complex64::new(0.0, 0.0);
        let (mut eta, mut best_len) = (0.0f64, 0i64);
        for h in (start + 1)..=(start + k).min(limit) {
            running += t.full.s(h).complex();
            if running.norm() > eta {
                eta = running.norm();
                best_len = h - start;
            }
        }
        let interval = Interval { lo: start + 1, hi: start + best_len };
        let h_range = (r - 2) * k + 1..=r * k - 1;

        let eta1: f64 = h_range.clone().map(|h| t.t1.s(h).abs().powi(2)).sum();
        let eta2: f64 = h_range
            .clone()
            .map(|h| {
                (1..=big_m)
                    .filter(|&m| interval.contains(h + m * q1))
                    .map(|m| t.tb.s(h + m * q1).complex())
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();

        let mut eta3_weighted = Complex64::new(0.0, 0.0);
        let mut eta3_abs_sum = 0.0;
        for &m in &m_range {
            let im = interval.shifted_overlap(m * q1);
            let eta3: Complex64 = im
                .iter()
                .map(|n| (t.tb.s(n + m * q1) * t.tb.s(n).conj()).complex())
                .sum();
            eta3_weighted += eta3 * (big_m - m.abs()) as f64;
            eta3_abs_sum += eta3.norm();
            trace_m(split, half, t, r as u64, m, im, eta3, report);
        }
        let full_m = m_range.len() as i64 == 2 * big_m + 1;
        let rr = RRow {
            half,
            r: r as u64,
            eta,
            eta1,
            eta2,
            etab_slack: eta1 * eta2 - (big_m * big_m) as f64 * eta * eta,
            sig2_slack: if full_m { big_m as f64 * eta3_abs_sum - eta2 } else { f64::NAN },
            eta2_identity: if full_m { (eta3_weighted - eta2).norm() } else { f64::NAN },
            sig1_ratio: eta1 / (q1 as f64 * (k + q1) as f64),
        };
        let s = &mut report.summary;
        s.blocks += 1;
        s.min_etab_slack = s.min_etab_slack.min(rel(rr.etab_slack, eta1 * eta2));
        if full_m {
            s.min_sig2_slack = s.min_sig2_slack.min(rel(rr.sig2_slack, eta2));
            s.max_identity_residual = s.max_identity_residual.max(rel(rr.eta2_identity, eta2));
        }
        s.max_sig1_ratio = s.max_sig1_ratio.max(rr.sig1_ratio);
        report.r_rows.push(rr);
        r += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn trace_m(
    split: &FactorSplit,
    half: i8,
    t: &Tables,
    r: u64,
    m: i64,
    im: Interval,
    eta3: Complex64,
    report: &mut TraceReport,
) {
    let k = split.k() as i64;
    let (q1, q2, q3) = (split.q1 as i64, split.q2 as i64, split.q3);
    let big_u = split.big_u() as i64;
    let s1 = m * q1;
    let r = r as i64;
    let h_range = (r - 2) * k + 1..=r * k - 1;
    let s2_b = |h: i64| t.t2.s(h + s1) * t.t2.s(h).conj();
    let s2_c = |h: i64| t.t3.s(h + s1) * t.t3.s(h).conj();

    let eta4: f64 = h_range.clone().map(|h| s2_b(h).abs().powi(2)).sum();
    let eta5: f64 = h_range
        .map(|h| {
            (1..=big_u)
                .filter(|&u| im.contains(h + u * q2))
                .map(|u| s2_c(h + u * q2).complex())
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();

    let u_range = shifts(split.big_u());
    let full_u = u_range.len() as i64 == 2 * big_u + 1;
    let mut eta6_weighted = Complex64::new(0.0, 0.0);
    let mut eta6_abs_sum = 0.0;
    for &u in &u_range {
        let imu = im.shifted_overlap(u * q2);
        let eta6: Complex64 = imu
            .iter()
            .map(|n| (s2_c(n + u * q2) * s2_c(n).conj()).complex())
            .sum();
        eta6_weighted += eta6 * (big_u - u.abs()) as f64;
        eta6_abs_sum += eta6.norm();

        // completion over t mod q₃
        let s4 = t.t3.s4_all(ShiftSpec::new(s1, u * q2));
        let qf = q3 as f64;
        let mut envelope = 0.0;
        let mut completed = Complex64::new(0.0, 0.0);
        let q3i = q3 as i64;
        for tt in (-(q3i - 1) / 2)..=(q3i / 2) {
            let v = s4[reduce(tt, q3) as usize];
            let weight = if tt == 0 { k as f64 } else { (k as f64).min(qf / tt.abs() as f64) };
            envelope += weight * v.abs();
            if imu.len() > 0 {
                // Σ_{n=lo}^{hi} e(−nt/q₃) = e(−(lo−1)t/q₃)·T(t, len; q₃)
                let shift = unit(reduce(-(imu.lo - 1) * tt, q3), q3);
                let lin = linear_sum_t(tt, imu.len() as f64, q3).complex();
                completed += v.complex() * shift * lin;
            }
        }
        envelope /= qf;
        completed /= qf;
        let row = URow {
            half,
            r: r as u64,
            m,
            u,
            eta6: eta6.norm(),
            e6e_ratio: if envelope > 0.0 { eta6.norm() / envelope } else { 0.0 },
            completion_identity: (completed - eta6).norm(),
        };
        let s = &mut report.summary;
        s.max_e6e_ratio = s.max_e6e_ratio.max(row.e6e_ratio);
        s.max_identity_residual =
            s.max_identity_residual.max(rel(row.completion_identity, eta6.norm()));
        report.u_rows.push(row);
    }

    let uu = (big_u * big_u) as f64;
    let row = MRow {
        half,
        r: r as u64,
        m,
        eta3: eta3.norm(),
        eta4,
        eta5,
        sig3_slack: eta4 * eta5 / uu - eta3.norm_sqr(),
        sig5_slack: if full_u { big_u as f64 * eta6_abs_sum - eta5 } else { f64::NAN },
        eta5_identity: if full_u { (eta6_weighted - eta5).norm() } else { f64::NAN },
        sig4_ratio: eta4 / ((q2 * q2) as f64 * (k + q2) as f64),
    };
    let s = &mut report.summary;
    s.min_sig3_slack = s.min_sig3_slack.min(rel(row.sig3_slack, eta4 * eta5 / uu));
    if full_u {
        s.min_sig5_slack = s.min_sig5_slack.min(rel(row.sig5_slack, eta5));
        s.max_identity_residual = s.max_identity_residual.max(rel(row.eta5_identity, eta5));
    }
    s.max_sig4_ratio = s.max_sig4_ratio.max(row.sig4_ratio);
    report.m_rows.push(row);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_sums::complete_cubic_sum;

    #[test]
    fn trace_2310() {
        let split = FactorSplit::new(6, 7, 55, 200).unwrap();
        let rep = iteration_trace(&split, 1, 1 << 20).unwrap();
        assert!(rep.summary.inequalities_hold, "{:?}", rep.summary);
        assert!(rep.summary.max_identity_residual < 1e-9, "{:?}", rep.summary);
        assert!(rep.r_rows.iter().all(|r| r.etab_slack >= -1e-9 * (r.eta1 * r.eta2).max(1.0)));
        assert!(rep.summary.max_e6e_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn m_zero_eta3_is_sum_of_squares() {
        let split = FactorSplit::new(6, 7, 55, 200).unwrap();
        let rep = iteration_trace(&split, 1, 1 << 20).unwrap();
        let q23 = 7 * 55;
        let b = 36 % q23;
        let k = split.k() as i64;
        for row in rep.m_rows.iter().filter(|r| r.m == 0 && r.half == 1).take(10) {
            let rr = &rep.r_rows.iter().find(|x| x.r == row.r && x.half == 1).unwrap();
            // I(0) = I, whose length is the maximising L; recompute |S|² over it
            let start = (row.r as i64 - 1) * k;
            let full = CubicTable::new(1, 2310, 1 << 20).unwrap();
            let mut run = Complex64::new(0.0, 0.0);
            let mut best = (0.0f64, 0i64);
            for h in start + 1..=(start + k).min(1155) {
                run += full.s(h).complex();
                if run.norm() > best.0 {
                    best = (run.norm(), h - start);
                }
            }
            assert!((best.0 - rr.eta).abs() < 1e-9);
            let want: f64 = (start + 1..=start + best.1)
                .map(|n| complete_cubic_sum(b, n, q23 as u64).abs().powi(2))
                .sum();
            assert!((row.eta3 - want).abs() < 1e-8 * want.max(1.0));
        }
    }

    #[test]
    fn rejects_large_or_non_coprime() {
        let split = FactorSplit::new(6, 7, 55, 200).unwrap();
        assert!(iteration_trace(&split, 5, 1 << 20).is_err());
    }
}
