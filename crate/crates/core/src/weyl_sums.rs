//! Incomplete cubic Weyl sums `S(α,N) = Σ_{n≤N} e(αn³)`, the decomposition
//! of `S(a/q,t)` into complete sums, and the block maxima `η(r)`.

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exp_sums::{cubic_phase, linear_sum_t, reduce, unit, Accumulator, CubicTable, SumValue};
use crate::quad_field::{QuadraticIrrational, RationalApprox};
use crate::Limits;

/// Guard bits added on top of the `3⌈log₂N⌉` bits consumed by `n³`.
pub const GUARD_BITS: u32 = 96;
/// Widest fixed-point fraction supported by [`FixedPhase`].
pub const MAX_PRECISION_BITS: u32 = 1024;

const CHUNK: u64 = 1 << 14;

/// The argument of a Weyl sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Alpha {
    Quadratic(QuadraticIrrational),
    Rational { a: i64, q: u64 },
}

impl Alpha {
    pub fn to_f64(&self) -> f64 {
        match self {
            Alpha::Quadratic(x) => x.to_f64(),
            Alpha::Rational { a, q } => *a as f64 / *q as f64,
        }
    }
}

impl From<QuadraticIrrational> for Alpha {
    fn from(x: QuadraticIrrational) -> Self {
        Alpha::Quadratic(x)
    }
}

/// `P = 3⌈log₂N⌉ + 96`.
pub fn precision_for(n: u64) -> u32 {
    let log = if n <= 1 { 0 } else { 64 - (n - 1).leading_zeros() };
    3 * log + GUARD_BITS
}

/// The fractional part of `α` as a `bits`-bit fixed-point number; yields
/// the top 64 bits of `frac(α·n³)`.
#[derive(Clone, Debug)]
pub struct FixedPhase {
    limbs: Vec<u64>,
    bits: u32,
}

impl FixedPhase {
    pub fn new(alpha: &QuadraticIrrational, bits: u32) -> Result<Self> {
        if !(64..=MAX_PRECISION_BITS).contains(&bits) {
            return Err(Error::Resource(format!(
                "precision {bits} bits outside 64..={MAX_PRECISION_BITS}"
            )));
        }
        let scaled = alpha.scaled_floor(bits as u64);
        let frac = scaled.mod_floor(&(num_bigint::BigInt::from(1) << bits));
        let mut limbs = frac.to_biguint().unwrap().to_u64_digits();
        limbs.resize(bits.div_ceil(64) as usize, 0);
        Ok(FixedPhase { limbs, bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Top 64 bits of `frac(α) · n³ mod 1`, for `n³ < 2^128`.
    pub fn phase(&self, n: u64) -> u64 {
        let n3 = n as u128 * n as u128 * n as u128;
        let (lo, hi) = (n3 as u64, (n3 >> 64) as u64);
        let len = self.limbs.len();
        let mut out = [0u64; (MAX_PRECISION_BITS / 64) as usize + 1];
        for (i, &limb) in self.limbs.iter().enumerate() {
            let mut carry = 0u128;
            for (j, &m) in [lo, hi].iter().enumerate() {
                let k = i + j;
                if k >= len {
                    break;
                }
                let t = out[k] as u128 + limb as u128 * m as u128 + carry;
                out[k] = t as u64;
                carry = t >> 64;
            }
            let mut k = i + 2;
            while carry != 0 && k < len {
                let t = out[k] as u128 + carry;
                out[k] = t as u64;
                carry = t >> 64;
                k += 1;
            }
        }
        // bits [bits−64, bits) of the product
        let start = self.bits - 64;
        let (w, s) = ((start / 64) as usize, start % 64);
        let low = out[w] >> s;
        if s == 0 {
            low
        } else {
            let high = if w + 1 < len { out[w + 1] } else { 0 };
            let mask_bits = self.bits - 64 * (w as u32 + 1);
            let high = if mask_bits >= 64 { high } else { high & ((1u64 << mask_bits) - 1) };
            low | (high << (64 - s))
        }
    }
}

#[inline]
fn unit_from_fixed(x: u64) -> Complex64 {
    // interpret as a signed fraction in [−1/2, 1/2)
    let f = (x as i64) as f64 / 18446744073709551616.0;
    let (s, c) = (std::f64::consts::TAU * f).sin_cos();
    Complex64::new(c, s)
}

enum PhaseSource {
    Fixed(FixedPhase),
    Rational { a: u64, q: u64 },
}

impl PhaseSource {
    fn new(alpha: &Alpha, bits: u32) -> Result<Self> {
        Ok(match alpha {
            Alpha::Quadratic(x) => PhaseSource::Fixed(FixedPhase::new(x, bits)?),
            Alpha::Rational { a, q } => {
                if *q == 0 {
                    return Err(Error::InvalidInput("rational alpha with q = 0".into()));
                }
                PhaseSource::Rational { a: reduce(*a, *q), q: *q }
            }
        })
    }

    #[inline]
    fn term(&self, n: u64) -> Complex64 {
        match self {
            PhaseSource::Fixed(f) => unit_from_fixed(f.phase(n)),
            PhaseSource::Rational { a, q } => unit(cubic_phase(*a, 0, n % q, *q), *q),
        }
    }
}

fn check_length(n: u64, limits: &Limits) -> Result<()> {
    if n > limits.max_n {
        return Err(Error::Resource(format!("N = {n} exceeds precision budget {}", limits.max_n)));
    }
    if n >= 1 << 42 {
        return Err(Error::Resource(format!("N = {n} too large for 128-bit cubes")));
    }
    Ok(())
}

/// `S(α,N)` at the default precision ladder.
pub fn weyl_sum(alpha: &Alpha, n: u64, limits: &Limits) -> Result<SumValue> {
    weyl_sum_with_precision(alpha, n, precision_for(n), limits)
}

/// `S(α,N)` with an explicit fixed-point precision for quadratic `α`.
pub fn weyl_sum_with_precision(alpha: &Alpha, n: u64, bits: u32, limits: &Limits) -> Result<SumValue> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be >= 1".into()));
    }
    check_length(n, limits)?;
    let src = PhaseSource::new(alpha, bits)?;
    let chunks: Vec<SumValue> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::default();
            for k in (c * CHUNK + 1)..=((c + 1) * CHUNK).min(n) {
                acc.push_unit(src.term(k));
            }
            acc.value()
        })
        .collect();
    let mut acc = Accumulator::default();
    for v in chunks {
        acc.push(v);
    }
    Ok(acc.value())
}

/// Calls `f(n, S(α,n))` for every `n = 1..=N`.
pub fn for_each_partial<F>(alpha: &Alpha, n_max: u64, limits: &Limits, mut f: F) -> Result<()>
where
    F: FnMut(u64, SumValue),
{
    if n_max == 0 {
        return Ok(());
    }
    check_length(n_max, limits)?;
    let src = PhaseSource::new(alpha, precision_for(n_max))?;
    let mut acc = Accumulator::default();
    for n in 1..=n_max {
        acc.push_unit(src.term(n));
        f(n, acc.value());
    }
    Ok(())
}

/// `S(a/q,t) = Σ_{1≤n≤t} e(an³/q)`.
pub fn rational_prefix(a: i64, q: u64, t: f64) -> SumValue {
    let (a, count) = (reduce(a, q), t.floor() as u64);
    let mut acc = Accumulator::default();
    for n in 1..=count {
        acc.push_unit(unit(cubic_phase(a, 0, n % q, q), q));
    }
    acc.value()
}

/// A reduced fraction `a/q` together with a length `N` in the window
/// `N ≤ q ≤ N^{3/2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylContext {
    a: u64,
    q: u64,
    n: u64,
    k: u64,
    delta: Option<f64>,
}

impl WeylContext {
    pub fn new(a: i64, q: u64, n: u64) -> Result<Self> {
        if q == 0 || n == 0 {
            return Err(Error::InvalidInput("q and N must be positive".into()));
        }
        let a = reduce(a, q);
        if a.gcd(&q) != 1 {
            return Err(Error::InvalidInput(format!("gcd({a}, {q}) != 1")));
        }
        if n > q {
            return Err(Error::InvalidInput(format!("N = {n} exceeds q = {q}")));
        }
        if (q as u128).pow(2) > (n as u128).pow(3) {
            return Err(Error::InvalidInput(format!("q = {q} exceeds N^(3/2) for N = {n}")));
        }
        Ok(WeylContext { a, q, n, k: q / n, delta: None })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn a(&self) -> u64 {
        self.a
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    /// `K = ⌊q/N⌋`.
    pub fn k(&self) -> u64 {
        debug_assert_eq!(self.k, self.q / self.n);
        self.k
    }
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// Largest `h` in the positive half `0 < h ≤ q/2`.
    pub fn positive_limit(&self) -> u64 {
        self.q / 2
    }

    /// Largest `|h|` in the negative half `−q/2 < h < 0`.
    pub fn negative_limit(&self) -> u64 {
        (self.q - 1) / 2
    }
}

/// `|S(a/q,t) − q⁻¹ Σ_{−q/2<h≤q/2} S(a,h;q)·T(h,t;q)|`.
pub fn hq_decompose_check(ctx: &WeylContext, t: f64, max_q: u64) -> Result<f64> {
    let table = CubicTable::new(ctx.a as i64, ctx.q, max_q)?;
    Ok(hq_residual(ctx, &table, t))
}

pub(crate) fn hq_residual(ctx: &WeylContext, table: &CubicTable, t: f64) -> f64 {
    let q = ctx.q as i64;
    let lhs = rational_prefix(ctx.a as i64, ctx.q, t);
    let mut acc = Accumulator::default();
    for h in (-(q - 1) / 2)..=(q / 2) {
        acc.push(table.s(h) * linear_sum_t(h, t, ctx.q));
    }
    let rhs = acc.value().scale(1.0 / ctx.q as f64);
    lhs.dist(&rhs)
}

/// Block maximum over `(start, start + L]` for `L ≤ len`, clipped to `h ≤ limit`.
fn block_max(table: &CubicTable, start: u64, len: u64, limit: u64) -> f64 {
    let mut best = 0.0f64;
    let mut running = Complex64::new(0.0, 0.0);
    let end = (start + len).min(limit);
    for h in (start + 1)..=end {
        running += table.s(h as i64).complex();
        best = best.max(running.norm());
    }
    best
}

/// `η(r) = max_{0≤L≤K} |Σ_{(r−1)K<h≤(r−1)K+L} S(a,h;q)|` over the positive
/// half `h ≤ q/2`. `table` must hold `S(a,·;q)`.
pub fn eta_r(ctx: &WeylContext, table: &CubicTable, r: u64) -> f64 {
    assert!(r >= 1, "r must be >= 1");
    block_max(table, (r - 1) * ctx.k, ctx.k, ctx.positive_limit())
}

/// `η(r)` for the negative half, i.e. over `h' = −h` with `S(a,−h';q) = S(−a,h';q)`.
/// `neg_table` must hold `S(−a,·;q)`.
pub fn eta_r_negative(ctx: &WeylContext, neg_table: &CubicTable, r: u64) -> f64 {
    assert!(r >= 1, "r must be >= 1");
    block_max(neg_table, (r - 1) * ctx.k, ctx.k, ctx.negative_limit())
}

/// Both sides of `|S(a/q,N)| ≤ C·(N/q)·Σ_{r≤q} η(r)/r`, with the `h = 0`
/// term and both halves of the `h` range included. Returns `(lhs, rhs)`.
pub fn lemma1_sides(ctx: &WeylContext, max_q: u64) -> Result<(f64, f64)> {
    let pos = CubicTable::new(ctx.a as i64, ctx.q, max_q)?;
    let neg = CubicTable::new(-(ctx.a as i64), ctx.q, max_q)?;
    let lhs = rational_prefix(ctx.a as i64, ctx.q, ctx.n as f64).abs();
    let mut sum = pos.s(0).abs();
    let k = ctx.k;
    for r in 1..=ctx.q {
        if (r - 1) * k >= ctx.positive_limit() {
            break;
        }
        sum += (eta_r(ctx, &pos, r) + eta_r_negative(ctx, &neg, r)) / r as f64;
    }
    Ok((lhs, ctx.n as f64 / ctx.q as f64 * sum))
}

/// `|S(α,N)| / ((1 + N³|δ|)·max_{t≤N} |S(a/q,t)|)` for `δ = α − a/q`.
pub fn transfer_bound_check(
    alpha: &QuadraticIrrational,
    approx: &RationalApprox,
    n: u64,
    limits: &Limits,
) -> Result<f64> {
    let (a, q) = approx
        .residues()
        .ok_or_else(|| Error::Resource(format!("denominator {} exceeds 64 bits", approx.q)))?;
    let lhs = weyl_sum(&Alpha::Quadratic(alpha.clone()), n, limits)?.abs();
    let mut best = 0.0f64;
    for_each_partial(&Alpha::Rational { a: a as i64, q }, n, limits, |_, v| {
        best = best.max(v.abs())
    })?;
    let n3 = n.to_f64().unwrap().powi(3);
    Ok(lhs / ((1.0 + n3 * approx.delta.abs()) * best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_field::smooth_approx;
    use num_bigint::{BigInt, BigUint};

    const BIG: u64 = 1 << 22;

    fn sqrt2() -> Alpha {
        Alpha::Quadratic(QuadraticIrrational::sqrt(2).unwrap())
    }

    /// frac(√2·n³) from a 512-bit integer square root, independent of `FixedPhase`.
    fn reference_sum(d: u64, n_max: u64) -> Complex64 {
        let bits = 512u64;
        let s = (BigUint::from(d) << (2 * bits)).sqrt();
        let one = BigUint::from(1u32) << bits;
        (1..=n_max).fold(Complex64::new(0.0, 0.0), |acc, n| {
            let frac = (&s * BigUint::from(n).pow(3)) % &one;
            let top = (frac >> (bits - 64)).to_u64_digits().first().copied().unwrap_or(0);
            acc + unit_from_fixed(top)
        })
    }

    #[test]
    fn single_term_and_rational() {
        let limits = Limits::default();
        let v = weyl_sum(&sqrt2(), 1, &limits).unwrap();
        let angle = std::f64::consts::TAU * 2f64.sqrt();
        assert!((v.re - angle.cos()).abs() < 1e-14 && (v.im - angle.sin()).abs() < 1e-14);
        let v = weyl_sum(&Alpha::Rational { a: 1, q: 2 }, 4, &limits).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(weyl_sum(&sqrt2(), 0, &limits).is_err());
        let tight = Limits { max_n: 10, ..limits };
        assert!(matches!(weyl_sum(&sqrt2(), 11, &tight), Err(Error::Resource(_))));
    }

    #[test]
    fn matches_512_bit_reference() {
        let limits = Limits::default();
        for n in [10u64, 1000, 50_000] {
            let got = weyl_sum(&sqrt2(), n, &limits).unwrap();
            let want = reference_sum(2, n);
            assert!((got.complex() - want).norm() < 1e-12 * (n as f64).max(100.0) / 100.0 + 1e-12,
                "n = {n}");
            assert!((got.complex() - want).norm() <= got.err);
        }
    }

    #[test]
    fn fixed_phase_matches_bigint() {
        let x = QuadraticIrrational::new(-3, 5, 7, 11).unwrap();
        for bits in [64u32, 100, 128, 157, 300] {
            let fp = FixedPhase::new(&x, bits).unwrap();
            let scaled = x.scaled_floor(bits as u64);
            let modulus = BigInt::from(1) << bits;
            for n in [1u64, 2, 3, 1000, 123_456, 1 << 40] {
                let prod = (&scaled * BigInt::from(n).pow(3)).mod_floor(&modulus);
                let top = (prod >> (bits - 64)).to_u64().unwrap();
                assert_eq!(fp.phase(n), top, "bits={bits} n={n}");
            }
        }
    }

    #[test]
    fn precision_doubling_is_stable() {
        let limits = Limits::default();
        for n in [1u64 << 10, 1 << 16, 1 << 20] {
            let p = precision_for(n);
            let a = weyl_sum_with_precision(&sqrt2(), n, p, &limits).unwrap();
            let b = weyl_sum_with_precision(&sqrt2(), n, 2 * p, &limits).unwrap();
            assert!(a.dist(&b) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn context_validation() {
        assert!(WeylContext::new(2, 4, 4).is_err());
        assert!(WeylContext::new(1, 12, 13).is_err());
        assert!(WeylContext::new(1, 100, 10).is_err());
        let ctx = WeylContext::new(-1, 12, 6).unwrap();
        assert_eq!((ctx.a(), ctx.k()), (11, 2));
    }

    #[test]
    fn decomposition_examples() {
        let ctx = WeylContext::new(1, 5, 5).unwrap();
        assert!(hq_decompose_check(&ctx, 3.0, BIG).unwrap() <= 1e-10);
        assert!(hq_decompose_check(&ctx, 5.0, BIG).unwrap() <= 1e-10);
        let ctx = WeylContext::new(1, 9, 9).unwrap();
        assert!(hq_decompose_check(&ctx, 9.0, BIG).unwrap() <= 1e-10);
        assert!((rational_prefix(1, 9, 9.0).re - 7.5963).abs() < 1e-4);
    }

    #[test]
    fn eta_small_example() {
        let ctx = WeylContext::new(1, 12, 6).unwrap();
        let table = CubicTable::new(1, 12, BIG).unwrap();
        let s1 = crate::exp_sums::complete_cubic_sum(1, 1, 12);
        let s2 = crate::exp_sums::complete_cubic_sum(1, 2, 12);
        let want = 0f64.max(s1.abs()).max((s1 + s2).abs());
        assert!((eta_r(&ctx, &table, 1) - want).abs() < 1e-10);
        // block past q/2 is empty
        assert_eq!(eta_r(&ctx, &table, 7), 0.0);
    }

    #[test]
    fn transfer_ratio_for_exact_rational_approx() {
        let limits = Limits::default();
        let alpha = QuadraticIrrational::sqrt(2).unwrap();
        let approx = smooth_approx(&alpha, 70, 1.0).unwrap();
        assert_eq!(approx.q, BigUint::from(70u32));
        for n in [1u64, 10, 50] {
            let ratio = transfer_bound_check(&alpha, &approx, n, &limits).unwrap();
            assert!(ratio.is_finite() && ratio <= 10.0, "n = {n}: {ratio}");
        }
        assert!(transfer_bound_check(&alpha, &approx, 1, &limits).unwrap() <= 1.0 + 1e-9);
    }
}
