//! Exact arithmetic in Z[√d]: Pell units, the power sequence
//! `p_n + q_n√d = ηⁿ`, its cyclotomic factors, and rational approximations
//! to quadratic irrationals whose denominators have only small prime factors.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{divisors, is_square, mobius, primes_up_to};
use crate::error::{Error, Result};
use crate::factor::{big_ln, factorize, factorize_u64, Factorization};

/// The real number `(f + g√d) / c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadraticIrrational {
    f: i64,
    g: i64,
    c: u64,
    d: u64,
}

impl QuadraticIrrational {
    pub fn new(f: i64, g: i64, c: u64, d: u64) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidInput("g must be nonzero".into()));
        }
        if c == 0 {
            return Err(Error::InvalidInput("c must be positive".into()));
        }
        if d < 2 || is_square(d) {
            return Err(Error::InvalidInput(format!("d = {d} must be a nonsquare >= 2")));
        }
        Ok(QuadraticIrrational { f, g, c, d })
    }

    /// `√d`.
    pub fn sqrt(d: u64) -> Result<Self> {
        Self::new(0, 1, 1, d)
    }

    pub fn f(&self) -> i64 {
        self.f
    }
    pub fn g(&self) -> i64 {
        self.g
    }
    pub fn c(&self) -> u64 {
        self.c
    }
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn to_f64(&self) -> f64 {
        (self.f as f64 + self.g as f64 * (self.d as f64).sqrt()) / self.c as f64
    }

    /// `⌊α·2^bits⌋` up to an error below `|g|/c + 1`.
    pub fn scaled_floor(&self, bits: u64) -> BigInt {
        let s = sqrt_scaled(self.d, bits);
        let num = (BigInt::from(self.f) << bits) + BigInt::from(self.g) * BigInt::from(s);
        num.div_floor(&BigInt::from(self.c))
    }

    /// Encloses `α − a/q`. Returns `(midpoint, upper bound on |α − a/q|)`.
    pub fn error_of(&self, a: &BigInt, q: &BigUint) -> (f64, f64) {
        // α − a/q = (x + y√d)/(cq) with x = fq − ac, y = gq
        let qi = BigInt::from(q.clone());
        let x = BigInt::from(self.f) * &qi - a * BigInt::from(self.c);
        let y = BigInt::from(self.g) * &qi;
        let scale = x.magnitude().bits().max(y.magnitude().bits()) + self.d.ilog2() as u64 + 2;
        let bits = 2 * scale + 128;
        let s = BigInt::from(sqrt_scaled(self.d, bits));
        let base = (&x << bits) + &y * &s;
        // √d·2^bits lies in [s, s + 1)
        let (lo, hi) = if y.sign() == Sign::Minus {
            (&base + &y, base)
        } else {
            (base.clone(), &base + &y)
        };
        let denom = BigInt::from(self.c) * &qi;
        let upper_mag = lo.magnitude().max(hi.magnitude()).clone();
        let mid = (&lo + &hi) >> 1u32;
        let upper = ratio_to_f64(&upper_mag, denom.magnitude(), bits) * (1.0 + f64::EPSILON);
        let midf = ratio_to_f64(mid.magnitude(), denom.magnitude(), bits);
        let midf = if mid.is_negative() { -midf } else { midf };
        (midf, upper)
    }
}

impl std::fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} + {}√{})/{}", self.f, self.g, self.d, self.c)
    }
}

/// `⌊√d · 2^bits⌋`.
pub fn sqrt_scaled(d: u64, bits: u64) -> BigUint {
    (BigUint::from(d) << (2 * bits)).sqrt()
}

/// `num / (den · 2^bits)` as an f64.
fn ratio_to_f64(num: &BigUint, den: &BigUint, bits: u64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // keep 80 significant bits in the quotient
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let shift = 80 - (nb - db);
    let quotient = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        (num >> (-shift) as u64) / den
    };
    let exp = -(shift + bits as i64);
    let half = exp / 2;
    quotient.to_f64().unwrap() * 2f64.powi(half as i32) * 2f64.powi((exp - half) as i32)
}

/// Fundamental solution `η = a + b√d` of `a² − d·b² = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PellUnit {
    a: BigUint,
    b: BigUint,
    d: u64,
}

impl PellUnit {
    pub fn a(&self) -> &BigUint {
        &self.a
    }
    pub fn b(&self) -> &BigUint {
        &self.b
    }
    pub fn d(&self) -> u64 {
        self.d
    }

    /// `ln η`, computed as `ln a + ln(1 + √(1 − 1/a²))`.
    pub fn ln_eta(&self) -> f64 {
        let a = &self.a;
        let inv_sq = if a.bits() > 500 {
            0.0
        } else {
            1.0 / a.to_f64().unwrap().powi(2)
        };
        big_ln(a) + (1.0 + (1.0 - inv_sq).sqrt()).ln()
    }

    /// `ln(2a)`, i.e. the log of `η + η⁻¹`.
    pub fn ln_two_a(&self) -> f64 {
        big_ln(&self.a) + std::f64::consts::LN_2
    }

    /// `a² − d·b² == 1`.
    pub fn check(&self) -> bool {
        &self.a * &self.a == BigUint::from(self.d) * &self.b * &self.b + 1u32
    }
}

/// `p_n + q_n√d = ηⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerTerm {
    pub n: u64,
    pub p: BigUint,
    pub q: BigUint,
}

/// Least solution of `a² − d·b² = 1` from the periodic continued fraction of √d.
pub fn pell_fundamental(d: u64) -> Result<PellUnit> {
    if d < 2 || is_square(d) {
        return Err(Error::InvalidInput(format!("d = {d} must be a nonsquare >= 2")));
    }
    let a0 = d.isqrt();
    let (mut m, mut den, mut term) = (0u64, 1u64, a0);
    // convergents h/k
    let (mut h_prev, mut h) = (BigUint::one(), BigUint::from(a0));
    let (mut k_prev, mut k) = (BigUint::zero(), BigUint::one());
    let bd = BigUint::from(d);
    loop {
        if &h * &h == &bd * &k * &k + 1u32 {
            return Ok(PellUnit { a: h, b: k, d });
        }
        m = den * term - m;
        den = (d - m * m) / den;
        term = (a0 + m) / den;
        let h_next = &h * term + &h_prev;
        let k_next = &k * term + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
    }
}

/// `ηⁿ` by binary powering in Z[√d].
pub fn pell_power(unit: &PellUnit, n: u64) -> Result<PowerTerm> {
    if n == 0 {
        return Err(Error::InvalidInput("power index must be >= 1".into()));
    }
    let d = BigUint::from(unit.d);
    let mul = |(x1, y1): (&BigUint, &BigUint), (x2, y2): (&BigUint, &BigUint)| {
        (x1 * x2 + &d * y1 * y2, x1 * y2 + x2 * y1)
    };
    let mut acc = (BigUint::one(), BigUint::zero());
    let mut base = (unit.a.clone(), unit.b.clone());
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul((&acc.0, &acc.1), (&base.0, &base.1));
        }
        e >>= 1;
        if e > 0 {
            base = mul((&base.0, &base.1), (&base.0, &base.1));
        }
    }
    Ok(PowerTerm { n, p: acc.0, q: acc.1 })
}

/// Terms `1..=n_max` via `x_{n+1} = 2a·x_n − x_{n−1}`.
pub fn pell_powers(unit: &PellUnit, n_max: u64) -> Vec<PowerTerm> {
    let two_a = &unit.a << 1u32;
    let mut out = Vec::with_capacity(n_max as usize);
    // n = 0 term is (1, 0)
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (unit.a.clone(), unit.b.clone());
    for n in 1..=n_max {
        out.push(PowerTerm { n, p: p.clone(), q: q.clone() });
        let p_next = &two_a * &p - &p_prev;
        let q_next = &two_a * &q - &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    out
}

/// `r_k = |Φ_k(η, η⁻¹)|` as the Möbius quotient `∏_{j|k} q_j^{μ(k/j)}`.
pub fn lucas_ratio(unit: &PellUnit, k: u64) -> Result<BigUint> {
    if k < 2 {
        return Err(Error::InvalidInput("cyclotomic index must be >= 2".into()));
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in divisors(k) {
        match mobius(k / j) {
            1 => num *= pell_power(unit, j)?.q,
            -1 => den *= pell_power(unit, j)?.q,
            _ => {}
        }
    }
    let (quot, rem) = num.div_rem(&den);
    if !rem.is_zero() {
        return Err(Error::Internal(format!("q-quotient for r_{k} is not exact")));
    }
    Ok(quot)
}

/// `(k, r_k)` for every divisor `k ≥ 2` of `n`; their product times `b` is `q_n`.
pub fn cyclotomic_factors(unit: &PellUnit, n: u64) -> Result<Vec<(u64, BigUint)>> {
    divisors(n)
        .into_iter()
        .filter(|&k| k >= 2)
        .map(|k| lucas_ratio(unit, k).map(|r| (k, r)))
        .collect()
}

/// Factorization of `q_n`, assembled from the factorizations of `b` and each `r_k`.
pub fn factor_q_n(unit: &PellUnit, n: u64) -> Result<Factorization> {
    let mut f = factorize(&unit.b)?;
    for (_, r) in cyclotomic_factors(unit, n)? {
        f = f.mul(&factorize(&r)?);
    }
    Ok(f)
}

/// Smallest `m` with `φ(m)/m ≤ ε·ln η / (2 ln 2a)`, or `None` if it exceeds `u64`.
///
/// `φ(m)/m` only depends on the primes dividing `m`, and the `k` smallest
/// primes minimise it among all `m` with `k` prime factors, so the first
/// such `m` in increasing order is always a primorial.
pub fn choose_m(unit: &PellUnit, eps: f64) -> Option<u64> {
    let threshold = eps * unit.ln_eta() / (2.0 * unit.ln_two_a());
    if threshold >= 1.0 {
        return Some(1);
    }
    let mut m = 1u64;
    let mut ratio = 1.0f64;
    for p in primes_up_to(1000) {
        m = m.checked_mul(p)?;
        ratio *= 1.0 - 1.0 / p as f64;
        if ratio <= threshold {
            return Some(m);
        }
    }
    None
}

/// A rational approximation `a/q` with its certified error and the
/// factorization of `q`.
#[derive(Clone, Debug, Serialize)]
pub struct RationalApprox {
    #[serde(serialize_with = "ser_display")]
    pub a: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub q: BigUint,
    /// Upper bound on `|α − a/q|`.
    pub err_bound: f64,
    /// Signed `α − a/q`, to working precision.
    pub delta: f64,
    pub factorization: Factorization,
    pub smoothness_exponent: f64,
    /// Index of the Pell power used.
    pub n: u64,
    pub m: Option<u64>,
    /// `m | n` and every prime of `q` is at most `q^ε`.
    pub certified: bool,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl RationalApprox {
    /// `(a mod q, q)` when `q` fits in a `u64`.
    pub fn residues(&self) -> Option<(u64, u64)> {
        let q = self.q.to_u64()?;
        let a = self.a.mod_floor(&BigInt::from(q)).to_u64()?;
        Some((a, q))
    }
}

/// Approximates `α` by `a/q` with `c·q_n ≤ bound`, preferring indices `n`
/// that are multiples of `choose_m(ε)` so that `q` is smooth.
pub fn smooth_approx(alpha: &QuadraticIrrational, bound: u64, eps: f64) -> Result<RationalApprox> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let unit = pell_fundamental(alpha.d)?;
    let m = choose_m(&unit, eps);
    let c = BigUint::from(alpha.c);
    let limit = BigUint::from(bound);

    let two_a = &unit.a << 1u32;
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (unit.a.clone(), unit.b.clone());
    let mut last: Option<PowerTerm> = None;
    let mut smooth: Option<PowerTerm> = None;
    let mut n = 1u64;
    while &c * &q <= limit {
        let term = PowerTerm { n, p: p.clone(), q: q.clone() };
        if m.is_some_and(|m| n % m == 0) {
            smooth = Some(term.clone());
        }
        last = Some(term);
        let p_next = &two_a * &p - &p_prev;
        let q_next = &two_a * &q - &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        n += 1;
    }
    let from_multiple = smooth.is_some();
    let term = smooth.or(last).ok_or_else(|| {
        Error::NoApproximation(format!("no Pell denominator with c·q_n <= {bound}"))
    })?;

    let (u, v) = (BigInt::from(term.p.clone()), BigInt::from(term.q.clone()));
    let a1 = BigInt::from(alpha.f) * &v + BigInt::from(alpha.g) * &u;
    let q1 = BigInt::from(alpha.c) * &v;
    let g = a1.gcd(&q1);
    let a = &a1 / &g;
    let qq = (&q1 / &g).to_biguint().expect("positive denominator");

    let factorization = factorize_u64(alpha.c)?
        .mul(&factor_q_n(&unit, term.n)?)
        .div_exact(g.magnitude())?;
    if factorization.value() != qq {
        return Err(Error::Internal("factorization does not multiply back to q".into()));
    }
    let smoothness_exponent = factorization.smoothness_exponent();
    let (delta, err_bound) = alpha.error_of(&a, &qq);
    Ok(RationalApprox {
        a,
        q: qq,
        err_bound,
        delta,
        factorization,
        smoothness_exponent,
        n: term.n,
        m,
        certified: from_multiple && smoothness_exponent <= eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::totient;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn pell_brute_force_oracle() {
        // smallest b with d·b² + 1 a square
        for d in [2u64, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 17, 19, 21] {
            let b = (1u64..)
                .find(|&b| is_square(d * b * b + 1))
                .unwrap();
            let a = (d * b * b + 1).isqrt();
            let unit = pell_fundamental(d).unwrap();
            assert_eq!((unit.a.clone(), unit.b.clone()), (big(a), big(b)), "d = {d}");
        }
    }

    #[test]
    fn pell_examples() {
        let u = pell_fundamental(2).unwrap();
        assert_eq!((u.a(), u.b()), (&big(3), &big(2)));
        let u = pell_fundamental(3).unwrap();
        assert_eq!((u.a(), u.b()), (&big(2), &big(1)));
        let u = pell_fundamental(61).unwrap();
        assert_eq!((u.a(), u.b()), (&big(1766319049), &big(226153980)));
        assert!(u.check());
        assert!(matches!(pell_fundamental(4), Err(Error::InvalidInput(_))));
        assert!(pell_fundamental(1).is_err());
        assert!(pell_fundamental(0).is_err());
    }

    #[test]
    fn powers_of_three_plus_two_root_two() {
        let u = pell_fundamental(2).unwrap();
        let got: Vec<(BigUint, BigUint)> =
            (1..=3).map(|n| pell_power(&u, n).unwrap()).map(|t| (t.p, t.q)).collect();
        assert_eq!(
            got,
            vec![(big(3), big(2)), (big(17), big(12)), (big(99), big(70))]
        );
        let seq = pell_powers(&u, 12);
        for t in &seq {
            assert_eq!(*t, pell_power(&u, t.n).unwrap());
        }
        assert_eq!(seq[5].q, big(13860));
        assert!(pell_power(&u, 0).is_err());
    }

    #[test]
    fn lucas_ratio_examples() {
        let u = pell_fundamental(2).unwrap();
        assert_eq!(lucas_ratio(&u, 2).unwrap(), big(6));
        assert_eq!(lucas_ratio(&u, 3).unwrap(), big(35));
        assert_eq!(lucas_ratio(&u, 6).unwrap(), big(33));
        assert!(lucas_ratio(&u, 1).is_err());
    }

    #[test]
    fn cyclotomic_product_and_size() {
        for d in [2u64, 3, 5, 7, 13] {
            let u = pell_fundamental(d).unwrap();
            let two_a = &u.a << 1u32;
            for n in 1..=30u64 {
                let prod = cyclotomic_factors(&u, n)
                    .unwrap()
                    .into_iter()
                    .fold(u.b.clone(), |acc, (_, r)| acc * r);
                assert_eq!(prod, pell_power(&u, n).unwrap().q);
                if n >= 2 {
                    let r = lucas_ratio(&u, n).unwrap();
                    assert!(r <= two_a.pow(totient(n) as u32));
                }
            }
        }
    }

    /// Direct scan over m in increasing order.
    fn choose_m_oracle(unit: &PellUnit, eps: f64) -> u64 {
        let threshold = eps * unit.ln_eta() / (2.0 * unit.ln_two_a());
        (1u64..)
            .find(|&m| totient(m) as f64 / m as f64 <= threshold)
            .unwrap()
    }

    #[test]
    fn choose_m_examples() {
        let u = pell_fundamental(2).unwrap();
        let threshold = u.ln_eta() / (2.0 * u.ln_two_a());
        assert!((threshold - 0.4919).abs() < 1e-4, "{threshold}");
        assert_eq!(choose_m(&u, 2.04), Some(1));
        assert_eq!(choose_m(&u, 1.0), Some(6));
        assert_eq!(choose_m(&u, 0.5), Some(210));
        for eps in [3.0, 1.5, 1.0, 0.9, 0.75, 0.6, 0.5, 0.45] {
            assert_eq!(choose_m(&u, eps), Some(choose_m_oracle(&u, eps)), "eps = {eps}");
        }
        assert_eq!(choose_m(&u, 0.01), None);
    }

    #[test]
    fn smooth_approx_q6() {
        let alpha = QuadraticIrrational::sqrt(2).unwrap();
        let r = smooth_approx(&alpha, 20000, 1.0).unwrap();
        assert_eq!(r.m, Some(6));
        assert_eq!(r.n, 6);
        assert_eq!(r.q, big(13860));
        assert_eq!(r.a, BigInt::from(19601));
        assert_eq!(r.factorization.to_string(), "2^2*3^2*5*7*11");
        assert!((r.smoothness_exponent - 0.2515).abs() < 1e-4);
        assert!(r.certified);
        // 19601² − 2·13860² = 1, so a/q − √2 = 1/(q(a + q√2)) without cancellation.
        let true_err = 1.0 / (13860.0 * (19601.0 + 13860.0 * 2f64.sqrt()));
        assert!(r.err_bound >= true_err.abs());
        assert!(r.err_bound <= true_err.abs() * (1.0 + 1e-12));
    }

    #[test]
    fn smooth_approx_small_bounds() {
        let alpha = QuadraticIrrational::sqrt(2).unwrap();
        let r = smooth_approx(&alpha, 2, 1.0).unwrap();
        assert_eq!((r.a.clone(), r.q.clone()), (BigInt::from(3), big(2)));
        assert!((r.err_bound - 0.0858).abs() < 1e-4);
        assert!(!r.certified);
        assert!(matches!(smooth_approx(&alpha, 1, 1.0), Err(Error::NoApproximation(_))));
    }

    #[test]
    fn general_quadratic_reduces() {
        // (1 + 3√5)/4
        let alpha = QuadraticIrrational::new(1, 3, 4, 5).unwrap();
        let r = smooth_approx(&alpha, 100_000, 1.0).unwrap();
        assert!(r.a.gcd(&BigInt::from(r.q.clone())).is_one());
        assert_eq!(r.factorization.value(), r.q);
        let approx = r.a.to_f64().unwrap() / r.q.to_f64().unwrap();
        assert!((approx - alpha.to_f64()).abs() <= r.err_bound + 1e-15);
    }

    #[test]
    fn invalid_irrationals() {
        assert!(QuadraticIrrational::new(0, 0, 1, 2).is_err());
        assert!(QuadraticIrrational::new(0, 1, 0, 2).is_err());
        assert!(QuadraticIrrational::new(0, 1, 1, 9).is_err());
    }
}
