//! Splitting a factored denominator `q` into `q₁·q₂·q₃`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::arith::{factor_u64, gcd};
use crate::error::{Error, Result};
use crate::factor::Factorization;

/// Exponent of the target size of `q₃`.
pub const Q3_EXPONENT: f64 = 10.0 / 21.0;
/// Exponent of the target size of `q₂`.
pub const Q2_EXPONENT: f64 = 5.0 / 21.0;

/// Product of the prime powers `p^e ∥ n` with `e ≥ 2`.
pub fn powerful_part(f: &Factorization) -> BigUint {
    f.pairs()
        .iter()
        .filter(|(_, e)| *e >= 2)
        .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e))
}

/// `q = q₁q₂q₃` with pairwise coprime parts, `q₃` squarefree and
/// `N ≤ min(q₁q₃, q₂q₃)`, `N ≤ q ≤ N^{3/2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorSplit {
    pub q0: u64,
    pub q1: u64,
    pub q2: u64,
    pub q3: u64,
    pub n: u64,
}

impl FactorSplit {
    /// Validates an explicit split.
    pub fn new(q1: u64, q2: u64, q3: u64, n: u64) -> Result<Self> {
        let q = q1
            .checked_mul(q2)
            .and_then(|x| x.checked_mul(q3))
            .ok_or_else(|| Error::InvalidInput("q overflows u64".into()))?;
        let q0 = factor_u64(q)
            .into_iter()
            .filter(|&(_, e)| e >= 2)
            .map(|(p, e)| p.pow(e))
            .product();
        let split = FactorSplit { q0, q1, q2, q3, n };
        split.validate()?;
        Ok(split)
    }

    pub fn q(&self) -> u64 {
        self.q1 * self.q2 * self.q3
    }

    /// `K = ⌊q/N⌋`.
    pub fn k(&self) -> u64 {
        self.q() / self.n
    }

    /// `M = ⌊K/q₁⌋`.
    pub fn big_m(&self) -> u64 {
        self.k() / self.q1
    }

    /// `U = ⌊K/q₂⌋`.
    pub fn big_u(&self) -> u64 {
        self.k() / self.q2
    }

    pub fn factorizations(&self) -> [Vec<(u64, u32)>; 3] {
        [factor_u64(self.q1), factor_u64(self.q2), factor_u64(self.q3)]
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InfeasibleSplit(msg));
        let (q1, q2, q3, n) = (self.q1, self.q2, self.q3, self.n);
        if q1 == 0 || q2 == 0 || q3 == 0 || n == 0 {
            return fail("parts and N must be positive".into());
        }
        if gcd(q1, q2) != 1 || gcd(q1, q3) != 1 || gcd(q2, q3) != 1 {
            return fail(format!("parts {q1}, {q2}, {q3} are not pairwise coprime"));
        }
        if factor_u64(q3).iter().any(|&(_, e)| e > 1) {
            return fail(format!("q3 = {q3} is not squarefree"));
        }
        let q = self.q() as u128;
        if (n as u128) > q || q * q > (n as u128).pow(3) {
            return fail(format!("q = {q} outside [N, N^(3/2)] for N = {n}"));
        }
        if n as u128 > q1 as u128 * q3 as u128 || n as u128 > q2 as u128 * q3 as u128 {
            return fail(format!("N = {n} exceeds min(q1·q3, q2·q3)"));
        }
        if self.q1 % self.q0 != 0 {
            return fail(format!("powerful part {} not inside q1", self.q0));
        }
        Ok(())
    }
}

/// Multiplies primes from `pool` into a product until it reaches `target`.
/// When one remaining prime suffices to cross the target, the smallest such
/// prime is used; otherwise the largest remaining prime is taken.
fn fill(pool: &mut Vec<u64>, target: f64) -> Option<u64> {
    let mut prod = 1u64;
    while (prod as f64) < target {
        // pool is sorted descending
        let idx = match pool.iter().rposition(|&p| (prod as f64) * (p as f64) >= target) {
            Some(i) => i,
            None if pool.is_empty() => return None,
            None => 0,
        };
        prod *= pool.remove(idx);
    }
    Some(prod)
}

/// Greedy split: `q₃` and then `q₂` are built from the distinct primes of
/// `q/q₀`, largest first, up to `q^{10/21}` and `q^{5/21}`; everything else,
/// including the powerful part `q₀`, lands in `q₁`.
pub fn split_q(f: &Factorization, n: u64) -> Result<FactorSplit> {
    let q = f
        .value()
        .to_u64()
        .ok_or_else(|| Error::InvalidInput("q exceeds 64 bits".into()))?;
    if n == 0 || n > q || (q as u128).pow(2) > (n as u128).pow(3) {
        return Err(Error::InvalidInput(format!(
            "need N <= q <= N^(3/2), got q = {q}, N = {n}"
        )));
    }
    let q0 = powerful_part(f).to_u64().expect("divides q");
    let mut pool: Vec<u64> = f
        .pairs()
        .iter()
        .filter(|(_, e)| *e == 1)
        .map(|(p, _)| p.to_u64().expect("divides q"))
        .collect();
    pool.sort_unstable_by(|a, b| b.cmp(a));
    let qf = q as f64;
    let q3 = fill(&mut pool, qf.powf(Q3_EXPONENT)).ok_or_else(|| {
        Error::InfeasibleSplit(format!("too few distinct primes in {q} to reach q3 target"))
    })?;
    let q2 = fill(&mut pool, qf.powf(Q2_EXPONENT)).ok_or_else(|| {
        Error::InfeasibleSplit(format!("too few distinct primes in {q} to reach q2 target"))
    })?;
    let q1 = q / (q2 * q3);
    let split = FactorSplit { q0, q1, q2, q3, n };
    split.validate()?;
    Ok(split)
}

/// `C·(1+N³|δ|)·(N^{1/2}q₁^{1/2} + N^{1/4}q^{1/4}q₂^{1/4} + N^{1/4}q^{1/4}q₃^{1/8})·q^ε`.
pub fn genthm_rhs(split: &FactorSplit, delta: f64, eps: f64, c: f64) -> f64 {
    let n = split.n as f64;
    let q = split.q() as f64;
    let (q1, q2, q3) = (split.q1 as f64, split.q2 as f64, split.q3 as f64);
    let bracket = (n * q1).sqrt()
        + (n * q).powf(0.25) * q2.powf(0.25)
        + (n * q).powf(0.25) * q3.powf(0.125);
    c * (1.0 + n.powi(3) * delta.abs()) * bracket * q.powf(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::factorize_u64;

    #[test]
    fn powerful_part_examples() {
        assert_eq!(powerful_part(&factorize_u64(12).unwrap()), BigUint::from(4u32));
        assert_eq!(powerful_part(&factorize_u64(13860).unwrap()), BigUint::from(36u32));
        assert_eq!(powerful_part(&factorize_u64(30).unwrap()), BigUint::from(1u32));
    }

    #[test]
    fn split_2310() {
        let s = split_q(&factorize_u64(2310).unwrap(), 200).unwrap();
        assert_eq!((s.q1, s.q2, s.q3, s.q0), (6, 7, 55, 1));
        assert_eq!((s.q1 * s.q3).min(s.q2 * s.q3), 330);
        assert_eq!((s.k(), s.big_m(), s.big_u()), (11, 1, 1));
    }

    #[test]
    fn split_failures() {
        assert!(matches!(
            split_q(&factorize_u64(2311).unwrap(), 2000),
            Err(Error::InfeasibleSplit(_))
        ));
        let r = split_q(&factorize_u64(13860).unwrap(), 600);
        assert!(matches!(r, Err(Error::InfeasibleSplit(_))), "{r:?}");
        assert!(matches!(split_q(&factorize_u64(2310).unwrap(), 100), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn explicit_split_validation() {
        assert!(FactorSplit::new(6, 7, 55, 200).is_ok());
        assert!(FactorSplit::new(6, 14, 55, 200).is_err());
        assert!(FactorSplit::new(7, 2, 165, 200).is_ok());
        assert!(FactorSplit::new(1, 7, 4 * 5 * 11, 200).is_err());
    }

    #[test]
    fn rhs_examples() {
        let unit = FactorSplit { q0: 1, q1: 1, q2: 1, q3: 1, n: 1 };
        assert!((genthm_rhs(&unit, 0.0, 0.0, 1.0) - 3.0).abs() < 1e-12);
        let s = split_q(&factorize_u64(2310).unwrap(), 200).unwrap();
        let direct = (200.0f64 * 6.0).sqrt()
            + (200.0f64 * 2310.0).powf(0.25) * 7f64.powf(0.25)
            + (200.0f64 * 2310.0).powf(0.25) * 55f64.powf(0.125);
        let got = genthm_rhs(&s, 0.0, 0.0, 1.0);
        assert!((got - direct).abs() < 1e-9 * direct);
        assert!((genthm_rhs(&s, 1e-9, 0.1, 2.0) - 2.0 * genthm_rhs(&s, 1e-9, 0.1, 1.0)).abs() < 1e-9);
    }
}
