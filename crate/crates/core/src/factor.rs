//! Big-integer factorization: trial division to 10^6, then Miller-Rabin and
//! Brent's variant of Pollard rho with a fixed seed.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::arith::primes_up_to;
use crate::error::{Error, Result};

pub const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// Cofactors at or below this size are prime once trial division is done.
const PRIME_AFTER_TRIAL: u64 = TRIAL_DIVISION_LIMIT * TRIAL_DIVISION_LIMIT;

const RHO_SEED: u64 = 0x5eed_0f_9011a7d;
const RHO_ITERATIONS: u64 = 1 << 22;
const RHO_ATTEMPTS: u64 = 6;
const MR_ROUNDS: usize = 32;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_DIVISION_LIMIT))
}

/// A prime factorization: `(prime, exponent)` pairs with strictly increasing
/// primes and positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Factorization(Vec<(BigUint, u32)>);

impl Factorization {
    pub fn one() -> Self {
        Factorization(Vec::new())
    }

    /// Builds a factorization from arbitrary pairs, merging repeated primes.
    /// The caller vouches for primality.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (BigUint, u32)>,
    {
        let mut v: Vec<(BigUint, u32)> = pairs.into_iter().filter(|(_, e)| *e > 0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(BigUint, u32)> = Vec::with_capacity(v.len());
        for (p, e) in v {
            match out.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => out.push((p, e)),
            }
        }
        Factorization(out)
    }

    pub fn from_u64_pairs(pairs: &[(u64, u32)]) -> Self {
        Self::from_pairs(pairs.iter().map(|&(p, e)| (BigUint::from(p), e)))
    }

    pub fn pairs(&self) -> &[(BigUint, u32)] {
        &self.0
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.0.iter().map(|(p, _)| p)
    }

    pub fn value(&self) -> BigUint {
        self.0
            .iter()
            .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e))
    }

    pub fn max_prime(&self) -> Option<&BigUint> {
        self.0.last().map(|(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    /// Product of two factorizations.
    pub fn mul(&self, other: &Factorization) -> Factorization {
        Self::from_pairs(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// Quotient by `divisor`, which must divide `self`.
    pub fn div_exact(&self, divisor: &BigUint) -> Result<Factorization> {
        let mut rest = divisor.clone();
        let mut out = Vec::with_capacity(self.0.len());
        for (p, e) in &self.0 {
            let mut e = *e;
            while e > 0 && rest.is_multiple_of(p) {
                rest /= p;
                e -= 1;
            }
            out.push((p.clone(), e));
        }
        if !rest.is_one() {
            return Err(Error::Internal(format!(
                "{divisor} does not divide {}",
                self.value()
            )));
        }
        Ok(Self::from_pairs(out))
    }

    /// `log(max prime) / log(value)`; zero for values below 2.
    pub fn smoothness_exponent(&self) -> f64 {
        let v = self.value();
        match self.max_prime() {
            Some(p) if v > BigUint::one() => big_ln(p) / big_ln(&v),
            _ => 0.0,
        }
    }
}

impl Serialize for Factorization {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for (p, e) in &self.0 {
            seq.serialize_element(&(p.to_string(), e))?;
        }
        seq.end()
    }
}

impl std::fmt::Display for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Natural log of a big integer, accurate to f64 precision.
pub fn big_ln(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Factors `n >= 1`.
pub fn factorize(n: &BigUint) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::InvalidInput("cannot factor 0".into()));
    }
    let mut rest = n.clone();
    let mut pairs = Vec::new();
    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        let bp = BigUint::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0;
        while rest.is_multiple_of(&bp) {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            pairs.push((bp, e));
        }
    }
    if !rest.is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(RHO_SEED);
        factor_cofactor(rest, &mut pairs, &mut rng)?;
    }
    Ok(Factorization::from_pairs(pairs))
}

pub fn factorize_u64(n: u64) -> Result<Factorization> {
    factorize(&BigUint::from(n))
}

fn factor_cofactor(n: BigUint, out: &mut Vec<(BigUint, u32)>, rng: &mut ChaCha8Rng) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if n <= BigUint::from(PRIME_AFTER_TRIAL) || is_probable_prime(&n, rng) {
        out.push((n, 1));
        return Ok(());
    }
    let r = n.sqrt();
    if &r * &r == n {
        factor_cofactor(r.clone(), out, rng)?;
        return factor_cofactor(r, out, rng);
    }
    match pollard_brent(&n, rng) {
        Some(d) => {
            let other = &n / &d;
            factor_cofactor(d, out, rng)?;
            factor_cofactor(other, out, rng)
        }
        None => Err(Error::FactorizationFailed(n)),
    }
}

/// Miller-Rabin with random bases from the shared seeded stream.
pub fn is_probable_prime(n: &BigUint, rng: &mut ChaCha8Rng) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if let Some(small) = n.to_u64() {
        return crate::arith::is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    let span = n - 3u32;
    'witness: for _ in 0..MR_ROUNDS {
        let a = random_below(&span, rng) + 2u32;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_below(bound: &BigUint, rng: &mut ChaCha8Rng) -> BigUint {
    let words = bound.to_u64_digits().len() + 1;
    let digits: Vec<u32> = (0..2 * words).map(|_| rng.random()).collect();
    BigUint::new(digits) % bound
}

fn pollard_brent(n: &BigUint, rng: &mut ChaCha8Rng) -> Option<BigUint> {
    let batch = 128u64;
    for _ in 0..RHO_ATTEMPTS {
        let c = random_below(n, rng);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = random_below(n, rng);
        let mut r = 1u64;
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut steps = 0u64;
        while g.is_one() && steps < RHO_ITERATIONS {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..batch.min(r - k) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = q * diff % n;
                }
                g = q.gcd(n);
                k += batch;
                steps += batch;
            }
            r *= 2;
        }
        if g == *n {
            // the batched product overshot; retrace one step at a time
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if !g.is_one() && g != *n {
            return Some(g);
        }
    }
    None
}
