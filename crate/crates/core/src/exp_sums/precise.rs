//! Double-double evaluation of complete sums.
//!
//! Values of `S₄` reach `10¹⁰` for moduli in the low thousands, where one
//! `f64` ulp already exceeds `10⁻⁶`. This path carries roughly 106 bits
//! through the spectrum, the iterated products and the final sum.

use std::ops::{Add, Mul, Neg, Sub};

use super::{cubic_phase, reduce, ShiftSpec};
use crate::arith::{factor_u64, mod_inverse};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// An unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const HALF_PI: Dd = Dd { hi: std::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// `n/d` for integers below `2⁵³`.
    pub fn ratio(n: u64, d: u64) -> Dd {
        let (n, d) = (n as f64, d as f64);
        let hi = n / d;
        let rem = (-hi).mul_add(d, n);
        let (hi, lo) = quick_two_sum(hi, rem / d);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let p = q1 * b;
        let pe = q1.mul_add(b, -p);
        let (s, e) = two_sum(self.hi, -p);
        let r = (e - pe) + self.lo;
        let q2 = (s + r) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        let xx = Dd::from_f64(x) * Dd::from_f64(x);
        let corr = (self - xx).to_f64() / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        Dd { hi, lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let e = self.hi.mul_add(b.hi, -p);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Complex double-double.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd { re: Dd::ZERO, im: Dd::ZERO };

    pub fn conj(self) -> CDd {
        CDd { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt().to_f64()
    }

    fn rot90(self, k: u64) -> CDd {
        match k % 4 {
            0 => self,
            1 => CDd { re: -self.im, im: self.re },
            2 => CDd { re: -self.re, im: -self.im },
            _ => CDd { re: self.im, im: -self.re },
        }
    }
}

impl Add for CDd {
    type Output = CDd;
    #[inline]
    fn add(self, b: CDd) -> CDd {
        CDd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for CDd {
    type Output = CDd;
    #[inline]
    fn sub(self, b: CDd) -> CDd {
        CDd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for CDd {
    type Output = CDd;
    #[inline]
    fn mul(self, b: CDd) -> CDd {
        CDd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

/// `(cos φ, sin φ)` for `0 ≤ φ ≤ π/4` by Taylor series.
fn cos_sin_small(phi: Dd) -> (Dd, Dd) {
    let phi2 = phi * phi;
    let mut term = phi;
    let mut sin = phi;
    let mut k = 1.0;
    while term.hi.abs() > 1e-40 {
        term = -(term * phi2).div_f64((k + 1.0) * (k + 2.0));
        sin = sin + term;
        k += 2.0;
    }
    let mut term = Dd::ONE;
    let mut cos = Dd::ONE;
    let mut k = 0.0;
    while term.hi.abs() > 1e-40 {
        term = -(term * phi2).div_f64((k + 1.0) * (k + 2.0));
        cos = cos + term;
        k += 2.0;
    }
    (cos, sin)
}

/// `e(num/den)` in double-double.
pub fn root(num: u64, den: u64) -> CDd {
    assert!(den >= 1 && den < 1 << 50, "denominator out of range");
    let r = num % den;
    let quadrant = (4 * r) / den;
    let rem = 4 * r - quadrant * den;
    let (c, s) = if 2 * rem > den {
        let (c, s) = cos_sin_small(Dd::HALF_PI * Dd::ratio(den - rem, den));
        (s, c)
    } else {
        cos_sin_small(Dd::HALF_PI * Dd::ratio(rem, den))
    };
    CDd { re: c, im: s }.rot90(quadrant)
}

/// All `e(j/q)` for `0 ≤ j < q`.
pub fn roots(q: u64) -> Vec<CDd> {
    (0..q).map(|j| root(j, q)).collect()
}

/// `X_h = Σ_x a_x e(hx/L)` for every `h`, by the prime-factor algorithm over
/// the coprime prime-power factors of `L` and direct sums on each factor.
pub fn dft(a: &[CDd]) -> Vec<CDd> {
    let len = a.len() as u64;
    if len <= 1 {
        return a.to_vec();
    }
    let factors: Vec<u64> = factor_u64(len).into_iter().map(|(p, e)| p.pow(e)).collect();
    let tables: Vec<Vec<CDd>> = factors.iter().map(|&f| roots(f)).collect();
    dft_rec(a, &factors, &tables)
}

fn dft_rec(a: &[CDd], factors: &[u64], tables: &[Vec<CDd>]) -> Vec<CDd> {
    let len = a.len() as u64;
    let l1 = factors[0];
    if factors.len() == 1 {
        return direct_dft(a, &tables[0]);
    }
    let l2 = len / l1;
    let e2 = mod_inverse(l2 % l1, l1).unwrap();
    let e1 = mod_inverse(l1 % l2, l2).unwrap();
    let crt = |x1: u64, x2: u64| (x1 * l2 % len * e2 % len + x2 * l1 % len * e1 % len) % len;
    let inner: Vec<Vec<CDd>> = (0..l1)
        .map(|x1| {
            let row: Vec<CDd> = (0..l2).map(|x2| a[crt(x1, x2) as usize]).collect();
            dft_rec(&row, &factors[1..], &tables[1..])
        })
        .collect();
    let mut out = vec![CDd::ZERO; len as usize];
    let mut col = vec![CDd::ZERO; l1 as usize];
    for h2 in 0..l2 {
        for (x1, c) in col.iter_mut().enumerate() {
            *c = inner[x1][h2 as usize];
        }
        for (h1, v) in direct_dft(&col, &tables[0]).into_iter().enumerate() {
            out[((h1 as u64 * l2 + h2 * l1) % len) as usize] = v;
        }
    }
    out
}

fn direct_dft(a: &[CDd], w: &[CDd]) -> Vec<CDd> {
    let len = a.len() as u64;
    (0..len)
        .map(|h| {
            let mut acc = CDd::ZERO;
            for (x, &ax) in a.iter().enumerate() {
                acc = acc + ax * w[((h * x as u64) % len) as usize];
            }
            acc
        })
        .collect()
}

/// All `e(j/q)`, assembled from the prime-power factors of `q`:
/// `1/q ≡ ē₂/l₁ + ē₁/l₂ (mod 1)` when `q = l₁l₂` with `l₂ē₂ ≡ 1 (l₁)`, `l₁ē₁ ≡ 1 (l₂)`.
fn roots_crt(q: u64) -> Vec<CDd> {
    let fac = factor_u64(q);
    if fac.len() <= 1 {
        return roots(q);
    }
    let l1 = fac[0].0.pow(fac[0].1);
    let l2 = q / l1;
    let e2 = mod_inverse(l2 % l1, l1).unwrap();
    let e1 = mod_inverse(l1 % l2, l2).unwrap();
    let (r1, r2) = (roots(l1), roots_crt(l2));
    (0..q)
        .map(|j| r1[(j % l1 * e2 % l1) as usize] * r2[(j % l2 * e1 % l2) as usize])
        .collect()
}

/// The spectrum `h ↦ S(a,h;q)` in double-double.
#[derive(Clone, Debug)]
pub struct PreciseTable {
    q: u64,
    values: Vec<CDd>,
    roots: Vec<CDd>,
}

impl PreciseTable {
    pub fn new(a: i64, q: u64) -> Self {
        assert!(q >= 1, "modulus must be positive");
        let a = reduce(a, q);
        let roots = roots_crt(q);
        let seq: Vec<CDd> = (0..q).map(|n| roots[cubic_phase(a, 0, n, q) as usize]).collect();
        PreciseTable { q, values: dft(&seq), roots }
    }

    pub fn s(&self, h: i64) -> CDd {
        self.values[reduce(h, self.q) as usize]
    }

    pub fn s3(&self, spec: ShiftSpec, n: i64) -> CDd {
        let s2 = |n: i64| self.s(n + spec.shift1) * self.s(n).conj();
        s2(n + spec.shift2) * s2(n).conj()
    }

    /// `S₄(t) = Σ_n S₃(n)·e(nt/q)`.
    pub fn s4(&self, spec: ShiftSpec, t: i64) -> CDd {
        let q = self.q;
        let t = reduce(t, q);
        (0..q).fold(CDd::ZERO, |acc, n| {
            acc + self.s3(spec, n as i64) * self.roots[((n as u128 * t as u128) % q as u128) as usize]
        })
    }
}
