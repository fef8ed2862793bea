//! Complete exponential sums modulo `q`.
//!
//! Every phase is reduced to an exact integer residue before it is turned
//! into a floating-point angle, so the rounding error of a single term does
//! not depend on the size of `n³`.

use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};
use std::f64::consts::TAU;
use std::ops::{Add, Mul};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub mod precise;

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
/// Rounding bound for one evaluated term `e(r/q)` plus its share of the
/// compensated summation.
const TERM_ERR: f64 = 1.0 / (1u64 << 48) as f64;

/// A complex value with a bound on its accumulated floating-point error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SumValue {
    pub re: f64,
    pub im: f64,
    pub err: f64,
}

impl SumValue {
    pub const ZERO: SumValue = SumValue { re: 0.0, im: 0.0, err: 0.0 };

    pub fn new(re: f64, im: f64, err: f64) -> Self {
        SumValue { re, im, err }
    }

    pub fn exact(re: f64, im: f64) -> Self {
        SumValue { re, im, err: 0.0 }
    }

    pub fn from_complex(z: Complex64, err: f64) -> Self {
        SumValue { re: z.re, im: z.im, err }
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Self {
        SumValue { im: -self.im, ..self }
    }

    /// `|self − other|`.
    pub fn dist(&self, other: &SumValue) -> f64 {
        (self.complex() - other.complex()).norm()
    }

    pub fn scale(self, k: f64) -> Self {
        SumValue {
            re: self.re * k,
            im: self.im * k,
            err: self.err * k.abs() + 2.0 * UNIT_ROUNDOFF * self.abs() * k.abs(),
        }
    }
}

impl Add for SumValue {
    type Output = SumValue;
    fn add(self, rhs: SumValue) -> SumValue {
        let z = self.complex() + rhs.complex();
        SumValue::from_complex(z, self.err + rhs.err + UNIT_ROUNDOFF * z.norm())
    }
}

impl Mul for SumValue {
    type Output = SumValue;
    fn mul(self, rhs: SumValue) -> SumValue {
        let z = self.complex() * rhs.complex();
        let (x, y) = (self.abs(), rhs.abs());
        let err = x * rhs.err + y * self.err + self.err * rhs.err + 4.0 * UNIT_ROUNDOFF * x * y;
        SumValue::from_complex(z, err)
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
    terms: u64,
    extra_err: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Accumulator {
    /// Adds a unit-modulus term.
    pub fn push_unit(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
        self.terms += 1;
    }

    /// Adds an arbitrary term carrying its own error.
    pub fn push(&mut self, v: SumValue) {
        neumaier(&mut self.re, &mut self.re_c, v.re);
        neumaier(&mut self.im, &mut self.im_c, v.im);
        self.extra_err += v.err + 2.0 * UNIT_ROUNDOFF * v.abs();
    }

    pub fn value(&self) -> SumValue {
        SumValue {
            re: self.re + self.re_c,
            im: self.im + self.im_c,
            err: self.terms as f64 * TERM_ERR + self.extra_err,
        }
    }
}

/// `e(num/den)` for `0 ≤ num < den`.
#[inline]
pub fn unit(num: u64, den: u64) -> Complex64 {
    let x = if 2 * num > den {
        -((den - num) as f64 / den as f64)
    } else {
        num as f64 / den as f64
    };
    let (s, c) = (TAU * x).sin_cos();
    Complex64::new(c, s)
}

/// Least nonnegative residue of a signed value.
#[inline]
pub fn reduce(x: i64, q: u64) -> u64 {
    (x as i128).rem_euclid(q as i128) as u64
}

#[inline]
fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    if q <= u32::MAX as u64 {
        (a * b) % q
    } else {
        ((a as u128 * b as u128) % q as u128) as u64
    }
}

/// `(a·n³ + h·n) mod q` for residues `a, h, n < q`.
#[inline]
pub fn cubic_phase(a: u64, h: u64, n: u64, q: u64) -> u64 {
    let n2 = mulmod(n, n, q);
    let n3 = mulmod(n2, n, q);
    (mulmod(a, n3, q) + mulmod(h, n, q)) % q
}

/// `S(a,h;q) = Σ_{n=1}^{q} e((a n³ + h n)/q)` by direct summation.
pub fn complete_cubic_sum(a: i64, h: i64, q: u64) -> SumValue {
    assert!(q >= 1, "modulus must be positive");
    let (a, h) = (reduce(a, q), reduce(h, q));
    let mut acc = Accumulator::default();
    for n in 0..q {
        acc.push_unit(unit(cubic_phase(a, h, n, q), q));
    }
    acc.value()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalised `X_k = Σ_n x_n e(kn/len)` in place.
pub fn inverse_dft(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Error bound for one output of a length-`len` transform whose input has
/// `‖x‖₂ = norm2`.
fn dft_err(len: usize, norm2: f64) -> f64 {
    let logn = (len.max(2) as f64).log2().ceil();
    // ‖X̃ − X‖₂ ≤ c·u·log₂(len)·‖X‖₂ and ‖X‖₂ = √len·‖x‖₂
    8.0 * logn * UNIT_ROUNDOFF * (len as f64).sqrt() * norm2 + (len as f64) * TERM_ERR
}

fn check_budget(q: u64, max_q: u64) -> Result<()> {
    if q > max_q {
        Err(Error::Resource(format!("modulus {q} exceeds spectrum budget {max_q}")))
    } else {
        Ok(())
    }
}

/// `S(a,h;q)` for every `h mod q` with one length-`q` transform.
pub fn complete_cubic_spectrum(a: i64, q: u64, max_q: u64) -> Result<Vec<SumValue>> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    check_budget(q, max_q)?;
    let a = reduce(a, q);
    let mut buf: Vec<Complex64> = (0..q).map(|n| unit(cubic_phase(a, 0, n, q), q)).collect();
    inverse_dft(&mut buf);
    let err = dft_err(q as usize, (q as f64).sqrt());
    Ok(buf.into_iter().map(|z| SumValue::from_complex(z, err)).collect())
}

/// `T(h,t;q) = Σ_{1≤n≤t} e(−hn/q)`.
pub fn linear_sum_t(h: i64, t: f64, q: u64) -> SumValue {
    assert!(q >= 1, "modulus must be positive");
    assert!(t >= 0.0, "t must be nonnegative");
    let count = t.floor() as u64;
    if reduce(h, q) == 0 {
        return SumValue::exact(count as f64, 0.0);
    }
    if count == 0 {
        return SumValue::ZERO;
    }
    // e(−h(T+1)/(2q))·sin(πhT/q)/sin(πh/q), all arguments as residues mod 2q
    let two_q = 2 * q as u128;
    let hh = (h as i128).rem_euclid(two_q as i128) as u128;
    let k_num = ((hh * count as u128) % two_q) as u64;
    let k_phase = ((hh * (count as u128 + 1)) % two_q) as u64;
    let sin_pi = |k: u64| {
        let c = unit(k, 2 * q);
        c.im
    };
    let ratio = sin_pi(k_num) / sin_pi(hh as u64);
    let phase = unit(reduce(-(k_phase as i64), 2 * q), 2 * q);
    let z = phase * ratio;
    SumValue::from_complex(z, 8.0 * UNIT_ROUNDOFF * (ratio.abs() + 1.0))
}

/// The shifts `m·q₁` and `u·q₂` used by the iterated sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ShiftSpec {
    pub shift1: i64,
    pub shift2: i64,
}

impl ShiftSpec {
    pub fn new(shift1: i64, shift2: i64) -> Self {
        ShiftSpec { shift1, shift2 }
    }
}

/// Which iterate of the shifted product to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// `S₂(b,m,n;v) = S(b,n+shift1;v)·conj S(b,n;v)`.
    Two,
    /// `S₃ = S₂(b,m,n+shift2;v)·conj S₂(b,m,n;v)`.
    Three,
}

/// A tabulated spectrum `h ↦ S(a,h;q)` with the derived shifted products.
#[derive(Clone, Debug)]
pub struct CubicTable {
    a: u64,
    q: u64,
    values: Arc<Vec<SumValue>>,
}

impl CubicTable {
    pub fn new(a: i64, q: u64, max_q: u64) -> Result<Self> {
        let values = Arc::new(complete_cubic_spectrum(a, q, max_q)?);
        Ok(CubicTable { a: reduce(a, q), q, values })
    }

    /// Table computed by direct summation, O(q²); for small moduli and tests.
    pub fn direct(a: i64, q: u64) -> Self {
        let values = (0..q).map(|h| complete_cubic_sum(a, h as i64, q)).collect();
        CubicTable { a: reduce(a, q), q, values: Arc::new(values) }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn values(&self) -> &[SumValue] {
        &self.values
    }

    #[inline]
    pub fn s(&self, h: i64) -> SumValue {
        self.values[reduce(h, self.q) as usize]
    }

    pub fn s2(&self, shift1: i64, n: i64) -> SumValue {
        self.s(n + shift1) * self.s(n).conj()
    }

    pub fn s3(&self, spec: ShiftSpec, n: i64) -> SumValue {
        self.s2(spec.shift1, n + spec.shift2) * self.s2(spec.shift1, n).conj()
    }

    pub fn shifted(&self, spec: ShiftSpec, n: i64, level: Level) -> SumValue {
        match level {
            Level::Two => self.s2(spec.shift1, n),
            Level::Three => self.s3(spec, n),
        }
    }

    /// `S₄(t) = Σ_{n=1}^{q} S₃(n)·e(nt/q)` for a single `t`.
    pub fn s4(&self, spec: ShiftSpec, t: i64) -> SumValue {
        let q = self.q;
        let t = reduce(t, q);
        let mut acc = Accumulator::default();
        for n in 0..q {
            let tw = SumValue::from_complex(unit(mulmod(n, t, q), q), TERM_ERR);
            acc.push(self.s3(spec, n as i64) * tw);
        }
        acc.value()
    }

    /// `S₄(t)` for every `t mod q` with one transform over `n`.
    pub fn s4_all(&self, spec: ShiftSpec) -> Vec<SumValue> {
        let q = self.q as usize;
        let s3: Vec<SumValue> = (0..q).map(|n| self.s3(spec, n as i64)).collect();
        let in_err: f64 = s3.iter().map(|v| v.err).sum();
        let norm2 = s3.iter().map(|v| v.abs().powi(2)).sum::<f64>().sqrt();
        let mut buf: Vec<Complex64> = s3.iter().map(SumValue::complex).collect();
        inverse_dft(&mut buf);
        let err = in_err + dft_err(q, norm2);
        buf.into_iter().map(|z| SumValue::from_complex(z, err)).collect()
    }
}

/// `S₂` or `S₃` at a single `n` from direct evaluations.
pub fn shifted_products(b: i64, spec: ShiftSpec, n: i64, v: u64, level: Level) -> SumValue {
    let s = |h: i64| complete_cubic_sum(b, h, v);
    let s2 = |n: i64| s(n + spec.shift1) * s(n).conj();
    match level {
        Level::Two => s2(n),
        Level::Three => s2(n + spec.shift2) * s2(n).conj(),
    }
}

/// `S₄(c,m,u,t;v)` for one `t` via a tabulated spectrum.
pub fn s4(c: i64, spec: ShiftSpec, t: i64, v: u64, max_q: u64) -> Result<SumValue> {
    Ok(CubicTable::new(c, v, max_q)?.s4(spec, t))
}

/// `S₄(c,m,u,t;v)` for all `t mod v`.
pub fn s4_spectrum(c: i64, spec: ShiftSpec, v: u64, max_q: u64) -> Result<Vec<SumValue>> {
    Ok(CubicTable::new(c, v, max_q)?.s4_all(spec))
}

/// Bounded least-recently-used cache of spectra keyed by `(a mod q, q)`.
pub struct SpectrumCache {
    capacity: usize,
    max_q: u64,
    inner: Mutex<CacheInner>,
}

#[derive(Default)]
struct CacheInner {
    map: HashMap<(u64, u64), CubicTable>,
    order: VecDeque<(u64, u64)>,
}

impl SpectrumCache {
    pub fn new(capacity: usize, max_q: u64) -> Self {
        SpectrumCache {
            capacity: capacity.max(1),
            max_q,
            inner: Mutex::new(CacheInner::default()),
        }
    }

    pub fn get(&self, a: i64, q: u64) -> Result<CubicTable> {
        let key = (reduce(a, q.max(1)), q);
        {
            let mut inner = self.inner.lock().unwrap();
            if let Some(t) = inner.map.get(&key).cloned() {
                inner.order.retain(|k| *k != key);
                inner.order.push_back(key);
                return Ok(t);
            }
        }
        // computed outside the lock; a concurrent duplicate is harmless
        let table = CubicTable::new(a, q, self.max_q)?;
        let mut inner = self.inner.lock().unwrap();
        if !inner.map.contains_key(&key) {
            inner.order.push_back(key);
            inner.map.insert(key, table.clone());
            while inner.map.len() > self.capacity {
                if let Some(old) = inner.order.pop_front() {
                    inner.map.remove(&old);
                }
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
