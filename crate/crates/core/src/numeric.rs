//! Floating-point building blocks shared by every other module.
//!
//! * [`CompensatedSum`]: Neumaier-style error-compensated accumulation.
//! * [`Dd`]: unevaluated double-double numbers built from error-free
//!   transformations (`two_sum`, `two_prod`). Used wherever binary64 alone
//!   loses too much: angle reduction, the spline system entries and the
//!   determinant re-evaluation.
//! * Half-turn trigonometry (`sin_pi`, `cos_pi`) that is exact at the
//!   quarter-turn lattice, so termwise zeros of the kernel series come out
//!   as exact zeros.
//! * Series truncation bookkeeping ([`Truncation`]).

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product: `a * b = p + e` exactly (requires a fused multiply-add).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Neumaier (improved Kahan-Babuska) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator, returned as a plain `f64`.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const TWO_PI: Dd = Dd {
        hi: std::f64::consts::TAU,
        lo: 2.4492935982947064e-16,
    };
    pub const INV_PI: Dd = Dd {
        hi: std::f64::consts::FRAC_1_PI,
        lo: -1.9678676675182486e-17,
    };

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Self {
        let (p, e) = two_prod(a, b);
        let (hi, lo) = fast_two_sum(p, e);
        Dd { hi, lo }
    }

    /// The rational `num/den` correctly rounded to double-double precision.
    pub fn ratio(num: f64, den: f64) -> Self {
        Dd::from(num) / den
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Nearest integer (ties away from zero) as a double-double.
    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (s, e) = fast_two_sum(hi, lo);
            Dd { hi: s, lo: e }
        } else {
            // hi is not an integer, so |hi| < 2^52 and hi - r is exact.
            let diff = (self.hi - hi) + self.lo;
            let r = if diff > 0.5 {
                hi + 1.0
            } else if diff < -0.5 {
                hi - 1.0
            } else {
                hi
            };
            Dd { hi: r, lo: 0.0 }
        }
    }

    /// Reduce to the interval `[-1, 1]` modulo 2 (half-turn units).
    pub fn rem_two(self) -> Self {
        let k = (self * 0.5).round();
        self - k * 2.0
    }

    /// `x^k` by binary powering.
    pub fn powi(self, mut k: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let e = e + t;
        let (s, e) = fast_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = fast_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: f64) -> Dd {
        let (s, e) = two_sum(self.hi, rhs);
        let e = e + self.lo;
        let (hi, lo) = fast_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: f64) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = fast_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        let e = e + self.lo * rhs;
        let (hi, lo) = fast_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = fast_two_sum(q1, q2);
        Dd { hi, lo } + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, rhs: f64) -> Dd {
        self / Dd::from(rhs)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

// sin and cos of pi*f for |f| <= 1/4, by Taylor series in double-double.
fn sin_cos_small(f: Dd) -> (Dd, Dd) {
    let x = Dd::PI * f;
    let x2 = x * x;
    let mut sin = x;
    let mut cos = Dd::ONE;
    let mut s_term = x;
    let mut c_term = Dd::ONE;
    let mut k = 1.0_f64;
    loop {
        // s_term: x^(2k+1)/(2k+1)!, c_term: x^(2k)/(2k)!
        c_term = -(c_term * x2) / ((2.0 * k - 1.0) * (2.0 * k));
        s_term = -(s_term * x2) / ((2.0 * k) * (2.0 * k + 1.0));
        cos += c_term;
        sin += s_term;
        if c_term.hi.abs() < 1e-36 && s_term.hi.abs() < 1e-36 {
            break;
        }
        k += 1.0;
    }
    (sin, cos)
}

/// `(sin(pi*x), cos(pi*x))` in double-double precision.
///
/// The argument is in half-turns. Multiples of 1/2 map onto exact zeros
/// and unit values.
pub fn sin_cos_pi_dd(x: Dd) -> (Dd, Dd) {
    let r = x.rem_two();
    let k = (r * 2.0).round();
    let f = r - k * 0.5;
    let (s, c) = if f.hi == 0.0 && f.lo == 0.0 {
        (Dd::ZERO, Dd::ONE)
    } else {
        sin_cos_small(f)
    };
    match (k.hi as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

fn reduce_half_turns(x: f64) -> (f64, i64) {
    // x - 2*round(x/2) is exact for |x| < 2^52.
    let r = x - 2.0 * (0.5 * x).round();
    let k = (2.0 * r).round();
    (r - 0.5 * k, (k as i64).rem_euclid(4))
}

/// `sin(pi*x)` with exact zeros at integers.
pub fn sin_pi(x: f64) -> f64 {
    let (f, k) = reduce_half_turns(x);
    let (s, c) = if f == 0.0 {
        (0.0, 1.0)
    } else {
        (std::f64::consts::PI * f).sin_cos()
    };
    match k {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    }
}

/// `cos(pi*x)` with exact zeros at half-integers.
pub fn cos_pi(x: f64) -> f64 {
    let (f, k) = reduce_half_turns(x);
    let (s, c) = if f == 0.0 {
        (0.0, 1.0)
    } else {
        (std::f64::consts::PI * f).sin_cos()
    };
    match k {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    }
}

/// `(sin(pi*x), cos(pi*x))` for a double-double half-turn argument,
/// rounded to binary64. The reduction happens in double-double so large
/// multiples of an angle keep their fractional part.
pub fn sin_cos_pi_reduced(x: Dd) -> (f64, f64) {
    let r = x.rem_two().to_f64();
    (sin_pi(r), cos_pi(r))
}

/// Convert radians to half-turns (`t / pi`) in double-double precision.
pub fn radians_to_half_turns(t: f64) -> Dd {
    Dd::from(t) * Dd::INV_PI
}

/// Two-step reduction of an angle onto `[0, 2*pi)`.
pub fn reduce_angle(t: f64) -> f64 {
    if (0.0..std::f64::consts::TAU).contains(&t) {
        return t;
    }
    let k = (t / std::f64::consts::TAU).floor();
    let r = (Dd::from(t) - Dd::TWO_PI * k).to_f64();
    if r < 0.0 {
        let r = r + std::f64::consts::TAU;
        if r >= std::f64::consts::TAU {
            0.0
        } else {
            r
        }
    } else if r >= std::f64::consts::TAU {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Truncation bookkeeping for series whose term envelopes decay at least
/// geometrically with a known ratio.
///
/// After each term the caller reports the term's envelope `e_k`. The series
/// stops once the geometric tail bound `e_k * r / (1 - r)` drops below
/// `rel_tol * (sum of envelopes + MIN_POSITIVE)`.
#[derive(Debug, Clone)]
pub struct Truncation {
    rel_tol: f64,
    max_terms: usize,
    tail_factor: f64,
    accumulated: f64,
    terms: usize,
}

impl Truncation {
    pub fn new(rel_tol: f64, max_terms: usize, ratio: f64) -> Self {
        debug_assert!((0.0..1.0).contains(&ratio));
        Truncation {
            rel_tol,
            max_terms,
            tail_factor: ratio / (1.0 - ratio),
            accumulated: 0.0,
            terms: 0,
        }
    }

    /// Record one term. Returns `Ok(true)` once the remaining tail is negligible.
    pub fn record(&mut self, envelope: f64) -> Result<bool> {
        self.terms += 1;
        self.accumulated += envelope;
        let tail = envelope * self.tail_factor;
        if tail <= self.rel_tol * (self.accumulated + f64::MIN_POSITIVE) {
            return Ok(true);
        }
        if self.terms >= self.max_terms {
            return Err(Error::Truncation {
                max_terms: self.max_terms,
            });
        }
        Ok(false)
    }

    pub fn terms(&self) -> usize {
        self.terms
    }
}
