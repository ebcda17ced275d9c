//! Sign-change counts and the cyclic determinants used to show that a
//! Poisson kernel does not diminish variation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{eval_poisson, KernelParams};
use crate::linalg::Lu;
use crate::numeric::{sin_cos_pi_dd, Dd};

/// Report an error bound only this far below `|det|` as sign-safe.
pub const SAFETY_FACTOR: f64 = 10.0;

/// Strictly increasing points inside a window of length `2 pi`, kept in
/// half-turns so that rational multiples of `pi` stay exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeVector {
    pub values: Vec<f64>,
    #[serde(skip)]
    half_turns: Vec<Dd>,
}

impl NodeVector {
    pub fn new(values: Vec<f64>) -> Result<NodeVector> {
        let half_turns = values
            .iter()
            .map(|&v| crate::numeric::radians_to_half_turns(v))
            .collect();
        Self::checked(values, half_turns)
    }

    /// Nodes `pi * num / den` from `(num, den)` pairs.
    pub fn from_pi_fractions(fractions: &[(f64, f64)]) -> Result<NodeVector> {
        let half_turns: Vec<Dd> = fractions.iter().map(|&(a, b)| Dd::ratio(a, b)).collect();
        let values = half_turns.iter().map(|h| (*h * Dd::PI).to_f64()).collect();
        Self::checked(values, half_turns)
    }

    fn checked(values: Vec<f64>, half_turns: Vec<Dd>) -> Result<NodeVector> {
        if values.is_empty() {
            return Err(Error::domain("node vector is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("nodes must be finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("nodes must be strictly increasing"));
        }
        if values[values.len() - 1] - values[0] >= std::f64::consts::TAU {
            return Err(Error::domain(
                "nodes must fit in a window shorter than 2 pi",
            ));
        }
        Ok(NodeVector { values, half_turns })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Number of sign changes after dropping zeros.
pub fn sign_changes(x: &[f64]) -> Result<usize> {
    let signs: Vec<bool> = x.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    if signs.is_empty() {
        return Err(Error::AllZeros);
    }
    Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Cyclic sign changes: the count for `x_k, ..., x_n, x_1, ..., x_k` with
/// `x_k != 0`.
pub fn cyclic_sign_changes(x: &[f64]) -> Result<usize> {
    let k = x.iter().position(|v| *v != 0.0).ok_or(Error::AllZeros)?;
    let rotated: Vec<f64> = x[k..].iter().chain(&x[..=k]).copied().collect();
    sign_changes(&rotated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Determinant {
    pub value: f64,
    pub error_bound: f64,
    /// Value recomputed in double-double because the binary64 bound was
    /// not small enough.
    pub refined: bool,
}

impl Determinant {
    /// Sign when the bound is at least `SAFETY_FACTOR` below `|value|`.
    pub fn certain_sign(&self) -> Option<i8> {
        if self.value.abs() >= SAFETY_FACTOR * self.error_bound && self.value != 0.0 {
            Some(if self.value > 0.0 { 1 } else { -1 })
        } else {
            None
        }
    }
}

fn poisson_dd(params: &KernelParams, frac: Dd) -> Dd {
    let q = params.q();
    let shift = Dd::from(params.beta()) * 0.5;
    let mut power = Dd::ONE;
    let mut acc = Dd::ZERO;
    let mut k = 1.0;
    loop {
        power = power * q;
        let (_, c) = sin_cos_pi_dd(frac * k - shift);
        acc += power * c;
        if power.hi < 1e-34 * (acc.hi.abs() + q) {
            break;
        }
        k += 1.0;
    }
    acc
}

fn det_dd(mut a: Vec<Dd>, size: usize) -> Dd {
    let mut det = Dd::ONE;
    for k in 0..size {
        let p = (k..size)
            .max_by(|&i, &j| {
                a[i * size + k]
                    .abs()
                    .partial_cmp(&a[j * size + k].abs())
                    .unwrap()
            })
            .unwrap();
        if p != k {
            for j in 0..size {
                a.swap(k * size + j, p * size + j);
            }
            det = -det;
        }
        let pivot = a[k * size + k];
        if pivot.hi == 0.0 {
            return Dd::ZERO;
        }
        det = det * pivot;
        for i in k + 1..size {
            let m = a[i * size + k] / pivot;
            for j in k + 1..size {
                a[i * size + j] = a[i * size + j] - m * a[k * size + j];
            }
        }
    }
    det
}

/// `det(P_{q,beta}(x_i - y_j))` with a rounding-error bound.
///
/// The bound is `(3 size eps) * growth * prod ||row_i||_2`, a Hadamard-type
/// estimate covering both entry rounding and elimination.
pub fn kernel_det(params: &KernelParams, xs: &NodeVector, ys: &NodeVector) -> Result<Determinant> {
    let size = xs.len();
    if ys.len() != size {
        return Err(Error::DimensionMismatch(format!(
            "{} x-nodes but {} y-nodes",
            size,
            ys.len()
        )));
    }
    if size.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "determinant order must be odd, got {size}"
        )));
    }
    let diffs: Vec<Dd> = xs
        .half_turns
        .iter()
        .flat_map(|x| ys.half_turns.iter().map(move |y| *x - *y))
        .collect();
    let a: Vec<f64> = diffs
        .iter()
        .map(|d| eval_poisson(params, (*d * Dd::PI).to_f64()))
        .collect();
    let hadamard: f64 = (0..size)
        .map(|i| {
            a[i * size..(i + 1) * size]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .product();
    let (value, growth) = match Lu::factor(&a, size) {
        Ok(lu) => {
            let max_entry = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (
                lu.determinant(),
                1.0 + lu.max_factor() / max_entry.max(f64::MIN_POSITIVE),
            )
        }
        Err(_) => (0.0, f64::INFINITY),
    };
    let error_bound = 3.0 * size as f64 * f64::EPSILON * growth * hadamard;
    if value.abs() >= SAFETY_FACTOR * error_bound {
        return Ok(Determinant {
            value,
            error_bound,
            refined: false,
        });
    }
    let entries: Vec<Dd> = diffs.iter().map(|d| poisson_dd(params, *d)).collect();
    let value = det_dd(entries, size).to_f64();
    Ok(Determinant {
        value,
        error_bound: 3.0 * size as f64 * 1e-31 * hadamard,
        refined: true,
    })
}

/// The two node systems with `x = (pi/18, pi/9, pi/6)`.
pub fn counterexample_nodes() -> Result<[(NodeVector, NodeVector); 2]> {
    let x = || NodeVector::from_pi_fractions(&[(1.0, 18.0), (1.0, 9.0), (1.0, 6.0)]);
    Ok([
        (
            x()?,
            NodeVector::from_pi_fractions(&[(13.0, 36.0), (11.0, 30.0), (67.0, 180.0)])?,
        ),
        (
            x()?,
            NodeVector::from_pi_fractions(&[(13.0, 30.0), (10.0, 9.0), (7.0, 6.0)])?,
        ),
    ])
}

/// Published bounds `(first < a, second > b)` for `q0 = 0.21`.
pub fn published_bounds(beta: f64) -> Option<(f64, f64)> {
    if beta == 0.0 {
        Some((-9.98e-10, 1.97e-6))
    } else if beta == 1.0 {
        Some((-1.3e-8, 1.17e-6))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub q0: f64,
    pub beta: f64,
    pub first: Determinant,
    pub second: Determinant,
    /// Both signs certain and opposite: the kernel is not variation diminishing.
    pub not_cvd: bool,
    pub first_bound: Option<f64>,
    pub second_bound: Option<f64>,
    pub first_bound_met: Option<bool>,
    pub second_bound_met: Option<bool>,
}

pub fn counterexample_report(q0: f64, beta: f64) -> Result<CounterexampleReport> {
    let params = KernelParams::new(q0, beta)?;
    let [(x1, y1), (x2, y2)] = counterexample_nodes()?;
    let first = kernel_det(&params, &x1, &y1)?;
    let second = kernel_det(&params, &x2, &y2)?;
    let not_cvd = match (first.certain_sign(), second.certain_sign()) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    };
    let bounds = if q0 == 0.21 {
        published_bounds(beta)
    } else {
        None
    };
    Ok(CounterexampleReport {
        q0,
        beta,
        first,
        second,
        not_cvd,
        first_bound: bounds.map(|b| b.0),
        second_bound: bounds.map(|b| b.1),
        first_bound_met: bounds.map(|b| first.value < b.0),
        second_bound_met: bounds.map(|b| second.value > b.1),
    })
}
