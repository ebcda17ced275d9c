//! Fundamental SK-spline for the integrated kernel on the uniform partition
//! `x_k = k pi / n`, and the sign pattern of its `(q, beta)`-derivative.
//!
//! Arguments are handled in half-turns (`t / pi`), so the interpolation
//! nodes `y + (k - j) pi / n` and the interval midpoints are exact rationals
//! plus one shift. The system matrix depends only on `(k - j) mod 2n`; its
//! `2n` distinct entries are computed in double-double and the solve is
//! refined against them, because the matrix condition grows like `n / q^n`.
//!
//! Midpoints follow the indexing `t_k = (k + 1/2) pi / n`, `k = 0..2n-1`.
//! The alternative indexing `t_k = (k - 1/2) pi / n`, `k = 1..2n`, names the
//! same points shifted by one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{bernoulli_half_turns, poisson_integrated_dd, KernelParams};
use crate::linalg::solve_refined;
use crate::numeric::{radians_to_half_turns, Dd};
use crate::rootfind::solve_theta;
use crate::widths::ROOT_TOL;

/// Largest `n ln(1/q)` accepted by the certification checks.
pub const MAX_CERT_LOG_SCALE: f64 = 200.0;
/// Relative threshold below which a midpoint derivative counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
const REFINEMENT_SWEEPS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplineSolution {
    /// `alpha_0, ..., alpha_{2n}` rounded to binary64.
    pub alpha: Vec<f64>,
    /// Low-order parts; `alpha[k] + alpha_lo[k]` is the refined coefficient.
    pub alpha_lo: Vec<f64>,
    pub n: u64,
    /// Node shift in radians.
    pub y: f64,
    #[serde(skip)]
    y_half_turns: Dd,
    pub params: KernelParams,
    /// Max-norm residual of the interpolation conditions.
    pub interp_residual: f64,
    /// `|sum_{k>=1} alpha_k|`
    pub sum_residual: f64,
    pub condition_estimate: f64,
    pub min_pivot_ratio: f64,
}

impl SplineSolution {
    fn coefficient(&self, k: usize) -> Dd {
        Dd::from_sum(self.alpha[k], self.alpha_lo[k])
    }

    pub fn max_abs_alpha(&self) -> f64 {
        self.alpha[1..].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node shift in half-turns.
    pub fn y_half_turns(&self) -> Dd {
        self.y_half_turns
    }
}

pub(crate) fn check_envelope(params: &KernelParams, n: u64) -> Result<()> {
    let scale = params.log_scale(n);
    if scale > MAX_CERT_LOG_SCALE {
        return Err(Error::RangeUnsupported {
            scale,
            limit: MAX_CERT_LOG_SCALE,
        });
    }
    Ok(())
}

/// Build the spline with nodes `y_k = k pi / n + y`, `0 <= y < pi / n`.
pub fn build_fundamental_spline(params: &KernelParams, n: u64, y: f64) -> Result<SplineSolution> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(y >= 0.0 && y < std::f64::consts::PI / n as f64) {
        return Err(Error::domain(format!("y must lie in [0, pi/n), got {y}")));
    }
    build_spline_half_turns(params, n, radians_to_half_turns(y))
}

/// Build the spline at the maximizer `y0 = theta_n pi / n`.
pub fn build_at_maximizer(params: &KernelParams, n: u64) -> Result<SplineSolution> {
    let root = solve_theta(params, n, ROOT_TOL)?;
    build_spline_half_turns(params, n, Dd::ratio(root.theta, n as f64))
}

/// Build the spline with the node shift given in half-turns.
pub fn build_spline_half_turns(
    params: &KernelParams,
    n: u64,
    y_half_turns: Dd,
) -> Result<SplineSolution> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    check_envelope(params, n)?;
    let nf = n as f64;
    if y_half_turns.hi < 0.0 || y_half_turns.to_f64() * nf >= 1.0 {
        return Err(Error::domain("node shift must lie in [0, pi/n)"));
    }
    let two_n = 2 * n as usize;
    let size = two_n + 1;
    let entries: Vec<Dd> = (0..two_n)
        .map(|m| poisson_integrated_dd(params, y_half_turns + Dd::ratio(m as f64, nf)))
        .collect();

    let mut a = vec![Dd::ZERO; size * size];
    for k in 0..two_n {
        a[k * size] = Dd::ONE;
        for j in 1..=two_n {
            a[k * size + j] = entries[(k + two_n - j % two_n) % two_n];
        }
    }
    for j in 1..=two_n {
        a[two_n * size + j] = Dd::ONE;
    }
    let mut b = vec![Dd::ZERO; size];
    b[0] = Dd::ONE;

    let (lu, x, residual) = solve_refined(&a, &b, size, REFINEMENT_SWEEPS)?;
    let sum = x[1..].iter().fold(Dd::ZERO, |acc, v| acc + *v);
    Ok(SplineSolution {
        alpha: x.iter().map(|v| v.hi).collect(),
        alpha_lo: x.iter().map(|v| v.lo).collect(),
        n,
        y: (y_half_turns * Dd::PI).to_f64(),
        y_half_turns,
        params: *params,
        interp_residual: residual,
        sum_residual: sum.to_f64().abs(),
        condition_estimate: lu.condition_estimate(),
        min_pivot_ratio: lu.min_pivot_ratio,
    })
}

/// Spline value at `pi * frac`.
pub fn spline_eval_half_turns(sol: &SplineSolution, frac: Dd) -> Dd {
    let nf = sol.n as f64;
    (1..sol.alpha.len()).fold(sol.coefficient(0), |acc, j| {
        acc + sol.coefficient(j)
            * poisson_integrated_dd(&sol.params, frac - Dd::ratio(j as f64, nf))
    })
}

/// `alpha_0 + sum_k alpha_k P_{q,beta,1}(t - x_k)`.
///
/// The coefficients grow like `n / q^n`, so rounding `t` to binary64
/// already perturbs the value by roughly `|alpha| q ulp(t)`; evaluate at
/// exact rational points through [`spline_eval_half_turns`] where it matters.
pub fn spline_eval(sol: &SplineSolution, t: f64) -> f64 {
    spline_eval_half_turns(sol, radians_to_half_turns(t)).to_f64()
}

/// Value at the interpolation node `y_k`.
pub fn spline_at_node(sol: &SplineSolution, k: u64) -> f64 {
    spline_eval_half_turns(sol, sol.y_half_turns + Dd::ratio(k as f64, sol.n as f64)).to_f64()
}

/// `(q, beta)`-derivative `sum_k alpha_k B_1(t - x_k)` at `pi * frac`.
pub fn derivative_half_turns(sol: &SplineSolution, frac: Dd) -> f64 {
    let nf = sol.n as f64;
    (1..sol.alpha.len())
        .fold(Dd::ZERO, |acc, j| {
            acc + sol.coefficient(j) * bernoulli_half_turns(frac - Dd::ratio(j as f64, nf))
        })
        .to_f64()
}

pub fn derivative_at(sol: &SplineSolution, t: f64) -> f64 {
    derivative_half_turns(sol, radians_to_half_turns(t))
}

/// Derivative at the midpoints `t_k = (k + 1/2) pi / n`, `k = 0..2n-1`.
pub fn derivative_at_midpoints(sol: &SplineSolution) -> Vec<f64> {
    let two_n = 2 * sol.n;
    (0..two_n)
        .map(|k| derivative_half_turns(sol, Dd::ratio((2 * k + 1) as f64, two_n as f64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPattern {
    pub signs: Vec<i8>,
    pub epsilon: i8,
    pub e: Vec<u8>,
    pub conforms: bool,
    pub zero_tolerance: f64,
    pub values: Vec<f64>,
}

/// Classify midpoint values: `sign_k = (-1)^k epsilon e_k` with one
/// `epsilon` for all `k`. Values within `zero_tol * max|d|` count as zero.
pub fn sign_pattern(values: &[f64], zero_tol: f64) -> SignPattern {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let signs: Vec<i8> = values
        .iter()
        .map(|&d| {
            if d.abs() <= zero_tol * scale {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let parity = |k: usize| if k.is_multiple_of(2) { 1 } else { -1 };
    let epsilon = signs
        .iter()
        .enumerate()
        .find(|(_, s)| **s != 0)
        .map(|(k, s)| s * parity(k))
        .unwrap_or(1);
    let conforms = signs
        .iter()
        .enumerate()
        .all(|(k, &s)| s == 0 || s == parity(k) * epsilon);
    SignPattern {
        e: signs.iter().map(|s| u8::from(*s != 0)).collect(),
        signs,
        epsilon,
        conforms,
        zero_tolerance: zero_tol,
        values: values.to_vec(),
    }
}

/// Check the alternating-sign condition for the spline with shift `y`
/// (the maximizer `theta_n pi / n` when `None`).
pub fn check_cy2n(
    params: &KernelParams,
    n: u64,
    y: Option<f64>,
    zero_tol: f64,
) -> Result<SignPattern> {
    if zero_tol.is_nan() || zero_tol < 0.0 {
        return Err(Error::domain("zero tolerance must be non-negative"));
    }
    let sol = match y {
        Some(y) => build_fundamental_spline(params, n, y)?,
        None => build_at_maximizer(params, n)?,
    };
    Ok(sign_pattern(&derivative_at_midpoints(&sol), zero_tol))
}
