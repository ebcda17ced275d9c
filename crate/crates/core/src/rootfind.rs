//! The phase root `theta_n` in `[0, 1)` of
//! `sum_{nu>=0} q^{(2nu+1)n} cos((2nu+1) theta pi - beta pi/2) = 0`.
//!
//! The sum is evaluated with the common factor `q^n` divided out, so the
//! sign (and hence the root) survives long after `q^n` underflows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelParams, SeriesPolicy};
use crate::numeric::{cos_pi, CompensatedSum, Dd};

const SCAN_POINTS: usize = 128;
const CANDIDATE_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRoot {
    pub theta: f64,
    /// Defining sum at `theta` (unscaled; 0 when `q^n` underflows).
    pub residual: f64,
    /// Defining sum at `theta` divided by `q^n`.
    pub scaled_residual: f64,
    pub bracket_width: f64,
    pub n: u64,
    pub params: KernelParams,
}

impl ThetaRoot {
    /// The maximizer `y0 = theta_n * pi / n` of `|P_{q,beta} * phi_n|`.
    pub fn maximizer(&self) -> f64 {
        self.theta * std::f64::consts::PI / self.n as f64
    }
}

/// Value of the defining sum, scaled (`/ q^n`) and unscaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaLhs {
    pub scaled: f64,
    pub value: f64,
}

fn scaled_lhs(params: &KernelParams, n: u64, theta: f64, policy: &SeriesPolicy) -> Result<f64> {
    let nf = n as f64;
    let ratio = params.q().powf(2.0 * nf);
    let shift = 0.5 * params.beta();
    let mut tr = policy.truncation(ratio);
    let mut acc = CompensatedSum::new();
    let mut nu = 0u64;
    loop {
        let weight = ratio.powf(nu as f64);
        if weight == 0.0 {
            break;
        }
        let m = (2 * nu + 1) as f64;
        // (2nu+1) theta - beta/2 formed without rounding the product
        let arg = (Dd::from_prod(theta, m) - shift).rem_two().to_f64();
        acc.add(weight * cos_pi(arg));
        if tr.record(weight)? {
            break;
        }
        nu += 1;
    }
    Ok(acc.value())
}

/// Left-hand side of the root equation at `theta`.
pub fn theta_lhs(
    params: &KernelParams,
    n: u64,
    theta: f64,
    policy: &SeriesPolicy,
) -> Result<ThetaLhs> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let scaled = scaled_lhs(params, n, theta, policy)?;
    let qn = params.q().powf(n as f64);
    Ok(ThetaLhs {
        scaled,
        value: scaled * qn,
    })
}

/// Solve for `theta_n` by a bracketing scan and bisection to width `tol`.
pub fn solve_theta(params: &KernelParams, n: u64, tol: f64) -> Result<ThetaRoot> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let policy = SeriesPolicy::default();
    let f = |theta: f64| scaled_lhs(params, n, theta, &policy);

    // Grid on [0, 1] plus the dominant-term root (beta+1)/2 mod 1.
    let mut grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| i as f64 / SCAN_POINTS as f64)
        .collect();
    let candidate = (0.5 * (params.beta() + 1.0)).rem_euclid(1.0);
    for c in [
        candidate - CANDIDATE_OFFSET,
        candidate,
        candidate + CANDIDATE_OFFSET,
    ] {
        if c > 0.0 && c < 1.0 {
            grid.push(c);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();

    let values = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;

    // Exact zeros at scan points in [0, 1) count as roots; F(1) = -F(0), so
    // a zero at 1 is the same root as the one at 0.
    let mut exact_zeros = Vec::new();
    let mut brackets = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &v) in grid.iter().zip(values.iter()) {
        if v == 0.0 {
            if t < 1.0 {
                exact_zeros.push(t);
            }
            continue;
        }
        if let Some((lt, lv)) = last {
            if lv.signum() != v.signum() {
                brackets.push((lt, lv, t));
            }
        }
        last = Some((t, v));
    }
    // A sign change straddling an exact zero is that zero, not a new root.
    brackets.retain(|&(a, _, b)| !exact_zeros.iter().any(|&z| z > a && z < b));
    let count = exact_zeros.len() + brackets.len();
    if count == 0 {
        return Err(Error::NoSignChange { n });
    }
    if count > 1 {
        return Err(Error::AmbiguousRoot { n, count });
    }

    let qn = params.q().powf(n as f64);
    if let Some(&theta) = exact_zeros.first() {
        return Ok(ThetaRoot {
            theta,
            residual: 0.0,
            scaled_residual: 0.0,
            bracket_width: 0.0,
            n,
            params: *params,
        });
    }

    let (mut lo, lo_val, mut hi) = brackets[0];
    let lo_sign = lo_val.signum();
    let mut mid_val = lo_val;
    // Bisect to width tol and, where the slope is steep (q near 1, small n),
    // further until the scaled residual is below 10 * tol.
    while hi - lo > tol || mid_val.abs() > 10.0 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        mid_val = f(mid)?;
        if mid_val == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if mid_val.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = 0.5 * (lo + hi);
    if theta >= 1.0 {
        theta = 0.0;
    }
    let scaled = if lo == hi { mid_val } else { f(theta)? };
    Ok(ThetaRoot {
        theta,
        residual: scaled * qn,
        scaled_residual: scaled,
        bracket_width: hi - lo,
        n,
        params: *params,
    })
}
