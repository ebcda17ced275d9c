//! Best-approximation values, the width identities they certify, and the
//! asymptotic term `gamma_n` with its two-sided bounds.
//!
//! With `r = q^{2n}` and `a = theta pi - beta pi/2` the value is
//! `(4/pi) q^n |S|`, where `S = sin a + r T` and
//! `T = sum_{nu>=1} r^{nu-1} sin((2nu+1) theta pi - beta pi/2) / (2nu+1)`.
//! At the root, `cos a = -r C` with
//! `C = sum_{nu>=1} r^{nu-1} cos((2nu+1) theta pi - beta pi/2)`, so
//! `|S| - 1 = r (sigma T - r C^2 / (1 + |sin a|))` without cancellation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelParams, SeriesPolicy};
use crate::numeric::{cos_pi, sin_pi, CompensatedSum, Dd};
use crate::rootfind::{solve_theta, ThetaRoot};
use crate::thresholds::{n_q_beta, ThresholdIndex, DEFAULT_CAP};

/// Bisection width used for `theta_n` unless a caller supplies one.
pub const ROOT_TOL: f64 = 1e-14;

/// Largest `n ln(1/q)` for which `q^n` is treated as representable.
pub const MAX_LOG_SCALE: f64 = 700.0;

const FRAC_4_PI: f64 = 4.0 / PI;

/// `q^n * mantissa`, kept apart so that the mantissa survives underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactoredValue {
    pub mantissa: f64,
    /// `n ln q`
    pub log_qn: f64,
    /// `q^n`, zero once it underflows
    pub qn: f64,
}

impl FactoredValue {
    pub fn value(&self) -> f64 {
        self.mantissa * self.qn
    }

    pub fn ln_value(&self) -> f64 {
        self.mantissa.ln() + self.log_qn
    }
}

#[derive(Debug, Clone, Copy)]
struct PhaseSums {
    /// `|S|`
    abs_sum: f64,
    /// `(|S| - 1) / r`, valid at a root
    scaled_deviation: f64,
}

fn phase_arg(theta: f64, m: f64, shift: f64) -> f64 {
    (Dd::from_prod(theta, m) - shift).rem_two().to_f64()
}

fn phase_sums(
    params: &KernelParams,
    n: u64,
    theta: f64,
    policy: &SeriesPolicy,
) -> Result<PhaseSums> {
    let ratio = params.q().powf(2.0 * n as f64);
    let shift = 0.5 * params.beta();
    let lead = phase_arg(theta, 1.0, shift);
    let (sin_a, abs_sin) = (sin_pi(lead), sin_pi(lead).abs());
    let sigma = if sin_a < 0.0 { -1.0 } else { 1.0 };

    let mut t = CompensatedSum::new();
    let mut c = CompensatedSum::new();
    let mut tr = policy.truncation(ratio);
    let mut nu = 1u64;
    loop {
        let weight = ratio.powf((nu - 1) as f64);
        if weight == 0.0 {
            break;
        }
        let m = (2 * nu + 1) as f64;
        let arg = phase_arg(theta, m, shift);
        t.add(weight * sin_pi(arg) / m);
        c.add(weight * cos_pi(arg));
        if tr.record(weight)? {
            break;
        }
        nu += 1;
    }
    let (t, c) = (t.value(), c.value());
    Ok(PhaseSums {
        abs_sum: abs_sin + ratio * sigma * t,
        scaled_deviation: sigma * t - ratio * c * c / (1.0 + abs_sin),
    })
}

/// Best approximation together with the root it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestApprox {
    pub factored: FactoredValue,
    pub theta: ThetaRoot,
    /// `(|S| - 1) / q^{2n}`
    pub scaled_deviation: f64,
}

/// Evaluate the best approximation with root tolerance `tol`.
pub fn best_approx(
    params: &KernelParams,
    n: u64,
    tol: f64,
    policy: &SeriesPolicy,
) -> Result<BestApprox> {
    policy.validate()?;
    let theta = solve_theta(params, n, tol)?;
    let sums = phase_sums(params, n, theta.theta, policy)?;
    Ok(BestApprox {
        factored: FactoredValue {
            mantissa: FRAC_4_PI * sums.abs_sum,
            log_qn: -params.log_scale(n),
            qn: params.q().powf(n as f64),
        },
        theta,
        scaled_deviation: sums.scaled_deviation,
    })
}

pub fn best_approx_factored(
    params: &KernelParams,
    n: u64,
    policy: &SeriesPolicy,
) -> Result<FactoredValue> {
    Ok(best_approx(params, n, ROOT_TOL, policy)?.factored)
}

/// `(4/pi) |sum_{nu>=0} q^{(2nu+1)n}/(2nu+1) sin((2nu+1) theta_n pi - beta pi/2)|`.
/// Returns 0 when `q^n` underflows; use [`best_approx_factored`] there.
pub fn best_approx_value(params: &KernelParams, n: u64, policy: &SeriesPolicy) -> Result<f64> {
    Ok(best_approx_factored(params, n, policy)?.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Certified,
    NotCertified,
    /// The threshold search stopped at `cap` below `n`.
    Unknown {
        cap: u64,
    },
}

impl Certification {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Certification::Certified => Some(true),
            Certification::NotCertified => Some(false),
            Certification::Unknown { .. } => None,
        }
    }
}

fn certify(n: u64, threshold: ThresholdIndex) -> Certification {
    match threshold {
        ThresholdIndex::Found(start) if n >= start => Certification::Certified,
        ThresholdIndex::Found(_) => Certification::NotCertified,
        ThresholdIndex::NotFound { cap } if n <= cap => Certification::NotCertified,
        ThresholdIndex::NotFound { cap } => Certification::Unknown { cap },
    }
}

/// Common value of the even and odd widths and of the best approximations.
/// The width equalities hold only when `certification` is `Certified`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthReport {
    pub value: f64,
    pub factored: FactoredValue,
    pub theta: ThetaRoot,
    pub n: u64,
    pub params: KernelParams,
    pub certification: Certification,
    pub threshold: ThresholdIndex,
}

impl WidthReport {
    pub fn certified(&self) -> Option<bool> {
        self.certification.as_bool()
    }
}

pub fn width_report(params: &KernelParams, n: u64) -> Result<WidthReport> {
    width_report_with(params, n, ROOT_TOL, DEFAULT_CAP)
}

pub fn width_report_with(params: &KernelParams, n: u64, tol: f64, cap: u64) -> Result<WidthReport> {
    let best = best_approx(params, n, tol, &SeriesPolicy::default())?;
    let threshold = n_q_beta(params.q(), params.beta(), cap)?;
    Ok(WidthReport {
        value: best.factored.value(),
        factored: best.factored,
        theta: best.theta,
        n,
        params: *params,
        certification: certify(n, threshold),
        threshold,
    })
}

fn check_representable(params: &KernelParams, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let scale = params.log_scale(n);
    if scale >= MAX_LOG_SCALE {
        return Err(Error::Underflow { scale });
    }
    Ok(())
}

/// `gamma_n = (value/q^n - 4/pi) (1 - q^{2n}) / q^{2n}`.
pub fn asymptotic_gamma(params: &KernelParams, n: u64) -> Result<f64> {
    check_representable(params, n)?;
    let best = best_approx(params, n, ROOT_TOL, &SeriesPolicy::default())?;
    let ratio = params.q().powf(2.0 * n as f64);
    Ok(FRAC_4_PI * (1.0 - ratio) * best.scaled_deviation)
}

/// `(q^n (1 - (4/3) x), q^n (1 + (4/3) x))` with `x = q^{2n}/(1 - q^{2n})`.
pub fn two_sided_bounds(params: &KernelParams, n: u64) -> Result<(f64, f64)> {
    check_representable(params, n)?;
    let qn = params.q().powf(n as f64);
    let x = qn * qn / (1.0 - qn * qn);
    Ok((qn * (1.0 - 4.0 / 3.0 * x), qn * (1.0 + 4.0 / 3.0 * x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCheck {
    pub lower: f64,
    pub upper: f64,
    /// `(pi/4) * value`
    pub scaled_value: f64,
    pub gamma: f64,
    /// Containment decided on `|S| - 1` against `(4/3) x`, which stays exact
    /// when `q^{2n}` is below the rounding unit of `q^n`.
    pub contained: bool,
}

pub fn bracket_check(params: &KernelParams, n: u64) -> Result<BracketCheck> {
    let (lower, upper) = two_sided_bounds(params, n)?;
    let best = best_approx(params, n, ROOT_TOL, &SeriesPolicy::default())?;
    let ratio = params.q().powf(2.0 * n as f64);
    let dev_bound = 4.0 / 3.0 / (1.0 - ratio);
    Ok(BracketCheck {
        lower,
        upper,
        scaled_value: best.factored.value() / FRAC_4_PI,
        gamma: FRAC_4_PI * (1.0 - ratio) * best.scaled_deviation,
        contained: best.scaled_deviation.abs() <= dev_bound,
    })
}
