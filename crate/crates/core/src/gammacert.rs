//! Error terms of the midpoint representation of the spline derivative,
//!
//! `D(t_k) = (-1)^{k+s+1} pi/(4 n q^n) (P_q(t_k - y0) + gamma_1 + ... + gamma_5)`,
//!
//! with `t_k = (k - 1/2) pi / n`, `k = 1..2n`, and the checks built on them.
//!
//! Every `lambda`, `r` and `R` below is carried multiplied by `n / q^n`, so
//! the main part of `lambda_{n-j}` becomes `n q^{-j}/(n-j) + n q^j/(n+j)`.
//! Phases are kept in half-turns relative to `theta = n y0 / pi`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{heat_poisson_half_turns, heat_tail_half_turns, KernelParams, SeriesPolicy};
use crate::numeric::{
    cos_pi, radians_to_half_turns, sin_cos_pi_reduced, sin_pi, CompensatedSum, Dd,
};
use crate::rootfind::solve_theta;
use crate::skspline::{build_spline_half_turns, check_envelope, derivative_at_midpoints};
use crate::thresholds::{lhs_refined, rhs_condition};
use crate::widths::ROOT_TOL;

pub type ComplexValue = Complex64;

/// `|sin(n y0 - beta pi/2)|` at or below this leaves `s` undefined.
pub const SIGN_TOLERANCE: f64 = 1e-13;

fn check_j(n: u64, j: u64) -> Result<()> {
    if j >= n {
        return Err(Error::domain(format!(
            "j must lie in 0..n-1, got j={j}, n={n}"
        )));
    }
    Ok(())
}

/// Integer part of `sqrt(n)`.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Phase data shared by all `j`.
#[derive(Debug, Clone, Copy)]
struct Phase {
    /// `n y0 / pi`
    theta: Dd,
    /// `n y0 - beta pi/2` in half-turns
    lead: f64,
    sigma: f64,
}

impl Phase {
    fn new(params: &KernelParams, theta: Dd) -> Result<Phase> {
        let lead = (theta - 0.5 * params.beta()).rem_two().to_f64();
        let sin_a = sin_pi(lead);
        if sin_a.abs() <= SIGN_TOLERANCE {
            return Err(Error::DegenerateSign { value: sin_a });
        }
        Ok(Phase {
            theta,
            lead,
            sigma: if sin_a > 0.0 { 1.0 } else { -1.0 },
        })
    }

    fn s(&self) -> u8 {
        u8::from(self.sigma < 0.0)
    }

    /// `m n y0 - (beta+1) pi/2` as a unit complex number.
    fn rotation(&self, params: &KernelParams, m: f64) -> Complex64 {
        let shift = Dd::from_sum(params.beta(), 1.0) * 0.5;
        let (s, c) = sin_cos_pi_reduced(self.theta * m - shift);
        Complex64::new(c, s)
    }
}

fn theta_of(n: u64, y0: f64) -> Dd {
    radians_to_half_turns(y0) * n as f64
}

/// `n q^{-j}/(n-j)` and `n q^j/(n+j)`.
fn main_parts(q: f64, n: u64, j: u64) -> (f64, f64) {
    let (nf, jf) = (n as f64, j as f64);
    (nf * q.powf(-jf) / (nf - jf), nf * q.powf(jf) / (nf + jf))
}

/// `s` with `(-1)^s = sign sin(n y0 - beta pi/2)`.
pub fn compute_s(params: &KernelParams, n: u64, y0: f64) -> Result<u8> {
    Ok(Phase::new(params, theta_of(n, y0))?.s())
}

fn r_parts(
    params: &KernelParams,
    n: u64,
    j: u64,
    phase: &Phase,
    policy: &SeriesPolicy,
) -> Result<[Complex64; 3]> {
    let q = params.q();
    let (nf, jf) = (n as f64, j as f64);
    let ratio = q.powf(2.0 * nf);
    let mut acc_re = CompensatedSum::new();
    let mut acc_im = CompensatedSum::new();
    let mut tr = policy.truncation(ratio);
    let mut m = 1u64;
    loop {
        let mf = m as f64;
        let up = nf * q.powf(2.0 * mf * nf - jf) / ((2.0 * mf + 1.0) * nf - jf);
        let mut term = up * phase.rotation(params, 2.0 * mf + 1.0);
        let mut envelope = up;
        if m >= 2 {
            let down = nf * q.powf((2.0 * mf - 2.0) * nf + jf) / ((2.0 * mf - 1.0) * nf + jf);
            term += down * phase.rotation(params, 2.0 * mf - 1.0).conj();
            envelope += down;
        }
        acc_re.add(term.re);
        acc_im.add(term.im);
        if envelope == 0.0 || (m >= 2 && tr.record(envelope)?) {
            break;
        }
        m += 1;
    }
    let r1 = Complex64::new(acc_re.value(), acc_im.value());

    let (a, b) = main_parts(q, n, j);
    let cos_a = cos_pi(phase.lead);
    let abs_sin = sin_pi(phase.lead).abs();
    let r2 = Complex64::new(0.0, (b - a) * cos_a);
    // |sin| - 1 = -cos^2/(1 + |sin|)
    let r3 = Complex64::new(
        phase.sigma * (a + b) * (-cos_a * cos_a / (1.0 + abs_sin)),
        0.0,
    );
    Ok([r1, r2, r3])
}

/// `(r^(1), r^(2), r^(3))` for index `j`, each multiplied by `n / q^n`.
pub fn compute_r(
    params: &KernelParams,
    n: u64,
    j: u64,
    y0: f64,
    policy: &SeriesPolicy,
) -> Result<(ComplexValue, ComplexValue, ComplexValue)> {
    check_j(n, j)?;
    let [a, b, c] = r_parts(params, n, j, &Phase::new(params, theta_of(n, y0))?, policy)?;
    Ok((a, b, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct IndexTerms {
    /// `r_j`
    r: Complex64,
    /// `|lambda_{n-j}|`
    lambda_abs: f64,
    /// `R_j`
    big_r: f64,
    /// `cos(j pi / 2n)`
    cos_j: f64,
    /// `delta_j`, meaningful for `j <= floor(sqrt n)`
    delta: f64,
}

fn index_terms(
    params: &KernelParams,
    n: u64,
    j: u64,
    phase: &Phase,
    policy: &SeriesPolicy,
) -> Result<IndexTerms> {
    let q = params.q();
    let [r1, r2, r3] = r_parts(params, n, j, phase, policy)?;
    let r = r1 + r2 + r3;
    let (a, b) = main_parts(q, n, j);
    let main = a + b;
    let lambda_abs = (phase.sigma * main + r).norm();
    // |sigma A + r| - A without cancellation
    let big_r = (2.0 * phase.sigma * main * r.re + r.norm_sqr()) / (lambda_abs + main);
    let cos_j = cos_pi(j as f64 / (2.0 * n as f64));
    let jf = j as f64;
    let denom = q.powf(-jf) + q.powf(jf);
    let delta = ((main * cos_j - denom) + big_r * cos_j) / denom;
    Ok(IndexTerms {
        r,
        lambda_abs,
        big_r,
        cos_j,
        delta,
    })
}

/// `lambda_{n-j}(y0)`, multiplied by `n / q^n`.
pub fn compute_lambda(params: &KernelParams, n: u64, j: u64, y0: f64) -> Result<ComplexValue> {
    check_j(n, j)?;
    let phase = Phase::new(params, theta_of(n, y0))?;
    let [r1, r2, r3] = r_parts(params, n, j, &phase, &SeriesPolicy::default())?;
    let (a, b) = main_parts(params.q(), n, j);
    let rot = Complex64::new(
        cos_pi(j as f64 * y0 / std::f64::consts::PI),
        -sin_pi(j as f64 * y0 / std::f64::consts::PI),
    );
    Ok(rot * (phase.sigma * (a + b) + r1 + r2 + r3))
}

/// `R_j = |lambda_{n-j}| - q^{n-j}/(n-j) - q^{n+j}/(n+j)`, multiplied by `n / q^n`.
#[allow(non_snake_case)]
pub fn compute_R(params: &KernelParams, n: u64, j: u64, y0: f64) -> Result<f64> {
    check_j(n, j)?;
    let phase = Phase::new(params, theta_of(n, y0))?;
    Ok(index_terms(params, n, j, &phase, &SeriesPolicy::default())?.big_r)
}

/// `delta_j = n |lambda_{n-j}| cos(j pi/2n) / ((q^{-j} + q^j) q^n) - 1`.
pub fn compute_delta(params: &KernelParams, n: u64, j: u64, y0: f64) -> Result<f64> {
    if j > isqrt(n) {
        return Err(Error::domain(format!(
            "delta_j needs j <= floor(sqrt n) = {}",
            isqrt(n)
        )));
    }
    check_j(n, j)?;
    let phase = Phase::new(params, theta_of(n, y0))?;
    Ok(index_terms(params, n, j, &phase, &SeriesPolicy::default())?.delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaAux {
    /// `delta_j`, `j = 0..floor(sqrt n)`
    pub delta: Vec<f64>,
    /// Scaled `R_j`, `j = 0..n-1`
    pub big_r: Vec<f64>,
    /// Scaled `|lambda_{n-j}|`, `j = 0..n-1`
    pub lambda_abs: Vec<f64>,
    /// `arg r_j`, `j = 0..n-1`
    pub r_arg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaBreakdown {
    pub gamma: [f64; 5],
    pub s: u8,
    pub y0: f64,
    pub k: u64,
    pub n: u64,
    pub params: KernelParams,
    pub aux: GammaAux,
}

impl GammaBreakdown {
    pub fn abs_sum(&self) -> f64 {
        self.gamma.iter().map(|g| g.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

/// Everything about `(params, n, y0)` that does not depend on `k`.
#[derive(Debug, Clone)]
pub struct GammaContext {
    params: KernelParams,
    n: u64,
    phase: Phase,
    y0: f64,
    terms: Vec<IndexTerms>,
    policy: SeriesPolicy,
}

impl GammaContext {
    pub fn new(
        params: &KernelParams,
        n: u64,
        y0: f64,
        policy: &SeriesPolicy,
    ) -> Result<GammaContext> {
        Self::from_theta(params, n, theta_of(n, y0), policy)
    }

    /// Context at `y0 = theta_n pi / n` with the root taken from the solver.
    pub fn at_maximizer(params: &KernelParams, n: u64) -> Result<GammaContext> {
        let root = solve_theta(params, n, ROOT_TOL)?;
        Self::from_theta(params, n, Dd::from(root.theta), &SeriesPolicy::default())
    }

    fn from_theta(
        params: &KernelParams,
        n: u64,
        theta: Dd,
        policy: &SeriesPolicy,
    ) -> Result<GammaContext> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        check_envelope(params, n)?;
        policy.validate()?;
        let phase = Phase::new(params, theta)?;
        let terms = (0..n)
            .map(|j| index_terms(params, n, j, &phase, policy))
            .collect::<Result<Vec<_>>>()?;
        Ok(GammaContext {
            params: *params,
            n,
            phase,
            y0: (theta * Dd::PI).to_f64() / n as f64,
            terms,
            policy: *policy,
        })
    }

    pub fn s(&self) -> u8 {
        self.phase.s()
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// `t_k - y0` in half-turns.
    fn offset(&self, k: u64) -> Dd {
        let nf = self.n as f64;
        Dd::ratio((2 * k - 1) as f64, 2.0 * nf) - self.phase.theta / nf
    }

    pub fn aux(&self) -> GammaAux {
        let m = isqrt(self.n) as usize;
        GammaAux {
            delta: self.terms[..=m.min(self.terms.len() - 1)]
                .iter()
                .map(|t| t.delta)
                .collect(),
            big_r: self.terms.iter().map(|t| t.big_r).collect(),
            lambda_abs: self.terms.iter().map(|t| t.lambda_abs).collect(),
            r_arg: self.terms.iter().map(|t| t.r.arg()).collect(),
        }
    }

    pub fn gammas(&self, k: u64) -> Result<GammaBreakdown> {
        let n = self.n;
        if k == 0 || k > 2 * n {
            return Err(Error::domain(format!("k must lie in 1..2n, got {k}")));
        }
        let x = self.offset(k);
        let m = isqrt(n);
        let sigma = self.phase.sigma;
        let mut g1 = CompensatedSum::new();
        let mut g2 = CompensatedSum::new();
        let mut g4 = CompensatedSum::new();
        for (j, t) in self.terms.iter().enumerate() {
            let (s, c) = sin_cos_pi_reduced(x * j as f64);
            let rotated = t.r * Complex64::new(c, s);
            let z = rotated.re - sigma * t.big_r * c;
            let lam2 = t.lambda_abs * t.lambda_abs;
            if j == 0 {
                g2.add(z / lam2);
                continue;
            }
            g2.add(2.0 * z / (lam2 * t.cos_j));
            let base = c / (t.lambda_abs * t.cos_j);
            if j as u64 > m {
                g1.add(2.0 * base);
            } else {
                g4.add(-2.0 * t.delta * base);
            }
        }
        let r0 = self.terms[0].big_r;
        let g3 = -r0 / (2.0 * (2.0 + r0));
        let g5 = -heat_tail_half_turns(self.params.q(), x, m + 1, &self.policy)?;
        Ok(GammaBreakdown {
            gamma: [g1.value(), sigma * g2.value(), g3, g4.value(), g5],
            s: self.s(),
            y0: self.y0,
            k,
            n,
            params: self.params,
            aux: self.aux(),
        })
    }

    /// `P_q(t_k - y0)`
    pub fn heat_kernel_at(&self, k: u64) -> Result<f64> {
        heat_poisson_half_turns(self.params.q(), self.offset(k), &self.policy)
    }

    /// Midpoint derivative predicted by the representation.
    pub fn predicted_derivative(&self, k: u64) -> Result<f64> {
        let g = self.gammas(k)?;
        let sign = if (k + u64::from(self.s()) + 1).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let scale = std::f64::consts::PI / (4.0 * self.n as f64)
            * (-self.params.log_scale(self.n)).exp().recip();
        Ok(sign * scale * (self.heat_kernel_at(k)? + g.sum()))
    }
}

pub fn compute_gammas(
    params: &KernelParams,
    n: u64,
    k: u64,
    y0: f64,
    policy: &SeriesPolicy,
) -> Result<GammaBreakdown> {
    GammaContext::new(params, n, y0, policy)?.gammas(k)
}

/// Lower bound of the heat-equation Poisson kernel over all `x`.
pub fn heat_lower_bound(q: f64) -> Result<f64> {
    rhs_condition(q)
}

/// Aggregate bound on `sum |gamma_i|` (requires `n >= 9` and the decay condition).
pub fn lemma_bound(q: f64, n: u64) -> Result<f64> {
    lhs_refined(q, n)
}

/// Bound on `|gamma_4|`: `8/(3n - 7 sqrt n) q/(1-q)^2`.
pub fn gamma4_bound(q: f64, n: u64) -> f64 {
    let nf = n as f64;
    8.0 / (3.0 * nf - 7.0 * nf.sqrt()) * q / ((1.0 - q) * (1.0 - q))
}

/// Bound on `|delta_j|`: `4j / (3(n - j))`.
pub fn delta_bound(n: u64, j: u64) -> f64 {
    4.0 * j as f64 / (3.0 * (n - j) as f64)
}

/// `heat_lower_bound(q) + sum gamma_i(k) >= 0` at the maximizer.
pub fn check_positivity(params: &KernelParams, n: u64, k: u64) -> Result<bool> {
    let ctx = GammaContext::at_maximizer(params, n)?;
    Ok(heat_lower_bound(params.q())? + ctx.gammas(k)?.sum() >= 0.0)
}

/// Relative gap between the spline derivative on the interval around `t_k`
/// and its representation, for every `k = 1..2n`.
pub fn representation_residuals(params: &KernelParams, n: u64) -> Result<Vec<RepresentationCheck>> {
    let root = solve_theta(params, n, ROOT_TOL)?;
    let ctx = GammaContext::from_theta(params, n, Dd::from(root.theta), &SeriesPolicy::default())?;
    let sol = build_spline_half_turns(params, n, Dd::ratio(root.theta, n as f64))?;
    let direct = derivative_at_midpoints(&sol);
    (1..=2 * n)
        .map(|k| {
            let spline = direct[(k - 1) as usize];
            let formula = ctx.predicted_derivative(k)?;
            let scale = spline.abs().max(formula.abs());
            Ok(RepresentationCheck {
                k,
                spline,
                formula,
                residual: if scale == 0.0 {
                    0.0
                } else {
                    (spline - formula).abs() / scale
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepresentationCheck {
    pub k: u64,
    pub spline: f64,
    pub formula: f64,
    pub residual: f64,
}

pub fn representation_residual(params: &KernelParams, n: u64, k: u64) -> Result<f64> {
    if k == 0 || k > 2 * n {
        return Err(Error::domain(format!("k must lie in 1..2n, got {k}")));
    }
    Ok(representation_residuals(params, n)?[(k - 1) as usize].residual)
}
