//! Kernel evaluation: the Poisson kernel `P_{q,beta}`, the Bernoulli
//! sawtooth `B_1`, their convolution `P_{q,beta,1}`, the heat-equation
//! Poisson kernel and the convolution of `P_{q,beta}` with
//! `phi_n(t) = sign sin(nt)`.
//!
//! Angles of the form `k*t` are formed in half-turn units with
//! double-double arithmetic before reduction, so high harmonics keep
//! their phase.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{
    cos_pi, radians_to_half_turns, reduce_angle, sin_cos_pi_dd, sin_cos_pi_reduced, CompensatedSum,
    Dd, Truncation,
};

/// Parameters `(q, beta)` shared by every kernel and class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    q: f64,
    beta: f64,
}

impl KernelParams {
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
        }
        if !beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {beta}")));
        }
        Ok(KernelParams { q, beta })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `n * ln(1/q)`, the exponent of `q^{-n}`.
    pub fn log_scale(&self, n: u64) -> f64 {
        -(n as f64) * self.q.ln()
    }
}

/// Truncation policy for the infinite kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            rel_tol: 1e-16,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesPolicy {
    pub(crate) fn truncation(&self, ratio: f64) -> Truncation {
        Truncation::new(self.rel_tol, self.max_terms, ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.max_terms == 0 {
            return Err(Error::domain(
                "series policy needs rel_tol > 0 and max_terms >= 1",
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q must lie in (0, 1), got {q}")))
    }
}

/// `P_{q,beta}(t) = sum_{k>=1} q^k cos(kt - beta*pi/2)` in closed form.
pub fn eval_poisson(params: &KernelParams, t: f64) -> f64 {
    let q = params.q;
    let r = reduce_angle(t);
    let st = r.sin();
    // 1 - cos t = 2 sin^2(t/2) keeps the denominator accurate for q near 1
    let h = (0.5 * r).sin();
    let one_minus_cos = 2.0 * h * h;
    let phase = 0.5 * params.beta;
    let (sb, cb) = (crate::numeric::sin_pi(phase), cos_pi(phase));
    let denom = (1.0 - q) * (1.0 - q) + 2.0 * q * one_minus_cos;
    let even = q * (1.0 - q) - q * one_minus_cos;
    (cb * even + sb * q * st) / denom
}

/// Bernoulli kernel `B_1(t) = sum sin(kt)/k`, the sawtooth `(pi - t)/2` on
/// `(0, 2*pi)`, taking its principal value 0 on the lattice `2*pi*Z`.
pub fn eval_bernoulli(t: f64) -> f64 {
    let r = reduce_angle(t);
    if r == 0.0 {
        0.0
    } else {
        0.5 * (std::f64::consts::PI - r)
    }
}

/// `B_1(pi * f)` for an argument given in half-turns.
pub(crate) fn bernoulli_half_turns(f: Dd) -> Dd {
    // (pi - pi*r)/2 with r = f mod 2 in [0, 2)
    let mut r = f.rem_two();
    if r.hi < 0.0 {
        r = r + 2.0;
    }
    if r.hi == 0.0 && r.lo == 0.0 {
        return Dd::ZERO;
    }
    Dd::PI * 0.5 * (Dd::ONE - r)
}

/// `P_{q,beta,1}(t) = sum_{k>=1} (q^k/k) cos(kt - (beta+1)*pi/2)`.
pub fn eval_poisson_integrated(
    params: &KernelParams,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    poisson_integrated_half_turns(params, radians_to_half_turns(t), policy)
}

pub(crate) fn poisson_integrated_half_turns(
    params: &KernelParams,
    frac: Dd,
    policy: &SeriesPolicy,
) -> Result<f64> {
    let q = params.q;
    let shift = 0.5 * (params.beta + 1.0);
    let mut acc = CompensatedSum::new();
    let mut tr = policy.truncation(q);
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let weight = q.powf(kf) / kf;
        let (_, c) = sin_cos_pi_reduced(frac * kf - shift);
        acc.add(weight * c);
        if weight == 0.0 || tr.record(weight)? {
            break;
        }
        k += 1;
    }
    Ok(acc.value())
}

/// `P_{q,beta,1}(pi * frac)` in double-double precision.
///
/// Used for the spline system entries, whose smallest eigenvalues are of
/// order `q^n/n`; binary64 entries would cap the solution accuracy at
/// roughly `cond * 2^-53`.
pub fn poisson_integrated_dd(params: &KernelParams, frac: Dd) -> Dd {
    let q = params.q;
    let shift = Dd::from_sum(params.beta, 1.0) * 0.5;
    let ratio = q / (1.0 - q);
    let mut power = Dd::ONE;
    let mut acc = Dd::ZERO;
    let mut k = 1u32;
    loop {
        power = power * q;
        let weight = power / f64::from(k);
        let (_, c) = sin_cos_pi_dd(frac * f64::from(k) - shift);
        acc += weight * c;
        if weight.hi * ratio < 1e-34 * (acc.hi.abs() + q) {
            break;
        }
        k += 1;
    }
    acc
}

/// Heat-equation Poisson kernel `1/2 + 2 sum_{j>=1} cos(jt) / (q^j + q^{-j})`.
pub fn eval_heat_poisson(q: f64, t: f64, policy: &SeriesPolicy) -> Result<f64> {
    check_q(q)?;
    heat_poisson_half_turns(q, radians_to_half_turns(t), policy)
}

/// Above this `q` the kernel is summed in its dual form.
const HEAT_DUAL_Q: f64 = 0.5;

pub(crate) fn heat_poisson_half_turns(q: f64, frac: Dd, policy: &SeriesPolicy) -> Result<f64> {
    if q < HEAT_DUAL_Q {
        Ok(0.5 + heat_tail_half_turns(q, frac, 1, policy)?)
    } else {
        heat_dual_half_turns(q, frac, policy)
    }
}

/// Poisson-summation form `(pi/(2 tau)) sum_m sech(pi^2 (f - 2m) / (2 tau))`
/// with `tau = ln(1/q)`. All terms are positive, so the kernel keeps full
/// relative accuracy near its minimum, which for `q` near 1 lies far below
/// the rounding error of the cosine series.
fn heat_dual_half_turns(q: f64, frac: Dd, policy: &SeriesPolicy) -> Result<f64> {
    let tau = -q.ln();
    let f = frac.rem_two().to_f64();
    let scale = std::f64::consts::PI * std::f64::consts::PI / (2.0 * tau);
    let sech = |u: f64| {
        let e = (-u.abs()).exp();
        2.0 * e / (1.0 + e * e)
    };
    let mut acc = CompensatedSum::new();
    acc.add(sech(scale * f));
    let mut tr = policy.truncation((-2.0 * scale).exp());
    let mut m = 1.0;
    loop {
        let a = sech(scale * (f - 2.0 * m));
        let b = sech(scale * (f + 2.0 * m));
        acc.add(a);
        acc.add(b);
        if a + b == 0.0 || tr.record(a + b)? {
            break;
        }
        m += 1.0;
    }
    Ok(std::f64::consts::PI / (2.0 * tau) * acc.value())
}

/// `2 sum_{j>=first} cos(j*pi*frac) q^j / (1 + q^{2j})`.
pub(crate) fn heat_tail_half_turns(
    q: f64,
    frac: Dd,
    first: u64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    let mut tr = policy.truncation(q);
    let mut j = first;
    loop {
        let jf = j as f64;
        let qj = q.powf(jf);
        if qj == 0.0 {
            break;
        }
        let weight = qj / (1.0 + qj * qj);
        let (_, c) = sin_cos_pi_reduced(frac * jf);
        acc.add(2.0 * weight * c);
        if tr.record(2.0 * qj)? {
            break;
        }
        j += 1;
    }
    Ok(acc.value())
}

/// `(P_{q,beta} * phi_n)(x) = (4/pi) sum_{nu>=0} q^{(2nu+1)n}/(2nu+1) sin((2nu+1)nx - beta*pi/2)`.
pub fn convolve_phi_n(params: &KernelParams, n: u64, x: f64, policy: &SeriesPolicy) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let q = params.q;
    let nf = n as f64;
    let frac = radians_to_half_turns(x);
    let shift = 0.5 * params.beta;
    let ratio = q.powf(2.0 * nf);
    let mut tr = policy.truncation(ratio.min(0.5));
    let mut acc = CompensatedSum::new();
    let mut nu = 0u64;
    loop {
        let m = (2 * nu + 1) as f64;
        let weight = q.powf(m * nf) / m;
        if weight == 0.0 {
            break;
        }
        let (s, _) = sin_cos_pi_reduced(frac * (m * nf) - shift);
        acc.add(weight * s);
        if tr.record(weight)? {
            break;
        }
        nu += 1;
    }
    Ok(4.0 / std::f64::consts::PI * acc.value())
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Quadrature evaluation of `(1/pi) int_0^{2pi} P_{q,beta}(x - t) phi_n(t) dt`.
///
/// Each of the `2n` sign-constant pieces `[k*pi/n, (k+1)*pi/n]` is split into
/// `panels` equal panels with an 8-point Gauss-Legendre rule, so the
/// integrand is smooth on every panel. Independent of the series route.
pub fn quadrature_convolution(params: &KernelParams, n: u64, x: f64, panels: usize) -> Result<f64> {
    if n == 0 || panels == 0 {
        return Err(Error::domain("n and panels must be at least 1"));
    }
    let width = std::f64::consts::PI / n as f64;
    let h = width / panels as f64;
    let mut total = CompensatedSum::new();
    for piece in 0..2 * n {
        let sign = if piece % 2 == 0 { 1.0 } else { -1.0 };
        let start = piece as f64 * width;
        let mut part = CompensatedSum::new();
        for p in 0..panels {
            let a = start + p as f64 * h;
            let mid = a + 0.5 * h;
            for (node, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let t = mid + 0.5 * h * node;
                part.add(w * eval_poisson(params, x - t));
            }
        }
        total.add(sign * 0.5 * h * part.value());
    }
    Ok(total.value() / std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn params(q: f64, beta: f64) -> KernelParams {
        KernelParams::new(q, beta).unwrap()
    }

    // Direct truncated summation, the oracle for the closed forms.
    fn poisson_series(q: f64, beta: f64, t: f64, terms: usize) -> f64 {
        (1..=terms)
            .map(|k| q.powi(k as i32) * (k as f64 * t - beta * FRAC_PI_2).cos())
            .sum()
    }

    // -log(1 - q e^{it}) = sum q^k e^{ikt}/k
    fn integrated_closed_form(q: f64, beta: f64, t: f64) -> f64 {
        let z = -(Complex64::new(1.0, 0.0) - Complex64::from_polar(q, t)).ln();
        (Complex64::from_polar(1.0, -(beta + 1.0) * FRAC_PI_2) * z).re
    }

    #[test]
    fn params_reject_out_of_domain() {
        assert!(KernelParams::new(0.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 0.0).is_err());
        assert!(KernelParams::new(-0.2, 0.0).is_err());
        assert!(KernelParams::new(0.5, f64::NAN).is_err());
        assert!(KernelParams::new(0.5, -7.25).is_ok());
    }

    #[test]
    fn poisson_trivial_values() {
        assert_relative_eq!(eval_poisson(&params(0.5, 0.0), 0.0), 1.0, epsilon = 1e-15);
        assert!(eval_poisson(&params(0.5, 1.0), 0.0).abs() < 1e-16);
    }

    #[test]
    fn poisson_matches_series() {
        let p = params(0.3, 0.7);
        let oracle = poisson_series(0.3, 0.7, 1.1, 60);
        assert_relative_eq!(
            eval_poisson(&p, 1.1),
            oracle,
            max_relative = 1e-15,
            epsilon = 1e-16
        );
    }

    #[test]
    fn poisson_closed_form_grid() {
        for i in 0..10 {
            let q = 0.05 + 0.1 * i as f64;
            for b in 0..10 {
                let beta = -2.0 + 0.4 * b as f64;
                for s in 0..10 {
                    let t = TAU * s as f64 / 10.0;
                    let terms = (40.0 / -q.log10()).ceil() as usize + 10;
                    let diff = (eval_poisson(&params(q, beta), t)
                        - poisson_series(q, beta, t, terms))
                    .abs();
                    assert!(diff < 1e-13, "q={q} beta={beta} t={t} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn bernoulli_sawtooth() {
        assert_eq!(eval_bernoulli(PI), 0.0);
        assert_relative_eq!(eval_bernoulli(FRAC_PI_2), PI / 4.0, epsilon = 1e-15);
        assert_eq!(eval_bernoulli(0.0), 0.0);
        assert_eq!(eval_bernoulli(TAU), 0.0);
        assert_relative_eq!(eval_bernoulli(-FRAC_PI_2), -PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn bernoulli_matches_slow_series() {
        let t: f64 = 0.3;
        let series = compensated_partial(1_000_000, |k| (k * t).sin() / k);
        assert!((eval_bernoulli(t) - series).abs() < 1e-3);
    }

    fn compensated_partial(terms: usize, f: impl Fn(f64) -> f64) -> f64 {
        crate::numeric::compensated_sum((1..=terms).map(|k| f(k as f64)))
    }

    #[test]
    fn bernoulli_half_turn_form() {
        for &f in &[0.1, 0.5, 1.0, 1.5, 1.9, -0.25, 3.5] {
            assert_relative_eq!(
                bernoulli_half_turns(Dd::from(f)).to_f64(),
                eval_bernoulli(PI * f),
                epsilon = 1e-14
            );
        }
        assert_eq!(bernoulli_half_turns(Dd::from(4.0)).to_f64(), 0.0);
    }

    #[test]
    fn integrated_kernel_values() {
        let pol = SeriesPolicy::default();
        let v = eval_poisson_integrated(&params(0.5, -1.0), 0.0, &pol).unwrap();
        assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-15);
        // beta = 0: the phase is -pi/2, every term vanishes at t = 0
        let v = eval_poisson_integrated(&params(0.5, 0.0), 0.0, &pol).unwrap();
        assert!(v.abs() < 1e-16);
        // ... and at t = pi/2 the series is sum q^k sin(k pi/2)/k = arctan q
        let v = eval_poisson_integrated(&params(0.5, 0.0), FRAC_PI_2, &pol).unwrap();
        assert_relative_eq!(v, 0.5f64.atan(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.463_647_609_000_806_1, max_relative = 1e-15);
        let v = eval_poisson_integrated(&params(0.2, 1.0), PI, &pol).unwrap();
        let oracle: f64 = (1..80)
            .map(|k| 0.2f64.powi(k) / k as f64 * (k as f64 * PI - PI).cos())
            .sum();
        assert_relative_eq!(v, oracle, max_relative = 1e-15);
    }

    #[test]
    fn integrated_kernel_matches_log_closed_form() {
        let pol = SeriesPolicy::default();
        for &(q, beta, t) in &[
            (0.1, 0.0, 0.3),
            (0.45, 0.7, 2.9),
            (0.9, -1.3, 5.5),
            (0.19, 1.0, 1.0),
        ] {
            let v = eval_poisson_integrated(&params(q, beta), t, &pol).unwrap();
            assert_relative_eq!(v, integrated_closed_form(q, beta, t), epsilon = 1e-14);
            let dd = poisson_integrated_dd(&params(q, beta), radians_to_half_turns(t)).to_f64();
            assert_relative_eq!(dd, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn integrated_kernel_truncation_error() {
        let pol = SeriesPolicy {
            rel_tol: 1e-16,
            max_terms: 3,
        };
        let err = eval_poisson_integrated(&params(0.9, 0.0), 0.4, &pol).unwrap_err();
        assert_eq!(err, Error::Truncation { max_terms: 3 });
    }

    #[test]
    fn heat_dual_form_matches_series() {
        let pol = SeriesPolicy::default();
        for &q in &[0.5, 0.6, 0.75] {
            for &f in &[0.0, 0.2, 0.5, 0.9, 1.3] {
                let dual = heat_dual_half_turns(q, Dd::from(f), &pol).unwrap();
                let series = 0.5 + heat_tail_half_turns(q, Dd::from(f), 1, &pol).unwrap();
                assert_relative_eq!(dual, series, epsilon = 1e-14);
            }
        }
        // q = 0.9, t = pi: two images dominate, 2 (pi/2tau) sech(pi^2/(2tau))
        let tau = -0.9f64.ln();
        let lead = PI / tau * 2.0 / (PI * PI / (2.0 * tau)).cosh();
        let v = eval_heat_poisson(0.9, PI, &pol).unwrap();
        assert!(v > 0.0);
        assert_relative_eq!(v, lead, max_relative = 1e-12);
    }

    #[test]
    fn heat_kernel_values() {
        let pol = SeriesPolicy::default();
        for &t in &[0.0, 1.0, PI] {
            let v = eval_heat_poisson(1e-8, t, &pol).unwrap();
            assert!((v - 0.5).abs() < 3e-8);
        }
        let oracle0 = 0.5
            + 2.0
                * (1..120)
                    .map(|j| 1.0 / (0.5f64.powi(j) + 2f64.powi(j)))
                    .sum::<f64>();
        let v0 = eval_heat_poisson(0.5, 0.0, &pol).unwrap();
        assert_relative_eq!(v0, oracle0, max_relative = 1e-15);
        let oracle_pi = 0.5
            + 2.0
                * (1..120)
                    .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / (0.5f64.powi(j) + 2f64.powi(j)))
                    .sum::<f64>();
        let vpi = eval_heat_poisson(0.5, PI, &pol).unwrap();
        assert_relative_eq!(vpi, oracle_pi, max_relative = 1e-15);
        assert!(eval_heat_poisson(1.0, 0.0, &pol).is_err());
    }

    #[test]
    fn convolution_closed_form_at_zero() {
        let pol = SeriesPolicy::default();
        let v = convolve_phi_n(&params(0.5, 1.0), 2, 0.0, &pol).unwrap();
        assert_relative_eq!(v, -4.0 / PI * 0.25f64.atanh(), max_relative = 1e-15);
    }

    #[test]
    fn convolution_matches_quadrature() {
        let pol = SeriesPolicy::default();
        let p = params(0.3, 0.4);
        let s = convolve_phi_n(&p, 3, 0.7, &pol).unwrap();
        let qd = quadrature_convolution(&p, 3, 0.7, 64).unwrap();
        assert!((s - qd).abs() < 1e-8 * s.abs().max(1e-300));

        let p = params(0.5, 0.0);
        let s = convolve_phi_n(&p, 1, FRAC_PI_2, &pol).unwrap();
        let qd = quadrature_convolution(&p, 1, FRAC_PI_2, 64).unwrap();
        assert!((s - qd).abs() < 1e-8);
        let zero = quadrature_convolution(&p, 1, 0.0, 64).unwrap();
        assert!(zero.abs() < 1e-14);
    }

    #[test]
    fn quadrature_converges() {
        let pol = SeriesPolicy::default();
        let p = params(0.7, 0.3);
        let exact = convolve_phi_n(&p, 2, 1.0, &pol).unwrap();
        let mut prev = (quadrature_convolution(&p, 2, 1.0, 1).unwrap() - exact).abs();
        for panels in [2, 4] {
            let err = (quadrature_convolution(&p, 2, 1.0, panels).unwrap() - exact).abs();
            assert!(err * 4.0 <= prev, "panels={panels}: {err} vs {prev}");
            prev = err;
        }
    }

    proptest! {
        #[test]
        fn convolution_is_antiperiodic(q in 0.05f64..0.95, beta in -2.0f64..2.0, n in 1u64..10, x in 0.0f64..6.3) {
            let pol = SeriesPolicy::default();
            let p = params(q, beta);
            let amp = 4.0 / PI * q.powf(n as f64) / (1.0 - q.powf(2.0 * n as f64));
            let f0 = convolve_phi_n(&p, n, x, &pol).unwrap();
            let f1 = convolve_phi_n(&p, n, x + PI / n as f64, &pol).unwrap();
            prop_assert!((f0 + f1).abs() < 1e-12 * amp);
        }

        #[test]
        fn poisson_is_periodic(q in 0.05f64..0.95, beta in -3.0f64..3.0, t in -20.0f64..20.0) {
            let p = params(q, beta);
            let a = eval_poisson(&p, t);
            let b = eval_poisson(&p, t + TAU);
            prop_assert!((a - b).abs() < 1e-12 * (1.0 / (1.0 - q)));
        }
    }
}
