//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL` line
//! before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable summary.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use poisson_widths::cvd::{counterexample_report, SAFETY_FACTOR};
use poisson_widths::gammacert::{
    delta_bound, gamma4_bound, isqrt, lemma_bound, representation_residuals, GammaContext,
};
use poisson_widths::kernels::{convolve_phi_n, quadrature_convolution};
use poisson_widths::rootfind::solve_theta;
use poisson_widths::skspline::{build_at_maximizer, check_cy2n, DEFAULT_ZERO_TOL};
use poisson_widths::thresholds::{
    decay_condition_holds, find_threshold, implication_suite, n_q_beta, threshold_crossover,
    ThresholdIndex, ThresholdKind, DEFAULT_CAP, MIN_INDEX,
};
use poisson_widths::widths::{asymptotic_gamma, best_approx_value, bracket_check, MAX_LOG_SCALE};
use poisson_widths::{KernelParams, SeriesPolicy};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const THRESHOLD_BUDGET: Duration = Duration::from_secs(1);
const ORDERING_BUDGET: Duration = Duration::from_secs(30);
const CVD_BUDGET: Duration = Duration::from_secs(1);
const SPLINE_BUDGET: Duration = Duration::from_secs(60);
const ROOT_TOL: f64 = 1e-12;
const CLOSED_FORM_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-8;
const GRID_MAX_TOL: f64 = 1e-6;
const GRID_MAX_POINTS: usize = 4096;
const INTERP_TOL: f64 = 1e-9;
const REPRESENTATION_TOL: f64 = 1e-6;
const QUADRATURE_PANELS: usize = 64;
const ORACLE_SEED: u64 = 0x5eed_2013;
const ORACLE_SAMPLES: usize = 20;

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn params(q: f64, beta: f64) -> KernelParams {
    KernelParams::new(q, beta).unwrap()
}

fn tenths() -> impl Iterator<Item = f64> {
    (1..=9).map(|i| i as f64 / 10.0)
}

#[test]
fn criterion_01_thresholds_at_half() {
    let start = Instant::now();
    let nq = find_threshold(0.5, ThresholdKind::Nq, DEFAULT_CAP)
        .unwrap()
        .index;
    let nq_star = find_threshold(0.5, ThresholdKind::NqStar, DEFAULT_CAP)
        .unwrap()
        .index;
    let elapsed = start.elapsed();
    let pass =
        nq.found() == Some(969) && nq_star.found() == Some(963) && elapsed < THRESHOLD_BUDGET;
    report(
        "1",
        pass,
        format!("n_q={nq:?}, n_q*={nq_star:?}, {elapsed:?}"),
    );
    assert!(pass);
}

/// Threshold index, falling back to the real crossover past the cap.
fn threshold_position(q: f64, kind: ThresholdKind) -> f64 {
    match find_threshold(q, kind, DEFAULT_CAP).unwrap().index {
        ThresholdIndex::Found(n) => n as f64,
        ThresholdIndex::NotFound { .. } => threshold_crossover(q, kind)
            .unwrap()
            .unwrap_or(f64::INFINITY),
    }
}

#[test]
fn criterion_02_refined_threshold_ordering() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for i in 0..15 {
        let q = (25 + 5 * i) as f64 / 100.0;
        let (nq, nq_star) = (
            threshold_position(q, ThresholdKind::Nq),
            threshold_position(q, ThresholdKind::NqStar),
        );
        if nq_star > nq {
            failures.push(format!("q={q}: {nq_star} > {nq}"));
        }
    }
    for q in [0.4925, 0.55, 0.65, 0.80] {
        let (nq, nq_star) = (
            threshold_position(q, ThresholdKind::Nq),
            threshold_position(q, ThresholdKind::NqStar),
        );
        if nq <= nq_star {
            failures.push(format!("q={q}: not strict ({nq} vs {nq_star})"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < ORDERING_BUDGET;
    report(
        "2",
        pass,
        format!("{} violations, {elapsed:?}", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// `sum_{k<=60} q^k cos(k t - beta pi/2)` with `t` given as a fraction of pi.
fn kernel_oracle(q: f64, beta: f64, t_over_pi: f64) -> f64 {
    (1..=60)
        .map(|k| q.powi(k) * (PI * (k as f64 * t_over_pi - beta / 2.0)).cos())
        .sum()
}

fn det3_oracle(q: f64, beta: f64, xs: [f64; 3], ys: [f64; 3]) -> f64 {
    let m = |i: usize, j: usize| kernel_oracle(q, beta, xs[i] - ys[j]);
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

const X_NODES: [f64; 3] = [1.0 / 18.0, 1.0 / 9.0, 1.0 / 6.0];
const Y_FIRST: [f64; 3] = [13.0 / 36.0, 11.0 / 30.0, 67.0 / 180.0];
const Y_SECOND: [f64; 3] = [13.0 / 30.0, 10.0 / 9.0, 7.0 / 6.0];

/// Computed determinants agree with the naive oracle and carry certain signs.
fn determinants_sound(beta: f64) -> (bool, f64, f64) {
    let r = counterexample_report(0.21, beta).unwrap();
    let o1 = det3_oracle(0.21, beta, X_NODES, Y_FIRST);
    let o2 = det3_oracle(0.21, beta, X_NODES, Y_SECOND);
    let agree = (r.first.value - o1).abs() <= 1e-6 * o1.abs()
        && (r.second.value - o2).abs() <= 1e-6 * o2.abs();
    let certain = r.first.value.abs() >= SAFETY_FACTOR * r.first.error_bound
        && r.second.value.abs() >= SAFETY_FACTOR * r.second.error_bound;
    (agree && certain && r.not_cvd, r.first.value, r.second.value)
}

#[test]
fn criterion_03_determinants_beta_zero() {
    let start = Instant::now();
    let (sound, first, second) = determinants_sound(0.0);
    let elapsed = start.elapsed();
    let pass = sound && first < -9.98e-10 && second > 1.97e-6 && elapsed < CVD_BUDGET;
    report(
        "3 (beta=0)",
        pass,
        format!("D3 = {first:e}, {second:e}, {elapsed:?}"),
    );
    assert!(pass);
}

/// The published first bound for `beta = 1` is an order of magnitude
/// beyond the determinant computed here and by the independent oracle,
/// so this check fails.
#[test]
fn criterion_03_determinants_beta_one() {
    let start = Instant::now();
    let (sound, first, second) = determinants_sound(1.0);
    let elapsed = start.elapsed();
    assert!(
        sound,
        "determinant disagrees with oracle: {first:e}, {second:e}"
    );
    let pass = first < -1.3e-8 && second > 1.17e-6 && elapsed < CVD_BUDGET;
    report(
        "3 (beta=1)",
        pass,
        format!("D3 = {first:e} (bound < -1.3e-8), {second:e} (bound > 1.17e-6)"),
    );
    assert!(pass, "first determinant {first:e} is not below -1.3e-8");
}

#[test]
fn criterion_04_trivial_roots() {
    let mut worst = 0.0f64;
    for q in tenths() {
        for n in 1..=32 {
            worst =
                worst.max((solve_theta(&params(q, 0.0), n, ROOT_TOL).unwrap().theta - 0.5).abs());
            worst = worst.max(
                solve_theta(&params(q, 1.0), n, ROOT_TOL)
                    .unwrap()
                    .theta
                    .abs(),
            );
        }
    }
    let pass = worst <= ROOT_TOL;
    report("4", pass, format!("max deviation {worst:e}"));
    assert!(pass);
}

#[test]
fn criterion_05_closed_form_widths() {
    let policy = SeriesPolicy::default();
    let mut worst = 0.0f64;
    for q in tenths() {
        for n in 1..=32 {
            let qn = q.powi(n as i32);
            let even = best_approx_value(&params(q, 0.0), n, &policy).unwrap();
            let odd = best_approx_value(&params(q, 1.0), n, &policy).unwrap();
            let (e_exact, o_exact) = (4.0 / PI * qn.atan(), 4.0 / PI * qn.atanh());
            worst = worst
                .max((even - e_exact).abs() / e_exact)
                .max((odd - o_exact).abs() / o_exact);
        }
    }
    let pass = worst <= CLOSED_FORM_TOL;
    report("5", pass, format!("max relative error {worst:e}"));
    assert!(pass);
}

#[test]
fn criterion_06_oracle_equivalence() {
    let policy = SeriesPolicy::default();
    let mut rng = StdRng::seed_from_u64(ORACLE_SEED);
    let mut worst_series = 0.0f64;
    for _ in 0..ORACLE_SAMPLES {
        let q = rng.gen_range(0.05..=0.9);
        let beta = rng.gen_range(0.0..=2.0);
        let n = rng.gen_range(1..=8u64);
        let x = rng.gen_range(0.0..2.0 * PI);
        let p = params(q, beta);
        let series = convolve_phi_n(&p, n, x, &policy).unwrap();
        let quad = quadrature_convolution(&p, n, x, QUADRATURE_PANELS).unwrap();
        // relative to the sup norm, since x may fall near a zero of the convolution
        let amplitude = best_approx_value(&p, n, &policy).unwrap();
        worst_series = worst_series.max((series - quad).abs() / amplitude);
    }

    let mut worst_grid = 0.0f64;
    for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for beta in [0.0, 0.35, 1.0, 1.6] {
            for n in 1..=8u64 {
                let p = params(q, beta);
                let half_period = PI / n as f64;
                let grid_max = (0..GRID_MAX_POINTS)
                    .map(|i| {
                        let x = half_period * i as f64 / GRID_MAX_POINTS as f64;
                        convolve_phi_n(&p, n, x, &policy).unwrap().abs()
                    })
                    .fold(0.0f64, f64::max);
                let value = best_approx_value(&p, n, &policy).unwrap();
                worst_grid = worst_grid.max((grid_max - value).abs() / value);
            }
        }
    }
    let pass = worst_series <= ORACLE_TOL && worst_grid <= GRID_MAX_TOL;
    report(
        "6",
        pass,
        format!("series vs quadrature {worst_series:e}, grid max {worst_grid:e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_spline_sign_pattern() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_residual = 0.0f64;
    for q in [0.10, 0.15, 0.19] {
        for beta in [0.0, 0.7, 1.0] {
            for n in 2..=12 {
                let p = params(q, beta);
                let sol = build_at_maximizer(&p, n).unwrap();
                worst_residual = worst_residual.max(sol.interp_residual);
                let pattern = check_cy2n(&p, n, None, DEFAULT_ZERO_TOL).unwrap();
                if sol.interp_residual >= INTERP_TOL || !pattern.conforms {
                    failures.push((q, beta, n));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < SPLINE_BUDGET;
    report(
        "7",
        pass,
        format!(
            "max residual {worst_residual:e}, {} failures, {elapsed:?}",
            failures.len()
        ),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_08_representation_cross_check() {
    let mut worst = 0.0f64;
    for (q, beta, n) in [(0.10, 0.0, 10), (0.15, 0.7, 12)] {
        let checks = representation_residuals(&params(q, beta), n).unwrap();
        assert_eq!(checks.len(), 2 * n as usize);
        worst = checks.iter().fold(worst, |m, c| m.max(c.residual));
    }
    let pass = worst < REPRESENTATION_TOL;
    report("8", pass, format!("max residual {worst:e}"));
    assert!(pass);
}

#[test]
fn criterion_09_error_budget_lattice() {
    let mut checked = 0;
    let mut failures = Vec::new();
    for q in [0.3, 0.4, 0.45] {
        for n in [36u64, 49, 64, 100, 144] {
            if n < MIN_INDEX || !decay_condition_holds(q, n).unwrap() {
                continue;
            }
            let (aggregate, g4) = (lemma_bound(q, n).unwrap(), gamma4_bound(q, n));
            for beta in [0.0, 0.5, 1.0, 1.7] {
                let ctx = GammaContext::at_maximizer(&params(q, beta), n).unwrap();
                for k in 1..=2 * n {
                    let g = ctx.gammas(k).unwrap();
                    if g.abs_sum() > aggregate || g.gamma[3].abs() >= g4 {
                        failures.push(format!("q={q} beta={beta} n={n} k={k}"));
                    }
                }
                let deltas = ctx.aux().delta;
                for j in 1..=isqrt(n) {
                    if deltas[j as usize].abs() > delta_bound(n, j) {
                        failures.push(format!("delta q={q} beta={beta} n={n} j={j}"));
                    }
                }
                checked += 1;
            }
        }
    }
    let pass = checked > 0 && failures.is_empty();
    report(
        "9",
        pass,
        format!("{checked} lattice points, {} violations", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_10_asymptotic_bounds() {
    let limit = 16.0 / (3.0 * PI);
    let (mut sampled, mut worst) = (0, 0.0f64);
    let mut failures = Vec::new();
    for q in [0.1, 0.15, 0.19, 0.3, 0.5] {
        for beta in [0.0, 0.5, 1.0, 1.7] {
            let ThresholdIndex::Found(start) = n_q_beta(q, beta, DEFAULT_CAP).unwrap() else {
                continue;
            };
            let p = params(q, beta);
            for n in (start..start + 64).filter(|&n| p.log_scale(n) < MAX_LOG_SCALE) {
                let gamma = asymptotic_gamma(&p, n).unwrap();
                let bracket = bracket_check(&p, n).unwrap();
                worst = worst.max(gamma.abs());
                if gamma.abs() > limit || !bracket.contained {
                    failures.push((q, beta, n));
                }
                sampled += 1;
            }
        }
    }
    let pass = sampled > 0 && failures.is_empty();
    report("10", pass, format!("{sampled} points, max |gamma| {worst}"));
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_11_implication_suite() {
    let mut violations = 0;
    for q in [0.37, 0.5, 0.7, 0.9] {
        for n in 9..=2000 {
            violations += implication_suite(q, n).unwrap().violations.len();
        }
    }
    report("11", violations == 0, format!("{violations} violations"));
    assert_eq!(violations, 0);
}
