//! Single-point commands. Each returns the fields of its report.

use poisson_widths::cvd::counterexample_report;
use poisson_widths::gammacert::{
    delta_bound, gamma4_bound, heat_lower_bound, isqrt, lemma_bound, GammaContext,
};
use poisson_widths::rootfind::solve_theta;
use poisson_widths::skspline::{
    build_at_maximizer, build_fundamental_spline, derivative_at_midpoints, sign_pattern,
};
use poisson_widths::thresholds::{
    decay_condition_holds, find_threshold, n_q_beta, threshold_crossover, ThresholdIndex,
    ThresholdKind, MIN_INDEX,
};
use poisson_widths::widths::{
    asymptotic_gamma, best_approx, bracket_check, width_report_with, Certification,
};
use poisson_widths::{Error, KernelParams, Result, SeriesPolicy};
use serde_json::{json, Map, Value};

pub fn object(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("value".into(), other);
            map
        }
    }
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// `Ok(v)` as a value, representability failures as `null`, anything else propagated.
fn optional<T>(res: Result<T>) -> Result<Option<T>> {
    match res {
        Ok(v) => Ok(Some(v)),
        Err(Error::Underflow { .. } | Error::RangeUnsupported { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn index_value(index: ThresholdIndex) -> Value {
    index.found().map_or(Value::Null, Value::from)
}

pub fn certification_label(c: Certification) -> &'static str {
    match c {
        Certification::Certified => "certified",
        Certification::NotCertified => "not_certified",
        Certification::Unknown { .. } => "unknown",
    }
}

pub fn theta(params: &KernelParams, n: u64, tol: f64) -> Result<Map<String, Value>> {
    let root = solve_theta(params, n, tol)?;
    Ok(object(json!({
        "q": params.q(),
        "beta": params.beta(),
        "n": n,
        "theta": root.theta,
        "maximizer": root.maximizer(),
        "residual": root.residual,
        "scaled_residual": root.scaled_residual,
        "bracket_width": root.bracket_width,
    })))
}

pub fn width(params: &KernelParams, n: u64, tol: f64, cap: u64) -> Result<Map<String, Value>> {
    let report = width_report_with(params, n, tol, cap)?;
    let gamma = optional(asymptotic_gamma(params, n))?;
    let bracket = optional(bracket_check(params, n))?;
    Ok(object(json!({
        "q": params.q(),
        "beta": params.beta(),
        "n": n,
        "value": report.value,
        "mantissa": report.factored.mantissa,
        "log_qn": report.factored.log_qn,
        "ln_value": report.factored.ln_value(),
        "theta": report.theta.theta,
        "maximizer": report.theta.maximizer(),
        "certification": certification_label(report.certification),
        "threshold": index_value(report.threshold),
        "cap": cap,
        "gamma": gamma,
        "bracket": bracket.map(|b| to_value(&b)),
    })))
}

pub fn threshold(q: f64, kind: ThresholdKind, cap: u64) -> Result<Map<String, Value>> {
    let res = find_threshold(q, kind, cap)?;
    let crossover = threshold_crossover(q, kind)?;
    Ok(object(json!({
        "q": q,
        "kind": to_value(&kind),
        "n": index_value(res.index),
        "cap": cap,
        "lhs_at_n": res.lhs_at_n,
        "rhs": res.rhs,
        "ln_lhs_at_n": res.ln_lhs_at_n,
        "ln_rhs": res.ln_rhs,
        "crossover": crossover,
    })))
}

pub fn verify_cy2n(
    params: &KernelParams,
    n: u64,
    y: Option<f64>,
    zero_tol: f64,
) -> Result<Map<String, Value>> {
    let sol = match y {
        Some(y) => build_fundamental_spline(params, n, y)?,
        None => build_at_maximizer(params, n)?,
    };
    let pattern = sign_pattern(&derivative_at_midpoints(&sol), zero_tol);
    Ok(object(json!({
        "q": params.q(),
        "beta": params.beta(),
        "n": n,
        "y": sol.y,
        "conforms": pattern.conforms,
        "epsilon": pattern.epsilon,
        "zero_tolerance": pattern.zero_tolerance,
        "signs": pattern.signs,
        "values": pattern.values,
        "interp_residual": sol.interp_residual,
        "sum_residual": sol.sum_residual,
        "condition_estimate": sol.condition_estimate,
        "min_pivot_ratio": sol.min_pivot_ratio,
    })))
}

/// Bounds that apply at `(q, n)`: `None` below the minimal index or when
/// the decay condition fails.
struct LemmaBounds {
    aggregate: f64,
    gamma4: f64,
}

fn lemma_bounds(q: f64, n: u64) -> Result<Option<LemmaBounds>> {
    if n < MIN_INDEX || !decay_condition_holds(q, n)? {
        return Ok(None);
    }
    Ok(Some(LemmaBounds {
        aggregate: lemma_bound(q, n)?,
        gamma4: gamma4_bound(q, n),
    }))
}

pub fn gamma_report(params: &KernelParams, n: u64, k: Option<u64>) -> Result<Map<String, Value>> {
    let ctx = GammaContext::at_maximizer(params, n)?;
    let q = params.q();
    let bounds = lemma_bounds(q, n)?;
    let heat_floor = heat_lower_bound(q)?;
    let ks: Vec<u64> = match k {
        Some(k) => vec![k],
        None => (1..=2 * n).collect(),
    };
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let g = ctx.gammas(k)?;
        rows.push(json!({
            "k": k,
            "gamma": g.gamma,
            "abs_sum": g.abs_sum(),
            "sum": g.sum(),
            "heat_kernel": ctx.heat_kernel_at(k)?,
            "positive": heat_floor + g.sum() >= 0.0,
            "lemma_holds": bounds.as_ref().map(|b| g.abs_sum() <= b.aggregate && g.gamma[3].abs() < b.gamma4),
        }));
    }
    let aux = ctx.aux();
    let deltas: Vec<Value> = aux
        .delta
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, d)| json!({"j": j, "delta": d, "bound": delta_bound(n, j as u64)}))
        .collect();
    Ok(object(json!({
        "q": q,
        "beta": params.beta(),
        "n": n,
        "s": ctx.s(),
        "y0": ctx.y0(),
        "heat_lower_bound": heat_floor,
        "lemma_bound": bounds.as_ref().map(|b| b.aggregate),
        "gamma4_bound": bounds.as_ref().map(|b| b.gamma4),
        "delta": deltas,
        "rows": rows,
    })))
}

pub fn cvd_check(q: f64, beta: f64) -> Result<Map<String, Value>> {
    let report = counterexample_report(q, beta)?;
    Ok(object(to_value(&report)))
}

/// Summary of the gamma breakdown over all `k`, for sweeps.
pub fn gamma_summary(params: &KernelParams, n: u64) -> Result<Map<String, Value>> {
    let ctx = GammaContext::at_maximizer(params, n)?;
    let q = params.q();
    let heat_floor = heat_lower_bound(q)?;
    let (mut max_abs_sum, mut max_gamma4, mut min_sum) = (0.0f64, 0.0f64, f64::INFINITY);
    for k in 1..=2 * n {
        let g = ctx.gammas(k)?;
        max_abs_sum = max_abs_sum.max(g.abs_sum());
        max_gamma4 = max_gamma4.max(g.gamma[3].abs());
        min_sum = min_sum.min(g.sum());
    }
    let aux = ctx.aux();
    let delta_ratio = (1..=isqrt(n).min(n - 1))
        .map(|j| aux.delta[j as usize].abs() / delta_bound(n, j))
        .fold(0.0f64, f64::max);
    let bounds = lemma_bounds(q, n)?;
    Ok(object(json!({
        "s": ctx.s(),
        "max_abs_gamma_sum": max_abs_sum,
        "lemma_bound": bounds.as_ref().map(|b| b.aggregate),
        "max_abs_gamma4": max_gamma4,
        "gamma4_bound": bounds.as_ref().map(|b| b.gamma4),
        "max_delta_ratio": delta_ratio,
        "lemma_holds": bounds.as_ref().map(|b| max_abs_sum <= b.aggregate && max_gamma4 < b.gamma4 && delta_ratio <= 1.0),
        "positivity_margin": heat_floor + min_sum,
    })))
}

pub fn cy2n_summary(params: &KernelParams, n: u64, zero_tol: f64) -> Result<Map<String, Value>> {
    let sol = build_at_maximizer(params, n)?;
    let pattern = sign_pattern(&derivative_at_midpoints(&sol), zero_tol);
    Ok(object(json!({
        "conforms": pattern.conforms,
        "epsilon": pattern.epsilon,
        "zeros": pattern.e.iter().filter(|e| **e == 0).count(),
        "interp_residual": sol.interp_residual,
        "condition_estimate": sol.condition_estimate,
    })))
}

pub fn width_summary(
    params: &KernelParams,
    n: u64,
    tol: f64,
    threshold: ThresholdIndex,
) -> Result<Map<String, Value>> {
    let best = best_approx(params, n, tol, &SeriesPolicy::default())?;
    let certification = match threshold {
        ThresholdIndex::Found(start) if n >= start => Certification::Certified,
        ThresholdIndex::NotFound { cap } if n > cap => Certification::Unknown { cap },
        _ => Certification::NotCertified,
    };
    let gamma = optional(asymptotic_gamma(params, n))?;
    let bracket = optional(bracket_check(params, n))?;
    Ok(object(json!({
        "value": best.factored.value(),
        "mantissa": best.factored.mantissa,
        "log_qn": best.factored.log_qn,
        "theta": best.theta.theta,
        "certification": certification_label(certification),
        "threshold": index_value(threshold),
        "gamma": gamma,
        "bracket_contained": bracket.map(|b| b.contained),
    })))
}

pub fn threshold_pair(q: f64, cap: u64) -> Result<Map<String, Value>> {
    let nq = find_threshold(q, ThresholdKind::Nq, cap)?.index;
    let nq_star = find_threshold(q, ThresholdKind::NqStar, cap)?.index;
    let cross = threshold_crossover(q, ThresholdKind::Nq)?;
    let cross_star = threshold_crossover(q, ThresholdKind::NqStar)?;
    let strict = match (nq.found(), nq_star.found()) {
        (Some(a), Some(b)) => Some(a > b),
        _ => None,
    };
    Ok(object(json!({
        "n_q": index_value(nq),
        "n_q_star": index_value(nq_star),
        "strict": strict,
        "crossover": cross,
        "crossover_star": cross_star,
    })))
}

pub fn threshold_for(params: &KernelParams, cap: u64) -> Result<ThresholdIndex> {
    n_q_beta(params.q(), params.beta(), cap)
}
