//! Fixed suite of published values, each reported as PASS or FAIL.

use std::f64::consts::PI;

use poisson_widths::cvd::{counterexample_report, published_bounds};
use poisson_widths::rootfind::solve_theta;
use poisson_widths::thresholds::{
    find_threshold, n_q_beta, ThresholdIndex, ThresholdKind, DEFAULT_CAP,
};
use poisson_widths::widths::{asymptotic_gamma, bracket_check, width_report, MAX_LOG_SCALE};
use poisson_widths::{Error, KernelParams, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::commands::object;
use crate::output::Report;

/// Trivial-root tolerance.
const THETA_TOL: f64 = 1e-12;
/// Consecutive indices sampled from `n_{q,beta}` upward.
const ASYMPTOTIC_SPAN: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Published,
    Trivial,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub id: String,
    pub source: Source,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Check {
    fn new(
        id: impl Into<String>,
        source: Source,
        expected: impl Into<String>,
        observed: impl Into<String>,
        pass: bool,
    ) -> Check {
        Check {
            id: id.into(),
            source,
            expected: expected.into(),
            observed: observed.into(),
            pass,
        }
    }

    fn to_row(&self) -> Map<String, Value> {
        object(json!({
            "id": self.id,
            "source": match self.source {
                Source::Published => "published",
                Source::Trivial => "trivial",
            },
            "expected": self.expected,
            "observed": self.observed,
            "result": if self.pass { "PASS" } else { "FAIL" },
        }))
    }
}

fn describe_index(index: ThresholdIndex) -> String {
    match index {
        ThresholdIndex::Found(n) => n.to_string(),
        ThresholdIndex::NotFound { cap } => format!("not found up to {cap}"),
    }
}

fn thresholds_at_half() -> Result<Vec<Check>> {
    let nq = find_threshold(0.5, ThresholdKind::Nq, DEFAULT_CAP)?.index;
    let nq_star = find_threshold(0.5, ThresholdKind::NqStar, DEFAULT_CAP)?.index;
    Ok(vec![
        Check::new(
            "n_q(0.5)",
            Source::Published,
            "969",
            describe_index(nq),
            nq.found() == Some(969),
        ),
        Check::new(
            "n_q*(0.5)",
            Source::Published,
            "963",
            describe_index(nq_star),
            nq_star.found() == Some(963),
        ),
    ])
}

fn case_table() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (q, beta, n, expected) in [
        (0.15, 0.0, 1, true),
        (0.5, 0.0, 963, true),
        (0.5, 0.0, 962, false),
        (0.197, 0.5, 1, false),
    ] {
        let certified = width_report(&KernelParams::new(q, beta)?, n)?.certified();
        checks.push(Check::new(
            format!("certified(q={q}, beta={beta}, n={n})"),
            Source::Published,
            expected.to_string(),
            certified.map_or("unknown".to_string(), |c| c.to_string()),
            certified == Some(expected),
        ));
    }
    let integer = n_q_beta(0.2, 3.0, DEFAULT_CAP)?;
    checks.push(Check::new(
        "n_{q,beta}(0.2, 3)",
        Source::Published,
        "1",
        describe_index(integer),
        integer.found() == Some(1),
    ));
    let fractional = n_q_beta(0.2, 0.5, DEFAULT_CAP)?;
    let star = find_threshold(0.2, ThresholdKind::NqStar, DEFAULT_CAP)?.index;
    checks.push(Check::new(
        "n_{q,beta}(0.2, 0.5)",
        Source::Published,
        format!("n_q*(0.2) = {}", describe_index(star)),
        describe_index(fractional),
        fractional == star,
    ));
    Ok(checks)
}

fn determinants() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for beta in [0.0, 1.0] {
        let report = counterexample_report(0.21, beta)?;
        let (first_bound, second_bound) =
            published_bounds(beta).ok_or_else(|| Error::Domain("no published bounds".into()))?;
        checks.push(Check::new(
            format!("D3 first (beta={beta})"),
            Source::Published,
            format!("< {first_bound:e}"),
            format!(
                "{:e} (error bound {:e})",
                report.first.value, report.first.error_bound
            ),
            report.first.value < first_bound && report.first.certain_sign().is_some(),
        ));
        checks.push(Check::new(
            format!("D3 second (beta={beta})"),
            Source::Published,
            format!("> {second_bound:e}"),
            format!(
                "{:e} (error bound {:e})",
                report.second.value, report.second.error_bound
            ),
            report.second.value > second_bound && report.second.certain_sign().is_some(),
        ));
        checks.push(Check::new(
            format!("D3 opposite signs (beta={beta})"),
            Source::Published,
            "true",
            report.not_cvd.to_string(),
            report.not_cvd,
        ));
    }
    Ok(checks)
}

fn trivial_roots() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (beta, expected) in [(0.0, 0.5), (1.0, 0.0)] {
        let deviations = (1..=9)
            .flat_map(|i| (1..=32u64).map(move |n| (i as f64 / 10.0, n)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(q, n)| {
                Ok(
                    (solve_theta(&KernelParams::new(q, beta)?, n, THETA_TOL)?.theta - expected)
                        .abs(),
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        let worst = deviations.iter().fold(0.0f64, |m, d| m.max(*d));
        checks.push(Check::new(
            format!("theta(beta={beta}) = {expected}"),
            Source::Trivial,
            format!("|deviation| <= {THETA_TOL:e}"),
            format!("max {worst:e} over {} points", deviations.len()),
            worst <= THETA_TOL,
        ));
    }
    Ok(checks)
}

/// `(|gamma_n|, bracket contained)` for every sampled point past the threshold.
fn asymptotic_samples() -> Result<Vec<(f64, bool)>> {
    let mut grid = Vec::new();
    for q in [0.1, 0.15, 0.19, 0.3, 0.5] {
        for beta in [0.0, 0.5, 1.0, 1.7] {
            if let ThresholdIndex::Found(start) = n_q_beta(q, beta, DEFAULT_CAP)? {
                let params = KernelParams::new(q, beta)?;
                grid.extend(
                    (start..start + ASYMPTOTIC_SPAN)
                        .filter(|&n| params.log_scale(n) < MAX_LOG_SCALE)
                        .map(|n| (params, n)),
                );
            }
        }
    }
    grid.par_iter()
        .map(|(params, n)| {
            Ok((
                asymptotic_gamma(params, *n)?.abs(),
                bracket_check(params, *n)?.contained,
            ))
        })
        .collect()
}

fn asymptotics() -> Result<Vec<Check>> {
    let samples = asymptotic_samples()?;
    let limit = 16.0 / (3.0 * PI);
    let worst = samples.iter().fold(0.0f64, |m, s| m.max(s.0));
    let outside = samples.iter().filter(|s| !s.1).count();
    Ok(vec![
        Check::new(
            "|gamma_n| <= 16/(3 pi)",
            Source::Published,
            format!("<= {limit}"),
            format!("max {worst} over {} points", samples.len()),
            !samples.is_empty() && worst <= limit,
        ),
        Check::new(
            "two-sided bracket",
            Source::Published,
            "contains (pi/4) * width",
            format!("{outside} of {} outside", samples.len()),
            !samples.is_empty() && outside == 0,
        ),
    ])
}

pub fn run() -> Result<(Report, bool)> {
    let mut checks = thresholds_at_half()?;
    checks.extend(case_table()?);
    checks.extend(determinants()?);
    checks.extend(trivial_roots()?);
    checks.extend(asymptotics()?);
    let passed = checks.iter().filter(|c| c.pass).count();
    let all_pass = passed == checks.len();
    let meta = object(json!({
        "passed": passed,
        "failed": checks.len() - passed,
        "all_pass": all_pass,
    }));
    let report = Report::Table {
        command: "reproduce-paper",
        meta,
        columns: vec!["id", "source", "expected", "observed", "result"],
        rows: checks.iter().map(Check::to_row).collect(),
    };
    Ok((report, all_pass))
}
