//! Cartesian-product sweeps over `(q, beta, n)`, evaluated in parallel with
//! rows kept in grid order.

use std::collections::HashMap;

use poisson_widths::skspline::DEFAULT_ZERO_TOL;
use poisson_widths::thresholds::ThresholdIndex;
use poisson_widths::{KernelParams, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::commands;
use crate::output::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Width,
    Theta,
    Threshold,
    Gamma,
    Cy2n,
}

impl SweepKind {
    fn value_columns(self) -> &'static [&'static str] {
        match self {
            SweepKind::Width => &[
                "value",
                "mantissa",
                "log_qn",
                "theta",
                "certification",
                "threshold",
                "gamma",
                "bracket_contained",
            ],
            SweepKind::Theta => &["theta", "maximizer", "scaled_residual", "bracket_width"],
            SweepKind::Threshold => &["n_q", "n_q_star", "strict", "crossover", "crossover_star"],
            SweepKind::Gamma => &[
                "s",
                "max_abs_gamma_sum",
                "lemma_bound",
                "max_abs_gamma4",
                "gamma4_bound",
                "max_delta_ratio",
                "lemma_holds",
                "positivity_margin",
            ],
            SweepKind::Cy2n => &[
                "conforms",
                "epsilon",
                "zeros",
                "interp_residual",
                "condition_estimate",
            ],
        }
    }

    fn name(self) -> &'static str {
        match self {
            SweepKind::Width => "width",
            SweepKind::Theta => "theta",
            SweepKind::Threshold => "threshold",
            SweepKind::Gamma => "gamma",
            SweepKind::Cy2n => "cy2n",
        }
    }
}

pub struct SweepConfig {
    pub kind: SweepKind,
    pub qs: Vec<f64>,
    pub betas: Vec<f64>,
    pub ns: Vec<u64>,
    pub tol: f64,
    pub cap: u64,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    q: f64,
    beta: f64,
    n: u64,
}

fn points(config: &SweepConfig) -> Vec<Point> {
    if config.kind == SweepKind::Threshold {
        return config
            .qs
            .iter()
            .map(|&q| Point { q, beta: 0.0, n: 0 })
            .collect();
    }
    let mut out = Vec::with_capacity(config.qs.len() * config.betas.len() * config.ns.len());
    for &q in &config.qs {
        for &beta in &config.betas {
            for &n in &config.ns {
                out.push(Point { q, beta, n });
            }
        }
    }
    out
}

fn key(q: f64, beta: f64) -> (u64, u64) {
    (q.to_bits(), beta.to_bits())
}

fn evaluate(
    config: &SweepConfig,
    p: Point,
    thresholds: &HashMap<(u64, u64), Result<ThresholdIndex>>,
) -> Result<Map<String, Value>> {
    if config.kind == SweepKind::Threshold {
        return commands::threshold_pair(p.q, config.cap);
    }
    let params = KernelParams::new(p.q, p.beta)?;
    match config.kind {
        SweepKind::Width => {
            let threshold = thresholds[&key(p.q, p.beta)].clone()?;
            commands::width_summary(&params, p.n, config.tol, threshold)
        }
        SweepKind::Theta => {
            let mut fields = commands::theta(&params, p.n, config.tol)?;
            fields.retain(|k, _| SweepKind::Theta.value_columns().contains(&k.as_str()));
            Ok(fields)
        }
        SweepKind::Gamma => commands::gamma_summary(&params, p.n),
        SweepKind::Cy2n => commands::cy2n_summary(&params, p.n, DEFAULT_ZERO_TOL),
        SweepKind::Threshold => unreachable!(),
    }
}

pub fn run(config: &SweepConfig) -> Report {
    let grid = points(config);
    let thresholds: HashMap<(u64, u64), Result<ThresholdIndex>> = if config.kind == SweepKind::Width
    {
        let mut pairs: Vec<(f64, f64)> = grid.iter().map(|p| (p.q, p.beta)).collect();
        pairs.dedup();
        pairs
            .par_iter()
            .map(|&(q, beta)| {
                let index = KernelParams::new(q, beta)
                    .and_then(|params| commands::threshold_for(&params, config.cap));
                (key(q, beta), index)
            })
            .collect()
    } else {
        HashMap::new()
    };

    let rows: Vec<Map<String, Value>> = grid
        .par_iter()
        .map(|&p| {
            let mut row = Map::new();
            row.insert("q".into(), p.q.into());
            if config.kind != SweepKind::Threshold {
                row.insert("beta".into(), p.beta.into());
                row.insert("n".into(), p.n.into());
            }
            match evaluate(config, p, &thresholds) {
                Ok(fields) => {
                    row.extend(fields);
                    row.insert("status".into(), "ok".into());
                    row.insert("error".into(), Value::Null);
                }
                Err(e) => {
                    row.insert("status".into(), e.code().into());
                    row.insert("error".into(), e.to_string().into());
                }
            }
            row
        })
        .collect();

    let mut columns: Vec<&'static str> = vec!["q"];
    if config.kind != SweepKind::Threshold {
        columns.extend(["beta", "n"]);
    }
    columns.extend(config.kind.value_columns());
    columns.extend(["status", "error"]);

    let failed = rows.iter().filter(|r| r["status"] != "ok").count();
    let meta = json!({
        "kind": config.kind.name(),
        "points": rows.len(),
        "failed": failed,
        "tol": config.tol,
        "cap": config.cap,
    });
    Report::Table {
        command: "sweep",
        meta: commands::object(meta),
        columns,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: SweepKind) -> SweepConfig {
        SweepConfig {
            kind,
            qs: vec![0.1, 0.2],
            betas: vec![0.0, 1.0],
            ns: vec![1, 2, 3],
            tol: 1e-12,
            cap: 10_000_000,
        }
    }

    #[test]
    fn rows_follow_grid_order() {
        let Report::Table { rows, .. } = run(&config(SweepKind::Theta)) else {
            panic!("expected a table")
        };
        assert_eq!(rows.len(), 12);
        let order: Vec<(f64, f64, u64)> = rows
            .iter()
            .map(|r| {
                (
                    r["q"].as_f64().unwrap(),
                    r["beta"].as_f64().unwrap(),
                    r["n"].as_u64().unwrap(),
                )
            })
            .collect();
        let expected: Vec<(f64, f64, u64)> = points(&config(SweepKind::Theta))
            .iter()
            .map(|p| (p.q, p.beta, p.n))
            .collect();
        assert_eq!(order, expected);
        assert!(rows.iter().all(|r| r["status"] == "ok"));
    }

    #[test]
    fn threshold_sweep_ignores_beta_and_n() {
        let Report::Table { rows, columns, .. } = run(&config(SweepKind::Threshold)) else {
            panic!("expected a table")
        };
        assert_eq!(rows.len(), 2);
        assert!(!columns.contains(&"beta"));
    }

    #[test]
    fn out_of_envelope_rows_are_marked() {
        let cfg = SweepConfig {
            kind: SweepKind::Gamma,
            qs: vec![0.1],
            betas: vec![0.0],
            ns: vec![4, 100],
            tol: 1e-12,
            cap: 10,
        };
        let Report::Table { rows, .. } = run(&cfg) else {
            panic!("expected a table")
        };
        assert_eq!(rows[0]["status"], "ok");
        assert_eq!(rows[1]["status"], "range_unsupported");
        assert!(rows[1]["error"].is_string());
    }
}
