//! Certification inequalities and the threshold indices `n_q`, `n_q*`,
//! `n_{q,beta}`.
//!
//! Both left-hand sides decrease strictly in `n` while the right-hand side
//! depends on `q` only, so the smallest admissible `n >= 9` is found by
//! exponential bracketing followed by binary search. Every comparison is
//! made between logarithms, which keeps `q` close to 1 meaningful after the
//! right-hand side itself has underflowed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::check_q;
use crate::numeric::log_add_exp;

/// Smallest index the conditions are stated for.
pub const MIN_INDEX: u64 = 9;
/// Default upper limit of the threshold search.
pub const DEFAULT_CAP: u64 = 10_000_000;
/// Largest index searched exactly (integers above 2^53 are not all representable).
pub const MAX_EXACT_INDEX: u64 = 1 << 53;

/// Case-table thresholds below which every `n >= 1` is certified.
pub const Q_INTEGER_BETA: f64 = 0.2;
pub const Q_FRACTIONAL_BETA: f64 = 0.196881;

/// Above this `q` the decay condition is not automatic for `n >= 9`.
pub const Q_DECAY_AUTOMATIC: f64 = 91.0 / 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// Original condition, index `n_q`.
    Nq,
    /// Refined condition with the `min{...}` term, index `n_q*`.
    NqStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdIndex {
    Found(u64),
    NotFound { cap: u64 },
}

impl ThresholdIndex {
    pub fn found(&self) -> Option<u64> {
        match self {
            ThresholdIndex::Found(n) => Some(*n),
            ThresholdIndex::NotFound { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub q: f64,
    pub kind: ThresholdKind,
    pub index: ThresholdIndex,
    /// Left-hand side at the returned index (or at the cap when not found).
    pub lhs_at_n: f64,
    pub rhs: f64,
    pub ln_lhs_at_n: f64,
    pub ln_rhs: f64,
}

/// `ln` of `(1/2 + 2q/((1+q^2)(1-q))) ((1-q)/(1+q))^{4/(1-q^2)}`.
pub fn ln_rhs_condition(q: f64) -> Result<f64> {
    check_q(q)?;
    let lead = 0.5 + 2.0 * q / ((1.0 + q * q) * (1.0 - q));
    // ln((1-q)/(1+q)) = ln(1 - 2q/(1+q))
    let ln_ratio = (-2.0 * q / (1.0 + q)).ln_1p();
    Ok(lead.ln() + 4.0 / ((1.0 - q) * (1.0 + q)) * ln_ratio)
}

/// Right-hand side shared by both certification conditions; it is also the
/// lower bound of the heat-equation Poisson kernel.
pub fn rhs_condition(q: f64) -> Result<f64> {
    Ok(ln_rhs_condition(q)?.exp())
}

fn check_index(n: f64) -> Result<()> {
    if n >= MIN_INDEX as f64 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "the conditions need n >= 9, got {n}"
        )))
    }
}

fn ln_decay_term(q: f64, n: f64) -> f64 {
    (43.0 / (10.0 * (1.0 - q))).ln() + n.sqrt() * q.ln()
}

fn ln_shape(q: f64) -> f64 {
    q.ln() - 2.0 * (1.0 - q).ln()
}

// Logarithmic forms stay finite for n up to f64::MAX.
fn ln_original_coefficient(n: f64) -> f64 {
    (160.0f64 / 57.0).ln() - n.ln() - (-1.0 / n.sqrt()).ln_1p()
}

fn ln_refined_coefficient(n: f64) -> f64 {
    (8.0f64 / 3.0).ln() - n.ln() - (-7.0 / (3.0 * n.sqrt())).ln_1p()
}

fn ln_lhs(q: f64, n: f64, kind: ThresholdKind) -> f64 {
    let ln_coef = match kind {
        ThresholdKind::Nq => ln_original_coefficient(n),
        ThresholdKind::NqStar => ln_original_coefficient(n).min(ln_refined_coefficient(n)),
    };
    log_add_exp(ln_decay_term(q, n), ln_coef + ln_shape(q))
}

/// `(43/(10(1-q))) q^{sqrt n} + (160/(57(n - sqrt n))) q/(1-q)^2`.
pub fn lhs_original(q: f64, n: u64) -> Result<f64> {
    check_q(q)?;
    check_index(n as f64)?;
    Ok(ln_lhs(q, n as f64, ThresholdKind::Nq).exp())
}

/// Same as [`lhs_original`] with the coefficient replaced by
/// `min{160/(57(n - sqrt n)), 8/(3n - 7 sqrt n)}`.
pub fn lhs_refined(q: f64, n: u64) -> Result<f64> {
    check_q(q)?;
    check_index(n as f64)?;
    Ok(ln_lhs(q, n as f64, ThresholdKind::NqStar).exp())
}

/// Real `n` above which `8/(3n - 7 sqrt n) < 160/(57(n - sqrt n))`.
///
/// The equality is linear in `sqrt n`: `24 n = 664 sqrt n`.
pub fn branch_crossover() -> f64 {
    (664.0_f64 / 24.0).powi(2)
}

fn holds(q: f64, n: f64, kind: ThresholdKind, ln_rhs: f64) -> bool {
    ln_lhs(q, n, kind) <= ln_rhs
}

/// Whether the certification condition of `kind` holds at `(q, n)`.
pub fn condition_holds(q: f64, n: u64, kind: ThresholdKind) -> Result<bool> {
    check_q(q)?;
    check_index(n as f64)?;
    Ok(holds(q, n as f64, kind, ln_rhs_condition(q)?))
}

/// Smallest `n >= 9` satisfying the condition of `kind`, searched up to `cap`.
pub fn find_threshold(q: f64, kind: ThresholdKind, cap: u64) -> Result<ThresholdResult> {
    check_q(q)?;
    if cap < MIN_INDEX {
        return Err(Error::domain(format!("cap must be at least 9, got {cap}")));
    }
    let cap = cap.min(MAX_EXACT_INDEX);
    let ln_rhs = ln_rhs_condition(q)?;
    let ok = |n: u64| holds(q, n as f64, kind, ln_rhs);
    let result = |index: ThresholdIndex, at: u64| {
        let ln_l = ln_lhs(q, at as f64, kind);
        ThresholdResult {
            q,
            kind,
            index,
            lhs_at_n: ln_l.exp(),
            rhs: ln_rhs.exp(),
            ln_lhs_at_n: ln_l,
            ln_rhs,
        }
    };

    if ok(MIN_INDEX) {
        return Ok(result(ThresholdIndex::Found(MIN_INDEX), MIN_INDEX));
    }
    // invariant: condition fails at lo, holds at hi
    let mut lo = MIN_INDEX;
    let mut hi = loop {
        let next = lo.saturating_mul(2).min(cap);
        if ok(next) {
            break next;
        }
        if next == cap {
            return Ok(result(ThresholdIndex::NotFound { cap }, cap));
        }
        lo = next;
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(result(ThresholdIndex::Found(hi), hi))
}

/// Real crossover `nu >= 9` with `lhs(nu) = rhs`, for magnitude estimates of
/// thresholds far beyond any integer search cap. `None` if the crossover
/// exceeds `f64::MAX`. The integer threshold equals `ceil(nu)` (or 9).
pub fn threshold_crossover(q: f64, kind: ThresholdKind) -> Result<Option<f64>> {
    check_q(q)?;
    let ln_rhs = ln_rhs_condition(q)?;
    let lo0 = MIN_INDEX as f64;
    if holds(q, lo0, kind, ln_rhs) {
        return Ok(Some(lo0));
    }
    let (mut lo, mut hi) = (lo0, 2.0 * lo0);
    while !holds(q, hi, kind, ln_rhs) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(None);
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-9 * lo.max(1.0) {
            break;
        }
        if holds(q, mid, kind, ln_rhs) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Index from which the width identities are certified:
/// 1 inside the classical region, `n_q*` otherwise.
pub fn n_q_beta(q: f64, beta: f64, cap: u64) -> Result<ThresholdIndex> {
    check_q(q)?;
    if !beta.is_finite() {
        return Err(Error::domain("beta must be finite"));
    }
    let integral = beta == beta.round();
    if (integral && q <= Q_INTEGER_BETA) || (!integral && q <= Q_FRACTIONAL_BETA) {
        return Ok(ThresholdIndex::Found(1));
    }
    Ok(find_threshold(q, ThresholdKind::NqStar, cap)?.index)
}

/// `q^n/(1 - q^{2n}) <= 7 q^{sqrt n} / (37 n^2)`, compared in logarithms.
pub fn decay_condition_holds(q: f64, n: u64) -> Result<bool> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let lnq = q.ln();
    let lhs = nf * lnq - (-(2.0 * nf * lnq).exp()).ln_1p();
    let rhs = (7.0f64 / 37.0).ln() + nf.sqrt() * lnq - 2.0 * nf.ln();
    Ok(lhs <= rhs)
}

/// `n > (8q/(3(1-q)^2)) ((1+q)/(1-q))^3`.
pub fn first_index_condition(q: f64, n: u64) -> bool {
    let r = (1.0 + q) / (1.0 - q);
    n as f64 > 8.0 * q / (3.0 * (1.0 - q).powi(2)) * r.powi(3)
}

/// `n > (9(1+q)/(4(1-q)))^2`.
pub fn second_index_condition(q: f64, n: u64) -> bool {
    n as f64 > (9.0 * (1.0 + q) / (4.0 * (1.0 - q))).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    /// refined condition => first index condition
    RefinedToFirst,
    /// second index condition => decay condition
    SecondToDecay,
    /// first index condition => second index condition (q > 91/250)
    FirstToSecond,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationReport {
    pub q: f64,
    pub n: u64,
    pub refined: bool,
    pub decay: bool,
    pub first_index: bool,
    pub second_index: bool,
    pub violations: Vec<Implication>,
}

/// Evaluate the four predicates of the implication chain at `(q, n)` and
/// list every observed violation.
pub fn implication_suite(q: f64, n: u64) -> Result<ImplicationReport> {
    let refined = condition_holds(q, n, ThresholdKind::NqStar)?;
    let decay = decay_condition_holds(q, n)?;
    let first_index = first_index_condition(q, n);
    let second_index = second_index_condition(q, n);
    let mut violations = Vec::new();
    if refined && !first_index {
        violations.push(Implication::RefinedToFirst);
    }
    if second_index && !decay {
        violations.push(Implication::SecondToDecay);
    }
    if q > Q_DECAY_AUTOMATIC && first_index && !second_index {
        violations.push(Implication::FirstToSecond);
    }
    Ok(ImplicationReport {
        q,
        n,
        refined,
        decay,
        first_index,
        second_index,
        violations,
    })
}
