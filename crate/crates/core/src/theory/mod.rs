//! Large-market limits and bounds for the three policies, plus numerical
//! stationary solvers for the Markov chains that describe the greedy pool.
//!
//! All waiting times are in days, with `d` the mean sojourn.

mod chain;
mod ctmc;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub use chain::{bd_stationary, bd_stationary_adaptive, ml_chain, mu_chain, BirthDeathChain, Stationary, TAIL_LIMIT};
pub use ctmc::{ctmc_stationary_2d, greedy_ctmc, Ctmc2D, Ctmc2DStationary, HardArrivalFactor};

/// Limiting match rates and expected waiting times per type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Predictions {
    pub q_h: f64,
    pub q_e: f64,
    pub w_h: f64,
    pub w_e: f64,
    /// Rate of the limiting exponential law of H waiting times.
    pub dist_rate_h: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")))
    }
}

/// Greedy limits: `q = (1/(1+λ), 1)`, `w = (λd/(1+λ), 0)`, H waiting
/// times exponential with rate `(1+λ)/(λd)`.
pub fn greedy_limits(lambda: f64, d: f64) -> Result<Predictions> {
    positive("lambda", lambda)?;
    positive("d", d)?;
    Ok(Predictions {
        q_h: 1.0 / (1.0 + lambda),
        q_e: 1.0,
        w_h: lambda * d / (1.0 + lambda),
        w_e: 0.0,
        dist_rate_h: Some((1.0 + lambda) / (lambda * d)),
    })
}

/// Patient limits: same match rates as greedy, `w = (d, 0)`, H waiting
/// times exponential with rate `1/d`.
pub fn patient_limits(lambda: f64, d: f64) -> Result<Predictions> {
    positive("lambda", lambda)?;
    positive("d", d)?;
    Ok(Predictions { q_h: 1.0 / (1.0 + lambda), q_e: 1.0, w_h: d, w_e: 0.0, dist_rate_h: Some(1.0 / d) })
}

/// Batching with period `T`: upper bounds
/// `q_E = (1 − e^{−T/d})/(T/d)`, `q_H = q_E/(1+λ)` and lower bounds
/// `w = d(1 − q)` per type.
pub fn batching_bounds(lambda: f64, d: f64, period: f64) -> Result<Predictions> {
    non_negative("lambda", lambda)?;
    positive("d", d)?;
    positive("T", period)?;
    let x = period / d;
    let q_e = -(-x).exp_m1() / x;
    let q_h = q_e / (1.0 + lambda);
    Ok(Predictions { q_h, q_e, w_h: d * (1.0 - q_h), w_e: d * (1.0 - q_e), dist_rate_h: None })
}

/// Integral form of the batching lower bound on H waiting time,
/// `(γT(1+λ) + e^{−γT} − 1) / (γ²(1+λ)T)` with `γ = 1/d`.
pub fn batching_waiting_bound_integral(lambda: f64, d: f64, period: f64) -> Result<f64> {
    non_negative("lambda", lambda)?;
    positive("d", d)?;
    positive("T", period)?;
    let g = 1.0 / d;
    let gt = g * period;
    Ok((gt * (1.0 + lambda) + (-gt).exp_m1()) / (g * g * (1.0 + lambda) * period))
}

/// Bounds valid for every policy: `q_H ≤ 1/(1+λ)`, `w_H ≥ λd/(1+λ)`.
pub fn any_policy_upper_bound(lambda: f64, d: f64) -> Result<Predictions> {
    non_negative("lambda", lambda)?;
    positive("d", d)?;
    Ok(Predictions {
        q_h: 1.0 / (1.0 + lambda),
        q_e: 1.0,
        w_h: lambda * d / (1.0 + lambda),
        w_e: 0.0,
        dist_rate_h: None,
    })
}

/// Greedy loss-ratio bound `e^{−pλm/2} + e^{−λm}`. Values above 1 are
/// vacuous; see [`clamp_fraction`].
pub fn greedy_loss_ratio_bound(p: f64, lambda: f64, m: f64) -> Result<f64> {
    positive("p", p)?;
    positive("lambda", lambda)?;
    positive("m", m)?;
    Ok((-p * lambda * m / 2.0).exp() + (-lambda * m).exp())
}

pub fn clamp_fraction(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Limits when E agents are the majority (`λ ∈ [−1, 0)`): everyone is
/// matched and waiting times vanish under greedy matching.
///
/// Under patient matching H waiting vanishes too, but E agents still wait;
/// see [`patient_easy_waiting_small_lambda`].
pub fn small_lambda_limits(lambda: f64, d: f64) -> Result<Predictions> {
    if !(-1.0..0.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [-1, 0), got {lambda}")));
    }
    positive("d", d)?;
    Ok(Predictions { q_h: 1.0, q_e: 1.0, w_h: 0.0, w_e: 0.0, dist_rate_h: None })
}

/// Limiting mean E waiting time under patient matching for `λ ∈ [−1, 0)`.
///
/// With a vanishing H pool, E agents leave only through criticality: their
/// own (rate `L_E/d`, matching an H with probability `π`, else an E) or a
/// critical E's (rate `(1−π)L_E/d`), or a critical H's. Flow balance
/// `(1+λ)m = πL_E/d` and `m = (2−π)L_E/d` gives `L_E = md(1+λ/2)`.
pub fn patient_easy_waiting_small_lambda(lambda: f64, d: f64) -> Result<f64> {
    small_lambda_limits(lambda, d)?;
    Ok(d * (1.0 + lambda / 2.0))
}

/// Two candidate values for the mean waiting time of H agents that leave
/// unmatched under greedy: the memoryless value `λd/(1+λ)` and the
/// closed-form value `d(1 + λ − 1/(1+λ))`.
pub fn unmatched_hard_waiting_candidates(lambda: f64, d: f64) -> Result<(f64, f64)> {
    positive("lambda", lambda)?;
    positive("d", d)?;
    Ok((lambda * d / (1.0 + lambda), d * (1.0 + lambda - 1.0 / (1.0 + lambda))))
}

/// One row of the batching bound curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    #[serde(rename = "T")]
    pub period: f64,
    pub q_h_ub: f64,
    pub q_e_ub: f64,
    pub w_h_lb: f64,
    pub w_e_lb: f64,
    pub q_greedy: f64,
    pub w_greedy: f64,
    pub w_patient: f64,
}

pub const BOUND_CURVE_HEADER: [&str; 8] =
    ["T", "q_H_ub", "q_E_ub", "w_H_lb", "w_E_lb", "q_greedy", "w_greedy", "w_patient"];

/// Batching bounds with greedy and patient reference values per period.
pub fn bound_curves(lambda: f64, d: f64, periods: &[f64]) -> Result<Vec<BoundRow>> {
    let greedy = greedy_limits(lambda, d)?;
    let patient = patient_limits(lambda, d)?;
    periods
        .iter()
        .map(|&t| {
            let b = batching_bounds(lambda, d, t)?;
            Ok(BoundRow {
                period: t,
                q_h_ub: b.q_h,
                q_e_ub: b.q_e,
                w_h_lb: b.w_h,
                w_e_lb: b.w_e,
                q_greedy: greedy.q_h,
                w_greedy: greedy.w_h,
                w_patient: patient.w_h,
            })
        })
        .collect()
}

pub fn write_bound_curves_csv<W: Write>(rows: &[BoundRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUND_CURVE_HEADER)?;
    for r in rows {
        w.write_record(
            [r.period, r.q_h_ub, r.q_e_ub, r.w_h_lb, r.w_e_lb, r.q_greedy, r.w_greedy, r.w_patient]
                .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}
