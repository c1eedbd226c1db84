//! Non-simulation commands: bound curves, static pools and chain solves.

use std::io::Write;

use dynmatch::compat::{fwp, sample_static_pool, sequential_greedy_match, smm, CompatModel};
use dynmatch::theory::{
    bd_stationary_adaptive, bound_curves, ctmc_stationary_2d, greedy_ctmc, ml_chain, mu_chain, write_bound_curves_csv,
    HardArrivalFactor,
};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// `points` periods evenly spaced on `[t_min, t_max]`.
pub fn period_grid(t_min: f64, t_max: f64, points: usize) -> CliResult<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min) || points == 0 {
        return Err(CliError::Config(format!("invalid period range [{t_min}, {t_max}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![t_min]);
    }
    let step = (t_max - t_min) / (points - 1) as f64;
    Ok((0..points).map(|i| t_min + step * i as f64).collect())
}

pub fn bounds<W: Write>(lambda: f64, d: f64, periods: &[f64], out: W) -> CliResult<()> {
    let rows = bound_curves(lambda, d, periods).map_err(|e| CliError::Config(e.to_string()))?;
    write_bound_curves_csv(&rows, out)?;
    Ok(())
}

pub const STATIC_HEADER: [&str; 5] = ["seed", "n", "smm", "fwp", "greedy_fraction"];

/// One static pool per seed: maximum-matching fraction, isolated fraction
/// and the fraction covered by sequential greedy in vertex order.
pub fn static_pools<W: Write>(m: usize, lambda: f64, model: &CompatModel, seeds: &[u64], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATIC_HEADER)?;
    for &seed in seeds {
        let g = sample_static_pool(m, lambda, model, seed)?;
        let order: Vec<usize> = (0..g.n()).collect();
        let greedy = sequential_greedy_match(&g, &order)?;
        w.write_record([
            seed.to_string(),
            g.n().to_string(),
            smm(&g)?.to_string(),
            fwp(&g)?.to_string(),
            (greedy.matched_vertices() as f64 / g.n() as f64).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundingChain {
    Upper,
    Lower,
}

/// Stationary law of a bounding chain; writes `x,pi` rows and returns a
/// JSON summary.
pub fn birth_death<W: Write>(
    kind: BoundingChain,
    m: f64,
    lambda: f64,
    p: Option<f64>,
    out: Option<W>,
) -> CliResult<Value> {
    let chain = match kind {
        BoundingChain::Upper => {
            let p = p.ok_or_else(|| CliError::Config("the upper chain needs --p".into()))?;
            mu_chain(m, lambda, p)?
        }
        BoundingChain::Lower => ml_chain(m, lambda)?,
    };
    let s = bd_stationary_adaptive(&chain, 10)?;
    if let Some(out) = out {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "pi"])?;
        for (x, p) in s.states() {
            w.write_record([x.to_string(), p.to_string()])?;
        }
        w.flush()?;
    }
    Ok(json!({ "lo": s.lo, "hi": s.hi(), "mean": s.mean(), "tail_mass": s.tail_mass }))
}

/// Stationary law of the greedy two-dimensional chain; writes `x,y,pi`
/// rows and returns a JSON summary.
pub fn ctmc<W: Write>(
    m: f64,
    lambda: f64,
    p: f64,
    q: f64,
    capacity: usize,
    factor: HardArrivalFactor,
    out: Option<W>,
) -> CliResult<Value> {
    let mut chain = greedy_ctmc(m, lambda, p, q, capacity)?;
    chain.factor = factor;
    let s = ctmc_stationary_2d(&chain)?;
    if let Some(out) = out {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "pi"])?;
        for x in 0..=capacity {
            for y in 0..=capacity - x {
                w.write_record([x.to_string(), y.to_string(), s.probs[chain.index(x, y)].to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(json!({ "mean_hard": s.mean_hard, "mean_easy": s.mean_easy, "residual": s.residual, "states": s.probs.len() }))
}
