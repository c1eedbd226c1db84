//! Birth-death chains on a truncated integer range.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest tolerated probability mass beyond the truncation.
pub const TAIL_LIMIT: f64 = 1e-9;

type Rate = Arc<dyn Fn(i64) -> f64 + Send + Sync>;

/// Chain on `lo..=hi` moving `x → x−1` at rate `l(x)` and `x → x+1` at
/// rate `r(x)`. Rates outside the range are used only to estimate the mass
/// the truncation cuts off.
#[derive(Clone)]
pub struct BirthDeathChain {
    pub lo: i64,
    pub hi: i64,
    /// Natural lower end: the chain never goes below `lo`.
    pub floor: Option<i64>,
    left: Rate,
    right: Rate,
}

impl fmt::Debug for BirthDeathChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BirthDeathChain").field("lo", &self.lo).field("hi", &self.hi).finish_non_exhaustive()
    }
}

impl BirthDeathChain {
    pub fn new(
        lo: i64,
        hi: i64,
        left: impl Fn(i64) -> f64 + Send + Sync + 'static,
        right: impl Fn(i64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
        }
        Ok(BirthDeathChain { lo, hi, floor: None, left: Arc::new(left), right: Arc::new(right) })
    }

    pub fn l(&self, x: i64) -> f64 {
        (self.left)(x)
    }

    pub fn r(&self, x: i64) -> f64 {
        (self.right)(x)
    }

    /// Same rates on a range widened by `factor` around its midpoint,
    /// never crossing the natural floor.
    pub fn widened(&self, factor: f64) -> Self {
        let mid = (self.lo + self.hi) as f64 / 2.0;
        let half = ((self.hi - self.lo) as f64 / 2.0 * factor).ceil().max(1.0);
        let mut out = self.clone();
        out.lo = (mid - half).floor() as i64;
        out.hi = (mid + half).ceil() as i64;
        if let Some(f) = self.floor {
            out.lo = out.lo.max(f);
        }
        out
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn margin(m: f64) -> i64 {
    (10.0 * (m * m.ln().max(1.0)).sqrt()).ceil() as i64
}

/// Upper bounding chain for the H pool under greedy:
/// `l_x = m(1 − (1−p)^x) + x`, `r_x = (1+λ)m`, on `x ≥ 0`.
pub fn mu_chain(m: f64, lambda: f64, p: f64) -> Result<BirthDeathChain> {
    check_positive("m", m)?;
    check_positive("lambda", lambda)?;
    check_positive("p", p)?;
    if p > 1.0 {
        return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
    }
    let hi = (lambda * m).ceil() as i64 + margin(m);
    let log_miss = (1.0 - p).ln();
    let mut chain = BirthDeathChain::new(
        0,
        hi,
        move |x| if x <= 0 { 0.0 } else { -m * (log_miss * x as f64).exp_m1() + x as f64 },
        move |_| (1.0 + lambda) * m,
    )?;
    chain.floor = Some(0);
    Ok(chain)
}

/// Lower bounding chain: `l_x = m + max(x, 0)`, `r_x = (1+λ)m` on integers
/// around `0 ..= λm`.
pub fn ml_chain(m: f64, lambda: f64) -> Result<BirthDeathChain> {
    check_positive("m", m)?;
    check_positive("lambda", lambda)?;
    let w = margin(m);
    BirthDeathChain::new(-w, (lambda * m).ceil() as i64 + w, move |x| m + x.max(0) as f64, move |_| (1.0 + lambda) * m)
}

/// Stationary law of a truncated birth-death chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub lo: i64,
    pub probs: Vec<f64>,
    /// Estimated mass beyond the truncation, from geometric tails.
    pub tail_mass: f64,
}

impl Stationary {
    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn prob(&self, x: i64) -> f64 {
        if x < self.lo || x > self.hi() {
            0.0
        } else {
            self.probs[(x - self.lo) as usize]
        }
    }

    pub fn states(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.lo + i as i64, p))
    }

    pub fn mean(&self) -> f64 {
        self.states().map(|(x, p)| x as f64 * p).sum()
    }

    /// Mass of states with `|x − center| > radius`.
    pub fn mass_outside(&self, center: f64, radius: f64) -> f64 {
        self.states().filter(|&(x, _)| (x as f64 - center).abs() > radius).map(|(_, p)| p).sum()
    }
}

/// Geometric-tail mass beyond a boundary state with probability `edge` and
/// outward ratio `ratio`; infinite when the tail does not decay.
fn tail(edge: f64, ratio: f64) -> f64 {
    if edge == 0.0 || ratio <= 0.0 {
        0.0
    } else if ratio >= 1.0 {
        f64::INFINITY
    } else {
        edge * ratio / (1.0 - ratio)
    }
}

/// Solves detailed balance `π_{x+1}/π_x = r_x / l_{x+1}` in log space.
pub fn bd_stationary(chain: &BirthDeathChain) -> Result<Stationary> {
    let n = (chain.hi - chain.lo + 1) as usize;
    let mut logp = Vec::with_capacity(n);
    logp.push(0.0);
    for k in 1..n {
        let x = chain.lo + k as i64;
        let (r, l) = (chain.r(x - 1), chain.l(x));
        if !(r >= 0.0 && l >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative or undefined rate near state {x}")));
        }
        if l == 0.0 {
            return Err(Error::InvalidParameter(format!("chain is not irreducible: l({x}) = 0")));
        }
        logp.push(logp[k - 1] + r.ln() - l.ln());
    }
    let top = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logp.iter().map(|&v| (v - top).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    let ratio = |out: f64, back: f64| if out == 0.0 { 0.0 } else { out / back };
    let upper = tail(probs[n - 1], ratio(chain.r(chain.hi), chain.l(chain.hi + 1)));
    let lower = match chain.floor {
        Some(f) if f >= chain.lo => 0.0,
        _ => tail(probs[0], ratio(chain.l(chain.lo), chain.r(chain.lo - 1))),
    };
    let tail_mass = upper + lower;
    if !(tail_mass <= TAIL_LIMIT) {
        return Err(Error::TruncationTooTight { mass: tail_mass, limit: TAIL_LIMIT });
    }
    Ok(Stationary { lo: chain.lo, probs, tail_mass })
}

/// [`bd_stationary`], doubling the range up to `max_rounds` times while the
/// truncation is too tight.
pub fn bd_stationary_adaptive(chain: &BirthDeathChain, max_rounds: usize) -> Result<Stationary> {
    let mut current = chain.clone();
    let mut last = None;
    for _ in 0..=max_rounds {
        match bd_stationary(&current) {
            Err(e @ Error::TruncationTooTight { .. }) => {
                last = Some(e);
                current = current.widened(2.0);
            }
            other => return other,
        }
    }
    Err(last.expect("at least one round"))
}
