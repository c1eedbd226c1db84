//! Exact two-dimensional chain of the greedy pool with finite capacity.
//!
//! State `(x, y)` holds `x` H agents and `y` E agents, `x + y ≤ C`. With
//! `M_x = (1−p)^x` and `N_y = (1−q)^y`, time measured in units of `d`:
//!
//! * `u`: `(x, y) → (x, y+1)` at `m·M_x·N_y`,
//! * `r`: `(x, y) → (x+1, y)` at `m(1+λ)·P_y`,
//! * `d`: `(x, y) → (x, y−1)` at `m·M_x(1−N_y) + m(1+λ)(1−P_y) + y`,
//! * `l`: `(x, y) → (x−1, y)` at `m(1−M_x) + x`,
//!
//! where `P_y` is the probability that an arriving H agent finds no
//! compatible E agent. Arrivals that would exceed `C` are turned away.

use serde::Serialize;

use crate::error::{Error, Result};

/// Which no-match probability an arriving H agent uses against `y` waiting
/// E agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HardArrivalFactor {
    /// `(1−p)^y`: each E agent is compatible with probability `p`.
    EasyHard,
    /// `(1−q)^y`, as the rates are printed in the source derivation.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc2D {
    pub m: f64,
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub capacity: usize,
    pub factor: HardArrivalFactor,
}

/// Outward rates of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub up: f64,
    pub right: f64,
    pub down: f64,
    pub left: f64,
}

/// Builds the greedy chain with the `(1−p)^y` H-arrival factor.
pub fn greedy_ctmc(m: f64, lambda: f64, p: f64, q: f64, capacity: usize) -> Result<Ctmc2D> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m must be positive, got {m}")));
    }
    if !(lambda >= -1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be at least -1, got {lambda}")));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} = {v} is not a probability")));
        }
    }
    if capacity == 0 {
        return Err(Error::InvalidParameter("capacity must be at least 1".into()));
    }
    Ok(Ctmc2D { m, lambda, p, q, capacity, factor: HardArrivalFactor::EasyHard })
}

impl Ctmc2D {
    pub fn n_states(&self) -> usize {
        let c = self.capacity;
        (c + 1) * (c + 2) / 2
    }

    /// Position of `(x, y)`; states are ordered by `x`, then `y`.
    pub fn index(&self, x: usize, y: usize) -> usize {
        let c = self.capacity;
        debug_assert!(x + y <= c);
        x * (c + 1) - x * x.saturating_sub(1) / 2 + y
    }

    pub fn rates(&self, x: usize, y: usize) -> Rates {
        let (m, h) = (self.m, self.m * (1.0 + self.lambda));
        let mx = (1.0 - self.p).powi(x as i32);
        let ny = (1.0 - self.q).powi(y as i32);
        let py = match self.factor {
            HardArrivalFactor::EasyHard => (1.0 - self.p).powi(y as i32),
            HardArrivalFactor::AsPrinted => ny,
        };
        let room = x + y < self.capacity;
        Rates {
            up: if room { m * mx * ny } else { 0.0 },
            right: if room { h * py } else { 0.0 },
            down: if y > 0 { m * mx * (1.0 - ny) + h * (1.0 - py) + y as f64 } else { 0.0 },
            left: if x > 0 { m * (1.0 - mx) + x as f64 } else { 0.0 },
        }
    }

    /// Nonzero off-diagonal entries `(to, rate)` leaving `(x, y)`.
    fn transitions(&self, x: usize, y: usize) -> impl Iterator<Item = (usize, f64)> {
        let r = self.rates(x, y);
        let mut out = [(0, 0.0); 4];
        let mut k = 0;
        if r.up > 0.0 {
            out[k] = (self.index(x, y + 1), r.up);
            k += 1;
        }
        if r.right > 0.0 {
            out[k] = (self.index(x + 1, y), r.right);
            k += 1;
        }
        if r.down > 0.0 {
            out[k] = (self.index(x, y - 1), r.down);
            k += 1;
        }
        if r.left > 0.0 {
            out[k] = (self.index(x - 1, y), r.left);
            k += 1;
        }
        out.into_iter().take(k)
    }

    fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let c = self.capacity;
        (0..=c).flat_map(move |x| (0..=c - x).map(move |y| (x, y)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc2DStationary {
    pub capacity: usize,
    /// Indexed by [`Ctmc2D::index`].
    pub probs: Vec<f64>,
    /// `‖πQ‖∞` of the returned distribution.
    pub residual: f64,
    pub mean_hard: f64,
    pub mean_easy: f64,
}

/// Banded matrix with equal lower and upper bandwidth `w`.
struct Band {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, w: usize) -> Self {
        Band { n, w, data: vec![0.0; n * (2 * w + 1)] }
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i.abs_diff(j) <= self.w);
        &mut self.data[i * (2 * self.w + 1) + j + self.w - i]
    }

    /// Gaussian elimination without pivoting; stable for column diagonally
    /// dominant matrices, whose fill stays inside the band.
    fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>> {
        let (n, w) = (self.n, self.w);
        for k in 0..n {
            let pivot = *self.at(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SolveFailure(format!("zero pivot at row {k}")));
            }
            for i in k + 1..(k + w + 1).min(n) {
                let f = *self.at(i, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..(k + w + 1).min(n) {
                    let v = *self.at(k, j);
                    *self.at(i, j) -= f * v;
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..(k + w + 1).min(n) {
                s -= *self.at(k, j) * x[j];
            }
            x[k] = s / *self.at(k, k);
        }
        Ok(x)
    }
}

/// Solves `πQ = 0`, `Σπ = 1` by fixing `π(0,0) = 1`, dropping its balance
/// equation, and solving the remaining banded system.
pub fn ctmc_stationary_2d(chain: &Ctmc2D) -> Result<Ctmc2DStationary> {
    let n = chain.n_states();
    let w = chain.capacity + 2;
    let mut a = Band::new(n - 1, w);
    let mut rhs = vec![0.0; n - 1];
    // Unknown i ↔ state i+1; equation j ↔ balance of state j+1:
    // Σ_i π_i Q_ij = 0, so column i carries row i of Q.
    for (x, y) in chain.states() {
        let i = chain.index(x, y);
        let mut out = 0.0;
        for (j, rate) in chain.transitions(x, y) {
            out += rate;
            if j == 0 {
                continue;
            }
            if i == 0 {
                rhs[j - 1] -= rate;
            } else {
                *a.at(j - 1, i - 1) += rate;
            }
        }
        if i > 0 {
            *a.at(i - 1, i - 1) -= out;
        }
    }
    let tail = a.solve(rhs)?;
    let mut probs = Vec::with_capacity(n);
    probs.push(1.0);
    probs.extend(tail);
    let total: f64 = probs.iter().sum();
    if !(total.is_finite() && total > 0.0) || probs.iter().any(|&p| p < -1e-12) {
        return Err(Error::SolveFailure("solution is not a distribution".into()));
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0) / total);

    let mut flow = vec![0.0; n];
    let (mut mean_hard, mut mean_easy) = (0.0, 0.0);
    for (x, y) in chain.states() {
        let i = chain.index(x, y);
        mean_hard += x as f64 * probs[i];
        mean_easy += y as f64 * probs[i];
        for (j, rate) in chain.transitions(x, y) {
            flow[j] += probs[i] * rate;
            flow[i] -= probs[i] * rate;
        }
    }
    let residual = flow.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    Ok(Ctmc2DStationary { capacity: chain.capacity, probs, residual, mean_hard, mean_easy })
}
