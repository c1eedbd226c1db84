//! Exact discrete-event simulation of the dynamic market.
//!
//! E agents arrive as a Poisson process with rate `m`, H agents with rate
//! `(1+λ)m`. Each agent draws an exponential criticality clock with mean `d`
//! on arrival. The policy decides when matches are attempted:
//!
//! * greedy: on arrival,
//! * patient: at the agent's own criticality,
//! * batching: at ticks `T, 2T, ...`; agents that become critical between
//!   ticks leave unmatched.
//!
//! Arrivals continue past `horizon_arrivals` until every one of the first
//! `horizon_arrivals` agents has left, so their outcomes are not truncated.
//! Later agents are recorded too and marked [`Outcome::CensoredAtEnd`] if
//! still present when the run stops.

mod events;
mod trace;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::compat::{compatible, AgentType, CompatModel, CompatibilityGraph, Participant};
use crate::error::{Error, Result};
use crate::matching::max_matching_h_priority_shuffled;
use crate::rng::{compat_seed, stream_rng, Stream};
use events::{EventKind, EventQueue};

pub use events::Event;
pub use trace::TRACE_HEADER;

/// Matching policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Greedy,
    Patient,
    Batching { period: f64 },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::Patient => "patient",
            Policy::Batching { .. } => "batching",
        }
    }
}

/// Parameters of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// E arrival rate per day.
    pub m: f64,
    /// Imbalance: H arrive at rate `(1+λ)m`.
    pub lambda: f64,
    /// Mean sojourn in days.
    pub d: f64,
    pub model: CompatModel,
    pub policy: Policy,
    pub horizon_arrivals: usize,
    pub warmup_agents: usize,
    /// Capacity `C = round(κ · total arrival rate)`; `None` for unlimited.
    pub capacity_kappa: Option<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m must be positive, got {}", self.m));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad(format!("d must be positive, got {}", self.d));
        }
        if !(self.lambda >= -1.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be at least -1, got {}", self.lambda));
        }
        if self.horizon_arrivals <= self.warmup_agents {
            return bad(format!(
                "horizon_arrivals ({}) must exceed warmup_agents ({})",
                self.horizon_arrivals, self.warmup_agents
            ));
        }
        if let Policy::Batching { period } = self.policy {
            if !(period > 0.0 && period.is_finite()) {
                return bad(format!("batching period must be positive, got {period}"));
            }
        }
        if let Some(k) = self.capacity_kappa {
            if !(k > 0.0) {
                return bad(format!("capacity_kappa must be positive, got {k}"));
            }
        }
        self.model.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if let CompatModel::Matrix(pool) = &self.model {
            for ty in AgentType::ALL {
                if self.rate(ty) > 0.0 && pool.rows_of(ty).is_empty() {
                    return bad(format!("matrix pool has no {ty} rows"));
                }
            }
        }
        Ok(())
    }

    /// Arrival rate of type `ty`.
    pub fn rate(&self, ty: AgentType) -> f64 {
        match ty {
            AgentType::Easy => self.m,
            AgentType::Hard => (1.0 + self.lambda) * self.m,
        }
    }

    pub fn total_rate(&self) -> f64 {
        (2.0 + self.lambda) * self.m
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity_kappa.map(|k| (k * self.total_rate()).round() as usize)
    }
}

/// Terminal state of an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Matched { partner: u64, partner_ty: AgentType },
    Departed,
    Rejected,
    CensoredAtEnd,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Matched { .. } => "matched",
            Outcome::Departed => "departed",
            Outcome::Rejected => "rejected",
            Outcome::CensoredAtEnd => "censored",
        }
    }
}

/// Life of one agent. `id` is the arrival index.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub id: u64,
    pub ty: AgentType,
    /// Profile row for matrix pools, 0 otherwise.
    pub row: usize,
    pub arrival: f64,
    pub criticality: f64,
    /// `None` only for censored agents.
    pub exit: Option<f64>,
    pub outcome: Outcome,
}

impl AgentRecord {
    pub fn participant(&self) -> Participant {
        Participant { ty: self.ty, id: self.id, row: self.row }
    }

    /// `exit − arrival` for agents that left.
    pub fn waiting(&self) -> Option<f64> {
        self.exit.map(|e| e - self.arrival)
    }
}

/// Pool sizes right after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSample {
    pub time: f64,
    pub easy: u32,
    pub hard: u32,
}

impl PoolSample {
    pub fn count(&self, ty: AgentType) -> u32 {
        match ty {
            AgentType::Easy => self.easy,
            AgentType::Hard => self.hard,
        }
    }
}

/// Output of [`run_simulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub records: Vec<AgentRecord>,
    /// Starts at `(0, 0, 0)`; one sample per event that changed the pool.
    pub pool_series: Vec<PoolSample>,
    pub horizon_arrivals: usize,
    pub end_time: f64,
}

impl SimTrace {
    /// Records of the first `horizon_arrivals` agents.
    pub fn horizon_records(&self) -> &[AgentRecord] {
        &self.records[..self.horizon_arrivals.min(self.records.len())]
    }
}

const ABSENT: usize = usize::MAX;

/// Waiting agents, one vector per type plus a position index by id.
struct Pool {
    members: [Vec<u64>; 2],
    pos: Vec<usize>,
}

impl Pool {
    fn new() -> Self {
        Pool { members: [Vec::new(), Vec::new()], pos: Vec::new() }
    }

    fn len(&self) -> usize {
        self.members[0].len() + self.members[1].len()
    }

    fn contains(&self, id: u64) -> bool {
        self.pos.get(id as usize).is_some_and(|&p| p != ABSENT)
    }

    fn insert(&mut self, id: u64, ty: AgentType) {
        let idx = id as usize;
        if self.pos.len() <= idx {
            self.pos.resize(idx + 1, ABSENT);
        }
        let list = &mut self.members[ty.index()];
        self.pos[idx] = list.len();
        list.push(id);
    }

    fn remove(&mut self, id: u64, ty: AgentType) {
        let idx = id as usize;
        let at = self.pos[idx];
        debug_assert_ne!(at, ABSENT);
        let list = &mut self.members[ty.index()];
        list.swap_remove(at);
        if at < list.len() {
            self.pos[list[at] as usize] = at;
        }
        self.pos[idx] = ABSENT;
    }

    fn swap(&mut self, ty: AgentType, i: usize, j: usize) {
        let list = &mut self.members[ty.index()];
        list.swap(i, j);
        self.pos[list[i] as usize] = i;
        self.pos[list[j] as usize] = j;
    }

    fn sample(&self, time: f64) -> PoolSample {
        PoolSample { time, easy: self.members[0].len() as u32, hard: self.members[1].len() as u32 }
    }
}

struct ArrivalSource {
    rng: ChaCha8Rng,
    gap: Exp<f64>,
    easy_share: f64,
    /// Matrix rows by position, with their labels.
    rows: Option<Vec<(usize, AgentType)>>,
}

impl ArrivalSource {
    fn new(config: &SimConfig) -> Result<Self> {
        let gap = Exp::new(config.total_rate()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let rows = match &config.model {
            CompatModel::Matrix(pool) => Some((0..pool.len()).map(|i| (i, pool.labels[i])).collect()),
            _ => None,
        };
        Ok(ArrivalSource {
            rng: stream_rng(config.seed, Stream::Arrivals),
            gap,
            easy_share: 1.0 / (2.0 + config.lambda),
            rows,
        })
    }

    fn next(&mut self, now: f64) -> (f64, AgentType, usize) {
        let t = now + self.gap.sample(&mut self.rng);
        match &self.rows {
            Some(rows) => {
                let (row, ty) = rows[self.rng.random_range(0..rows.len())];
                (t, ty, row)
            }
            None => {
                let ty = if self.rng.random::<f64>() < self.easy_share { AgentType::Easy } else { AgentType::Hard };
                (t, ty, 0)
            }
        }
    }
}

struct Engine<'a> {
    config: &'a SimConfig,
    compat_seed: u64,
    capacity: Option<usize>,
    records: Vec<AgentRecord>,
    pool: Pool,
    policy_rng: ChaCha8Rng,
    /// Horizon agents that have not left yet.
    unresolved: usize,
}

impl Engine<'_> {
    fn participant(&self, id: u64) -> Participant {
        self.records[id as usize].participant()
    }

    /// H-first search in uniformly random order over each type's pool.
    fn find_partner(&mut self, agent: Participant) -> Option<u64> {
        for pool_ty in [AgentType::Hard, AgentType::Easy] {
            if self.config.model.never_compatible(agent.ty, pool_ty) {
                continue;
            }
            let len = self.pool.members[pool_ty.index()].len();
            for i in 0..len {
                let j = self.policy_rng.random_range(i..len);
                self.pool.swap(pool_ty, i, j);
                let cand = self.pool.members[pool_ty.index()][i];
                if compatible(&self.config.model, agent, self.participant(cand), self.compat_seed) {
                    return Some(cand);
                }
            }
        }
        None
    }

    fn close(&mut self, id: u64, time: f64, outcome: Outcome) {
        let rec = &mut self.records[id as usize];
        debug_assert!(rec.exit.is_none());
        rec.exit = Some(time);
        rec.outcome = outcome;
        if (id as usize) < self.config.horizon_arrivals {
            self.unresolved -= 1;
        }
    }

    fn pair(&mut self, a: u64, b: u64, time: f64) {
        let (ta, tb) = (self.records[a as usize].ty, self.records[b as usize].ty);
        debug_assert!(!(ta == AgentType::Hard && tb == AgentType::Hard));
        self.close(a, time, Outcome::Matched { partner: b, partner_ty: tb });
        self.close(b, time, Outcome::Matched { partner: a, partner_ty: ta });
    }

    fn leave_pool(&mut self, id: u64) {
        let ty = self.records[id as usize].ty;
        self.pool.remove(id, ty);
    }

    fn full(&self) -> bool {
        self.capacity.is_some_and(|c| self.pool.len() >= c)
    }

    /// Returns true when the agent stays in the pool.
    fn on_arrival(&mut self, id: u64, time: f64) -> bool {
        let agent = self.participant(id);
        if self.config.policy == Policy::Greedy {
            if let Some(partner) = self.find_partner(agent) {
                self.leave_pool(partner);
                self.pair(id, partner, time);
                return false;
            }
        }
        if self.full() {
            self.close(id, time, Outcome::Rejected);
            return false;
        }
        self.pool.insert(id, agent.ty);
        true
    }

    fn on_critical(&mut self, id: u64, time: f64) {
        if !self.pool.contains(id) {
            return;
        }
        self.leave_pool(id);
        if self.config.policy == Policy::Patient {
            if let Some(partner) = self.find_partner(self.participant(id)) {
                self.leave_pool(partner);
                self.pair(id, partner, time);
                return;
            }
        }
        self.close(id, time, Outcome::Departed);
    }

    fn on_tick(&mut self, time: f64) {
        if self.pool.len() < 2 {
            return;
        }
        let mut ids: Vec<u64> = self.pool.members.iter().flatten().copied().collect();
        ids.sort_unstable();
        let parties: Vec<Participant> = ids.iter().map(|&id| self.participant(id)).collect();
        let graph = CompatibilityGraph::realize(&self.config.model, &parties, self.compat_seed);
        let mu = max_matching_h_priority_shuffled(&graph, &mut self.policy_rng);
        for &(u, v) in mu.pairs() {
            let (a, b) = (ids[u], ids[v]);
            self.leave_pool(a);
            self.leave_pool(b);
            self.pair(a, b, time);
        }
    }
}

/// Runs one simulation. Deterministic given the config, seed included.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let horizon = config.horizon_arrivals;
    let clock = Exp::new(1.0 / config.d).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut clock_rng = stream_rng(config.seed, Stream::Clocks);
    let mut arrivals = ArrivalSource::new(config)?;
    let mut engine = Engine {
        config,
        compat_seed: compat_seed(config.seed),
        capacity: config.capacity(),
        records: Vec::with_capacity(horizon + horizon / 8),
        pool: Pool::new(),
        policy_rng: stream_rng(config.seed, Stream::Policy),
        unresolved: horizon,
    };
    let mut queue = EventQueue::new();
    let mut pool_series = vec![PoolSample { time: 0.0, easy: 0, hard: 0 }];

    let mut pending = arrivals.next(0.0);
    queue.push(pending.0, EventKind::Arrival(pending.1));
    if let Policy::Batching { period } = config.policy {
        queue.push(period, EventKind::BatchTick);
    }
    let mut ticks: u64 = 1;
    let mut now = 0.0;

    while let Some(event) = queue.pop() {
        now = event.time;
        let before = (engine.pool.members[0].len(), engine.pool.members[1].len());
        match event.kind {
            EventKind::Arrival(ty) => {
                let id = engine.records.len() as u64;
                let (_, _, row) = pending;
                let criticality = now + clock.sample(&mut clock_rng);
                engine.records.push(AgentRecord {
                    id,
                    ty,
                    row,
                    arrival: now,
                    criticality,
                    exit: None,
                    outcome: Outcome::CensoredAtEnd,
                });
                if engine.on_arrival(id, now) {
                    queue.push(criticality, EventKind::Critical(id));
                }
                if engine.records.len() < horizon || engine.unresolved > 0 {
                    pending = arrivals.next(now);
                    queue.push(pending.0, EventKind::Arrival(pending.1));
                }
            }
            EventKind::Critical(id) => engine.on_critical(id, now),
            EventKind::BatchTick => {
                engine.on_tick(now);
                if let Policy::Batching { period } = config.policy {
                    ticks += 1;
                    queue.push(ticks as f64 * period, EventKind::BatchTick);
                }
            }
        }
        if before != (engine.pool.members[0].len(), engine.pool.members[1].len()) {
            pool_series.push(engine.pool.sample(now));
        }
        if engine.records.len() >= horizon && engine.unresolved == 0 {
            break;
        }
    }

    Ok(SimTrace { records: engine.records, pool_series, horizon_arrivals: horizon, end_time: now })
}
