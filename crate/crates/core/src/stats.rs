//! Performance measures over simulation traces.
//!
//! Only agents with arrival index in `[warmup, horizon)` are counted.
//! Rejected agents are reported separately and censored agents are ignored.

use serde_json::{Map, Value};

use crate::compat::AgentType;
use crate::error::{Error, Result};
use crate::sim::{AgentRecord, Outcome, PoolSample, SimTrace};

pub const HISTOGRAM_BINS: usize = 100;

/// Per-type measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeStats {
    /// Matched plus departed.
    pub n_total: usize,
    pub n_matched: usize,
    pub n_departed: usize,
    pub n_rejected: usize,
    pub match_rate: f64,
    /// Over matched and departed agents.
    pub mean_waiting: f64,
    /// Over matched agents.
    pub mean_matching_time: Option<f64>,
    /// Over departed agents.
    pub mean_unmatched_waiting: Option<f64>,
}

/// Equal-width histogram over `[0, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Self {
        let max = samples.iter().copied().fold(0.0, f64::max);
        let mut counts = vec![0; bins];
        for &x in samples {
            let k = if max > 0.0 { ((x / max) * bins as f64) as usize } else { 0 };
            counts[k.min(bins - 1)] += 1;
        }
        Histogram { max, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        self.max / self.counts.len() as f64
    }
}

/// Aggregate of one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Indexed by [`AgentType::index`].
    pub types: [TypeStats; 2],
    pub waiting_hist: [Histogram; 2],
    pub matching_hist: [Histogram; 2],
    pub littles_law_error: [Option<f64>; 2],
    /// Time-average pool sizes over the measurement window.
    pub pool_means: [f64; 2],
}

impl Report {
    pub fn of(&self, ty: AgentType) -> &TypeStats {
        &self.types[ty.index()]
    }

    /// Flat `(key, value)` list in a fixed order; `None` marks undefined.
    pub fn flat(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        for ty in [AgentType::Hard, AgentType::Easy] {
            let s = self.of(ty);
            let i = ty.index();
            let t = ty.as_str();
            out.push((format!("match_rate_{t}"), Some(s.match_rate)));
            out.push((format!("mean_waiting_{t}"), Some(s.mean_waiting)));
            out.push((format!("mean_matching_time_{t}"), s.mean_matching_time));
            out.push((format!("mean_unmatched_waiting_{t}"), s.mean_unmatched_waiting));
            out.push((format!("n_total_{t}"), Some(s.n_total as f64)));
            out.push((format!("n_matched_{t}"), Some(s.n_matched as f64)));
            out.push((format!("n_rejected_{t}"), Some(s.n_rejected as f64)));
            out.push((format!("littles_law_error_{t}"), self.littles_law_error[i]));
            out.push((format!("pool_mean_{t}"), Some(self.pool_means[i])));
        }
        out
    }

    pub fn csv_header() -> Vec<String> {
        Report::flat(&Report::placeholder()).into_iter().map(|(k, _)| k).collect()
    }

    /// Values of [`Report::flat`] formatted for CSV, empty when undefined.
    pub fn csv_row(&self) -> Vec<String> {
        self.flat().into_iter().map(|(_, v)| v.map(|x| x.to_string()).unwrap_or_default()).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in self.flat() {
            map.insert(k, v.map(Value::from).unwrap_or(Value::Null));
        }
        Value::Object(map)
    }

    fn placeholder() -> Report {
        let ts = TypeStats {
            n_total: 0,
            n_matched: 0,
            n_departed: 0,
            n_rejected: 0,
            match_rate: 0.0,
            mean_waiting: 0.0,
            mean_matching_time: None,
            mean_unmatched_waiting: None,
        };
        let h = Histogram { max: 0.0, counts: vec![] };
        Report {
            types: [ts.clone(), ts],
            waiting_hist: [h.clone(), h.clone()],
            matching_hist: [h.clone(), h],
            littles_law_error: [None, None],
            pool_means: [0.0, 0.0],
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn window(trace: &SimTrace, warmup: usize) -> Result<&[AgentRecord]> {
    let recs = trace.horizon_records();
    if warmup >= recs.len() {
        return Err(Error::NoSamples(format!("warmup {warmup} leaves no agents out of {}", recs.len())));
    }
    Ok(&recs[warmup..])
}

/// Waiting times of matched and departed agents of `ty` in the window.
pub fn waiting_times(trace: &SimTrace, warmup: usize, ty: AgentType) -> Result<Vec<f64>> {
    Ok(window(trace, warmup)?
        .iter()
        .filter(|r| r.ty == ty && matches!(r.outcome, Outcome::Matched { .. } | Outcome::Departed))
        .filter_map(AgentRecord::waiting)
        .collect())
}

/// Waiting times of matched agents of `ty` in the window.
pub fn matching_times(trace: &SimTrace, warmup: usize, ty: AgentType) -> Result<Vec<f64>> {
    Ok(window(trace, warmup)?
        .iter()
        .filter(|r| r.ty == ty && matches!(r.outcome, Outcome::Matched { .. }))
        .filter_map(AgentRecord::waiting)
        .collect())
}

/// Computes the per-type measures, histograms and Little's law errors.
pub fn summarize(trace: &SimTrace, warmup: usize) -> Result<Report> {
    let recs = window(trace, warmup)?;
    let mut types = Vec::with_capacity(2);
    let mut waiting_hist = Vec::with_capacity(2);
    let mut matching_hist = Vec::with_capacity(2);
    for ty in AgentType::ALL {
        let mut matched = Vec::new();
        let mut departed = Vec::new();
        let mut rejected = 0;
        for r in recs.iter().filter(|r| r.ty == ty) {
            match r.outcome {
                Outcome::Matched { .. } => matched.push(r.waiting().unwrap_or(0.0)),
                Outcome::Departed => departed.push(r.waiting().unwrap_or(0.0)),
                Outcome::Rejected => rejected += 1,
                Outcome::CensoredAtEnd => {}
            }
        }
        let n_total = matched.len() + departed.len();
        if n_total == 0 {
            return Err(Error::NoSamples(format!("no completed {ty} agents after warmup")));
        }
        let all: Vec<f64> = matched.iter().chain(&departed).copied().collect();
        types.push(TypeStats {
            n_total,
            n_matched: matched.len(),
            n_departed: departed.len(),
            n_rejected: rejected,
            match_rate: matched.len() as f64 / n_total as f64,
            mean_waiting: mean(&all).unwrap_or(0.0),
            mean_matching_time: mean(&matched),
            mean_unmatched_waiting: mean(&departed),
        });
        waiting_hist.push(Histogram::new(&all, HISTOGRAM_BINS));
        matching_hist.push(Histogram::new(&matched, HISTOGRAM_BINS));
    }
    let little = littles_law_check(trace, warmup)?;
    let (t0, t1) = little_window(recs);
    let pool_means = [
        time_average(&trace.pool_series, AgentType::Easy, t0, t1),
        time_average(&trace.pool_series, AgentType::Hard, t0, t1),
    ];
    let [te, th]: [TypeStats; 2] = types.try_into().expect("two types");
    let [we, wh]: [Histogram; 2] = waiting_hist.try_into().expect("two types");
    let [me, mh]: [Histogram; 2] = matching_hist.try_into().expect("two types");
    Ok(Report {
        types: [te, th],
        waiting_hist: [we, wh],
        matching_hist: [me, mh],
        littles_law_error: [little.easy, little.hard],
        pool_means,
    })
}

fn little_window(recs: &[AgentRecord]) -> (f64, f64) {
    (recs[0].arrival, recs[recs.len() - 1].arrival)
}

/// Time average of the `ty` pool size over `[t0, t1]`, treating the series
/// as a right-continuous step function.
pub fn time_average(series: &[PoolSample], ty: AgentType, t0: f64, t1: f64) -> f64 {
    if t1 <= t0 || series.is_empty() {
        return 0.0;
    }
    let start = series.partition_point(|s| s.time <= t0).saturating_sub(1);
    let mut area = 0.0;
    for (k, s) in series.iter().enumerate().skip(start) {
        if s.time >= t1 {
            break;
        }
        let a = s.time.max(t0);
        let b = series.get(k + 1).map_or(t1, |n| n.time.min(t1));
        if b > a {
            area += s.count(ty) as f64 * (b - a);
        }
    }
    area / (t1 - t0)
}

/// Relative Little's law errors `|rate·W − L| / L`; `None` when `L = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittleCheck {
    pub easy: Option<f64>,
    pub hard: Option<f64>,
}

/// Compares arrival rate × mean sojourn against the time-average pool size.
///
/// The window runs from the first post-warmup arrival to the last horizon
/// arrival. Rejected agents count with zero sojourn.
pub fn littles_law_check(trace: &SimTrace, warmup: usize) -> Result<LittleCheck> {
    let recs = window(trace, warmup)?;
    let (t0, t1) = little_window(recs);
    if t1 <= t0 {
        return Err(Error::NoSamples("measurement window has zero length".into()));
    }
    let mut out = [None, None];
    for ty in AgentType::ALL {
        let waits: Vec<f64> = recs.iter().filter(|r| r.ty == ty).filter_map(AgentRecord::waiting).collect();
        let l = time_average(&trace.pool_series, ty, t0, t1);
        if waits.is_empty() || l <= 0.0 {
            continue;
        }
        let rate = waits.len() as f64 / (t1 - t0);
        out[ty.index()] = Some((rate * mean(&waits).unwrap_or(0.0) - l).abs() / l);
    }
    Ok(LittleCheck { easy: out[0], hard: out[1] })
}

/// One-sample Kolmogorov–Smirnov result against an exponential law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSResult {
    pub statistic: f64,
    pub n: usize,
    pub mle_rate: f64,
    /// Rate of the reference distribution actually used.
    pub rate: f64,
}

/// KS distance between the samples and `Exp(rate)`; `rate` defaults to the
/// maximum-likelihood estimate `1 / mean`.
pub fn ks_exponential(samples: &[f64], rate: Option<f64>) -> Result<KSResult> {
    if samples.is_empty() {
        return Err(Error::NoSamples("ks_exponential needs samples".into()));
    }
    if samples.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("samples must be non-negative".into()));
    }
    let n = samples.len();
    let mle_rate = n as f64 / samples.iter().sum::<f64>();
    let rate = rate.unwrap_or(mle_rate);
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = if rate.is_infinite() {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            -(-rate * x).exp_m1()
        };
        d = d.max(f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f);
    }
    Ok(KSResult { statistic: d.clamp(0.0, 1.0), n, mle_rate, rate })
}

fn ecdf_sorted(xs: &[f64], t: f64) -> f64 {
    xs.partition_point(|&x| x <= t) as f64 / xs.len() as f64
}

/// Largest violation of "a is stochastically smaller than b", i.e.
/// `max_t (F_b(t) − F_a(t))⁺` over all sample points.
pub fn dominance_check(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::NoSamples("dominance_check needs two nonempty samples".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let worst = sa.iter().chain(&sb).map(|&t| ecdf_sorted(&sb, t) - ecdf_sorted(&sa, t)).fold(0.0, f64::max);
    Ok(worst)
}

/// Mean and standard error of replicate values.
pub fn mean_and_se(xs: &[f64]) -> Option<(f64, f64)> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some((m, f64::NAN));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((m, (var / xs.len() as f64).sqrt()))
}

/// Batch-means estimate of the mean of a correlated series and its
/// standard error, using `batches` contiguous batches.
pub fn batch_means(xs: &[f64], batches: usize) -> Option<(f64, f64)> {
    if batches < 2 || xs.len() < batches {
        return None;
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size]).unwrap_or(0.0)).collect();
    mean_and_se(&means)
}
