//! End-to-end acceptance checks. Run with `cargo test --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits non-zero on failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use dynmatch::compat::{fwp, sample_static_pool, sequential_greedy_match, smm, AgentType, CompatModel};
use dynmatch::matching::{
    brute_force_matching, lexicographic_value, max_cardinality_matching, max_matching_h_priority,
    max_matching_h_priority_weighted, Objective,
};
use dynmatch::sim::{run_simulation, Outcome, Policy, SimConfig, SimTrace};
use dynmatch::stats::{
    batch_means, ks_exponential, littles_law_check, mean_and_se, summarize, time_average, waiting_times, Report,
};
use dynmatch::theory::{
    batching_bounds, bd_stationary_adaptive, ctmc_stationary_2d, greedy_ctmc, greedy_limits, ml_chain, mu_chain,
};
use dynmatch::CompatibilityGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use AgentType::{Easy, Hard};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    m: f64,
    lambda: f64,
    d: f64,
    p: f64,
    q: f64,
    policy: Policy,
    horizon: usize,
    warmup: usize,
    seed: u64,
) -> SimConfig {
    SimConfig {
        m,
        lambda,
        d,
        model: CompatModel::TwoType { p, q },
        policy,
        horizon_arrivals: horizon,
        warmup_agents: warmup,
        capacity_kappa: None,
        seed,
    }
}

fn report(cfg: &SimConfig) -> Report {
    let trace = run_simulation(cfg).expect("simulation");
    summarize(&trace, cfg.warmup_agents).expect("summary")
}

fn seed_means(cfgs: Vec<SimConfig>) -> (f64, f64) {
    let reports: Vec<Report> = cfgs.par_iter().map(report).collect();
    let mt: Vec<f64> = reports.iter().map(|r| r.of(Hard).mean_matching_time.unwrap()).collect();
    let mr: Vec<f64> = reports.iter().map(|r| r.of(Hard).match_rate).collect();
    (mean_and_se(&mt).unwrap().0, mean_and_se(&mr).unwrap().0)
}

fn stylized(policy: Policy, lambda: f64, seed: u64) -> SimConfig {
    config(1.0, lambda, 200.0, 0.1, 0.04, policy, 70_000, 5_000, seed)
}

fn within_rel(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol * target.abs()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let (mt, mr) = seed_means((1..=10).map(|s| stylized(Policy::Greedy, 0.5, s)).collect());
    let secs = start.elapsed().as_secs_f64();
    check(
        within_rel(mt, 66.67, 0.05) && (mr - 0.67).abs() <= 0.02,
        format!("greedy MT(H) = {mt:.2} (66.67 ± 5%), M(H) = {mr:.3} (0.67 ± 0.02), {secs:.1} s"),
    )
}

fn criterion_2() -> Verdict {
    let (mt, mr) = seed_means((1..=10).map(|s| stylized(Policy::Patient, 0.5, s)).collect());
    check(
        (185.0..=205.0).contains(&mt) && (mr - 0.67).abs() <= 0.02,
        format!("patient MT(H) = {mt:.2} ([185, 205]), M(H) = {mr:.3} (0.67 ± 0.02)"),
    )
}

fn criterion_3() -> Verdict {
    let table = [(0.222, 36.36, 0.82), (0.857, 92.3, 0.54), (2.0, 133.3, 0.33)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (lambda, mt_ref, mr_ref) in table {
        let (g_mt, g_mr) = seed_means((1..=10).map(|s| stylized(Policy::Greedy, lambda, s)).collect());
        let (p_mt, _) = seed_means((1..=10).map(|s| stylized(Policy::Patient, lambda, s)).collect());
        let row_ok = within_rel(g_mt, mt_ref, 0.05) && (g_mr - mr_ref).abs() <= 0.02 && within_rel(p_mt, 200.0, 0.07);
        ok &= row_ok;
        parts.push(format!("λ={lambda}: greedy {g_mt:.2}/{g_mr:.3}, patient {p_mt:.1}"));
    }
    check(ok, parts.join("; "))
}

fn criterion_4() -> Verdict {
    let (m, lambda, d) = (10.0, 1.0, 200.0);
    let run = |policy| {
        let cfg = config(m, lambda, d, 0.1, 0.04, policy, 480_000, 20_000, 4);
        let trace = run_simulation(&cfg).unwrap();
        waiting_times(&trace, cfg.warmup_agents, Hard).unwrap()
    };
    let (greedy, patient) = rayon::join(|| run(Policy::Greedy), || run(Policy::Patient));
    let kg = ks_exponential(&greedy, Some((1.0 + lambda) / (lambda * d))).unwrap();
    let kp = ks_exponential(&patient, Some(1.0 / d)).unwrap();
    check(
        kg.n >= 300_000 && kp.n >= 300_000 && kg.statistic < 0.02 && kp.statistic < 0.02,
        format!(
            "greedy KS = {:.4} (n = {}), patient KS = {:.4} (n = {}), limit 0.02",
            kg.statistic, kg.n, kp.statistic, kp.n
        ),
    )
}

fn criterion_5() -> Verdict {
    let (m, lambda, d, period) = (2.0, 1.33, 360.0, 30.0);
    let bound = batching_bounds(lambda, d, period).unwrap();
    let greedy_limit = greedy_limits(lambda, d).unwrap();
    let seeds: Vec<u64> = (1..=6).collect();
    let pairs: Vec<(Report, Report)> = seeds
        .par_iter()
        .map(|&s| {
            let g = report(&config(m, lambda, d, 0.1, 0.04, Policy::Greedy, 200_000, 20_000, s));
            let b = report(&config(m, lambda, d, 0.1, 0.04, Policy::Batching { period }, 200_000, 20_000, s));
            (g, b)
        })
        .collect();
    let col = |f: &dyn Fn(&(Report, Report)) -> f64| mean_and_se(&pairs.iter().map(f).collect::<Vec<_>>()).unwrap();
    let (bq_h, bq_h_se) = col(&|(_, b)| b.of(Hard).match_rate);
    let (bw_h, _) = col(&|(_, b)| b.of(Hard).mean_waiting);
    let (gap_qh, _) = col(&|(g, b)| g.of(Hard).match_rate - b.of(Hard).match_rate);
    let (gap_qe, _) = col(&|(g, b)| g.of(Easy).match_rate - b.of(Easy).match_rate);
    let (gap_wh, _) = col(&|(g, b)| b.of(Hard).mean_waiting - g.of(Hard).mean_waiting);
    let (gap_we, _) = col(&|(g, b)| b.of(Easy).mean_waiting - g.of(Easy).mean_waiting);

    let bound_ok = (bound.q_h - 0.4118).abs() < 1e-4 && (greedy_limit.w_h - 205.5).abs() < 0.1;
    let ok = bound_ok
        && bq_h <= bound.q_h + 3.0 * bq_h_se
        && bw_h >= 205.5
        && within_rel(gap_qh, 0.017, 0.5)
        && within_rel(gap_qe, 0.04, 0.5)
        && within_rel(gap_wh, 6.0, 0.5)
        && within_rel(gap_we, 15.0, 0.5);
    check(
        ok,
        format!(
            "batching q_H = {bq_h:.4} ± {bq_h_se:.4} (bound {:.4}), w_H = {bw_h:.1} (≥ 205.5); \
             gaps q_H {:.2}%, q_E {:.2}%, w_H {gap_wh:.1} d, w_E {gap_we:.1} d",
            bound.q_h,
            100.0 * gap_qh,
            100.0 * gap_qe
        ),
    )
}

fn random_typed_graph(rng: &mut ChaCha8Rng, n: usize, hard_hard: bool) -> CompatibilityGraph {
    let types: Vec<AgentType> = (0..n).map(|_| if rng.random_bool(0.5) { Hard } else { Easy }).collect();
    let density = rng.random_range(0.05..0.9);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let allowed = hard_hard || !(types[u] == Hard && types[v] == Hard);
            if allowed && rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    CompatibilityGraph::from_edges(types, &edges).unwrap()
}

const PRIME: u64 = 2_147_483_647;

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Rank of a random Tutte matrix over GF(p); equals twice the maximum
/// matching size with high probability and never exceeds it.
fn tutte_rank(g: &CompatibilityGraph, rng: &mut ChaCha8Rng) -> usize {
    let n = g.n();
    let mut a = vec![vec![0u64; n]; n];
    for (u, v) in g.edges() {
        let x = rng.random_range(1..PRIME);
        a[u][v] = x;
        a[v][u] = PRIME - x;
    }
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..n).find(|&r| a[r][col] != 0) else { continue };
        a.swap(rank, pivot);
        let inv = pow_mod(a[rank][col], PRIME - 2);
        let pivot_row = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            if row[col] == 0 {
                continue;
            }
            let f = row[col] * inv % PRIME;
            for (x, &p) in row.iter_mut().zip(&pivot_row).skip(col) {
                *x = (*x + PRIME - f * p % PRIME) % PRIME;
            }
        }
        rank += 1;
    }
    rank
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    let total = 1000;
    for i in 0..total {
        let n = rng.random_range(1..=10);
        let g = random_typed_graph(&mut rng, n, i % 4 == 0);
        let fast = max_matching_h_priority(&g);
        let exact = brute_force_matching(&g, Objective::CardinalityThenHard).unwrap();
        if fast.is_valid_for(&g) && lexicographic_value(&g, &fast) == lexicographic_value(&g, &exact) {
            agree += 1;
        }
    }
    let mut berge_ok = 0;
    let large = 100;
    for i in 0..large {
        let n = rng.random_range(20..=200);
        let g = random_typed_graph(&mut rng, n, i % 4 == 0);
        let sparse = {
            let types = g.types().to_vec();
            let keep = 3.0 / n as f64;
            let edges: Vec<(usize, usize)> = g.edges().filter(|_| rng.random_bool(keep.min(1.0))).collect();
            CompatibilityGraph::from_edges(types, &edges).unwrap()
        };
        let nu = tutte_rank(&sparse, &mut rng).max(tutte_rank(&sparse, &mut rng)) / 2;
        let fast = max_matching_h_priority(&sparse);
        let card = max_cardinality_matching(&sparse);
        let weighted = max_matching_h_priority_weighted(&sparse);
        if fast.is_valid_for(&sparse)
            && card.is_valid_for(&sparse)
            && fast.len() == nu
            && card.len() == nu
            && lexicographic_value(&sparse, &fast) == lexicographic_value(&sparse, &weighted)
        {
            berge_ok += 1;
        }
    }
    check(
        agree == total && berge_ok == large,
        format!("brute force agreement {agree}/{total}; Tutte-rank maximality {berge_ok}/{large}"),
    )
}

fn criterion_7() -> Verdict {
    let (m, lambda) = (1e4, 0.5);
    let center = lambda * m;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, chain) in [("lower", ml_chain(m, lambda).unwrap()), ("upper", mu_chain(m, lambda, 0.1).unwrap())] {
        let s = bd_stationary_adaptive(&chain, 10).unwrap();
        let tail = s.mass_outside(center, 20.0 * m.sqrt() * m.ln()) + s.tail_mass;
        let row_ok = (s.mean() - center).abs() <= 10.0 * m.sqrt() && tail < 1e-6;
        ok &= row_ok;
        parts.push(format!("{name} mean {:.1} tail {:.1e}", s.mean(), tail));
    }

    let (m, lambda, p, q, cap) = (2.0, 1.0, 0.5, 0.5, 20);
    let st = ctmc_stationary_2d(&greedy_ctmc(m, lambda, p, q, cap).unwrap()).unwrap();
    let mut cfg = config(m, lambda, 1.0, p, q, Policy::Greedy, 1_000_000, 20_000, 7);
    cfg.capacity_kappa = Some(cap as f64 / cfg.total_rate());
    let trace = run_simulation(&cfg).unwrap();
    let recs = trace.horizon_records();
    let (t0, t1) = (recs[cfg.warmup_agents].arrival, recs[cfg.horizon_arrivals - 1].arrival);
    let batches = 50;
    let width = (t1 - t0) / batches as f64;
    for (ty, exact) in [(Hard, st.mean_hard), (Easy, st.mean_easy)] {
        let means: Vec<f64> = (0..batches)
            .map(|b| time_average(&trace.pool_series, ty, t0 + b as f64 * width, t0 + (b + 1) as f64 * width))
            .collect();
        let (mean, se) = mean_and_se(&means).unwrap();
        let row_ok = (mean - exact).abs() <= 3.0 * se;
        ok &= row_ok;
        parts.push(format!("CTMC {ty} {exact:.4} vs sim {mean:.4} ± {se:.4}"));
    }
    check(ok, parts.join("; "))
}

fn criterion_8() -> Verdict {
    let model = CompatModel::TwoType { p: 0.1, q: 0.1 };
    let rows: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let g = sample_static_pool(500, 1.0, &model, s).unwrap();
            (smm(&g).unwrap(), fwp(&g).unwrap())
        })
        .collect();
    let mean_smm = rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64;
    let mean_fwp = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;

    let n = 2000usize;
    let p = (n as f64).ln().powi(2) / n as f64;
    let g = sample_static_pool(n, -1.0, &CompatModel::Homogeneous { p }, 8).unwrap();
    let order: Vec<usize> = (0..g.n()).collect();
    let greedy = sequential_greedy_match(&g, &order).unwrap().matched_vertices() as f64 / g.n() as f64;
    check(
        (0.64..=0.69).contains(&mean_smm) && mean_fwp < 0.01 && g.n() == n && greedy >= 0.95,
        format!(
            "SMM {mean_smm:.4} ([0.64, 0.69]), FWP {mean_fwp:.5} (< 0.01), homogeneous greedy {greedy:.4} (≥ 0.95)"
        ),
    )
}

fn hard_match_indicators(trace: &SimTrace, warmup: usize) -> Vec<f64> {
    trace.horizon_records()[warmup..]
        .iter()
        .filter(|r| r.ty == Hard)
        .filter_map(|r| match r.outcome {
            Outcome::Matched { .. } => Some(1.0),
            Outcome::Departed => Some(0.0),
            _ => None,
        })
        .collect()
}

fn criterion_9() -> Verdict {
    let policies = [
        Policy::Greedy,
        Policy::Patient,
        Policy::Batching { period: 7.0 },
        Policy::Batching { period: 30.0 },
        Policy::Batching { period: 60.0 },
    ];
    let rows: Vec<(String, f64, f64, f64)> = policies
        .par_iter()
        .map(|&policy| {
            let cfg = config(10.0, 1.0, 200.0, 0.1, 0.04, policy, 200_000, 20_000, 9);
            let trace = run_simulation(&cfg).unwrap();
            let (q, se) = batch_means(&hard_match_indicators(&trace, cfg.warmup_agents), 20).unwrap();
            let little = littles_law_check(&trace, cfg.warmup_agents).unwrap();
            let err = little.easy.unwrap_or(0.0).max(little.hard.unwrap_or(0.0));
            let label = match policy {
                Policy::Batching { period } => format!("batching T={period}"),
                p => p.name().to_string(),
            };
            (label, q, se, err)
        })
        .collect();
    let ok = rows.iter().all(|(_, q, se, err)| *q <= 0.5 + 3.0 * se && *err < 0.02);
    let detail = rows
        .iter()
        .map(|(l, q, se, err)| format!("{l}: q_H {q:.4} ± {se:.4}, Little {:.2}%", 100.0 * err))
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn run_cli(out: &Path, jobs: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dynmatch"))
        .args(["simulate", "--seed", "10", "--policy", "batching", "--period", "7", "--reps", "4"])
        .args(["--m", "2", "--lambda", "1", "--d", "50", "--p", "0.1", "--q", "0.04"])
        .args(["--horizon", "5000", "--warmup", "500", "--trace", "--jobs", &jobs.to_string()])
        .arg("--out")
        .arg(out.join("run"))
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("dynmatch exited with {status}"))
    }
}

fn compared_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with("metadata.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|n| tmp.path().join(n)).collect();
    for (dir, jobs) in dirs.iter().zip([1, 1, 8]) {
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        run_cli(dir, jobs)?;
    }
    let sets: Vec<_> = dirs.iter().map(|d| compared_files(d)).collect();
    let traces = sets[0].iter().filter(|(n, _)| n.contains(".trace.")).count();
    check(
        traces == 4 && sets[0] == sets[1] && sets[0] == sets[2],
        format!("{} files ({traces} traces) identical across repeat and --jobs 1 vs 8", sets[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 stylized greedy", criterion_1),
        ("2 stylized patient", criterion_2),
        ("3 lambda sweep", criterion_3),
        ("4 waiting-time distributions", criterion_4),
        ("5 batching dominance", criterion_5),
        ("6 matching engine", criterion_6),
        ("7 chain oracles", criterion_7),
        ("8 static limits", criterion_8),
        ("9 universal bound and Little's law", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
