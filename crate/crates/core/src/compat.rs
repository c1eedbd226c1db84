//! Compatibility models, static pools and the static measures SMM and FWP.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching;
use crate::rng::{pair_uniform, stream_rng, Stream};

/// Easy-to-match (`E`) or hard-to-match (`H`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentType {
    #[serde(rename = "E")]
    Easy,
    #[serde(rename = "H")]
    Hard,
}

impl AgentType {
    pub const ALL: [AgentType; 2] = [AgentType::Easy, AgentType::Hard];

    pub fn index(self) -> usize {
        match self {
            AgentType::Easy => 0,
            AgentType::Hard => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentType::Easy => "E",
            AgentType::Hard => "H",
        }
    }
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "E" | "e" => Ok(AgentType::Easy),
            "H" | "h" => Ok(AgentType::Hard),
            other => Err(format!("unknown agent type {other:?} (expected E or H)")),
        }
    }
}

/// An empirical pool: a fixed set of profiles with known pairwise
/// compatibility. Dynamic arrivals draw a profile uniformly with replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixPool {
    pub ids: Vec<String>,
    pub labels: Vec<AgentType>,
    bits: Vec<bool>,
}

impl MatrixPool {
    /// Builds a pool from a row-major `n × n` bit matrix.
    pub fn new(ids: Vec<String>, labels: Vec<AgentType>, bits: Vec<Vec<bool>>) -> Result<Self> {
        let n = labels.len();
        if ids.len() != n || bits.len() != n {
            return Err(Error::InvalidParameter(format!(
                "matrix pool dimension mismatch: {} ids, {} labels, {} rows",
                ids.len(),
                n,
                bits.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in bits.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        let pool = MatrixPool { ids, labels, bits: flat };
        pool.check()?;
        Ok(pool)
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.bit(i, i) {
                return Err(Error::InvalidDiagonal { i });
            }
            for j in (i + 1)..n {
                if self.bit(i, j) != self.bit(j, i) {
                    return Err(Error::AsymmetricMatrix { i, j });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.len() + j]
    }

    /// Rows carrying the given label.
    pub fn rows_of(&self, ty: AgentType) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == ty).collect()
    }

    /// Serializes to the pool file format (header, `id,type` lines, 0/1 rows).
    pub fn to_file_string(&self) -> String {
        let n = self.len();
        let mut out = format!("{n}\n");
        for i in 0..n {
            out.push_str(&format!("{},{}\n", self.ids[i], self.labels[i]));
        }
        for i in 0..n {
            let row: Vec<&str> = (0..n).map(|j| if self.bit(i, j) { "1" } else { "0" }).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the pool file format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (lineno, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: lineno, msg: format!("expected vertex count, got {header:?}") })?;
        let mut ids = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for k in 0..n {
            let (line, text) = lines.next().ok_or(Error::Parse { line: k + 2, msg: "missing id,type line".into() })?;
            let (id, ty) = text
                .split_once(',')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected `id,type`, got {text:?}") })?;
            let ty = ty.parse().map_err(|msg| Error::Parse { line, msg })?;
            ids.push(id.trim().to_string());
            labels.push(ty);
        }
        let mut bits = Vec::with_capacity(n);
        for k in 0..n {
            let (line, text) =
                lines.next().ok_or(Error::Parse { line: n + k + 2, msg: "missing matrix row".into() })?;
            let row = text
                .split(',')
                .map(|cell| match cell.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse { line, msg: format!("matrix entry must be 0 or 1, got {other:?}") }),
                })
                .collect::<Result<Vec<bool>>>()?;
            if row.len() != n {
                return Err(Error::Parse { line, msg: format!("row has {} entries, expected {n}", row.len()) });
            }
            bits.push(row);
        }
        if let Some((line, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::Parse { line, msg: format!("unexpected trailing content {extra:?}") });
        }
        MatrixPool::new(ids, labels, bits)
    }
}

/// Rule producing pairwise compatibility.
#[derive(Debug, Clone, PartialEq)]
pub enum CompatModel {
    /// `p` for E–H pairs, `q` for E–E pairs, H–H never compatible.
    TwoType { p: f64, q: f64 },
    /// Every pair compatible with probability `p`.
    Homogeneous { p: f64 },
    /// Empirical pool with fixed compatibilities.
    Matrix(MatrixPool),
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} is not a probability")))
    }
}

impl CompatModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CompatModel::TwoType { p, q } => {
                check_probability("p", *p)?;
                check_probability("q", *q)
            }
            CompatModel::Homogeneous { p } => check_probability("p", *p),
            CompatModel::Matrix(pool) => {
                if pool.is_empty() {
                    return Err(Error::InvalidParameter("matrix pool is empty".into()));
                }
                Ok(())
            }
        }
    }

    /// Compatibility probability for a type pair; `None` for matrix pools,
    /// where compatibility depends on the drawn profiles.
    pub fn probability(&self, a: AgentType, b: AgentType) -> Option<f64> {
        use AgentType::*;
        match self {
            CompatModel::TwoType { p, q } => Some(match (a, b) {
                (Hard, Hard) => 0.0,
                (Easy, Easy) => *q,
                _ => *p,
            }),
            CompatModel::Homogeneous { p } => Some(*p),
            CompatModel::Matrix(_) => None,
        }
    }

    /// True when agents of types `a` and `b` can never be compatible.
    pub fn never_compatible(&self, a: AgentType, b: AgentType) -> bool {
        self.probability(a, b) == Some(0.0)
    }

    pub fn name(&self) -> &'static str {
        match self {
            CompatModel::TwoType { .. } => "two_type",
            CompatModel::Homogeneous { .. } => "homogeneous",
            CompatModel::Matrix(_) => "matrix",
        }
    }
}

/// One side of a compatibility query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Participant {
    pub ty: AgentType,
    pub id: u64,
    /// Profile row for matrix pools; ignored by the random models.
    pub row: usize,
}

impl Participant {
    pub fn new(ty: AgentType, id: u64) -> Self {
        Participant { ty, id, row: 0 }
    }
}

/// Whether `a` and `b` are compatible.
///
/// A pure function of the unordered id pair, the types and `stream_seed`, so
/// repeated and swapped queries agree.
#[inline]
pub fn compatible(model: &CompatModel, a: Participant, b: Participant, stream_seed: u64) -> bool {
    debug_assert_ne!(a.id, b.id, "compatibility of an agent with itself");
    if a.id == b.id {
        return false;
    }
    match model {
        CompatModel::Matrix(pool) => pool.bit(a.row, b.row),
        _ => {
            let prob = model.probability(a.ty, b.ty).unwrap_or(0.0);
            if prob <= 0.0 {
                false
            } else if prob >= 1.0 {
                true
            } else {
                pair_uniform(a.id, b.id, stream_seed) < prob
            }
        }
    }
}

/// Undirected graph over typed agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityGraph {
    types: Vec<AgentType>,
    adj: Vec<Vec<usize>>,
}

impl CompatibilityGraph {
    pub fn new(types: Vec<AgentType>) -> Self {
        let adj = vec![Vec::new(); types.len()];
        CompatibilityGraph { types, adj }
    }

    /// Builds a graph from typed vertices and an edge list. Self-loops and
    /// duplicate edges are rejected.
    pub fn from_edges(types: Vec<AgentType>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = CompatibilityGraph::new(types);
        for &(u, v) in edges {
            if u == v || u >= g.n() || v >= g.n() {
                return Err(Error::InvalidParameter(format!("bad edge ({u}, {v})")));
            }
            if g.has_edge(u, v) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({u}, {v})")));
            }
            g.add_edge_unchecked(u, v);
        }
        Ok(g)
    }

    /// Adds an edge without checking for duplicates.
    pub(crate) fn add_edge_unchecked(&mut self, u: usize, v: usize) {
        debug_assert_ne!(u, v);
        self.adj[u].push(v);
        self.adj[v].push(u);
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[AgentType] {
        &self.types
    }

    pub fn ty(&self, v: usize) -> AgentType {
        self.types[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].contains(&b)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Builds the realized graph over `parties` under `model`.
    pub fn realize(model: &CompatModel, parties: &[Participant], stream_seed: u64) -> Self {
        let mut g = CompatibilityGraph::new(parties.iter().map(|a| a.ty).collect());
        let groups: Vec<Vec<usize>> =
            AgentType::ALL.iter().map(|&t| (0..parties.len()).filter(|&i| parties[i].ty == t).collect()).collect();
        for (a, ga) in groups.iter().enumerate() {
            for (b, gb) in groups.iter().enumerate().skip(a) {
                if model.never_compatible(AgentType::ALL[a], AgentType::ALL[b]) {
                    continue;
                }
                for &i in ga {
                    for &j in gb {
                        if (a != b || i < j) && compatible(model, parties[i], parties[j], stream_seed) {
                            g.add_edge_unchecked(i.min(j), i.max(j));
                        }
                    }
                }
            }
        }
        g
    }

    /// The full pool of a matrix model as a graph.
    pub fn from_matrix(pool: &MatrixPool) -> Self {
        let mut g = CompatibilityGraph::new(pool.labels.clone());
        for i in 0..pool.len() {
            for j in (i + 1)..pool.len() {
                if pool.bit(i, j) {
                    g.add_edge_unchecked(i, j);
                }
            }
        }
        g
    }
}

/// A set of vertex-disjoint pairs, each stored as `(u, v)` with `u < v`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new() -> Self {
        Matching::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<_> = pairs.into_iter().map(|(u, v)| if u < v { (u, v) } else { (v, u) }).collect();
        pairs.sort_unstable();
        Matching { pairs }
    }

    /// From a mate vector (`mate[v] = Some(u)`).
    pub fn from_mates(mate: &[Option<usize>]) -> Self {
        Matching::from_pairs(mate.iter().enumerate().filter_map(|(v, &m)| m.filter(|&u| v < u).map(|u| (v, u))))
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn matched_vertices(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn mates(&self, n: usize) -> Vec<Option<usize>> {
        let mut mate = vec![None; n];
        for &(u, v) in &self.pairs {
            mate[u] = Some(v);
            mate[v] = Some(u);
        }
        mate
    }

    /// Number of matched vertices of type H.
    pub fn hard_count(&self, graph: &CompatibilityGraph) -> usize {
        self.pairs
            .iter()
            .map(|&(u, v)| (graph.ty(u) == AgentType::Hard) as usize + (graph.ty(v) == AgentType::Hard) as usize)
            .sum()
    }

    /// Checks disjointness and that every pair is an edge of `graph`.
    pub fn is_valid_for(&self, graph: &CompatibilityGraph) -> bool {
        let mut seen = vec![false; graph.n()];
        for &(u, v) in &self.pairs {
            if u >= graph.n() || v >= graph.n() || seen[u] || seen[v] || !graph.has_edge(u, v) {
                return false;
            }
            seen[u] = true;
            seen[v] = true;
        }
        true
    }

    /// No edge joins two unmatched vertices.
    pub fn is_maximal_in(&self, graph: &CompatibilityGraph) -> bool {
        let mate = self.mates(graph.n());
        graph.edges().all(|(u, v)| mate[u].is_some() || mate[v].is_some())
    }
}

fn hard_count_for(m: usize, lambda: f64) -> Result<usize> {
    if !lambda.is_finite() || lambda < -1.0 {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be >= -1")));
    }
    Ok(((1.0 + lambda) * m as f64).round() as usize)
}

/// Samples a static pool of `m` E agents and `round((1+λ)m)` H agents.
///
/// E vertices come first (`0..m`), then H vertices. Vertex indices double as
/// agent ids for the compatibility hash. Matrix models draw each vertex's
/// profile uniformly with replacement among rows of the matching label.
pub fn sample_static_pool(m: usize, lambda: f64, model: &CompatModel, seed: u64) -> Result<CompatibilityGraph> {
    model.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let n_hard = hard_count_for(m, lambda)?;
    let mut parties: Vec<Participant> = (0..m)
        .map(|i| Participant::new(AgentType::Easy, i as u64))
        .chain((0..n_hard).map(|i| Participant::new(AgentType::Hard, (m + i) as u64)))
        .collect();
    if let CompatModel::Matrix(pool) = model {
        let mut rng = stream_rng(seed, Stream::Identities);
        for ty in AgentType::ALL {
            let rows = pool.rows_of(ty);
            let wanted = parties.iter().any(|a| a.ty == ty);
            if wanted && rows.is_empty() {
                return Err(Error::InvalidParameter(format!("matrix pool has no {ty} rows")));
            }
            for a in parties.iter_mut().filter(|a| a.ty == ty) {
                a.row = rows[rng.random_range(0..rows.len())];
            }
        }
    }
    Ok(CompatibilityGraph::realize(model, &parties, crate::rng::compat_seed(seed)))
}

/// Fraction of agents covered by a maximum matching.
pub fn smm(graph: &CompatibilityGraph) -> Result<f64> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mu = matching::max_cardinality_matching(graph);
    Ok(mu.matched_vertices() as f64 / graph.n() as f64)
}

/// Fraction of agents that no matching can cover, i.e. isolated vertices.
pub fn fwp(graph: &CompatibilityGraph) -> Result<f64> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let isolated = (0..graph.n()).filter(|&v| graph.degree(v) == 0).count();
    Ok(isolated as f64 / graph.n() as f64)
}

/// Visits vertices in `order`, matching each unmatched one to its
/// lowest-index unmatched neighbor. The result is a maximal matching.
pub fn sequential_greedy_match(graph: &CompatibilityGraph, order: &[usize]) -> Result<Matching> {
    let n = graph.n();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(Error::InvalidParameter("order is not a permutation of the vertices".into()));
    }
    let mut mate: Vec<Option<usize>> = vec![None; n];
    for &v in order {
        if mate[v].is_some() {
            continue;
        }
        if let Some(u) = graph.neighbors(v).iter().copied().filter(|&u| mate[u].is_none()).min() {
            mate[v] = Some(u);
            mate[u] = Some(v);
        }
    }
    Ok(Matching::from_mates(&mate))
}

/// Reads a pool file.
pub fn load_pool_matrix(path: impl AsRef<Path>) -> Result<CompatModel> {
    let text = fs::read_to_string(path)?;
    Ok(CompatModel::Matrix(MatrixPool::parse(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use AgentType::*;

    fn two(p: f64, q: f64) -> CompatModel {
        CompatModel::TwoType { p, q }
    }

    #[test]
    fn hard_hard_never_compatible() {
        let m = two(0.1, 0.04);
        for seed in 0..100 {
            assert!(!compatible(&m, Participant::new(Hard, 1), Participant::new(Hard, 2), seed));
        }
        let all = two(1.0, 1.0);
        assert!(!compatible(&all, Participant::new(Hard, 1), Participant::new(Hard, 2), 3));
    }

    #[test]
    fn probability_one_edge() {
        let m = two(1.0, 0.0);
        for seed in 0..100 {
            assert!(compatible(&m, Participant::new(Easy, 1), Participant::new(Hard, 2), seed));
            assert!(!compatible(&m, Participant::new(Easy, 1), Participant::new(Easy, 2), seed));
        }
    }

    #[test]
    fn compatible_is_deterministic_and_symmetric() {
        let m = two(0.3, 0.2);
        let mut disagreements = 0;
        for i in 0..100_000u64 {
            let a = Participant::new(if i % 3 == 0 { Hard } else { Easy }, i);
            let b = Participant::new(Easy, i + 17);
            let first = compatible(&m, a, b, 42);
            if first != compatible(&m, a, b, 42) || first != compatible(&m, b, a, 42) {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn empirical_rate_within_three_sigma() {
        for &(prob, ty) in &[(0.1, Hard), (0.04, Easy)] {
            let m = two(0.1, 0.04);
            let n = 100_000u64;
            let hits = (0..n)
                .filter(|&i| compatible(&m, Participant::new(Easy, 2 * i), Participant::new(ty, 2 * i + 1), 5))
                .count();
            let rate = hits as f64 / n as f64;
            let sigma = (prob * (1.0 - prob) / n as f64).sqrt();
            assert!((rate - prob).abs() < 3.0 * sigma, "rate {rate} vs {prob}");
        }
    }

    #[test]
    fn static_pool_complete_minus_hh() {
        let g = sample_static_pool(2, 0.0, &two(1.0, 1.0), 1).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 5);
        assert!(!g.has_edge(2, 3));
    }

    #[test]
    fn static_pool_no_edges() {
        let g = sample_static_pool(1, 2.0, &two(0.0, 0.0), 1).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(fwp(&g).unwrap(), 1.0);
        assert_eq!(smm(&g).unwrap(), 0.0);
    }

    #[test]
    fn static_pool_rejects_bad_parameters() {
        assert!(matches!(sample_static_pool(3, -1.5, &two(0.1, 0.1), 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_static_pool(3, 1.0, &two(1.1, 0.1), 1), Err(Error::InvalidParameter(_))));
        assert!(sample_static_pool(3, 1.0, &CompatModel::Homogeneous { p: -0.1 }, 1).is_err());
    }

    #[test]
    fn static_pool_rounds_hard_count() {
        let g = sample_static_pool(3, 0.5, &two(0.5, 0.5), 1).unwrap();
        // round(4.5) = 5
        assert_eq!(g.types().iter().filter(|&&t| t == Hard).count(), 5);
    }

    #[test]
    fn two_type_pools_have_no_hh_edges() {
        for seed in 0..20 {
            let g = sample_static_pool(30, 1.5, &two(0.7, 0.7), seed).unwrap();
            assert!(g.edges().all(|(u, v)| !(g.ty(u) == Hard && g.ty(v) == Hard)));
        }
    }

    #[test]
    fn smm_small_cases() {
        let edge = CompatibilityGraph::from_edges(vec![Easy, Hard], &[(0, 1)]).unwrap();
        assert_eq!(smm(&edge).unwrap(), 1.0);
        let tri = CompatibilityGraph::from_edges(vec![Easy; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!((smm(&tri).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(smm(&CompatibilityGraph::new(vec![])), Err(Error::EmptyGraph)));
        assert!(matches!(fwp(&CompatibilityGraph::new(vec![])), Err(Error::EmptyGraph)));
    }

    #[test]
    fn fwp_complete_bipartite_is_zero() {
        let types = vec![Easy, Easy, Hard, Hard, Hard];
        let edges: Vec<_> = (0..2).flat_map(|e| (2..5).map(move |h| (e, h))).collect();
        let g = CompatibilityGraph::from_edges(types, &edges).unwrap();
        assert_eq!(fwp(&g).unwrap(), 0.0);
    }

    #[test]
    fn fwp_vertices_are_unmatched_in_smm_matching() {
        for seed in 0..10 {
            let g = sample_static_pool(40, 1.0, &two(0.03, 0.03), seed).unwrap();
            let mate = matching::max_cardinality_matching(&g).mates(g.n());
            for v in 0..g.n() {
                if g.degree(v) == 0 {
                    assert!(mate[v].is_none());
                }
            }
            assert!(fwp(&g).unwrap() <= 1.0 - smm(&g).unwrap() + 1e-12);
        }
    }

    #[test]
    fn sequential_greedy_basics() {
        let full = sample_static_pool(4, 0.0, &CompatModel::Homogeneous { p: 1.0 }, 0).unwrap();
        let g = CompatibilityGraph::from_edges(
            vec![Easy; 4],
            &full.edges().filter(|&(u, v)| u < 4 && v < 4).collect::<Vec<_>>(),
        )
        .unwrap();
        let mu = sequential_greedy_match(&g, &[0, 1, 2, 3]).unwrap();
        assert_eq!(mu.len(), 2);
        let empty = CompatibilityGraph::new(vec![Easy; 4]);
        assert!(sequential_greedy_match(&empty, &[3, 2, 1, 0]).unwrap().is_empty());
        assert!(sequential_greedy_match(&empty, &[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn sequential_greedy_is_maximal() {
        for seed in 0..20 {
            let g = sample_static_pool(25, 0.4, &two(0.1, 0.05), seed).unwrap();
            let order: Vec<usize> = (0..g.n()).rev().collect();
            let mu = sequential_greedy_match(&g, &order).unwrap();
            assert!(mu.is_valid_for(&g));
            assert!(mu.is_maximal_in(&g));
        }
    }

    #[test]
    fn pool_file_roundtrip_and_errors() {
        let text = "2\na,E\nb,H\n0,1\n1,0\n";
        let pool = MatrixPool::parse(text).unwrap();
        assert_eq!(pool.len(), 2);
        assert!(pool.bit(0, 1) && pool.bit(1, 0));
        assert_eq!(MatrixPool::parse(&pool.to_file_string()).unwrap(), pool);

        let diag = "2\na,E\nb,H\n1,1\n1,0\n";
        assert!(matches!(MatrixPool::parse(diag), Err(Error::InvalidDiagonal { i: 0 })));
        let asym = "2\na,E\nb,H\n0,1\n0,0\n";
        assert!(matches!(MatrixPool::parse(asym), Err(Error::AsymmetricMatrix { i: 0, j: 1 })));
        let bad = "2\na,E\nb,X\n0,1\n1,0\n";
        assert!(matches!(MatrixPool::parse(bad), Err(Error::Parse { line: 3, .. })));
        let short = "2\na,E\nb,H\n0,1\n";
        assert!(matches!(MatrixPool::parse(short), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn load_pool_matrix_from_disk() {
        let dir = std::env::temp_dir().join(format!("dynmatch-pool-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pool.csv");
        fs::write(&path, "3\nx,E\ny,E\nz,H\n0,0,1\n0,0,1\n1,1,0\n").unwrap();
        let model = load_pool_matrix(&path).unwrap();
        let CompatModel::Matrix(pool) = &model else { panic!() };
        let g = CompatibilityGraph::from_matrix(pool);
        assert_eq!(g.edge_count(), 2);
        let a = Participant { ty: Easy, id: 10, row: 0 };
        let b = Participant { ty: Hard, id: 11, row: 2 };
        assert!(compatible(&model, a, b, 0));
        fs::remove_dir_all(dir).ok();
    }
}
