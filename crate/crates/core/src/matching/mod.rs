//! Exact matching on general graphs.
//!
//! * [`max_cardinality_matching`]: Edmonds' blossom algorithm.
//! * [`max_matching_h_priority`]: among maximum-cardinality matchings, one
//!   covering the most H vertices. Solved in two exact phases: a maximum
//!   matching, then augmentations that trade a covered E vertex for an
//!   uncovered H vertex (pendant-vertex reduction) until none remain.
//! * [`max_matching_h_priority_weighted`]: the same objective through the
//!   weighted blossom solver with weights `2(n+1) + #H endpoints`.
//! * [`brute_force_matching`]: exhaustive oracle for small graphs.

mod cardinality;
mod weighted;

use rand::seq::SliceRandom;
use rand::Rng;

pub use weighted::{max_weight_mates, WeightedGraph};

use crate::compat::{AgentType, CompatibilityGraph, Matching};
use crate::error::{Error, Result};
use cardinality::{to_option_mates, Edmonds, UNMATCHED};

/// Largest graph accepted by [`brute_force_matching`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 16;

/// Lexicographic objective for the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Cardinality,
    CardinalityThenHard,
}

fn adjacency(graph: &CompatibilityGraph) -> Vec<Vec<usize>> {
    (0..graph.n()).map(|v| graph.neighbors(v).to_vec()).collect()
}

fn greedy_seed(adj: &[Vec<usize>], types: &[AgentType]) -> Vec<usize> {
    let n = adj.len();
    let mut mate = vec![UNMATCHED; n];
    // E vertices grab H partners first, then everything grabs what is left.
    for v in 0..n {
        if types[v] != AgentType::Easy || mate[v] != UNMATCHED {
            continue;
        }
        if let Some(&u) = adj[v].iter().find(|&&u| mate[u] == UNMATCHED && types[u] == AgentType::Hard) {
            mate[v] = u;
            mate[u] = v;
        }
    }
    for v in 0..n {
        if mate[v] != UNMATCHED {
            continue;
        }
        if let Some(&u) = adj[v].iter().find(|&&u| mate[u] == UNMATCHED) {
            mate[v] = u;
            mate[u] = v;
        }
    }
    mate
}

fn max_cardinality_mates(adj: &[Vec<usize>], types: &[AgentType]) -> Vec<usize> {
    let mut solver = Edmonds::new(adj, greedy_seed(adj, types));
    solver.run(|_| true);
    solver.mate
}

/// Exact maximum-cardinality matching on a general graph.
pub fn max_cardinality_matching(graph: &CompatibilityGraph) -> Matching {
    let adj = adjacency(graph);
    let mate = max_cardinality_mates(&adj, graph.types());
    let mu = Matching::from_mates(&to_option_mates(&mate));
    debug_assert!(mu.is_valid_for(graph));
    mu
}

fn h_priority_mates(adj: &[Vec<usize>], types: &[AgentType]) -> Vec<usize> {
    let n = adj.len();
    let mut mate = max_cardinality_mates(adj, types);

    let free_hard = (0..n).any(|v| mate[v] == UNMATCHED && types[v] == AgentType::Hard);
    let covered_easy: Vec<usize> = (0..n).filter(|&v| mate[v] != UNMATCHED && types[v] == AgentType::Easy).collect();
    if !free_hard || covered_easy.is_empty() {
        return mate;
    }

    // Each covered E vertex gets a pendant vertex. An augmenting path from an
    // uncovered H vertex to a pendant ends with the pendant's E vertex losing
    // its real partner, so cardinality stays fixed and the H count grows by one.
    let mut extended = adj.to_vec();
    for (k, &e) in covered_easy.iter().enumerate() {
        extended[e].push(n + k);
        extended.push(vec![e]);
    }
    mate.resize(n + covered_easy.len(), UNMATCHED);
    let mut solver = Edmonds::new(&extended, mate);
    solver.run(|v| v < n && types[v] == AgentType::Hard);
    let mut mate = solver.mate;
    mate.truncate(n);
    for m in mate.iter_mut() {
        if *m != UNMATCHED && *m >= n {
            *m = UNMATCHED;
        }
    }
    mate
}

/// Maximum-cardinality matching covering the most H vertices.
///
/// Deterministic given the graph's vertex and adjacency order; see
/// [`max_matching_h_priority_shuffled`] for randomized tie-breaking.
pub fn max_matching_h_priority(graph: &CompatibilityGraph) -> Matching {
    let adj = adjacency(graph);
    let mate = h_priority_mates(&adj, graph.types());
    let mu = Matching::from_mates(&to_option_mates(&mate));
    debug_assert!(mu.is_valid_for(graph));
    mu
}

/// As [`max_matching_h_priority`], but ties among optimal matchings are
/// broken by relabelling vertices and shuffling adjacency lists with `rng`.
pub fn max_matching_h_priority_shuffled<R: Rng + ?Sized>(graph: &CompatibilityGraph, rng: &mut R) -> Matching {
    let n = graph.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut position = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let types: Vec<AgentType> = order.iter().map(|&old| graph.ty(old)).collect();
    let adj: Vec<Vec<usize>> = order
        .iter()
        .map(|&old| {
            let mut nb: Vec<usize> = graph.neighbors(old).iter().map(|&u| position[u]).collect();
            nb.shuffle(rng);
            nb
        })
        .collect();
    let mate = h_priority_mates(&adj, &types);
    let mu = Matching::from_pairs(
        (0..n).filter(|&v| mate[v] != UNMATCHED && v < mate[v]).map(|v| (order[v], order[mate[v]])),
    );
    debug_assert!(mu.is_valid_for(graph));
    mu
}

/// The same objective as [`max_matching_h_priority`] via maximum-weight
/// matching with `w(e) = 2(n+1) + #H endpoints of e`.
///
/// A matching `M` weighs `2(n+1)|M| + H(M)` with `H(M) ≤ n`, so one extra
/// pair always outweighs any H gain.
pub fn max_matching_h_priority_weighted(graph: &CompatibilityGraph) -> Matching {
    let n = graph.n();
    let base = 2 * (n as i64 + 1);
    let mut wg = WeightedGraph::new(n);
    for (u, v) in graph.edges() {
        let h = (graph.ty(u) == AgentType::Hard) as i64 + (graph.ty(v) == AgentType::Hard) as i64;
        wg.add_edge(u, v, base + h);
    }
    let mu = Matching::from_mates(&max_weight_mates(&wg, false));
    debug_assert!(mu.is_valid_for(graph));
    mu
}

/// Maximum-weight matching on an explicitly weighted graph.
pub fn max_weight_matching(graph: &WeightedGraph) -> Matching {
    Matching::from_mates(&max_weight_mates(graph, false))
}

/// Exhaustive search over all matchings (`n ≤ 16`).
pub fn brute_force_matching(graph: &CompatibilityGraph, objective: Objective) -> Result<Matching> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(Error::TooLarge { n, max: BRUTE_FORCE_MAX_VERTICES });
    }
    let score = |mate: &[usize]| -> (usize, usize) {
        let card = mate.iter().filter(|&&m| m != UNMATCHED).count() / 2;
        let hard = match objective {
            Objective::Cardinality => 0,
            Objective::CardinalityThenHard => {
                (0..n).filter(|&v| mate[v] != UNMATCHED && graph.ty(v) == AgentType::Hard).count()
            }
        };
        (card, hard)
    };

    fn search(
        graph: &CompatibilityGraph,
        v: usize,
        mate: &mut Vec<usize>,
        best: &mut (Option<(usize, usize)>, Vec<usize>),
        score: &dyn Fn(&[usize]) -> (usize, usize),
    ) {
        let n = graph.n();
        let v = (v..n).find(|&x| mate[x] == UNMATCHED);
        let Some(v) = v else {
            let s = score(mate);
            if best.0.is_none_or(|b| s > b) {
                *best = (Some(s), mate.clone());
            }
            return;
        };
        // leave v single
        mate[v] = v;
        search(graph, v + 1, mate, best, score);
        mate[v] = UNMATCHED;
        for &u in graph.neighbors(v) {
            if u > v && mate[u] == UNMATCHED {
                mate[v] = u;
                mate[u] = v;
                search(graph, v + 1, mate, best, score);
                mate[v] = UNMATCHED;
                mate[u] = UNMATCHED;
            }
        }
    }

    // Vertices marked as their own mate are "skipped"; clear before scoring.
    let wrapped = |mate: &[usize]| {
        let cleaned: Vec<usize> = mate.iter().enumerate().map(|(i, &m)| if m == i { UNMATCHED } else { m }).collect();
        score(&cleaned)
    };
    let mut best = (None, vec![UNMATCHED; n]);
    let mut mate = vec![UNMATCHED; n];
    search(graph, 0, &mut mate, &mut best, &wrapped);
    let cleaned: Vec<Option<usize>> =
        best.1.iter().enumerate().map(|(i, &m)| if m == i || m == UNMATCHED { None } else { Some(m) }).collect();
    Ok(Matching::from_mates(&cleaned))
}

/// `(cardinality, matched H count)` of a matching.
pub fn lexicographic_value(graph: &CompatibilityGraph, mu: &Matching) -> (usize, usize) {
    (mu.len(), mu.hard_count(graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{sample_static_pool, CompatModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use AgentType::*;

    fn cycle(n: usize) -> CompatibilityGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        CompatibilityGraph::from_edges(vec![Easy; n], &edges).unwrap()
    }

    #[test]
    fn path_and_odd_cycle() {
        let p3 = CompatibilityGraph::from_edges(vec![Easy; 3], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(max_cardinality_matching(&p3).len(), 1);
        assert_eq!(max_cardinality_matching(&cycle(5)).len(), 2);
        assert_eq!(max_cardinality_matching(&CompatibilityGraph::new(vec![Easy; 4])).len(), 0);
    }

    #[test]
    fn greedy_seed_trap_needs_blossom() {
        // Two triangles joined through a path; a bad greedy start forces
        // augmentation through an odd cycle.
        let g = CompatibilityGraph::from_edges(
            vec![Easy; 8],
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 6), (6, 4), (6, 7)],
        )
        .unwrap();
        assert_eq!(max_cardinality_matching(&g).len(), 4);
    }

    #[test]
    fn h_priority_forced_choice() {
        // E1=0, E2=1, H1=2
        let g = CompatibilityGraph::from_edges(vec![Easy, Easy, Hard], &[(0, 1), (0, 2)]).unwrap();
        for mu in [max_matching_h_priority(&g), max_matching_h_priority_weighted(&g)] {
            assert_eq!(mu.pairs(), &[(0, 2)]);
        }
    }

    #[test]
    fn h_priority_on_easy_only_graph() {
        let g = cycle(7);
        assert_eq!(max_matching_h_priority(&g).len(), max_cardinality_matching(&g).len());
        assert_eq!(max_matching_h_priority(&g).hard_count(&g), 0);
    }

    #[test]
    fn h_priority_swaps_through_alternating_path() {
        // Max matching {0-1, 2-3}; H vertex 4 hangs off E vertex 2 whose
        // partner is E. Optimal trades 3 for 4.
        let g = CompatibilityGraph::from_edges(vec![Easy, Easy, Easy, Easy, Hard], &[(0, 1), (1, 2), (2, 3), (2, 4)])
            .unwrap();
        let mu = max_matching_h_priority(&g);
        assert_eq!(lexicographic_value(&g, &mu), (2, 1));
    }

    #[test]
    fn solvers_agree_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..300 {
            let g = sample_static_pool(4, 0.5, &CompatModel::TwoType { p: 0.5, q: 0.4 }, seed).unwrap();
            let oracle = brute_force_matching(&g, Objective::CardinalityThenHard).unwrap();
            let want = lexicographic_value(&g, &oracle);
            assert_eq!(lexicographic_value(&g, &max_matching_h_priority(&g)), want, "seed {seed}");
            assert_eq!(lexicographic_value(&g, &max_matching_h_priority_weighted(&g)), want, "seed {seed}");
            assert_eq!(lexicographic_value(&g, &max_matching_h_priority_shuffled(&g, &mut rng)), want);
            let card = brute_force_matching(&g, Objective::Cardinality).unwrap();
            assert_eq!(max_cardinality_matching(&g).len(), card.len());
        }
    }

    #[test]
    fn brute_force_limits() {
        assert!(matches!(
            brute_force_matching(&CompatibilityGraph::new(vec![Easy; 17]), Objective::Cardinality),
            Err(Error::TooLarge { n: 17, .. })
        ));
        let single = CompatibilityGraph::from_edges(vec![Easy, Hard], &[(0, 1)]).unwrap();
        assert_eq!(brute_force_matching(&single, Objective::Cardinality).unwrap().pairs(), &[(0, 1)]);
        assert_eq!(brute_force_matching(&cycle(5), Objective::Cardinality).unwrap().len(), 2);
    }

    #[test]
    fn weighted_matching_prefers_heavier() {
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, 5);
        g.add_edge(1, 2, 11);
        g.add_edge(2, 3, 5);
        assert_eq!(max_weight_matching(&g).pairs(), &[(1, 2)]);
    }
}
