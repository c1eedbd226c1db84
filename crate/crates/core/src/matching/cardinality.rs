//! Edmonds' augmenting-path algorithm for maximum-cardinality matching.
//!
//! Alternating forests are grown from a chosen set of free roots; odd cycles
//! are shrunk by relabelling their base. Any free vertex that is not a root
//! acts as a target. Each stage augments along one path and the search
//! restarts, so the cost is O(augmentations · (V + E + blossoms · V)).

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

pub(crate) struct Edmonds<'a> {
    adj: &'a [Vec<usize>],
    pub(crate) mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    root: Vec<usize>,
    even: Vec<bool>,
    in_blossom: Vec<bool>,
    lca_mark: Vec<u32>,
    lca_stamp: u32,
    queue: VecDeque<usize>,
}

impl<'a> Edmonds<'a> {
    pub(crate) fn new(adj: &'a [Vec<usize>], mate: Vec<usize>) -> Self {
        let n = adj.len();
        debug_assert_eq!(mate.len(), n);
        Edmonds {
            adj,
            mate,
            parent: vec![NONE; n],
            base: (0..n).collect(),
            root: vec![NONE; n],
            even: vec![false; n],
            in_blossom: vec![false; n],
            lca_mark: vec![0; n],
            lca_stamp: 0,
            queue: VecDeque::new(),
        }
    }

    /// Augments until no path from a root (a free vertex accepted by
    /// `is_root`) reaches another free vertex. Returns the number of
    /// augmentations.
    pub(crate) fn run(&mut self, is_root: impl Fn(usize) -> bool) -> usize {
        let mut count = 0;
        while self.stage(&is_root) {
            count += 1;
        }
        count
    }

    fn stage(&mut self, is_root: &impl Fn(usize) -> bool) -> bool {
        let n = self.adj.len();
        self.parent.fill(NONE);
        self.root.fill(NONE);
        self.even.fill(false);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.queue.clear();
        for v in 0..n {
            if self.mate[v] == NONE && is_root(v) {
                self.even[v] = true;
                self.root[v] = v;
                self.queue.push_back(v);
            }
        }
        while let Some(v) = self.queue.pop_front() {
            for &to in &self.adj[v] {
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if self.even[to] {
                    if self.root[to] == self.root[v] {
                        self.shrink(v, to);
                    } else {
                        self.flip(v);
                        self.flip(to);
                        self.mate[v] = to;
                        self.mate[to] = v;
                        return true;
                    }
                } else if self.parent[to] == NONE {
                    if self.mate[to] == NONE {
                        self.flip(v);
                        self.mate[v] = to;
                        self.mate[to] = v;
                        return true;
                    }
                    self.parent[to] = v;
                    let next = self.mate[to];
                    self.even[next] = true;
                    self.root[next] = self.root[v];
                    self.queue.push_back(next);
                }
            }
        }
        false
    }

    /// Re-matches the tree path from even vertex `s` to its root, leaving
    /// `s` ready to take a new partner.
    fn flip(&mut self, s: usize) {
        let mut t = self.mate[s];
        while t != NONE {
            let u = self.parent[t];
            let next = self.mate[u];
            self.mate[t] = u;
            self.mate[u] = t;
            t = next;
        }
    }

    fn lca(&mut self, a: usize, b: usize) -> usize {
        self.lca_stamp = self.lca_stamp.wrapping_add(1);
        if self.lca_stamp == 0 {
            self.lca_mark.fill(0);
            self.lca_stamp = 1;
        }
        let stamp = self.lca_stamp;
        let mut a = a;
        loop {
            a = self.base[a];
            self.lca_mark[a] = stamp;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        let mut b = b;
        loop {
            b = self.base[b];
            if self.lca_mark[b] == stamp {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn shrink(&mut self, v: usize, to: usize) {
        let cur = self.lca(v, to);
        self.in_blossom.fill(false);
        self.mark_path(v, cur, to);
        self.mark_path(to, cur, v);
        let tree = self.root[v];
        for i in 0..self.adj.len() {
            if self.in_blossom[self.base[i]] {
                self.base[i] = cur;
                if !self.even[i] {
                    self.even[i] = true;
                    self.root[i] = tree;
                    self.queue.push_back(i);
                }
            }
        }
    }
}

pub(crate) fn to_option_mates(mate: &[usize]) -> Vec<Option<usize>> {
    mate.iter().map(|&m| if m == NONE { None } else { Some(m) }).collect()
}

pub(crate) const UNMATCHED: usize = NONE;
