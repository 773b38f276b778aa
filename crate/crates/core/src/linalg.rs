//! Reverse Cuthill–McKee ordering and envelope (skyline) Cholesky.
//!
//! The KKT systems of the optimizer reduce to symmetric positive definite
//! matrices whose sparsity follows the mesh 1-skeleton. After RCM ordering
//! their envelope is `O(√n)` wide on planar meshes, so a profile
//! factorization is both simple and fast.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Reverse Cuthill–McKee order of a graph. Returns `position[v]`.
pub(crate) fn rcm_positions(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree(v), v))
            .unwrap();
        let start = pseudo_peripheral(adj, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }

    let mut position = vec![0; n];
    for (k, &v) in order.iter().rev().enumerate() {
        position[v] = k;
    }
    position
}

/// Last BFS level's minimum-degree vertex, iterated until eccentricity
/// stops growing.
fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut root = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, last_level) = bfs_levels(adj, root);
        if depth <= best_depth && root != seed {
            break;
        }
        best_depth = depth;
        let candidate = last_level
            .into_iter()
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(root);
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = depth + 1;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Lower-triangular profile storage; row `i` keeps columns `first[i]..=i`.
#[derive(Debug, Clone)]
pub(crate) struct EnvelopeMatrix {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeMatrix {
    pub(crate) fn new(first: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        Self {
            first,
            offset,
            data: vec![0.0; total],
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.first.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// Add `v` to the symmetric entry `(i, j)`.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(c >= self.first[r], "entry ({r}, {c}) outside envelope");
        self.data[self.offset[r] + c - self.first[r]] += v;
    }

    /// Replace row and column `i` by the identity.
    pub(crate) fn pin(&mut self, i: usize) {
        let n = self.dim();
        let (f, o) = (self.first[i], self.offset[i]);
        for k in f..i {
            self.data[o + k - f] = 0.0;
        }
        self.data[o + i - f] = 1.0;
        for r in i + 1..n {
            if self.first[r] <= i {
                let idx = self.offset[r] + i - self.first[r];
                self.data[idx] = 0.0;
            }
        }
    }

    /// In-place Cholesky `A = L Lᵀ`.
    pub(crate) fn factor(&mut self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..=i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let k0 = fi.max(fj);
                let mut s = self.data[oi + j - fi];
                if k0 < j {
                    let li = &self.data[oi + k0 - fi..oi + j - fi];
                    let lj = &self.data[oj + k0 - fj..oj + j - fj];
                    s -= li.iter().zip(lj).map(|(a, b)| a * b).sum::<f64>();
                }
                if j < i {
                    let djj = self.data[oj + j - fj];
                    self.data[oi + j - fi] = s / djj;
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::LinearSolve(format!(
                            "matrix not positive definite at pivot {i} ({s:e})"
                        )));
                    }
                    self.data[oi + i - fi] = s.sqrt();
                }
            }
        }
        Ok(())
    }

    /// Solve `L Lᵀ x = b` in place after [`EnvelopeMatrix::factor`].
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let s: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            b[i] /= row[i - fi];
            let xi = b[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                b[k] -= l * xi;
            }
        }
    }
}
