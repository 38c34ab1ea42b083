#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric similarity matrix with unit diagonal and entries in (0, 1).
pub fn random_similarity(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = rng.random_range(0.01..0.99);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Well-conditioned random SPD matrix `AAᵀ/n + δI`.
pub fn random_spd(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2) * scale
}

pub fn random_vector(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// Maximum cardinality search order.
fn mcs_order(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut weight = vec![0usize; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| !done[v]).max_by_key(|&v| (weight[v], std::cmp::Reverse(v))).unwrap();
        done[v] = true;
        order.push(v);
        for u in 0..n {
            if adj[v][u] && !done[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Chordality test: the reverse of an MCS order is a perfect elimination
/// ordering iff the graph is chordal.
pub fn is_chordal(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let order = mcs_order(&adj);
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    // For each vertex, its neighbours visited earlier must form a clique.
    for &v in &order {
        let earlier: Vec<usize> = (0..n).filter(|&u| adj[v][u] && pos[u] < pos[v]).collect();
        for (i, &a) in earlier.iter().enumerate() {
            for &b in &earlier[i + 1..] {
                if !adj[a][b] {
                    return false;
                }
            }
        }
    }
    true
}
