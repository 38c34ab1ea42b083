//! Triangulated maximally filtered graph (TMFG) and the local/global (LoGo)
//! sparse inverse covariance built on its cliques and separators.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{chol_log_det, cholesky_with_ridge, is_symmetric, submatrix, symmetrize};

/// Chordal planar graph produced by [`build_tmfg`].
///
/// Cliques and separators are kept in insertion order: clique `i + 1` was
/// attached to the graph through separator `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteringNetwork {
    pub n: usize,
    /// Undirected edges `(u, v)` with `u < v`, in insertion order.
    pub edges: Vec<(usize, usize)>,
    pub cliques: Vec<[usize; 4]>,
    pub separators: Vec<[usize; 3]>,
}

impl FilteringNetwork {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.contains(&(a, b))
    }

    /// Write `u,v,weight` lines, weights taken from `similarity`.
    pub fn write_edge_list(&self, similarity: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("u,v,weight\n");
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u},{v},{:?}\n", similarity[(u, v)]));
        }
        crate::data::write_file(path.as_ref(), out.as_bytes())
    }
}

fn sorted<const N: usize>(mut a: [usize; N]) -> [usize; N] {
    a.sort_unstable();
    a
}

/// Greedy TMFG construction.
///
/// Seeds with the 4-clique of largest total similarity, then repeatedly
/// inserts the (vertex, triangular face) pair with the largest sum of the three
/// new edge weights, splitting that face into three. Ties go to the lowest
/// vertex, then the oldest face.
pub fn build_tmfg(similarity: &DMatrix<f64>) -> Result<FilteringNetwork> {
    let n = similarity.nrows();
    if !similarity.is_square() {
        return Err(Error::Validation("similarity matrix must be square".into()));
    }
    if n < 4 {
        return Err(Error::Validation(format!("TMFG needs at least 4 vertices, got {n}")));
    }
    if !similarity.iter().all(|v| v.is_finite()) {
        return Err(Error::Validation("similarity matrix has non-finite entries".into()));
    }
    if !is_symmetric(similarity, 1e-10) {
        return Err(Error::Validation("similarity matrix is not symmetric".into()));
    }
    let w = |a: usize, b: usize| similarity[(a, b)];

    let mut best = f64::NEG_INFINITY;
    let mut seed = [0, 1, 2, 3];
    for a in 0..n {
        for b in (a + 1)..n {
            let ab = w(a, b);
            for c in (b + 1)..n {
                let abc = ab + w(a, c) + w(b, c);
                for d in (c + 1)..n {
                    let s = abc + w(a, d) + w(b, d) + w(c, d);
                    if s > best {
                        best = s;
                        seed = [a, b, c, d];
                    }
                }
            }
        }
    }

    let [a, b, c, d] = seed;
    let mut edges = vec![(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)];
    let mut cliques = vec![seed];
    let mut separators = Vec::with_capacity(n - 4);
    let mut faces: Vec<[usize; 3]> = vec![[a, b, c], [a, b, d], [a, c, d], [b, c, d]];
    let mut alive = vec![true; 4];
    let mut inserted = vec![false; n];
    for v in seed {
        inserted[v] = true;
    }

    for _ in 4..n {
        let mut best = f64::NEG_INFINITY;
        let mut choice = (usize::MAX, usize::MAX);
        for v in (0..n).filter(|&v| !inserted[v]) {
            for (fi, f) in faces.iter().enumerate() {
                if !alive[fi] {
                    continue;
                }
                let gain = w(v, f[0]) + w(v, f[1]) + w(v, f[2]);
                if gain > best {
                    best = gain;
                    choice = (v, fi);
                }
            }
        }
        let (v, fi) = choice;
        let [x, y, z] = faces[fi];
        alive[fi] = false;
        inserted[v] = true;
        for u in [x, y, z] {
            edges.push((u.min(v), u.max(v)));
        }
        cliques.push(sorted([v, x, y, z]));
        separators.push([x, y, z]);
        faces.extend([sorted([v, x, y]), sorted([v, x, z]), sorted([v, y, z])]);
        alive.extend([true; 3]);
    }

    Ok(FilteringNetwork {
        n,
        edges,
        cliques,
        separators,
    })
}

/// Sparse symmetric precision supported on the diagonal and the network edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePrecision {
    pub n: usize,
    pub diag: Vec<f64>,
    /// `(u, v, value)` with `u < v`, one per network edge.
    pub off_diag: Vec<(usize, usize, f64)>,
    /// Number of clique/separator blocks that needed a ridge before inversion.
    pub ridged_blocks: usize,
}

impl SparsePrecision {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            diag: vec![1.0; n],
            off_diag: Vec::new(),
            ridged_blocks: 0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for &(u, v, x) in &self.off_diag {
            m[(u, v)] = x;
            m[(v, u)] = x;
        }
        m
    }

    /// `xᵀ J x` using only the stored entries.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s: f64 = self.diag.iter().zip(x).map(|(d, v)| d * v * v).sum();
        for &(u, v, j) in &self.off_diag {
            s += 2.0 * j * x[u] * x[v];
        }
        s
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            diag: self.diag.iter().map(|d| d * factor).collect(),
            off_diag: self.off_diag.iter().map(|&(u, v, x)| (u, v, x * factor)).collect(),
            ridged_blocks: self.ridged_blocks,
        }
    }
}

struct LogoParts {
    dense: DMatrix<f64>,
    log_det: f64,
    ridged: usize,
}

fn logo_parts(cov: &DMatrix<f64>, net: &FilteringNetwork) -> Result<LogoParts> {
    let n = cov.nrows();
    if !cov.is_square() || n != net.n {
        return Err(Error::Validation(format!(
            "covariance is {}x{}, network has {} vertices",
            cov.nrows(),
            cov.ncols(),
            net.n
        )));
    }
    let mut j = DMatrix::zeros(n, n);
    let mut log_det_cov = 0.0;
    let mut ridged = 0;
    let mut add_block = |idx: &[usize], sign: f64, name: String| -> Result<()> {
        let block = submatrix(cov, idx);
        let (ch, r) = cholesky_with_ridge(&block, &name)?;
        ridged += usize::from(r);
        log_det_cov += sign * chol_log_det(&ch);
        let inv = ch.inverse();
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                j[(ia, ib)] += sign * inv[(a, b)];
            }
        }
        Ok(())
    };
    for (i, c) in net.cliques.iter().enumerate() {
        add_block(c, 1.0, format!("clique {i} {c:?}"))?;
    }
    for (i, s) in net.separators.iter().enumerate() {
        add_block(s, -1.0, format!("separator {i} {s:?}"))?;
    }
    symmetrize(&mut j);
    Ok(LogoParts {
        dense: j,
        log_det: -log_det_cov,
        ridged,
    })
}

fn sparsify(dense: &DMatrix<f64>, net: &FilteringNetwork, ridged: usize) -> SparsePrecision {
    let mut off_diag: Vec<(usize, usize, f64)> =
        net.edges.iter().map(|&(u, v)| (u, v, dense[(u, v)])).collect();
    off_diag.sort_by_key(|&(u, v, _)| (u, v));
    SparsePrecision {
        n: net.n,
        diag: dense.diagonal().iter().copied().collect(),
        off_diag,
        ridged_blocks: ridged,
    }
}

/// LoGo estimate: the sum of inverted 4-clique covariance blocks minus the sum
/// of inverted 3-separator blocks, each embedded at its vertices.
pub fn logo_precision(cov: &DMatrix<f64>, net: &FilteringNetwork) -> Result<SparsePrecision> {
    let parts = logo_parts(cov, net)?;
    Ok(sparsify(&parts.dense, net, parts.ridged))
}

/// `ln |J|` of the LoGo precision from block determinants:
/// `-(Σ_cliques ln det S_c - Σ_separators ln det S_s)`.
pub fn sparse_log_det(j: &SparsePrecision, net: &FilteringNetwork, cov: &DMatrix<f64>) -> Result<f64> {
    if j.n != net.n {
        return Err(Error::Validation("precision and network sizes differ".into()));
    }
    Ok(logo_parts(cov, net)?.log_det)
}

/// Precision and its log-determinant in one pass over the blocks.
pub fn logo_estimate(cov: &DMatrix<f64>, net: &FilteringNetwork) -> Result<(SparsePrecision, f64)> {
    let parts = logo_parts(cov, net)?;
    Ok((sparsify(&parts.dense, net, parts.ridged), parts.log_det))
}
