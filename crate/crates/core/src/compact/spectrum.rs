//! Low Laplace spectrum of an embedded mesh: cotangent stiffness, lumped
//! mass, and shift-invert block subspace iteration on
//! `A = M^(-1/2) L M^(-1/2)` with an envelope Cholesky factor of `L + tau M`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::EmbeddedMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumOptions {
    /// Number of eigenvalues wanted, counting the zero mode.
    pub k: usize,
    /// Extra block vectors beyond `k`.
    pub guard: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { k: 6, guard: 10, tol: 1e-9, max_iterations: 500, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Smallest eigenvalue above `1e-8`.
    pub lambda1: f64,
    pub low_eigs: Vec<f64>,
    /// Eigenvalues within relative `1e-2` of `lambda1`.
    pub multiplicity_estimate: usize,
    pub iterations: usize,
    /// Largest relative residual among the wanted pairs.
    pub max_residual: f64,
    /// Coefficient of variation of the ground-state eigenvector.
    pub ground_state_cv: f64,
    pub shift: f64,
}

/// Symmetric sparse matrix in adjacency form.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub diag: Vec<f64>,
    /// Sorted `(j, a_ij)` with `j != i`.
    pub off: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.diag[i] * x[i] + self.off[i].iter().map(|(j, a)| a * x[*j]).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, a) in &self.off[i] {
                m[(i, j)] = a;
            }
        }
        m
    }
}

/// Cotangent Laplacian from intrinsic edge lengths:
/// `L_ij = -(cot a + cot b) / 2`, `L_ii = -sum_j L_ij`, with
/// `cot = (a^2 + b^2 - c^2) / 4A` at the corner opposite side `c`.
pub fn cotangent_stiffness(em: &EmbeddedMesh) -> Result<SparseSym> {
    let mesh = &em.base;
    let mut w = vec![0.0; mesh.edges.len()];
    for (t, te) in mesh.tri_edges.iter().enumerate() {
        let l = em.tri_lengths(t);
        let area = em.tri_area[t];
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { tri: t });
        }
        for c in 0..3 {
            let (a, b) = (l[(c + 1) % 3], l[(c + 2) % 3]);
            w[te[c]] += 0.5 * (a * a + b * b - l[c] * l[c]) / (4.0 * area);
        }
    }
    let n = mesh.vertices.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![Vec::new(); n];
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        off[a].push((b, -w[e]));
        off[b].push((a, -w[e]));
        diag[a] += w[e];
        diag[b] += w[e];
    }
    for row in &mut off {
        row.sort_by_key(|(j, _)| *j);
    }
    Ok(SparseSym { diag, off })
}

/// Reverse Cuthill-McKee ordering: `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].len();
    let bfs_last = |start: usize| -> (usize, usize) {
        let mut depth = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        depth[start] = 0;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &w in &adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (last, depth[last])
    };
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    while order.len() < n {
        // pseudo-peripheral start in the next component
        let first = (0..n).filter(|&v| !seen[v]).min_by_key(|&v| (degree(v), v)).expect("unvisited vertex");
        let (mut start, mut ecc) = (first, 0);
        for _ in 0..4 {
            let (far, d) = bfs_last(start);
            if d <= ecc {
                break;
            }
            start = far;
            ecc = d;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Row-envelope Cholesky factor `L L^T` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a` (already permuted); row `i` stores columns `first[i]..=i`.
    pub fn factor(a: &SparseSym) -> Result<Self> {
        let n = a.n();
        let first: Vec<usize> = (0..n)
            .map(|i| a.off[i].iter().map(|(j, _)| *j).filter(|&j| j < i).min().unwrap_or(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut data = vec![0.0; total];
        for i in 0..n {
            data[start[i] + i - first[i]] = a.diag[i];
            for &(j, v) in &a.off[i] {
                if j < i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i], start[j]);
                let dot: f64 = (lo..j).map(|k| data[ri + k - fi] * data[rj + k - fj]).sum();
                let aij = data[ri + j - fi] - dot;
                if j < i {
                    data[ri + j - fi] = aij / data[rj + j - fj];
                } else {
                    if !(aij > 0.0) {
                        return Err(Error::SolverNoConvergence { iterations: 0, residuals: vec![aij] });
                    }
                    data[ri + i - fi] = aij.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { first, start, data })
    }

    pub fn stored(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let (fi, ri) = (self.first[i], self.start[i]);
            let s: f64 = (fi..i).map(|k| self.data[ri + k - fi] * y[k]).sum();
            y[i] = (y[i] - s) / self.data[ri + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, ri) = (self.first[i], self.start[i]);
            y[i] /= self.data[ri + i - fi];
            let xi = y[i];
            for k in fi..i {
                y[k] -= self.data[ri + k - fi] * xi;
            }
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt, two passes.
fn orthonormalize(block: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for j in 0..block.len() {
            let (done, rest) = block.split_at_mut(j);
            let v = &mut rest[0];
            for q in done.iter() {
                let c = dot(q, v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(v, v).sqrt();
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
}

/// The `k` smallest eigenvalues of `L x = lambda M x`.
pub fn first_eigenvalue(em: &EmbeddedMesh, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    if opts.k < 2 {
        return Err(Error::BadParameter(format!("k = {} must be at least 2", opts.k)));
    }
    let stiffness = cotangent_stiffness(em)?;
    let n = stiffness.n();
    let p = (opts.k + opts.guard).min(n);
    let mass = &em.vertex_mass;
    let shift = 4.0 * PI / em.area();

    let perm = reverse_cuthill_mckee(&em.base.adjacency());
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let shifted = SparseSym {
        diag: perm.iter().map(|&o| stiffness.diag[o] + shift * mass[o]).collect(),
        off: perm
            .iter()
            .map(|&o| {
                let mut row: Vec<(usize, f64)> = stiffness.off[o].iter().map(|&(j, a)| (inv[j], a)).collect();
                row.sort_by_key(|(j, _)| *j);
                row
            })
            .collect(),
    };
    let chol = EnvelopeCholesky::factor(&shifted)?;
    let sqrt_m: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    // (A + tau)^-1 = M^1/2 (L + tau M)^-1 M^1/2, in original vertex order
    let apply = |x: &[f64]| -> Vec<f64> {
        let b: Vec<f64> = perm.iter().map(|&o| sqrt_m[o] * x[o]).collect();
        let y = chol.solve(&b);
        (0..n).map(|o| sqrt_m[o] * y[inv[o]]).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut x);

    let mut residuals = vec![f64::INFINITY; opts.k];
    for it in 1..=opts.max_iterations {
        let z: Vec<Vec<f64>> = x.iter().map(|v| apply(v)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&x[i], &z[j]) + dot(&x[j], &z[i])));
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mu: Vec<f64> = idx.iter().map(|&c| eig.eigenvalues[c]).collect();
        let combine = |basis: &[Vec<f64>], c: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (r, v) in basis.iter().enumerate() {
                let coef = eig.eigenvectors[(r, c)];
                out.iter_mut().zip(v).for_each(|(o, vi)| *o += coef * vi);
            }
            out
        };
        let ritz: Vec<Vec<f64>> = idx.iter().map(|&c| combine(&x, c)).collect();
        let images: Vec<Vec<f64>> = idx.iter().map(|&c| combine(&z, c)).collect();
        for j in 0..opts.k {
            let r: f64 = images[j].iter().zip(&ritz[j]).map(|(a, b)| (a - mu[j] * b).powi(2)).sum();
            residuals[j] = r.sqrt() / mu[j].abs();
        }
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        if max_residual <= opts.tol {
            let mut low_eigs: Vec<f64> = mu[..opts.k].iter().map(|m| 1.0 / m - shift).collect();
            low_eigs.sort_by(f64::total_cmp);
            let lambda1 = low_eigs.iter().copied().find(|&l| l > 1e-8).unwrap_or(f64::NAN);
            let multiplicity_estimate =
                low_eigs.iter().filter(|&&l| l > 1e-8 && (l - lambda1).abs() <= 1e-2 * lambda1).count();
            // ground state in the original variables x = M^-1/2 y
            let g: Vec<f64> = ritz[0].iter().zip(&sqrt_m).map(|(y, s)| y / s).collect();
            let mean = g.iter().sum::<f64>() / n as f64;
            let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            return Ok(SpectrumResult {
                lambda1,
                low_eigs,
                multiplicity_estimate,
                iterations: it,
                max_residual,
                ground_state_cv: var.sqrt() / mean.abs(),
                shift,
            });
        }
        x = images;
        orthonormalize(&mut x);
    }
    Err(Error::SolverNoConvergence { iterations: opts.max_iterations, residuals })
}
