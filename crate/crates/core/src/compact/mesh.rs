//! Icosphere triangulations of the unit sphere.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereMesh {
    pub level: u32,
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise seen from outside.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted unique pairs `(a, b)` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// `tri_edges[t][c]` is the edge opposite corner `c` of triangle `t`.
    pub tri_edges: Vec<[usize; 3]>,
}

impl SphereMesh {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    /// Neighbours of each vertex, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for n in &mut adj {
            n.sort_unstable();
        }
        adj
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v.iter().map(|x| normalize(*x)).collect(), f)
}

/// Regular icosahedron subdivided `level` times, midpoints pushed to the sphere.
pub fn build_icosphere(level: u32) -> Result<SphereMesh> {
    if level > MAX_LEVEL {
        return Err(Error::LevelOutOfRange(level));
    }
    let (mut vertices, mut triangles) = icosahedron();
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let mut edges: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
        .map(|[a, b]| [a.min(b), a.max(b)])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let find = |a: usize, b: usize| edges.binary_search(&[a.min(b), a.max(b)]).expect("edge of a triangle");
    let tri_edges = triangles.iter().map(|&[a, b, c]| [find(b, c), find(c, a), find(a, b)]).collect();
    Ok(SphereMesh { level, vertices, triangles, edges, tri_edges })
}

/// Pairwise (cascade) summation; the result does not depend on threading.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_euler_characteristic() {
        for level in 0..=5 {
            let m = build_icosphere(level).unwrap();
            assert_eq!(m.vertices.len(), 10 * 4usize.pow(level) + 2);
            assert_eq!(m.triangles.len(), 20 * 4usize.pow(level));
            assert_eq!(m.euler_characteristic(), 2);
        }
        assert_eq!(build_icosphere(0).unwrap().vertices.len(), 12);
        assert_eq!(build_icosphere(3).unwrap().vertices.len(), 642);
        assert!(matches!(build_icosphere(9), Err(Error::LevelOutOfRange(9))));
    }

    #[test]
    fn unit_vertices_and_outward_orientation() {
        let m = build_icosphere(3).unwrap();
        for v in &m.vertices {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        for &[a, b, c] in &m.triangles {
            let (p, q, r) = (m.vertices[a], m.vertices[b], m.vertices[c]);
            let u = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            let w = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
            let n = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
            assert!(n[0] * p[0] + n[1] * p[1] + n[2] * p[2] > 0.0);
        }
    }

    #[test]
    fn tri_edges_are_opposite() {
        let m = build_icosphere(2).unwrap();
        for (t, tri) in m.triangles.iter().enumerate() {
            for c in 0..3 {
                let e = m.edges[m.tri_edges[t][c]];
                assert!(!e.contains(&tri[c]));
            }
        }
        // every edge borders exactly two triangles
        let mut count = vec![0; m.edges.len()];
        for te in &m.tri_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 2));
    }

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
