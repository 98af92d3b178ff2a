//! Weighted similarity graphs: kNN construction with self-tuning weights,
//! edge-list IO, and connectivity checks.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A set of `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone)]
pub struct PointCloud {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointCloud {
    /// Build a cloud from one row per point. Requires at least two points of
    /// equal dimension `d >= 1` with finite coordinates.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "point cloud needs at least 2 points, got {n}"
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("points have dimension 0".into()));
        }
        let mut data = Vec::with_capacity(n * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            data.extend_from_slice(p);
        }
        Ok(Self { data, n, dim })
    }

    /// Build a cloud from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("points have dimension 0".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        let n = data.len() / dim;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "point cloud needs at least 2 points, got {n}"
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "point cloud has a non-finite coordinate".into(),
            ));
        }
        Ok(Self { data, n, dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// An undirected edge `i < j` with nonnegative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// An undirected graph with nonnegative edge weights. Each edge is stored
/// once with `i < j` and applied symmetrically, so `w_ij = w_ji` holds by
/// construction. A CSR adjacency index gives O(degree) neighborhood access.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    // arcs[offsets[u]..offsets[u+1]] lists (neighbor, edge index) for u.
    offsets: Vec<usize>,
    arcs: Vec<(usize, usize)>,
}

impl WeightedGraph {
    /// Build a graph from `(i, j, w)` triples. Rejects self-loops, negative
    /// weights, out-of-range indices, and duplicate vertex pairs.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut canonical = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            canonical.push(Edge {
                i: a,
                j: b,
                weight: w,
            });
        }
        canonical.sort_by_key(|e| (e.i, e.j));
        for pair in canonical.windows(2) {
            if (pair[0].i, pair[0].j) == (pair[1].i, pair[1].j) {
                return Err(Error::ConflictingWeights {
                    i: pair[0].i,
                    j: pair[0].j,
                    first: pair[0].weight,
                    second: pair[1].weight,
                });
            }
        }
        Ok(Self::from_canonical(n, canonical))
    }

    fn from_canonical(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut arcs = vec![(0usize, 0usize); 2 * edges.len()];
        for (idx, e) in edges.iter().enumerate() {
            arcs[cursor[e.i]] = (e.j, idx);
            cursor[e.i] += 1;
            arcs[cursor[e.j]] = (e.i, idx);
            cursor[e.j] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            arcs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `u` as `(vertex, weight)` pairs.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.arcs[self.offsets[u]..self.offsets[u + 1]]
            .iter()
            .map(move |&(v, e)| (v, self.edges[e].weight))
    }

    /// Sum of edge weights incident to `u`.
    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.neighbors(u).map(|(_, w)| w).sum()
    }

    pub fn max_weighted_degree(&self) -> f64 {
        (0..self.n)
            .map(|u| self.weighted_degree(u))
            .fold(0.0, f64::max)
    }

    /// True iff the graph restricted to positive-weight edges is connected.
    pub fn is_connected(&self) -> bool {
        self.connected_components() == 1
    }

    /// Number of connected components of the positive-weight subgraph.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for (v, w) in self.neighbors(u) {
                    if w > 0.0 && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }
}

/// Build the k-nearest-neighbor graph with self-tuning Gaussian weights
/// `w_ij = exp(-|x_i - x_j|^2 / (s * sigma_i * sigma_j))`, where `sigma_i`
/// is the Euclidean distance from point `i` to its `self_tune_m`-th nearest
/// neighbor and `s` is the universal scale.
///
/// The directed kNN relation is symmetrized by union: an edge exists when
/// either endpoint selects the other. Equidistant neighbors are broken
/// toward the lower index.
pub fn knn_graph(
    cloud: &PointCloud,
    k: usize,
    self_tune_m: usize,
    universal_scale: f64,
) -> Result<WeightedGraph> {
    let n = cloud.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    if self_tune_m == 0 || self_tune_m > k {
        return Err(Error::InvalidParameter(format!(
            "self_tune_m must satisfy 1 <= m <= k, got m = {self_tune_m}, k = {k}"
        )));
    }
    if !universal_scale.is_finite() || universal_scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "universal_scale must be a positive real, got {universal_scale}"
        )));
    }

    // Per point: the k nearest neighbors ordered by (distance, index) and the
    // self-tuning bandwidth sigma_i.
    let neighborhoods: Vec<(Vec<(f64, usize)>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = cloud.point(i);
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(pi, cloud.point(j)), j))
                .collect();
            dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
            dists.truncate(k);
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let sigma = dists[self_tune_m - 1].0.sqrt();
            (dists, sigma)
        })
        .collect();

    for (i, (_, sigma)) in neighborhoods.iter().enumerate() {
        if *sigma == 0.0 {
            return Err(Error::DegenerateScale {
                vertex: i,
                m: self_tune_m,
            });
        }
    }

    // Union symmetrization over canonical (min, max) pairs.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, (nbrs, _)) in neighborhoods.iter().enumerate() {
        for &(d2, j) in nbrs {
            if i < j {
                pairs.push((i, j, d2));
            } else {
                pairs.push((j, i, d2));
            }
        }
    }
    pairs.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    pairs.dedup_by_key(|p| (p.0, p.1));

    let edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(i, j, d2)| {
            let denom = universal_scale * neighborhoods[i].1 * neighborhoods[j].1;
            Edge {
                i,
                j,
                weight: (-d2 / denom).exp(),
            }
        })
        .collect();
    Ok(WeightedGraph::from_canonical(n, edges))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Parse the edge-list text format: first line `n`, then one `i j w` triple
/// per line with 0-based indices. Consistent duplicates collapse; duplicates
/// with conflicting weights are rejected.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<WeightedGraph> {
    let mut lines = reader.lines().enumerate();
    let n: usize = loop {
        match lines.next() {
            Some((lineno, line)) => {
                let line = line?;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                break t.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected vertex count, got {t:?}"),
                })?;
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty input".into(),
                });
            }
        }
    };

    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let mut fields = t.split_whitespace();
        let parse_idx = |f: Option<&str>| -> Result<usize> {
            f.ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `i j w`".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad vertex index".into(),
            })
        };
        let i = parse_idx(fields.next())?;
        let j = parse_idx(fields.next())?;
        let w: f64 = fields
            .next()
            .ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `i j w`".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad weight".into(),
            })?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "trailing fields".into(),
            });
        }
        if i >= n || j >= n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("vertex index out of range for n = {n}"),
            });
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::NegativeWeight { i, j, weight: w });
        }
        triples.push(if i < j { (i, j, w) } else { (j, i, w) });
    }

    // Collapse consistent duplicates before the strict constructor.
    triples.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let mut dedup: Vec<(usize, usize, f64)> = Vec::with_capacity(triples.len());
    for t in triples {
        match dedup.last() {
            Some(&(i, j, w)) if (i, j) == (t.0, t.1) => {
                if w != t.2 {
                    return Err(Error::ConflictingWeights {
                        i,
                        j,
                        first: w,
                        second: t.2,
                    });
                }
            }
            _ => dedup.push(t),
        }
    }
    WeightedGraph::new(n, &dedup)
}

/// Write a graph in the same edge-list format `load_edge_list` reads.
pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", g.n())?;
    for e in g.edges() {
        writeln!(w, "{} {} {}", e.i, e.j, e.weight)?;
    }
    Ok(())
}
