//! Discrete ratio-cut evaluation, extraction of partitions from continuous
//! signals, and brute-force verification that the continuous relaxation is
//! tight on small graphs.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::functional::{energy, Signal};
use crate::graph::WeightedGraph;

const BRUTE_FORCE_LIMIT: usize = 20;
const TIGHTNESS_LIMIT: usize = 12;

/// A two-way vertex labeling. `true` marks membership in `S`; both sides
/// must be nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<bool>,
}

impl Partition {
    pub fn new(labels: Vec<bool>) -> Result<Self> {
        let size = labels.iter().filter(|&&b| b).count();
        if size == 0 || size == labels.len() {
            return Err(Error::InvalidPartition(format!(
                "side S has {size} of {} vertices; both sides must be nonempty",
                labels.len()
            )));
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of vertices labeled into `S`.
    pub fn size_s(&self) -> usize {
        self.labels.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|b| !b).collect(),
        }
    }
}

/// `RatioCut(S) = cut(S, S^c) * (1/|S| + 1/|S^c|)`.
pub fn ratio_cut_value(g: &WeightedGraph, p: &Partition) -> Result<f64> {
    if p.n() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: p.n(),
        });
    }
    let cut: f64 = g
        .edges()
        .iter()
        .filter(|e| p.labels[e.i] != p.labels[e.j])
        .map(|e| e.weight)
        .sum();
    let s = p.size_s() as f64;
    let sc = (p.n() - p.size_s()) as f64;
    Ok(cut * (1.0 / s + 1.0 / sc))
}

/// The mean-zero two-valued signal `scale * (|S^c| on S, -|S| on S^c)`.
/// Its energy equals `RatioCut(S) / 2` for any nonzero scale.
pub fn binary_embedding(p: &Partition, scale: f64) -> Result<Signal> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "embedding scale must be nonzero, got {scale}"
        )));
    }
    let s = p.size_s() as f64;
    let sc = (p.n() - p.size_s()) as f64;
    Ok(Signal::from_raw(
        p.labels
            .iter()
            .map(|&b| if b { scale * sc } else { -scale * s })
            .collect(),
    ))
}

/// Split at zero: `S = { i : f_i > 0 }`. Natural for mean-zero signals.
pub fn threshold_cluster(f: &Signal) -> Result<Partition> {
    let labels: Vec<bool> = f.iter().map(|&x| x > 0.0).collect();
    Partition::new(labels)
        .map_err(|_| Error::InvalidPartition("threshold at zero leaves one side empty".into()))
}

/// Evaluate every threshold between consecutive sorted values of `f` and
/// return the partition minimizing the ratio cut. Ties break toward the more
/// balanced side, then toward the lower threshold.
pub fn threshold_cluster_sweep(g: &WeightedGraph, f: &Signal) -> Result<Partition> {
    if f.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    let mut values: Vec<f64> = f.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    if values.len() < 2 {
        return Err(Error::InvalidPartition("signal is constant".into()));
    }
    let n = f.len();
    let mut best: Option<(f64, usize, Partition)> = None;
    for threshold in &values[..values.len() - 1] {
        let p = Partition::new(f.iter().map(|&x| x > *threshold).collect())?;
        let value = ratio_cut_value(g, &p)?;
        // Imbalance measured as |2|S| - n|; smaller is more balanced.
        let imbalance = (2 * p.size_s()).abs_diff(n);
        let better = match &best {
            None => true,
            Some((bv, bi, _)) => value < *bv || (value == *bv && imbalance < *bi),
        };
        if better {
            best = Some((value, imbalance, p));
        }
    }
    Ok(best.expect("at least one threshold").2)
}

/// Enumerate all `2^(n-1) - 1` proper bipartitions and return a minimizer
/// with its value. Guarded to `n <= 20`.
pub fn brute_force_ratio_cut(g: &WeightedGraph) -> Result<(Partition, f64)> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 vertices".into()));
    }
    let mut best: Option<(f64, Partition)> = None;
    // Vertex n-1 stays in S^c so each bipartition appears exactly once.
    for mask in 1u64..(1 << (n - 1)) {
        let labels: Vec<bool> = (0..n).map(|v| v < n - 1 && (mask >> v) & 1 == 1).collect();
        let p = Partition::new(labels)?;
        let value = ratio_cut_value(g, &p)?;
        if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
            best = Some((value, p));
        }
    }
    let (value, p) = best.expect("n >= 2 has at least one bipartition");
    Ok((p, value))
}

/// Check the tight-relaxation identity on a small connected graph:
/// every binary mean-zero embedding has energy `RatioCut(S) / 2`, and the
/// minimum over embeddings equals the brute-force minimum over cuts halved.
pub fn verify_tightness(g: &WeightedGraph) -> Result<bool> {
    let n = g.n();
    if n > TIGHTNESS_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: TIGHTNESS_LIMIT,
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected {
            components: g.connected_components(),
        });
    }
    let (_, brute_min) = brute_force_ratio_cut(g)?;
    let mut embed_min = f64::INFINITY;
    for mask in 1u64..((1 << n) - 1) {
        let labels: Vec<bool> = (0..n).map(|v| (mask >> v) & 1 == 1).collect();
        let p = Partition::new(labels)?;
        let rc = ratio_cut_value(g, &p)?;
        for scale in [1.0, -2.0, 0.5] {
            let f = binary_embedding(&p, scale)?;
            let e = energy(g, &f)?;
            if (e - rc / 2.0).abs() > 1e-10 * (1.0 + rc / 2.0) {
                return Ok(false);
            }
        }
        let e1 = energy(g, &binary_embedding(&p, 1.0)?)?;
        embed_min = embed_min.min(e1);
    }
    Ok((embed_min - brute_min / 2.0).abs() <= 1e-10 * (1.0 + brute_min / 2.0))
}

/// Write one 0/1 label per line in vertex order.
pub fn write_labels<W: Write>(labels: &[bool], mut w: W) -> std::io::Result<()> {
    for &b in labels {
        writeln!(w, "{}", b as u8)?;
    }
    Ok(())
}

/// Read a labels file: one 0/1 per line.
pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<bool>> {
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" => labels.push(false),
            "1" => labels.push(true),
            other => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected 0 or 1, got {other:?}"),
                })
            }
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::mean;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn path4() -> WeightedGraph {
        WeightedGraph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap()
    }

    fn part(bits: &[u8]) -> Partition {
        Partition::new(bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn ratio_cut_examples() {
        let g = path4();
        assert_eq!(ratio_cut_value(&g, &part(&[1, 1, 0, 0])).unwrap(), 1.0);
        let v = ratio_cut_value(&g, &part(&[1, 0, 0, 0])).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
        assert!(Partition::new(vec![false; 4]).is_err());
        assert!(Partition::new(vec![true; 4]).is_err());
    }

    #[test]
    fn complement_symmetry() {
        let g = path4();
        for bits in [[1, 1, 0, 0], [1, 0, 1, 0], [0, 1, 1, 1]] {
            let p = part(&bits);
            let v = ratio_cut_value(&g, &p).unwrap();
            let vc = ratio_cut_value(&g, &p.complement()).unwrap();
            assert!((v - vc).abs() < 1e-15);
        }
    }

    #[test]
    fn embedding_examples() {
        let p = part(&[1, 1, 0, 0]);
        assert_eq!(
            binary_embedding(&p, 1.0).unwrap().values(),
            &[2.0, 2.0, -2.0, -2.0]
        );
        let p3 = part(&[1, 0, 0]);
        assert_eq!(
            binary_embedding(&p3, 1.0).unwrap().values(),
            &[2.0, -1.0, -1.0]
        );
        assert_eq!(mean(&binary_embedding(&p3, 0.37).unwrap()), 0.0);
        assert!(binary_embedding(&p3, 0.0).is_err());
    }

    #[test]
    fn threshold_modes() {
        let g = path4();
        let clear = Signal::new(vec![0.7, 0.6, -0.6, -0.7]).unwrap();
        assert_eq!(threshold_cluster(&clear).unwrap(), part(&[1, 1, 0, 0]));
        assert_eq!(
            threshold_cluster_sweep(&g, &clear).unwrap(),
            part(&[1, 1, 0, 0])
        );

        // Sweep on (3, 1, -1, -3): the balanced split (cut value 1) beats 4/3.
        let graded = Signal::new(vec![3.0, 1.0, -1.0, -3.0]).unwrap();
        assert_eq!(
            threshold_cluster_sweep(&g, &graded).unwrap(),
            part(&[1, 1, 0, 0])
        );

        let constant = Signal::new(vec![2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!(threshold_cluster(&constant).is_err());
        assert!(threshold_cluster_sweep(&g, &constant).is_err());
    }

    #[test]
    fn sweep_never_loses_to_zero_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = WeightedGraph::new(
            6,
            &[
                (0, 1, 0.8),
                (1, 2, 1.0),
                (2, 3, 0.2),
                (3, 4, 1.0),
                (4, 5, 0.9),
                (0, 2, 0.5),
            ],
        )
        .unwrap();
        for _ in 0..50 {
            let f = Signal::new((0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let Ok(zero_split) = threshold_cluster(&f) else {
                continue;
            };
            let sweep = threshold_cluster_sweep(&g, &f).unwrap();
            let vz = ratio_cut_value(&g, &zero_split).unwrap();
            let vs = ratio_cut_value(&g, &sweep).unwrap();
            assert!(vs <= vz + 1e-12);
        }
    }

    #[test]
    fn brute_force_examples() {
        let g = path4();
        let (p, v) = brute_force_ratio_cut(&g).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(p == part(&[1, 1, 0, 0]) || p == part(&[0, 0, 1, 1]));

        // Two triangles joined by one weak edge: the clique split wins.
        let eps = 1e-3;
        let cliques = WeightedGraph::new(
            6,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (3, 5, 1.0),
                (4, 5, 1.0),
                (2, 3, eps),
            ],
        )
        .unwrap();
        let (p, v) = brute_force_ratio_cut(&cliques).unwrap();
        assert!((v - eps * (1.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(p.size_s(), 3);

        // Single edge: only one bipartition, value 2w.
        let single = WeightedGraph::new(2, &[(0, 1, 0.7)]).unwrap();
        let (_, v) = brute_force_ratio_cut(&single).unwrap();
        assert!((v - 1.4).abs() < 1e-15);

        let big = WeightedGraph::new(21, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            brute_force_ratio_cut(&big),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn tightness_on_small_graphs() {
        assert!(verify_tightness(&path4()).unwrap());
        let single = WeightedGraph::new(2, &[(0, 1, 1.0)]).unwrap();
        assert!(verify_tightness(&single).unwrap());
        let disconnected = WeightedGraph::new(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(
            verify_tightness(&disconnected),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec![true, false, false, true, true];
        let mut buf = Vec::new();
        write_labels(&labels, &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
        assert!(matches!(
            read_labels("1\n2\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn embedding_energy_is_half_ratio_cut(
            mask in 1u64..15,
            scale in prop::sample::select(vec![1.0f64, -2.0, 0.5, 3.7]),
        ) {
            let g = path4();
            let labels: Vec<bool> = (0..4).map(|v| (mask >> v) & 1 == 1).collect();
            let p = Partition::new(labels).unwrap();
            let rc = ratio_cut_value(&g, &p).unwrap();
            let f = binary_embedding(&p, scale).unwrap();
            let e = energy(&g, &f).unwrap();
            prop_assert!((e - rc / 2.0).abs() <= 1e-12 * (1.0 + rc));
        }

        #[test]
        fn brute_force_invariant_under_relabeling(seed in 0u64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let mut edges = Vec::new();
            for i in 1..n {
                let j = rng.random_range(0..i);
                edges.push((i, j, rng.random_range(0.1..1.0)));
            }
            let g = WeightedGraph::new(n, &edges).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            // Fisher-Yates with the same rng.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let edges_p: Vec<(usize, usize, f64)> =
                edges.iter().map(|&(i, j, w)| (perm[i], perm[j], w)).collect();
            let gp = WeightedGraph::new(n, &edges_p).unwrap();
            let (_, v) = brute_force_ratio_cut(&g).unwrap();
            let (_, vp) = brute_force_ratio_cut(&gp).unwrap();
            prop_assert!((v - vp).abs() <= 1e-12 * (1.0 + v));
        }
    }
}
