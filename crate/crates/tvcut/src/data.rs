//! Synthetic two-moons data, CSV IO, and clustering quality metrics.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::PointCloud;
use crate::ratio_cut::Partition;

/// A point cloud with its ground-truth two-way labels, used only for
/// evaluation.
#[derive(Debug, Clone)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub truth: Vec<bool>,
}

/// Two-moons generator parameters.
#[derive(Debug, Clone)]
pub struct TwoMoonsConfig {
    pub n_per_moon: usize,
    pub ambient_dim: usize,
    /// Standard deviation of the Gaussian noise.
    pub sigma: f64,
    pub seed: u64,
    /// Sample angles on a regular grid instead of uniformly at random;
    /// handy for deterministic fixtures.
    pub equispaced_angles: bool,
    /// Add noise only to the two planar coordinates instead of every
    /// ambient coordinate.
    pub planar_noise: bool,
}

impl TwoMoonsConfig {
    pub fn new(n_per_moon: usize, ambient_dim: usize, sigma: f64, seed: u64) -> Self {
        Self {
            n_per_moon,
            ambient_dim,
            sigma,
            seed,
            equispaced_angles: false,
            planar_noise: false,
        }
    }
}

/// Two interleaved crescents: the upper half circle of radius one at the
/// origin, and an upside-down half circle centered at `(1, -1/2)`, each with
/// `n_per_moon` points, embedded in `R^ambient_dim` by zero padding, with
/// i.i.d. Gaussian noise of deviation `sigma` added to every coordinate.
/// Deterministic for a given seed. The first moon carries label 0.
pub fn two_moons(
    n_per_moon: usize,
    ambient_dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<LabeledCloud> {
    two_moons_with(&TwoMoonsConfig::new(n_per_moon, ambient_dim, sigma, seed))
}

pub fn two_moons_with(cfg: &TwoMoonsConfig) -> Result<LabeledCloud> {
    if cfg.n_per_moon == 0 {
        return Err(Error::InvalidParameter(
            "n_per_moon must be positive".into(),
        ));
    }
    if cfg.ambient_dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "ambient_dim must be at least 2, got {}",
            cfg.ambient_dim
        )));
    }
    if !cfg.sigma.is_finite() || cfg.sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {}",
            cfg.sigma
        )));
    }

    let n = cfg.n_per_moon;
    let d = cfg.ambient_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let angles = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        if cfg.equispaced_angles {
            (0..n)
                .map(|t| PI * (2 * t + 1) as f64 / (2 * n) as f64)
                .collect()
        } else {
            (0..n).map(|_| PI * rng.random::<f64>()).collect()
        }
    };
    // Draw order is fixed: moon-1 angles, moon-2 angles, then noise per
    // point per coordinate.
    let theta1 = angles(&mut rng);
    let theta2 = angles(&mut rng);

    let mut data = Vec::with_capacity(2 * n * d);
    for t in &theta1 {
        data.push(t.cos());
        data.push(t.sin());
        data.extend(std::iter::repeat_n(0.0, d - 2));
    }
    for t in &theta2 {
        data.push(1.0 + t.cos());
        data.push(-0.5 - t.sin());
        data.extend(std::iter::repeat_n(0.0, d - 2));
    }

    if cfg.sigma > 0.0 {
        for (idx, x) in data.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            if cfg.planar_noise && idx % d >= 2 {
                continue;
            }
            *x += cfg.sigma * noise;
        }
    }

    let truth: Vec<bool> = (0..2 * n).map(|i| i >= n).collect();
    Ok(LabeledCloud {
        cloud: PointCloud::from_flat(data, d)?,
        truth,
    })
}

/// Best-matching two-way accuracy: the larger of the agreement under the
/// identity and the flipped label matching. Always in `[1/2, 1]`.
pub fn purity(predicted: &Partition, truth: &[bool]) -> Result<f64> {
    if predicted.n() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: predicted.n(),
        });
    }
    let agree = predicted
        .labels()
        .iter()
        .zip(truth)
        .filter(|(a, b)| a == b)
        .count() as f64
        / truth.len() as f64;
    Ok(agree.max(1.0 - agree))
}

/// Write points as CSV, one row per point, optionally appending an integer
/// label column. Values round-trip bit-exactly.
pub fn save_cloud<W: Write>(cloud: &PointCloud, truth: Option<&[bool]>, mut w: W) -> Result<()> {
    if let Some(t) = truth {
        if t.len() != cloud.n() {
            return Err(Error::LengthMismatch {
                expected: cloud.n(),
                got: t.len(),
            });
        }
    }
    for (i, p) in cloud.points().enumerate() {
        let mut row = String::new();
        for (j, x) in p.iter().enumerate() {
            if j > 0 {
                row.push(',');
            }
            row.push_str(&format!("{x}"));
        }
        if let Some(t) = truth {
            row.push(',');
            row.push_str(if t[i] { "1" } else { "0" });
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Read a point-cloud CSV. With `labeled`, the last column must be an
/// integer 0/1 label. Rows must all have the same width.
pub fn load_cloud<R: BufRead>(reader: R, labeled: bool) -> Result<(PointCloud, Option<Vec<bool>>)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let mut fields: Vec<&str> = t.split(',').map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(wd) if wd != fields.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("ragged row: {} fields, expected {wd}", fields.len()),
                })
            }
            _ => {}
        }
        if labeled {
            let last = fields.pop().ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "empty row".into(),
            })?;
            match last {
                "0" => labels.push(false),
                "1" => labels.push(true),
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected 0/1 label in last column, got {other:?}"),
                    })
                }
            }
            if fields.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "labeled row has no coordinate columns".into(),
                });
            }
        }
        let mut row = Vec::with_capacity(fields.len());
        for f in fields {
            row.push(f.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad coordinate {f:?}"),
            })?);
        }
        rows.push(row);
    }
    let cloud = PointCloud::new(rows)?;
    Ok((cloud, labeled.then_some(labels)))
}
