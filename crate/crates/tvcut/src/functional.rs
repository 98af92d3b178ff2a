//! The relaxed ratio-cut calculus: total variation `T`, balance `B`, their
//! ratio `E`, the mean-zero projection, and subgradients of `B`.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// A real-valued vertex function, one entry per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    /// Wrap a vector, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty signal".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "signal has non-finite entries".into(),
            ));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An element of the subdifferential of the balance term `B`.
///
/// Always sums to zero and is bounded by 2 in sup norm, hence by `2 sqrt(n)`
/// in the Euclidean norm.
#[derive(Debug, Clone)]
pub struct SubgradientB(Vec<f64>);

impl SubgradientB {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for SubgradientB {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

// Neumaier compensated summation. T and B feed tight runtime checks, so
// plain accumulation is not enough past a few thousand vertices.
pub(crate) fn csum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    csum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Average of the entries.
pub fn mean(f: &Signal) -> f64 {
    csum(f.iter().copied()) / f.len() as f64
}

/// Orthogonal projection onto the mean-zero subspace: `f - m(f) 1`.
pub fn project_mean_zero(f: &Signal) -> Signal {
    let m = mean(f);
    Signal::from_raw(f.iter().map(|x| x - m).collect())
}

/// Weighted graph total variation `sum_e w_e |f_i - f_j|`, each undirected
/// edge counted once.
pub fn total_variation(g: &WeightedGraph, f: &Signal) -> Result<f64> {
    check_len(g, f)?;
    Ok(csum(
        g.edges().iter().map(|e| e.weight * (f[e.i] - f[e.j]).abs()),
    ))
}

/// Balance term `B(f) = sum_i |f_i - m(f)|`, the l1 norm after mean removal.
pub fn balance(f: &Signal) -> f64 {
    let m = mean(f);
    csum(f.iter().map(|x| (x - m).abs()))
}

/// The ratio `E(f) = T(f) / B(f)`; undefined for constant signals.
pub fn energy(g: &WeightedGraph, f: &Signal) -> Result<f64> {
    check_len(g, f)?;
    let b = balance(f);
    if b == 0.0 {
        return Err(Error::UndefinedEnergy);
    }
    Ok(total_variation(g, f)? / b)
}

/// An element of the subdifferential of `B` at `f`: the mean-zero projection
/// of the entrywise sign of `f - m(f) 1`, with the selection `sign(0) = 0`.
pub fn subgrad_balance(f: &Signal) -> SubgradientB {
    let m = mean(f);
    let z: Vec<f64> = f.iter().map(|x| sign(x - m)).collect();
    let mz = csum(z.iter().copied()) / z.len() as f64;
    SubgradientB(z.iter().map(|x| x - mz).collect())
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_len(g: &WeightedGraph, f: &Signal) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    Ok(())
}
