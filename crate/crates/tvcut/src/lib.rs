//! Two-way graph clustering by steepest descent on the tight continuous
//! relaxation of the ratio cut objective.
//!
//! The discrete problem minimizes `RatioCut(S) = cut(S, S^c) * (1/|S| + 1/|S^c|)`
//! over proper subsets `S` of the vertices. Its tight relaxation minimizes the
//! ratio `E(f) = T(f) / B(f)` over non-constant vertex functions, where `T` is
//! the weighted graph total variation and `B` is the l1 norm after mean removal.
//! Minimizers of the relaxation include binary indicators of optimal cuts, so no
//! rounding gap exists at the optimum.
//!
//! The solver alternates an explicit subgradient step on `B` with an implicit
//! (proximal) step on `T` — a graph-ROF problem solved by a first-order
//! primal-dual method — followed by projection onto the unit sphere. Each
//! iterate keeps mean zero and the energy never increases.
//!
//! # Example
//!
//! ```
//! use tvcut::graph::WeightedGraph;
//! use tvcut::descent::{self, DescentConfig};
//! use tvcut::ratio_cut::threshold_cluster;
//!
//! // Path graph 0-1-2-3 with unit weights.
//! let g = WeightedGraph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
//! let f0 = descent::init_random(4, 7).unwrap();
//! let result = descent::run(&g, &f0, &DescentConfig::default()).unwrap();
//! assert!(result.converged);
//!
//! // The optimal bipartition cuts the middle edge.
//! let part = threshold_cluster(&result.f_star).unwrap();
//! assert_eq!(part.size_s(), 2);
//! ```

pub mod cli;
pub mod data;
pub mod descent;
pub mod error;
pub mod functional;
pub mod graph;
pub mod ratio_cut;
pub mod tvprox;
pub mod verify;

pub use error::{Error, Result};
pub use functional::Signal;
pub use graph::{PointCloud, WeightedGraph};
pub use ratio_cut::Partition;
