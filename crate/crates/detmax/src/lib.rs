//! Determinant (volume) maximization over point sets.
//!
//! The library picks `k` of `n` vectors in `R^d` so that the parallelepiped
//! they span has (approximately) maximal volume, equivalently maximal Gram
//! determinant. It provides:
//!
//! * [`geometry`]: point sets, incremental orthogonal bases, and log-space
//!   volumes with an explicit rank tolerance.
//! * [`solvers`]: the greedy solver, (1+eps) local search, exact enumeration
//!   for small instances, and dual-route swap evaluation (incremental
//!   rank-one updates vs. recomputation from scratch).
//! * [`coreset`]: composable summaries. Each part of a partitioned dataset
//!   is mapped to a small image independently; the union of images retains
//!   a provable fraction of the full dataset's max determinant.
//! * [`diagnostics`]: empirical local-optimality measurement against the
//!   `1 + sqrt(k)` swap bound, worst-case instances where that bound is
//!   tight, and offline approximation checks.
//! * [`data`]: CSV ingestion, seeded generators, and report serialization.
//!
//! All volumes are carried in log space (see [`geometry::LogVolume`]) so
//! that products of residual norms neither overflow nor underflow. All
//! randomness flows through ChaCha8 streams keyed by explicit `u64` seeds;
//! no function draws from ambient entropy, so every result is reproducible
//! from its inputs.

pub mod coreset;
pub mod data;
pub mod diagnostics;
pub mod geometry;
pub mod solvers;

pub use geometry::{LogVolume, OrthoBasis, PointSet};
pub use solvers::{SwapGain, SwapMode, SwapRatio, Solution};
