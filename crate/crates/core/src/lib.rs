//! Exact optimal quantizers for the self-similar R-measure.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: exact arithmetic in ℚ and ℚ(√3).
//! * [`measure`]: the iterated function system, its cells, moments and sampling.
//! * [`optimal`]: closed-form optimal sets of n-means, their errors and counts.
//! * [`oracle`]: formula-independent checks (certified enclosures, Monte Carlo, Lloyd).
//! * [`asymptotics`]: quantization dimension and coefficient scans.

pub mod algebra;
pub mod asymptotics;
pub mod error;
pub mod measure;
pub mod optimal;
pub mod oracle;

pub use algebra::{quad_cmp, rat, PointQ, QuadNum, Rat};
pub use error::{Error, Result};
pub use measure::{Family, GeneralIfs, SelfSimilarMeasure, Word};
pub use optimal::{
    canonical_spec, count_optimal_sets, enumerate_optimal_sets, optimal_set, quantization_error, Alpha2Variant,
    OptimalSetSpec, PointSet, Regime,
};
pub use oracle::{
    distortion_enclosure, exact_distortion, kmeans_best_of, lloyd, mc_distortion, DistortionEnclosure, LloydState,
};
