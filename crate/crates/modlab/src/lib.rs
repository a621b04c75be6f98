//! Monte Carlo laboratory for high-dimensional projection limit laws.
//!
//! The objects of study are scalar projections `Y = ξ'X` of a data vector
//! `X ∈ R^d` onto an independent modulating vector `ξ ∈ R^d`. When the squared
//! norm `‖X‖²` concentrates near a constant `σ²` and independent copies of `X`
//! decorrelate (`X'X̃ → 0`), the conditional law of `Y` given `ξ` approaches
//! `N(0, σ²)` for Gaussian `ξ`, and a Gaussian *scale mixture* — a variance-mixture
//! law `N(0, σ²V²)` with mixing scale `V` — for spherically symmetric `ξ`.
//!
//! The crate provides the pieces needed to observe, estimate and bound that
//! convergence numerically:
//!
//! - [`numerics`]: small dense symmetric Cholesky kernels, special functions,
//!   labeled reproducible random streams, and streaming moment accumulators.
//! - [`datamodels`]: samplers and exact moment sheets for the data families
//!   (spheres with Bingham directions, balls, hypercubes, Gaussian / Student-t /
//!   Laplace profiles).
//! - [`modulators`]: scale-mixture families for `ξ` (Gaussian, Student-t,
//!   Laplace, stable), their mixing scales, inverse moments, characteristic
//!   exponents and limit-law evaluators.
//! - [`gram`]: the collapse of conditional density powers onto small Gram
//!   matrices, convergence-rate functionals, and determinant moments.
//! - [`verify`]: end-to-end estimators and pass/fail verdicts comparing Monte
//!   Carlo estimates against the analytic limits and quantitative bounds.
//!
//! Shared result types ([`EstimateReport`], [`BoundReport`], …) are re-exported
//! at the crate root.
//!
//! # Reproducibility
//!
//! All randomness flows through [`numerics::rng::RngStream`], a ChaCha8
//! generator keyed by a root seed plus a path of integer labels. Estimators
//! derive one child stream per replicate, so results do not depend on how
//! replicates are scheduled across workers; accumulator merges happen in worker
//! index order, making every report byte-identical for a fixed
//! (seed, worker count) pair.

pub mod datamodels;
pub mod gram;
pub mod modulators;
pub mod numerics;
pub mod report;
pub mod verify;

pub use numerics::rng::{RngStream, StreamId};
pub use numerics::stats::{FourthMoments, PairCovariance, StreamingMoments};
pub use report::{
    BoundReport, CfVarianceReport, ConvergenceTrace, CurveEstimate, EstimateReport,
    ExactLawReport, GridRow, LipschitzReport, LipschitzRow, MatrixNormalReport, PolyaReport,
    RateValue, TraceRow,
};
