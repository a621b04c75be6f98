//! Numeric kernels shared by every other module.
//!
//! Scope is deliberately narrow:
//!
//! - [`linalg`]: unblocked Cholesky factorization, log-determinants and the
//!   quadratic form `1'A⁻¹1` for small (order ≤ 16) dense symmetric matrices.
//!   There is no pivoting and no jitter; failure is reported, never repaired.
//! - [`special`]: `ln Γ` (Lanczos), `erf`/`erfc` and the normal CDF (series +
//!   Legendre continued fraction), the regularized incomplete beta function,
//!   and an adaptive Simpson integrator.
//! - [`rng`]: labeled, forkable random streams over a ChaCha8 core.
//! - [`stats`]: Welford streaming moments with exact-shape merging, and
//!   Kolmogorov–Smirnov distances with the asymptotic tail probability.
//!
//! General-purpose large linear algebra is out of scope by design: the Gram
//! matrices this crate manipulates are `j × j` with `j` rarely above 3.

pub mod linalg;
pub mod rng;
pub mod special;
pub mod stats;

pub use linalg::{CholeskyFactor, LinalgError, SymMatrix, MAX_ORDER};
pub use rng::{RngStream, StreamId};
pub use special::{adaptive_simpson, erf, erfc, log_gamma, norm_cdf, norm_pdf, reg_inc_beta};
pub use stats::{ks_p_value, ks_statistic_sorted, ks_two_sample, StreamingMoments};
