//! Benchmark-only crate; see `benches/kernels.rs`.
//!
//! The hot paths of the estimators are benchmarked directly: data-model
//! sampling, modulating-mixture draws, the collapsed density kernel
//! (Gram build + Cholesky + evaluation), and the heavy-tail quadrature
//! behind the Schoenberg transform.
