//! Gram-matrix functionals of the data: collapsed estimator kernels and
//! concentration-rate functionals.
//!
//! For `k` independent data vectors `X_1, …, X_k` sharing one modulating
//! vector `ξ = V·Z`, the projections `(ξ'X_1, …, ξ'X_k)` are, conditionally
//! on `(V, X)`, exactly `N_k(0, V²·A_k)` with `A_k` the Gram matrix
//! `A_k[i,l] = X_i'X_l`. Integrating the `d`-dimensional direction `Z` out
//! analytically ("collapsing") turns every projection functional into a
//! function of `(V, A_k)` alone:
//!
//! - [`CollapsedDensityKernel`] evaluates the joint density at `(y, …, y)` —
//!   the unbiased per-replicate term for density-power estimation;
//! - [`collapsed_cf_mean`] / [`collapsed_cf_square_mean`] evaluate the first
//!   two moments of the conditional characteristic function.
//!
//! Collapsing removes all `O(d)` sampling noise from the modulator direction;
//! estimators built on these kernels never draw the `d`-dimensional `ξ`.
//!
//! The speed of the Gram collapse `A_k → σ²·I_k` is measured by the rate
//! functional `k·E(‖X‖²−σ²)² + k(k−1)·E[(X'X̃)²]` ([`gram_rate`]), and the
//! integrability condition behind density bounds by the inverse-root
//! determinant moment `E[(det A_k)^{−1/2}]` ([`estimate_det_invsqrt`], with
//! the exact Wishart value [`wishart_det_invsqrt_exact`] as a closed-form
//! anchor for isotropic Gaussian data).

use crate::datamodels::{DataModelError, DataModelSpec, DataSampler, MomentSheet};
use crate::numerics::linalg::{LinalgError, SymMatrix};
use crate::numerics::rng::RngStream;
use crate::numerics::special::{log_gamma, LN_SQRT_2PI};
use crate::numerics::stats::StreamingMoments;
use crate::report::{EstimateReport, RateValue};
use std::f64::consts::LN_2;
use thiserror::Error;

/// Errors from Gram-functional estimation.
#[derive(Debug, Error)]
pub enum GramError {
    /// Data-model failure while drawing replicates.
    #[error(transparent)]
    DataModel(#[from] DataModelError),
    /// Matrix-shape failure (order outside the supported range).
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// A Gram matrix was numerically singular although `d ≥ k` makes it
    /// almost surely nonsingular for continuous data — a numerical red flag
    /// that must not be silently excluded.
    #[error("replicate {replicate}: Gram matrix numerically singular at d = {d}, k = {k}")]
    SingularGram {
        /// Replicate index that failed.
        replicate: u64,
        /// Ambient dimension.
        d: usize,
        /// Number of data vectors.
        k: usize,
    },
    /// The dimension is too small for the requested functional.
    #[error("dimension too small: {reason} (d = {d}, k = {k})")]
    DimensionTooSmall {
        /// Ambient dimension.
        d: usize,
        /// Number of data vectors.
        k: usize,
        /// Which requirement failed.
        reason: String,
    },
    /// A parameter fails validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Gram matrix `G[i,l] = rows[i]·rows[l]` of `k` vectors of equal length
/// (`1 ≤ k ≤` [`crate::numerics::linalg::MAX_ORDER`]).
pub fn build_gram<S: AsRef<[f64]>>(rows: &[S]) -> Result<SymMatrix, LinalgError> {
    let k = rows.len();
    let d = rows.first().map_or(0, |r| r.as_ref().len());
    assert!(rows.iter().all(|r| r.as_ref().len() == d), "vectors must share a length");
    SymMatrix::from_fn(k, |i, l| {
        rows[i].as_ref().iter().zip(rows[l].as_ref()).map(|(a, b)| a * b).sum()
    })
}

/// Collapsed joint-density kernel of `k` shared-modulator projections at the
/// diagonal point `(y, …, y)`:
///
/// `φ_k(y·1; v²G) = (2πv²)^{−k/2} · (det G)^{−1/2} · exp(−y²·1'G^{−1}1/(2v²))`.
///
/// The Cholesky factorization is done once at construction, so evaluating a
/// grid of `y` values per replicate costs one `exp` each.
#[derive(Debug, Clone, Copy)]
pub struct CollapsedDensityKernel {
    k: f64,
    half_logdet: f64,
    quad_ones: f64,
}

impl CollapsedDensityKernel {
    /// Factors the Gram matrix; fails if it is not positive definite.
    pub fn from_gram(gram: &SymMatrix) -> Result<Self, LinalgError> {
        let chol = gram.cholesky()?;
        Ok(Self {
            k: gram.order() as f64,
            half_logdet: 0.5 * chol.logdet(),
            quad_ones: chol.quad_inv_ones(),
        })
    }

    /// `1'G^{−1}1` of the factored Gram matrix.
    pub fn quad_ones(&self) -> f64 {
        self.quad_ones
    }

    /// Kernel value at diagonal point `y` and mixing scale `v > 0`.
    pub fn evaluate(&self, y: f64, v: f64) -> f64 {
        (-self.k * (LN_SQRT_2PI + v.ln())
            - self.half_logdet
            - y * y * self.quad_ones / (2.0 * v * v))
            .exp()
    }
}

/// Convenience one-shot form of [`CollapsedDensityKernel`].
pub fn density_power_term(gram: &SymMatrix, y: f64, v: f64) -> Result<f64, LinalgError> {
    Ok(CollapsedDensityKernel::from_gram(gram)?.evaluate(y, v))
}

/// Collapsed conditional characteristic function at frequency `t`:
/// `E[cos(t·ξ'X) | V = v, X] = exp(−t²v²‖X‖²/2)`.
pub fn collapsed_cf_mean(norm2: f64, v: f64, t: f64) -> f64 {
    (-0.5 * t * t * v * v * norm2).exp()
}

/// Collapsed second moment of the conditional characteristic function for a
/// shared modulator and two independent data vectors with Gram matrix `G`
/// (order 2): with `s = G₁₁ + G₂₂` and `c = G₁₂`,
///
/// `E[cos(t·ξ'X₁)·cos(t·ξ'X₂) | V = v, G]
///   = ½·[exp(−t²v²(s−2c)/2) + exp(−t²v²(s+2c)/2)]`,
///
/// from `cos a·cos b = ½[cos(a−b) + cos(a+b)]` and the normal CF.
pub fn collapsed_cf_square_mean(gram: &SymMatrix, v: f64, t: f64) -> f64 {
    assert_eq!(gram.order(), 2, "the square-mean kernel takes a 2x2 Gram matrix");
    let s = gram.get(0, 0) + gram.get(1, 1);
    let c = gram.get(0, 1);
    let h = 0.5 * t * t * v * v;
    0.5 * ((-h * (s - 2.0 * c)).exp() + (-h * (s + 2.0 * c)).exp())
}

/// Gram-collapse rate functional from a closed-form moment sheet:
/// `k·E(‖X‖²−σ²)² + k(k−1)·E[(X'X̃)²]`, with
/// `E(‖X‖²−σ²)² = Var(‖X‖²) + (E‖X‖²−σ²)²`.
///
/// `None` when the sheet lacks a needed ingredient (the cross term is only
/// needed for `k ≥ 2`).
///
/// The cross term enters through the *second moment* `E[(X'X̃)²]`, never the
/// squared mean `[E(X'X̃)]²`: the latter vanishes for centered data and
/// undercounts the expected squared Frobenius distance `E‖A_k − σ²I‖_F²`,
/// whose off-diagonal entries contribute their full second moment. The
/// acceptance suite pins this down with a brute-force Monte Carlo of the
/// Frobenius expectation against this functional.
pub fn exact_gram_rate(k: u32, sheet: &MomentSheet, sigma: f64) -> Option<f64> {
    assert!(k >= 1, "order must be at least 1");
    let kf = f64::from(k);
    let e = sheet.e_norm2?;
    let var = sheet.var_norm2?;
    let bias = e - sigma * sigma;
    let norm_part = kf * (var + bias * bias);
    if k == 1 {
        return Some(norm_part);
    }
    Some(norm_part + kf * (kf - 1.0) * sheet.e_cross2?)
}

/// Monte Carlo estimate of the rate functional: each replicate draws an
/// independent pair `(X, X̃)` and evaluates
/// `k·½[(‖X‖²−σ²)² + (‖X̃‖²−σ²)²] + k(k−1)·(X'X̃)²`, an unbiased term.
pub fn estimate_gram_rate(
    k: u32,
    sampler: &DataSampler,
    sigma: f64,
    reps: u64,
    rng: &mut RngStream,
) -> Result<RateValue, GramError> {
    assert!(k >= 1, "order must be at least 1");
    if reps < 2 {
        return Err(GramError::InvalidParameter(format!(
            "need at least 2 replicates, got {reps}"
        )));
    }
    let kf = f64::from(k);
    let s2 = sigma * sigma;
    let d = sampler.dim();
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = StreamingMoments::new();
    for _ in 0..reps {
        sampler.sample_into(rng, &mut x)?;
        sampler.sample_into(rng, &mut y)?;
        let (mut nx, mut ny, mut dot) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(&y) {
            nx += a * a;
            ny += b * b;
            dot += a * b;
        }
        let norm_term = 0.5 * ((nx - s2).powi(2) + (ny - s2).powi(2));
        acc.push(kf * norm_term + kf * (kf - 1.0) * dot * dot);
    }
    Ok(RateValue::Estimated { value: acc.mean(), se: acc.standard_error() })
}

/// Rate functional of a data model at dimension `d`: the closed form when
/// the moment sheet provides it, otherwise a Monte Carlo estimate with
/// `reps` replicate pairs drawn from `rng`.
pub fn gram_rate(
    k: u32,
    spec: &DataModelSpec,
    d: usize,
    reps: u64,
    rng: &mut RngStream,
) -> Result<RateValue, GramError> {
    let sheet = spec.moments(d)?;
    if let Some(exact) = exact_gram_rate(k, &sheet, spec.sigma()) {
        return Ok(RateValue::Exact(exact));
    }
    estimate_gram_rate(k, &spec.sampler(d)?, spec.sigma(), reps, rng)
}

/// Monte Carlo estimate of `E[(det A_k)^{−1/2}]` for the Gram matrix of `k`
/// independent data vectors. Requires `d ≥ k`; a numerically singular Gram
/// is a hard error, never a silent exclusion.
pub fn estimate_det_invsqrt(
    k: usize,
    sampler: &DataSampler,
    reps: u64,
    rng: &mut RngStream,
) -> Result<EstimateReport, GramError> {
    let d = sampler.dim();
    if d < k {
        return Err(GramError::DimensionTooSmall {
            d,
            k,
            reason: "the Gram matrix of k vectors in dimension d < k is always singular".into(),
        });
    }
    if reps < 2 {
        return Err(GramError::InvalidParameter(format!(
            "need at least 2 replicates, got {reps}"
        )));
    }
    let stream = rng.id().clone();
    let mut rows = vec![vec![0.0; d]; k];
    let mut acc = StreamingMoments::new();
    for rep in 0..reps {
        for row in rows.iter_mut() {
            sampler.sample_into(rng, row)?;
        }
        let gram = build_gram(&rows)?;
        let chol = gram
            .cholesky()
            .map_err(|_| GramError::SingularGram { replicate: rep, d, k })?;
        acc.push((-0.5 * chol.logdet()).exp());
    }
    Ok(EstimateReport {
        estimate: acc.mean(),
        se: acc.standard_error(),
        reps,
        excluded: 0,
        stream,
    })
}

/// Exact `E[(det A_k)^{−1/2}]` for isotropic Gaussian data
/// `X ~ N(0, (σ²/d)·I_d)`: then `A_k` is Wishart `W_k(d, (σ²/d)·I_k)` and
///
/// `E[(det A_k)^{−1/2}]
///    = 2^{−k/2} (σ²/d)^{−k/2} ∏_{i=1}^k Γ((d−i)/2)/Γ((d+1−i)/2)`,
///
/// finite for `d ≥ k+1`.
pub fn wishart_det_invsqrt_exact(d: usize, k: usize, sigma: f64) -> Result<f64, GramError> {
    if k == 0 {
        return Err(GramError::InvalidParameter("order k must be positive".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(GramError::InvalidParameter(format!(
            "sigma must be finite and positive, got {sigma}"
        )));
    }
    if d < k + 1 {
        return Err(GramError::DimensionTooSmall {
            d,
            k,
            reason: "the inverse-root determinant moment needs d >= k+1".into(),
        });
    }
    let kf = k as f64;
    let mut ln = -0.5 * kf * LN_2 + 0.5 * kf * ((d as f64).ln() - 2.0 * sigma.ln());
    for i in 1..=k {
        let di = (d - i) as f64;
        ln += log_gamma(di / 2.0) - log_gamma((di + 1.0) / 2.0);
    }
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodels::{BinghamRule, EigenProfile, Family, RadiusRule, SideRule};
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn gaussian_iso(sigma: f64) -> DataModelSpec {
        DataModelSpec::new(
            Family::GaussianProfile { profile: EigenProfile::Isotropic },
            sigma,
        )
        .unwrap()
    }

    #[test]
    fn gram_of_known_vectors() {
        let g = build_gram(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(g.order(), 2);
        assert_relative_eq!(g.get(0, 0), 1.0);
        assert_relative_eq!(g.get(0, 1), 1.0);
        assert_relative_eq!(g.get(1, 1), 2.0);
        // det = 1, G^{-1} = [[2,-1],[-1,1]], 1'G^{-1}1 = 1.
        let kernel = CollapsedDensityKernel::from_gram(&g).unwrap();
        assert_relative_eq!(kernel.quad_ones(), 1.0, max_relative = 1e-12);
        let (y, v) = (0.5, 2.0);
        let direct = (2.0 * PI * v * v).powi(-1) * (-y * y / (2.0 * v * v)).exp();
        assert_relative_eq!(kernel.evaluate(y, v), direct, max_relative = 1e-12);
        assert_relative_eq!(
            density_power_term(&g, y, v).unwrap(),
            direct,
            max_relative = 1e-12
        );
    }

    #[test]
    fn density_kernel_matches_explicit_inverse_3x3() {
        let g = SymMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.5 }).unwrap();
        let kernel = CollapsedDensityKernel::from_gram(&g).unwrap();
        // Explicit inverse of 2I + 0.5(J − I) = 1.5I + 0.5J:
        // G^{-1} = (1/1.5)(I − 0.5J/(1.5 + 0.5·3)); 1'G^{-1}1 = 3/(1.5+1.5) = 1.
        assert_relative_eq!(kernel.quad_ones(), 1.0, max_relative = 1e-12);
        // det = 1.5²·(1.5 + 0.5·3) = 2.25·3 = 6.75.
        let det: f64 = 6.75;
        let (y, v) = (0.8, 0.7);
        let direct = (2.0 * PI * v * v).powf(-1.5) / det.sqrt()
            * (-y * y * kernel.quad_ones() / (2.0 * v * v)).exp();
        assert_relative_eq!(kernel.evaluate(y, v), direct, max_relative = 1e-12);
    }

    #[test]
    fn singular_gram_is_rejected() {
        let g = build_gram(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(CollapsedDensityKernel::from_gram(&g).is_err());
    }

    #[test]
    fn collapsed_cf_square_mean_matches_direct_normal_sampling() {
        // (A, B) ~ N(0, v²G): compare E[cos(tA)cos(tB)] by Monte Carlo.
        let g = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (1, 1) => 1.2,
            _ => 0.3,
        })
        .unwrap();
        let (v, t) = (0.8, 1.1);
        let chol = g.cholesky().unwrap();
        let (l11, l21, l22) = (chol.get(0, 0), chol.get(1, 0), chol.get(1, 1));
        let mut rng = RngStream::from_root(31);
        let mut acc = StreamingMoments::new();
        for _ in 0..200_000 {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            let a = v * l11 * g1;
            let b = v * (l21 * g1 + l22 * g2);
            acc.push((t * a).cos() * (t * b).cos());
        }
        let exact = collapsed_cf_square_mean(&g, v, t);
        assert!(
            (acc.mean() - exact).abs() < 5.0 * acc.standard_error(),
            "MC {} vs collapsed {exact} (se {})",
            acc.mean(),
            acc.standard_error()
        );
        // Mean kernel sanity: norm2 = 2, v = 0.5, t = 1 ⟹ e^{−1/4}.
        assert_relative_eq!(
            collapsed_cf_mean(2.0, 0.5, 1.0),
            (-0.25f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn exact_rates_for_flat_spectrum_and_sphere_and_cube() {
        // Isotropic Gaussian: k(2σ⁴/d) + k(k−1)(σ⁴/d); k = 2, d = 20 ⟹ 0.30.
        let spec = gaussian_iso(1.0);
        let sheet = spec.moments(20).unwrap();
        assert_relative_eq!(
            exact_gram_rate(2, &sheet, 1.0).unwrap(),
            0.30,
            max_relative = 1e-12
        );
        // Uniform sphere: k(k−1)·r⁴/d; k = 2 ⟹ 2/d.
        let sphere = DataModelSpec::new(
            Family::SphereBingham { radius: RadiusRule::Constant, directional: BinghamRule::Zero },
            1.0,
        )
        .unwrap();
        let sheet = sphere.moments(64).unwrap();
        assert_relative_eq!(
            exact_gram_rate(2, &sheet, 1.0).unwrap(),
            2.0 / 64.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(exact_gram_rate(1, &sheet, 1.0).unwrap(), 0.0);
        // Deterministic cube: k·dL⁴/180 + k(k−1)·d(L²/12)²; k = 2, d = 10,
        // L² = 12σ²/d ⟹ 2·0.8/10 + 2·1/10 = 0.36.
        let cube =
            DataModelSpec::new(Family::Hypercube { side: SideRule::Deterministic }, 1.0).unwrap();
        let sheet = cube.moments(10).unwrap();
        assert_relative_eq!(
            exact_gram_rate(2, &sheet, 1.0).unwrap(),
            0.36,
            max_relative = 1e-12
        );
    }

    #[test]
    fn monte_carlo_rate_matches_exact_for_gaussian() {
        let spec = gaussian_iso(1.0);
        let d = 30;
        let exact = exact_gram_rate(2, &spec.moments(d).unwrap(), 1.0).unwrap();
        let sampler = spec.sampler(d).unwrap();
        let mut rng = RngStream::from_root(32);
        let est = estimate_gram_rate(2, &sampler, 1.0, 150_000, &mut rng).unwrap();
        assert!(
            (est.value() - exact).abs() < 5.0 * est.se(),
            "MC rate {} vs exact {exact} (se {})",
            est.value(),
            est.se()
        );
        // The dispatching front-end prefers the closed form.
        let mut rng = RngStream::from_root(33);
        assert!(matches!(
            gram_rate(2, &spec, d, 10, &mut rng).unwrap(),
            RateValue::Exact(_)
        ));
    }

    #[test]
    fn monte_carlo_rate_for_elliptical_t_matches_mixing_moments() {
        // X = √(ν/Q)·Σ^{1/2}Z with isotropic Σ of trace τ = (ν−2)/ν·σ²:
        // E(‖X‖²−σ²)² = (ν²/((ν−2)(ν−4)))·(τ² + 2τ²/d) − σ⁴ for σ² = E‖X‖².
        // ν = 10 keeps the Monte Carlo variance finite.
        let nu = 10.0;
        let d = 40;
        let spec = DataModelSpec::new(
            Family::StudentT { nu, profile: EigenProfile::Isotropic },
            1.0,
        )
        .unwrap();
        let tau = (nu - 2.0) / nu;
        let m2 = nu * nu / ((nu - 2.0) * (nu - 4.0));
        let expected = m2 * tau * tau * (1.0 + 2.0 / d as f64) - 1.0;
        let sampler = spec.sampler(d).unwrap();
        let mut rng = RngStream::from_root(34);
        let est = estimate_gram_rate(1, &sampler, 1.0, 200_000, &mut rng).unwrap();
        assert!(
            (est.value() - expected).abs() < 6.0 * est.se(),
            "t rate {} vs {expected} (se {})",
            est.value(),
            est.se()
        );
        // The sheet cannot provide this value, so the front-end estimates.
        let mut rng = RngStream::from_root(35);
        assert!(matches!(
            gram_rate(1, &spec, d, 1_000, &mut rng).unwrap(),
            RateValue::Estimated { .. }
        ));
        // ... and the estimate respects the provable lower bound.
        let lower = spec.moments(d).unwrap().var_norm2_lower.unwrap();
        assert!(est.value() > lower, "rate {} must exceed bound {lower}", est.value());
    }

    #[test]
    fn wishart_moment_frozen_values() {
        assert_relative_eq!(
            wishart_det_invsqrt_exact(4, 1, 1.0).unwrap(),
            (PI / 2.0).sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            wishart_det_invsqrt_exact(16, 2, 1.0).unwrap(),
            8.0 / 7.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            wishart_det_invsqrt_exact(3, 2, 1.0).unwrap(),
            3.0,
            max_relative = 1e-12
        );
        assert!(wishart_det_invsqrt_exact(2, 2, 1.0).is_err());
        assert!(wishart_det_invsqrt_exact(4, 0, 1.0).is_err());
    }

    #[test]
    fn determinant_moment_monte_carlo_matches_wishart() {
        for (i, (d, k)) in [(4usize, 1usize), (16, 2)].into_iter().enumerate() {
            let spec = gaussian_iso(1.0);
            let sampler = spec.sampler(d).unwrap();
            let mut rng = RngStream::from_root(40 + i as u64);
            let report = estimate_det_invsqrt(k, &sampler, 150_000, &mut rng).unwrap();
            let exact = wishart_det_invsqrt_exact(d, k, 1.0).unwrap();
            assert!(
                (report.estimate - exact).abs() < 5.0 * report.se,
                "d = {d}, k = {k}: MC {} vs exact {exact} (se {})",
                report.estimate,
                report.se
            );
            assert_eq!(report.excluded, 0);
            assert_eq!(report.reps, 150_000);
        }
    }

    #[test]
    fn determinant_moment_rejects_flat_dimensions() {
        let spec = gaussian_iso(1.0);
        let sampler = spec.sampler(2).unwrap();
        let mut rng = RngStream::from_root(44);
        assert!(matches!(
            estimate_det_invsqrt(3, &sampler, 100, &mut rng),
            Err(GramError::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn sphere_determinant_moment_for_one_vector_is_inverse_radius() {
        // k = 1 on the sphere of radius r: det A₁ = r² exactly.
        let spec = DataModelSpec::new(
            Family::SphereBingham { radius: RadiusRule::Constant, directional: BinghamRule::Zero },
            2.0,
        )
        .unwrap();
        let sampler = spec.sampler(8).unwrap();
        let mut rng = RngStream::from_root(45);
        let report = estimate_det_invsqrt(1, &sampler, 1_000, &mut rng).unwrap();
        assert_relative_eq!(report.estimate, 0.5, max_relative = 1e-12);
        assert!(report.se < 1e-14);
    }
}
