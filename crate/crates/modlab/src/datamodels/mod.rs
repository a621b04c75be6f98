//! Data-vector families: samplers and exact moment sheets.
//!
//! A data model is a family of laws for `X ∈ R^d`, one per dimension `d`,
//! whose scale is tied to a single target `σ`: in every family the squared
//! norm satisfies `E‖X‖² → σ²` (up to the documented profile corrections).
//! What distinguishes the families is *how fast* `‖X‖²` concentrates and how
//! fast independent copies decorrelate — exactly the two functionals driving
//! the projection limit laws.
//!
//! Families:
//!
//! - [`Family::SphereBingham`]: radius `r_d` (constant `σ` or a convergent
//!   drift rule) times a Bingham-distributed direction. `‖X‖²` is *exactly*
//!   `r_d²` — the degenerate extreme.
//! - [`Family::BallUniform`]: uniform on the radius-`r_d` ball.
//! - [`Family::DilatedBingham`]: Bingham direction scaled by a random radius
//!   in a shrinking window around `σ`.
//! - [`Family::Hypercube`]: product of uniforms on `[−L/2, L/2]` with side
//!   `L = σ√(12/d)`, deterministic or drawn from a shrinking window.
//! - [`Family::GaussianProfile`]: centered normal with diagonal covariance
//!   from an [`EigenProfile`].
//! - [`Family::StudentT`]: elliptical Student-t, covariance scaled by
//!   `(ν−2)/ν` so `E‖X‖²` matches the profile trace. Its `‖X‖²` does **not**
//!   concentrate — the canonical violation of the concentration condition.
//! - [`Family::Laplace`]: elliptical symmetric Laplace-type law
//!   (`X = √Q·Z`, `Q ~ χ²_ν`), covariance scaled by `1/ν`; also
//!   non-concentrating.
//!
//! [`DataModelSpec::moments`] returns the closed-form moment sheet with
//! availability flags; fields the contract treats as analytically unavailable
//! are `None` even when a formula happens to exist, so estimation code never
//! silently substitutes an analytic shortcut for the Monte Carlo route.

pub mod bingham;

pub use bingham::{BinghamError, BinghamSampler};

use crate::numerics::rng::RngStream;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use thiserror::Error;

/// Errors from data-model validation and sampling.
#[derive(Debug, Error)]
pub enum DataModelError {
    /// A parameter fails validation.
    #[error("invalid data-model parameter: {0}")]
    InvalidParameter(String),
    /// The family/dimension combination is not defined.
    #[error("dimension {d} unsupported: {reason}")]
    UnsupportedDimension {
        /// Requested dimension.
        d: usize,
        /// Why it is rejected.
        reason: String,
    },
    /// Directional sampling failed.
    #[error(transparent)]
    Bingham(#[from] BinghamError),
}

/// Eigenvalue profile for diagonal covariance matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenProfile {
    /// `λ_i = σ²/d`: perfectly flat spectrum.
    Isotropic,
    /// `λ_i = σ²/(i·ln d)`: trace `σ²·H_d/ln d → σ²` with a slowly decaying
    /// spectral head; requires `d ≥ 2`.
    LogHarmonic,
    /// `λ_i ∝ i^{−exponent}` normalized to trace `σ²`; `exponent > 1`.
    /// The spectral mass stays on finitely many directions, so `‖X‖²` never
    /// concentrates — a deliberate condition violator.
    Power {
        /// Decay exponent, `> 1`.
        exponent: f64,
    },
}

impl EigenProfile {
    fn validate(&self) -> Result<(), DataModelError> {
        if let EigenProfile::Power { exponent } = self {
            if !(exponent.is_finite() && *exponent > 1.0) {
                return Err(DataModelError::InvalidParameter(format!(
                    "power profile exponent must be finite and > 1, got {exponent}"
                )));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of the profile covariance at dimension `d`, scale `sigma`.
pub fn eigen_profile(
    profile: &EigenProfile,
    d: usize,
    sigma: f64,
) -> Result<Vec<f64>, DataModelError> {
    if d == 0 {
        return Err(DataModelError::UnsupportedDimension {
            d,
            reason: "dimension must be positive".into(),
        });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DataModelError::InvalidParameter(format!(
            "sigma must be finite and positive, got {sigma}"
        )));
    }
    profile.validate()?;
    let s2 = sigma * sigma;
    match *profile {
        EigenProfile::Isotropic => Ok(vec![s2 / d as f64; d]),
        EigenProfile::LogHarmonic => {
            if d < 2 {
                return Err(DataModelError::UnsupportedDimension {
                    d,
                    reason: "log-harmonic profile needs d ≥ 2".into(),
                });
            }
            let ln_d = (d as f64).ln();
            Ok((1..=d).map(|i| s2 / (i as f64 * ln_d)).collect())
        }
        EigenProfile::Power { exponent } => {
            let raw: Vec<f64> = (1..=d).map(|i| (i as f64).powf(-exponent)).collect();
            let sum: f64 = raw.iter().sum();
            Ok(raw.into_iter().map(|x| x * s2 / sum).collect())
        }
    }
}

/// Radius rule for sphere and ball families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusRule {
    /// `r_d = σ` for all `d`.
    Constant,
    /// `r_d = σ·(1 + coeff/√d)` — a convergent drift toward `σ`.
    Drift {
        /// Drift coefficient; `r_d` must stay positive at every requested `d`.
        coeff: f64,
    },
}

impl RadiusRule {
    fn radius(&self, sigma: f64, d: usize) -> Result<f64, DataModelError> {
        let r = match *self {
            RadiusRule::Constant => sigma,
            RadiusRule::Drift { coeff } => sigma * (1.0 + coeff / (d as f64).sqrt()),
        };
        if !(r.is_finite() && r > 0.0) {
            return Err(DataModelError::InvalidParameter(format!(
                "radius rule produced non-positive radius {r} at d = {d}"
            )));
        }
        Ok(r)
    }
}

/// Radial law for the dilated directional family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DilationRule {
    /// Degenerate radius `σ`.
    Constant,
    /// Radius uniform on `[σ−δ, σ+δ]` with `δ = σ/(2√d)` — a shrinking
    /// window, so `‖X‖² → σ²` in probability.
    UniformWindow,
}

/// Side rule for the hypercube family; the midpoint is always `σ√(12/d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideRule {
    /// `L = σ√(12/d)` exactly.
    Deterministic,
    /// `L` uniform on `[m(1−q), m(1+q)]` with `m = σ√(12/d)`, `q = 1/(4√d)`.
    UniformWindow,
}

/// Bingham directional parameter rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinghamRule {
    /// `Σ = 0`: uniform direction.
    Zero,
    /// Diagonal `Σ` with entries `±c·d^{(β−1)/2}` alternating (last entry 0
    /// when `d` is odd), so the trace vanishes and `‖Σ‖_F ≍ c·d^{β/2}`.
    AlternatingDiagonal {
        /// Entry scale, `c ≥ 0`.
        c: f64,
        /// Growth exponent, `0 ≤ β < 1`.
        beta: f64,
    },
}

impl BinghamRule {
    fn validate(&self) -> Result<(), DataModelError> {
        if let BinghamRule::AlternatingDiagonal { c, beta } = self {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(DataModelError::InvalidParameter(format!(
                    "Bingham entry scale must be finite and ≥ 0, got {c}"
                )));
            }
            if !(beta.is_finite() && (0.0..1.0).contains(beta)) {
                return Err(DataModelError::InvalidParameter(format!(
                    "Bingham growth exponent must lie in [0, 1), got {beta}"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of `Σ` at dimension `d`; `None` for the zero rule.
    pub fn diagonal(&self, d: usize) -> Option<Vec<f64>> {
        match *self {
            BinghamRule::Zero => None,
            BinghamRule::AlternatingDiagonal { c, beta } => {
                if c == 0.0 {
                    return None;
                }
                let scale = c * (d as f64).powf((beta - 1.0) / 2.0);
                let mut diag = vec![0.0; d];
                let pairs = d / 2;
                for i in 0..pairs {
                    diag[2 * i] = scale;
                    diag[2 * i + 1] = -scale;
                }
                Some(diag)
            }
        }
    }
}

/// A family of data laws indexed by dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Bingham direction on the sphere of radius `r_d`.
    SphereBingham {
        /// Radius rule.
        radius: RadiusRule,
        /// Directional parameter rule.
        directional: BinghamRule,
    },
    /// Uniform on the ball of radius `r_d`.
    BallUniform {
        /// Radius rule.
        radius: RadiusRule,
    },
    /// Bingham direction scaled by a random radius near `σ`.
    DilatedBingham {
        /// Radial law.
        dilation: DilationRule,
        /// Directional parameter rule.
        directional: BinghamRule,
    },
    /// Product of centered uniforms with side rule `L`.
    Hypercube {
        /// Side rule.
        side: SideRule,
    },
    /// Centered normal with diagonal profile covariance.
    GaussianProfile {
        /// Eigenvalue profile.
        profile: EigenProfile,
    },
    /// Elliptical Student-t with `ν` degrees of freedom; covariance scaled by
    /// `(ν−2)/ν` so the mean squared norm matches the profile trace.
    StudentT {
        /// Degrees of freedom, `> 2`.
        nu: f64,
        /// Eigenvalue profile.
        profile: EigenProfile,
    },
    /// Elliptical `X = √Q·Z`, `Q ~ χ²_ν`; covariance scaled by `1/ν`.
    Laplace {
        /// Mixing degrees of freedom, `> 0`.
        nu: f64,
        /// Eigenvalue profile.
        profile: EigenProfile,
    },
}

/// A validated data model: family plus target scale `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataModelSpec {
    family: Family,
    sigma: f64,
}

/// Closed-form moments of a data model at one dimension.
///
/// `None` means the contract treats the quantity as analytically unavailable
/// for this family — callers must estimate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSheet {
    /// Dimension the sheet was evaluated at.
    pub d: usize,
    /// `E‖X‖²`.
    pub e_norm2: Option<f64>,
    /// `Var(‖X‖²)`.
    pub var_norm2: Option<f64>,
    /// `E[(X'X̃)²]` for independent copies.
    pub e_cross2: Option<f64>,
    /// Provable lower bound on `Var(‖X‖²)` for families whose variance is
    /// unavailable in closed form but provably non-vanishing.
    pub var_norm2_lower: Option<f64>,
}

impl DataModelSpec {
    /// Validates and wraps a family with its target scale.
    pub fn new(family: Family, sigma: f64) -> Result<Self, DataModelError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(DataModelError::InvalidParameter(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        match &family {
            Family::SphereBingham { directional, .. }
            | Family::DilatedBingham { directional, .. } => directional.validate()?,
            Family::GaussianProfile { profile } => profile.validate()?,
            Family::StudentT { nu, profile } => {
                profile.validate()?;
                if !(nu.is_finite() && *nu > 2.0) {
                    return Err(DataModelError::InvalidParameter(format!(
                        "Student-t degrees of freedom must be > 2, got {nu}"
                    )));
                }
            }
            Family::Laplace { nu, profile } => {
                profile.validate()?;
                if !(nu.is_finite() && *nu > 0.0) {
                    return Err(DataModelError::InvalidParameter(format!(
                        "Laplace mixing degrees of freedom must be > 0, got {nu}"
                    )));
                }
            }
            Family::BallUniform { .. } | Family::Hypercube { .. } => {}
        }
        Ok(Self { family, sigma })
    }

    /// The family.
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Target scale `σ`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Eigenvalues of the *scaled* covariance actually sampled from, for the
    /// elliptical families (`GaussianProfile`, `StudentT`, `Laplace`);
    /// `None` for the geometric families.
    pub fn covariance_eigenvalues(&self, d: usize) -> Result<Option<Vec<f64>>, DataModelError> {
        match &self.family {
            Family::GaussianProfile { profile } => {
                Ok(Some(eigen_profile(profile, d, self.sigma)?))
            }
            Family::StudentT { nu, profile } => {
                let scale = (nu - 2.0) / nu;
                Ok(Some(
                    eigen_profile(profile, d, self.sigma)?.into_iter().map(|l| l * scale).collect(),
                ))
            }
            Family::Laplace { nu, profile } => Ok(Some(
                eigen_profile(profile, d, self.sigma)?.into_iter().map(|l| l / nu).collect(),
            )),
            _ => Ok(None),
        }
    }

    /// Closed-form moment sheet at dimension `d`.
    pub fn moments(&self, d: usize) -> Result<MomentSheet, DataModelError> {
        if d == 0 {
            return Err(DataModelError::UnsupportedDimension {
                d,
                reason: "dimension must be positive".into(),
            });
        }
        let df = d as f64;
        let sheet = match &self.family {
            Family::SphereBingham { radius, directional } => {
                let r = radius.radius(self.sigma, d)?;
                let r2 = r * r;
                let cross = match directional {
                    BinghamRule::Zero => Some(r2 * r2 / df),
                    BinghamRule::AlternatingDiagonal { c, .. } if *c == 0.0 => {
                        Some(r2 * r2 / df)
                    }
                    _ => None,
                };
                MomentSheet {
                    d,
                    e_norm2: Some(r2),
                    var_norm2: Some(0.0),
                    e_cross2: cross,
                    var_norm2_lower: None,
                }
            }
            Family::BallUniform { .. } | Family::DilatedBingham { .. } => MomentSheet {
                d,
                e_norm2: None,
                var_norm2: None,
                e_cross2: None,
                var_norm2_lower: None,
            },
            Family::Hypercube { side } => match side {
                SideRule::Deterministic => {
                    let l2 = self.sigma * self.sigma * 12.0 / df;
                    MomentSheet {
                        d,
                        e_norm2: Some(df * l2 / 12.0),
                        var_norm2: Some(df * l2 * l2 / 180.0),
                        e_cross2: Some(df * (l2 / 12.0) * (l2 / 12.0)),
                        var_norm2_lower: None,
                    }
                }
                SideRule::UniformWindow => MomentSheet {
                    d,
                    e_norm2: None,
                    var_norm2: None,
                    e_cross2: None,
                    var_norm2_lower: None,
                },
            },
            Family::GaussianProfile { .. } => {
                let lam = self.covariance_eigenvalues(d)?.expect("elliptical family");
                let tr: f64 = lam.iter().sum();
                let tr2: f64 = lam.iter().map(|l| l * l).sum();
                MomentSheet {
                    d,
                    e_norm2: Some(tr),
                    var_norm2: Some(2.0 * tr2),
                    e_cross2: Some(tr2),
                    var_norm2_lower: None,
                }
            }
            Family::StudentT { nu, .. } => {
                let lam = self.covariance_eigenvalues(d)?.expect("elliptical family");
                let tr: f64 = lam.iter().sum();
                let tr2: f64 = lam.iter().map(|l| l * l).sum();
                let lower = if *nu > 4.0 {
                    Some(nu * tr * tr / ((nu - 4.0) * (nu - 2.0) * (nu - 2.0)))
                } else {
                    None
                };
                MomentSheet {
                    d,
                    e_norm2: Some(nu / (nu - 2.0) * tr),
                    var_norm2: None,
                    e_cross2: Some(nu * nu / ((nu - 2.0) * (nu - 2.0)) * tr2),
                    var_norm2_lower: lower,
                }
            }
            Family::Laplace { nu, .. } => {
                let lam = self.covariance_eigenvalues(d)?.expect("elliptical family");
                let tr: f64 = lam.iter().sum();
                let tr2: f64 = lam.iter().map(|l| l * l).sum();
                MomentSheet {
                    d,
                    e_norm2: Some(nu * tr),
                    var_norm2: None,
                    e_cross2: Some(nu * nu * tr2),
                    var_norm2_lower: None,
                }
            }
        };
        Ok(sheet)
    }

    /// Builds the per-dimension sampler (precomputes spectra, envelopes and
    /// mixing distributions so the per-draw cost is minimal).
    pub fn sampler(&self, d: usize) -> Result<DataSampler, DataModelError> {
        if d == 0 {
            return Err(DataModelError::UnsupportedDimension {
                d,
                reason: "dimension must be positive".into(),
            });
        }
        let df = d as f64;
        let kind = match &self.family {
            Family::SphereBingham { radius, directional } => {
                let r = radius.radius(self.sigma, d)?;
                let bingham = match directional.diagonal(d) {
                    Some(diag) => Some(BinghamSampler::from_diagonal(&diag)?),
                    None => None,
                };
                SamplerKind::Sphere { r, bingham }
            }
            Family::BallUniform { radius } => {
                SamplerKind::Ball { r: radius.radius(self.sigma, d)? }
            }
            Family::DilatedBingham { dilation, directional } => {
                let bingham = match directional.diagonal(d) {
                    Some(diag) => Some(BinghamSampler::from_diagonal(&diag)?),
                    None => None,
                };
                let (lo, hi) = match dilation {
                    DilationRule::Constant => (self.sigma, self.sigma),
                    DilationRule::UniformWindow => {
                        let delta = self.sigma / (2.0 * df.sqrt());
                        (self.sigma - delta, self.sigma + delta)
                    }
                };
                SamplerKind::Dilated { lo, hi, bingham }
            }
            Family::Hypercube { side } => {
                let m = self.sigma * (12.0 / df).sqrt();
                let (lo, hi) = match side {
                    SideRule::Deterministic => (m, m),
                    SideRule::UniformWindow => {
                        let q = 1.0 / (4.0 * df.sqrt());
                        (m * (1.0 - q), m * (1.0 + q))
                    }
                };
                SamplerKind::Hypercube { lo, hi }
            }
            Family::GaussianProfile { .. } => SamplerKind::Gaussian {
                scales: sqrt_all(self.covariance_eigenvalues(d)?.expect("elliptical family")),
            },
            Family::StudentT { nu, .. } => SamplerKind::StudentT {
                nu: *nu,
                chi2: ChiSquared::new(*nu).map_err(|e| {
                    DataModelError::InvalidParameter(format!("chi-square mixing: {e}"))
                })?,
                scales: sqrt_all(self.covariance_eigenvalues(d)?.expect("elliptical family")),
            },
            Family::Laplace { nu, .. } => SamplerKind::Laplace {
                chi2: ChiSquared::new(*nu).map_err(|e| {
                    DataModelError::InvalidParameter(format!("chi-square mixing: {e}"))
                })?,
                scales: sqrt_all(self.covariance_eigenvalues(d)?.expect("elliptical family")),
            },
        };
        Ok(DataSampler { d, kind })
    }
}

fn sqrt_all(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(f64::sqrt).collect()
}

/// Per-dimension sampler with precomputed state. Immutable once built;
/// sampling is reentrant (acceptance counters are atomic).
#[derive(Debug)]
pub struct DataSampler {
    d: usize,
    kind: SamplerKind,
}

#[derive(Debug)]
enum SamplerKind {
    Sphere { r: f64, bingham: Option<BinghamSampler> },
    Ball { r: f64 },
    Dilated { lo: f64, hi: f64, bingham: Option<BinghamSampler> },
    Hypercube { lo: f64, hi: f64 },
    Gaussian { scales: Vec<f64> },
    StudentT { nu: f64, chi2: ChiSquared<f64>, scales: Vec<f64> },
    Laplace { chi2: ChiSquared<f64>, scales: Vec<f64> },
}

impl DataSampler {
    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Realized acceptance rate of the directional rejection sampler, when
    /// this family uses one and it has been exercised.
    pub fn bingham_acceptance(&self) -> Option<f64> {
        match &self.kind {
            SamplerKind::Sphere { bingham: Some(b), .. }
            | SamplerKind::Dilated { bingham: Some(b), .. } => {
                let rate = b.acceptance_rate();
                if rate.is_nan() {
                    None
                } else {
                    Some(rate)
                }
            }
            _ => None,
        }
    }

    /// Draws one data vector into `out` (`out.len()` must equal `dim()`).
    pub fn sample_into(
        &self,
        rng: &mut RngStream,
        out: &mut [f64],
    ) -> Result<(), DataModelError> {
        assert_eq!(out.len(), self.d, "output buffer length must equal the dimension");
        let d = self.d;
        match &self.kind {
            SamplerKind::Sphere { r, bingham } => {
                direction_into(rng, bingham.as_ref(), out)?;
                for x in out.iter_mut() {
                    *x *= r;
                }
            }
            SamplerKind::Ball { r } => {
                direction_into(rng, None, out)?;
                let u = rng.open01();
                let radial = r * u.powf(1.0 / d as f64);
                for x in out.iter_mut() {
                    *x *= radial;
                }
            }
            SamplerKind::Dilated { lo, hi, bingham } => {
                direction_into(rng, bingham.as_ref(), out)?;
                let radial = if lo == hi { *lo } else { lo + (hi - lo) * rng.open01() };
                for x in out.iter_mut() {
                    *x *= radial;
                }
            }
            SamplerKind::Hypercube { lo, hi } => {
                let side = if lo == hi { *lo } else { lo + (hi - lo) * rng.open01() };
                for x in out.iter_mut() {
                    *x = side * (rng.open01() - 0.5);
                }
            }
            SamplerKind::Gaussian { scales } => {
                for (x, s) in out.iter_mut().zip(scales) {
                    let g: f64 = rng.sample(StandardNormal);
                    *x = g * s;
                }
            }
            SamplerKind::StudentT { nu, chi2, scales } => {
                let q: f64 = chi2.sample(rng);
                let factor = (nu / q).sqrt();
                for (x, s) in out.iter_mut().zip(scales) {
                    let g: f64 = rng.sample(StandardNormal);
                    *x = g * s * factor;
                }
            }
            SamplerKind::Laplace { chi2, scales } => {
                let q: f64 = chi2.sample(rng);
                let factor = q.sqrt();
                for (x, s) in out.iter_mut().zip(scales) {
                    let g: f64 = rng.sample(StandardNormal);
                    *x = g * s * factor;
                }
            }
        }
        Ok(())
    }

    /// Draws one data vector.
    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>, DataModelError> {
        let mut out = vec![0.0; self.d];
        self.sample_into(rng, &mut out)?;
        Ok(out)
    }
}

/// Fills `out` with a unit direction: Bingham when a sampler is given,
/// uniform otherwise (normalized standard normals).
fn direction_into(
    rng: &mut RngStream,
    bingham: Option<&BinghamSampler>,
    out: &mut [f64],
) -> Result<(), DataModelError> {
    match bingham {
        Some(b) => {
            let y = b.sample(rng)?;
            out.copy_from_slice(&y);
        }
        None => loop {
            let mut norm2 = 0.0;
            for x in out.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *x = g;
                norm2 += g * g;
            }
            if norm2 > 0.0 {
                let inv = 1.0 / norm2.sqrt();
                for x in out.iter_mut() {
                    *x *= inv;
                }
                break;
            }
        },
    }
    Ok(())
}
