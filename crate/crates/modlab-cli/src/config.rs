//! Experiment configuration: a flat INI-like file format with a canonical
//! serialization.
//!
//! A configuration file holds exactly one experiment, described by up to four
//! sections:
//!
//! ```text
//! [experiment]            # always required
//! name    = sphere-bound  # report file stem; [A-Za-z0-9._-]+
//! kind    = density-bound # experiment kind, selects the legal [check] keys
//! seed    = 7             # root seed; mandatory, there is no wall-clock default
//! workers = 4             # worker threads (results are fixed per worker count)
//! reps    = 20000         # Monte Carlo replicates, at least 100
//! format  = csv           # csv | json
//!
//! [data]                  # data-vector law (kinds that sample data)
//! family  = sphere        # sphere|ball|dilated|hypercube|gaussian|student-t|laplace
//! sigma   = 1             # limiting projection scale, > 0
//! radius  = constant      # sphere/ball: constant | drift:<coeff>
//! bingham = zero          # sphere/dilated: zero | alternating:<c>:<beta>
//!
//! [modulator]             # modulating-vector mixture (kinds that modulate)
//! family  = gaussian      # gaussian | student-t | laplace | stable
//!
//! [check]                 # kind-specific knobs, e.g. for density-bound:
//! d    = 64
//! j    = 2
//! grid = -3:3:25
//! ```
//!
//! Lines starting with `#` or `;` are comments. Keys may not repeat, sections
//! may not repeat, and every key must belong to the schema of its section for
//! the declared kind — unknown or inapplicable keys are rejected with their
//! line number. Parsing is total: `parse(serialize(c)) == c` for every config,
//! and the config hash is computed over the canonical serialization so
//! formatting variations of the same config hash identically.

use std::collections::BTreeMap;
use std::fmt;

use modlab::datamodels::{
    BinghamRule, DataModelSpec, DilationRule, EigenProfile, Family, RadiusRule, SideRule,
};
use modlab::modulators::ModulatorSpec;
use thiserror::Error;

/// Default worker count when a config omits `workers`.
pub const DEFAULT_WORKERS: usize = 4;

/// Minimum replicate count accepted in a config.
pub const MIN_REPS: u64 = 100;

/// Default evaluation grid for density comparisons.
pub const DEFAULT_DENSITY_GRID: GridSpec = GridSpec { lo: -3.0, hi: 3.0, count: 25 };

/// Default frequency grid for the characteristic-exponent residual scan
/// (`t ∈ [0, 5]` in steps of `0.01`).
pub const DEFAULT_T_GRID: GridSpec = GridSpec { lo: 0.0, hi: 5.0, count: 501 };

/// Errors raised while parsing or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// A line that is neither a section header, a comment, nor `key = value`.
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax {
        /// 1-based line number.
        line: usize,
        /// Offending text.
        text: String,
    },
    /// A section header not in the schema.
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection {
        /// 1-based line number.
        line: usize,
        /// Section name as written.
        name: String,
    },
    /// A section that appears twice.
    #[error("line {line}: duplicate section [{name}]")]
    DuplicateSection {
        /// 1-based line number.
        line: usize,
        /// Section name.
        name: String,
    },
    /// A key before any section header.
    #[error("line {line}: key `{key}` appears before any section header")]
    KeyOutsideSection {
        /// 1-based line number.
        line: usize,
        /// Key name.
        key: String,
    },
    /// A key that repeats within its section.
    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    DuplicateKey {
        /// 1-based line number.
        line: usize,
        /// Section name.
        section: String,
        /// Key name.
        key: String,
    },
    /// A key not in the schema of its section (for the declared kind).
    #[error("line {line}: unknown key `{key}` in [{section}]{hint}")]
    UnknownKey {
        /// 1-based line number.
        line: usize,
        /// Section name.
        section: String,
        /// Key name.
        key: String,
        /// Explanation when the key exists but does not apply.
        hint: String,
    },
    /// A value that does not parse for its key.
    #[error("line {line}: invalid value for `{key}` in [{section}]: {msg}")]
    InvalidValue {
        /// 1-based line number.
        line: usize,
        /// Section name.
        section: String,
        /// Key name.
        key: String,
        /// Reason.
        msg: String,
    },
    /// A required section that is absent.
    #[error("missing section [{name}]{hint}")]
    MissingSection {
        /// Section name.
        name: String,
        /// Why the section is required.
        hint: String,
    },
    /// A section that the declared kind does not consume.
    #[error("line {line}: section [{name}] is not used by kind `{kind}`")]
    UnusedSection {
        /// 1-based line number.
        line: usize,
        /// Section name.
        name: String,
        /// Declared kind.
        kind: String,
    },
    /// A required key that is absent.
    #[error("missing key `{key}` in [{section}]{hint}")]
    MissingKey {
        /// Section name.
        section: String,
        /// Key name.
        key: String,
        /// Why the key is required.
        hint: String,
    },
    /// A semantic constraint violation (ranges, orderings, name charset).
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Comma-separated values with `#`-prefixed metadata lines.
    Csv,
    /// A JSON object mirroring the CSV columns as named fields.
    Json,
}

impl OutputFormat {
    /// File extension for reports in this format.
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Experiment kind; selects the estimator and the legal `[check]` keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Convergence trace of the norm/cross/determinant conditions over a
    /// dimension schedule.
    Conditions,
    /// Sup-distance of conditional density powers against the limit, with the
    /// quantitative rate bound.
    DensityBound,
    /// CDF increment regularity over intervals.
    CdfLipschitz,
    /// Variance of the conditional characteristic function at one frequency
    /// against its mixture limit.
    StableCounterexample,
    /// Characteristic-exponent residual scan over a frequency grid.
    Polya,
    /// Joint-normality diagnostics of the projection array.
    MatrixNormal,
    /// Inverse-root determinant moment against the closed-form Wishart value.
    WishartOracle,
}

impl ExperimentKind {
    /// All kinds, in CLI declaration order.
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Conditions,
        ExperimentKind::DensityBound,
        ExperimentKind::CdfLipschitz,
        ExperimentKind::StableCounterexample,
        ExperimentKind::Polya,
        ExperimentKind::MatrixNormal,
        ExperimentKind::WishartOracle,
    ];

    /// Canonical config-file name of the kind.
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Conditions => "conditions",
            ExperimentKind::DensityBound => "density-bound",
            ExperimentKind::CdfLipschitz => "cdf-lipschitz",
            ExperimentKind::StableCounterexample => "stable-counterexample",
            ExperimentKind::Polya => "polya",
            ExperimentKind::MatrixNormal => "matrix-normal",
            ExperimentKind::WishartOracle => "wishart-oracle",
        }
    }

    fn from_str_named(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Whether the kind samples data vectors (consumes `[data]`).
    pub fn uses_data(self) -> bool {
        !matches!(self, ExperimentKind::Polya | ExperimentKind::WishartOracle)
    }

    /// Whether the kind draws a modulating mixture (consumes `[modulator]`).
    pub fn uses_modulator(self) -> bool {
        matches!(
            self,
            ExperimentKind::DensityBound
                | ExperimentKind::CdfLipschitz
                | ExperimentKind::StableCounterexample
                | ExperimentKind::Polya
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A uniform evaluation grid `lo..hi` with `count` points, written
/// `lo:hi:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Left endpoint.
    pub lo: f64,
    /// Right endpoint.
    pub hi: f64,
    /// Number of points (≥ 1; a single point sits at `lo`).
    pub count: usize,
}

impl GridSpec {
    /// Materializes the grid points.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + step * i as f64).collect()
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(format!("grid endpoints must be finite, got {}:{}", self.lo, self.hi));
        }
        if self.count == 0 {
            return Err("grid must contain at least one point".into());
        }
        if self.count > 1 && self.lo >= self.hi {
            return Err(format!("grid needs lo < hi for multiple points, got {}:{}", self.lo, self.hi));
        }
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

/// Data-vector law: family plus the limiting projection scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    /// Sampling family with its per-family rules.
    pub family: Family,
    /// Limiting projection scale `σ > 0`.
    pub sigma: f64,
}

impl DataConfig {
    /// Builds the validated core data-model spec.
    pub fn spec(&self) -> Result<DataModelSpec, ConfigError> {
        DataModelSpec::new(self.family, self.sigma)
            .map_err(|e| ConfigError::Invalid(format!("[data] rejected: {e}")))
    }
}

/// Kind-specific `[check]` parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckParams {
    /// Dimension schedule and determinant order for condition traces.
    Conditions {
        /// Strictly increasing dimension schedule.
        dims: Vec<usize>,
        /// Gram order of the determinant-moment pass.
        det_order: usize,
    },
    /// Dimension, power order and evaluation grid for the density bound.
    DensityBound {
        /// Ambient dimension.
        d: usize,
        /// Density power order.
        j: u32,
        /// Evaluation grid.
        grid: GridSpec,
    },
    /// Dimension, power order and intervals for CDF increment regularity.
    CdfLipschitz {
        /// Ambient dimension.
        d: usize,
        /// Number of joint projections.
        j: u32,
        /// Intervals `(a, y)` with `a ≤ y`.
        intervals: Vec<(f64, f64)>,
    },
    /// Dimension and frequency for the cf-variance check.
    StableCounterexample {
        /// Ambient dimension.
        d: usize,
        /// Evaluation frequency.
        t: f64,
    },
    /// Frequency grid for the residual scan.
    Polya {
        /// Frequency grid.
        t_grid: GridSpec,
    },
    /// Array shape for the joint-normality diagnostics.
    MatrixNormal {
        /// Ambient dimension.
        d: usize,
        /// Number of data vectors.
        k: usize,
        /// Number of modulating vectors.
        l: usize,
    },
    /// Dimension and Gram order for the determinant-moment oracle.
    WishartOracle {
        /// Ambient dimension.
        d: usize,
        /// Gram order.
        k: usize,
    },
}

impl CheckParams {
    /// The kind these parameters belong to.
    pub fn kind(&self) -> ExperimentKind {
        match self {
            CheckParams::Conditions { .. } => ExperimentKind::Conditions,
            CheckParams::DensityBound { .. } => ExperimentKind::DensityBound,
            CheckParams::CdfLipschitz { .. } => ExperimentKind::CdfLipschitz,
            CheckParams::StableCounterexample { .. } => ExperimentKind::StableCounterexample,
            CheckParams::Polya { .. } => ExperimentKind::Polya,
            CheckParams::MatrixNormal { .. } => ExperimentKind::MatrixNormal,
            CheckParams::WishartOracle { .. } => ExperimentKind::WishartOracle,
        }
    }
}

/// One fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Report file stem (restricted charset).
    pub name: String,
    /// Root seed; mandatory in every config.
    pub seed: u64,
    /// Worker threads.
    pub workers: usize,
    /// Monte Carlo replicates.
    pub reps: u64,
    /// Report format.
    pub format: OutputFormat,
    /// Data law; present exactly when the kind samples data (for
    /// `wishart-oracle` an optional isotropic-Gaussian override).
    pub data: Option<DataConfig>,
    /// Modulating mixture; present exactly when the kind modulates.
    pub modulator: Option<ModulatorSpec>,
    /// Kind-specific parameters.
    pub check: CheckParams,
}

impl ExperimentConfig {
    /// The experiment kind.
    pub fn kind(&self) -> ExperimentKind {
        self.check.kind()
    }

    /// FNV-1a 64 hash of the canonical serialization. A fingerprint for
    /// report metadata, not a cryptographic commitment.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.serialize().as_bytes())
    }

    /// Canonical serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("[experiment]\n");
        out.push_str(&format!("name = {}\n", self.name));
        out.push_str(&format!("kind = {}\n", self.kind()));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("workers = {}\n", self.workers));
        out.push_str(&format!("reps = {}\n", self.reps));
        out.push_str(&format!("format = {}\n", self.format));
        if let Some(data) = &self.data {
            out.push('\n');
            out.push_str("[data]\n");
            serialize_data(&mut out, data);
        }
        if let Some(modulator) = &self.modulator {
            out.push('\n');
            out.push_str("[modulator]\n");
            serialize_modulator(&mut out, modulator);
        }
        out.push('\n');
        out.push_str("[check]\n");
        serialize_check(&mut out, &self.check);
        out
    }

    /// Parses and validates a config file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = split_sections(text)?;
        let config = assemble(sections)?;
        config.validate()?;
        Ok(config)
    }

    /// Semantic validation beyond key-level parsing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.')
        {
            return Err(ConfigError::Invalid(format!(
                "name `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        if self.workers == 0 || self.workers > 4096 {
            return Err(ConfigError::Invalid(format!(
                "workers must lie in 1..=4096, got {}",
                self.workers
            )));
        }
        if self.reps < MIN_REPS {
            return Err(ConfigError::Invalid(format!(
                "reps must be at least {MIN_REPS}, got {}",
                self.reps
            )));
        }
        let kind = self.kind();
        match (&self.data, kind.uses_data()) {
            (None, true) if kind != ExperimentKind::WishartOracle => {
                return Err(ConfigError::MissingSection {
                    name: "data".into(),
                    hint: format!(" (kind `{kind}` samples data vectors)"),
                })
            }
            (Some(_), false) if kind != ExperimentKind::WishartOracle => {
                return Err(ConfigError::Invalid(format!(
                    "kind `{kind}` does not sample data; remove [data]"
                )))
            }
            _ => {}
        }
        if let Some(data) = &self.data {
            data.spec()?;
            if kind == ExperimentKind::WishartOracle
                && data.family != (Family::GaussianProfile { profile: EigenProfile::Isotropic })
            {
                return Err(ConfigError::Invalid(
                    "wishart-oracle compares against the isotropic-Gaussian closed form; \
                     [data] may only set family = gaussian with profile = isotropic"
                        .into(),
                ));
            }
        }
        match (&self.modulator, kind.uses_modulator()) {
            (None, true) => {
                return Err(ConfigError::MissingSection {
                    name: "modulator".into(),
                    hint: format!(" (kind `{kind}` draws a modulating mixture)"),
                })
            }
            (Some(_), false) => {
                return Err(ConfigError::Invalid(format!(
                    "kind `{kind}` does not modulate; remove [modulator]"
                )))
            }
            _ => {}
        }
        if let Some(modulator) = &self.modulator {
            modulator
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("[modulator] rejected: {e}")))?;
        }
        match &self.check {
            CheckParams::Conditions { dims, det_order } => {
                if dims.is_empty() {
                    return Err(ConfigError::Invalid("dims must be non-empty".into()));
                }
                if !dims.windows(2).all(|w| w[0] < w[1]) {
                    return Err(ConfigError::Invalid(format!(
                        "dims must be strictly increasing, got {dims:?}"
                    )));
                }
                if *det_order == 0 || *det_order > 16 {
                    return Err(ConfigError::Invalid(format!(
                        "det_order must lie in 1..=16, got {det_order}"
                    )));
                }
            }
            CheckParams::DensityBound { d, j, grid } => {
                require_order(*d, *j)?;
                grid.validate().map_err(ConfigError::Invalid)?;
            }
            CheckParams::CdfLipschitz { d, j, intervals } => {
                require_order(*d, *j)?;
                if intervals.is_empty() {
                    return Err(ConfigError::Invalid("intervals must be non-empty".into()));
                }
                for &(a, y) in intervals {
                    if !(a.is_finite() && y.is_finite() && a <= y) {
                        return Err(ConfigError::Invalid(format!(
                            "interval endpoints must be finite with a ≤ y, got {a}:{y}"
                        )));
                    }
                }
            }
            CheckParams::StableCounterexample { d, t } => {
                if *d == 0 {
                    return Err(ConfigError::Invalid("d must be positive".into()));
                }
                if !t.is_finite() {
                    return Err(ConfigError::Invalid(format!("t must be finite, got {t}")));
                }
            }
            CheckParams::Polya { t_grid } => {
                t_grid.validate().map_err(ConfigError::Invalid)?;
                if t_grid.lo < 0.0 {
                    return Err(ConfigError::Invalid(format!(
                        "t_grid must stay in t ≥ 0, got lo = {}",
                        t_grid.lo
                    )));
                }
            }
            CheckParams::MatrixNormal { d, k, l } => {
                if *d == 0 || *k == 0 || *l == 0 {
                    return Err(ConfigError::Invalid("d, k, l must be positive".into()));
                }
                if k.saturating_mul(*l) > 16 {
                    return Err(ConfigError::Invalid(format!(
                        "projection array k·l must stay ≤ 16, got {k}·{l}"
                    )));
                }
            }
            CheckParams::WishartOracle { d, k } => {
                if *k == 0 || *k > 16 {
                    return Err(ConfigError::Invalid(format!("k must lie in 1..=16, got {k}")));
                }
                if *d < k + 1 {
                    return Err(ConfigError::Invalid(format!(
                        "the closed-form determinant moment needs d ≥ k + 1, got d = {d}, k = {k}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn require_order(d: usize, j: u32) -> Result<(), ConfigError> {
    if j == 0 || j > 16 {
        return Err(ConfigError::Invalid(format!("j must lie in 1..=16, got {j}")));
    }
    if d < j as usize {
        return Err(ConfigError::Invalid(format!("d must be at least j, got d = {d}, j = {j}")));
    }
    Ok(())
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn serialize_data(out: &mut String, data: &DataConfig) {
    let push = |out: &mut String, k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    match &data.family {
        Family::SphereBingham { radius, directional } => {
            push(out, "family", "sphere".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(out, "radius", radius_str(radius));
            push(out, "bingham", bingham_str(directional));
        }
        Family::BallUniform { radius } => {
            push(out, "family", "ball".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(out, "radius", radius_str(radius));
        }
        Family::DilatedBingham { dilation, directional } => {
            push(out, "family", "dilated".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(
                out,
                "dilation",
                match dilation {
                    DilationRule::Constant => "constant".into(),
                    DilationRule::UniformWindow => "window".into(),
                },
            );
            push(out, "bingham", bingham_str(directional));
        }
        Family::Hypercube { side } => {
            push(out, "family", "hypercube".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(
                out,
                "side",
                match side {
                    SideRule::Deterministic => "deterministic".into(),
                    SideRule::UniformWindow => "window".into(),
                },
            );
        }
        Family::GaussianProfile { profile } => {
            push(out, "family", "gaussian".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(out, "profile", profile_str(profile));
        }
        Family::StudentT { nu, profile } => {
            push(out, "family", "student-t".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(out, "nu", fmt_f64(*nu));
            push(out, "profile", profile_str(profile));
        }
        Family::Laplace { nu, profile } => {
            push(out, "family", "laplace".into());
            push(out, "sigma", fmt_f64(data.sigma));
            push(out, "nu", fmt_f64(*nu));
            push(out, "profile", profile_str(profile));
        }
    }
}

fn serialize_modulator(out: &mut String, modulator: &ModulatorSpec) {
    match modulator {
        ModulatorSpec::Gaussian => out.push_str("family = gaussian\n"),
        ModulatorSpec::StudentT { nu } => {
            out.push_str("family = student-t\n");
            out.push_str(&format!("nu = {}\n", fmt_f64(*nu)));
        }
        ModulatorSpec::Laplace { nu } => {
            out.push_str("family = laplace\n");
            out.push_str(&format!("nu = {}\n", fmt_f64(*nu)));
        }
        ModulatorSpec::Stable { cf_index } => {
            out.push_str("family = stable\n");
            out.push_str(&format!("alpha = {}\n", fmt_f64(*cf_index)));
        }
    }
}

fn serialize_check(out: &mut String, check: &CheckParams) {
    let push = |out: &mut String, k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    match check {
        CheckParams::Conditions { dims, det_order } => {
            let dims_s = dims.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
            push(out, "dims", dims_s);
            push(out, "det_order", det_order.to_string());
        }
        CheckParams::DensityBound { d, j, grid } => {
            push(out, "d", d.to_string());
            push(out, "j", j.to_string());
            push(out, "grid", grid.to_string());
        }
        CheckParams::CdfLipschitz { d, j, intervals } => {
            push(out, "d", d.to_string());
            push(out, "j", j.to_string());
            let iv = intervals
                .iter()
                .map(|(a, y)| format!("{}:{}", fmt_f64(*a), fmt_f64(*y)))
                .collect::<Vec<_>>()
                .join(",");
            push(out, "intervals", iv);
        }
        CheckParams::StableCounterexample { d, t } => {
            push(out, "d", d.to_string());
            push(out, "t", fmt_f64(*t));
        }
        CheckParams::Polya { t_grid } => push(out, "t_grid", t_grid.to_string()),
        CheckParams::MatrixNormal { d, k, l } => {
            push(out, "d", d.to_string());
            push(out, "k", k.to_string());
            push(out, "l", l.to_string());
        }
        CheckParams::WishartOracle { d, k } => {
            push(out, "d", d.to_string());
            push(out, "k", k.to_string());
        }
    }
}

fn radius_str(rule: &RadiusRule) -> String {
    match rule {
        RadiusRule::Constant => "constant".into(),
        RadiusRule::Drift { coeff } => format!("drift:{}", fmt_f64(*coeff)),
    }
}

fn bingham_str(rule: &BinghamRule) -> String {
    match rule {
        BinghamRule::Zero => "zero".into(),
        BinghamRule::AlternatingDiagonal { c, beta } => {
            format!("alternating:{}:{}", fmt_f64(*c), fmt_f64(*beta))
        }
    }
}

fn profile_str(profile: &EigenProfile) -> String {
    match profile {
        EigenProfile::Isotropic => "isotropic".into(),
        EigenProfile::LogHarmonic => "log-harmonic".into(),
        EigenProfile::Power { exponent } => format!("power:{}", fmt_f64(*exponent)),
    }
}

/// Shortest round-trip decimal for a finite f64 (`Display` is exact since
/// Rust 1.0 prints the shortest representation that parses back bit-equal).
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct RawSection {
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
    order: Vec<String>,
}

fn split_sections(text: &str) -> Result<BTreeMap<String, RawSection>, ConfigError> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(ConfigError::Syntax { line: line_no, text: line.into() });
            };
            let name = name.trim().to_string();
            if !matches!(name.as_str(), "experiment" | "data" | "modulator" | "check") {
                return Err(ConfigError::UnknownSection { line: line_no, name });
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::DuplicateSection { line: line_no, name });
            }
            sections.insert(
                name.clone(),
                RawSection { line: line_no, keys: BTreeMap::new(), order: Vec::new() },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: line_no, text: line.into() });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax { line: line_no, text: line.into() });
        }
        let Some(section) = &current else {
            return Err(ConfigError::KeyOutsideSection { line: line_no, key });
        };
        let raw = sections.get_mut(section).expect("current section exists");
        if raw.keys.contains_key(&key) {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                section: section.clone(),
                key,
            });
        }
        raw.order.push(key.clone());
        raw.keys.insert(key, (line_no, value));
    }
    Ok(sections)
}

/// Tracks which keys of a raw section were consumed; leftovers become
/// [`ConfigError::UnknownKey`] with their line numbers.
struct KeyBag {
    section: &'static str,
    keys: BTreeMap<String, (usize, String)>,
    order: Vec<String>,
}

impl KeyBag {
    fn new(section: &'static str, raw: RawSection) -> Self {
        KeyBag { section, keys: raw.keys, order: raw.order }
    }

    fn empty(section: &'static str) -> Self {
        KeyBag { section, keys: BTreeMap::new(), order: Vec::new() }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.keys.remove(key)
    }

    fn require(&mut self, key: &str, hint: &str) -> Result<(usize, String), ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.section.into(),
            key: key.into(),
            hint: hint.into(),
        })
    }

    /// Errors on the first (in file order) unconsumed key.
    fn finish(self, hint_for: impl Fn(&str) -> String) -> Result<(), ConfigError> {
        for key in &self.order {
            if let Some((line, _)) = self.keys.get(key) {
                return Err(ConfigError::UnknownKey {
                    line: *line,
                    section: self.section.into(),
                    key: key.clone(),
                    hint: hint_for(key),
                });
            }
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(
    section: &str,
    key: &str,
    entry: &(usize, String),
    what: &str,
) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    entry.1.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        line: entry.0,
        section: section.into(),
        key: key.into(),
        msg: format!("expected {what}, got `{}` ({e})", entry.1),
    })
}

fn invalid(section: &str, key: &str, entry: &(usize, String), msg: String) -> ConfigError {
    ConfigError::InvalidValue { line: entry.0, section: section.into(), key: key.into(), msg }
}

fn assemble(mut sections: BTreeMap<String, RawSection>) -> Result<ExperimentConfig, ConfigError> {
    let Some(experiment_raw) = sections.remove("experiment") else {
        return Err(ConfigError::MissingSection {
            name: "experiment".into(),
            hint: " (every config starts with [experiment])".into(),
        });
    };
    let mut exp = KeyBag::new("experiment", experiment_raw);

    let kind_entry = exp.require("kind", " (selects the experiment)")?;
    let kind = ExperimentKind::from_str_named(&kind_entry.1).ok_or_else(|| {
        invalid(
            "experiment",
            "kind",
            &kind_entry,
            format!(
                "expected one of {}, got `{}`",
                ExperimentKind::ALL.map(ExperimentKind::as_str).join("|"),
                kind_entry.1
            ),
        )
    })?;
    let seed_entry =
        exp.require("seed", " (seeds are mandatory; there is no wall-clock default)")?;
    let seed: u64 = parse_value("experiment", "seed", &seed_entry, "an unsigned 64-bit integer")?;
    let name = match exp.take("name") {
        Some((_, v)) => v,
        None => kind.as_str().to_string(),
    };
    let workers = match exp.take("workers") {
        Some(entry) => parse_value("experiment", "workers", &entry, "a positive integer")?,
        None => DEFAULT_WORKERS,
    };
    let reps = match exp.take("reps") {
        Some(entry) => parse_value("experiment", "reps", &entry, "a replicate count")?,
        None => 20_000,
    };
    let format = match exp.take("format") {
        Some(entry) => match entry.1.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => {
                return Err(invalid(
                    "experiment",
                    "format",
                    &entry,
                    format!("expected csv|json, got `{other}`"),
                ))
            }
        },
        None => OutputFormat::Csv,
    };
    exp.finish(|_| String::new())?;

    let data = match sections.remove("data") {
        Some(raw) => {
            if !kind.uses_data() && kind != ExperimentKind::WishartOracle {
                return Err(ConfigError::UnusedSection {
                    line: raw.line,
                    name: "data".into(),
                    kind: kind.as_str().into(),
                });
            }
            Some(parse_data(KeyBag::new("data", raw))?)
        }
        None => None,
    };

    let modulator = match sections.remove("modulator") {
        Some(raw) => {
            if !kind.uses_modulator() {
                return Err(ConfigError::UnusedSection {
                    line: raw.line,
                    name: "modulator".into(),
                    kind: kind.as_str().into(),
                });
            }
            Some(parse_modulator(KeyBag::new("modulator", raw))?)
        }
        None => None,
    };

    let check_bag = match sections.remove("check") {
        Some(raw) => KeyBag::new("check", raw),
        None => KeyBag::empty("check"),
    };
    let check = parse_check(kind, check_bag)?;

    debug_assert!(sections.is_empty(), "split_sections admits only known sections");
    Ok(ExperimentConfig { name, seed, workers, reps, format, data, modulator, check })
}

fn parse_data(mut bag: KeyBag) -> Result<DataConfig, ConfigError> {
    let family_entry = bag.require("family", " (which data law to sample)")?;
    let sigma = match bag.take("sigma") {
        Some(entry) => parse_value("data", "sigma", &entry, "a positive scale")?,
        None => 1.0,
    };
    let family = match family_entry.1.as_str() {
        "sphere" => Family::SphereBingham {
            radius: take_radius(&mut bag)?,
            directional: take_bingham(&mut bag)?,
        },
        "ball" => Family::BallUniform { radius: take_radius(&mut bag)? },
        "dilated" => {
            let dilation = match bag.take("dilation") {
                Some(entry) => match entry.1.as_str() {
                    "constant" => DilationRule::Constant,
                    "window" => DilationRule::UniformWindow,
                    other => {
                        return Err(invalid(
                            "data",
                            "dilation",
                            &entry,
                            format!("expected constant|window, got `{other}`"),
                        ))
                    }
                },
                None => DilationRule::UniformWindow,
            };
            Family::DilatedBingham { dilation, directional: take_bingham(&mut bag)? }
        }
        "hypercube" => {
            let side = match bag.take("side") {
                Some(entry) => match entry.1.as_str() {
                    "deterministic" => SideRule::Deterministic,
                    "window" => SideRule::UniformWindow,
                    other => {
                        return Err(invalid(
                            "data",
                            "side",
                            &entry,
                            format!("expected deterministic|window, got `{other}`"),
                        ))
                    }
                },
                None => SideRule::Deterministic,
            };
            Family::Hypercube { side }
        }
        "gaussian" => Family::GaussianProfile { profile: take_profile(&mut bag)? },
        "student-t" => {
            let nu_entry = bag.require("nu", " (student-t tail index, > 2)")?;
            Family::StudentT {
                nu: parse_value("data", "nu", &nu_entry, "a tail index")?,
                profile: take_profile(&mut bag)?,
            }
        }
        "laplace" => {
            let nu_entry = bag.require("nu", " (mixing degrees of freedom, > 0)")?;
            Family::Laplace {
                nu: parse_value("data", "nu", &nu_entry, "degrees of freedom")?,
                profile: take_profile(&mut bag)?,
            }
        }
        other => {
            return Err(invalid(
                "data",
                "family",
                &family_entry,
                format!(
                    "expected sphere|ball|dilated|hypercube|gaussian|student-t|laplace, \
                     got `{other}`"
                ),
            ))
        }
    };
    let family_name = family_entry.1.clone();
    bag.finish(|key| match key {
        "radius" | "bingham" | "dilation" | "side" | "profile" | "nu" => {
            format!(" (not a `{family_name}` key)")
        }
        _ => String::new(),
    })?;
    Ok(DataConfig { family, sigma })
}

fn take_radius(bag: &mut KeyBag) -> Result<RadiusRule, ConfigError> {
    match bag.take("radius") {
        None => Ok(RadiusRule::Constant),
        Some(entry) => {
            if entry.1 == "constant" {
                return Ok(RadiusRule::Constant);
            }
            if let Some(coeff) = entry.1.strip_prefix("drift:") {
                let coeff = coeff.parse().map_err(|e| {
                    invalid("data", "radius", &entry, format!("bad drift coefficient ({e})"))
                })?;
                return Ok(RadiusRule::Drift { coeff });
            }
            Err(invalid(
                "data",
                "radius",
                &entry,
                format!("expected constant|drift:<coeff>, got `{}`", entry.1),
            ))
        }
    }
}

fn take_bingham(bag: &mut KeyBag) -> Result<BinghamRule, ConfigError> {
    match bag.take("bingham") {
        None => Ok(BinghamRule::Zero),
        Some(entry) => {
            if entry.1 == "zero" {
                return Ok(BinghamRule::Zero);
            }
            if let Some(rest) = entry.1.strip_prefix("alternating:") {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() == 2 {
                    let c = parts[0].parse().map_err(|e| {
                        invalid("data", "bingham", &entry, format!("bad entry scale ({e})"))
                    })?;
                    let beta = parts[1].parse().map_err(|e| {
                        invalid("data", "bingham", &entry, format!("bad growth exponent ({e})"))
                    })?;
                    return Ok(BinghamRule::AlternatingDiagonal { c, beta });
                }
            }
            Err(invalid(
                "data",
                "bingham",
                &entry,
                format!("expected zero|alternating:<c>:<beta>, got `{}`", entry.1),
            ))
        }
    }
}

fn take_profile(bag: &mut KeyBag) -> Result<EigenProfile, ConfigError> {
    match bag.take("profile") {
        None => Ok(EigenProfile::Isotropic),
        Some(entry) => {
            match entry.1.as_str() {
                "isotropic" => return Ok(EigenProfile::Isotropic),
                "log-harmonic" => return Ok(EigenProfile::LogHarmonic),
                _ => {}
            }
            if let Some(exponent) = entry.1.strip_prefix("power:") {
                let exponent = exponent.parse().map_err(|e| {
                    invalid("data", "profile", &entry, format!("bad decay exponent ({e})"))
                })?;
                return Ok(EigenProfile::Power { exponent });
            }
            Err(invalid(
                "data",
                "profile",
                &entry,
                format!("expected isotropic|log-harmonic|power:<exponent>, got `{}`", entry.1),
            ))
        }
    }
}

fn parse_modulator(mut bag: KeyBag) -> Result<ModulatorSpec, ConfigError> {
    let family_entry = bag.require("family", " (which mixture modulates)")?;
    let spec = match family_entry.1.as_str() {
        "gaussian" => ModulatorSpec::Gaussian,
        "student-t" => {
            let entry = bag.require("nu", " (student-t degrees of freedom)")?;
            ModulatorSpec::StudentT {
                nu: parse_value("modulator", "nu", &entry, "degrees of freedom")?,
            }
        }
        "laplace" => {
            let entry = bag.require("nu", " (mixing degrees of freedom)")?;
            ModulatorSpec::Laplace {
                nu: parse_value("modulator", "nu", &entry, "degrees of freedom")?,
            }
        }
        "stable" => {
            let entry = bag.require("alpha", " (characteristic exponent in (0, 2))")?;
            ModulatorSpec::Stable {
                cf_index: parse_value("modulator", "alpha", &entry, "a characteristic exponent")?,
            }
        }
        other => {
            return Err(invalid(
                "modulator",
                "family",
                &family_entry,
                format!("expected gaussian|student-t|laplace|stable, got `{other}`"),
            ))
        }
    };
    let family_name = family_entry.1.clone();
    bag.finish(|key| match key {
        "nu" | "alpha" => format!(" (not a `{family_name}` key)"),
        _ => String::new(),
    })?;
    Ok(spec)
}

fn parse_check(kind: ExperimentKind, mut bag: KeyBag) -> Result<CheckParams, ConfigError> {
    let take_usize = |bag: &mut KeyBag, key: &str, default: Option<usize>, hint: &str| {
        match bag.take(key) {
            Some(entry) => parse_value::<usize>("check", key, &entry, "a positive integer"),
            None => default.ok_or_else(|| ConfigError::MissingKey {
                section: "check".into(),
                key: key.into(),
                hint: hint.into(),
            }),
        }
    };
    let take_grid = |bag: &mut KeyBag, key: &str, default: GridSpec| match bag.take(key) {
        Some(entry) => parse_grid(key, &entry),
        None => Ok(default),
    };
    let check = match kind {
        ExperimentKind::Conditions => {
            let dims_entry = bag.require("dims", " (comma-separated dimension schedule)")?;
            let mut dims = Vec::new();
            for part in dims_entry.1.split(',') {
                let part = part.trim();
                dims.push(part.parse::<usize>().map_err(|e| {
                    invalid("check", "dims", &dims_entry, format!("bad dimension `{part}` ({e})"))
                })?);
            }
            let det_order = take_usize(&mut bag, "det_order", Some(2), "")?;
            CheckParams::Conditions { dims, det_order }
        }
        ExperimentKind::DensityBound => CheckParams::DensityBound {
            d: take_usize(&mut bag, "d", None, " (ambient dimension)")?,
            j: take_usize(&mut bag, "j", Some(2), "")? as u32,
            grid: take_grid(&mut bag, "grid", DEFAULT_DENSITY_GRID)?,
        },
        ExperimentKind::CdfLipschitz => {
            let d = take_usize(&mut bag, "d", None, " (ambient dimension)")?;
            let j = take_usize(&mut bag, "j", Some(2), "")? as u32;
            let intervals = match bag.take("intervals") {
                Some(entry) => parse_intervals(&entry)?,
                None => vec![(-1.0, 1.0), (0.0, 1.0), (0.0, 2.0)],
            };
            CheckParams::CdfLipschitz { d, j, intervals }
        }
        ExperimentKind::StableCounterexample => {
            let d = take_usize(&mut bag, "d", None, " (ambient dimension)")?;
            let t = match bag.take("t") {
                Some(entry) => parse_value("check", "t", &entry, "a frequency")?,
                None => 1.0,
            };
            CheckParams::StableCounterexample { d, t }
        }
        ExperimentKind::Polya => {
            CheckParams::Polya { t_grid: take_grid(&mut bag, "t_grid", DEFAULT_T_GRID)? }
        }
        ExperimentKind::MatrixNormal => CheckParams::MatrixNormal {
            d: take_usize(&mut bag, "d", None, " (ambient dimension)")?,
            k: take_usize(&mut bag, "k", Some(2), "")?,
            l: take_usize(&mut bag, "l", Some(2), "")?,
        },
        ExperimentKind::WishartOracle => CheckParams::WishartOracle {
            d: take_usize(&mut bag, "d", None, " (ambient dimension)")?,
            k: take_usize(&mut bag, "k", Some(2), "")?,
        },
    };
    let kind_name = kind.as_str();
    bag.finish(|key| match key {
        "d" | "j" | "k" | "l" | "t" | "dims" | "det_order" | "grid" | "t_grid" | "intervals" => {
            format!(" (not a `{kind_name}` key)")
        }
        _ => String::new(),
    })?;
    Ok(check)
}

fn parse_grid(key: &str, entry: &(usize, String)) -> Result<GridSpec, ConfigError> {
    let parts: Vec<&str> = entry.1.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(
            "check",
            key,
            entry,
            format!("expected lo:hi:count, got `{}`", entry.1),
        ));
    }
    let lo = parts[0]
        .parse()
        .map_err(|e| invalid("check", key, entry, format!("bad lower endpoint ({e})")))?;
    let hi = parts[1]
        .parse()
        .map_err(|e| invalid("check", key, entry, format!("bad upper endpoint ({e})")))?;
    let count = parts[2]
        .parse()
        .map_err(|e| invalid("check", key, entry, format!("bad point count ({e})")))?;
    Ok(GridSpec { lo, hi, count })
}

fn parse_intervals(entry: &(usize, String)) -> Result<Vec<(f64, f64)>, ConfigError> {
    let mut intervals = Vec::new();
    for part in entry.1.split(',') {
        let part = part.trim();
        let Some((a, y)) = part.split_once(':') else {
            return Err(invalid(
                "check",
                "intervals",
                entry,
                format!("expected a:y pairs, got `{part}`"),
            ));
        };
        let a = a
            .parse()
            .map_err(|e| invalid("check", "intervals", entry, format!("bad endpoint ({e})")))?;
        let y = y
            .parse()
            .map_err(|e| invalid("check", "intervals", entry, format!("bad endpoint ({e})")))?;
        intervals.push((a, y));
    }
    Ok(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_density_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "density-bound".into(),
            seed: 7,
            workers: 4,
            reps: 20_000,
            format: OutputFormat::Csv,
            data: Some(DataConfig {
                family: Family::SphereBingham {
                    radius: RadiusRule::Constant,
                    directional: BinghamRule::Zero,
                },
                sigma: 1.0,
            }),
            modulator: Some(ModulatorSpec::Gaussian),
            check: CheckParams::DensityBound { d: 64, j: 2, grid: DEFAULT_DENSITY_GRID },
        }
    }

    #[test]
    fn serialize_parse_round_trips() {
        let config = sphere_density_config();
        let text = config.serialize();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(parsed, config);
        assert_eq!(parsed.hash(), config.hash());
    }

    #[test]
    fn round_trips_every_family_and_rule() {
        let families = [
            Family::SphereBingham {
                radius: RadiusRule::Drift { coeff: -0.25 },
                directional: BinghamRule::AlternatingDiagonal { c: 1.5, beta: 0.5 },
            },
            Family::BallUniform { radius: RadiusRule::Constant },
            Family::DilatedBingham {
                dilation: DilationRule::UniformWindow,
                directional: BinghamRule::Zero,
            },
            Family::Hypercube { side: SideRule::UniformWindow },
            Family::GaussianProfile { profile: EigenProfile::LogHarmonic },
            Family::StudentT { nu: 6.5, profile: EigenProfile::Power { exponent: 1.5 } },
            Family::Laplace { nu: 3.0, profile: EigenProfile::Isotropic },
        ];
        for family in families {
            let config = ExperimentConfig {
                name: "conditions".into(),
                seed: 11,
                workers: 2,
                reps: 500,
                format: OutputFormat::Json,
                data: Some(DataConfig { family, sigma: 1.25 }),
                modulator: None,
                check: CheckParams::Conditions { dims: vec![8, 16, 32], det_order: 2 },
            };
            let text = config.serialize();
            let parsed = ExperimentConfig::parse(&text)
                .unwrap_or_else(|e| panic!("round trip failed: {e}\n{text}"));
            assert_eq!(parsed, config, "config text:\n{text}");
        }
    }

    #[test]
    fn round_trips_every_modulator() {
        let mods = [
            ModulatorSpec::Gaussian,
            ModulatorSpec::StudentT { nu: 6.0 },
            ModulatorSpec::Laplace { nu: 2.0 },
            ModulatorSpec::Stable { cf_index: 1.0 },
        ];
        for modulator in mods {
            let config = ExperimentConfig {
                name: "polya".into(),
                seed: 3,
                workers: 1,
                reps: 100,
                format: OutputFormat::Csv,
                data: None,
                modulator: Some(modulator),
                check: CheckParams::Polya { t_grid: DEFAULT_T_GRID },
            };
            let parsed = ExperimentConfig::parse(&config.serialize()).unwrap();
            assert_eq!(parsed, config);
        }
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let text = "[experiment]\nkind = polya\nseed = 1\n\n[modulator]\nfamily = gaussian\n\n\
                    [check]\nt_grid = 0:5:11\nwidth = 3\n";
        let err = ExperimentConfig::parse(text).unwrap_err();
        match err {
            ConfigError::UnknownKey { line, ref section, ref key, .. } => {
                assert_eq!((line, section.as_str(), key.as_str()), (10, "check", "width"));
            }
            other => panic!("expected UnknownKey, got {other}"),
        }
        assert!(err.to_string().contains("line 10"), "message: {err}");
    }

    #[test]
    fn inapplicable_family_key_is_rejected_with_hint() {
        let text = "[experiment]\nkind = conditions\nseed = 1\n\n[data]\nfamily = gaussian\n\
                    radius = constant\n\n[check]\ndims = 8,16\n";
        let err = ExperimentConfig::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 7") && msg.contains("radius"), "message: {msg}");
        assert!(msg.contains("not a `gaussian` key"), "message: {msg}");
    }

    #[test]
    fn missing_seed_is_an_error() {
        let text = "[experiment]\nkind = polya\n\n[modulator]\nfamily = gaussian\n";
        let err = ExperimentConfig::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seed") && msg.contains("wall-clock"), "message: {msg}");
    }

    #[test]
    fn duplicate_key_and_section_are_errors() {
        let dup_key = "[experiment]\nkind = polya\nseed = 1\nseed = 2\n";
        assert!(matches!(
            ExperimentConfig::parse(dup_key),
            Err(ConfigError::DuplicateKey { line: 4, .. })
        ));
        let dup_section = "[experiment]\nkind = polya\nseed = 1\n[check]\n[check]\n";
        assert!(matches!(
            ExperimentConfig::parse(dup_section),
            Err(ConfigError::DuplicateSection { line: 5, .. })
        ));
    }

    #[test]
    fn semantic_validation_rejects_bad_values() {
        // reps below the floor.
        let text = "[experiment]\nkind = polya\nseed = 1\nreps = 50\n\n\
                    [modulator]\nfamily = gaussian\n";
        let msg = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("at least 100"), "message: {msg}");

        // non-increasing dimension schedule.
        let text = "[experiment]\nkind = conditions\nseed = 1\n\n[data]\nfamily = sphere\n\n\
                    [check]\ndims = 16,16,32\n";
        let msg = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("strictly increasing"), "message: {msg}");

        // modulator on a kind that does not modulate.
        let text = "[experiment]\nkind = conditions\nseed = 1\n\n[data]\nfamily = sphere\n\n\
                    [modulator]\nfamily = gaussian\n\n[check]\ndims = 8\n";
        let msg = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("not used by kind"), "message: {msg}");

        // wishart-oracle data override must stay isotropic gaussian.
        let text = "[experiment]\nkind = wishart-oracle\nseed = 1\n\n[data]\nfamily = sphere\n\n\
                    [check]\nd = 16\nk = 2\n";
        let msg = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("isotropic"), "message: {msg}");
    }

    #[test]
    fn grid_points_are_inclusive_and_evenly_spaced() {
        let grid = GridSpec { lo: -3.0, hi: 3.0, count: 25 };
        let pts = grid.points();
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], -3.0);
        assert_eq!(*pts.last().unwrap(), 3.0);
        assert!((pts[1] - pts[0] - 0.25).abs() < 1e-15);
        assert_eq!(GridSpec { lo: 2.0, hi: 2.0, count: 1 }.points(), vec![2.0]);
    }

    #[test]
    fn fnv_hash_matches_reference_vectors() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# leading comment\n[experiment]\n; alt comment\nkind = polya\nseed = 9\n\n\
                    [modulator]\nfamily = stable\nalpha = 1\n";
        let config = ExperimentConfig::parse(text).unwrap();
        assert_eq!(config.kind(), ExperimentKind::Polya);
        assert_eq!(config.modulator, Some(ModulatorSpec::Stable { cf_index: 1.0 }));
        assert_eq!(config.seed, 9);
    }
}
