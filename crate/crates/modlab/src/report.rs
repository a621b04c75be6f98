//! Shared result types produced by estimators and verifiers.
//!
//! These are plain data: every field is public and serializable by the CLI's
//! report writers. Estimates always travel with their standard error, replicate
//! count and seed lineage so that any number in a report can be re-derived.

use crate::numerics::rng::StreamId;

/// A Monte Carlo estimate with its uncertainty and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Point estimate (mean over replicates).
    pub estimate: f64,
    /// Standard error of the estimate.
    pub se: f64,
    /// Number of replicates that entered the estimate.
    pub reps: u64,
    /// Replicates excluded from the estimate (e.g. numerically singular Gram
    /// draws); always reported, never silently dropped.
    pub excluded: u64,
    /// Seed lineage (root seed + derivation path) of the stream used.
    pub stream: StreamId,
}

/// One row of a convergence trace: a metric at one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Ambient dimension.
    pub d: usize,
    /// Metric name (`e_norm2`, `var_norm2`, `cross2`, `det_invsqrt`, …).
    pub metric: String,
    /// Monte Carlo estimate.
    pub estimate: f64,
    /// Standard error of the estimate.
    pub se: f64,
    /// Exact value when the data model provides one.
    pub analytic: Option<f64>,
    /// Verdict when the metric carries an assertion at this dimension.
    pub pass: Option<bool>,
}

/// Metrics tracked along a dimension schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    /// All rows, grouped by dimension in schedule order.
    pub rows: Vec<TraceRow>,
    /// Worker count the trace was computed with (results are bitwise
    /// reproducible at a fixed worker count).
    pub workers: usize,
}

impl ConvergenceTrace {
    /// All rows for one metric, in schedule order.
    pub fn metric(&self, name: &str) -> Vec<&TraceRow> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }

    /// True when every asserted row passed.
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass.unwrap_or(true))
    }
}

/// A convergence-rate functional: exact when the model's moment sheet allows
/// it, otherwise Monte Carlo with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateValue {
    /// Closed-form value.
    Exact(f64),
    /// Monte Carlo estimate.
    Estimated {
        /// Point estimate.
        value: f64,
        /// Standard error.
        se: f64,
    },
}

impl RateValue {
    /// Point value regardless of provenance.
    pub fn value(&self) -> f64 {
        match *self {
            RateValue::Exact(v) => v,
            RateValue::Estimated { value, .. } => value,
        }
    }

    /// Standard error (zero for exact values).
    pub fn se(&self) -> f64 {
        match *self {
            RateValue::Exact(_) => 0.0,
            RateValue::Estimated { se, .. } => se,
        }
    }
}

/// Monte Carlo estimates of a scalar functional over a grid of evaluation
/// points, all points sharing one replicate set.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEstimate {
    /// Evaluation points.
    pub ys: Vec<f64>,
    /// Monte Carlo estimate at each point.
    pub estimates: Vec<f64>,
    /// Standard error at each point.
    pub ses: Vec<f64>,
    /// Replicates that entered every estimate.
    pub reps: u64,
    /// Replicates excluded; always reported, never silently dropped.
    pub excluded: u64,
    /// Worker count used for the shard schedule.
    pub workers: usize,
    /// Seed lineage of the replicate parent stream.
    pub stream: StreamId,
}

/// One evaluation point of an estimate-versus-limit comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    /// Evaluation point.
    pub y: f64,
    /// Monte Carlo estimate at `y`.
    pub estimate: f64,
    /// Standard error at `y`.
    pub se: f64,
    /// Analytic limit value at `y`.
    pub limit: f64,
}

/// Verdict of a quantitative sup-distance bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Ambient dimension.
    pub d: usize,
    /// Power/order of the comparison.
    pub j: u32,
    /// Measured sup over the grid of |estimate − limit|.
    pub sup_gap: f64,
    /// Evaluation point attaining the sup.
    pub argmax_y: f64,
    /// Largest Monte Carlo standard error over the grid.
    pub max_se: f64,
    /// Standard error of the limit evaluation itself (nonzero only for
    /// Monte Carlo limit evaluators).
    pub limit_se: f64,
    /// Constant multiplying the rate.
    pub constant: f64,
    /// Rate functional entering the bound.
    pub rate: RateValue,
    /// Right-hand side, `constant · rate^{1/4}`.
    pub rhs: f64,
    /// Pass verdict: `sup_gap ≤ rhs + 3·(max_se + limit_se + rate-propagated se)`.
    pub pass: bool,
    /// Per-point detail.
    pub grid: Vec<GridRow>,
    /// Replicates per grid evaluation.
    pub reps: u64,
    /// Excluded (singular) replicates.
    pub excluded: u64,
    /// Worker count used for the shard schedule.
    pub workers: usize,
    /// Seed lineage.
    pub stream: StreamId,
}

/// One interval in an increment-regularity (Lipschitz) check.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzRow {
    /// Interval lower endpoint.
    pub a: f64,
    /// Interval upper endpoint.
    pub y: f64,
    /// Estimated joint increment probability.
    pub estimate: f64,
    /// Standard error of the estimate.
    pub se: f64,
    /// Limit value of the increment functional.
    pub limit: f64,
    /// Bound right-hand side for this interval.
    pub rhs: f64,
    /// Verdict: `|estimate − limit| ≤ rhs + 3·(se + limit/rate-propagated se)`.
    pub pass: bool,
}

/// Verdict of the CDF increment-regularity check.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    /// Ambient dimension.
    pub d: usize,
    /// Number of joint projections.
    pub j: u32,
    /// Per-interval rows.
    pub rows: Vec<LipschitzRow>,
    /// Replicates per interval.
    pub reps: u64,
    /// Worker count used for the shard schedule.
    pub workers: usize,
    /// Seed lineage.
    pub stream: StreamId,
}

impl LipschitzReport {
    /// True when every interval passed.
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Variance of the collapsed characteristic function at one frequency,
/// compared against its analytic limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CfVarianceReport {
    /// Ambient dimension.
    pub d: usize,
    /// Evaluation frequency.
    pub t: f64,
    /// Variance estimate (mean of squares minus squared mean).
    pub var_estimate: f64,
    /// Standard error propagated from both moment estimates.
    pub se: f64,
    /// Analytic limit of the variance.
    pub limit: f64,
    /// `|var_estimate − limit|`.
    pub gap: f64,
    /// Finite-size allowance added to the Monte Carlo margin.
    pub allowance: f64,
    /// Verdict: `gap ≤ allowance + 3·se`.
    pub pass: bool,
    /// Replicates used.
    pub reps: u64,
    /// Worker count used for the shard schedule.
    pub workers: usize,
    /// Seed lineage.
    pub stream: StreamId,
}

/// Moments of one entry of the projection array.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryStats {
    /// Row index (modulating vector index).
    pub row: usize,
    /// Column index (data vector index).
    pub col: usize,
    /// Sample mean.
    pub mean: f64,
    /// Sample variance.
    pub var: f64,
    /// Sample excess kurtosis.
    pub excess_kurtosis: f64,
}

/// Joint-normality diagnostics for the array of pairwise projections.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixNormalReport {
    /// Ambient dimension.
    pub d: usize,
    /// Number of data vectors.
    pub k: usize,
    /// Number of modulating vectors.
    pub l: usize,
    /// Per-entry moment diagnostics.
    pub entries: Vec<EntryStats>,
    /// Largest absolute pairwise correlation across distinct entries.
    pub max_abs_corr: f64,
    /// One-sample KS distance to the scalar normal law (only for k = l = 1).
    pub ks_distance: Option<f64>,
    /// Whether thresholds were asserted (suppressed below the dimension floor).
    pub asserted: bool,
    /// Verdict when asserted.
    pub pass: Option<bool>,
    /// Replicates used.
    pub reps: u64,
    /// Worker count used for the shard schedule.
    pub workers: usize,
    /// Seed lineage.
    pub stream: StreamId,
}

/// Goodness-of-fit of projections against the *exact* conditional law at a
/// fixed modulating direction (no limit taken).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLawReport {
    /// Ambient dimension.
    pub d: usize,
    /// One-sample KS distance between projection draws and the exact CDF.
    pub ks_distance: f64,
    /// Asymptotic KS tail probability at the observed distance.
    pub p_value: f64,
    /// Number of projection draws.
    pub draws: u64,
    /// Verdict: `p_value > 1e−4`.
    pub pass: bool,
    /// Seed lineage.
    pub stream: StreamId,
}

/// Deviation of a modulator family from the exact-normality fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyaReport {
    /// Grid of (t, residual) pairs.
    pub residuals: Vec<(f64, f64)>,
    /// Largest absolute residual over the grid.
    pub max_abs_residual: f64,
    /// Grid point attaining the maximum.
    pub argmax_t: f64,
}
