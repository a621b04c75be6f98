//! Acceptance suite: ten end-to-end checks covering exactness anchors,
//! closed-form oracles, rate bounds, the non-collapsing counterexample, and
//! report reproducibility.
//!
//! Run with `cargo test --test acceptance`. Each criterion is one test; with
//! `-- --nocapture` every criterion additionally prints a
//! `acceptance NN <name>: PASS|FAIL` line. All tolerances are pinned as
//! constants below; none are derived from the data under test.

use std::fs;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::path::Path;

use modlab::datamodels::{BinghamRule, DataModelSpec, EigenProfile, Family, RadiusRule};
use modlab::gram::{estimate_det_invsqrt, gram_rate, wishart_det_invsqrt_exact};
use modlab::modulators::{MixtureLimit, ModulatorSpec};
use modlab::verify::{
    cf_variance_check, check_conditions, estimate_cdf_power, estimate_density_power,
    matrix_normal_test, verify_cdf_lipschitz, verify_density_bound,
};
use modlab::{RateValue, RngStream, StreamingMoments};

use modlab_cli::config::{CheckParams, ExperimentKind, OutputFormat, DEFAULT_DENSITY_GRID};
use modlab_cli::experiment::{default_config, run_experiment};
use modlab_cli::output::{write_report, ReportMeta};

/// Root seed of the whole suite; every criterion derives its own child.
const ACCEPT_SEED: u64 = 7;
/// Worker count for the sharded estimators (reports pin it, so it is part of
/// the reproducibility contract).
const WORKERS: usize = 4;

// --- pinned tolerances ------------------------------------------------------

/// Absolute tolerance for estimates that are deterministic given the collapse
/// (sphere estimates whose Monte Carlo variance is pure rounding).
const EXACT_ABS_TOL: f64 = 1e-12;
/// Tolerance for the order-one determinant-moment anchor `√(π/2)`.
const ANCHOR_ABS_TOL: f64 = 1e-9;
/// Systematic window around the characteristic-function variance limit at
/// `d = 512` (finite-size deviation allowance on top of 3·SE).
const CF_VARIANCE_WINDOW: f64 = 0.01;
/// Window around the documented residual peak value for the Cauchy mixture.
const PEAK_VALUE_WINDOW: f64 = 2e-3;
/// Window around the residual peak location (grid step is 0.01).
const PEAK_LOCATION_WINDOW: f64 = 0.01;
/// Agreement with the four-digit printed value of the Laplace residual.
const PRINTED_4DIGIT_TOL: f64 = 5e-5;
/// Agreement with the six-digit printed value of the rate-bound constant.
const PRINTED_6DIGIT_TOL: f64 = 1e-5;
/// One-sided slack under the provable variance lower bound (criterion 7).
const VARIANCE_FLOOR_SLACK: f64 = 0.02;
/// Covariance-trace tolerance for the log-harmonic profile at `d = 10⁴`.
const TRACE_ABS_TOL: f64 = 1e-4;
/// Entry-variance relative window for the matrix-normal check.
const ENTRY_VAR_WINDOW: f64 = 0.02;
/// Excess-kurtosis and cross-correlation windows for the matrix-normal check.
const ENTRY_SHAPE_WINDOW: f64 = 0.05;
/// One-sample KS threshold against the exact scalar normal law.
const KS_THRESHOLD: f64 = 0.01;

// --- frozen closed-form anchors ---------------------------------------------

/// `Φ(1)²`, the squared standard normal CDF at 1.
const PHI1_SQUARED: f64 = 0.707860981737141;
/// `e^{−√2} − e^{−2}`: the variance limit of the collapsed characteristic
/// function at unit frequency under the unit-index stable mixture.
const CF_VARIANCE_LIMIT: f64 = 0.10778145119760152;
/// `√(π/2)`: the exact order-one determinant moment at `d = 4`.
const SQRT_HALF_PI: f64 = 1.2533141373155003;
/// `2^{5/4}/π`: the order-two density-bound constant at unit scale.
const BOUND_CONSTANT_J2: f64 = 0.7570727628509404;
/// `ln√2/(√2−1)`: location of the Cauchy-mixture residual peak.
const STABLE_PEAK_T: f64 = 0.8367026620142463;
/// Euler–Mascheroni constant (for the harmonic-sum trace target).
const EULER_GAMMA: f64 = 0.5772156649015329;

fn criterion(number: u32, name: &str, f: impl FnOnce() + UnwindSafe) {
    match catch_unwind(f) {
        Ok(()) => println!("acceptance {number:02} {name}: PASS"),
        Err(panic) => {
            println!("acceptance {number:02} {name}: FAIL");
            resume_unwind(panic);
        }
    }
}

fn sphere() -> DataModelSpec {
    DataModelSpec::new(
        Family::SphereBingham { radius: RadiusRule::Constant, directional: BinghamRule::Zero },
        1.0,
    )
    .unwrap()
}

fn gaussian_iso() -> DataModelSpec {
    DataModelSpec::new(Family::GaussianProfile { profile: EigenProfile::Isotropic }, 1.0).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Criterion 1 — on the unit sphere with a Gaussian modulator the collapsed
/// single-projection density estimate equals the standard normal density with
/// zero Monte Carlo variance, at every dimension.
#[test]
fn acceptance_01_sphere_density_exactness() {
    criterion(1, "sphere density estimates are exact with zero variance", || {
        let spec = sphere();
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[1]);
        let ys = [0.0, 1.0, 2.0];
        for d in [8usize, 64] {
            let sampler = spec.sampler(d).unwrap();
            let curve = estimate_density_power(
                &ModulatorSpec::Gaussian,
                &sampler,
                1,
                &ys,
                2_000,
                WORKERS,
                &base.derive_stream(&[d as u64]),
            )
            .unwrap();
            for (i, &y) in ys.iter().enumerate() {
                let normal_density =
                    (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
                assert!(
                    (curve.estimates[i] - normal_density).abs() <= EXACT_ABS_TOL,
                    "d = {d}, y = {y}: estimate {} vs {normal_density}",
                    curve.estimates[i]
                );
                assert!(
                    curve.ses[i] <= EXACT_ABS_TOL,
                    "d = {d}, y = {y}: se {} not collapsed",
                    curve.ses[i]
                );
            }
            assert_eq!(curve.excluded, 0);
        }
    });
}

/// Criterion 2 — the estimated inverse-root determinant moment agrees with
/// the closed-form Wishart value for isotropic Gaussian data, and the
/// `(d, k) = (4, 1)` anchor equals `√(π/2)` to high precision.
#[test]
fn acceptance_02_wishart_determinant_oracle() {
    criterion(2, "determinant moment matches the Wishart closed form", || {
        let spec = gaussian_iso();
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[2]);
        for (run, (d, k)) in [(8usize, 1usize), (16, 2), (32, 3)].into_iter().enumerate() {
            let sampler = spec.sampler(d).unwrap();
            let mut rng = base.derive_stream(&[run as u64]);
            let est = estimate_det_invsqrt(k, &sampler, 100_000, &mut rng).unwrap();
            let exact = wishart_det_invsqrt_exact(d, k, 1.0).unwrap();
            assert!(
                (est.estimate - exact).abs() <= 3.0 * est.se,
                "(d, k) = ({d}, {k}): {} vs {exact} (se {})",
                est.estimate,
                est.se
            );
        }
        let anchor = wishart_det_invsqrt_exact(4, 1, 1.0).unwrap();
        assert!(
            (anchor - SQRT_HALF_PI).abs() <= ANCHOR_ABS_TOL,
            "anchor {anchor} vs {SQRT_HALF_PI}"
        );
    });
}

/// Criterion 3 — the sup-gap between the order-two collapsed density and its
/// limit obeys `c₂·rate^{1/4}` on the sphere at d ∈ {64, 256, 1024}, with the
/// constant recomputed from its closed form and the gap not growing in d.
#[test]
fn acceptance_03_density_rate_bound() {
    criterion(3, "density sup-gap obeys the fourth-root rate bound", || {
        let spec = sphere();
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[3]);
        let ys = DEFAULT_DENSITY_GRID.points();
        let mut gaps = Vec::new();
        for d in [64usize, 256, 1024] {
            let report = verify_density_bound(
                &ModulatorSpec::Gaussian,
                &spec,
                d,
                2,
                &ys,
                20_000,
                WORKERS,
                &base.derive_stream(&[d as u64]),
            )
            .unwrap();
            assert!(
                report.pass,
                "d = {d}: sup_gap {} exceeds rhs {} (max_se {})",
                report.sup_gap, report.rhs, report.max_se
            );
            assert!(
                (report.constant - BOUND_CONSTANT_J2).abs() <= 1e-12,
                "constant {} vs closed form {BOUND_CONSTANT_J2}",
                report.constant
            );
            assert!((report.constant - 0.757077).abs() <= PRINTED_6DIGIT_TOL);
            match report.rate {
                RateValue::Exact(rate) => {
                    assert!((rate - 2.0 / d as f64).abs() <= 1e-15, "rate {rate} at d = {d}")
                }
                RateValue::Estimated { .. } => panic!("sphere rate must be closed-form"),
            }
            gaps.push((report.sup_gap, report.max_se + report.limit_se));
        }
        let (gap_coarse, se_coarse) = gaps[0];
        let (gap_fine, se_fine) = gaps[2];
        assert!(
            gap_fine <= gap_coarse + 3.0 * (se_coarse + se_fine),
            "gap did not shrink: {gap_fine} at d = 1024 vs {gap_coarse} at d = 64"
        );
    });
}

/// Criterion 4 — the order-two collapsed CDF estimate at y = 1 converges to
/// `Φ(1)²`, and the joint CDF increments pass their Lipschitz bounds.
#[test]
fn acceptance_04_cdf_identity_and_lipschitz() {
    criterion(4, "joint CDF matches the squared normal CDF and is Lipschitz", || {
        let spec = sphere();
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[4]);
        let sampler = spec.sampler(1024).unwrap();
        let curve = estimate_cdf_power(
            &ModulatorSpec::Gaussian,
            &sampler,
            2,
            &[1.0],
            100_000,
            WORKERS,
            &base.derive_stream(&[0]),
        )
        .unwrap();
        assert!(
            (curve.estimates[0] - PHI1_SQUARED).abs() <= 3.0 * curve.ses[0] + EXACT_ABS_TOL,
            "cdf power {} vs {PHI1_SQUARED} (se {})",
            curve.estimates[0],
            curve.ses[0]
        );
        let report = verify_cdf_lipschitz(
            &ModulatorSpec::Gaussian,
            &spec,
            256,
            2,
            &[(-1.0, 1.0), (0.0, 1.0), (0.0, 2.0)],
            40_000,
            WORKERS,
            &base.derive_stream(&[1]),
        )
        .unwrap();
        assert!(report.all_passed(), "increment rows: {:?}", report.rows);
    });
}

/// Criterion 5 — under the unit-index stable mixture the variance of the
/// collapsed characteristic function at t = 1 stays near `e^{−√2} − e^{−2}`
/// (no collapse to a deterministic limit), and vanishes identically at t = 0.
#[test]
fn acceptance_05_stable_counterexample() {
    criterion(5, "characteristic-function variance does not vanish", || {
        let spec = sphere();
        let modulator = ModulatorSpec::Stable { cf_index: 1.0 };
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[5]);
        let report =
            cf_variance_check(&modulator, &spec, 512, 1.0, 100_000, WORKERS, &base).unwrap();
        // Independent recomputation of the limit from the mixture's
        // characteristic exponent, plus the frozen literal.
        let closed_form = (-(2.0f64.sqrt())).exp() - (-2.0f64).exp();
        assert!((closed_form - CF_VARIANCE_LIMIT).abs() <= 1e-15);
        assert!(
            (report.limit - CF_VARIANCE_LIMIT).abs() <= 1e-12,
            "limit {} vs {CF_VARIANCE_LIMIT}",
            report.limit
        );
        assert!(
            (report.var_estimate - CF_VARIANCE_LIMIT).abs()
                <= CF_VARIANCE_WINDOW + 3.0 * report.se,
            "variance {} vs {CF_VARIANCE_LIMIT} (se {})",
            report.var_estimate,
            report.se
        );
        assert!(report.pass, "gap {} vs allowance {}", report.gap, report.allowance);
        assert!(report.var_estimate > 0.05, "variance must stay bounded away from zero");
        let zero = cf_variance_check(
            &modulator,
            &spec,
            512,
            0.0,
            1_000,
            WORKERS,
            &base.derive_stream(&[1]),
        )
        .unwrap();
        assert_eq!(zero.var_estimate, 0.0, "estimate must be exactly zero at t = 0");
        assert_eq!(zero.limit, 0.0);
        assert_eq!(zero.se, 0.0);
    });
}

/// Criterion 6 — the completely-monotone residual is identically zero for the
/// Gaussian modulator, peaks at the closed-form location/value for the
/// unit-index stable mixture, and matches `2/75` for Laplace at t = 1.
#[test]
fn acceptance_06_polya_residual_scan() {
    criterion(6, "residual scan separates Gaussian from heavy-tailed mixtures", || {
        let t_grid: Vec<f64> = (0..=500).map(|i| f64::from(i) * 0.01).collect();
        let mut rng = RngStream::from_root(ACCEPT_SEED).derive_stream(&[6]);

        let gaussian = MixtureLimit::new(&ModulatorSpec::Gaussian, 1.0, &mut rng).unwrap();
        let scan = gaussian.polya_scan(&t_grid);
        assert!(
            scan.max_abs_residual <= EXACT_ABS_TOL,
            "gaussian residual {}",
            scan.max_abs_residual
        );

        let stable =
            MixtureLimit::new(&ModulatorSpec::Stable { cf_index: 1.0 }, 1.0, &mut rng).unwrap();
        let scan = stable.polya_scan(&t_grid);
        // Peak location from the closed form, recomputed independently.
        let t_star = (0.5 * 2.0f64.ln()) / (2.0f64.sqrt() - 1.0);
        assert!((t_star - STABLE_PEAK_T).abs() <= 1e-15);
        let peak = (-t_star).exp() - (-(2.0f64.sqrt()) * t_star).exp();
        assert!((scan.max_abs_residual - 0.1269).abs() <= PEAK_VALUE_WINDOW);
        assert!(
            (scan.max_abs_residual - peak).abs() <= 1e-4,
            "peak {} vs closed form {peak}",
            scan.max_abs_residual
        );
        assert!(
            (scan.argmax_t - t_star).abs() <= PEAK_LOCATION_WINDOW,
            "argmax {} vs {t_star}",
            scan.argmax_t
        );

        let laplace =
            MixtureLimit::new(&ModulatorSpec::Laplace { nu: 2.0 }, 1.0, &mut rng).unwrap();
        let residual = laplace.polya_residual(1.0);
        assert!(
            (residual - 2.0 / 75.0).abs() <= 1e-9,
            "laplace residual {residual} vs 2/75"
        );
        assert!((residual - 0.0267).abs() <= PRINTED_4DIGIT_TOL);
    });
}

/// Criterion 7 — the concentration conditions: exactly-zero norm variance on
/// the sphere, the `2/d` variance of the isotropic Gaussian at d = 1000, the
/// provably non-vanishing variance of heavy-tailed elliptical data, and the
/// harmonic-sum covariance trace of the log-harmonic profile at d = 10⁴.
#[test]
fn acceptance_07_moment_conditions() {
    criterion(7, "moment conditions hold (and fail) where they should", || {
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[7]);

        let trace = check_conditions(&sphere(), &[16, 64], 2, 20_000, WORKERS, &base).unwrap();
        for row in trace.metric("var_norm2") {
            assert_eq!(row.analytic, Some(0.0), "sphere variance target at d = {}", row.d);
            assert!(row.estimate.abs() <= 1e-20, "rounding residue {}", row.estimate);
            assert_eq!(row.pass, Some(true));
        }

        let trace = check_conditions(
            &gaussian_iso(),
            &[1000],
            1,
            20_000,
            WORKERS,
            &base.derive_stream(&[1]),
        )
        .unwrap();
        let row = &trace.metric("var_norm2")[0];
        assert!((row.analytic.unwrap() - 0.002).abs() <= 1e-15);
        assert!(
            (row.estimate - 0.002).abs() <= 3.0 * row.se,
            "gaussian norm variance {} vs 0.002 (se {})",
            row.estimate,
            row.se
        );

        let heavy = DataModelSpec::new(
            Family::StudentT { nu: 6.0, profile: EigenProfile::Isotropic },
            1.0,
        )
        .unwrap();
        let trace =
            check_conditions(&heavy, &[2048], 1, 20_000, WORKERS, &base.derive_stream(&[2]))
                .unwrap();
        let lower = &trace.metric("var_norm2_lower")[0];
        assert!((lower.analytic.unwrap() - 1.0 / 12.0).abs() <= 1e-12);
        assert!(
            lower.estimate >= 1.0 / 12.0 - VARIANCE_FLOOR_SLACK,
            "heavy-tail variance {} under the floor",
            lower.estimate
        );
        assert_eq!(lower.pass, Some(true));

        let log_harmonic = DataModelSpec::new(
            Family::GaussianProfile { profile: EigenProfile::LogHarmonic },
            1.0,
        )
        .unwrap();
        let eigenvalues = log_harmonic.covariance_eigenvalues(10_000).unwrap().unwrap();
        let covariance_trace: f64 = eigenvalues.iter().sum();
        let target = (EULER_GAMMA + 1e4f64.ln()) / 1e4f64.ln();
        assert!(
            (covariance_trace - target).abs() <= TRACE_ABS_TOL,
            "trace {covariance_trace} vs {target}"
        );
    });
}

/// Criterion 8 — the 2×2 projection array at d = 1024 is matrix normal to the
/// pinned thresholds (variances, kurtosis, cross-correlations), and the
/// scalar projection passes a one-sample KS test against the normal law.
#[test]
fn acceptance_08_matrix_normal_projections() {
    criterion(8, "projection array is asymptotically matrix normal", || {
        let spec = sphere();
        let base = RngStream::from_root(ACCEPT_SEED).derive_stream(&[8]);
        let report = matrix_normal_test(&spec, 1024, 2, 2, 100_000, WORKERS, &base).unwrap();
        assert_eq!(report.entries.len(), 4);
        for entry in &report.entries {
            assert!(
                (entry.var - 1.0).abs() <= ENTRY_VAR_WINDOW,
                "entry ({}, {}) variance {}",
                entry.row,
                entry.col,
                entry.var
            );
            assert!(
                entry.excess_kurtosis.abs() <= ENTRY_SHAPE_WINDOW,
                "entry ({}, {}) excess kurtosis {}",
                entry.row,
                entry.col,
                entry.excess_kurtosis
            );
        }
        // All six distinct pairs among the four entries stay decorrelated.
        assert!(report.max_abs_corr <= ENTRY_SHAPE_WINDOW, "corr {}", report.max_abs_corr);
        assert!(report.ks_distance.is_none());
        assert_eq!(report.pass, Some(true));

        let scalar =
            matrix_normal_test(&spec, 1024, 1, 1, 100_000, WORKERS, &base.derive_stream(&[1]))
                .unwrap();
        let ks = scalar.ks_distance.expect("scalar case reports a KS distance");
        assert!(ks <= KS_THRESHOLD, "ks {ks}");
        assert_eq!(scalar.pass, Some(true));
    });
}

/// Criterion 9 — a brute-force Monte Carlo of the expected squared Frobenius
/// distance of the order-two Gram matrix from identity (isotropic Gaussian,
/// d = 20) agrees with the closed-form rate functional, and decisively
/// rejects the two nearby mis-bookkeepings (squared-mean cross term, 0.20;
/// upper-triangle-only counting, 0.15).
#[test]
fn acceptance_09_gram_rate_crosscheck() {
    criterion(9, "brute-force Frobenius rate matches the closed form", || {
        let spec = gaussian_iso();
        let d = 20usize;
        let mut rate_rng = RngStream::from_root(ACCEPT_SEED).derive_stream(&[9, 0]);
        let rate = gram_rate(2, &spec, d, 1_000, &mut rate_rng).unwrap();
        let exact = match rate {
            RateValue::Exact(value) => value,
            RateValue::Estimated { .. } => panic!("isotropic Gaussian rate must be closed-form"),
        };
        assert!((exact - 0.30).abs() <= 1e-12, "closed form {exact} vs 0.30");

        let sampler = spec.sampler(d).unwrap();
        let mut stream = RngStream::from_root(ACCEPT_SEED).derive_stream(&[9, 1]);
        let mut acc = StreamingMoments::new();
        let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
        for _ in 0..1_000_000u64 {
            sampler.sample_into(&mut stream, &mut x).unwrap();
            sampler.sample_into(&mut stream, &mut y).unwrap();
            let (nx, ny, cross) = (dot(&x, &x), dot(&y, &y), dot(&x, &y));
            acc.push((nx - 1.0).powi(2) + (ny - 1.0).powi(2) + 2.0 * cross * cross);
        }
        let (mc, se) = (acc.mean(), acc.standard_error());
        assert!(
            (mc - exact).abs() <= 3.0 * se,
            "brute force {mc} vs closed form {exact} (se {se})"
        );
        assert!((mc - 0.20).abs() > 3.0 * se, "cannot separate from squared-mean variant");
        assert!((mc - 0.15).abs() > 3.0 * se, "cannot separate from half-count variant");
    });
}

/// Criterion 10 — identical (config, seed, workers) reproduce the report file
/// byte for byte, in both formats; changing the seed changes the bytes.
#[test]
fn acceptance_10_reports_are_reproducible() {
    criterion(10, "reports are byte-identical at fixed config and seed", || {
        let tmp = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-repro");
        let _ = fs::remove_dir_all(&tmp);
        let mut config = default_config(ExperimentKind::StableCounterexample, ACCEPT_SEED);
        config.reps = 500;
        config.check = CheckParams::StableCounterexample { d: 64, t: 1.0 };
        config.validate().unwrap();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            config.format = format;
            let mut bytes = Vec::new();
            for run in 0..2 {
                let outcome = run_experiment(&config).unwrap();
                let meta = ReportMeta {
                    experiment: &config.name,
                    version: "acceptance",
                    config_hash: config.hash(),
                    seed: config.seed,
                    workers: config.workers,
                };
                let dir = tmp.join(format!("{format}-{run}"));
                let path =
                    write_report(&dir, &config.name, format, &meta, &outcome.rows).unwrap();
                bytes.push(fs::read(path).unwrap());
            }
            assert_eq!(bytes[0], bytes[1], "{format}: reruns must be byte-identical");

            let mut reseeded = config.clone();
            reseeded.seed = ACCEPT_SEED + 1;
            let outcome = run_experiment(&reseeded).unwrap();
            let meta = ReportMeta {
                experiment: &reseeded.name,
                version: "acceptance",
                config_hash: reseeded.hash(),
                seed: reseeded.seed,
                workers: reseeded.workers,
            };
            let dir = tmp.join(format!("{format}-alt"));
            let path = write_report(&dir, &reseeded.name, format, &meta, &outcome.rows).unwrap();
            assert_ne!(bytes[0], fs::read(path).unwrap(), "{format}: seed must matter");
        }
    });
}
