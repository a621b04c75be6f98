//! Streaming moments and Kolmogorov–Smirnov distances.
//!
//! [`StreamingMoments`] is the classic Welford accumulator (count, mean,
//! centered second-moment sum) with the Chan–Golub–LeVeque pairwise merge, so
//! per-worker accumulators can be combined exactly in a fixed order and the
//! merged result matches a sequential pass to floating-point reshuffling only.
//! [`FourthMoments`] extends the same scheme to third/fourth central moments
//! (Pébay's single-pass updates), and [`PairCovariance`] tracks a bivariate
//! mean/variance/comoment state for streaming covariance and correlation.
//!
//! The KS helpers compute the one-sample statistic against an arbitrary CDF,
//! the two-sample statistic over the merged sample grid, and the asymptotic
//! tail probability `Q_KS` via the standard complementary-series evaluation
//! with the small-sample effective-size correction
//! `λ = (√n + 0.12 + 0.11/√n)·D`.

/// Welford streaming mean/variance accumulator with exact-shape merging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamingMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl StreamingMoments {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Absorbs one observation.
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Merges another accumulator into this one (Chan et al. pairwise update).
    pub fn merge(&mut self, other: &StreamingMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        self.mean += delta * (n2 / n);
        self.m2 += other.m2 + delta * delta * (n1 * n2 / n);
        self.count += other.count;
    }

    /// Number of observations absorbed.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean (`NaN` when empty).
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance, `m2 / (n − 1)` (`NaN` when `n < 2`).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    /// Standard error of the mean, `√(variance / n)` (`NaN` when `n < 2`).
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Streaming accumulator for central moments up to order four (Pébay updates).
///
/// Like [`StreamingMoments`], shards can be merged exactly, so per-worker
/// accumulators combined in a fixed order reproduce a sequential pass up to
/// floating-point reshuffling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FourthMoments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl FourthMoments {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Absorbs one observation.
    #[inline]
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Merges another accumulator into this one.
    pub fn merge(&mut self, other: &FourthMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        let delta2 = delta * delta;
        self.m4 += other.m4
            + delta2 * delta2 * n1 * n2 * (n1 * n1 - n1 * n2 + n2 * n2) / (n * n * n)
            + 6.0 * delta2 * (n1 * n1 * other.m2 + n2 * n2 * self.m2) / (n * n)
            + 4.0 * delta * (n1 * other.m3 - n2 * self.m3) / n;
        self.m3 += other.m3
            + delta * delta2 * n1 * n2 * (n1 - n2) / (n * n)
            + 3.0 * delta * (n1 * other.m2 - n2 * self.m2) / n;
        self.m2 += other.m2 + delta2 * (n1 * n2 / n);
        self.mean += delta * (n2 / n);
        self.count += other.count;
    }

    /// Number of observations absorbed.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean (`NaN` when empty).
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance, `m2 / (n − 1)` (`NaN` when `n < 2`).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    /// Excess kurtosis estimate `n·m4/m2² − 3` (`NaN` when `n < 2` or the
    /// sample is constant). Uses the population normalization; its O(1/n) bias
    /// is negligible at Monte-Carlo sample sizes.
    pub fn excess_kurtosis(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            f64::NAN
        } else {
            self.count as f64 * self.m4 / (self.m2 * self.m2) - 3.0
        }
    }
}

/// Streaming bivariate accumulator: means, centered second moments, and the
/// comoment `Σ (a − ā)(b − b̄)`, with exact-shape merging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairCovariance {
    count: u64,
    mean_a: f64,
    mean_b: f64,
    m2_a: f64,
    m2_b: f64,
    comoment: f64,
}

impl PairCovariance {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Absorbs one observation pair.
    #[inline]
    pub fn push(&mut self, a: f64, b: f64) {
        self.count += 1;
        let n = self.count as f64;
        let da = a - self.mean_a;
        let db = b - self.mean_b;
        self.mean_a += da / n;
        self.mean_b += db / n;
        self.m2_a += da * (a - self.mean_a);
        self.m2_b += db * (b - self.mean_b);
        self.comoment += da * (b - self.mean_b);
    }

    /// Merges another accumulator into this one.
    pub fn merge(&mut self, other: &PairCovariance) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let da = other.mean_a - self.mean_a;
        let db = other.mean_b - self.mean_b;
        let w = n1 * n2 / n;
        self.comoment += other.comoment + da * db * w;
        self.m2_a += other.m2_a + da * da * w;
        self.m2_b += other.m2_b + db * db * w;
        self.mean_a += da * (n2 / n);
        self.mean_b += db * (n2 / n);
        self.count += other.count;
    }

    /// Number of observation pairs absorbed.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Unbiased sample covariance (`NaN` when `n < 2`).
    pub fn covariance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.comoment / (self.count as f64 - 1.0)
        }
    }

    /// Sample correlation coefficient (`NaN` when `n < 2` or either margin is
    /// constant).
    pub fn correlation(&self) -> f64 {
        if self.count < 2 || self.m2_a == 0.0 || self.m2_b == 0.0 {
            f64::NAN
        } else {
            self.comoment / (self.m2_a * self.m2_b).sqrt()
        }
    }
}

/// One-sample KS statistic `sup_x |F̂(x) − F(x)|` for an ascending-sorted
/// sample against a reference CDF.
///
/// # Panics
/// If the sample is empty or not sorted ascending.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!sorted.is_empty(), "KS statistic of an empty sample");
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in sorted.iter().enumerate() {
        assert!(x >= prev, "sample must be sorted ascending");
        prev = x;
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - f).abs();
        d = d.max(lo).max(hi);
    }
    d
}

/// Two-sample KS statistic `sup_x |F̂₁(x) − F̂₂(x)|`; sorts internally.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS statistic of an empty sample");
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS tail probability `P(D > d)` for effective sample size `n_eff`
/// (one-sample: `n`; two-sample: `n₁n₂/(n₁+n₂)`).
///
/// Applies the effective-size correction `λ = (√n + 0.12 + 0.11/√n)·d`, then
/// evaluates the Kolmogorov complementary series — the dual θ-function form
/// for small `λ`, the alternating exponential series otherwise.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    assert!(n_eff > 0.0, "effective sample size must be positive");
    let sqrt_n = n_eff.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    q_ks(lambda).clamp(0.0, 1.0)
}

/// Kolmogorov complementary CDF `Q(λ) = P(K > λ)`.
fn q_ks(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Q = 1 − √(2π)/λ · Σ_{k odd} exp(−k²π²/(8λ²))
        let t = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let sum = (-t).exp() + (-9.0 * t).exp() + (-25.0 * t).exp() + (-49.0 * t).exp();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        // Q = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)
        let u = lambda * lambda;
        2.0 * ((-2.0 * u).exp() - (-8.0 * u).exp() + (-18.0 * u).exp() - (-32.0 * u).exp())
    }
}
