//! Small dense symmetric linear algebra.
//!
//! Everything here targets `k × k` symmetric matrices with `k ≤ 16`
//! ([`MAX_ORDER`]): an unblocked Cholesky factorization, the log-determinant,
//! and the quadratic form `1'A⁻¹1`. The Gram matrices produced by projection
//! collapse are tiny, so a cache-friendly unblocked kernel beats any general
//! linear-algebra dependency and keeps the failure semantics explicit.
//!
//! Failure semantics: a pivot at or below `order · ε · max(diag, 0)` aborts the
//! factorization with [`LinalgError::NotPositiveDefinite`] carrying the pivot
//! index. There is deliberately no pivoting, no jitter and no retry — callers
//! count near-singular draws and report them, they never paper over them.

use thiserror::Error;

/// Largest supported matrix order.
pub const MAX_ORDER: usize = 16;

/// Errors from construction and factorization of small symmetric matrices.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// The requested order lies outside `1..=MAX_ORDER`.
    #[error("matrix order {order} outside supported range 1..={MAX_ORDER}")]
    OrderOutOfRange {
        /// Requested order.
        order: usize,
    },
    /// A Cholesky pivot fell at or below the positivity threshold.
    #[error(
        "matrix not positive definite: pivot {pivot} is {value:.6e} (threshold {threshold:.6e})"
    )]
    NotPositiveDefinite {
        /// Zero-based index of the failing pivot.
        pivot: usize,
        /// Value of the failing pivot before the square root.
        value: f64,
        /// Threshold `order · ε · max(diag, 0)` it was compared against.
        threshold: f64,
    },
}

/// Dense symmetric matrix in full row-major storage, order ≤ [`MAX_ORDER`].
///
/// Symmetry is enforced structurally: [`SymMatrix::set`] writes both `(i,j)`
/// and `(j,i)`, and [`SymMatrix::from_fn`] only consults the upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of the given order.
    pub fn zeros(n: usize) -> Result<Self, LinalgError> {
        if n == 0 || n > MAX_ORDER {
            return Err(LinalgError::OrderOutOfRange { order: n });
        }
        Ok(Self { n, a: vec![0.0; n * n] })
    }

    /// `s · I` of the given order.
    pub fn scaled_identity(n: usize, s: f64) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.a[i * n + i] = s;
        }
        Ok(m)
    }

    /// Builds a symmetric matrix by evaluating `f(i, j)` on the upper triangle
    /// (`i ≤ j`) and mirroring.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i * n + j] = v;
                m.a[j * n + i] = v;
            }
        }
        Ok(m)
    }

    /// Matrix order.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range for order {}", self.n);
        self.a[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range for order {}", self.n);
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    /// Frobenius distance `‖A − s·I‖_F`.
    pub fn frob_dist_to_scaled_identity(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { s } else { 0.0 };
                let d = self.a[i * self.n + j] - target;
                sum += d * d;
            }
        }
        sum.sqrt()
    }

    /// Unblocked lower Cholesky factorization `A = LL'`.
    ///
    /// Fails with [`LinalgError::NotPositiveDefinite`] as soon as a pivot is at
    /// or below `order · ε · max(diag, 0)`; the returned pivot index makes
    /// near-singular Gram draws countable by callers.
    pub fn cholesky(&self) -> Result<CholeskyFactor, LinalgError> {
        let n = self.n;
        let max_diag = (0..n).map(|i| self.a[i * n + i]).fold(0.0_f64, f64::max);
        let threshold = n as f64 * f64::EPSILON * max_diag.max(0.0);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= threshold {
                        return Err(LinalgError::NotPositiveDefinite {
                            pivot: i,
                            value: s,
                            threshold,
                        });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFactor { n, l })
    }
}

/// Lower-triangular Cholesky factor `L` with `A = LL'`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Matrix order.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range for order {}", self.n);
        self.l[i * self.n + j]
    }

    /// `ln det A = 2 Σ ln L[i][i]`.
    pub fn logdet(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>() * 2.0
    }

    /// Quadratic form `1'A⁻¹1`.
    ///
    /// Computed as `‖w‖²` where `Lw = 1` (forward substitution); this equals
    /// the two-triangular-solve expression `1'(LL')⁻¹1` exactly and is
    /// structurally positive.
    pub fn quad_inv_ones(&self) -> f64 {
        let n = self.n;
        let mut w = vec![0.0; n];
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = 1.0;
            for (lik, wk) in row.iter().zip(&w) {
                s -= lik * wk;
            }
            w[i] = s / self.l[i * n + i];
        }
        w.iter().map(|x| x * x).sum()
    }

    /// Solves `Lw = b` in place (forward substitution).
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "rhs length must equal matrix order");
        let n = self.n;
        for i in 0..n {
            let (solved, tail) = b.split_at_mut(i);
            let row = &self.l[i * n..i * n + i];
            let mut s = tail[0];
            for (lik, bk) in row.iter().zip(solved.iter()) {
                s -= lik * bk;
            }
            tail[0] = s / self.l[i * n + i];
        }
    }
}
