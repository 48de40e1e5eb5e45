//! Zero-mean Gaussian states over labeled bosonic modes.
//!
//! Quadratures use `q = (b† + b)/√2`, `p = i(b† − b)/√2` with ħ = 1, so the
//! vacuum covariance is `𝟙/2`. Vectors and matrices are ordered with all
//! position quadratures first: `(q₁ … q_M, p₁ … p_M)`.

use nalgebra::{Complex, DVector};

use crate::error::{dimension, Error, Result};
use crate::numerics::{asymmetry, max_abs, symmetrize, ComplexMatrix, RealMatrix};

/// Minimum eigenvalue of `V + iΣ/2` below which a covariance is rejected.
pub const PHYSICALITY_TOL: f64 = -1e-9;

/// `Σ = [[0, 𝟙], [−𝟙, 0]]` for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> RealMatrix {
    let mut sigma = RealMatrix::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        sigma[(i, n_modes + i)] = 1.0;
        sigma[(n_modes + i, i)] = -1.0;
    }
    sigma
}

/// Smallest eigenvalue of the Hermitian matrix `V + iΣ/2`; non-negative for
/// every physical covariance.
pub fn physicality_margin(cov: &RealMatrix) -> f64 {
    let n = cov.nrows() / 2;
    let sigma = symplectic_form(n);
    let h = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        Complex::new(cov[(i, j)], 0.5 * sigma[(i, j)])
    });
    h.symmetric_eigenvalues().min()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    labels: Vec<String>,
    mean: DVector<f64>,
    cov: RealMatrix,
}

impl GaussianState {
    /// Validates shape, symmetry and the uncertainty principle.
    pub fn new(labels: Vec<String>, mean: DVector<f64>, cov: RealMatrix) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(dimension("GaussianState", "at least one mode is required"));
        }
        if mean.len() != 2 * m || cov.shape() != (2 * m, 2 * m) {
            return Err(dimension(
                "GaussianState",
                format!(
                    "{m} modes need a mean of length {} and a {}x{} covariance, got {} and {}x{}",
                    2 * m,
                    2 * m,
                    2 * m,
                    mean.len(),
                    cov.nrows(),
                    cov.ncols()
                ),
            ));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidParameter(format!("duplicate mode label `{label}`")));
            }
        }
        if cov.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("state has non-finite entries".into()));
        }
        if asymmetry(&cov) > 1e-9 * max_abs(&cov).max(1.0) {
            return Err(dimension("GaussianState", "covariance is not symmetric"));
        }
        let cov = symmetrize(&cov);
        let margin = physicality_margin(&cov);
        if margin < PHYSICALITY_TOL {
            return Err(Error::Unphysical { margin });
        }
        Ok(Self { labels, mean, cov })
    }

    pub fn zero_mean(labels: Vec<String>, cov: RealMatrix) -> Result<Self> {
        let n = 2 * labels.len();
        Self::new(labels, DVector::zeros(n), cov)
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        Self::thermal(&vec![0.0; n_modes])
    }

    /// Product of thermal states with the given mean occupations.
    pub fn thermal(occupations: &[f64]) -> Result<Self> {
        Self::thermal_labeled(default_labels(occupations.len()), occupations)
    }

    pub fn thermal_labeled(labels: Vec<String>, occupations: &[f64]) -> Result<Self> {
        if labels.len() != occupations.len() {
            return Err(dimension("thermal", "one occupation per label is required"));
        }
        if let Some(bad) = occupations.iter().find(|n| !(**n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "thermal occupation must be finite and non-negative, got {bad}"
            )));
        }
        let m = occupations.len();
        let diag = DVector::from_fn(2 * m, |i, _| occupations[i % m] + 0.5);
        Self::zero_mean(labels, RealMatrix::from_diagonal(&diag))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &RealMatrix {
        &self.cov
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        Self::new(labels, self.mean, self.cov)
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        if keep.is_empty() {
            return Err(dimension("partial_trace", "at least one mode must be kept"));
        }
        let m = self.n_modes();
        let modes = keep
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|i| i + m)).collect();
        let cov = RealMatrix::from_fn(rows.len(), rows.len(), |i, j| self.cov[(rows[i], rows[j])]);
        let mean = DVector::from_fn(rows.len(), |i, _| self.mean[rows[i]]);
        let labels = modes.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self { labels, mean, cov })
    }

    /// `1/√det(2V)`.
    pub fn purity(&self) -> f64 {
        purity_of(&self.cov)
    }

    pub fn physicality_margin(&self) -> f64 {
        physicality_margin(&self.cov)
    }
}

pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("mode-{i}")).collect()
}

pub fn purity_of(cov: &RealMatrix) -> f64 {
    1.0 / (cov * 2.0).determinant().sqrt()
}

/// `1/√det(V_target + V)` without clamping.
pub fn pure_target_overlap(target: &GaussianState, state: &GaussianState) -> Result<f64> {
    if target.n_modes() != state.n_modes() {
        return Err(dimension(
            "fidelity",
            format!("target has {} modes, state has {}", target.n_modes(), state.n_modes()),
        ));
    }
    let mean_tol = 1e-12;
    if target.mean.amax() > mean_tol || state.mean.amax() > mean_tol {
        return Err(Error::NonzeroMean);
    }
    let purity = target.purity();
    if (purity - 1.0).abs() > 1e-6 {
        return Err(Error::ImpureTarget { purity });
    }
    let det = (target.cov() + state.cov()).determinant();
    Ok(1.0 / det.sqrt())
}

/// Uhlmann fidelity between a pure zero-mean Gaussian target and any
/// zero-mean Gaussian state, clamped to `[0, 1]`.
pub fn fidelity_to_pure_target(target: &GaussianState, state: &GaussianState) -> Result<f64> {
    Ok(pure_target_overlap(target, state)?.clamp(0.0, 1.0))
}

/// Orthogonal symplectic matrix of the passive transformation `c = U·b`.
///
/// With `X = Re U`, `Y = Im U` the collective quadratures are
/// `q_c = X·q − Y·p` and `p_c = Y·q + X·p`.
pub fn symplectic_from_unitary(u: &ComplexMatrix) -> Result<RealMatrix> {
    let n = u.nrows();
    if u.ncols() != n || n == 0 {
        return Err(dimension("symplectic_from_unitary", "U must be square"));
    }
    let deviation = (u.adjoint() * u - ComplexMatrix::identity(n, n))
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    let mut s = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (u[(i, j)].re, u[(i, j)].im);
            s[(i, j)] = x;
            s[(i, n + j)] = -y;
            s[(n + i, j)] = y;
            s[(n + i, n + j)] = x;
        }
    }
    Ok(s)
}

/// Single-mode squeezing described three equivalent ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSpec {
    /// Ratio of blue- to red-sideband amplitudes, `r = tanh ξ`.
    pub r: f64,
    /// Squeezing parameter; the squeezed variance is `e^{−2ξ}/2`.
    pub xi: f64,
    /// `10·log₁₀(e^{2ξ})`.
    pub db: f64,
}

impl SqueezingSpec {
    pub fn from_r(r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!(
                "Bogoliubov ratio must lie in [0, 1), got {r}"
            )));
        }
        Self::from_xi(r.atanh())
    }

    pub fn from_xi(xi: f64) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "squeezing parameter must be finite and non-negative, got {xi}"
            )));
        }
        Ok(Self {
            r: xi.tanh(),
            xi,
            db: 20.0 * xi / std::f64::consts::LN_10,
        })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !(db >= 0.0) || !db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "squeezing in dB must be finite and non-negative, got {db}"
            )));
        }
        let xi = db * std::f64::consts::LN_10 / 20.0;
        if xi.tanh() >= 1.0 {
            return Err(Error::InvalidParameter(format!("{db} dB is beyond double precision")));
        }
        Self::from_xi(xi)
    }
}
