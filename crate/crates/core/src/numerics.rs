//! Dense linear-algebra kernels: polar decomposition, SPD square root,
//! matrix exponential, Lyapunov propagation and steady-state solves.
//!
//! Every routine works on small dense matrices (at most a few tens of rows)
//! and is pure; nothing here holds state between calls.

use nalgebra::{Complex, DMatrix};

use crate::error::{dimension, Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex<f64>>;

/// Absolute tolerance used for residual checks unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest absolute entry.
pub fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_complex(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Maximum absolute column sum.
pub fn norm1(m: &RealMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

pub fn asymmetry(m: &RealMatrix) -> f64 {
    max_abs(&(m - m.transpose()))
}

fn require_square(op: &'static str, m: &RealMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(dimension(
            op,
            format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.nrows())
}

/// Polar factors of a square complex matrix, `M = R·U`.
#[derive(Debug, Clone)]
pub struct Polar {
    /// Hermitian positive-semidefinite factor `R = sqrt(M·M†)`.
    pub positive: ComplexMatrix,
    /// Unitary factor.
    pub unitary: ComplexMatrix,
}

/// Left polar decomposition `M = R·U` computed from the SVD `M = W·Σ·Z†`:
/// `U = W·Z†` and `R = W·Σ·W†`.
pub fn polar_decompose(m: &ComplexMatrix) -> Result<Polar> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(dimension(
            "polar_decompose",
            format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let largest = sigma.max();
    let smallest = sigma.min();
    if !(largest > 0.0) || smallest <= largest * 1e-14 * m.nrows() as f64 {
        return Err(Error::Singular { smallest, largest });
    }
    let w = svd.u.expect("left singular vectors requested");
    let z_adj = svd.v_t.expect("right singular vectors requested");
    let unitary = &w * &z_adj;
    let scaled = ComplexMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * sigma[j]);
    let positive = &scaled * w.adjoint();
    let positive = (&positive + positive.adjoint()) * Complex::new(0.5, 0.0);
    Ok(Polar { positive, unitary })
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn sqrtm_spd(m: &RealMatrix) -> Result<RealMatrix> {
    let n = require_square("sqrtm_spd", m)?;
    let scale = max_abs(m).max(1.0);
    if asymmetry(m) > 1e-12 * scale {
        return Err(dimension("sqrtm_spd", "input is not symmetric"));
    }
    let eig = symmetrize(m).symmetric_eigen();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite { eigenvalue: bad });
    }
    let q = &eig.eigenvectors;
    let root = RealMatrix::from_fn(n, n, |i, j| q[(i, j)] * eig.eigenvalues[j].sqrt());
    Ok(symmetrize(&(root * q.transpose())))
}

/// Eigenvalues of a real square matrix (real Schur form).
pub fn eigenvalues(m: &RealMatrix) -> Result<Vec<Complex<f64>>> {
    require_square("eigenvalues", m)?;
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

/// Returns the eigenvalues whose real part is not safely negative, or an
/// empty list when the matrix is Hurwitz.
pub fn hurwitz_violations(a: &RealMatrix) -> Result<Vec<Complex<f64>>> {
    let threshold = -1e-12 * norm1(a).max(1e-300);
    Ok(eigenvalues(a)?
        .into_iter()
        .filter(|z| !(z.re < threshold))
        .collect())
}

// Padé coefficients b_0..b_m for the [m/m] approximant of exp.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bounds below which the degree-m approximant is accurate to unit roundoff.
const THETA: [(f64, &[f64]); 4] = [
    (1.495585217958292e-2, &PADE3),
    (2.53939833006323e-1, &PADE5),
    (9.504178996162932e-1, &PADE7),
    (2.097847961257068e0, &PADE9),
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &RealMatrix) -> Result<RealMatrix> {
    let n = require_square("expm", a)?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("expm input has non-finite entries".into()));
    }
    let norm = norm1(a);
    for (theta, coeffs) in THETA {
        if norm <= theta {
            return pade_low(a, coeffs);
        }
    }
    let squarings = ((norm / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = a / 2f64.powi(squarings);
    let mut x = pade13(&scaled, n)?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    Ok(x)
}

fn pade_low(a: &RealMatrix, b: &[f64]) -> Result<RealMatrix> {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = RealMatrix::identity(n, n);
    let mut odd = RealMatrix::zeros(n, n);
    let mut even = RealMatrix::zeros(n, n);
    for pair in b.chunks(2) {
        even += &power * pair[0];
        if let Some(&c) = pair.get(1) {
            odd += &power * c;
        }
        power = &power * &a2;
    }
    pade_solve(a * odd, even)
}

fn pade13(a: &RealMatrix, n: usize) -> Result<RealMatrix> {
    let b = &PADE13;
    let id = RealMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    pade_solve(u, v)
}

fn pade_solve(u: RealMatrix, v: RealMatrix) -> Result<RealMatrix> {
    let denom = &v - &u;
    let numer = v + u;
    denom
        .full_piv_lu()
        .solve(&numer)
        .ok_or(Error::Singular {
            smallest: 0.0,
            largest: 0.0,
        })
}

/// Exact one-interval solution operator of `dV/dt = A·V + V·Aᵀ + B`:
/// `V(t) = Φ·V(0)·Φᵀ + Q` with `Φ = e^{At}` and `Q = ∫₀ᵗ e^{As} B e^{Aᵀs} ds`.
#[derive(Debug, Clone)]
pub struct LyapunovPropagator {
    pub transition: RealMatrix,
    pub noise: RealMatrix,
}

impl LyapunovPropagator {
    /// Builds the propagator for an interval `t ≥ 0`.
    ///
    /// A short base interval is exponentiated with the block matrix
    /// `[[A, B], [0, -Aᵀ]]`, then the pair is doubled up to `t`; every
    /// intermediate quantity stays bounded when `A` is stable.
    pub fn new(a: &RealMatrix, b: &RealMatrix, t: f64) -> Result<Self> {
        let n = require_square("propagate_lyapunov", a)?;
        if b.shape() != (n, n) {
            return Err(dimension(
                "propagate_lyapunov",
                format!("drift is {n}x{n} but diffusion is {}x{}", b.nrows(), b.ncols()),
            ));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "propagation time must be finite and non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(Self {
                transition: RealMatrix::identity(n, n),
                noise: RealMatrix::zeros(n, n),
            });
        }
        let scale = (norm1(a) + norm1(b).sqrt()) * t;
        let doublings = if scale > 0.5 {
            (scale / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let h = t / 2f64.powi(doublings as i32);

        let mut block = RealMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(a * h));
        block.view_mut((0, n), (n, n)).copy_from(&(b * h));
        block.view_mut((n, n), (n, n)).copy_from(&(-a.transpose() * h));
        let e = expm(&block)?;
        let transition = e.view((0, 0), (n, n)).into_owned();
        let coupling = e.view((0, n), (n, n)).into_owned();
        let noise = symmetrize(&(coupling * transition.transpose()));

        let mut prop = Self { transition, noise };
        for _ in 0..doublings {
            prop = prop.then(&prop);
        }
        Ok(prop)
    }

    /// Composition: apply `self`, then `next`.
    pub fn then(&self, next: &Self) -> Self {
        let transition = &next.transition * &self.transition;
        let noise = &next.transition * &self.noise * next.transition.transpose() + &next.noise;
        Self {
            transition,
            noise: symmetrize(&noise),
        }
    }

    pub fn apply(&self, v: &RealMatrix) -> RealMatrix {
        symmetrize(&(&self.transition * v * self.transition.transpose() + &self.noise))
    }
}

/// Covariance after evolving `v0` for time `t` under drift `a` and diffusion `b`.
pub fn propagate_lyapunov(
    v0: &RealMatrix,
    a: &RealMatrix,
    b: &RealMatrix,
    t: f64,
) -> Result<RealMatrix> {
    let n = a.nrows();
    if v0.shape() != (n, n) {
        return Err(dimension(
            "propagate_lyapunov",
            format!("drift is {n}x{n} but covariance is {}x{}", v0.nrows(), v0.ncols()),
        ));
    }
    if t == 0.0 {
        require_square("propagate_lyapunov", a)?;
        return Ok(v0.clone());
    }
    Ok(LyapunovPropagator::new(a, b, t)?.apply(v0))
}

/// Solves `A·V + V·Aᵀ + B = 0` for Hurwitz `A` through the Kronecker-sum
/// linear system.
pub fn solve_lyapunov(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let n = require_square("solve_lyapunov", a)?;
    if b.shape() != (n, n) {
        return Err(dimension(
            "solve_lyapunov",
            format!("drift is {n}x{n} but diffusion is {}x{}", b.nrows(), b.ncols()),
        ));
    }
    let offending = hurwitz_violations(a)?;
    if !offending.is_empty() {
        return Err(Error::NotHurwitz { offending });
    }
    let id = RealMatrix::identity(n, n);
    let system = id.kronecker(a) + a.kronecker(&id);
    let rhs = nalgebra::DVector::from_iterator(n * n, b.iter().map(|x| -x));
    let solution = system
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::NotHurwitz { offending: vec![] })?;
    let v = RealMatrix::from_column_slice(n, n, solution.as_slice());
    Ok(symmetrize(&v))
}

/// Long-time limit of the covariance ODE when `A` is Hurwitz apart from a
/// reducing null space on which both drift and diffusion vanish.
///
/// The null-space block of `v0` is carried over unchanged, correlations
/// between it and the damped block decay away, and the damped block settles
/// to its own Lyapunov solution. Fails with [`Error::NotHurwitz`] when no such
/// splitting exists.
pub fn stationary_state(a: &RealMatrix, b: &RealMatrix, v0: &RealMatrix) -> Result<RealMatrix> {
    let n = require_square("stationary_state", a)?;
    if b.shape() != (n, n) || v0.shape() != (n, n) {
        return Err(dimension(
            "stationary_state",
            "drift, diffusion and covariance must share one shape",
        ));
    }
    if hurwitz_violations(a)?.is_empty() {
        return solve_lyapunov(a, b);
    }

    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let largest = svd.singular_values.max();
    let cutoff = 1e-10 * largest.max(1e-300);
    let (null_idx, range_idx): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| svd.singular_values[i] <= cutoff);
    let not_hurwitz = || Error::NotHurwitz {
        offending: hurwitz_violations(a).unwrap_or_default(),
    };
    if range_idx.is_empty() {
        return Err(not_hurwitz());
    }
    let basis = |idx: &[usize]| {
        RealMatrix::from_fn(n, idx.len(), |i, k| vt[(idx[k], i)])
    };
    let null = basis(&null_idx);
    let range = basis(&range_idx);

    let tol = 1e-9 * largest.max(1.0);
    let left_leak = max_abs(&(null.transpose() * a));
    let noise_leak = max_abs(&(b * &null));
    if left_leak > tol || noise_leak > 1e-9 * max_abs(b).max(1.0) {
        return Err(not_hurwitz());
    }

    let reduced_drift = range.transpose() * a * &range;
    let reduced_noise = symmetrize(&(range.transpose() * b * &range));
    let damped = solve_lyapunov(&reduced_drift, &reduced_noise)?;
    let frozen = null.transpose() * v0 * &null;
    let v = &range * damped * range.transpose() + &null * frozen * null.transpose();
    Ok(symmetrize(&v))
}
