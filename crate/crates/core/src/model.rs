//! Physical model of one cavity mode coupled to `N` mechanical resonators
//! under the two-tone-per-resonator RWA Hamiltonian
//! `H = a† Σ_j g_j (α_j⁺ e^{iφ_j⁺} b_j† + α_j⁻ e^{iφ_j⁻} b_j) + h.c.`.
//!
//! All rates (`κ`, `β`, `γ_j`, `g_j·α`) share one unit; when baths are given
//! as temperatures, `Ω_j` must be angular frequencies in rad/s so that the
//! Planck occupation can be evaluated. Full-system vectors are ordered
//! `(q₁ … q_N, q_cav, p₁ … p_N, p_cav)`.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{dimension, Error, Result};
use crate::gaussian::{symplectic_form, SqueezingSpec};
use crate::graph::canonical_phase;
use crate::numerics::{symmetrize, ComplexMatrix, RealMatrix};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const K_B: f64 = 1.380_649e-23;
/// Default upper limit on the Bogoliubov ratio accepted by [`beta_optimal`].
pub const R_MAX: f64 = 0.9999;

/// Planck mean occupation `1/(e^{ħΩ/k_B T} − 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * temperature);
    1.0 / x.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bath {
    /// Mean phonon number of the bath.
    Occupation(f64),
    /// Bath temperature in kelvin.
    Temperature(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    pub kappa: f64,
    pub couplings: Vec<f64>,
    pub omegas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub baths: Vec<Bath>,
    pub beta: f64,
    pub r: f64,
}

impl SystemParams {
    /// Noiseless parameters for `n` resonators at the fastest-settling
    /// collective coupling. Couplings default to 1 and frequencies to
    /// `Ω_j = 10³·j·κ`.
    pub fn new(n: usize, kappa: f64, squeezing: SqueezingSpec) -> Result<Self> {
        let params = Self {
            kappa,
            couplings: vec![1.0; n],
            omegas: (1..=n).map(|j| 1e3 * j as f64 * kappa).collect(),
            gammas: vec![0.0; n],
            baths: vec![Bath::Occupation(0.0); n],
            beta: beta_optimal(kappa, squeezing.r)?,
            r: squeezing.r,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn n_modes(&self) -> usize {
        self.couplings.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.couplings.len();
        if n == 0 {
            return Err(Error::InvalidParameter("at least one resonator is required".into()));
        }
        for (name, len) in [
            ("omegas", self.omegas.len()),
            ("gammas", self.gammas.len()),
            ("baths", self.baths.len()),
        ] {
            if len != n {
                return Err(Error::InvalidParameter(format!(
                    "{name} has {len} entries but there are {n} couplings"
                )));
            }
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        positive("kappa", self.kappa)?;
        positive("beta", self.beta)?;
        for j in 0..n {
            positive("coupling", self.couplings[j])?;
            positive("omega", self.omegas[j])?;
            if !(self.gammas[j] >= 0.0) || !self.gammas[j].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "gamma must be non-negative, got {}",
                    self.gammas[j]
                )));
            }
            match self.baths[j] {
                Bath::Occupation(x) | Bath::Temperature(x) if !(x >= 0.0) || !x.is_finite() => {
                    return Err(Error::InvalidParameter(format!(
                        "bath occupation/temperature must be non-negative, got {x}"
                    )));
                }
                _ => {}
            }
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::InvalidParameter(format!(
                "Bogoliubov ratio must lie in [0, 1), got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Mean bath occupation per resonator.
    pub fn occupations(&self) -> Vec<f64> {
        self.baths
            .iter()
            .zip(&self.omegas)
            .map(|(bath, &omega)| match *bath {
                Bath::Occupation(n) => n,
                Bath::Temperature(t) => thermal_occupation(omega, t),
            })
            .collect()
    }

    /// `ħΩ_j / k_B T_j` per resonator, infinite for a zero-temperature bath.
    pub fn inverse_thermal_energy(&self) -> Vec<f64> {
        self.baths
            .iter()
            .zip(&self.omegas)
            .map(|(bath, &omega)| match *bath {
                Bath::Temperature(t) if t > 0.0 => HBAR * omega / (K_B * t),
                Bath::Temperature(_) => f64::INFINITY,
                Bath::Occupation(n) if n > 0.0 => (1.0 + 1.0 / n).ln(),
                Bath::Occupation(_) => f64::INFINITY,
            })
            .collect()
    }

    pub fn has_mechanical_noise(&self) -> bool {
        self.gammas.iter().any(|&g| g > 0.0)
    }

    /// Same physics with every rate multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            kappa: self.kappa * factor,
            couplings: self.couplings.clone(),
            omegas: self.omegas.iter().map(|w| w * factor).collect(),
            gammas: self.gammas.iter().map(|g| g * factor).collect(),
            baths: self.baths.clone(),
            beta: self.beta * factor,
            r: self.r,
        }
    }
}

/// `κ / (4√(1 − r²))`, the collective coupling at which the two step
/// eigenvalues merge at `−κ/4`.
pub fn beta_optimal(kappa: f64, r: f64) -> Result<f64> {
    beta_optimal_with_limit(kappa, r, R_MAX)
}

pub fn beta_optimal_with_limit(kappa: f64, r: f64, r_max: f64) -> Result<f64> {
    if !(0.0..=r_max).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "Bogoliubov ratio {r} outside [0, {r_max}]"
        )));
    }
    Ok(kappa / (4.0 * (1.0 - r * r).sqrt()))
}

/// Drive amplitudes and phases for one switching step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveStep {
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    pub phi_plus: Vec<f64>,
}

impl DriveStep {
    /// Builds a step from red-sideband amplitudes that may carry a sign; a
    /// negative amplitude becomes its magnitude with the phase advanced by π.
    pub fn from_signed(amplitudes: &[f64], phases: &[f64], r: f64) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(dimension("DriveStep", "one phase per amplitude is required"));
        }
        let (alpha_minus, phi_minus): (Vec<f64>, Vec<f64>) = amplitudes
            .iter()
            .zip(phases)
            .map(|(&a, &p)| {
                let p = if a < 0.0 { p + std::f64::consts::PI } else { p };
                (a.abs(), p.rem_euclid(std::f64::consts::TAU))
            })
            .unzip();
        Ok(Self::from_red_sideband(alpha_minus, phi_minus, r))
    }

    fn from_red_sideband(alpha_minus: Vec<f64>, phi_minus: Vec<f64>, r: f64) -> Self {
        let alpha_plus = alpha_minus.iter().map(|a| r * a).collect();
        let phi_plus = phi_minus
            .iter()
            .map(|&p| canonical_phase(Complex::from_polar(1.0, -p)))
            .collect();
        Self {
            alpha_minus,
            alpha_plus,
            phi_minus,
            phi_plus,
        }
    }

    /// All drives off.
    pub fn idle(n: usize) -> Self {
        Self::from_red_sideband(vec![0.0; n], vec![0.0; n], 0.0)
    }

    pub fn n_modes(&self) -> usize {
        self.alpha_minus.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveSchedule {
    pub steps: Vec<DriveStep>,
}

/// One row of the drive table in units of `β/g_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveTableRow {
    pub step: usize,
    pub mode: usize,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
}

impl DriveSchedule {
    /// Flattened table with amplitudes normalized by `β/g_j`; step and mode
    /// indices are 1-based.
    pub fn table(&self, params: &SystemParams) -> Vec<DriveTableRow> {
        let mut rows = Vec::new();
        for (k, step) in self.steps.iter().enumerate() {
            for j in 0..step.n_modes() {
                let unit = params.beta / params.couplings[j];
                rows.push(DriveTableRow {
                    step: k + 1,
                    mode: j + 1,
                    alpha_minus: step.alpha_minus[j] / unit,
                    alpha_plus: step.alpha_plus[j] / unit,
                    phi_minus: step.phi_minus[j],
                    phi_plus: step.phi_plus[j],
                });
            }
        }
        rows
    }
}

/// Step `k` sets `α_j⁻ = (β/g_j)|U_kj|`, `α_j⁺ = r·α_j⁻` and
/// `φ_j⁻ = −φ_j⁺ = arg U_kj`, so that the cavity couples only to
/// `c_k + r·c_k†` with strength `β`.
pub fn drive_schedule(u: &ComplexMatrix, params: &SystemParams) -> Result<DriveSchedule> {
    params.validate()?;
    let n = params.n_modes();
    if u.shape() != (n, n) {
        return Err(dimension(
            "drive_schedule",
            format!("{n} resonators need a {n}x{n} unitary, got {}x{}", u.nrows(), u.ncols()),
        ));
    }
    let deviation = (u.adjoint() * u - ComplexMatrix::identity(n, n))
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    let steps = (0..n)
        .map(|k| {
            let alpha_minus = (0..n)
                .map(|j| params.beta / params.couplings[j] * u[(k, j)].norm())
                .collect();
            let phi_minus = (0..n).map(|j| canonical_phase(u[(k, j)])).collect();
            DriveStep::from_red_sideband(alpha_minus, phi_minus, params.r)
        })
        .collect();
    Ok(DriveSchedule { steps })
}

/// Drift `A` and diffusion `B` of `dV/dt = A·V + V·Aᵀ + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub drift: RealMatrix,
    pub diffusion: RealMatrix,
}

/// The four coupling vectors of the quadratic Hamiltonian: `H` contains
/// `𝒜_j q_j Q + 𝒞_j q_j P + 𝒟_j p_j Q + ℬ_j p_j P` for cavity quadratures `Q, P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVectors {
    pub qq: Vec<f64>,
    pub pp: Vec<f64>,
    pub qp: Vec<f64>,
    pub pq: Vec<f64>,
}

pub fn coupling_vectors(step: &DriveStep, params: &SystemParams) -> Result<CouplingVectors> {
    let n = params.n_modes();
    if step.n_modes() != n
        || step.alpha_plus.len() != n
        || step.phi_minus.len() != n
        || step.phi_plus.len() != n
    {
        return Err(dimension(
            "build_drift_diffusion",
            format!("drive step has {} modes, parameters have {n}", step.n_modes()),
        ));
    }
    let per_mode = |f: &dyn Fn(f64, f64, f64, f64) -> f64| -> Vec<f64> {
        (0..n)
            .map(|j| {
                params.couplings[j]
                    * f(step.alpha_plus[j], step.phi_plus[j], step.alpha_minus[j], step.phi_minus[j])
            })
            .collect()
    };
    Ok(CouplingVectors {
        qq: per_mode(&|ap, pp, am, pm| ap * pp.cos() + am * pm.cos()),
        pp: per_mode(&|ap, pp, am, pm| -ap * pp.cos() + am * pm.cos()),
        qp: per_mode(&|ap, pp, am, pm| ap * pp.sin() + am * pm.sin()),
        pq: per_mode(&|ap, pp, am, pm| ap * pp.sin() - am * pm.sin()),
    })
}

/// Builds `(A, B)` from `A = Σ[G + Im(C†C)]`, `B = Σ·Re(C†C)·Σᵀ`.
///
/// `C` always holds the cavity decay row `√(κ/2)(…, 1, …, i)`. With
/// `mechanical_noise` set, each resonator adds an amplitude-damping row
/// `√(γ_j(n̄_j+1))·b_j` and a heating row `√(γ_j n̄_j)·b_j†`.
pub fn build_drift_diffusion(
    step: &DriveStep,
    params: &SystemParams,
    mechanical_noise: bool,
) -> Result<DriftDiffusion> {
    params.validate()?;
    let n = params.n_modes();
    let cv = coupling_vectors(step, params)?;
    let m = n + 1;
    let (cav_q, cav_p) = (n, m + n);

    let mut g = RealMatrix::zeros(2 * m, 2 * m);
    for j in 0..n {
        let (q, p) = (j, m + j);
        for (row, col, value) in [
            (q, cav_q, cv.qq[j]),
            (q, cav_p, cv.qp[j]),
            (p, cav_q, cv.pq[j]),
            (p, cav_p, cv.pp[j]),
        ] {
            g[(row, col)] = value;
            g[(col, row)] = value;
        }
    }

    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();
    // (q index, p index, rate, sign of the p component): L = √(rate/2)(q ± i p)
    rows.push((cav_q, cav_p, params.kappa, 1.0));
    if mechanical_noise {
        for (j, nbar) in params.occupations().into_iter().enumerate() {
            let gamma = params.gammas[j];
            if gamma > 0.0 {
                rows.push((j, m + j, gamma * (nbar + 1.0), 1.0));
                if nbar > 0.0 {
                    rows.push((j, m + j, gamma * nbar, -1.0));
                }
            }
        }
    }
    let mut c = ComplexMatrix::zeros(rows.len(), 2 * m);
    for (k, &(q, p, rate, sign)) in rows.iter().enumerate() {
        let amp = (rate / 2.0).sqrt();
        c[(k, q)] = Complex::new(amp, 0.0);
        c[(k, p)] = Complex::new(0.0, sign * amp);
    }
    let gram = c.adjoint() * c;
    let sigma = symplectic_form(m);
    let drift = &sigma * (g + gram.map(|z| z.im));
    let diffusion = symmetrize(&(&sigma * gram.map(|z| z.re) * sigma.transpose()));
    Ok(DriftDiffusion { drift, diffusion })
}

/// Closed-form drift spectrum of a single step without mechanical noise:
/// `−κ/4 ± √((κ/4)² − 𝒜·ℬ + 𝒟·𝒞)`, each twice, followed by `2(N−1)` zeros.
pub fn closed_form_eigenvalues(step: &DriveStep, params: &SystemParams) -> Result<Vec<Complex<f64>>> {
    let cv = coupling_vectors(step, params)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let quarter = params.kappa / 4.0;
    let disc = quarter * quarter - dot(&cv.qq, &cv.pp) + dot(&cv.pq, &cv.qp);
    let root = Complex::new(disc, 0.0).sqrt();
    let (plus, minus) = (Complex::new(-quarter, 0.0) + root, Complex::new(-quarter, 0.0) - root);
    let mut out = vec![plus, plus, minus, minus];
    out.extend(std::iter::repeat_n(Complex::new(0.0, 0.0), 2 * (params.n_modes() - 1)));
    Ok(out)
}

/// Relaxation data of the driven collective mode at a switching step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpectrum {
    pub lambda_plus: Complex<f64>,
    pub lambda_minus: Complex<f64>,
    /// `1/|Re λ₊|`.
    pub tau: f64,
    /// `4/κ`.
    pub tau_min: f64,
    /// `β√(1−r²) ≥ κ/4`.
    pub critical_or_faster: bool,
}

/// `λ± = −κ/4 ± √((κ/4)² − β²(1−r²))`.
pub fn step_drift_spectrum(kappa: f64, beta: f64, r: f64) -> StepSpectrum {
    let quarter = kappa / 4.0;
    let effective = beta * (1.0 - r * r).sqrt();
    let root = Complex::new(quarter * quarter - effective * effective, 0.0).sqrt();
    let lambda_plus = Complex::new(-quarter, 0.0) + root;
    let lambda_minus = Complex::new(-quarter, 0.0) - root;
    StepSpectrum {
        lambda_plus,
        lambda_minus,
        tau: 1.0 / lambda_plus.re.abs(),
        tau_min: 4.0 / kappa,
        critical_or_faster: effective >= quarter * (1.0 - 1e-12),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub name: &'static str,
    /// Ratio that must be `≪ 1`.
    pub ratio: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub epsilon: f64,
    pub checks: Vec<RegimeCheck>,
}

impl RegimeReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &RegimeCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Evaluates the weak-coupling, resolved-sideband and frequency-separation
/// conditions, reading `≪` as `ratio ≤ epsilon`.
pub fn validate_regime(params: &SystemParams, schedule: &DriveSchedule, epsilon: f64) -> RegimeReport {
    let n = params.n_modes();
    let mut checks = Vec::new();
    let check = |name, ratio: f64, detail: String| RegimeCheck {
        name,
        ratio,
        threshold: epsilon,
        passed: ratio <= epsilon,
        detail,
    };

    let mut weak = (0.0_f64, 0, 0);
    let mut sideband = f64::INFINITY;
    for (k, step) in schedule.steps.iter().enumerate() {
        for j in 0..step.n_modes().min(n) {
            let strength = params.couplings[j] * step.alpha_minus[j].max(step.alpha_plus[j]);
            let ratio = strength / params.omegas[j];
            if ratio > weak.0 {
                weak = (ratio, k + 1, j + 1);
            }
            let weight = params.couplings[j] * step.alpha_minus[j] / params.beta;
            if weight > 1e-13 {
                sideband = sideband.min(params.omegas[j] / weight);
            }
        }
    }
    checks.push(check(
        "weak_coupling",
        weak.0,
        format!("max g_j·α_j/Ω_j at step {}, resonator {}", weak.1, weak.2),
    ));
    let bound = 4.0 * (1.0 - params.r * params.r).sqrt() * sideband;
    checks.push(check(
        "resolved_sideband",
        params.kappa / bound,
        format!("κ against 4√(1−r²)·min Ω_j/|U_kj| = {bound:.6e}"),
    ));
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            gap = gap.min((params.omegas[i] - params.omegas[j]).abs());
        }
    }
    let separation = if n < 2 { 0.0 } else { params.kappa / gap };
    checks.push(check(
        "frequency_separation",
        separation,
        if n < 2 {
            "single resonator".to_string()
        } else if gap == 0.0 {
            "two resonators share a frequency".to_string()
        } else {
            format!("κ against min |Ω_i − Ω_j| = {gap:.6e}")
        },
    ));
    RegimeReport { epsilon, checks }
}
