//! Hamiltonian switching: `N` drive settings applied back to back, each
//! cooling one collective mode into its squeezed vacuum through the cavity.
//!
//! Durations passed to and returned by this module are in units of `1/κ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{physicality_margin, GaussianState, SqueezingSpec};
use crate::graph::{builtin_graph, mechanical_labels, GraphKind, GraphTarget};
use crate::model::{
    beta_optimal, build_drift_diffusion, drive_schedule, step_drift_spectrum, Bath, DriftDiffusion,
    SystemParams,
};
use crate::numerics::{stationary_state, LyapunovPropagator, RealMatrix};

/// Points in the coarse logarithmic scan of [`optimize_evolution_time`].
pub const COARSE_GRID_POINTS: usize = 32;
/// Width of the final golden-section interval, relative to its position.
pub const GOLDEN_RELATIVE_WIDTH: f64 = 1e-3;
/// Upper end of the default bracket when no resonator is damped.
pub const NOISELESS_UPPER_BOUND: f64 = 1e4;

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchTime {
    /// Each step lasts this long, in units of `1/κ`.
    Finite(f64),
    /// Each step runs to its stationary state.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Vacuum,
    /// Resonators in equilibrium with their baths.
    ThermalAtBath,
}

impl InitialState {
    pub fn default_for(mechanical_noise: bool) -> Self {
        if mechanical_noise {
            Self::ThermalAtBath
        } else {
            Self::Vacuum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub switch_time: SwitchTime,
    /// Trajectory sampling interval in units of `1/κ`.
    pub sample_dt: f64,
    pub initial_state: InitialState,
    pub mechanical_noise: bool,
}

impl ProtocolConfig {
    pub fn new(switch_time: SwitchTime) -> Self {
        Self {
            switch_time,
            sample_dt: 0.1,
            initial_state: InitialState::Vacuum,
            mechanical_noise: false,
        }
    }

    /// Mechanical baths on, resonators starting in equilibrium with them.
    pub fn noisy(switch_time: SwitchTime) -> Self {
        Self {
            initial_state: InitialState::ThermalAtBath,
            mechanical_noise: true,
            ..Self::new(switch_time)
        }
    }

    pub fn with_switch_time(self, switch_time: SwitchTime) -> Self {
        Self { switch_time, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if let SwitchTime::Finite(t) = self.switch_time {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "switching time must be positive, got {t}"
                )));
            }
        }
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampling interval must be positive, got {}",
                self.sample_dt
            )));
        }
        Ok(())
    }
}

/// Fidelity of the resonators' reduced state against the target over a run.
///
/// For finite steps `times` are in units of `1/κ`; in steady mode the run is
/// sampled once per completed step and `times` counts steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Step active over the interval ending at each sample; 0 for the initial sample.
    pub step_index: Vec<usize>,
    /// Sample index at which each step ends.
    pub step_boundaries: Vec<usize>,
    pub final_state: GaussianState,
    /// Largest fidelity before clamping to `[0, 1]`.
    pub max_unclamped_fidelity: f64,
    /// Smallest `min eig(V + iΣ/2)` of the full cavity-plus-resonator state.
    pub min_physicality_margin: f64,
}

impl Trajectory {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelities.last().expect("a trajectory holds at least the initial sample")
    }
}

/// Precomputed drifts and initial state for repeated runs of one protocol.
#[derive(Debug, Clone)]
pub struct Protocol {
    n: usize,
    steps: Vec<DriftDiffusion>,
    kappa: f64,
    initial: RealMatrix,
    target: RealMatrix,
}

impl Protocol {
    pub fn new(
        target: &GraphTarget,
        params: &SystemParams,
        mechanical_noise: bool,
        initial_state: InitialState,
    ) -> Result<Self> {
        params.validate()?;
        let n = target.n_nodes();
        if params.n_modes() != n {
            return Err(Error::InvalidParameter(format!(
                "target has {n} nodes but parameters describe {} resonators",
                params.n_modes()
            )));
        }
        if (params.r - target.squeezing.r).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "drive ratio r = {} does not produce the target squeezing (r = {})",
                params.r, target.squeezing.r
            )));
        }
        let schedule = drive_schedule(&target.unitary, params)?;
        let steps = schedule
            .steps
            .iter()
            .map(|step| build_drift_diffusion(step, params, mechanical_noise))
            .collect::<Result<Vec<_>>>()?;
        let mut occupations = match initial_state {
            InitialState::Vacuum => vec![0.0; n],
            InitialState::ThermalAtBath => params.occupations(),
        };
        occupations.push(0.0);
        let initial = GaussianState::thermal(&occupations)?.cov().clone();
        Ok(Self {
            n,
            steps,
            kappa: params.kappa,
            initial,
            target: target.covariance.clone(),
        })
    }

    pub fn initial_covariance(&self) -> &RealMatrix {
        &self.initial
    }

    /// Covariance of the resonators alone, cavity traced out.
    pub fn mechanical_block(&self, full: &RealMatrix) -> RealMatrix {
        let n = self.n;
        let idx = |i: usize| if i < n { i } else { i + 1 };
        RealMatrix::from_fn(2 * n, 2 * n, |i, j| full[(idx(i), idx(j))])
    }

    /// `1/√det(V_target + V_mech)`, unclamped.
    pub fn overlap(&self, full: &RealMatrix) -> f64 {
        1.0 / (&self.target + self.mechanical_block(full)).determinant().sqrt()
    }

    fn step_once(&self, k: usize, v: &RealMatrix, switch: SwitchTime) -> Result<RealMatrix> {
        let dd = &self.steps[k];
        match switch {
            SwitchTime::Finite(t) => {
                Ok(LyapunovPropagator::new(&dd.drift, &dd.diffusion, t / self.kappa)?.apply(v))
            }
            SwitchTime::Steady => stationary_state(&dd.drift, &dd.diffusion, v),
        }
    }

    /// Full covariance after all steps, in order.
    pub fn final_covariance(&self, switch: SwitchTime) -> Result<RealMatrix> {
        self.final_covariance_in_order(switch, &(0..self.n).collect::<Vec<_>>())
    }

    /// Full covariance after applying the steps in the given order.
    pub fn final_covariance_in_order(&self, switch: SwitchTime, order: &[usize]) -> Result<RealMatrix> {
        let mut v = self.initial.clone();
        for &k in order {
            if k >= self.n {
                return Err(Error::InvalidParameter(format!("no switching step {}", k + 1)));
            }
            v = self.step_once(k, &v, switch)?;
        }
        Ok(v)
    }

    pub fn final_fidelity(&self, switch: SwitchTime) -> Result<f64> {
        Ok(self.overlap(&self.final_covariance(switch)?).clamp(0.0, 1.0))
    }

    pub fn trajectory(&self, switch: SwitchTime, sample_dt: f64) -> Result<Trajectory> {
        let mut v = self.initial.clone();
        let mut times = vec![0.0];
        let mut overlaps = vec![self.overlap(&v)];
        let mut step_index = vec![0];
        let mut step_boundaries = Vec::with_capacity(self.n);
        let mut min_margin = physicality_margin(&v);

        for k in 0..self.n {
            match switch {
                SwitchTime::Finite(t_s) => {
                    let substeps = (t_s / sample_dt).ceil().max(1.0) as usize;
                    let h = t_s / substeps as f64;
                    let dd = &self.steps[k];
                    let prop = LyapunovPropagator::new(&dd.drift, &dd.diffusion, h / self.kappa)?;
                    for i in 1..=substeps {
                        v = prop.apply(&v);
                        times.push(k as f64 * t_s + i as f64 * h);
                        overlaps.push(self.overlap(&v));
                        step_index.push(k + 1);
                        min_margin = min_margin.min(physicality_margin(&v));
                    }
                }
                SwitchTime::Steady => {
                    v = self.step_once(k, &v, switch)?;
                    times.push((k + 1) as f64);
                    overlaps.push(self.overlap(&v));
                    step_index.push(k + 1);
                    min_margin = min_margin.min(physicality_margin(&v));
                }
            }
            step_boundaries.push(times.len() - 1);
        }

        let final_state =
            GaussianState::zero_mean(mechanical_labels(self.n), self.mechanical_block(&v))?;
        Ok(Trajectory {
            times,
            fidelities: overlaps.iter().map(|f| f.clamp(0.0, 1.0)).collect(),
            step_index,
            step_boundaries,
            final_state,
            max_unclamped_fidelity: overlaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_physicality_margin: min_margin,
        })
    }
}

/// Runs the full switching protocol and samples the fidelity along the way.
/// The cavity is never reset; only the drives change between steps.
pub fn run_switching(
    target: &GraphTarget,
    params: &SystemParams,
    config: &ProtocolConfig,
) -> Result<Trajectory> {
    config.validate()?;
    Protocol::new(target, params, config.mechanical_noise, config.initial_state)?
        .trajectory(config.switch_time, config.sample_dt)
}

pub fn final_fidelity(target: &GraphTarget, params: &SystemParams, config: &ProtocolConfig) -> Result<f64> {
    config.validate()?;
    Protocol::new(target, params, config.mechanical_noise, config.initial_state)?
        .final_fidelity(config.switch_time)
}

/// Final fidelity for each per-step duration in an ascending grid.
pub fn final_fidelity_vs_switchtime(
    target: &GraphTarget,
    params: &SystemParams,
    config: &ProtocolConfig,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("switching times must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("switching times must be ascending".into()));
    }
    let protocol = Protocol::new(target, params, config.mechanical_noise, config.initial_state)?;
    grid.iter()
        .map(|&t| Ok((t, protocol.final_fidelity(SwitchTime::Finite(t))?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    /// Per-step duration in units of `1/κ`.
    pub t_switch: f64,
    pub fidelity: f64,
    pub evaluations: usize,
}

/// Per-step duration bracket `[τκ, max(N·min_j κ·ħΩ_j/(γ_j k_B T_j), 4τκ)]`,
/// where `τ` is the slowest relaxation time of a switching step. Without
/// damped resonators the upper end is [`NOISELESS_UPPER_BOUND`].
pub fn default_bracket(params: &SystemParams) -> (f64, f64) {
    let lower = step_drift_spectrum(params.kappa, params.beta, params.r).tau * params.kappa;
    let n = params.n_modes() as f64;
    let upper = params
        .gammas
        .iter()
        .zip(params.inverse_thermal_energy())
        .filter(|(&g, x)| g > 0.0 && x.is_finite())
        .map(|(&g, x)| n * x * params.kappa / g)
        .fold(f64::INFINITY, f64::min);
    let upper = if upper.is_finite() { upper } else { NOISELESS_UPPER_BOUND };
    (lower, upper.max(4.0 * lower))
}

/// Maximizes the final fidelity over one per-step duration shared by all
/// steps: a logarithmic scan, then golden-section refinement around the best
/// scan point. Near-ties go to the longer duration.
pub fn optimize_evolution_time(
    target: &GraphTarget,
    params: &SystemParams,
    config: &ProtocolConfig,
    bounds: Option<(f64, f64)>,
) -> Result<Optimum> {
    let (lower, upper) = bounds.unwrap_or_else(|| default_bracket(params));
    if !(lower > 0.0) || !(upper >= lower) || !upper.is_finite() {
        return Err(Error::InvalidBracket { lower, upper });
    }
    let protocol = Protocol::new(target, params, config.mechanical_noise, config.initial_state)?;
    maximize_log(|t| protocol.final_fidelity(SwitchTime::Finite(t)), lower, upper)
}

fn maximize_log(mut f: impl FnMut(f64) -> Result<f64>, lower: f64, upper: f64) -> Result<Optimum> {
    let mut best = Optimum {
        t_switch: lower,
        fidelity: f64::NEG_INFINITY,
        evaluations: 0,
    };
    let (lo, hi) = (lower.ln(), upper.ln());
    let mut eval = |ln_t: f64, best: &mut Optimum| -> Result<f64> {
        let t = if ln_t >= hi {
            upper
        } else if ln_t <= lo {
            lower
        } else {
            ln_t.exp()
        };
        let value = f(t)?;
        best.evaluations += 1;
        let better = value > best.fidelity + TIE_TOLERANCE
            || (value >= best.fidelity - TIE_TOLERANCE && t > best.t_switch);
        if better {
            best.t_switch = t;
            best.fidelity = value;
        }
        Ok(value)
    };
    if upper == lower {
        eval(lower.ln(), &mut best)?;
        return Ok(best);
    }

    let m = COARSE_GRID_POINTS;
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let mut values = Vec::with_capacity(m);
    for &x in &grid {
        values.push(eval(x, &mut best)?);
    }
    let mut i_best = 0;
    for i in 1..m {
        if values[i] >= values[i_best] - TIE_TOLERANCE {
            i_best = i;
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[i_best.saturating_sub(1)], grid[(i_best + 1).min(m - 1)]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut best)?;
    let mut fd = eval(d, &mut best)?;
    while b - a > GOLDEN_RELATIVE_WIDTH {
        if fc > fd + TIE_TOLERANCE {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut best)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut best)?;
        }
    }
    Ok(best)
}

/// Optimized fidelities over a damping-rate by bath-temperature grid.
/// Row `i` holds `gammas[i]`, column `j` holds `temperatures[j]` (kelvin).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweep {
    pub gammas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub fidelity: Vec<Vec<f64>>,
    pub t_opt: Vec<Vec<f64>>,
}

/// Sets every resonator to damping `γ` and bath temperature `T` for each
/// grid point and records the optimized final fidelity. Grid points run in
/// parallel; the result order is that of the grids.
pub fn noise_sweep(
    target: &GraphTarget,
    params: &SystemParams,
    config: &ProtocolConfig,
    gammas: &[f64],
    temperatures: &[f64],
    bounds: Option<(f64, f64)>,
) -> Result<NoiseSweep> {
    if gammas.iter().chain(temperatures).any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter("sweep grids must be positive".into()));
    }
    let config = ProtocolConfig {
        mechanical_noise: true,
        ..*config
    };
    let points: Vec<(f64, f64)> = gammas
        .iter()
        .flat_map(|&g| temperatures.iter().map(move |&t| (g, t)))
        .collect();
    let results = points
        .par_iter()
        .map(|&(gamma, temperature)| {
            let mut p = params.clone();
            p.gammas = vec![gamma; p.n_modes()];
            p.baths = vec![Bath::Temperature(temperature); p.n_modes()];
            optimize_evolution_time(target, &p, &config, bounds)
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = temperatures.len();
    let reshape = |f: fn(&Optimum) -> f64| {
        results.chunks(cols.max(1)).map(|row| row.iter().map(f).collect()).collect()
    };
    Ok(NoiseSweep {
        gammas: gammas.to_vec(),
        temperatures: temperatures.to_vec(),
        fidelity: reshape(|o| o.fidelity),
        t_opt: reshape(|o| o.t_switch),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaChoice {
    /// The critical-damping value for the target's `r`.
    Optimal,
    Fixed(f64),
}

/// Recipe for the parameters of an `N`-resonator device with evenly spaced
/// frequencies `Ω_j = j·omega_spacing` and identical resonators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsTemplate {
    pub kappa: f64,
    pub omega_spacing: f64,
    pub coupling: f64,
    pub gamma: f64,
    pub bath: Bath,
    pub beta: BetaChoice,
}

impl ParamsTemplate {
    pub fn build(&self, n: usize, squeezing: SqueezingSpec) -> Result<SystemParams> {
        let params = SystemParams {
            kappa: self.kappa,
            couplings: vec![self.coupling; n],
            omegas: (1..=n).map(|j| j as f64 * self.omega_spacing).collect(),
            gammas: vec![self.gamma; n],
            baths: vec![self.bath; n],
            beta: match self.beta {
                BetaChoice::Optimal => beta_optimal(self.kappa, squeezing.r)?,
                BetaChoice::Fixed(b) => b,
            },
            r: squeezing.r,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingSweepPoint {
    pub n_nodes: usize,
    pub db: f64,
    pub fidelity: f64,
    pub t_opt: f64,
}

/// Optimized fidelity of the built-in `kind` graph for every node count and
/// target squeezing, ordered by node count then squeezing.
pub fn squeezing_sweep(
    kind: GraphKind,
    template: &ParamsTemplate,
    config: &ProtocolConfig,
    node_counts: &[usize],
    db_grid: &[f64],
    bounds: Option<(f64, f64)>,
) -> Result<Vec<SqueezingSweepPoint>> {
    let points: Vec<(usize, f64)> = node_counts
        .iter()
        .flat_map(|&n| db_grid.iter().map(move |&db| (n, db)))
        .collect();
    points
        .par_iter()
        .map(|&(n, db)| {
            let squeezing = SqueezingSpec::from_db(db)?;
            let target = GraphTarget::new(builtin_graph(kind, n)?, squeezing)?;
            let params = template.build(n, squeezing)?;
            let opt = optimize_evolution_time(&target, &params, config, bounds)?;
            Ok(SqueezingSweepPoint {
                n_nodes: n,
                db,
                fidelity: opt.fidelity,
                t_opt: opt.t_switch,
            })
        })
        .collect()
}
