//! JSON run configuration. Frequencies and rates are given in Hz and
//! converted to angular units, temperatures in mK, durations in `1/κ`.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::gaussian::SqueezingSpec;
use crate::graph::{builtin_graph, AdjacencyMatrix, GraphKind, GraphTarget};
use crate::model::{beta_optimal, Bath, SystemParams};
use crate::protocol::{BetaChoice, InitialState, ParamsTemplate, ProtocolConfig, SwitchTime};

/// Device used when no configuration file is given: `κ/2π = 0.2 MHz`,
/// `Ω_j/2π = 11·j MHz`, no mechanical damping.
pub const NOMINAL_KAPPA_HZ: f64 = 2e5;
pub const NOMINAL_OMEGA_SPACING_HZ: f64 = 11e6;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_SWITCH_TIME: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, n: usize, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Self::One(x) => Ok(vec![*x; n]),
            Self::Many(v) if v.len() == n => Ok(v.clone()),
            Self::Many(v) => Err(CliError::Input(format!(
                "`{name}` lists {} values for {n} resonators",
                v.len()
            ))),
        }
    }

    fn single(&self, name: &str) -> Result<f64, CliError> {
        match self {
            Self::One(x) => Ok(*x),
            Self::Many(v) if v.len() == 1 => Ok(v[0]),
            Self::Many(_) => Err(CliError::Input(format!("`{name}` must be a single value here"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

impl SqueezingConfig {
    pub fn resolve(&self) -> Result<SqueezingSpec, CliError> {
        match (self.db, self.r, self.xi) {
            (Some(db), None, None) => Ok(SqueezingSpec::from_db(db)?),
            (None, Some(r), None) => Ok(SqueezingSpec::from_r(r)?),
            (None, None, Some(xi)) => Ok(SqueezingSpec::from_xi(xi)?),
            _ => Err(CliError::Input(
                "`squeezing` needs exactly one of `db`, `r`, `xi`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Keyword<T> {
    Value(T),
    Word(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Per-step duration in `1/κ`, or `"steady"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_time: Option<Keyword<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanical_noise: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSection {
    Noise {
        gamma_over_kappa: Vec<f64>,
        #[serde(rename = "temperatures_mK")]
        temperatures_mk: Vec<f64>,
    },
    Squeezing {
        n_nodes: Vec<usize>,
        #[serde(rename = "dB")]
        db: Vec<f64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Built-in graph as `kind-N` (e.g. `linear-4`) or a path to an adjacency file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<OneOrMany>,
    #[serde(default, rename = "temperatures_mK", skip_serializing_if = "Option::is_none")]
    pub temperatures_mk: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupations: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<SqueezingConfig>,
    /// Collective coupling in Hz, or `"optimal"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Keyword<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_regime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Per-step duration bracket in `1/κ` for the optimizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed config: {e}")))
    }

    pub fn graph(&self) -> Result<(AdjacencyMatrix, String), CliError> {
        let spec = self
            .graph
            .as_deref()
            .ok_or_else(|| CliError::Input("no graph given".into()))?;
        parse_graph_spec(spec)
    }

    pub fn squeezing(&self) -> Result<SqueezingSpec, CliError> {
        self.squeezing
            .as_ref()
            .ok_or_else(|| CliError::Input("no squeezing given".into()))?
            .resolve()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_regime.unwrap_or(DEFAULT_EPSILON)
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds.map(|[a, b]| (a, b))
    }

    fn kappa_rad(&self) -> f64 {
        TAU * self.kappa.unwrap_or(NOMINAL_KAPPA_HZ)
    }

    fn baths(&self, n: usize) -> Result<Vec<Bath>, CliError> {
        match (&self.temperatures_mk, &self.occupations) {
            (Some(_), Some(_)) => Err(CliError::Input(
                "give either `temperatures_mK` or `occupations`, not both".into(),
            )),
            (Some(t), None) => Ok(t
                .expand(n, "temperatures_mK")?
                .into_iter()
                .map(|mk| Bath::Temperature(mk * 1e-3))
                .collect()),
            (None, Some(o)) => Ok(o.expand(n, "occupations")?.into_iter().map(Bath::Occupation).collect()),
            (None, None) => Ok(vec![Bath::Occupation(0.0); n]),
        }
    }

    fn beta_choice(&self) -> Result<BetaChoice, CliError> {
        match &self.beta {
            None => Ok(BetaChoice::Optimal),
            Some(Keyword::Word(w)) if w == "optimal" => Ok(BetaChoice::Optimal),
            Some(Keyword::Word(w)) => Err(CliError::Input(format!(
                "`beta` must be a number in Hz or \"optimal\", got \"{w}\""
            ))),
            Some(Keyword::Value(hz)) => Ok(BetaChoice::Fixed(TAU * hz)),
        }
    }

    pub fn system_params(&self, n: usize, squeezing: SqueezingSpec) -> Result<SystemParams, CliError> {
        let kappa = self.kappa_rad();
        let omegas = match (&self.omegas, self.omega_spacing) {
            (Some(_), Some(_)) => {
                return Err(CliError::Input("give either `omegas` or `omega_spacing`, not both".into()))
            }
            (Some(list), None) => OneOrMany::Many(list.clone()).expand(n, "omegas")?,
            (None, spacing) => (1..=n)
                .map(|j| j as f64 * spacing.unwrap_or(NOMINAL_OMEGA_SPACING_HZ))
                .collect(),
        };
        let params = SystemParams {
            kappa,
            couplings: match &self.couplings {
                Some(c) => c.expand(n, "couplings")?,
                None => vec![1.0; n],
            },
            omegas: omegas.into_iter().map(|hz| TAU * hz).collect(),
            gammas: match &self.gammas {
                Some(g) => g.expand(n, "gammas")?.into_iter().map(|hz| TAU * hz).collect(),
                None => vec![0.0; n],
            },
            baths: self.baths(n)?,
            beta: match self.beta_choice()? {
                BetaChoice::Optimal => beta_optimal(kappa, squeezing.r)?,
                BetaChoice::Fixed(b) => b,
            },
            r: squeezing.r,
        };
        params.validate()?;
        Ok(params)
    }

    /// Template for sweeps that vary the node count.
    pub fn params_template(&self) -> Result<ParamsTemplate, CliError> {
        if self.omegas.is_some() {
            return Err(CliError::Input(
                "node-count sweeps need `omega_spacing` rather than `omegas`".into(),
            ));
        }
        let one = |v: &Option<OneOrMany>, name, default| v.as_ref().map_or(Ok(default), |x| x.single(name));
        let bath = self.baths(1)?[0];
        Ok(ParamsTemplate {
            kappa: self.kappa_rad(),
            omega_spacing: TAU * self.omega_spacing.unwrap_or(NOMINAL_OMEGA_SPACING_HZ),
            coupling: one(&self.couplings, "couplings", 1.0)?,
            gamma: TAU * one(&self.gammas, "gammas", 0.0)?,
            bath,
            beta: self.beta_choice()?,
        })
    }

    /// Protocol settings; mechanical noise defaults to `noise_default`.
    pub fn protocol(&self, noise_default: bool) -> Result<ProtocolConfig, CliError> {
        let section = self.protocol.clone().unwrap_or_default();
        let switch_time = match section.switch_time {
            None => SwitchTime::Finite(DEFAULT_SWITCH_TIME),
            Some(Keyword::Value(t)) => SwitchTime::Finite(t),
            Some(Keyword::Word(w)) if w == "steady" => SwitchTime::Steady,
            Some(Keyword::Word(w)) => {
                return Err(CliError::Input(format!(
                    "`switch_time` must be a number or \"steady\", got \"{w}\""
                )))
            }
        };
        let noise = section.mechanical_noise.unwrap_or(noise_default);
        let config = ProtocolConfig {
            switch_time,
            sample_dt: section.sample_dt.unwrap_or(0.1),
            initial_state: section.initial_state.unwrap_or(InitialState::default_for(noise)),
            mechanical_noise: noise,
        };
        config.validate()?;
        Ok(config)
    }
}

/// `kind-N` for a built-in topology, otherwise a path to an adjacency file.
pub fn parse_graph_spec(spec: &str) -> Result<(AdjacencyMatrix, String), CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let adjacency = AdjacencyMatrix::from_file(path).map_err(|e| CliError::Input(e.to_string()))?;
        return Ok((adjacency, spec.to_string()));
    }
    let (kind, n) = spec
        .rsplit_once('-')
        .ok_or_else(|| CliError::Input(format!("graph `{spec}` is neither a file nor of the form kind-N")))?;
    let kind: GraphKind = kind.parse().map_err(|e: crate::Error| CliError::Input(e.to_string()))?;
    let n: usize = n
        .parse()
        .map_err(|_| CliError::Input(format!("graph `{spec}`: `{n}` is not a node count")))?;
    Ok((builtin_graph(kind, n)?, format!("{kind}-{n}")))
}

/// Everything needed to run a single-graph command.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub graph_label: String,
    pub target: GraphTarget,
    pub params: SystemParams,
}

impl Resolved {
    pub fn from_config(config: &Config) -> Result<Self, CliError> {
        let (adjacency, graph_label) = config.graph()?;
        let squeezing = config.squeezing()?;
        let params = config.system_params(adjacency.n_nodes(), squeezing)?;
        let target = GraphTarget::new(adjacency, squeezing)?;
        Ok(Self {
            graph_label,
            target,
            params,
        })
    }
}
