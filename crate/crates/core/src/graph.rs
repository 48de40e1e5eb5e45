//! Graph definitions and the pure Gaussian graph state each one names.
//!
//! The target for adjacency `A` is built from the unitary polar factor of
//! `−(i𝟙 + A)`: cooling the collective modes `c = U·b` into squeezed vacua
//! leaves every nullifier `p − A·q` with variance `(e^{−2ξ}/2)(𝟙 + A²)`.
//!
//! Built-in topologies:
//!
//! | name       | nodes | edges                                             |
//! |------------|-------|---------------------------------------------------|
//! | `linear`   | n ≥ 1 | path `0–1–…–(n−1)`                                |
//! | `square`   | n ≥ 3 | cycle; `ring` is an alias                         |
//! | `dual-rail`| even  | ladder: two paths of n/2 nodes joined by rungs `i–(i+n/2)` |
//! | `edgeless` | n ≥ 1 | none                                              |

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Complex, DVector};

use crate::error::{dimension, Error, Result};
use crate::gaussian::{symplectic_from_unitary, GaussianState, SqueezingSpec};
use crate::numerics::{max_abs, polar_decompose, ComplexMatrix, RealMatrix};

/// Real symmetric, zero-diagonal, non-negative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix(RealMatrix);

impl AdjacencyMatrix {
    pub fn new(m: RealMatrix) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidAdjacency(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = m[(i, j)];
                let (row, col) = (i + 1, j + 1);
                if !w.is_finite() {
                    return Err(Error::InvalidAdjacency(format!(
                        "entry at row {row}, col {col} is not finite"
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidAdjacency(format!(
                        "diagonal entry at row {row}, col {col} is {w}, expected 0"
                    )));
                }
                if w < 0.0 {
                    return Err(Error::InvalidAdjacency(format!(
                        "negative weight {w} at row {row}, col {col}"
                    )));
                }
                if j > i && (w - m[(j, i)]).abs() > 1e-12 * w.abs().max(1.0) {
                    return Err(Error::InvalidAdjacency(format!(
                        "not symmetric: row {row}, col {col} is {w} but row {col}, col {row} is {}",
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn edgeless(n: usize) -> Result<Self> {
        Self::new(RealMatrix::zeros(n, n))
    }

    fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = RealMatrix::zeros(n, n);
        for (i, j) in edges {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        Self::new(m)
    }

    /// Parses a whitespace- or comma-separated text matrix, or a JSON array of
    /// rows. Lines starting with `#` are ignored in the text form.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let rows: Vec<Vec<f64>> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed)
                .map_err(|e| Error::InvalidAdjacency(format!("bad JSON matrix: {e}")))?
        } else {
            trimmed
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .enumerate()
                .map(|(r, line)| {
                    line.split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            t.parse::<f64>().map_err(|_| {
                                Error::InvalidAdjacency(format!(
                                    "row {}: cannot parse `{t}` as a number",
                                    r + 1
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        };
        Self::from_rows(&rows)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(Error::InvalidAdjacency(format!(
                "row {} has {} entries, expected {n}",
                r + 1,
                row.len()
            )));
        }
        Self::new(RealMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidAdjacency(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn n_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    /// Relabels nodes so that new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("not a permutation of the nodes".into()));
        }
        Self::new(RealMatrix::from_fn(n, n, |i, j| self.0[(perm[i], perm[j])]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Linear,
    Square,
    DualRail,
    Edgeless,
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "path" => Ok(Self::Linear),
            "square" | "ring" | "cycle" => Ok(Self::Square),
            "dual-rail" | "dual_rail" | "dualrail" | "ladder" => Ok(Self::DualRail),
            "edgeless" | "empty" => Ok(Self::Edgeless),
            other => Err(Error::InvalidParameter(format!("unknown graph `{other}`"))),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Square => "square",
            Self::DualRail => "dual-rail",
            Self::Edgeless => "edgeless",
        })
    }
}

/// Unit-weight adjacency matrix of a named topology.
pub fn builtin_graph(kind: GraphKind, n: usize) -> Result<AdjacencyMatrix> {
    let unsupported = |why: &str| {
        Err(Error::InvalidParameter(format!("{kind} graph with {n} nodes: {why}")))
    };
    if n == 0 {
        return unsupported("at least one node is required");
    }
    match kind {
        GraphKind::Linear => AdjacencyMatrix::from_edges(n, (1..n).map(|i| (i - 1, i))),
        GraphKind::Square => {
            if n < 3 {
                return unsupported("a cycle needs at least 3 nodes");
            }
            AdjacencyMatrix::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        GraphKind::DualRail => {
            if !n.is_multiple_of(2) {
                return unsupported("dual-rail needs an even node count");
            }
            let half = n / 2;
            let rails = (1..half).flat_map(|i| [(i - 1, i), (half + i - 1, half + i)]);
            let rungs = (0..half).map(|i| (i, half + i));
            AdjacencyMatrix::from_edges(n, rails.chain(rungs))
        }
        GraphKind::Edgeless => AdjacencyMatrix::edgeless(n),
    }
}

/// Unitary polar factor of `−(i𝟙 + A)`.
pub fn graph_unitary(adjacency: &AdjacencyMatrix) -> Result<ComplexMatrix> {
    let n = adjacency.n_nodes();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 1.0 } else { 0.0 };
        -Complex::new(adjacency.0[(i, j)], diag)
    });
    Ok(polar_decompose(&m)?.unitary)
}

/// Argument in `[0, 2π)`; entries with negligible magnitude get phase 0.
pub fn canonical_phase(z: Complex<f64>) -> f64 {
    if z.norm() < 1e-13 {
        return 0.0;
    }
    let tau = std::f64::consts::TAU;
    let p = z.arg().rem_euclid(tau);
    if p >= tau {
        0.0
    } else {
        p
    }
}

/// `½·Sᵀ·diag(e^{−2ξ}𝟙, e^{2ξ}𝟙)·S` for `S` the symplectic image of `U`.
pub fn target_covariance(adjacency: &AdjacencyMatrix, squeezing: SqueezingSpec) -> Result<RealMatrix> {
    let s = symplectic_from_unitary(&graph_unitary(adjacency)?)?;
    Ok(covariance_from_symplectic(&s, squeezing))
}

fn covariance_from_symplectic(s: &RealMatrix, squeezing: SqueezingSpec) -> RealMatrix {
    let n = s.nrows() / 2;
    let xi = squeezing.xi;
    let d = DVector::from_fn(2 * n, |i, _| {
        if i < n {
            (-2.0 * xi).exp() / 2.0
        } else {
            (2.0 * xi).exp() / 2.0
        }
    });
    let v = s.transpose() * RealMatrix::from_diagonal(&d) * s;
    (&v + v.transpose()) * 0.5
}

/// Covariance of the nullifiers `p − A·q`: `[−A | 𝟙]·V·[−A | 𝟙]ᵀ`.
pub fn nullifier_covariance(adjacency: &AdjacencyMatrix, cov: &RealMatrix) -> Result<RealMatrix> {
    let n = adjacency.n_nodes();
    if cov.shape() != (2 * n, 2 * n) {
        return Err(dimension(
            "nullifier_covariance",
            format!("{n} nodes need a {}x{} covariance, got {}x{}", 2 * n, 2 * n, cov.nrows(), cov.ncols()),
        ));
    }
    let mut k = RealMatrix::zeros(n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&(-&adjacency.0));
    k.view_mut((0, n), (n, n)).fill_with_identity();
    let out = &k * cov * k.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

pub fn mechanical_labels(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("mech-{j}")).collect()
}

/// Everything the protocol needs about one target graph state.
#[derive(Debug, Clone)]
pub struct GraphTarget {
    pub adjacency: AdjacencyMatrix,
    pub squeezing: SqueezingSpec,
    pub unitary: ComplexMatrix,
    pub symplectic: RealMatrix,
    pub covariance: RealMatrix,
}

impl GraphTarget {
    pub fn new(adjacency: AdjacencyMatrix, squeezing: SqueezingSpec) -> Result<Self> {
        let unitary = graph_unitary(&adjacency)?;
        let symplectic = symplectic_from_unitary(&unitary)?;
        let covariance = covariance_from_symplectic(&symplectic, squeezing);
        Ok(Self {
            adjacency,
            squeezing,
            unitary,
            symplectic,
            covariance,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n_nodes()
    }

    /// The target as a state on modes `mech-1 … mech-N`.
    pub fn state(&self) -> Result<GaussianState> {
        GaussianState::zero_mean(mechanical_labels(self.n_nodes()), self.covariance.clone())
    }

    /// `max |√(𝟙+A²)·U + (i𝟙 + A)|`.
    pub fn polar_residual(&self) -> f64 {
        let a = self.adjacency.matrix();
        let n = a.nrows();
        let root = crate::numerics::sqrtm_spd(&(RealMatrix::identity(n, n) + a * a))
            .expect("1 + A² is positive definite");
        let lhs = root.map(|x| Complex::new(x, 0.0)) * &self.unitary
            + ComplexMatrix::from_fn(n, n, |i, j| {
                Complex::new(a[(i, j)], if i == j { 1.0 } else { 0.0 })
            });
        lhs.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn nullifier_covariance(&self) -> RealMatrix {
        nullifier_covariance(&self.adjacency, &self.covariance).expect("shapes agree by construction")
    }

    /// Largest deviation of the target's nullifier covariance from the closed form.
    pub fn nullifier_residual(&self) -> f64 {
        let a = self.adjacency.matrix();
        let n = a.nrows();
        let expected = (RealMatrix::identity(n, n) + a * a) * ((-2.0 * self.squeezing.xi).exp() / 2.0);
        max_abs(&(self.nullifier_covariance() - expected))
    }
}
