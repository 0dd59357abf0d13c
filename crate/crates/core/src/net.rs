//! Network topologies and doubly-stochastic consensus matrices.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on row and column sums of a consensus matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Tolerance used when deciding whether the top eigenvalue of WᵀW is 1.
const EIGEN_TOL: f64 = 1e-10;

/// Undirected communication graph with a self-loop at every node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    n: usize,
    /// Row-major `n × n` off-diagonal adjacency, symmetric.
    adjacency: Vec<bool>,
    self_loops: Vec<bool>,
}

impl Topology {
    /// Builds a topology from an undirected edge list. Self-loops are added at
    /// every node; loops listed in `edges` are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("graph needs at least one node".into()));
        }
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidTopology(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i != j {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
        let topo = Topology {
            n,
            adjacency,
            self_loops: vec![true; n],
        };
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    /// Ring circulant: node `i` is adjacent to `i ± 1, …, i ± radius (mod n)`.
    pub fn circulant(n: usize, radius: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("graph needs at least one node".into()));
        }
        if n == 1 {
            return Self::from_edges(1, &[]);
        }
        if radius == 0 {
            return Err(Error::InvalidTopology("circulant radius must be positive".into()));
        }
        if 2 * radius >= n {
            return Err(Error::InvalidTopology(format!(
                "circulant radius {radius} too large for {n} nodes (need 2·radius < n)"
            )));
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (1..=radius).map(move |d| (i, (i + d) % n)))
            .collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::from_edges(n, &edges)
    }

    /// Random connected graph: a random spanning tree plus each remaining
    /// pair independently with probability `extra_edge_prob`.
    pub fn random_connected<R: Rng>(n: usize, extra_edge_prob: f64, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("graph needs at least one node".into()));
        }
        let mut edges = Vec::new();
        for i in 1..n {
            edges.push((i, rng.gen_range(0..i)));
        }
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < extra_edge_prob {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        if i == j {
            self.self_loops[i]
        } else {
            self.adjacency[i * self.n + j]
        }
    }

    /// Number of neighbours of `i`, not counting the self-loop.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n)
            .filter(|&j| j != i && self.adjacency[i * self.n + j])
            .count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| j != i && self.adjacency[i * self.n + j])
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops.iter().all(|&l| l)
    }

    pub fn is_regular(&self) -> bool {
        let d0 = self.degree(0);
        (1..self.n).all(|i| self.degree(i) == d0)
    }

    pub fn is_connected(&self) -> bool {
        let reach = bfs(self.n, |i| self.neighbors(i).collect());
        reach.iter().all(|&r| r)
    }
}

fn bfs(n: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    if n == 0 {
        return seen;
    }
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in next(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Weight rule used to turn a topology into a consensus matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `w_ij = 1/(deg(i)+1)` over the closed neighbourhood; regular graphs only.
    UniformNeighbor,
    /// `w_ij = 1/(1+max(deg_i, deg_j))` off-diagonal, diagonal absorbs the rest.
    LazyMetropolis,
    /// Supplied directly as a matrix.
    Custom,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::UniformNeighbor => "uniform-neighbor",
            WeightScheme::LazyMetropolis => "lazy-metropolis",
            WeightScheme::Custom => "custom",
        })
    }
}

/// β = ‖W − (1/n)11ᵀ‖₂ together with the second-largest eigenvalue of WᵀW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    pub beta: f64,
    pub lambda2: f64,
}

/// Doubly-stochastic `n × n` consensus matrix with its cached β.
///
/// Construction checks shape, entry range and double stochasticity. The
/// connectivity-dependent guarantee β < 1 is reported by
/// [`validate_assumptions`]; matrices built from a [`Topology`] satisfy it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrix {
    w: DMatrix<f64>,
    gap: SpectralGap,
    scheme: WeightScheme,
}

impl ConsensusMatrix {
    pub fn new(w: DMatrix<f64>, scheme: WeightScheme) -> Result<Self> {
        if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidMatrix(format!("entry {bad} outside [0, 1]")));
        }
        let gap = spectral_gap(&w)?;
        Ok(ConsensusMatrix { w, gap, scheme })
    }

    pub fn from_topology(topo: &Topology, scheme: WeightScheme) -> Result<Self> {
        consensus_matrix(topo, scheme)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn beta(&self) -> f64 {
        self.gap.beta
    }

    pub fn lambda2(&self) -> f64 {
        self.gap.lambda2
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    /// `(W^t ⊗ I_p) x` for a stacked state stored as an `n × p` matrix.
    pub fn apply(&self, x: &DMatrix<f64>, t: u32) -> Result<DMatrix<f64>> {
        apply_consensus(self, x, t)
    }

    /// In-place variant of [`apply`](Self::apply); `scratch` must have the
    /// same shape as `x`.
    pub(crate) fn apply_in_place(&self, x: &mut DMatrix<f64>, scratch: &mut DMatrix<f64>, t: u32) {
        for _ in 0..t {
            self.w.mul_to(x, scratch);
            std::mem::swap(x, scratch);
        }
    }
}

/// Builds the consensus matrix of `topo` under the given weight rule.
pub fn consensus_matrix(topo: &Topology, scheme: WeightScheme) -> Result<ConsensusMatrix> {
    let n = topo.n();
    if !topo.has_self_loops() {
        return Err(Error::InvalidTopology("every node needs a self-loop".into()));
    }
    if !topo.is_connected() {
        return Err(Error::InvalidTopology("graph is not connected".into()));
    }
    let mut w = DMatrix::zeros(n, n);
    match scheme {
        WeightScheme::UniformNeighbor => {
            if !topo.is_regular() {
                return Err(Error::InvalidTopology(
                    "uniform-neighbor weights need a regular graph".into(),
                ));
            }
            let weight = 1.0 / (topo.degree(0) + 1) as f64;
            for i in 0..n {
                w[(i, i)] = weight;
                for j in topo.neighbors(i) {
                    w[(i, j)] = weight;
                }
            }
        }
        WeightScheme::LazyMetropolis => {
            let deg: Vec<usize> = (0..n).map(|i| topo.degree(i)).collect();
            for i in 0..n {
                let mut off = 0.0;
                for j in topo.neighbors(i) {
                    let wij = 1.0 / (1 + deg[i].max(deg[j])) as f64;
                    w[(i, j)] = wij;
                    off += wij;
                }
                w[(i, i)] = 1.0 - off;
            }
        }
        WeightScheme::Custom => {
            return Err(Error::InvalidParameter(
                "custom weights are supplied through ConsensusMatrix::new".into(),
            ))
        }
    }
    ConsensusMatrix::new(w, scheme)
}

fn stochastic_residuals(w: &DMatrix<f64>) -> (f64, f64) {
    let row = w.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let col = w.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max);
    (row, col)
}

/// Computes β = ‖W − (1/n)11ᵀ‖₂ and λ₂(WᵀW).
///
/// β is read off the singular values of the deflated matrix; λ₂ comes from a
/// symmetric eigendecomposition of WᵀW. Mathematically β² = λ₂.
pub fn spectral_gap(w: &DMatrix<f64>) -> Result<SpectralGap> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(Error::InvalidMatrix(format!(
            "consensus matrix must be square and non-empty, got {}×{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let (row, col) = stochastic_residuals(w);
    if row > STOCHASTIC_TOL || col > STOCHASTIC_TOL {
        return Err(Error::InvalidMatrix(format!(
            "not doubly stochastic (row residual {row:e}, column residual {col:e})"
        )));
    }
    let avg = 1.0 / n as f64;
    let deflated = w.map(|v| v - avg);
    let beta = deflated.singular_values().iter().copied().fold(0.0, f64::max);
    let eig = sorted_eigenvalues(&(w.transpose() * w));
    let lambda2 = eig.get(1).copied().unwrap_or(0.0).max(0.0);
    Ok(SpectralGap { beta, lambda2 })
}

fn sorted_eigenvalues(sym: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(sym.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// `(W^t ⊗ I_p) x` computed as `t` successive products `W · X`.
pub fn apply_consensus(w: &ConsensusMatrix, x: &DMatrix<f64>, t: u32) -> Result<DMatrix<f64>> {
    if x.nrows() != w.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} agent blocks", w.n()),
            got: format!("{} blocks", x.nrows()),
        });
    }
    let mut out = x.clone();
    let mut scratch = DMatrix::zeros(x.nrows(), x.ncols());
    w.apply_in_place(&mut out, &mut scratch, t);
    Ok(out)
}

/// One line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity backing the verdict (residual, eigenvalue, β, …).
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub beta: f64,
    pub eigenvalues: Vec<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<24} {:<4} {:.3e}",
                c.name,
                if c.passed { "ok" } else { "FAIL" },
                c.measured
            )?;
        }
        Ok(())
    }
}

/// Checks the standing assumptions on W: double stochasticity, strong
/// connectivity, self-loops, simple unit top eigenvalue of WᵀW, and β < 1.
pub fn validate_assumptions(w: &ConsensusMatrix) -> ValidationReport {
    let m = w.matrix();
    let n = w.n();
    let (row, col) = stochastic_residuals(m);
    let residual = row.max(col);

    let forward = bfs(n, |i| (0..n).filter(|&j| j != i && m[(i, j)] > 0.0).collect());
    let backward = bfs(n, |i| (0..n).filter(|&j| j != i && m[(j, i)] > 0.0).collect());
    let unreached = forward.iter().zip(&backward).filter(|(f, b)| !(**f && **b)).count();

    let min_diag = (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);

    let eigenvalues = sorted_eigenvalues(&(m.transpose() * m));
    let lambda1 = eigenvalues[0];
    let lambda2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    let top_simple = (lambda1 - 1.0).abs() <= EIGEN_TOL && lambda2 < 1.0 - EIGEN_TOL;

    let beta = w.beta();
    let checks = vec![
        Check {
            name: "doubly-stochastic",
            passed: residual <= STOCHASTIC_TOL,
            measured: residual,
        },
        Check {
            name: "strongly-connected",
            passed: unreached == 0,
            measured: unreached as f64,
        },
        Check {
            name: "self-loops",
            passed: min_diag > 0.0,
            measured: min_diag,
        },
        Check {
            name: "simple-top-eigenvalue",
            passed: top_simple,
            measured: lambda2,
        },
        Check {
            name: "beta-below-one",
            passed: beta < 1.0 - EIGEN_TOL,
            measured: beta,
        },
    ];
    ValidationReport {
        checks,
        beta,
        eigenvalues,
    }
}
