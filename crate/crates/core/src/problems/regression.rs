use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ChConvention, CompositeStructure, Problem, ProblemKind};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Distributed least squares: `f_i(x) = ‖h_iᵀx − y_i‖²` with `h_i ∈ R^{p×s}`.
///
/// The aggregate `(1/n) Σ f_i = ‖(H/√n)x − y/√n‖²` where `H` stacks the
/// blocks `h_iᵀ`, so the composite structure is built on `H/√n`.
#[derive(Debug, Clone)]
pub struct Regression {
    blocks: Vec<DMatrix<f64>>,
    targets: Vec<DVector<f64>>,
    planted: Vec<DVector<f64>>,
    smoothness: Vec<f64>,
    seed: Option<u64>,
    structure: CompositeStructure,
}

/// Seeded regression instance: entries of every `h_i` uniform on `[0, 1]`,
/// planted `x̃_i` uniform on `[0, 1]^p`, and `y_i = h_iᵀx̃_i`.
pub fn make_regression(p: usize, n: usize, s: usize, seed: u64) -> Result<Regression> {
    if p == 0 || n == 0 || s == 0 {
        return Err(Error::InvalidParameter(format!(
            "regression needs p, n, s ≥ 1 (got p={p}, n={n}, s={s})"
        )));
    }
    let mut mat_rng = rng::stream(seed, Stream::Matrix);
    let mut plant_rng = rng::stream(seed, Stream::Planted);
    let blocks: Vec<_> = (0..n)
        .map(|_| rng::uniform_matrix(&mut mat_rng, p, s, 0.0, 1.0))
        .collect();
    let planted: Vec<_> = (0..n)
        .map(|_| rng::uniform_vector(&mut plant_rng, p, 0.0, 1.0))
        .collect();
    let targets = blocks.iter().zip(&planted).map(|(h, x)| h.tr_mul(x)).collect();
    let mut reg = Regression::from_data(blocks, targets)?;
    reg.planted = planted;
    reg.seed = Some(seed);
    Ok(reg)
}

impl Regression {
    pub fn from_data(blocks: Vec<DMatrix<f64>>, targets: Vec<DVector<f64>>) -> Result<Self> {
        let n = blocks.len();
        if n == 0 || targets.len() != n {
            return Err(Error::InvalidProblem(format!(
                "need one target per block ({} blocks, {} targets)",
                n,
                targets.len()
            )));
        }
        let (p, s) = blocks[0].shape();
        for (i, (h, y)) in blocks.iter().zip(&targets).enumerate() {
            if h.shape() != (p, s) || y.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: format!("h_i {p}×{s}, y_i of length {s}"),
                    got: format!("agent {i}: h {}×{}, y {}", h.nrows(), h.ncols(), y.len()),
                });
            }
        }
        let scale = 1.0 / (n as f64).sqrt();
        let mut operator = DMatrix::zeros(n * s, p);
        let mut target = DVector::zeros(n * s);
        for (i, (h, y)) in blocks.iter().zip(&targets).enumerate() {
            operator
                .view_mut((i * s, 0), (s, p))
                .copy_from(&(h.transpose() * scale));
            target.rows_mut(i * s, s).copy_from(&(y * scale));
        }
        let structure = CompositeStructure::least_squares(operator, target)?;
        let smoothness = blocks
            .iter()
            .map(|h| {
                let sigma = h.singular_values().iter().copied().fold(0.0, f64::max);
                2.0 * sigma * sigma
            })
            .collect();
        Ok(Regression {
            blocks,
            targets,
            planted: Vec::new(),
            smoothness,
            seed: None,
            structure,
        })
    }

    pub fn with_convention(mut self, convention: ChConvention) -> Self {
        self.structure = self.structure.with_convention(convention);
        self
    }

    pub fn structure(&self) -> &CompositeStructure {
        &self.structure
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn targets(&self) -> &[DVector<f64>] {
        &self.targets
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Unscaled stacked operator `H` (rows are the `h_iᵀ` blocks).
    pub fn stacked_operator(&self) -> DMatrix<f64> {
        self.structure.operator() * (self.blocks.len() as f64).sqrt()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.structure.is_rank_deficient()
    }

    pub fn to_fixture(&self) -> RegressionFixture {
        let (p, s) = self.blocks[0].shape();
        let row_major = |m: &DMatrix<f64>| m.transpose().iter().copied().collect();
        RegressionFixture {
            p,
            n: self.blocks.len(),
            s,
            seed: self.seed,
            blocks: self.blocks.iter().map(row_major).collect(),
            targets: self.targets.iter().map(|y| y.iter().copied().collect()).collect(),
            planted: self.planted.iter().map(|x| x.iter().copied().collect()).collect(),
            smoothness: self.smoothness.clone(),
            rank: self.structure.rank(),
            hoffman: self.structure.c_h(),
            operator_norm_sq: self.structure.norm_sq(),
        }
    }

    pub fn from_fixture(fx: &RegressionFixture) -> Result<Self> {
        if fx.blocks.len() != fx.n || fx.blocks.iter().any(|b| b.len() != fx.p * fx.s) {
            return Err(Error::InvalidProblem(
                "fixture block shapes disagree with p, n, s".into(),
            ));
        }
        let blocks = fx
            .blocks
            .iter()
            .map(|b| DMatrix::from_row_slice(fx.p, fx.s, b))
            .collect();
        let targets = fx.targets.iter().map(|y| DVector::from_column_slice(y)).collect();
        let mut reg = Regression::from_data(blocks, targets)?;
        reg.planted = fx.planted.iter().map(|x| DVector::from_column_slice(x)).collect();
        reg.seed = fx.seed;
        Ok(reg)
    }

    pub fn save_fixture(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_fixture())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_fixture(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_fixture(&serde_json::from_str(&text)?)
    }
}

/// Text fixture of a regression instance. Floats are written in shortest
/// round-trip form, so reloading reproduces the instance bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionFixture {
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub seed: Option<u64>,
    /// Row-major `p × s` entries of each `h_i`.
    pub blocks: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub planted: Vec<Vec<f64>>,
    /// Informational; recomputed on load.
    pub smoothness: Vec<f64>,
    pub rank: usize,
    pub hoffman: f64,
    pub operator_norm_sq: f64,
}

impl Problem for Regression {
    fn agents(&self) -> usize {
        self.blocks.len()
    }

    fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    fn local_value(&self, agent: usize, x: &DVector<f64>) -> f64 {
        (self.blocks[agent].tr_mul(x) - &self.targets[agent]).norm_squared()
    }

    fn local_grad(&self, agent: usize, x: &DVector<f64>) -> DVector<f64> {
        let h = &self.blocks[agent];
        h * (h.tr_mul(x) - &self.targets[agent]) * 2.0
    }

    fn local_smoothness(&self, agent: usize) -> f64 {
        self.smoothness[agent]
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::CompositeQuadratic
    }

    fn optimal_value(&self) -> f64 {
        self.structure.value(self.structure.x_hat())
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.structure.project(x)
    }

    fn composite(&self) -> Option<&CompositeStructure> {
        Some(&self.structure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_sizes() {
        assert!(make_regression(0, 2, 2, 1).is_err());
        assert!(make_regression(2, 0, 2, 1).is_err());
    }

    #[test]
    fn aggregate_matches_structure() {
        let reg = make_regression(6, 3, 2, 11).unwrap();
        let x = DVector::from_fn(6, |i, _| 0.1 * i as f64 - 0.2);
        let direct = Problem::value(&reg, &x);
        assert!((direct - reg.structure().value(&x)).abs() < 1e-12 * (1.0 + direct));
        assert!((Problem::grad(&reg, &x) - reg.structure().grad(&x)).norm() < 1e-10);
    }

    #[test]
    fn stacked_operator_has_blocks_as_rows() {
        let reg = make_regression(4, 2, 3, 5).unwrap();
        let h = reg.stacked_operator();
        assert_eq!(h.shape(), (6, 4));
        let b1t = reg.blocks()[1].transpose();
        assert!((h.view((3, 0), (3, 4)) - b1t).norm() < 1e-12);
    }
}
