use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::error::{Error, Result};

/// Singular values below `RANK_TOL · σ_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Which reading of the constant `C_H` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChConvention {
    /// `C_H = 1/‖H‖₂²`, consistent with the squared-norm inequality chain.
    #[default]
    InverseNormSquared,
    /// `C_H = 1/‖H‖₂`.
    InverseNorm,
}

/// Aggregate objective of the form `f(x) = g(Hx)` with the strongly convex
/// quadratic `g(z) = ‖z − target‖²`, so α = **L** = 2.
///
/// Holds everything the theory layer needs about the optimal set
/// `X* = x̂ + ker(H)`: the minimum-norm solution, orthonormal bases of the
/// row space and kernel, and the singular values behind `c_H` and `C_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeStructure {
    operator: DMatrix<f64>,
    target: DVector<f64>,
    alpha: f64,
    smooth_g: f64,
    rank: usize,
    sigma_max: f64,
    sigma_min_pos: f64,
    x_hat: DVector<f64>,
    row_basis: DMatrix<f64>,
    kernel_basis: DMatrix<f64>,
    convention: ChConvention,
}

impl CompositeStructure {
    /// Least-squares structure for `g(z) = ‖z − target‖²`.
    pub fn least_squares(operator: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        if operator.nrows() != target.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("target of length {}", operator.nrows()),
                got: format!("{}", target.len()),
            });
        }
        let p = operator.ncols();
        let svd = operator.clone().svd(true, true);
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        if sigma_max == 0.0 {
            return Err(Error::InvalidProblem("operator H is zero".into()));
        }
        let u = svd.u.as_ref().expect("u requested");
        let v_t = svd.v_t.as_ref().expect("v_t requested");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&j| svd.singular_values[j] > RANK_TOL * sigma_max)
            .collect();
        let rank = keep.len();
        let sigma_min_pos = keep
            .iter()
            .map(|&j| svd.singular_values[j])
            .fold(f64::INFINITY, f64::min);

        let row_basis = DMatrix::from_fn(p, rank, |r, c| v_t[(keep[c], r)]);
        let mut x_hat = DVector::zeros(p);
        for &j in &keep {
            let coeff = u.column(j).dot(&target) / svd.singular_values[j];
            x_hat += v_t.row(j).transpose() * coeff;
        }

        // ker(H) is the orthogonal complement of the row space; the thin SVD
        // does not return it when m < p, so take the unit eigenspace of the
        // complementary projector.
        let projector = DMatrix::identity(p, p) - &row_basis * row_basis.transpose();
        let eig = SymmetricEigen::new(projector);
        let mut kernel_cols: Vec<usize> = (0..p).filter(|&j| eig.eigenvalues[j] > 0.5).collect();
        kernel_cols.sort_unstable();
        let kernel_basis = DMatrix::from_fn(p, kernel_cols.len(), |r, c| eig.eigenvectors[(r, kernel_cols[c])]);

        Ok(CompositeStructure {
            operator,
            target,
            alpha: 2.0,
            smooth_g: 2.0,
            rank,
            sigma_max,
            sigma_min_pos,
            x_hat,
            row_basis,
            kernel_basis,
            convention: ChConvention::default(),
        })
    }

    pub fn with_convention(mut self, convention: ChConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// Strong-convexity modulus α of `g`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Smoothness constant **L** of `g`.
    pub fn smooth_g(&self) -> f64 {
        self.smooth_g
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.operator.ncols()
    }

    /// Minimum-norm minimiser x̂.
    pub fn x_hat(&self) -> &DVector<f64> {
        &self.x_hat
    }

    /// Orthonormal basis of ker(H), one column per direction.
    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_basis
    }

    /// ‖H‖₂².
    pub fn norm_sq(&self) -> f64 {
        self.sigma_max * self.sigma_max
    }

    /// Hoffman constant `c_H = σ_min₊(H)²`.
    pub fn c_h(&self) -> f64 {
        self.sigma_min_pos * self.sigma_min_pos
    }

    /// `C_H` under the configured convention.
    pub fn c_h_upper(&self) -> f64 {
        match self.convention {
            ChConvention::InverseNormSquared => 1.0 / self.norm_sq(),
            ChConvention::InverseNorm => 1.0 / self.sigma_max,
        }
    }

    pub fn convention(&self) -> ChConvention {
        self.convention
    }

    /// Aggregate value `g(Hx)`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (&self.operator * x - &self.target).norm_squared()
    }

    /// Aggregate gradient `Hᵀ∇g(Hx) = 2Hᵀ(Hx − target)`.
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        self.operator.tr_mul(&(&self.operator * x - &self.target)) * 2.0
    }

    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        project_to_optimal(self, z)
    }

    /// `x̂ + K c` for kernel coordinates `c`; always a point of X*.
    pub fn optimal_point(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.x_hat + &self.kernel_basis * coords
    }
}

/// `[z] = x̂ + P_ker(z − x̂)`.
pub fn project_to_optimal(cs: &CompositeStructure, z: &DVector<f64>) -> DVector<f64> {
    // Removing the row-space component is cheaper than projecting onto the
    // (usually larger) kernel and is the same map.
    let d = z - &cs.x_hat;
    let row_part = &cs.row_basis * cs.row_basis.tr_mul(&d);
    z - row_part
}

/// `σ_min₊(H)²`, the largest constant in `‖Hz − H[z]‖² ≥ c_H‖z − [z]‖²` for
/// an affine optimal set.
pub fn hoffman_constant(h: &DMatrix<f64>) -> Result<f64> {
    let sv = h.singular_values();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Err(Error::InvalidProblem("Hoffman constant undefined for H = 0".into()));
    }
    let smallest = sv
        .iter()
        .copied()
        .filter(|&s| s > RANK_TOL * sigma_max)
        .fold(f64::INFINITY, f64::min);
    Ok(smallest * smallest)
}

/// `D = (Σ_j ‖∇f_j(x̂)‖²)^{1/2}`, valid as the supremum over X* when every
/// `f_j` is invariant along ker(H). The invariance is checked along each
/// kernel direction before returning.
pub fn constant_d<P: Problem + ?Sized>(problem: &P, cs: &CompositeStructure) -> Result<f64> {
    let x_hat = cs.x_hat();
    let grads: Vec<DVector<f64>> = (0..problem.agents()).map(|j| problem.local_grad(j, x_hat)).collect();
    let scale = 1.0 + x_hat.norm();
    let k = cs.kernel_basis();
    for c in 0..k.ncols() {
        let shifted = x_hat + k.column(c) * scale;
        for (j, g) in grads.iter().enumerate() {
            let drift = (problem.local_grad(j, &shifted) - g).norm();
            let tol = 1e-8 * (1.0 + g.norm() + problem.local_smoothness(j) * scale);
            if drift > tol {
                return Err(Error::InvalidProblem(format!(
                    "f_{j} is not invariant along ker(H): gradient moved by {drift:e}"
                )));
            }
        }
    }
    Ok(grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt())
}

/// Slack of the composite coercivity inequality
///
/// ```text
/// ⟨∇f(x) − ∇f([x]), x − [x]⟩ ≥ **L**αc_H/(**L**+α)·‖x − [x]‖² + C_H/(**L**+α)·‖∇f(x) − ∇f([x])‖²
/// ```
///
/// Nonnegative slack means the inequality holds at `x`.
pub fn coercivity_check(cs: &CompositeStructure, x: &DVector<f64>) -> f64 {
    let proj = project_to_optimal(cs, x);
    let d = x - &proj;
    let dg = cs.grad(x) - cs.grad(&proj);
    let (a, l) = (cs.alpha(), cs.smooth_g());
    let lhs = dg.dot(&d);
    let rhs = l * a * cs.c_h() / (l + a) * d.norm_squared() + cs.c_h_upper() / (l + a) * dg.norm_squared();
    lhs - rhs
}
