use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Operator norm of a 2×2 matrix for `‖(x, y)‖_c = |x| + c|y|`.
///
/// The unit ball is the convex hull of `(±1, 0)` and `(0, ±1/c)`, so the
/// norm is the larger image norm of those two directions.
pub fn weighted_norm_2x2(m: &Matrix2<f64>, c: f64) -> f64 {
    let first = m[(0, 0)].abs() + c * m[(1, 0)].abs();
    let second = (m[(0, 1)].abs() + c * m[(1, 1)].abs()) / c;
    first.max(second)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductCheck {
    pub norm: f64,
    pub bound: f64,
    pub c: f64,
}

impl ProductCheck {
    pub fn slack(&self) -> f64 {
        self.bound - self.norm
    }

    pub fn passed(&self) -> bool {
        self.norm <= self.bound * (1.0 + 1e-12)
    }
}

/// Checks `‖M_b ⋯ M_a‖_c ≤ exp(c Σ_{k=a..=b} α_k)` for
/// `M_k = [[1, r], [α_k, α_k]]` and `c = max(r, 1)`.
pub fn product_bound_check(r: f64, alphas: &[f64], a: usize, b: usize) -> Result<ProductCheck> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if a > b || b >= alphas.len() {
        return Err(Error::InvalidParameter(format!(
            "index range {a}..={b} outside 0..{}",
            alphas.len()
        )));
    }
    if alphas[a..=b].iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("α_k must be nonnegative".into()));
    }
    let c = r.max(1.0);
    let mut prod = Matrix2::identity();
    for &alpha in &alphas[a..=b] {
        prod = Matrix2::new(1.0, r, alpha, alpha) * prod;
    }
    let sum: f64 = alphas[a..=b].iter().sum();
    Ok(ProductCheck {
        norm: weighted_norm_2x2(&prod, c),
        bound: (c * sum).exp(),
        c,
    })
}

/// `f(x) = ½xᵀQx + cᵀx` with symmetric positive definite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StronglyConvexQuadratic {
    q: DMatrix<f64>,
    c: DVector<f64>,
    alpha: f64,
    smoothness: f64,
}

impl StronglyConvexQuadratic {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("square Q matching c of length {}", c.len()),
                got: format!("{}×{}", q.nrows(), q.ncols()),
            });
        }
        if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
            return Err(Error::InvalidProblem("Q must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(q.clone()).eigenvalues;
        let alpha = eig.min();
        if !(alpha > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "Q is not positive definite (λ_min = {alpha})"
            )));
        }
        Ok(StronglyConvexQuadratic {
            smoothness: eig.max(),
            alpha,
            q,
            c,
        })
    }

    /// `(a/2)‖x‖²`.
    pub fn isotropic(dim: usize, a: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * a, DVector::zeros(dim))
    }

    /// Random orthogonal conjugate of `diag(λ)` with `λ` evenly spread over
    /// `[lo, hi]` and a random linear term.
    pub fn random(dim: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(0.0 < lo && lo <= hi) || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "need dim ≥ 1 and 0 < lo ≤ hi (got {lo}, {hi})"
            )));
        }
        let mut g = rng::stream(seed, Stream::Verify);
        let raw = DMatrix::from_fn(dim, dim, |_, _| rng::gaussian_vector(&mut g, 1)[0]);
        let basis = raw.qr().q();
        let spread = |i: usize| {
            if dim == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (dim - 1) as f64
            }
        };
        let lambda = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| spread(i)));
        let q = &basis * lambda * basis.transpose();
        let q = (&q + q.transpose()) * 0.5;
        Self::new(q, rng::gaussian_vector(&mut g, dim))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }
}

/// Slack of
/// `⟨∇f(x)−∇f(y), x−y⟩ ≥ Lα/(L+α)·‖x−y‖² + 1/(L+α)·‖∇f(x)−∇f(y)‖²`.
pub fn coercivity_lemma31_check(f: &StronglyConvexQuadratic, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let (a, l) = (f.alpha(), f.smoothness());
    let d = x - y;
    let dg = f.grad(x) - f.grad(y);
    dg.dot(&d) - (l * a / (l + a) * d.norm_squared() + dg.norm_squared() / (l + a))
}

/// Iterates `v_{k+1} = a·v_k + b` and returns `v_0, …, v_k`.
pub fn scalar_recursion_simulate(a: f64, b: f64, v0: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut v = v0;
    out.push(v);
    for _ in 0..k {
        v = a * v + b;
        out.push(v);
    }
    out
}

/// `a^k·v₀ + b/(1 − a)`, valid for `a ∈ (0, 1)` and `b ≥ 0`.
pub fn scalar_recursion_bound(a: f64, b: f64, v0: f64, k: usize) -> f64 {
    a.powi(k.min(i32::MAX as usize) as i32) * v0 + b / (1.0 - a)
}
