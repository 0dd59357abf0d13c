use super::CompositeStructure;

/// Step-size-independent constants of a composite problem, with helpers for
/// the quantities that depend on μ, β and J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Strong-convexity modulus α of `g`.
    pub alpha: f64,
    /// Smoothness **L** of `g`.
    pub smooth_g: f64,
    /// Hoffman constant `c_H`.
    pub c_h: f64,
    /// `C_H` (convention-dependent).
    pub c_h_upper: f64,
    /// `‖H‖₂²`.
    pub norm_sq: f64,
    /// `L = max_i L_i`.
    pub l_max: f64,
    /// `C₂ = 2**L**αc_H/(**L**+α)`.
    pub c2: f64,
}

impl TheoryConstants {
    pub fn new(cs: &CompositeStructure, l_max: f64) -> Self {
        let (alpha, smooth_g, c_h) = (cs.alpha(), cs.smooth_g(), cs.c_h());
        TheoryConstants {
            alpha,
            smooth_g,
            c_h,
            c_h_upper: cs.c_h_upper(),
            norm_sq: cs.norm_sq(),
            l_max,
            c2: 2.0 * smooth_g * alpha * c_h / (smooth_g + alpha),
        }
    }

    /// `q = √(1 − C₂μ)`.
    pub fn q(&self, mu: f64) -> f64 {
        (1.0 - self.c2 * mu).sqrt()
    }

    /// `1 − q`, evaluated as `C₂μ/(1 + q)` to avoid cancellation for small μ.
    pub fn one_minus_q(&self, mu: f64) -> f64 {
        self.c2 * mu / (1.0 + self.q(mu))
    }

    /// `γ = (1 − q)/(μL)`.
    pub fn gamma(&self, mu: f64) -> f64 {
        self.one_minus_q(mu) / (mu * self.l_max)
    }

    /// `2C_H/(**L**+α)`.
    pub fn cap_composite(&self) -> f64 {
        2.0 * self.c_h_upper / (self.smooth_g + self.alpha)
    }

    /// `[C₂/(C₂ + L(1+√2))]·(1 − β^J)/(Lβ^J)`; infinite when β = 0.
    pub fn cap_consensus(&self, beta: f64, j: u32) -> f64 {
        let bj = beta.powi(j as i32);
        if bj == 0.0 {
            return f64::INFINITY;
        }
        let l = self.l_max;
        self.c2 / (self.c2 + l * (1.0 + std::f64::consts::SQRT_2)) * (1.0 - bj) / (l * bj)
    }

    /// `L ≥ α‖H‖₂²` must hold for any consistent instance.
    pub fn smoothness_dominates(&self) -> bool {
        self.l_max >= self.alpha * self.norm_sq * (1.0 - 1e-12)
    }
}
