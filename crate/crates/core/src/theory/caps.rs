use crate::error::{Error, Result};
use crate::problems::TheoryConstants;

/// Step-size caps of the composite and convex theorems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeCaps {
    /// `2C_H/(**L**+α)`.
    pub hoffman: f64,
    /// `[C₂/(C₂+L(1+√2))]·(1−β^J)/(Lβ^J)`, infinite when `β^J = 0`.
    pub consensus: f64,
    /// Minimum of the two composite caps.
    pub composite: f64,
    /// `2/L`, bounded iterates for convex objectives.
    pub convex: f64,
    /// `1/L`, ergodic rate for convex objectives.
    pub ergodic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admissibility {
    pub composite: bool,
    pub convex: bool,
    pub ergodic: bool,
}

impl StepsizeCaps {
    /// Composite admissibility uses the closed interval of the fixed-schedule
    /// theorems; the uniform-boundedness lemma needs it strict.
    pub fn admissible(&self, mu: f64) -> Admissibility {
        let ok = |cap: f64| mu > 0.0 && mu <= cap;
        Admissibility {
            composite: ok(self.composite),
            convex: ok(self.convex),
            ergodic: ok(self.ergodic),
        }
    }
}

/// Caps for a composite problem with spectral quantity β and `J = t(0)`.
pub fn stepsize_caps(constants: &TheoryConstants, beta: f64, j: u32) -> Result<StepsizeCaps> {
    if j == 0 {
        return Err(Error::InvalidParameter("J must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&beta) || beta.powi(j as i32) >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "composite cap undefined: β^J = {} (β = {beta}, J = {j})",
            beta.powi(j as i32)
        )));
    }
    let hoffman = constants.cap_composite();
    let consensus = constants.cap_consensus(beta, j);
    Ok(StepsizeCaps {
        hoffman,
        consensus,
        composite: hoffman.min(consensus),
        convex: 2.0 / constants.l_max,
        ergodic: 1.0 / constants.l_max,
    })
}

/// Right-hand side of `μ < γ(1−β^J)/((1+γ)Lβ^J)`, the exact condition for the
/// uniform-boundedness radius `R` to be finite. γ depends on μ.
pub fn radius_step_threshold(constants: &TheoryConstants, mu: f64, beta: f64, j: u32) -> f64 {
    let bj = beta.powi(j as i32);
    if bj == 0.0 {
        return f64::INFINITY;
    }
    let g = constants.gamma(mu);
    g * (1.0 - bj) / ((1.0 + g) * constants.l_max * bj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::CompositeStructure;
    use nalgebra::{DMatrix, DVector};

    fn identity_constants(l_max: f64) -> TheoryConstants {
        let cs = CompositeStructure::least_squares(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        TheoryConstants::new(&cs, l_max)
    }

    #[test]
    fn zero_beta_leaves_hoffman_cap() {
        let caps = stepsize_caps(&identity_constants(2.0), 0.0, 1).unwrap();
        assert!(caps.consensus.is_infinite());
        assert_eq!(caps.composite, caps.hoffman);
    }

    #[test]
    fn identity_operator_cap_is_half() {
        let caps = stepsize_caps(&identity_constants(2.0), 0.0, 1).unwrap();
        assert!((caps.hoffman - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_one_rejected() {
        assert!(stepsize_caps(&identity_constants(2.0), 1.0, 1).is_err());
        assert!(stepsize_caps(&identity_constants(2.0), 0.5, 0).is_err());
    }

    #[test]
    fn admissibility_flags() {
        let caps = stepsize_caps(&identity_constants(4.0), 0.5, 2).unwrap();
        let a = caps.admissible(0.3);
        assert!(a.convex && !a.ergodic);
        assert!(!caps.admissible(0.0).convex);
    }
}
