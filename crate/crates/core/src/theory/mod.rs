//! Closed-form convergence bounds, step-size admissibility and numerical
//! verifiers for the supporting inequalities.

mod bounds;
mod caps;
mod envelope;
mod lemmas;

pub use bounds::{
    bound_fixed_schedule, bound_nondecreasing_schedule, consensus_rate_bound, convex_envelope, nondecreasing_series,
    BoundForm, BoundInputs,
};
pub use caps::{radius_step_threshold, stepsize_caps, Admissibility, StepsizeCaps};
pub use envelope::{bound_main2, fit_main2_constant, linear_phase_rate, Main2Envelope, RateFit};
pub use lemmas::{
    coercivity_lemma31_check, product_bound_check, scalar_recursion_bound, scalar_recursion_simulate,
    weighted_norm_2x2, ProductCheck, StronglyConvexQuadratic,
};
