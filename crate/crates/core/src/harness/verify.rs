use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::net::{spectral_gap, validate_assumptions, ConsensusMatrix, Topology, WeightScheme};
use crate::problems::{
    coercivity_check, constant_d, finite_difference_gradient, make_piecewise_quartic, make_regression, Problem,
    TheoryConstants,
};
use crate::rng::{self, Stream};
use crate::theory::{
    coercivity_lemma31_check, product_bound_check, radius_step_threshold, scalar_recursion_bound,
    scalar_recursion_simulate, stepsize_caps, StronglyConvexQuadratic,
};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verification battery, seed {}", self.seed)?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<4} {:<26} {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail
            )?;
        }
        Ok(())
    }
}

fn row(name: &'static str, passed: bool, detail: String) -> VerifyRow {
    VerifyRow { name, passed, detail }
}

fn random_consensus<R: Rng>(r: &mut R) -> ConsensusMatrix {
    let n = r.gen_range(2..=12);
    let topo = Topology::random_connected(n, 0.3, r).expect("n ≥ 2");
    ConsensusMatrix::from_topology(&topo, WeightScheme::LazyMetropolis).expect("connected with loops")
}

fn consensus_contraction(seed: u64) -> VerifyRow {
    let mut r = rng::stream(seed, Stream::Verify);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let w = random_consensus(&mut r);
        let t = r.gen_range(0..6u32);
        let x = rng::uniform_matrix(&mut r, w.n(), 3, -1.0, 1.0);
        let err = crate::dynamics::StackedState::new(x.clone()).consensus_error();
        let y = w.apply(&x, t).expect("shapes agree");
        let after = crate::dynamics::StackedState::new(y).consensus_error();
        worst = worst.max(after - w.beta().powi(t as i32) * err);
    }
    row(
        "consensus-contraction",
        worst <= 1e-9,
        format!("max excess {worst:.2e} over 100 draws"),
    )
}

fn beta_fixtures() -> VerifyRow {
    let complete = ConsensusMatrix::from_topology(&Topology::complete(8).unwrap(), WeightScheme::UniformNeighbor)
        .map(|w| w.beta())
        .unwrap_or(f64::NAN);
    let two = spectral_gap(&DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]))
        .map(|g| g.beta)
        .unwrap_or(f64::NAN);
    let circ = ConsensusMatrix::from_topology(&Topology::circulant(8, 3).unwrap(), WeightScheme::LazyMetropolis)
        .map(|w| validate_assumptions(&w));
    let circ_ok = circ.as_ref().map(|r| r.all_passed()).unwrap_or(false);
    let circ_beta = circ.map(|r| r.beta).unwrap_or(f64::NAN);
    row(
        "beta-fixtures",
        complete <= 1e-12 && (two - 0.5).abs() <= 1e-12 && circ_ok && circ_beta < 1.0,
        format!("complete {complete:.1e}, two-node {two:.15}, circulant(8,3) {circ_beta:.6} (reference 0.577, weights unstated)"),
    )
}

fn strong_convexity(seed: u64) -> VerifyRow {
    let mut worst = f64::INFINITY;
    for inst in 0..10 {
        let f = StronglyConvexQuadratic::random(6, 0.3, 5.0, seed.wrapping_add(inst)).expect("valid spectrum");
        let mut r = rng::stream(seed.wrapping_add(inst), Stream::Init);
        for _ in 0..100 {
            let x = rng::uniform_vector(&mut r, 6, -3.0, 3.0);
            let y = rng::uniform_vector(&mut r, 6, -3.0, 3.0);
            worst = worst.min(coercivity_lemma31_check(&f, &x, &y));
        }
    }
    let eq = StronglyConvexQuadratic::isotropic(3, 2.0).expect("positive");
    let eq_slack = coercivity_lemma31_check(
        &eq,
        &DVector::from_vec(vec![1.0, 2.0, -1.0]),
        &DVector::from_vec(vec![0.5, -1.0, 0.0]),
    );
    row(
        "strong-convexity-coercivity",
        worst >= -1e-9 && eq_slack.abs() <= 1e-10,
        format!("min slack {worst:.2e}, equality case {eq_slack:.1e}"),
    )
}

fn composite_and_hoffman(seed: u64) -> (VerifyRow, VerifyRow, VerifyRow) {
    let mut worst = f64::INFINITY;
    let mut sandwich_ok = true;
    let mut d_ok = true;
    for inst in 0..5u64 {
        let reg = make_regression(12, 4, 2, seed.wrapping_add(inst)).expect("valid sizes");
        let cs = reg.structure();
        let mut r = rng::stream(seed.wrapping_add(inst), Stream::Verify);
        for _ in 0..200 {
            let x = rng::uniform_vector(&mut r, 12, -2.0, 2.0);
            worst = worst.min(coercivity_check(cs, &x));
            let proj = cs.project(&x);
            let dist2 = (&x - &proj).norm_squared();
            let img2 = (cs.operator() * (&x - &proj)).norm_squared();
            sandwich_ok &=
                cs.c_h() * dist2 <= img2 * (1.0 + 1e-9) + 1e-12 && img2 <= cs.norm_sq() * dist2 * (1.0 + 1e-9) + 1e-12;
        }
        d_ok &= constant_d(&reg, cs).is_ok();
    }
    (
        row("composite-coercivity", worst >= -1e-9, format!("min slack {worst:.2e}")),
        row(
            "hoffman-sandwich",
            sandwich_ok,
            "c_H|z-[z]|² ≤ |H(z-[z])|² ≤ |H|²|z-[z]|²".into(),
        ),
        row(
            "d-kernel-invariance",
            d_ok,
            "local gradients constant along ker(H)".into(),
        ),
    )
}

fn product_bound(seed: u64) -> VerifyRow {
    let mut r = rng::stream(seed, Stream::Offsets);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..50 {
        let rr = r.gen_range(0.1..3.0);
        let alphas: Vec<f64> = (0..50)
            .map(|k| r.gen_range(0.0..1.0) / (1.0 + k as f64).powi(2))
            .collect();
        let chk = product_bound_check(rr, &alphas, 0, 49).expect("valid input");
        worst = worst.min(chk.slack());
        failures += usize::from(!chk.passed());
    }
    row(
        "product-bound",
        failures == 0,
        format!("{failures} violations, min slack {worst:.2e}"),
    )
}

fn scalar_recursion() -> VerifyRow {
    let mut ok = true;
    for &(a, b, v0) in &[(0.5, 0.1, 3.0), (0.99, 2.0, 0.0), (0.1, 0.0, 10.0)] {
        for (k, v) in scalar_recursion_simulate(a, b, v0, 200).iter().enumerate() {
            ok &= *v <= scalar_recursion_bound(a, b, v0, k) * (1.0 + 1e-12);
        }
    }
    row("scalar-recursion", ok, "simulated v_k ≤ a^k v_0 + b/(1-a)".into())
}

fn smoothness_and_caps(seed: u64) -> (VerifyRow, VerifyRow) {
    let reg = make_regression(50, 8, 5, seed).expect("valid sizes");
    let c = TheoryConstants::new(reg.structure(), reg.smoothness());
    let beta = ConsensusMatrix::from_topology(&Topology::circulant(8, 3).unwrap(), WeightScheme::LazyMetropolis)
        .map(|w| w.beta())
        .unwrap_or(f64::NAN);
    let caps_ok = (1..=3).all(|j| match stepsize_caps(&c, beta, j) {
        Ok(caps) => caps.composite <= radius_step_threshold(&c, caps.composite, beta, j),
        Err(_) => false,
    });
    (
        row(
            "smoothness-dominance",
            c.smoothness_dominates(),
            format!("L = {:.4} ≥ α|H|² = {:.4}", c.l_max, c.alpha * c.norm_sq),
        ),
        row(
            "cap-vs-radius-condition",
            caps_ok,
            "composite cap satisfies the R-denominator condition, J = 1..3".into(),
        ),
    )
}

fn gradients(seed: u64) -> VerifyRow {
    let reg = make_regression(6, 3, 2, seed).expect("valid sizes");
    let quartic = make_piecewise_quartic(4, seed).expect("n ≥ 2");
    let mut r = rng::stream(seed, Stream::Verify);
    let mut worst: f64 = 0.0;
    let problems: [&dyn Problem; 2] = [&reg, &quartic];
    for problem in problems {
        for _ in 0..100 {
            let x = rng::uniform_vector(&mut r, problem.dim(), -1.5, 1.5);
            let step = 1e-6 * (1.0 + x.norm());
            for i in 0..problem.agents() {
                let fd = finite_difference_gradient(|z| problem.local_value(i, z), &x, step);
                let g = problem.local_grad(i, &x);
                worst = worst.max((fd - &g).norm() / (1.0 + g.norm()));
            }
        }
    }
    row(
        "gradient-finite-difference",
        worst <= 1e-5,
        format!("max relative error {worst:.2e}"),
    )
}

/// Runs every lemma verifier on a battery seeded from `seed`.
pub fn verify(seed: u64) -> VerifyReport {
    let (composite, hoff, d) = composite_and_hoffman(seed);
    let (smooth, caps) = smoothness_and_caps(seed);
    VerifyReport {
        seed,
        rows: vec![
            consensus_contraction(seed),
            beta_fixtures(),
            strong_convexity(seed),
            composite,
            hoff,
            d,
            product_bound(seed),
            scalar_recursion(),
            smooth,
            caps,
            gradients(seed),
        ],
    }
}
