//! Residuals of the limit optimality system, evaluated at a regularized
//! solution.

use crate::adjoint::{reduced_gradient, AdjointState, PhaseWeights};
use crate::error::SolverError;
use crate::fem::assembly::element_laws;
use crate::fem::sparse::dot;
use crate::forward::State;
use crate::material::{DevTensor2, SymTensor2};
use crate::optimizer::{projected_gradient_norm, PhaseOperators};
use crate::problem::Problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative margin below `d(z)` that counts as strictly inside the yield
/// surface for `r₃`.
pub const INACTIVE_MARGIN: f64 = 0.05;

/// Number of random test triples for the weak-form residuals.
pub const TEST_TRIPLES: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    pub gamma: f64,
    /// `Σ|T|·|π·p|`.
    pub r1: f64,
    /// `Σ|T|·|ρ·p − d|p||`.
    pub r2: f64,
    /// `Σ|T|·|p̄|²` over triangles with `|ρ| < (1 − margin)·d`.
    pub r3: f64,
    /// `max_T (|ρ| − d)`; never positive at finite `γ`.
    pub rho_excess: f64,
    /// Largest relative residual of the state equation over test triples.
    pub state_residual: f64,
    /// Largest relative residual of the adjoint equation over test triples.
    pub adjoint_residual: f64,
    /// Smallest `π·p̄` over triangles.
    pub min_pi_dot_pbar: f64,
    pub projected_gradient: f64,
}

impl OptimalityReport {
    pub fn is_finite(&self) -> bool {
        [
            self.r1,
            self.r2,
            self.r3,
            self.rho_excess,
            self.state_residual,
            self.adjoint_residual,
            self.min_pi_dot_pbar,
            self.projected_gradient,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Complementarity residuals from per-element fields.
pub fn complementarity(
    area: &[f64],
    d: &[f64],
    p: &[DevTensor2],
    p_bar: &[DevTensor2],
    rho: &[DevTensor2],
    pi: &[DevTensor2],
) -> (f64, f64, f64, f64, f64) {
    let (mut r1, mut r2, mut r3) = (0.0, 0.0, 0.0);
    let mut excess = f64::NEG_INFINITY;
    let mut min_pp = f64::INFINITY;
    for t in 0..area.len() {
        r1 += area[t] * pi[t].dot(&p[t]).abs();
        r2 += area[t] * (rho[t].dot(&p[t]) - d[t] * p[t].norm()).abs();
        let rn = rho[t].norm();
        if rn < (1.0 - INACTIVE_MARGIN) * d[t] {
            r3 += area[t] * p_bar[t].norm_sq();
        }
        excess = excess.max(rn - d[t]);
        min_pp = min_pp.min(pi[t].dot(&p_bar[t]));
    }
    (r1, r2, r3, excess, min_pp)
}

/// Residual of `∫Cε·η + Hp·q + ρ·q − L·v = 0` relative to the size of its
/// terms, for a test triple `(v, η, q)` with `Ev = η + q`.
fn weak_residual(
    problem: &Problem,
    vals: &[crate::material::LawValues],
    loads: &[f64],
    eps: &[SymTensor2],
    p: &[DevTensor2],
    mult: &[DevTensor2],
    v: &[f64],
    q: &[DevTensor2],
) -> f64 {
    let disc = &problem.disc;
    let mut sum = 0.0;
    let mut scale = 0.0;
    for t in 0..disc.num_triangles() {
        let eta = disc.element_strain(v, t) - q[t].to_sym();
        let a = disc.area[t];
        let terms = [
            a * vals[t].apply_c(&eps[t]).dot(&eta),
            a * vals[t].apply_h(&p[t]).dot(&q[t]),
            a * mult[t].dot(&q[t]),
        ];
        for x in terms {
            sum += x;
            scale += x.abs();
        }
    }
    let l = dot(loads, v);
    sum -= l;
    scale += l.abs();
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

#[allow(clippy::too_many_arguments)]
pub fn check_optimality(
    problem: &Problem,
    z: &[f64],
    state: &State,
    adj: &AdjointState,
    gamma: f64,
    weights: &PhaseWeights,
    phase: &PhaseOperators,
    seed: u64,
) -> Result<OptimalityReport, SolverError> {
    let disc = &problem.disc;
    let vals = element_laws(disc, &problem.laws, z);
    let d: Vec<f64> = vals.iter().map(|v| v.d).collect();
    let (r1, r2, r3, rho_excess, min_pi_dot_pbar) =
        complementarity(&disc.area, &d, &state.p, &adj.p_bar, &adj.rho, &adj.pi);

    let loads = problem.loads(z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state_residual: f64 = 0.0;
    let mut adjoint_residual: f64 = 0.0;
    for _ in 0..TEST_TRIPLES {
        let free: Vec<f64> = (0..disc.layout.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = disc.layout.expand_free(&free);
        let q: Vec<DevTensor2> = (0..disc.num_triangles())
            .map(|_| DevTensor2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        state_residual = state_residual.max(weak_residual(
            problem, &vals, &loads, &state.eps, &state.p, &adj.rho, &v, &q,
        ));
        adjoint_residual = adjoint_residual.max(weak_residual(
            problem, &vals, &loads, &adj.eps_bar, &adj.p_bar, &adj.pi, &v, &q,
        ));
    }
    let g = reduced_gradient(problem, z, state, adj, gamma, weights, &phase.stiffness).total();
    let projected_gradient = projected_gradient_norm(z, &g, phase)?;
    Ok(OptimalityReport {
        gamma,
        r1,
        r2,
        r3,
        rho_excess,
        state_residual,
        adjoint_residual,
        min_pi_dot_pbar,
        projected_gradient,
    })
}
