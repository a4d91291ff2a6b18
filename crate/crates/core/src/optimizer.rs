//! Objective `J_δ` and the projected semi-implicit gradient flow on `z`.

use crate::adjoint::{reduced_gradient, solve_adjoint, AdjointState, GradientParts, PhaseWeights};
use crate::diagnostics::perimeter::threshold_perimeter;
use crate::diagnostics::report::{check_optimality, OptimalityReport};
use crate::error::SolverError;
use crate::fem::assembly::{element_laws, element_z};
use crate::fem::phase::{double_well_integral, phase_matrices};
use crate::fem::sparse::dot;
use crate::fem::{pcg, CgOptions, CsrMatrix, Discretization};
use crate::forward::{energy, solve_forward, ForwardOptions, State};
use crate::problem::Problem;

/// P1 mass and stiffness matrices for the phase field.
#[derive(Clone, Debug)]
pub struct PhaseOperators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
}

impl PhaseOperators {
    pub fn new(disc: &Discretization) -> PhaseOperators {
        let (mass, stiffness) = phase_matrices(disc);
        PhaseOperators { mass, stiffness }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveParts {
    /// `∫ℓ(z)f·u + ∫g·u`.
    pub compliance: f64,
    /// `δ/2 ∫|∇z|²`.
    pub gradient_energy: f64,
    /// `(1/δ)∫W(z)`.
    pub double_well: f64,
    pub volume: f64,
    pub total: f64,
}

impl ObjectiveParts {
    /// Modica–Mortola part of the objective.
    pub fn interfacial(&self) -> f64 {
        self.gradient_energy + self.double_well
    }
}

pub fn evaluate_objective(
    problem: &Problem,
    z: &[f64],
    state: &State,
    weights: &PhaseWeights,
    phase: &PhaseOperators,
) -> ObjectiveParts {
    let compliance = dot(&problem.loads(z), &state.u);
    let (gradient_energy, double_well) = interfacial_energy(&problem.disc, z, weights.delta, phase);
    let volume = if weights.volume != 0.0 {
        let disc = &problem.disc;
        weights.volume
            * disc
                .mesh
                .triangles
                .iter()
                .zip(&disc.area)
                .map(|(tri, a)| a * problem.laws.at(element_z(z, tri)).ell)
                .sum::<f64>()
    } else {
        0.0
    };
    ObjectiveParts {
        compliance,
        gradient_energy,
        double_well,
        volume,
        total: compliance + gradient_energy + double_well + volume,
    }
}

/// `(δ/2 zᵀKz, (1/δ)∫W(z))`.
pub fn interfacial_energy(disc: &Discretization, z: &[f64], delta: f64, phase: &PhaseOperators) -> (f64, f64) {
    (
        0.5 * delta * phase.stiffness.bilinear(z, z),
        double_well_integral(disc, z) / delta,
    )
}

/// One step of the flow: `(M + τδK)ζ = M z − τ g`, then clamp to `[0, 1]`.
/// `explicit` holds every gradient term except `δKz`.
pub fn step(
    z: &[f64],
    explicit: &[f64],
    tau: f64,
    delta: f64,
    phase: &PhaseOperators,
    cg: &CgOptions,
) -> Result<Vec<f64>, SolverError> {
    assert!(tau > 0.0);
    let a = phase.mass.add_scaled(tau * delta, &phase.stiffness);
    let mz = phase.mass.mul_vec(z);
    let rhs: Vec<f64> = mz.iter().zip(explicit).map(|(m, g)| m - tau * g).collect();
    let mut zeta = z.to_vec();
    pcg(&a, &rhs, &mut zeta, cg)?;
    Ok(zeta.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

/// M-norm of the Riesz representative `M⁻¹g` after zeroing components whose
/// descent direction points out of `[0, 1]` at a clamped node.
pub fn projected_gradient_norm(
    z: &[f64],
    gradient: &[f64],
    phase: &PhaseOperators,
) -> Result<f64, SolverError> {
    let mut r = vec![0.0; gradient.len()];
    let cg = CgOptions {
        rtol: 1e-13,
        ..CgOptions::default()
    };
    pcg(&phase.mass, gradient, &mut r, &cg)?;
    for (ri, &zi) in r.iter_mut().zip(z) {
        if (zi <= 0.0 && *ri > 0.0) || (zi >= 1.0 && *ri < 0.0) {
            *ri = 0.0;
        }
    }
    Ok(phase.mass.bilinear(&r, &r).max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub delta: f64,
    pub gamma_schedule: Vec<f64>,
    pub tau0: f64,
    pub max_iter: usize,
    /// Stop when the projected-gradient norm falls below `grad_tol` times
    /// the initial one.
    pub grad_tol: f64,
    pub shrink: f64,
    pub grow: f64,
    pub min_tau: f64,
    /// Weight of the optional `ν∫ℓ(z)` term.
    pub volume_penalty: f64,
    pub forward: ForwardOptions,
    pub cg: CgOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            delta: 0.05,
            gamma_schedule: vec![10.0],
            tau0: 1.0,
            max_iter: 500,
            grad_tol: 1e-5,
            shrink: 0.5,
            grow: 1.2,
            min_tau: 1e-12,
            volume_penalty: 0.0,
            forward: ForwardOptions {
                tol: 1e-12,
                ..ForwardOptions::default()
            },
            cg: CgOptions::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn weights(&self) -> PhaseWeights {
        PhaseWeights {
            delta: self.delta,
            volume: self.volume_penalty,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta > 0.0) {
            return Err(format!("delta must be > 0, got {}", self.delta));
        }
        if self.gamma_schedule.is_empty() {
            return Err("gamma schedule is empty".into());
        }
        if self.gamma_schedule.iter().any(|g| !(*g > 0.0)) {
            return Err("gamma values must be > 0".into());
        }
        if self.gamma_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err("gamma schedule must be increasing".into());
        }
        if !(self.tau0 > 0.0) {
            return Err(format!("tau0 must be > 0, got {}", self.tau0));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.grow >= 1.0) {
            return Err("need 0 < shrink < 1 <= grow".into());
        }
        if !(self.grad_tol > 0.0) {
            return Err("grad_tol must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub gamma: f64,
    pub j_delta: f64,
    pub grad_norm: f64,
    pub newton_iters: usize,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// The step size fell below `min_tau` without decreasing `J_δ`.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub z: Vec<f64>,
    pub state: State,
    pub adjoint: AdjointState,
    pub gradient: GradientParts,
    pub objective: ObjectiveParts,
    pub history: Vec<HistoryRow>,
    pub status: Status,
    pub grad_norm_initial: f64,
    pub grad_norm_final: f64,
    pub iterations: usize,
}

struct Point {
    z: Vec<f64>,
    state: State,
    adjoint: AdjointState,
    gradient: GradientParts,
    objective: ObjectiveParts,
    grad_norm: f64,
}

fn evaluate_point(
    problem: &Problem,
    z: Vec<f64>,
    state: State,
    gamma: f64,
    cfg: &OptimizerConfig,
    phase: &PhaseOperators,
) -> Result<Point, SolverError> {
    let weights = cfg.weights();
    let adjoint = solve_adjoint(problem, &z, &state, gamma, &cfg.cg)?;
    let gradient = reduced_gradient(problem, &z, &state, &adjoint, gamma, &weights, &phase.stiffness);
    let objective = evaluate_objective(problem, &z, &state, &weights, phase);
    let grad_norm = projected_gradient_norm(&z, &gradient.total(), phase)?;
    Ok(Point {
        z,
        state,
        adjoint,
        gradient,
        objective,
        grad_norm,
    })
}

/// Projected gradient flow at fixed `γ`.
///
/// `reference_grad` overrides the norm the stopping test is relative to (used
/// to chain continuation stages); `u0` warm-starts the first forward solve.
pub fn optimize_at(
    problem: &Problem,
    z0: &[f64],
    gamma: f64,
    cfg: &OptimizerConfig,
    u0: Option<&[f64]>,
    reference_grad: Option<f64>,
) -> Result<OptimizeResult, SolverError> {
    let phase = PhaseOperators::new(&problem.disc);
    let z: Vec<f64> = z0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let state = solve_forward(problem, &z, gamma, &cfg.forward, u0)?;
    let mut newton = state.newton_iters;
    let mut cur = evaluate_point(problem, z, state, gamma, cfg, &phase)?;
    let reference = reference_grad.unwrap_or(cur.grad_norm);
    let mut tau = cfg.tau0;
    let mut history = vec![HistoryRow {
        iter: 0,
        gamma,
        j_delta: cur.objective.total,
        grad_norm: cur.grad_norm,
        newton_iters: newton,
        tau,
    }];
    let mut iters = 0;
    let status = loop {
        if cur.grad_norm <= cfg.grad_tol * reference {
            break Status::Converged;
        }
        if iters == cfg.max_iter {
            break Status::MaxIterations;
        }
        iters += 1;
        let explicit = cur.gradient.explicit();
        let accepted = loop {
            let z_new = step(&cur.z, &explicit, tau, cfg.delta, &phase, &cfg.cg)?;
            let st = solve_forward(problem, &z_new, gamma, &cfg.forward, Some(&cur.state.u))?;
            newton = st.newton_iters;
            let obj = evaluate_objective(problem, &z_new, &st, &cfg.weights(), &phase);
            if obj.total <= cur.objective.total {
                break Some((z_new, st));
            }
            tau *= cfg.shrink;
            if tau < cfg.min_tau {
                break None;
            }
        };
        let Some((z_new, st)) = accepted else {
            break Status::Stalled;
        };
        cur = evaluate_point(problem, z_new, st, gamma, cfg, &phase)?;
        history.push(HistoryRow {
            iter: iters,
            gamma,
            j_delta: cur.objective.total,
            grad_norm: cur.grad_norm,
            newton_iters: newton,
            tau,
        });
        tau = (tau * cfg.grow).min(cfg.tau0);
    };
    Ok(OptimizeResult {
        grad_norm_final: cur.grad_norm,
        z: cur.z,
        state: cur.state,
        adjoint: cur.adjoint,
        gradient: cur.gradient,
        objective: cur.objective,
        history,
        status,
        grad_norm_initial: reference,
        iterations: iters,
    })
}

/// Plain optimization at the first `γ` of the schedule.
pub fn optimize(problem: &Problem, z0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizeResult, SolverError> {
    optimize_at(problem, z0, cfg.gamma_schedule[0], cfg, None, None)
}

#[derive(Clone, Debug)]
pub struct StageReport {
    pub gamma: f64,
    pub status: Status,
    pub iterations: usize,
    pub objective: f64,
    /// `‖z_γ − z_previous‖_{L²}`; zero for the first stage.
    pub z_change: f64,
    /// `E − E_γ` at the stage's state.
    pub energy_gap: f64,
    /// `M_d |Ω| / γ`.
    pub gap_bound: f64,
    pub optimality: OptimalityReport,
    pub grad_norm_final: f64,
}

#[derive(Clone, Debug)]
pub struct ContinuationResult {
    pub stages: Vec<StageReport>,
    pub history: Vec<HistoryRow>,
    pub last: OptimizeResult,
    pub grad_norm_initial: f64,
}

/// Optimize along the `γ` schedule, warm-starting `z` and `u`. The stopping
/// test of every stage is relative to the first stage's initial norm.
pub fn gamma_continuation(
    problem: &Problem,
    z0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<ContinuationResult, SolverError> {
    let phase = PhaseOperators::new(&problem.disc);
    let weights = cfg.weights();
    let mut stages = Vec::new();
    let mut history: Vec<HistoryRow> = Vec::new();
    let mut z = z0.to_vec();
    let mut u: Option<Vec<f64>> = None;
    let mut reference = None;
    let mut last = None;
    for &gamma in &cfg.gamma_schedule {
        let res = optimize_at(problem, &z, gamma, cfg, u.as_deref(), reference)?;
        reference.get_or_insert(res.grad_norm_initial);
        let offset = history.last().map_or(0, |r| r.iter + 1);
        history.extend(res.history.iter().map(|r| HistoryRow {
            iter: r.iter + offset,
            ..r.clone()
        }));
        let z_change = if stages.is_empty() {
            0.0
        } else {
            let d: Vec<f64> = res.z.iter().zip(&z).map(|(a, b)| a - b).collect();
            phase.mass.bilinear(&d, &d).max(0.0).sqrt()
        };
        let energy_gap = energy(problem, &res.z, &res.state, None) - energy(problem, &res.z, &res.state, Some(gamma));
        let optimality = check_optimality(problem, &res.z, &res.state, &res.adjoint, gamma, &weights, &phase, 7)?;
        stages.push(StageReport {
            gamma,
            status: res.status,
            iterations: res.iterations,
            objective: res.objective.total,
            z_change,
            energy_gap,
            gap_bound: problem.laws.max_yield() * problem.area() / gamma,
            optimality,
            grad_norm_final: res.grad_norm_final,
        });
        z = res.z.clone();
        u = Some(res.state.u.clone());
        last = Some(res);
    }
    Ok(ContinuationResult {
        stages,
        history,
        last: last.expect("schedule is nonempty"),
        grad_norm_initial: reference.unwrap_or(0.0),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaStage {
    pub delta: f64,
    pub status: Status,
    pub iterations: usize,
    /// Phase-field interfacial energy `δ/2∫|∇z|² + (1/δ)∫W(z)`.
    pub interfacial: f64,
    /// Length of the `{z = ½}` isoline.
    pub perimeter: f64,
    /// `|interfacial − perimeter/6| / (perimeter/6)`.
    pub rel_gap: f64,
    pub mesh_ratio: f64,
}

/// Re-optimize a design at each `δ` of the list (warm-started) and compare
/// the interfacial energy with the thresholded perimeter.
pub fn delta_sweep(
    problem: &Problem,
    z0: &[f64],
    cfg: &OptimizerConfig,
    deltas: &[f64],
) -> Result<(Vec<DeltaStage>, Vec<f64>), SolverError> {
    let phase = PhaseOperators::new(&problem.disc);
    let gamma = *cfg.gamma_schedule.last().expect("schedule is nonempty");
    let h = problem.disc.mesh.max_edge_length();
    let mut z = z0.to_vec();
    let mut u: Option<Vec<f64>> = None;
    let mut out = Vec::new();
    for &delta in deltas {
        let c = OptimizerConfig {
            delta,
            ..cfg.clone()
        };
        let res = optimize_at(problem, &z, gamma, &c, u.as_deref(), None)?;
        let (ge, dw) = interfacial_energy(&problem.disc, &res.z, delta, &phase);
        let perimeter = threshold_perimeter(&problem.disc.mesh, &res.z, 0.5);
        let target = perimeter / 6.0;
        out.push(DeltaStage {
            delta,
            status: res.status,
            iterations: res.iterations,
            interfacial: ge + dw,
            perimeter,
            rel_gap: if target > 0.0 { ((ge + dw) - target).abs() / target } else { f64::INFINITY },
            mesh_ratio: h / delta,
        });
        z = res.z;
        u = Some(res.state.u);
    }
    Ok((out, z))
}

/// Element-wise `ℓ(z)` volume fraction, a convenience for reports.
pub fn material_fraction(problem: &Problem, z: &[f64]) -> f64 {
    let vals = element_laws(&problem.disc, &problem.laws, z);
    let total: f64 = problem.disc.area.iter().sum();
    vals.iter().zip(&problem.disc.area).map(|(v, a)| v.ell * a).sum::<f64>() / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{generate_rect_mesh, LoadCase, Split, TagSpec};
    use crate::material::MaterialLaws;

    fn problem(g: f64) -> Problem {
        let mesh = generate_rect_mesh(8, 4, 1.0, 0.5, Split::Diagonal, &TagSpec::cantilever(0.5, 0.1)).unwrap();
        let case = LoadCase {
            traction: LoadCase::neumann_traction(&mesh, [0.0, g]),
            ..LoadCase::zero()
        };
        Problem::new(mesh, MaterialLaws::default(), case).unwrap()
    }

    #[test]
    fn constant_half_phase_energy() {
        let mesh = generate_rect_mesh(4, 4, 1.0, 1.0, Split::Diagonal, &TagSpec::cantilever(1.0, 0.2)).unwrap();
        let pr = Problem::new(mesh, MaterialLaws::default(), LoadCase::zero()).unwrap();
        let phase = PhaseOperators::new(&pr.disc);
        let delta = 0.1;
        let z = vec![0.5; pr.num_nodes()];
        let st = crate::forward::state_from_displacement(&pr, &z, 10.0, vec![0.0; 2 * pr.num_nodes()]);
        let obj = evaluate_objective(&pr, &z, &st, &PhaseWeights { delta, volume: 0.0 }, &phase);
        assert!((obj.total - 1.0 / (32.0 * delta)).abs() < 1e-12);
        let z1 = vec![1.0; pr.num_nodes()];
        let obj1 = evaluate_objective(&pr, &z1, &st, &PhaseWeights { delta, volume: 0.0 }, &phase);
        assert_eq!(obj1.total, 0.0);
    }

    #[test]
    fn step_properties() {
        let pr = problem(-0.01);
        let phase = PhaseOperators::new(&pr.disc);
        let cg = CgOptions::default();
        let n = pr.num_nodes();
        let z = vec![0.4; n];
        let zero = vec![0.0; n];
        let same = step(&z, &zero, 0.7, 0.05, &phase, &cg).unwrap();
        assert!(same.iter().all(|v| (v - 0.4).abs() < 1e-12));
        let g: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let tiny = step(&z, &g, 1e-12, 0.05, &phase, &cg).unwrap();
        assert!(tiny.iter().all(|v| (v - 0.4).abs() < 1e-9));
        let seed: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.2 } else { -0.3 }).collect();
        let out = step(&seed, &zero, 0.1, 0.05, &phase, &cg).unwrap();
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn full_material_without_load_stops_immediately() {
        let pr = problem(0.0);
        let z = vec![1.0; pr.num_nodes()];
        let res = optimize(&pr, &z, &OptimizerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.status, Status::Converged);
    }

    #[test]
    fn history_is_nonincreasing() {
        let pr = problem(-0.02);
        let z = vec![0.5; pr.num_nodes()];
        let cfg = OptimizerConfig {
            max_iter: 15,
            delta: 0.1,
            volume_penalty: 0.01,
            ..OptimizerConfig::default()
        };
        let res = optimize(&pr, &z, &cfg).unwrap();
        assert!(res.history.len() > 2);
        for w in res.history.windows(2) {
            assert!(w[1].j_delta <= w[0].j_delta);
        }
        assert!(res.z.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
