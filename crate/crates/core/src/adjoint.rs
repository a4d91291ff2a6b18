//! Adjoint state, multipliers and the reduced gradient of `J_δ`.

use crate::error::SolverError;
use crate::fem::assembly::{element_laws, element_z_weight};
use crate::fem::phase::double_well_gradient;
use crate::fem::sparse::dot;
use crate::fem::{pcg, CgOptions, CsrMatrix, Discretization};
use crate::forward::{solve_forward, ForwardOptions, State};
use crate::material::{h_gamma, DevTensor2, LawValues, SymTensor2};
use crate::problem::Problem;
use nalgebra::Matrix3;

#[derive(Clone, Debug, PartialEq)]
pub struct AdjointState {
    /// Full dof vector, zero on Dirichlet nodes.
    pub u_bar: Vec<f64>,
    pub eps_bar: Vec<SymTensor2>,
    pub p_bar: Vec<DevTensor2>,
    /// `d(z)·hess h_γ(p)·p̄`.
    pub pi: Vec<DevTensor2>,
    /// `d(z)·∇h_γ(p)`.
    pub rho: Vec<DevTensor2>,
    pub cg_iters: usize,
}

/// `(p̄, ε̄)` for an element: `p̄ = M⁻¹(2μ·dev Eū)`,
/// `M = (2μ + h)Id + d·hess h_γ(p)`.
fn adjoint_plastic(v: &LawValues, gamma: f64, p: &DevTensor2, e_bar: &SymTensor2) -> DevTensor2 {
    let m = v.flux_jacobian(gamma, p).0;
    let rhs = (e_bar.dev() * (2.0 * v.mu)).to_ortho();
    let x = m
        .cholesky()
        .expect("flux Jacobian is positive definite")
        .solve(&rhs);
    DevTensor2::from_ortho(&x)
}

/// Operator of the adjoint problem on free dofs, assembled from its
/// quadratic form `∫Cε̄·η̄ + Hp̄·q̄ + d·hess h_γ(p)p̄·q̄` with `p̄` eliminated.
pub fn adjoint_operator(disc: &Discretization, vals: &[LawValues], gamma: f64, p: &[DevTensor2]) -> CsrMatrix {
    let layout = &disc.layout;
    let mut k = disc.displacement_matrix();
    for t in 0..disc.num_triangles() {
        let v = &vals[t];
        let m = v.flux_jacobian(gamma, &p[t]).0;
        let m_inv = m.try_inverse().expect("flux Jacobian is positive definite");
        let hess = h_gamma(gamma, &p[t]).hess.0;
        // E ↦ p̄ and E ↦ ε̄ in orthonormal coordinates
        let mut pmap = nalgebra::Matrix2x3::zeros();
        pmap.fixed_view_mut::<2, 2>(0, 1).copy_from(&(m_inv * (2.0 * v.mu)));
        let mut emb = nalgebra::Matrix3x2::zeros();
        emb[(1, 0)] = 1.0;
        emb[(2, 1)] = 1.0;
        let emap = Matrix3::identity() - emb * pmap;
        let q = emap.transpose() * v.c_matrix() * emap
            + pmap.transpose() * (nalgebra::Matrix2::identity() * v.h + hess * v.d) * pmap;
        let b = &disc.b[t];
        let ke = b.transpose() * q * b * disc.area[t];
        let dofs = disc.element_dofs(t);
        for i in 0..6 {
            let Some(fi) = layout.free_index(dofs[i]) else { continue };
            for j in 0..6 {
                if let Some(fj) = layout.free_index(dofs[j]) {
                    k.add(fi, fj, ke[(i, j)]);
                }
            }
        }
    }
    k
}

pub fn solve_adjoint(
    problem: &Problem,
    z: &[f64],
    state: &State,
    gamma: f64,
    cg: &CgOptions,
) -> Result<AdjointState, SolverError> {
    let disc = &problem.disc;
    let layout = &disc.layout;
    let vals = element_laws(disc, &problem.laws, z);
    let k = adjoint_operator(disc, &vals, gamma, &state.p);
    let rhs = layout.extract_free(&problem.loads(z));
    let mut x = vec![0.0; rhs.len()];
    let info = pcg(&k, &rhs, &mut x, cg)?;
    let u_bar = layout.expand_free(&x);
    let mut eps_bar = Vec::with_capacity(disc.num_triangles());
    let mut p_bar = Vec::with_capacity(disc.num_triangles());
    for t in 0..disc.num_triangles() {
        let e = disc.element_strain(&u_bar, t);
        let pb = adjoint_plastic(&vals[t], gamma, &state.p[t], &e);
        eps_bar.push(e - pb.to_sym());
        p_bar.push(pb);
    }
    let (rho, pi) = multipliers_with(&vals, gamma, &state.p, &p_bar);
    Ok(AdjointState {
        u_bar,
        eps_bar,
        p_bar,
        pi,
        rho,
        cg_iters: info.iterations,
    })
}

fn multipliers_with(
    vals: &[LawValues],
    gamma: f64,
    p: &[DevTensor2],
    p_bar: &[DevTensor2],
) -> (Vec<DevTensor2>, Vec<DevTensor2>) {
    p.iter()
        .zip(p_bar)
        .zip(vals)
        .map(|((p, pb), v)| {
            let h = h_gamma(gamma, p);
            (h.grad * v.d, h.hess.apply(pb) * v.d)
        })
        .unzip()
}

/// `(ρ, π)` per triangle.
pub fn multipliers(
    problem: &Problem,
    z: &[f64],
    gamma: f64,
    state: &State,
    adj: &AdjointState,
) -> (Vec<DevTensor2>, Vec<DevTensor2>) {
    let vals = element_laws(&problem.disc, &problem.laws, z);
    multipliers_with(&vals, gamma, &state.p, &adj.p_bar)
}

/// Weights of the objective beyond compliance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseWeights {
    pub delta: f64,
    /// Volume penalty `ν∫ℓ(z)`; zero disables it.
    pub volume: f64,
}

/// Reduced gradient split by origin. All vectors are nodal.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientParts {
    /// Terms coming through the state (loads, `C′`, `H′`, `d′`).
    pub state: Vec<f64>,
    /// `δ K z`.
    pub laplacian: Vec<f64>,
    /// `(1/δ)∫W′(z)φ_i`.
    pub double_well: Vec<f64>,
    pub volume: Vec<f64>,
}

impl GradientParts {
    pub fn total(&self) -> Vec<f64> {
        (0..self.state.len())
            .map(|i| self.state[i] + self.laplacian[i] + self.double_well[i] + self.volume[i])
            .collect()
    }

    /// Everything except the Laplacian, which the optimizer treats implicitly.
    pub fn explicit(&self) -> Vec<f64> {
        (0..self.state.len())
            .map(|i| self.state[i] + self.double_well[i] + self.volume[i])
            .collect()
    }
}

pub fn reduced_gradient(
    problem: &Problem,
    z: &[f64],
    state: &State,
    adj: &AdjointState,
    gamma: f64,
    weights: &PhaseWeights,
    stiffness: &CsrMatrix,
) -> GradientParts {
    let disc = &problem.disc;
    let mesh = &disc.mesh;
    let vals = element_laws(disc, &problem.laws, z);
    let n = disc.num_nodes();
    let mut g_state = vec![0.0; n];
    let mut g_vol = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let v = &vals[t];
        let area = disc.area[t];
        let f = problem.case.body_at_element(mesh, t);
        let mut uc = [0.0; 2];
        for &k in tri {
            uc[0] += (state.u[2 * k] + adj.u_bar[2 * k]) / 3.0;
            uc[1] += (state.u[2 * k + 1] + adj.u_bar[2 * k + 1]) / 3.0;
        }
        let grad_h = h_gamma(gamma, &state.p[t]).grad;
        let density = v.dell * (f[0] * uc[0] + f[1] * uc[1])
            - v.apply_dc(&state.eps[t]).dot(&adj.eps_bar[t])
            - v.dh * state.p[t].dot(&adj.p_bar[t])
            - v.dd * grad_h.dot(&adj.p_bar[t]);
        for &k in tri {
            let w = element_z_weight(z[k]) * area;
            g_state[k] += w * density;
            g_vol[k] += w * weights.volume * v.dell;
        }
    }
    let laplacian = stiffness.mul_vec(z).iter().map(|x| x * weights.delta).collect();
    let double_well = double_well_gradient(disc, z)
        .iter()
        .map(|x| x / weights.delta)
        .collect();
    GradientParts {
        state: g_state,
        laplacian,
        double_well,
        volume: g_vol,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdEntry {
    pub adjoint: f64,
    pub fd: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    pub max_rel_err: f64,
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// `count` nodal directions with entries uniform in `[−1, 1]`.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Compare `g·φ` with central differences of the reduced objective,
/// re-solving the forward problem at `z ± hφ`.
#[allow(clippy::too_many_arguments)]
pub fn fd_gradient_check(
    problem: &Problem,
    z: &[f64],
    directions: &[Vec<f64>],
    gamma: f64,
    weights: &PhaseWeights,
    step: f64,
    opts: &ForwardOptions,
) -> Result<FdReport, SolverError> {
    let phase = crate::optimizer::PhaseOperators::new(&problem.disc);
    let state = solve_forward(problem, z, gamma, opts, None)?;
    let adj = solve_adjoint(problem, z, &state, gamma, &opts.cg)?;
    let g = reduced_gradient(problem, z, &state, &adj, gamma, weights, &phase.stiffness).total();
    let objective = |zz: &[f64]| -> Result<f64, SolverError> {
        let s = solve_forward(problem, zz, gamma, opts, Some(&state.u))?;
        Ok(crate::optimizer::evaluate_objective(problem, zz, &s, weights, &phase).total)
    };
    let mut entries = Vec::with_capacity(directions.len());
    for dir in directions {
        let shifted = |s: f64| -> Vec<f64> { z.iter().zip(dir).map(|(a, b)| a + s * b).collect() };
        let fd = (objective(&shifted(step))? - objective(&shifted(-step))?) / (2.0 * step);
        let adjoint = dot(&g, dir);
        entries.push(FdEntry {
            adjoint,
            fd,
            rel_err: relative_error(adjoint, fd),
        });
    }
    let max_rel_err = entries.iter().fold(0.0_f64, |m, e| m.max(e.rel_err));
    Ok(FdReport {
        entries,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble;
    use crate::fem::{generate_rect_mesh, BodyForce, LoadCase, Split, TagSpec};
    use crate::material::MaterialLaws;
    use crate::optimizer::PhaseOperators;

    fn problem(g: f64, f: [f64; 2]) -> Problem {
        let mesh = generate_rect_mesh(6, 4, 1.0, 0.5, Split::Diagonal, &TagSpec::cantilever(0.5, 0.1)).unwrap();
        let case = LoadCase {
            body: BodyForce::Uniform(f),
            traction: LoadCase::neumann_traction(&mesh, [0.0, g]),
            ..LoadCase::zero()
        };
        Problem::new(mesh, MaterialLaws::from_stiff(1.0, 1.0, 0.1, 0.02).unwrap(), case).unwrap()
    }

    fn smooth_z(pr: &Problem) -> Vec<f64> {
        pr.disc
            .mesh
            .nodes
            .iter()
            .map(|x| 0.5 + 0.3 * (3.0 * x[0]).sin() * (5.0 * x[1]).cos())
            .collect()
    }

    #[test]
    fn zero_loads_give_zero_adjoint() {
        let pr = problem(0.0, [0.0, 0.0]);
        let z = smooth_z(&pr);
        let st = solve_forward(&pr, &z, 10.0, &ForwardOptions::default(), None).unwrap();
        let adj = solve_adjoint(&pr, &z, &st, 10.0, &CgOptions::default()).unwrap();
        assert!(adj.u_bar.iter().all(|&v| v == 0.0));
        assert!(adj.p_bar.iter().all(|p| *p == DevTensor2::ZERO));
    }

    #[test]
    fn adjoint_operator_equals_forward_tangent() {
        let pr = problem(-0.05, [0.0, -0.1]);
        let z = smooth_z(&pr);
        let gamma = 10.0;
        let st = solve_forward(&pr, &z, gamma, &ForwardOptions::default(), None).unwrap();
        let vals = element_laws(&pr.disc, &pr.laws, &z);
        let loads = pr.loads(&z);
        let k = assemble(&pr.disc, &vals, gamma, &st.u, &loads, true).tangent.unwrap();
        let a = adjoint_operator(&pr.disc, &vals, gamma, &st.p);
        let diff = k.add_scaled(-1.0, &a);
        assert!(diff.max_abs() <= 1e-12 * k.max_abs(), "{}", diff.max_abs());
    }

    #[test]
    fn multiplier_identities() {
        let pr = problem(-0.05, [0.0, -0.1]);
        let z = smooth_z(&pr);
        let gamma = 20.0;
        let st = solve_forward(&pr, &z, gamma, &ForwardOptions::default(), None).unwrap();
        let adj = solve_adjoint(&pr, &z, &st, gamma, &CgOptions::default()).unwrap();
        let vals = element_laws(&pr.disc, &pr.laws, &z);
        for t in 0..pr.disc.num_triangles() {
            let v = &vals[t];
            // ρ = Π_D(Cε − Hp) at the forward solution
            let rho = v.apply_c(&st.eps[t]).dev() - v.apply_h(&st.p[t]);
            assert!((rho - adj.rho[t]).norm() <= 1e-12 * (1.0 + rho.norm()));
            assert!(adj.rho[t].norm() <= v.d);
            // π = Π_D(Cε̄ − Hp̄)
            let pi = v.apply_c(&adj.eps_bar[t]).dev() - v.apply_h(&adj.p_bar[t]);
            assert!((pi - adj.pi[t]).norm() <= 1e-10 * (1.0 + pi.norm()));
            assert!(adj.pi[t].dot(&adj.p_bar[t]) >= 0.0);
            let eu = pr.disc.element_strain(&adj.u_bar, t);
            assert!((adj.eps_bar[t] + adj.p_bar[t].to_sym() - eu).norm() <= 1e-15 * (1.0 + eu.norm()));
        }
    }

    #[test]
    fn flat_design_has_zero_gradient() {
        for zc in [0.0, 1.0] {
            let pr = problem(-0.05, [0.0, 0.0]);
            let z = vec![zc; pr.num_nodes()];
            let st = solve_forward(&pr, &z, 10.0, &ForwardOptions::default(), None).unwrap();
            let adj = solve_adjoint(&pr, &z, &st, 10.0, &CgOptions::default()).unwrap();
            let phase = PhaseOperators::new(&pr.disc);
            let w = PhaseWeights { delta: 0.1, volume: 0.0 };
            let g = reduced_gradient(&pr, &z, &st, &adj, 10.0, &w, &phase.stiffness).total();
            assert!(g.iter().all(|v| v.abs() < 1e-14), "{g:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pr = problem(-0.05, [0.0, -0.2]);
        let z = smooth_z(&pr);
        let n = pr.num_nodes();
        let dirs: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| ((i * (k + 2)) as f64 * 0.71).sin()).collect())
            .collect();
        let opts = ForwardOptions {
            tol: 1e-13,
            cg: CgOptions {
                rtol: 1e-14,
                ..CgOptions::default()
            },
            ..ForwardOptions::default()
        };
        let w = PhaseWeights { delta: 0.05, volume: 0.3 };
        let rep = fd_gradient_check(&pr, &z, &dirs, 10.0, &w, 1e-6, &opts).unwrap();
        assert!(rep.max_rel_err <= 1e-5, "{rep:?}");
    }
}
