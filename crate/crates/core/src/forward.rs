//! Control-to-state map: Newton's method on the reduced displacement
//! equation, globalized by an Armijo line search on the reduced energy.

use crate::error::SolverError;
use crate::fem::assembly::{assemble, element_laws};
use crate::fem::sparse::{dot, norm};
use crate::fem::{pcg, CgOptions, Discretization};
use crate::material::{DevTensor2, LawValues, SymTensor2};
use crate::problem::Problem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    /// Stop when `‖r‖ ≤ tol·(1 + ‖L‖)` on free dofs.
    pub tol: f64,
    pub max_iter: usize,
    pub cg: CgOptions,
    pub armijo_c: f64,
    pub max_backtracks: usize,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            tol: 1e-10,
            max_iter: 50,
            cg: CgOptions::default(),
            armijo_c: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub eps: Vec<SymTensor2>,
    pub p: Vec<DevTensor2>,
    pub gamma_used: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Reduced energy after each accepted Newton step, starting value first.
    pub energy_history: Vec<f64>,
}

/// `p = F⁻¹(Π_D C Eu)`, `ε = Eu − p` per triangle.
pub fn recover_plastic(
    disc: &Discretization,
    vals: &[LawValues],
    gamma: f64,
    u: &[f64],
) -> (Vec<SymTensor2>, Vec<DevTensor2>) {
    (0..disc.num_triangles())
        .map(|t| {
            let e = disc.element_strain(u, t);
            let v = &vals[t];
            let p = v.flux_f_inverse(gamma, &(e.dev() * (2.0 * v.mu)));
            (e - p.to_sym(), p)
        })
        .unzip()
}

pub fn solve_forward(
    problem: &Problem,
    z: &[f64],
    gamma: f64,
    opts: &ForwardOptions,
    initial: Option<&[f64]>,
) -> Result<State, SolverError> {
    assert!(gamma > 0.0, "gamma must be positive");
    let disc = &problem.disc;
    let layout = &disc.layout;
    let vals = element_laws(disc, &problem.laws, z);
    let loads = problem.loads(z);
    let load_norm = norm(&layout.extract_free(&loads));
    let target = opts.tol * (1.0 + load_norm);

    let mut u = match initial {
        Some(u0) => u0.to_vec(),
        None => problem.lift().to_vec(),
    };
    problem.impose_dirichlet(&mut u);

    let reduced = |energy: f64, u: &[f64]| energy - dot(&loads, u);

    let mut current = assemble(disc, &vals, gamma, &u, &loads, true);
    let mut e = reduced(current.energy, &u);
    let mut history = vec![e];
    let mut iters = 0;
    loop {
        let rnorm = norm(&current.residual);
        if !rnorm.is_finite() {
            return Err(SolverError::NonFinite("forward residual"));
        }
        if rnorm <= target {
            let (eps, p) = recover_plastic(disc, &vals, gamma, &u);
            return Ok(State {
                u,
                eps,
                p,
                gamma_used: gamma,
                residual_norm: rnorm,
                newton_iters: iters,
                energy_history: history,
            });
        }
        if iters == opts.max_iter {
            return Err(SolverError::MaxIterations {
                iterations: iters,
                residual: rnorm,
            });
        }
        let k = current.tangent.take().expect("tangent assembled");
        let rhs: Vec<f64> = current.residual.iter().map(|r| -r).collect();
        let mut du = vec![0.0; rhs.len()];
        pcg(&k, &rhs, &mut du, &opts.cg)?;
        let slope = dot(&current.residual, &du);
        // below this the energy difference is pure roundoff and cannot
        // certify anything
        let noise = 64.0 * f64::EPSILON * (current.energy.abs() + dot(&loads, &u).abs());

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let mut trial = u.clone();
            layout.add_free(&mut trial, t, &du);
            let next = assemble(disc, &vals, gamma, &trial, &loads, true);
            let e_trial = reduced(next.energy, &trial);
            if e_trial <= e + opts.armijo_c * t * slope || -slope * t <= noise {
                accepted = Some((trial, next, e_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, next, e_trial)) = accepted else {
            return Err(SolverError::LineSearch { residual: rnorm });
        };
        u = trial;
        current = next;
        e = e_trial;
        history.push(e);
        iters += 1;
    }
}

/// Discrete energy at a state: `Σ|T|·[½Cε·ε + ½h|p|² + d·h_γ(p)] − L(z)·u`,
/// with `|p|` in place of `h_γ(p)` when `gamma` is `None`.
pub fn energy(problem: &Problem, z: &[f64], state: &State, gamma: Option<f64>) -> f64 {
    let disc = &problem.disc;
    let vals = element_laws(disc, &problem.laws, z);
    let stored: f64 = (0..disc.num_triangles())
        .map(|t| {
            let e = disc.element_strain(&state.u, t);
            disc.area[t] * vals[t].energy_density(&e, &state.p[t], gamma)
        })
        .sum();
    stored - dot(&problem.loads(z), &state.u)
}

/// State built from `u` by pointwise minimization over `p`.
pub fn state_from_displacement(problem: &Problem, z: &[f64], gamma: f64, u: Vec<f64>) -> State {
    let vals = element_laws(&problem.disc, &problem.laws, z);
    let (eps, p) = recover_plastic(&problem.disc, &vals, gamma, &u);
    State {
        u,
        eps,
        p,
        gamma_used: gamma,
        residual_norm: f64::NAN,
        newton_iters: 0,
        energy_history: Vec::new(),
    }
}

/// `‖p₁ − p₂‖_{L²}` over triangles.
pub fn plastic_l2_distance(disc: &Discretization, a: &[DevTensor2], b: &[DevTensor2]) -> f64 {
    a.iter()
        .zip(b)
        .zip(&disc.area)
        .map(|((x, y), ar)| ar * (*x - *y).norm_sq())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{generate_rect_mesh, DirichletData, EdgeTag, LoadCase, Split, TagSpec};
    use crate::material::{radial_root, MaterialLaws};

    fn laws() -> MaterialLaws {
        MaterialLaws::from_stiff(1.0, 1.0, 0.1, 0.02).unwrap()
    }

    fn cantilever(nx: usize, ny: usize, g: f64) -> Problem {
        let mesh = generate_rect_mesh(nx, ny, 1.0, 1.0, Split::Diagonal, &TagSpec::cantilever(1.0, 0.125))
            .unwrap();
        let case = LoadCase {
            traction: LoadCase::neumann_traction(&mesh, [0.0, g]),
            ..LoadCase::zero()
        };
        Problem::new(mesh, laws(), case).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let pr = cantilever(4, 4, 0.0);
        let z = vec![1.0; pr.num_nodes()];
        let s = solve_forward(&pr, &z, 10.0, &ForwardOptions::default(), None).unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));
        assert!(s.p.iter().all(|p| *p == DevTensor2::ZERO));
    }

    #[test]
    fn uniform_shear_matches_scalar_oracle() {
        let mesh = generate_rect_mesh(3, 3, 1.0, 1.0, Split::Diagonal, &TagSpec::uniform(EdgeTag::Dirichlet))
            .unwrap();
        let s0 = 0.05;
        let case = LoadCase {
            dirichlet: DirichletData::Linear {
                a: [[0.0, s0], [0.0, 0.0]],
                b: [0.0, 0.0],
            },
            ..LoadCase::zero()
        };
        let pr = Problem::new(mesh, laws(), case).unwrap();
        let z = vec![1.0; pr.num_nodes()];
        let gamma = 10.0;
        let st = solve_forward(&pr, &z, gamma, &ForwardOptions::default(), None).unwrap();
        let v = pr.laws.at(1.0);
        // E = sym([[0, s0], [0, 0]]) has xy = s0/2; Π_D C E = 2μE
        let r = (SymTensor2::new(0.0, 0.0, 0.5 * s0).dev() * (2.0 * v.mu)).norm();
        let s = radial_root(2.0 * v.mu + v.h, v.d, gamma, r);
        for p in &st.p {
            assert!((p.norm() - s).abs() <= 1e-10);
            assert!(p.xx.abs() <= 1e-12);
        }
    }

    #[test]
    fn volumetric_patch_is_reproduced() {
        let mesh = generate_rect_mesh(4, 4, 1.0, 1.0, Split::Crossed, &TagSpec::uniform(EdgeTag::Dirichlet))
            .unwrap();
        let case = LoadCase {
            dirichlet: DirichletData::Linear {
                a: [[0.03, 0.0], [0.0, 0.03]],
                b: [0.1, -0.2],
            },
            ..LoadCase::zero()
        };
        let pr = Problem::new(mesh, laws(), case).unwrap();
        let z = vec![1.0; pr.num_nodes()];
        let st = solve_forward(&pr, &z, 1e3, &ForwardOptions::default(), None).unwrap();
        for (n, x) in pr.disc.mesh.nodes.iter().enumerate() {
            assert!((st.u[2 * n] - (0.03 * x[0] + 0.1)).abs() < 1e-12);
            assert!((st.u[2 * n + 1] - (0.03 * x[1] - 0.2)).abs() < 1e-12);
        }
        assert!(st.p.iter().all(|p| p.norm() < 1e-14));
    }

    #[test]
    fn solution_properties() {
        let pr = cantilever(8, 8, -0.05);
        let z: Vec<f64> = pr.disc.mesh.nodes.iter().map(|x| 0.3 + 0.6 * x[0] * x[1]).collect();
        let gamma = 100.0;
        let opts = ForwardOptions::default();
        let st = solve_forward(&pr, &z, gamma, &opts, None).unwrap();
        assert!(st.p.iter().any(|p| p.norm() > 1e-3), "benchmark load should plastify");
        for w in st.energy_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for t in 0..pr.disc.num_triangles() {
            let e = pr.disc.element_strain(&st.u, t);
            assert!((st.eps[t] + st.p[t].to_sym() - e).norm() <= 1e-15 * (1.0 + e.norm()));
        }
        // minimality against the lift with zero plastic strain
        let lifted = State {
            u: pr.lift().to_vec(),
            eps: vec![SymTensor2::ZERO; st.eps.len()],
            p: vec![DevTensor2::ZERO; st.p.len()],
            ..st.clone()
        };
        assert!(energy(&pr, &z, &st, Some(gamma)) <= energy(&pr, &z, &lifted, Some(gamma)));
        // gap between exact and regularized dissipation
        let gap = energy(&pr, &z, &st, None) - energy(&pr, &z, &st, Some(gamma));
        assert!(gap >= 0.0 && gap <= pr.laws.max_yield() * pr.area() / gamma);
        // a different start lands on the same state
        let u0: Vec<f64> = st.u.iter().map(|v| v * 1.7 + 0.01).collect();
        let st2 = solve_forward(&pr, &z, gamma, &opts, Some(&u0)).unwrap();
        let diff: Vec<f64> = st.u.iter().zip(&st2.u).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-8 * (1.0 + norm(&st.u)));
    }

    #[test]
    fn doubling_load_increases_displacement() {
        let z = vec![0.8; 81];
        let a = cantilever(8, 8, -0.02);
        let b = cantilever(8, 8, -0.04);
        let opts = ForwardOptions::default();
        let ua = solve_forward(&a, &z, 50.0, &opts, None).unwrap().u;
        let ub = solve_forward(&b, &z, 50.0, &opts, None).unwrap().u;
        assert!(norm(&ub) >= norm(&ua));
    }
}
