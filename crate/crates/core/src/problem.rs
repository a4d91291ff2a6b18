use crate::error::Error;
use crate::fem::loads::{body_loads, dirichlet_lift, traction_loads};
use crate::fem::{Discretization, LoadCase, Mesh};
use crate::material::MaterialLaws;

/// Mesh, material and loads: everything the control-to-state map depends on
/// apart from `z` and `γ`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub disc: Discretization,
    pub laws: MaterialLaws,
    pub case: LoadCase,
    lift: Vec<f64>,
    traction: Vec<f64>,
}

impl Problem {
    pub fn new(mesh: Mesh, laws: MaterialLaws, case: LoadCase) -> Result<Problem, Error> {
        mesh.validate()?;
        laws.validate()?;
        case.validate(&mesh)?;
        let disc = Discretization::new(mesh);
        let lift = dirichlet_lift(&disc, &case);
        let traction = traction_loads(&disc, &case);
        Ok(Problem {
            disc,
            laws,
            case,
            lift,
            traction,
        })
    }

    /// Full load vector `L(z)` (body part depends on `z` through `ℓ`).
    pub fn loads(&self, z: &[f64]) -> Vec<f64> {
        let mut l = body_loads(&self.disc, &self.laws, z, &self.case);
        for (a, b) in l.iter_mut().zip(&self.traction) {
            *a += b;
        }
        l
    }

    /// `w` at Dirichlet dofs, zero elsewhere.
    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    pub fn num_nodes(&self) -> usize {
        self.disc.num_nodes()
    }

    pub fn area(&self) -> f64 {
        self.disc.area.iter().sum()
    }

    /// `u` with its Dirichlet dofs overwritten by `w`.
    pub fn impose_dirichlet(&self, u: &mut [f64]) {
        for (n, &fixed) in self.disc.layout.dirichlet.iter().enumerate() {
            if fixed {
                u[2 * n] = self.lift[2 * n];
                u[2 * n + 1] = self.lift[2 * n + 1];
            }
        }
    }
}
