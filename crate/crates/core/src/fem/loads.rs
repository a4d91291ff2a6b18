use super::assembly::element_z;
use super::layout::Discretization;
use super::mesh::{EdgeTag, Mesh};
use crate::material::MaterialLaws;
use std::collections::BTreeMap;
use thiserror::Error;

/// Body force per unit density; multiplied by `ℓ(z)` in the loads.
#[derive(Clone, Debug, PartialEq)]
pub enum BodyForce {
    Uniform([f64; 2]),
    PerNode(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DirichletData {
    Zero,
    Uniform([f64; 2]),
    /// `w(x) = A x + b`.
    Linear { a: [[f64; 2]; 2], b: [f64; 2] },
    /// Values per Dirichlet node; missing nodes get zero.
    PerNode(BTreeMap<usize, [f64; 2]>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadCase {
    pub body: BodyForce,
    /// Constant traction per boundary edge (edge index into `mesh.edges`).
    pub traction: Vec<(usize, [f64; 2])>,
    pub dirichlet: DirichletData,
}

#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("traction given on edge {0}, which is not a Neumann edge")]
    TractionOffNeumann(usize),
    #[error("traction edge index {0} out of range")]
    EdgeIndex(usize),
    #[error("body force has {got} nodal values, mesh has {want} nodes")]
    BodyLength { got: usize, want: usize },
    #[error("Dirichlet value given for node {0}, which is not on the Dirichlet boundary")]
    NotDirichlet(usize),
    #[error("non-finite load data ({0})")]
    NonFinite(&'static str),
}

impl LoadCase {
    pub fn zero() -> LoadCase {
        LoadCase {
            body: BodyForce::Uniform([0.0; 2]),
            traction: Vec::new(),
            dirichlet: DirichletData::Zero,
        }
    }

    /// The same traction on every Neumann edge.
    pub fn neumann_traction(mesh: &Mesh, g: [f64; 2]) -> Vec<(usize, [f64; 2])> {
        mesh.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tag == EdgeTag::Neumann)
            .map(|(i, _)| (i, g))
            .collect()
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<(), LoadError> {
        let finite = |v: &[f64; 2]| v[0].is_finite() && v[1].is_finite();
        match &self.body {
            BodyForce::Uniform(f) if !finite(f) => return Err(LoadError::NonFinite("body force")),
            BodyForce::PerNode(v) => {
                if v.len() != mesh.num_nodes() {
                    return Err(LoadError::BodyLength {
                        got: v.len(),
                        want: mesh.num_nodes(),
                    });
                }
                if !v.iter().all(finite) {
                    return Err(LoadError::NonFinite("body force"));
                }
            }
            _ => {}
        }
        for (e, g) in &self.traction {
            let edge = mesh.edges.get(*e).ok_or(LoadError::EdgeIndex(*e))?;
            if edge.tag != EdgeTag::Neumann {
                return Err(LoadError::TractionOffNeumann(*e));
            }
            if !finite(g) {
                return Err(LoadError::NonFinite("traction"));
            }
        }
        match &self.dirichlet {
            DirichletData::Zero => {}
            DirichletData::Uniform(w) if !finite(w) => return Err(LoadError::NonFinite("dirichlet")),
            DirichletData::Uniform(_) => {}
            DirichletData::Linear { a, b } => {
                if !(finite(&a[0]) && finite(&a[1]) && finite(b)) {
                    return Err(LoadError::NonFinite("dirichlet"));
                }
            }
            DirichletData::PerNode(map) => {
                let fixed = mesh.dirichlet_nodes();
                for (n, w) in map {
                    if !fixed.get(*n).copied().unwrap_or(false) {
                        return Err(LoadError::NotDirichlet(*n));
                    }
                    if !finite(w) {
                        return Err(LoadError::NonFinite("dirichlet"));
                    }
                }
            }
        }
        Ok(())
    }

    fn dirichlet_value(&self, node: usize, x: [f64; 2]) -> [f64; 2] {
        match &self.dirichlet {
            DirichletData::Zero => [0.0; 2],
            DirichletData::Uniform(w) => *w,
            DirichletData::Linear { a, b } => [
                a[0][0] * x[0] + a[0][1] * x[1] + b[0],
                a[1][0] * x[0] + a[1][1] * x[1] + b[1],
            ],
            DirichletData::PerNode(map) => map.get(&node).copied().unwrap_or([0.0; 2]),
        }
    }

    /// Body force at the centroid of triangle `t` (P1 interpolant).
    pub fn body_at_element(&self, mesh: &Mesh, t: usize) -> [f64; 2] {
        match &self.body {
            BodyForce::Uniform(f) => *f,
            BodyForce::PerNode(v) => {
                let [a, b, c] = mesh.triangles[t];
                [
                    (v[a][0] + v[b][0] + v[c][0]) / 3.0,
                    (v[a][1] + v[b][1] + v[c][1]) / 3.0,
                ]
            }
        }
    }

    pub fn has_body_force(&self) -> bool {
        match &self.body {
            BodyForce::Uniform(f) => f[0] != 0.0 || f[1] != 0.0,
            BodyForce::PerNode(v) => v.iter().any(|f| f[0] != 0.0 || f[1] != 0.0),
        }
    }
}

/// Full dof vector holding `w` at Dirichlet nodes and zero elsewhere.
pub fn dirichlet_lift(disc: &Discretization, case: &LoadCase) -> Vec<f64> {
    let mut u = vec![0.0; disc.layout.num_dofs()];
    for (n, &fixed) in disc.layout.dirichlet.iter().enumerate() {
        if fixed {
            let w = case.dirichlet_value(n, disc.mesh.nodes[n]);
            u[2 * n] = w[0];
            u[2 * n + 1] = w[1];
        }
    }
    u
}

/// `∫_{Γ_N} g·ψ_i` with two-point Gauss quadrature per edge.
pub fn traction_loads(disc: &Discretization, case: &LoadCase) -> Vec<f64> {
    let mut out = vec![0.0; disc.layout.num_dofs()];
    let gp = 0.5 / 3f64.sqrt();
    for &(e, g) in &case.traction {
        let [a, b] = disc.mesh.edges[e].nodes;
        let len = disc.mesh.edge_length(e);
        for s in [0.5 - gp, 0.5 + gp] {
            // shape values (1−s, s), weight len/2
            for (n, phi) in [(a, 1.0 - s), (b, s)] {
                out[2 * n] += 0.5 * len * phi * g[0];
                out[2 * n + 1] += 0.5 * len * phi * g[1];
            }
        }
    }
    out
}

/// `∫ℓ(z)f·ψ_i` with one-point (centroid) quadrature.
pub fn body_loads(disc: &Discretization, laws: &MaterialLaws, z: &[f64], case: &LoadCase) -> Vec<f64> {
    let mut out = vec![0.0; disc.layout.num_dofs()];
    if !case.has_body_force() {
        return out;
    }
    for (t, tri) in disc.mesh.triangles.iter().enumerate() {
        let ell = laws.at(element_z(z, tri)).ell;
        let f = case.body_at_element(&disc.mesh, t);
        let w = ell * disc.area[t] / 3.0;
        for &n in tri {
            out[2 * n] += w * f[0];
            out[2 * n + 1] += w * f[1];
        }
    }
    out
}

pub fn assemble_loads(
    disc: &Discretization,
    laws: &MaterialLaws,
    z: &[f64],
    case: &LoadCase,
) -> Vec<f64> {
    let mut l = body_loads(disc, laws, z, case);
    for (a, b) in l.iter_mut().zip(traction_loads(disc, case)) {
        *a += b;
    }
    l
}
