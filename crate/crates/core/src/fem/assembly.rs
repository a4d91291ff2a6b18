use super::layout::Discretization;
use super::sparse::CsrMatrix;
use crate::material::{LawValues, MaterialLaws};
use nalgebra::SMatrix;
use rayon::prelude::*;

/// Phase-field value used for the constitutive laws on a triangle: the mean
/// of the nodal values, each clamped to `[0, 1]` first.
///
/// The laws are constant outside `[0, 1]`, so clamping node by node keeps the
/// forward problem identical for `z` and `clamp(z)`.
pub fn element_z(z: &[f64], tri: &[usize; 3]) -> f64 {
    (z[tri[0]].clamp(0.0, 1.0) + z[tri[1]].clamp(0.0, 1.0) + z[tri[2]].clamp(0.0, 1.0)) / 3.0
}

/// `∂z_T/∂z_i` for a node of the triangle.
pub fn element_z_weight(zi: f64) -> f64 {
    if (0.0..=1.0).contains(&zi) {
        1.0 / 3.0
    } else {
        0.0
    }
}

pub fn element_laws(disc: &Discretization, laws: &MaterialLaws, z: &[f64]) -> Vec<LawValues> {
    disc.mesh
        .triangles
        .iter()
        .map(|tri| laws.at(element_z(z, tri)))
        .collect()
}

struct ElementOut {
    residual: [f64; 6],
    tangent: Option<SMatrix<f64, 6, 6>>,
    energy: f64,
}

/// Internal residual, tangent and stored energy for a displacement field.
pub struct Assembled {
    /// `∫ b(Eu)·Eψ_i − L_i` on free dofs.
    pub residual: Vec<f64>,
    pub tangent: Option<CsrMatrix>,
    /// `Σ_T |T|·min_p ψ(Eu, p)`.
    pub energy: f64,
}

pub fn assemble(
    disc: &Discretization,
    vals: &[LawValues],
    gamma: f64,
    u: &[f64],
    loads: &[f64],
    with_tangent: bool,
) -> Assembled {
    let outs: Vec<ElementOut> = (0..disc.num_triangles())
        .into_par_iter()
        .map(|t| {
            let v = &vals[t];
            let e = disc.element_strain(u, t);
            let rf = v.reduced_flux(gamma, &e);
            let a = disc.area[t];
            let b = &disc.b[t];
            let r = b.transpose() * rf.stress.to_ortho() * a;
            let tangent = with_tangent.then(|| b.transpose() * rf.tangent.0 * b * a);
            ElementOut {
                residual: r.into(),
                tangent,
                energy: a * v.energy_density(&e, &rf.p, Some(gamma)),
            }
        })
        .collect();

    let layout = &disc.layout;
    let mut full = vec![0.0; layout.num_dofs()];
    let mut k = with_tangent.then(|| disc.displacement_matrix());
    let mut energy = 0.0;
    for (t, out) in outs.iter().enumerate() {
        let dofs = disc.element_dofs(t);
        for i in 0..6 {
            full[dofs[i]] += out.residual[i];
        }
        energy += out.energy;
        if let (Some(k), Some(ke)) = (k.as_mut(), out.tangent.as_ref()) {
            for i in 0..6 {
                let Some(fi) = layout.free_index(dofs[i]) else { continue };
                for j in 0..6 {
                    if let Some(fj) = layout.free_index(dofs[j]) {
                        k.add(fi, fj, ke[(i, j)]);
                    }
                }
            }
        }
    }
    let residual = layout
        .free_dofs()
        .iter()
        .map(|&d| full[d] - loads[d])
        .collect();
    Assembled {
        residual,
        tangent: k,
        energy,
    }
}

pub fn assemble_residual_and_tangent(
    disc: &Discretization,
    laws: &MaterialLaws,
    z: &[f64],
    gamma: f64,
    u: &[f64],
    loads: &[f64],
) -> (Vec<f64>, CsrMatrix) {
    let vals = element_laws(disc, laws, z);
    let a = assemble(disc, &vals, gamma, u, loads, true);
    (a.residual, a.tangent.expect("tangent requested"))
}
