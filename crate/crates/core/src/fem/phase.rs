//! P1 matrices and the double-well term for the phase field.

use super::layout::Discretization;
use super::sparse::CsrMatrix;

/// Mass matrix `M` and stiffness matrix `K` for nodal P1 functions.
pub fn phase_matrices(disc: &Discretization) -> (CsrMatrix, CsrMatrix) {
    let mut m = disc.nodal_matrix();
    let mut k = disc.nodal_matrix();
    for (t, tri) in disc.mesh.triangles.iter().enumerate() {
        let a = disc.area[t];
        let g = &disc.grads[t];
        for i in 0..3 {
            for j in 0..3 {
                let mass = if i == j { a / 6.0 } else { a / 12.0 };
                m.add(tri[i], tri[j], mass);
                k.add(tri[i], tri[j], a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
            }
        }
    }
    (m, k)
}

/// `W(z) = z²(1−z)²/2`.
pub fn double_well(z: f64) -> f64 {
    let w = z * (1.0 - z);
    0.5 * w * w
}

/// `W'(z) = z(1−z)(1−2z)`.
pub fn double_well_derivative(z: f64) -> f64 {
    z * (1.0 - z) * (1.0 - 2.0 * z)
}

/// `∫W(z)` with the three-point edge-midpoint rule.
pub fn double_well_integral(disc: &Discretization, z: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, tri) in disc.mesh.triangles.iter().enumerate() {
        let mut w = 0.0;
        for k in 0..3 {
            w += double_well(0.5 * (z[tri[k]] + z[tri[(k + 1) % 3]]));
        }
        s += disc.area[t] / 3.0 * w;
    }
    s
}

/// Gradient of [`double_well_integral`] with respect to nodal values.
pub fn double_well_gradient(disc: &Discretization, z: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; z.len()];
    for (t, tri) in disc.mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let w = disc.area[t] / 3.0 * double_well_derivative(0.5 * (z[a] + z[b])) * 0.5;
            g[a] += w;
            g[b] += w;
        }
    }
    g
}
