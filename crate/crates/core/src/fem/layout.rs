use super::mesh::Mesh;
use super::sparse::CsrMatrix;
use crate::material::SymTensor2;
use nalgebra::SMatrix;
use std::f64::consts::FRAC_1_SQRT_2;

/// Strain-displacement matrix in orthonormal strain coordinates; columns
/// are the six element dofs `[u0x, u0y, u1x, u1y, u2x, u2y]`.
pub type BMatrix = SMatrix<f64, 3, 6>;

/// Displacement unknowns: two per node, Dirichlet nodes eliminated.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldLayout {
    pub num_nodes: usize,
    pub dirichlet: Vec<bool>,
    free_of_dof: Vec<Option<usize>>,
    dof_of_free: Vec<usize>,
}

impl FieldLayout {
    pub fn new(mesh: &Mesh) -> FieldLayout {
        let dirichlet = mesh.dirichlet_nodes();
        let mut free_of_dof = vec![None; 2 * mesh.num_nodes()];
        let mut dof_of_free = Vec::new();
        for (n, &fixed) in dirichlet.iter().enumerate() {
            if !fixed {
                for c in 0..2 {
                    free_of_dof[2 * n + c] = Some(dof_of_free.len());
                    dof_of_free.push(2 * n + c);
                }
            }
        }
        FieldLayout {
            num_nodes: mesh.num_nodes(),
            dirichlet,
            free_of_dof,
            dof_of_free,
        }
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    pub fn num_free(&self) -> usize {
        self.dof_of_free.len()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_of_dof[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.dof_of_free
    }

    pub fn extract_free(&self, full: &[f64]) -> Vec<f64> {
        self.dof_of_free.iter().map(|&d| full[d]).collect()
    }

    /// `full[free] += a·x`.
    pub fn add_free(&self, full: &mut [f64], a: f64, x: &[f64]) {
        for (k, &d) in self.dof_of_free.iter().enumerate() {
            full[d] += a * x[k];
        }
    }

    pub fn expand_free(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_dofs()];
        self.add_free(&mut full, 1.0, x);
        full
    }
}

/// Mesh plus everything derived from it once: element geometry, dof layout
/// and sparsity patterns.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub layout: FieldLayout,
    pub area: Vec<f64>,
    /// Gradients of the three barycentric shape functions per triangle.
    pub grads: Vec<[[f64; 2]; 3]>,
    pub b: Vec<BMatrix>,
    disp_pattern: CsrMatrix,
    node_pattern: CsrMatrix,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Discretization {
        let layout = FieldLayout::new(&mesh);
        let mut area = Vec::with_capacity(mesh.num_triangles());
        let mut grads = Vec::with_capacity(mesh.num_triangles());
        let mut bs = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let [a, b, c] = mesh.triangles[t];
            let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
            let ar = mesh.signed_area(t);
            let inv = 0.5 / ar;
            let g = [
                [(pb[1] - pc[1]) * inv, (pc[0] - pb[0]) * inv],
                [(pc[1] - pa[1]) * inv, (pa[0] - pc[0]) * inv],
                [(pa[1] - pb[1]) * inv, (pb[0] - pa[0]) * inv],
            ];
            let s = FRAC_1_SQRT_2;
            let mut bm = BMatrix::zeros();
            for k in 0..3 {
                let [gx, gy] = g[k];
                bm[(0, 2 * k)] = gx * s;
                bm[(1, 2 * k)] = gx * s;
                bm[(2, 2 * k)] = gy * s;
                bm[(0, 2 * k + 1)] = gy * s;
                bm[(1, 2 * k + 1)] = -gy * s;
                bm[(2, 2 * k + 1)] = gx * s;
            }
            area.push(ar);
            grads.push(g);
            bs.push(bm);
        }
        let disp_groups = mesh.triangles.iter().map(|tri| {
            let mut g = Vec::with_capacity(6);
            for &n in tri {
                for c in 0..2 {
                    if let Some(f) = layout.free_index(2 * n + c) {
                        g.push(f);
                    }
                }
            }
            g
        });
        let disp_pattern = CsrMatrix::from_groups(layout.num_free(), disp_groups);
        let node_pattern = CsrMatrix::from_groups(mesh.num_nodes(), mesh.triangles.iter());
        Discretization {
            mesh,
            layout,
            area,
            grads,
            b: bs,
            disp_pattern,
            node_pattern,
        }
    }

    pub fn num_triangles(&self) -> usize {
        self.area.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangles[t];
        [2 * a, 2 * a + 1, 2 * b, 2 * b + 1, 2 * c, 2 * c + 1]
    }

    pub fn element_displacements(&self, u: &[f64], t: usize) -> SMatrix<f64, 6, 1> {
        let d = self.element_dofs(t);
        SMatrix::<f64, 6, 1>::from_fn(|i, _| u[d[i]])
    }

    /// Symmetric gradient of the P1 interpolant of `u` on triangle `t`.
    pub fn element_strain(&self, u: &[f64], t: usize) -> SymTensor2 {
        let [a, b, c] = self.mesh.triangles[t];
        let g = &self.grads[t];
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for (k, n) in [a, b, c].into_iter().enumerate() {
            let (ux, uy) = (u[2 * n], u[2 * n + 1]);
            xx += ux * g[k][0];
            yy += uy * g[k][1];
            xy += 0.5 * (ux * g[k][1] + uy * g[k][0]);
        }
        SymTensor2::new(xx, yy, xy)
    }

    /// Zero matrix on the free displacement unknowns.
    pub fn displacement_matrix(&self) -> CsrMatrix {
        self.disp_pattern.zeroed()
    }

    /// Zero matrix on the nodal (phase-field) unknowns.
    pub fn nodal_matrix(&self) -> CsrMatrix {
        self.node_pattern.zeroed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{generate_rect_mesh, EdgeTag, Split, TagSpec};

    fn disc() -> Discretization {
        let tags = TagSpec {
            left: EdgeTag::Dirichlet,
            ..TagSpec::uniform(EdgeTag::Free)
        };
        Discretization::new(generate_rect_mesh(3, 2, 1.5, 1.0, Split::Crossed, &tags).unwrap())
    }

    fn field(d: &Discretization, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        d.mesh.nodes.iter().flat_map(|&x| f(x)).collect()
    }

    #[test]
    fn rigid_motions_are_strain_free() {
        let d = disc();
        let trans = field(&d, |_| [0.3, -1.2]);
        let rot = field(&d, |x| [-x[1], x[0]]);
        for t in 0..d.num_triangles() {
            assert!(d.element_strain(&trans, t).norm() < 1e-14);
            assert!(d.element_strain(&rot, t).norm() < 1e-14);
        }
    }

    #[test]
    fn linear_field_gives_sym_gradient() {
        let d = disc();
        let a = [[0.2, -0.7], [0.4, 1.1]];
        let u = field(&d, |x| {
            [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
        });
        let want = SymTensor2::sym_of(a);
        for t in 0..d.num_triangles() {
            let e = d.element_strain(&u, t);
            assert!((e - want).norm() < 1e-13);
            let bo = d.b[t] * d.element_displacements(&u, t);
            assert!((bo - want.to_ortho()).norm() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_dofs_are_eliminated() {
        let d = disc();
        let l = &d.layout;
        assert_eq!(l.num_free(), 2 * (d.num_nodes() - 3));
        for (n, &fixed) in l.dirichlet.iter().enumerate() {
            assert_eq!(l.free_index(2 * n).is_none(), fixed);
        }
        let x: Vec<f64> = (0..l.num_free()).map(|i| i as f64).collect();
        assert_eq!(l.extract_free(&l.expand_free(&x)), x);
    }
}
