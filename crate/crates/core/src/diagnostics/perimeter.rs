use crate::fem::Mesh;

/// Length of the `{z = level}` isoline of the P1 interpolant.
///
/// Each triangle contributes the segment between the points where the
/// linear interpolant crosses `level` on its edges. A node with value exactly
/// at `level` counts as above it, so every crossing is seen by both triangles
/// sharing the edge in the same place.
pub fn threshold_perimeter(mesh: &Mesh, z: &[f64], level: f64) -> f64 {
    let mut total = 0.0;
    for tri in &mesh.triangles {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(2);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (za, zb) = (z[a], z[b]);
            if (za >= level) != (zb >= level) {
                let t = (level - za) / (zb - za);
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                pts.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
            }
        }
        if pts.len() == 2 {
            total += (pts[1][0] - pts[0][0]).hypot(pts[1][1] - pts[0][1]);
        }
    }
    total
}
