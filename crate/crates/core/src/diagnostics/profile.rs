//! Modica–Mortola energy of the optimal 1D transition profile.
//!
//! The logistic `z(x) = 1/(1 + e^{−x/δ})` satisfies the equipartition
//! `δ/2 z'² = W(z)/δ`, so its energy is `∫₀¹ √(2W(s)) ds = 1/6` per unit
//! interface length. We interpolate it on a P1 strip mesh and evaluate the
//! same discrete interfacial energy the optimizer uses.

use crate::fem::{generate_rect_mesh, Discretization, EdgeTag, Split, TagSpec};
use crate::optimizer::{interfacial_energy, PhaseOperators};

pub const SHARP_CONSTANT: f64 = 1.0 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileResult {
    pub delta: f64,
    pub h: f64,
    pub cells: usize,
    /// Both parts are per unit interface length.
    pub gradient_part: f64,
    pub well_part: f64,
    pub energy: f64,
    /// `energy − 1/6`.
    pub error: f64,
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Profile across `x = ½` on the strip `[0, 1] × [0, h]` with `h = δ/ratio`.
pub fn mm_profile(delta: f64, h_ratio: f64) -> ProfileResult {
    assert!(delta > 0.0 && h_ratio > 0.0);
    let cells = (h_ratio / delta).ceil() as usize;
    let h = 1.0 / cells as f64;
    let tags = TagSpec {
        left: EdgeTag::Dirichlet,
        ..TagSpec::uniform(EdgeTag::Free)
    };
    let mesh = generate_rect_mesh(cells, 1, 1.0, h, Split::Diagonal, &tags).expect("strip mesh is valid");
    let z: Vec<f64> = mesh.nodes.iter().map(|x| logistic((x[0] - 0.5) / delta)).collect();
    let disc = Discretization::new(mesh);
    let phase = PhaseOperators::new(&disc);
    let (ge, dw) = interfacial_energy(&disc, &z, delta, &phase);
    let (gradient_part, well_part) = (ge / h, dw / h);
    let energy = gradient_part + well_part;
    ProfileResult {
        delta,
        h,
        cells,
        gradient_part,
        well_part,
        energy,
        error: energy - SHARP_CONSTANT,
    }
}
