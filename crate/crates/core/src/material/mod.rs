//! Pointwise constitutive layer.

pub mod flux;
pub mod laws;
pub mod tensor;

pub use flux::{
    flux_f, flux_f_inverse, h_gamma, pointwise_energy_min, radial_root, reduced_flux_b, HGamma,
    ReducedFlux,
};
pub use laws::{apply_c, apply_h, scalar_laws, smoothstep, LawValues, LawsError, MaterialLaws};
pub use tensor::{DevOperator, DevTensor2, SymOperator, SymTensor2};
