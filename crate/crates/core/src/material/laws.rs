use super::tensor::{DevTensor2, SymTensor2};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LawsError {
    #[error("material parameter `{name}` must be {requirement}, got {value}")]
    Invalid {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Two-phase material laws `c(z) = c0 + c1·ℓ(z)` for the shear modulus μ,
/// Lamé λ, hardening modulus h and yield stress d.
///
/// Index 0 is the soft surrounding phase (z ≤ 0) and index 1 the increment
/// reached by the structural phase (z ≥ 1). The density `ℓ` is the clamped
/// cubic smoothstep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialLaws {
    pub mu0: f64,
    pub mu1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub h0: f64,
    pub h1: f64,
    pub d0: f64,
    pub d1: f64,
}

/// Soft-phase moduli as a fraction of the structural ones.
pub const SOFT_RATIO: f64 = 1e-3;

impl MaterialLaws {
    pub fn new(
        mu: [f64; 2],
        lambda: [f64; 2],
        h: [f64; 2],
        d: [f64; 2],
    ) -> Result<Self, LawsError> {
        let laws = MaterialLaws {
            mu0: mu[0],
            mu1: mu[1],
            lambda0: lambda[0],
            lambda1: lambda[1],
            h0: h[0],
            h1: h[1],
            d0: d[0],
            d1: d[1],
        };
        laws.validate()?;
        Ok(laws)
    }

    /// Laws built from the structural moduli: the soft phase gets
    /// `SOFT_RATIO` of μ, λ, h, and the yield stress is split equally,
    /// `d0 = d1 = d_total / 2`.
    pub fn from_stiff(mu: f64, lambda: f64, h: f64, d_total: f64) -> Result<Self, LawsError> {
        let soft = SOFT_RATIO;
        MaterialLaws::new(
            [soft * mu, (1.0 - soft) * mu],
            [soft * lambda, (1.0 - soft) * lambda],
            [soft * h, (1.0 - soft) * h],
            [0.5 * d_total, 0.5 * d_total],
        )
    }

    pub fn validate(&self) -> Result<(), LawsError> {
        let positive = [
            ("mu0", self.mu0),
            ("lambda0", self.lambda0),
            ("h0", self.h0),
            ("d0", self.d0),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(LawsError::Invalid {
                    name,
                    requirement: "finite and > 0",
                    value,
                });
            }
        }
        let nonneg = [
            ("mu1", self.mu1),
            ("lambda1", self.lambda1),
            ("h1", self.h1),
            ("d1", self.d1),
        ];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(LawsError::Invalid {
                    name,
                    requirement: "finite and >= 0",
                    value,
                });
            }
        }
        Ok(())
    }

    /// Evaluate all laws and their z-derivatives at `z`.
    pub fn at(&self, z: f64) -> LawValues {
        let (ell, dell) = smoothstep(z);
        LawValues {
            z,
            ell,
            dell,
            mu: self.mu0 + self.mu1 * ell,
            dmu: self.mu1 * dell,
            lambda: self.lambda0 + self.lambda1 * ell,
            dlambda: self.lambda1 * dell,
            h: self.h0 + self.h1 * ell,
            dh: self.h1 * dell,
            d: self.d0 + self.d1 * ell,
            dd: self.d1 * dell,
        }
    }

    /// min over z of μ.
    pub fn alpha_mu(&self) -> f64 {
        self.mu0
    }

    /// min over z of h.
    pub fn alpha_h(&self) -> f64 {
        self.h0
    }

    /// `M_d = max{d(z) : z ∈ [0,1]}`.
    pub fn max_yield(&self) -> f64 {
        self.d0 + self.d1
    }

    /// Strong monotonicity constant of the flux F: `2 min μ + min h`.
    pub fn flux_monotonicity(&self) -> f64 {
        2.0 * self.alpha_mu() + self.alpha_h()
    }

    /// Lipschitz constant of the reduced flux b (largest eigenvalue of its
    /// tangent over all z and γ).
    pub fn reduced_flux_lipschitz(&self) -> f64 {
        let mu = self.mu0 + self.mu1;
        let lambda = self.lambda0 + self.lambda1;
        (2.0 * mu + 2.0 * lambda).max(2.0 * mu)
    }

    /// Strong monotonicity constant of the reduced flux b (smallest eigenvalue
    /// of its tangent over all z and γ).
    pub fn reduced_flux_monotonicity(&self) -> f64 {
        // volumetric block 2μ+2λ, deviatoric block ≥ 2μh/(2μ+h); both are
        // increasing in the moduli, so the soft phase gives the minimum
        let (mu, lambda, h) = (self.mu0, self.lambda0, self.h0);
        (2.0 * mu + 2.0 * lambda).min(2.0 * mu * h / (2.0 * mu + h))
    }
}

impl Default for MaterialLaws {
    /// Nondimensional structural phase μ = 1, λ = 1, h = 0.1, total yield
    /// stress 0.02.
    fn default() -> Self {
        MaterialLaws::from_stiff(1.0, 1.0, 0.1, 0.02).expect("default laws are valid")
    }
}

/// Clamped cubic smoothstep `3s² − 2s³` and its derivative.
pub fn smoothstep(z: f64) -> (f64, f64) {
    if z <= 0.0 {
        (0.0, 0.0)
    } else if z >= 1.0 {
        (1.0, 0.0)
    } else {
        (z * z * (3.0 - 2.0 * z), 6.0 * z * (1.0 - z))
    }
}

/// Material point: all scalar laws evaluated at one value of z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawValues {
    pub z: f64,
    pub ell: f64,
    pub dell: f64,
    pub mu: f64,
    pub dmu: f64,
    pub lambda: f64,
    pub dlambda: f64,
    pub h: f64,
    pub dh: f64,
    pub d: f64,
    pub dd: f64,
}

impl LawValues {
    /// `C(z)E = 2μE + λ tr(E) I`.
    pub fn apply_c(&self, e: &SymTensor2) -> SymTensor2 {
        let lt = self.lambda * e.trace();
        SymTensor2::new(
            2.0 * self.mu * e.xx + lt,
            2.0 * self.mu * e.yy + lt,
            2.0 * self.mu * e.xy,
        )
    }

    /// `C'(z)E`, the z-derivative of the elasticity tensor applied to E.
    pub fn apply_dc(&self, e: &SymTensor2) -> SymTensor2 {
        let lt = self.dlambda * e.trace();
        SymTensor2::new(
            2.0 * self.dmu * e.xx + lt,
            2.0 * self.dmu * e.yy + lt,
            2.0 * self.dmu * e.xy,
        )
    }

    pub fn apply_h(&self, q: &DevTensor2) -> DevTensor2 {
        *q * self.h
    }
}

/// Free-function form of [`MaterialLaws::at`].
pub fn scalar_laws(z: f64, laws: &MaterialLaws) -> LawValues {
    laws.at(z)
}

pub fn apply_c(z: f64, e: &SymTensor2, laws: &MaterialLaws) -> SymTensor2 {
    laws.at(z).apply_c(e)
}

pub fn apply_h(z: f64, q: &DevTensor2, laws: &MaterialLaws) -> DevTensor2 {
    laws.at(z).apply_h(q)
}
