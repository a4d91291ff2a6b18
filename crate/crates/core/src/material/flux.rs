//! Regularized dissipation `h_γ`, the local flux `F` with its inverse, and the
//! reduced stress `b(E) = C(E − F⁻¹(Π_D C E))`.

use super::laws::{LawValues, MaterialLaws};
use super::tensor::{DevOperator, DevTensor2, SymOperator, SymTensor2};
use nalgebra::{Matrix2, Matrix3};

#[derive(Clone, Copy, Debug)]
pub struct HGamma {
    pub value: f64,
    pub grad: DevTensor2,
    pub hess: DevOperator,
}

/// `h_γ(Q) = √(|Q|² + γ⁻²) − γ⁻¹` with gradient and Hessian.
pub fn h_gamma(gamma: f64, q: &DevTensor2) -> HGamma {
    let g = 1.0 / gamma;
    let n2 = q.norm_sq();
    let s = (n2 + g * g).sqrt();
    // s − g loses everything when |Q| ≪ g; |Q|²/(s + g) is the same number
    let value = n2 / (s + g);
    let grad = *q * (1.0 / s);
    let v = q.to_ortho();
    let hess = (Matrix2::identity() - v * v.transpose() / (s * s)) / s;
    HGamma {
        value,
        grad,
        hess: DevOperator(hess),
    }
}

/// Value of `h_γ` only. `gamma = None` means γ = ∞, i.e. `|Q|`.
pub fn h_gamma_value(gamma: Option<f64>, q: &DevTensor2) -> f64 {
    match gamma {
        Some(gamma) => h_gamma(gamma, q).value,
        None => q.norm(),
    }
}

/// Root of `a·s + d·s/√(s² + γ⁻²) = r` for `r ≥ 0`.
///
/// The left side is increasing and concave in `s ≥ 0`, so Newton started
/// below the root climbs monotonically; bisection on `[0, r/a]` catches any
/// step that leaves the bracket.
pub fn radial_root(a: f64, d: f64, gamma: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let g2 = 1.0 / (gamma * gamma);
    let phi = |s: f64| {
        let w = (s * s + g2).sqrt();
        (a * s + d * s / w - r, a + d * g2 / (w * w * w))
    };
    let tol = 1e-14_f64.max(8.0 * f64::EPSILON * r);
    let (mut lo, mut hi) = (0.0_f64, r / a);
    let mut s = r / (a + d * gamma);
    for _ in 0..200 {
        let (f, df) = phi(s);
        if f.abs() <= tol {
            return s;
        }
        if f < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let mut next = s - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == s || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        s = next;
    }
    s
}

impl LawValues {
    /// Flux `F(Q) = (2μ + h)Q + d ∇h_γ(Q)`.
    pub fn flux_f(&self, gamma: f64, q: &DevTensor2) -> DevTensor2 {
        *q * (2.0 * self.mu + self.h) + h_gamma(gamma, q).grad * self.d
    }

    /// `F⁻¹(R)`: F is radial, so the inverse is `s·R/|R|` with `s` the radial
    /// root.
    pub fn flux_f_inverse(&self, gamma: f64, r: &DevTensor2) -> DevTensor2 {
        let rn = r.norm();
        if rn == 0.0 {
            return DevTensor2::ZERO;
        }
        let s = radial_root(2.0 * self.mu + self.h, self.d, gamma, rn);
        *r * (s / rn)
    }

    /// `∂F/∂Q = (2μ + h)Id + d·hess h_γ(Q)`.
    pub fn flux_jacobian(&self, gamma: f64, q: &DevTensor2) -> DevOperator {
        let hess = h_gamma(gamma, q).hess.0;
        DevOperator(Matrix2::identity() * (2.0 * self.mu + self.h) + hess * self.d)
    }

    /// Elasticity tensor in orthonormal coordinates.
    pub fn c_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(
            2.0 * self.mu + 2.0 * self.lambda,
            2.0 * self.mu,
            2.0 * self.mu,
        ))
    }

    pub fn reduced_flux(&self, gamma: f64, e: &SymTensor2) -> ReducedFlux {
        let two_mu = 2.0 * self.mu;
        let p = self.flux_f_inverse(gamma, &(e.dev() * two_mu));
        let stress = self.apply_c(&(*e - p.to_sym()));
        // dp/dE = M⁻¹ 2μ Π_D, so the deviatoric block of the tangent is
        // 2μ(Id − 2μ M⁻¹)
        let m_inv = self
            .flux_jacobian(gamma, &p)
            .0
            .try_inverse()
            .expect("flux Jacobian is positive definite");
        let dev_block = (Matrix2::identity() - m_inv * two_mu) * two_mu;
        let mut t = Matrix3::zeros();
        t[(0, 0)] = two_mu + 2.0 * self.lambda;
        t.fixed_view_mut::<2, 2>(1, 1).copy_from(&dev_block);
        // symmetrize away roundoff in the 2×2 inverse
        let t = (t + t.transpose()) * 0.5;
        ReducedFlux {
            stress,
            tangent: SymOperator(t),
            p,
        }
    }

    /// `min_p ½C(E−p)·(E−p) + ½h|p|² + d·h_γ(p)` and its minimizer.
    pub fn pointwise_energy_min(&self, gamma: f64, e: &SymTensor2) -> (DevTensor2, f64) {
        let p = self.flux_f_inverse(gamma, &(e.dev() * (2.0 * self.mu)));
        (p, self.energy_density(e, &p, Some(gamma)))
    }

    /// Pointwise energy integrand at total strain `e` and plastic strain `p`.
    /// `gamma = None` uses the exact dissipation `|p|`.
    pub fn energy_density(&self, e: &SymTensor2, p: &DevTensor2, gamma: Option<f64>) -> f64 {
        let eps = *e - p.to_sym();
        0.5 * self.apply_c(&eps).dot(&eps)
            + 0.5 * self.h * p.norm_sq()
            + self.d * h_gamma_value(gamma, p)
    }
}

/// Reduced stress, its consistent tangent and the plastic strain it used.
#[derive(Clone, Copy, Debug)]
pub struct ReducedFlux {
    pub stress: SymTensor2,
    pub tangent: SymOperator,
    pub p: DevTensor2,
}

pub fn flux_f(z: f64, gamma: f64, q: &DevTensor2, laws: &MaterialLaws) -> DevTensor2 {
    laws.at(z).flux_f(gamma, q)
}

pub fn flux_f_inverse(z: f64, gamma: f64, r: &DevTensor2, laws: &MaterialLaws) -> DevTensor2 {
    laws.at(z).flux_f_inverse(gamma, r)
}

pub fn reduced_flux_b(z: f64, gamma: f64, e: &SymTensor2, laws: &MaterialLaws) -> ReducedFlux {
    laws.at(z).reduced_flux(gamma, e)
}

pub fn pointwise_energy_min(
    z: f64,
    gamma: f64,
    e: &SymTensor2,
    laws: &MaterialLaws,
) -> (DevTensor2, f64) {
    laws.at(z).pointwise_energy_min(gamma, e)
}
