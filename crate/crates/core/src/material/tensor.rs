//! Small 2×2 symmetric and deviatoric tensors.
//!
//! Both types store plain matrix entries. Linear algebra on them is done in an
//! orthonormal coordinate system (w.r.t. the Frobenius product `A·B = Σ AᵢⱼBᵢⱼ`):
//!
//! * symmetric: `[tr/√2, (xx−yy)/√2, √2·xy]`
//! * deviatoric: `[√2·xx, √2·xy]`
//!
//! so that the deviatoric coordinates of a symmetric tensor are simply its last
//! two orthonormal coordinates, and operators become ordinary symmetric matrices.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use std::f64::consts::SQRT_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

/// Symmetric trace-free 2×2 tensor `[[xx, xy], [xy, -xx]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DevTensor2 {
    pub xx: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub fn identity() -> Self {
        SymTensor2::new(1.0, 1.0, 0.0)
    }

    /// Symmetric part of a full 2×2 matrix given row-major.
    pub fn sym_of(a: [[f64; 2]; 2]) -> Self {
        SymTensor2::new(a[0][0], a[1][1], 0.5 * (a[0][1] + a[1][0]))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Deviatoric projection `E − (tr E / 2) I`.
    pub fn dev(&self) -> DevTensor2 {
        DevTensor2::new(0.5 * (self.xx - self.yy), self.xy)
    }

    pub fn dot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_ortho(&self) -> Vector3<f64> {
        Vector3::new(
            (self.xx + self.yy) * INV_SQRT_2,
            (self.xx - self.yy) * INV_SQRT_2,
            self.xy * SQRT_2,
        )
    }

    pub fn from_ortho(v: &Vector3<f64>) -> Self {
        SymTensor2::new(
            (v[0] + v[1]) * INV_SQRT_2,
            (v[0] - v[1]) * INV_SQRT_2,
            v[2] * INV_SQRT_2,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

impl DevTensor2 {
    pub const ZERO: DevTensor2 = DevTensor2 { xx: 0.0, xy: 0.0 };

    pub fn new(xx: f64, xy: f64) -> Self {
        DevTensor2 { xx, xy }
    }

    pub fn yy(&self) -> f64 {
        -self.xx
    }

    pub fn dot(&self, other: &DevTensor2) -> f64 {
        2.0 * (self.xx * other.xx + self.xy * other.xy)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_sym(&self) -> SymTensor2 {
        SymTensor2::new(self.xx, -self.xx, self.xy)
    }

    pub fn to_ortho(&self) -> Vector2<f64> {
        Vector2::new(self.xx * SQRT_2, self.xy * SQRT_2)
    }

    pub fn from_ortho(v: &Vector2<f64>) -> Self {
        DevTensor2::new(v[0] * INV_SQRT_2, v[1] * INV_SQRT_2)
    }

    /// `R Q Rᵀ` for the rotation by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        // A deviatoric tensor is a spin-2 object: rotating the frame by θ
        // rotates its (xx, xy) coordinates by 2θ.
        let (s, c) = (2.0 * theta).sin_cos();
        DevTensor2::new(c * self.xx - s * self.xy, s * self.xx + c * self.xy)
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite()
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, o: SymTensor2) {
        *self = *self + o;
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        SymTensor2::new(self.xx * s, self.yy * s, self.xy * s)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        t * self
    }
}

impl Add for DevTensor2 {
    type Output = DevTensor2;
    fn add(self, o: DevTensor2) -> DevTensor2 {
        DevTensor2::new(self.xx + o.xx, self.xy + o.xy)
    }
}

impl AddAssign for DevTensor2 {
    fn add_assign(&mut self, o: DevTensor2) {
        *self = *self + o;
    }
}

impl Sub for DevTensor2 {
    type Output = DevTensor2;
    fn sub(self, o: DevTensor2) -> DevTensor2 {
        DevTensor2::new(self.xx - o.xx, self.xy - o.xy)
    }
}

impl Neg for DevTensor2 {
    type Output = DevTensor2;
    fn neg(self) -> DevTensor2 {
        DevTensor2::new(-self.xx, -self.xy)
    }
}

impl Mul<f64> for DevTensor2 {
    type Output = DevTensor2;
    fn mul(self, s: f64) -> DevTensor2 {
        DevTensor2::new(self.xx * s, self.xy * s)
    }
}

impl Mul<DevTensor2> for f64 {
    type Output = DevTensor2;
    fn mul(self, t: DevTensor2) -> DevTensor2 {
        t * self
    }
}

/// Linear map on deviatoric tensors, stored in orthonormal coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevOperator(pub Matrix2<f64>);

/// Linear map on symmetric tensors, stored in orthonormal coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymOperator(pub Matrix3<f64>);

impl DevOperator {
    pub fn identity() -> Self {
        DevOperator(Matrix2::identity())
    }

    pub fn apply(&self, q: &DevTensor2) -> DevTensor2 {
        DevTensor2::from_ortho(&(self.0 * q.to_ortho()))
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    /// Eigenvalues in ascending order (the operator is always symmetric here).
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let half = 0.5 * (m[(0, 0)] - m[(1, 1)]);
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        let r = half.hypot(off);
        [mean - r, mean + r]
    }
}

impl SymOperator {
    pub fn apply(&self, e: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_ortho(&(self.0 * e.to_ortho()))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn bilinear(&self, a: &SymTensor2, b: &SymTensor2) -> f64 {
        a.to_ortho().dot(&(self.0 * b.to_ortho()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ortho_coordinates_preserve_inner_product() {
        let a = SymTensor2::new(0.3, -1.2, 0.7);
        let b = SymTensor2::new(-2.0, 0.5, 1.1);
        assert!((a.dot(&b) - a.to_ortho().dot(&b.to_ortho())).abs() < 1e-14);
        let back = SymTensor2::from_ortho(&a.to_ortho());
        assert!((back - a).norm() < 1e-15);

        let q = DevTensor2::new(0.4, -0.9);
        let r = DevTensor2::new(1.5, 0.2);
        assert!((q.dot(&r) - q.to_ortho().dot(&r.to_ortho())).abs() < 1e-14);
        assert!((q.dot(&r) - q.to_sym().dot(&r.to_sym())).abs() < 1e-14);
    }

    #[test]
    fn dev_is_trace_free_and_matches_ortho_tail() {
        let e = SymTensor2::new(2.0, -0.5, 0.25);
        let d = e.dev();
        assert_eq!(d.to_sym().trace(), 0.0);
        let o = e.to_ortho();
        let od = d.to_ortho();
        assert!((o[1] - od[0]).abs() < 1e-15 && (o[2] - od[1]).abs() < 1e-15);
        // squared norm equals the sum of squared matrix entries
        let m = d.to_sym();
        let entries = m.xx * m.xx + m.yy * m.yy + 2.0 * m.xy * m.xy;
        assert!((d.norm_sq() - entries).abs() < 1e-15);
    }

    #[test]
    fn rotation_matches_matrix_conjugation() {
        let q = DevTensor2::new(0.7, -0.3);
        let theta: f64 = 0.37;
        let (s, c) = theta.sin_cos();
        let r = [[c, -s], [s, c]];
        let a = [[q.xx, q.xy], [q.xy, -q.xx]];
        let mut ra = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        ra[i][j] += r[i][k] * a[k][l] * r[j][l];
                    }
                }
            }
        }
        let rq = q.rotated(theta);
        assert!((rq.xx - ra[0][0]).abs() < 1e-14);
        assert!((rq.xy - ra[0][1]).abs() < 1e-14);
        assert!((-rq.xx - ra[1][1]).abs() < 1e-14);
    }
}
