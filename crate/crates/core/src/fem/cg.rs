use super::sparse::{dot, norm, CsrMatrix};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    pub rtol: f64,
    /// Iteration cap as a multiple of the system size.
    pub max_iter_factor: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rtol: 1e-10,
            max_iter_factor: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("conjugate gradient failed after {iterations} iterations (relative residual {relative_residual:e}): {reason}")]
pub struct LinearSolveFailure {
    pub iterations: usize,
    pub relative_residual: f64,
    pub reason: &'static str,
}

/// Jacobi-preconditioned conjugate gradient for SPD `a`, starting from `x`.
/// Stops when `‖b − Ax‖ ≤ rtol·‖b‖`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    opts: &CgOptions,
) -> Result<CgInfo, LinearSolveFailure> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgInfo {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul_vec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut zv: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut ap = vec![0.0; n];
    let max_iter = (opts.max_iter_factor * n).max(1);
    let target = opts.rtol * bnorm;
    let mut rel = norm(&r) / bnorm;
    for it in 0..=max_iter {
        let rn = norm(&r);
        rel = rn / bnorm;
        if !rel.is_finite() {
            break;
        }
        if rn <= target {
            return Ok(CgInfo {
                iterations: it,
                relative_residual: rel,
            });
        }
        if it == max_iter {
            break;
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinearSolveFailure {
                iterations: it,
                relative_residual: rel,
                reason: "matrix is not positive definite",
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            zv[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zv[i] + beta * p[i];
        }
    }
    Err(LinearSolveFailure {
        iterations: max_iter,
        relative_residual: rel,
        reason: "iteration limit reached",
    })
}
