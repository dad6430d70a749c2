//! Lowest eigenpair of a real symmetric matrix: dense for small problems,
//! Davidson with a diagonal preconditioner beyond.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct EigenSettings {
    /// Dimensions up to this size use the dense solver.
    pub dense_limit: usize,
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub max_subspace: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            dense_limit: 2000,
            residual_tol: 1e-9,
            max_iterations: 200,
            max_subspace: 48,
        }
    }
}

/// Fixes the global sign: the largest-magnitude component (first on ties)
/// becomes positive.
pub fn fix_phase(v: &mut DVector<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

pub fn dense_lowest(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let imin = eig.eigenvalues.imin();
    let mut v = eig.eigenvectors.column(imin).into_owned();
    v.normalize_mut();
    fix_phase(&mut v);
    (eig.eigenvalues[imin], v)
}

/// Matrix-free Davidson for the lowest eigenpair. `sigma` applies the matrix.
pub fn davidson<F>(diag: &DVector<f64>, sigma: F, settings: &EigenSettings) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = diag.len();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut images: Vec<DVector<f64>> = Vec::new();
    let mut guess = DVector::zeros(dim);
    guess[diag.imin()] = 1.0;
    let mut pending = Some(guess);
    let mut residual_norm = f64::INFINITY;

    for _ in 0..settings.max_iterations {
        if let Some(mut t) = pending.take() {
            // two passes of Gram–Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let ov = b.dot(&t);
                    t.axpy(-ov, b, 1.0);
                }
            }
            let norm = t.norm();
            if norm > 1e-12 {
                t /= norm;
                images.push(sigma(&t));
                basis.push(t);
            }
        }
        let k = basis.len();
        let proj = DMatrix::from_fn(k, k, |i, j| basis[i].dot(&images[j]));
        let proj = (&proj + proj.transpose()) * 0.5;
        let (theta, y) = dense_lowest(&proj);
        let mut x = DVector::zeros(dim);
        let mut ax = DVector::zeros(dim);
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &basis[i], 1.0);
            ax.axpy(*yi, &images[i], 1.0);
        }
        let r = &ax - &x * theta;
        residual_norm = r.norm();
        if residual_norm < settings.residual_tol {
            x.normalize_mut();
            fix_phase(&mut x);
            return Ok((theta, x));
        }
        let correction = DVector::from_fn(dim, |i, _| {
            let denom = diag[i] - theta;
            -r[i] / if denom.abs() < 1e-8 { 1e-8_f64.copysign(denom) } else { denom }
        });
        if k >= settings.max_subspace {
            let norm = x.norm();
            basis = vec![&x / norm];
            images = vec![&ax / norm];
        }
        pending = Some(correction);
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iterations,
        residual: residual_norm,
    })
}

/// Lowest eigenpair of an explicitly stored symmetric matrix.
pub fn lowest_eigenpair(m: &DMatrix<f64>, settings: &EigenSettings) -> Result<(f64, DVector<f64>)> {
    if m.nrows() <= settings.dense_limit {
        Ok(dense_lowest(m))
    } else {
        davidson(&m.diagonal(), |v| m * v, settings)
    }
}
