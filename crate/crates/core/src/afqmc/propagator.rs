use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::detops::{greens_function, GreensFunction, TrialWavefunction};
use crate::error::Result;
use crate::factorize::CholeskyFactorization;

use super::walker::Walker;

type C64 = Complex64;

/// Largest magnitude allowed for any force-bias component.
pub const FORCE_BIAS_CAP: f64 = 1.0;

const TAYLOR_MAX_TERMS: usize = 24;

/// Everything a step needs that does not depend on the walker.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub dtau: f64,
    /// `exp(−Δτ v0'/2)` with `v0' = v0 + Σ_γ l̄_γ L^γ`.
    pub half_one_body: DMatrix<C64>,
    pub vectors: Vec<DMatrix<f64>>,
    /// Trial expectation `l̄_γ = ⟨Σ_pq L^γ_pq E_pq⟩` subtracted from every
    /// field operator.
    pub mean_field: Vec<f64>,
    /// Scalar part of the shifted Hamiltonian, `E_c − ½ Σ_γ l̄_γ²`.
    pub constant: f64,
}

/// `l̄_γ = Σ_pq L^γ_pq (P^α + P^β)_pq` from the trial's variational 1-RDM.
pub fn mean_field_shift(f: &CholeskyFactorization, trial: &TrialWavefunction) -> Vec<f64> {
    let [pa, pb] = trial.one_rdm();
    let p = pa + pb;
    f.vectors.iter().map(|l| l.component_mul(&p).sum()).collect()
}

pub fn build_one_body_propagator(
    f: &CholeskyFactorization,
    e_core: f64,
    mean_field: Vec<f64>,
    dtau: f64,
) -> Propagator {
    let mut v0 = f.v0.clone();
    for (l, s) in f.vectors.iter().zip(&mean_field) {
        v0 += l * *s;
    }
    let v0 = (&v0 + v0.transpose()) * 0.5;
    let eig = SymmetricEigen::new(v0);
    let u = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |p, k| u[(p, k)] * (-0.5 * dtau * eig.eigenvalues[k]).exp());
    let half = scaled * u.transpose();
    Propagator {
        dtau,
        half_one_body: half.map(|x| C64::new(x, 0.0)),
        vectors: f.vectors.clone(),
        constant: e_core - 0.5 * mean_field.iter().map(|s| s * s).sum::<f64>(),
        mean_field,
    }
}

impl Propagator {
    pub fn n_fields(&self) -> usize {
        self.vectors.len()
    }

    /// `i √Δτ Σ_γ x_γ L^γ`.
    pub fn field_operator(&self, x: &[C64]) -> DMatrix<C64> {
        let n = self.half_one_body.nrows();
        let mut a = DMatrix::<C64>::zeros(n, n);
        let scale = C64::new(0.0, self.dtau.sqrt());
        for (l, xg) in self.vectors.iter().zip(x) {
            let c = scale * xg;
            a.zip_apply(l, |acc, v| *acc += c * v);
        }
        a
    }

    /// `e^{−Δτ v0'/2} e^{A(x)} e^{−Δτ v0'/2} Φ`.
    pub fn apply(&self, phi: &DMatrix<C64>, x: &[C64]) -> DMatrix<C64> {
        let a = self.field_operator(x);
        let half = &self.half_one_body;
        half * taylor_apply(&a, &(half * phi))
    }

    /// Force bias from mixed Green's functions:
    /// `x̄_γ = −i √Δτ (Σ_pq L^γ_pq G_pq − l̄_γ)`, capped component-wise.
    pub fn force_bias(&self, g: &GreensFunction) -> Vec<C64> {
        let total = &g.alpha + &g.beta;
        let scale = C64::new(0.0, -self.dtau.sqrt());
        self.vectors
            .iter()
            .zip(&self.mean_field)
            .map(|(l, s)| {
                let mut ev = C64::new(-s, 0.0);
                for (lv, gv) in l.iter().zip(total.iter()) {
                    ev += gv * lv;
                }
                let xb = scale * ev;
                if xb.norm() > FORCE_BIAS_CAP {
                    xb * (FORCE_BIAS_CAP / xb.norm())
                } else {
                    xb
                }
            })
            .collect()
    }
}

/// `exp(A) Φ` by Taylor series, summed until the terms stop contributing.
pub fn taylor_apply(a: &DMatrix<C64>, phi: &DMatrix<C64>) -> DMatrix<C64> {
    let mut sum = phi.clone();
    let mut term = phi.clone();
    for k in 1..=TAYLOR_MAX_TERMS {
        term = (a * term) / C64::new(k as f64, 0.0);
        sum += &term;
        if term.norm() <= 1e-16 * sum.norm() {
            break;
        }
    }
    sum
}

pub fn compute_force_bias(trial: &TrialWavefunction, walker: &Walker, prop: &Propagator) -> Result<Vec<C64>> {
    Ok(prop.force_bias(&greens_function(trial, &walker.slater)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorization(v0: DMatrix<f64>, vectors: Vec<DMatrix<f64>>) -> CholeskyFactorization {
        CholeskyFactorization {
            n_spatial: v0.nrows(),
            vectors,
            v0,
            residual_max: 0.0,
            residual_history: vec![],
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let v0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.5]);
        let p = build_one_body_propagator(&factorization(v0, vec![]), 0.0, vec![], 0.0);
        assert!((p.half_one_body.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_one_body() {
        let v0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 0.5, 2.0]));
        let p = build_one_body_propagator(&factorization(v0, vec![]), 0.0, vec![], 0.1);
        for (i, d) in [-1.0f64, 0.5, 2.0].iter().enumerate() {
            assert!((p.half_one_body[(i, i)].re - (-0.05 * d).exp()).abs() < 1e-15);
        }
        assert!(p.half_one_body[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn shift_moves_into_one_body_and_constant() {
        let l = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2]);
        let f = factorization(DMatrix::zeros(2, 2), vec![l.clone()]);
        let p = build_one_body_propagator(&f, 1.0, vec![0.8], 0.0);
        assert!((p.constant - (1.0 - 0.32)).abs() < 1e-15);
        assert_eq!(p.mean_field, vec![0.8]);
    }

    #[test]
    fn taylor_on_commuting_case() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, 0.3), C64::new(-0.2, 0.0)]));
        let phi = DMatrix::identity(2, 2);
        let out = taylor_apply(&a, &phi);
        assert!((out[(0, 0)] - C64::new(0.0, 0.3).exp()).norm() < 1e-15);
        assert!((out[(1, 1)] - (-0.2f64).exp()).norm() < 1e-15);
    }

    #[test]
    fn empty_fields() {
        let f = factorization(DMatrix::zeros(2, 2), vec![]);
        let p = build_one_body_propagator(&f, 0.0, vec![], 0.01);
        let g = GreensFunction {
            alpha: DMatrix::zeros(2, 2),
            beta: DMatrix::zeros(2, 2),
            overlap: C64::new(1.0, 0.0),
        };
        assert!(p.force_bias(&g).is_empty());
    }

    #[test]
    fn cap_preserves_direction() {
        let l = DMatrix::from_element(1, 1, 1.0);
        let f = factorization(DMatrix::zeros(1, 1), vec![l]);
        let p = build_one_body_propagator(&f, 0.0, vec![0.0], 100.0);
        let g = GreensFunction {
            alpha: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            beta: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            overlap: C64::new(1.0, 0.0),
        };
        let xb = p.force_bias(&g);
        assert!((xb[0] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
