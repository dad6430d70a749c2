//! Full CI / CASCI in small orbital spaces. This is the reference every other
//! stage is checked against.

use nalgebra::{DMatrix, DVector};

use crate::detops::{slater_condon, Determinant, SpinString, TrialWavefunction};
use crate::eigen::{davidson, lowest_eigenpair, EigenSettings};
use crate::error::{Error, Result};
use crate::hamio::Hamiltonian;

pub const MAX_DIMENSION: usize = 100_000;

/// All `n`-electron strings over `n_orb` orbitals, occupied-index tuples in
/// lexicographic order.
pub fn strings(n_orb: usize, n: usize) -> Vec<SpinString> {
    fn rec(start: usize, n_orb: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<SpinString>) {
        if left == 0 {
            out.push(SpinString::from_orbitals(cur));
            return;
        }
        for p in start..=n_orb - left {
            cur.push(p);
            rec(p + 1, n_orb, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n <= n_orb {
        rec(0, n_orb, n, &mut Vec::new(), &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Determinant basis of a fixed `(n_spatial, n_alpha, n_beta)` sector,
/// α-string major.
#[derive(Clone, Debug)]
pub struct CiSpace {
    pub n_spatial: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub determinants: Vec<Determinant>,
}

impl CiSpace {
    pub fn new(n_spatial: usize, n_alpha: usize, n_beta: usize) -> Self {
        let sa = strings(n_spatial, n_alpha);
        let sb = strings(n_spatial, n_beta);
        let determinants = sa
            .iter()
            .flat_map(|a| sb.iter().map(move |b| Determinant::new(*a, *b)))
            .collect();
        CiSpace {
            n_spatial,
            n_alpha,
            n_beta,
            determinants,
        }
    }

    pub fn for_hamiltonian(ham: &Hamiltonian) -> Self {
        Self::new(ham.n_spatial, ham.n_alpha, ham.n_beta)
    }

    pub fn dimension(&self) -> usize {
        self.determinants.len()
    }

    pub fn expected_dimension(n_spatial: usize, n_alpha: usize, n_beta: usize) -> usize {
        binomial(n_spatial, n_alpha) * binomial(n_spatial, n_beta)
    }

    pub fn index_of(&self, d: &Determinant) -> Option<usize> {
        self.determinants.iter().position(|x| x == d)
    }
}

/// Dense CI matrix from Slater–Condon rules (upper triangle, mirrored).
pub fn ci_matrix(ham: &Hamiltonian, dets: &[Determinant]) -> DMatrix<f64> {
    let dim = dets.len();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = slater_condon(ham, &dets[i], &dets[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct FciResult {
    pub energy: f64,
    pub space: CiSpace,
    pub coefficients: DVector<f64>,
}

impl FciResult {
    pub fn state(&self) -> Vec<(Determinant, f64)> {
        self.space
            .determinants
            .iter()
            .copied()
            .zip(self.coefficients.iter().copied())
            .collect()
    }
}

pub fn fci_ground_state(ham: &Hamiltonian) -> Result<FciResult> {
    fci_ground_state_with(ham, &EigenSettings::default())
}

pub fn fci_ground_state_with(ham: &Hamiltonian, settings: &EigenSettings) -> Result<FciResult> {
    let dim = CiSpace::expected_dimension(ham.n_spatial, ham.n_alpha, ham.n_beta);
    if dim > MAX_DIMENSION {
        return Err(Error::DimensionOverflow {
            dim,
            limit: MAX_DIMENSION,
        });
    }
    let space = CiSpace::for_hamiltonian(ham);
    let (energy, coefficients) = if dim <= settings.dense_limit {
        lowest_eigenpair(&ci_matrix(ham, &space.determinants), settings)?
    } else {
        let sparse = SparseSymmetric::build(ham, &space.determinants);
        davidson(&sparse.diag, |v| sparse.apply(v), settings)?
    };
    Ok(FciResult {
        energy,
        space,
        coefficients,
    })
}

/// Nonzero upper-triangle elements for the matrix-free solver.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    pub diag: DVector<f64>,
    pub upper: Vec<(u32, u32, f64)>,
}

impl SparseSymmetric {
    pub fn build(ham: &Hamiltonian, dets: &[Determinant]) -> Self {
        let diag = DVector::from_iterator(dets.len(), dets.iter().map(|d| slater_condon(ham, d, d)));
        let mut upper = Vec::new();
        for i in 0..dets.len() {
            for j in i + 1..dets.len() {
                if dets[i].excitation_degree(&dets[j]) <= 2 {
                    let v = slater_condon(ham, &dets[i], &dets[j]);
                    if v != 0.0 {
                        upper.push((i as u32, j as u32, v));
                    }
                }
            }
        }
        SparseSymmetric { diag, upper }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.diag.component_mul(v);
        for &(i, j, h) in &self.upper {
            let (i, j) = (i as usize, j as usize);
            out[i] += h * v[j];
            out[j] += h * v[i];
        }
        out
    }
}

/// Repackages a CI vector as a trial, keeping determinants with
/// `|c| ≥ threshold · max|c|` and renormalizing.
pub fn ci_as_trial(result: &FciResult, threshold: f64) -> Result<TrialWavefunction> {
    let cmax = result.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (dets, coeffs): (Vec<_>, Vec<_>) = result
        .state()
        .into_iter()
        .filter(|(_, c)| c.abs() >= threshold * cmax)
        .unzip();
    let norm = coeffs.iter().map(|c: &f64| c * c).sum::<f64>().sqrt();
    TrialWavefunction::new(
        result.space.n_spatial,
        dets,
        coeffs.into_iter().map(|c| c / norm).collect(),
    )
}

/// `⟨S²⟩` of a normalized CI vector: `S_z(S_z+1) + ‖S₊ψ‖²` with
/// `S₊ = Σ_p a†_{pα} a_{pβ}`.
pub fn spin_squared(state: &[(Determinant, f64)], n_spatial: usize) -> f64 {
    use std::collections::HashMap;
    let norm2: f64 = state.iter().map(|(_, c)| c * c).sum();
    let sz = state
        .first()
        .map(|(d, _)| (d.alpha.count() as f64 - d.beta.count() as f64) / 2.0)
        .unwrap_or(0.0);
    let mut raised: HashMap<u128, f64> = HashMap::new();
    for (d, c) in state {
        for p in 0..n_spatial {
            let mut m = d.spin_orbital_mask();
            let s1 = match crate::detops::apply_op(&mut m, 2 * p + 1, false) {
                Some(s) => s,
                None => continue,
            };
            if let Some(s2) = crate::detops::apply_op(&mut m, 2 * p, true) {
                *raised.entry(m).or_default() += c * s1 * s2;
            }
        }
    }
    sz * (sz + 1.0) + raised.values().map(|x| x * x).sum::<f64>() / norm2
}
