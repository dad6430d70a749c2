//! Multideterminant trial wave functions against non-orthogonal walkers.
//!
//! For a trial determinant with occupied rows `O` and a walker block `Φ`
//! (orbitals × electrons) every mixed quantity is a polynomial in `Φ`:
//!
//! * `⟨D|φ⟩ = det M`, `M = Φ[O, :]`
//! * `⟨D|a†_p a_q|φ⟩ = (Φ adj M)[q, k]` for `p = O_k`
//! * `⟨D|a†_p a†_r a_s a_q|φ⟩` (same spin) from the second-order cofactors
//!
//! Working with adjugates instead of inverses keeps determinants with exactly
//! zero overlap (e.g. excitations of a Hartree–Fock walker) contributing
//! their correct numerators.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::small::{det, det_adjugate, pair_index, second_cofactors, C64};
use super::{one_body_transition, slater_condon, Determinant, SpinString};
use crate::error::{Error, Result};
use crate::hamio::Hamiltonian;

const ZERO: C64 = Complex64::new(0.0, 0.0);

/// Per-spin walker blocks; columns are occupied orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterMatrix {
    pub alpha: DMatrix<C64>,
    pub beta: DMatrix<C64>,
}

impl SlaterMatrix {
    pub fn new(alpha: DMatrix<C64>, beta: DMatrix<C64>) -> Self {
        SlaterMatrix { alpha, beta }
    }

    /// Unit columns on the occupied orbitals of `det`, signed so the walker
    /// equals `det` in the interleaved convention (`⟨det|φ⟩ = 1`).
    pub fn from_determinant(det: &Determinant, n_spatial: usize) -> Self {
        let block = |s: &SpinString| {
            let occ = s.orbitals();
            DMatrix::from_fn(n_spatial, occ.len(), |p, k| {
                if occ[k] == p {
                    C64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            })
        };
        let mut w = SlaterMatrix::new(block(&det.alpha), block(&det.beta));
        if det.blocked_sign() < 0.0 {
            // only reachable with both spins occupied, so α has a column
            w.alpha.column_mut(0).neg_mut();
        }
        w
    }

    pub fn n_spatial(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn block(&self, spin: usize) -> &DMatrix<C64> {
        if spin == 0 {
            &self.alpha
        } else {
            &self.beta
        }
    }

    pub fn block_mut(&mut self, spin: usize) -> &mut DMatrix<C64> {
        if spin == 0 {
            &mut self.alpha
        } else {
            &mut self.beta
        }
    }
}

/// CI expansion `Σ_i c_i |D_i⟩` over full-space determinants. Coefficients
/// are in the interleaved convention of [`slater_condon`].
#[derive(Clone, Debug)]
pub struct TrialWavefunction {
    n_spatial: usize,
    n_alpha: usize,
    n_beta: usize,
    determinants: Vec<Determinant>,
    coefficients: Vec<f64>,
    /// `c_i` times the interleaved → α/β-blocked sign.
    walker_coefficients: Vec<f64>,
    strings: [Vec<Vec<usize>>; 2],
    string_index: Vec<[usize; 2]>,
}

impl TrialWavefunction {
    pub fn new(n_spatial: usize, determinants: Vec<Determinant>, coefficients: Vec<f64>) -> Result<Self> {
        if determinants.is_empty() || determinants.len() != coefficients.len() {
            return Err(Error::invalid("trial needs matching, nonempty determinant and coefficient lists"));
        }
        let (n_alpha, n_beta) = (determinants[0].alpha.count(), determinants[0].beta.count());
        let limit = if n_spatial >= 64 { u64::MAX } else { (1u64 << n_spatial) - 1 };
        for d in &determinants {
            if d.alpha.count() != n_alpha || d.beta.count() != n_beta {
                return Err(Error::invalid("trial determinants have mixed electron counts"));
            }
            if d.alpha.bits() & !limit != 0 || d.beta.bits() & !limit != 0 {
                return Err(Error::invalid("trial determinant exceeds the orbital space"));
            }
        }
        let walker_coefficients = determinants
            .iter()
            .zip(&coefficients)
            .map(|(d, c)| c * d.blocked_sign())
            .collect();
        let mut strings: [Vec<Vec<usize>>; 2] = [Vec::new(), Vec::new()];
        let mut lookup: [HashMap<u64, usize>; 2] = [HashMap::new(), HashMap::new()];
        let string_index = determinants
            .iter()
            .map(|d| {
                let mut idx = [0; 2];
                for (spin, s) in [d.alpha, d.beta].iter().enumerate() {
                    idx[spin] = *lookup[spin].entry(s.bits()).or_insert_with(|| {
                        strings[spin].push(s.orbitals());
                        strings[spin].len() - 1
                    });
                }
                idx
            })
            .collect();
        Ok(TrialWavefunction {
            n_spatial,
            n_alpha,
            n_beta,
            determinants,
            coefficients,
            walker_coefficients,
            strings,
            string_index,
        })
    }

    pub fn single(det: Determinant, n_spatial: usize) -> Result<Self> {
        Self::new(n_spatial, vec![det], vec![1.0])
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn determinants(&self) -> &[Determinant] {
        &self.determinants
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.determinants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.determinants.is_empty()
    }

    /// Overlaps below this magnitude count as a node crossing.
    pub fn zero_overlap_threshold(&self) -> f64 {
        1e-14 * self.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Variational energy `⟨Ψ|H|Ψ⟩/⟨Ψ|Ψ⟩` by Slater–Condon rules.
    pub fn variational_energy(&self, ham: &Hamiltonian) -> f64 {
        let mut e = 0.0;
        for (i, (di, ci)) in self.determinants.iter().zip(&self.coefficients).enumerate() {
            e += ci * ci * slater_condon(ham, di, di);
            for (dj, cj) in self.determinants[..i].iter().zip(&self.coefficients) {
                e += 2.0 * ci * cj * slater_condon(ham, di, dj);
            }
        }
        e / self.norm().powi(2)
    }

    /// Variational one-particle density matrices `⟨Ψ|a†_p a_q|Ψ⟩/⟨Ψ|Ψ⟩`,
    /// one per spin.
    pub fn one_rdm(&self) -> [DMatrix<f64>; 2] {
        let n = self.n_spatial;
        let mut out = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        for (di, ci) in self.determinants.iter().zip(&self.coefficients) {
            for (dj, cj) in self.determinants.iter().zip(&self.coefficients) {
                if di.excitation_degree(dj) > 1 {
                    continue;
                }
                for (spin, rdm) in out.iter_mut().enumerate() {
                    for p in 0..n {
                        for q in 0..n {
                            let t = one_body_transition(di, dj, spin, p, q);
                            if t != 0.0 {
                                rdm[(p, q)] += ci * cj * t;
                            }
                        }
                    }
                }
            }
        }
        let norm2 = self.norm().powi(2);
        for rdm in out.iter_mut() {
            *rdm /= norm2;
        }
        out
    }
}

/// Mixed-estimator Green's functions `G_pq = ⟨Ψ_T|a†_p a_q|φ⟩/⟨Ψ_T|φ⟩`.
#[derive(Clone, Debug)]
pub struct GreensFunction {
    pub alpha: DMatrix<C64>,
    pub beta: DMatrix<C64>,
    pub overlap: C64,
}

impl GreensFunction {
    pub fn spin(&self, spin: usize) -> &DMatrix<C64> {
        if spin == 0 {
            &self.alpha
        } else {
            &self.beta
        }
    }
}

/// Everything one occupation string needs from one walker block.
struct StringEval {
    det: C64,
    /// `Φ adj M` (orbitals × electrons): column `k` holds the numerator of
    /// `G[O_k, :]`.
    theta: DMatrix<C64>,
    /// `Σ_pq h_pq ⟨a†_p a_q⟩` numerator.
    one_body: C64,
    /// Same-spin two-body numerator.
    two_body: C64,
    /// `J[p, q] = Σ_l Σ_s (pq|O_l s) theta[s, l]`, for the opposite-spin term.
    coulomb: Option<DMatrix<C64>>,
}

fn eval_string(occ: &[usize], phi: &DMatrix<C64>, ham: Option<&Hamiltonian>) -> StringEval {
    let n = phi.nrows();
    let ne = occ.len();
    let m = DMatrix::from_fn(ne, ne, |k, j| phi[(occ[k], j)]);
    let (d, adj) = det_adjugate(&m);
    let theta = phi * &adj;
    let mut out = StringEval {
        det: d,
        theta,
        one_body: ZERO,
        two_body: ZERO,
        coulomb: None,
    };
    let ham = match ham {
        Some(h) => h,
        None => return out,
    };

    for (k, &p) in occ.iter().enumerate() {
        for q in 0..n {
            out.one_body += out.theta[(q, k)] * ham.h[(p, q)];
        }
    }

    if ne >= 2 {
        let c2 = second_cofactors(&m, d, &adj);
        let mut block = DMatrix::<C64>::zeros(n, n);
        for l in 1..ne {
            for k in 0..l {
                for q in 0..n {
                    for s in 0..n {
                        block[(q, s)] = C64::new(ham.g.get(occ[k], q, occ[l], s), 0.0);
                    }
                }
                let y = phi.transpose() * (&block * phi);
                for mm in 1..ne {
                    for j in 0..mm {
                        let w = y[(j, mm)] - y[(mm, j)];
                        out.two_body += w * c2[(pair_index(k, l), pair_index(j, mm))];
                    }
                }
            }
        }
    }

    let mut coulomb = DMatrix::<C64>::zeros(n, n);
    for (l, &r) in occ.iter().enumerate() {
        for p in 0..n {
            for q in 0..n {
                let mut acc = ZERO;
                for s in 0..n {
                    acc += out.theta[(s, l)] * ham.g.get(p, q, r, s);
                }
                coulomb[(p, q)] += acc;
            }
        }
    }
    out.coulomb = Some(coulomb);
    out
}

pub(crate) struct MixedEstimates {
    pub overlap: C64,
    pub greens: Option<[DMatrix<C64>; 2]>,
    pub energy: Option<C64>,
}

/// Overlap, optionally Green's functions and local energy, sharing the
/// per-string work between all determinants of the trial.
pub(crate) fn mixed_estimates(
    trial: &TrialWavefunction,
    w: &SlaterMatrix,
    ham: Option<&Hamiltonian>,
    want_greens: bool,
) -> MixedEstimates {
    let n = trial.n_spatial;
    let evals: [Vec<StringEval>; 2] = [0, 1].map(|spin| {
        trial.strings[spin]
            .iter()
            .map(|occ| eval_string(occ, w.block(spin), ham))
            .collect()
    });

    let mut overlap = ZERO;
    let mut numerator = ZERO;
    let mut greens = want_greens.then(|| [DMatrix::<C64>::zeros(n, n), DMatrix::<C64>::zeros(n, n)]);
    for (i, &[ia, ib]) in trial.string_index.iter().enumerate() {
        let c = trial.walker_coefficients[i];
        let (ea, eb) = (&evals[0][ia], &evals[1][ib]);
        overlap += c * ea.det * eb.det;
        if let Some(ham) = ham {
            let mut cross = ZERO;
            if let Some(jb) = &eb.coulomb {
                for (k, &p) in trial.strings[0][ia].iter().enumerate() {
                    for q in 0..n {
                        cross += jb[(p, q)] * ea.theta[(q, k)];
                    }
                }
            }
            numerator += c
                * (ham.e_core * ea.det * eb.det
                    + (ea.one_body + ea.two_body) * eb.det
                    + (eb.one_body + eb.two_body) * ea.det
                    + cross);
        }
        if let Some(g) = greens.as_mut() {
            for (spin, (ev, other)) in [(ea, eb.det), (eb, ea.det)].into_iter().enumerate() {
                let occ = &trial.strings[spin][[ia, ib][spin]];
                let f = c * other;
                if f == ZERO {
                    continue;
                }
                for (k, &p) in occ.iter().enumerate() {
                    for q in 0..n {
                        g[spin][(p, q)] += f * ev.theta[(q, k)];
                    }
                }
            }
        }
    }
    if let Some(g) = greens.as_mut() {
        for block in g.iter_mut() {
            *block /= overlap;
        }
    }
    MixedEstimates {
        overlap,
        greens,
        energy: ham.map(|_| numerator / overlap),
    }
}

/// `⟨Ψ_T|φ⟩ = Σ_i c_i det(Φ_α[O_i^α, :]) det(Φ_β[O_i^β, :])`.
pub fn trial_walker_overlap(trial: &TrialWavefunction, w: &SlaterMatrix) -> C64 {
    trial
        .string_index
        .iter()
        .zip(&trial.walker_coefficients)
        .map(|(&[ia, ib], &c)| {
            let block = |spin: usize, idx: usize| {
                let occ = &trial.strings[spin][idx];
                let phi = w.block(spin);
                det(&DMatrix::from_fn(occ.len(), occ.len(), |k, j| phi[(occ[k], j)]))
            };
            c * block(0, ia) * block(1, ib)
        })
        .sum()
}

pub fn greens_function(trial: &TrialWavefunction, w: &SlaterMatrix) -> Result<GreensFunction> {
    let est = mixed_estimates(trial, w, None, true);
    if est.overlap.norm() < trial.zero_overlap_threshold() {
        return Err(Error::ZeroOverlap);
    }
    let [alpha, beta] = est.greens.expect("requested");
    Ok(GreensFunction {
        alpha,
        beta,
        overlap: est.overlap,
    })
}

/// Mixed-estimator local energy `⟨Ψ_T|H|φ⟩/⟨Ψ_T|φ⟩`, core energy included.
pub fn local_energy(ham: &Hamiltonian, trial: &TrialWavefunction, w: &SlaterMatrix) -> Result<C64> {
    let est = mixed_estimates(trial, w, Some(ham), false);
    if est.overlap.norm() < trial.zero_overlap_threshold() {
        return Err(Error::ZeroOverlap);
    }
    Ok(est.energy.expect("requested"))
}
