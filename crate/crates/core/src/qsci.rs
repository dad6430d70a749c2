//! Selected CI on sampled configurations.
//!
//! Counts are decoded and ranked by frequency, the distinct α and β strings
//! of the survivors are recombined into their full product space, and the
//! Hamiltonian is diagonalized there. The eigenvector becomes the AFQMC trial
//! once it is embedded back into the full orbital space.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::detops::{Determinant, TrialWavefunction};
use crate::eigen::{davidson, dense_lowest, EigenSettings};
use crate::error::{Error, Result};
use crate::fci::{ci_matrix, SparseSymmetric};
use crate::hamio::{ActiveSpaceSpec, Hamiltonian};
use crate::sampler::CountsTable;

#[derive(Clone, Debug)]
pub struct QsciWavefunction {
    /// Product basis, active-space orbital indices.
    pub determinants: Vec<Determinant>,
    pub coefficients: DVector<f64>,
    pub energy: f64,
    /// Configurations kept after ranking and truncation.
    pub r_requested: usize,
    /// Size of the product basis actually diagonalized.
    pub r_effective: usize,
}

impl QsciWavefunction {
    pub fn state(&self) -> Vec<(Determinant, f64)> {
        self.determinants
            .iter()
            .copied()
            .zip(self.coefficients.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum EffectiveHamiltonian {
    Dense(DMatrix<f64>),
    Sparse(SparseSymmetric),
}

impl EffectiveHamiltonian {
    pub fn dimension(&self) -> usize {
        match self {
            EffectiveHamiltonian::Dense(m) => m.nrows(),
            EffectiveHamiltonian::Sparse(s) => s.diag.len(),
        }
    }
}

/// Ranks decoded configurations by count (ties by raw bit string) and keeps
/// the first `r` of them; `None` keeps all. With `filter` on, strings with
/// the wrong electron numbers are dropped before ranking.
pub fn select_configurations(
    counts: &CountsTable,
    r: Option<usize>,
    filter: bool,
    n_alpha: usize,
    n_beta: usize,
) -> Result<Vec<Determinant>> {
    if r == Some(0) {
        return Err(Error::invalid("R must be at least 1"));
    }
    let mut entries: Vec<_> = counts
        .decoded()?
        .into_iter()
        .filter(|e| e.count > 0)
        .filter(|e| !filter || (e.determinant.alpha.count() == n_alpha && e.determinant.beta.count() == n_beta))
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.raw.cmp(&b.raw)));

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in entries {
        if seen.insert(e.determinant) {
            out.push(e.determinant);
        }
        if Some(out.len()) == r {
            break;
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("no valid configurations left after filtering"));
    }
    Ok(out)
}

/// Every pairing of the distinct α and β strings present in `dets`, α-major,
/// both lists in first-seen order.
pub fn cartesian_expand(dets: &[Determinant]) -> Vec<Determinant> {
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for d in dets {
        if !alphas.contains(&d.alpha) {
            alphas.push(d.alpha);
        }
        if !betas.contains(&d.beta) {
            betas.push(d.beta);
        }
    }
    alphas
        .iter()
        .flat_map(|a| betas.iter().map(move |b| Determinant::new(*a, *b)))
        .collect()
}

pub fn build_effective_hamiltonian(
    ham: &Hamiltonian,
    basis: &[Determinant],
    settings: &EigenSettings,
) -> Result<EffectiveHamiltonian> {
    let first = basis
        .first()
        .ok_or_else(|| Error::invalid("empty QSCI basis"))?;
    let (na, nb) = (first.alpha.count(), first.beta.count());
    if basis.iter().any(|d| d.alpha.count() != na || d.beta.count() != nb) {
        return Err(Error::invalid("QSCI basis mixes electron counts"));
    }
    Ok(if basis.len() <= settings.dense_limit {
        EffectiveHamiltonian::Dense(ci_matrix(ham, basis))
    } else {
        EffectiveHamiltonian::Sparse(SparseSymmetric::build(ham, basis))
    })
}

/// Lowest eigenpair, normalized, largest coefficient positive.
pub fn solve(effective: &EffectiveHamiltonian, settings: &EigenSettings) -> Result<(f64, DVector<f64>)> {
    match effective {
        EffectiveHamiltonian::Dense(m) => Ok(dense_lowest(m)),
        EffectiveHamiltonian::Sparse(s) => davidson(&s.diag, |v| s.apply(v), settings),
    }
}

/// Select, expand, build and solve in one go.
pub fn run_qsci(
    ham_active: &Hamiltonian,
    counts: &CountsTable,
    r: Option<usize>,
    filter: bool,
    settings: &EigenSettings,
) -> Result<QsciWavefunction> {
    let selected = select_configurations(counts, r, filter, ham_active.n_alpha, ham_active.n_beta)?;
    let basis = cartesian_expand(&selected);
    // without the filter, product states may leave the electron sector
    let basis: Vec<_> = basis
        .into_iter()
        .filter(|d| d.alpha.count() == ham_active.n_alpha && d.beta.count() == ham_active.n_beta)
        .collect();
    if basis.is_empty() {
        return Err(Error::invalid("no product configurations with the right electron numbers"));
    }
    let limit = if ham_active.n_spatial >= 64 { u64::MAX } else { (1u64 << ham_active.n_spatial) - 1 };
    if basis.iter().any(|d| (d.alpha.bits() | d.beta.bits()) & !limit != 0) {
        return Err(Error::invalid("sampled strings are wider than the active space"));
    }
    let effective = build_effective_hamiltonian(ham_active, &basis, settings)?;
    let (energy, coefficients) = solve(&effective, settings)?;
    Ok(QsciWavefunction {
        r_requested: selected.len(),
        r_effective: basis.len(),
        determinants: basis,
        coefficients,
        energy,
    })
}

/// Places active-space determinants into the full orbital space: core
/// orbitals doubly occupied, active index `i` mapped to
/// `spec.active_orbitals[i]`, everything else empty.
pub fn embed_determinant(d: &Determinant, spec: &ActiveSpaceSpec) -> Determinant {
    let core = if spec.n_core == 0 { 0 } else { (1u64 << spec.n_core) - 1 };
    let a = d.alpha.remap(&spec.active_orbitals).bits() | core;
    let b = d.beta.remap(&spec.active_orbitals).bits() | core;
    Determinant::new(
        crate::detops::SpinString::from_bits(a),
        crate::detops::SpinString::from_bits(b),
    )
}

pub fn embed_trial(qsci: &QsciWavefunction, spec: &ActiveSpaceSpec, full_n_spatial: usize) -> Result<TrialWavefunction> {
    let n_act = spec.n_active();
    if spec.n_core + n_act > full_n_spatial || spec.active_orbitals.iter().any(|&p| p >= full_n_spatial) {
        return Err(Error::invalid("active space does not fit the full orbital space"));
    }
    let limit = if n_act >= 64 { u64::MAX } else { (1u64 << n_act) - 1 };
    for d in &qsci.determinants {
        if (d.alpha.bits() | d.beta.bits()) & !limit != 0 {
            return Err(Error::invalid("QSCI determinant exceeds the active space"));
        }
        if d.alpha.count() != spec.n_active_alpha || d.beta.count() != spec.n_active_beta {
            return Err(Error::invalid("QSCI determinant electron counts differ from the active space"));
        }
    }
    TrialWavefunction::new(
        full_n_spatial,
        qsci.determinants.iter().map(|d| embed_determinant(d, spec)).collect(),
        qsci.coefficients.iter().copied().collect(),
    )
}

/// On-disk form of a QSCI result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsciRecord {
    pub energy: f64,
    pub r_requested: usize,
    pub r_effective: usize,
    pub full_n_spatial: usize,
    pub n_core: usize,
    pub active_orbitals: Vec<usize>,
    pub n_active_alpha: usize,
    pub n_active_beta: usize,
    /// Active-space configurations, device display order, basis order.
    pub configurations: Vec<String>,
    pub coefficients: Vec<f64>,
}

impl QsciRecord {
    pub fn new(qsci: &QsciWavefunction, spec: &ActiveSpaceSpec, full_n_spatial: usize) -> Self {
        QsciRecord {
            energy: qsci.energy,
            r_requested: qsci.r_requested,
            r_effective: qsci.r_effective,
            full_n_spatial,
            n_core: spec.n_core,
            active_orbitals: spec.active_orbitals.clone(),
            n_active_alpha: spec.n_active_alpha,
            n_active_beta: spec.n_active_beta,
            configurations: qsci
                .determinants
                .iter()
                .map(|d| d.display_string(spec.n_active()))
                .collect(),
            coefficients: qsci.coefficients.iter().copied().collect(),
        }
    }

    pub fn active_space(&self) -> ActiveSpaceSpec {
        ActiveSpaceSpec {
            n_core: self.n_core,
            active_orbitals: self.active_orbitals.clone(),
            n_active_alpha: self.n_active_alpha,
            n_active_beta: self.n_active_beta,
        }
    }

    pub fn wavefunction(&self) -> Result<QsciWavefunction> {
        if self.configurations.len() != self.coefficients.len() || self.configurations.is_empty() {
            return Err(Error::invalid("QSCI record has mismatched configurations and coefficients"));
        }
        let determinants = self
            .configurations
            .iter()
            .map(|s| Determinant::parse_display_string(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(QsciWavefunction {
            determinants,
            coefficients: DVector::from_vec(self.coefficients.clone()),
            energy: self.energy,
            r_requested: self.r_requested,
            r_effective: self.r_effective,
        })
    }

    pub fn trial(&self) -> Result<TrialWavefunction> {
        embed_trial(&self.wavefunction()?, &self.active_space(), self.full_n_spatial)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("record fields are plain data")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("QSCI record: {e}")))
    }
}
