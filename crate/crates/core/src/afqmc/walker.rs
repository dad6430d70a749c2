use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detops::{trial_walker_overlap, Determinant, SlaterMatrix, TrialWavefunction};
use crate::error::{Error, Result};

use super::config::PhaselessVariant;
use super::propagator::Propagator;

type C64 = Complex64;

/// Pivot ratio below which a QR-stabilized block counts as rank deficient.
const RANK_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct Walker {
    pub slater: SlaterMatrix,
    pub weight: f64,
    /// Product of the unit phases of all importance factors (diagnostic).
    pub phase: C64,
    /// `⟨Ψ_T|Φ⟩` for the stored (possibly re-orthonormalized) blocks.
    pub overlap: C64,
    /// `ln` of the scale removed by stabilization; the represented state is
    /// `e^{log_scale} Φ`.
    pub log_scale: C64,
}

impl Walker {
    pub fn new(slater: SlaterMatrix, trial: &TrialWavefunction) -> Self {
        let overlap = trial_walker_overlap(trial, &slater);
        Walker {
            slater,
            weight: 1.0,
            phase: C64::new(1.0, 0.0),
            overlap,
            log_scale: C64::new(0.0, 0.0),
        }
    }

    /// Overlap of the represented state, stabilization scale included.
    pub fn total_overlap(&self) -> C64 {
        self.overlap * self.log_scale.exp()
    }

    pub fn is_alive(&self) -> bool {
        self.weight > 0.0
    }

    pub fn kill(&mut self) {
        self.weight = 0.0;
    }
}

#[derive(Clone, Debug)]
pub struct WalkerEnsemble {
    pub walkers: Vec<Walker>,
    /// Walker count restored by every population-control event.
    pub target: usize,
}

impl WalkerEnsemble {
    pub fn total_weight(&self) -> f64 {
        self.walkers.iter().map(|w| w.weight).sum()
    }

    pub fn n_alive(&self) -> usize {
        self.walkers.iter().filter(|w| w.is_alive()).count()
    }
}

/// `n_walkers` copies of the Hartree–Fock determinant, weight 1 each.
pub fn init_ensemble(trial: &TrialWavefunction, n_walkers: usize) -> Result<WalkerEnsemble> {
    if n_walkers == 0 {
        return Err(Error::invalid("n_walkers must be at least 1"));
    }
    let reference = Determinant::hartree_fock(trial.n_alpha(), trial.n_beta());
    let walker = Walker::new(SlaterMatrix::from_determinant(&reference, trial.n_spatial()), trial);
    if walker.overlap.norm() < trial.zero_overlap_threshold() {
        return Err(Error::invalid(
            "trial wave function is orthogonal to the Hartree–Fock starting walkers",
        ));
    }
    Ok(WalkerEnsemble {
        walkers: vec![walker; n_walkers],
        target: n_walkers,
    })
}

/// Independent stream for one `(seed, walker, step)` triple, so results do
/// not depend on how walkers are scheduled across threads.
pub fn walker_rng(seed: u64, walker: u64, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&walker.to_le_bytes());
    key[16..24].copy_from_slice(&step.to_le_bytes());
    key[24..].copy_from_slice(b"afqmc-rs");
    ChaCha8Rng::from_seed(key)
}

/// One imaginary-time step of one walker with fields `x` and force bias
/// `xbar`. Returns the importance factor applied to the weight, or `None`
/// when the walker was already dead or has just crossed a node.
pub fn propagate_step(
    walker: &mut Walker,
    x: &[f64],
    xbar: &[C64],
    prop: &Propagator,
    trial: &TrialWavefunction,
    e_trial: f64,
    variant: PhaselessVariant,
) -> Option<C64> {
    if !walker.is_alive() {
        return None;
    }
    let shifted: Vec<C64> = x.iter().zip(xbar).map(|(xi, xb)| xi - xb).collect();
    walker.slater.alpha = prop.apply(&walker.slater.alpha, &shifted);
    walker.slater.beta = prop.apply(&walker.slater.beta, &shifted);

    let overlap = trial_walker_overlap(trial, &walker.slater);
    if overlap.norm() < trial.zero_overlap_threshold() {
        walker.kill();
        return None;
    }
    let ratio = overlap / walker.overlap;
    walker.overlap = overlap;

    let sqrt_dt = prop.dtau.sqrt();
    let mut force = C64::new(0.0, 0.0);
    let mut mean_field = C64::new(0.0, 0.0);
    for ((xi, xb), (xs, lbar)) in x.iter().zip(xbar).zip(shifted.iter().zip(&prop.mean_field)) {
        force += xi * xb - 0.5 * xb * xb;
        mean_field -= C64::new(0.0, sqrt_dt) * xs * lbar;
    }
    // Overlap ratio under the mean-field-subtracted propagator. Its phase is
    // what the projection acts on; the force-bias factor only rescales.
    let log_ratio = ratio.ln() + mean_field;
    // Bounding the hybrid energy to E_T ± √(2/Δτ) caps the weight change of
    // a single step at e^{±√(2Δτ)}; walkers leaving a node cannot blow up.
    let mut log_importance = log_ratio + force + prop.dtau * (e_trial - prop.constant);
    let bound = (2.0 * prop.dtau).sqrt();
    log_importance.re = log_importance.re.clamp(-bound, bound);
    let importance = log_importance.exp();
    if !importance.is_finite() || !log_ratio.im.is_finite() {
        walker.kill();
        return None;
    }
    update_weight(walker, importance, C64::from_polar(1.0, log_ratio.im), variant);
    Some(importance)
}

/// `w ← w |I| max(0, cos Δθ)` with `Δθ` taken from `projected`.
pub(crate) fn update_weight(walker: &mut Walker, importance: C64, projected: C64, variant: PhaselessVariant) {
    let mag = importance.norm();
    walker.weight *= mag * variant.cosine_factor(projected);
    if mag > 0.0 {
        walker.phase *= importance / mag;
    }
}

/// Per-spin QR; the columns become orthonormal and `ln det R` moves into
/// `log_scale`, leaving the represented overlap unchanged.
pub fn stabilize(walker: &mut Walker, trial: &TrialWavefunction) {
    if !walker.is_alive() {
        return;
    }
    for spin in 0..2 {
        let block = walker.slater.block_mut(spin);
        if block.ncols() == 0 {
            continue;
        }
        let qr = block.clone().qr();
        let r = qr.r();
        let diag: Vec<C64> = (0..r.nrows()).map(|i| r[(i, i)]).collect();
        let hi = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let lo = diag.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        if !(hi > 0.0 && lo / hi > RANK_FLOOR) {
            walker.kill();
            return;
        }
        *block = qr.q();
        walker.log_scale += diag.iter().map(|d| d.ln()).sum::<C64>();
    }
    walker.overlap = trial_walker_overlap(trial, &walker.slater);
}

/// Comb resampling back to `target` walkers of equal weight `W/target`;
/// returns `W/target`.
pub fn population_control(ensemble: &mut WalkerEnsemble, rng: &mut impl Rng) -> Result<f64> {
    let total = ensemble.total_weight();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Collapse(format!(
            "total weight {total} across {} walkers ({} alive)",
            ensemble.walkers.len(),
            ensemble.n_alive()
        )));
    }
    let n = ensemble.target;
    let share = total / n as f64;
    let offset: f64 = rng.random();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    let mut idx = 0;
    let last_alive = ensemble.walkers.iter().rposition(|w| w.is_alive()).expect("total > 0");
    for k in 0..n {
        let tooth = (k as f64 + offset) * share;
        while idx < last_alive && cumulative + ensemble.walkers[idx].weight <= tooth {
            cumulative += ensemble.walkers[idx].weight;
            idx += 1;
        }
        let mut copy = ensemble.walkers[idx].clone();
        copy.weight = share;
        out.push(copy);
    }
    ensemble.walkers = out;
    Ok(share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detops::SlaterMatrix;
    use nalgebra::DMatrix;

    fn hf_trial() -> TrialWavefunction {
        TrialWavefunction::single(Determinant::hartree_fock(1, 1), 2).unwrap()
    }

    #[test]
    fn initial_ensemble() {
        let e = init_ensemble(&hf_trial(), 10).unwrap();
        assert_eq!(e.walkers.len(), 10);
        assert_eq!(e.total_weight(), 10.0);
        assert!(init_ensemble(&hf_trial(), 0).is_err());
    }

    #[test]
    fn overlap_equals_hf_coefficient() {
        let dets = vec![Determinant::hartree_fock(1, 1), Determinant::from_orbitals(&[1], &[1])];
        let trial = TrialWavefunction::new(2, dets, vec![0.8, -0.6]).unwrap();
        let e = init_ensemble(&trial, 3).unwrap();
        assert!((e.walkers[0].overlap - C64::new(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_trial_rejected() {
        let trial = TrialWavefunction::single(Determinant::from_orbitals(&[1], &[1]), 2).unwrap();
        assert!(init_ensemble(&trial, 3).is_err());
    }

    #[test]
    fn real_positive_factor_scales_weight() {
        let mut w = init_ensemble(&hf_trial(), 1).unwrap().walkers.remove(0);
        update_weight(&mut w, C64::new(1.3, 0.0), C64::new(1.0, 0.0), PhaselessVariant::StandardArg);
        assert!((w.weight - 1.3).abs() < 1e-15);
        update_weight(&mut w, C64::new(0.5, 0.1), C64::new(-0.5, 0.1), PhaselessVariant::RealPartArg);
        assert_eq!(w.weight, 0.0);
    }

    #[test]
    fn single_step_weight_change_is_bounded() {
        let trial = hf_trial();
        let prop = Propagator {
            dtau: 0.01,
            half_one_body: DMatrix::identity(2, 2),
            vectors: vec![],
            mean_field: vec![],
            constant: 0.0,
        };
        let bound = 0.02f64.sqrt().exp();
        for (e_trial, want) in [(1e3, bound), (-1e3, 1.0 / bound), (1.0, 0.01f64.exp())] {
            let mut w = init_ensemble(&trial, 1).unwrap().walkers.remove(0);
            propagate_step(&mut w, &[], &[], &prop, &trial, e_trial, PhaselessVariant::StandardArg).unwrap();
            assert!((w.weight - want).abs() < 1e-14, "{} vs {want}", w.weight);
        }
    }

    #[test]
    fn stabilization_absorbs_scale() {
        let trial = hf_trial();
        let mut w = Walker::new(
            SlaterMatrix::new(
                DMatrix::from_column_slice(2, 1, &[C64::new(1e3, 0.0), C64::new(2e2, 1e2)]),
                DMatrix::from_column_slice(2, 1, &[C64::new(3e3, -1e3), C64::new(5e2, 0.0)]),
            ),
            &trial,
        );
        let before = w.total_overlap();
        stabilize(&mut w, &trial);
        assert!((w.total_overlap() - before).norm() < 1e-10 * before.norm());
        for spin in 0..2 {
            assert!((w.slater.block(spin).column(0).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stabilization_keeps_orthonormal_columns() {
        let trial = TrialWavefunction::single(Determinant::hartree_fock(2, 1), 3).unwrap();
        let mut w = init_ensemble(&trial, 1).unwrap().walkers.remove(0);
        let before = w.slater.clone();
        stabilize(&mut w, &trial);
        for spin in 0..2 {
            let (a, b) = (w.slater.block(spin), before.block(spin));
            // QR may flip column signs; compare projectors
            let pa = a * a.adjoint();
            let pb = b * b.adjoint();
            assert!((pa - pb).norm() < 1e-14);
        }
        assert!((w.total_overlap() - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn comb_limits() {
        let trial = hf_trial();
        let mut e = init_ensemble(&trial, 4).unwrap();
        let mut rng = walker_rng(1, 0, 0);
        assert_eq!(population_control(&mut e, &mut rng).unwrap(), 1.0);
        assert_eq!(e.walkers.len(), 4);

        for (i, w) in e.walkers.iter_mut().enumerate() {
            w.weight = if i == 2 { 8.0 } else { 0.0 };
            w.phase = C64::new(i as f64, 0.0);
        }
        population_control(&mut e, &mut rng).unwrap();
        assert!(e.walkers.iter().all(|w| w.weight == 2.0 && w.phase == C64::new(2.0, 0.0)));

        for w in e.walkers.iter_mut() {
            w.weight = 0.0;
        }
        assert!(matches!(population_control(&mut e, &mut rng), Err(Error::Collapse(_))));
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = walker_rng(1, 2, 3).random();
        let b: u64 = walker_rng(1, 3, 2).random();
        let c: u64 = walker_rng(1, 2, 3).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
