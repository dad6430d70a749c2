mod common;

use common::*;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use qsci_afqmc::afqmc::{blocking_analysis, init_ensemble, population_control, walker_rng};
use qsci_afqmc::detops::{Determinant, TrialWavefunction};
use qsci_afqmc::fci::fci_ground_state;
use qsci_afqmc::hamio::{fold_core, ActiveSpaceSpec};
use qsci_afqmc::sampler::sample_state;

#[test]
fn sampled_frequencies_follow_born_rule() {
    let ham = fold_core(&fixture("h4_vdz8_r4.0"), &ActiveSpaceSpec::contiguous(0, 4, 4)).unwrap();
    let state = fci_ground_state(&ham).unwrap().state();
    let shots = 1_000_000u64;
    let counts = sample_state(&state, 4, shots, 2024, 0.0).unwrap();
    assert_eq!(counts.entries.values().sum::<u64>(), shots);
    for (d, c) in &state {
        let p = c * c;
        let n = *counts.entries.get(&d.display_string(4)).unwrap_or(&0) as f64;
        let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (n - shots as f64 * p).abs() <= 5.0 * sigma + 1e-9,
            "{d}: {n} draws, expected {}",
            shots as f64 * p
        );
    }
    for raw in counts.entries.keys() {
        let d = Determinant::parse_display_string(raw).unwrap();
        assert!(state.iter().any(|(s, c)| *s == d && *c != 0.0), "{raw} has no amplitude");
    }
}

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn blocking_error_of_independent_samples() {
    let n = 4096;
    let data = normals(n, 1);
    let r = blocking_analysis(&data).unwrap();
    let want = 1.0 / (n as f64).sqrt();
    assert!((r.error / want - 1.0).abs() < 0.2, "{} vs {want}", r.error);
}

/// AR(1) with coefficient ρ and unit innovations: the mean's variance tends
/// to `σ_x² (1+ρ)/(1−ρ) / N` with `σ_x² = 1/(1−ρ²)`.
#[test]
fn blocking_error_of_correlated_samples() {
    let n = 1 << 16;
    let rho: f64 = 0.9;
    let eps = normals(n, 2);
    let mut data = Vec::with_capacity(n);
    let mut x = eps[0] / (1.0 - rho * rho).sqrt();
    for e in eps {
        x = rho * x + e;
        data.push(x);
    }
    let r = blocking_analysis(&data).unwrap();
    let want = ((1.0 + rho) / (1.0 - rho) / (1.0 - rho * rho) / n as f64).sqrt();
    assert!((r.error / want - 1.0).abs() < 0.3, "{} vs {want}", r.error);
    let naive = r.table[0].error;
    assert!(r.error > 3.0 * naive);
}

#[test]
fn comb_is_unbiased() {
    let trial = TrialWavefunction::single(Determinant::hartree_fock(1, 1), 2).unwrap();
    let weights = [0.1, 2.5, 0.0, 1.3, 0.7, 0.05, 3.2, 0.9, 0.0, 1.25];
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let trials = 1000;
    let mut acc = vec![0.0; n];
    let mut acc2 = vec![0.0; n];
    for t in 0..trials {
        let mut e = init_ensemble(&trial, n).unwrap();
        for (i, w) in e.walkers.iter_mut().enumerate() {
            w.weight = weights[i];
            w.phase = C64::new(i as f64, 0.0);
        }
        let mut rng = walker_rng(77, u64::MAX, t);
        let share = population_control(&mut e, &mut rng).unwrap();
        assert_eq!(e.walkers.len(), n);
        assert!((e.total_weight() - total).abs() < 1e-12);
        let mut got = vec![0.0; n];
        for w in &e.walkers {
            assert_eq!(w.weight, share);
            got[w.phase.re as usize] += w.weight;
        }
        for i in 0..n {
            acc[i] += got[i];
            acc2[i] += got[i] * got[i];
        }
    }
    let share = total / n as f64;
    for i in 0..n {
        let mean = acc[i] / trials as f64;
        // comb copies are floor or ceil of w/share
        let bound = 5.0 * 0.5 * share / (trials as f64).sqrt();
        assert!((mean - weights[i]).abs() <= bound, "walker {i}: {mean} vs {}", weights[i]);
        if weights[i] == 0.0 {
            assert_eq!(acc2[i], 0.0);
        }
    }
}
