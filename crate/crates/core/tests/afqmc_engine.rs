mod common;

use common::*;
use nalgebra::DMatrix;

use qsci_afqmc::afqmc::{run, strip_core, PhaselessVariant, PropagatorConfig};
use qsci_afqmc::detops::{local_energy, Determinant, SlaterMatrix, TrialWavefunction};
use qsci_afqmc::factorize::{decompose, DEFAULT_THRESHOLD};
use qsci_afqmc::fci::{ci_as_trial, fci_ground_state};
use qsci_afqmc::hamio::{Eri, Hamiltonian};
use qsci_afqmc::pipeline::run_afqmc;

fn short(n_steps: usize, n_walkers: usize) -> PropagatorConfig {
    PropagatorConfig {
        dtau: 0.01,
        n_steps,
        n_walkers,
        seed: 42,
        equilibration_tau: 0.5,
        ..PropagatorConfig::default()
    }
}

fn hf_trial(ham: &Hamiltonian) -> TrialWavefunction {
    TrialWavefunction::single(Determinant::hartree_fock(ham.n_alpha, ham.n_beta), ham.n_spatial).unwrap()
}

#[test]
fn zero_steps_echo_the_initial_estimate() {
    let ham = fixture("h4_sto3g_r2.0");
    let trial = ci_as_trial(&fci_ground_state(&ham).unwrap(), 1e-4).unwrap();
    let out = run_afqmc(&ham, &trial, &short(0, 5)).unwrap();
    let hf = SlaterMatrix::from_determinant(&Determinant::hartree_fock(2, 2), 4);
    let want = local_energy(&ham, &trial, &hf).unwrap().re;
    assert_eq!(out.series.records.len(), 1);
    assert!((out.estimate.energy - want).abs() < 1e-12);
    assert_eq!(out.estimate.error, 0.0);
}

#[test]
fn frozen_core_leaves_the_initial_estimate_unchanged() {
    let ham = fixture("h2o_sto3g_r2.0");
    let dets = vec![Determinant::hartree_fock(5, 5), Determinant::from_orbitals(&[0, 1, 2, 3, 5], &[0, 1, 2, 3, 5])];
    let trial = TrialWavefunction::new(7, dets, vec![0.8, -0.6]).unwrap();
    let full = run_afqmc(&ham, &trial, &short(0, 2)).unwrap().estimate.energy;
    let frozen = run_afqmc(
        &ham,
        &trial,
        &PropagatorConfig {
            frozen_core: 2,
            ..short(0, 2)
        },
    )
    .unwrap()
    .estimate
    .energy;
    assert!((full - frozen).abs() < 1e-9, "{full} vs {frozen}");
    assert!(strip_core(&trial, 6).is_err());
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let ham = fixture("h4_sto3g_r2.0");
    let trial = hf_trial(&ham);
    let f = decompose(&ham, DEFAULT_THRESHOLD).unwrap();
    let cfg = short(100, 24);
    let with_threads = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| run(&trial, &ham, &f, &cfg).unwrap().to_csv())
    };
    let one = with_threads(1);
    assert_eq!(one, with_threads(4));
    assert_eq!(one, with_threads(4));
}

/// Re-orthonormalizing only rescales the represented walker, so the
/// trajectory is the same up to rounding.
#[test]
fn stabilization_frequency_does_not_change_the_trajectory() {
    let ham = fixture("h4_vdz8_r3.0");
    let trial = ci_as_trial(&fci_ground_state(&ham).unwrap(), 1e-2).unwrap();
    let f = decompose(&ham, DEFAULT_THRESHOLD).unwrap();
    let cfg = |every| PropagatorConfig {
        stabilize_every: every,
        ..short(200, 16)
    };
    let a = run(&trial, &ham, &f, &cfg(1)).unwrap();
    let b = run(&trial, &ham, &f, &cfg(10)).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.energy - y.energy).abs() < 1e-8, "block {}: {} vs {}", x.block_index, x.energy, y.energy);
        assert_eq!(x.n_walkers, y.n_walkers);
    }
}

/// With no two-body interaction every importance factor is real and
/// positive, so both phaseless variants produce the same trajectory.
#[test]
fn phaseless_variants_agree_without_interaction() {
    let n = 4;
    let h = DMatrix::from_fn(n, n, |p, q| if p == q { p as f64 - 1.5 } else { -0.4 / (1.0 + (p + q) as f64) });
    let ham = Hamiltonian::new(2, 2, 0.3, h, Eri::zeros(n)).unwrap();
    let dets = vec![Determinant::hartree_fock(2, 2), Determinant::from_orbitals(&[0, 2], &[0, 2])];
    let trial = TrialWavefunction::new(n, dets, vec![0.95, 0.2]).unwrap();
    let f = decompose(&ham, DEFAULT_THRESHOLD).unwrap();
    let cfg = |v| PropagatorConfig {
        phaseless_variant: v,
        ..short(3000, 8)
    };
    let a = run(&trial, &ham, &f, &cfg(PhaselessVariant::StandardArg)).unwrap();
    let b = run(&trial, &ham, &f, &cfg(PhaselessVariant::RealPartArg)).unwrap();
    assert_eq!(a, b);
    let exact = fci_ground_state(&ham).unwrap().energy;
    let last = a.records.last().unwrap().energy;
    assert!((last - exact).abs() < 1e-6, "{last} vs {exact}");
}

#[test]
fn exact_trial_has_much_smaller_block_variance() {
    let ham = fixture("h4_sto3g_r2.0");
    let f = decompose(&ham, DEFAULT_THRESHOLD).unwrap();
    let exact = fci_ground_state(&ham).unwrap();
    let cfg = PropagatorConfig {
        dtau: 0.005,
        n_steps: 1000,
        n_walkers: 50,
        seed: 3,
        equilibration_tau: 1.0,
        ..PropagatorConfig::default()
    };
    let variance = |t: &TrialWavefunction| {
        let e = run(t, &ham, &f, &cfg).unwrap().production();
        let m = e.iter().sum::<f64>() / e.len() as f64;
        e.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (e.len() - 1) as f64
    };
    let v_exact = variance(&ci_as_trial(&exact, 0.0).unwrap());
    let v_hf = variance(&hf_trial(&ham));
    assert!(v_hf > 0.0);
    assert!(10.0 * v_exact <= v_hf, "{v_exact} vs {v_hf}");
}

#[test]
fn hf_trial_energy_lies_between_hf_and_fci() {
    let ham = fixture("h4_sto3g_r2.0");
    let out = run_afqmc(
        &ham,
        &hf_trial(&ham),
        &PropagatorConfig {
            dtau: 0.005,
            n_steps: 1600,
            n_walkers: 100,
            seed: 8,
            equilibration_tau: 1.0,
            ..PropagatorConfig::default()
        },
    )
    .unwrap();
    let e = out.estimate;
    let r = reference("h4_sto3g_r2.0");
    let (e_hf, e_fci) = (r["e_rhf"].as_f64().unwrap(), r["e_fci"].as_f64().unwrap());
    assert!(e.energy < e_hf - 0.03, "{e:?}");
    assert!(e.energy >= e_fci - 3.0 * e.error, "{e:?} below {e_fci}");
}
