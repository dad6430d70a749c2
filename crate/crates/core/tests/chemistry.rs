mod common;

use common::*;

use qsci_afqmc::detops::{slater_condon, Determinant, TrialWavefunction};
use qsci_afqmc::eigen::EigenSettings;
use qsci_afqmc::factorize::{decompose, reconstruct_eri, DEFAULT_THRESHOLD};
use qsci_afqmc::fci::{ci_matrix, fci_ground_state, fci_ground_state_with, spin_squared, CiSpace};
use qsci_afqmc::hamio::{fold_core, ActiveSpaceSpec, Eri};
use qsci_afqmc::qsci::{embed_trial, run_qsci};
use qsci_afqmc::sampler::{import_counts, sample_state, Mapping};
use qsci_afqmc::Hamiltonian;

const FIXTURES: [&str; 7] = [
    "h2_sto3g_r1.4",
    "h4_sto3g_r2.0",
    "h4_vdz8_r2.0",
    "h4_vdz8_r3.0",
    "h4_vdz8_r4.0",
    "h2o_sto3g_r1.0",
    "h2o_sto3g_r2.0",
];

fn active_spec(name: &str) -> Option<ActiveSpaceSpec> {
    let c = reference(name).get("casci")?.clone();
    let get = |k: &str| c[k].as_u64().unwrap() as usize;
    Some(ActiveSpaceSpec::contiguous(
        get("n_core"),
        get("n_active"),
        get("n_active_electrons"),
    ))
}

#[test]
fn slater_condon_matches_second_quantization() {
    for name in ["h4_sto3g_r2.0", "h2o_sto3g_r2.0"] {
        let ham = fixture(name);
        let dets = CiSpace::for_hamiltonian(&ham).determinants;
        let dets: Vec<_> = dets.into_iter().step_by(3).take(60).collect();
        let want = hamiltonian_matrix(&ham, &dets);
        let have = ci_matrix(&ham, &dets);
        assert!((have - want).amax() < 1e-11, "{name}");
    }
}

#[test]
fn fci_matches_reference_package() {
    for name in FIXTURES {
        let ham = fixture(name);
        let e = fci_ground_state(&ham).unwrap().energy;
        let want = reference(name)["e_fci"].as_f64().unwrap();
        assert!((e - want).abs() < 1e-8, "{name}: {e} vs {want}");
    }
}

#[test]
fn casci_matches_reference_package() {
    for name in FIXTURES {
        let Some(spec) = active_spec(name) else { continue };
        let e = fci_ground_state(&fold_core(&fixture(name), &spec).unwrap()).unwrap().energy;
        let want = reference(name)["casci"]["e_casci"].as_f64().unwrap();
        assert!((e - want).abs() < 1e-8, "{name}: {e} vs {want}");
    }
}

#[test]
fn hartree_fock_energy_matches_reference_package() {
    for name in FIXTURES {
        let ham = fixture(name);
        let d = Determinant::hartree_fock(ham.n_alpha, ham.n_beta);
        let e = slater_condon(&ham, &d, &d);
        let want = reference(name)["e_rhf"].as_f64().unwrap();
        assert!((e - want).abs() < 1e-8, "{name}: {e} vs {want}");
    }
}

fn permuted(ham: &Hamiltonian, perm: &[usize]) -> Hamiltonian {
    let n = ham.n_spatial;
    let h = nalgebra::DMatrix::from_fn(n, n, |p, q| ham.h[(perm[p], perm[q])]);
    let mut g = Eri::zeros(n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    g.set_raw(p, q, r, s, ham.g.get(perm[p], perm[q], perm[r], perm[s]));
                }
            }
        }
    }
    Hamiltonian::new(ham.n_alpha, ham.n_beta, ham.e_core, h, g).unwrap()
}

#[test]
fn fci_is_orbital_permutation_invariant() {
    for (name, perm) in [
        ("h4_vdz8_r3.0", vec![5, 2, 7, 0, 3, 1, 6, 4]),
        ("h2o_sto3g_r1.0", vec![6, 0, 3, 5, 1, 4, 2]),
    ] {
        let ham = fixture(name);
        let a = fci_ground_state(&ham).unwrap().energy;
        let b = fci_ground_state(&permuted(&ham, &perm)).unwrap().energy;
        assert!((a - b).abs() < 1e-10, "{name}: {a} vs {b}");
    }
}

#[test]
fn ground_states_are_singlets() {
    for name in FIXTURES {
        let ham = fixture(name);
        let r = fci_ground_state(&ham).unwrap();
        let s2 = spin_squared(&r.state(), ham.n_spatial);
        assert!(s2.abs() < 1e-6, "{name}: S² = {s2}");
    }
}

#[test]
fn davidson_agrees_with_dense() {
    let ham = fixture("h2o_sto3g_r2.0");
    let dense = fci_ground_state(&ham).unwrap().energy;
    let settings = EigenSettings {
        dense_limit: 0,
        ..EigenSettings::default()
    };
    let iterative = fci_ground_state_with(&ham, &settings).unwrap().energy;
    assert!((dense - iterative).abs() < 1e-10);
}

#[test]
fn cholesky_reconstruction_and_energy_shift() {
    for name in FIXTURES {
        let ham = fixture(name);
        let f = decompose(&ham, DEFAULT_THRESHOLD).unwrap();
        let g = reconstruct_eri(&f);
        let residual = g.max_abs_diff(&ham.g);
        assert!(residual <= 1e-8, "{name}: residual {residual}");
        let mut rebuilt = ham.clone();
        rebuilt.g = g;
        let shift = fci_ground_state(&rebuilt).unwrap().energy - fci_ground_state(&ham).unwrap().energy;
        assert!(shift.abs() <= 1e-6, "{name}: shift {shift}");
    }
}

#[test]
fn noiseless_qsci_equals_casci() {
    for name in ["h2o_sto3g_r1.0", "h2o_sto3g_r2.0", "h4_vdz8_r2.0", "h4_vdz8_r4.0"] {
        let spec = active_spec(name).unwrap();
        let active = fold_core(&fixture(name), &spec).unwrap();
        let casci = fci_ground_state(&active).unwrap();
        let counts = sample_state(&casci.state(), active.n_spatial, 1_000_000, 7, 0.0).unwrap();
        let q = run_qsci(&active, &counts, None, true, &EigenSettings::default()).unwrap();
        assert!((q.energy - casci.energy).abs() < 1e-8, "{name}: {} vs {}", q.energy, casci.energy);
    }
}

/// The embedded trial keeps the core doubly occupied, so its energy under
/// the full Hamiltonian is the QSCI energy under the folded one.
#[test]
fn embedded_trial_energy_is_folded_energy() {
    for name in ["h2o_sto3g_r2.0", "h4_vdz8_r3.0"] {
        let ham = fixture(name);
        let spec = active_spec(name).unwrap();
        let active = fold_core(&ham, &spec).unwrap();
        let casci = fci_ground_state(&active).unwrap();
        let counts = sample_state(&casci.state(), active.n_spatial, 20_000, 3, 0.0).unwrap();
        let q = run_qsci(&active, &counts, Some(3), true, &EigenSettings::default()).unwrap();
        let trial = embed_trial(&q, &spec, ham.n_spatial).unwrap();
        let e = trial.variational_energy(&ham);
        assert!((e - q.energy).abs() < 1e-8, "{name}: {e} vs {}", q.energy);
        assert!(e >= fci_ground_state(&ham).unwrap().energy - 1e-10);
    }
}

#[test]
fn noisy_sampling_stays_above_noiseless() {
    let name = "h4_vdz8_r4.0";
    let spec = active_spec(name).unwrap();
    let active = fold_core(&fixture(name), &spec).unwrap();
    let casci = fci_ground_state(&active).unwrap();
    for r in [None, Some(4), Some(8)] {
        let clean = sample_state(&casci.state(), 4, 100_000, 5, 0.0).unwrap();
        let noisy = sample_state(&casci.state(), 4, 100_000, 5, 0.05).unwrap();
        let e_clean = run_qsci(&active, &clean, r, true, &EigenSettings::default()).unwrap().energy;
        let e_noisy = run_qsci(&active, &noisy, r, true, &EigenSettings::default()).unwrap().energy;
        assert!(e_clean >= casci.energy - 1e-10);
        if r.is_none() {
            assert!(e_noisy >= e_clean - 1e-10, "{e_noisy} < {e_clean}");
        }
        assert!(e_noisy >= casci.energy - 1e-10);
    }
}

#[test]
fn scbk_counts_give_the_same_trial() {
    let ham = fixture("h2o_sto3g_r2.0");
    let spec = active_spec("h2o_sto3g_r2.0").unwrap();
    let active = fold_core(&ham, &spec).unwrap();
    let scbk = import_counts("00 5000\n11 4000\n01 300\n10 200\n", Mapping::Scbk2e2o).unwrap();
    let direct = import_counts("1100 5000\n0011 4000\n1001 300\n0110 200\n", Mapping::OccupationDirect).unwrap();
    let trial = |c| {
        let q = run_qsci(&active, c, None, true, &EigenSettings::default()).unwrap();
        embed_trial(&q, &spec, ham.n_spatial).unwrap()
    };
    let (a, b): (TrialWavefunction, TrialWavefunction) = (trial(&scbk), trial(&direct));
    assert_eq!(a.determinants(), b.determinants());
    assert_eq!(a.coefficients(), b.coefficients());
}
