//! Brute-force second-quantization oracle shared by the integration tests.
//! States are sparse maps from interleaved spin-orbital masks (bit `2p` is
//! `pα`, bit `2p+1` is `pβ`) to amplitudes; the basis state for a mask is
//! `a†_{i1} a†_{i2} … |0⟩` with `i1 < i2 < …`.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use qsci_afqmc::detops::{Determinant, SlaterMatrix, TrialWavefunction};
use qsci_afqmc::pipeline::load_fixture;
use qsci_afqmc::Hamiltonian;

pub type State = BTreeMap<u128, C64>;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> Hamiltonian {
    load_fixture(&fixture_path(&format!("{name}.fcidump"))).unwrap()
}

/// Reference numbers generated alongside each fixture by an external
/// quantum chemistry package.
pub fn reference(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_path(&format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn op(mask: u128, so: usize, create: bool) -> Option<(u128, f64)> {
    let occ = mask >> so & 1 == 1;
    if occ == create {
        return None;
    }
    let sign = if (mask & ((1u128 << so) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask ^ (1u128 << so), sign))
}

/// Applies `Σ_i c_i a†_i` to every component.
pub fn create_orbital(state: &State, coeffs: &[(usize, C64)]) -> State {
    let mut out = State::new();
    for (&m, &a) in state {
        for &(so, c) in coeffs {
            if let Some((m2, s)) = op(m, so, true) {
                *out.entry(m2).or_default() += a * c * s;
            }
        }
    }
    out
}

/// The walker as a Fock-space vector, the α/β-blocked product
/// `b†_{α1} … b†_{αn} b†_{β1} … b†_{βm} |0⟩` of its column orbitals.
pub fn walker_state(w: &SlaterMatrix) -> State {
    let mut cols: Vec<Vec<(usize, C64)>> = Vec::new();
    for spin in 0..2 {
        let b = w.block(spin);
        for k in 0..b.ncols() {
            cols.push((0..b.nrows()).map(|p| (2 * p + spin, b[(p, k)])).collect());
        }
    }
    let mut state = State::from([(0u128, C64::new(1.0, 0.0))]);
    for col in cols.iter().rev() {
        state = create_orbital(&state, col);
    }
    state
}

pub fn trial_state(t: &TrialWavefunction) -> State {
    let mut s = State::new();
    for (d, c) in t.determinants().iter().zip(t.coefficients()) {
        *s.entry(d.spin_orbital_mask()).or_default() += C64::new(*c, 0.0);
    }
    s
}

/// `⟨a|b⟩` with `a` taken as real-or-complex bra.
pub fn inner(a: &State, b: &State) -> C64 {
    a.iter().filter_map(|(m, x)| b.get(m).map(|y| x.conj() * y)).sum()
}

/// `a†_p a_q` on spin orbitals.
pub fn excite(state: &State, p: usize, q: usize) -> State {
    let mut out = State::new();
    for (&m, &a) in state {
        if let Some((m1, s1)) = op(m, q, false) {
            if let Some((m2, s2)) = op(m1, p, true) {
                *out.entry(m2).or_default() += a * s1 * s2;
            }
        }
    }
    out
}

/// `H|ψ⟩` with `H = E_c + Σ h_pq a†_p a_q + ½ Σ (pq|rs) a†_p a†_r a_s a_q`
/// summed over all spin-orbital indices.
pub fn apply_hamiltonian(ham: &Hamiltonian, state: &State) -> State {
    let nso = 2 * ham.n_spatial;
    let mut out = State::new();
    for (&m, &a) in state {
        *out.entry(m).or_default() += a * ham.e_core;
        for p in 0..nso {
            for q in (0..nso).filter(|q| q % 2 == p % 2) {
                let h = ham.h[(p / 2, q / 2)];
                if h == 0.0 {
                    continue;
                }
                if let Some((m1, s1)) = op(m, q, false) {
                    if let Some((m2, s2)) = op(m1, p, true) {
                        *out.entry(m2).or_default() += a * h * s1 * s2;
                    }
                }
            }
        }
        for q in 0..nso {
            let Some((m1, s1)) = op(m, q, false) else { continue };
            for s in 0..nso {
                let Some((m2, s2)) = op(m1, s, false) else { continue };
                for r in (0..nso).filter(|r| r % 2 == s % 2) {
                    let Some((m3, s3)) = op(m2, r, true) else { continue };
                    for p in (0..nso).filter(|p| p % 2 == q % 2) {
                        let Some((m4, s4)) = op(m3, p, true) else { continue };
                        let g = ham.g.get(p / 2, q / 2, r / 2, s / 2);
                        *out.entry(m4).or_default() += a * (0.5 * g * s1 * s2 * s3 * s4);
                    }
                }
            }
        }
    }
    out
}

/// Dense matrix of `H` over the given determinants.
pub fn hamiltonian_matrix(ham: &Hamiltonian, dets: &[Determinant]) -> DMatrix<f64> {
    let n = dets.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, dj) in dets.iter().enumerate() {
        let hj = apply_hamiltonian(ham, &State::from([(dj.spin_orbital_mask(), C64::new(1.0, 0.0))]));
        for (i, di) in dets.iter().enumerate() {
            m[(i, j)] = hj.get(&di.spin_orbital_mask()).map_or(0.0, |v| v.re);
        }
    }
    m
}

/// All determinants with the given electron counts.
pub fn all_determinants(n: usize, n_alpha: usize, n_beta: usize) -> Vec<Determinant> {
    let strings = |k: usize| -> Vec<Vec<usize>> {
        (0u64..1 << n)
            .filter(|b| b.count_ones() as usize == k)
            .map(|b| (0..n).filter(|p| b >> p & 1 == 1).collect())
            .collect()
    };
    let mut out = Vec::new();
    for a in strings(n_alpha) {
        for b in strings(n_beta) {
            out.push(Determinant::from_orbitals(&a, &b));
        }
    }
    out
}

/// Deterministic pseudo-random complex matrix with entries in the unit box.
pub fn scrambled_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<C64> {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    DMatrix::from_fn(rows, cols, |_, _| C64::new(next(), next()))
}
