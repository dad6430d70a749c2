//! Determinant algebra.
//!
//! Occupations are bit strings over spatial orbitals, one per spin. The
//! canonical spin-orbital order is interleaved, `1α 1β 2α 2β …`; every
//! fermionic sign in [`slater_condon`] derives from it. Walkers, on the other
//! hand, factorize into an α block and a β block, so overlaps with walkers use
//! the α-then-β order. [`Determinant::blocked_sign`] converts between the two.

mod slater;
mod small;

pub use slater::{
    greens_function, local_energy, trial_walker_overlap, GreensFunction, SlaterMatrix,
    TrialWavefunction,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::hamio::Hamiltonian;

/// Occupation string of one spin over at most 64 spatial orbitals; bit `p` is
/// orbital `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinString {
    bits: u64,
    count: u32,
}

impl SpinString {
    pub fn from_bits(bits: u64) -> Self {
        SpinString {
            bits,
            count: bits.count_ones(),
        }
    }

    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        Self::from_bits(orbitals.iter().fold(0u64, |acc, &p| acc | (1 << p)))
    }

    /// Lowest `n` orbitals occupied.
    pub fn aufbau(n: usize) -> Self {
        Self::from_bits(if n == 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn count(&self) -> usize {
        self.count as usize
    }

    pub fn is_occupied(&self, p: usize) -> bool {
        self.bits >> p & 1 == 1
    }

    pub fn orbitals(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count());
        let mut b = self.bits;
        while b != 0 {
            out.push(b.trailing_zeros() as usize);
            b &= b - 1;
        }
        out
    }

    /// Relabels orbital `k` as `map[k]`.
    pub fn remap(&self, map: &[usize]) -> Self {
        Self::from_orbitals(&self.orbitals().iter().map(|&p| map[p]).collect::<Vec<_>>())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    pub alpha: SpinString,
    pub beta: SpinString,
}

impl Determinant {
    pub fn new(alpha: SpinString, beta: SpinString) -> Self {
        Determinant { alpha, beta }
    }

    pub fn from_orbitals(alpha: &[usize], beta: &[usize]) -> Self {
        Self::new(SpinString::from_orbitals(alpha), SpinString::from_orbitals(beta))
    }

    pub fn hartree_fock(n_alpha: usize, n_beta: usize) -> Self {
        Self::new(SpinString::aufbau(n_alpha), SpinString::aufbau(n_beta))
    }

    /// Interleaved spin-orbital mask: bit `2p` is `pα`, bit `2p+1` is `pβ`.
    pub fn spin_orbital_mask(&self) -> u128 {
        spread(self.alpha.bits) | (spread(self.beta.bits) << 1)
    }

    pub fn from_spin_orbital_mask(mask: u128) -> Self {
        Self::new(
            SpinString::from_bits(gather(mask)),
            SpinString::from_bits(gather(mask >> 1)),
        )
    }

    /// Occupations in interleaved order, orbital 1 first:
    /// `n1α n1β n2α n2β …`.
    pub fn occupation_string(&self, n_spatial: usize) -> String {
        (0..n_spatial)
            .flat_map(|p| [self.alpha.is_occupied(p), self.beta.is_occupied(p)])
            .map(|b| if b { '1' } else { '0' })
            .collect()
    }

    /// Parses an interleaved occupation string (see [`occupation_string`]).
    ///
    /// [`occupation_string`]: Determinant::occupation_string
    pub fn parse_occupation_string(s: &str) -> Result<Self> {
        if s.len() % 2 != 0 || s.len() > 128 {
            return Err(Error::invalid(format!("occupation string `{s}` has bad length")));
        }
        let mut mask = 0u128;
        for (j, c) in s.chars().enumerate() {
            match c {
                '1' => mask |= 1 << j,
                '0' => {}
                _ => return Err(Error::invalid(format!("occupation string `{s}` is not binary"))),
            }
        }
        Ok(Self::from_spin_orbital_mask(mask))
    }

    /// Device display order: the interleaved string reversed, so spin
    /// orbital `1α` is the rightmost character (HF in two orbitals reads
    /// `0011`).
    pub fn display_string(&self, n_spatial: usize) -> String {
        self.occupation_string(n_spatial).chars().rev().collect()
    }

    pub fn parse_display_string(s: &str) -> Result<Self> {
        Self::parse_occupation_string(&s.chars().rev().collect::<String>())
    }

    /// Sign relating the interleaved product of creation operators to the
    /// α-block-then-β-block product: `(−1)^{#(kβ, lα) occupied with k < l}`.
    pub fn blocked_sign(&self) -> f64 {
        let mut swaps = 0u32;
        for k in self.beta.orbitals() {
            let above = if k >= 63 { 0 } else { self.alpha.bits >> (k + 1) };
            swaps += above.count_ones();
        }
        if swaps % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn excitation_degree(&self, other: &Determinant) -> usize {
        ((self.alpha.bits ^ other.alpha.bits).count_ones()
            + (self.beta.bits ^ other.beta.bits).count_ones()) as usize
            / 2
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = 64 - (self.alpha.bits | self.beta.bits).leading_zeros() as usize;
        write!(f, "{}", self.occupation_string(n.max(1)))
    }
}

fn spread(bits: u64) -> u128 {
    let mut out = 0u128;
    let mut b = bits;
    while b != 0 {
        let p = b.trailing_zeros();
        out |= 1u128 << (2 * p);
        b &= b - 1;
    }
    out
}

fn gather(mask: u128) -> u64 {
    let mut out = 0u64;
    for p in 0..64 {
        if mask >> (2 * p) & 1 == 1 {
            out |= 1 << p;
        }
    }
    out
}

#[inline]
fn parity_below(mask: u128, so: usize) -> f64 {
    let below = mask & ((1u128 << so) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies `a_so` (annihilate) or `a†_so` (create) to an interleaved mask and
/// returns the fermionic sign, or `None` when the result vanishes.
#[inline]
pub(crate) fn apply_op(mask: &mut u128, so: usize, create: bool) -> Option<f64> {
    let occupied = *mask >> so & 1 == 1;
    if occupied == create {
        return None;
    }
    let sign = parity_below(*mask, so);
    *mask ^= 1u128 << so;
    Some(sign)
}

#[inline]
fn so_h(ham: &Hamiltonian, i: usize, j: usize) -> f64 {
    if i % 2 == j % 2 {
        ham.h[(i / 2, j / 2)]
    } else {
        0.0
    }
}

/// `(pq|rs)` over spin orbitals.
#[inline]
fn so_g(ham: &Hamiltonian, p: usize, q: usize, r: usize, s: usize) -> f64 {
    if p % 2 == q % 2 && r % 2 == s % 2 {
        ham.g.get(p / 2, q / 2, r / 2, s / 2)
    } else {
        0.0
    }
}

fn mask_orbitals(mut mask: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// Diagonal Slater–Condon element `⟨D|H|D⟩`, core energy included.
pub fn diagonal_element(ham: &Hamiltonian, d: &Determinant) -> f64 {
    let occ = mask_orbitals(d.spin_orbital_mask());
    let mut e = ham.e_core;
    for (a, &i) in occ.iter().enumerate() {
        e += so_h(ham, i, i);
        for &j in &occ[..a] {
            e += so_g(ham, i, i, j, j) - so_g(ham, i, j, j, i);
        }
    }
    e
}

/// `⟨d1|H|d2⟩` by the Slater–Condon rules. Determinants in different
/// particle-number or Sz sectors give zero.
pub fn slater_condon(ham: &Hamiltonian, d1: &Determinant, d2: &Determinant) -> f64 {
    if d1.alpha.count != d2.alpha.count || d1.beta.count != d2.beta.count {
        return 0.0;
    }
    let m1 = d1.spin_orbital_mask();
    let m2 = d2.spin_orbital_mask();
    let diff = m1 ^ m2;
    match diff.count_ones() {
        0 => diagonal_element(ham, d1),
        2 => {
            let i = (m2 & diff).trailing_zeros() as usize;
            let a = (m1 & diff).trailing_zeros() as usize;
            let mut m = m2;
            let sign = apply_op(&mut m, i, false).unwrap() * apply_op(&mut m, a, true).unwrap();
            let mut v = so_h(ham, a, i);
            for k in mask_orbitals(m2) {
                if k != i {
                    v += so_g(ham, a, i, k, k) - so_g(ham, a, k, k, i);
                }
            }
            sign * v
        }
        4 => {
            let holes = mask_orbitals(m2 & diff);
            let parts = mask_orbitals(m1 & diff);
            let (i, j) = (holes[0], holes[1]);
            let (a, b) = (parts[0], parts[1]);
            let mut m = m2;
            let sign = apply_op(&mut m, i, false).unwrap()
                * apply_op(&mut m, a, true).unwrap()
                * apply_op(&mut m, j, false).unwrap()
                * apply_op(&mut m, b, true).unwrap();
            sign * (so_g(ham, a, i, b, j) - so_g(ham, a, j, b, i))
        }
        _ => 0.0,
    }
}

/// One-particle transition element `⟨d1|a†_p a_q|d2⟩` for spin `spin`
/// (0 = α, 1 = β) in the interleaved convention.
pub fn one_body_transition(d1: &Determinant, d2: &Determinant, spin: usize, p: usize, q: usize) -> f64 {
    let mut m = d2.spin_orbital_mask();
    let s1 = match apply_op(&mut m, 2 * q + spin, false) {
        Some(s) => s,
        None => return 0.0,
    };
    let s2 = match apply_op(&mut m, 2 * p + spin, true) {
        Some(s) => s,
        None => return 0.0,
    };
    if m == d1.spin_orbital_mask() {
        s1 * s2
    } else {
        0.0
    }
}
