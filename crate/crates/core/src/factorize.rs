//! Pivoted incomplete Cholesky factorization of the two-electron tensor,
//! `(pq|rs) ≈ Σ_γ L^γ_pq L^γ_rs`, and the one-body operator
//! `v0 = h − ½ Σ_γ L^γ L^γ` that remains after writing the two-body term as
//! a sum of squares. The field operators are `v_γ = i L^γ`; only `L^γ` is
//! stored.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamio::{Eri, Hamiltonian};

pub const DEFAULT_THRESHOLD: f64 = 1e-8;
/// Negative diagonal drift tolerated (and clamped) in valid integrals.
const CLAMP_FLOOR: f64 = -1e-11;
const CACHE_MAGIC: &[u8; 8] = b"CHOLv1\0\0";

#[derive(Clone, Debug)]
pub struct CholeskyFactorization {
    pub n_spatial: usize,
    pub vectors: Vec<DMatrix<f64>>,
    pub v0: DMatrix<f64>,
    /// Largest |g − Σ L L| over all elements at termination.
    pub residual_max: f64,
    /// Largest remaining diagonal before each pivot, then at termination.
    pub residual_history: Vec<f64>,
}

impl CholeskyFactorization {
    pub fn n_vectors(&self) -> usize {
        self.vectors.len()
    }
}

/// `v0 = h − ½ Σ_γ L^γ L^γ`.
pub fn one_body_operator(h: &DMatrix<f64>, vectors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut v0 = h.clone();
    for l in vectors {
        v0 -= 0.5 * (l * l);
    }
    v0
}

pub fn decompose(ham: &Hamiltonian, threshold: f64) -> Result<CholeskyFactorization> {
    let n = ham.n_spatial;
    let m = n * n;
    let g = |a: usize, b: usize| ham.g.as_slice()[a * m + b];

    let mut diag: Vec<f64> = (0..m).map(|a| g(a, a)).collect();
    if let Some(&bad) = diag.iter().find(|&&d| d < -threshold * 1e3) {
        return Err(Error::NotPositiveSemidefinite { pivot: bad });
    }
    for d in diag.iter_mut() {
        if *d < 0.0 && *d >= CLAMP_FLOOR {
            *d = 0.0;
        }
    }

    let max_rank = n * (n + 1) / 2;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut history = Vec::new();
    loop {
        let (piv, &dmax) = diag
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, x| if *x.1 > *acc.1 { x } else { acc });
        history.push(dmax.max(0.0));
        if m == 0 || dmax <= threshold || cols.len() >= max_rank {
            break;
        }
        let scale = dmax.sqrt();
        let mut col: Vec<f64> = (0..m).map(|a| g(a, piv)).collect();
        for prev in &cols {
            let f = prev[piv];
            if f != 0.0 {
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= f * p;
                }
            }
        }
        for c in col.iter_mut() {
            *c /= scale;
        }
        for (d, c) in diag.iter_mut().zip(&col) {
            *d -= c * c;
            if *d < 0.0 && *d >= CLAMP_FLOOR {
                *d = 0.0;
            }
        }
        if let Some(&bad) = diag.iter().find(|&&d| d < -threshold * 1e3) {
            return Err(Error::NotPositiveSemidefinite { pivot: bad });
        }
        diag[piv] = 0.0;
        cols.push(col);
    }

    let vectors: Vec<DMatrix<f64>> = cols
        .into_iter()
        .map(|c| {
            // symmetrize away round-off between the (pq) and (qp) copies
            let l = DMatrix::from_row_slice(n, n, &c);
            (&l + l.transpose()) * 0.5
        })
        .collect();
    let v0 = one_body_operator(&ham.h, &vectors);
    let mut out = CholeskyFactorization {
        n_spatial: n,
        vectors,
        v0,
        residual_max: 0.0,
        residual_history: history,
    };
    out.residual_max = reconstruct_eri(&out).max_abs_diff(&ham.g);
    Ok(out)
}

pub fn reconstruct_eri(f: &CholeskyFactorization) -> Eri {
    let n = f.n_spatial;
    let mut g = Eri::zeros(n);
    for l in &f.vectors {
        for p in 0..n {
            for q in 0..n {
                let lpq = l[(p, q)];
                if lpq == 0.0 {
                    continue;
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = g.get(p, q, r, s) + lpq * l[(r, s)];
                        g.set_raw(p, q, r, s, v);
                    }
                }
            }
        }
    }
    g
}

/// Binary cache: magic, `n_spatial` and `N_γ` as little-endian u64, then the
/// vectors as little-endian f64 in row-major order.
pub fn write_cache<W: Write>(f: &CholeskyFactorization, mut w: W) -> std::io::Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(f.n_spatial as u64).to_le_bytes())?;
    w.write_all(&(f.vectors.len() as u64).to_le_bytes())?;
    for l in &f.vectors {
        for p in 0..f.n_spatial {
            for q in 0..f.n_spatial {
                w.write_all(&l[(p, q)].to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reloads cached vectors; `v0` is rebuilt from `ham.h`.
pub fn read_cache<R: Read>(mut r: R, ham: &Hamiltonian) -> Result<CholeskyFactorization> {
    let bad = |msg: &str| Error::invalid(format!("Cholesky cache: {msg}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
        Ok(u64::from_le_bytes(word))
    };
    let n = next_u64(&mut r)? as usize;
    let count = next_u64(&mut r)? as usize;
    if n != ham.n_spatial {
        return Err(bad("orbital count does not match the Hamiltonian"));
    }
    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        let mut data = vec![0.0; n * n];
        for v in data.iter_mut() {
            r.read_exact(&mut word).map_err(|_| bad("truncated data"))?;
            *v = f64::from_le_bytes(word);
        }
        vectors.push(DMatrix::from_row_slice(n, n, &data));
    }
    let v0 = one_body_operator(&ham.h, &vectors);
    let mut out = CholeskyFactorization {
        n_spatial: n,
        vectors,
        v0,
        residual_max: 0.0,
        residual_history: Vec::new(),
    };
    out.residual_max = reconstruct_eri(&out).max_abs_diff(&ham.g);
    Ok(out)
}
