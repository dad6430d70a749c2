//! Determinants, adjugates and second-order cofactors of the small square
//! overlap blocks `Φ[occ, :]`. Exact (cofactor expansion) when the block is
//! singular or nearly so, LU-based otherwise.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) type C64 = Complex64;

/// Below this pivot ratio the LU route is abandoned for cofactor expansion.
const CONDITION_FLOOR: f64 = 1e-7;

pub(crate) fn det(m: &DMatrix<C64>) -> C64 {
    match m.nrows() {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

fn minor(m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
    let keep_r: Vec<usize> = (0..m.nrows()).filter(|r| !rows.contains(r)).collect();
    let keep_c: Vec<usize> = (0..m.ncols()).filter(|c| !cols.contains(c)).collect();
    DMatrix::from_fn(keep_r.len(), keep_c.len(), |i, j| m[(keep_r[i], keep_c[j])])
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Returns `(det M, adj M)` with `adj M = det(M) M⁻¹` whenever M is invertible.
pub(crate) fn det_adjugate(m: &DMatrix<C64>) -> (C64, DMatrix<C64>) {
    let n = m.nrows();
    match n {
        0 => return (C64::new(1.0, 0.0), DMatrix::zeros(0, 0)),
        1 => return (m[(0, 0)], DMatrix::from_element(1, 1, C64::new(1.0, 0.0))),
        _ => {}
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let (lo, hi) = (0..n)
        .map(|i| u[(i, i)].norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi > 0.0 && lo / hi > CONDITION_FLOOR {
        let d = lu.determinant();
        if let Some(inv) = lu.try_inverse() {
            return (d, inv * d);
        }
    }
    cofactor_adjugate(m)
}

pub(crate) fn cofactor_adjugate(m: &DMatrix<C64>) -> (C64, DMatrix<C64>) {
    let n = m.nrows();
    let adj = DMatrix::from_fn(n, n, |j, k| det(&minor(m, &[k], &[j])) * sign(j + k));
    // Laplace expansion along the first row
    let d = (0..n).map(|j| m[(0, j)] * adj[(j, 0)]).sum();
    (d, adj)
}

pub(crate) fn pair_index(k: usize, l: usize) -> usize {
    debug_assert!(k < l);
    l * (l - 1) / 2 + k
}

/// Second-order signed cofactors `C2[(k,l),(j,m)] = (−1)^{k+l+j+m}
/// det(M without rows k,l and columns j,m)` for `k<l`, `j<m`, indexed by
/// [`pair_index`].
pub(crate) fn second_cofactors(m: &DMatrix<C64>, d: C64, adj: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let np = n * n.saturating_sub(1) / 2;
    let mut out = DMatrix::zeros(np, np);
    if np == 0 {
        return out;
    }
    let exact = d.norm() == 0.0 || {
        // Jacobi's identity loses accuracy when det is tiny relative to adj
        let scale = adj.iter().map(|x| x.norm()).fold(0.0, f64::max);
        d.norm() < CONDITION_FLOOR * scale.max(f64::MIN_POSITIVE)
    };
    for l in 1..n {
        for k in 0..l {
            for mm in 1..n {
                for j in 0..mm {
                    let v = if exact {
                        det(&minor(m, &[k, l], &[j, mm])) * sign(k + l + j + mm)
                    } else {
                        (adj[(j, k)] * adj[(mm, l)] - adj[(j, l)] * adj[(mm, k)]) / d
                    };
                    out[(pair_index(k, l), pair_index(j, mm))] = v;
                }
            }
        }
    }
    out
}
