//! Electronic Hamiltonians: FCIDUMP input/output and frozen-core folding.
//!
//! Index contract: orbitals are 0-based in memory and 1-based in files. The
//! two-electron tensor is stored in chemists' notation, `g[p,q,r,s] = (pq|rs)`,
//! so that
//!
//! ```text
//! H = e_core + Σ_pq h_pq a†_p a_q + ½ Σ_pqrs (pq|rs) a†_p a†_r a_s a_q
//! ```
//!
//! with spin summed implicitly over spin-restricted spatial orbitals. Nothing
//! else in the crate converts between notations.

use std::fmt::Write as _;
use std::io::Read;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense rank-4 tensor with 8-fold permutational symmetry, chemists' order.
#[derive(Clone, Debug, PartialEq)]
pub struct Eri {
    n: usize,
    data: Vec<f64>,
}

impl Eri {
    pub fn zeros(n: usize) -> Self {
        Eri {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.idx(p, q, r, s)]
    }

    /// Writes a single element without touching its symmetry partners.
    pub fn set_raw(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let i = self.idx(p, q, r, s);
        self.data[i] = v;
    }

    /// Writes `v` to all eight symmetry-equivalent positions.
    pub fn set_sym(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.set_raw(a, b, c, d, v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &Eri) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.get(p, q, r, s);
                        if (v - self.get(q, p, r, s)).abs() > tol
                            || (v - self.get(p, q, s, r)).abs() > tol
                            || (v - self.get(r, s, p, q)).abs() > tol
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub n_spatial: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub e_core: f64,
    pub h: DMatrix<f64>,
    pub g: Eri,
    pub point_group_irreps: Option<Vec<u32>>,
}

impl Hamiltonian {
    pub fn new(n_alpha: usize, n_beta: usize, e_core: f64, h: DMatrix<f64>, g: Eri) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || g.n() != n {
            return Err(Error::invalid("integral dimensions disagree"));
        }
        if n_alpha > n || n_beta > n {
            return Err(Error::invalid(format!(
                "{n_alpha} alpha / {n_beta} beta electrons do not fit in {n} orbitals"
            )));
        }
        Ok(Hamiltonian {
            n_spatial: n,
            n_alpha,
            n_beta,
            e_core,
            h,
            g,
            point_group_irreps: None,
        })
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    /// Checks the symmetry invariants of the integrals.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_spatial;
        for p in 0..n {
            for q in 0..p {
                if (self.h[(p, q)] - self.h[(q, p)]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("h is not symmetric at ({p},{q})")));
                }
            }
        }
        if !self.g.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::invalid("g lacks 8-fold permutational symmetry"));
        }
        Ok(())
    }

    /// Energy of the aufbau determinant (lowest orbitals occupied) in the
    /// orbital basis of the integrals. Closed-form RHF/ROHF expression.
    pub fn reference_energy(&self) -> f64 {
        let occ_a: Vec<usize> = (0..self.n_alpha).collect();
        let occ_b: Vec<usize> = (0..self.n_beta).collect();
        let mut e = self.e_core;
        for &i in occ_a.iter().chain(&occ_b) {
            e += self.h[(i, i)];
        }
        for occ in [&occ_a, &occ_b] {
            for &i in occ.iter() {
                for &j in occ.iter() {
                    e += 0.5 * (self.g.get(i, i, j, j) - self.g.get(i, j, j, i));
                }
            }
        }
        for &i in &occ_a {
            for &j in &occ_b {
                e += self.g.get(i, i, j, j);
            }
        }
        e
    }
}

/// Partition of the orbitals into frozen core, active and (implicit) virtual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSpaceSpec {
    pub n_core: usize,
    pub active_orbitals: Vec<usize>,
    pub n_active_alpha: usize,
    pub n_active_beta: usize,
}

impl ActiveSpaceSpec {
    /// `(n_e e, n_o o)` active space directly above `n_core` frozen orbitals,
    /// split into equal α/β counts (odd electron goes to α).
    pub fn contiguous(n_core: usize, n_active: usize, n_active_electrons: usize) -> Self {
        let n_beta = n_active_electrons / 2;
        ActiveSpaceSpec {
            n_core,
            active_orbitals: (n_core..n_core + n_active).collect(),
            n_active_alpha: n_active_electrons - n_beta,
            n_active_beta: n_beta,
        }
    }

    /// Everything active: no frozen core, no discarded virtuals.
    pub fn full(ham: &Hamiltonian) -> Self {
        ActiveSpaceSpec {
            n_core: 0,
            active_orbitals: (0..ham.n_spatial).collect(),
            n_active_alpha: ham.n_alpha,
            n_active_beta: ham.n_beta,
        }
    }

    /// Only the core is frozen; every remaining orbital stays active.
    pub fn frozen_core(ham: &Hamiltonian, n_core: usize) -> Self {
        ActiveSpaceSpec {
            n_core,
            active_orbitals: (n_core..ham.n_spatial).collect(),
            n_active_alpha: ham.n_alpha.saturating_sub(n_core),
            n_active_beta: ham.n_beta.saturating_sub(n_core),
        }
    }

    pub fn n_active(&self) -> usize {
        self.active_orbitals.len()
    }

    pub fn validate(&self, ham: &Hamiltonian) -> Result<()> {
        let n = ham.n_spatial;
        if self.n_core > n {
            return Err(Error::invalid(format!("{} core orbitals exceed {n}", self.n_core)));
        }
        if self.active_orbitals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("active orbitals must be distinct and ascending"));
        }
        if let Some(&p) = self.active_orbitals.iter().find(|&&p| p < self.n_core || p >= n) {
            return Err(Error::invalid(format!("active orbital {p} is core or out of range")));
        }
        let n_act = self.n_active();
        if self.n_active_alpha > n_act || self.n_active_beta > n_act {
            return Err(Error::invalid("active electrons exceed active orbitals"));
        }
        if self.n_core + self.n_active_alpha != ham.n_alpha
            || self.n_core + self.n_active_beta != ham.n_beta
        {
            return Err(Error::invalid(format!(
                "core {} + active ({},{}) electrons do not match ({},{})",
                self.n_core, self.n_active_alpha, self.n_active_beta, ham.n_alpha, ham.n_beta
            )));
        }
        Ok(())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "e")
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad real value `{tok}`")))
}

fn parse_int(tok: &str, line: usize) -> Result<i64> {
    tok.trim()
        .parse::<i64>()
        .map_err(|_| parse_err(line, format!("bad integer `{tok}`")))
}

/// Reads a Molpro-style FCIDUMP.
pub fn parse_fcidump<R: Read>(mut reader: R) -> Result<Hamiltonian> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| parse_err(0, e.to_string()))?;
    parse_fcidump_str(&text)
}

pub fn parse_fcidump_str(text: &str) -> Result<Hamiltonian> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    // Header: everything up to `&END` or `/`.
    let mut header = String::new();
    let mut header_end = 0;
    let mut closed = false;
    for (no, line) in lines.by_ref() {
        header_end = no;
        let trimmed = line.trim();
        if trimmed.eq_ignore_ascii_case("&END") || trimmed == "/" {
            closed = true;
            break;
        }
        let (body, done) = match trimmed.to_ascii_uppercase().find("&END") {
            Some(pos) => (&trimmed[..pos], true),
            None => match trimmed.strip_suffix('/') {
                Some(b) => (b, true),
                None => (trimmed, false),
            },
        };
        header.push_str(body);
        header.push(' ');
        if done {
            closed = true;
            break;
        }
    }
    if !closed {
        return Err(parse_err(header_end, "header is not terminated by &END"));
    }
    let upper = header.to_ascii_uppercase();
    let body = upper
        .trim()
        .strip_prefix("&FCI")
        .ok_or_else(|| parse_err(1, "header must start with &FCI"))?;

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i64;
    let mut orbsym = None;
    // KEY=v1,v2,...  values run until the next KEY=
    let mut key: Option<String> = None;
    let mut values: Vec<String> = Vec::new();
    let mut flush = |key: &Option<String>, values: &mut Vec<String>| -> Result<()> {
        if let Some(k) = key {
            match k.as_str() {
                "NORB" | "NELEC" | "MS2" => {
                    let v = values
                        .first()
                        .ok_or_else(|| parse_err(1, format!("{k} has no value")))
                        .and_then(|t| parse_int(t, 1))?;
                    match k.as_str() {
                        "NORB" => norb = Some(v),
                        "NELEC" => nelec = Some(v),
                        _ => ms2 = v,
                    }
                }
                "ORBSYM" => {
                    orbsym = Some(
                        values
                            .iter()
                            .map(|t| parse_int(t, 1).map(|v| v as u32))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                _ => {}
            }
        }
        values.clear();
        Ok(())
    };
    for tok in body.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            flush(&key, &mut values)?;
            key = Some(k.trim().to_string());
            if !v.is_empty() {
                values.push(v.to_string());
            }
        } else {
            values.push(tok.to_string());
        }
    }
    flush(&key, &mut values)?;

    let norb = norb.ok_or_else(|| parse_err(1, "missing NORB"))?;
    let nelec = nelec.ok_or_else(|| parse_err(1, "missing NELEC"))?;
    if norb <= 0 {
        return Err(parse_err(1, format!("NORB={norb} must be positive")));
    }
    if (nelec + ms2) % 2 != 0 || nelec + ms2 < 0 || nelec - ms2 < 0 {
        return Err(parse_err(1, format!("NELEC={nelec}, MS2={ms2} give non-integer or negative spin counts")));
    }
    let n = norb as usize;
    let n_alpha = ((nelec + ms2) / 2) as usize;
    let n_beta = ((nelec - ms2) / 2) as usize;
    if n_alpha > n || n_beta > n {
        return Err(parse_err(1, "more electrons than spin orbitals"));
    }

    let mut h = DMatrix::zeros(n, n);
    let mut g = Eri::zeros(n);
    let mut e_core = 0.0;
    for (no, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(parse_err(no, "expected `value i j k l`"));
        }
        let v = parse_real(toks[0], no)?;
        let mut idx = [0usize; 4];
        for (slot, t) in idx.iter_mut().zip(&toks[1..]) {
            let i = parse_int(t, no)?;
            if i < 0 || i > norb {
                return Err(parse_err(no, format!("orbital index {i} out of range 0..={norb}")));
            }
            *slot = i as usize;
        }
        match idx {
            [0, 0, 0, 0] => e_core = v,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                h[(i - 1, j - 1)] = v;
                h[(j - 1, i - 1)] = v;
            }
            [_, 0, 0, 0] => {} // orbital energies
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                g.set_sym(i - 1, j - 1, k - 1, l - 1, v)
            }
            _ => return Err(parse_err(no, format!("unsupported index pattern {idx:?}"))),
        }
    }

    let mut ham = Hamiltonian::new(n_alpha, n_beta, e_core, h, g)?;
    if let Some(sym) = orbsym {
        if sym.len() != n {
            return Err(parse_err(1, format!("ORBSYM has {} entries, NORB={n}", sym.len())));
        }
        ham.point_group_irreps = Some(sym);
    }
    Ok(ham)
}

/// Writes an FCIDUMP holding each symmetry-unique element once.
pub fn write_fcidump(ham: &Hamiltonian) -> String {
    let n = ham.n_spatial;
    let mut out = String::new();
    let ms2 = ham.n_alpha as i64 - ham.n_beta as i64;
    let _ = writeln!(
        out,
        " &FCI NORB={n},NELEC={},MS2={ms2},",
        ham.n_electrons()
    );
    let sym = ham
        .point_group_irreps
        .clone()
        .unwrap_or_else(|| vec![1; n]);
    let sym: Vec<String> = sym.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "  ORBSYM={},", sym.join(","));
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for p in 0..n {
        for q in 0..=p {
            let pq = p * (p + 1) / 2 + q;
            for r in 0..n {
                for s in 0..=r {
                    let rs = r * (r + 1) / 2 + s;
                    if rs > pq {
                        continue;
                    }
                    let v = ham.g.get(p, q, r, s);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ham.h[(p, q)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", p + 1, q + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ham.e_core);
    out
}

/// Folds the frozen core into the constant and one-body terms and restricts
/// the integrals to the active orbitals.
///
/// `e_core' = e_core + Σ_c 2 h_cc + Σ_cd (2 (cc|dd) − (cd|dc))`
/// `h'_pq  = h_pq + Σ_c (2 (pq|cc) − (pc|cq))`
pub fn fold_core(ham: &Hamiltonian, spec: &ActiveSpaceSpec) -> Result<Hamiltonian> {
    spec.validate(ham)?;
    let core: Vec<usize> = (0..spec.n_core).collect();
    let act = &spec.active_orbitals;
    let na = act.len();

    let mut e_core = ham.e_core;
    for &c in &core {
        e_core += 2.0 * ham.h[(c, c)];
        for &d in &core {
            e_core += 2.0 * ham.g.get(c, c, d, d) - ham.g.get(c, d, d, c);
        }
    }

    let h = DMatrix::from_fn(na, na, |i, j| {
        let (p, q) = (act[i], act[j]);
        let mut v = ham.h[(p, q)];
        for &c in &core {
            v += 2.0 * ham.g.get(p, q, c, c) - ham.g.get(p, c, c, q);
        }
        v
    });

    let mut g = Eri::zeros(na);
    for i in 0..na {
        for j in 0..na {
            for k in 0..na {
                for l in 0..na {
                    g.set_raw(i, j, k, l, ham.g.get(act[i], act[j], act[k], act[l]));
                }
            }
        }
    }

    let mut out = Hamiltonian::new(spec.n_active_alpha, spec.n_active_beta, e_core, h, g)?;
    out.point_group_irreps = ham
        .point_group_irreps
        .as_ref()
        .map(|s| act.iter().map(|&p| s[p]).collect());
    Ok(out)
}
