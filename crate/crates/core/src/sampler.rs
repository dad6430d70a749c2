//! Stand-in for device sampling: Born-rule draws from a CI vector, per-bit
//! readout flips, the two-qubit SCBK decode table, and counts-file import.
//!
//! Raw bit strings are kept in device display order, the reverse of the
//! interleaved occupation order (`1α` is the rightmost character). The
//! Hartree–Fock state of a two-orbital space therefore reads `0011`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::detops::Determinant;
use crate::error::{Error, Result};

pub const DEFAULT_SHOTS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mapping {
    /// One character per spin orbital, device display order.
    OccupationDirect,
    /// Two qubits for a (2e,2o) space through the SCBK decode table.
    Scbk2e2o,
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occupation-direct" => Ok(Mapping::OccupationDirect),
            "scbk-2e2o" => Ok(Mapping::Scbk2e2o),
            other => Err(Error::invalid(format!("unknown mapping `{other}`"))),
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mapping::OccupationDirect => "occupation-direct",
            Mapping::Scbk2e2o => "scbk-2e2o",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    /// Raw bit string → count, ordered by bit string.
    pub entries: BTreeMap<String, u64>,
    pub shots: u64,
    pub mapping: Mapping,
}

/// A decoded counts entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedEntry {
    pub raw: String,
    pub determinant: Determinant,
    pub count: u64,
}

impl CountsTable {
    pub fn decode(&self, raw: &str) -> Result<Determinant> {
        match self.mapping {
            Mapping::OccupationDirect => Determinant::parse_display_string(raw),
            Mapping::Scbk2e2o => decode_scbk_2e2o(raw),
        }
    }

    pub fn decoded(&self) -> Result<Vec<DecodedEntry>> {
        self.entries
            .iter()
            .map(|(raw, &count)| {
                Ok(DecodedEntry {
                    raw: raw.clone(),
                    determinant: self.decode(raw)?,
                    count,
                })
            })
            .collect()
    }

    /// Entries whose decoded electron counts differ from `(n_alpha, n_beta)`.
    pub fn flagged(&self, n_alpha: usize, n_beta: usize) -> Result<Vec<String>> {
        Ok(self
            .decoded()?
            .into_iter()
            .filter(|e| e.determinant.alpha.count() != n_alpha || e.determinant.beta.count() != n_beta)
            .map(|e| e.raw)
            .collect())
    }

    /// Histogram text, most frequent first.
    pub fn histogram(&self) -> String {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        for (raw, count) in rows {
            out.push_str(&format!("{raw} {count} {:.6}\n", *count as f64 / self.shots as f64));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# mapping: {}; bit order: device (1α rightmost)\n", self.mapping);
        for (raw, count) in &self.entries {
            out.push_str(&format!("{raw} {count}\n"));
        }
        out
    }
}

/// Multinomial draw of `shots` configurations from `|c_i|²`, followed by
/// independent bit flips with probability `noise`. Strings cover
/// `n_spatial` orbitals in device display order.
pub fn sample_state(
    state: &[(Determinant, f64)],
    n_spatial: usize,
    shots: u64,
    seed: u64,
    noise: f64,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::invalid(format!("noise {noise} outside [0, 1)")));
    }
    let norm2: f64 = state.iter().map(|(_, c)| c * c).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("state is not normalized (|c|² sums to {norm2})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // sequential conditional binomials give an exact multinomial
    let mut remaining = shots;
    let mut left_p = 1.0;
    let mut drawn: Vec<(Determinant, u64)> = Vec::new();
    let support: Vec<_> = state.iter().filter(|(_, c)| *c != 0.0).collect();
    for (i, (det, c)) in support.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = c * c;
        let k = if i + 1 == support.len() || left_p <= p {
            remaining
        } else {
            let prob = (p / left_p).clamp(0.0, 1.0);
            Binomial::new(remaining, prob)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(&mut rng)
        };
        left_p -= p;
        remaining -= k;
        if k > 0 {
            drawn.push((*det, k));
        }
    }

    let mut entries: BTreeMap<String, u64> = BTreeMap::new();
    for (det, k) in drawn {
        let raw = det.display_string(n_spatial);
        if noise == 0.0 {
            *entries.entry(raw).or_default() += k;
            continue;
        }
        let bits: Vec<u8> = raw.bytes().collect();
        for _ in 0..k {
            let flipped: String = bits
                .iter()
                .map(|&b| {
                    let flip = rng.random::<f64>() < noise;
                    match (b == b'1') ^ flip {
                        true => '1',
                        false => '0',
                    }
                })
                .collect();
            *entries.entry(flipped).or_default() += 1;
        }
    }
    Ok(CountsTable {
        entries,
        shots,
        mapping: Mapping::OccupationDirect,
    })
}

/// Two-qubit SCBK strings of a (2e,2o) space: `00→1100`, `10→0110`,
/// `01→1001`, `11→0011`, occupations in device display order.
pub fn decode_scbk_2e2o(raw: &str) -> Result<Determinant> {
    let display = match raw {
        "00" => "1100",
        "10" => "0110",
        "01" => "1001",
        "11" => "0011",
        _ => return Err(Error::invalid(format!("`{raw}` is not a two-qubit SCBK string"))),
    };
    Determinant::parse_display_string(display)
}

/// Parses `<bitstring> <count>` records; `#` starts a comment.
pub fn import_counts(text: &str, mapping: Mapping) -> Result<CountsTable> {
    let mut entries = BTreeMap::new();
    let mut width = None;
    let mut shots = 0u64;
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::invalid(format!("counts line {}: {msg}", no + 1));
        let mut toks = line.split_whitespace();
        let (raw, count) = match (toks.next(), toks.next(), toks.next()) {
            (Some(r), Some(c), None) => (r, c),
            _ => return Err(err("expected `<bitstring> <count>`".into())),
        };
        if !raw.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(err(format!("`{raw}` is not a bit string")));
        }
        let count: u64 = count
            .parse()
            .map_err(|_| err(format!("count `{count}` is not a nonnegative integer")))?;
        match width {
            None => width = Some(raw.len()),
            Some(w) if w != raw.len() => return Err(err("bit strings differ in length".into())),
            _ => {}
        }
        if entries.insert(raw.to_string(), count).is_some() {
            return Err(err(format!("duplicate bit string `{raw}`")));
        }
        shots += count;
    }
    if entries.is_empty() {
        return Err(Error::invalid("counts file has no records"));
    }
    let table = CountsTable {
        entries,
        shots,
        mapping,
    };
    table.decoded()?;
    Ok(table)
}
