//! Reblocking error analysis for serially correlated series.

use crate::error::{Error, Result};

/// Fewest samples accepted by [`blocking_analysis`].
pub const MIN_SAMPLES: usize = 32;
/// Coarsest level considered for the plateau.
const MIN_BLOCKS_AT_LEVEL: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockingLevel {
    /// Original samples per block, `2^level`.
    pub block_size: usize,
    pub n_blocks: usize,
    /// Standard error of the mean estimated at this level.
    pub error: f64,
    /// Statistical uncertainty of `error` itself.
    pub error_uncertainty: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockingResult {
    pub mean: f64,
    pub error: f64,
    /// Block size at the selected plateau.
    pub block_size: usize,
    pub n_samples: usize,
    pub table: Vec<BlockingLevel>,
}

/// Pair-averages the series repeatedly and takes the first level whose
/// successor's error does not exceed this level's error by more than its
/// uncertainty `σ/√(2(m−1))`.
pub fn blocking_analysis(data: &[f64]) -> Result<BlockingResult> {
    if data.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            have: data.len(),
            need: MIN_SAMPLES,
        });
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    let mut table = Vec::new();
    let mut level: Vec<f64> = data.to_vec();
    let mut size = 1;
    while level.len() >= 2 {
        let m = level.len() as f64;
        let mu = level.iter().sum::<f64>() / m;
        let ss: f64 = level.iter().map(|x| (x - mu) * (x - mu)).sum();
        let error = (ss / (m * (m - 1.0))).sqrt();
        table.push(BlockingLevel {
            block_size: size,
            n_blocks: level.len(),
            error,
            error_uncertainty: error / (2.0 * (m - 1.0)).sqrt(),
        });
        level = level.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        size *= 2;
    }

    let usable = table.iter().filter(|l| l.n_blocks >= MIN_BLOCKS_AT_LEVEL).count();
    let plateau = (0..usable.saturating_sub(1))
        .find(|&k| table[k + 1].error <= table[k].error + table[k].error_uncertainty)
        .unwrap_or_else(|| {
            // never settled: be conservative
            (0..usable)
                .max_by(|&a, &b| table[a].error.total_cmp(&table[b].error))
                .unwrap_or(0)
        });
    Ok(BlockingResult {
        mean,
        error: table[plateau].error,
        block_size: table[plateau].block_size,
        n_samples: data.len(),
        table,
    })
}
