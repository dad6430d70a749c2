use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::detops::{local_energy, Determinant, SpinString, TrialWavefunction};
use crate::error::{Error, Result};
use crate::factorize::CholeskyFactorization;
use crate::hamio::Hamiltonian;

use super::blocking::{blocking_analysis, BlockingResult};
use super::config::PropagatorConfig;
use super::propagator::{build_one_body_propagator, mean_field_shift, Propagator};
use super::walker::{init_ensemble, population_control, propagate_step, stabilize, walker_rng, WalkerEnsemble};

pub use super::blocking::MIN_SAMPLES as MIN_BLOCKS;

/// Stream id reserved for population control draws.
const COMB_STREAM: u64 = u64::MAX;
/// Block energies averaged into the trial energy `E_T`.
const TRIAL_ENERGY_WINDOW: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockRecord {
    pub block_index: usize,
    pub tau: f64,
    pub energy: f64,
    /// Total weight before population control.
    pub total_weight: f64,
    /// Walkers with nonzero weight at measurement.
    pub n_walkers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySeries {
    /// Block 0 is the initial ensemble at `τ = 0`.
    pub records: Vec<BlockRecord>,
    pub equilibration_tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub energy: f64,
    pub error: f64,
    pub n_blocks: usize,
    pub block_size: usize,
}

impl Estimate {
    pub fn to_text(&self) -> String {
        format!(
            "energy,error,n_blocks,block_size\n{:.12},{:.12},{},{}\n",
            self.energy, self.error, self.n_blocks, self.block_size
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let row = text
            .lines()
            .nth(1)
            .ok_or_else(|| Error::invalid("summary has no data row"))?;
        let f: Vec<&str> = row.split(',').collect();
        let bad = || Error::invalid(format!("malformed summary row `{row}`"));
        if f.len() != 4 {
            return Err(bad());
        }
        Ok(Estimate {
            energy: f[0].parse().map_err(|_| bad())?,
            error: f[1].parse().map_err(|_| bad())?,
            n_blocks: f[2].parse().map_err(|_| bad())?,
            block_size: f[3].parse().map_err(|_| bad())?,
        })
    }
}

impl EnergySeries {
    /// Block energies past the equilibration time.
    pub fn production(&self) -> Vec<f64> {
        self.records
            .iter()
            .skip(1)
            .filter(|r| r.tau > self.equilibration_tau + 1e-12)
            .map(|r| r.energy)
            .collect()
    }

    pub fn blocking(&self) -> Result<BlockingResult> {
        blocking_analysis(&self.production())
    }

    /// Final energy and error bar. A run without steps echoes its initial
    /// energy with zero error.
    pub fn estimate(&self) -> Result<Estimate> {
        if self.records.len() == 1 {
            return Ok(Estimate {
                energy: self.records[0].energy,
                error: 0.0,
                n_blocks: 1,
                block_size: 1,
            });
        }
        let b = self.blocking()?;
        Ok(Estimate {
            energy: b.mean,
            error: b.error,
            n_blocks: b.n_samples,
            block_size: b.block_size,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_index,tau,energy,total_weight,n_walkers\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{:.6},{:.12},{:.12e},{}",
                r.block_index, r.tau, r.energy, r.total_weight, r.n_walkers
            )
            .unwrap();
        }
        out
    }
}

/// Removes `n_core` doubly occupied lowest orbitals from every trial
/// determinant, for runs on a core-folded Hamiltonian.
pub fn strip_core(trial: &TrialWavefunction, n_core: usize) -> Result<TrialWavefunction> {
    if n_core == 0 {
        return Ok(trial.clone());
    }
    let core = (1u64 << n_core) - 1;
    let dets = trial
        .determinants()
        .iter()
        .map(|d| {
            if d.alpha.bits() & core != core || d.beta.bits() & core != core {
                return Err(Error::invalid(format!(
                    "trial determinant {d} does not doubly occupy the {n_core} frozen orbitals"
                )));
            }
            Ok(Determinant::new(
                SpinString::from_bits(d.alpha.bits() >> n_core),
                SpinString::from_bits(d.beta.bits() >> n_core),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    TrialWavefunction::new(trial.n_spatial() - n_core, dets, trial.coefficients().to_vec())
}

fn measure(
    ensemble: &WalkerEnsemble,
    ham: &Hamiltonian,
    trial: &TrialWavefunction,
    e_trial: Option<f64>,
    dtau: f64,
    block: usize,
) -> Result<Tally> {
    let cap = (2.0 / dtau).sqrt();
    let local: Vec<Option<(f64, Complex64)>> = ensemble
        .walkers
        .par_iter()
        .map(|w| {
            if !w.is_alive() {
                return None;
            }
            local_energy(ham, trial, &w.slater).ok().map(|e| (w.weight, e))
        })
        .collect();
    let (mut num, mut den, mut alive) = (0.0, 0.0, 0);
    for (w, e) in local.into_iter().flatten() {
        if !e.re.is_finite() {
            return Err(Error::NonFinite {
                block,
                detail: format!("local energy {e} for a walker of weight {w}"),
            });
        }
        let e = match e_trial {
            Some(et) => e.re.clamp(et - cap, et + cap),
            None => e.re,
        };
        num += w * e;
        den += w;
        alive += 1;
    }
    if den <= 0.0 {
        return Err(Error::Collapse(format!("no live walkers to measure at block {block}")));
    }
    if !(num / den).is_finite() {
        return Err(Error::NonFinite {
            block,
            detail: format!("weighted sum {num}, total weight {den}, {alive} live walkers"),
        });
    }
    Ok(Tally { num, den, alive })
}

/// Weighted local-energy sums of one measurement.
struct Tally {
    num: f64,
    den: f64,
    alive: usize,
}

fn step_all(
    ensemble: &mut WalkerEnsemble,
    prop: &Propagator,
    trial: &TrialWavefunction,
    cfg: &PropagatorConfig,
    e_trial: f64,
    step: usize,
) {
    let n_fields = prop.n_fields();
    ensemble.walkers.par_iter_mut().enumerate().for_each(|(i, w)| {
        if !w.is_alive() {
            return;
        }
        let mut rng = walker_rng(cfg.seed, i as u64, step as u64);
        let x: Vec<f64> = (0..n_fields).map(|_| StandardNormal.sample(&mut rng)).collect();
        let xbar = match crate::detops::greens_function(trial, &w.slater) {
            Ok(g) => prop.force_bias(&g),
            Err(_) => {
                w.kill();
                return;
            }
        };
        propagate_step(w, &x, &xbar, prop, trial, e_trial, cfg.phaseless_variant);
        if step % cfg.stabilize_every == 0 {
            stabilize(w, trial);
        }
    });
}

/// Full driver. `ham`, `f` and `trial` must describe the same orbital
/// space; core folding, if any, happens before the call.
pub fn run(
    trial: &TrialWavefunction,
    ham: &Hamiltonian,
    f: &CholeskyFactorization,
    cfg: &PropagatorConfig,
) -> Result<EnergySeries> {
    cfg.validate()?;
    if f.n_spatial != ham.n_spatial || trial.n_spatial() != ham.n_spatial {
        return Err(Error::invalid(format!(
            "orbital counts disagree: Hamiltonian {}, factorization {}, trial {}",
            ham.n_spatial,
            f.n_spatial,
            trial.n_spatial()
        )));
    }
    if trial.n_alpha() != ham.n_alpha || trial.n_beta() != ham.n_beta {
        return Err(Error::invalid("trial electron counts differ from the Hamiltonian's"));
    }
    let prop = build_one_body_propagator(f, ham.e_core, mean_field_shift(f, trial), cfg.dtau);
    let mut ensemble = init_ensemble(trial, cfg.n_walkers)?;

    let t0 = measure(&ensemble, ham, trial, None, cfg.dtau, 0)?;
    let mut records = vec![BlockRecord {
        block_index: 0,
        tau: 0.0,
        energy: t0.num / t0.den,
        total_weight: t0.den,
        n_walkers: t0.alive,
    }];
    let mut e_trial = records[0].energy;

    for step in 1..=cfg.n_steps {
        step_all(&mut ensemble, &prop, trial, cfg, e_trial, step);
        if step % cfg.popcontrol_every != 0 && step != cfg.n_steps {
            continue;
        }
        let block = records.len();
        let t = measure(&ensemble, ham, trial, Some(e_trial), cfg.dtau, block)?;
        records.push(BlockRecord {
            block_index: block,
            tau: step as f64 * cfg.dtau,
            energy: t.num / t.den,
            total_weight: t.den,
            n_walkers: t.alive,
        });
        let recent = &records[records.len().saturating_sub(TRIAL_ENERGY_WINDOW).max(1)..];
        e_trial = recent.iter().map(|r| r.energy).sum::<f64>() / recent.len() as f64;

        let mut rng = walker_rng(cfg.seed, COMB_STREAM, step as u64);
        population_control(&mut ensemble, &mut rng)?;
        for w in ensemble.walkers.iter_mut() {
            w.weight = 1.0;
        }
    }
    Ok(EnergySeries {
        records,
        equilibration_tau: cfg.equilibration_tau,
    })
}
