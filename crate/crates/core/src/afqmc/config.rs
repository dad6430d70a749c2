use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the phase of the importance factor limits the weight update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaselessVariant {
    /// `Δθ = arg I`, the usual projection of the phase onto the real axis.
    #[default]
    StandardArg,
    /// `Δθ = arg(Re I)`: only the sign of the real part survives, so a
    /// walker is removed exactly when `Re I < 0`.
    RealPartArg,
}

impl PhaselessVariant {
    /// Multiplier `max(0, cos Δθ)` for an importance factor with the given
    /// value.
    pub fn cosine_factor(&self, importance: num_complex::Complex64) -> f64 {
        let dtheta = match self {
            PhaselessVariant::StandardArg => importance.arg(),
            PhaselessVariant::RealPartArg => num_complex::Complex64::new(importance.re, 0.0).arg(),
        };
        dtheta.cos().max(0.0)
    }
}

impl FromStr for PhaselessVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard-arg" => Ok(PhaselessVariant::StandardArg),
            "real-part-arg" => Ok(PhaselessVariant::RealPartArg),
            other => Err(Error::invalid(format!("unknown phaseless variant `{other}`"))),
        }
    }
}

impl fmt::Display for PhaselessVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaselessVariant::StandardArg => "standard-arg",
            PhaselessVariant::RealPartArg => "real-part-arg",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub dtau: f64,
    pub n_steps: usize,
    pub n_walkers: usize,
    pub seed: u64,
    pub stabilize_every: usize,
    /// Steps per block: population control and energy measurement happen
    /// together at block ends.
    pub popcontrol_every: usize,
    pub equilibration_tau: f64,
    pub phaseless_variant: PhaselessVariant,
    /// Doubly occupied orbitals folded into the Hamiltonian before the run.
    pub frozen_core: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            dtau: 0.005,
            n_steps: 2000,
            n_walkers: 600,
            seed: 0,
            stabilize_every: 5,
            popcontrol_every: 10,
            equilibration_tau: 2.0,
            phaseless_variant: PhaselessVariant::StandardArg,
            frozen_core: 0,
        }
    }
}

impl PropagatorConfig {
    /// Steps needed to reach imaginary time `tau`.
    pub fn steps_for(&self, tau: f64) -> usize {
        (tau / self.dtau).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::invalid(format!("dtau must be positive, got {}", self.dtau)));
        }
        if self.n_walkers == 0 {
            return Err(Error::invalid("n_walkers must be at least 1"));
        }
        if self.stabilize_every == 0 || self.popcontrol_every == 0 {
            return Err(Error::invalid("stabilize_every and popcontrol_every must be at least 1"));
        }
        if !(self.equilibration_tau >= 0.0) {
            return Err(Error::invalid("equilibration_tau must be nonnegative"));
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment, missing keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PropagatorConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::invalid(format!("config line {}: {msg}", no + 1));
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected `key = value`".into()))?;
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            fn num<T: FromStr>(v: &str, key: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
            }
            let res = match key {
                "dtau" => num(value, key).map(|v| cfg.dtau = v),
                "n_steps" => num(value, key).map(|v| cfg.n_steps = v),
                "n_walkers" => num(value, key).map(|v| cfg.n_walkers = v),
                "seed" => num(value, key).map(|v| cfg.seed = v),
                "stabilize_every" => num(value, key).map(|v| cfg.stabilize_every = v),
                "popcontrol_every" => num(value, key).map(|v| cfg.popcontrol_every = v),
                "equilibration_tau" => num(value, key).map(|v| cfg.equilibration_tau = v),
                "frozen_core" => num(value, key).map(|v| cfg.frozen_core = v),
                "phaseless_variant" => value
                    .parse()
                    .map(|v| cfg.phaseless_variant = v)
                    .map_err(|e: Error| e.to_string()),
                _ => Err(format!("unknown key `{key}`")),
            };
            res.map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "dtau = {}\nn_steps = {}\nn_walkers = {}\nseed = {}\nstabilize_every = {}\npopcontrol_every = {}\nequilibration_tau = {}\nphaseless_variant = {}\nfrozen_core = {}\n",
            self.dtau,
            self.n_steps,
            self.n_walkers,
            self.seed,
            self.stabilize_every,
            self.popcontrol_every,
            self.equilibration_tau,
            self.phaseless_variant,
            self.frozen_core
        )
    }
}
