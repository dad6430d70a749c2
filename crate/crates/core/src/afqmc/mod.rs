//! Phaseless auxiliary-field QMC.
//!
//! The Hamiltonian is written in Cholesky form,
//! `H = E_c + Σ_pq v0_pq E_pq + ½ Σ_γ (Σ_pq L^γ_pq E_pq)²`, with each square
//! shifted by its trial mean-field value before the Hubbard–Stratonovich
//! transformation. Walkers are pairs of non-orthogonal orbital blocks over the
//! full orbital space, importance-sampled against a multideterminant trial
//! with an optimally shifted (force-biased) field.

mod blocking;
mod config;
mod propagator;
mod run;
mod walker;

pub use blocking::{blocking_analysis, BlockingLevel, BlockingResult};
pub use config::{PhaselessVariant, PropagatorConfig};
pub use propagator::{
    build_one_body_propagator, compute_force_bias, mean_field_shift, taylor_apply, Propagator,
    FORCE_BIAS_CAP,
};
pub use run::{run, strip_core, BlockRecord, EnergySeries, Estimate, MIN_BLOCKS};
pub use walker::{
    init_ensemble, population_control, propagate_step, stabilize, walker_rng, Walker, WalkerEnsemble,
};
