//! File-based pipeline stages behind the command-line tool. Every stage
//! reads and writes plain files so any of them can be rerun or replaced,
//! e.g. by counts measured on real hardware.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::afqmc::{self, Estimate, PropagatorConfig};
use crate::detops::{Determinant, TrialWavefunction};
use crate::eigen::EigenSettings;
use crate::error::{Error, Result};
use crate::factorize::{self, DEFAULT_THRESHOLD};
use crate::fci;
use crate::hamio::{self, ActiveSpaceSpec, Hamiltonian};
use crate::qsci::{self, QsciRecord};
use crate::sampler::{self, CountsTable, Mapping};

pub const QSCI_RECORD: &str = "qsci.toml";
pub const COUNTS_FILE: &str = "counts.txt";
pub const AFQMC_SERIES: &str = "afqmc.csv";
pub const AFQMC_SUMMARY: &str = "afqmc_summary.csv";
pub const FCI_RECORD: &str = "fci.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActiveSpaceSettings {
    pub n_core: usize,
    pub n_active: usize,
    pub n_active_electrons: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mapping")]
    pub mapping: String,
    /// Measured counts to use instead of simulated sampling.
    #[serde(default)]
    pub counts_file: Option<PathBuf>,
}

fn default_shots() -> u64 {
    sampler::DEFAULT_SHOTS
}

fn default_mapping() -> String {
    Mapping::OccupationDirect.to_string()
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            shots: default_shots(),
            noise: 0.0,
            seed: 0,
            mapping: default_mapping(),
            counts_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsciSettings {
    /// Configurations kept; all distinct ones when absent.
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default = "default_true")]
    pub filter: bool,
}

fn default_true() -> bool {
    true
}

impl Default for QsciSettings {
    fn default() -> Self {
        QsciSettings { r: None, filter: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TrialKind {
    #[default]
    Qsci,
    HartreeFock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AfqmcSettings {
    /// Run configuration (`key = value` file); defaults when absent.
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub trial: TrialKind,
}

/// One geometry's pipeline. Relative paths are resolved against the
/// manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    pub fixture: PathBuf,
    pub output_dir: PathBuf,
    /// Geometry label used in curve tables.
    #[serde(default)]
    pub r: Option<f64>,
    pub active_space: Option<ActiveSpaceSettings>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub qsci: QsciSettings,
    #[serde(default)]
    pub afqmc: AfqmcSettings,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl PipelineManifest {
    /// Parses a manifest and makes its paths absolute relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut m: PipelineManifest =
            toml::from_str(text).map_err(|e| Error::invalid(format!("manifest: {e}")))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut m.fixture);
        fix(&mut m.output_dir);
        if let Some(p) = m.sampler.counts_file.as_mut() {
            fix(p);
        }
        if let Some(p) = m.afqmc.config.as_mut() {
            fix(p);
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let m = Self::parse(&read_text(path)?, base)?;
        m.validate()?;
        Ok(m)
    }

    /// Referenced inputs exist and the output directory can be created.
    pub fn validate(&self) -> Result<()> {
        let mut inputs = vec![&self.fixture];
        inputs.extend(self.sampler.counts_file.as_ref());
        inputs.extend(self.afqmc.config.as_ref());
        for p in inputs {
            if !p.is_file() {
                return Err(Error::invalid(format!("{} does not exist", p.display())));
            }
        }
        self.sampler.mapping.parse::<Mapping>()?;
        if !(0.0..1.0).contains(&self.sampler.noise) {
            return Err(Error::invalid("sampler noise must lie in [0, 1)"));
        }
        fs::create_dir_all(&self.output_dir).map_err(|e| Error::io(&self.output_dir, e))
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        load_fixture(&self.fixture)
    }

    pub fn active_space(&self, ham: &Hamiltonian) -> Result<ActiveSpaceSpec> {
        let spec = match &self.active_space {
            Some(a) => ActiveSpaceSpec::contiguous(a.n_core, a.n_active, a.n_active_electrons),
            None => ActiveSpaceSpec::full(ham),
        };
        spec.validate(ham)?;
        Ok(spec)
    }

    pub fn propagator_config(&self) -> Result<PropagatorConfig> {
        match &self.afqmc.config {
            Some(p) => PropagatorConfig::parse(&read_text(p)?),
            None => Ok(PropagatorConfig::default()),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

pub fn load_fixture(path: &Path) -> Result<Hamiltonian> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    hamio::parse_fcidump(std::io::BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FciOutcome {
    pub energy: f64,
    pub dimension: usize,
}

/// FCI of the whole fixture, or CASCI when an active space is given.
pub fn cmd_fci(fixture: &Path, active: Option<&ActiveSpaceSettings>) -> Result<FciOutcome> {
    let ham = load_fixture(fixture)?;
    let ham = match active {
        Some(a) => {
            let spec = ActiveSpaceSpec::contiguous(a.n_core, a.n_active, a.n_active_electrons);
            hamio::fold_core(&ham, &spec)?
        }
        None => ham,
    };
    let r = fci::fci_ground_state(&ham)?;
    Ok(FciOutcome {
        energy: r.energy,
        dimension: r.space.dimension(),
    })
}

#[derive(Clone, Debug)]
pub struct QsciOutcome {
    pub record: QsciRecord,
    pub counts: CountsTable,
    /// Bit strings whose electron numbers do not match the active space.
    pub flagged: Vec<String>,
}

/// Sample (or import) → select → expand → solve → embed; writes the record
/// and the counts used.
pub fn cmd_qsci(m: &PipelineManifest) -> Result<QsciOutcome> {
    let ham = m.hamiltonian()?;
    let spec = m.active_space(&ham)?;
    let active = hamio::fold_core(&ham, &spec)?;
    let mapping: Mapping = m.sampler.mapping.parse()?;
    let counts = match &m.sampler.counts_file {
        Some(path) => sampler::import_counts(&read_text(path)?, mapping)?,
        None => {
            if mapping != Mapping::OccupationDirect {
                return Err(Error::invalid("simulated sampling produces occupation-direct strings"));
            }
            let casci = fci::fci_ground_state(&active)?;
            sampler::sample_state(
                &casci.state(),
                active.n_spatial,
                m.sampler.shots,
                m.sampler.seed,
                m.sampler.noise,
            )?
        }
    };
    let flagged = counts.flagged(active.n_alpha, active.n_beta)?;
    let wf = qsci::run_qsci(&active, &counts, m.qsci.r, m.qsci.filter, &EigenSettings::default())?;
    let record = QsciRecord::new(&wf, &spec, ham.n_spatial);
    record.trial()?;
    write_text(&m.out(QSCI_RECORD), &record.to_toml())?;
    write_text(&m.out(COUNTS_FILE), &counts.to_text())?;
    Ok(QsciOutcome {
        record,
        counts,
        flagged,
    })
}

fn load_trial(m: &PipelineManifest, ham: &Hamiltonian) -> Result<TrialWavefunction> {
    match m.afqmc.trial {
        TrialKind::HartreeFock => {
            TrialWavefunction::single(Determinant::hartree_fock(ham.n_alpha, ham.n_beta), ham.n_spatial)
        }
        TrialKind::Qsci => {
            let path = m.out(QSCI_RECORD);
            if !path.is_file() {
                return Err(Error::invalid(format!(
                    "{} not found; run the qsci stage first",
                    path.display()
                )));
            }
            let record = QsciRecord::from_toml(&read_text(&path)?)?;
            if record.full_n_spatial != ham.n_spatial {
                return Err(Error::invalid("QSCI record was built for a different fixture"));
            }
            record.trial()
        }
    }
}

#[derive(Clone, Debug)]
pub struct AfqmcOutcome {
    pub series: afqmc::EnergySeries,
    pub estimate: Estimate,
}

/// Runs AFQMC with the configured trial and writes the block series and
/// the summary.
pub fn cmd_afqmc(m: &PipelineManifest) -> Result<AfqmcOutcome> {
    let cfg = m.propagator_config()?;
    let ham = m.hamiltonian()?;
    let trial = load_trial(m, &ham)?;
    let outcome = run_afqmc(&ham, &trial, &cfg)?;
    write_text(&m.out(AFQMC_SERIES), &outcome.series.to_csv())?;
    write_text(&m.out(AFQMC_SUMMARY), &outcome.estimate.to_text())?;
    Ok(outcome)
}

/// Factorizes, folds the frozen core if requested, and runs.
pub fn run_afqmc(ham: &Hamiltonian, trial: &TrialWavefunction, cfg: &PropagatorConfig) -> Result<AfqmcOutcome> {
    let (ham, trial) = if cfg.frozen_core > 0 {
        let spec = ActiveSpaceSpec::frozen_core(ham, cfg.frozen_core);
        (hamio::fold_core(ham, &spec)?, afqmc::strip_core(trial, cfg.frozen_core)?)
    } else {
        (ham.clone(), trial.clone())
    };
    let f = factorize::decompose(&ham, DEFAULT_THRESHOLD)?;
    let series = afqmc::run(&trial, &ham, &f, cfg)?;
    let estimate = series.estimate()?;
    Ok(AfqmcOutcome { series, estimate })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub r: f64,
    pub method: String,
    pub energy: f64,
    pub error: Option<f64>,
}

pub const CURVE_METHODS: [&str; 4] = ["fci", "casci", "qsci", "qsci-afqmc"];

/// One row per (geometry, method), reusing stage outputs already present in
/// each output directory.
pub fn cmd_curve(manifests: &[PipelineManifest], methods: &[String]) -> Result<Vec<CurveRow>> {
    for meth in methods {
        if !CURVE_METHODS.contains(&meth.as_str()) {
            return Err(Error::invalid(format!("unknown method `{meth}`")));
        }
    }
    let mut shape = None;
    let mut rows = Vec::new();
    for m in manifests {
        let r = m
            .r
            .ok_or_else(|| Error::invalid(format!("manifest for {} has no `r`", m.fixture.display())))?;
        let ham = m.hamiltonian()?;
        let this = (ham.n_spatial, ham.n_alpha, ham.n_beta, m.active_space.clone());
        match &shape {
            None => shape = Some(this),
            Some(s) if *s != this => {
                return Err(Error::invalid(format!(
                    "{} does not match the other geometries' orbitals, electrons or active space",
                    m.fixture.display()
                )))
            }
            _ => {}
        }
        for meth in methods {
            let (energy, error) = match meth.as_str() {
                "fci" => (cached_energy(m, FCI_RECORD, || Ok(cmd_fci(&m.fixture, None)?.energy))?, None),
                "casci" => (
                    cached_energy(m, "casci.txt", || Ok(cmd_fci(&m.fixture, m.active_space.as_ref())?.energy))?,
                    None,
                ),
                "qsci" => (cached_qsci(m)?.energy, None),
                "qsci-afqmc" => {
                    let summary = m.out(AFQMC_SUMMARY);
                    let est = if summary.is_file() {
                        Estimate::parse(&read_text(&summary)?)?
                    } else {
                        cached_qsci(m)?;
                        cmd_afqmc(m)?.estimate
                    };
                    (est.energy, Some(est.error))
                }
                _ => unreachable!(),
            };
            rows.push(CurveRow {
                r,
                method: meth.clone(),
                energy,
                error,
            });
        }
    }
    Ok(rows)
}

fn cached_energy(m: &PipelineManifest, name: &str, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
    let path = m.out(name);
    if path.is_file() {
        let text = read_text(&path)?;
        return text
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{}: not an energy", path.display())));
    }
    let e = compute()?;
    write_text(&path, &format!("{e:.12}\n"))?;
    Ok(e)
}

fn cached_qsci(m: &PipelineManifest) -> Result<QsciRecord> {
    let path = m.out(QSCI_RECORD);
    if path.is_file() {
        QsciRecord::from_toml(&read_text(&path)?)
    } else {
        Ok(cmd_qsci(m)?.record)
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("r,method,energy,error\n");
    for row in rows {
        let err = row.error.map(|e| format!("{e:.12}")).unwrap_or_default();
        writeln!(out, "{},{},{:.12},{}", row.r, row.method, row.energy, err).unwrap();
    }
    out
}

#[derive(Clone, Debug)]
pub struct ImportOutcome {
    pub counts: CountsTable,
    pub flagged: Vec<String>,
    /// The same counts as occupation-direct strings.
    pub normalized: String,
}

/// Validates a counts file and re-expresses it with occupation-direct
/// strings over `n_spatial` orbitals.
pub fn cmd_counts_import(
    text: &str,
    mapping: Mapping,
    n_spatial: usize,
    electrons: Option<(usize, usize)>,
) -> Result<ImportOutcome> {
    let counts = sampler::import_counts(text, mapping)?;
    let flagged = match electrons {
        Some((a, b)) => counts.flagged(a, b)?,
        None => Vec::new(),
    };
    let mut normalized = std::collections::BTreeMap::new();
    for e in counts.decoded()? {
        let raw = e.determinant.display_string(n_spatial);
        if raw.len() != 2 * n_spatial || Determinant::parse_display_string(&raw)? != e.determinant {
            return Err(Error::invalid(format!("`{}` does not fit {n_spatial} orbitals", e.raw)));
        }
        *normalized.entry(raw).or_insert(0u64) += e.count;
    }
    let table = CountsTable {
        entries: normalized,
        shots: counts.shots,
        mapping: Mapping::OccupationDirect,
    };
    Ok(ImportOutcome {
        normalized: table.to_text(),
        counts,
        flagged,
    })
}
