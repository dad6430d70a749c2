use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsci_afqmc::pipeline::{self, ActiveSpaceSettings, PipelineManifest};
use qsci_afqmc::sampler::Mapping;
use qsci_afqmc::{Error, Result};

/// QSCI trial wave functions for phaseless AFQMC.
///
/// Worker threads follow RAYON_NUM_THREADS (default: all cores).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact ground-state energy of a fixture (CASCI with an active space).
    Fci {
        fixture: PathBuf,
        #[arg(long, requires_all = ["n_active", "n_active_electrons"])]
        n_core: Option<usize>,
        #[arg(long)]
        n_active: Option<usize>,
        #[arg(long)]
        n_active_electrons: Option<usize>,
    },
    /// Sample or import counts, build the QSCI wave function and write it.
    Qsci { manifest: PathBuf },
    /// Run AFQMC with the manifest's trial and write the energy series.
    Afqmc { manifest: PathBuf },
    /// Tabulate energies across geometries as CSV.
    Curve {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "fci,casci,qsci,qsci-afqmc")]
        methods: Vec<String>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a counts file and rewrite it with occupation-direct strings.
    CountsImport {
        file: PathBuf,
        #[arg(long, default_value = "occupation-direct")]
        mapping: String,
        /// Spatial orbitals in the measured register.
        #[arg(long)]
        n_spatial: usize,
        #[arg(long, requires = "n_beta")]
        n_alpha: Option<usize>,
        #[arg(long)]
        n_beta: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fci {
            fixture,
            n_core,
            n_active,
            n_active_electrons,
        } => {
            let active = n_active.zip(n_active_electrons).map(|(n_active, n_active_electrons)| ActiveSpaceSettings {
                n_core: n_core.unwrap_or(0),
                n_active,
                n_active_electrons,
            });
            let out = pipeline::cmd_fci(&fixture, active.as_ref())?;
            println!("dimension {}", out.dimension);
            println!("energy {:.12}", out.energy);
        }
        Command::Qsci { manifest } => {
            let m = PipelineManifest::load(&manifest)?;
            let out = pipeline::cmd_qsci(&m)?;
            eprint!("{}", out.counts.histogram());
            for raw in &out.flagged {
                eprintln!("flagged: {raw} has the wrong electron count");
            }
            println!(
                "configurations {} requested {:?} basis {}",
                out.record.r_effective,
                out.record.r_requested,
                out.record.configurations.len()
            );
            println!("energy {:.12}", out.record.energy);
        }
        Command::Afqmc { manifest } => {
            let m = PipelineManifest::load(&manifest)?;
            let out = pipeline::cmd_afqmc(&m)?;
            let e = out.estimate;
            println!("energy {:.12} error {:.12} blocks {} block_size {}", e.energy, e.error, e.n_blocks, e.block_size);
        }
        Command::Curve {
            manifests,
            methods,
            output,
        } => {
            let ms = manifests
                .iter()
                .map(|p| PipelineManifest::load(p))
                .collect::<Result<Vec<_>>>()?;
            let csv = pipeline::curve_csv(&pipeline::cmd_curve(&ms, &methods)?);
            match output {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::CountsImport {
            file,
            mapping,
            n_spatial,
            n_alpha,
            n_beta,
            output,
        } => {
            let mapping: Mapping = mapping.parse()?;
            let out = pipeline::cmd_counts_import(&read(&file)?, mapping, n_spatial, n_alpha.zip(n_beta))?;
            eprint!("{}", out.counts.histogram());
            for raw in &out.flagged {
                eprintln!("flagged: {raw} has the wrong electron count");
            }
            match output {
                Some(p) => write(&p, &out.normalized)?,
                None => print!("{}", out.normalized),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
