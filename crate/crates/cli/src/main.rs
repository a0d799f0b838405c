#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod manifest;
mod reproduce;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stark_mbl::basis::{enumerate_boson_sector, enumerate_spin_sector, sector_dimension};
use stark_mbl::io;

use crate::config::{AnsatzKind, ModelKind, RunConfig, TaskKind};
use crate::error::{CliError, CliResult};
use crate::manifest::{checksum_entries, RunManifest, TaskRecord, TaskStatus};
use crate::reproduce::Scale;

#[derive(Parser)]
#[command(name = "starkmbl", version, about = "Stark many-body localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task listed in the config.
    Run(Common),
    /// Full spectra.
    Spectrum(Common),
    /// Chebyshev density of states.
    Dos(Common),
    /// Mean gap ratio in the energy window.
    Rstat(Common),
    /// Window-averaged eigenstate entanglement and participation entropies.
    Eigenobs(Common),
    /// Page values by random-state sampling.
    Pagevalue(Common),
    /// Quench dynamics from product states.
    Dynamics(Common),
    /// Finite-size scaling collapse.
    Collapse {
        #[command(flatten)]
        common: Common,
        /// CSV with columns L,gamma,y; skips the config sweep.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bose-hubbard")]
        model: ModelArg,
        #[arg(long, value_enum, default_values = ["powerlaw"])]
        ansatz: Vec<AnsatzArg>,
    },
    /// Imbalance decay exponents and their critical fit.
    Fitimbalance {
        #[command(flatten)]
        common: Common,
        /// CSV with columns gamma,xi; skips the config sweep.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bose-hubbard")]
        model: ModelArg,
    },
    /// Enumerate a symmetry sector.
    Basis {
        #[arg(long)]
        sites: usize,
        /// Defaults to half filling.
        #[arg(long)]
        particles: Option<usize>,
        /// Defaults to the particle number (no truncation).
        #[arg(long)]
        max_occ: Option<u8>,
        /// Spin-1/2 sector (occupations 0/1).
        #[arg(long)]
        spin: bool,
        /// Print every state.
        #[arg(long)]
        list: bool,
    },
    /// Run the canned configuration behind a figure.
    Reproduce {
        tag: String,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        #[command(flatten)]
        common: Common,
        /// Print the configurations instead of running them.
        #[arg(long)]
        print: bool,
    },
    /// Parse and validate a config, printing its hash.
    ValidateConfig(Common),
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum ModelArg {
    BoseHubbard,
    AllToAllXx,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::BoseHubbard => ModelKind::BoseHubbard,
            ModelArg::AllToAllXx => ModelKind::AllToAllXx,
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum AnsatzArg {
    Powerlaw,
    BktEqual,
    BktUnequal,
}

impl From<AnsatzArg> for AnsatzKind {
    fn from(a: AnsatzArg) -> Self {
        match a {
            AnsatzArg::Powerlaw => AnsatzKind::Powerlaw,
            AnsatzArg::BktEqual => AnsatzKind::BktEqual,
            AnsatzArg::BktUnequal => AnsatzKind::BktUnequal,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn set_workers(common: &Common) -> CliResult<()> {
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::config("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let path = common.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> PathBuf {
    common.out.clone().or_else(|| cfg.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("runs"))
}

/// 0 when nothing failed, 2 when every attempted task failed, 3 otherwise.
fn exit_for(manifest: &RunManifest) -> u8 {
    let failed = manifest.failed();
    if failed == 0 {
        0
    } else if failed == manifest.tasks.len() {
        2
    } else {
        3
    }
}

fn report(manifest: &RunManifest, out: &Path) {
    println!(
        "{}: {} tasks, {} done, {} skipped, {} failed (config {})",
        out.join(manifest::MANIFEST_FILE).display(),
        manifest.tasks.len(),
        manifest.count(TaskStatus::Done),
        manifest.count(TaskStatus::Skipped),
        manifest.failed(),
        &manifest.config_hash[..12],
    );
    for t in manifest.tasks.iter().filter(|t| t.status == TaskStatus::Failed) {
        println!("  failed {}: {}", t.id, t.error.as_deref().unwrap_or(""));
    }
}

fn run_with(common: &Common, only: Option<TaskKind>) -> CliResult<u8> {
    set_workers(common)?;
    let mut cfg = load_config(common)?;
    if let Some(kind) = only {
        cfg.tasks = vec![kind];
    }
    let out = out_dir(common, Some(&cfg));
    let manifest = tasks::run_experiment(&cfg, &out)?;
    report(&manifest, &out);
    Ok(exit_for(&manifest))
}

/// Config used by the direct `--input` modes when none is given.
fn default_config(model: ModelKind) -> RunConfig {
    RunConfig::from_toml(&format!("model = \"{}\"\nseed = 0\n[grid]\nL = [4]\ngamma = [0.0]\n", model.tag()))
        .expect("built-in config parses")
}

fn direct_manifest(out: &Path, cfg: &RunConfig, id: &str, input: &Path, written: &[PathBuf], result: stark_mbl::Result<()>) -> CliResult<u8> {
    let mut manifest = RunManifest::new(cfg.hash(), cfg.seed());
    let fingerprint = io::file_sha256(input)?;
    let (status, error) = match &result {
        Ok(()) => (TaskStatus::Done, None),
        Err(e) => (TaskStatus::Failed, Some(e.to_string())),
    };
    manifest.tasks.push(TaskRecord {
        id: id.to_string(),
        kind: id.split('/').next().unwrap_or(id).to_string(),
        fingerprint,
        status,
        error,
        outputs: checksum_entries(out, written)?,
    });
    manifest.save(out)?;
    report(&manifest, out);
    Ok(exit_for(&manifest))
}

fn dispatch(command: Command) -> CliResult<u8> {
    match command {
        Command::Run(c) => run_with(&c, None),
        Command::Spectrum(c) => run_with(&c, Some(TaskKind::Spectrum)),
        Command::Dos(c) => run_with(&c, Some(TaskKind::Dos)),
        Command::Rstat(c) => run_with(&c, Some(TaskKind::Rstat)),
        Command::Eigenobs(c) => run_with(&c, Some(TaskKind::Eigenobs)),
        Command::Pagevalue(c) => run_with(&c, Some(TaskKind::Pagevalue)),
        Command::Dynamics(c) => run_with(&c, Some(TaskKind::Dynamics)),
        Command::Collapse { common, input: None, .. } => run_with(&common, Some(TaskKind::Collapse)),
        Command::Collapse { common, input: Some(input), model, ansatz } => {
            set_workers(&common)?;
            let cfg = match &common.config {
                Some(_) => load_config(&common)?,
                None => default_config(model.into()),
            };
            let out = out_dir(&common, Some(&cfg));
            std::fs::create_dir_all(&out)?;
            let data = io::read_collapse_points(&input)?;
            let ansatz: Vec<AnsatzKind> = ansatz.into_iter().map(Into::into).collect();
            let mut written = Vec::new();
            let result = tasks::collapse_points(&data, &ansatz, &cfg, &out, "collapse", &mut written).map(|res| {
                for (a, r) in res {
                    println!("{}: cost {} {:?}", a.name(), r.cost, r.parameters);
                }
            });
            direct_manifest(&out, &cfg, "collapse/input", &input, &written, result)
        }
        Command::Fitimbalance { common, input: None, .. } => run_with(&common, Some(TaskKind::Fitimbalance)),
        Command::Fitimbalance { common, input: Some(input), model } => {
            set_workers(&common)?;
            let cfg = match &common.config {
                Some(_) => load_config(&common)?,
                None => default_config(model.into()),
            };
            let out = out_dir(&common, Some(&cfg));
            std::fs::create_dir_all(&out)?;
            let points = io::read_exponent_points(&input)?;
            let path = out.join("fit.json");
            let result = tasks::fit_exponents(&points, &cfg).and_then(|fit| {
                println!("gamma_c {} nu {} plateau {}", fit.gamma_c, fit.nu, fit.plateau);
                io::write_json(&path, &fit)
            });
            let written = if path.exists() { vec![path] } else { Vec::new() };
            direct_manifest(&out, &cfg, "fitimbalance/input", &input, &written, result)
        }
        Command::Basis { sites, particles, max_occ, spin, list } => {
            let n = particles.unwrap_or(sites / 2);
            let basis = if spin {
                enumerate_spin_sector(sites, n)?
            } else {
                enumerate_boson_sector(sites, n, max_occ.unwrap_or(n.min(u8::MAX as usize) as u8))?
            };
            println!("L={sites} N={n} max_occ={} dim={}", basis.max_occ(), basis.dim());
            debug_assert_eq!(sector_dimension(sites, n, basis.max_occ()), basis.dim() as u128);
            if list {
                for (i, s) in basis.states().iter().enumerate() {
                    println!("{i}\t{s}");
                }
            }
            Ok(0)
        }
        Command::Reproduce { tag, scale, common, print } => {
            let configs = reproduce::canned(&tag, scale, common.seed.unwrap_or(1))?;
            if print {
                for (name, cfg) in &configs {
                    println!("# {tag}/{name}\n{}", cfg.to_toml());
                }
                return Ok(0);
            }
            set_workers(&common)?;
            let root = common.out.clone().unwrap_or_else(|| PathBuf::from("runs")).join(&tag);
            let mut worst = 0;
            for (name, cfg) in &configs {
                let out = root.join(name);
                let manifest = tasks::run_experiment(cfg, &out)?;
                report(&manifest, &out);
                worst = worst.max(exit_for(&manifest));
            }
            Ok(worst)
        }
        Command::ValidateConfig(c) => {
            let cfg = load_config(&c)?;
            let (first, second) = tasks::plan(&cfg)?;
            println!("valid: {} tasks, config hash {}", first.len() + second.len(), cfg.hash());
            Ok(0)
        }
    }
}
