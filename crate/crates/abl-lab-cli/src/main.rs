//! Command-line front end: parse protocol files, dispatch the exact, Monte
//! Carlo, verification, uncertainty, and fallacy commands, and emit text
//! or JSON reports.

use abl_lab::abl::{self, AblError};
use abl_lab::chain::ChainError;
use abl_lab::ensemble::{self, EnsembleConfig, EnsembleError};
use abl_lab::fallacies::{self, FallacyError};
use abl_lab::io::{self, FormatError};
use abl_lab::protocol::{fnv1a64, ProtocolError};
use abl_lab::quantum::{QuantumError, QuantumState};
use abl_lab::report::{self, RobertsonSweepDoc};
use abl_lab::rng::trial_rng;
use abl_lab::verify::{self, SweepConfig, VerifyError};
use abl_lab::Protocol;
use clap::{Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exact and stochastic analysis of sequential projective measurement
/// protocols with pre- and post-selection.
#[derive(Debug, Parser)]
#[command(name = "abl-lab", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit the report as JSON instead of aligned text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form conditional sequence probabilities for a protocol file.
    Exact {
        /// Protocol file.
        file: PathBuf,
    },
    /// Monte Carlo ensemble with selection culling, tabulated against the
    /// closed-form values.
    Mc {
        /// Protocol file.
        file: PathBuf,
        /// Trial count (default: the file's mc block, else 10,000).
        #[arg(long)]
        n: Option<u64>,
        /// RNG seed (default: ABL_LAB_SEED, else the file's mc block, else 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Cull on the pre-selection outcome only and take ratios against
        /// the pre-selected count.
        #[arg(long)]
        no_postselect: bool,
        /// Run trials on one thread (output is identical either way).
        #[arg(long)]
        serial: bool,
    },
    /// Randomized sweep of the structural identities relating the
    /// closed-form rule, the explicit chain model, and the Born chain.
    Verify {
        /// Hilbert dimensions to draw from.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
        /// Largest number of intermediate measurements.
        #[arg(long, default_value_t = 2)]
        max_n: usize,
        /// Random instances per check; 0 is a vacuous pass.
        #[arg(long, default_value_t = 200)]
        instances: u64,
        /// RNG seed (default: ABL_LAB_SEED, else 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Spread product and commutator bound for an observable pair file.
    Uncertainty {
        /// File with two observables and an optional state block.
        file: PathBuf,
        /// Also sweep random observable pairs and states at dimensions 2
        /// through 6.
        #[arg(long)]
        sweep: bool,
        /// Random instances for --sweep.
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        /// RNG seed for --sweep (default: ABL_LAB_SEED, else 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the three distinct single-intermediate ensembles built
    /// from a protocol's boundary and middle observables.
    Aad {
        /// Protocol file with exactly one intermediate observable.
        file: PathBuf,
    },
    /// Classical selection-bias scenario (berkson, coins, shutter, boxes).
    Fallacy {
        /// Scenario name.
        name: String,
        /// Trial count (default: per-scenario).
        #[arg(long)]
        n: Option<u64>,
        /// RNG seed (default: ABL_LAB_SEED, else 0).
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Impossible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Impossible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Impossible(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AblError> for CliError {
    fn from(e: AblError) -> Self {
        match e {
            AblError::ImpossiblePostSelection { .. } | AblError::ImpossiblePreSelection { .. } => {
                CliError::Impossible(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Abl(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::ImpossibleConditioning(_) => CliError::Impossible(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FallacyError> for CliError {
    fn from(e: FallacyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

struct RunOutput {
    rendered: String,
    verification_failed: bool,
}

impl RunOutput {
    fn ok(rendered: String) -> Self {
        Self {
            rendered,
            verification_failed: false,
        }
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("ABL_LAB_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::Validation(format!(
                "ABL_LAB_SEED must be an unsigned integer, got {raw:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Validation(format!("ABL_LAB_SEED: {e}"))),
    }
}

/// Seed precedence: command line, then environment, then the protocol
/// file's mc block, then 0.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = env_seed()? {
        return Ok(seed);
    }
    Ok(file.unwrap_or(0))
}

fn cmd_exact(file: &Path, json: bool) -> Result<RunOutput, CliError> {
    let p = io::read_protocol_file(file)?;
    let dist = abl::abl_distribution(&p)?;
    let rows = dist
        .into_iter()
        .map(|(seq, prob)| (ensemble::sequence_labels(&p, &seq), prob))
        .collect();
    let doc = report::exact_doc(p.pre_label(), p.post_label(), rows);
    Ok(RunOutput::ok(if json {
        report::to_json(&doc)
    } else {
        report::render_exact_text(&doc)
    }))
}

fn cmd_mc(
    file: &Path,
    n: Option<u64>,
    seed: Option<u64>,
    no_postselect: bool,
    serial: bool,
    json: bool,
) -> Result<RunOutput, CliError> {
    let p = io::read_protocol_file(file)?;
    let defaults = p.mc_defaults();
    let config = EnsembleConfig {
        n_trials: n
            .or(defaults.n_trials)
            .unwrap_or(ensemble::DEFAULT_TRIALS),
        seed: resolve_seed(seed, defaults.seed)?,
        post_select: !no_postselect,
        parallel: !serial,
    };
    let stats = ensemble::run_ensemble(&p, &config)?;
    let cmp = ensemble::compare_mc_exact(&stats, &p)?;
    let doc = report::mc_doc(&cmp);
    Ok(RunOutput::ok(if json {
        report::to_json(&doc)
    } else {
        report::render_mc_text(&doc)
    }))
}

fn cmd_verify(
    dims: Vec<usize>,
    max_n: usize,
    instances: u64,
    seed: Option<u64>,
    json: bool,
) -> Result<RunOutput, CliError> {
    let config = SweepConfig {
        dims,
        max_intermediates: max_n,
        instances,
        seed: resolve_seed(seed, None)?,
    };
    let mut checks = verify::registry();
    // Harness self-test hook: prove that the sweep reports failures.
    if std::env::var_os("ABL_LAB_INJECT_FAULT").is_some() {
        checks.push(verify::injected_fault_check());
    }
    let sweep = verify::run_sweep(&checks, &config)?;
    for outcome in &sweep.outcomes {
        if let Some(replay) = &outcome.failure_replay {
            let path = PathBuf::from(format!("{}_failure.replay", outcome.name));
            io::write_text_file(&path, replay)?;
            eprintln!(
                "check {} failed; replay written to {}",
                outcome.name,
                path.display()
            );
        }
    }
    let doc = report::verify_doc(&sweep);
    Ok(RunOutput {
        rendered: if json {
            report::to_json(&doc)
        } else {
            report::render_verify_text(&doc)
        },
        verification_failed: !sweep.all_passed,
    })
}

fn cmd_uncertainty(
    file: &Path,
    sweep: bool,
    instances: u64,
    seed: Option<u64>,
    json: bool,
) -> Result<RunOutput, CliError> {
    let input = io::read_uncertainty_file(file)?;
    let base = abl::robertson_check(&input.first, &input.second, &input.state)?;
    let sweep_doc = if sweep {
        Some(run_robertson_sweep(instances, resolve_seed(seed, None)?)?)
    } else {
        None
    };
    let failed =
        !base.satisfied || sweep_doc.as_ref().is_some_and(|s| s.violations > 0);
    let doc = report::robertson_doc(&base, sweep_doc);
    Ok(RunOutput {
        rendered: if json {
            report::to_json(&doc)
        } else {
            report::render_robertson_text(&doc)
        },
        verification_failed: failed,
    })
}

/// Violations of the spread-product bound beyond 1e-10 slack over random
/// observable pairs and states at dimensions 2 through 6.
fn run_robertson_sweep(instances: u64, seed: u64) -> Result<RobertsonSweepDoc, CliError> {
    const DIMS: [usize; 5] = [2, 3, 4, 5, 6];
    const SLACK: f64 = 1e-10;
    let stream = seed ^ fnv1a64(b"uncertainty_sweep");
    let violations_per: Result<Vec<f64>, CliError> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(stream, i);
            let dim = DIMS[rng.gen_range(0..DIMS.len())];
            let first = verify::random_complete_observable("first", dim, &mut rng)?;
            let second = verify::random_complete_observable("second", dim, &mut rng)?;
            let state = if rng.gen::<bool>() {
                QuantumState::pure(verify::random_unit_vector(dim, &mut rng))?
            } else {
                verify::random_mixed_state(dim, &mut rng)
            };
            let r = abl::robertson_check(&first, &second, &state)?;
            Ok((r.bound - r.product).max(0.0))
        })
        .collect();
    let violations_per = violations_per?;
    let mut violations = 0u64;
    let mut max_violation = 0.0f64;
    for v in violations_per {
        if v > SLACK {
            violations += 1;
        }
        max_violation = max_violation.max(v);
    }
    Ok(RobertsonSweepDoc {
        instances,
        violations,
        max_violation,
    })
}

fn cmd_aad(file: &Path, json: bool) -> Result<RunOutput, CliError> {
    let p: Protocol = io::read_protocol_file(file)?;
    if p.n_intermediates() != 1 {
        return Err(CliError::Validation(format!(
            "the aad command needs exactly one intermediate observable, got {}",
            p.n_intermediates()
        )));
    }
    let report_data = abl::aad_compare(
        p.pre_observable(),
        p.intermediate(0),
        p.post_observable(),
        p.pre_label(),
        p.post_label(),
    )?;
    let doc = report::aad_doc(&report_data);
    Ok(RunOutput::ok(if json {
        report::to_json(&doc)
    } else {
        report::render_aad_text(&doc)
    }))
}

fn cmd_fallacy(
    name: &str,
    n: Option<u64>,
    seed: Option<u64>,
    json: bool,
) -> Result<RunOutput, CliError> {
    let scenario = fallacies::find(name).ok_or_else(|| {
        let known: Vec<&str> = fallacies::registry().iter().map(|s| s.name()).collect();
        CliError::Validation(format!(
            "unknown fallacy scenario {name:?}; known scenarios: {}",
            known.join(", ")
        ))
    })?;
    let n_trials = n.unwrap_or_else(|| scenario.default_trials());
    let report_data = scenario.run(n_trials, resolve_seed(seed, None)?)?;
    Ok(RunOutput::ok(if json {
        report::to_json(&report_data)
    } else {
        report::render_fallacy_text(&report_data)
    }))
}

fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    match &cli.command {
        Command::Exact { file } => cmd_exact(file, cli.json),
        Command::Mc {
            file,
            n,
            seed,
            no_postselect,
            serial,
        } => cmd_mc(file, *n, *seed, *no_postselect, *serial, cli.json),
        Command::Verify {
            dims,
            max_n,
            instances,
            seed,
        } => cmd_verify(dims.clone(), *max_n, *instances, *seed, cli.json),
        Command::Uncertainty {
            file,
            sweep,
            instances,
            seed,
        } => cmd_uncertainty(file, *sweep, *instances, *seed, cli.json),
        Command::Aad { file } => cmd_aad(file, cli.json),
        Command::Fallacy { name, n, seed } => cmd_fallacy(name, *n, *seed, cli.json),
    }
}

fn emit(out: &Option<PathBuf>, rendered: &str) -> Result<(), CliError> {
    match out {
        Some(path) => io::write_text_file(path, rendered).map_err(CliError::from),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            if let Err(e) = emit(&cli.out, &output.rendered) {
                eprintln!("error: {}", e.message());
                return ExitCode::from(e.code());
            }
            if output.verification_failed {
                eprintln!("verification failed");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
