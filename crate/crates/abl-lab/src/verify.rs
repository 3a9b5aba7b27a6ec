//! Randomized invariant sweeps: draw random protocols, states, and
//! observable pairs, then measure how far each structural identity of the
//! probability calculus deviates from zero.
//!
//! Checks register behind a common trait so the sweep driver and the CLI
//! treat them uniformly: every check draws its own instances, reports its
//! worst observed deviation against a pinned tolerance, and serializes
//! the first failing instance for replay. The identities are theorems, so
//! a failure indicates an implementation bug, which is the point: this
//! module is the regression net for both probability routes.

use crate::abl::{self, AblError};
use crate::chain::{ChainError, ChainModel};
use crate::io::{self, UncertaintyInput};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::protocol::{Protocol, ProtocolError};
use crate::quantum::{Observable, QuantumError, QuantumState};
use crate::rng::trial_rng;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("sweep dimensions must lie in 2..=16, got {0}")]
    BadDimension(usize),
    #[error("sweep needs at least one dimension")]
    NoDimensions,
    #[error("failed to draw a complete random observable after {0} attempts")]
    NoCompleteObservable(u32),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Abl(#[from] AblError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Bounds for one randomized sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub max_intermediates: usize,
    pub instances: u64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 3],
            max_intermediates: 2,
            instances: 200,
            seed: 0,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), VerifyError> {
        if self.dims.is_empty() {
            return Err(VerifyError::NoDimensions);
        }
        for &d in &self.dims {
            if !(2..=16).contains(&d) {
                return Err(VerifyError::BadDimension(d));
            }
        }
        Ok(())
    }
}

/// Measured deviation of one random instance, with enough text to replay
/// the instance by hand.
#[derive(Debug, Clone)]
pub struct InstanceResult {
    pub deviation: f64,
    pub replay: String,
}

/// One invariant, checked on freshly drawn random instances.
pub trait InvariantCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn tolerance(&self) -> f64;
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError>;
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub description: &'static str,
    pub instances: u64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub passed: bool,
    /// Replay text of the first failing instance.
    pub failure_replay: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub outcomes: Vec<CheckOutcome>,
    pub all_passed: bool,
    /// True when the sweep ran zero instances and therefore proved
    /// nothing.
    pub vacuous: bool,
}

/// The standard check suite in a fixed, reportable order.
pub fn registry() -> Vec<Box<dyn InvariantCheck>> {
    vec![
        Box::new(NormalizationCheck),
        Box::new(ReverseOrderingCheck),
        Box::new(PsiIndependenceCheck),
        Box::new(BayesConsistencyCheck),
        Box::new(MarginalizationCheck),
        Box::new(OracleEquivalenceCheck),
        Box::new(RobertsonCheck),
    ]
}

/// A deliberately broken check that compares sequence probabilities
/// across the reversal without reversing the sequence order. It exists to
/// prove the sweep harness actually catches violations; wiring it into a
/// run must make the run fail.
pub fn injected_fault_check() -> Box<dyn InvariantCheck> {
    Box::new(InjectedFaultCheck)
}

/// Run every check for `config.instances` instances each. Instances fan
/// out in parallel; deviations fold in instance order so reports are
/// reproducible.
pub fn run_sweep(
    checks: &[Box<dyn InvariantCheck>],
    config: &SweepConfig,
) -> Result<SweepReport, VerifyError> {
    config.validate()?;
    let mut outcomes = Vec::with_capacity(checks.len());
    for check in checks {
        let stream_base = crate::protocol::fnv1a64(check.name().as_bytes());
        let results: Result<Vec<InstanceResult>, VerifyError> = (0..config.instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(config.seed ^ stream_base, i);
                check.run_instance(config, &mut rng)
            })
            .collect();
        let results = results?;
        let mut max_deviation = 0.0f64;
        let mut failure_replay = None;
        for r in &results {
            max_deviation = max_deviation.max(r.deviation);
            if r.deviation > check.tolerance() && failure_replay.is_none() {
                failure_replay = Some(r.replay.clone());
            }
        }
        let passed = failure_replay.is_none();
        outcomes.push(CheckOutcome {
            name: check.name(),
            description: check.description(),
            instances: config.instances,
            tolerance: check.tolerance(),
            max_deviation,
            passed,
            failure_replay,
        });
    }
    Ok(SweepReport {
        all_passed: outcomes.iter().all(|o| o.passed),
        vacuous: config.instances == 0,
        outcomes,
    })
}

// ---- random generators -------------------------------------------------

/// Haar-uniform unit vector: independent complex Gaussian components,
/// normalized.
pub fn random_unit_vector(dim: usize, rng: &mut ChaCha12Rng) -> ComplexVector {
    loop {
        let entries: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let v = ComplexVector::new(entries);
        if v.norm() > 1e-6 {
            return v.normalized().expect("norm checked above");
        }
    }
}

/// Random full-rank density matrix G G^dagger / tr(G G^dagger).
pub fn random_mixed_state(dim: usize, rng: &mut ChaCha12Rng) -> QuantumState {
    let mut g = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g.set(i, j, Complex64::new(re, im));
        }
    }
    let gram = g.matmul(&g.adjoint()).expect("same dimension");
    let trace = gram.trace().re;
    let rho = gram.scale(Complex64::new(1.0 / trace, 0.0));
    QuantumState::mixed(rho).expect("normalized Gram matrix is a valid state")
}

/// Random complete observable: spectrum of a Gaussian Hermitian matrix.
/// Redraws on the (measure-zero, tolerance-widened) event of a
/// degeneracy.
pub fn random_complete_observable(
    name: &str,
    dim: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Observable, VerifyError> {
    const ATTEMPTS: u32 = 16;
    for _ in 0..ATTEMPTS {
        let mut h = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            let diag: f64 = rng.sample(StandardNormal);
            h.set(i, i, Complex64::new(diag, 0.0));
            for j in (i + 1)..dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                h.set(i, j, Complex64::new(re, im));
                h.set(j, i, Complex64::new(re, -im));
            }
        }
        let obs = Observable::from_matrix(name, &h)?;
        if obs.is_complete() {
            return Ok(obs);
        }
    }
    Err(VerifyError::NoCompleteObservable(ATTEMPTS))
}

/// Random protocol with `n` intermediates on a `dim`-dimensional space,
/// using the default initial state (the pre-selection eigenvector).
pub fn random_protocol(dim: usize, n: usize, rng: &mut ChaCha12Rng) -> Result<Protocol, VerifyError> {
    let mut observables = Vec::with_capacity(n + 2);
    for k in 0..n + 2 {
        observables.push(random_complete_observable(&format!("obs{k}"), dim, rng)?);
    }
    let pre_outcome = rng.gen_range(0..observables[0].n_outcomes());
    let post_outcome = rng.gen_range(0..observables[n + 1].n_outcomes());
    let pre_label = observables[0].outcomes()[pre_outcome].label.clone();
    let post_label = observables[n + 1].outcomes()[post_outcome].label.clone();
    let names: Vec<String> = (1..=n).map(|k| format!("obs{k}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(Protocol::new(
        observables.clone(),
        ("obs0", &pre_label),
        &name_refs,
        (&format!("obs{}", n + 1), &post_label),
    )?)
}

fn pick_dim(config: &SweepConfig, rng: &mut ChaCha12Rng) -> usize {
    config.dims[rng.gen_range(0..config.dims.len())]
}

fn pick_n(config: &SweepConfig, rng: &mut ChaCha12Rng) -> usize {
    rng.gen_range(0..=config.max_intermediates)
}

/// Random initial state guaranteed to overlap the pre-selection outcome,
/// so conditioning is well defined.
fn random_overlapping_state(
    p: &Protocol,
    rng: &mut ChaCha12Rng,
) -> Result<QuantumState, VerifyError> {
    loop {
        let psi = random_unit_vector(p.dim(), rng);
        let state = QuantumState::pure(psi)?;
        if state.probability(p.pre_projector())? > 1e-6 {
            return Ok(state);
        }
    }
}

// ---- the checks --------------------------------------------------------

struct NormalizationCheck;

impl InvariantCheck for NormalizationCheck {
    fn name(&self) -> &'static str {
        "normalization"
    }
    fn description(&self) -> &'static str {
        "sequence probabilities of the two-boundary rule sum to one"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let p = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let total: f64 = abl::abl_distribution(&p)?.iter().map(|(_, v)| v).sum();
        Ok(InstanceResult {
            deviation: (total - 1.0).abs(),
            replay: io::protocol_to_string(&p),
        })
    }
}

struct ReverseOrderingCheck;

impl InvariantCheck for ReverseOrderingCheck {
    fn name(&self) -> &'static str {
        "reverse_ordering"
    }
    fn description(&self) -> &'static str {
        "reversing boundaries and sequence order leaves every probability unchanged"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let p = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let reversed = p.reversed();
        let mut deviation = 0.0f64;
        for seq in p.sequences() {
            let forward = abl::abl_probability(&p, &seq)?;
            let backward = abl::abl_probability(&reversed, &seq.reversed())?;
            deviation = deviation.max((forward - backward).abs());
        }
        Ok(InstanceResult {
            deviation,
            replay: io::protocol_to_string(&p),
        })
    }
}

struct PsiIndependenceCheck;

impl InvariantCheck for PsiIndependenceCheck {
    fn name(&self) -> &'static str {
        "psi_independence"
    }
    fn description(&self) -> &'static str {
        "conditionals agree for any two initial states overlapping the pre-selection"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let base = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let first = base
            .clone()
            .with_initial_state(random_overlapping_state(&base, rng)?)?;
        let second = base
            .clone()
            .with_initial_state(random_overlapping_state(&base, rng)?)?;
        let left = abl::conditional_distribution(&first)?;
        let right = abl::conditional_distribution(&second)?;
        let deviation = left
            .iter()
            .zip(right.iter())
            .map(|((_, a), (_, b))| (a - b).abs())
            .fold(0.0f64, f64::max);
        Ok(InstanceResult {
            deviation,
            replay: io::protocol_to_string(&second),
        })
    }
}

struct BayesConsistencyCheck;

impl InvariantCheck for BayesConsistencyCheck {
    fn name(&self) -> &'static str {
        "bayes"
    }
    fn description(&self) -> &'static str {
        "conditional times overall equals joint for every sequence"
    }
    fn tolerance(&self) -> f64 {
        1e-12
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let base = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let p = base
            .clone()
            .with_initial_state(random_overlapping_state(&base, rng)?)?;
        let overall = abl::overall_probability(&p);
        let mut deviation = 0.0f64;
        for seq in p.sequences() {
            let joint = abl::joint_probability(&p, &seq)?;
            let conditional = abl::conditional_probability(&p, &seq)?;
            deviation = deviation.max((conditional * overall - joint).abs());
        }
        Ok(InstanceResult {
            deviation,
            replay: io::protocol_to_string(&p),
        })
    }
}

struct MarginalizationCheck;

impl InvariantCheck for MarginalizationCheck {
    fn name(&self) -> &'static str {
        "marginalization"
    }
    fn description(&self) -> &'static str {
        "joint probabilities sum to the overall selection probability"
    }
    fn tolerance(&self) -> f64 {
        1e-12
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let base = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let p = base
            .clone()
            .with_initial_state(random_overlapping_state(&base, rng)?)?;
        let overall = abl::overall_probability(&p);
        let mut sum = 0.0f64;
        for seq in p.sequences() {
            sum += abl::joint_probability(&p, &seq)?;
        }
        Ok(InstanceResult {
            deviation: (sum - overall).abs(),
            replay: io::protocol_to_string(&p),
        })
    }
}

struct OracleEquivalenceCheck;

impl InvariantCheck for OracleEquivalenceCheck {
    fn name(&self) -> &'static str {
        "oracle_equivalence"
    }
    fn description(&self) -> &'static str {
        "pointer amplitudes of the explicit chain model reproduce the closed-form conditionals"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let base = random_protocol(pick_dim(config, rng), pick_n(config, rng), rng)?;
        let mut deviation = 0.0f64;

        // Random initial state: amplitudes squared against the forward
        // conditional.
        let p = base
            .clone()
            .with_initial_state(random_overlapping_state(&base, rng)?)?;
        let amps = ChainModel::new(&p)?.conditional_for_protocol_boundaries()?;
        for ((_, conditional), amp2) in abl::conditional_distribution(&p)?.iter().zip(&amps) {
            deviation = deviation.max((conditional - amp2).abs());
        }

        // Default initial state (the pre-selection eigenvector): the same
        // amplitudes must also match the two-boundary rule directly.
        let amps = ChainModel::new(&base)?.conditional_for_protocol_boundaries()?;
        for ((_, abl_value), amp2) in abl::abl_distribution(&base)?.iter().zip(&amps) {
            deviation = deviation.max((abl_value - amp2).abs());
        }
        Ok(InstanceResult {
            deviation,
            replay: io::protocol_to_string(&p),
        })
    }
}

struct RobertsonCheck;

impl InvariantCheck for RobertsonCheck {
    fn name(&self) -> &'static str {
        "robertson"
    }
    fn description(&self) -> &'static str {
        "spread product stays above half the commutator expectation"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        let dim = pick_dim(config, rng);
        let first = random_complete_observable("first", dim, rng)?;
        let second = random_complete_observable("second", dim, rng)?;
        let state = if rng.gen::<bool>() {
            QuantumState::pure(random_unit_vector(dim, rng))?
        } else {
            random_mixed_state(dim, rng)
        };
        let report = abl::robertson_check(&first, &second, &state)?;
        // Positive part of (bound - product): how far the inequality is
        // violated, zero when satisfied.
        let deviation = (report.bound - report.product).max(0.0);
        Ok(InstanceResult {
            deviation,
            replay: io::uncertainty_to_string(&UncertaintyInput {
                first,
                second,
                state,
            }),
        })
    }
}

struct InjectedFaultCheck;

impl InvariantCheck for InjectedFaultCheck {
    fn name(&self) -> &'static str {
        "injected_fault"
    }
    fn description(&self) -> &'static str {
        "deliberately wrong reversal comparison; must fail"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn run_instance(
        &self,
        config: &SweepConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<InstanceResult, VerifyError> {
        // At least one intermediate, or the unreversed comparison would
        // accidentally hold.
        let n = 1 + pick_n(config, rng);
        let p = random_protocol(pick_dim(config, rng), n, rng)?;
        let reversed = p.reversed();
        let mut deviation = 0.0f64;
        for seq in p.sequences() {
            let forward = abl::abl_probability(&p, &seq)?;
            // Fault: the sequence is not reversed alongside the protocol.
            let backward = abl::abl_probability(&reversed, &seq)?;
            deviation = deviation.max((forward - backward).abs());
        }
        Ok(InstanceResult {
            deviation,
            replay: io::protocol_to_string(&p),
        })
    }
}
