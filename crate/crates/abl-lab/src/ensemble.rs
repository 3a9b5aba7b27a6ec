//! Monte Carlo realization of a measurement protocol: run independent
//! trials with sequential sampling and collapse, cull by the selection
//! outcomes, and tabulate frequency ratios against the closed-form values.
//!
//! Selection is always culling: a trial that fails the pre- or
//! post-selection is discarded outright, never reweighted. With
//! post-selection off, trials are still culled on the pre-outcome and
//! sequence counts still require the designated final outcome, so the
//! ratio estimates the plain Born-chain probability given preparation.
//! Ratios with an empty denominator are reported as undefined rather than
//! zero so impossible selections cannot be mistaken for certain misses.

use crate::abl::{self, AblError};
use crate::protocol::{OutcomeSequence, Protocol};
use crate::rng::trial_rng;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Trial count used when the caller and the protocol file specify none.
pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("statistics were produced from a different protocol")]
    ProtocolMismatch { stats: u64, protocol: u64 },
    #[error("ensemble needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Abl(#[from] AblError),
}

/// Outcome record of a single run: the pre outcome, the n intermediate
/// outcomes, and the post outcome, as indices into each observable's
/// outcome list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub outcome_indices: Vec<usize>,
}

impl TrialRecord {
    /// Outcome labels in measurement order (A, C1..Cn, B).
    pub fn labels<'a>(&self, p: &'a Protocol) -> Vec<&'a str> {
        let n = p.n_intermediates();
        debug_assert_eq!(self.outcome_indices.len(), n + 2);
        let mut labels = Vec::with_capacity(n + 2);
        labels.push(p.pre_observable().outcomes()[self.outcome_indices[0]].label.as_str());
        for k in 0..n {
            labels.push(
                p.intermediate(k).outcomes()[self.outcome_indices[k + 1]]
                    .label
                    .as_str(),
            );
        }
        labels.push(
            p.post_observable().outcomes()[self.outcome_indices[n + 1]]
                .label
                .as_str(),
        );
        labels
    }

    pub fn pre_outcome(&self) -> usize {
        self.outcome_indices[0]
    }

    pub fn post_outcome(&self) -> usize {
        *self.outcome_indices.last().expect("n+2 outcomes")
    }

    pub fn intermediate_outcomes(&self) -> &[usize] {
        &self.outcome_indices[1..self.outcome_indices.len() - 1]
    }
}

/// Run one trial: prepare the initial state, then sample A, C1..Cn, B in
/// order, collapsing after each measurement.
pub fn run_trial<R: Rng + ?Sized>(p: &Protocol, trial_index: u64, rng: &mut R) -> TrialRecord {
    let n = p.n_intermediates();
    let mut outcome_indices = Vec::with_capacity(n + 2);
    let mut state = p.initial_state();
    let (a, collapsed) = state
        .measure_sample(p.pre_observable(), rng)
        .expect("complete observable on a normalized state");
    outcome_indices.push(a);
    state = collapsed;
    for k in 0..n {
        let (c, collapsed) = state
            .measure_sample(p.intermediate(k), rng)
            .expect("complete observable on a normalized state");
        outcome_indices.push(c);
        state = collapsed;
    }
    let (b, _) = state
        .measure_sample(p.post_observable(), rng)
        .expect("complete observable on a normalized state");
    outcome_indices.push(b);
    TrialRecord {
        trial_index,
        outcome_indices,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub n_trials: u64,
    pub seed: u64,
    /// When false, only the pre-selection cull applies and ratios are
    /// taken against the pre-selected count.
    pub post_select: bool,
    pub parallel: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            seed: 0,
            post_select: true,
            parallel: true,
        }
    }
}

/// Aggregated trial counts. `seq_counts` is aligned with
/// `Protocol::sequences()` and counts trials whose full record matched
/// `(a, sequence, b)` for the designated boundary outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleStats {
    pub n_total: u64,
    pub n_preselected: u64,
    /// Ratio denominator: full selection count when post-selecting,
    /// otherwise the pre-selected count.
    pub n_selected: u64,
    pub post_selected: bool,
    pub seed: u64,
    pub seq_counts: Vec<u64>,
    /// Fingerprint of the protocol the stats were computed from.
    pub fingerprint: u64,
}

impl EnsembleStats {
    /// Empirical ratio for the sequence at `rank`, or `None` when no trial
    /// survived selection.
    pub fn ratio(&self, rank: usize) -> Option<f64> {
        if self.n_selected == 0 {
            None
        } else {
            Some(self.seq_counts[rank] as f64 / self.n_selected as f64)
        }
    }

    pub fn ratios(&self) -> Vec<Option<f64>> {
        (0..self.seq_counts.len()).map(|r| self.ratio(r)).collect()
    }
}

/// Run `config.n_trials` independent trials on per-trial substreams of
/// `config.seed` and fold the counts in trial-index order. The fold order
/// makes serial and parallel execution bit-identical.
pub fn run_ensemble(p: &Protocol, config: &EnsembleConfig) -> Result<EnsembleStats, EnsembleError> {
    if config.n_trials == 0 {
        return Err(EnsembleError::NoTrials);
    }
    let pre_idx = p.pre_outcome_index();
    let post_idx = p.post_outcome_index();
    let trial = |i: u64| -> (usize, usize, usize) {
        let mut rng = trial_rng(config.seed, i);
        let record = run_trial(p, i, &mut rng);
        let rank = p
            .sequence_rank(&OutcomeSequence::new(record.intermediate_outcomes().to_vec()))
            .expect("sampled outcomes are always in range");
        (record.pre_outcome(), rank, record.post_outcome())
    };
    let outcomes: Vec<(usize, usize, usize)> = if config.parallel {
        (0..config.n_trials).into_par_iter().map(trial).collect()
    } else {
        (0..config.n_trials).map(trial).collect()
    };

    let mut stats = EnsembleStats {
        n_total: config.n_trials,
        n_preselected: 0,
        n_selected: 0,
        post_selected: config.post_select,
        seed: config.seed,
        seq_counts: vec![0; p.sequences().len()],
        fingerprint: p.fingerprint(),
    };
    for (a, rank, b) in outcomes {
        if a != pre_idx {
            continue;
        }
        stats.n_preselected += 1;
        if config.post_select && b == post_idx {
            stats.n_selected += 1;
        }
        if b == post_idx {
            stats.seq_counts[rank] += 1;
        }
    }
    if !config.post_select {
        stats.n_selected = stats.n_preselected;
    }
    Ok(stats)
}

/// One row of the MC-versus-exact table.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceComparison {
    pub labels: Vec<String>,
    pub count: u64,
    pub ratio: Option<f64>,
    /// Closed-form value: the selective conditional when post-selecting,
    /// the Born-chain probability given preparation otherwise. `None` when
    /// the selection itself has zero probability.
    pub exact: Option<f64>,
    pub deviation: Option<f64>,
    /// Whether the empirical ratio lies within three binomial standard
    /// errors of the exact value.
    pub ci_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McComparison {
    pub n_total: u64,
    pub n_preselected: u64,
    pub n_selected: u64,
    pub post_selected: bool,
    pub seed: u64,
    pub rows: Vec<SequenceComparison>,
}

impl McComparison {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.ci_pass.unwrap_or(false))
    }
}

/// Outcome labels of one intermediate sequence, in measurement order.
pub fn sequence_labels(p: &Protocol, seq: &OutcomeSequence) -> Vec<String> {
    seq.indices()
        .iter()
        .enumerate()
        .map(|(k, &i)| p.intermediate(k).outcomes()[i].label.clone())
        .collect()
}

/// Tabulate empirical ratios against the closed-form distribution with a
/// three-sigma binomial acceptance band per sequence.
pub fn compare_mc_exact(stats: &EnsembleStats, p: &Protocol) -> Result<McComparison, EnsembleError> {
    let fingerprint = p.fingerprint();
    if stats.fingerprint != fingerprint {
        return Err(EnsembleError::ProtocolMismatch {
            stats: stats.fingerprint,
            protocol: fingerprint,
        });
    }
    let exact = if stats.post_selected {
        abl::conditional_distribution(p)
    } else {
        abl::unselected_distribution(p)
    };
    let exact: Option<Vec<f64>> = match exact {
        Ok(pairs) => Some(pairs.into_iter().map(|(_, v)| v).collect()),
        Err(AblError::ImpossiblePostSelection { .. })
        | Err(AblError::ImpossiblePreSelection { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let rows = p
        .sequences()
        .iter()
        .enumerate()
        .map(|(rank, seq)| {
            let ratio = stats.ratio(rank);
            let exact_value = exact.as_ref().map(|v| v[rank]);
            let deviation = match (ratio, exact_value) {
                (Some(r), Some(e)) => Some((r - e).abs()),
                _ => None,
            };
            let ci_pass = match (ratio, exact_value) {
                (Some(r), Some(e)) => {
                    let sigma = (e * (1.0 - e) / stats.n_selected as f64).sqrt();
                    Some((r - e).abs() <= 3.0 * sigma + 1e-12)
                }
                _ => None,
            };
            SequenceComparison {
                labels: sequence_labels(p, seq),
                count: stats.seq_counts[rank],
                ratio,
                exact: exact_value,
                deviation,
                ci_pass,
            }
        })
        .collect();
    Ok(McComparison {
        n_total: stats.n_total,
        n_preselected: stats.n_preselected,
        n_selected: stats.n_selected,
        post_selected: stats.post_selected,
        seed: stats.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;
    use crate::quantum::{Observable, QuantumState};

    fn spin_protocol() -> Protocol {
        Protocol::new(
            vec![
                Observable::builtin("pauli_z").unwrap(),
                Observable::builtin("pauli_x").unwrap(),
                Observable::builtin("pauli_y").unwrap(),
            ],
            ("pauli_z", "+1"),
            &["pauli_x", "pauli_y"],
            ("pauli_z", "-1"),
        )
        .unwrap()
    }

    #[test]
    fn repeated_measurement_record_is_constant() {
        let p = Protocol::new(
            vec![Observable::builtin("pauli_z").unwrap()],
            ("pauli_z", "+1"),
            &[],
            ("pauli_z", "+1"),
        )
        .unwrap();
        for i in 0..100 {
            let mut rng = trial_rng(7, i);
            let record = run_trial(&p, i, &mut rng);
            assert_eq!(record.outcome_indices, vec![1, 1]);
            assert_eq!(record.labels(&p), vec!["+1", "+1"]);
        }
    }

    #[test]
    fn fixed_stream_reproduces_the_record() {
        let p = spin_protocol();
        let mut rng_a = trial_rng(42, 5);
        let mut rng_b = trial_rng(42, 5);
        assert_eq!(run_trial(&p, 5, &mut rng_a), run_trial(&p, 5, &mut rng_b));
    }

    #[test]
    fn middle_outcome_repeats_the_first_in_aab_protocol() {
        // Pre and mid measure the same observable, so collapse forces the
        // middle outcome to repeat the first whatever the first was.
        let psi = ComplexVector::new(vec![
            num_complex::Complex64::new(0.6, 0.0),
            num_complex::Complex64::new(0.0, 0.8),
        ]);
        let p = Protocol::new(
            vec![
                Observable::builtin("pauli_z").unwrap(),
                Observable::builtin("pauli_x").unwrap(),
            ],
            ("pauli_z", "+1"),
            &["pauli_z"],
            ("pauli_x", "+1"),
        )
        .unwrap()
        .with_initial_state(QuantumState::pure(psi).unwrap())
        .unwrap();
        let mut seen_both = [false, false];
        for i in 0..200 {
            let mut rng = trial_rng(3, i);
            let record = run_trial(&p, i, &mut rng);
            assert_eq!(record.outcome_indices[1], record.outcome_indices[0]);
            seen_both[record.pre_outcome()] = true;
        }
        assert!(seen_both[0] && seen_both[1]);
    }

    #[test]
    fn spin_ensemble_matches_closed_form() {
        let p = spin_protocol();
        let stats = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 10_000,
                seed: 1,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(stats.n_total, 10_000);
        assert_eq!(stats.n_preselected, 10_000);
        assert!(stats.n_selected >= 4_700 && stats.n_selected <= 5_300);
        assert_eq!(stats.seq_counts.iter().sum::<u64>(), stats.n_selected);
        for rank in 0..4 {
            let ratio = stats.ratio(rank).unwrap();
            assert!((ratio - 0.25).abs() < 0.02, "ratio {ratio}");
        }
        let table = compare_mc_exact(&stats, &p).unwrap();
        assert!(table.all_pass());
        for row in &table.rows {
            assert!((row.exact.unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_inputs_reproduce_identical_stats() {
        let p = spin_protocol();
        let config = EnsembleConfig {
            n_trials: 2_000,
            seed: 99,
            ..EnsembleConfig::default()
        };
        assert_eq!(
            run_ensemble(&p, &config).unwrap(),
            run_ensemble(&p, &config).unwrap()
        );
    }

    #[test]
    fn serial_and_parallel_agree_exactly() {
        let p = spin_protocol();
        let serial = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 3_000,
                seed: 5,
                parallel: false,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        let parallel = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 3_000,
                seed: 5,
                parallel: true,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn impossible_selection_yields_undefined_ratios() {
        let p = Protocol::new(
            vec![Observable::builtin("pauli_z").unwrap()],
            ("pauli_z", "+1"),
            &[],
            ("pauli_z", "-1"),
        )
        .unwrap();
        let stats = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 500,
                seed: 0,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(stats.n_selected, 0);
        assert_eq!(stats.ratios(), vec![None]);
        let table = compare_mc_exact(&stats, &p).unwrap();
        assert_eq!(table.rows[0].ratio, None);
        assert_eq!(table.rows[0].exact, None);
        assert_eq!(table.rows[0].ci_pass, None);
    }

    #[test]
    fn unselected_control_halves_the_certain_ratio() {
        // Mid observable repeats the preparation basis, so the selective
        // conditional is 1; without post-selection the denominator grows to
        // every prepared trial and the ratio drops to the Born value 1/2.
        let p = Protocol::new(
            vec![
                Observable::builtin("pauli_z").unwrap(),
                Observable::builtin("pauli_x").unwrap(),
            ],
            ("pauli_z", "+1"),
            &["pauli_z"],
            ("pauli_x", "+1"),
        )
        .unwrap();
        let selected = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 10_000,
                seed: 11,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        let mid_plus = p
            .sequence_rank(&OutcomeSequence::new(vec![1]))
            .unwrap();
        assert!((selected.ratio(mid_plus).unwrap() - 1.0).abs() < 1e-12);

        let control = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 10_000,
                seed: 11,
                post_select: false,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(control.n_selected, 10_000);
        let ratio = control.ratio(mid_plus).unwrap();
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        let table = compare_mc_exact(&control, &p).unwrap();
        assert!((table.rows[mid_plus].exact.unwrap() - 0.5).abs() < 1e-12);
        assert!(table.all_pass());
    }

    #[test]
    fn mismatched_stats_and_protocol_are_rejected() {
        let p = spin_protocol();
        let stats = run_ensemble(
            &p,
            &EnsembleConfig {
                n_trials: 100,
                seed: 0,
                ..EnsembleConfig::default()
            },
        )
        .unwrap();
        let other = Protocol::new(
            vec![
                Observable::builtin("pauli_z").unwrap(),
                Observable::builtin("pauli_x").unwrap(),
                Observable::builtin("pauli_y").unwrap(),
            ],
            ("pauli_z", "+1"),
            &["pauli_y", "pauli_x"],
            ("pauli_z", "-1"),
        )
        .unwrap();
        assert!(matches!(
            compare_mc_exact(&stats, &other),
            Err(EnsembleError::ProtocolMismatch { .. })
        ));
    }

    #[test]
    fn zero_trials_is_an_error() {
        let p = spin_protocol();
        let config = EnsembleConfig {
            n_trials: 0,
            ..EnsembleConfig::default()
        };
        assert!(matches!(run_ensemble(&p, &config), Err(EnsembleError::NoTrials)));
    }
}
