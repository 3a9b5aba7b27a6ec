//! Experiment description: a pre-selected outcome, an ordered list of
//! intermediate observables, and a post-selected outcome, all acting on one
//! Hilbert space.

use crate::quantum::{Observable, QuantumError, QuantumState};
use crate::linalg::ComplexMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("no observables declared")]
    NoObservables,
    #[error("observable '{0}' declared twice")]
    DuplicateObservable(String),
    #[error("observable '{0}' is not declared")]
    UnknownObservable(String),
    #[error("observables have mixed dimensions: {0} vs {1}")]
    MixedDimensions(usize, usize),
    #[error(
        "observable '{0}' is degenerate (an outcome subspace has dimension > 1); \
         protocols require complete observables"
    )]
    DegenerateObservable(String),
    #[error("observable '{observable}' has no outcome '{label}'")]
    UnknownOutcome { observable: String, label: String },
    #[error("initial state dimension {state} does not match protocol dimension {protocol}")]
    StateDimension { state: usize, protocol: usize },
    #[error("protocol enumerates {0} outcome sequences, above the limit of {MAX_SEQUENCES}")]
    TooManySequences(u128),
    #[error("outcome sequence does not fit the protocol: {0}")]
    BadSequence(String),
}

/// Hard cap on the number of enumerable outcome sequences; exact summation
/// is over every sequence, so larger protocols would silently hang.
pub const MAX_SEQUENCES: u128 = 10_000_000;

/// Monte Carlo defaults carried by a protocol file. Both fields are
/// overridable from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McDefaults {
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
}

/// One joint assignment of outcomes to the intermediate measurements,
/// stored as indices into each intermediate observable's outcome list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeSequence {
    indices: Vec<usize>,
}

impl OutcomeSequence {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The same outcomes read in the opposite chronological order; pairs
    /// with [`Protocol::reversed`].
    pub fn reversed(&self) -> Self {
        let mut indices = self.indices.clone();
        indices.reverse();
        Self { indices }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Boundary {
    observable: usize,
    outcome: usize,
}

/// A validated measurement protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    observables: Vec<Observable>,
    pre: Boundary,
    intermediates: Vec<usize>,
    post: Boundary,
    initial_state: Option<QuantumState>,
    mc: McDefaults,
    dim: usize,
}

impl Protocol {
    /// Assemble and validate a protocol. `pre` and `post` are
    /// `(observable name, outcome label)` pairs; `intermediates` are
    /// observable names in measurement order (may be empty).
    pub fn new(
        observables: Vec<Observable>,
        pre: (&str, &str),
        intermediates: &[&str],
        post: (&str, &str),
    ) -> Result<Self, ProtocolError> {
        if observables.is_empty() {
            return Err(ProtocolError::NoObservables);
        }
        let dim = observables[0].dim();
        for (i, obs) in observables.iter().enumerate() {
            if obs.dim() != dim {
                return Err(ProtocolError::MixedDimensions(dim, obs.dim()));
            }
            if !obs.is_complete() {
                return Err(ProtocolError::DegenerateObservable(obs.name().to_string()));
            }
            for other in &observables[..i] {
                if other.name() == obs.name() {
                    return Err(ProtocolError::DuplicateObservable(obs.name().to_string()));
                }
            }
        }
        let find = |name: &str| -> Result<usize, ProtocolError> {
            observables
                .iter()
                .position(|o| o.name() == name)
                .ok_or_else(|| ProtocolError::UnknownObservable(name.to_string()))
        };
        let boundary = |name: &str, label: &str| -> Result<Boundary, ProtocolError> {
            let observable = find(name)?;
            let outcome = observables[observable].outcome_index(label).map_err(|_| {
                ProtocolError::UnknownOutcome {
                    observable: name.to_string(),
                    label: label.to_string(),
                }
            })?;
            Ok(Boundary {
                observable,
                outcome,
            })
        };
        let pre = boundary(pre.0, pre.1)?;
        let post = boundary(post.0, post.1)?;
        let intermediates = intermediates
            .iter()
            .map(|name| find(name))
            .collect::<Result<Vec<_>, _>>()?;
        let n_sequences: u128 = intermediates
            .iter()
            .map(|&i| observables[i].n_outcomes() as u128)
            .product();
        if n_sequences > MAX_SEQUENCES {
            return Err(ProtocolError::TooManySequences(n_sequences));
        }
        Ok(Self {
            observables,
            pre,
            intermediates,
            post,
            initial_state: None,
            mc: McDefaults::default(),
            dim,
        })
    }

    /// Replace the default initial state (the pre-selection eigenvector).
    pub fn with_initial_state(mut self, state: QuantumState) -> Result<Self, ProtocolError> {
        if state.dim() != self.dim {
            return Err(ProtocolError::StateDimension {
                state: state.dim(),
                protocol: self.dim,
            });
        }
        self.initial_state = Some(state);
        Ok(self)
    }

    pub fn with_mc_defaults(mut self, mc: McDefaults) -> Self {
        self.mc = mc;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn mc_defaults(&self) -> McDefaults {
        self.mc
    }

    pub fn pre_observable(&self) -> &Observable {
        &self.observables[self.pre.observable]
    }

    pub fn post_observable(&self) -> &Observable {
        &self.observables[self.post.observable]
    }

    pub fn pre_label(&self) -> &str {
        &self.pre_observable().outcomes()[self.pre.outcome].label
    }

    pub fn post_label(&self) -> &str {
        &self.post_observable().outcomes()[self.post.outcome].label
    }

    pub fn pre_outcome_index(&self) -> usize {
        self.pre.outcome
    }

    pub fn post_outcome_index(&self) -> usize {
        self.post.outcome
    }

    pub fn pre_projector(&self) -> &ComplexMatrix {
        &self.pre_observable().outcomes()[self.pre.outcome].projector
    }

    pub fn post_projector(&self) -> &ComplexMatrix {
        &self.post_observable().outcomes()[self.post.outcome].projector
    }

    pub fn n_intermediates(&self) -> usize {
        self.intermediates.len()
    }

    pub fn intermediate(&self, k: usize) -> &Observable {
        &self.observables[self.intermediates[k]]
    }

    pub fn intermediate_names(&self) -> Vec<&str> {
        self.intermediates
            .iter()
            .map(|&i| self.observables[i].name())
            .collect()
    }

    /// Initial state for forward simulation. Protocols without an explicit
    /// state start in the pre-selection eigenvector, so pre-selection
    /// succeeds on every trial.
    pub fn initial_state(&self) -> QuantumState {
        match &self.initial_state {
            Some(s) => s.clone(),
            None => {
                let vector = self
                    .pre_projector()
                    .principal_column(crate::linalg::DEFAULT_TOL)
                    .expect("pre-selection projector is rank one by construction");
                QuantumState::Pure(vector)
            }
        }
    }

    pub fn explicit_initial_state(&self) -> Option<&QuantumState> {
        self.initial_state.as_ref()
    }

    /// Number of distinct intermediate outcome sequences.
    pub fn n_sequences(&self) -> usize {
        self.intermediates
            .iter()
            .map(|&i| self.observables[i].n_outcomes())
            .product()
    }

    /// All outcome sequences in a fixed enumeration order: the first
    /// intermediate is the most significant digit, the last varies fastest.
    /// For zero intermediates this is the single empty sequence.
    pub fn sequences(&self) -> Vec<OutcomeSequence> {
        let sizes: Vec<usize> = self
            .intermediates
            .iter()
            .map(|&i| self.observables[i].n_outcomes())
            .collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut s in 0..total {
            let mut indices = vec![0usize; sizes.len()];
            for k in (0..sizes.len()).rev() {
                indices[k] = s % sizes[k];
                s /= sizes[k];
            }
            out.push(OutcomeSequence::new(indices));
        }
        out
    }

    /// Check that a sequence indexes this protocol's intermediates.
    pub fn validate_sequence(&self, seq: &OutcomeSequence) -> Result<(), ProtocolError> {
        if seq.len() != self.n_intermediates() {
            return Err(ProtocolError::BadSequence(format!(
                "length {} does not match {} intermediates",
                seq.len(),
                self.n_intermediates()
            )));
        }
        for (k, &i) in seq.indices().iter().enumerate() {
            let n = self.intermediate(k).n_outcomes();
            if i >= n {
                return Err(ProtocolError::BadSequence(format!(
                    "index {} out of range for intermediate {} with {} outcomes",
                    i,
                    self.intermediate(k).name(),
                    n
                )));
            }
        }
        Ok(())
    }

    /// Position of `seq` in the [`Self::sequences`] enumeration.
    pub fn sequence_rank(&self, seq: &OutcomeSequence) -> Result<usize, ProtocolError> {
        self.validate_sequence(seq)?;
        let mut rank = 0usize;
        for (k, &i) in seq.indices().iter().enumerate() {
            rank = rank * self.intermediate(k).n_outcomes() + i;
        }
        Ok(rank)
    }

    pub fn sequence_labels(&self, seq: &OutcomeSequence) -> Vec<String> {
        seq.indices()
            .iter()
            .enumerate()
            .map(|(k, &i)| self.intermediate(k).outcomes()[i].label.clone())
            .collect()
    }

    pub fn sequence_projectors(&self, seq: &OutcomeSequence) -> Vec<&ComplexMatrix> {
        seq.indices()
            .iter()
            .enumerate()
            .map(|(k, &i)| &self.intermediate(k).outcomes()[i].projector)
            .collect()
    }

    /// The protocol read in the opposite direction: boundaries swapped and
    /// intermediates reversed. The initial state is dropped because it
    /// belongs to the forward reading; the reversed protocol starts from
    /// the default state.
    pub fn reversed(&self) -> Self {
        let mut rev = self.clone();
        std::mem::swap(&mut rev.pre, &mut rev.post);
        rev.intermediates.reverse();
        rev.initial_state = None;
        rev
    }

    /// Stable 64-bit fingerprint of the canonical serialization, used to
    /// name replay files and correlate reports.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(crate::io::protocol_to_string(self).as_bytes())
    }
}

/// FNV-1a, 64-bit. Stability across runs and platforms matters here, speed
/// and collision resistance do not.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;

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
    fn builds_and_exposes_structure() {
        let p = spin_protocol();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.n_intermediates(), 2);
        assert_eq!(p.pre_label(), "+1");
        assert_eq!(p.post_label(), "-1");
        assert_eq!(p.intermediate_names(), vec!["pauli_x", "pauli_y"]);
        assert_eq!(p.n_sequences(), 4);
    }

    #[test]
    fn sequence_enumeration_order() {
        let p = spin_protocol();
        let seqs = p.sequences();
        let idx: Vec<&[usize]> = seqs.iter().map(|s| s.indices()).collect();
        assert_eq!(
            idx,
            vec![&[0, 0][..], &[0, 1][..], &[1, 0][..], &[1, 1][..]]
        );
        assert_eq!(p.sequence_labels(&seqs[1]), vec!["-1", "+1"]);
    }

    #[test]
    fn zero_intermediates_yield_one_empty_sequence() {
        let p = Protocol::new(
            vec![Observable::builtin("pauli_z").unwrap()],
            ("pauli_z", "+1"),
            &[],
            ("pauli_z", "+1"),
        )
        .unwrap();
        assert_eq!(p.n_sequences(), 1);
        let seqs = p.sequences();
        assert_eq!(seqs.len(), 1);
        assert!(seqs[0].is_empty());
    }

    #[test]
    fn rejects_unknown_names_and_labels() {
        let obs = vec![Observable::builtin("pauli_z").unwrap()];
        assert!(matches!(
            Protocol::new(obs.clone(), ("sigma_q", "+1"), &[], ("pauli_z", "+1")),
            Err(ProtocolError::UnknownObservable(_))
        ));
        assert!(matches!(
            Protocol::new(obs.clone(), ("pauli_z", "+2"), &[], ("pauli_z", "+1")),
            Err(ProtocolError::UnknownOutcome { .. })
        ));
        assert!(matches!(
            Protocol::new(obs, ("pauli_z", "+1"), &["pauli_x"], ("pauli_z", "+1")),
            Err(ProtocolError::UnknownObservable(_))
        ));
    }

    #[test]
    fn rejects_duplicate_and_mismatched_observables() {
        let dup = vec![
            Observable::builtin("pauli_z").unwrap(),
            Observable::builtin("pauli_z").unwrap(),
        ];
        assert!(matches!(
            Protocol::new(dup, ("pauli_z", "+1"), &[], ("pauli_z", "+1")),
            Err(ProtocolError::DuplicateObservable(_))
        ));

        let mixed = vec![
            Observable::builtin("pauli_z").unwrap(),
            Observable::from_matrix("id3", &ComplexMatrix::identity(3)).unwrap(),
        ];
        assert!(matches!(
            Protocol::new(mixed, ("pauli_z", "+1"), &[], ("pauli_z", "+1")),
            Err(ProtocolError::MixedDimensions(_, _))
        ));
    }

    #[test]
    fn initial_state_defaults_to_pre_eigenvector() {
        let p = spin_protocol();
        match p.initial_state() {
            QuantumState::Pure(v) => {
                assert!(v.max_abs_diff(&ComplexVector::basis(2, 0)) < 1e-12)
            }
            _ => panic!("default initial state must be the pure pre-selection eigenvector"),
        }

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuantumState::pure(ComplexVector::from_real(&[s, s])).unwrap();
        let p = p.with_initial_state(plus.clone()).unwrap();
        assert_eq!(p.explicit_initial_state(), Some(&plus));

        let bad = QuantumState::pure(ComplexVector::basis(3, 0)).unwrap();
        assert!(matches!(
            spin_protocol().with_initial_state(bad),
            Err(ProtocolError::StateDimension { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_observables() {
        let obs = vec![
            Observable::builtin("pauli_z").unwrap(),
            Observable::builtin("identity").unwrap(),
        ];
        assert!(matches!(
            Protocol::new(obs, ("pauli_z", "+1"), &["identity"], ("pauli_z", "+1")),
            Err(ProtocolError::DegenerateObservable(_))
        ));
    }

    #[test]
    fn rejects_oversized_sequence_spaces() {
        // 25 two-outcome intermediates: 2^25 > 10^7 sequences.
        let names: Vec<&str> = std::iter::repeat_n("pauli_x", 25).collect();
        let obs = vec![
            Observable::builtin("pauli_z").unwrap(),
            Observable::builtin("pauli_x").unwrap(),
        ];
        assert!(matches!(
            Protocol::new(obs, ("pauli_z", "+1"), &names, ("pauli_z", "+1")),
            Err(ProtocolError::TooManySequences(_))
        ));
    }

    #[test]
    fn reversed_swaps_boundaries_and_order() {
        let p = spin_protocol();
        let r = p.reversed();
        assert_eq!(r.pre_label(), "-1");
        assert_eq!(r.post_label(), "+1");
        assert_eq!(r.intermediate_names(), vec!["pauli_y", "pauli_x"]);
        // Reversing twice restores a default-state protocol.
        assert_eq!(r.reversed(), p);
    }

    #[test]
    fn fnv_test_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }
}
