//! States, projective observables, Born probabilities, collapse, sampling.

use crate::linalg::{pauli, ComplexMatrix, ComplexVector, LinalgError};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Tolerance for validating that a set of projectors forms a projective
/// measurement (self-adjoint, idempotent, mutually orthogonal, complete).
pub const PVM_TOL: f64 = 1e-9;

/// Eigenvalues closer than this are treated as one degenerate outcome.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Probabilities below this are treated as exactly impossible: collapsing
/// on such an outcome is an error rather than a division by almost-zero.
pub const IMPOSSIBLE_TOL: f64 = 1e-14;

/// Computed probabilities may undershoot zero by rounding; anything more
/// negative than this indicates corrupted inputs rather than roundoff.
pub const NEGATIVE_PROB_TOL: f64 = -1e-12;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state vector has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("density matrix is invalid: {0}")]
    InvalidDensity(String),
    #[error("outcome '{label}' projector is not a projector within {tol}")]
    NotAProjector { label: String, tol: f64 },
    #[error("projectors for outcomes '{a}' and '{b}' are not orthogonal")]
    NotOrthogonal { a: String, b: String },
    #[error("projectors do not sum to the identity (max deviation {deviation})")]
    Incomplete { deviation: f64 },
    #[error("duplicate outcome label '{0}'")]
    DuplicateLabel(String),
    #[error("observable has no outcome labelled '{0}'")]
    UnknownLabel(String),
    #[error("unknown builtin observable '{0}'")]
    UnknownBuiltin(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("probability {0} is negative beyond roundoff")]
    NegativeProbability(f64),
    #[error("outcome has probability {0}, cannot condition on it")]
    ImpossibleOutcome(f64),
    #[error("observable has no outcome with nonzero probability")]
    NoSampleableOutcome,
}

/// One outcome of a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub eigenvalue: f64,
    pub projector: ComplexMatrix,
}

impl Outcome {
    /// Rank of the projector, i.e. the dimension of the outcome subspace.
    pub fn multiplicity(&self) -> usize {
        self.projector.trace().re.round() as usize
    }
}

/// How an observable was declared, remembered so that serialization can
/// reproduce the declaration byte for byte instead of re-deriving a
/// numerically equivalent matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    Builtin,
    Matrix(ComplexMatrix),
}

/// A projective observable: a named, validated set of outcomes whose
/// projectors partition the identity. Outcomes are stored in ascending
/// eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    name: String,
    dim: usize,
    outcomes: Vec<Outcome>,
    spec: ObservableSpec,
}

/// Canonical label for an eigenvalue: rounded to 9 decimals, printed with
/// an explicit sign, so 1.0 -> "+1" and -0.4999999999 -> "-0.5".
pub fn eigenvalue_label(value: f64) -> String {
    let mut rounded = (value * 1e9).round() / 1e9;
    if rounded == 0.0 {
        rounded = 0.0; // normalize -0.0
    }
    format!("{rounded:+}")
}

impl Observable {
    /// Validate an explicit outcome list as a projective measurement.
    /// Outcomes are sorted by eigenvalue; labels must be pairwise distinct.
    pub fn from_outcomes(
        name: impl Into<String>,
        mut outcomes: Vec<Outcome>,
    ) -> Result<Self, QuantumError> {
        let name = name.into();
        if outcomes.is_empty() {
            return Err(QuantumError::Incomplete { deviation: 1.0 });
        }
        let dim = outcomes[0].projector.dim();
        for o in &outcomes {
            if o.projector.dim() != dim {
                return Err(QuantumError::DimensionMismatch {
                    left: dim,
                    right: o.projector.dim(),
                });
            }
            if !o.projector.is_projector(PVM_TOL) {
                return Err(QuantumError::NotAProjector {
                    label: o.label.clone(),
                    tol: PVM_TOL,
                });
            }
        }
        outcomes.sort_by(|x, y| {
            x.eigenvalue
                .partial_cmp(&y.eigenvalue)
                .expect("eigenvalues are finite")
        });
        for w in outcomes.windows(2) {
            if w[0].label == w[1].label {
                return Err(QuantumError::DuplicateLabel(w[0].label.clone()));
            }
        }
        for i in 0..outcomes.len() {
            for j in (i + 1)..outcomes.len() {
                if outcomes[i].label == outcomes[j].label {
                    return Err(QuantumError::DuplicateLabel(outcomes[i].label.clone()));
                }
                let prod = outcomes[i].projector.matmul(&outcomes[j].projector)?;
                if prod.max_abs() > PVM_TOL {
                    return Err(QuantumError::NotOrthogonal {
                        a: outcomes[i].label.clone(),
                        b: outcomes[j].label.clone(),
                    });
                }
            }
        }
        let mut sum = ComplexMatrix::zeros(dim);
        for o in &outcomes {
            sum = sum.add(&o.projector)?;
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > PVM_TOL {
            return Err(QuantumError::Incomplete { deviation });
        }
        let mut obs = Self {
            name,
            dim,
            outcomes,
            spec: ObservableSpec::Builtin,
        };
        obs.spec = ObservableSpec::Matrix(obs.matrix());
        Ok(obs)
    }

    /// Build an observable from a self-adjoint matrix. Eigenvalues within
    /// [`DEGENERACY_TOL`] of each other are merged into one outcome whose
    /// projector is the sum over the cluster and whose eigenvalue is the
    /// cluster mean. Labels are derived from the eigenvalues.
    pub fn from_matrix(
        name: impl Into<String>,
        matrix: &ComplexMatrix,
    ) -> Result<Self, QuantumError> {
        let pairs = matrix.eigendecompose_self_adjoint(crate::linalg::DEFAULT_TOL)?;
        let mut outcomes: Vec<Outcome> = Vec::new();
        let mut cluster: Vec<(f64, ComplexVector)> = Vec::new();
        let flush = |cluster: &mut Vec<(f64, ComplexVector)>,
                     outcomes: &mut Vec<Outcome>|
         -> Result<(), QuantumError> {
            if cluster.is_empty() {
                return Ok(());
            }
            let mean: f64 = cluster.iter().map(|(l, _)| l).sum::<f64>() / cluster.len() as f64;
            let mut projector = ComplexMatrix::zeros(matrix.dim());
            for (_, v) in cluster.iter() {
                projector = projector.add(&v.outer(v))?;
            }
            outcomes.push(Outcome {
                label: eigenvalue_label(mean),
                eigenvalue: mean,
                projector,
            });
            cluster.clear();
            Ok(())
        };
        for (lambda, vector) in pairs {
            if let Some((last, _)) = cluster.last() {
                if (lambda - last).abs() > DEGENERACY_TOL {
                    flush(&mut cluster, &mut outcomes)?;
                }
            }
            cluster.push((lambda, vector));
        }
        flush(&mut cluster, &mut outcomes)?;
        let mut obs = Self::from_outcomes(name, outcomes)?;
        obs.spec = ObservableSpec::Matrix(matrix.clone());
        Ok(obs)
    }

    /// The four builtin observables available by name in protocol files.
    pub fn builtin(name: &str) -> Result<Self, QuantumError> {
        let rank1 = |label: &str, eigenvalue: f64, v: ComplexVector| Outcome {
            label: label.to_string(),
            eigenvalue,
            projector: v.outer(&v),
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let built = match name {
            "pauli_z" => Self::from_outcomes(
                "pauli_z",
                vec![
                    rank1("-1", -1.0, ComplexVector::basis(2, 1)),
                    rank1("+1", 1.0, ComplexVector::basis(2, 0)),
                ],
            ),
            "pauli_x" => Self::from_outcomes(
                "pauli_x",
                vec![
                    rank1("-1", -1.0, ComplexVector::from_real(&[s, -s])),
                    rank1("+1", 1.0, ComplexVector::from_real(&[s, s])),
                ],
            ),
            "pauli_y" => Self::from_outcomes(
                "pauli_y",
                vec![
                    rank1(
                        "-1",
                        -1.0,
                        ComplexVector::new(vec![
                            Complex64::new(s, 0.0),
                            Complex64::new(0.0, -s),
                        ]),
                    ),
                    rank1(
                        "+1",
                        1.0,
                        ComplexVector::new(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
                    ),
                ],
            ),
            "identity" => Self::from_outcomes(
                "identity",
                vec![Outcome {
                    label: "+1".to_string(),
                    eigenvalue: 1.0,
                    projector: ComplexMatrix::identity(2),
                }],
            ),
            other => Err(QuantumError::UnknownBuiltin(other.to_string())),
        };
        built.map(|mut obs| {
            obs.spec = ObservableSpec::Builtin;
            obs
        })
    }

    pub fn is_builtin_name(name: &str) -> bool {
        matches!(name, "pauli_z" | "pauli_x" | "pauli_y" | "identity")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &ObservableSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    /// True when every outcome subspace is one-dimensional, i.e. the
    /// observable is maximally fine-grained on its space.
    pub fn is_complete(&self) -> bool {
        self.outcomes.iter().all(|o| o.multiplicity() == 1)
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize, QuantumError> {
        self.outcomes
            .iter()
            .position(|o| o.label == label)
            .ok_or_else(|| QuantumError::UnknownLabel(label.to_string()))
    }

    pub fn outcome(&self, label: &str) -> Result<&Outcome, QuantumError> {
        Ok(&self.outcomes[self.outcome_index(label)?])
    }

    pub fn projector(&self, label: &str) -> Result<&ComplexMatrix, QuantumError> {
        Ok(&self.outcome(label)?.projector)
    }

    /// Reassemble the self-adjoint matrix `sum_k lambda_k P_k`.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim);
        for o in &self.outcomes {
            m = m
                .add(&o.projector.scale(Complex64::new(o.eigenvalue, 0.0)))
                .expect("projectors share the observable dimension");
        }
        m
    }

    /// Matrices built from the standard Pauli operators, convenient for
    /// tests and demos.
    pub fn pauli_matrix(name: &str) -> Option<ComplexMatrix> {
        match name {
            "pauli_x" => Some(pauli::sigma_x()),
            "pauli_y" => Some(pauli::sigma_y()),
            "pauli_z" => Some(pauli::sigma_z()),
            "identity" => Some(ComplexMatrix::identity(2)),
            _ => None,
        }
    }
}

/// A quantum state, pure or mixed. The mixed branch exists for reduced
/// states produced by partial traces; every simulation entry point accepts
/// either form.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(ComplexVector),
    Mixed(ComplexMatrix),
}

impl QuantumState {
    pub fn pure(vector: ComplexVector) -> Result<Self, QuantumError> {
        let norm = vector.norm();
        if (norm - 1.0).abs() > PVM_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self::Pure(vector))
    }

    /// Normalize and wrap; rejects near-zero vectors.
    pub fn pure_normalized(vector: &ComplexVector) -> Result<Self, QuantumError> {
        Ok(Self::Pure(vector.normalized()?))
    }

    pub fn mixed(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        if !matrix.is_self_adjoint(PVM_TOL) {
            return Err(QuantumError::InvalidDensity("not self-adjoint".into()));
        }
        if !matrix.is_unit_trace(PVM_TOL) {
            return Err(QuantumError::InvalidDensity(format!(
                "trace is {}, expected 1",
                matrix.trace().re
            )));
        }
        let pairs = matrix.eigendecompose_self_adjoint(crate::linalg::DEFAULT_TOL)?;
        if let Some((lambda, _)) = pairs.first() {
            if *lambda < -PVM_TOL {
                return Err(QuantumError::InvalidDensity(format!(
                    "negative eigenvalue {lambda}"
                )));
            }
        }
        Ok(Self::Mixed(matrix))
    }

    /// Computational basis state |index>.
    pub fn basis(dim: usize, index: usize) -> Self {
        Self::Pure(ComplexVector::basis(dim, index))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.dim(),
            Self::Mixed(m) => m.dim(),
        }
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        match self {
            Self::Pure(v) => v.outer(v),
            Self::Mixed(m) => m.clone(),
        }
    }

    /// Born probability of the outcome subspace described by `projector`.
    /// Negative results beyond roundoff are an error; small undershoot is
    /// clamped to 0, overshoot to 1.
    pub fn probability(&self, projector: &ComplexMatrix) -> Result<f64, QuantumError> {
        let raw = match self {
            Self::Pure(v) => projector.apply(v)?.norm_sqr(),
            Self::Mixed(m) => projector.matmul(m)?.trace().re,
        };
        if raw < NEGATIVE_PROB_TOL {
            return Err(QuantumError::NegativeProbability(raw));
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Project onto an outcome subspace and renormalize. Returns the
    /// collapsed state together with the probability of the outcome.
    /// Conditioning on a (numerically) impossible outcome is an error.
    pub fn collapse(&self, projector: &ComplexMatrix) -> Result<(Self, f64), QuantumError> {
        let prob = self.probability(projector)?;
        if prob <= IMPOSSIBLE_TOL {
            return Err(QuantumError::ImpossibleOutcome(prob));
        }
        let next = match self {
            Self::Pure(v) => {
                let projected = projector.apply(v)?;
                Self::Pure(projected.scale(Complex64::new(1.0 / prob.sqrt(), 0.0)))
            }
            Self::Mixed(m) => {
                let sandwiched = projector.matmul(m)?.matmul(projector)?;
                Self::Mixed(sandwiched.scale(Complex64::new(1.0 / prob, 0.0)))
            }
        };
        Ok((next, prob))
    }

    /// Expectation value `tr(rho A)` of a self-adjoint matrix.
    pub fn expectation(&self, matrix: &ComplexMatrix) -> Result<f64, QuantumError> {
        let value = match self {
            Self::Pure(v) => v.inner(&matrix.apply(v)?)?.re,
            Self::Mixed(m) => matrix.matmul(m)?.trace().re,
        };
        Ok(value)
    }

    /// Outcome distribution of `observable` in stored (ascending) order.
    pub fn outcome_distribution(&self, observable: &Observable) -> Result<Vec<f64>, QuantumError> {
        observable
            .outcomes()
            .iter()
            .map(|o| self.probability(&o.projector))
            .collect()
    }

    /// Sample one measurement of `observable`: draws exactly one uniform
    /// variate, inverts the CDF over outcomes in stored order, collapses.
    /// Returns the chosen outcome index and the post-measurement state.
    pub fn measure_sample<R: Rng + ?Sized>(
        &self,
        observable: &Observable,
        rng: &mut R,
    ) -> Result<(usize, Self), QuantumError> {
        if observable.dim() != self.dim() {
            return Err(QuantumError::DimensionMismatch {
                left: observable.dim(),
                right: self.dim(),
            });
        }
        let probs = self.outcome_distribution(observable)?;
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (k, p) in probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                chosen = Some(k);
                break;
            }
        }
        // The cumulative sum can undershoot 1 by roundoff; fall back to the
        // last outcome that is actually possible.
        let k = match chosen {
            Some(k) if probs[k] > IMPOSSIBLE_TOL => k,
            _ => probs
                .iter()
                .rposition(|&p| p > IMPOSSIBLE_TOL)
                .ok_or(QuantumError::NoSampleableOutcome)?,
        };
        let (collapsed, _) = self.collapse(&observable.outcomes()[k].projector)?;
        Ok((k, collapsed))
    }
}
