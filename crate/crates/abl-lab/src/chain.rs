//! Brute-force oracle: model the measurement devices and the observer as
//! explicit quantum systems and read conditional probabilities off the
//! entangled end state.
//!
//! The total space is subject (x) device (x) observer. The device carries
//! one orthonormal pointer vector per *prefix* of intermediate outcomes
//! (including the empty "ready" prefix), so each measurement step is a
//! distinct, checkable evolution. The observer carries pointers for
//! "nothing recorded", "recorded a", and "recorded (a, b)". Every
//! probability statement is then an ordinary Born-rule statement on the
//! total space.
//!
//! This module deliberately re-derives everything from raw linear algebra
//! and never calls into the closed-form engine; agreement between the two
//! is a meaningful cross-check only while they stay independent.

use crate::linalg::{ComplexMatrix, ComplexVector, LinalgError};
use crate::protocol::{Protocol, ProtocolError};
use crate::quantum::{QuantumError, QuantumState};
use num_complex::Complex64;
use thiserror::Error;

/// Cap on subject*device*observer dimension for state-vector evolution.
pub const MAX_TOTAL_DIM: usize = 10_000;

/// Cap for the density-matrix reduction path, which materializes a
/// total_dim^2 operator.
pub const MAX_DENSITY_DIM: usize = 1_500;

/// The reduced device matrix must be rank one: its second-largest
/// eigenvalue may not exceed this fraction of the trace.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("total chain dimension {dim} exceeds the limit of {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("conditioning on observer record with probability {0:.3e}")]
    ImpossibleConditioning(f64),
    #[error(
        "reduced device matrix is not rank one: second eigenvalue fraction {0:.3e}"
    )]
    NotRankOne(f64),
}

/// Structural layout of the subject(x)device(x)observer space for one
/// protocol.
#[derive(Debug, Clone)]
pub struct ChainModel {
    protocol: Protocol,
    subject_dim: usize,
    device_dim: usize,
    observer_dim: usize,
    /// First device index of each prefix length, 0..=n.
    prefix_base: Vec<usize>,
    /// Number of prefixes of each length.
    prefix_count: Vec<usize>,
    /// Outcome counts of the intermediates.
    mid_sizes: Vec<usize>,
    n_pre: usize,
    n_post: usize,
}

impl ChainModel {
    pub fn new(protocol: &Protocol) -> Result<Self, ChainError> {
        let n = protocol.n_intermediates();
        let mid_sizes: Vec<usize> = (0..n).map(|k| protocol.intermediate(k).n_outcomes()).collect();
        let mut prefix_base = Vec::with_capacity(n + 1);
        let mut prefix_count = Vec::with_capacity(n + 1);
        prefix_base.push(0);
        prefix_count.push(1);
        for k in 0..n {
            let base = prefix_base[k] + prefix_count[k];
            let count = prefix_count[k] * mid_sizes[k];
            prefix_base.push(base);
            prefix_count.push(count);
        }
        let device_dim = prefix_base[n] + prefix_count[n];
        let n_pre = protocol.pre_observable().n_outcomes();
        let n_post = protocol.post_observable().n_outcomes();
        let observer_dim = 1 + n_pre + n_pre * n_post;
        let subject_dim = protocol.dim();
        let total = subject_dim * device_dim * observer_dim;
        if total > MAX_TOTAL_DIM {
            return Err(ChainError::TooLarge {
                dim: total,
                limit: MAX_TOTAL_DIM,
            });
        }
        Ok(Self {
            protocol: protocol.clone(),
            subject_dim,
            device_dim,
            observer_dim,
            prefix_base,
            prefix_count,
            mid_sizes,
            n_pre,
            n_post,
        })
    }

    pub fn subject_dim(&self) -> usize {
        self.subject_dim
    }

    pub fn device_dim(&self) -> usize {
        self.device_dim
    }

    pub fn observer_dim(&self) -> usize {
        self.observer_dim
    }

    pub fn total_dim(&self) -> usize {
        self.subject_dim * self.device_dim * self.observer_dim
    }

    /// Device pointer index of an outcome prefix (empty slice = ready).
    pub fn device_index(&self, prefix: &[usize]) -> usize {
        let k = prefix.len();
        let mut rank = 0usize;
        for (j, &i) in prefix.iter().enumerate() {
            rank = rank * self.mid_sizes[j] + i;
        }
        self.prefix_base[k] + rank
    }

    pub fn observer_ready_index(&self) -> usize {
        0
    }

    pub fn observer_pre_index(&self, a: usize) -> usize {
        1 + a
    }

    pub fn observer_full_index(&self, a: usize, b: usize) -> usize {
        1 + self.n_pre + a * self.n_post + b
    }

    /// Device and observer pointer vectors as explicit unit vectors; their
    /// Gram matrix is the identity by construction, which this checks.
    pub fn pointer_bases_orthonormal(&self, tol: f64) -> bool {
        for dim in [self.device_dim, self.observer_dim] {
            let vectors: Vec<ComplexVector> =
                (0..dim).map(|i| ComplexVector::basis(dim, i)).collect();
            for i in 0..dim {
                for j in 0..dim {
                    let g = vectors[i].inner(&vectors[j]).expect("same dimension");
                    let expect = if i == j { 1.0 } else { 0.0 };
                    if (g - Complex64::new(expect, 0.0)).norm() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[inline]
    fn flat(&self, s: usize, dev: usize, obs: usize) -> usize {
        (s * self.device_dim + dev) * self.observer_dim + obs
    }

    fn read_subject_block(&self, v: &ComplexVector, dev: usize, obs: usize) -> ComplexVector {
        ComplexVector::new(
            (0..self.subject_dim)
                .map(|s| v.get(self.flat(s, dev, obs)))
                .collect(),
        )
    }

    fn write_subject_block(
        &self,
        v: &mut ComplexVector,
        dev: usize,
        obs: usize,
        block: &ComplexVector,
    ) {
        for s in 0..self.subject_dim {
            v.set(self.flat(s, dev, obs), block.get(s));
        }
    }

    /// `psi (x) |dev ready> (x) |obs ready>`.
    pub fn initial_vector(&self, psi: &ComplexVector) -> ComplexVector {
        let mut v = ComplexVector::zeros(self.total_dim());
        self.write_subject_block(&mut v, self.device_index(&[]), self.observer_ready_index(), psi);
        v
    }

    /// The pre-measurement: the observer records each outcome `a` in a
    /// separate branch while the device stays ready.
    pub fn step_pre(&self, v: &ComplexVector) -> ComplexVector {
        let mut next = ComplexVector::zeros(self.total_dim());
        let dev = self.device_index(&[]);
        let psi = self.read_subject_block(v, dev, self.observer_ready_index());
        for (a, outcome) in self.protocol.pre_observable().outcomes().iter().enumerate() {
            let projected = outcome.projector.apply(&psi).expect("dims match");
            self.write_subject_block(&mut next, dev, self.observer_pre_index(a), &projected);
        }
        next
    }

    /// Measurement of intermediate `k` (0-based): every length-`k` prefix
    /// branch fans out into `|C_k|` branches with extended prefixes.
    pub fn step_intermediate(&self, v: &ComplexVector, k: usize) -> ComplexVector {
        let mut next = ComplexVector::zeros(self.total_dim());
        let observable = self.protocol.intermediate(k);
        for src_rank in 0..self.prefix_count[k] {
            let src_dev = self.prefix_base[k] + src_rank;
            for a in 0..self.n_pre {
                let obs = self.observer_pre_index(a);
                let psi = self.read_subject_block(v, src_dev, obs);
                for (c, outcome) in observable.outcomes().iter().enumerate() {
                    let dst_rank = src_rank * self.mid_sizes[k] + c;
                    let dst_dev = self.prefix_base[k + 1] + dst_rank;
                    let projected = outcome.projector.apply(&psi).expect("dims match");
                    self.write_subject_block(&mut next, dst_dev, obs, &projected);
                }
            }
        }
        next
    }

    /// The post-measurement: the observer upgrades each `a` record to an
    /// `(a, b)` record.
    pub fn step_post(&self, v: &ComplexVector) -> ComplexVector {
        let n = self.protocol.n_intermediates();
        let mut next = ComplexVector::zeros(self.total_dim());
        for rank in 0..self.prefix_count[n] {
            let dev = self.prefix_base[n] + rank;
            for a in 0..self.n_pre {
                let psi = self.read_subject_block(v, dev, self.observer_pre_index(a));
                for (b, outcome) in self.protocol.post_observable().outcomes().iter().enumerate() {
                    let projected = outcome.projector.apply(&psi).expect("dims match");
                    self.write_subject_block(
                        &mut next,
                        dev,
                        self.observer_full_index(a, b),
                        &projected,
                    );
                }
            }
        }
        next
    }

    /// Full evolution of one pure subject state, returning every snapshot:
    /// initial, after the pre-measurement, after each intermediate, final.
    pub fn evolve_trajectory(&self, psi: &ComplexVector) -> Vec<ComplexVector> {
        let mut snapshots = vec![self.initial_vector(psi)];
        snapshots.push(self.step_pre(snapshots.last().unwrap()));
        for k in 0..self.protocol.n_intermediates() {
            snapshots.push(self.step_intermediate(snapshots.last().unwrap(), k));
        }
        snapshots.push(self.step_post(snapshots.last().unwrap()));
        snapshots
    }

    /// Final total states for the protocol's initial state. A pure initial
    /// state yields one branch of weight 1; a mixed one yields one branch
    /// per spectral component.
    pub fn evolve(&self) -> Result<Vec<(f64, ComplexVector)>, ChainError> {
        match self.protocol.initial_state() {
            QuantumState::Pure(psi) => {
                let v = self.evolve_trajectory(&psi).pop().expect("nonempty");
                Ok(vec![(1.0, v)])
            }
            QuantumState::Mixed(rho) => {
                let pairs = rho.eigendecompose_self_adjoint(crate::linalg::DEFAULT_TOL)?;
                let mut branches = Vec::new();
                for (weight, vector) in pairs {
                    if weight > 1e-12 {
                        let v = self.evolve_trajectory(&vector).pop().expect("nonempty");
                        branches.push((weight, v));
                    }
                }
                Ok(branches)
            }
        }
    }

    /// Born probability that the observer ends holding the record `(a, b)`.
    pub fn observer_record_probability(&self, a: usize, b: usize) -> Result<f64, ChainError> {
        let obs = self.observer_full_index(a, b);
        let mut total = 0.0;
        for (weight, v) in self.evolve()? {
            let mut norm2 = 0.0;
            for s in 0..self.subject_dim {
                for dev in 0..self.device_dim {
                    norm2 += v.get(self.flat(s, dev, obs)).norm_sqr();
                }
            }
            total += weight * norm2;
        }
        Ok(total)
    }

    /// Reduced device state after conditioning on the observer record
    /// `(a, b)`: project the final total density matrix onto the record,
    /// normalize, partial-trace down to the device factor, check the
    /// result is rank one, and return its principal vector.
    pub fn device_state_given_obs(&self, a: usize, b: usize) -> Result<ComplexVector, ChainError> {
        let total = self.total_dim();
        if total > MAX_DENSITY_DIM {
            return Err(ChainError::TooLarge {
                dim: total,
                limit: MAX_DENSITY_DIM,
            });
        }
        let obs = self.observer_full_index(a, b);

        // Projected total density matrix sum_i w_i P |phi_i><phi_i| P with
        // P = 1 (x) 1 (x) |obs><obs|.
        let mut projected = ComplexMatrix::zeros(total);
        let mut probability = 0.0;
        for (weight, v) in self.evolve()? {
            let mut component = ComplexVector::zeros(total);
            for s in 0..self.subject_dim {
                for dev in 0..self.device_dim {
                    let idx = self.flat(s, dev, obs);
                    component.set(idx, v.get(idx));
                }
            }
            probability += weight * component.norm_sqr();
            projected = projected
                .add(&component.outer(&component).scale(Complex64::new(weight, 0.0)))
                .expect("same dimension");
        }
        if probability <= 1e-14 {
            return Err(ChainError::ImpossibleConditioning(probability));
        }
        let normalized = projected.scale(Complex64::new(1.0 / probability, 0.0));
        let reduced = normalized.partial_trace(
            &[self.subject_dim, self.device_dim, self.observer_dim],
            &[1],
        )?;

        let pairs = reduced.eigendecompose_self_adjoint(crate::linalg::DEFAULT_TOL)?;
        let largest = pairs.last().expect("device space is nonempty");
        let second = if pairs.len() >= 2 {
            pairs[pairs.len() - 2].0
        } else {
            0.0
        };
        if second.abs() > PURITY_TOL * largest.0.max(1e-300) {
            return Err(ChainError::NotRankOne(second / largest.0));
        }
        Ok(largest.1.clone())
    }

    /// Conditional probabilities of the full-length outcome sequences given
    /// the observer record `(a, b)`: squared pointer amplitudes of the
    /// collapsed device state, in the protocol's sequence enumeration
    /// order.
    pub fn conditional_sequence_probabilities(
        &self,
        a: usize,
        b: usize,
    ) -> Result<Vec<f64>, ChainError> {
        let device = self.device_state_given_obs(a, b)?;
        let n = self.protocol.n_intermediates();
        Ok((0..self.prefix_count[n])
            .map(|rank| device.get(self.prefix_base[n] + rank).norm_sqr())
            .collect())
    }

    /// Convenience: condition on the protocol's own boundary outcomes.
    pub fn conditional_for_protocol_boundaries(&self) -> Result<Vec<f64>, ChainError> {
        self.conditional_sequence_probabilities(
            self.protocol.pre_outcome_index(),
            self.protocol.post_outcome_index(),
        )
    }
}
