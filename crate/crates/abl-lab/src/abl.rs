//! Closed-form probability calculus for pre- and post-selected measurement
//! protocols.
//!
//! For a protocol with pre-selection outcome `a`, intermediate outcome
//! sequence `c = (c_1, ..., c_n)`, and post-selection outcome `b`, the
//! central quantities are traces of sandwiched projector chains:
//!
//! * sequence weight `T(c) = tr(P_b P_cn ... P_c1 P_a P_c1 ... P_cn)`;
//! * the conditional probability of `c` given both boundary outcomes,
//!   `T(c) / sum_c' T(c')`, which does not involve the initial state at
//!   all;
//! * forward Born-chain probabilities that do involve the initial state:
//!   `joint(c) = tr(P_b P_cn ... P_c1 P_a rho P_a P_c1 ... P_cn)` and
//!   `overall = sum_c joint(c)`, whose quotient reproduces the same
//!   conditional probability whenever the initial state overlaps the
//!   pre-selection outcome.

use crate::linalg::ComplexMatrix;
use crate::protocol::{OutcomeSequence, Protocol, ProtocolError};
use crate::quantum::{Observable, QuantumError, QuantumState};
use thiserror::Error;

/// Post-selection weights at or below this threshold count as impossible:
/// conditioning on them is an error, not a division.
pub const IMPOSSIBLE_TOL: f64 = 1e-14;

/// Slack allowed when checking the uncertainty product against its bound.
pub const ROBERTSON_SLACK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AblError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(
        "impossible post-selection: the combined weight of all outcome sequences is {weight:.3e}"
    )]
    ImpossiblePostSelection { weight: f64 },
    #[error("initial state has probability {probability:.3e} of passing pre-selection")]
    ImpossiblePreSelection { probability: f64 },
}

/// `tr(P_b P_cn ... P_c1 core P_c1 ... P_cn)`, the common spine of every
/// probability here. `core` is `P_a` for boundary-conditioned weights and
/// `P_a rho P_a` for forward Born chains.
fn chain_trace(p: &Protocol, seq: &OutcomeSequence, core: &ComplexMatrix) -> f64 {
    let mut m = core.clone();
    for (k, &i) in seq.indices().iter().enumerate() {
        let projector = &p.intermediate(k).outcomes()[i].projector;
        m = projector
            .matmul(&m)
            .and_then(|pm| pm.matmul(projector))
            .expect("projectors share the protocol dimension");
    }
    let value = p
        .post_projector()
        .matmul(&m)
        .expect("projectors share the protocol dimension")
        .trace()
        .re;
    debug_assert!(value > -1e-12, "chain trace {value} is negative beyond roundoff");
    value.max(0.0)
}

/// Weight `T(c)` of one outcome sequence between the two boundary
/// outcomes. Not itself a probability; see [`abl_probability`].
pub fn sequence_weight(p: &Protocol, seq: &OutcomeSequence) -> Result<f64, AblError> {
    p.validate_sequence(seq)?;
    Ok(chain_trace(p, seq, p.pre_projector()))
}

/// Total weight `sum_c T(c)` of all sequences; zero (within tolerance)
/// means the post-selection outcome is unreachable from the pre-selection
/// outcome through the given intermediates.
pub fn post_selection_weight(p: &Protocol) -> f64 {
    p.sequences()
        .iter()
        .map(|seq| chain_trace(p, seq, p.pre_projector()))
        .sum()
}

/// Conditional probability of `seq` given that pre-selection yielded `a`
/// and post-selection yielded `b`: `T(seq) / sum_c T(c)`.
pub fn abl_probability(p: &Protocol, seq: &OutcomeSequence) -> Result<f64, AblError> {
    p.validate_sequence(seq)?;
    let weight = chain_trace(p, seq, p.pre_projector());
    let total = post_selection_weight(p);
    if total <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePostSelection { weight: total });
    }
    Ok((weight / total).clamp(0.0, 1.0))
}

/// The full conditional distribution over sequences, in enumeration order.
pub fn abl_distribution(p: &Protocol) -> Result<Vec<(OutcomeSequence, f64)>, AblError> {
    let sequences = p.sequences();
    let weights: Vec<f64> = sequences
        .iter()
        .map(|seq| chain_trace(p, seq, p.pre_projector()))
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePostSelection { weight: total });
    }
    Ok(sequences
        .into_iter()
        .zip(weights)
        .map(|(seq, w)| (seq, (w / total).clamp(0.0, 1.0)))
        .collect())
}

fn forward_core(p: &Protocol) -> ComplexMatrix {
    let rho = p.initial_state().density_matrix();
    let pa = p.pre_projector();
    pa.matmul(&rho)
        .and_then(|m| m.matmul(pa))
        .expect("state and projectors share the protocol dimension")
}

/// Probability that the initial state passes pre-selection: `tr(P_a rho)`.
pub fn preselection_probability(p: &Protocol) -> f64 {
    p.initial_state()
        .probability(p.pre_projector())
        .expect("projector validated at construction")
}

/// Probability that a trial starting from the initial state yields the
/// pre-selection outcome, any intermediate sequence, and the
/// post-selection outcome.
pub fn overall_probability(p: &Protocol) -> f64 {
    let core = forward_core(p);
    p.sequences()
        .iter()
        .map(|seq| chain_trace(p, seq, &core))
        .sum()
}

/// Probability of the full record `(a, seq, b)` from the initial state.
pub fn joint_probability(p: &Protocol, seq: &OutcomeSequence) -> Result<f64, AblError> {
    p.validate_sequence(seq)?;
    Ok(chain_trace(p, seq, &forward_core(p)))
}

/// Conditional probability of `seq` given both boundary outcomes, computed
/// the Bayesian way as `joint / overall` from the initial state. Agrees
/// with [`abl_probability`] whenever the initial state overlaps the
/// pre-selection outcome.
pub fn conditional_probability(p: &Protocol, seq: &OutcomeSequence) -> Result<f64, AblError> {
    p.validate_sequence(seq)?;
    let joint = chain_trace(p, seq, &forward_core(p));
    let overall = overall_probability(p);
    if overall <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePostSelection { weight: overall });
    }
    Ok((joint / overall).clamp(0.0, 1.0))
}

/// Full conditional distribution via the forward Born chain.
pub fn conditional_distribution(p: &Protocol) -> Result<Vec<(OutcomeSequence, f64)>, AblError> {
    let core = forward_core(p);
    let sequences = p.sequences();
    let joints: Vec<f64> = sequences
        .iter()
        .map(|seq| chain_trace(p, seq, &core))
        .collect();
    let overall: f64 = joints.iter().sum();
    if overall <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePostSelection { weight: overall });
    }
    Ok(sequences
        .into_iter()
        .zip(joints)
        .map(|(seq, j)| (seq, (j / overall).clamp(0.0, 1.0)))
        .collect())
}

/// Probability of recording `(seq, b)` among trials that passed
/// pre-selection, with no post-selection culling: `joint / tr(P_a rho)`.
/// This is the control quantity for post-selection demonstrations.
pub fn unselected_probability(p: &Protocol, seq: &OutcomeSequence) -> Result<f64, AblError> {
    p.validate_sequence(seq)?;
    let pre = preselection_probability(p);
    if pre <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePreSelection { probability: pre });
    }
    let joint = chain_trace(p, seq, &forward_core(p));
    Ok((joint / pre).clamp(0.0, 1.0))
}

/// Distribution of `(seq, b)` records among pre-selected trials.
pub fn unselected_distribution(p: &Protocol) -> Result<Vec<(OutcomeSequence, f64)>, AblError> {
    let pre = preselection_probability(p);
    if pre <= IMPOSSIBLE_TOL {
        return Err(AblError::ImpossiblePreSelection { probability: pre });
    }
    let core = forward_core(p);
    Ok(p.sequences()
        .into_iter()
        .map(|seq| {
            let j = chain_trace(p, &seq, &core);
            (seq, (j / pre).clamp(0.0, 1.0))
        })
        .collect())
}

/// One row of an AAD comparison branch: a single intermediate outcome with
/// its conditional probability under post-selection and the corresponding
/// no-post-selection control `p(mid, b | pre)`.
#[derive(Debug, Clone)]
pub struct AadRow {
    pub mid_label: String,
    /// Marks the outcome the branch's claim is about (the repeated
    /// pre-selection outcome in the second branch, the post-selection
    /// outcome in the third). The first branch has no designated outcome.
    pub designated: bool,
    /// None when post-selection is impossible for this branch.
    pub selected: Option<f64>,
    pub unselected: f64,
}

/// One of the three protocols in an AAD comparison. Each is a physically
/// distinct ensemble; the report keeps them separate on purpose.
#[derive(Debug, Clone)]
pub struct AadBranch {
    /// Rendered as "(A, C, B)" with the actual observable names.
    pub ensemble: String,
    pub mid_observable: String,
    pub impossible_post_selection: bool,
    pub rows: Vec<AadRow>,
}

impl AadBranch {
    pub fn designated_row(&self) -> Option<&AadRow> {
        self.rows.iter().find(|r| r.designated)
    }
}

#[derive(Debug, Clone)]
pub struct AadReport {
    pub pre_label: String,
    pub post_label: String,
    /// Branch order: (A, C, B), (A, A, B), (A, B, B).
    pub branches: Vec<AadBranch>,
    /// Always true: the three branches are three separate ensembles and
    /// must not be compared row-against-row.
    pub distinct_ensembles: bool,
}

fn aad_branch(
    observables: &[Observable],
    pre: (&str, &str),
    mid: &str,
    post: (&str, &str),
    designated: Option<&str>,
) -> Result<AadBranch, AblError> {
    let unique: Vec<Observable> = {
        let mut out: Vec<Observable> = Vec::new();
        for o in observables {
            if !out.iter().any(|u| u.name() == o.name()) {
                out.push(o.clone());
            }
        }
        out
    };
    let p = Protocol::new(unique, pre, &[mid], post)?;
    let ensemble = format!("({}, {}, {})", pre.0, mid, post.0);
    let selected = match abl_distribution(&p) {
        Ok(dist) => Some(dist),
        Err(AblError::ImpossiblePostSelection { .. }) => None,
        Err(e) => return Err(e),
    };
    let unselected = unselected_distribution(&p)?;
    let mid_obs = p.intermediate(0);
    let rows = mid_obs
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, o)| AadRow {
            mid_label: o.label.clone(),
            designated: designated == Some(o.label.as_str()),
            selected: selected.as_ref().map(|d| d[i].1),
            unselected: unselected[i].1,
        })
        .collect();
    Ok(AadBranch {
        ensemble,
        mid_observable: mid.to_string(),
        impossible_post_selection: selected.is_none(),
        rows,
    })
}

/// Compare the three distinct single-intermediate ensembles `(A, C, B)`,
/// `(A, A, B)`, and `(A, B, B)` for boundary outcomes `a` and `b`. The
/// repeated-observable branches designate the outcomes forced by repeated
/// measurement (`a` and `b` respectively); their conditional probability
/// is 1 whenever the branch's post-selection is possible at all. Branches
/// whose post-selection is impossible are reported as such, not fatal.
pub fn aad_compare(
    a_obs: &Observable,
    c_obs: &Observable,
    b_obs: &Observable,
    a_label: &str,
    b_label: &str,
) -> Result<AadReport, AblError> {
    let all = [a_obs.clone(), c_obs.clone(), b_obs.clone()];
    for pair in [(a_obs, c_obs), (a_obs, b_obs), (c_obs, b_obs)] {
        if pair.0.name() == pair.1.name() && pair.0 != pair.1 {
            return Err(AblError::Protocol(ProtocolError::DuplicateObservable(
                pair.0.name().to_string(),
            )));
        }
    }
    let pre = (a_obs.name(), a_label);
    let post = (b_obs.name(), b_label);
    let branches = vec![
        aad_branch(&all, pre, c_obs.name(), post, None)?,
        aad_branch(&all, pre, a_obs.name(), post, Some(a_label))?,
        aad_branch(&all, pre, b_obs.name(), post, Some(b_label))?,
    ];
    Ok(AadReport {
        pre_label: a_label.to_string(),
        post_label: b_label.to_string(),
        branches,
        distinct_ensembles: true,
    })
}

/// Result of checking the uncertainty product of two observables in a
/// state against the commutator bound.
#[derive(Debug, Clone)]
pub struct RobertsonReport {
    pub delta_first: f64,
    pub delta_second: f64,
    pub product: f64,
    pub bound: f64,
    /// product - bound; negative values within tolerance still satisfy.
    pub slack: f64,
    pub satisfied: bool,
}

fn observable_spread(obs: &Observable, state: &QuantumState) -> Result<f64, QuantumError> {
    let probs = state.outcome_distribution(obs)?;
    let mean: f64 = obs
        .outcomes()
        .iter()
        .zip(&probs)
        .map(|(o, p)| o.eigenvalue * p)
        .sum();
    let second: f64 = obs
        .outcomes()
        .iter()
        .zip(&probs)
        .map(|(o, p)| o.eigenvalue * o.eigenvalue * p)
        .sum();
    Ok((second - mean * mean).max(0.0).sqrt())
}

/// Check `Delta(C) * Delta(D) >= |tr((CD - DC) rho)| / 2` for the given
/// pair and state.
pub fn robertson_check(
    first: &Observable,
    second: &Observable,
    state: &QuantumState,
) -> Result<RobertsonReport, QuantumError> {
    if first.dim() != second.dim() || first.dim() != state.dim() {
        return Err(QuantumError::DimensionMismatch {
            left: first.dim(),
            right: second.dim().max(state.dim()),
        });
    }
    let delta_first = observable_spread(first, state)?;
    let delta_second = observable_spread(second, state)?;
    let c = first.matrix();
    let d = second.matrix();
    let commutator = c.matmul(&d)?.sub(&d.matmul(&c)?)?;
    let rho = state.density_matrix();
    let bound = 0.5 * commutator.matmul(&rho)?.trace().norm();
    let product = delta_first * delta_second;
    Ok(RobertsonReport {
        delta_first,
        delta_second,
        product,
        bound,
        slack: product - bound,
        satisfied: product >= bound - ROBERTSON_SLACK_TOL,
    })
}
