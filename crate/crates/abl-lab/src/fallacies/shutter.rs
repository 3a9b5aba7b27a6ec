//! Shutter selection: a screen has several holes and a shutter covers a
//! random one each trial; a stone is thrown at a random hole, and a clang
//! is recorded when it hits the shutter. Among trials selected on the
//! clang, the stone was blocked every single time, although the
//! unselected blocked fraction is only one over the number of holes.

use super::{FallacyError, FallacyReport, FallacyScenario};
use crate::rng::trial_rng;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShutterParams {
    pub n_holes: u32,
    /// Probability of recording the clang when the stone hits the shutter.
    pub clang_prob_if_blocked: f64,
    pub n_trials: u64,
}

impl Default for ShutterParams {
    fn default() -> Self {
        // The hole count is not pinned by the story; ten keeps the
        // selected and unselected fractions visibly far apart.
        Self {
            n_holes: 10,
            clang_prob_if_blocked: 1.0,
            n_trials: 10_000,
        }
    }
}

impl ShutterParams {
    fn validate(&self) -> Result<(), FallacyError> {
        if self.n_holes == 0 {
            return Err(FallacyError::BadParameter(
                "n_holes must be at least 1".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.clang_prob_if_blocked)
            || !self.clang_prob_if_blocked.is_finite()
        {
            return Err(FallacyError::BadProbability {
                name: "clang_prob_if_blocked",
                value: self.clang_prob_if_blocked,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShutterOutcome {
    pub n_trials: u64,
    pub n_blocked: u64,
    pub n_clangs: u64,
    /// Always 1 when defined: the clang implies the stone was blocked.
    pub blocked_fraction_in_selected: Option<f64>,
    pub unselected_blocked_fraction: f64,
    pub exact_unselected_blocked_fraction: f64,
}

/// Throw stones at uniformly random holes with a uniformly random hole
/// shuttered, and condition on hearing the clang.
pub fn shutter_mc(params: &ShutterParams, seed: u64) -> Result<ShutterOutcome, FallacyError> {
    params.validate()?;
    let results: Vec<(bool, bool)> = (0..params.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let covered = rng.gen_range(0..params.n_holes);
            let aim = rng.gen_range(0..params.n_holes);
            let blocked = aim == covered;
            let clang = blocked && rng.gen::<f64>() < params.clang_prob_if_blocked;
            (blocked, clang)
        })
        .collect();
    let mut n_blocked = 0u64;
    let mut n_clangs = 0u64;
    let mut blocked_and_clang = 0u64;
    for (blocked, clang) in results {
        n_blocked += u64::from(blocked);
        n_clangs += u64::from(clang);
        blocked_and_clang += u64::from(blocked && clang);
    }
    Ok(ShutterOutcome {
        n_trials: params.n_trials,
        n_blocked,
        n_clangs,
        blocked_fraction_in_selected: (n_clangs > 0)
            .then(|| blocked_and_clang as f64 / n_clangs as f64),
        unselected_blocked_fraction: n_blocked as f64 / params.n_trials as f64,
        exact_unselected_blocked_fraction: 1.0 / f64::from(params.n_holes),
    })
}

pub(super) struct ShutterScenario;

impl FallacyScenario for ShutterScenario {
    fn name(&self) -> &'static str {
        "shutter"
    }

    fn summary(&self) -> &'static str {
        "conditioning on the clang makes every selected stone a blocked stone"
    }

    fn default_trials(&self) -> u64 {
        ShutterParams::default().n_trials
    }

    fn run(&self, n_trials: u64, seed: u64) -> Result<FallacyReport, FallacyError> {
        let params = ShutterParams {
            n_trials,
            ..ShutterParams::default()
        };
        let outcome = shutter_mc(&params, seed)?;
        Ok(FallacyReport::new(self.name(), n_trials, seed)
            .count("n_blocked", outcome.n_blocked)
            .count("n_clangs", outcome.n_clangs)
            .quantity(
                "blocked_fraction_in_selected",
                outcome.blocked_fraction_in_selected,
                Some(1.0),
            )
            .quantity(
                "blocked_fraction_unselected",
                Some(outcome.unselected_blocked_fraction),
                Some(outcome.exact_unselected_blocked_fraction),
            )
            .note("the clang is recorded only for blocked stones, so selection forces the blocked fraction to 1")
            .note("hole placement and aim are uniform; the story fixes neither, and the hole count is a modeling choice"))
    }
}
