//! Coin darkening: each coin is flipped a fixed number of times and
//! darkens by a fixed amount per tails. Keeping only coins that end up
//! dark enough under-samples heads-heavy runs, so heads look rarer than
//! one half among the kept flips even though every coin is fair.

use super::{FallacyError, FallacyReport, FallacyScenario};
use crate::rng::trial_rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinParams {
    pub n_flips: u32,
    /// Darkness added by each tails outcome.
    pub darken_per_tail: f64,
    /// Keep a coin when its final darkness reaches this value.
    pub darkness_threshold: f64,
    pub n_trials: u64,
}

impl Default for CoinParams {
    fn default() -> Self {
        Self {
            n_flips: 100,
            darken_per_tail: 0.01,
            darkness_threshold: 0.70,
            // The default cut keeps about 4 coins per 100,000, so the
            // default ensemble is larger than usual.
            n_trials: 1_000_000,
        }
    }
}

impl CoinParams {
    fn validate(&self) -> Result<(), FallacyError> {
        if !(0.0..=1.0).contains(&self.darken_per_tail) || !self.darken_per_tail.is_finite() {
            return Err(FallacyError::BadProbability {
                name: "darken_per_tail",
                value: self.darken_per_tail,
            });
        }
        if self.darkness_threshold < 0.0 || !self.darkness_threshold.is_finite() {
            return Err(FallacyError::BadParameter(format!(
                "darkness_threshold must be nonnegative, got {}",
                self.darkness_threshold
            )));
        }
        if self.n_flips == 0 {
            return Err(FallacyError::BadParameter(
                "n_flips must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Smallest tails count whose darkness reaches the threshold, with a
    /// roundoff guard so thresholds like 0.70 sit on the intended grid
    /// point. `None` when no tails count reaches it (impossible cut).
    pub fn min_tails_to_select(&self) -> Option<u32> {
        (0..=self.n_flips).find(|&t| f64::from(t) * self.darken_per_tail >= self.darkness_threshold - 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinOutcome {
    pub n_trials: u64,
    pub n_selected: u64,
    pub selected_fraction: f64,
    /// Heads frequency over all flips of the kept coins; `None` when no
    /// coin was kept.
    pub heads_frequency_in_selected: Option<f64>,
    pub exact_selected_fraction: f64,
    pub exact_heads_frequency: Option<f64>,
    pub min_tails_to_select: Option<u32>,
}

/// Closed-form selection probability and heads frequency for a fair coin:
/// binomial tail sums over tails counts at or above the cut.
fn exact_values(params: &CoinParams) -> (f64, Option<f64>) {
    let n = params.n_flips;
    let Some(t_min) = params.min_tails_to_select() else {
        return (0.0, None);
    };
    // p_t = C(n, t) / 2^n by the multiplicative recurrence.
    let mut p_t = 0.5f64.powi(n as i32);
    let mut selected = 0.0;
    let mut heads_weight = 0.0;
    for t in 0..=n {
        if t >= t_min {
            selected += p_t;
            heads_weight += p_t * f64::from(n - t);
        }
        if t < n {
            p_t *= f64::from(n - t) / f64::from(t + 1);
        }
    }
    if selected <= 0.0 {
        return (0.0, None);
    }
    // The recurrence can overshoot 1 by accumulated roundoff.
    let selected = selected.min(1.0);
    (selected, Some(heads_weight / (f64::from(n) * selected)))
}

/// Flip `n_trials` fair coins on per-trial substreams, keep the dark
/// ones, and report the heads frequency among the kept flips next to the
/// closed-form values.
pub fn coin_darkening_mc(params: &CoinParams, seed: u64) -> Result<CoinOutcome, FallacyError> {
    params.validate()?;
    let t_min = params.min_tails_to_select();
    let binomial = Binomial::new(u64::from(params.n_flips), 0.5)
        .expect("0.5 is a valid success probability");
    let tails_counts: Vec<u64> = (0..params.n_trials)
        .into_par_iter()
        .map(|i| binomial.sample(&mut trial_rng(seed, i)))
        .collect();
    let mut n_selected = 0u64;
    let mut heads_in_selected = 0u64;
    if let Some(t_min) = t_min {
        for tails in tails_counts {
            if tails >= u64::from(t_min) {
                n_selected += 1;
                heads_in_selected += u64::from(params.n_flips) - tails;
            }
        }
    }
    let (exact_selected_fraction, exact_heads_frequency) = exact_values(params);
    Ok(CoinOutcome {
        n_trials: params.n_trials,
        n_selected,
        selected_fraction: n_selected as f64 / params.n_trials as f64,
        heads_frequency_in_selected: (n_selected > 0).then(|| {
            heads_in_selected as f64 / (n_selected as f64 * f64::from(params.n_flips))
        }),
        exact_selected_fraction,
        exact_heads_frequency,
        min_tails_to_select: t_min,
    })
}

pub(super) struct CoinScenario;

impl FallacyScenario for CoinScenario {
    fn name(&self) -> &'static str {
        "coins"
    }

    fn summary(&self) -> &'static str {
        "fair coins kept for ending up dark show fewer than half heads"
    }

    fn default_trials(&self) -> u64 {
        CoinParams::default().n_trials
    }

    fn run(&self, n_trials: u64, seed: u64) -> Result<FallacyReport, FallacyError> {
        let params = CoinParams {
            n_trials,
            ..CoinParams::default()
        };
        let outcome = coin_darkening_mc(&params, seed)?;
        Ok(FallacyReport::new(self.name(), n_trials, seed)
            .count("n_selected", outcome.n_selected)
            .quantity(
                "selected_fraction",
                Some(outcome.selected_fraction),
                Some(outcome.exact_selected_fraction),
            )
            .quantity(
                "heads_frequency_in_selected",
                outcome.heads_frequency_in_selected,
                outcome.exact_heads_frequency,
            )
            .note("every coin is fair; the darkness cut keeps only tails-heavy runs")
            .note("heads frequency is over kept flips only and does not describe any coin's bias"))
    }
}
