//! Three boxes: an object is placed uniformly in one of three boxes and a
//! machine checks box 1 or box 2 at random, lighting green when it finds
//! the object. Among green-on-box-1 trials the object is in box 1 with
//! certainty, and likewise for box 2. Reading the two certainties as one
//! statement ("it was in both") conflates two different selected
//! ensembles, so the report flags them as distinct.

use super::{FallacyError, FallacyReport, FallacyScenario};
use crate::rng::trial_rng;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxesOutcome {
    pub n_trials: u64,
    pub n_checked1: u64,
    pub n_checked1_green: u64,
    pub n_checked2: u64,
    pub n_checked2_green: u64,
    pub n_in_box1: u64,
    pub p_box1_given_checked1_green: Option<f64>,
    pub p_box2_given_checked2_green: Option<f64>,
    pub unconditioned_box1_fraction: f64,
    /// The two conditionals come from different selections and must not
    /// be combined into a statement about one ensemble.
    pub distinct_ensembles: bool,
}

/// Hide the object uniformly, check a random one of the first two boxes,
/// and condition each certainty claim on its own green light.
pub fn three_boxes_mc(n_trials: u64, seed: u64) -> Result<BoxesOutcome, FallacyError> {
    if n_trials == 0 {
        return Err(FallacyError::BadParameter(
            "n_trials must be at least 1".to_string(),
        ));
    }
    let results: Vec<(u32, u32)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let location = rng.gen_range(0..3u32);
            let checked = rng.gen_range(0..2u32);
            (location, checked)
        })
        .collect();
    let mut outcome = BoxesOutcome {
        n_trials,
        n_checked1: 0,
        n_checked1_green: 0,
        n_checked2: 0,
        n_checked2_green: 0,
        n_in_box1: 0,
        p_box1_given_checked1_green: None,
        p_box2_given_checked2_green: None,
        unconditioned_box1_fraction: 0.0,
        distinct_ensembles: true,
    };
    let mut box1_among_green1 = 0u64;
    let mut box2_among_green2 = 0u64;
    for (location, checked) in results {
        let green = location == checked;
        outcome.n_in_box1 += u64::from(location == 0);
        if checked == 0 {
            outcome.n_checked1 += 1;
            outcome.n_checked1_green += u64::from(green);
            box1_among_green1 += u64::from(green && location == 0);
        } else {
            outcome.n_checked2 += 1;
            outcome.n_checked2_green += u64::from(green);
            box2_among_green2 += u64::from(green && location == 1);
        }
    }
    outcome.unconditioned_box1_fraction = outcome.n_in_box1 as f64 / n_trials as f64;
    if outcome.n_checked1_green > 0 {
        outcome.p_box1_given_checked1_green =
            Some(box1_among_green1 as f64 / outcome.n_checked1_green as f64);
    }
    if outcome.n_checked2_green > 0 {
        outcome.p_box2_given_checked2_green =
            Some(box2_among_green2 as f64 / outcome.n_checked2_green as f64);
    }
    Ok(outcome)
}

pub(super) struct BoxesScenario;

impl FallacyScenario for BoxesScenario {
    fn name(&self) -> &'static str {
        "boxes"
    }

    fn summary(&self) -> &'static str {
        "two certainties from two different selections do not describe one trial"
    }

    fn default_trials(&self) -> u64 {
        10_000
    }

    fn run(&self, n_trials: u64, seed: u64) -> Result<FallacyReport, FallacyError> {
        let outcome = three_boxes_mc(n_trials, seed)?;
        let mut report = FallacyReport::new(self.name(), n_trials, seed)
            .count("n_checked1_green", outcome.n_checked1_green)
            .count("n_checked2_green", outcome.n_checked2_green)
            .count("n_in_box1", outcome.n_in_box1)
            .quantity(
                "p_box1_given_checked1_green",
                outcome.p_box1_given_checked1_green,
                Some(1.0),
            )
            .quantity(
                "p_box2_given_checked2_green",
                outcome.p_box2_given_checked2_green,
                Some(1.0),
            )
            .quantity(
                "unconditioned_box1_fraction",
                Some(outcome.unconditioned_box1_fraction),
                Some(1.0 / 3.0),
            )
            .note("each certainty conditions on its own green light; the two selected ensembles share no trials")
            .note("concluding the object sat in both boxes conflates the two selections");
        report.distinct_ensembles = Some(true);
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certainty_in_each_selected_ensemble() {
        let outcome = three_boxes_mc(10_000, 0).unwrap();
        assert!(outcome.n_checked1_green > 0);
        assert!(outcome.n_checked2_green > 0);
        assert_eq!(outcome.p_box1_given_checked1_green, Some(1.0));
        assert_eq!(outcome.p_box2_given_checked2_green, Some(1.0));
        assert!(outcome.distinct_ensembles);
    }

    #[test]
    fn unconditioned_location_is_uniform() {
        let outcome = three_boxes_mc(10_000, 5).unwrap();
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / 10_000f64).sqrt();
        assert!((outcome.unconditioned_box1_fraction - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn selection_counts_partition_the_checks() {
        let outcome = three_boxes_mc(5_000, 2).unwrap();
        assert_eq!(outcome.n_checked1 + outcome.n_checked2, 5_000);
        assert!(outcome.n_checked1_green <= outcome.n_checked1);
        assert!(outcome.n_checked2_green <= outcome.n_checked2);
    }

    #[test]
    fn single_trial_leaves_at_most_one_conditional_defined() {
        let outcome = three_boxes_mc(1, 0).unwrap();
        let defined = [
            outcome.p_box1_given_checked1_green,
            outcome.p_box2_given_checked2_green,
        ]
        .iter()
        .filter(|p| p.is_some())
        .count();
        assert!(defined <= 1);
    }

    #[test]
    fn report_carries_the_distinct_ensembles_flag() {
        let report = BoxesScenario.run(1_000, 0).unwrap();
        assert_eq!(report.distinct_ensembles, Some(true));
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"distinct_ensembles\":true"));
    }

    #[test]
    fn zero_trials_is_rejected() {
        assert!(three_boxes_mc(0, 0).is_err());
    }
}
