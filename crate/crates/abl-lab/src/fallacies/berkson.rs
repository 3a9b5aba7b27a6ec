//! Collider bias in a hospital population: admit anyone with condition A
//! or condition B, then measure how common each condition is among the
//! admitted. Independent conditions acquire a negative correlation purely
//! from the admission cut.

use super::{FallacyError, FallacyReport, FallacyScenario};
use crate::rng::trial_rng;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerksonParams {
    pub p_a: f64,
    pub p_b: f64,
    pub n_trials: u64,
}

impl Default for BerksonParams {
    fn default() -> Self {
        Self {
            p_a: 0.1,
            p_b: 0.1,
            n_trials: 10_000,
        }
    }
}

impl BerksonParams {
    fn validate(&self) -> Result<(), FallacyError> {
        for (name, value) in [("p_a", self.p_a), ("p_b", self.p_b)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(FallacyError::BadProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Conditional-on-admission fractions. `independence_gap` is measured
/// after the cut; `unselected_gap` is the same covariance before the cut
/// and is exactly zero because the conditions are independent by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerksonFractions {
    pub frac_a: f64,
    pub frac_b: f64,
    pub frac_ab: f64,
    pub independence_gap: f64,
    pub unselected_gap: f64,
}

/// Closed-form fractions among the admitted population S = A or B, with
/// p(A and B) = p(A) p(B).
pub fn berkson_exact(params: &BerksonParams) -> Result<BerksonFractions, FallacyError> {
    params.validate()?;
    let p_ab = params.p_a * params.p_b;
    let p_s = params.p_a + params.p_b - p_ab;
    if p_s <= 0.0 {
        return Err(FallacyError::EmptySelection);
    }
    let frac_a = params.p_a / p_s;
    let frac_b = params.p_b / p_s;
    let frac_ab = p_ab / p_s;
    Ok(BerksonFractions {
        frac_a,
        frac_b,
        frac_ab,
        independence_gap: frac_ab - frac_a * frac_b,
        unselected_gap: p_ab - params.p_a * params.p_b,
    })
}

/// Empirical counts and fractions. Fractions are `None` when nobody was
/// admitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerksonSample {
    pub n_trials: u64,
    pub n_a: u64,
    pub n_b: u64,
    pub n_ab: u64,
    pub n_s: u64,
    pub frac_a: Option<f64>,
    pub frac_b: Option<f64>,
    pub frac_ab: Option<f64>,
    pub independence_gap: Option<f64>,
    pub unselected_gap: f64,
}

/// Sample `n_trials` independent people on per-trial substreams and count
/// conditions before and after the admission cut.
pub fn berkson_mc(params: &BerksonParams, seed: u64) -> Result<BerksonSample, FallacyError> {
    params.validate()?;
    let flags: Vec<(bool, bool)> = (0..params.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let has_a = rng.gen::<f64>() < params.p_a;
            let has_b = rng.gen::<f64>() < params.p_b;
            (has_a, has_b)
        })
        .collect();
    let mut sample = BerksonSample {
        n_trials: params.n_trials,
        n_a: 0,
        n_b: 0,
        n_ab: 0,
        n_s: 0,
        frac_a: None,
        frac_b: None,
        frac_ab: None,
        independence_gap: None,
        unselected_gap: 0.0,
    };
    for (has_a, has_b) in flags {
        sample.n_a += u64::from(has_a);
        sample.n_b += u64::from(has_b);
        sample.n_ab += u64::from(has_a && has_b);
        sample.n_s += u64::from(has_a || has_b);
    }
    let n = params.n_trials as f64;
    sample.unselected_gap =
        sample.n_ab as f64 / n - (sample.n_a as f64 / n) * (sample.n_b as f64 / n);
    if sample.n_s > 0 {
        let n_s = sample.n_s as f64;
        let frac_a = sample.n_a as f64 / n_s;
        let frac_b = sample.n_b as f64 / n_s;
        let frac_ab = sample.n_ab as f64 / n_s;
        sample.frac_a = Some(frac_a);
        sample.frac_b = Some(frac_b);
        sample.frac_ab = Some(frac_ab);
        sample.independence_gap = Some(frac_ab - frac_a * frac_b);
    }
    Ok(sample)
}

pub(super) struct BerksonScenario;

impl FallacyScenario for BerksonScenario {
    fn name(&self) -> &'static str {
        "berkson"
    }

    fn summary(&self) -> &'static str {
        "independent conditions look anti-correlated among hospital admissions"
    }

    fn default_trials(&self) -> u64 {
        10_000
    }

    fn run(&self, n_trials: u64, seed: u64) -> Result<FallacyReport, FallacyError> {
        let params = BerksonParams {
            n_trials,
            ..BerksonParams::default()
        };
        let exact = berkson_exact(&params)?;
        let mc = berkson_mc(&params, seed)?;
        Ok(FallacyReport::new(self.name(), n_trials, seed)
            .count("N_A", mc.n_a)
            .count("N_B", mc.n_b)
            .count("N_AB", mc.n_ab)
            .count("N_S", mc.n_s)
            .quantity("frac_A_given_S", mc.frac_a, Some(exact.frac_a))
            .quantity("frac_B_given_S", mc.frac_b, Some(exact.frac_b))
            .quantity("frac_AB_given_S", mc.frac_ab, Some(exact.frac_ab))
            .quantity(
                "independence_gap_given_S",
                mc.independence_gap,
                Some(exact.independence_gap),
            )
            .quantity(
                "independence_gap_unselected",
                Some(mc.unselected_gap),
                Some(exact.unselected_gap),
            )
            .note("conditions are sampled independently; the admission cut S = A or B induces the negative gap")
            .note("fractions condition on admission and say nothing about the general population"))
    }
}
