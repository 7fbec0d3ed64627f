//! Empirical recurrence of C-uniform distortion: sample carried weights,
//! expand, decompose into C-distorted stages, and aggregate stage counts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::NonclassicalExchange;
use crate::induction::{expand, TraceEnd};
use crate::numeric::Scalar;
use crate::polytope::CarriedPolytope;
use crate::rng::stream_rng;
use crate::stopping::stopping_decomposition;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceConfig {
    pub c: f64,
    pub max_steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// Aggregate `fraction(>= k)` is reported for k = 1..=k_max.
    pub k_max: usize,
}

impl RecurrenceConfig {
    pub fn new(c: f64, max_steps: usize, trials: usize, seed: u64) -> Self {
        RecurrenceConfig {
            c,
            max_steps,
            trials,
            seed,
            k_max: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// C-distorted stages found by the greedy decomposition.
    pub stages: usize,
    /// Position of the first stop, when any.
    pub first_stop: Option<usize>,
    /// Steps actually taken before max-steps or a terminal condition.
    pub steps: usize,
    pub termination: TraceEnd,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceStats {
    pub exchange: String,
    pub config: RecurrenceConfig,
    pub per_trial: Vec<TrialRecord>,
    /// `fraction_at_least[k-1]` = fraction of trials with at least k stages.
    /// Trials that terminated early count as failures here; they are never
    /// resampled.
    pub fraction_at_least: Vec<f64>,
    pub termination_histogram: BTreeMap<String, usize>,
}

impl RecurrenceStats {
    pub fn fraction_at_least(&self, k: usize) -> f64 {
        self.fraction_at_least.get(k - 1).copied().unwrap_or(0.0)
    }
}

pub fn recurrence_experiment<S: Scalar>(
    ex: &NonclassicalExchange,
    config: &RecurrenceConfig,
) -> Result<RecurrenceStats> {
    if config.c < 1.0 {
        return Err(Error::Domain(format!(
            "distortion threshold must be at least 1, got {}",
            config.c
        )));
    }
    if config.trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let poly = CarriedPolytope::of(ex)?;
    let per_trial: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(config.seed, trial as u64);
            let w: WeightVector<S> = poly.sample(&mut rng);
            let trace = expand(ex, &w, config.max_steps);
            let decomposition = stopping_decomposition(&trace, config.c);
            TrialRecord {
                trial,
                stages: decomposition.stages(),
                first_stop: decomposition.first_stop(),
                steps: trace.len(),
                termination: trace.termination(),
            }
        })
        .collect();

    let trials = config.trials as f64;
    let fraction_at_least: Vec<f64> = (1..=config.k_max)
        .map(|k| {
            per_trial
                .iter()
                .filter(|r| r.termination == TraceEnd::MaxSteps && r.stages >= k)
                .count() as f64
                / trials
        })
        .collect();
    let mut termination_histogram = BTreeMap::new();
    for record in &per_trial {
        *termination_histogram
            .entry(record.termination.to_string())
            .or_insert(0) += 1;
    }
    Ok(RecurrenceStats {
        exchange: ex.to_string(),
        config: config.clone(),
        per_trial,
        fraction_at_least,
        termination_histogram,
    })
}
