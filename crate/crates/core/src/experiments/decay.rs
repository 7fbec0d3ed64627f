//! Nested measure-decay simulation.
//!
//! Round 1 removes the selector's subset from the root polytope. The
//! remainder is covered by first-stopping-time cylinders: each surviving
//! sample's expansion is run to its first C-distorted stage, and distinct
//! move prefixes give combinatorially disjoint cylinders (a first stop is
//! determined by the move prefix alone, so no harvested prefix can extend
//! another). Each following round applies the selector inside every
//! cylinder's domain polytope — on the renormalized weights at the stop —
//! and recurses. Per round the simulation reports the Monte Carlo residual
//! mass against the analytic envelope (1 − K · (1/C))^level.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::NonclassicalExchange;
use crate::induction::{rauzy_step, TraceEnd};
use crate::numeric::{NumericMode, Scalar};
use crate::polytope::CarriedPolytope;
use crate::projective::transport_constant;
use crate::rng::{fnv1a, stream_rng};
use crate::selector::{ResolvedSelector, SelectorSpec};
use crate::stopping::StageScan;
use crate::weights::WeightVector;

const SELECTOR_SALT: u64 = 0x5e1ec70b5a17;

#[derive(Debug, Clone, Serialize)]
pub struct DecayConfig {
    /// Distortion threshold C > 1 for harvested stages.
    pub c: f64,
    /// Removal rounds.
    pub depth: usize,
    /// Sample points driving the residual estimates.
    pub samples: usize,
    /// Cap on distinct polytope contexts processed across all rounds.
    pub budget: usize,
    /// Cap on induction steps when hunting each next stop.
    pub segment_max_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayLevel {
    pub level: usize,
    /// Estimated mass never removed through this round.
    pub residual: f64,
    pub standard_error: f64,
    /// Distinct cylinders whose polytopes were processed this round.
    pub stages: usize,
    /// (1 − K · (1/C))^level.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayExperiment {
    pub exchange: String,
    pub config: DecayConfig,
    /// Target proportion K of the selector.
    pub k: f64,
    pub levels: Vec<DecayLevel>,
    pub total_stages: usize,
    /// Samples that survived to the end but whose expansion never produced
    /// the next required stop (within the step cap or at all).
    pub uncovered: usize,
    /// Reasons the uncovered walks stalled.
    pub termination_histogram: BTreeMap<String, usize>,
    pub completed: bool,
}

/// One sample's future through the nested covering: the stop states of its
/// own expansion, one per round that may need them.
struct Walk<S> {
    start: WeightVector<S>,
    /// (cumulative move prefix, exchange key, renormalized point at stop).
    stops: Vec<(Vec<(u16, u16)>, String, WeightVector<S>)>,
    stalled: Option<TraceEnd>,
}

fn walk_sample<S: Scalar>(
    ex: &NonclassicalExchange,
    poly: &CarriedPolytope,
    config: &DecayConfig,
    sample: usize,
) -> Walk<S> {
    let mut rng = stream_rng(config.seed, sample as u64);
    let start: WeightVector<S> = poly.sample(&mut rng);
    let mut current_ex = ex.clone();
    let mut current_w = start.clone();
    let mut prefix: Vec<(u16, u16)> = Vec::new();
    let mut walk = Walk {
        start,
        stops: Vec::new(),
        stalled: None,
    };
    'levels: for _ in 0..config.depth.saturating_sub(1) {
        let target = CarriedPolytope::of(&current_ex).expect("valid exchanges carry weight");
        let mut scan = StageScan::new(current_ex.size(), target.exponent(), config.c);
        loop {
            if scan.len() >= config.segment_max_steps {
                walk.stalled = Some(TraceEnd::MaxSteps);
                break 'levels;
            }
            match rauzy_step(&current_ex, &current_w) {
                Ok((next_ex, mut next_w, record)) => {
                    if S::MODE == NumericMode::Fast {
                        crate::induction::fast_cleanup(&next_ex, &mut next_w);
                    }
                    prefix.push((record.winner.index() as u16, record.loser.index() as u16));
                    let qualified = scan.push(record.winner, record.loser);
                    current_ex = next_ex;
                    current_w = next_w;
                    if qualified {
                        let point = current_w.normalized();
                        walk.stops.push((prefix.clone(), current_ex.key(), point));
                        break;
                    }
                }
                Err(err) => {
                    walk.stalled = Some(TraceEnd::from_step_error(&err));
                    break 'levels;
                }
            }
        }
    }
    walk
}

fn summarize<S: Scalar>(
    ex: &NonclassicalExchange,
    config: &DecayConfig,
    k: f64,
    levels: Vec<DecayLevel>,
    total_stages: usize,
    completed: bool,
    walks: &[Walk<S>],
    alive: &[bool],
    uncovered: &[bool],
) -> DecayExperiment {
    let uncovered_count = alive
        .iter()
        .zip(uncovered)
        .filter(|(&a, &u)| a && u)
        .count();
    let mut termination_histogram = BTreeMap::new();
    for (idx, walk) in walks.iter().enumerate() {
        if alive[idx] && uncovered[idx] {
            if let Some(reason) = walk.stalled {
                *termination_histogram.entry(reason.to_string()).or_insert(0) += 1;
            }
        }
    }
    DecayExperiment {
        exchange: ex.to_string(),
        config: config.clone(),
        k,
        levels,
        total_stages,
        uncovered: uncovered_count,
        termination_histogram,
        completed,
    }
}

/// Runs the nested decay simulation. On budget exhaustion the partial
/// results are carried inside the error.
pub fn decay_experiment<S: Scalar>(
    ex: &NonclassicalExchange,
    selector: &SelectorSpec,
    config: &DecayConfig,
) -> Result<DecayExperiment> {
    if !(config.c > 1.0) {
        return Err(Error::Domain(format!(
            "decay requires C > 1, got {}",
            config.c
        )));
    }
    if config.depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    if config.samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let k = selector.target_proportion;
    let c_transport = transport_constant(config.c)?;
    let shrink = 1.0 - k * c_transport;
    let root_poly = CarriedPolytope::of(ex)?;
    let root_key = ex.key();

    let walks: Vec<Walk<S>> = (0..config.samples)
        .into_par_iter()
        .map(|s| walk_sample::<S>(ex, &root_poly, config, s))
        .collect();

    // Selectors are resolved once per distinct exchange, with a seed derived
    // from the exchange itself so results do not depend on encounter order.
    let mut selectors: BTreeMap<String, ResolvedSelector> = BTreeMap::new();
    let ensure_selector = |selectors: &mut BTreeMap<String, ResolvedSelector>,
                               key: &str|
     -> Result<()> {
        if selectors.contains_key(key) {
            return Ok(());
        }
        let exchange = NonclassicalExchange::parse(key)?;
        let poly = CarriedPolytope::of(&exchange)?;
        let mut rng = stream_rng(config.seed ^ SELECTOR_SALT, fnv1a(key));
        let resolved = selector.resolve(&poly, &mut rng)?;
        selectors.insert(key.to_owned(), resolved);
        Ok(())
    };

    let n = config.samples as f64;
    let mut alive: Vec<bool> = vec![true; config.samples];
    let mut uncovered: Vec<bool> = vec![false; config.samples];
    let mut levels = vec![DecayLevel {
        level: 0,
        residual: 1.0,
        standard_error: 0.0,
        stages: 0,
        bound: 1.0,
    }];
    let mut total_stages = 0usize;

    for round in 1..=config.depth {
        // Contexts entering this round: the root at round 1, else the
        // (round−1)-th stop cylinder of each surviving sample.
        let mut contexts: BTreeSet<&[(u16, u16)]> = BTreeSet::new();
        for (idx, walk) in walks.iter().enumerate() {
            if !alive[idx] {
                continue;
            }
            if round == 1 {
                contexts.insert(&[]);
            } else if let Some((prefix, _, _)) = walk.stops.get(round - 2) {
                contexts.insert(prefix.as_slice());
            }
        }
        let stages = contexts.len();
        if total_stages + stages > config.budget {
            let partial = summarize(
                ex,
                config,
                k,
                levels,
                total_stages,
                false,
                &walks,
                &alive,
                &uncovered,
            );
            return Err(Error::BudgetExhausted {
                level: round,
                partial: Box::new(partial),
            });
        }
        total_stages += stages;

        for (idx, walk) in walks.iter().enumerate() {
            if !alive[idx] {
                continue;
            }
            let (key, point): (&str, &WeightVector<S>) = if round == 1 {
                (&root_key, &walk.start)
            } else {
                match walk.stops.get(round - 2) {
                    Some((_, key, point)) => (key.as_str(), point),
                    None => {
                        uncovered[idx] = true;
                        continue;
                    }
                }
            };
            ensure_selector(&mut selectors, key)?;
            if selectors[key].contains(point) {
                alive[idx] = false;
            }
        }

        let survivors = alive.iter().filter(|&&a| a).count();
        let residual = survivors as f64 / n;
        levels.push(DecayLevel {
            level: round,
            residual,
            standard_error: (residual * (1.0 - residual) / n).sqrt(),
            stages,
            bound: shrink.powi(round as i32),
        });
    }

    Ok(summarize(
        ex,
        config,
        k,
        levels,
        total_stages,
        true,
        &walks,
        &alive,
        &uncovered,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::SelectorKind;

    fn config(depth: usize, samples: usize, budget: usize) -> DecayConfig {
        DecayConfig {
            c: 2.0,
            depth,
            samples,
            budget,
            segment_max_steps: 800,
            seed: 9,
        }
    }

    #[test]
    fn single_removal_matches_selector_proportion() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let result = decay_experiment::<f64>(&ex, &spec, &config(1, 2000, 10)).unwrap();
        assert_eq!(result.levels.len(), 2);
        let row = &result.levels[1];
        assert!(row.residual <= 1.0 - 0.3 + 3.0 * row.standard_error + 0.02);
        assert_eq!(row.bound, 1.0 - 0.3 * 0.5);
        assert!(result.completed);
    }

    #[test]
    fn residuals_nonincreasing_and_below_bound() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let result = decay_experiment::<f64>(&ex, &spec, &config(6, 1500, 100_000)).unwrap();
        for pair in result.levels.windows(2) {
            assert!(pair[1].residual <= pair[0].residual + 1e-15);
        }
        for row in &result.levels {
            assert!(
                row.residual <= row.bound + 3.0 * row.standard_error,
                "level {}: residual {} vs bound {}",
                row.level,
                row.residual,
                row.bound
            );
            assert_eq!(row.bound, 0.85f64.powi(row.level as i32));
        }
    }

    #[test]
    fn deterministic_output() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let a = decay_experiment::<f64>(&ex, &spec, &config(3, 400, 100_000)).unwrap();
        let b = decay_experiment::<f64>(&ex, &spec, &config(3, 400, 100_000)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn budget_exhaustion_carries_partial_results() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let err = decay_experiment::<f64>(&ex, &spec, &config(5, 500, 3)).unwrap_err();
        match err {
            Error::BudgetExhausted { level, partial } => {
                assert!(level >= 2);
                assert!(!partial.completed);
                assert_eq!(partial.levels.len(), level);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn depth_twenty_bound_column() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let mut cfg = config(20, 300, 1_000_000);
        cfg.segment_max_steps = 1500;
        let result = decay_experiment::<f64>(&ex, &spec, &cfg).unwrap();
        let last = result.levels.last().unwrap();
        assert_eq!(last.level, 20);
        assert!((last.bound - 0.0388).abs() < 1e-4, "bound {}", last.bound);
        assert!(last.residual <= last.bound + 3.0 * last.standard_error);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let mut bad = config(1, 100, 10);
        bad.c = 1.0;
        assert!(decay_experiment::<f64>(&ex, &spec, &bad).is_err());
        let spec_bad = SelectorSpec::new(SelectorKind::Halfspace, 1.5);
        assert!(decay_experiment::<f64>(&ex, &spec_bad, &config(1, 100, 10)).is_err());
    }
}
