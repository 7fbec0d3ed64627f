//! Synthetic subset selectors of prescribed proportion.
//!
//! The nested-decay argument needs, per polytope, a measurable subset of
//! relative Lebesgue measure at least K. These selectors stand in for it:
//! a linear score plus a threshold, resolved per polytope so the selected
//! proportion meets the target (estimated by seeded Monte Carlo quantiles
//! for the automatic kinds, verified for the custom kind).

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::polytope::CarriedPolytope;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectorKind {
    /// Keep `{ x : x_j <= t }` for the coordinate with the widest vertex
    /// range, `t` at the K-quantile.
    Halfspace,
    /// Keep `{ x : <x, v> >= t }` for the first vertex `v`, `t` at the
    /// (1−K)-quantile: a cap shrinking toward that vertex.
    VertexCap,
    /// Fixed linear score and threshold supplied by the caller; the resolved
    /// proportion is estimated and must reach the target.
    CustomThreshold {
        coeffs: BTreeMap<String, f64>,
        threshold: f64,
        keep_below: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorSpec {
    #[serde(flatten)]
    pub kind: SelectorKind,
    /// Target relative measure K in (0, 1).
    pub target_proportion: f64,
    /// Sample count used to resolve quantiles and estimate proportions.
    pub resolution_samples: usize,
}

impl SelectorSpec {
    pub fn new(kind: SelectorKind, target_proportion: f64) -> Self {
        SelectorSpec {
            kind,
            target_proportion,
            resolution_samples: 2000,
        }
    }

    /// Left half of a one-dimensional polytope and its analogue in higher
    /// dimension: first coordinate at most its midpoint. Proportion is the
    /// target estimated, not enforced.
    pub fn half(first_label: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(first_label.to_owned(), 1.0);
        SelectorSpec::new(
            SelectorKind::CustomThreshold {
                coeffs,
                threshold: 0.5,
                keep_below: true,
            },
            0.5,
        )
    }

    /// Resolves the selector on a specific polytope.
    pub fn resolve(&self, poly: &CarriedPolytope, rng: &mut impl Rng) -> Result<ResolvedSelector> {
        if !(self.target_proportion > 0.0 && self.target_proportion < 1.0) {
            return Err(Error::Domain(format!(
                "target proportion must lie in (0,1), got {}",
                self.target_proportion
            )));
        }
        if self.resolution_samples < 16 {
            return Err(Error::Domain(
                "selector resolution needs at least 16 samples".into(),
            ));
        }
        let n = poly.exchange().size();
        let k = self.target_proportion;
        match &self.kind {
            SelectorKind::Halfspace => {
                let mut coeffs = vec![0.0; n];
                coeffs[widest_coordinate(poly)] = 1.0;
                let (threshold, est, se) =
                    quantile_threshold(poly, &coeffs, k, true, self.resolution_samples, rng);
                Ok(ResolvedSelector {
                    coeffs,
                    threshold,
                    keep_below: true,
                    est_proportion: est,
                    standard_error: se,
                })
            }
            SelectorKind::VertexCap => {
                let coeffs: Vec<f64> = poly.vertices()[0]
                    .values()
                    .iter()
                    .map(Scalar::to_f64)
                    .collect();
                let (threshold, est, se) =
                    quantile_threshold(poly, &coeffs, k, false, self.resolution_samples, rng);
                Ok(ResolvedSelector {
                    coeffs,
                    threshold,
                    keep_below: false,
                    est_proportion: est,
                    standard_error: se,
                })
            }
            SelectorKind::CustomThreshold {
                coeffs,
                threshold,
                keep_below,
            } => {
                let mut by_id = vec![0.0; n];
                for (label, value) in coeffs {
                    let id = poly.exchange().alphabet().id_of(label).ok_or_else(|| {
                        Error::AlphabetMismatch {
                            detail: format!("selector coefficient for unknown label `{label}`"),
                        }
                    })?;
                    by_id[id.index()] = *value;
                }
                let resolved = ResolvedSelector {
                    coeffs: by_id,
                    threshold: *threshold,
                    keep_below: *keep_below,
                    est_proportion: 0.0,
                    standard_error: 0.0,
                };
                let (est, se) = estimate_proportion(poly, &resolved, self.resolution_samples, rng);
                if est < k - 3.0 * se {
                    return Err(Error::Domain(format!(
                        "custom selector proportion {est:.4} below target {k} − 3·SE"
                    )));
                }
                Ok(ResolvedSelector {
                    est_proportion: est,
                    standard_error: se,
                    ..resolved
                })
            }
        }
    }
}

/// A selector bound to one polytope: membership is a sign test on a linear
/// score.
#[derive(Debug, Clone)]
pub struct ResolvedSelector {
    coeffs: Vec<f64>,
    threshold: f64,
    keep_below: bool,
    pub est_proportion: f64,
    pub standard_error: f64,
}

impl ResolvedSelector {
    pub fn contains<S: Scalar>(&self, w: &WeightVector<S>) -> bool {
        let score: f64 = w
            .values()
            .iter()
            .zip(&self.coeffs)
            .map(|(v, c)| v.to_f64() * c)
            .sum();
        if self.keep_below {
            score <= self.threshold
        } else {
            score >= self.threshold
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

fn widest_coordinate(poly: &CarriedPolytope) -> usize {
    let n = poly.exchange().size();
    let mut best = 0;
    let mut best_range = -1.0;
    for j in 0..n {
        let vals: Vec<f64> = poly
            .vertices()
            .iter()
            .map(|v| v.values()[j].to_f64())
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > best_range {
            best_range = hi - lo;
            best = j;
        }
    }
    best
}

fn scores(poly: &CarriedPolytope, coeffs: &[f64], count: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let w: WeightVector<f64> = poly.sample(rng);
            w.values().iter().zip(coeffs).map(|(v, c)| v * c).sum()
        })
        .collect()
}

fn quantile_threshold(
    poly: &CarriedPolytope,
    coeffs: &[f64],
    k: f64,
    keep_below: bool,
    count: usize,
    rng: &mut impl Rng,
) -> (f64, f64, f64) {
    let mut s = scores(poly, coeffs, count, rng);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = if keep_below { k } else { 1.0 - k };
    let idx = ((q * count as f64).ceil() as usize).clamp(1, count) - 1;
    let threshold = s[idx];
    let hits = s
        .iter()
        .filter(|&&v| if keep_below { v <= threshold } else { v >= threshold })
        .count();
    let est = hits as f64 / count as f64;
    let se = (est * (1.0 - est) / count as f64).sqrt();
    (threshold, est, se)
}

fn estimate_proportion(
    poly: &CarriedPolytope,
    sel: &ResolvedSelector,
    count: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let mut hits = 0usize;
    for _ in 0..count {
        let w: WeightVector<f64> = poly.sample(rng);
        if sel.contains(&w) {
            hits += 1;
        }
    }
    let est = hits as f64 / count as f64;
    let se = (est * (1.0 - est) / count as f64).sqrt();
    (est, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::NonclassicalExchange;
    use crate::rng::stream_rng;

    fn poly(text: &str) -> CarriedPolytope {
        CarriedPolytope::of(&NonclassicalExchange::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn halfspace_hits_target_proportion() {
        for text in ["a b | b a", "a b a c | c d d b"] {
            let p = poly(text);
            for k in [0.3, 0.5, 0.7] {
                let spec = SelectorSpec::new(SelectorKind::Halfspace, k);
                let sel = spec.resolve(&p, &mut stream_rng(10, 0)).unwrap();
                let (est, se) =
                    estimate_proportion(&p, &sel, 4000, &mut stream_rng(11, 0));
                assert!(
                    est >= k - 3.0 * (se + sel.standard_error),
                    "{text} K={k}: est {est}"
                );
                assert!((est - k).abs() < 0.08, "{text} K={k}: est {est}");
            }
        }
    }

    #[test]
    fn vertex_cap_hits_target_proportion() {
        let p = poly("a a b | b c c");
        let spec = SelectorSpec::new(SelectorKind::VertexCap, 0.4);
        let sel = spec.resolve(&p, &mut stream_rng(5, 0)).unwrap();
        let (est, se) = estimate_proportion(&p, &sel, 4000, &mut stream_rng(6, 0));
        assert!(est >= 0.4 - 3.0 * (se + sel.standard_error), "est {est}");
    }

    #[test]
    fn custom_half_splits_the_simplex() {
        let p = poly("a b | b a");
        let spec = SelectorSpec::half("a");
        let sel = spec.resolve(&p, &mut stream_rng(2, 0)).unwrap();
        assert!((sel.est_proportion - 0.5).abs() < 0.05);
        let left = WeightVector::new(p.exchange().alphabet().clone(), vec![0.2, 0.8]).unwrap();
        let right = WeightVector::new(p.exchange().alphabet().clone(), vec![0.8, 0.2]).unwrap();
        assert!(sel.contains(&left));
        assert!(!sel.contains(&right));
    }

    #[test]
    fn unreachable_custom_target_is_rejected() {
        let p = poly("a b | b a");
        let mut coeffs = BTreeMap::new();
        coeffs.insert("a".to_owned(), 1.0);
        let spec = SelectorSpec::new(
            SelectorKind::CustomThreshold {
                coeffs,
                threshold: 0.1,
                keep_below: true,
            },
            0.5,
        );
        assert!(matches!(
            spec.resolve(&p, &mut stream_rng(3, 0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_dimensional_polytope_selects_everything() {
        let p = poly("a a b b c | c");
        let spec = SelectorSpec::new(SelectorKind::Halfspace, 0.3);
        let sel = spec.resolve(&p, &mut stream_rng(4, 0)).unwrap();
        let only: WeightVector<f64> = p.sample_seeded(0);
        assert!(sel.contains(&only));
        assert_eq!(sel.est_proportion, 1.0);
    }
}
