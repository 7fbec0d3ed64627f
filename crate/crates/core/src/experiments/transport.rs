//! Measure-transport sandwich check: a C-distorted stage changes relative
//! probabilities by at most the factor c = 1/C. Both ratios are estimated
//! from the same sample set, the target side through importance weights
//! given by the Jacobian.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::numeric::Scalar;
use crate::polytope::CarriedPolytope;
use crate::projective::{distortion, jacobian, DistortionMode};
use crate::rng::stream_rng;
use crate::selector::SelectorSpec;
use crate::weights::WeightVector;

const SELECTOR_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    /// Exact distortion C of the stage on the polytope.
    pub distortion: f64,
    /// Transport constant c = 1/C (one when the Jacobian is constant).
    pub transport: f64,
    /// Fraction of the polytope in the region (source-side ratio).
    pub source_ratio: f64,
    /// Importance-weighted image ratio (target-side ratio).
    pub target_ratio: f64,
    /// c · source_ratio.
    pub lower: f64,
    /// (1/c) · source_ratio.
    pub upper: f64,
    pub source_se: f64,
    pub target_se: f64,
    /// Distance from the target ratio to the nearer sandwich bound.
    pub margin: f64,
    pub sandwich_holds: bool,
    pub samples: usize,
}

pub fn eq1_transport_check<S: Scalar>(
    q: &TransitionMatrix,
    poly: &CarriedPolytope,
    region: &SelectorSpec,
    samples: usize,
    seed: u64,
) -> Result<TransportReport> {
    if samples < 16 {
        return Err(Error::Domain("need at least 16 samples".into()));
    }
    let selector = region.resolve(poly, &mut stream_rng(seed, SELECTOR_STREAM))?;
    let report = distortion(q, poly, DistortionMode::Exact)?;
    let c_distortion = report.exact.expect("exact mode");
    let exponent = report.exponent;
    let transport = if c_distortion <= 1.0 {
        1.0
    } else {
        1.0 / c_distortion
    };

    let mut rng = stream_rng(seed, 0);
    let mut in_region = Vec::with_capacity(samples);
    let mut weights = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: WeightVector<S> = poly.sample(&mut rng);
        in_region.push(selector.contains(&x));
        weights.push(jacobian(q, &x, exponent)?.to_f64());
    }

    let n = samples as f64;
    let hits = in_region.iter().filter(|&&a| a).count() as f64;
    let source_ratio = hits / n;
    let source_se = (source_ratio * (1.0 - source_ratio) / n).sqrt();

    let sum_w: f64 = weights.iter().sum();
    let sum_wa: f64 = weights
        .iter()
        .zip(&in_region)
        .filter(|(_, &a)| a)
        .map(|(w, _)| w)
        .sum();
    let target_ratio = sum_wa / sum_w;
    let mean_w = sum_w / n;
    let resid_sq: f64 = weights
        .iter()
        .zip(&in_region)
        .map(|(w, &a)| {
            let r = w * ((a as u8 as f64) - target_ratio);
            r * r
        })
        .sum::<f64>()
        / n;
    let target_se = (resid_sq / n).sqrt() / mean_w;

    let lower = transport * source_ratio;
    let upper = source_ratio / transport;
    let lower_se = (transport * source_se).hypot(target_se);
    let upper_se = (source_se / transport).hypot(target_se);

    let gap = upper - lower;
    if gap > 0.0 {
        let worst_se = lower_se.max(upper_se);
        if worst_se > 0.1 * gap {
            return Err(Error::InsufficientSamples {
                se: worst_se,
                gap,
            });
        }
    }
    let sandwich_holds =
        target_ratio >= lower - 3.0 * lower_se && target_ratio <= upper + 3.0 * upper_se;
    let margin = (target_ratio - lower).min(upper - target_ratio);
    Ok(TransportReport {
        distortion: c_distortion,
        transport,
        source_ratio,
        target_ratio,
        lower,
        upper,
        source_se,
        target_se,
        margin,
        sandwich_holds,
        samples,
    })
}
