//! Projective linear maps of transition matrices and their distortion.
//!
//! `T_Q` sends a normalized weight vector `x` to `Qx / |Qx|₁`. Its Jacobian
//! on an m-dimensional carried polytope is `det(Q) / |Qx|₁^(m+1) =
//! 1 / |Qx|₁^(m+1)`; the exponent is supplied by the caller from the
//! polytope because the carried polytope usually has codimension ≥ 1 inside
//! the weight simplex. Distortion of a stage is the sup/inf ratio of the
//! Jacobian: evaluated exactly at the polytope vertices (the image norm is
//! linear on the polytope), or bounded soundly by the column-sum ratio,
//! which is what hot loops use.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::numeric::Scalar;
use crate::polytope::CarriedPolytope;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionMode {
    /// `(max column sum / min column sum)^(m+1)`: an upper bound for the
    /// true ratio, since `|Qx|₁` is a convex combination of column sums.
    ColsumBound,
    /// Evaluate `|Qx|₁` at the polytope vertices: the true sup/inf ratio.
    Exact,
}

#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub colsum_bound: f64,
    /// Present in [`DistortionMode::Exact`] reports.
    pub exact: Option<f64>,
    /// m + 1, with m the affine dimension of the polytope.
    pub exponent: u32,
    /// Point with the largest Jacobian (smallest image norm).
    pub witness_max: Option<WeightVector<f64>>,
    /// Point with the smallest Jacobian (largest image norm).
    pub witness_min: Option<WeightVector<f64>>,
}

impl DistortionReport {
    /// The value a stage is judged by: exact when available, else the bound.
    pub fn value(&self) -> f64 {
        self.exact.unwrap_or(self.colsum_bound)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "colsum_bound": self.colsum_bound,
            "exact": self.exact,
            "exponent": self.exponent,
            "witness_max": self.witness_max.as_ref().map(|w| w.to_json()),
            "witness_min": self.witness_min.as_ref().map(|w| w.to_json()),
        })
    }
}

/// `Qx / |Qx|₁`. The output is normalized and nonnegative.
pub fn apply_projective<S: Scalar>(
    q: &TransitionMatrix,
    x: &WeightVector<S>,
) -> Result<WeightVector<S>> {
    let norm = image_norm(q, x)?;
    let n = q.size();
    let mut values = vec![S::zero(); n];
    for (i, out) in values.iter_mut().enumerate() {
        let mut acc = S::zero();
        for j in 0..n {
            let e = q.entry(i, j);
            if e.is_zero() {
                continue;
            }
            acc = acc + S::from_bigint(e) * x.values()[j].clone();
        }
        *out = acc / norm.clone();
    }
    WeightVector::new(x.alphabet().clone(), values)
}

/// `1 / |Qx|₁^exponent` (the determinant is 1 by construction).
pub fn jacobian<S: Scalar>(
    q: &TransitionMatrix,
    x: &WeightVector<S>,
    exponent: u32,
) -> Result<S> {
    let norm = image_norm(q, x)?;
    Ok(S::one() / pow_scalar(norm, exponent))
}

fn pow_scalar<S: Scalar>(base: S, exponent: u32) -> S {
    let mut out = S::one();
    for _ in 0..exponent {
        out = out * base.clone();
    }
    out
}

fn image_norm<S: Scalar>(q: &TransitionMatrix, x: &WeightVector<S>) -> Result<S> {
    if q.size() != x.len() {
        return Err(Error::DimensionMismatch {
            left: q.size(),
            right: x.len(),
        });
    }
    // |Qx|₁ = Σ_j (column sum)_j x_j for nonnegative inputs.
    let mut norm = S::zero();
    for (j, v) in x.values().iter().enumerate() {
        norm = norm + S::from_bigint(&q.column_sum(j)) * v.clone();
    }
    if norm.is_zero() {
        let support: Vec<usize> = x
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, _)| j)
            .collect();
        let zero_cols = q.zero_columns();
        let columns = support
            .iter()
            .filter(|j| zero_cols.contains(j))
            .map(|&j| x.alphabet().label(crate::exchange::BranchId(j)).to_owned())
            .collect();
        return Err(Error::ZeroImage { columns });
    }
    Ok(norm)
}

/// Distortion of `Q` over a polytope, with the Jacobian exponent taken from
/// that polytope's affine dimension.
pub fn distortion(
    q: &TransitionMatrix,
    poly: &CarriedPolytope,
    mode: DistortionMode,
) -> Result<DistortionReport> {
    distortion_with_exponent(q, poly, poly.exponent(), mode)
}

/// Same, with an explicit exponent: stage scans use the dimension of the
/// stage's target polytope while evaluating over the domain vertices.
pub(crate) fn distortion_with_exponent(
    q: &TransitionMatrix,
    poly: &CarriedPolytope,
    exponent: u32,
    mode: DistortionMode,
) -> Result<DistortionReport> {
    if q.size() != poly.exchange().size() {
        return Err(Error::DimensionMismatch {
            left: q.size(),
            right: poly.exchange().size(),
        });
    }
    let colsum_bound = colsum_bound_f64(q, exponent);
    match mode {
        DistortionMode::ColsumBound => {
            let sums = q.column_sums();
            let arg_max = argmin_bigint(&sums); // max Jacobian at min column sum
            let arg_min = argmax_bigint(&sums);
            Ok(DistortionReport {
                colsum_bound,
                exact: None,
                exponent,
                witness_max: Some(corner(poly, arg_max)),
                witness_min: Some(corner(poly, arg_min)),
            })
        }
        DistortionMode::Exact => {
            if poly.vertices().is_empty() {
                return Err(Error::EmptyPolytope);
            }
            let norms: Vec<BigRational> = poly
                .vertices()
                .iter()
                .map(|v| vertex_norm(q, v))
                .collect();
            let (lo_idx, hi_idx) = extremes(&norms);
            let ratio = norms[hi_idx].clone() / norms[lo_idx].clone();
            let exact = Scalar::to_f64(&rational_pow(&ratio, exponent));
            Ok(DistortionReport {
                colsum_bound,
                exact: Some(exact),
                exponent,
                witness_max: Some(poly.vertices()[lo_idx].convert()),
                witness_min: Some(poly.vertices()[hi_idx].convert()),
            })
        }
    }
}

/// Exact image norm at a rational vertex.
pub(crate) fn vertex_norm(q: &TransitionMatrix, v: &WeightVector<BigRational>) -> BigRational {
    let mut norm = BigRational::zero();
    for (j, x) in v.values().iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        norm += BigRational::from_integer(q.column_sum(j)) * x.clone();
    }
    norm
}

fn extremes(norms: &[BigRational]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, v) in norms.iter().enumerate() {
        if *v < norms[lo] {
            lo = i;
        }
        if *v > norms[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

fn corner(poly: &CarriedPolytope, j: usize) -> WeightVector<f64> {
    let n = poly.exchange().size();
    let mut values = vec![0.0; n];
    values[j] = 1.0;
    WeightVector::new(poly.exchange().alphabet().clone(), values).expect("sized")
}

fn argmin_bigint(v: &[BigInt]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn argmax_bigint(v: &[BigInt]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn rational_pow(r: &BigRational, exponent: u32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..exponent {
        out *= r.clone();
    }
    out
}

/// `(max column sum / min column sum)^exponent` as a double.
pub fn colsum_bound_f64(q: &TransitionMatrix, exponent: u32) -> f64 {
    let sums = q.column_sums();
    let lo = &sums[argmin_bigint(&sums)];
    let hi = &sums[argmax_bigint(&sums)];
    if lo.is_zero() {
        return f64::INFINITY;
    }
    let ratio = BigRational::new(hi.clone(), lo.clone());
    Scalar::to_f64(&rational_pow(&ratio, exponent))
}

/// Exact test `(max column sum / min column sum)^exponent <= c`, comparing
/// integers so stage detection never depends on float rounding.
pub(crate) fn colsum_bound_within(q: &TransitionMatrix, exponent: u32, c: f64) -> bool {
    let sums = q.column_sums();
    let lo = sums[argmin_bigint(&sums)].clone();
    let hi = sums[argmax_bigint(&sums)].clone();
    if lo.is_zero() {
        return false;
    }
    let Some(c) = BigRational::from_float(c) else {
        return false;
    };
    if c.is_negative() {
        return false;
    }
    // hi^e / lo^e <= c_num / c_den  <=>  hi^e * c_den <= c_num * lo^e
    hi.pow(exponent) * c.denom() <= c.numer() * lo.pow(exponent)
}

/// Eq.-style transport constant: a C-distorted stage changes relative
/// probabilities by at most the factor `c = 1/C`.
pub fn transport_constant(c_distortion: f64) -> Result<f64> {
    if !(c_distortion > 1.0) {
        return Err(Error::Domain(format!(
            "distortion constant must exceed 1, got {c_distortion}"
        )));
    }
    Ok(1.0 / c_distortion)
}
