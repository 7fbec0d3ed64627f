//! Stopping decompositions: covering an expansion by C-uniformly distorted
//! stages.
//!
//! A stage qualifies when its accumulated matrix has all columns strictly
//! positive (so it maps the full carried polytope strictly inside the
//! target cone) and its column-sum distortion bound does not exceed C. The
//! bound is conservative — a stage declared C-distorted truly is — and the
//! threshold comparison is exact integer arithmetic, never float rounding.

use crate::exchange::BranchId;
use crate::induction::ExpansionTrace;
use crate::matrix::TransitionMatrix;
use crate::numeric::Scalar;
use crate::polytope::CarriedPolytope;
use crate::projective::{
    colsum_bound_within, distortion_with_exponent, DistortionMode, DistortionReport,
};

#[derive(Debug, Clone)]
pub struct StoppingDecomposition {
    pub c: f64,
    /// Fence posts `[0, j1, ..., jk]`; stage `i` spans positions
    /// `stop_indices[i] .. stop_indices[i+1]`.
    pub stop_indices: Vec<usize>,
    /// One matrix per consecutive index pair.
    pub stage_matrices: Vec<TransitionMatrix>,
    /// One report per stage (exact value filled from the stage's domain
    /// polytope vertices).
    pub distortion_reports: Vec<DistortionReport>,
    /// Trailing step range never covered by a qualifying stage.
    pub remainder: Option<(usize, usize)>,
}

impl StoppingDecomposition {
    pub fn stages(&self) -> usize {
        self.stage_matrices.len()
    }

    /// Position of the first stop, when any stage was found.
    pub fn first_stop(&self) -> Option<usize> {
        self.stop_indices.get(1).copied()
    }

    pub fn covered_len(&self) -> usize {
        *self.stop_indices.last().expect("fence post 0 always present")
    }
}

/// Incremental scanner for the stage criterion, shared by the greedy
/// decomposition and by first-stop harvesting in the experiments.
pub(crate) struct StageScan {
    product: TransitionMatrix,
    exponent: u32,
    c: f64,
    len: usize,
}

impl StageScan {
    pub(crate) fn new(n: usize, exponent: u32, c: f64) -> Self {
        StageScan {
            product: TransitionMatrix::identity(n),
            exponent,
            c,
            len: 0,
        }
    }

    /// Extends the stage by one move; true when the stage now qualifies.
    pub(crate) fn push(&mut self, winner: BranchId, loser: BranchId) -> bool {
        self.product.push_elementary(winner, loser);
        self.len += 1;
        self.product.columns_strictly_positive()
            && colsum_bound_within(&self.product, self.exponent, self.c)
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn into_product(self) -> TransitionMatrix {
        self.product
    }
}

/// Greedy scan: from each start position take the smallest end position
/// whose stage qualifies at C, then continue from there. A trailing segment
/// that never qualifies is reported as the remainder; an empty decomposition
/// with a full remainder is a legal output (e.g. for C = 1).
pub fn stopping_decomposition<S: Scalar>(
    trace: &ExpansionTrace<S>,
    c: f64,
) -> StoppingDecomposition {
    let n = trace.initial_exchange().size();
    let mut stop_indices = vec![0usize];
    let mut stage_matrices = Vec::new();
    let mut distortion_reports = Vec::new();

    let mut start = 0usize;
    while start < trace.len() {
        let target_poly =
            CarriedPolytope::of(trace.exchange_at(start)).expect("valid exchanges carry weight");
        let exponent = target_poly.exponent();
        let mut scan = StageScan::new(n, exponent, c);
        let mut stop: Option<usize> = None;
        for j in start..trace.len() {
            let record = &trace.steps()[j];
            if scan.push(record.winner, record.loser) {
                stop = Some(j + 1);
                break;
            }
        }
        match stop {
            Some(j) => {
                let stage = scan.into_product();
                let domain_poly = CarriedPolytope::of(trace.exchange_at(j))
                    .expect("valid exchanges carry weight");
                let report =
                    distortion_with_exponent(&stage, &domain_poly, exponent, DistortionMode::Exact)
                        .expect("stage matrices match the alphabet");
                stop_indices.push(j);
                stage_matrices.push(stage);
                distortion_reports.push(report);
                start = j;
            }
            None => break,
        }
    }

    let covered = *stop_indices.last().expect("fence post 0");
    let remainder = if covered < trace.len() {
        Some((covered, trace.len()))
    } else {
        None
    };
    StoppingDecomposition {
        c,
        stop_indices,
        stage_matrices,
        distortion_reports,
        remainder,
    }
}
