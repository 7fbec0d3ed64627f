//! Dynamics of complete non-classical exchanges (single-switch train
//! tracks): weight-driven Rauzy induction with exact unimodular transition
//! matrices, carried weight polytopes with uniform sampling, projective
//! Jacobian distortion, and seeded Monte Carlo experiments on
//! uniform-distortion recurrence, measure transport, and nested decay.

pub mod error;
pub mod exchange;
pub mod experiments;
pub mod induction;
pub mod matrix;
pub mod numeric;
pub mod polytope;
pub mod projective;
pub mod rng;
pub mod selector;
pub mod stopping;
pub mod weights;

pub use error::{Error, Result};
pub use exchange::{Alphabet, BranchId, NonclassicalExchange, Row};
pub use induction::{
    expand, rauzy_step, ExpansionTrace, MoveRecord, StepError, TraceEnd, TraceProvenance,
    INDUCTION_CONVENTION,
};
pub use matrix::TransitionMatrix;
pub use numeric::{NumericMode, Scalar};
pub use polytope::{carried_polytope, CarriedPolytope};
pub use projective::{
    apply_projective, colsum_bound_f64, distortion, jacobian, transport_constant, DistortionMode,
    DistortionReport,
};
pub use selector::{ResolvedSelector, SelectorKind, SelectorSpec};
pub use stopping::{stopping_decomposition, StoppingDecomposition};
pub use weights::WeightVector;

/// Result schema version stamped into every serialized document.
pub const SCHEMA_VERSION: u32 = 1;
