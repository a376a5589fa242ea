//! Numerical toolkit for the desk-scale geometry of branched multivalued
//! fields: the permutation-matching metric on unordered Q-tuples, smoothed
//! frequency functionals and their monotonicity identities, Jones beta-2
//! mean flatness, quantitative spine predicates, good/bad-ball covering
//! algorithms with frequency-drop bookkeeping, Reifenberg-style packing
//! checks, and Minkowski-content estimation of the Q-point set.

pub mod covering;
pub mod field;
pub mod frequency;
pub mod geom;
pub mod meanflat;
pub mod multifield;
pub mod quadrature;
pub mod weight;

mod assign;

pub use covering::{Ball, BallTag, CoveringResult, FrequencyOracle, InterpTable};
pub use field::{AnalyticField, PlanarBranch};
pub use frequency::{FrequencyReport, IdentityResiduals};
pub use meanflat::{BetaResult, DiscreteMeasure, PlaneFit};
pub use multifield::{ClusterSplit, MultiPoint};
pub use quadrature::QuadratureScheme;
pub use weight::WeightProfile;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched multiplicities, dimensions, or otherwise malformed inputs.
    #[error("input error: {0}")]
    Input(String),

    /// A file or inline document failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// Gradient requested on the branch set, where the field is only Hoelder.
    #[error("singular point: gradient undefined at the branch set")]
    SingularPoint,

    /// The height functional vanished on the annulus; the frequency is undefined.
    #[error("degenerate height: H = {h:.3e} (D = {d:.3e})")]
    DegenerateHeight { d: f64, h: f64 },

    /// Statistics of a measure with no mass.
    #[error("zero-mass measure")]
    ZeroMass,

    /// A covering audit found uncovered points.
    #[error("coverage violation: {0} points uncovered")]
    Coverage(usize),

    /// A structural guarantee of a covering construction failed to hold.
    #[error("internal logic error: {0}")]
    InternalLogic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
