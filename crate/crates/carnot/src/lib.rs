//! Carnot groups in exponential coordinates of the first kind.
//!
//! The crate builds stratified nilpotent Lie algebras (free, quotient, or
//! from explicit bracket tables), runs the group law through exact rational
//! commutator expansions, integrates horizontal curves, and decides or
//! probes rigidity, pliability, and Whitney-extension questions about them.
//!
//! Exact computations run over [`Rat`]; numeric paths use `f64`. Most of the
//! API is generic over the [`Scalar`] trait, with `Q`/`F` aliases for the
//! two concrete instances.

pub mod algebra;
pub mod curve;
pub mod error;
pub mod group;
pub mod linalg;
pub mod lyndon;
pub mod presets;
pub mod lifted;
pub mod pliability;
pub mod rigidity;
pub mod scalar;
pub mod tensor;
pub mod whitney;

pub use algebra::{BracketTable, Covector, LieVector, StratifiedAlgebra};
pub use error::{Error, Result};
pub use group::Group;
pub use presets::{preset, resolve_group, PresetGroup};
pub use scalar::{Rat, Scalar};

/// Exact-rational element coordinates.
pub type LieVectorQ = LieVector<Rat>;
/// Floating-point element coordinates.
pub type LieVectorF = LieVector<f64>;
pub type CovectorQ = Covector<Rat>;
pub type CovectorF = Covector<f64>;
