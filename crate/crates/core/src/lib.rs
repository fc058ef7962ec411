//! Laboratory for injective piecewise contractions of `[0,1)`.
//!
//! A [`BranchSystem`] of contractions with pairwise disjoint images, a
//! [`ParameterPoint`] of cuts and a [`BoundaryAssignment`] define a
//! [`PiecewiseContraction`] `f`. Its expanding left-inverse
//! [`ExpandingMap`] `g` drives the backward-orbit construction of an
//! invariant quasi-partition, from which every periodic attractor of `f`
//! is located exactly.

pub mod attractors;
pub mod branch;
pub mod campaign;
pub mod ergodic;
pub mod error;
pub mod expanding;
pub mod interval;
pub mod orbits;
pub mod pc;
pub mod presets;
pub mod quasi_partition;
pub mod scalar;

pub use branch::{BranchDescriptor, BranchKind, BranchRecord, BranchSystem};
pub use error::{Error, Result};
pub use expanding::{ExpandingMap, Piece, PieceKind};
pub use interval::{Interval, IntervalRecord, IntervalSet, Location};
pub use pc::{BoundaryAssignment, ParameterPoint, PiecewiseContraction, Side};
pub use scalar::{Backend, Float, Rational, Scalar, FLOAT_EQ_TOLERANCE};
