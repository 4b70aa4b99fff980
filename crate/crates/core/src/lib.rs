//! Boundary quasimetrics, block-triangular map algebra and conjugation pipelines for
//! negatively curved solvable Lie groups `G_M = R ⋉_M R^n`.
//!
//! Points of the parabolic boundary are [`space::BlockPoint`]s graded by
//! [`space::SpectralData`]. Maps between them are block-triangular
//! ([`mapalg::BlockMap`]) and the library supplies tools to classify them, to build
//! invariant conformal structures and conjugators for uniform groups, and to run the
//! root-extraction algorithm for almost translations.

pub mod config;
pub mod conformal;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod mapalg;
pub mod nilpotent;
pub mod quasimetric;
pub mod report;
pub mod run;
pub mod sampling;
pub mod solvgroup;
pub mod space;
pub mod tukia;

pub use error::{Error, Result};
pub use space::{BlockPoint, PointMap, SpectralData};
