//! Block-triangular boundary maps: expressions, normal forms, classification and
//! the homomorphisms attached to uniform groups.

pub mod blockmap;
pub mod classify;
pub mod diff;
pub mod expr;
pub mod fiber;
pub mod group;
pub mod homs;
pub mod sim;

pub use blockmap::BlockMap;
pub use classify::{check_triangularity, classify, Classification, MapClass, TriangularityReport};
pub use expr::{Certificate, FuncExpr};
pub use fiber::{rotation_rigidity_witness, FiberSimilarity, RigidityVerdict};
pub use group::{Generator, Letter};
pub use homs::{check_reciprocity, height_hom, rotation_hom, stretch_hom, BoundaryPair, ReciprocityReport};
pub use sim::{ASimMap, AlmostTranslation, BoundaryMap, SimMap};
