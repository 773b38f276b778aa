//! Triangle mesh improvement by maximizing hyperbolic volume over angle
//! structures.
//!
//! The pipeline reads a planar triangulation, records its vertex angle sums
//! and holonomies, finds the angle assignment of maximal volume energy that
//! reproduces them, and lays the triangles back out in the plane with the
//! boundary fixed.

pub mod angles;
pub mod cut;
pub mod energy;
pub mod error;
pub mod generate;
pub mod layout;
pub mod lobachevsky;
pub mod mesh;
pub mod optimizer;
pub mod pipeline;
pub mod quality;
pub mod sparse;

mod kkt;
mod linalg;

pub use error::{Error, Result};
