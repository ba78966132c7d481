//! Recovering the geometry and topology of an unknown planar environment
//! from pairwise encounter events between mobile agents.

pub mod classifier;
pub mod diagram_metrics;
pub mod distance;
pub mod embedding;
pub mod encounter;
pub mod error;
pub mod geodesic;
pub mod geometry;
pub mod io;
pub mod persistence;
pub mod pipeline;
pub mod sim;
pub mod subsample;
pub mod svg;
pub mod util;

pub use distance::DistanceMatrix;
pub use error::{Error, Result};
pub use geometry::{Domain, Point, Polygon};
