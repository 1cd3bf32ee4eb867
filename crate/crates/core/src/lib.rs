//! Ground filtering for terrestrial laser scanner point clouds.
//!
//! Two filters share the same geometry and indexing layers:
//!
//! * [`normal_filter`]: per-point PCA normals on K-nearest neighbourhoods,
//!   an angle/shape test, a Naïve Bayes neighbourhood vote and a RANSAC
//!   ground-plane check.
//! * [`voxel_filter`]: flat voxels by z-range, a height cut, 26-adjacency
//!   seed growth, a plane fitted to the largest segment and a neighbour
//!   majority vote.
//!
//! [`eval`] scores label sets against ground truth and times pipelines;
//! [`io`] and [`scene`] read, write and synthesize labelled clouds.

pub mod error;
pub mod eval;
pub mod geom;
pub mod io;
pub mod normal_filter;
pub mod scene;
pub mod spatial;
pub mod voxel_filter;

mod pipeline;

pub use error::{Error, Result};
pub use geom::{Label, Plane, Point3, PointCloud};
pub use pipeline::{ClassificationResult, StageSnapshot};
