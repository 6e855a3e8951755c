//! Connected allocation of planar area to a finite set of point centers.
//!
//! The construction runs in four stages:
//!
//! 1. [`pointproc`] samples (or reads) the centers.
//! 2. [`msf`] builds their Euclidean minimum spanning tree and cuts the
//!    convex hull along it into faces.
//! 3. [`conformal`] maps every face onto the upper half-plane with the
//!    geodesic zipper algorithm; tree vertices become boundary centers, one
//!    per sector.
//! 4. [`allocation`] runs the site-optimal Gale-Shapley allocation of grid
//!    cells to centers in the half-plane, and [`pipeline`] glues the stages
//!    together and pulls the territories back to the plane.

pub mod allocation;
pub mod conformal;
mod error;
pub mod geom;
pub mod msf;
pub mod pipeline;
pub mod pointproc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
