//! Conflict-aware budgeted greedy selection of equirectangular (ERP)
//! viewpoints over triangle-mesh scenes.
//!
//! The pipeline per scene:
//! 1. build or load a mesh ([`scene`]) and propose candidate positions on a
//!    grid, filtered by a 28-ray sanity check ([`candidates`]);
//! 2. pick an interior seed and greedily add the viewpoint with the best
//!    `G − λ·L` score, where `G` is the fraction of probe pixels not yet
//!    explained by the accumulated point cloud and `L` the fraction that
//!    contradict it ([`curator`]);
//! 3. export RGB, range depth, poses and per-step logs ([`io`]) and measure
//!    true surface coverage ([`eval`]).

pub mod candidates;
pub mod curator;
pub mod error;
pub mod eval;
pub mod geom;
pub mod io;
pub mod render;
pub mod scene;

pub use error::{Error, Result};

pub type Vec3 = geom::Vector3<f64>;
pub type Vec3f = geom::Vector3<f32>;
pub type QuatWC = geom::Quaternion<f64>;
pub type QuatWCf = geom::Quaternion<f32>;
pub type PoseWC = geom::Pose<f64>;
pub type PoseWCf = geom::Pose<f32>;
pub type Aabb = geom::Bounds<f64>;
