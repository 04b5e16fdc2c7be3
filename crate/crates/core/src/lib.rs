//! Point cloud autoencoding by gradual deformation of a unit sphere.
//!
//! A permutation-invariant set encoder summarizes a target cloud into a latent
//! code. Residual deformation blocks conditioned on that code push points
//! sampled on the unit sphere onto the target surface (forward path) and
//! target points back onto the sphere (backward path). Training combines a
//! bidirectional Chamfer loss with a neighborhood-preserving deformation loss
//! computed over k-nearest-neighbor sets fixed on the source cloud.
//!
//! Because the forward path is a per-point map, a mesh of the reconstruction
//! is obtained by deforming the vertices of an icosphere and keeping its
//! connectivity.
//!
//! The crate is organized as:
//!
//! - [`geometry`]: sampling, icosphere, kNN and point-triangle distance
//! - [`autodiff`]: a small define-by-run reverse-mode engine over `f64` arrays
//! - [`model`]: encoder and residual deformation networks
//! - [`loss`]: Chamfer, deformation loss and their weighted total
//! - [`metrics`]: D2F, coverage and self-intersection counting
//! - [`training`]: Adam, configuration and the training loop
//! - [`io`]: OBJ/XYZ, manifests, procedural shapes and checkpoints

pub mod autodiff;
pub mod error;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod training;

pub use autodiff::{Graph, Tensor, Var};
pub use error::{Error, Result};
pub use geometry::{NeighborhoodMap, PointCloud, TriangleMesh, Vec3};
pub use loss::LossWeights;
pub use metrics::EvalReport;
pub use model::{LatentCode, ModelConfig, ModelParams};
pub use training::{OptimizerState, TrainConfig, TrainState};
