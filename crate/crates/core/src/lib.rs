//! Artist-controllable head synthesis without neural training.
//!
//! The crate covers the full geometry path of a head-synthesis pipeline:
//!
//! * [`mesh`]: shared-topology triangle meshes, OBJ/PLY I/O, normalization.
//! * [`model`]: a linear (PCA) shape model with demographic offsets,
//!   seeded sampling, projection and attribute interpolation.
//! * [`modelfile`]: the versioned binary model file.
//! * [`shapemap`]: cylindrical unwrapping and barycentric rasterization of
//!   vertex positions into dense position maps, and their inverse.
//! * [`color`]: semantic coloring maps (per-region medians) and the affine
//!   region recoloring used for albedo editing.
//! * [`metrics`]: diversity, specificity, the matching threshold, uniqueness,
//!   novelty and performance over sets of generated and real shapes.
//! * [`synth`]: a procedural, labeled head dataset used as a stand-in for
//!   scanned data.
//!
//! Heavy inner loops (distance matrices, rasterization, dataset synthesis)
//! run on rayon when the `parallel` feature is enabled; every such entry
//! point takes an [`Execution`] so the sequential path stays reachable.

// `!(x >= 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color;
pub mod error;
mod exec;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod modelfile;
pub mod pngio;
pub mod rng;
pub mod shapemap;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
