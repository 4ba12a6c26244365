//! Omnidirectional Gaussian splatting on the Yin-Yang grid.
//!
//! The crate covers the non-learned parts of a feed-forward omnidirectional
//! splatting pipeline: splitting an equirectangular panorama into the two
//! congruent Yin and Yang patches, sphere-sweep cost volumes that warp
//! features across both patches, pixel-aligned Gaussian clouds, a tiled CPU
//! rasterizer with a two-pass Yin-Yang mode, colour refinement, and the
//! PSNR/SSIM metrics used to score renders. [`scene_synth`] produces the
//! synthetic scenes with exact ground truth that the test-suite leans on.

pub mod cli;
pub mod decompose;
pub mod error;
pub mod gaussians;
pub mod image;
pub mod io_formats;
pub mod metrics;
pub mod pipeline;
pub mod pose;
pub mod rasterizer;
pub mod scene_synth;
pub mod sphere_geom;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussians::{Gaussian3D, GaussianCloud};
pub use image::FieldImage;
pub use pose::Pose;
pub use sphere_geom::{Direction, GridFamily, GridSpec, Spherical};
