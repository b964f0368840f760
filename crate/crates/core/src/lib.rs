//! Self-supervised stereo toolkit built around disparity probability
//! volumes and matting-Laplacian label distillation.
//!
//! The crate covers the full single-image-depth training loop minus the
//! network itself: exponential disparity quantization, probability-volume
//! view synthesis and disparity extraction, closed-form matting distillation
//! with local mean scaling and left/right consistency masks, the stage-1/2
//! loss stack (photometric, perceptual, smoothness, deep-correlation,
//! distilled matting), neural positional encoding, and the standard depth
//! evaluation metrics.
//!
//! Per-pixel kernels are data-parallel (rayon) when the default `parallel`
//! feature is on and fall back to plain loops otherwise; either way results
//! are bitwise identical because reductions always use a fixed summation
//! order.

pub mod dispvol;
pub mod distill;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod losses;
pub mod math;
pub mod matting;
pub mod metrics;
pub mod npe;
pub mod par;
pub mod warp;

pub use error::{Error, Result};
pub use grid::{BitMask, FloatMap, Image};
