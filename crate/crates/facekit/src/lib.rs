//! RGB-D face recognition toolkit for recorded sequences.
//!
//! The crate is organized around the stages of the recognition pipeline:
//!
//! * [`imaging`] — raster types, PPM/PGM file I/O, grayscale conversion,
//!   cropping and deterministic resizing.
//! * [`registration`] — pinhole mapping between depth and color cameras,
//!   mask reprojection and depth-space face ROI extraction.
//! * [`detection`] — the face-detection contract plus the shipped
//!   annotation-backed detector.
//! * [`tracking`] — nearest-center association and the per-identity
//!   online sample database.
//! * [`features`] — LBP codes and block histograms, with a serial engine
//!   and a bit-identical data-parallel engine.
//! * [`classify`] — linear SVM training and one-vs-rest prediction.
//! * [`synthdata`] — deterministic synthetic RGB-D sequence generator.
//! * [`pipeline`] — dataset layout, enrollment, recognition, evaluation
//!   and benchmarking; the `facekit` binary is a thin CLI over this.

pub mod classify;
pub mod detection;
pub mod features;
pub mod imaging;
pub mod pipeline;
pub mod registration;
pub mod synthdata;
pub mod tracking;

pub use imaging::{ColorFrame, DepthFrame, GrayFrame, Rect};
