//! Evaluation toolkit for low-altitude aerial 3D perception.
//!
//! The crate bundles everything needed to score 3D aircraft perception at
//! desk scale:
//!
//! - [`geometry`] — 6-DoF poses, 3D boxes, rotation codecs, pinhole projection.
//! - [`data`] / [`io`] — the dataset schema, class constants, and the
//!   line-delimited sequence / detection / track file formats.
//! - [`assignment`] — greedy score-ordered matching and optimal linear
//!   assignment, shared by every metric.
//! - [`detection`] — the ADS detection metric (distance-gated AP,
//!   true-positive errors, recall, normalized aggregation) plus ADD/ADD-S
//!   pose scoring.
//! - [`mot`] — CLEAR, identity, and HOTA tracking metrics with
//!   distance-based association.
//! - [`tracking`] — a constant-velocity Kalman multi-object tracker and the
//!   Kalman trajectory-prediction baseline with ADE/FDE.
//! - [`monolaa`] — focal-length unification and the class-specific depth
//!   bin/residual codec.
//! - [`synth`] — a deterministic scenario generator and detection corruptor
//!   whose event ledger makes expected metric values computable in closed
//!   form.
//! - [`report`] — plain-text and CSV report serialization.

pub use nalgebra;

pub mod assignment;
pub mod data;
pub mod detection;
pub mod geometry;
pub mod io;
pub mod monolaa;
pub mod mot;
pub mod report;
pub mod synth;
pub mod tracking;

pub use data::{AnnotatedObject, ClassConfig, Detection, DetectionSet, Frame, ObjectClass, Sequence};
pub use geometry::{Box2D, Box3D, CameraModel, Pose6DoF};
