//! Dataset schema: annotated sequences, detections, and per-class evaluation
//! constants.
//!
//! Object poses are stored in the camera frame of their own frame; the
//! world-to-camera extrinsic carried by each [`Frame`] converts to world
//! coordinates when tracking metrics need a motion-stable frame.

use crate::geometry::{Box2D, Box3D, CameraModel};
use nalgebra::{Matrix3, Vector3};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The three coarse aircraft categories used for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectClass {
    Mav,
    Evtol,
    Helicopter,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Mav, ObjectClass::Evtol, ObjectClass::Helicopter];

    pub fn name(&self) -> &'static str {
        match self {
            ObjectClass::Mav => "MAV",
            ObjectClass::Evtol => "eVTOL",
            ObjectClass::Helicopter => "Helicopter",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MAV" => Ok(ObjectClass::Mav),
            "eVTOL" => Ok(ObjectClass::Evtol),
            "Helicopter" => Ok(ObjectClass::Helicopter),
            other => Err(UnknownClass(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown object class `{0}` (expected MAV, eVTOL, or Helicopter)")]
pub struct UnknownClass(pub String);

/// World-to-camera rigid transform: `x_cam = rotation · x_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsic {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl Extrinsic {
    pub fn identity() -> Self {
        Extrinsic { roll: 0.0, pitch: 0.0, yaw: 0.0, tx: 0.0, ty: 0.0, tz: 0.0 }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        crate::geometry::rotation_from_euler(self.roll, self.pitch, self.yaw)
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.tx, self.ty, self.tz)
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().transpose() * (p - self.translation())
    }
}

/// One annotated object instance in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub class_id: ObjectClass,
    /// Free-form fine-grained label (single token, preserved verbatim).
    pub fine_class: String,
    pub track_id: u64,
    pub box3d: Box3D,
    /// Derived image-plane box; `None` when the object does not project
    /// cleanly onto the image (behind camera or fully outside).
    pub box2d: Option<Box2D>,
}

/// One time step: camera parameters plus every annotated object.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_index: u64,
    pub timestamp: f64,
    pub camera: CameraModel,
    pub extrinsic: Extrinsic,
    pub objects: Vec<AnnotatedObject>,
}

/// An ordered, validated run of frames from a single coherent scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub sequence_id: String,
    pub fps: f64,
    pub frames: Vec<Frame>,
}

impl Sequence {
    pub fn frame(&self, frame_index: u64) -> Option<&Frame> {
        self.frames.iter().find(|f| f.frame_index == frame_index)
    }
}

/// A scored 3D detection aligned to a ground-truth frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: u64,
    pub class_id: ObjectClass,
    pub score: f64,
    pub box3d: Box3D,
}

/// Detections keyed by frame index; absent frames mean zero detections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    pub frames: BTreeMap<u64, Vec<Detection>>,
}

impl DetectionSet {
    pub fn push(&mut self, det: Detection) {
        self.frames.entry(det.frame_index).or_default().push(det);
    }

    pub fn detections(&self, frame_index: u64) -> &[Detection] {
        self.frames.get(&frame_index).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.values().all(Vec::is_empty)
    }
}

// ---------------------------------------------------------------------------
// Per-class evaluation constants
// ---------------------------------------------------------------------------

/// Evaluation constants for a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    /// AP association gates, meters, strictly increasing.
    pub ap_thresholds: [f64; 4],
    /// Normalization maximum for the translation error, meters.
    pub tp_max_translation: f64,
    /// Normalization maximum for the rotation error, degrees.
    pub tp_max_rotation: f64,
    /// Normalization maximum for the size error, relative fraction.
    pub tp_max_size: f64,
    /// Distance gate for tracking association, meters.
    pub mot_threshold: f64,
    /// Depth prediction range, meters.
    pub depth_range: f64,
}

/// Per-class evaluation constants for all three coarse categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassConfig {
    pub mav: ClassParams,
    pub evtol: ClassParams,
    pub helicopter: ClassParams,
}

impl ClassConfig {
    pub fn class(&self, class: ObjectClass) -> &ClassParams {
        match class {
            ObjectClass::Mav => &self.mav,
            ObjectClass::Evtol => &self.evtol,
            ObjectClass::Helicopter => &self.helicopter,
        }
    }

    pub fn class_mut(&mut self, class: ObjectClass) -> &mut ClassParams {
        match class {
            ObjectClass::Mav => &mut self.mav,
            ObjectClass::Evtol => &mut self.evtol,
            ObjectClass::Helicopter => &mut self.helicopter,
        }
    }

    /// Check the structural invariants: positive constants, strictly
    /// increasing AP thresholds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for class in ObjectClass::ALL {
            let p = self.class(class);
            let t = &p.ap_thresholds;
            if !(t[0] < t[1] && t[1] < t[2] && t[2] < t[3]) {
                return Err(ConfigError::ThresholdsNotIncreasing(class));
            }
            let all_positive = t[0] > 0.0
                && p.tp_max_translation > 0.0
                && p.tp_max_rotation > 0.0
                && p.tp_max_size > 0.0
                && p.mot_threshold > 0.0
                && p.depth_range > 0.0;
            if !all_positive {
                return Err(ConfigError::NonPositiveConstant(class));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("AP thresholds for {0} are not strictly increasing")]
    ThresholdsNotIncreasing(ObjectClass),
    #[error("non-positive constant in config for {0}")]
    NonPositiveConstant(ObjectClass),
}

/// The benchmark's published constants: AP gates [1,2,4,8] / [1.5,3,6,12] /
/// [3,6,12,24] m, translation maxima [4,6,12] m, rotation maxima 45°, size
/// maxima 0.5, MOT gates [4,6,12] m, depth ranges [100,150,300] m for MAV /
/// eVTOL / Helicopter.
pub fn default_class_config() -> ClassConfig {
    ClassConfig {
        mav: ClassParams {
            ap_thresholds: [1.0, 2.0, 4.0, 8.0],
            tp_max_translation: 4.0,
            tp_max_rotation: 45.0,
            tp_max_size: 0.5,
            mot_threshold: 4.0,
            depth_range: 100.0,
        },
        evtol: ClassParams {
            ap_thresholds: [1.5, 3.0, 6.0, 12.0],
            tp_max_translation: 6.0,
            tp_max_rotation: 45.0,
            tp_max_size: 0.5,
            mot_threshold: 6.0,
            depth_range: 150.0,
        },
        helicopter: ClassParams {
            ap_thresholds: [3.0, 6.0, 12.0, 24.0],
            tp_max_translation: 12.0,
            tp_max_rotation: 45.0,
            tp_max_size: 0.5,
            mot_threshold: 12.0,
            depth_range: 300.0,
        },
    }
}
