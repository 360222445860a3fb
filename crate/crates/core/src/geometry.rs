//! Geometric primitives: 6-DoF poses, 3D boxes, rotation codecs, and the
//! pinhole camera model.
//!
//! Conventions used throughout the crate:
//!
//! - Camera frame is x-right, y-down, z-forward (optical axis).
//! - Euler angles compose intrinsically yaw → pitch → roll, i.e.
//!   `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
//! - Angles are stored in radians, wrapped to `[-π, π)`; metric code converts
//!   to degrees only at reporting time.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// A point (or a box corner) sits at or behind the image plane.
    #[error("point behind camera (z = {z})")]
    BehindCamera { z: f64 },
    /// A projected box does not intersect the image at all.
    #[error("projected box lies fully outside the image")]
    FullyOutside,
    /// A rotation encoding does not satisfy its unit-norm invariant.
    #[error("rotation encoding off unit norm by {deviation:e}")]
    NonUnitEncoding { deviation: f64 },
    /// An encoding carried the wrong number of values for its mode.
    #[error("rotation encoding has {got} values, expected {expected}")]
    EncodingLength { got: usize, expected: usize },
}

/// Wrap an angle to `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = (theta + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    // rem_euclid can land exactly on +π for inputs like -π - 2^-53
    if a >= std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A 6-DoF pose in the camera frame: translation in meters, orientation as
/// roll/pitch/yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6DoF {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose6DoF {
    /// Build a pose, wrapping all angles to `[-π, π)`.
    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            roll: wrap_angle(roll),
            pitch: wrap_angle(pitch),
            yaw: wrap_angle(yaw),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_from_euler(self.roll, self.pitch, self.yaw)
    }
}

/// An oriented 3D box: pose plus body-frame extents (length along x, width
/// along y, height along z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub pose: Pose6DoF,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Box3D {
    pub fn new(pose: Pose6DoF, length: f64, width: f64, height: f64) -> Self {
        Self { pose, length, width, height }
    }

    /// Body diagonal, used as the ADD/ADD-S reference diameter.
    pub fn diameter(&self) -> f64 {
        (self.length * self.length + self.width * self.width + self.height * self.height).sqrt()
    }
}

/// Pinhole camera intrinsics plus image size, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: f64,
    pub image_height: f64,
}

/// Axis-aligned 2D box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl Box2D {
    pub fn area(&self) -> f64 {
        (self.u_max - self.u_min).max(0.0) * (self.v_max - self.v_min).max(0.0)
    }
}

/// Rotation parameterization used by the codec ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Six values: `[sin, cos]` per Euler angle, roll/pitch/yaw order.
    SinCos,
    /// Four values `[w, x, y, z]`, unit norm, scalar part non-negative.
    Quaternion,
}

/// An encoded rotation; `values` length and norm invariants depend on `mode`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationEncoding {
    pub mode: RotationMode,
    pub values: Vec<f64>,
}

/// Euler angles recovered from a rotation matrix. `gimbal_lock` is raised
/// when |pitch| is within 1e-6 of π/2; roll is then zeroed and yaw absorbs
/// the remaining in-plane rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub gimbal_lock: bool,
}

// ---------------------------------------------------------------------------
// Rotations
// ---------------------------------------------------------------------------

/// Rotation matrix for intrinsic yaw → pitch → roll composition:
/// `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
pub fn rotation_from_euler(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Recover roll/pitch/yaw from a rotation matrix, pitch in `[-π/2, π/2]`.
pub fn euler_from_rotation(r: &Matrix3<f64>) -> EulerDecomposition {
    let sp = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    let half_pi = std::f64::consts::FRAC_PI_2;
    if half_pi - pitch.abs() < 1e-6 {
        // cos(pitch) ~ 0: roll and yaw act about the same axis. Zero roll and
        // put the whole in-plane rotation into yaw.
        let yaw = if pitch > 0.0 {
            (-r[(0, 1)]).atan2(r[(0, 2)])
        } else {
            (-r[(0, 1)]).atan2(-r[(0, 2)])
        };
        return EulerDecomposition { roll: 0.0, pitch, yaw, gimbal_lock: true };
    }
    EulerDecomposition {
        roll: r[(2, 1)].atan2(r[(2, 2)]),
        pitch,
        yaw: r[(1, 0)].atan2(r[(0, 0)]),
        gimbal_lock: false,
    }
}

/// Minimal angular difference under π-symmetry:
/// `min(|θ − θ'|, |θ − (θ' + π)|)` with both differences wrapped. The result
/// lands in `[0, π/2]`.
pub fn minimal_angle_diff(theta: f64, theta_prime: f64) -> f64 {
    let d0 = wrap_angle(theta - theta_prime).abs();
    let d1 = wrap_angle(theta - theta_prime - std::f64::consts::PI).abs();
    d0.min(d1)
}

// ---------------------------------------------------------------------------
// Boxes and projection
// ---------------------------------------------------------------------------

/// The eight corners of a box in the camera frame: rotation applied to
/// `(±l/2, ±w/2, ±h/2)` plus the center.
pub fn box_corners(b: &Box3D) -> [Vector3<f64>; 8] {
    let rot = b.pose.rotation();
    let center = b.pose.position();
    let (hl, hw, hh) = (b.length / 2.0, b.width / 2.0, b.height / 2.0);
    let mut corners = [Vector3::zeros(); 8];
    for (i, corner) in corners.iter_mut().enumerate() {
        let sx = if i & 1 == 0 { -hl } else { hl };
        let sy = if i & 2 == 0 { -hw } else { hw };
        let sz = if i & 4 == 0 { -hh } else { hh };
        *corner = center + rot * Vector3::new(sx, sy, sz);
    }
    corners
}

/// Project a camera-frame point to pixel coordinates.
pub fn project_point(cam: &CameraModel, p: &Vector3<f64>) -> Result<(f64, f64), GeometryError> {
    if p.z <= 0.0 {
        return Err(GeometryError::BehindCamera { z: p.z });
    }
    Ok((cam.cx + cam.fx * p.x / p.z, cam.cy + cam.fy * p.y / p.z))
}

/// Project a box to the axis-aligned hull of its eight corners, clipped to
/// the image bounds.
pub fn project_box(cam: &CameraModel, b: &Box3D) -> Result<Box2D, GeometryError> {
    let mut u_min = f64::INFINITY;
    let mut v_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for corner in box_corners(b) {
        let (u, v) = project_point(cam, &corner)?;
        u_min = u_min.min(u);
        v_min = v_min.min(v);
        u_max = u_max.max(u);
        v_max = v_max.max(v);
    }
    if u_max < 0.0 || v_max < 0.0 || u_min > cam.image_width || v_min > cam.image_height {
        return Err(GeometryError::FullyOutside);
    }
    Ok(Box2D {
        u_min: u_min.max(0.0),
        v_min: v_min.max(0.0),
        u_max: u_max.min(cam.image_width),
        v_max: v_max.min(cam.image_height),
    })
}

/// Intersection-over-union of two axis-aligned pixel boxes.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let iw = (a.u_max.min(b.u_max) - a.u_min.max(b.u_min)).max(0.0);
    let ih = (a.v_max.min(b.v_max) - a.v_min.max(b.v_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// 3D Euclidean distance between two pose centers.
pub fn center_distance(a: &Pose6DoF, b: &Pose6DoF) -> f64 {
    (a.position() - b.position()).norm()
}

// ---------------------------------------------------------------------------
// Rotation codecs
// ---------------------------------------------------------------------------

/// Encode a pose's orientation in the requested parameterization.
pub fn encode_rotation(pose: &Pose6DoF, mode: RotationMode) -> RotationEncoding {
    match mode {
        RotationMode::SinCos => {
            let mut values = Vec::with_capacity(6);
            for angle in [pose.roll, pose.pitch, pose.yaw] {
                values.push(angle.sin());
                values.push(angle.cos());
            }
            RotationEncoding { mode, values }
        }
        RotationMode::Quaternion => {
            let q = quaternion_from_euler(pose.roll, pose.pitch, pose.yaw);
            RotationEncoding { mode, values: q.to_vec() }
        }
    }
}

/// Decode an encoding back to `(roll, pitch, yaw)`. Quaternion decode
/// resolves the q/−q double cover to the representative with non-negative
/// scalar part.
pub fn decode_rotation(enc: &RotationEncoding) -> Result<(f64, f64, f64), GeometryError> {
    match enc.mode {
        RotationMode::SinCos => {
            if enc.values.len() != 6 {
                return Err(GeometryError::EncodingLength { got: enc.values.len(), expected: 6 });
            }
            let mut angles = [0.0; 3];
            for (i, angle) in angles.iter_mut().enumerate() {
                let (s, c) = (enc.values[2 * i], enc.values[2 * i + 1]);
                let deviation = (s * s + c * c - 1.0).abs();
                if deviation > 1e-6 {
                    return Err(GeometryError::NonUnitEncoding { deviation });
                }
                *angle = s.atan2(c);
            }
            Ok((angles[0], angles[1], angles[2]))
        }
        RotationMode::Quaternion => {
            if enc.values.len() != 4 {
                return Err(GeometryError::EncodingLength { got: enc.values.len(), expected: 4 });
            }
            let q = [enc.values[0], enc.values[1], enc.values[2], enc.values[3]];
            let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            let deviation = (norm - 1.0).abs();
            if deviation > 1e-6 {
                return Err(GeometryError::NonUnitEncoding { deviation });
            }
            let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
            let q = [sign * q[0] / norm, sign * q[1] / norm, sign * q[2] / norm, sign * q[3] / norm];
            let rot = rotation_from_quaternion(&q);
            let e = euler_from_rotation(&rot);
            Ok((e.roll, e.pitch, e.yaw))
        }
    }
}

fn quaternion_from_euler(roll: f64, pitch: f64, yaw: f64) -> [f64; 4] {
    let (sr, cr) = (roll / 2.0).sin_cos();
    let (sp, cp) = (pitch / 2.0).sin_cos();
    let (sy, cy) = (yaw / 2.0).sin_cos();
    // Rz(yaw)·Ry(pitch)·Rx(roll) as quaternion product qz * qy * qx
    let w = cy * cp * cr + sy * sp * sr;
    let x = cy * cp * sr - sy * sp * cr;
    let y = cy * sp * cr + sy * cp * sr;
    let z = sy * cp * cr - cy * sp * sr;
    if w < 0.0 {
        [-w, -x, -y, -z]
    } else {
        [w, x, y, z]
    }
}

fn rotation_from_quaternion(q: &[f64; 4]) -> Matrix3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn rotation_identity() {
        let r = rotation_from_euler(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(r, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn yaw_quarter_turn_maps_x_to_y() {
        let r = rotation_from_euler(0.0, 0.0, FRAC_PI_2);
        let mapped = r * Vector3::x();
        assert_abs_diff_eq!(mapped, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn euler_roundtrip() {
        let r = rotation_from_euler(0.3, -0.2, 1.1);
        let e = euler_from_rotation(&r);
        assert!(!e.gimbal_lock);
        assert_abs_diff_eq!(e.roll, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(e.pitch, -0.2, epsilon = 1e-9);
        assert_abs_diff_eq!(e.yaw, 1.1, epsilon = 1e-9);
    }

    #[test]
    fn euler_identity_matrix() {
        let e = euler_from_rotation(&Matrix3::identity());
        assert_eq!((e.roll, e.pitch, e.yaw, e.gimbal_lock), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn gimbal_lock_flagged_and_matrix_recovered() {
        // Degenerate matrix built directly from pitch = π/2 with nonzero roll
        // and yaw; decomposition zeroes roll but must reproduce the matrix.
        let r = rotation_from_euler(0.4, FRAC_PI_2, -0.7);
        let e = euler_from_rotation(&r);
        assert!(e.gimbal_lock);
        assert_eq!(e.roll, 0.0);
        let rebuilt = rotation_from_euler(e.roll, e.pitch, e.yaw);
        assert_abs_diff_eq!(rebuilt, r, epsilon = 1e-9);

        let r = rotation_from_euler(-0.2, -FRAC_PI_2, 0.9);
        let e = euler_from_rotation(&r);
        assert!(e.gimbal_lock);
        let rebuilt = rotation_from_euler(e.roll, e.pitch, e.yaw);
        assert_abs_diff_eq!(rebuilt, r, epsilon = 1e-9);
    }

    #[test]
    fn minimal_angle_diff_cases() {
        assert_eq!(minimal_angle_diff(0.0, 0.0), 0.0);
        // π-symmetry: opposite headings are equivalent
        assert_abs_diff_eq!(minimal_angle_diff(0.0, PI), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(minimal_angle_diff(deg(10.0), deg(350.0)), deg(20.0), epsilon = 1e-12);
    }

    #[test]
    fn box_corners_axis_aligned_unit_cube() {
        let b = Box3D::new(Pose6DoF::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 1.0, 1.0, 1.0);
        let corners = box_corners(&b);
        for c in &corners {
            assert_abs_diff_eq!(c.x.abs(), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(c.y.abs(), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(c.z.abs(), 0.5, epsilon = 1e-15);
        }
        // yawing a cube by π/2 permutes the same corner set
        let yawed = Box3D::new(Pose6DoF::new(0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2), 1.0, 1.0, 1.0);
        let mut a: Vec<_> = corners.iter().map(quantized).collect();
        let mut b: Vec<_> = box_corners(&yawed).iter().map(quantized).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    fn quantized(v: &Vector3<f64>) -> [i64; 3] {
        [(v.x * 1e9).round() as i64, (v.y * 1e9).round() as i64, (v.z * 1e9).round() as i64]
    }

    #[test]
    fn yawed_box_swaps_extents() {
        let b = Box3D::new(Pose6DoF::new(0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2), 2.0, 1.0, 1.0);
        let corners = box_corners(&b);
        let x_extent = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max)
            - corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        let y_extent = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max)
            - corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(x_extent, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y_extent, 2.0, epsilon = 1e-12);
    }

    fn test_camera() -> CameraModel {
        // 1280x720 with 90° FOV: fx = fy = 640
        CameraModel { fx: 640.0, fy: 640.0, cx: 640.0, cy: 360.0, image_width: 1280.0, image_height: 720.0 }
    }

    #[test]
    fn project_point_cases() {
        let cam = test_camera();
        assert_eq!(project_point(&cam, &Vector3::new(0.0, 0.0, 10.0)).unwrap(), (640.0, 360.0));
        let (u, v) = project_point(&cam, &Vector3::new(1.0, 0.0, 10.0)).unwrap();
        assert_abs_diff_eq!(u, 704.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 360.0, epsilon = 1e-12);
        assert_eq!(
            project_point(&cam, &Vector3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::BehindCamera { z: -1.0 })
        );
    }

    #[test]
    fn project_box_centered_cube() {
        let cam = test_camera();
        let b = Box3D::new(Pose6DoF::new(0.0, 0.0, 10.0, 0.0, 0.0, 0.0), 1.0, 1.0, 1.0);
        let bb = project_box(&cam, &b).unwrap();
        // symmetric about the principal point
        assert_abs_diff_eq!(bb.u_min + bb.u_max, 2.0 * cam.cx, epsilon = 1e-9);
        assert_abs_diff_eq!(bb.v_min + bb.v_max, 2.0 * cam.cy, epsilon = 1e-9);
        // hull spans the near face: 2 * 640 * 0.5 / 9.5
        let expected = 2.0 * 640.0 * 0.5 / 9.5;
        assert_abs_diff_eq!(bb.u_max - bb.u_min, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(bb.u_max - bb.u_min, bb.v_max - bb.v_min, epsilon = 1e-9);
    }

    #[test]
    fn project_box_fully_outside() {
        let cam = test_camera();
        // far off to the left of the frustum
        let b = Box3D::new(Pose6DoF::new(-100.0, 0.0, 5.0, 0.0, 0.0, 0.0), 1.0, 1.0, 1.0);
        assert_eq!(project_box(&cam, &b), Err(GeometryError::FullyOutside));
    }

    #[test]
    fn project_box_behind_camera() {
        let cam = test_camera();
        let b = Box3D::new(Pose6DoF::new(0.0, 0.0, 0.2, 0.0, 0.0, 0.0), 1.0, 1.0, 1.0);
        assert!(matches!(project_box(&cam, &b), Err(GeometryError::BehindCamera { .. })));
    }

    #[test]
    fn iou_2d_cases() {
        let unit = Box2D { u_min: 0.0, v_min: 0.0, u_max: 1.0, v_max: 1.0 };
        assert_eq!(iou_2d(&unit, &unit), 1.0);
        let disjoint = Box2D { u_min: 5.0, v_min: 5.0, u_max: 6.0, v_max: 6.0 };
        assert_eq!(iou_2d(&unit, &disjoint), 0.0);
        let shifted = Box2D { u_min: 0.5, v_min: 0.0, u_max: 1.5, v_max: 1.0 };
        assert_abs_diff_eq!(iou_2d(&unit, &shifted), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn center_distance_pythagoras() {
        let a = Pose6DoF::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let b = Pose6DoF::new(3.0, 4.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(center_distance(&a, &a), 0.0);
        assert_abs_diff_eq!(center_distance(&a, &b), 5.0, epsilon = 1e-12);
        assert_eq!(center_distance(&a, &b), center_distance(&b, &a));
    }

    #[test]
    fn encode_zero_rotation() {
        let p = Pose6DoF::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let sc = encode_rotation(&p, RotationMode::SinCos);
        assert_eq!(sc.values, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let q = encode_rotation(&p, RotationMode::Quaternion);
        assert_eq!(q.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn decode_rejects_off_norm() {
        let enc = RotationEncoding { mode: RotationMode::SinCos, values: vec![0.5, 1.0, 0.0, 1.0, 0.0, 1.0] };
        assert!(matches!(decode_rotation(&enc), Err(GeometryError::NonUnitEncoding { .. })));
        let enc = RotationEncoding { mode: RotationMode::Quaternion, values: vec![1.1, 0.0, 0.0, 0.0] };
        assert!(matches!(decode_rotation(&enc), Err(GeometryError::NonUnitEncoding { .. })));
    }

    proptest! {
        #[test]
        fn rotation_always_orthonormal(
            roll in -PI..PI, pitch in -PI..PI, yaw in -PI..PI,
        ) {
            let r = rotation_from_euler(roll, pitch, yaw);
            let should_be_identity = r.transpose() * r;
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((should_be_identity[(i, j)] - expected).abs() < 1e-12);
                }
            }
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn euler_roundtrip_principal_pitch(
            roll in -PI..PI, pitch in -1.5..1.5, yaw in -PI..PI,
        ) {
            let e = euler_from_rotation(&rotation_from_euler(roll, pitch, yaw));
            prop_assert!((e.roll - roll).abs() < 1e-9);
            prop_assert!((e.pitch - pitch).abs() < 1e-9);
            prop_assert!((e.yaw - yaw).abs() < 1e-9);
        }

        #[test]
        fn minimal_angle_diff_properties(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let d = minimal_angle_diff(a, b);
            prop_assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&d));
            prop_assert!((d - minimal_angle_diff(b, a)).abs() < 1e-12);
            prop_assert!(minimal_angle_diff(a, a + PI) < 1e-9);
        }

        #[test]
        fn box_corner_centroid_is_center(
            x in -50.0..50.0, y in -50.0..50.0, z in 1.0..100.0,
            roll in -PI..PI, pitch in -1.5..1.5, yaw in -PI..PI,
            l in 0.1..20.0, w in 0.1..20.0, h in 0.1..20.0,
        ) {
            let b = Box3D::new(Pose6DoF::new(x, y, z, roll, pitch, yaw), l, w, h);
            let centroid: Vector3<f64> = box_corners(&b).iter().sum::<Vector3<f64>>() / 8.0;
            prop_assert!((centroid - b.pose.position()).norm() < 1e-12);
        }

        #[test]
        fn iou_monotone_under_separation(shift in 0.0..3.0f64, extra in 0.0..3.0f64) {
            let a = Box2D { u_min: 0.0, v_min: 0.0, u_max: 1.0, v_max: 1.0 };
            let near = Box2D { u_min: shift, v_min: 0.0, u_max: shift + 1.0, v_max: 1.0 };
            let far = Box2D { u_min: shift + extra, v_min: 0.0, u_max: shift + extra + 1.0, v_max: 1.0 };
            prop_assert!(iou_2d(&a, &far) <= iou_2d(&a, &near) + 1e-12);
        }

        #[test]
        fn project_box_is_hull_of_projected_corners(
            x in -5.0..5.0, y in -3.0..3.0, z in 5.0..80.0,
            roll in -PI..PI, pitch in -1.5..1.5, yaw in -PI..PI,
            l in 0.2..4.0, w in 0.2..4.0, h in 0.2..4.0,
        ) {
            let cam = CameraModel { fx: 640.0, fy: 640.0, cx: 640.0, cy: 360.0, image_width: 1280.0, image_height: 720.0 };
            let b = Box3D::new(Pose6DoF::new(x, y, z, roll, pitch, yaw), l, w, h);
            if let Ok(bb) = project_box(&cam, &b) {
                let mut u_min = f64::INFINITY;
                let mut v_min = f64::INFINITY;
                let mut u_max = f64::NEG_INFINITY;
                let mut v_max = f64::NEG_INFINITY;
                for c in box_corners(&b) {
                    let (u, v) = project_point(&cam, &c).unwrap();
                    u_min = u_min.min(u); v_min = v_min.min(v);
                    u_max = u_max.max(u); v_max = v_max.max(v);
                }
                prop_assert_eq!(bb.u_min, u_min.max(0.0));
                prop_assert_eq!(bb.v_min, v_min.max(0.0));
                prop_assert_eq!(bb.u_max, u_max.min(cam.image_width));
                prop_assert_eq!(bb.v_max, v_max.min(cam.image_height));
            }
        }

        #[test]
        fn codec_roundtrip_both_modes(
            roll in -PI..PI, pitch in -1.55..1.55, yaw in -PI..PI,
        ) {
            let p = Pose6DoF::new(0.0, 0.0, 1.0, roll, pitch, yaw);
            for mode in [RotationMode::SinCos, RotationMode::Quaternion] {
                let (r, pi, y) = decode_rotation(&encode_rotation(&p, mode)).unwrap();
                prop_assert!((r - p.roll).abs() < 1e-9);
                prop_assert!((pi - p.pitch).abs() < 1e-9);
                prop_assert!((y - p.yaw).abs() < 1e-9);
            }
        }
    }
}
