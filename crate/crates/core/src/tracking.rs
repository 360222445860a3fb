//! Constant-velocity Kalman filtering, the distance-gated multi-object
//! tracker baseline, and Kalman trajectory prediction with ADE/FDE.
//!
//! The filter state is position and velocity only; orientation and size pass
//! through from the latest matched detection, which keeps the filter linear
//! and matches the distance-only association the metrics use. Track
//! lifecycle follows the usual birth/confirm/death scheme (`min_hits`,
//! `max_age`); confirmed tracks are emitted retroactively for their
//! tentative frames so confirmation lag never shows up as missed frames.

use crate::assignment::{hungarian, CostMatrix};
use crate::data::{ClassConfig, Detection, ObjectClass};
use crate::geometry::Pose6DoF;
use crate::mot::{TrackSet, TrackedBox};
use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector3, Vector6};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("innovation covariance is numerically singular (condition {condition:e})")]
    SingularInnovation { condition: f64 },
    #[error("trajectory history needs at least 2 points, got {got}")]
    InsufficientHistory { got: usize },
    #[error("history timestamps must be strictly increasing")]
    NonIncreasingTimestamps,
    #[error("trajectory lengths differ: {got} vs {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Gaussian state over (x, y, z, vx, vy, vz).
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vector6<f64>,
    pub covariance: Matrix6<f64>,
}

impl KalmanState {
    /// State at a known position with zero velocity and diagonal uncertainty.
    pub fn at_position(position: &Vector3<f64>, position_var: f64, velocity_var: f64) -> Self {
        let mut mean = Vector6::zeros();
        mean.fixed_rows_mut::<3>(0).copy_from(position);
        let mut covariance = Matrix6::zeros();
        for i in 0..3 {
            covariance[(i, i)] = position_var;
            covariance[(i + 3, i + 3)] = velocity_var;
        }
        KalmanState { mean, covariance }
    }

    pub fn position(&self) -> Vector3<f64> {
        self.mean.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.mean.fixed_rows::<3>(3).into_owned()
    }
}

fn symmetrize(m: &Matrix6<f64>) -> Matrix6<f64> {
    (m + m.transpose()) * 0.5
}

/// Constant-velocity time update with discrete white-noise-acceleration
/// process noise of intensity `process_noise`.
pub fn kalman_predict(state: &KalmanState, dt: f64, process_noise: f64) -> KalmanState {
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    let q_pos = process_noise * dt.powi(4) / 4.0;
    let q_cross = process_noise * dt.powi(3) / 2.0;
    let q_vel = process_noise * dt.powi(2);
    let mut q = Matrix6::zeros();
    for i in 0..3 {
        q[(i, i)] = q_pos;
        q[(i, i + 3)] = q_cross;
        q[(i + 3, i)] = q_cross;
        q[(i + 3, i + 3)] = q_vel;
    }
    KalmanState {
        mean: f * state.mean,
        covariance: symmetrize(&(f * state.covariance * f.transpose() + q)),
    }
}

/// Position measurement update (Joseph-form covariance so PSD survives long
/// runs). Errors when the innovation covariance conditioning exceeds 1e12.
pub fn kalman_update(
    state: &KalmanState,
    observation: &Vector3<f64>,
    measurement_noise: f64,
) -> Result<KalmanState, TrackingError> {
    let r = Matrix3::identity() * measurement_noise;
    let s = state.covariance.fixed_view::<3, 3>(0, 0) + r;
    let eigen = nalgebra::SymmetricEigen::new(s);
    let max_eig = eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(TrackingError::SingularInnovation { condition });
    }
    let s_inv = s.try_inverse().ok_or(TrackingError::SingularInnovation { condition })?;

    let ph_t: Matrix6x3<f64> = state.covariance.fixed_columns::<3>(0).into_owned();
    let gain: Matrix6x3<f64> = ph_t * s_inv;
    let innovation = observation - state.position();
    let mean = state.mean + gain * innovation;

    // I - K·H with H = [I3 0]
    let mut ikh: Matrix6<f64> = Matrix6::identity();
    for row in 0..6 {
        for col in 0..3 {
            ikh[(row, col)] -= gain[(row, col)];
        }
    }
    let covariance = ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose();
    Ok(KalmanState { mean, covariance: symmetrize(&covariance) })
}

// ---------------------------------------------------------------------------
// Multi-object tracker
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerParams {
    /// Consecutive missed frames tolerated before a track dies.
    pub max_age: u32,
    /// Matched frames required before a track is emitted.
    pub min_hits: u32,
    pub process_noise: f64,
    pub measurement_noise: f64,
    pub initial_position_var: f64,
    pub initial_velocity_var: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            max_age: 2,
            min_hits: 3,
            process_noise: 1.0,
            measurement_noise: 0.01,
            initial_position_var: 1.0,
            initial_velocity_var: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone)]
struct Track {
    track_id: u64,
    class_id: ObjectClass,
    state: KalmanState,
    hits: u32,
    misses: u32,
    status: TrackStatus,
    /// Emissions buffered while tentative, flushed on confirmation.
    pending: Vec<(u64, TrackedBox)>,
}

/// One tracker input step: frame index, timestamp, detections.
#[derive(Debug, Clone)]
pub struct TrackerFrame {
    pub frame_index: u64,
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

/// Greedy-free gated assignment: optimal matching on distance with pairs
/// beyond the gate excluded, allowing either side to stay unmatched.
fn gated_assignment(
    tracks: &[Vector3<f64>],
    detections: &[Vector3<f64>],
    gate: f64,
) -> Vec<(usize, usize)> {
    if tracks.is_empty() || detections.is_empty() {
        return Vec::new();
    }
    // pad with per-row virtual columns so the assignment is always feasible
    // and leaving a track unmatched is representable
    let n = tracks.len();
    let m = detections.len();
    let mut costs = CostMatrix::forbidden(n, m + n);
    for (ti, t) in tracks.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let dist = (t - d).norm();
            if dist <= gate {
                costs.set(ti, di, dist).expect("finite distance");
            }
        }
        costs.set(ti, m + ti, 2.0 * gate + 1.0).expect("finite padding");
    }
    let matching = hungarian(&costs).expect("padded matrix always feasible");
    matching
        .pairs
        .into_iter()
        .filter(|&(_, c)| c < m)
        .collect()
}

/// Run the tracker over ordered frames. Output contains only matched frames
/// of emitted tracks (no coasted predictions), with positions from the
/// updated filter and orientation/size passed through from the matched
/// detection.
pub fn run_tracker(frames: &[TrackerFrame], params: &TrackerParams, config: &ClassConfig) -> TrackSet {
    let mut out = TrackSet::default();
    let mut tracks: Vec<Track> = Vec::new();
    let mut next_id: u64 = 1;
    let mut prev_timestamp: Option<f64> = None;

    for frame in frames {
        let dt = match prev_timestamp {
            Some(prev) if frame.timestamp > prev => frame.timestamp - prev,
            _ => 0.0,
        };
        prev_timestamp = Some(frame.timestamp);
        if dt > 0.0 {
            for track in tracks.iter_mut() {
                track.state = kalman_predict(&track.state, dt, params.process_noise);
            }
        }

        let mut matched_track = vec![false; tracks.len()];
        for class in ObjectClass::ALL {
            let det_indices: Vec<usize> = frame
                .detections
                .iter()
                .enumerate()
                .filter(|(_, d)| d.class_id == class)
                .map(|(i, _)| i)
                .collect();
            let track_indices: Vec<usize> = tracks
                .iter()
                .enumerate()
                .filter(|(_, t)| t.class_id == class)
                .map(|(i, _)| i)
                .collect();
            let gate = config.class(class).mot_threshold;
            let track_pos: Vec<Vector3<f64>> =
                track_indices.iter().map(|&i| tracks[i].state.position()).collect();
            let det_pos: Vec<Vector3<f64>> = det_indices
                .iter()
                .map(|&i| frame.detections[i].box3d.pose.position())
                .collect();

            let mut det_matched = vec![false; det_indices.len()];
            for (tr, dr) in gated_assignment(&track_pos, &det_pos, gate) {
                let track = &mut tracks[track_indices[tr]];
                let det = &frame.detections[det_indices[dr]];
                matched_track[track_indices[tr]] = true;
                det_matched[dr] = true;
                track.state = kalman_update(
                    &track.state,
                    &det.box3d.pose.position(),
                    params.measurement_noise,
                )
                .unwrap_or_else(|_| {
                    // degenerate covariance: restart the filter at the
                    // observation rather than losing the track
                    KalmanState::at_position(
                        &det.box3d.pose.position(),
                        params.initial_position_var,
                        params.initial_velocity_var,
                    )
                });
                track.hits += 1;
                track.misses = 0;
                let emitted = emit_box(track, det);
                if track.status == TrackStatus::Tentative && track.hits >= params.min_hits {
                    track.status = TrackStatus::Confirmed;
                }
                match track.status {
                    TrackStatus::Confirmed => {
                        for (fi, b) in track.pending.drain(..) {
                            out.frames.entry(fi).or_default().push(b);
                        }
                        out.frames.entry(frame.frame_index).or_default().push(emitted);
                    }
                    TrackStatus::Tentative => {
                        track.pending.push((frame.frame_index, emitted));
                    }
                    TrackStatus::Dead => unreachable!("dead tracks are dropped"),
                }
            }

            for (dr, &di) in det_indices.iter().enumerate() {
                if det_matched[dr] {
                    continue;
                }
                let det = &frame.detections[di];
                let state = KalmanState::at_position(
                    &det.box3d.pose.position(),
                    params.initial_position_var,
                    params.initial_velocity_var,
                );
                let mut track = Track {
                    track_id: next_id,
                    class_id: class,
                    state,
                    hits: 1,
                    misses: 0,
                    status: if params.min_hits <= 1 {
                        TrackStatus::Confirmed
                    } else {
                        TrackStatus::Tentative
                    },
                    pending: Vec::new(),
                };
                next_id += 1;
                let emitted = emit_box(&track, det);
                match track.status {
                    TrackStatus::Confirmed => {
                        out.frames.entry(frame.frame_index).or_default().push(emitted);
                    }
                    _ => track.pending.push((frame.frame_index, emitted)),
                }
                matched_track.push(true);
                tracks.push(track);
            }
        }

        for (i, track) in tracks.iter_mut().enumerate() {
            if !matched_track[i] {
                track.misses += 1;
                if track.misses > params.max_age {
                    track.status = TrackStatus::Dead;
                }
            }
        }
        tracks.retain(|t| t.status != TrackStatus::Dead);
    }

    for boxes in out.frames.values_mut() {
        boxes.sort_by_key(|b| b.track_id);
    }
    out
}

fn emit_box(track: &Track, det: &Detection) -> TrackedBox {
    let pos = track.state.position();
    let pose = Pose6DoF::new(
        pos.x,
        pos.y,
        pos.z,
        det.box3d.pose.roll,
        det.box3d.pose.pitch,
        det.box3d.pose.yaw,
    );
    TrackedBox {
        track_id: track.track_id,
        class_id: track.class_id,
        score: Some(det.score),
        box3d: crate::geometry::Box3D::new(pose, det.box3d.length, det.box3d.width, det.box3d.height),
    }
}

// ---------------------------------------------------------------------------
// Trajectory prediction
// ---------------------------------------------------------------------------

/// Fit a constant-velocity Kalman filter to a timed history (initialized
/// from the first two points, updated with the rest) and roll it forward
/// `horizon` steps at the trailing sample spacing.
pub fn predict_trajectory(
    history: &[(f64, Vector3<f64>)],
    horizon: usize,
) -> Result<Vec<Vector3<f64>>, TrackingError> {
    predict_trajectory_with(history, horizon, 1.0, 1e-4)
}

pub fn predict_trajectory_with(
    history: &[(f64, Vector3<f64>)],
    horizon: usize,
    process_noise: f64,
    measurement_noise: f64,
) -> Result<Vec<Vector3<f64>>, TrackingError> {
    if history.len() < 2 {
        return Err(TrackingError::InsufficientHistory { got: history.len() });
    }
    for pair in history.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(TrackingError::NonIncreasingTimestamps);
        }
    }
    let (t0, p0) = history[0];
    let (t1, p1) = history[1];
    let velocity = (p1 - p0) / (t1 - t0);
    let mut mean = Vector6::zeros();
    mean.fixed_rows_mut::<3>(0).copy_from(&p1);
    mean.fixed_rows_mut::<3>(3).copy_from(&velocity);
    let mut covariance = Matrix6::zeros();
    for i in 0..3 {
        covariance[(i, i)] = measurement_noise.max(1e-9);
        covariance[(i + 3, i + 3)] = 1.0;
    }
    let mut state = KalmanState { mean, covariance };
    let mut last_t = t1;
    for &(t, p) in &history[2..] {
        state = kalman_predict(&state, t - last_t, process_noise);
        state = kalman_update(&state, &p, measurement_noise)?;
        last_t = t;
    }
    let dt = last_t - history[history.len() - 2].0;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        state = kalman_predict(&state, dt, process_noise);
        out.push(state.position());
    }
    Ok(out)
}

/// Average and final displacement errors between aligned trajectories.
pub fn ade_fde(
    predicted: &[Vector3<f64>],
    ground_truth: &[Vector3<f64>],
) -> Result<(f64, f64), TrackingError> {
    if predicted.len() != ground_truth.len() || predicted.is_empty() {
        return Err(TrackingError::LengthMismatch {
            got: predicted.len(),
            expected: ground_truth.len(),
        });
    }
    let dists: Vec<f64> = predicted
        .iter()
        .zip(ground_truth)
        .map(|(a, b)| (a - b).norm())
        .collect();
    let ade = dists.iter().sum::<f64>() / dists.len() as f64;
    Ok((ade, *dists.last().expect("non-empty")))
}
