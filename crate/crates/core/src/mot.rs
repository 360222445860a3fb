//! Multi-object tracking metrics with distance-based association: the CLEAR
//! family (MOTA, MOTP, MODA, IDSW, Frag), identity metrics (IDF1 and its
//! counts), and HOTA (DetA, AssA) over the 0.05…0.95 similarity sweep.
//!
//! Association gates are per-class distances ([4, 6, 12] m by default).
//! When ground-truth extrinsics describe a moving camera, evaluation can run
//! in the world frame so camera motion does not masquerade as object motion.

use crate::assignment::{hungarian, CostMatrix};
use crate::data::{ClassConfig, ObjectClass, Sequence};
use crate::geometry::Box3D;
use nalgebra::Vector3;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MotError {
    #[error("no ground truth for the evaluated class")]
    EmptyGroundTruth,
    #[error("track frame {frame_index} does not exist in the ground-truth sequence")]
    FrameRangeMismatch { frame_index: u64 },
}

/// One tracked box: identity, class, optional confidence, full 3D box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedBox {
    pub track_id: u64,
    pub class_id: ObjectClass,
    pub score: Option<f64>,
    pub box3d: Box3D,
}

/// Tracker output (or ground truth viewed as tracks): per-frame lists of
/// tracked boxes, unique `track_id` per frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub frames: BTreeMap<u64, Vec<TrackedBox>>,
}

impl TrackSet {
    /// View a ground-truth sequence as a track set (identity = annotation
    /// track id, no score).
    pub fn from_sequence(seq: &Sequence) -> TrackSet {
        let mut set = TrackSet::default();
        for frame in &seq.frames {
            let boxes = frame
                .objects
                .iter()
                .map(|o| TrackedBox {
                    track_id: o.track_id,
                    class_id: o.class_id,
                    score: None,
                    box3d: o.box3d,
                })
                .collect();
            set.frames.insert(frame.frame_index, boxes);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.values().all(Vec::is_empty)
    }
}

/// Which frame positions are compared in. World requires extrinsics from the
/// ground-truth sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalFrame {
    Camera,
    #[default]
    World,
}

impl std::str::FromStr for EvalFrame {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "camera" => Ok(EvalFrame::Camera),
            "world" => Ok(EvalFrame::World),
            other => Err(format!("unknown frame `{other}` (expected camera or world)")),
        }
    }
}

/// One object in one frame as seen by the metrics: identity plus position.
pub type FrameObjects = Vec<(u64, Vector3<f64>)>;

// ---------------------------------------------------------------------------
// Per-frame association (CLEAR convention)
// ---------------------------------------------------------------------------

/// Match one frame. Pairs carried over from the previous frame persist while
/// both ids are present and still within the gate; everything left is
/// resolved by optimal assignment on 3D distance, pairs beyond the gate
/// forbidden. Returns `(gt index, pred index)` pairs.
pub fn frame_associate(
    gt: &FrameObjects,
    pred: &FrameObjects,
    threshold: f64,
    carry: &BTreeMap<u64, u64>,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];

    for (gi, (gid, gpos)) in gt.iter().enumerate() {
        if let Some(pid) = carry.get(gid) {
            if let Some(pi) = pred.iter().position(|(id, _)| id == pid) {
                if !pred_used[pi] && (gpos - pred[pi].1).norm() <= threshold {
                    pairs.push((gi, pi));
                    gt_used[gi] = true;
                    pred_used[pi] = true;
                }
            }
        }
    }

    let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let free_pred: Vec<usize> = (0..pred.len()).filter(|&i| !pred_used[i]).collect();
    if free_gt.is_empty() || free_pred.is_empty() {
        pairs.sort_unstable();
        return pairs;
    }
    let mut costs = CostMatrix::forbidden(free_gt.len(), free_pred.len());
    for (r, &gi) in free_gt.iter().enumerate() {
        for (c, &pi) in free_pred.iter().enumerate() {
            let d = (gt[gi].1 - pred[pi].1).norm();
            if d <= threshold {
                costs.set(r, c, d).expect("distances are finite and non-negative");
            }
        }
    }
    // a fully-forbidden assignment is fine here: it just means no new pairs
    if let Ok(matching) = hungarian(&costs) {
        for (r, c) in matching.pairs {
            if costs.get(r, c).is_some() {
                pairs.push((free_gt[r], free_pred[c]));
            }
        }
    } else {
        // complete matching impossible; fall back to the best partial by
        // padding with a virtual always-feasible column per row
        let n = free_gt.len();
        let m = free_pred.len();
        let mut padded = CostMatrix::forbidden(n, m + n);
        for r in 0..n {
            for c in 0..m {
                if let Some(v) = costs.get(r, c) {
                    padded.set(r, c, v).unwrap();
                }
            }
            padded.set(r, m + r, 2.0 * threshold + 1.0).unwrap();
        }
        let matching = hungarian(&padded).expect("padded matrix always feasible");
        for (r, c) in matching.pairs {
            if c < m && costs.get(r, c).is_some() {
                pairs.push((free_gt[r], free_pred[c]));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

// ---------------------------------------------------------------------------
// CLEAR
// ---------------------------------------------------------------------------

/// Raw CLEAR tallies; associative under [`ClearCounts::merge`] so sequences
/// can be evaluated independently and combined.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClearCounts {
    pub gt: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub idsw: usize,
    pub frag: usize,
    pub matches: usize,
    pub dist_sum: f64,
}

impl ClearCounts {
    pub fn merge(&mut self, other: &ClearCounts) {
        self.gt += other.gt;
        self.fp += other.fp;
        self.fn_count += other.fn_count;
        self.idsw += other.idsw;
        self.frag += other.frag;
        self.matches += other.matches;
        self.dist_sum += other.dist_sum;
    }

    pub fn mota(&self) -> f64 {
        100.0 * (1.0 - (self.fn_count + self.fp + self.idsw) as f64 / self.gt as f64)
    }

    pub fn moda(&self) -> f64 {
        100.0 * (1.0 - (self.fn_count + self.fp) as f64 / self.gt as f64)
    }

    pub fn motp(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.dist_sum / self.matches as f64
        }
    }
}

/// Run the CLEAR procedure over aligned frame lists.
pub fn clear_mot(
    gt_frames: &[FrameObjects],
    pred_frames: &[FrameObjects],
    threshold: f64,
) -> Result<ClearCounts, MotError> {
    assert_eq!(gt_frames.len(), pred_frames.len(), "frame ranges must align");
    let total_gt: usize = gt_frames.iter().map(Vec::len).sum();
    if total_gt == 0 {
        return Err(MotError::EmptyGroundTruth);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum TrackState {
        NeverMatched,
        Matched,
        InGap,
    }

    let mut counts = ClearCounts { gt: total_gt, ..Default::default() };
    let mut carry: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_pred: BTreeMap<u64, u64> = BTreeMap::new();
    let mut state: BTreeMap<u64, TrackState> = BTreeMap::new();

    for (gt, pred) in gt_frames.iter().zip(pred_frames) {
        let pairs = frame_associate(gt, pred, threshold, &carry);
        let mut gt_matched = vec![false; gt.len()];
        let mut pred_matched = vec![false; pred.len()];
        carry.clear();
        for &(gi, pi) in &pairs {
            gt_matched[gi] = true;
            pred_matched[pi] = true;
            let (gid, gpos) = gt[gi];
            let (pid, ppos) = pred[pi];
            counts.matches += 1;
            counts.dist_sum += (gpos - ppos).norm();
            if let Some(&prev) = last_pred.get(&gid) {
                if prev != pid {
                    counts.idsw += 1;
                }
            }
            last_pred.insert(gid, pid);
            carry.insert(gid, pid);
            let s = state.entry(gid).or_insert(TrackState::NeverMatched);
            if *s == TrackState::InGap {
                counts.frag += 1;
            }
            *s = TrackState::Matched;
        }
        for (gi, &(gid, _)) in gt.iter().enumerate() {
            if !gt_matched[gi] {
                counts.fn_count += 1;
                if state.get(&gid) == Some(&TrackState::Matched) {
                    state.insert(gid, TrackState::InGap);
                }
            }
        }
        counts.fp += pred_matched.iter().filter(|m| !**m).count();
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Identity metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdentityCounts {
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

impl IdentityCounts {
    pub fn merge(&mut self, other: &IdentityCounts) {
        self.idtp += other.idtp;
        self.idfp += other.idfp;
        self.idfn += other.idfn;
    }

    pub fn idf1(&self) -> f64 {
        let denom = 2 * self.idtp + self.idfp + self.idfn;
        if denom == 0 {
            0.0
        } else {
            100.0 * 2.0 * self.idtp as f64 / denom as f64
        }
    }
}

/// Trajectory-level optimal identity matching: pair ground-truth and
/// predicted trajectories to maximize gated per-frame agreements (IDTP);
/// everything not covered becomes IDFN / IDFP.
pub fn identity_metrics(
    gt_frames: &[FrameObjects],
    pred_frames: &[FrameObjects],
    threshold: f64,
) -> IdentityCounts {
    assert_eq!(gt_frames.len(), pred_frames.len(), "frame ranges must align");
    let total_gt: usize = gt_frames.iter().map(Vec::len).sum();
    let total_pred: usize = pred_frames.iter().map(Vec::len).sum();

    let mut gt_ids: Vec<u64> = gt_frames.iter().flatten().map(|(id, _)| *id).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    let mut pred_ids: Vec<u64> = pred_frames.iter().flatten().map(|(id, _)| *id).collect();
    pred_ids.sort_unstable();
    pred_ids.dedup();

    if gt_ids.is_empty() || pred_ids.is_empty() {
        return IdentityCounts { idtp: 0, idfp: total_pred, idfn: total_gt };
    }

    // overlap[i][j] = frames where trajectory i and j agree within the gate
    let mut overlap = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    for (gt, pred) in gt_frames.iter().zip(pred_frames) {
        for (gid, gpos) in gt {
            let gi = gt_ids.binary_search(gid).expect("id collected above");
            for (pid, ppos) in pred {
                if (gpos - ppos).norm() <= threshold {
                    let pj = pred_ids.binary_search(pid).expect("id collected above");
                    overlap[gi][pj] += 1;
                }
            }
        }
    }

    let max_overlap = gt_frames.len() as f64;
    let rows: Vec<Vec<f64>> = overlap
        .iter()
        .map(|row| row.iter().map(|&o| max_overlap - o as f64).collect())
        .collect();
    let costs = CostMatrix::from_rows(&rows).expect("overlap costs are finite");
    let matching = hungarian(&costs).expect("dense matrix always feasible");
    let idtp: usize = matching.pairs.iter().map(|&(r, c)| overlap[r][c]).sum();
    IdentityCounts { idtp, idfp: total_pred - idtp, idfn: total_gt - idtp }
}

// ---------------------------------------------------------------------------
// HOTA
// ---------------------------------------------------------------------------

pub const HOTA_ALPHAS: usize = 19;

/// Per-α tallies; `ass_sum` carries Σ A(c) over this slice's true positives
/// so cross-sequence merging stays associative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HotaAlphaCounts {
    pub tp: usize,
    pub fn_count: usize,
    pub fp: usize,
    pub ass_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotaCounts {
    pub alphas: [HotaAlphaCounts; HOTA_ALPHAS],
}

impl Default for HotaCounts {
    fn default() -> Self {
        HotaCounts { alphas: [HotaAlphaCounts::default(); HOTA_ALPHAS] }
    }
}

impl HotaCounts {
    pub fn merge(&mut self, other: &HotaCounts) {
        for (a, b) in self.alphas.iter_mut().zip(&other.alphas) {
            a.tp += b.tp;
            a.fn_count += b.fn_count;
            a.fp += b.fp;
            a.ass_sum += b.ass_sum;
        }
    }

    pub fn det_a(&self, idx: usize) -> f64 {
        let a = &self.alphas[idx];
        let denom = a.tp + a.fn_count + a.fp;
        if denom == 0 {
            0.0
        } else {
            a.tp as f64 / denom as f64
        }
    }

    pub fn ass_a(&self, idx: usize) -> f64 {
        let a = &self.alphas[idx];
        if a.tp == 0 {
            0.0
        } else {
            a.ass_sum / a.tp as f64
        }
    }

    /// (HOTA, DetA, AssA) as percentages averaged over the α sweep.
    pub fn scores(&self) -> (f64, f64, f64) {
        let n = HOTA_ALPHAS as f64;
        let mut hota = 0.0;
        let mut deta = 0.0;
        let mut assa = 0.0;
        for i in 0..HOTA_ALPHAS {
            let d = self.det_a(i);
            let a = self.ass_a(i);
            hota += (d * a).sqrt();
            deta += d;
            assa += a;
        }
        (100.0 * hota / n, 100.0 * deta / n, 100.0 * assa / n)
    }
}

/// Similarity thresholds 0.05, 0.10, …, 0.95.
pub fn hota_alpha(idx: usize) -> f64 {
    (idx + 1) as f64 * 0.05
}

/// HOTA over aligned frame lists. Similarity is `max(0, 1 − d/τ)`; per frame
/// and per α the matching maximizes total similarity among pairs with
/// `S ≥ α`.
pub fn hota(
    gt_frames: &[FrameObjects],
    pred_frames: &[FrameObjects],
    threshold: f64,
) -> HotaCounts {
    assert_eq!(gt_frames.len(), pred_frames.len(), "frame ranges must align");

    let mut gt_total: BTreeMap<u64, usize> = BTreeMap::new();
    let mut pred_total: BTreeMap<u64, usize> = BTreeMap::new();
    for frame in gt_frames {
        for (id, _) in frame {
            *gt_total.entry(*id).or_default() += 1;
        }
    }
    for frame in pred_frames {
        for (id, _) in frame {
            *pred_total.entry(*id).or_default() += 1;
        }
    }
    let total_gt: usize = gt_total.values().sum();
    let total_pred: usize = pred_total.values().sum();

    let mut counts = HotaCounts::default();
    for idx in 0..HOTA_ALPHAS {
        let alpha = hota_alpha(idx);
        let mut pair_count: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut tp = 0usize;
        for (gt, pred) in gt_frames.iter().zip(pred_frames) {
            if gt.is_empty() || pred.is_empty() {
                continue;
            }
            // maximize total similarity: minimize (1 - S), sub-α pairs get
            // weight zero and are filtered from the result afterwards
            let mut costs = CostMatrix::forbidden(gt.len(), pred.len());
            let mut sim = vec![vec![0.0; pred.len()]; gt.len()];
            for (gi, (_, gpos)) in gt.iter().enumerate() {
                for (pi, (_, ppos)) in pred.iter().enumerate() {
                    let s = (1.0 - (gpos - ppos).norm() / threshold).max(0.0);
                    sim[gi][pi] = s;
                    let w = if s >= alpha { s } else { 0.0 };
                    costs.set(gi, pi, 1.0 - w).expect("weights in [0,1]");
                }
            }
            let matching = hungarian(&costs).expect("dense matrix always feasible");
            for (gi, pi) in matching.pairs {
                if sim[gi][pi] >= alpha {
                    tp += 1;
                    *pair_count.entry((gt[gi].0, pred[pi].0)).or_default() += 1;
                }
            }
        }
        let mut ass_sum = 0.0;
        for (&(gid, pid), &pc) in &pair_count {
            let union = gt_total[&gid] + pred_total[&pid] - pc;
            ass_sum += pc as f64 * (pc as f64 / union as f64);
        }
        counts.alphas[idx] = HotaAlphaCounts {
            tp,
            fn_count: total_gt - tp,
            fp: total_pred - tp,
            ass_sum,
        };
    }
    counts
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

/// All tracking metrics for one class over one scope (sequence or aggregate).
#[derive(Debug, Clone, PartialEq)]
pub struct MotClassMetrics {
    pub class: ObjectClass,
    pub mota: f64,
    pub motp: f64,
    pub moda: f64,
    pub idsw: usize,
    pub frag: usize,
    pub idf1: f64,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub gt_count: usize,
    pub fp: usize,
    pub fn_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MotAccumulator {
    pub clear: ClearCounts,
    pub identity: IdentityCounts,
    pub hota: HotaCounts,
}

impl MotAccumulator {
    pub fn merge(&mut self, other: &MotAccumulator) {
        self.clear.merge(&other.clear);
        self.identity.merge(&other.identity);
        self.hota.merge(&other.hota);
    }

    pub fn metrics(&self, class: ObjectClass) -> MotClassMetrics {
        let (hota, deta, assa) = self.hota.scores();
        MotClassMetrics {
            class,
            mota: self.clear.mota(),
            motp: self.clear.motp(),
            moda: self.clear.moda(),
            idsw: self.clear.idsw,
            frag: self.clear.frag,
            idf1: self.identity.idf1(),
            idtp: self.identity.idtp,
            idfp: self.identity.idfp,
            idfn: self.identity.idfn,
            hota,
            deta,
            assa,
            gt_count: self.clear.gt,
            fp: self.clear.fp,
            fn_count: self.clear.fn_count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MotReport {
    /// One entry per (sequence, class) with ground truth for that class.
    pub per_sequence: Vec<(String, MotClassMetrics)>,
    /// Cross-sequence aggregate per class.
    pub aggregate: Vec<MotClassMetrics>,
}

/// Extract aligned per-frame (id, position) lists for one class, optionally
/// transforming camera-frame positions into the world frame via the
/// ground-truth extrinsics.
fn aligned_class_frames(
    seq: &Sequence,
    tracks: &TrackSet,
    class: ObjectClass,
    frame: EvalFrame,
) -> Result<(Vec<FrameObjects>, Vec<FrameObjects>), MotError> {
    for &frame_index in tracks.frames.keys() {
        if seq.frame(frame_index).is_none() {
            return Err(MotError::FrameRangeMismatch { frame_index });
        }
    }
    let mut gt_frames = Vec::with_capacity(seq.frames.len());
    let mut pred_frames = Vec::with_capacity(seq.frames.len());
    for f in &seq.frames {
        let to_eval = |p: &crate::geometry::Pose6DoF| -> Vector3<f64> {
            let cam_pos = Vector3::new(p.x, p.y, p.z);
            match frame {
                EvalFrame::Camera => cam_pos,
                EvalFrame::World => f.extrinsic.camera_to_world(&cam_pos),
            }
        };
        gt_frames.push(
            f.objects
                .iter()
                .filter(|o| o.class_id == class)
                .map(|o| (o.track_id, to_eval(&o.box3d.pose)))
                .collect(),
        );
        pred_frames.push(
            tracks
                .frames
                .get(&f.frame_index)
                .map(|boxes| {
                    boxes
                        .iter()
                        .filter(|t| t.class_id == class)
                        .map(|t| (t.track_id, to_eval(&t.box3d.pose)))
                        .collect()
                })
                .unwrap_or_default(),
        );
    }
    Ok((gt_frames, pred_frames))
}

/// Evaluate one class over one sequence into mergeable tallies.
pub fn evaluate_sequence_class(
    seq: &Sequence,
    tracks: &TrackSet,
    class: ObjectClass,
    threshold: f64,
    frame: EvalFrame,
) -> Result<Option<MotAccumulator>, MotError> {
    let (gt_frames, pred_frames) = aligned_class_frames(seq, tracks, class, frame)?;
    if gt_frames.iter().map(Vec::len).sum::<usize>() == 0 {
        return Ok(None);
    }
    Ok(Some(MotAccumulator {
        clear: clear_mot(&gt_frames, &pred_frames, threshold)?,
        identity: identity_metrics(&gt_frames, &pred_frames, threshold),
        hota: hota(&gt_frames, &pred_frames, threshold),
    }))
}

/// Full tracking evaluation across sequences and classes.
pub fn evaluate_mot(
    entries: &[(&Sequence, &TrackSet)],
    config: &ClassConfig,
    frame: EvalFrame,
    classes: Option<&[ObjectClass]>,
) -> Result<MotReport, MotError> {
    let mut per_sequence = Vec::new();
    let mut aggregate = Vec::new();
    let mut any_gt = false;
    for class in ObjectClass::ALL {
        if let Some(filter) = classes {
            if !filter.contains(&class) {
                continue;
            }
        }
        let threshold = config.class(class).mot_threshold;
        let mut total = MotAccumulator::default();
        let mut class_present = false;
        for (seq, tracks) in entries {
            match evaluate_sequence_class(seq, tracks, class, threshold, frame)? {
                Some(acc) => {
                    per_sequence.push((seq.sequence_id.clone(), acc.metrics(class)));
                    total.merge(&acc);
                    class_present = true;
                }
                None => continue,
            }
        }
        if class_present {
            aggregate.push(total.metrics(class));
            any_gt = true;
        }
    }
    if !any_gt {
        return Err(MotError::EmptyGroundTruth);
    }
    Ok(MotReport { per_sequence, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn at(id: u64, x: f64) -> (u64, Vector3<f64>) {
        (id, Vector3::new(x, 0.0, 30.0))
    }

    #[test]
    fn associate_identical_frames() {
        let gt = vec![at(1, 0.0), at(2, 20.0)];
        let pred = vec![at(10, 0.0), at(11, 20.0)];
        let pairs = frame_associate(&gt, &pred, 4.0, &BTreeMap::new());
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn associate_respects_gate() {
        // 13 m away with a 12 m Helicopter gate: no match
        let gt = vec![at(1, 0.0)];
        let pred = vec![at(10, 13.0)];
        assert!(frame_associate(&gt, &pred, 12.0, &BTreeMap::new()).is_empty());
    }

    #[test]
    fn associate_minimizes_total_distance() {
        // 2x2 enumeration: crossing pairs cost 1 + 1, parallel cost 3 + 3
        let gt = vec![at(1, 0.0), at(2, 4.0)];
        let pred = vec![at(10, 3.0), at(11, 1.0)];
        let pairs = frame_associate(&gt, &pred, 10.0, &BTreeMap::new());
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn associate_keeps_carried_pair() {
        // a newer, closer candidate must not steal a persisting match
        let gt = vec![at(1, 0.0)];
        let pred = vec![at(10, 0.5), at(11, 0.1)];
        let mut carry = BTreeMap::new();
        carry.insert(1u64, 10u64);
        let pairs = frame_associate(&gt, &pred, 4.0, &carry);
        assert_eq!(pairs, vec![(0, 0)]);
        // without carry the closer one wins
        let pairs = frame_associate(&gt, &pred, 4.0, &BTreeMap::new());
        assert_eq!(pairs, vec![(0, 1)]);
    }

    fn single_track_frames(n: usize) -> Vec<FrameObjects> {
        (0..n).map(|i| vec![at(1, i as f64)]).collect()
    }

    #[test]
    fn clear_perfect_tracking() {
        let gt = single_track_frames(10);
        let counts = clear_mot(&gt, &gt, 4.0).unwrap();
        assert_eq!(counts.mota(), 100.0);
        assert_eq!(counts.moda(), 100.0);
        assert_eq!(counts.motp(), 0.0);
        assert_eq!(counts.idsw, 0);
        assert_eq!(counts.frag, 0);
    }

    #[test]
    fn clear_counting_trace() {
        // 10-frame single gt, 2 missed frames, 1 extra FP, no switches
        let gt = single_track_frames(10);
        let mut pred: Vec<FrameObjects> = single_track_frames(10);
        pred[3].clear();
        pred[7].clear();
        pred[5].push(at(99, 500.0));
        let counts = clear_mot(&gt, &pred, 4.0).unwrap();
        assert_eq!(counts.fn_count, 2);
        assert_eq!(counts.fp, 1);
        assert_eq!(counts.idsw, 0);
        assert_abs_diff_eq!(counts.mota(), 70.0, epsilon = 1e-12);
        assert_abs_diff_eq!(counts.moda(), 70.0, epsilon = 1e-12);
        // two interruptions, both resumed
        assert_eq!(counts.frag, 2);
    }

    #[test]
    fn clear_negative_mota() {
        // FP + FN exceeding GT drives MOTA below zero
        let gt = single_track_frames(10);
        let pred: Vec<FrameObjects> = (0..10)
            .map(|i| vec![at(50, 500.0 + i as f64), at(51, 600.0 + i as f64)])
            .collect();
        let counts = clear_mot(&gt, &pred, 4.0).unwrap();
        assert_eq!((counts.fn_count, counts.fp), (10, 20));
        assert_abs_diff_eq!(counts.mota(), 100.0 * (1.0 - 30.0 / 10.0), epsilon = 1e-12);
        assert!(counts.mota() < 0.0);
    }

    #[test]
    fn clear_counts_identity_switch() {
        let gt = single_track_frames(10);
        let mut pred: Vec<FrameObjects> = single_track_frames(10);
        for frame in pred.iter_mut().skip(5) {
            frame[0].0 = 2; // label change mid-track
        }
        let counts = clear_mot(&gt, &pred, 4.0).unwrap();
        assert_eq!(counts.idsw, 1);
        assert_abs_diff_eq!(counts.mota(), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(counts.moda(), 100.0, epsilon = 1e-12);
        assert!(counts.moda() >= counts.mota());
    }

    #[test]
    fn clear_requires_ground_truth() {
        let gt: Vec<FrameObjects> = vec![vec![]; 5];
        let pred = single_track_frames(5);
        assert_eq!(clear_mot(&gt, &pred, 4.0), Err(MotError::EmptyGroundTruth));
    }

    #[test]
    fn identity_perfect_and_absent() {
        let gt = single_track_frames(10);
        let id = identity_metrics(&gt, &gt, 4.0);
        assert_eq!(id.idf1(), 100.0);
        assert_eq!((id.idfp, id.idfn), (0, 0));

        let none: Vec<FrameObjects> = vec![vec![]; 10];
        let id = identity_metrics(&gt, &none, 4.0);
        assert_eq!(id.idf1(), 0.0);
        assert_eq!(id.idfn, 10);
    }

    #[test]
    fn identity_split_track_keeps_half() {
        // one gt track covered half by each of two pred tracks
        let gt = single_track_frames(10);
        let pred: Vec<FrameObjects> = (0..10)
            .map(|i| vec![(if i < 5 { 100 } else { 200 }, Vector3::new(i as f64, 0.0, 30.0))])
            .collect();
        let id = identity_metrics(&gt, &pred, 4.0);
        assert_eq!(id.idtp, 5);
        assert_eq!(id.idfn, 5);
        assert_eq!(id.idfp, 5);
        assert_abs_diff_eq!(id.idf1(), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn hota_perfect_and_empty() {
        let gt = single_track_frames(10);
        let (h, d, a) = hota(&gt, &gt, 4.0).scores();
        assert_abs_diff_eq!(h, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a, 100.0, epsilon = 1e-9);

        let none: Vec<FrameObjects> = vec![vec![]; 10];
        let (h, d, a) = hota(&gt, &none, 4.0).scores();
        assert_eq!((h, d, a), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hota_split_track_closed_form() {
        // single gt track split into two equal pred tracks at exact
        // positions: DetA(α) = 1, A(c) = 5/10 for every TP, so AssA = 0.5
        // and HOTA = 100·sqrt(0.5)
        let gt = single_track_frames(10);
        let pred: Vec<FrameObjects> = (0..10)
            .map(|i| vec![(if i < 5 { 100 } else { 200 }, Vector3::new(i as f64, 0.0, 30.0))])
            .collect();
        let counts = hota(&gt, &pred, 4.0);
        let (h, d, a) = counts.scores();
        assert_abs_diff_eq!(d, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a, 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h, 100.0 * 0.5f64.sqrt(), epsilon = 1e-9);
        // per-α combination law
        for i in 0..HOTA_ALPHAS {
            let da = counts.det_a(i);
            let aa = counts.ass_a(i);
            assert_abs_diff_eq!((da * aa).sqrt().powi(2), da * aa, epsilon = 1e-9);
        }
    }

    #[test]
    fn hota_alpha_gates_similarity() {
        // distance 2 with gate 4 gives S = 0.5: matched for α ≤ 0.5 only
        let gt = single_track_frames(4);
        let pred: Vec<FrameObjects> = (0..4).map(|i| vec![at(9, i as f64 + 2.0)]).collect();
        let counts = hota(&gt, &pred, 4.0);
        for i in 0..HOTA_ALPHAS {
            let expect_tp = if hota_alpha(i) <= 0.5 { 4 } else { 0 };
            assert_eq!(counts.alphas[i].tp, expect_tp, "alpha {}", hota_alpha(i));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn moda_dominates_mota_and_metrics_invariant_under_relabeling(
            drops in proptest::collection::vec(0usize..10, 0..4),
            swap_at in 1usize..9,
            offset in 0u64..1000,
        ) {
            let gt = single_track_frames(10);
            let mut pred: Vec<FrameObjects> = single_track_frames(10);
            for frame in pred.iter_mut().skip(swap_at) {
                for obj in frame.iter_mut() {
                    obj.0 = 2;
                }
            }
            for &d in &drops {
                pred[d].clear();
            }
            let counts = clear_mot(&gt, &pred, 4.0).unwrap();
            prop_assert!(counts.moda() >= counts.mota() - 1e-12);
            prop_assert!(counts.motp() <= 4.0 + 1e-12);

            // bijective relabeling of prediction ids changes nothing
            let relabeled: Vec<FrameObjects> = pred
                .iter()
                .map(|f| f.iter().map(|&(id, p)| (id * 7 + offset, p)).collect())
                .collect();
            let c2 = clear_mot(&gt, &relabeled, 4.0).unwrap();
            prop_assert_eq!(counts, c2);
            let i1 = identity_metrics(&gt, &pred, 4.0);
            let i2 = identity_metrics(&gt, &relabeled, 4.0);
            prop_assert_eq!(i1, i2);
            let h1 = hota(&gt, &pred, 4.0).scores();
            let h2 = hota(&gt, &relabeled, 4.0).scores();
            prop_assert!((h1.0 - h2.0).abs() < 1e-12);
            prop_assert!((h1.1 - h2.1).abs() < 1e-12);
            prop_assert!((h1.2 - h2.2).abs() < 1e-12);
        }

        #[test]
        fn scores_stay_in_range(
            xs in proptest::collection::vec((0u64..4, -20.0..20.0f64), 0..12),
        ) {
            let gt = single_track_frames(6);
            let mut pred: Vec<FrameObjects> = vec![vec![]; 6];
            for (i, &(id, x)) in xs.iter().enumerate() {
                let f = i % 6;
                if !pred[f].iter().any(|(pid, _)| *pid == id) {
                    pred[f].push((id, Vector3::new(x, 0.0, 30.0)));
                }
            }
            let id = identity_metrics(&gt, &pred, 4.0);
            prop_assert!((0.0..=100.0).contains(&id.idf1()));
            let (h, d, a) = hota(&gt, &pred, 4.0).scores();
            prop_assert!((0.0..=100.0 + 1e-9).contains(&h));
            prop_assert!((0.0..=100.0 + 1e-9).contains(&d));
            prop_assert!((0.0..=100.0 + 1e-9).contains(&a));
            let counts = clear_mot(&gt, &pred, 4.0).unwrap();
            prop_assert!(counts.mota() <= 100.0 + 1e-9);
        }
    }
}
