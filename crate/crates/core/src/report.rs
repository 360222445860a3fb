//! Plain-text and CSV rendering for metric reports. All numbers are written
//! with fixed precision so identical results produce identical bytes.

use crate::detection::{AdsReport, PoseClassResult, PrCurveRecord};
use crate::mot::{MotClassMetrics, MotReport};
use std::fmt::Write as _;

fn val(x: f64) -> String {
    format!("{x:.4}")
}

/// Threshold label without a trailing `.0` (used in file names and headers).
pub fn threshold_label(threshold: f64) -> String {
    if threshold.fract() == 0.0 {
        format!("{}", threshold as i64)
    } else {
        format!("{threshold}")
    }
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

pub fn render_detection_report(report: &AdsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[detection]");
    for c in &report.per_class {
        let _ = writeln!(out, "[class {}]", c.class);
        for (ap, gate) in c.ap_per_threshold.iter().zip(["1st", "2nd", "3rd", "4th"]) {
            let _ = writeln!(out, "ap_{gate} = {}", val(100.0 * ap));
        }
        let _ = writeln!(out, "ap = {}", val(c.class_ap));
        let _ = writeln!(out, "ate = {}", val(c.ate));
        let _ = writeln!(out, "aoe = {}", val(c.aoe));
        let _ = writeln!(out, "ase = {}", val(c.ase));
        let _ = writeln!(out, "dr = {}", val(c.dr));
        let _ = writeln!(out, "n_tp = {}", c.n_tp);
    }
    let _ = writeln!(out, "[summary]");
    let _ = writeln!(out, "mAP = {}", val(report.map));
    let _ = writeln!(out, "mATE = {}", val(report.mate));
    let _ = writeln!(out, "mAOE = {}", val(report.maoe));
    let _ = writeln!(out, "mASE = {}", val(report.mase));
    let _ = writeln!(out, "mDR = {}", val(report.mdr));
    let _ = writeln!(out, "ADS = {}", val(report.ads));
    out
}

pub fn detection_csv(report: &AdsReport) -> String {
    let mut out = String::from("class,metric,value\n");
    for c in &report.per_class {
        for (i, ap) in c.ap_per_threshold.iter().enumerate() {
            let _ = writeln!(out, "{},ap_threshold_{},{}", c.class, i + 1, val(100.0 * ap));
        }
        let _ = writeln!(out, "{},ap,{}", c.class, val(c.class_ap));
        let _ = writeln!(out, "{},ate,{}", c.class, val(c.ate));
        let _ = writeln!(out, "{},aoe,{}", c.class, val(c.aoe));
        let _ = writeln!(out, "{},ase,{}", c.class, val(c.ase));
        let _ = writeln!(out, "{},dr,{}", c.class, val(c.dr));
        let _ = writeln!(out, "{},n_tp,{}", c.class, c.n_tp);
    }
    for (name, v) in [
        ("mAP", report.map),
        ("mATE", report.mate),
        ("mAOE", report.maoe),
        ("mASE", report.mase),
        ("mDR", report.mdr),
        ("ADS", report.ads),
    ] {
        let _ = writeln!(out, "all,{name},{}", val(v));
    }
    out
}

pub fn pr_curve_csv(record: &PrCurveRecord) -> String {
    let mut out = String::from("recall,precision\n");
    for p in &record.curve.points {
        let _ = writeln!(out, "{:.6},{:.6}", p.recall, p.precision);
    }
    out
}

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

const MOT_COLUMNS: &str = "scope,class,MOTA,MOTP,MODA,IDSW,IDF1,IDTP,IDFP,IDFN,HOTA,DetA,AssA,Frag";

fn mot_row(scope: &str, m: &MotClassMetrics) -> String {
    format!(
        "{scope},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.class,
        val(m.mota),
        val(m.motp),
        val(m.moda),
        m.idsw,
        val(m.idf1),
        m.idtp,
        m.idfp,
        m.idfn,
        val(m.hota),
        val(m.deta),
        val(m.assa),
        m.frag
    )
}

pub fn render_mot_report(report: &MotReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[tracking]");
    for m in &report.aggregate {
        let _ = writeln!(out, "[class {}]", m.class);
        let _ = writeln!(out, "MOTA = {}", val(m.mota));
        let _ = writeln!(out, "MOTP = {}", val(m.motp));
        let _ = writeln!(out, "MODA = {}", val(m.moda));
        let _ = writeln!(out, "IDSW = {}", m.idsw);
        let _ = writeln!(out, "Frag = {}", m.frag);
        let _ = writeln!(out, "IDF1 = {}", val(m.idf1));
        let _ = writeln!(out, "IDTP = {}", m.idtp);
        let _ = writeln!(out, "IDFP = {}", m.idfp);
        let _ = writeln!(out, "IDFN = {}", m.idfn);
        let _ = writeln!(out, "HOTA = {}", val(m.hota));
        let _ = writeln!(out, "DetA = {}", val(m.deta));
        let _ = writeln!(out, "AssA = {}", val(m.assa));
        let _ = writeln!(out, "GT = {}", m.gt_count);
        let _ = writeln!(out, "FP = {}", m.fp);
        let _ = writeln!(out, "FN = {}", m.fn_count);
    }
    out
}

pub fn mot_csv(report: &MotReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MOT_COLUMNS}");
    for (sequence_id, m) in &report.per_sequence {
        let _ = writeln!(out, "{}", mot_row(sequence_id, m));
    }
    for m in &report.aggregate {
        let _ = writeln!(out, "{}", mot_row("all", m));
    }
    out
}

// ---------------------------------------------------------------------------
// Pose and trajectory
// ---------------------------------------------------------------------------

pub fn render_pose_report(results: &[PoseClassResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[pose]");
    for r in results {
        let _ = writeln!(out, "[class {}]", r.class);
        let _ = writeln!(out, "add_accuracy = {}", val(r.add_accuracy));
        let _ = writeln!(out, "adds_accuracy = {}", val(r.adds_accuracy));
        let _ = writeln!(out, "n_matched = {}", r.n_matched);
    }
    out
}

pub fn pose_csv(results: &[PoseClassResult]) -> String {
    let mut out = String::from("class,metric,value\n");
    for r in results {
        let _ = writeln!(out, "{},add_accuracy,{}", r.class, val(r.add_accuracy));
        let _ = writeln!(out, "{},adds_accuracy,{}", r.class, val(r.adds_accuracy));
        let _ = writeln!(out, "{},n_matched,{}", r.class, r.n_matched);
    }
    out
}

/// Per-class ADE/FDE summary for the trajectory baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryClassResult {
    pub class: crate::data::ObjectClass,
    pub ade: f64,
    pub fde: f64,
    pub windows: usize,
    pub skipped_tracks: usize,
}

pub fn render_trajectory_report(results: &[TrajectoryClassResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[trajectory]");
    let mut total_ade = 0.0;
    let mut total_fde = 0.0;
    let mut total_windows = 0usize;
    for r in results {
        let _ = writeln!(out, "[class {}]", r.class);
        let _ = writeln!(out, "ADE = {}", val(r.ade));
        let _ = writeln!(out, "FDE = {}", val(r.fde));
        let _ = writeln!(out, "windows = {}", r.windows);
        let _ = writeln!(out, "skipped_tracks = {}", r.skipped_tracks);
        total_ade += r.ade * r.windows as f64;
        total_fde += r.fde * r.windows as f64;
        total_windows += r.windows;
    }
    let _ = writeln!(out, "[summary]");
    if total_windows > 0 {
        let _ = writeln!(out, "ADE = {}", val(total_ade / total_windows as f64));
        let _ = writeln!(out, "FDE = {}", val(total_fde / total_windows as f64));
    }
    let _ = writeln!(out, "windows = {total_windows}");
    out
}

pub fn trajectory_csv(results: &[TrajectoryClassResult]) -> String {
    let mut out = String::from("class,ADE,FDE,windows,skipped_tracks\n");
    for r in results {
        let _ = writeln!(out, "{},{},{},{},{}", r.class, val(r.ade), val(r.fde), r.windows, r.skipped_tracks);
    }
    out
}
