//! Subcommand implementations. Each command resolves its inputs, runs the
//! library, and writes `report.txt` / `report.csv` (or data files) plus
//! `manifest.txt` into the output directory.

use crate::config;
use crate::inputs;
use crate::manifest::Manifest;
use crate::{CliError, Shared};
use laa3d::data::{ObjectClass, Sequence};
use laa3d::detection::{
    evaluate_detections, evaluate_poses, ApInterpolation, DetectionOptions, SizeErrorMode,
};
use laa3d::mot::{evaluate_mot, EvalFrame, TrackSet};
use laa3d::report;
use laa3d::synth;
use laa3d::nalgebra::Vector3;
use laa3d::tracking::{ade_fde, predict_trajectory, run_tracker, TrackerFrame, TrackerParams};
use std::collections::BTreeMap;
use std::path::Path;

fn parse_frame(s: &str) -> Result<EvalFrame, CliError> {
    s.parse().map_err(CliError::Input)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    std::fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Internal(format!("cannot write {name}: {e}")))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// eval-det
// ---------------------------------------------------------------------------

pub fn eval_det(
    shared: &Shared,
    gt: &Path,
    det: &Path,
    ap_interpolation: &str,
    ase_mode: &str,
) -> Result<(), CliError> {
    let mut manifest = Manifest::new("eval-det", shared);
    manifest.field("gt", gt.display());
    manifest.field("det", det.display());
    manifest.field("ap_interpolation", ap_interpolation);
    manifest.field("ase_mode", ase_mode);

    let cfg = config::resolve(shared.config.as_deref(), &shared.overrides)?;
    let opts = DetectionOptions {
        interpolation: match ap_interpolation {
            "standard101" => ApInterpolation::Standard101,
            "nuscenes-trimmed" => ApInterpolation::NuScenesTrimmed,
            other => {
                return Err(CliError::Input(format!("unknown AP interpolation `{other}`")))
            }
        },
        size_mode: match ase_mode {
            "relative" => SizeErrorMode::Relative,
            "absolute" => SizeErrorMode::AbsoluteMeters,
            other => return Err(CliError::Input(format!("unknown ASE mode `{other}`"))),
        },
        classes: config::parse_classes(shared.classes.as_deref())?,
    };

    let loaded = inputs::load_detection_inputs(gt, det, shared.jobs)?;
    let pairs: Vec<(&Sequence, &laa3d::data::DetectionSet)> =
        loaded.iter().map(|(s, d)| (s, d)).collect();
    let eval = evaluate_detections(&pairs, &cfg, &opts)?;

    write_out(
        &shared.out,
        "report.txt",
        &format!("{}\n{}", manifest.header(), report::render_detection_report(&eval.report)),
    )?;
    write_out(&shared.out, "report.csv", &report::detection_csv(&eval.report))?;
    for record in &eval.pr_curves {
        let name = format!(
            "pr_{}_{}.csv",
            record.class,
            report::threshold_label(record.threshold)
        );
        write_out(&shared.out, &name, &report::pr_curve_csv(record))?;
    }
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    println!("ADS {:.4} -> {}", eval.report.ads, shared.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval-mot
// ---------------------------------------------------------------------------

pub fn eval_mot(shared: &Shared, gt: &Path, tracks: &Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("eval-mot", shared);
    manifest.field("gt", gt.display());
    manifest.field("tracks", tracks.display());

    let cfg = config::resolve(shared.config.as_deref(), &shared.overrides)?;
    let classes = config::parse_classes(shared.classes.as_deref())?;
    let frame = parse_frame(&shared.frame)?;
    let loaded = inputs::load_track_inputs(gt, tracks, shared.jobs)?;
    let entries: Vec<(&Sequence, &TrackSet)> = loaded.iter().map(|(s, t)| (s, t)).collect();
    let mot = evaluate_mot(&entries, &cfg, frame, classes.as_deref())?;

    write_out(
        &shared.out,
        "report.txt",
        &format!("{}\n{}", manifest.header(), report::render_mot_report(&mot)),
    )?;
    write_out(&shared.out, "report.csv", &report::mot_csv(&mot))?;
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    for m in &mot.aggregate {
        println!("{}: MOTA {:.2} HOTA {:.2} IDF1 {:.2}", m.class, m.mota, m.hota, m.idf1);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval-pose
// ---------------------------------------------------------------------------

pub fn eval_pose(shared: &Shared, gt: &Path, det: &Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("eval-pose", shared);
    manifest.field("gt", gt.display());
    manifest.field("det", det.display());

    let cfg = config::resolve(shared.config.as_deref(), &shared.overrides)?;
    let classes = config::parse_classes(shared.classes.as_deref())?;
    let loaded = inputs::load_detection_inputs(gt, det, shared.jobs)?;
    let pairs: Vec<(&Sequence, &laa3d::data::DetectionSet)> =
        loaded.iter().map(|(s, d)| (s, d)).collect();
    let results = evaluate_poses(&pairs, &cfg, classes.as_deref())?;

    write_out(
        &shared.out,
        "report.txt",
        &format!("{}\n{}", manifest.header(), report::render_pose_report(&results)),
    )?;
    write_out(&shared.out, "report.csv", &report::pose_csv(&results))?;
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    for r in &results {
        println!("{}: ADD {:.2}% ADD-S {:.2}%", r.class, r.add_accuracy, r.adds_accuracy);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

pub fn track(
    shared: &Shared,
    det: &Path,
    seq: Option<&Path>,
    fps: f64,
    max_age: u32,
    min_hits: u32,
) -> Result<(), CliError> {
    let mut manifest = Manifest::new("track", shared);
    manifest.field("det", det.display());
    if let Some(seq) = seq {
        manifest.field("seq", seq.display());
    }
    manifest.field("fps", fps);
    manifest.field("max_age", max_age);
    manifest.field("min_hits", min_hits);

    if fps <= 0.0 {
        return Err(CliError::Input("fps must be positive".into()));
    }
    let cfg = config::resolve(shared.config.as_deref(), &shared.overrides)?;
    let detections = laa3d::io::load_detections(det)?;
    let sequence = match seq {
        Some(path) => Some(laa3d::io::load_sequence(path)?),
        None => None,
    };
    // world-frame association needs extrinsics, hence a sequence
    let world = match (&sequence, parse_frame(&shared.frame)?) {
        (Some(_), EvalFrame::World) => true,
        _ => false,
    };

    let frames: Vec<TrackerFrame> = match &sequence {
        Some(s) => s
            .frames
            .iter()
            .map(|f| {
                let mut dets = detections.detections(f.frame_index).to_vec();
                if world {
                    for d in dets.iter_mut() {
                        let w = f.extrinsic.camera_to_world(&d.box3d.pose.position());
                        d.box3d.pose.x = w.x;
                        d.box3d.pose.y = w.y;
                        d.box3d.pose.z = w.z;
                    }
                }
                TrackerFrame {
                    frame_index: f.frame_index,
                    timestamp: f.timestamp,
                    detections: dets,
                }
            })
            .collect(),
        None => match (detections.frames.keys().next(), detections.frames.keys().last()) {
            (Some(&first), Some(&last)) => (first..=last)
                .map(|i| TrackerFrame {
                    frame_index: i,
                    timestamp: i as f64 / fps,
                    detections: detections.detections(i).to_vec(),
                })
                .collect(),
            _ => Vec::new(),
        },
    };

    let params = TrackerParams { max_age, min_hits, ..Default::default() };
    let mut tracks = run_tracker(&frames, &params, &cfg);
    if world {
        // emitted positions back to each frame's camera coordinates
        let sequence = sequence.as_ref().expect("world mode implies a sequence");
        for (frame_index, boxes) in tracks.frames.iter_mut() {
            let ext = sequence.frame(*frame_index).expect("tracker frames come from the sequence").extrinsic;
            for b in boxes.iter_mut() {
                let c = ext.world_to_camera(&b.box3d.pose.position());
                b.box3d.pose.x = c.x;
                b.box3d.pose.y = c.y;
                b.box3d.pose.z = c.z;
            }
        }
    }

    std::fs::create_dir_all(&shared.out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", shared.out.display())))?;
    laa3d::io::write_tracks(&tracks, shared.out.join("tracks.trk"))?;
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    println!("{} tracked boxes -> {}", tracks.len(), shared.out.join("tracks.trk").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

pub fn predict(shared: &Shared, gt: &Path, history: usize, horizon: usize) -> Result<(), CliError> {
    let mut manifest = Manifest::new("predict", shared);
    manifest.field("gt", gt.display());
    manifest.field("history", history);
    manifest.field("horizon", horizon);

    if history < 2 || horizon == 0 {
        return Err(CliError::Input("need history >= 2 and horizon >= 1".into()));
    }
    let classes = config::parse_classes(shared.classes.as_deref())?;
    let frame = parse_frame(&shared.frame)?;
    let sequences = inputs::load_gt_only(gt, shared.jobs)?;

    struct Tally {
        ade_sum: f64,
        fde_sum: f64,
        windows: usize,
        skipped: usize,
    }
    let mut tallies: BTreeMap<ObjectClass, Tally> = BTreeMap::new();

    for seq in &sequences {
        // per track: runs of consecutive sequence frames where it appears
        let mut samples: BTreeMap<(ObjectClass, u64), Vec<(usize, f64, Vector3<f64>)>> =
            BTreeMap::new();
        for (pos, f) in seq.frames.iter().enumerate() {
            for obj in &f.objects {
                if let Some(filter) = &classes {
                    if !filter.contains(&obj.class_id) {
                        continue;
                    }
                }
                let p = obj.box3d.pose.position();
                let p = match frame {
                    EvalFrame::Camera => p,
                    EvalFrame::World => f.extrinsic.camera_to_world(&p),
                };
                samples
                    .entry((obj.class_id, obj.track_id))
                    .or_default()
                    .push((pos, f.timestamp, p));
            }
        }
        for ((class, _), track) in samples {
            let tally = tallies.entry(class).or_insert(Tally {
                ade_sum: 0.0,
                fde_sum: 0.0,
                windows: 0,
                skipped: 0,
            });
            let mut any_window = false;
            // maximal consecutive runs
            let mut run_start = 0usize;
            for i in 1..=track.len() {
                let broken = i == track.len() || track[i].0 != track[i - 1].0 + 1;
                if !broken {
                    continue;
                }
                let run = &track[run_start..i];
                run_start = i;
                if run.len() < history + horizon {
                    continue;
                }
                for w in 0..=run.len() - history - horizon {
                    let hist: Vec<(f64, Vector3<f64>)> =
                        run[w..w + history].iter().map(|&(_, t, p)| (t, p)).collect();
                    let truth: Vec<Vector3<f64>> = run[w + history..w + history + horizon]
                        .iter()
                        .map(|&(_, _, p)| p)
                        .collect();
                    let predicted = predict_trajectory(&hist, horizon)
                        .map_err(|e| CliError::Precondition(e.to_string()))?;
                    let (ade, fde) =
                        ade_fde(&predicted, &truth).map_err(|e| CliError::Internal(e.to_string()))?;
                    tally.ade_sum += ade;
                    tally.fde_sum += fde;
                    tally.windows += 1;
                    any_window = true;
                }
            }
            if !any_window {
                tally.skipped += 1;
            }
        }
    }

    let results: Vec<report::TrajectoryClassResult> = tallies
        .into_iter()
        .filter(|(_, t)| t.windows > 0 || t.skipped > 0)
        .map(|(class, t)| report::TrajectoryClassResult {
            class,
            ade: if t.windows > 0 { t.ade_sum / t.windows as f64 } else { 0.0 },
            fde: if t.windows > 0 { t.fde_sum / t.windows as f64 } else { 0.0 },
            windows: t.windows,
            skipped_tracks: t.skipped,
        })
        .collect();
    if results.iter().all(|r| r.windows == 0) {
        return Err(CliError::Precondition(
            "no track is long enough for the requested history + horizon".into(),
        ));
    }

    write_out(
        &shared.out,
        "report.txt",
        &format!("{}\n{}", manifest.header(), report::render_trajectory_report(&results)),
    )?;
    write_out(&shared.out, "report.csv", &report::trajectory_csv(&results))?;
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    for r in &results {
        println!(
            "{}: ADE {:.4} FDE {:.4} over {} windows ({} tracks too short)",
            r.class, r.ade, r.fde, r.windows, r.skipped_tracks
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn simulate(shared: &Shared, spec_path: &Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("simulate", shared);
    manifest.field("spec", spec_path.display());

    let cfg = config::resolve(shared.config.as_deref(), &shared.overrides)?;
    let mut spec = synth::load_scenario(spec_path)?;
    if let Some(seed) = shared.seed {
        spec.seed = seed;
        if let Some(c) = spec.corruption.as_mut() {
            c.seed = seed;
        }
    }

    let sim = synth::simulate_sequence(&spec)?;
    std::fs::create_dir_all(&shared.out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", shared.out.display())))?;
    let seq_name = format!("{}.seq", spec.scenario_id);
    laa3d::io::write_sequence(&sim.sequence, shared.out.join(&seq_name))?;
    println!(
        "{} frames, {} annotations ({} dropped behind camera) -> {}",
        sim.sequence.frames.len(),
        sim.sequence.frames.iter().map(|f| f.objects.len()).sum::<usize>(),
        sim.dropped.len(),
        shared.out.join(&seq_name).display()
    );

    if let Some(model) = &spec.corruption {
        let corrupted = synth::corrupt_detections(&sim.sequence, model, &cfg)?;
        let det_name = format!("{}.det", spec.scenario_id);
        let trk_name = format!("{}.trk", spec.scenario_id);
        laa3d::io::write_detections(&corrupted.detections, shared.out.join(&det_name))?;
        laa3d::io::write_tracks(&corrupted.tracks, shared.out.join(&trk_name))?;
        write_out(
            &shared.out,
            &format!("{}_ledger.txt", spec.scenario_id),
            &render_ledger(&sim.sequence, &corrupted.ledger),
        )?;
        println!(
            "corrupted detections: {} ({} FN, {} FP, {} swaps)",
            corrupted.detections.len(),
            corrupted.ledger.fn_events.len(),
            corrupted.ledger.fp_events.len(),
            corrupted.ledger.idswitch_events.len()
        );
    }
    write_out(&shared.out, "manifest.txt", &manifest.render())?;
    Ok(())
}

fn render_ledger(seq: &Sequence, ledger: &synth::CorruptionLedger) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("LAA3D-LEDGER v1\n");
    for class in ObjectClass::ALL {
        let clear = ledger.expected_clear(seq, class);
        if clear.gt == 0 {
            continue;
        }
        let det = ledger.expected_detection(seq, class);
        let _ = writeln!(
            out,
            "class {class} gt {} visible {} tp {} fn {} fp {} idsw {} frag {}",
            clear.gt, det.visible_gt, det.tp, clear.fn_count, clear.fp, clear.idsw, clear.frag
        );
    }
    let _ = writeln!(out, "fn_events {}", ledger.fn_events.len());
    let _ = writeln!(out, "fp_events {}", ledger.fp_events.len());
    let _ = writeln!(out, "idswitch_events {}", ledger.idswitch_events.len());
    out
}
