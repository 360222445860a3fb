//! Line-delimited text formats for sequences, detections, and tracks.
//!
//! Three grammars, each with a one-line versioned header (full field tables
//! in `FORMATS.md` at the repository root):
//!
//! ```text
//! LAA3D-SEQ v1
//! SEQ <sequence_id> <fps>
//! FRAME <frame_index> <timestamp> <fx> <fy> <cx> <cy> <width> <height> <roll> <pitch> <yaw> <tx> <ty> <tz>
//! OBJ <class> <fine_class> <track_id> <x> <y> <z> <roll> <pitch> <yaw> <l> <w> <h> [<u_min> <v_min> <u_max> <v_max>]
//! ```
//!
//! ```text
//! LAA3D-DET v1
//! <frame_index> <class> <score> <x> <y> <z> <roll> <pitch> <yaw> <l> <w> <h>
//! ```
//!
//! ```text
//! LAA3D-TRK v1
//! <frame_index> <class> <track_id> <score> <x> <y> <z> <roll> <pitch> <yaw> <l> <w> <h>
//! ```
//!
//! Every float is written as decimal text with 9 significant digits
//! (`{:.8e}`), so identical values always serialize to identical bytes and a
//! write → load → write cycle is byte-stable. All invariants on the schema
//! types are checked at parse time; `write_sequence` re-validates before
//! touching the filesystem. An `OBJ` record without the four trailing 2D
//! fields gets its image box recomputed by projection on load.

use crate::data::{
    AnnotatedObject, Detection, DetectionSet, Extrinsic, Frame, ObjectClass, Sequence,
};
use crate::geometry::{self, Box2D, Box3D, CameraModel, Pose6DoF};
use crate::mot::{TrackSet, TrackedBox};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const SEQ_HEADER: &str = "LAA3D-SEQ v1";
pub const DET_HEADER: &str = "LAA3D-DET v1";
pub const TRK_HEADER: &str = "LAA3D-TRK v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed record: unparseable number, bad class name, unknown tag.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Structurally wrong record: bad header, wrong field count.
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    /// A schema invariant does not hold for otherwise well-formed records.
    #[error("invariant violation: {message}")]
    Invariant { message: String },
    #[error("score {score} at line {line} outside [0, 1]")]
    ScoreRange { line: usize, score: f64 },
}

/// Serialize one float at 9 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{:.8e}", x)
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_field<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, IoError> {
    tok.parse().map_err(|_| IoError::Parse {
        line,
        message: format!("cannot parse {what} from `{tok}`"),
    })
}

fn expect_fields(fields: &[&str], n: usize, line: usize, record: &str) -> Result<(), IoError> {
    if fields.len() != n {
        return Err(IoError::Schema {
            line,
            message: format!("{record} record needs {n} fields, found {}", fields.len()),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sequence files
// ---------------------------------------------------------------------------

pub fn load_sequence(path: impl AsRef<Path>) -> Result<Sequence, IoError> {
    parse_sequence(&read_to_string(path.as_ref())?)
}

pub fn parse_sequence(text: &str) -> Result<Sequence, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == SEQ_HEADER => {}
        Some((_, other)) => {
            return Err(IoError::Schema {
                line: 1,
                message: format!("expected header `{SEQ_HEADER}`, found `{other}`"),
            })
        }
        None => {
            return Err(IoError::Schema { line: 1, message: "empty file".into() });
        }
    }

    let mut sequence: Option<Sequence> = None;
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        match fields[0] {
            "SEQ" => {
                expect_fields(&fields, 3, line, "SEQ")?;
                if sequence.is_some() {
                    return Err(IoError::Schema { line, message: "duplicate SEQ record".into() });
                }
                let fps: f64 = parse_field(fields[2], line, "fps")?;
                sequence = Some(Sequence {
                    sequence_id: fields[1].to_string(),
                    fps,
                    frames: Vec::new(),
                });
            }
            "FRAME" => {
                expect_fields(&fields, 15, line, "FRAME")?;
                let seq = sequence.as_mut().ok_or(IoError::Schema {
                    line,
                    message: "FRAME before SEQ record".into(),
                })?;
                let mut v = [0.0; 13];
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = parse_field(fields[i + 2], line, "frame field")?;
                }
                seq.frames.push(Frame {
                    frame_index: parse_field(fields[1], line, "frame_index")?,
                    timestamp: v[0],
                    camera: CameraModel {
                        fx: v[1],
                        fy: v[2],
                        cx: v[3],
                        cy: v[4],
                        image_width: v[5],
                        image_height: v[6],
                    },
                    extrinsic: Extrinsic {
                        roll: v[7],
                        pitch: v[8],
                        yaw: v[9],
                        tx: v[10],
                        ty: v[11],
                        tz: v[12],
                    },
                    objects: Vec::new(),
                });
            }
            "OBJ" => {
                let seq = sequence.as_mut().ok_or(IoError::Schema {
                    line,
                    message: "OBJ before SEQ record".into(),
                })?;
                let frame = seq.frames.last_mut().ok_or(IoError::Schema {
                    line,
                    message: "OBJ before any FRAME record".into(),
                })?;
                if fields.len() != 13 && fields.len() != 17 {
                    return Err(IoError::Schema {
                        line,
                        message: format!("OBJ record needs 13 or 17 fields, found {}", fields.len()),
                    });
                }
                let class_id: ObjectClass = fields[1]
                    .parse()
                    .map_err(|e| IoError::Parse { line, message: format!("{e}") })?;
                let track_id: u64 = parse_field(fields[3], line, "track_id")?;
                let mut v = [0.0; 9];
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = parse_field(fields[i + 4], line, "object field")?;
                }
                let box3d = Box3D::new(
                    Pose6DoF::new(v[0], v[1], v[2], v[3], v[4], v[5]),
                    v[6],
                    v[7],
                    v[8],
                );
                let box2d = if fields.len() == 17 {
                    Some(Box2D {
                        u_min: parse_field(fields[13], line, "u_min")?,
                        v_min: parse_field(fields[14], line, "v_min")?,
                        u_max: parse_field(fields[15], line, "u_max")?,
                        v_max: parse_field(fields[16], line, "v_max")?,
                    })
                } else {
                    // derived field: recompute from the frame camera
                    geometry::project_box(&frame.camera, &box3d).ok()
                };
                frame.objects.push(AnnotatedObject {
                    class_id,
                    fine_class: fields[2].to_string(),
                    track_id,
                    box3d,
                    box2d,
                });
            }
            other => {
                return Err(IoError::Parse {
                    line,
                    message: format!("unknown record tag `{other}`"),
                });
            }
        }
    }

    let sequence = sequence.ok_or(IoError::Schema { line: 1, message: "missing SEQ record".into() })?;
    validate_sequence(&sequence)?;
    Ok(sequence)
}

/// Check every schema invariant; both the parser and the writer go through
/// this, so no invalid sequence can enter or leave the process.
pub fn validate_sequence(seq: &Sequence) -> Result<(), IoError> {
    let fail = |message: String| Err(IoError::Invariant { message });
    if seq.frames.is_empty() {
        return fail(format!("sequence `{}` has no frames", seq.sequence_id));
    }
    if seq.sequence_id.is_empty() || seq.sequence_id.contains(char::is_whitespace) {
        return fail("sequence_id must be a non-empty single token".into());
    }
    if !(seq.fps.is_finite() && seq.fps > 0.0) {
        return fail(format!("fps must be positive, got {}", seq.fps));
    }
    let dims = (seq.frames[0].camera.image_width, seq.frames[0].camera.image_height);
    let mut prev: Option<(u64, f64)> = None;
    for frame in &seq.frames {
        if let Some((pi, pt)) = prev {
            if frame.frame_index <= pi {
                return fail(format!(
                    "frame_index not strictly increasing at frame {}",
                    frame.frame_index
                ));
            }
            if frame.timestamp < pt {
                return fail(format!("timestamp decreases at frame {}", frame.frame_index));
            }
        }
        prev = Some((frame.frame_index, frame.timestamp));
        let cam = &frame.camera;
        if (cam.image_width, cam.image_height) != dims {
            return fail(format!("image dimensions change at frame {}", frame.frame_index));
        }
        if !(cam.fx > 0.0 && cam.fy > 0.0) {
            return fail(format!("non-positive focal length at frame {}", frame.frame_index));
        }
        if !(0.0..=cam.image_width).contains(&cam.cx) || !(0.0..=cam.image_height).contains(&cam.cy) {
            return fail(format!("principal point outside image at frame {}", frame.frame_index));
        }
        let mut seen = BTreeSet::new();
        for obj in &frame.objects {
            if !seen.insert(obj.track_id) {
                return fail(format!(
                    "duplicate track_id {} in frame {}",
                    obj.track_id, frame.frame_index
                ));
            }
            if obj.fine_class.is_empty() || obj.fine_class.contains(char::is_whitespace) {
                return fail(format!(
                    "fine_class must be a non-empty single token in frame {}",
                    frame.frame_index
                ));
            }
            if let Some(b) = &obj.box2d {
                let ordered = b.u_min <= b.u_max && b.v_min <= b.v_max;
                if !ordered || ![b.u_min, b.v_min, b.u_max, b.v_max].iter().all(|v| v.is_finite()) {
                    return fail(format!("malformed 2D box in frame {}", frame.frame_index));
                }
            }
            validate_box(&obj.box3d, frame.frame_index)?;
        }
    }
    Ok(())
}

fn validate_box(b: &Box3D, frame_index: u64) -> Result<(), IoError> {
    let p = &b.pose;
    let finite = [p.x, p.y, p.z, p.roll, p.pitch, p.yaw, b.length, b.width, b.height]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(IoError::Invariant {
            message: format!("non-finite box field in frame {frame_index}"),
        });
    }
    if !(b.length > 0.0 && b.width > 0.0 && b.height > 0.0) {
        return Err(IoError::Invariant {
            message: format!("non-positive box dimensions in frame {frame_index}"),
        });
    }
    for angle in [p.roll, p.pitch, p.yaw] {
        if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&angle) {
            return Err(IoError::Invariant {
                message: format!("angle outside [-pi, pi) in frame {frame_index}"),
            });
        }
    }
    Ok(())
}

pub fn write_sequence(seq: &Sequence, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_file(path.as_ref(), &serialize_sequence(seq)?)
}

pub fn serialize_sequence(seq: &Sequence) -> Result<String, IoError> {
    validate_sequence(seq)?;
    let mut out = String::new();
    let _ = writeln!(out, "{SEQ_HEADER}");
    let _ = writeln!(out, "SEQ {} {}", seq.sequence_id, fmt_float(seq.fps));
    for f in &seq.frames {
        let c = &f.camera;
        let e = &f.extrinsic;
        let _ = writeln!(
            out,
            "FRAME {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            f.frame_index,
            fmt_float(f.timestamp),
            fmt_float(c.fx),
            fmt_float(c.fy),
            fmt_float(c.cx),
            fmt_float(c.cy),
            fmt_float(c.image_width),
            fmt_float(c.image_height),
            fmt_float(e.roll),
            fmt_float(e.pitch),
            fmt_float(e.yaw),
            fmt_float(e.tx),
            fmt_float(e.ty),
            fmt_float(e.tz),
        );
        for o in &f.objects {
            let p = &o.box3d.pose;
            let _ = write!(
                out,
                "OBJ {} {} {} {} {} {} {} {} {} {} {} {}",
                o.class_id,
                o.fine_class,
                o.track_id,
                fmt_float(p.x),
                fmt_float(p.y),
                fmt_float(p.z),
                fmt_float(p.roll),
                fmt_float(p.pitch),
                fmt_float(p.yaw),
                fmt_float(o.box3d.length),
                fmt_float(o.box3d.width),
                fmt_float(o.box3d.height),
            );
            if let Some(b) = &o.box2d {
                let _ = write!(
                    out,
                    " {} {} {} {}",
                    fmt_float(b.u_min),
                    fmt_float(b.v_min),
                    fmt_float(b.u_max),
                    fmt_float(b.v_max)
                );
            }
            out.push('\n');
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Detection files
// ---------------------------------------------------------------------------

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionSet, IoError> {
    parse_detections(&read_to_string(path.as_ref())?)
}

pub fn parse_detections(text: &str) -> Result<DetectionSet, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == DET_HEADER => {}
        _ => {
            return Err(IoError::Schema {
                line: 1,
                message: format!("expected header `{DET_HEADER}`"),
            })
        }
    }
    let mut set = DetectionSet::default();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        expect_fields(&fields, 12, line, "detection")?;
        let (det, _) = parse_boxed_record(&fields, line, 2)?;
        set.push(det);
    }
    Ok(set)
}

/// Parse `<frame_index> <class> ... <score at score_pos> <9 box fields>`.
fn parse_boxed_record(
    fields: &[&str],
    line: usize,
    score_pos: usize,
) -> Result<(Detection, u64), IoError> {
    let frame_index: u64 = parse_field(fields[0], line, "frame_index")?;
    let class_id: ObjectClass = fields[1]
        .parse()
        .map_err(|e| IoError::Parse { line, message: format!("{e}") })?;
    let track_id: u64 = if score_pos == 3 {
        parse_field(fields[2], line, "track_id")?
    } else {
        0
    };
    let score: f64 = parse_field(fields[score_pos], line, "score")?;
    if !(0.0..=1.0).contains(&score) {
        return Err(IoError::ScoreRange { line, score });
    }
    let base = score_pos + 1;
    let mut v = [0.0; 9];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = parse_field(fields[base + i], line, "box field")?;
    }
    let box3d = Box3D::new(Pose6DoF::new(v[0], v[1], v[2], v[3], v[4], v[5]), v[6], v[7], v[8]);
    if !(box3d.length > 0.0 && box3d.width > 0.0 && box3d.height > 0.0) {
        return Err(IoError::Parse { line, message: "non-positive box dimensions".into() });
    }
    Ok((Detection { frame_index, class_id, score, box3d }, track_id))
}

pub fn write_detections(set: &DetectionSet, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_file(path.as_ref(), &serialize_detections(set))
}

pub fn serialize_detections(set: &DetectionSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DET_HEADER}");
    for dets in set.frames.values() {
        for d in dets {
            let p = &d.box3d.pose;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {} {} {} {}",
                d.frame_index,
                d.class_id,
                fmt_float(d.score),
                fmt_float(p.x),
                fmt_float(p.y),
                fmt_float(p.z),
                fmt_float(p.roll),
                fmt_float(p.pitch),
                fmt_float(p.yaw),
                fmt_float(d.box3d.length),
                fmt_float(d.box3d.width),
                fmt_float(d.box3d.height),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Track files
// ---------------------------------------------------------------------------

pub fn load_tracks(path: impl AsRef<Path>) -> Result<TrackSet, IoError> {
    parse_tracks(&read_to_string(path.as_ref())?)
}

pub fn parse_tracks(text: &str) -> Result<TrackSet, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == TRK_HEADER => {}
        _ => {
            return Err(IoError::Schema {
                line: 1,
                message: format!("expected header `{TRK_HEADER}`"),
            })
        }
    }
    let mut set = TrackSet::default();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        expect_fields(&fields, 13, line, "track")?;
        let (det, track_id) = parse_boxed_record(&fields, line, 3)?;
        let frame = set.frames.entry(det.frame_index).or_default();
        if frame.iter().any(|t| t.track_id == track_id) {
            return Err(IoError::Invariant {
                message: format!("duplicate track_id {track_id} in frame {}", det.frame_index),
            });
        }
        frame.push(TrackedBox {
            track_id,
            class_id: det.class_id,
            score: Some(det.score),
            box3d: det.box3d,
        });
    }
    Ok(set)
}

pub fn write_tracks(set: &TrackSet, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_file(path.as_ref(), &serialize_tracks(set))
}

pub fn serialize_tracks(set: &TrackSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRK_HEADER}");
    for (frame_index, tracks) in &set.frames {
        for t in tracks {
            let p = &t.box3d.pose;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {} {} {} {} {}",
                frame_index,
                t.class_id,
                t.track_id,
                fmt_float(t.score.unwrap_or(1.0)),
                fmt_float(p.x),
                fmt_float(p.y),
                fmt_float(p.z),
                fmt_float(p.roll),
                fmt_float(p.pitch),
                fmt_float(p.yaw),
                fmt_float(t.box3d.length),
                fmt_float(t.box3d.width),
                fmt_float(t.box3d.height),
            );
        }
    }
    out
}
