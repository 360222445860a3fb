//! The run manifest: everything needed to reproduce a run. Every field but
//! `wall_time_ms` is deterministic; reports embed only the deterministic
//! fields.

use crate::Shared;
use std::fmt::Write as _;
use std::time::Instant;

pub struct Manifest {
    command: String,
    entries: Vec<(String, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str, shared: &Shared) -> Manifest {
        let mut m = Manifest {
            command: command.to_string(),
            entries: Vec::new(),
            started: Instant::now(),
        };
        m.field("version", env!("CARGO_PKG_VERSION"));
        if let Some(config) = &shared.config {
            m.field("config", config.display());
        }
        for set in &shared.overrides {
            m.field("set", set);
        }
        if let Some(classes) = &shared.classes {
            m.field("classes", classes);
        }
        m.field("frame", &shared.frame);
        if let Some(seed) = shared.seed {
            m.field("seed", seed);
        }
        m.field("jobs", shared.jobs);
        m
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// The deterministic part, embedded at the top of every report.
    pub fn header(&self) -> String {
        let mut out = String::from("[manifest]\n");
        let _ = writeln!(out, "command {}", self.command);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} {v}");
        }
        out
    }

    /// Full manifest file contents, including wall time.
    pub fn render(&self) -> String {
        let mut out = String::from("LAA3D-MANIFEST v1\n");
        out += &self.header();
        let _ = writeln!(out, "wall_time_ms {}", self.started.elapsed().as_millis());
        out
    }
}
