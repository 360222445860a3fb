//! Depth target transforms for monocular detection heads: focal-length
//! unification (FLU) and the class-specific depth (CSD) bin/residual codec.
//!
//! Both transforms are pure and composable; nothing here touches a network.

use crate::data::ObjectClass;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("depth and focal length must be positive (z = {z}, focal = {focal})")]
    NonPositiveDepth { z: f64, focal: f64 },
    #[error("depth {z} outside [0, {range}) for class")]
    DepthOutOfRange { z: f64, range: f64 },
    #[error("bin {bin} outside [0, {bin_count}) or residual {residual} outside [0, 1)")]
    BinOutOfRange { bin: usize, bin_count: usize, residual: f64 },
}

/// Focal-length unification: depths are rescaled to a canonical focal length
/// so the regression target is focal-invariant. The canonical value 640 px
/// corresponds to a 1280×720 image with 90° horizontal FOV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluConfig {
    pub canonical_focal: f64,
}

impl Default for FluConfig {
    fn default() -> Self {
        FluConfig { canonical_focal: 640.0 }
    }
}

/// `z' = f'_c · z / f_c`
pub fn flu_to_canonical(z: f64, focal: f64, cfg: &FluConfig) -> Result<f64, TransformError> {
    if z <= 0.0 || focal <= 0.0 {
        return Err(TransformError::NonPositiveDepth { z, focal });
    }
    Ok(cfg.canonical_focal * z / focal)
}

/// `z = f_c · z' / f'_c`, the exact inverse of [`flu_to_canonical`].
pub fn flu_from_canonical(z_canonical: f64, focal: f64, cfg: &FluConfig) -> Result<f64, TransformError> {
    if z_canonical <= 0.0 || focal <= 0.0 {
        return Err(TransformError::NonPositiveDepth { z: z_canonical, focal });
    }
    Ok(focal * z_canonical / cfg.canonical_focal)
}

/// Class-specific depth discretization: each class owns a depth range
/// (100 / 150 / 300 m) split into uniform bins with a within-bin residual.
#[derive(Debug, Clone, PartialEq)]
pub struct CsdConfig {
    pub mav_range: f64,
    pub evtol_range: f64,
    pub helicopter_range: f64,
    pub bin_count: usize,
}

impl Default for CsdConfig {
    fn default() -> Self {
        // 100 bins put MAV bins at exactly 1 m
        CsdConfig { mav_range: 100.0, evtol_range: 150.0, helicopter_range: 300.0, bin_count: 100 }
    }
}

impl CsdConfig {
    pub fn range(&self, class: ObjectClass) -> f64 {
        match class {
            ObjectClass::Mav => self.mav_range,
            ObjectClass::Evtol => self.evtol_range,
            ObjectClass::Helicopter => self.helicopter_range,
        }
    }

    pub fn bin_width(&self, class: ObjectClass) -> f64 {
        self.range(class) / self.bin_count as f64
    }
}

/// Encode a depth as `(bin, residual)` with `residual ∈ [0, 1)`.
pub fn csd_encode(z: f64, class: ObjectClass, cfg: &CsdConfig) -> Result<(usize, f64), TransformError> {
    let range = cfg.range(class);
    if !(0.0..range).contains(&z) {
        return Err(TransformError::DepthOutOfRange { z, range });
    }
    let width = cfg.bin_width(class);
    let scaled = z / width;
    // rounding at the top of the range can push floor(z/width) to bin_count
    let bin = (scaled.floor() as usize).min(cfg.bin_count - 1);
    let residual = (scaled - bin as f64).min(1.0 - f64::EPSILON);
    Ok((bin, residual))
}

/// Decode `(bin, residual)` back to meters.
pub fn csd_decode(
    bin: usize,
    residual: f64,
    class: ObjectClass,
    cfg: &CsdConfig,
) -> Result<f64, TransformError> {
    if bin >= cfg.bin_count || !(0.0..1.0).contains(&residual) {
        return Err(TransformError::BinOutOfRange { bin, bin_count: cfg.bin_count, residual });
    }
    Ok((bin as f64 + residual) * cfg.bin_width(class))
}
