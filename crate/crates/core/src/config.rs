//! Run configuration: one TOML file controlling the orientation head, the
//! loss weighting, per-class dimension priors, lifting, and evaluation.
//!
//! Every field has a default, so an empty file is a valid configuration and
//! a file needs to name only what it overrides:
//!
//! ```toml
//! [bins]
//! n = 4
//! overlap = 1.1
//!
//! [lift]
//! mode = "pruned"
//! drop_truncated_sides = true
//! ```

use crate::lifting::{BorderTruncation, ConfigMode, DimPriors, LiftOptions};
use crate::metrics::EvalConfig;
use crate::multibin::{make_layout, BinLayout, LossWeights, MultiBinError};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("configuration does not parse: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Orientation-head shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinSection {
    /// Number of overlapping angle bins.
    pub n: usize,
    /// Bin width as a multiple of the exact-cover width; values above 1
    /// make neighboring bins share angles.
    pub overlap: f64,
}

impl Default for BinSection {
    fn default() -> Self {
        BinSection { n: 2, overlap: 1.1 }
    }
}

/// Loss combination knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    /// Weight of the localization term against the confidence term.
    pub w: f64,
    /// Scale applied to confidence logits by training-side consumers; the
    /// losses computed here do not use it, but it travels with the run so
    /// external trainers see one source of truth.
    pub confidence_scale: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        LossSection {
            w: 0.7,
            confidence_scale: 0.6,
        }
    }
}

/// Lifting behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftSection {
    /// Corner-assignment search space.
    pub mode: ConfigMode,
    /// Drop the touching constraint for box sides lying on the image
    /// border (they reflect the frame edge, not the object silhouette).
    pub drop_truncated_sides: bool,
}

impl Default for LiftSection {
    fn default() -> Self {
        LiftSection {
            mode: ConfigMode::Pruned,
            drop_truncated_sides: false,
        }
    }
}

/// Image geometry used for border-truncation detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageSection {
    pub width: f64,
    pub height: f64,
}

impl Default for ImageSection {
    fn default() -> Self {
        ImageSection {
            width: 1242.0,
            height: 375.0,
        }
    }
}

/// Evaluation knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Per-class 3D IoU matching thresholds, `(0, 1]`.
    pub iou_thresholds: BTreeMap<String, f64>,
    /// Ignore vans (rather than punishing them) during car evaluation.
    pub van_as_car: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let defaults = EvalConfig::default();
        EvalSection {
            iou_thresholds: defaults.iou_thresholds,
            van_as_car: defaults.van_as_car,
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub bins: BinSection,
    pub loss: LossSection,
    pub lift: LiftSection,
    pub image: ImageSection,
    pub eval: EvalSection,
    /// Per-class (height, width, length) priors used when a detection
    /// carries no explicit dimensions.
    pub priors: DimPriors,
    /// Worker threads for batch commands; 0 means one per core.
    pub jobs: usize,
}

impl RunConfig {
    /// Parses and validates a TOML string.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        // the layout constructor owns the n/overlap feasibility rules
        self.layout()?;
        if !(self.loss.w.is_finite() && self.loss.w >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "loss.w must be a finite non-negative number, got {}",
                self.loss.w
            )));
        }
        if !(self.loss.confidence_scale.is_finite() && self.loss.confidence_scale > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "loss.confidence_scale must be positive, got {}",
                self.loss.confidence_scale
            )));
        }
        if !(self.image.width > 0.0 && self.image.height > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "image size {}x{} must be positive",
                self.image.width, self.image.height
            )));
        }
        let eval = self.eval_config();
        eval.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        // every class we evaluate or lift needs a dimension prior to fall
        // back on when a detection has no explicit size
        for class in self.eval.iou_thresholds.keys() {
            if self.priors.lookup(class).is_err() {
                return Err(ConfigError::Invalid(format!(
                    "class {class:?} has an IoU threshold but no dimension prior"
                )));
            }
        }
        Ok(())
    }

    /// The configured bin layout.
    pub fn layout(&self) -> Result<BinLayout, ConfigError> {
        make_layout(self.bins.n, self.bins.overlap).map_err(|e: MultiBinError| match e {
            MultiBinError::InvalidLayout(msg) => ConfigError::Invalid(msg),
            other => ConfigError::Invalid(other.to_string()),
        })
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { w: self.loss.w }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            iou_thresholds: self.eval.iou_thresholds.clone(),
            van_as_car: self.eval.van_as_car,
        }
    }

    /// Lift options implied by this configuration. A command-line override
    /// of the truncation flag replaces `lift.drop_truncated_sides`.
    pub fn lift_options(&self, drop_truncated_override: Option<bool>) -> LiftOptions {
        let drop = drop_truncated_override.unwrap_or(self.lift.drop_truncated_sides);
        LiftOptions {
            mode: self.lift.mode,
            drop_truncated_sides: drop
                .then(|| BorderTruncation::new(self.image.width, self.image.height)),
        }
    }
}
