//! Discrete-continuous orientation representation.
//!
//! A viewing-ray-relative angle is represented by `n` overlapping bins: a
//! per-bin confidence score plus a per-bin residual encoded as an
//! (unnormalized) cosine/sine pair — 3n scalars total. This module defines
//! the bin layout, target encoding, the confidence and localization losses,
//! and max-confidence decoding, all as pure functions so an external trainer
//! can be parity-checked against them. No gradients here; only the forward
//! math.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{angular_distance, wrap_angle};

/// Residual pairs with both components at or below this magnitude have no
/// usable direction and are rejected.
pub const RESIDUAL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiBinError {
    #[error("invalid bin layout: {0}")]
    InvalidLayout(String),
    #[error("degenerate residual pair ({cos}, {sin}); no recoverable direction")]
    DegenerateResidual { cos: f64, sin: f64 },
    #[error("output carries {got} bins but the layout has {expected}")]
    LayoutMismatch { expected: usize, got: usize },
}

/// An overlapping angular bin layout over `[-π, π)`.
///
/// Centers are evenly spaced starting at `-π` (so `n = 2` gives `{-π, 0}`);
/// a bin covers every angle within `half_width` of its center, measured on
/// the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub n: usize,
    pub centers: Vec<f64>,
    pub half_width: f64,
}

/// Builds a layout of `n` bins whose half-width is `overlap_factor · π/n`,
/// so any factor above 1 makes adjacent bins overlap while still covering
/// the whole circle.
pub fn make_layout(n: usize, overlap_factor: f64) -> Result<BinLayout, MultiBinError> {
    if n < 2 {
        return Err(MultiBinError::InvalidLayout(format!(
            "need at least 2 bins, got {n}"
        )));
    }
    if overlap_factor.is_nan() || overlap_factor <= 1.0 {
        return Err(MultiBinError::InvalidLayout(format!(
            "overlap factor must exceed 1, got {overlap_factor}"
        )));
    }
    let half_width = overlap_factor * std::f64::consts::PI / n as f64;
    if half_width >= std::f64::consts::PI {
        return Err(MultiBinError::InvalidLayout(format!(
            "half-width {half_width} rad would wrap a bin onto itself"
        )));
    }
    let centers = (0..n)
        .map(|i| {
            wrap_angle(-std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64)
        })
        .collect();
    Ok(BinLayout {
        n,
        centers,
        half_width,
    })
}

impl BinLayout {
    /// Whether bin `i` covers `theta` (circular distance to the center at
    /// most the half-width).
    pub fn covers(&self, i: usize, theta: f64) -> bool {
        angular_distance(theta, self.centers[i]) <= self.half_width
    }

    /// Indices of all bins covering `theta`; never empty for a layout built
    /// by [`make_layout`].
    pub fn covering_bins(&self, theta: f64) -> Vec<usize> {
        (0..self.n).filter(|&i| self.covers(i, theta)).collect()
    }

    /// The bin whose center is circularly closest to `theta` (lowest index
    /// on ties).
    pub fn nearest_bin(&self, theta: f64) -> usize {
        let mut best = 0;
        for i in 1..self.n {
            if angular_distance(theta, self.centers[i])
                < angular_distance(theta, self.centers[best])
            {
                best = i;
            }
        }
        best
    }
}

/// The 3n-scalar head output: one confidence score and one raw
/// cosine/sine residual pair per bin. Scores are unnormalized logits;
/// residual pairs are normalized at the point of use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBinOutput {
    pub scores: Vec<f64>,
    /// Per-bin `[cos Δθ, sin Δθ]`, not necessarily unit-norm.
    pub residuals: Vec<[f64; 2]>,
}

impl MultiBinOutput {
    pub fn new(scores: Vec<f64>, residuals: Vec<[f64; 2]>) -> Result<Self, MultiBinError> {
        if scores.len() != residuals.len() {
            return Err(MultiBinError::LayoutMismatch {
                expected: scores.len(),
                got: residuals.len(),
            });
        }
        Ok(Self { scores, residuals })
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// Parses the flat on-disk order: `score_0 cos_0 sin_0 score_1 …`.
    pub fn from_scalars(flat: &[f64]) -> Result<Self, MultiBinError> {
        if flat.is_empty() || !flat.len().is_multiple_of(3) {
            return Err(MultiBinError::LayoutMismatch {
                expected: 3 * (flat.len() / 3).max(1),
                got: flat.len(),
            });
        }
        let mut scores = Vec::with_capacity(flat.len() / 3);
        let mut residuals = Vec::with_capacity(flat.len() / 3);
        for triple in flat.chunks_exact(3) {
            scores.push(triple[0]);
            residuals.push([triple[1], triple[2]]);
        }
        Ok(Self { scores, residuals })
    }

    /// Flattens to the on-disk order: `score_0 cos_0 sin_0 score_1 …`.
    pub fn to_scalars(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(3 * self.n());
        for (s, r) in self.scores.iter().zip(&self.residuals) {
            flat.extend_from_slice(&[*s, r[0], r[1]]);
        }
        flat
    }

    /// An output that decodes exactly back to `theta_local`: full confidence
    /// on `hot_bin`, exact residuals everywhere.
    pub fn ideal_with_hot(layout: &BinLayout, theta_local: f64, hot_bin: usize) -> Self {
        let scores = (0..layout.n)
            .map(|i| if i == hot_bin { 1.0 } else { 0.0 })
            .collect();
        let residuals = layout
            .centers
            .iter()
            .map(|&c| {
                let d = wrap_angle(theta_local - c);
                [d.cos(), d.sin()]
            })
            .collect();
        Self { scores, residuals }
    }

    /// [`Self::ideal_with_hot`] with the circularly nearest bin as the
    /// confident one.
    pub fn ideal(layout: &BinLayout, theta_local: f64) -> Self {
        Self::ideal_with_hot(layout, theta_local, layout.nearest_bin(theta_local))
    }
}

/// Ground-truth encoding of a local angle against a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBinTarget {
    /// Membership flag per bin.
    pub covered: Vec<bool>,
    /// Residual `wrap(θ* - center_i)` per bin; meaningful where covered.
    pub residuals: Vec<f64>,
    /// The encoded ground-truth local angle.
    pub theta_star: f64,
}

impl MultiBinTarget {
    pub fn n_covered(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }
}

/// Weights combining the two orientation loss branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight on the localization (residual) branch.
    pub w: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w: 0.7 }
    }
}

/// Scales a raw cosine/sine pair to unit norm, preserving direction.
pub fn normalize_residual(raw: [f64; 2]) -> Result<[f64; 2], MultiBinError> {
    let [c, s] = raw;
    if c.abs() <= RESIDUAL_EPS && s.abs() <= RESIDUAL_EPS {
        return Err(MultiBinError::DegenerateResidual { cos: c, sin: s });
    }
    let norm = c.hypot(s);
    Ok([c / norm, s / norm])
}

/// Encodes a ground-truth local angle: membership flags plus wrapped
/// residuals to each bin center. Coverage of the full circle guarantees at
/// least one covered bin.
pub fn encode(theta_local: f64, layout: &BinLayout) -> MultiBinTarget {
    let theta = wrap_angle(theta_local);
    let covered = (0..layout.n).map(|i| layout.covers(i, theta)).collect();
    let residuals = layout
        .centers
        .iter()
        .map(|&c| wrap_angle(theta - c))
        .collect();
    MultiBinTarget {
        covered,
        residuals,
        theta_star: theta,
    }
}

/// Decodes a head output: the bin with the highest confidence wins (lowest
/// index on ties) and its residual is added to the bin center.
pub fn decode(output: &MultiBinOutput, layout: &BinLayout) -> Result<f64, MultiBinError> {
    if output.n() != layout.n {
        return Err(MultiBinError::LayoutMismatch {
            expected: layout.n,
            got: output.n(),
        });
    }
    let mut best = 0;
    for i in 1..output.n() {
        if output.scores[i] > output.scores[best] {
            best = i;
        }
    }
    let [c, s] = normalize_residual(output.residuals[best])?;
    Ok(wrap_angle(layout.centers[best] + s.atan2(c)))
}

/// Cross-entropy of the softmax over confidence scores against uniform mass
/// on the covered bins. Non-negative; zero only in the saturated limit.
pub fn loss_conf(confidences: &[f64], target: &MultiBinTarget) -> Result<f64, MultiBinError> {
    if confidences.len() != target.covered.len() {
        return Err(MultiBinError::LayoutMismatch {
            expected: target.covered.len(),
            got: confidences.len(),
        });
    }
    let max = confidences.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max
        + confidences
            .iter()
            .map(|&s| (s - max).exp())
            .sum::<f64>()
            .ln();
    let n_cov = target.n_covered() as f64;
    let covered_sum: f64 = confidences
        .iter()
        .zip(&target.covered)
        .filter(|(_, &cov)| cov)
        .map(|(&s, _)| s)
        .sum();
    Ok(lse - covered_sum / n_cov)
}

/// Mean negated cosine alignment between the predicted and ground-truth
/// residuals over the covered bins: `-1/n_cov · Σ cos(θ* - c_i - Δθ_i)`.
/// Exactly −1 when every covered bin predicts its target residual.
pub fn loss_loc(
    output: &MultiBinOutput,
    target: &MultiBinTarget,
    layout: &BinLayout,
) -> Result<f64, MultiBinError> {
    if output.n() != layout.n || target.covered.len() != layout.n {
        return Err(MultiBinError::LayoutMismatch {
            expected: layout.n,
            got: output.n().min(target.covered.len()),
        });
    }
    let mut acc = 0.0;
    let mut n_cov = 0usize;
    for i in 0..layout.n {
        if !target.covered[i] {
            continue;
        }
        let [c, s] = normalize_residual(output.residuals[i])?;
        let predicted = s.atan2(c);
        acc += (target.theta_star - layout.centers[i] - predicted).cos();
        n_cov += 1;
    }
    Ok(-acc / n_cov as f64)
}

/// Total orientation loss: confidence branch plus weighted localization
/// branch.
pub fn loss_total(
    output: &MultiBinOutput,
    target: &MultiBinTarget,
    layout: &BinLayout,
    weights: &LossWeights,
) -> Result<f64, MultiBinError> {
    Ok(loss_conf(&output.scores, target)? + weights.w * loss_loc(output, target, layout)?)
}
