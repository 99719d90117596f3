//! Masking of feature vectors into time-multiplexed drive waveforms.
//!
//! Each datapoint becomes `n_v` node values (features times a fixed random
//! mask), an affine rescale into the drive range, and `n_pad` reset nodes
//! at the end.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskDistribution {
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform01,
    /// Uniform on `[-1, 1)`.
    UniformPm1,
    /// `-1` or `+1` with equal probability.
    BinaryPm1,
}

impl fmt::Display for MaskDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskDistribution::Uniform01 => "uniform01",
            MaskDistribution::UniformPm1 => "uniform_pm1",
            MaskDistribution::BinaryPm1 => "binary_pm1",
        })
    }
}

impl FromStr for MaskDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(MaskDistribution::Uniform01),
            "uniform_pm1" => Ok(MaskDistribution::UniformPm1),
            "binary_pm1" => Ok(MaskDistribution::BinaryPm1),
            other => Err(Error::param(format!("unknown mask distribution {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    /// `F × N_v`.
    pub matrix: DMatrix<f64>,
    pub seed: u64,
    pub distribution: MaskDistribution,
}

impl Mask {
    pub fn n_features(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_v(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn make_mask(
    n_features: usize,
    n_v: usize,
    distribution: MaskDistribution,
    seed: u64,
) -> Result<Mask> {
    if n_features == 0 || n_v == 0 {
        return Err(Error::param(format!(
            "mask dimensions must be positive, got {n_features} x {n_v}"
        )));
    }
    let mut rng = seed::rng(seed);
    // Filled row by row so a given seed yields the same entries regardless of
    // the matrix storage order.
    let mut matrix = DMatrix::<f64>::zeros(n_features, n_v);
    for i in 0..n_features {
        for j in 0..n_v {
            matrix[(i, j)] = match distribution {
                MaskDistribution::Uniform01 => rng.random::<f64>(),
                MaskDistribution::UniformPm1 => rng.random_range(-1.0..1.0),
                MaskDistribution::BinaryPm1 => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
    }
    Ok(Mask {
        matrix,
        seed,
        distribution,
    })
}

/// Affine map `value ↦ gain · value + offset` applied to masked values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveScale {
    pub gain: f64,
    pub offset: f64,
}

impl DriveScale {
    pub const IDENTITY: DriveScale = DriveScale {
        gain: 1.0,
        offset: 0.0,
    };

    /// Min-max fit sending the smallest observed value to `drive_min` and the
    /// largest to `drive_max`. A constant input maps everything to `drive_min`.
    pub fn fit<'a>(
        values: impl IntoIterator<Item = &'a f64>,
        drive_min: f64,
        drive_max: f64,
    ) -> Self {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return DriveScale {
                gain: 0.0,
                offset: drive_min,
            };
        }
        let gain = (drive_max - drive_min) / (hi - lo);
        DriveScale {
            gain,
            offset: drive_min - gain * lo,
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        self.gain * v + self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveConfig {
    /// Virtual node duration θ in seconds.
    pub theta_s: f64,
    /// Reset nodes appended after every datapoint.
    pub n_pad: usize,
    pub reset_level: f64,
    pub drive_min: f64,
    pub drive_max: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            theta_s: 250e-12,
            n_pad: 8,
            reset_level: 0.0,
            drive_min: 0.0,
            drive_max: 1.0,
        }
    }
}

impl DriveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_s.is_finite() && self.theta_s > 0.0) {
            return Err(Error::param("theta_s must be positive"));
        }
        if !(self.drive_min.is_finite()
            && self.drive_max.is_finite()
            && self.drive_min <= self.drive_max)
        {
            return Err(Error::param(
                "drive range must be finite with drive_min <= drive_max",
            ));
        }
        if !self.reset_level.is_finite() {
            return Err(Error::param("reset_level must be finite"));
        }
        Ok(())
    }

    pub fn reset_duration_s(&self) -> f64 {
        self.n_pad as f64 * self.theta_s
    }
}

/// Piecewise-constant drive for one datapoint: `n_v` masked nodes followed by
/// `n_pad` reset nodes, each lasting `theta_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSignal {
    pub node_values: Vec<f64>,
    pub theta_s: f64,
    pub n_pad: usize,
    pub scale: DriveScale,
}

impl DriveSignal {
    pub fn len(&self) -> usize {
        self.node_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_values.is_empty()
    }

    pub fn n_v(&self) -> usize {
        self.node_values.len() - self.n_pad
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 * self.theta_s
    }

    /// Duration of the masked part, excluding the reset padding.
    pub fn active_duration_s(&self) -> f64 {
        self.n_v() as f64 * self.theta_s
    }
}

/// Row vector `features · mask`, before any scaling.
pub fn mask_features(features: &[f64], mask: &Mask) -> Result<Vec<f64>> {
    if features.len() != mask.n_features() {
        return Err(Error::param(format!(
            "datapoint has {} features but the mask expects {}",
            features.len(),
            mask.n_features()
        )));
    }
    let m = &mask.matrix;
    let out: Vec<f64> = (0..m.ncols())
        .map(|j| {
            let col = m.column(j);
            features.iter().zip(col.iter()).map(|(x, w)| x * w).sum()
        })
        .collect();
    if let Some(j) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite masked drive at node {j}")));
    }
    Ok(out)
}

pub fn encode_datapoint(
    features: &[f64],
    mask: &Mask,
    cfg: &DriveConfig,
    scale: DriveScale,
) -> Result<DriveSignal> {
    let masked = mask_features(features, mask)?;
    Ok(build_signal(&masked, cfg, scale))
}

fn build_signal(masked: &[f64], cfg: &DriveConfig, scale: DriveScale) -> DriveSignal {
    let mut node_values: Vec<f64> = masked.iter().map(|&v| scale.apply(v)).collect();
    node_values.extend(std::iter::repeat_n(cfg.reset_level, cfg.n_pad));
    DriveSignal {
        node_values,
        theta_s: cfg.theta_s,
        n_pad: cfg.n_pad,
        scale,
    }
}

#[derive(Clone, Debug)]
pub struct EncodedDataset {
    pub signals: Vec<DriveSignal>,
    pub scale: DriveScale,
}

impl EncodedDataset {
    pub fn total_duration_s(&self) -> f64 {
        self.signals.iter().map(DriveSignal::duration_s).sum()
    }
}

/// Encode every datapoint with one drive scale fitted over the whole set.
pub fn encode_dataset(ds: &Dataset, mask: &Mask, cfg: &DriveConfig) -> Result<EncodedDataset> {
    cfg.validate()?;
    let masked = (0..ds.n_points())
        .map(|i| mask_features(&ds.row(i), mask))
        .collect::<Result<Vec<_>>>()?;
    let scale = DriveScale::fit(masked.iter().flatten(), cfg.drive_min, cfg.drive_max);
    let signals = masked.iter().map(|m| build_signal(m, cfg, scale)).collect();
    Ok(EncodedDataset { signals, scale })
}

/// Encode with a scale fixed in advance, e.g. one fitted on a training set.
pub fn encode_dataset_with_scale(
    ds: &Dataset,
    mask: &Mask,
    cfg: &DriveConfig,
    scale: DriveScale,
) -> Result<Vec<DriveSignal>> {
    cfg.validate()?;
    (0..ds.n_points())
        .map(|i| encode_datapoint(&ds.row(i), mask, cfg, scale))
        .collect()
}

/// Two-column `time_s,value` CSV of consecutive signals, one sample per node
/// taken at the start of its slot.
pub fn write_drive_csv(path: &Path, signals: &[DriveSignal]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "value"])?;
    let mut t0 = 0.0;
    for s in signals {
        for (i, v) in s.node_values.iter().enumerate() {
            let t = t0 + i as f64 * s.theta_s;
            w.write_record([t.to_string(), v.to_string()])?;
        }
        t0 += s.duration_s();
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
