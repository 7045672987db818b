//! Gray-level discretization of ROI intensities for texture analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{ImageVolume, RoiMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantAlgorithm {
    /// Uniform division of the ROI intensity range.
    Uniform,
    /// Equalization of the intensity histogram (rank-based).
    EqualProbability,
}

impl QuantAlgorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            QuantAlgorithm::Uniform => "unif",
            QuantAlgorithm::EqualProbability => "eqprob",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub algorithm: QuantAlgorithm,
    pub levels: u16,
}

impl QuantizerSpec {
    pub fn new(algorithm: QuantAlgorithm, levels: u16) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidArgument("quantizer needs at least 2 levels".into()));
        }
        Ok(Self { algorithm, levels })
    }
}

/// Quantized ROI: per-voxel gray level in [1, Ng], 0 marks background.
#[derive(Debug, Clone)]
pub struct QuantizedRoi {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub labels: Vec<u16>,
    pub levels: u16,
    pub n_voxels: usize,
}

impl QuantizedRoi {
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize, z: usize) -> u16 {
        self.labels[self.index(x, y, z)]
    }
}

/// Quantize ROI intensities to `spec.levels` gray levels.
///
/// Statistics (range, ranks) are computed over ROI voxels only. A constant
/// ROI maps every voxel to level 1.
pub fn quantize(vol: &ImageVolume, mask: &RoiMask, spec: QuantizerSpec) -> Result<QuantizedRoi> {
    mask.check_aligned(vol)?;
    let ng = spec.levels as usize;
    let n = vol.data.len();
    let roi: Vec<usize> = (0..n).filter(|&i| mask.data[i] == 1).collect();
    if roi.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut labels = vec![0u16; n];

    match spec.algorithm {
        QuantAlgorithm::Uniform => {
            let mut vmin = f64::MAX;
            let mut vmax = f64::MIN;
            for &i in &roi {
                let v = vol.data[i] as f64;
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
            let range = vmax - vmin;
            for &i in &roi {
                let v = vol.data[i] as f64;
                let label = if range == 0.0 {
                    1
                } else {
                    ((ng as f64 * (v - vmin) / range).floor() as usize + 1).min(ng)
                };
                labels[i] = label as u16;
            }
        }
        QuantAlgorithm::EqualProbability => {
            // Rank-based equalization: a value whose lowest sorted rank is r0
            // (0-based, over N ROI voxels) gets level floor(r0*Ng/N)+1; ties
            // share the level of their lowest rank.
            let nn = roi.len();
            let mut order: Vec<usize> = (0..nn).collect();
            order.sort_by(|&a, &b| {
                vol.data[roi[a]].partial_cmp(&vol.data[roi[b]]).expect("finite values")
            });
            let mut k = 0;
            while k < nn {
                let v = vol.data[roi[order[k]]];
                let mut j = k;
                while j < nn && vol.data[roi[order[j]]] == v {
                    j += 1;
                }
                let level = ((k * ng / nn) + 1).min(ng) as u16;
                for &o in &order[k..j] {
                    labels[roi[o]] = level;
                }
                k = j;
            }
        }
    }

    Ok(QuantizedRoi {
        dims: vol.dims,
        spacing: vol.spacing,
        labels,
        levels: spec.levels,
        n_voxels: roi.len(),
    })
}
