//! Per-patient feature extraction across the parameter grid.
//!
//! Per modality the layout is 10 intensity + 5 shape + 40 texture features
//! per grid combination. The full grid (5 voxel sizes x 2 quantization
//! algorithms x 4 gray-level counts = 40 combinations) yields 1615 features.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::intensity::{intensity_features, IntensityConfig, IntensityFeatures};
use crate::quantize::{quantize, QuantAlgorithm, QuantizerSpec};
use crate::shape::{shape_features, ShapeFeatures};
use crate::texture::{build_matrices, texture_features, MatrixConfig};
use crate::volume::{crop_to_roi, resample_isotropic, ImageVolume, Modality, ResampleSpec, RoiMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub voxel_size_mm: f64,
    pub quantizer: QuantizerSpec,
}

/// The full 40-combination extraction grid.
pub fn full_grid() -> Vec<ExtractionParams> {
    let mut grid = Vec::with_capacity(40);
    for vs in [1.0, 2.0, 3.0, 4.0, 5.0] {
        for alg in [QuantAlgorithm::EqualProbability, QuantAlgorithm::Uniform] {
            for ng in [8u16, 16, 32, 64] {
                grid.push(ExtractionParams {
                    voxel_size_mm: vs,
                    quantizer: QuantizerSpec { algorithm: alg, levels: ng },
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub intensity: IntensityConfig,
    pub matrix: MatrixConfig,
    /// Bounding-box margin (voxels) applied before resampling.
    pub crop_margin: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            intensity: IntensityConfig::default(),
            matrix: MatrixConfig::default(),
            crop_margin: 2,
        }
    }
}

/// One extracted feature value with naming provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub value: f64,
    pub degenerate: bool,
}

/// Column name, e.g. `PET_GLSZM_GLN__vs3_unif_ng32`.
pub fn texture_column_name(
    modality: Modality,
    family: &str,
    feature: &str,
    params: &ExtractionParams,
) -> String {
    format!(
        "{}_{}_{}__vs{}_{}_ng{}",
        modality.tag(),
        family,
        feature,
        params.voxel_size_mm,
        params.quantizer.algorithm.tag(),
        params.quantizer.levels
    )
}

pub fn scalar_column_name(modality: Modality, family: &str, feature: &str) -> String {
    format!("{}_{}_{}", modality.tag(), family, feature)
}

/// Extract all features of one modality: 10 intensity + 5 shape + 40 per grid
/// combination.
pub fn extract_modality(
    vol: &ImageVolume,
    mask: &RoiMask,
    grid: &[ExtractionParams],
    cfg: &ExtractionConfig,
) -> Result<Vec<Feature>> {
    mask.check_aligned(vol)?;
    let mut out = Vec::with_capacity(15 + 40 * grid.len());

    let intensity: IntensityFeatures = intensity_features(vol, mask, &cfg.intensity)?;
    for (name, value) in IntensityFeatures::NAMES.iter().zip(intensity.values()) {
        out.push(Feature {
            name: scalar_column_name(vol.modality, "INTENSITY", name),
            value,
            degenerate: intensity.degenerate && (*name == "skewness" || *name == "kurtosis"),
        });
    }

    let shape: ShapeFeatures = shape_features(mask)?;
    for (name, value) in ShapeFeatures::NAMES.iter().zip(shape.values()) {
        out.push(Feature {
            name: scalar_column_name(vol.modality, "SHAPE", name),
            value,
            degenerate: shape.degenerate && *name == "solidity",
        });
    }

    // Texture cost is bounded by cropping to the ROI box before resampling.
    let (cropped_vol, cropped_mask) = crop_to_roi(vol, mask, cfg.crop_margin)?;
    for params in grid {
        let spec = ResampleSpec::new(params.voxel_size_mm)?;
        let (rvol, rmask) = resample_isotropic(&cropped_vol, &cropped_mask, spec)?;
        let q = quantize(&rvol, &rmask, params.quantizer)?;
        let matrices = build_matrices(&q, &cfg.matrix);
        let features = texture_features(&matrices);
        for (family, name, value) in features.named() {
            let flagged = features
                .degenerate
                .iter()
                .any(|d| *d == family || *d == format!("{family}_{name}"));
            out.push(Feature {
                name: texture_column_name(vol.modality, family, name, params),
                value,
                degenerate: flagged,
            });
        }
    }
    Ok(out)
}

/// Extract the combined PET + CT feature vector (2 x 1615 for the full grid).
pub fn extract_all(
    pet: &ImageVolume,
    ct: &ImageVolume,
    mask: &RoiMask,
    grid: &[ExtractionParams],
    cfg: &ExtractionConfig,
) -> Result<Vec<Feature>> {
    let mut out = extract_modality(pet, mask, grid, cfg)?;
    out.extend(extract_modality(ct, mask, grid, cfg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Modality;

    fn sample_pair(n: usize) -> (ImageVolume, ImageVolume, RoiMask) {
        let dims = [n, n, n];
        let sp = [2.0; 3];
        let mut data = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    data.push(((x * 3 + y * 5 + z * 7) % 11) as f32);
                }
            }
        }
        let pet = ImageVolume::new(dims, sp, data.clone(), Modality::Pet).unwrap();
        let ct = ImageVolume::new(dims, sp, data, Modality::Ct).unwrap();
        let mut m = vec![0u8; n * n * n];
        for z in 1..n - 1 {
            for y in 1..n - 1 {
                for x in 1..n - 1 {
                    m[x + n * (y + n * z)] = 1;
                }
            }
        }
        let mask = RoiMask::new(dims, sp, m).unwrap();
        (pet, ct, mask)
    }

    #[test]
    fn full_grid_has_40_combinations() {
        assert_eq!(full_grid().len(), 40);
    }

    #[test]
    fn single_combination_yields_55_columns() {
        let (pet, _, mask) = sample_pair(6);
        let grid = vec![full_grid()[0]];
        let f = extract_modality(&pet, &mask, &grid, &ExtractionConfig::default()).unwrap();
        assert_eq!(f.len(), 55);
    }

    #[test]
    fn full_grid_yields_1615_per_modality() {
        let (pet, ct, mask) = sample_pair(6);
        let f = extract_all(&pet, &ct, &mask, &full_grid(), &ExtractionConfig::default()).unwrap();
        assert_eq!(f.len(), 2 * 1615);
        let pet_cols = f.iter().filter(|c| c.name.starts_with("PET_")).count();
        assert_eq!(pet_cols, 1615);
    }

    #[test]
    fn extraction_is_deterministic() {
        let (pet, ct, mask) = sample_pair(5);
        let grid = &full_grid()[..4];
        let cfg = ExtractionConfig::default();
        let a = extract_all(&pet, &ct, &mask, grid, &cfg).unwrap();
        let b = extract_all(&pet, &ct, &mask, grid, &cfg).unwrap();
        let av: Vec<f64> = a.iter().map(|f| f.value).collect();
        let bv: Vec<f64> = b.iter().map(|f| f.value).collect();
        assert_eq!(av, bv);
    }

    #[test]
    fn column_name_format() {
        let params = ExtractionParams {
            voxel_size_mm: 3.0,
            quantizer: QuantizerSpec { algorithm: QuantAlgorithm::Uniform, levels: 32 },
        };
        assert_eq!(
            texture_column_name(Modality::Pet, "GLSZM", "GLN", &params),
            "PET_GLSZM_GLN__vs3_unif_ng32"
        );
    }
}
