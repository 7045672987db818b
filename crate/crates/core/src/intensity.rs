//! First-order intensity features of the ROI intensity distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{ImageVolume, RoiMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityConfig {
    /// Histogram resolution recorded in provenance.
    pub n_histogram_bins: usize,
    /// Threshold evaluation count for the cumulative intensity-volume curve.
    pub n_auc_thresholds: usize,
    /// Fraction of the maximum below which a voxel counts as inactive.
    pub inactive_threshold_frac: f64,
    /// Exponent of the generalized effective total uptake power mean.
    pub getu_exponent: f64,
}

impl Default for IntensityConfig {
    fn default() -> Self {
        Self {
            n_histogram_bins: 100,
            n_auc_thresholds: 1000,
            inactive_threshold_frac: 0.4,
            getu_exponent: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityFeatures {
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub max: f64,
    pub peak: f64,
    pub mean: f64,
    pub auc_csh: f64,
    pub tlg: f64,
    pub pct_inactive: f64,
    pub getu: f64,
    /// Set when a feature is undefined for the input (e.g. single voxel).
    pub degenerate: bool,
}

impl IntensityFeatures {
    pub const NAMES: [&'static str; 10] = [
        "variance",
        "skewness",
        "kurtosis",
        "max",
        "peak",
        "mean",
        "auc_csh",
        "tlg",
        "pct_inactive",
        "getu",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.variance,
            self.skewness,
            self.kurtosis,
            self.max,
            self.peak,
            self.mean,
            self.auc_csh,
            self.tlg,
            self.pct_inactive,
            self.getu,
        ]
    }
}

/// Compute the 10 first-order features over the ROI intensity multiset.
pub fn intensity_features(
    vol: &ImageVolume,
    mask: &RoiMask,
    cfg: &IntensityConfig,
) -> Result<IntensityFeatures> {
    mask.check_aligned(vol)?;
    let voxels = mask.set_voxels();
    if voxels.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let n = voxels.len() as f64;
    let values: Vec<f64> = voxels.iter().map(|&[x, y, z]| vol.get(x, y, z) as f64).collect();

    let mean = values.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in &values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let mut degenerate = false;
    let (skewness, kurtosis) = if m2 > 0.0 && values.len() > 1 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        degenerate = true;
        (0.0, 0.0)
    };

    let (max, max_idx) = values
        .iter()
        .enumerate()
        .fold((f64::MIN, 0), |(hi, hidx), (i, &v)| if v > hi { (v, i) } else { (hi, hidx) });

    // Peak: mean over voxel centers within a 1 cm^3 sphere around the maximum.
    let radius_mm = 10.0 * (3.0 / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
    let center = voxels[max_idx];
    let mut peak_sum = 0.0;
    let mut peak_n = 0usize;
    for (i, &[x, y, z]) in voxels.iter().enumerate() {
        let dx = (x as f64 - center[0] as f64) * vol.spacing[0];
        let dy = (y as f64 - center[1] as f64) * vol.spacing[1];
        let dz = (z as f64 - center[2] as f64) * vol.spacing[2];
        if (dx * dx + dy * dy + dz * dz).sqrt() <= radius_mm {
            peak_sum += values[i];
            peak_n += 1;
        }
    }
    let peak = peak_sum / peak_n as f64;

    // Area under the cumulative intensity-volume curve: fraction of ROI volume
    // with v >= t*max for t in [0, 1], trapezoidal rule.
    let nt = cfg.n_auc_thresholds.max(2);
    let mut auc_csh = 0.0;
    let frac_at = |t: f64| -> f64 {
        let thr = t * max;
        values.iter().filter(|&&v| v >= thr).count() as f64 / n
    };
    let mut prev = frac_at(0.0);
    for k in 1..nt {
        let t = k as f64 / (nt - 1) as f64;
        let cur = frac_at(t);
        auc_csh += 0.5 * (prev + cur) / (nt - 1) as f64;
        prev = cur;
    }

    let volume_cm3 = n * vol.voxel_volume_mm3() / 1000.0;
    let tlg = mean * volume_cm3;

    let inactive_thr = cfg.inactive_threshold_frac * max;
    let pct_inactive = values.iter().filter(|&&v| v < inactive_thr).count() as f64 / n;

    // Power mean is only defined for non-negative intensities; negative values
    // (HU) clamp to zero.
    let a = cfg.getu_exponent;
    let power_mean = (values.iter().map(|&v| v.max(0.0).powf(a)).sum::<f64>() / n).powf(1.0 / a);
    let getu = power_mean * volume_cm3;

    Ok(IntensityFeatures {
        variance: m2,
        skewness,
        kurtosis,
        max,
        peak,
        mean,
        auc_csh,
        tlg,
        pct_inactive,
        getu,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Modality;

    fn cube(values: Vec<f32>, n: usize, spacing: f64) -> (ImageVolume, RoiMask) {
        let dims = [n, n, n];
        let sp = [spacing; 3];
        let vol = ImageVolume::new(dims, sp, values, Modality::Pet).unwrap();
        let mask = RoiMask::new(dims, sp, vec![1; n * n * n]).unwrap();
        (vol, mask)
    }

    #[test]
    fn constant_roi_features() {
        let (vol, mask) = cube(vec![5.0; 27], 3, 1.0);
        let f = intensity_features(&vol, &mask, &IntensityConfig::default()).unwrap();
        assert_eq!(f.variance, 0.0);
        assert_eq!(f.max, 5.0);
        assert_eq!(f.mean, 5.0);
        assert_eq!(f.peak, 5.0);
        assert!((f.auc_csh - 1.0).abs() < 1e-12);
        assert_eq!(f.pct_inactive, 0.0);
    }

    #[test]
    fn tlg_is_mean_times_volume() {
        // 10 cm^3 at mean 2.0: 10x10x10 voxels of 10 mm^3 each
        let n = 10;
        let mut values = vec![2.0f32; n * n * n];
        values[0] = 1.0;
        values[1] = 3.0;
        let dims = [n, n, n];
        let sp = [10.0f64.cbrt(); 3];
        let vol = ImageVolume::new(dims, sp, values, Modality::Pet).unwrap();
        let mask = RoiMask::new(dims, sp, vec![1; n * n * n]).unwrap();
        let f = intensity_features(&vol, &mask, &IntensityConfig::default()).unwrap();
        assert!((f.tlg - 20.0).abs() < 1e-9);
    }

    #[test]
    fn moments_match_two_pass_oracle() {
        // random-ish 6^3 ROI vs an independent two-pass computation
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let values: Vec<f32> = (0..216).map(|_| (next() * 10.0) as f32).collect();
        let (vol, mask) = cube(values.clone(), 6, 1.0);
        let f = intensity_features(&vol, &mask, &IntensityConfig::default()).unwrap();

        let vals: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let skew = vals.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n / (var * var);
        assert!((f.variance - var).abs() / var < 1e-10);
        assert!((f.skewness - skew).abs() / skew.abs().max(1.0) < 1e-10);
        assert!((f.kurtosis - kurt).abs() / kurt < 1e-10);
    }

    #[test]
    fn single_voxel_is_degenerate() {
        let dims = [1, 1, 1];
        let vol = ImageVolume::new(dims, [1.0; 3], vec![4.0], Modality::Pet).unwrap();
        let mask = RoiMask::new(dims, [1.0; 3], vec![1]).unwrap();
        let f = intensity_features(&vol, &mask, &IntensityConfig::default()).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.skewness, 0.0);
        assert_eq!(f.kurtosis, 0.0);
    }

    #[test]
    fn pct_inactive_counts_below_fraction_of_max() {
        let (vol, mask) = cube(vec![1.0, 1.0, 1.0, 1.0, 10.0, 10.0, 10.0, 10.0], 2, 1.0);
        let f = intensity_features(&vol, &mask, &IntensityConfig::default()).unwrap();
        // threshold 4.0: the four 1.0 voxels are inactive
        assert!((f.pct_inactive - 0.5).abs() < 1e-12);
    }
}
