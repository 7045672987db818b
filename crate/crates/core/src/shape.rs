//! Morphological features of the ROI mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::convex_hull;
use crate::linalg::symmetric_eigenvalues_3x3;
use crate::volume::RoiMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    pub volume_mm3: f64,
    pub max_diameter_mm: f64,
    pub solidity: f64,
    pub eccentricity: f64,
    pub compactness: f64,
    /// Set when the convex hull is undefined (fewer than 4 non-coplanar voxels).
    pub degenerate: bool,
}

impl ShapeFeatures {
    pub const NAMES: [&'static str; 5] =
        ["volume_mm3", "max_diameter_mm", "solidity", "eccentricity", "compactness"];

    pub fn values(&self) -> [f64; 5] {
        [self.volume_mm3, self.max_diameter_mm, self.solidity, self.eccentricity, self.compactness]
    }
}

fn center_mm(v: [usize; 3], spacing: [f64; 3]) -> [f64; 3] {
    [v[0] as f64 * spacing[0], v[1] as f64 * spacing[1], v[2] as f64 * spacing[2]]
}

/// Compute the 5 morphological features.
///
/// Volume is voxel count times voxel volume; size is the maximum pairwise
/// distance between set-voxel centers; solidity compares the ROI voxel count
/// with the number of voxel centers inside the convex hull; eccentricity comes
/// from the coordinate covariance eigenvalues; compactness uses the exposed
/// voxel-face surface area.
pub fn shape_features(mask: &RoiMask) -> Result<ShapeFeatures> {
    let voxels = mask.set_voxels();
    if voxels.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let n = voxels.len();
    let sp = mask.spacing;
    let volume_mm3 = n as f64 * sp[0] * sp[1] * sp[2];

    // Surface voxels suffice for both the hull and the diameter.
    let in_roi = |x: i64, y: i64, z: i64| -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < mask.dims[0]
            && (y as usize) < mask.dims[1]
            && (z as usize) < mask.dims[2]
            && mask.is_set(x as usize, y as usize, z as usize)
    };
    let mut exposed_faces_area = 0.0;
    let face_area = [sp[1] * sp[2], sp[0] * sp[2], sp[0] * sp[1]];
    let mut surface: Vec<[usize; 3]> = Vec::new();
    for &[x, y, z] in &voxels {
        let (xi, yi, zi) = (x as i64, y as i64, z as i64);
        let nbrs = [
            (xi - 1, yi, zi, 0),
            (xi + 1, yi, zi, 0),
            (xi, yi - 1, zi, 1),
            (xi, yi + 1, zi, 1),
            (xi, yi, zi - 1, 2),
            (xi, yi, zi + 1, 2),
        ];
        let mut boundary = false;
        for (nx, ny, nz, axis) in nbrs {
            if !in_roi(nx, ny, nz) {
                exposed_faces_area += face_area[axis];
                boundary = true;
            }
        }
        if boundary {
            surface.push([x, y, z]);
        }
    }

    let surface_pts: Vec<[f64; 3]> = surface.iter().map(|&v| center_mm(v, sp)).collect();
    let hull = convex_hull(&surface_pts);

    let (solidity, degenerate, diameter_candidates): (f64, bool, Vec<[f64; 3]>) = match &hull {
        Some(h) => {
            // Count voxel centers of the bounding box inside the hull; per
            // (y,z) row the admissible x range is an interval.
            let mut lo = [usize::MAX; 3];
            let mut hi = [0usize; 3];
            for &v in &voxels {
                for a in 0..3 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
            let mut inside = 0usize;
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    let mut xlo = lo[0] as f64 * sp[0];
                    let mut xhi = hi[0] as f64 * sp[0];
                    let (ymm, zmm) = (y as f64 * sp[1], z as f64 * sp[2]);
                    let mut empty = false;
                    for f in &h.faces {
                        // f.normal . (x, ymm, zmm) <= offset
                        let rest = f.normal[1] * ymm + f.normal[2] * zmm;
                        let nx = f.normal[0];
                        let bound = f.offset - rest;
                        if nx.abs() < 1e-12 {
                            if bound < -1e-9 {
                                empty = true;
                                break;
                            }
                        } else if nx > 0.0 {
                            xhi = xhi.min(bound / nx);
                        } else {
                            xlo = xlo.max(bound / nx);
                        }
                    }
                    if empty || xhi < xlo - 1e-9 {
                        continue;
                    }
                    // voxel centers at x*sp[0] for integer x
                    let xlo_i = ((xlo - 1e-9) / sp[0]).ceil().max(lo[0] as f64) as usize;
                    let xhi_i = ((xhi + 1e-9) / sp[0]).floor().min(hi[0] as f64) as usize;
                    if xhi_i >= xlo_i {
                        inside += xhi_i - xlo_i + 1;
                    }
                }
            }
            let sol = if inside >= n { n as f64 / inside as f64 } else { 1.0 };
            let verts: Vec<[f64; 3]> =
                h.vertex_indices().into_iter().map(|i| surface_pts[i]).collect();
            (sol, false, verts)
        }
        None => {
            let all: Vec<[f64; 3]> = voxels.iter().map(|&v| center_mm(v, sp)).collect();
            (1.0, true, all)
        }
    };

    let mut diam2: f64 = 0.0;
    for i in 0..diameter_candidates.len() {
        for j in i + 1..diameter_candidates.len() {
            let a = diameter_candidates[i];
            let b = diameter_candidates[j];
            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            diam2 = diam2.max(d2);
        }
    }
    let max_diameter_mm = diam2.sqrt();

    // Coordinate covariance (population) of set-voxel centers.
    let mut mean = [0.0f64; 3];
    let centers: Vec<[f64; 3]> = voxels.iter().map(|&v| center_mm(v, sp)).collect();
    for c in &centers {
        for a in 0..3 {
            mean[a] += c[a];
        }
    }
    for a in 0..3 {
        mean[a] /= n as f64;
    }
    let mut cov = [[0.0f64; 3]; 3];
    for c in &centers {
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] += (c[a] - mean[a]) * (c[b] - mean[b]);
            }
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            cov[a][b] /= n as f64;
        }
    }
    let ev = symmetric_eigenvalues_3x3(cov);
    let eccentricity = if ev[0] > 1e-12 { (1.0 - (ev[2] / ev[0]).max(0.0)).sqrt() } else { 0.0 };

    let compactness = volume_mm3 / (std::f64::consts::PI.sqrt() * exposed_faces_area.powf(1.5));

    Ok(ShapeFeatures {
        volume_mm3,
        max_diameter_mm,
        solidity,
        eccentricity,
        compactness,
        degenerate,
    })
}
