//! Volume/mask data model, RVF file I/O, isotropic resampling and ROI crop.
//!
//! The RVF file format is a UTF-8 text header terminated by a blank line,
//! with keys `dims = x y z`, `spacing = sx sy sz`, `dtype = f32|u8`,
//! `order = little`, followed by the raw payload in x-fastest order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    Pet,
    Ct,
}

impl Modality {
    pub fn tag(&self) -> &'static str {
        match self {
            Modality::Pet => "PET",
            Modality::Ct => "CT",
        }
    }
}

/// Dense 3D scalar grid with anisotropic physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub data: Vec<f32>,
    pub modality: Modality,
}

impl ImageVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f32>, modality: Modality) -> Result<Self> {
        check_geometry(dims, spacing)?;
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::SizeMismatch { expected: n, actual: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { dims, spacing, data, modality })
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }
}

/// Binary ROI mask aligned to an [`ImageVolume`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub data: Vec<u8>,
}

impl RoiMask {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<u8>) -> Result<Self> {
        check_geometry(dims, spacing)?;
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::SizeMismatch { expected: n, actual: data.len() });
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("mask values must be 0 or 1".into()));
        }
        if !data.iter().any(|&v| v == 1) {
            return Err(Error::EmptyRoi);
        }
        Ok(Self { dims, spacing, data })
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.index(x, y, z)] == 1
    }

    pub fn set_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Coordinates of all set voxels, x-fastest order.
    pub fn set_voxels(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    if self.is_set(x, y, z) {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }

    pub fn check_aligned(&self, vol: &ImageVolume) -> Result<()> {
        if self.dims != vol.dims || self.spacing != vol.spacing {
            return Err(Error::GeometryMismatch(format!(
                "mask {:?}/{:?} vs volume {:?}/{:?}",
                self.dims, self.spacing, vol.dims, vol.spacing
            )));
        }
        Ok(())
    }
}

fn check_geometry(dims: [usize; 3], spacing: [f64; 3]) -> Result<()> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument("zero dimension".into()));
    }
    if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument("spacing components must be positive".into()));
    }
    Ok(())
}

/// Isotropic resampling target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub target_spacing_mm: f64,
}

impl ResampleSpec {
    pub fn new(target_spacing_mm: f64) -> Result<Self> {
        if !(target_spacing_mm > 0.0) || !target_spacing_mm.is_finite() {
            return Err(Error::InvalidArgument("target spacing must be positive".into()));
        }
        Ok(Self { target_spacing_mm })
    }
}

// ---------------------------------------------------------------------------
// RVF I/O

struct RvfHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
}

fn parse_header(bytes: &[u8]) -> Result<(RvfHeader, usize)> {
    // Header is everything up to the first blank line ("\n\n").
    let mut end = None;
    for i in 0..bytes.len().saturating_sub(1) {
        if bytes[i] == b'\n' && bytes[i + 1] == b'\n' {
            end = Some(i);
            break;
        }
    }
    let end = end.ok_or_else(|| Error::MalformedHeader("no blank line terminating header".into()))?;
    let text = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::MalformedHeader("header is not UTF-8".into()))?;

    let mut dims = None;
    let mut spacing = None;
    let mut dtype = None;
    let mut order = None;
    for line in text.lines() {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::MalformedHeader(format!("line without '=': {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "dims" => {
                let v: Vec<usize> = value
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::MalformedHeader(format!("bad dims: {value:?}"))))
                    .collect::<Result<_>>()?;
                if v.len() != 3 || v.iter().any(|&d| d == 0) {
                    return Err(Error::MalformedHeader(format!("bad dims: {value:?}")));
                }
                dims = Some([v[0], v[1], v[2]]);
            }
            "spacing" => {
                let v: Vec<f64> = value
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::MalformedHeader(format!("bad spacing: {value:?}"))))
                    .collect::<Result<_>>()?;
                if v.len() != 3 || v.iter().any(|&s| !(s > 0.0)) {
                    return Err(Error::MalformedHeader(format!("bad spacing: {value:?}")));
                }
                spacing = Some([v[0], v[1], v[2]]);
            }
            "dtype" => {
                if value != "f32" && value != "u8" {
                    return Err(Error::MalformedHeader(format!("unsupported dtype: {value:?}")));
                }
                dtype = Some(value.to_string());
            }
            "order" => {
                if value != "little" {
                    return Err(Error::MalformedHeader(format!("unsupported byte order: {value:?}")));
                }
                order = Some(());
            }
            _ => return Err(Error::MalformedHeader(format!("unknown key: {key:?}"))),
        }
    }
    let header = RvfHeader {
        dims: dims.ok_or_else(|| Error::MalformedHeader("missing dims".into()))?,
        spacing: spacing.ok_or_else(|| Error::MalformedHeader("missing spacing".into()))?,
        dtype: dtype.ok_or_else(|| Error::MalformedHeader("missing dtype".into()))?,
    };
    order.ok_or_else(|| Error::MalformedHeader("missing order".into()))?;
    Ok((header, end + 2))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Load an f32 RVF volume.
pub fn load_volume(path: &Path, modality: Modality) -> Result<ImageVolume> {
    let bytes = read_file(path)?;
    let (header, offset) = parse_header(&bytes)?;
    if header.dtype != "f32" {
        return Err(Error::MalformedHeader(format!("expected dtype f32, found {}", header.dtype)));
    }
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    let payload = &bytes[offset..];
    if payload.len() != n * 4 {
        return Err(Error::SizeMismatch { expected: n, actual: payload.len() / 4 });
    }
    let mut data = Vec::with_capacity(n);
    for chunk in payload.chunks_exact(4) {
        data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }
    ImageVolume::new(header.dims, header.spacing, data, modality)
}

/// Load a u8 RVF mask.
pub fn load_mask(path: &Path) -> Result<RoiMask> {
    let bytes = read_file(path)?;
    let (header, offset) = parse_header(&bytes)?;
    if header.dtype != "u8" {
        return Err(Error::MalformedHeader(format!("expected dtype u8, found {}", header.dtype)));
    }
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    let payload = &bytes[offset..];
    if payload.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: payload.len() });
    }
    RoiMask::new(header.dims, header.spacing, payload.to_vec())
}

fn write_header(out: &mut Vec<u8>, dims: [usize; 3], spacing: [f64; 3], dtype: &str) {
    write!(
        out,
        "dims = {} {} {}\nspacing = {} {} {}\ndtype = {dtype}\norder = little\n\n",
        dims[0], dims[1], dims[2], spacing[0], spacing[1], spacing[2]
    )
    .expect("write to Vec cannot fail");
}

pub fn save_volume(path: &Path, vol: &ImageVolume) -> Result<()> {
    let mut out = Vec::with_capacity(vol.data.len() * 4 + 128);
    write_header(&mut out, vol.dims, vol.spacing, "f32");
    for v in &vol.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn save_mask(path: &Path, mask: &RoiMask) -> Result<()> {
    let mut out = Vec::with_capacity(mask.data.len() + 128);
    write_header(&mut out, mask.dims, mask.spacing, "u8");
    out.extend_from_slice(&mask.data);
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

// ---------------------------------------------------------------------------
// Resampling

/// Trilinear sample at continuous voxel index coordinates, clamped to edges.
fn trilinear_sample(vol: &ImageVolume, fx: f64, fy: f64, fz: f64) -> f64 {
    let [nx, ny, nz] = vol.dims;
    let clamp = |f: f64, n: usize| f.max(0.0).min((n - 1) as f64);
    let fx = clamp(fx, nx);
    let fy = clamp(fy, ny);
    let fz = clamp(fz, nz);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let z0 = fz.floor() as usize;
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    let z1 = (z0 + 1).min(nz - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let tz = fz - z0 as f64;
    let g = |x: usize, y: usize, z: usize| vol.get(x, y, z) as f64;
    let c00 = g(x0, y0, z0) * (1.0 - tx) + g(x1, y0, z0) * tx;
    let c10 = g(x0, y1, z0) * (1.0 - tx) + g(x1, y1, z0) * tx;
    let c01 = g(x0, y0, z1) * (1.0 - tx) + g(x1, y0, z1) * tx;
    let c11 = g(x0, y1, z1) * (1.0 - tx) + g(x1, y1, z1) * tx;
    let c0 = c00 * (1.0 - ty) + c10 * ty;
    let c1 = c01 * (1.0 - ty) + c11 * ty;
    c0 * (1.0 - tz) + c1 * tz
}

/// Resample a volume/mask pair to an isotropic grid.
///
/// The target grid is anchored at the input volume origin with sample points
/// at voxel centers; intensities interpolate trilinearly, the mask by nearest
/// neighbour thresholded at 0.5. Out-of-bounds samples clamp to edge voxels.
pub fn resample_isotropic(
    vol: &ImageVolume,
    mask: &RoiMask,
    spec: ResampleSpec,
) -> Result<(ImageVolume, RoiMask)> {
    mask.check_aligned(vol)?;
    let s = spec.target_spacing_mm;
    let out_dims = [
        ((vol.dims[0] as f64 * vol.spacing[0]) / s).ceil() as usize,
        ((vol.dims[1] as f64 * vol.spacing[1]) / s).ceil() as usize,
        ((vol.dims[2] as f64 * vol.spacing[2]) / s).ceil() as usize,
    ];
    let out_dims = [out_dims[0].max(1), out_dims[1].max(1), out_dims[2].max(1)];
    let n = out_dims[0] * out_dims[1] * out_dims[2];
    let mut data = Vec::with_capacity(n);
    let mut mdata = Vec::with_capacity(n);
    for z in 0..out_dims[2] {
        let zmm = (z as f64 + 0.5) * s;
        let fz = zmm / vol.spacing[2] - 0.5;
        for y in 0..out_dims[1] {
            let ymm = (y as f64 + 0.5) * s;
            let fy = ymm / vol.spacing[1] - 0.5;
            for x in 0..out_dims[0] {
                let xmm = (x as f64 + 0.5) * s;
                let fx = xmm / vol.spacing[0] - 0.5;
                data.push(trilinear_sample(vol, fx, fy, fz) as f32);
                // nearest neighbour for the mask, clamped
                let nn = |f: f64, dim: usize| (f.round().max(0.0) as usize).min(dim - 1);
                let mv = mask.data
                    [mask.index(nn(fx, mask.dims[0]), nn(fy, mask.dims[1]), nn(fz, mask.dims[2]))];
                mdata.push(if (mv as f64) >= 0.5 { 1u8 } else { 0u8 });
            }
        }
    }
    if !mdata.iter().any(|&v| v == 1) {
        return Err(Error::DegenerateRoi(s));
    }
    let out_vol = ImageVolume::new(out_dims, [s, s, s], data, vol.modality)?;
    let out_mask = RoiMask::new(out_dims, [s, s, s], mdata)?;
    Ok((out_vol, out_mask))
}

// ---------------------------------------------------------------------------
// Crop

/// Crop a volume/mask pair to the tight bounding box of set mask voxels,
/// dilated by `margin` voxels and clamped to the volume bounds.
pub fn crop_to_roi(
    vol: &ImageVolume,
    mask: &RoiMask,
    margin: usize,
) -> Result<(ImageVolume, RoiMask)> {
    mask.check_aligned(vol)?;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for v in mask.set_voxels() {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    if lo[0] == usize::MAX {
        return Err(Error::EmptyRoi);
    }
    for a in 0..3 {
        lo[a] = lo[a].saturating_sub(margin);
        hi[a] = (hi[a] + margin).min(mask.dims[a] - 1);
    }
    let out_dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let n = out_dims[0] * out_dims[1] * out_dims[2];
    let mut data = Vec::with_capacity(n);
    let mut mdata = Vec::with_capacity(n);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                data.push(vol.get(x, y, z));
                mdata.push(mask.data[mask.index(x, y, z)]);
            }
        }
    }
    let out_vol = ImageVolume::new(out_dims, vol.spacing, data, vol.modality)?;
    let out_mask = RoiMask::new(out_dims, vol.spacing, mdata)?;
    Ok((out_vol, out_mask))
}
