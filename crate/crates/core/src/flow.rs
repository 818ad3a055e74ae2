//! Dense correspondence estimation.
//!
//! Correspondence is a pluggable component: anything that maps a source
//! RGB frame onto a destination RGB frame can drive the alignment. The
//! built-in estimator is a learning-free coarse-to-fine block matcher over
//! a grayscale pyramid; the simulator additionally provides an exact
//! oracle (see [`crate::sim::gt_flow`]).
//!
//! Flow is always computed demonstration -> live, because the foreground
//! mask lives on the demonstration frame.

use crate::imaging::{FlowField, RgbImage};
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("not a flow file (bad magic)")]
    BadMagic,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Block-matcher parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEstimatorConfig {
    /// Number of pyramid levels (>= 1). Levels that would shrink the image
    /// below one block are skipped.
    pub pyramid_levels: u32,
    /// Half-size of the matching block; the block spans `2r + 1` pixels.
    pub block_radius: u32,
    /// Integer search window half-size per level, pixels.
    pub search_radius: u32,
    /// Minimum grayscale block variance (8-bit^2 units) for a pixel to be
    /// considered matchable; flatter blocks are marked invalid.
    pub min_texture: f64,
}

impl Default for FlowEstimatorConfig {
    fn default() -> Self {
        Self { pyramid_levels: 4, block_radius: 3, search_radius: 4, min_texture: 25.0 }
    }
}

impl FlowEstimatorConfig {
    fn validate(&self) -> Result<(), FlowError> {
        if self.pyramid_levels < 1 {
            return Err(FlowError::InvalidConfig("pyramid_levels must be >= 1".into()));
        }
        if self.block_radius < 1 || self.search_radius < 1 {
            return Err(FlowError::InvalidConfig("radii must be >= 1".into()));
        }
        Ok(())
    }

    /// Largest displacement the coarse-to-fine search can recover.
    pub fn total_reach(&self) -> u32 {
        self.search_radius * ((1 << self.pyramid_levels) - 1)
    }
}

/// Image-based flow estimation, demo frame -> live frame.
pub trait ImageFlowEstimator {
    fn estimate(&self, src: &RgbImage, dst: &RgbImage) -> Result<FlowField, FlowError>;
}

/// Pyramidal SAD block matcher with parabolic sub-pixel refinement.
#[derive(Debug, Clone, Default)]
pub struct BlockMatcher {
    pub config: FlowEstimatorConfig,
}

impl BlockMatcher {
    pub fn new(config: FlowEstimatorConfig) -> Self {
        Self { config }
    }
}

impl ImageFlowEstimator for BlockMatcher {
    fn estimate(&self, src: &RgbImage, dst: &RgbImage) -> Result<FlowField, FlowError> {
        estimate_flow(src, dst, &self.config)
    }
}

struct Gray {
    w: i64,
    h: i64,
    data: Vec<u8>,
}

impl Gray {
    fn from_rgb(img: &RgbImage) -> Self {
        Self { w: img.width as i64, h: img.height as i64, data: img.to_gray() }
    }

    /// Border-clamped sample.
    #[inline]
    fn at(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.w - 1);
        let y = y.clamp(0, self.h - 1);
        self.data[(y * self.w + x) as usize]
    }

    fn halved(&self) -> Gray {
        let w = (self.w / 2).max(1);
        let h = (self.h / 2).max(1);
        let mut data = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let sum = self.at(2 * x, 2 * y) as u32
                    + self.at(2 * x + 1, 2 * y) as u32
                    + self.at(2 * x, 2 * y + 1) as u32
                    + self.at(2 * x + 1, 2 * y + 1) as u32;
                data.push(((sum + 2) / 4) as u8);
            }
        }
        Gray { w, h, data }
    }
}

/// Block SAD with border-clamped sampling; aborts once `cutoff` is reached
/// (the caller only cares whether this beats its current best).
fn sad_clamped(a: &Gray, ax: i64, ay: i64, b: &Gray, bx: i64, by: i64, r: i64, cutoff: u32) -> u32 {
    let mut total = 0u32;
    for dy in -r..=r {
        for dx in -r..=r {
            total += a.at(ax + dx, ay + dy).abs_diff(b.at(bx + dx, by + dy)) as u32;
        }
        if total >= cutoff {
            return total;
        }
    }
    total
}

/// Contiguous-row SAD for blocks fully inside both images.
fn sad_interior(a: &Gray, ax: i64, ay: i64, b: &Gray, bx: i64, by: i64, r: i64, cutoff: u32) -> u32 {
    let n = (2 * r + 1) as usize;
    let a0 = ((ay - r) * a.w + (ax - r)) as usize;
    let b0 = ((by - r) * b.w + (bx - r)) as usize;
    let (aw, bw) = (a.w as usize, b.w as usize);
    let mut total = 0u32;
    for row in 0..n {
        let ra = &a.data[a0 + row * aw..a0 + row * aw + n];
        let rb = &b.data[b0 + row * bw..b0 + row * bw + n];
        total += ra.iter().zip(rb).map(|(x, y)| x.abs_diff(*y) as u32).sum::<u32>();
        if total >= cutoff {
            return total;
        }
    }
    total
}

#[inline]
fn sad(a: &Gray, ax: i64, ay: i64, b: &Gray, bx: i64, by: i64, r: i64, cutoff: u32) -> u32 {
    let interior = ax >= r
        && ay >= r
        && ax + r < a.w
        && ay + r < a.h
        && bx >= r
        && by >= r
        && bx + r < b.w
        && by + r < b.h;
    if interior {
        sad_interior(a, ax, ay, b, bx, by, r, cutoff)
    } else {
        sad_clamped(a, ax, ay, b, bx, by, r, cutoff)
    }
}

fn block_variance(img: &Gray, x: i64, y: i64, r: i64) -> f64 {
    let mut sum = 0u64;
    let mut sum_sq = 0u64;
    for dy in -r..=r {
        for dx in -r..=r {
            let v = img.at(x + dx, y + dy) as u64;
            sum += v;
            sum_sq += v * v;
        }
    }
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mean = sum as f64 / n;
    sum_sq as f64 / n - mean * mean
}

/// One parabola through three costs; offset of the interpolated minimum
/// from the center sample, clamped to half a pixel.
#[inline]
fn parabolic_offset(c_minus: u32, c_center: u32, c_plus: u32) -> f64 {
    let denom = c_minus as f64 + c_plus as f64 - 2.0 * c_center as f64;
    if denom <= 0.0 {
        return 0.0;
    }
    (0.5 * (c_minus as f64 - c_plus as f64) / denom).clamp(-0.5, 0.5)
}

/// Coarse-to-fine block matching from `src` to `dst`.
///
/// Per level, each pixel's displacement minimizes the block SAD within the
/// search window centered on the upsampled coarser estimate, then gets a
/// parabolic sub-pixel refinement (skipped at window edges). Pixels whose
/// source block variance falls below `min_texture` are invalid.
pub fn estimate_flow(
    src: &RgbImage,
    dst: &RgbImage,
    cfg: &FlowEstimatorConfig,
) -> Result<FlowField, FlowError> {
    cfg.validate()?;
    if (src.width, src.height) != (dst.width, dst.height) {
        return Err(FlowError::DimensionMismatch(src.width, src.height, dst.width, dst.height));
    }

    let block = (2 * cfg.block_radius + 1) as i64;
    let mut src_pyr = vec![Gray::from_rgb(src)];
    let mut dst_pyr = vec![Gray::from_rgb(dst)];
    for _ in 1..cfg.pyramid_levels {
        let next = src_pyr.last().unwrap().halved();
        if next.w < block || next.h < block {
            break;
        }
        src_pyr.push(next);
        dst_pyr.push(dst_pyr.last().unwrap().halved());
    }

    let r = cfg.block_radius as i64;

    // Flow estimate at the current pyramid level, coarsest first.
    let mut du: Vec<f64> = Vec::new();
    let mut dv: Vec<f64> = Vec::new();

    for level in (0..src_pyr.len()).rev() {
        // The coarsest level has no prior to refine, so it searches a
        // doubled window; displacements at the nominal reach must be inside
        // some window rather than only approachable through edge hits.
        let s = if level == src_pyr.len() - 1 && src_pyr.len() > 1 {
            2 * cfg.search_radius as i64
        } else {
            cfg.search_radius as i64
        };

        // Window offsets ordered center-out so that cost ties resolve
        // toward the window center instead of an arbitrary corner.
        let mut scan: Vec<(i64, i64)> = Vec::new();
        for wy in -s..=s {
            for wx in -s..=s {
                scan.push((wx, wy));
            }
        }
        scan.sort_by_key(|&(wx, wy)| (wx * wx + wy * wy, wy, wx));

        let sg = &src_pyr[level];
        let dg = &dst_pyr[level];
        let mut next_du = vec![0.0f64; (sg.w * sg.h) as usize];
        let mut next_dv = vec![0.0f64; (sg.w * sg.h) as usize];

        for y in 0..sg.h {
            for x in 0..sg.w {
                // Prior from the coarser level, upsampled by two.
                let (pu, pv) = if du.is_empty() {
                    (0.0, 0.0)
                } else {
                    let coarse = &src_pyr[level + 1];
                    let cx = (x / 2).min(coarse.w - 1);
                    let cy = (y / 2).min(coarse.h - 1);
                    let i = (cy * coarse.w + cx) as usize;
                    (2.0 * du[i], 2.0 * dv[i])
                };
                let base_x = pu.round() as i64;
                let base_y = pv.round() as i64;

                // Search around the prior; when the prior has drifted out
                // of the window, also search around zero so a bad coarse
                // estimate cannot run away.
                let mut best = u32::MAX;
                let mut best_dx = 0i64;
                let mut best_dy = 0i64;
                let mut best_edge = false;
                let run_zero = base_x.abs() > s || base_y.abs() > s;
                let centers: &[(i64, i64)] =
                    if run_zero { &[(base_x, base_y), (0, 0)] } else { &[(base_x, base_y)] };
                for &(cx, cy) in centers {
                    for &(wx, wy) in &scan {
                        let c = sad(sg, x, y, dg, x + cx + wx, y + cy + wy, r, best);
                        if c < best {
                            best = c;
                            best_dx = cx + wx;
                            best_dy = cy + wy;
                            best_edge = wx.abs() == s || wy.abs() == s;
                        }
                    }
                    if best == 0 {
                        break;
                    }
                }

                // Sub-pixel refinement from the neighboring costs; skipped at
                // window edges and on exact matches.
                let mut sub_x = 0.0;
                let mut sub_y = 0.0;
                if !best_edge && best > 0 {
                    let c =
                        |dx: i64, dy: i64| sad(sg, x, y, dg, x + dx, y + dy, r, u32::MAX);
                    sub_x = parabolic_offset(c(best_dx - 1, best_dy), best, c(best_dx + 1, best_dy));
                    sub_y = parabolic_offset(c(best_dx, best_dy - 1), best, c(best_dx, best_dy + 1));
                }

                let i = (y * sg.w + x) as usize;
                next_du[i] = best_dx as f64 + sub_x;
                next_dv[i] = best_dy as f64 + sub_y;
            }
        }
        du = next_du;
        dv = next_dv;
    }

    let full = &src_pyr[0];
    let mut field = FlowField::zero(src.width, src.height);
    for y in 0..full.h {
        for x in 0..full.w {
            let i = (y * full.w + x) as usize;
            let textured = block_variance(full, x, y, r) >= cfg.min_texture;
            if textured {
                field.set(x as u32, y as u32, du[i] as f32, dv[i] as f32, true);
            } else {
                field.set(x as u32, y as u32, 0.0, 0.0, false);
            }
        }
    }
    Ok(field)
}

/// Mean endpoint error and validity fraction of an estimated field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointError {
    /// Mean Euclidean displacement error over pixels valid in both fields.
    pub mean: f64,
    /// Fraction of all pixels valid in the estimated field.
    pub fraction_valid: f64,
}

pub fn endpoint_error(estimated: &FlowField, truth: &FlowField) -> EndpointError {
    assert_eq!(
        (estimated.width, estimated.height),
        (truth.width, truth.height),
        "endpoint_error needs equal dimensions"
    );
    let n = (estimated.width * estimated.height) as usize;
    let mut sum = 0.0;
    let mut both = 0usize;
    let mut valid = 0usize;
    for i in 0..n {
        if estimated.valid[i] {
            valid += 1;
            if truth.valid[i] {
                both += 1;
                let du = estimated.du[i] as f64 - truth.du[i] as f64;
                let dv = estimated.dv[i] as f64 - truth.dv[i] as f64;
                sum += (du * du + dv * dv).sqrt();
            }
        }
    }
    EndpointError {
        mean: if both > 0 { sum / both as f64 } else { 0.0 },
        fraction_valid: valid as f64 / n as f64,
    }
}

const FLO_MAGIC: f32 = 202021.25;
/// Components at or above this magnitude mark invalid pixels in `.flo` files.
const FLO_INVALID: f32 = 1e9;

/// Middlebury-style flow dump: little-endian magic, width, height, then
/// interleaved float (du, dv) per pixel. Invalid pixels are written as
/// `(1e9, 1e9)`.
pub fn write_flo(field: &FlowField, w: &mut impl Write) -> Result<(), FlowError> {
    w.write_all(&FLO_MAGIC.to_le_bytes())?;
    w.write_all(&(field.width as i32).to_le_bytes())?;
    w.write_all(&(field.height as i32).to_le_bytes())?;
    for i in 0..(field.width * field.height) as usize {
        let (u, v) =
            if field.valid[i] { (field.du[i], field.dv[i]) } else { (FLO_INVALID, FLO_INVALID) };
        w.write_all(&u.to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_flo(r: &mut impl Read) -> Result<FlowField, FlowError> {
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    if f32::from_le_bytes(buf4) != FLO_MAGIC {
        return Err(FlowError::BadMagic);
    }
    r.read_exact(&mut buf4)?;
    let width = i32::from_le_bytes(buf4) as u32;
    r.read_exact(&mut buf4)?;
    let height = i32::from_le_bytes(buf4) as u32;
    let mut field = FlowField::zero(width, height);
    for i in 0..(width * height) as usize {
        r.read_exact(&mut buf4)?;
        let u = f32::from_le_bytes(buf4);
        r.read_exact(&mut buf4)?;
        let v = f32::from_le_bytes(buf4);
        if u.abs() >= FLO_INVALID / 10.0 || v.abs() >= FLO_INVALID / 10.0 {
            field.du[i] = 0.0;
            field.dv[i] = 0.0;
            field.valid[i] = false;
        } else {
            field.du[i] = u;
            field.dv[i] = v;
        }
    }
    Ok(field)
}
