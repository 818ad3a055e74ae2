//! Image containers, the demonstration on-disk format, and flow-driven
//! mask warping.
//!
//! Depth is carried in meters everywhere in memory; the file format stores
//! millimeters in 16-bit PGM. Invalid depth is exactly 0.

mod netpbm;
mod store;

pub use netpbm::{read_pgm16, read_pgm8, read_ppm, write_pgm16, write_pgm8, write_ppm};
pub use store::{load_demo, save_demo, DemoIoError};

use crate::geometry::{unproject, CameraIntrinsics, PointCloud};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImagingError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
}

fn check_dims(aw: u32, ah: u32, bw: u32, bh: u32) -> Result<(), ImagingError> {
    if (aw, ah) != (bw, bh) {
        return Err(ImagingError::DimensionMismatch(aw, ah, bw, bh));
    }
    Ok(())
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// `width * height * 3` bytes, RGB interleaved.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0; (width * height * 3) as usize] }
    }

    #[inline]
    pub fn pixel(&self, u: u32, v: u32) -> [u8; 3] {
        let i = 3 * (v * self.width + u) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        let i = 3 * (v * self.width + u) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Rec. 601 luma, one byte per pixel.
    pub fn to_gray(&self) -> Vec<u8> {
        self.data
            .chunks_exact(3)
            .map(|px| {
                (0.299 * px[0] as f32 + 0.587 * px[1] as f32 + 0.114 * px[2] as f32).round() as u8
            })
            .collect()
    }
}

/// Per-pixel metric depth in meters; 0 marks an invalid measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, depth: vec![0.0; (width * height) as usize] }
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> f64 {
        self.depth[(v * self.width + u) as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, meters: f64) {
        self.depth[(v * self.width + u) as usize] = meters;
    }

    /// Quantize to the on-disk millimeter grid (16-bit).
    pub fn quantize_mm(&mut self) {
        for d in &mut self.depth {
            let mm = (*d * 1000.0).round().clamp(0.0, u16::MAX as f64);
            *d = mm / 1000.0;
        }
    }
}

/// Binary foreground segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub foreground: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, foreground: vec![false; (width * height) as usize] }
    }

    pub fn filled(width: u32, height: u32) -> Self {
        Self { width, height, foreground: vec![true; (width * height) as usize] }
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> bool {
        self.foreground[(v * self.width + u) as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, fg: bool) {
        self.foreground[(v * self.width + u) as usize] = fg;
    }

    pub fn count(&self) -> usize {
        self.foreground.iter().filter(|&&b| b).count()
    }

    /// Morphological erosion with a square structuring element of the given
    /// radius. Under-segmentation is harmless downstream, so shaving off
    /// boundary pixels is a cheap way to keep correspondences off depth and
    /// texture discontinuities.
    pub fn eroded(&self, radius: u32) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as i64;
        let mut out = Mask::new(self.width, self.height);
        for v in 0..self.height as i64 {
            'px: for u in 0..self.width as i64 {
                for dv in -r..=r {
                    for du in -r..=r {
                        let (uu, vv) = (u + du, v + dv);
                        if uu < 0
                            || vv < 0
                            || uu >= self.width as i64
                            || vv >= self.height as i64
                            || !self.get(uu as u32, vv as u32)
                        {
                            continue 'px;
                        }
                    }
                }
                out.set(u as u32, v as u32, true);
            }
        }
        out
    }
}

/// Dense per-pixel 2D displacement mapping source pixels to destination
/// positions. Invalid pixels carry zero displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub du: Vec<f32>,
    pub dv: Vec<f32>,
    pub valid: Vec<bool>,
}

impl FlowField {
    /// All-valid zero flow.
    pub fn zero(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self { width, height, du: vec![0.0; n], dv: vec![0.0; n], valid: vec![true; n] }
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> (f32, f32, bool) {
        let i = (v * self.width + u) as usize;
        (self.du[i], self.dv[i], self.valid[i])
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, du: f32, dv: f32, valid: bool) {
        let i = (v * self.width + u) as usize;
        self.du[i] = if valid { du } else { 0.0 };
        self.dv[i] = if valid { dv } else { 0.0 };
        self.valid[i] = valid;
    }
}

/// Binary gripper command carried in the 5-DoF action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperCommand {
    Open,
    Close,
}

/// 5-DoF end-effector command: Cartesian offset, yaw increment, gripper.
///
/// `dx, dy` are expressed in the yaw-aligned image-plane axes of the
/// downward camera, `dz` is world-up positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dtheta: f64,
    pub gripper: GripperCommand,
}

impl Action {
    pub fn hold(gripper: GripperCommand) -> Self {
        Self { dx: 0.0, dy: 0.0, dz: 0.0, dtheta: 0.0, gripper }
    }
}

/// Proprioceptive state recorded with each observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proprio {
    /// Gripper height above the table, meters.
    pub gripper_height: f64,
    /// Gripper yaw, radians.
    pub yaw: f64,
    /// Finger opening width, meters.
    pub gripper_width: f64,
}

/// One RGB-D frame pair plus optional proprioceptive state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub rgb: RgbImage,
    pub depth: DepthImage,
    pub proprio: Option<Proprio>,
}

impl Observation {
    pub fn width(&self) -> u32 {
        self.rgb.width
    }

    pub fn height(&self) -> u32 {
        self.rgb.height
    }
}

/// One demonstration step: what was seen, what was salient, what was done.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoFrame {
    pub observation: Observation,
    pub mask: Mask,
    pub action: Action,
}

/// Ordered sequence of recorded frames sharing one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<DemoFrame>,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Forward-warp a mask along a flow field.
///
/// Every foreground pixel with valid flow splats onto the rounded warped
/// position; targets outside the image are dropped, holes are not filled.
pub fn warp_mask(mask: &Mask, flow: &FlowField) -> Result<Mask, ImagingError> {
    check_dims(mask.width, mask.height, flow.width, flow.height)?;
    let mut out = Mask::new(mask.width, mask.height);
    for v in 0..mask.height {
        for u in 0..mask.width {
            if !mask.get(u, v) {
                continue;
            }
            let (du, dv, valid) = flow.at(u, v);
            if !valid {
                continue;
            }
            let wu = (u as f64 + du as f64).round();
            let wv = (v as f64 + dv as f64).round();
            if wu >= 0.0 && wv >= 0.0 && wu < mask.width as f64 && wv < mask.height as f64 {
                out.set(wu as u32, wv as u32, true);
            }
        }
    }
    Ok(out)
}

/// Paired 3D correspondences between a demonstration frame and a live frame.
///
/// A demo pixel contributes a pair iff it is foreground, flow-valid, has
/// valid demo depth, and its rounded warped position lands in bounds on a
/// valid live depth pixel. The live point is unprojected at the sub-pixel
/// warped position using the depth sampled at the rounded pixel.
pub fn masked_correspondences(
    demo: &Observation,
    live: &Observation,
    demo_mask: &Mask,
    flow: &FlowField,
    intr: &CameraIntrinsics,
) -> (PointCloud, PointCloud) {
    let (w, h) = (demo.width(), demo.height());
    let mut src = PointCloud::new();
    let mut dst = PointCloud::new();
    for v in 0..h {
        for u in 0..w {
            if !demo_mask.get(u, v) {
                continue;
            }
            let (du, dv, valid) = flow.at(u, v);
            if !valid {
                continue;
            }
            let d_demo = demo.depth.at(u, v);
            if d_demo <= 0.0 {
                continue;
            }
            let wu = u as f64 + du as f64;
            let wv = v as f64 + dv as f64;
            let ru = wu.round();
            let rv = wv.round();
            if ru < 0.0 || rv < 0.0 || ru >= w as f64 || rv >= h as f64 {
                continue;
            }
            let d_live = live.depth.at(ru as u32, rv as u32);
            if d_live <= 0.0 {
                continue;
            }
            // Depths are positive here, so unprojection cannot fail.
            src.push(unproject((u as f64, v as f64), d_demo, intr).unwrap());
            dst.push(unproject((wu, wv), d_live, intr).unwrap());
        }
    }
    (src, dst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_flow(w: u32, h: u32, du: f32, dv: f32) -> FlowField {
        let mut f = FlowField::zero(w, h);
        for i in 0..(w * h) as usize {
            f.du[i] = du;
            f.dv[i] = dv;
        }
        f
    }

    #[test]
    fn warp_zero_flow_is_identity() {
        let mut mask = Mask::new(10, 10);
        mask.set(3, 4, true);
        mask.set(7, 2, true);
        let flow = FlowField::zero(10, 10);
        assert_eq!(warp_mask(&mask, &flow).unwrap(), mask);
    }

    #[test]
    fn warp_uniform_shift_moves_square() {
        let mut mask = Mask::new(10, 10);
        for v in 2..5 {
            for u in 1..4 {
                mask.set(u, v, true);
            }
        }
        let out = warp_mask(&mask, &uniform_flow(10, 10, 5.0, 0.0)).unwrap();
        for v in 0..10 {
            for u in 0..10 {
                assert_eq!(out.get(u, v), (2..5).contains(&v) && (6..9).contains(&u));
            }
        }
    }

    #[test]
    fn warp_drops_out_of_bounds_targets() {
        let mut mask = Mask::new(10, 10);
        mask.set(8, 8, true);
        let out = warp_mask(&mask, &uniform_flow(10, 10, 5.0, 0.0)).unwrap();
        assert_eq!(out.count(), 0);
    }

    #[test]
    fn warp_never_invents_pixels() {
        // Forward splatting can merge but not create.
        let mut mask = Mask::new(16, 16);
        for v in 0..16 {
            for u in 0..16 {
                mask.set(u, v, (u * 7 + v * 3) % 5 < 2);
            }
        }
        for (du, dv) in [(0.4, -0.4), (3.0, 2.0), (0.0, 0.0), (-7.0, 9.0)] {
            let out = warp_mask(&mask, &uniform_flow(16, 16, du, dv)).unwrap();
            assert!(out.count() <= mask.count());
        }
    }

    #[test]
    fn warp_rejects_dimension_mismatch() {
        let mask = Mask::new(10, 10);
        let flow = FlowField::zero(8, 10);
        assert_eq!(
            warp_mask(&mask, &flow),
            Err(ImagingError::DimensionMismatch(10, 10, 8, 10))
        );
    }

    fn flat_observation(w: u32, h: u32, depth: f64) -> Observation {
        let mut obs = Observation {
            rgb: RgbImage::new(w, h),
            depth: DepthImage::new(w, h),
            proprio: None,
        };
        for d in &mut obs.depth.depth {
            *d = depth;
        }
        obs
    }

    fn small_intrinsics(w: u32, h: u32) -> CameraIntrinsics {
        CameraIntrinsics::centered(50.0, w, h).unwrap()
    }

    #[test]
    fn identical_observations_give_identical_pairs() {
        let obs = flat_observation(12, 10, 0.5);
        let intr = small_intrinsics(12, 10);
        let mut mask = Mask::new(12, 10);
        for v in 3..6 {
            for u in 4..8 {
                mask.set(u, v, true);
            }
        }
        let flow = FlowField::zero(12, 10);
        let (src, dst) = masked_correspondences(&obs, &obs, &mask, &flow, &intr);
        assert_eq!(src.len(), mask.count());
        assert_eq!(src, dst);
    }

    #[test]
    fn invalid_demo_depth_is_excluded() {
        let mut demo = flat_observation(12, 10, 0.5);
        demo.depth.set(5, 4, 0.0);
        let live = flat_observation(12, 10, 0.5);
        let intr = small_intrinsics(12, 10);
        let mut mask = Mask::new(12, 10);
        mask.set(5, 4, true);
        mask.set(6, 4, true);
        let flow = FlowField::zero(12, 10);
        let (src, dst) = masked_correspondences(&demo, &live, &mask, &flow, &intr);
        assert_eq!(src.len(), 1);
        assert_eq!(dst.len(), 1);
    }

    #[test]
    fn invalid_live_depth_and_out_of_bounds_are_excluded() {
        let demo = flat_observation(12, 10, 0.5);
        let mut live = flat_observation(12, 10, 0.5);
        live.depth.set(9, 4, 0.0);
        let intr = small_intrinsics(12, 10);
        let mut mask = Mask::new(12, 10);
        mask.set(5, 4, true); // warps onto invalid live depth
        mask.set(11, 9, true); // warps out of bounds
        let flow = uniform_flow(12, 10, 4.0, 0.0);
        let (src, _) = masked_correspondences(&demo, &live, &mask, &flow, &intr);
        assert!(src.is_empty());
    }

    #[test]
    fn flow_invalid_pixels_are_excluded() {
        let obs = flat_observation(12, 10, 0.5);
        let intr = small_intrinsics(12, 10);
        let mut mask = Mask::new(12, 10);
        mask.set(5, 4, true);
        mask.set(6, 4, true);
        let mut flow = FlowField::zero(12, 10);
        flow.set(5, 4, 0.0, 0.0, false);
        let (src, dst) = masked_correspondences(&obs, &obs, &mask, &flow, &intr);
        assert_eq!((src.len(), dst.len()), (1, 1));
    }

    #[test]
    fn eroded_mask_shrinks_by_radius() {
        let mut mask = Mask::new(10, 10);
        for v in 2..8 {
            for u in 2..8 {
                mask.set(u, v, true);
            }
        }
        let eroded = mask.eroded(1);
        assert_eq!(eroded.count(), 16);
        for v in 3..7 {
            for u in 3..7 {
                assert!(eroded.get(u, v));
            }
        }
        assert_eq!(mask.eroded(0), mask);
        assert_eq!(mask.eroded(5).count(), 0);
    }
}
