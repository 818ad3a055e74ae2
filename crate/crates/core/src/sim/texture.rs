//! Seeded procedural surface textures.
//!
//! Surfaces are colored by hashing cell indices at two spatial scales and
//! blending the results with a base color, plus a fine checker modulation.
//! The two scales matter: the fine cells give the block matcher features to
//! lock onto at full resolution, the coarse cells keep the downsampled
//! pyramid levels textured so large displacements remain matchable.

use serde::{Deserialize, Serialize};

/// Procedural checker/noise mix for one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    pub base_color: [u8; 3],
    pub seed: u64,
    /// Fine cell edge, meters. Sized so a cell spans >= 4 px at working height.
    pub fine_cell: f64,
    /// Coarse cell edge, meters.
    pub coarse_cell: f64,
}

impl TextureParams {
    pub fn new(base_color: [u8; 3], seed: u64) -> Self {
        Self { base_color, seed, fine_cell: 0.013, coarse_cell: 0.06 }
    }
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[inline]
fn hash_cell(seed: u64, salt: u64, ix: i64, iy: i64) -> u64 {
    let mut h = seed ^ salt.wrapping_mul(0xa076_1d64_78bd_642f);
    h = splitmix64(h ^ (ix as u64).wrapping_mul(0x8ebc_6af0_9c88_c6e3));
    splitmix64(h ^ (iy as u64).wrapping_mul(0x5895_58cb_14a7_08a5))
}

#[inline]
fn cell_rgb(h: u64) -> [f64; 3] {
    [
        (h & 0xff) as f64,
        ((h >> 8) & 0xff) as f64,
        ((h >> 16) & 0xff) as f64,
    ]
}

/// Deterministic color of the surface at local coordinates (meters).
pub fn sample(params: &TextureParams, x: f64, y: f64) -> [u8; 3] {
    let fx = (x / params.fine_cell).floor();
    let fy = (y / params.fine_cell).floor();
    let cx = (x / params.coarse_cell).floor();
    let cy = (y / params.coarse_cell).floor();
    let fine = cell_rgb(hash_cell(params.seed, 1, fx as i64, fy as i64));
    let coarse = cell_rgb(hash_cell(params.seed, 2, cx as i64, cy as i64));
    let checker = if (fx as i64 + fy as i64).rem_euclid(2) == 0 { 10.0 } else { -10.0 };
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = 0.30 * params.base_color[c] as f64 + 0.40 * coarse[c] + 0.30 * fine[c] + checker;
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    out
}
