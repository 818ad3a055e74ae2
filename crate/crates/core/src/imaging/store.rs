//! Demonstration directory format.
//!
//! A demonstration is a directory of per-frame Netpbm images plus one
//! metadata file:
//!
//! - `frame_%04d.rgb.ppm`   P6, maxval 255
//! - `frame_%04d.depth.pgm` P5, maxval 65535, big-endian, millimeters, 0 = invalid
//! - `frame_%04d.mask.pgm`  P5, maxval 255, >= 128 = foreground
//! - `demo.json`            intrinsics, frame count, per-frame proprio and action
//!
//! Writers are canonical, so save -> load -> save reproduces files byte
//! for byte.

use super::netpbm;
use super::{Action, DemoFrame, Demonstration, DepthImage, Mask, Observation, Proprio, RgbImage};
use crate::geometry::CameraIntrinsics;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemoIoError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("frame count in metadata ({expected}) does not match files on disk ({found})")]
    FrameCountMismatch { expected: usize, found: usize },
    #[error("dimension inconsistency in frame {frame}: {reason}")]
    DimensionMismatch { frame: usize, reason: String },
    #[error("frame {0} has no proprioceptive state; the on-disk format requires it")]
    MissingProprio(usize),
    #[error("metadata error in {path}: {reason}")]
    Metadata { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Serialize, Deserialize)]
struct ActionDto {
    dx_m: f64,
    dy_m: f64,
    dz_m: f64,
    dtheta_rad: f64,
    gripper: super::GripperCommand,
}

#[derive(Serialize, Deserialize)]
struct FrameDto {
    gripper_height_m: f64,
    yaw_rad: f64,
    gripper_width_m: f64,
    action: ActionDto,
}

#[derive(Serialize, Deserialize)]
struct DemoDto {
    intrinsics: CameraIntrinsics,
    frame_count: usize,
    frames: Vec<FrameDto>,
}

fn rgb_name(i: usize) -> String {
    format!("frame_{i:04}.rgb.ppm")
}

fn depth_name(i: usize) -> String {
    format!("frame_{i:04}.depth.pgm")
}

fn mask_name(i: usize) -> String {
    format!("frame_{i:04}.mask.pgm")
}

fn io_err(path: &Path, source: io::Error) -> DemoIoError {
    if source.kind() == io::ErrorKind::NotFound {
        DemoIoError::MissingFile(path.to_path_buf())
    } else if source.kind() == io::ErrorKind::InvalidData {
        DemoIoError::MalformedHeader { path: path.to_path_buf(), reason: source.to_string() }
    } else {
        DemoIoError::Io { path: path.to_path_buf(), source }
    }
}

/// Write a demonstration as a directory, creating it if needed.
pub fn save_demo(demo: &Demonstration, dir: &Path) -> Result<(), DemoIoError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut frames_meta = Vec::with_capacity(demo.frames.len());
    for (i, frame) in demo.frames.iter().enumerate() {
        let proprio = frame.observation.proprio.ok_or(DemoIoError::MissingProprio(i))?;
        frames_meta.push(FrameDto {
            gripper_height_m: proprio.gripper_height,
            yaw_rad: proprio.yaw,
            gripper_width_m: proprio.gripper_width,
            action: ActionDto {
                dx_m: frame.action.dx,
                dy_m: frame.action.dy,
                dz_m: frame.action.dz,
                dtheta_rad: frame.action.dtheta,
                gripper: frame.action.gripper,
            },
        });

        let rgb_path = dir.join(rgb_name(i));
        let mut w = BufWriter::new(File::create(&rgb_path).map_err(|e| io_err(&rgb_path, e))?);
        netpbm::write_ppm(&mut w, frame.observation.rgb.width, frame.observation.rgb.height, &frame.observation.rgb.data)
            .map_err(|e| io_err(&rgb_path, e))?;
        w.flush().map_err(|e| io_err(&rgb_path, e))?;

        let depth_path = dir.join(depth_name(i));
        let mm: Vec<u16> = frame
            .observation
            .depth
            .depth
            .iter()
            .map(|&d| (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect();
        let mut w = BufWriter::new(File::create(&depth_path).map_err(|e| io_err(&depth_path, e))?);
        netpbm::write_pgm16(&mut w, frame.observation.depth.width, frame.observation.depth.height, &mm)
            .map_err(|e| io_err(&depth_path, e))?;
        w.flush().map_err(|e| io_err(&depth_path, e))?;

        let mask_path = dir.join(mask_name(i));
        let bytes: Vec<u8> = frame.mask.foreground.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let mut w = BufWriter::new(File::create(&mask_path).map_err(|e| io_err(&mask_path, e))?);
        netpbm::write_pgm8(&mut w, frame.mask.width, frame.mask.height, &bytes)
            .map_err(|e| io_err(&mask_path, e))?;
        w.flush().map_err(|e| io_err(&mask_path, e))?;
    }

    let dto = DemoDto {
        intrinsics: demo.intrinsics,
        frame_count: demo.frames.len(),
        frames: frames_meta,
    };
    let json_path = dir.join("demo.json");
    let text = serde_json::to_string_pretty(&dto).map_err(|e| DemoIoError::Metadata {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    std::fs::write(&json_path, text + "\n").map_err(|e| io_err(&json_path, e))?;
    Ok(())
}

/// Load a demonstration directory, validating headers, dimensions, and the
/// frame count against the files present.
pub fn load_demo(dir: &Path) -> Result<Demonstration, DemoIoError> {
    let json_path = dir.join("demo.json");
    let text = std::fs::read_to_string(&json_path).map_err(|e| io_err(&json_path, e))?;
    let dto: DemoDto = serde_json::from_str(&text).map_err(|e| DemoIoError::Metadata {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    dto.intrinsics.validate().map_err(|e| DemoIoError::Metadata {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    if dto.frames.len() != dto.frame_count {
        return Err(DemoIoError::FrameCountMismatch {
            expected: dto.frame_count,
            found: dto.frames.len(),
        });
    }
    // Extra frame files beyond the declared count are an inconsistency too.
    if dir.join(rgb_name(dto.frame_count)).exists() {
        let mut found = dto.frame_count + 1;
        while dir.join(rgb_name(found)).exists() {
            found += 1;
        }
        return Err(DemoIoError::FrameCountMismatch { expected: dto.frame_count, found });
    }

    let (iw, ih) = (dto.intrinsics.width, dto.intrinsics.height);
    let mut frames = Vec::with_capacity(dto.frame_count);
    for (i, meta) in dto.frames.iter().enumerate() {
        let rgb_path = dir.join(rgb_name(i));
        let mut r = BufReader::new(File::open(&rgb_path).map_err(|e| io_err(&rgb_path, e))?);
        let (w, h, data) = netpbm::read_ppm(&mut r).map_err(|e| io_err(&rgb_path, e))?;
        if (w, h) != (iw, ih) {
            return Err(DemoIoError::DimensionMismatch {
                frame: i,
                reason: format!("rgb is {w}x{h}, intrinsics say {iw}x{ih}"),
            });
        }
        let rgb = RgbImage { width: w, height: h, data };

        let depth_path = dir.join(depth_name(i));
        let mut r = BufReader::new(File::open(&depth_path).map_err(|e| io_err(&depth_path, e))?);
        let (w, h, mm) = netpbm::read_pgm16(&mut r).map_err(|e| io_err(&depth_path, e))?;
        if (w, h) != (iw, ih) {
            return Err(DemoIoError::DimensionMismatch {
                frame: i,
                reason: format!("depth is {w}x{h}, intrinsics say {iw}x{ih}"),
            });
        }
        let depth = DepthImage {
            width: w,
            height: h,
            depth: mm.iter().map(|&v| v as f64 / 1000.0).collect(),
        };

        let mask_path = dir.join(mask_name(i));
        let mut r = BufReader::new(File::open(&mask_path).map_err(|e| io_err(&mask_path, e))?);
        let (w, h, bytes) = netpbm::read_pgm8(&mut r).map_err(|e| io_err(&mask_path, e))?;
        if (w, h) != (iw, ih) {
            return Err(DemoIoError::DimensionMismatch {
                frame: i,
                reason: format!("mask is {w}x{h}, intrinsics say {iw}x{ih}"),
            });
        }
        let mask = Mask { width: w, height: h, foreground: bytes.iter().map(|&b| b >= 128).collect() };

        frames.push(DemoFrame {
            observation: Observation {
                rgb,
                depth,
                proprio: Some(Proprio {
                    gripper_height: meta.gripper_height_m,
                    yaw: meta.yaw_rad,
                    gripper_width: meta.gripper_width_m,
                }),
            },
            mask,
            action: Action {
                dx: meta.action.dx_m,
                dy: meta.action.dy_m,
                dz: meta.action.dz_m,
                dtheta: meta.action.dtheta_rad,
                gripper: meta.action.gripper,
            },
        });
    }
    Ok(Demonstration { intrinsics: dto.intrinsics, frames })
}
