//! Deterministic synthetic RGB-D world with a downward eye-in-hand camera.
//!
//! The world is a textured table plane at z = 0 plus flat-topped extruded
//! rectangles; rendering casts one ray per pixel against those horizontal
//! surfaces and z-buffers the hits, which keeps the geometry exact. The
//! same surface model backs [`gt_flow`], an oracle that maps every visible
//! source pixel into the destination view, so correspondence error can be
//! isolated from geometry error.
//!
//! Conventions: world z is up, the table surface is z = 0, and the camera
//! looks straight down (optical axis is world -z; the mount offset is a
//! pure translation). The end effector is parameterized as (x, y, z, yaw)
//! with the fingertip point at its origin.

pub mod texture;

use crate::geometry::{project, CameraIntrinsics, RigidTransform};
use crate::imaging::{
    Action, DemoFrame, Demonstration, DepthImage, FlowField, GripperCommand, Mask, Observation,
    Proprio, RgbImage,
};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;
use texture::TextureParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("camera at z = {0} is not above the table")]
    RenderDegenerate(f64),
    #[error("script step {step} leaves the workspace or exceeds step limits")]
    WorkspaceViolation { step: usize },
    #[error("unknown object id: {0}")]
    UnknownObject(String),
    #[error("frame stride must be >= 1")]
    InvalidStride,
    #[error("invalid mask schedule: {0}")]
    BadSchedule(String),
    #[error("script is empty")]
    EmptyScript,
    #[error("scene file error in {path}: {reason}")]
    SceneFile { path: std::path::PathBuf, reason: String },
}

/// Physical gripper state (commands are [`GripperCommand`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperState {
    Open,
    Closed,
}

const GRIPPER_WIDTH_OPEN: f64 = 0.08;
const GRIPPER_WIDTH_CLOSED: f64 = 0.025;

/// Pose of a grasped object relative to the end effector, captured at
/// attach time and held constant while attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspOffset {
    pub x: f64,
    pub y: f64,
    /// Object top relative to the fingertip height.
    pub top: f64,
    pub yaw: f64,
}

/// Flat-topped extruded rectangle on the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    /// Footprint extent along the object's local x axis, meters.
    pub width: f64,
    /// Footprint extent along the object's local y axis, meters.
    pub length: f64,
    /// Top face height above the table when resting, meters.
    pub height: f64,
    pub texture: TextureParams,
    pub x: f64,
    pub y: f64,
    /// Vertical displacement from the resting pose (0 while on the table).
    #[serde(default)]
    pub lift: f64,
    pub yaw: f64,
    pub graspable: bool,
    #[serde(default)]
    pub attached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp_offset: Option<GraspOffset>,
}

impl SceneObject {
    /// Height of the top face above the table right now.
    pub fn top_z(&self) -> f64 {
        self.height + self.lift
    }

    fn contains_xy(&self, wx: f64, wy: f64) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = wx - self.x;
        let dy = wy - self.y;
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        lx.abs() <= self.width / 2.0 && ly.abs() <= self.length / 2.0
    }

    /// Texture coordinates anchored to the object's corner so the pattern
    /// moves rigidly with it.
    fn local_uv(&self, wx: f64, wy: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = wx - self.x;
        let dy = wy - self.y;
        (c * dx + s * dy + self.width / 2.0, -s * dx + c * dy + self.length / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndEffectorState {
    pub x: f64,
    pub y: f64,
    /// Fingertip height above the table, meters; never negative.
    pub z: f64,
    pub yaw: f64,
    pub gripper: GripperState,
    /// Flange-to-lens mount offset, a pure translation in the yaw-aligned
    /// end-effector frame with z up.
    pub camera_offset: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    /// Per-step in-plane translation norm cap, meters.
    pub max_step_xy: f64,
    /// Per-step vertical translation cap, meters.
    pub max_step_z: f64,
    /// Per-step yaw cap, radians.
    pub max_step_yaw: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self { max_step_xy: 0.10, max_step_z: 0.10, max_step_yaw: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Default for Workspace {
    fn default() -> Self {
        Self { x: [-0.5, 0.5], y: [-0.5, 0.5], z: [0.0, 0.8] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspParams {
    /// Maximum in-plane distance from the fingertips to an object center.
    pub radius: f64,
    /// Maximum |fingertip height - object top| for a grasp to latch.
    pub height_tolerance: f64,
}

impl Default for GraspParams {
    fn default() -> Self {
        Self { radius: 0.010, height_tolerance: 0.015 }
    }
}

/// Full simulator state; cloning is cheap and every operation on it is a
/// pure function, so states can be snapshotted and replayed freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub objects: Vec<SceneObject>,
    pub ee: EndEffectorState,
    pub table_texture: TextureParams,
    #[serde(default)]
    pub limits: MotionLimits,
    #[serde(default)]
    pub workspace: Workspace,
    #[serde(default)]
    pub grasp: GraspParams,
    /// Per-pixel Gaussian depth jitter, meters; 0 disables it.
    #[serde(default)]
    pub depth_noise_sigma: f64,
    pub rng_seed: u64,
}

impl SceneState {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn attached_object(&self) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.attached)
    }
}

/// Downward camera pose: world-to-camera rotation and the camera center.
///
/// Camera axes in world coordinates are x = (cos yaw, sin yaw, 0),
/// y = (sin yaw, -cos yaw, 0), z = (0, 0, -1); the pair (R, c) maps a
/// world point w to camera coordinates R * (w - c).
pub fn camera_pose(state: &SceneState) -> (Matrix3<f64>, Vector3<f64>) {
    let ee = &state.ee;
    let (s, c) = ee.yaw.sin_cos();
    let x_cam = Vector3::new(c, s, 0.0);
    let y_cam = Vector3::new(s, -c, 0.0);
    let rotation = Matrix3::new(c, s, 0.0, s, -c, 0.0, 0.0, 0.0, -1.0);
    let center = Vector3::new(ee.x, ee.y, ee.z)
        + ee.camera_offset[0] * x_cam
        + ee.camera_offset[1] * y_cam
        + Vector3::new(0.0, 0.0, ee.camera_offset[2]);
    (rotation, center)
}

/// Transform mapping camera-frame points of `a` into the camera frame of `b`.
pub fn relative_camera_pose(a: &SceneState, b: &SceneState) -> RigidTransform {
    let (ra, ca) = camera_pose(a);
    let (rb, cb) = camera_pose(b);
    RigidTransform::from_parts_unchecked(rb * ra.transpose(), rb * (ca - cb))
}

/// What a pixel ray hits first.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    Table,
    Object(usize),
}

/// Nearest surface along the pixel ray, with its depth (camera-frame z).
fn cast_ray(
    state: &SceneState,
    rot_t: &Matrix3<f64>,
    center: &Vector3<f64>,
    dir_cam: Vector3<f64>,
) -> Option<(Surface, f64, Vector3<f64>)> {
    let dir = rot_t * dir_cam;
    if dir.z >= 0.0 {
        return None;
    }
    let mut hit: Option<(Surface, f64, Vector3<f64>)> = None;
    let mut consider = |surface: Surface, plane_z: f64| {
        let t = (plane_z - center.z) / dir.z;
        if t <= 1e-9 {
            return;
        }
        if let Some((_, best, _)) = hit {
            if t >= best {
                return;
            }
        }
        let w = center + t * dir;
        let inside = match surface {
            Surface::Table => true,
            Surface::Object(i) => state.objects[i].contains_xy(w.x, w.y),
        };
        if inside {
            hit = Some((surface, t, w));
        }
    };
    for i in 0..state.objects.len() {
        consider(Surface::Object(i), state.objects[i].top_z());
    }
    consider(Surface::Table, 0.0);
    hit
}

/// Rendered observation plus one mask per scene object, indexed like
/// `SceneState::objects`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub observation: Observation,
    pub object_masks: Vec<Mask>,
}

impl Rendering {
    pub fn mask_for<'a>(&'a self, state: &SceneState, id: &str) -> Option<&'a Mask> {
        state.object_index(id).map(|i| &self.object_masks[i])
    }
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic standard normal for depth jitter, keyed by state and pixel.
fn hash_normal(seed: u64, u: u32, v: u32) -> f64 {
    let h1 = splitmix64(seed ^ (((u as u64) << 32) | v as u64));
    let h2 = splitmix64(h1);
    let u1 = ((h1 >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (h2 >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Z-buffer rasterization of the table plane and the object top faces.
pub fn render(state: &SceneState, intr: &CameraIntrinsics) -> Result<Rendering, SimError> {
    let (rot, center) = camera_pose(state);
    if center.z <= 0.0 {
        return Err(SimError::RenderDegenerate(center.z));
    }
    let rot_t = rot.transpose();
    let (w, h) = (intr.width, intr.height);
    let mut rgb = RgbImage::new(w, h);
    let mut depth = DepthImage::new(w, h);
    let mut masks = vec![Mask::new(w, h); state.objects.len()];

    let noise_key = if state.depth_noise_sigma > 0.0 {
        let bits = state.ee.x.to_bits()
            ^ state.ee.y.to_bits().rotate_left(17)
            ^ state.ee.z.to_bits().rotate_left(34)
            ^ state.ee.yaw.to_bits().rotate_left(51);
        Some(splitmix64(state.rng_seed ^ bits))
    } else {
        None
    };

    for v in 0..h {
        for u in 0..w {
            let dir_cam = Vector3::new(
                (u as f64 - intr.cx) / intr.fx,
                (v as f64 - intr.cy) / intr.fy,
                1.0,
            );
            let Some((surface, t, point)) = cast_ray(state, &rot_t, &center, dir_cam) else {
                continue;
            };
            let color = match surface {
                Surface::Table => texture::sample(&state.table_texture, point.x, point.y),
                Surface::Object(i) => {
                    masks[i].set(u, v, true);
                    let obj = &state.objects[i];
                    let (lx, ly) = obj.local_uv(point.x, point.y);
                    texture::sample(&obj.texture, lx, ly)
                }
            };
            rgb.set_pixel(u, v, color);
            let d = match noise_key {
                Some(key) => (t + state.depth_noise_sigma * hash_normal(key, u, v)).max(1e-4),
                None => t,
            };
            depth.set(u, v, d);
        }
    }

    let observation = Observation {
        rgb,
        depth,
        proprio: Some(Proprio {
            gripper_height: state.ee.z,
            yaw: state.ee.yaw,
            gripper_width: match state.ee.gripper {
                GripperState::Open => GRIPPER_WIDTH_OPEN,
                GripperState::Closed => GRIPPER_WIDTH_CLOSED,
            },
        }),
    };
    Ok(Rendering { observation, object_masks: masks })
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// Advance the world by one action; reports whether any limit or workspace
/// clamp altered the commanded motion.
fn step(state: &SceneState, action: &Action) -> (SceneState, bool) {
    let mut next = state.clone();
    let limits = state.limits;
    let mut clamped = false;

    let mut dx = action.dx;
    let mut dy = action.dy;
    let norm = (dx * dx + dy * dy).sqrt();
    if norm > limits.max_step_xy {
        let scale = limits.max_step_xy / norm;
        dx *= scale;
        dy *= scale;
        clamped = true;
    }
    let dz = action.dz.clamp(-limits.max_step_z, limits.max_step_z);
    let dtheta = action.dtheta.clamp(-limits.max_step_yaw, limits.max_step_yaw);
    if dz != action.dz || dtheta != action.dtheta {
        clamped = true;
    }

    // Translate in the yaw-aligned camera axes, z in world up.
    let (s, c) = next.ee.yaw.sin_cos();
    let target_x = next.ee.x + dx * c + dy * s;
    let target_y = next.ee.y + dx * s - dy * c;
    let target_z = next.ee.z + dz;
    let ws = state.workspace;
    next.ee.x = target_x.clamp(ws.x[0], ws.x[1]);
    next.ee.y = target_y.clamp(ws.y[0], ws.y[1]);
    next.ee.z = target_z.clamp(ws.z[0], ws.z[1]);
    next.ee.yaw = wrap_angle(next.ee.yaw + dtheta);
    if next.ee.x != target_x || next.ee.y != target_y || next.ee.z != target_z {
        clamped = true;
    }

    // A held object follows rigidly.
    if let Some(idx) = next.objects.iter().position(|o| o.attached) {
        let ee = next.ee;
        let obj = &mut next.objects[idx];
        let off = obj.grasp_offset.unwrap_or(GraspOffset { x: 0.0, y: 0.0, top: 0.0, yaw: 0.0 });
        let (s, c) = ee.yaw.sin_cos();
        obj.x = ee.x + off.x * c + off.y * s;
        obj.y = ee.y + off.x * s - off.y * c;
        obj.yaw = wrap_angle(ee.yaw + off.yaw);
        obj.lift = ee.z + off.top - obj.height;
    }

    match action.gripper {
        GripperCommand::Close => {
            next.ee.gripper = GripperState::Closed;
            if next.attached_object().is_none() {
                try_attach(&mut next);
            }
        }
        GripperCommand::Open => {
            next.ee.gripper = GripperState::Open;
            for obj in &mut next.objects {
                if obj.attached {
                    obj.attached = false;
                    obj.grasp_offset = None;
                }
            }
        }
    }
    (next, clamped)
}

/// Latch the nearest graspable object within the grasp tolerances. The
/// object snaps to a centered grasp, the way a closing parallel gripper
/// centers whatever it catches.
fn try_attach(state: &mut SceneState) {
    let ee = state.ee;
    let grasp = state.grasp;
    let candidate = state
        .objects
        .iter_mut()
        .filter(|o| o.graspable && !o.attached)
        .map(|o| {
            let d = ((o.x - ee.x).powi(2) + (o.y - ee.y).powi(2)).sqrt();
            (d, o)
        })
        .filter(|(d, o)| *d <= grasp.radius && (ee.z - o.top_z()).abs() <= grasp.height_tolerance)
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if let Some((_, obj)) = candidate {
        obj.x = ee.x;
        obj.y = ee.y;
        obj.lift = ee.z - obj.height;
        obj.attached = true;
        obj.grasp_offset =
            Some(GraspOffset { x: 0.0, y: 0.0, top: 0.0, yaw: wrap_angle(obj.yaw - ee.yaw) });
    }
}

/// Pure action dynamics: end-effector motion with limit and workspace
/// clamping, grasp latching on close, release on open.
pub fn apply_action(state: &SceneState, action: &Action) -> SceneState {
    step(state, action).0
}

/// Exact demonstration-to-live flow between two states of the same scene.
///
/// Every source pixel's 3D point is carried through the motion of the
/// surface it sits on (table points are static, object points follow the
/// object) and projected into the destination camera. A pixel stays valid
/// only if its rounded destination pixel sees the same surface depth, which
/// makes the oracle consistent with the rounded depth lookups downstream.
pub fn gt_flow(src: &SceneState, dst: &SceneState, intr: &CameraIntrinsics) -> FlowField {
    let (rot_s, c_s) = camera_pose(src);
    let (rot_d, c_d) = camera_pose(dst);
    let rot_s_t = rot_s.transpose();
    let rot_d_t = rot_d.transpose();
    let (w, h) = (intr.width, intr.height);
    let mut flow = FlowField::zero(w, h);

    for v in 0..h {
        for u in 0..w {
            let dir_cam =
                Vector3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0);
            let visible_flow = cast_ray(src, &rot_s_t, &c_s, dir_cam).and_then(|(surface, _, point)| {
                // Carry the point through the owning surface's motion.
                let moved = match surface {
                    Surface::Table => point,
                    Surface::Object(i) => {
                        let (a, b) = (&src.objects[i], &dst.objects.get(i)?);
                        let (sa, ca) = a.yaw.sin_cos();
                        let lx = ca * (point.x - a.x) + sa * (point.y - a.y);
                        let ly = -sa * (point.x - a.x) + ca * (point.y - a.y);
                        let (sb, cb) = b.yaw.sin_cos();
                        Vector3::new(
                            b.x + cb * lx - sb * ly,
                            b.y + sb * lx + cb * ly,
                            point.z + (b.lift - a.lift),
                        )
                    }
                };
                let p_dst = rot_d * (moved - c_d);
                if p_dst.z <= 0.0 {
                    return None;
                }
                let (pu, pv) = project(&crate::geometry::Point3::from(p_dst), intr).ok()?;
                let (ru, rv) = (pu.round(), pv.round());
                if ru < 0.0 || rv < 0.0 || ru >= w as f64 || rv >= h as f64 {
                    return None;
                }
                // Visibility at the rounded destination pixel.
                let dir_dst =
                    Vector3::new((ru - intr.cx) / intr.fx, (rv - intr.cy) / intr.fy, 1.0);
                match cast_ray(dst, &rot_d_t, &c_d, dir_dst) {
                    Some((_, t_dst, _)) if (t_dst - p_dst.z).abs() <= 1e-6 => {
                        Some(((pu - u as f64) as f32, (pv - v as f64) as f32))
                    }
                    _ => None,
                }
            });
            match visible_flow {
                Some((du, dv)) => flow.set(u, v, du, dv, true),
                None => flow.set(u, v, 0.0, 0.0, false),
            }
        }
    }
    flow
}

/// Which object is foreground for each recorded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSchedule(Vec<(usize, String)>);

impl MaskSchedule {
    /// One object throughout.
    pub fn single(id: impl Into<String>) -> Self {
        Self(vec![(0, id.into())])
    }

    /// Spans of `(first_frame, object_id)`; must start at frame 0 and be
    /// strictly increasing.
    pub fn spans(spans: Vec<(usize, String)>) -> Result<Self, SimError> {
        if spans.first().map(|s| s.0) != Some(0) {
            return Err(SimError::BadSchedule("first span must start at frame 0".into()));
        }
        if !spans.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(SimError::BadSchedule("span starts must be strictly increasing".into()));
        }
        Ok(Self(spans))
    }

    pub fn object_for_frame(&self, frame: usize) -> &str {
        let mut current = &self.0[0].1;
        for (start, id) in &self.0 {
            if *start <= frame {
                current = id;
            }
        }
        current
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RecordOptions {
    /// Erode recorded masks by this radius; a lightly under-segmented
    /// foreground keeps correspondences away from object boundaries.
    pub mask_erosion: u32,
}

/// A recorded demonstration together with the exact simulator state at
/// each recorded frame (the ground-truth flow oracle needs those).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedDemo {
    pub demonstration: Demonstration,
    pub states: Vec<SceneState>,
}

/// Execute a scripted action sequence and record every `stride`-th step.
///
/// Frame k stores the observation before script step `k * stride`, the
/// scheduled foreground object's mask, and that step's action.
pub fn record_demo(
    scene: &SceneState,
    intr: &CameraIntrinsics,
    script: &[Action],
    stride: usize,
    schedule: &MaskSchedule,
    options: RecordOptions,
) -> Result<RecordedDemo, SimError> {
    if stride == 0 {
        return Err(SimError::InvalidStride);
    }
    if script.is_empty() {
        return Err(SimError::EmptyScript);
    }
    let mut state = scene.clone();
    let mut frames = Vec::new();
    let mut states = Vec::new();
    for (k, action) in script.iter().enumerate() {
        if k % stride == 0 {
            let frame_idx = k / stride;
            let id = schedule.object_for_frame(frame_idx);
            let obj_idx =
                state.object_index(id).ok_or_else(|| SimError::UnknownObject(id.to_string()))?;
            let rendering = render(&state, intr)?;
            let mask = rendering.object_masks[obj_idx].eroded(options.mask_erosion);
            frames.push(DemoFrame { observation: rendering.observation, mask, action: *action });
            states.push(state.clone());
        }
        let (next, clamped) = step(&state, action);
        if clamped {
            return Err(SimError::WorkspaceViolation { step: k });
        }
        state = next;
    }
    Ok(RecordedDemo { demonstration: Demonstration { intrinsics: *intr, frames }, states })
}

/// On-disk scene description: intrinsics plus the initial world state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub intrinsics: CameraIntrinsics,
    pub world: SceneState,
}

pub fn load_scene(path: &Path) -> Result<SceneFile, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::SceneFile { path: path.to_path_buf(), reason: e.to_string() })?;
    let scene: SceneFile = serde_json::from_str(&text)
        .map_err(|e| SimError::SceneFile { path: path.to_path_buf(), reason: e.to_string() })?;
    scene
        .intrinsics
        .validate()
        .map_err(|e| SimError::SceneFile { path: path.to_path_buf(), reason: e.to_string() })?;
    Ok(scene)
}

pub fn save_scene(scene: &SceneFile, path: &Path) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(scene)
        .map_err(|e| SimError::SceneFile { path: path.to_path_buf(), reason: e.to_string() })?;
    std::fs::write(path, text + "\n")
        .map_err(|e| SimError::SceneFile { path: path.to_path_buf(), reason: e.to_string() })
}

/// A scripted mid-run scene change: teleport an unattached object once the
/// environment has executed `after_tick` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledMove {
    pub after_tick: u64,
    pub object: String,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Action-executing environment backed by the simulator.
///
/// When constructed with the per-frame reference states of a recorded
/// demonstration it can serve exact ground-truth flow for any demo frame.
#[derive(Debug, Clone)]
pub struct SimEnvironment {
    world: SceneState,
    intrinsics: CameraIntrinsics,
    reference_states: Vec<SceneState>,
    ticks: u64,
    scheduled_moves: Vec<ScheduledMove>,
}

impl SimEnvironment {
    pub fn new(world: SceneState, intrinsics: CameraIntrinsics) -> Self {
        Self {
            world,
            intrinsics,
            reference_states: Vec::new(),
            ticks: 0,
            scheduled_moves: Vec::new(),
        }
    }

    pub fn with_reference_states(mut self, states: Vec<SceneState>) -> Self {
        self.reference_states = states;
        self
    }

    pub fn schedule_move(&mut self, m: ScheduledMove) {
        self.scheduled_moves.push(m);
    }

    pub fn world(&self) -> &SceneState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut SceneState {
        &mut self.world
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }
}

impl crate::servo::Environment for SimEnvironment {
    fn observe(&mut self) -> Observation {
        render(&self.world, &self.intrinsics)
            .expect("simulator camera left the renderable volume")
            .observation
    }

    fn execute(&mut self, action: &Action) {
        self.world = apply_action(&self.world, action);
        self.ticks += 1;
        let tick = self.ticks;
        let world = &mut self.world;
        self.scheduled_moves.retain(|m| {
            if m.after_tick != tick {
                return true;
            }
            if let Some(obj) = world.object_mut(&m.object) {
                if !obj.attached {
                    obj.x = m.x;
                    obj.y = m.y;
                    obj.yaw = m.yaw;
                }
            }
            false
        });
    }

    fn oracle_flow(&mut self, demo_frame: usize) -> Option<FlowField> {
        self.reference_states
            .get(demo_frame)
            .map(|reference| gt_flow(reference, &self.world, &self.intrinsics))
    }
}
