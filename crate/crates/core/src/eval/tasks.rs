//! Canonical task scenes and scripted demonstrations.
//!
//! Every task builds one scene, one scripted demonstration, and a servo
//! configuration. Scripts are authored with a stationary anchor step
//! before each gripper transition: the tracker copies the target frame's
//! gripper command during the whole approach to that frame, so a
//! transition frame must be reachable from (nearly) zero distance or the
//! gripper would actuate mid-transit.

use crate::geometry::CameraIntrinsics;
use crate::imaging::{Action, GripperCommand};
use crate::servo::{ServoConfig, TrackStatus, TrackerResult, ZMode};
use crate::sim::texture::TextureParams;
use crate::sim::{
    EndEffectorState, GraspParams, GripperState, MaskSchedule, MotionLimits, RecordOptions,
    SceneObject, SceneState, Workspace,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Pick,
    PickStow,
    Insert,
    Navigate,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Pick => "pick",
            Task::PickStow => "pick_stow",
            Task::Insert => "insert",
            Task::Navigate => "navigate",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pick" => Ok(Task::Pick),
            "pick_stow" | "pick-stow" | "stow" => Ok(Task::PickStow),
            "insert" => Ok(Task::Insert),
            "navigate" | "nav" => Ok(Task::Navigate),
            other => Err(format!("unknown task: {other}")),
        }
    }
}

/// Everything needed to record and replay one task.
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub scene: SceneState,
    pub intrinsics: CameraIntrinsics,
    pub script: Vec<Action>,
    pub schedule: MaskSchedule,
    pub stride: usize,
    pub record_options: RecordOptions,
    pub servo: ServoConfig,
    /// The object jittered between trials and used for scoring.
    pub target_object: String,
}

/// Emits actions that walk the end effector through world-space waypoints.
///
/// Actions express translation in the yaw-aligned camera axes, so each
/// step converts the remaining world delta using the pose the gripper will
/// actually have at that step.
pub struct ScriptBuilder {
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    steps: Vec<Action>,
}

impl ScriptBuilder {
    pub fn new(start: &EndEffectorState) -> Self {
        Self { x: start.x, y: start.y, z: start.z, yaw: start.yaw, steps: Vec::new() }
    }

    /// Move to a world-space pose over `n` equal steps.
    pub fn move_to(
        &mut self,
        x: f64,
        y: f64,
        z: f64,
        yaw: f64,
        gripper: GripperCommand,
        n: usize,
    ) -> &mut Self {
        for i in 0..n {
            let remaining = (n - i) as f64;
            let dx_w = (x - self.x) / remaining;
            let dy_w = (y - self.y) / remaining;
            let dz = (z - self.z) / remaining;
            let dtheta = (yaw - self.yaw) / remaining;
            let (s, c) = self.yaw.sin_cos();
            self.steps.push(Action {
                dx: c * dx_w + s * dy_w,
                dy: s * dx_w - c * dy_w,
                dz,
                dtheta,
                gripper,
            });
            self.x += dx_w;
            self.y += dy_w;
            self.z += dz;
            self.yaw += dtheta;
        }
        self
    }

    /// Stand still for `n` steps, holding a gripper command.
    pub fn hold(&mut self, gripper: GripperCommand, n: usize) -> &mut Self {
        for _ in 0..n {
            self.steps.push(Action::hold(gripper));
        }
        self
    }

    pub fn build(&self) -> Vec<Action> {
        self.steps.clone()
    }
}

fn manipulation_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(130.0, 130.0, 80.0, 60.0, 160, 120).unwrap()
}

fn navigation_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(208.0, 208.0, 128.0, 96.0, 256, 192).unwrap()
}

fn base_ee(x: f64, y: f64, z: f64) -> EndEffectorState {
    EndEffectorState {
        x,
        y,
        z,
        yaw: 0.0,
        gripper: GripperState::Open,
        camera_offset: [0.0, 0.0, 0.30],
    }
}

fn table_texture() -> TextureParams {
    TextureParams { base_color: [105, 95, 85], seed: 17, fine_cell: 0.013, coarse_cell: 0.06 }
}

fn scene_with(objects: Vec<SceneObject>, ee: EndEffectorState) -> SceneState {
    SceneState {
        objects,
        ee,
        table_texture: table_texture(),
        limits: MotionLimits::default(),
        workspace: Workspace::default(),
        grasp: GraspParams::default(),
        depth_noise_sigma: 0.0,
        rng_seed: 23,
    }
}

fn block_object(x: f64, y: f64) -> SceneObject {
    SceneObject {
        id: "block".into(),
        width: 0.050,
        length: 0.050,
        height: 0.025,
        texture: TextureParams { base_color: [190, 70, 50], seed: 31, fine_cell: 0.012, coarse_cell: 0.030 },
        x,
        y,
        lift: 0.0,
        yaw: 0.0,
        graspable: true,
        attached: false,
        grasp_offset: None,
    }
}

pub fn task_setup(task: Task) -> TaskSetup {
    match task {
        Task::Pick => pick_setup(),
        Task::PickStow => pick_stow_setup(),
        Task::Insert => insert_setup(),
        Task::Navigate => navigate_setup(),
    }
}

/// Grasp the block and lift it clear of the table.
fn pick_setup() -> TaskSetup {
    let block = block_object(0.02, -0.01);
    let (bx, by) = (block.x, block.y);
    let grasp_z = block.height;
    let ee = base_ee(0.0, 0.0, 0.10);
    let scene = scene_with(vec![block], ee);

    let mut builder = ScriptBuilder::new(&scene.ee);
    builder
        .move_to(bx, by, 0.10, 0.0, GripperCommand::Open, 1) // hover above the block
        .move_to(bx, by, 0.05, 0.0, GripperCommand::Open, 1)
        .move_to(bx, by, grasp_z, 0.0, GripperCommand::Open, 1)
        .hold(GripperCommand::Close, 1)
        .move_to(bx, by, grasp_z + 0.05, 0.0, GripperCommand::Close, 1)
        .hold(GripperCommand::Close, 1);

    TaskSetup {
        scene,
        intrinsics: manipulation_intrinsics(),
        script: builder.build(),
        schedule: MaskSchedule::single("block"),
        stride: 1,
        record_options: RecordOptions { mask_erosion: 3 },
        servo: ServoConfig::default(),
        target_object: "block".into(),
    }
}

/// Pick the block, carry it over the box, release it inside.
fn pick_stow_setup() -> TaskSetup {
    let block = block_object(0.03, -0.02);
    let carry_z = block.height + 0.06;
    let (bx, by) = (block.x, block.y);
    let grasp_z = block.height;
    let box_obj = SceneObject {
        id: "box".into(),
        width: 0.120,
        length: 0.120,
        height: 0.040,
        texture: TextureParams { base_color: [60, 90, 160], seed: 47, fine_cell: 0.014, coarse_cell: 0.05 },
        x: -0.06,
        y: 0.05,
        lift: 0.0,
        yaw: 0.0,
        graspable: false,
        attached: false,
        grasp_offset: None,
    };
    let (tx, ty) = (box_obj.x, box_obj.y);
    let ee = base_ee(0.0, 0.0, 0.10);
    let scene = scene_with(vec![block, box_obj], ee);

    let mut builder = ScriptBuilder::new(&scene.ee);
    builder
        .move_to(bx, by, 0.10, 0.0, GripperCommand::Open, 1)
        .move_to(bx, by, 0.05, 0.0, GripperCommand::Open, 1)
        .move_to(bx, by, grasp_z, 0.0, GripperCommand::Open, 1)
        .hold(GripperCommand::Close, 1)
        .move_to(bx, by, carry_z, 0.0, GripperCommand::Close, 1) // frame 4: lift
        .move_to(tx, ty, carry_z, 0.0, GripperCommand::Close, 2) // frames 5-6: transit
        .hold(GripperCommand::Close, 1) // frame 7: anchor before release
        .hold(GripperCommand::Open, 1) // frame 8: release over the box
        .move_to(tx, ty, carry_z + 0.05, 0.0, GripperCommand::Open, 1);

    TaskSetup {
        scene,
        intrinsics: manipulation_intrinsics(),
        script: builder.build(),
        schedule: MaskSchedule::spans(vec![(0, "block".into()), (5, "box".into())]).unwrap(),
        stride: 1,
        record_options: RecordOptions { mask_erosion: 3 },
        servo: ServoConfig::default(),
        target_object: "block".into(),
    }
}

/// Carry the pre-grasped block to the socket and release it on center.
fn insert_setup() -> TaskSetup {
    let socket = SceneObject {
        id: "socket".into(),
        width: 0.080,
        length: 0.080,
        height: 0.012,
        texture: TextureParams { base_color: [70, 150, 90], seed: 59, fine_cell: 0.012, coarse_cell: 0.035 },
        x: -0.03,
        y: 0.04,
        lift: 0.0,
        yaw: 0.0,
        graspable: false,
        attached: false,
        grasp_offset: None,
    };
    let (sx, sy) = (socket.x, socket.y);
    let ee = EndEffectorState { gripper: GripperState::Closed, ..base_ee(0.08, -0.06, 0.10) };
    // The block starts in the gripper.
    let mut block = block_object(ee.x, ee.y);
    block.lift = ee.z - block.height;
    block.attached = true;
    block.grasp_offset = Some(crate::sim::GraspOffset { x: 0.0, y: 0.0, top: 0.0, yaw: 0.0 });
    let scene = scene_with(vec![socket, block], ee);

    let mut builder = ScriptBuilder::new(&scene.ee);
    builder
        .move_to(sx, sy, 0.10, 0.0, GripperCommand::Close, 2) // transit above the socket
        .move_to(sx, sy, 0.05, 0.0, GripperCommand::Close, 1) // descend
        .hold(GripperCommand::Close, 1) // anchor before release
        .hold(GripperCommand::Open, 1) // release
        .move_to(sx, sy, 0.10, 0.0, GripperCommand::Open, 1);

    TaskSetup {
        scene,
        intrinsics: manipulation_intrinsics(),
        script: builder.build(),
        schedule: MaskSchedule::single("socket"),
        stride: 1,
        record_options: RecordOptions { mask_erosion: 3 },
        servo: ServoConfig { threshold_delta: 0.002, ..ServoConfig::default() },
        target_object: "socket".into(),
    }
}

/// Return to a reference view over a textured workpiece, in-plane only.
fn navigate_setup() -> TaskSetup {
    let panel = SceneObject {
        id: "panel".into(),
        width: 0.150,
        length: 0.100,
        height: 0.020,
        texture: TextureParams { base_color: [120, 120, 140], seed: 73, fine_cell: 0.010, coarse_cell: 0.065 },
        x: 0.01,
        y: 0.0,
        lift: 0.0,
        yaw: 0.0,
        graspable: false,
        attached: false,
        grasp_offset: None,
    };
    let ee = base_ee(0.0, 0.0, 0.12);
    let scene = scene_with(vec![panel], ee);
    let script = vec![Action::hold(GripperCommand::Open)];

    TaskSetup {
        scene,
        intrinsics: navigation_intrinsics(),
        script,
        schedule: MaskSchedule::single("panel"),
        stride: 1,
        record_options: RecordOptions { mask_erosion: 1 },
        servo: ServoConfig {
            threshold_delta: 0.0005,
            z_mode: ZMode::Servo,
            max_step_translation: 0.02,
            max_iters_per_frame: 450,
            ..ServoConfig::default()
        },
        target_object: "panel".into(),
    }
}

/// Task-specific success predicate and scalar metric.
pub fn score(
    task: Task,
    setup: &TaskSetup,
    final_world: &SceneState,
    result: &TrackerResult,
) -> (bool, f64) {
    let done = result.status == TrackStatus::Done;
    match task {
        Task::Pick => {
            let block = final_world.object("block").expect("pick scene has a block");
            let lifted = block.lift;
            (done && block.attached && lifted >= 0.030, lifted)
        }
        Task::PickStow => {
            let block = final_world.object("block").expect("stow scene has a block");
            let target = final_world.object("box").expect("stow scene has a box");
            let inside = target.contains_center_of(block);
            let dist = ((block.x - target.x).powi(2) + (block.y - target.y).powi(2)).sqrt();
            (done && !block.attached && inside, dist)
        }
        Task::Insert => {
            let block = final_world.object("block").expect("insert scene has a block");
            let socket = final_world.object("socket").expect("insert scene has a socket");
            let dist = ((block.x - socket.x).powi(2) + (block.y - socket.y).powi(2)).sqrt();
            (done && !block.attached && dist <= 0.004, dist)
        }
        Task::Navigate => {
            let reference = &setup.scene.ee;
            let ee = &final_world.ee;
            let err = ((ee.x - reference.x).powi(2) + (ee.y - reference.y).powi(2)).sqrt();
            (done && err <= 0.001, err)
        }
    }
}

impl SceneObject {
    /// Whether another object's center lies within this footprint.
    pub fn contains_center_of(&self, other: &SceneObject) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        lx.abs() <= self.width / 2.0 && ly.abs() <= self.length / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::apply_action;

    #[test]
    fn script_builder_reaches_waypoints_exactly() {
        let ee = base_ee(0.0, 0.0, 0.10);
        let mut builder = ScriptBuilder::new(&ee);
        builder
            .move_to(0.05, -0.03, 0.06, 0.4, GripperCommand::Open, 3)
            .move_to(0.01, 0.02, 0.12, -0.2, GripperCommand::Open, 2);
        let script = builder.build();
        assert_eq!(script.len(), 5);

        let mut state = scene_with(vec![], ee);
        state.limits = MotionLimits::default();
        for (i, action) in script.iter().enumerate() {
            state = apply_action(&state, action);
            if i == 2 {
                assert!((state.ee.x - 0.05).abs() < 1e-12);
                assert!((state.ee.y + 0.03).abs() < 1e-12);
                assert!((state.ee.z - 0.06).abs() < 1e-12);
                assert!((state.ee.yaw - 0.4).abs() < 1e-12);
            }
        }
        assert!((state.ee.x - 0.01).abs() < 1e-12);
        assert!((state.ee.y - 0.02).abs() < 1e-12);
        assert!((state.ee.z - 0.12).abs() < 1e-12);
        assert!((state.ee.yaw + 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_task_demos_record_cleanly() {
        for task in [Task::Pick, Task::PickStow, Task::Insert, Task::Navigate] {
            let setup = task_setup(task);
            let recorded = crate::sim::record_demo(
                &setup.scene,
                &setup.intrinsics,
                &setup.script,
                setup.stride,
                &setup.schedule,
                setup.record_options,
            );
            assert!(recorded.is_ok(), "{}: {:?}", task.name(), recorded.err());
            let recorded = recorded.unwrap();
            assert_eq!(recorded.demonstration.len(), setup.script.len());
            for (i, frame) in recorded.demonstration.frames.iter().enumerate() {
                assert!(
                    frame.mask.count() >= 20,
                    "{} frame {i} has only {} mask pixels",
                    task.name(),
                    frame.mask.count()
                );
            }
        }
    }
}
