//! Frame alignment and sequence tracking.
//!
//! One alignment runs flow estimation (demo -> live), restricts the
//! correspondences to the demo foreground mask, unprojects both sides with
//! the depth images, and fits a rigid transform T with `R*p_demo + t ~=
//! p_live`. The position-based controller converts T into a 5-DoF action;
//! the tracker repeats align-act until `|T| <= delta`, then steps to the
//! next demonstration frame.
//!
//! Sign conventions in [`compute_action`] look inverted in places; they are
//! pinned by the contraction property (one step must strictly shrink `|T|`
//! in the simulator) and fall out of the downward camera: yaw observed in
//! the image runs opposite the end-effector yaw, and camera z points away
//! from world up.

use crate::flow::{FlowError, ImageFlowEstimator};
use crate::geometry::{fit_rigid, CameraIntrinsics, GeometryError, RigidTransform};
use crate::imaging::{
    masked_correspondences, Action, DemoFrame, Demonstration, FlowField, GripperCommand, Mask,
    Observation, Proprio,
};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServoError {
    #[error("only {got} correspondences, need at least {need}")]
    InsufficientCorrespondences { got: usize, need: usize },
    #[error(transparent)]
    Fit(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Vertical control mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMode {
    /// Drive z from the fitted transform like the in-plane axes.
    Servo,
    /// Reproduce the demonstration's recorded gripper-height trajectory;
    /// alignment handles the other dimensions.
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    /// Proportional gain in (0, 1].
    pub gain: f64,
    /// Frame exit threshold on the mixed norm `|T|`, meters.
    pub threshold_delta: f64,
    /// Rotation weight of the mixed norm, meters per radian.
    pub beta: f64,
    /// Per-tick caps: in-plane translation norm and |dz|, meters.
    pub max_step_translation: f64,
    /// Per-tick yaw cap, radians.
    pub max_step_rotation: f64,
    pub z_mode: ZMode,
    /// Alignments with fewer correspondences raise an error (>= 3).
    pub min_correspondences: usize,
    /// Per-frame tick budget before the run fails.
    pub max_iters_per_frame: usize,
    /// Extra ticks to dwell on a frame whose action closes the gripper.
    pub close_delay_ticks: usize,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            gain: 0.5,
            threshold_delta: 0.005,
            beta: 0.1,
            max_step_translation: 0.010,
            max_step_rotation: 0.05,
            z_mode: ZMode::Copy,
            min_correspondences: 10,
            max_iters_per_frame: 200,
            close_delay_ticks: 5,
        }
    }
}

impl ServoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(format!("gain must be in (0, 1], got {}", self.gain));
        }
        if self.threshold_delta <= 0.0 {
            return Err(format!("threshold_delta must be positive, got {}", self.threshold_delta));
        }
        if self.beta < 0.0 {
            return Err(format!("beta must be nonnegative, got {}", self.beta));
        }
        if self.min_correspondences < 3 {
            return Err(format!(
                "min_correspondences must be >= 3, got {}",
                self.min_correspondences
            ));
        }
        Ok(())
    }
}

/// A fitted alignment and how many correspondences supported it.
#[derive(Debug, Clone, Copy)]
pub struct AlignResult {
    pub transform: RigidTransform,
    pub correspondences: usize,
}

/// Frame alignment with a precomputed flow field (demo -> live).
pub fn frame_align_with_flow(
    demo_obs: &Observation,
    demo_mask: &Mask,
    live_obs: &Observation,
    flow: &FlowField,
    intr: &CameraIntrinsics,
    min_correspondences: usize,
) -> Result<AlignResult, ServoError> {
    let (src, dst) = masked_correspondences(demo_obs, live_obs, demo_mask, flow, intr);
    if src.len() < min_correspondences {
        return Err(ServoError::InsufficientCorrespondences {
            got: src.len(),
            need: min_correspondences,
        });
    }
    let transform = fit_rigid(&src, &dst)?;
    Ok(AlignResult { transform, correspondences: src.len() })
}

/// Frame alignment: estimate flow demo -> live, mask, unproject, fit.
pub fn frame_align(
    demo_obs: &Observation,
    demo_mask: &Mask,
    live_obs: &Observation,
    estimator: &dyn ImageFlowEstimator,
    intr: &CameraIntrinsics,
    min_correspondences: usize,
) -> Result<AlignResult, ServoError> {
    let flow = estimator.estimate(&demo_obs.rgb, &live_obs.rgb)?;
    frame_align_with_flow(demo_obs, demo_mask, live_obs, &flow, intr, min_correspondences)
}

/// Position-based control law turning an alignment into a 5-DoF action.
///
/// In-plane translation and yaw are proportional in the fitted transform;
/// z either servos on `t_z` or copies the demonstrated gripper height; the
/// gripper command is copied verbatim from the demonstration action.
pub fn compute_action(
    transform: &RigidTransform,
    demo_frame: &DemoFrame,
    live_proprio: Option<&Proprio>,
    cfg: &ServoConfig,
) -> Action {
    let t = transform.translation;
    let mut dx = cfg.gain * t.x;
    let mut dy = cfg.gain * t.y;
    let norm = (dx * dx + dy * dy).sqrt();
    if norm > cfg.max_step_translation {
        let scale = cfg.max_step_translation / norm;
        dx *= scale;
        dy *= scale;
    }

    let dz_raw = match cfg.z_mode {
        // Camera z points down: positive t_z means the demo camera sat
        // lower, so the gripper must descend.
        ZMode::Servo => -cfg.gain * t.z,
        ZMode::Copy => match (demo_frame.observation.proprio, live_proprio) {
            (Some(demo), Some(live)) => demo.gripper_height - live.gripper_height,
            _ => 0.0,
        },
    };
    let dz = dz_raw.clamp(-cfg.max_step_translation, cfg.max_step_translation);

    // Image yaw runs opposite end-effector yaw under the downward camera.
    let dtheta =
        (-cfg.gain * transform.yaw()).clamp(-cfg.max_step_rotation, cfg.max_step_rotation);

    Action { dx, dy, dz, dtheta, gripper: demo_frame.action.gripper }
}

/// Action-executing environment the tracker drives.
pub trait Environment {
    fn observe(&mut self) -> Observation;
    fn execute(&mut self, action: &Action);

    /// Exact flow from a demonstration frame to the current state, if this
    /// environment can provide it (the simulator can, hardware cannot).
    fn oracle_flow(&mut self, demo_frame: usize) -> Option<FlowField> {
        let _ = demo_frame;
        None
    }
}

/// Where the tracker gets its correspondences.
pub enum FlowBackend<'a> {
    /// Image-based estimation on the demo and live RGB frames.
    Estimator(&'a dyn ImageFlowEstimator),
    /// The environment's exact oracle ([`Environment::oracle_flow`]).
    EnvironmentOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    /// A frame used up `max_iters_per_frame` ticks without converging.
    Timeout,
    /// Correspondences stayed below the minimum for a full frame budget.
    LostCorrespondence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tracking,
    Done,
    Failed(FailReason),
}

/// Mutable loop state of the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerState {
    /// Demonstration frame currently being aligned; never decreases.
    pub frame_index: usize,
    pub iters_in_frame: usize,
    /// Remaining dwell ticks on a gripper-close frame.
    pub delay_remaining: Option<usize>,
    pub status: TrackStatus,
}

/// One tick of the tracking log.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: usize,
    pub frame_index: usize,
    /// Mixed norm `|T|`; `None` when the alignment failed and the tracker
    /// held position.
    pub magnitude: Option<f64>,
    pub translation: [f64; 3],
    pub rotation_angle: f64,
    pub yaw: f64,
    pub correspondences: usize,
    pub action: Action,
    pub held: bool,
}

#[derive(Debug, Clone)]
pub struct TrackerResult {
    pub status: TrackStatus,
    pub ticks: usize,
    pub log: Vec<TickRecord>,
}

impl TrackerResult {
    pub fn is_done(&self) -> bool {
        self.status == TrackStatus::Done
    }
}

/// Track a whole demonstration: align to frame i until `|T| <= delta`,
/// advance, repeat until the last frame is passed.
///
/// Every visited frame executes at least one action (the first alignment
/// always acts, whatever its magnitude), so gripper commands attached to
/// zero-distance frames are still issued. On insufficient correspondences
/// or a degenerate fit the tracker holds position (zero motion, gripper
/// unchanged) and retries, failing after a full frame budget of holds.
pub fn track<E: Environment>(
    demo: &Demonstration,
    env: &mut E,
    backend: &FlowBackend,
    cfg: &ServoConfig,
) -> TrackerResult {
    track_with(demo, env, backend, cfg, |_, _| {})
}

/// [`track`] with a per-tick observer (for frame dumps and live logging).
pub fn track_with<E: Environment>(
    demo: &Demonstration,
    env: &mut E,
    backend: &FlowBackend,
    cfg: &ServoConfig,
    mut on_tick: impl FnMut(&TickRecord, &Observation),
) -> TrackerResult {
    if let Err(reason) = cfg.validate() {
        panic!("invalid servo config: {reason}");
    }
    let mut state = TrackerState {
        frame_index: 0,
        iters_in_frame: 0,
        delay_remaining: None,
        status: TrackStatus::Tracking,
    };
    let mut holds_in_frame = 0usize;
    let mut last_gripper: Option<GripperCommand> = None;
    let mut log = Vec::new();

    while state.frame_index < demo.len() {
        let frame = &demo.frames[state.frame_index];
        let obs = env.observe();

        let align = match backend {
            FlowBackend::EnvironmentOracle => {
                let flow = env.oracle_flow(state.frame_index).expect(
                    "flow backend is EnvironmentOracle but the environment provides no oracle",
                );
                frame_align_with_flow(
                    &frame.observation,
                    &frame.mask,
                    &obs,
                    &flow,
                    &demo.intrinsics,
                    cfg.min_correspondences,
                )
            }
            FlowBackend::Estimator(estimator) => frame_align(
                &frame.observation,
                &frame.mask,
                &obs,
                *estimator,
                &demo.intrinsics,
                cfg.min_correspondences,
            ),
        };

        let tick = log.len();
        state.iters_in_frame += 1;
        let mut advanced = false;

        match align {
            Ok(AlignResult { transform, correspondences }) => {
                let action =
                    compute_action(&transform, frame, obs.proprio.as_ref(), cfg);
                env.execute(&action);
                last_gripper = Some(action.gripper);
                let magnitude = transform.magnitude(cfg.beta);
                let record = TickRecord {
                    tick,
                    frame_index: state.frame_index,
                    magnitude: Some(magnitude),
                    translation: transform.translation.into(),
                    rotation_angle: transform.rotation_angle(),
                    yaw: transform.yaw(),
                    correspondences,
                    action,
                    held: false,
                };
                on_tick(&record, &obs);
                log.push(record);

                match state.delay_remaining {
                    Some(0) => advanced = true,
                    Some(d) => state.delay_remaining = Some(d - 1),
                    None => {
                        if magnitude <= cfg.threshold_delta {
                            if frame.action.gripper == GripperCommand::Close
                                && cfg.close_delay_ticks > 0
                            {
                                state.delay_remaining = Some(cfg.close_delay_ticks - 1);
                            } else {
                                advanced = true;
                            }
                        }
                    }
                }
            }
            Err(
                ServoError::InsufficientCorrespondences { got, .. }
                | ServoError::Fit(GeometryError::TooFewPoints(got)),
            ) => {
                hold(env, frame, last_gripper, got, &obs, &mut log, &mut on_tick, &state);
                holds_in_frame += 1;
            }
            Err(ServoError::Fit(GeometryError::DegenerateFit)) => {
                hold(env, frame, last_gripper, 0, &obs, &mut log, &mut on_tick, &state);
                holds_in_frame += 1;
            }
            Err(e) => panic!("unrecoverable alignment failure: {e}"),
        }

        if advanced {
            state.frame_index += 1;
            state.iters_in_frame = 0;
            state.delay_remaining = None;
            holds_in_frame = 0;
            continue;
        }
        if holds_in_frame >= cfg.max_iters_per_frame {
            state.status = TrackStatus::Failed(FailReason::LostCorrespondence);
            return TrackerResult { status: state.status, ticks: log.len(), log };
        }
        if state.iters_in_frame >= cfg.max_iters_per_frame {
            state.status = TrackStatus::Failed(FailReason::Timeout);
            return TrackerResult { status: state.status, ticks: log.len(), log };
        }
    }
    state.status = TrackStatus::Done;
    TrackerResult { status: state.status, ticks: log.len(), log }
}

#[allow(clippy::too_many_arguments)]
fn hold<E: Environment>(
    env: &mut E,
    frame: &DemoFrame,
    last_gripper: Option<GripperCommand>,
    correspondences: usize,
    obs: &Observation,
    log: &mut Vec<TickRecord>,
    on_tick: &mut impl FnMut(&TickRecord, &Observation),
    state: &TrackerState,
) {
    let action = Action::hold(last_gripper.unwrap_or(frame.action.gripper));
    env.execute(&action);
    let record = TickRecord {
        tick: log.len(),
        frame_index: state.frame_index,
        magnitude: None,
        translation: [0.0; 3],
        rotation_angle: 0.0,
        yaw: 0.0,
        correspondences,
        action,
        held: true,
    };
    on_tick(&record, obs);
    log.push(record);
}

/// Per-tick log as CSV, one row per tick.
pub fn write_tick_log_csv(log: &[TickRecord], w: &mut impl Write) -> io::Result<()> {
    writeln!(
        w,
        "tick,frame_index,magnitude,t_x,t_y,t_z,rotation_angle,yaw,correspondences,dx,dy,dz,dtheta,gripper,status"
    )?;
    for r in log {
        let gripper = match r.action.gripper {
            GripperCommand::Open => "open",
            GripperCommand::Close => "close",
        };
        let status = if r.held { "hold" } else { "tracking" };
        let magnitude = r.magnitude.map(|m| format!("{m:.9}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{},{:.9},{:.9},{:.9},{:.9},{},{}",
            r.tick,
            r.frame_index,
            magnitude,
            r.translation[0],
            r.translation[1],
            r.translation[2],
            r.rotation_angle,
            r.yaw,
            r.correspondences,
            r.action.dx,
            r.action.dy,
            r.action.dz,
            r.action.dtheta,
            gripper,
            status,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::tests::{test_intrinsics, test_scene};
    use crate::sim::{
        apply_action, gt_flow, record_demo, relative_camera_pose, render, MaskSchedule,
        RecordOptions, SimEnvironment,
    };
    use approx::assert_abs_diff_eq;

    fn unlimited_cfg() -> ServoConfig {
        ServoConfig {
            max_step_translation: 0.2,
            max_step_rotation: 1.0,
            z_mode: ZMode::Servo,
            ..ServoConfig::default()
        }
    }

    #[test]
    fn frame_align_identity_is_identity() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let rendering = render(&scene, &intr).unwrap();
        let flow = gt_flow(&scene, &scene, &intr);
        let result = frame_align_with_flow(
            &rendering.observation,
            &rendering.object_masks[0],
            &rendering.observation,
            &flow,
            &intr,
            10,
        )
        .unwrap();
        assert!(result.transform.magnitude(0.1) < 1e-9);
    }

    #[test]
    fn frame_align_recovers_known_camera_motion() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let mut moved = scene.clone();
        moved.ee.x += 0.02;
        moved.ee.y += 0.015;
        moved.ee.yaw -= 0.2;
        let demo_rendering = render(&scene, &intr).unwrap();
        let live_rendering = render(&moved, &intr).unwrap();
        let flow = gt_flow(&scene, &moved, &intr);
        let result = frame_align_with_flow(
            &demo_rendering.observation,
            &demo_rendering.object_masks[0],
            &live_rendering.observation,
            &flow,
            &intr,
            10,
        )
        .unwrap();
        let truth = relative_camera_pose(&scene, &moved);
        assert!((result.transform.rotation - truth.rotation).norm() < 1e-6);
        assert!((result.transform.translation - truth.translation).norm() < 1e-6);
    }

    #[test]
    fn frame_align_rejects_empty_mask() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let rendering = render(&scene, &intr).unwrap();
        let empty = Mask::new(intr.width, intr.height);
        let flow = gt_flow(&scene, &scene, &intr);
        match frame_align_with_flow(
            &rendering.observation,
            &empty,
            &rendering.observation,
            &flow,
            &intr,
            10,
        ) {
            Err(ServoError::InsufficientCorrespondences { got: 0, need: 10 }) => {}
            other => panic!("expected InsufficientCorrespondences, got {other:?}"),
        }
    }

    #[test]
    fn identity_transform_yields_zero_motion() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let recorded = record_demo(
            &scene,
            &intr,
            &[Action::hold(GripperCommand::Open)],
            1,
            &MaskSchedule::single("block"),
            RecordOptions::default(),
        )
        .unwrap();
        let cfg = unlimited_cfg();
        let action = compute_action(
            &RigidTransform::identity(),
            &recorded.demonstration.frames[0],
            recorded.demonstration.frames[0].observation.proprio.as_ref(),
            &cfg,
        );
        assert_eq!(action, Action::hold(GripperCommand::Open));
    }

    #[test]
    fn one_servo_step_contracts_misalignment() {
        let demo_scene = test_scene();
        let intr = test_intrinsics();
        let mut live = demo_scene.clone();
        live.ee.x += 0.03;
        live.ee.y -= 0.02;
        live.ee.z += 0.02;

        let demo_rendering = render(&demo_scene, &intr).unwrap();
        let frame = DemoFrame {
            observation: demo_rendering.observation,
            mask: demo_rendering.object_masks[0].clone(),
            action: Action::hold(GripperCommand::Open),
        };
        let cfg = unlimited_cfg();

        let before = relative_camera_pose(&demo_scene, &live).magnitude(cfg.beta);
        let flow = gt_flow(&demo_scene, &live, &intr);
        let live_rendering = render(&live, &intr).unwrap();
        let result = frame_align_with_flow(
            &frame.observation,
            &frame.mask,
            &live_rendering.observation,
            &flow,
            &intr,
            cfg.min_correspondences,
        )
        .unwrap();
        let action = compute_action(
            &result.transform,
            &frame,
            live_rendering.observation.proprio.as_ref(),
            &cfg,
        );
        let after_state = apply_action(&live, &action);
        let after = relative_camera_pose(&demo_scene, &after_state).magnitude(cfg.beta);
        assert!(after < before * (1.0 - cfg.gain / 2.0), "before {before}, after {after}");

        // Gain 1 converges in one step.
        let cfg_full = ServoConfig { gain: 1.0, ..cfg };
        let action = compute_action(
            &result.transform,
            &frame,
            live_rendering.observation.proprio.as_ref(),
            &cfg_full,
        );
        let after_state = apply_action(&live, &action);
        let residual = relative_camera_pose(&demo_scene, &after_state).magnitude(cfg_full.beta);
        assert!(residual < 1e-3, "one-step residual {residual}");
    }

    #[test]
    fn yaw_misalignment_contracts_too() {
        let demo_scene = test_scene();
        let intr = test_intrinsics();
        let mut live = demo_scene.clone();
        live.ee.yaw += 0.3;
        let demo_rendering = render(&demo_scene, &intr).unwrap();
        let frame = DemoFrame {
            observation: demo_rendering.observation,
            mask: demo_rendering.object_masks[0].clone(),
            action: Action::hold(GripperCommand::Open),
        };
        let cfg = unlimited_cfg();
        let flow = gt_flow(&demo_scene, &live, &intr);
        let live_rendering = render(&live, &intr).unwrap();
        let result = frame_align_with_flow(
            &frame.observation,
            &frame.mask,
            &live_rendering.observation,
            &flow,
            &intr,
            cfg.min_correspondences,
        )
        .unwrap();
        let action = compute_action(
            &result.transform,
            &frame,
            live_rendering.observation.proprio.as_ref(),
            &cfg,
        );
        let after_state = apply_action(&live, &action);
        let before = relative_camera_pose(&demo_scene, &live).rotation_angle();
        let after = relative_camera_pose(&demo_scene, &after_state).rotation_angle();
        assert_abs_diff_eq!(after, before * (1.0 - cfg.gain), epsilon = 1e-6);
    }

    #[test]
    fn track_single_aligned_frame_finishes_after_one_check() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let recorded = record_demo(
            &scene,
            &intr,
            &[Action::hold(GripperCommand::Open)],
            1,
            &MaskSchedule::single("block"),
            RecordOptions::default(),
        )
        .unwrap();
        let mut env =
            SimEnvironment::new(scene, intr).with_reference_states(recorded.states.clone());
        let result = track(
            &recorded.demonstration,
            &mut env,
            &FlowBackend::EnvironmentOracle,
            &unlimited_cfg(),
        );
        assert!(result.is_done());
        assert_eq!(result.ticks, 1);
        assert_eq!(result.log[0].frame_index, 0);
    }

    #[test]
    fn track_times_out_on_unreachable_threshold() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let recorded = record_demo(
            &scene,
            &intr,
            &[Action::hold(GripperCommand::Open)],
            1,
            &MaskSchedule::single("block"),
            RecordOptions::default(),
        )
        .unwrap();
        let mut offset_scene = recorded.states[0].clone();
        offset_scene.ee.x += 0.05;
        let mut env = SimEnvironment::new(offset_scene, intr)
            .with_reference_states(recorded.states.clone());
        let cfg = ServoConfig {
            gain: 1e-6,
            max_iters_per_frame: 5,
            z_mode: ZMode::Servo,
            ..ServoConfig::default()
        };
        let result =
            track(&recorded.demonstration, &mut env, &FlowBackend::EnvironmentOracle, &cfg);
        assert_eq!(result.status, TrackStatus::Failed(FailReason::Timeout));
        assert_eq!(result.ticks, 5);
    }

    #[test]
    fn track_reports_lost_correspondence_and_holds_position() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let mut recorded = record_demo(
            &scene,
            &intr,
            &[Action::hold(GripperCommand::Open)],
            1,
            &MaskSchedule::single("block"),
            RecordOptions::default(),
        )
        .unwrap();
        // Blind the demo frame.
        recorded.demonstration.frames[0].mask = Mask::new(intr.width, intr.height);
        let mut env = SimEnvironment::new(scene.clone(), intr)
            .with_reference_states(recorded.states.clone());
        let cfg = ServoConfig { max_iters_per_frame: 4, ..ServoConfig::default() };
        let result =
            track(&recorded.demonstration, &mut env, &FlowBackend::EnvironmentOracle, &cfg);
        assert_eq!(result.status, TrackStatus::Failed(FailReason::LostCorrespondence));
        assert_eq!(result.ticks, 4);
        assert!(result.log.iter().all(|r| r.held));
        // Holding means the end effector never moved.
        assert_eq!(env.world().ee, scene.ee);
    }

    #[test]
    fn close_frames_dwell_for_the_delay() {
        let scene = test_scene();
        let intr = test_intrinsics();
        let script = vec![
            Action::hold(GripperCommand::Open),
            Action::hold(GripperCommand::Close),
            Action::hold(GripperCommand::Close),
        ];
        let recorded = record_demo(
            &scene,
            &intr,
            &script,
            1,
            &MaskSchedule::single("block"),
            RecordOptions::default(),
        )
        .unwrap();
        let mut env = SimEnvironment::new(scene, intr)
            .with_reference_states(recorded.states.clone());
        let cfg = ServoConfig { close_delay_ticks: 4, ..unlimited_cfg() };
        let result =
            track(&recorded.demonstration, &mut env, &FlowBackend::EnvironmentOracle, &cfg);
        assert!(result.is_done());
        // Aligned from the start: open frame exits in 1 tick, each close
        // frame takes 1 + close_delay ticks.
        assert_eq!(result.ticks, 1 + 2 * (1 + cfg.close_delay_ticks));

        // Frame index is monotone and the issued gripper sequence matches
        // the demo restricted to visited frames.
        for pair in result.log.windows(2) {
            assert!(pair[0].frame_index <= pair[1].frame_index);
        }
        let mut issued = Vec::new();
        for r in &result.log {
            if issued.last() != Some(&(r.frame_index, r.action.gripper)) {
                issued.push((r.frame_index, r.action.gripper));
            }
        }
        let expected: Vec<_> = recorded
            .demonstration
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| (i, f.action.gripper))
            .collect();
        assert_eq!(issued, expected);
    }

    #[test]
    fn tick_log_csv_is_stable() {
        let record = TickRecord {
            tick: 0,
            frame_index: 1,
            magnitude: Some(0.0123456789),
            translation: [0.01, -0.02, 0.003],
            rotation_angle: 0.1,
            yaw: -0.1,
            correspondences: 42,
            action: Action { dx: 0.005, dy: 0.0, dz: -0.001, dtheta: 0.02, gripper: GripperCommand::Close },
            held: false,
        };
        let mut buf = Vec::new();
        write_tick_log_csv(&[record.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "tick,frame_index,magnitude,t_x,t_y,t_z,rotation_angle,yaw,correspondences,dx,dy,dz,dtheta,gripper,status"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("0,1,0.012345679,"));
        assert!(row.ends_with(",close,tracking"));
    }
}
