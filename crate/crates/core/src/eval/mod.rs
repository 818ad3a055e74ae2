//! Evaluation protocols: relative-pose fitting error against baselines,
//! error CDFs, and task success campaigns in the simulator.

pub mod tasks;

use crate::flow::{estimate_flow, FlowEstimatorConfig};
use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::imaging::FlowField;
use crate::servo::{frame_align_with_flow, track, FlowBackend, ServoConfig, TrackStatus};
use crate::sim::{gt_flow, record_demo, render, SceneState, SimEnvironment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};
use tasks::{task_setup, Task};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("error list is empty")]
    EmptyErrors,
    #[error("threshold grid must be nonempty and ascending")]
    BadGrid,
}

/// One relative-pose prediction next to its ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePrediction {
    pub predicted: RigidTransform,
    pub truth: RigidTransform,
    /// True when the prediction was replaced by the zero-motion fallback.
    pub substituted: bool,
}

/// Outlier thresholds: rotations above pi/4 rad or translations above
/// 250 mm are replaced by a zero pose-change prediction.
pub const OUTLIER_MAX_ROTATION: f64 = std::f64::consts::FRAC_PI_4;
pub const OUTLIER_MAX_TRANSLATION: f64 = 0.250;

pub fn apply_outlier_rule(pred: PosePrediction) -> PosePrediction {
    if pred.predicted.rotation_angle() > OUTLIER_MAX_ROTATION
        || pred.predicted.translation.norm() > OUTLIER_MAX_TRANSLATION
    {
        return PosePrediction {
            predicted: RigidTransform::identity(),
            truth: pred.truth,
            substituted: true,
        };
    }
    pred
}

/// Rotation and translation error of a prediction, measured on
/// `predicted * truth^-1`.
pub fn prediction_errors(pred: &PosePrediction) -> (f64, f64) {
    let residual = pred.predicted.compose(&pred.truth.inverse());
    (residual.rotation_angle(), residual.translation.norm())
}

/// Empirical CDF sampled on a fixed threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub thresholds: Vec<f64>,
    pub fraction_below: Vec<f64>,
}

pub fn error_cdf(errors: &[f64], thresholds: &[f64]) -> Result<ErrorCurve, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::EmptyErrors);
    }
    if thresholds.is_empty() || !thresholds.windows(2).all(|w| w[0] < w[1]) {
        return Err(EvalError::BadGrid);
    }
    let n = errors.len() as f64;
    let fraction_below = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect();
    Ok(ErrorCurve { thresholds: thresholds.to_vec(), fraction_below })
}

/// Default grid for rotation errors: 0 to pi/2 rad, 121 points.
pub fn rotation_grid() -> Vec<f64> {
    (0..=120).map(|i| i as f64 * std::f64::consts::FRAC_PI_2 / 120.0).collect()
}

/// Default grid for translation errors: 0 to 0.30 m, 121 points.
pub fn translation_grid() -> Vec<f64> {
    (0..=120).map(|i| i as f64 * 0.30 / 120.0).collect()
}

/// Pose estimator under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// Simulator flow oracle: isolates the geometry from flow error.
    GroundTruth,
    /// The pyramidal block matcher.
    BlockMatch(FlowEstimatorConfig),
    /// Always predicts zero pose change (the reference floor).
    Zero,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::GroundTruth => "gt",
            EstimatorKind::BlockMatch(_) => "blockmatch",
            EstimatorKind::Zero => "zero",
        }
    }
}

/// View-pair distribution for the fitting experiment: in-plane offsets up
/// to `max_translation`, heights within `max_height`, yaw strictly below
/// `max_rotation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSampler {
    pub count: usize,
    pub max_rotation: f64,
    pub max_translation: f64,
    pub max_height: f64,
}

impl Default for ViewSampler {
    fn default() -> Self {
        Self {
            count: 250,
            max_rotation: std::f64::consts::FRAC_PI_4,
            max_translation: 0.08,
            max_height: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleError {
    pub rotation: f64,
    pub translation: f64,
    pub substituted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodErrors {
    pub name: String,
    pub samples: Vec<SampleError>,
}

impl MethodErrors {
    pub fn rotations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rotation).collect()
    }

    pub fn translations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.translation).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittingReport {
    pub methods: Vec<MethodErrors>,
}

impl FittingReport {
    pub fn method(&self, name: &str) -> Option<&MethodErrors> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// Relative-pose estimation benchmark over sampled view pairs of a static
/// scene.
///
/// For every pair the reference view plays the demonstration frame (with
/// the target object's mask) and each estimator predicts the relative
/// camera pose; predictions beyond the outlier thresholds, and alignments
/// that fail outright, are substituted by the zero prediction. The zero
/// baseline is always reported.
pub fn run_fitting_experiment(
    scene: &SceneState,
    target_object: &str,
    sampler: &ViewSampler,
    estimators: &[EstimatorKind],
    intr: &CameraIntrinsics,
    seed: u64,
) -> FittingReport {
    let mut methods: Vec<EstimatorKind> = estimators.to_vec();
    if !methods.iter().any(|m| matches!(m, EstimatorKind::Zero)) {
        methods.push(EstimatorKind::Zero);
    }

    let base_rendering = render(scene, intr).expect("reference view must render");
    let target_idx = scene
        .object_index(target_object)
        .unwrap_or_else(|| panic!("unknown target object {target_object}"));
    let base_mask = base_rendering.object_masks[target_idx].clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FittingReport {
        methods: methods
            .iter()
            .map(|m| MethodErrors { name: m.name().to_string(), samples: Vec::new() })
            .collect(),
    };

    let min_correspondences = 10;
    for _ in 0..sampler.count {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let radius = rng.random_range(0.0..=sampler.max_translation);
        let mut view = scene.clone();
        view.ee.x += radius * angle.cos();
        view.ee.y += radius * angle.sin();
        view.ee.z += rng.random_range(-sampler.max_height..=sampler.max_height);
        view.ee.yaw += rng.random_range(-sampler.max_rotation..sampler.max_rotation);

        let truth = crate::sim::relative_camera_pose(scene, &view);
        let live_rendering = render(&view, intr).expect("sampled view must render");

        for (method, errors) in methods.iter().zip(report.methods.iter_mut()) {
            let (predicted, mut substituted) = match method {
                EstimatorKind::Zero => (RigidTransform::identity(), false),
                EstimatorKind::GroundTruth | EstimatorKind::BlockMatch(_) => {
                    let flow: FlowField = match method {
                        EstimatorKind::GroundTruth => gt_flow(scene, &view, intr),
                        EstimatorKind::BlockMatch(cfg) => estimate_flow(
                            &base_rendering.observation.rgb,
                            &live_rendering.observation.rgb,
                            cfg,
                        )
                        .expect("rendered pairs share dimensions"),
                        EstimatorKind::Zero => unreachable!(),
                    };
                    match frame_align_with_flow(
                        &base_rendering.observation,
                        &base_mask,
                        &live_rendering.observation,
                        &flow,
                        intr,
                        min_correspondences,
                    ) {
                        Ok(result) => (result.transform, false),
                        Err(_) => (RigidTransform::identity(), true),
                    }
                }
            };
            let ruled = apply_outlier_rule(PosePrediction { predicted, truth, substituted });
            substituted = ruled.substituted || substituted;
            let (rotation, translation) = prediction_errors(&ruled);
            errors.samples.push(SampleError { rotation, translation, substituted });
        }
    }
    report
}

/// How a trial perturbs the target object's appearance (the live scene
/// only; the demonstration stays canonical).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AppearanceJitter {
    /// Per-channel base color perturbation as a fraction of full scale.
    pub color: f64,
    /// Footprint scale perturbation, e.g. 0.2 for +-20%.
    pub scale: f64,
    /// Redraw the texture seed entirely.
    pub reseed: bool,
}

/// Estimator choices that can drive the tracker.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskEstimator {
    GroundTruth,
    BlockMatch(FlowEstimatorConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: TrackStatus,
    pub ticks: usize,
    pub success: bool,
    /// Task-specific scalar: lift height (pick), distance to target center
    /// (stow/insert), final in-plane error (navigate). Meters.
    pub final_metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    pub task: Task,
    pub successes: usize,
    pub trials: usize,
    pub records: Vec<TrialRecord>,
}

/// Run a recorded task demonstration against `trials` perturbed scenes and
/// score each outcome.
///
/// `position_jitter` displaces the task's target object uniformly in
/// `+-position_jitter` per axis; for the navigation task it instead caps
/// the end effector's start offset radius (the first trial uses the full
/// cap). Failures are scored, never raised.
pub fn run_task_experiment(
    task: Task,
    trials: usize,
    position_jitter: f64,
    appearance: Option<AppearanceJitter>,
    estimator: &TaskEstimator,
    servo_override: Option<ServoConfig>,
    seed: u64,
) -> TaskReport {
    let setup = task_setup(task);
    let cfg = servo_override.unwrap_or(setup.servo);
    let recorded = record_demo(
        &setup.scene,
        &setup.intrinsics,
        &setup.script,
        setup.stride,
        &setup.schedule,
        setup.record_options,
    )
    .expect("task library demos must record cleanly");

    let matcher = match estimator {
        TaskEstimator::BlockMatch(cfg) => Some(crate::flow::BlockMatcher::new(*cfg)),
        TaskEstimator::GroundTruth => None,
    };

    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64 + 1);

        let mut live = setup.scene.clone();
        if task == Task::Navigate {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let radius = if trial == 0 {
                position_jitter
            } else {
                rng.random_range(0.0..=position_jitter)
            };
            live.ee.x += radius * angle.cos();
            live.ee.y += radius * angle.sin();
        } else if let Some(obj) = live.object_mut(&setup.target_object) {
            obj.x += rng.random_range(-position_jitter..=position_jitter);
            obj.y += rng.random_range(-position_jitter..=position_jitter);
        }
        if let Some(jitter) = appearance {
            if let Some(obj) = live.object_mut(&setup.target_object) {
                if jitter.color > 0.0 {
                    for c in obj.texture.base_color.iter_mut() {
                        let delta = rng.random_range(-jitter.color..=jitter.color) * 255.0;
                        *c = (*c as f64 + delta).round().clamp(0.0, 255.0) as u8;
                    }
                }
                if jitter.scale > 0.0 {
                    let s = 1.0 + rng.random_range(-jitter.scale..=jitter.scale);
                    obj.width *= s;
                    obj.length *= s;
                }
                if jitter.reseed {
                    obj.texture.seed = rng.random();
                }
            }
        }

        let mut env = SimEnvironment::new(live, setup.intrinsics)
            .with_reference_states(recorded.states.clone());
        let backend = match &matcher {
            Some(m) => FlowBackend::Estimator(m),
            None => FlowBackend::EnvironmentOracle,
        };
        let result = track(&recorded.demonstration, &mut env, &backend, &cfg);
        let (success, final_metric) = tasks::score(task, &setup, env.world(), &result);
        records.push(TrialRecord {
            trial,
            status: result.status,
            ticks: result.ticks,
            success,
            final_metric,
        });
    }

    TaskReport {
        task,
        successes: records.iter().filter(|r| r.success).count(),
        trials,
        records,
    }
}

/// One row per sample: `method,sample,rotation_error,translation_error,substituted`.
pub fn write_fitting_csv(report: &FittingReport, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "method,sample,rotation_error_rad,translation_error_m,substituted")?;
    for method in &report.methods {
        for (i, s) in method.samples.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.9},{:.9},{}",
                method.name, i, s.rotation, s.translation, s.substituted
            )?;
        }
    }
    Ok(())
}

/// One row per threshold, one column per method. All curves must share the
/// same grid.
pub fn write_curves_csv(
    curves: &[(String, ErrorCurve)],
    w: &mut impl Write,
) -> io::Result<()> {
    let grid = &curves[0].1.thresholds;
    for (_, c) in curves {
        assert_eq!(&c.thresholds, grid, "curves must share one threshold grid");
    }
    write!(w, "threshold")?;
    for (name, _) in curves {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (i, t) in grid.iter().enumerate() {
        write!(w, "{t:.9}")?;
        for (_, c) in curves {
            write!(w, ",{:.6}", c.fraction_below[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One row per trial: `trial,status,ticks,success,final_metric`.
pub fn write_task_csv(report: &TaskReport, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "trial,status,ticks,success,final_metric_m")?;
    for r in &report.records {
        let status = match r.status {
            TrackStatus::Done => "done",
            TrackStatus::Tracking => "tracking",
            TrackStatus::Failed(crate::servo::FailReason::Timeout) => "timeout",
            TrackStatus::Failed(crate::servo::FailReason::LostCorrespondence) => {
                "lost-correspondence"
            }
        };
        writeln!(w, "{},{},{},{},{:.6}", r.trial, status, r.ticks, r.success, r.final_metric)?;
    }
    Ok(())
}
