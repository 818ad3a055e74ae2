use flowservo::eval::*;
use flowservo::flow::FlowEstimatorConfig;
use flowservo::sim::texture::TextureParams;
use flowservo::sim::{EndEffectorState, GripperState, SceneObject, SceneState, MotionLimits, Workspace, GraspParams};
use flowservo::CameraIntrinsics;

fn fitting_scene() -> (SceneState, CameraIntrinsics) {
    let intr = CameraIntrinsics::new(130.0, 130.0, 80.0, 60.0, 160, 120).unwrap();
    let scene = SceneState {
        objects: vec![SceneObject {
            id: "workpiece".into(), width: 0.100, length: 0.080, height: 0.030,
            texture: TextureParams { base_color: [160, 120, 60], seed: 71, fine_cell: 0.013, coarse_cell: 0.04 },
            x: 0.0, y: 0.0, lift: 0.0, yaw: 0.0, graspable: false, attached: false, grasp_offset: None,
        }],
        ee: EndEffectorState { x: 0.0, y: 0.0, z: 0.10, yaw: 0.0, gripper: GripperState::Open, camera_offset: [0.0, 0.0, 0.30] },
        table_texture: TextureParams::new([105, 95, 85], 17),
        limits: MotionLimits::default(), workspace: Workspace::default(), grasp: GraspParams::default(),
        depth_noise_sigma: 0.0, rng_seed: 3,
    };
    (scene, intr)
}

fn pctl(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[((v.len() as f64 - 1.0) * q).round() as usize]
}

fn main() {
    let (scene, intr) = fitting_scene();
    let sampler = ViewSampler::default();
    let t0 = std::time::Instant::now();
    let report = run_fitting_experiment(&scene, "workpiece", &sampler,
        &[EstimatorKind::GroundTruth, EstimatorKind::BlockMatch(FlowEstimatorConfig::default())], &intr, 2024);
    println!("250 pairs in {:?}", t0.elapsed());
    let gt = report.method("gt").unwrap();
    println!("gt p95 rot {:.6} deg, trans {:.6} mm",
        pctl(gt.rotations(), 0.95).to_degrees(), pctl(gt.translations(), 0.95) * 1000.0);
    let bm = report.method("blockmatch").unwrap();
    let zero = report.method("zero").unwrap();
    println!("bm substituted: {}", bm.samples.iter().filter(|s| s.substituted).count());
    println!("bm p50 rot {:.3} deg trans {:.2} mm", pctl(bm.rotations(), 0.5).to_degrees(), pctl(bm.translations(), 0.5)*1000.0);
    for (name, grid, bm_e, z_e) in [
        ("rot", rotation_grid(), bm.rotations(), zero.rotations()),
        ("trans", translation_grid(), bm.translations(), zero.translations()),
    ] {
        let bc = error_cdf(&bm_e, &grid).unwrap();
        let zc = error_cdf(&z_e, &grid).unwrap();
        let dominated = bc.fraction_below.iter().zip(&zc.fraction_below).filter(|(a, b)| a >= b).count();
        println!("{name}: blockmatch >= zero at {}/{} grid points", dominated, grid.len());
    }
}
