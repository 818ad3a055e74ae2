//! Flow-based visual servoing with RGB-D observations.
//!
//! A live camera frame is aligned to a recorded demonstration frame by
//! computing dense optical-flow correspondences, restricting them to a
//! foreground mask, lifting both sides to 3D with the depth images, and
//! fitting a least-squares rigid transform. A position-based controller
//! turns that transform into end-effector commands, and a sequence
//! tracker walks an entire demonstration this way, frame by frame.
//!
//! The crate ships a deterministic synthetic RGB-D world ([`sim`]) with a
//! downward eye-in-hand camera so the whole loop can be exercised and
//! benchmarked without hardware, plus an evaluation harness ([`eval`])
//! for fitting-error curves and task success campaigns.

pub mod eval;
pub mod flow;
pub mod geometry;
pub mod imaging;
pub mod servo;
pub mod sim;

pub use geometry::{fit_rigid, CameraIntrinsics, GeometryError, Point3, PointCloud, RigidTransform};
pub use imaging::{
    Action, DepthImage, Demonstration, DemoFrame, FlowField, GripperCommand, Mask, Observation,
    Proprio, RgbImage,
};
pub use servo::{track, Environment, FlowBackend, ServoConfig, TrackStatus, TrackerResult};
pub use sim::{SceneState, SimEnvironment};


