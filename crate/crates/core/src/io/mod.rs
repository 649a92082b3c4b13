//! Point-cloud files, synthetic scenes and metrics output.

pub mod metrics;
pub mod pcd;
pub mod scene;

pub use metrics::{emit_metrics_csv, MetricsRecord, TreeProfile, METRICS_COLUMNS};
pub use pcd::{read_pcd, read_pcd_file, write_pcd, write_pcd_file, DataMode, PcdError, PcdHeader, PcdRead};
pub use scene::{generate_scene, plant_boundary_points, SceneError, SceneSpec};
