//! File formats, configuration, synthetic scenes, and the runners behind the
//! command-line tool.

pub mod cloud;
pub mod config;
pub mod labels;
pub mod run;
pub mod synth;

pub use cloud::{load_cloud, parse_cloud, write_ply, CloudFormat, LoadedCloud, ParseError};
pub use config::{ConfigError, Detector, RunConfig};
pub use labels::{load_sidecar, save_labeled, write_sidecar, ColorMode};
pub use run::{detect_cloud, run_bench, run_detect, BenchConfig, BenchResult, Detection, DetectionReport};
pub use synth::{gen_synthetic, ClutterSpec, RectSpec, SceneSpec};
