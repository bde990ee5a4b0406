use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fspf::FspfParams;
use crate::geom::UnitVector3;
use crate::merge::MergeParams;
use crate::ops::OpsParams;
use crate::truth::GtParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Detector choice with its parameters; only one set is ever active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Ops(OpsParams),
    Fspf(FspfParams),
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::Ops(_) => "ops",
            Detector::Fspf(_) => "fspf",
        }
    }
}

impl Default for Detector {
    fn default() -> Self {
        Detector::Ops(OpsParams::default())
    }
}

/// Everything a `detect`, `eval`, or `bench` run needs besides its inputs.
///
/// `up` and `seed` override the matching fields inside the detector and
/// ground-truth parameters when the config is [applied](RunConfig::resolved).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub detector: Detector,
    pub merge: MergeParams,
    pub gt: GtParams,
    pub up: UnitVector3,
    /// Degrees, for labeling merged planes.
    pub orientation_tolerance: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            detector: Detector::default(),
            merge: MergeParams::default(),
            gt: GtParams::default(),
            up: UnitVector3::Z,
            orientation_tolerance: 7.0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn ops(params: OpsParams) -> Self {
        RunConfig {
            detector: Detector::Ops(params),
            ..RunConfig::default()
        }
    }

    pub fn fspf(params: FspfParams) -> Self {
        RunConfig {
            detector: Detector::Fspf(params),
            ..RunConfig::default()
        }
    }

    /// Copy with the shared `up`, `seed`, and tolerance pushed into the
    /// per-stage parameter sets.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        match &mut c.detector {
            Detector::Ops(p) => {
                p.up = c.up;
                p.rng_seed = c.seed;
                p.orientation_tolerance = c.orientation_tolerance;
            }
            Detector::Fspf(p) => p.rng_seed = c.seed,
        }
        c.gt.up = c.up;
        c.gt.orientation_tolerance = c.orientation_tolerance;
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        match &self.detector {
            Detector::Ops(p) => p.validate().map_err(|e| invalid(&e))?,
            Detector::Fspf(p) => p.validate().map_err(|e| invalid(&e))?,
        }
        let m = &self.merge;
        if !(m.angle_threshold >= 0.0 && m.offset_threshold >= 0.0) {
            return Err(ConfigError::Invalid("merge thresholds must be nonnegative".into()));
        }
        let g = &self.gt;
        if !(g.dist_threshold > 0.0 && g.normal_angle_threshold > 0.0 && g.min_plane_size > 0 && g.k >= 3) {
            return Err(ConfigError::Invalid(
                "ground-truth thresholds must be positive and k at least 3".into(),
            ));
        }
        if !(self.orientation_tolerance >= 0.0 && self.orientation_tolerance <= 45.0) {
            return Err(ConfigError::Invalid("orientation tolerance must lie in [0, 45] degrees".into()));
        }
        Ok(())
    }

    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let syntax = |message: String| ConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        };
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| syntax(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| syntax(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        std::fs::write(
            &t,
            "seed = 4\n[detector.fspf]\nr1 = 0.1\nmax_inlier_points = { points = 500 }\n[merge]\nangle_threshold = 5.0\n",
        )
        .unwrap();
        let a = RunConfig::load(&t).unwrap();
        let Detector::Fspf(p) = &a.detector else { panic!() };
        assert_eq!(p.r1, 0.1);
        assert_eq!(p.r2, 0.14);
        assert_eq!(a.merge.angle_threshold, 5.0);
        assert_eq!(a.seed, 4);

        let j = dir.path().join("c.json");
        std::fs::write(&j, serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(RunConfig::load(&j).unwrap(), a);
    }

    #[test]
    fn defaults_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("empty.toml");
        std::fs::write(&t, "").unwrap();
        assert_eq!(RunConfig::load(&t).unwrap(), RunConfig::default());
        std::fs::write(&t, "[detector.ops]\nsampling_rate = 2.0\n").unwrap();
        assert!(matches!(RunConfig::load(&t), Err(ConfigError::Invalid(_))));
        std::fs::write(&t, "seed = \"x\"").unwrap();
        assert!(matches!(RunConfig::load(&t), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn resolved_pushes_shared_fields() {
        let mut c = RunConfig::default();
        c.seed = 9;
        c.up = UnitVector3::Y;
        let r = c.resolved();
        let Detector::Ops(p) = &r.detector else { panic!() };
        assert_eq!(p.rng_seed, 9);
        assert_eq!(p.up, UnitVector3::Y);
        assert_eq!(r.gt.up, UnitVector3::Y);
    }
}
