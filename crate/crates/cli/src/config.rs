use std::path::{Path, PathBuf};

use holofit::objective::ObjectiveWeights;
use holofit::optimizer::FitConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a run can be configured with. Relative paths are taken
/// relative to the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub limits: Option<PathBuf>,
    pub camera: Option<PathBuf>,
    pub layout: Option<PathBuf>,
    pub keypoints: Vec<PathBuf>,
    pub init: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub max_violations: Option<f64>,
    pub fps: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub fit: FitConfig,
    pub weights: ObjectiveWeights,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = holofit::io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut cfg.model,
            &mut cfg.limits,
            &mut cfg.camera,
            &mut cfg.layout,
            &mut cfg.init,
            &mut cfg.output,
            &mut cfg.report,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        cfg.keypoints.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

/// Fails with an input error naming the first path that does not exist.
pub fn require_existing<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult<()> {
    for p in paths {
        if !p.exists() {
            return Err(CliError::Input(holofit::Error::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            }));
        }
    }
    Ok(())
}
