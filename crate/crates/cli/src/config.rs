use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use mvtrack_core::eval::BenchConfig;
use mvtrack_core::simulator::{DatasetConfig, SceneConfig};
use mvtrack_core::tpn::TpnTrainConfig;
use mvtrack_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};

/// Bad flags or config values; reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub runs: usize,
    /// Survival horizon for robustness.
    pub s: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { runs: 1, s: 50 }
    }
}

/// Everything a command can take from a JSON manifest. Flags given on the
/// command line win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub scene: SceneConfig,
    pub dataset: DatasetConfig,
    pub train: TpnTrainConfig,
    pub tracker: TrackerConfig,
    pub bench: BenchConfig,
    pub eval: EvalOptions,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> anyhow::Result<u64> {
        flag.or(self.seed)
            .ok_or_else(|| usage("a seed is required: pass --seed or set \"seed\" in the config"))
    }

    pub fn out(&self, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
        flag.or_else(|| self.out.clone())
            .ok_or_else(|| usage("an output path is required: pass --out or set \"out\" in the config"))
    }
}

/// Creates the parent directory of an output file.
pub fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_manifest_keeps_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 4, "scene": {"n_frames": 12}}"#).unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.scene.n_frames, 12);
        assert_eq!(c.scene.n_views, SceneConfig::default().n_views);
        assert_eq!(c.seed(Some(9)).unwrap(), 9);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 1}"#).is_err());
        assert!(ExperimentConfig::default().seed(None).is_err());
    }
}
