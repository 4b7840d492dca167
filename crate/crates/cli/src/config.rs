//! TOML run configuration. See `docs/config.md` for the schema.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trace_bounds::geometry::{DomainSpec, Shape};
use trace_bounds::matnorm::NormKind;

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Sobolev,
    Battery,
    Ld,
    MatnormVerify,
    OptimalBcSweep,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Sobolev => "sobolev",
            Task::Battery => "battery",
            Task::Ld => "ld",
            Task::MatnormVerify => "matnorm-verify",
            Task::OptimalBcSweep => "optimal-bc-sweep",
        })
    }
}

fn default_norm() -> NormKind {
    NormKind::Vec2
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output() -> PathBuf {
    PathBuf::from("trace-bounds-out")
}

fn default_samples() -> usize {
    10_000
}

fn default_steps() -> usize {
    91
}

fn default_resolution() -> usize {
    41
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Shape<f64>,
    /// Grid spacings, strictly descending.
    pub h: Vec<f64>,
    pub tasks: Vec<Task>,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_cap: Option<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_steps")]
    pub sweep_steps: usize,
    #[serde(default = "default_resolution")]
    pub sweep_resolution: usize,
    /// Write node CSVs and binary grid dumps of the computed fields.
    #[serde(default = "default_true")]
    pub dump_fields: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.tasks.sort();
        cfg.tasks.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn spec(&self, h: f64) -> DomainSpec<f64> {
        let mut s = DomainSpec::new(self.domain.clone(), h);
        s.node_cap = self.node_cap;
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.tasks.is_empty() {
            return err("at least one task is required".into());
        }
        if self.h.is_empty() {
            return err("at least one grid spacing h is required".into());
        }
        if self.h.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return err("grid spacings must be positive".into());
        }
        if self.h.windows(2).any(|w| w[1] >= w[0]) {
            return err("grid spacings must be strictly descending".into());
        }
        self.spec(self.h[0])
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        let needs_norm = self.has(Task::Ld) || self.has(Task::OptimalBcSweep);
        if needs_norm {
            let ok = match self.norm {
                NormKind::Vec2 | NormKind::VecInf => true,
                NormKind::Op2 => !self.has(Task::Ld),
                _ => false,
            };
            if !ok {
                return err(format!("norm {} is not supported for the selected tasks", self.norm));
            }
        }
        if self.has(Task::MatnormVerify) && self.samples == 0 {
            return err("samples must be at least 1".into());
        }
        if self.has(Task::OptimalBcSweep) && (self.sweep_steps < 2 || self.sweep_resolution < 3) {
            return err("sweep_steps must be at least 2 and sweep_resolution at least 3".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"
        tasks = ["sobolev", "battery"]
        h = [0.04, 0.02]
        [domain]
        kind = "disk"
        radius = 1.0
    "#;

    #[test]
    fn minimal_disk_config() {
        let c = RunConfig::from_toml(DISK).unwrap();
        assert_eq!(c.tasks, vec![Task::Sobolev, Task::Battery]);
        assert_eq!(c.domain, Shape::Disk { radius: 1.0 });
        assert_eq!(c.norm, NormKind::Vec2);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.h.last(), Some(&0.02));
        assert!(c.dump_fields);
    }

    #[test]
    fn levelset_config() {
        let c = RunConfig::from_toml(
            r#"
            tasks = ["ld", "matnorm-verify"]
            h = [0.1]
            norm = "vecInf"
            seed = 5
            [domain]
            kind = "levelset"
            expression = "x^2 + y^2 + z^2 - 1"
            dim = 3
            lower = [-1.2, -1.2, -1.2]
            upper = [1.2, 1.2, 1.2]
            "#,
        )
        .unwrap();
        assert_eq!(c.domain.dim(), 3);
        assert_eq!(c.norm, NormKind::VecInf);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "tasks = []\nh = [0.1]\n[domain]\nkind = \"disk\"\nradius = 1.0",
            "tasks = [\"sobolev\"]\nh = [0.02, 0.04]\n[domain]\nkind = \"disk\"\nradius = 1.0",
            "tasks = [\"sobolev\"]\nh = []\n[domain]\nkind = \"disk\"\nradius = 1.0",
            "tasks = [\"ld\"]\nh = [0.1]\nnorm = \"op1\"\n[domain]\nkind = \"ball\"\nradius = 1.0",
            "tasks = [\"sobolev\"]\nh = [0.1]\n[domain]\nkind = \"disk\"\nradius = -1.0",
            "tasks = [\"sobolev\"]\nh = [0.1]\ncolour = 3\n[domain]\nkind = \"disk\"\nradius = 1.0",
            "tasks = [\"jump\"]\nh = [0.1]\n[domain]\nkind = \"disk\"\nradius = 1.0",
            "tasks = [\"sobolev\"]\nh = [0.1]\n[domain]\nkind = \"blob\"",
            "not toml at all [",
        ] {
            assert!(RunConfig::from_toml(bad).is_err(), "{bad}");
        }
    }
}
