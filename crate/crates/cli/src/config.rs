//! Run configuration: a TOML file, `--set key=value` overrides, and the
//! resolved snapshot written next to every run.

use std::path::{Path, PathBuf};

use distrl_core::envs::suite::{builtin, EnvParams, BUILTIN_NAMES};
use distrl_core::envs::{MdpSpec, PolicySpec};
use distrl_core::evaluation::EvalConfig;
use distrl_core::trainer::{GanConfig, TargetMode, TrainConfig};
use distrl_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Overrides the directory that relative output paths are resolved against.
pub const OUTPUT_ROOT_VAR: &str = "DISTRL_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    #[serde(default)]
    pub params: EnvParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Compute the exact return distribution of the target policy and report
    /// `w1_to_oracle` in the metric stream.
    pub enabled: bool,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory; every random stream derives from it.
    pub seed: Option<u64>,
    /// Relative paths resolve against `$DISTRL_OUTPUT_ROOT` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Environment steps between periodic checkpoints; 0 keeps only the final one.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
    pub env: EnvConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Required by (and only allowed with) `train.algorithm = "ign"`;
    /// defaults are filled in when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gan: Option<GanConfig>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_checkpoint_every() -> u64 {
    10_000
}

impl RunConfig {
    /// Read `path`, apply `overrides` (`dotted.key=value`, value in TOML
    /// syntax or a bare string), then deserialize and resolve defaults.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config is not valid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if cfg.train.algorithm.uses_gan() && cfg.gan.is_none() {
            cfg.gan = Some(GanConfig::default());
        }
        Ok(cfg)
    }

    /// Every problem with the configuration, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed.is_none() {
            v.push("seed is required".to_string());
        }
        match builtin(&self.env.name, &self.env.params) {
            Ok(spec) => {
                if let TargetMode::Evaluate { policy } = &self.train.target {
                    if let Err(e) = policy.resolve(&spec) {
                        v.push(format!("train.target.policy: {e}"));
                    }
                }
            }
            Err(e) if BUILTIN_NAMES.contains(&self.env.name.as_str()) => v.push(format!("env.params: {e}")),
            Err(_) => v.push(format!(
                "env.name `{}` is not one of {BUILTIN_NAMES:?}",
                self.env.name
            )),
        }
        v.extend(self.train.violations());
        match (&self.gan, self.train.algorithm.uses_gan()) {
            (Some(g), true) => v.extend(g.violations()),
            (Some(_), false) => v.push(format!(
                "a [gan] section is only used by algorithm `ign`, not `{}`",
                self.train.algorithm.name()
            )),
            (None, true) => v.push("algorithm `ign` needs a [gan] section".to_string()),
            (None, false) => {}
        }
        v.extend(self.eval.violations());
        if self.oracle.enabled && !(self.oracle.tolerance > 0.0) {
            v.push(format!("oracle.tolerance must be positive, got {}", self.oracle.tolerance));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} problem(s) in the configuration:\n  - {}",
                v.len(),
                v.join("\n  - ")
            )))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn spec(&self) -> Result<MdpSpec> {
        builtin(&self.env.name, &self.env.params)
    }

    pub fn gan_config(&self) -> GanConfig {
        self.gan.unwrap_or_default()
    }

    /// Policy whose return distribution the oracle describes: the evaluated
    /// policy, or the optimal one under control.
    pub fn oracle_policy(&self) -> PolicySpec {
        match &self.train.target {
            TargetMode::Evaluate { policy } => policy.clone(),
            TargetMode::Control => PolicySpec::Optimal,
        }
    }

    /// Output directory: `flag` over the file's `output_dir` over a name
    /// built from the run. Relative paths sit under `$DISTRL_OUTPUT_ROOT`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        let dir = match (flag, &self.output_dir) {
            (Some(f), _) => f.to_path_buf(),
            (None, Some(d)) => d.clone(),
            (None, None) => {
                PathBuf::from("runs").join(format!(
                    "{}-{}-seed{}",
                    self.env.name,
                    self.train.algorithm.name(),
                    self.seed.unwrap_or_default()
                ))
            }
        };
        resolve_output(&dir)
    }

    /// TOML text with every default materialized.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}

pub fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` has an empty segment")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
