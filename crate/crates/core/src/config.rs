//! Run configuration (the JSON file that names the workflow, scheduler,
//! core mask, clock and distance matrices).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::platform::{self, ClockFrequency, PlatformError};
use crate::scheduling::FifoParams;
use crate::CoreId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown scheduler `{0}` (expected fifo, heft or min-min)")]
    UnknownScheduler(String),
    #[error("unknown mapper `{0}` (expected simulation or bare-metal)")]
    UnknownMapper(String),
    #[error("unknown clock frequency type `{0}` (expected static, per-core or dynamic)")]
    UnknownClockType(String),
    #[error("dynamic clock frequency is not supported by the simulation mapper")]
    DynamicInSimulation,
    #[error("memory policy `{0}` is not supported in simulation (use first-touch or default)")]
    UnsupportedPolicy(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    Fifo,
    Heft,
    MinMin,
}

impl SchedulerKind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "fifo" => Ok(Self::Fifo),
            "heft" => Ok(Self::Heft),
            "min-min" | "min_min" | "minmin" => Ok(Self::MinMin),
            other => Err(ConfigError::UnknownScheduler(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fifo => "fifo",
            Self::Heft => "heft",
            Self::MinMin => "min-min",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapperKind {
    Simulation,
    BareMetal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockType {
    Static,
    PerCore,
    Dynamic,
}

impl ClockType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::PerCore => "per-core",
            Self::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
enum FrequencyValue {
    Single(f64),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrices {
    latency_ns: String,
    bandwidth_gbps: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dag_file: String,
    scheduler_type: String,
    #[serde(default)]
    scheduler_params: Vec<String>,
    mapper_type: String,
    #[serde(default = "default_policy")]
    mapper_mem_policy_type: String,
    #[serde(default)]
    mapper_mem_bind_numa_node_ids: Vec<usize>,
    core_avail_mask: String,
    flops_per_cycle: f64,
    clock_frequency_type: String,
    #[serde(default)]
    clock_frequency_hz: Option<FrequencyValue>,
    distance_matrices: RawMatrices,
    out_file_name: String,
    #[serde(default)]
    cores_per_numa: Option<usize>,
    #[serde(default)]
    total_cores: Option<usize>,
}

fn default_policy() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
    pub dag_file: PathBuf,
    pub scheduler: SchedulerKind,
    pub scheduler_params: Vec<String>,
    pub mapper: MapperKind,
    pub mem_policy: String,
    pub mem_bind_numa_node_ids: Vec<usize>,
    pub core_avail_mask: String,
    pub enabled_cores: Vec<CoreId>,
    pub flops_per_cycle: f64,
    pub clock_type: ClockType,
    /// `None` only for the dynamic clock type.
    pub clock: Option<ClockFrequency>,
    pub latency_file: PathBuf,
    pub bandwidth_file: PathBuf,
    pub out_file: PathBuf,
    pub cores_per_numa: Option<usize>,
    pub total_cores: Option<usize>,
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses a configuration. Relative paths are resolved against the first
/// directory in `bases` under which `dag_file` exists; every path of the
/// file shares that base.
pub fn parse_run_config(text: &str, bases: &[PathBuf]) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;

    let scheduler = SchedulerKind::parse(&raw.scheduler_type)?;
    let mapper = match raw.mapper_type.as_str() {
        "simulation" => MapperKind::Simulation,
        "bare-metal" | "bare_metal" => MapperKind::BareMetal,
        other => return Err(ConfigError::UnknownMapper(other.to_string())),
    };
    FifoParams::parse(&raw.scheduler_params).map_err(|e| ConfigError::Invalid(e.to_string()))?;

    if mapper == MapperKind::Simulation
        && !matches!(
            raw.mapper_mem_policy_type.as_str(),
            "first-touch" | "default"
        )
    {
        return Err(ConfigError::UnsupportedPolicy(raw.mapper_mem_policy_type));
    }

    let enabled_cores = platform::parse_core_mask(&raw.core_avail_mask)?;
    if !(raw.flops_per_cycle.is_finite() && raw.flops_per_cycle > 0.0) {
        return Err(ConfigError::Invalid(
            "flops_per_cycle must be positive".into(),
        ));
    }

    let clock_type = match raw.clock_frequency_type.as_str() {
        "static" => ClockType::Static,
        "per-core" | "per_core" => ClockType::PerCore,
        "dynamic" => ClockType::Dynamic,
        other => return Err(ConfigError::UnknownClockType(other.to_string())),
    };
    let clock = match (clock_type, raw.clock_frequency_hz) {
        (ClockType::Dynamic, _) if mapper == MapperKind::Simulation => {
            return Err(ConfigError::DynamicInSimulation)
        }
        (ClockType::Dynamic, _) => None,
        (ClockType::Static, Some(FrequencyValue::Single(hz))) => {
            if !(hz.is_finite() && hz > 0.0) {
                return Err(ConfigError::Invalid(
                    "static clock frequency must be positive".into(),
                ));
            }
            Some(ClockFrequency::Static(hz))
        }
        (ClockType::PerCore, Some(FrequencyValue::List(list))) => {
            if list.is_empty() || list.iter().any(|hz| !(hz.is_finite() && *hz > 0.0)) {
                return Err(ConfigError::Invalid(
                    "per-core clock frequencies must be positive".into(),
                ));
            }
            Some(ClockFrequency::PerCore(list))
        }
        (ClockType::PerCore, Some(FrequencyValue::Single(hz))) => {
            return Err(ConfigError::Invalid(format!(
                "per-core clock type needs a list of frequencies, got {hz}"
            )))
        }
        (ClockType::Static, Some(FrequencyValue::List(_))) => {
            return Err(ConfigError::Invalid(
                "static clock type needs a single frequency".into(),
            ))
        }
        (_, None) => return Err(ConfigError::Invalid("clock_frequency_hz is missing".into())),
    };

    let base_dir = bases
        .iter()
        .find(|b| resolve(b, &raw.dag_file).is_file())
        .cloned()
        .ok_or_else(|| ConfigError::MissingFile(PathBuf::from(&raw.dag_file)))?;
    let latency_file = resolve(&base_dir, &raw.distance_matrices.latency_ns);
    let bandwidth_file = resolve(&base_dir, &raw.distance_matrices.bandwidth_gbps);
    for path in [&latency_file, &bandwidth_file] {
        if !path.is_file() {
            return Err(ConfigError::MissingFile(path.clone()));
        }
    }

    Ok(RunConfig {
        dag_file: resolve(&base_dir, &raw.dag_file),
        latency_file,
        bandwidth_file,
        out_file: resolve(&base_dir, &raw.out_file_name),
        base_dir,
        scheduler,
        scheduler_params: raw.scheduler_params,
        mapper,
        mem_policy: raw.mapper_mem_policy_type,
        mem_bind_numa_node_ids: raw.mapper_mem_bind_numa_node_ids,
        core_avail_mask: raw.core_avail_mask,
        enabled_cores,
        flops_per_cycle: raw.flops_per_cycle,
        clock_type,
        clock,
        cores_per_numa: raw.cores_per_numa,
        total_cores: raw.total_cores,
    })
}

impl RunConfig {
    /// Reads a configuration file, resolving paths against its directory
    /// first and the working directory second.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut bases = vec![path.parent().map(Path::to_path_buf).unwrap_or_default()];
        if let Ok(cwd) = std::env::current_dir() {
            bases.push(cwd);
        }
        Self::from_file_with_bases(path, &bases)
    }

    pub fn from_file_with_bases(path: &Path, bases: &[PathBuf]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_run_config(&text, bases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_NODE_CONFIG: &str = r#"{
    "dag_file": "./tests/workflows/test_fifo_simulation/config_4.dot",

    "scheduler_type": "fifo",
    "scheduler_params": [
        "fifo_prioritize_by_core_id=yes",
        "fifo_prioritize_by_exec_order=yes"
    ],

    "mapper_type": "simulation",
    "mapper_mem_policy_type": "default",
    "mapper_mem_bind_numa_node_ids": [],

    "core_avail_mask": "0x1000001",
    "flops_per_cycle": 1000000,
    "clock_frequency_type": "static",
    "clock_frequency_hz": 1,

    "distance_matrices": {
        "latency_ns": "./tests/system/test_fifo_simulation/4_lat.txt",
        "bandwidth_gbps": "./tests/system/test_fifo_simulation/4_bw.txt"
    },

    "out_file_name": "./tests/output/test_fifo_simulation/config_4.yaml"
}"#;

    const BARE_METAL_CONFIG: &str = r#"{
    "dag_file": "./example/sample.dot",

    "scheduler_type": "fifo",
    "scheduler_params": [
        "fifo_prioritize_by_core_id=yes",
        "fifo_prioritize_by_exec_order=yes"
    ],

    "mapper_type": "bare-metal",
    "mapper_mem_policy_type": "first-touch",
    "mapper_mem_bind_numa_node_ids": [],

    "core_avail_mask": "0x100100",
    "flops_per_cycle": 32,
    "clock_frequency_type": "static",
    "clock_frequency_hz": 1000000000,

    "distance_matrices": {
        "latency_ns": "./example/non_uniform_lat.txt",
        "bandwidth_gbps": "./example/non_uniform_bw.txt"
    },

    "out_file_name": "./example/sample.yaml"
}"#;

    fn fixture_dir(files: &[&str]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for f in files {
            let p = dir.path().join(f);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, "").unwrap();
        }
        dir
    }

    #[test]
    fn parses_simulation_config() {
        let dir = fixture_dir(&[
            "tests/workflows/test_fifo_simulation/config_4.dot",
            "tests/system/test_fifo_simulation/4_lat.txt",
            "tests/system/test_fifo_simulation/4_bw.txt",
        ]);
        let cfg = parse_run_config(TWO_NODE_CONFIG, &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(cfg.scheduler, SchedulerKind::Fifo);
        assert_eq!(cfg.mapper, MapperKind::Simulation);
        assert_eq!(cfg.core_avail_mask, "0x1000001");
        assert_eq!(cfg.enabled_cores, vec![0, 24]);
        assert_eq!(cfg.flops_per_cycle, 1e6);
        assert_eq!(cfg.clock, Some(ClockFrequency::Static(1.0)));
        assert!(cfg
            .out_file
            .ends_with("tests/output/test_fifo_simulation/config_4.yaml"));
        assert_eq!(cfg.base_dir, dir.path());
    }

    #[test]
    fn parses_bare_metal_config() {
        let dir = fixture_dir(&[
            "example/sample.dot",
            "example/non_uniform_lat.txt",
            "example/non_uniform_bw.txt",
        ]);
        let cfg = parse_run_config(BARE_METAL_CONFIG, &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(cfg.mapper, MapperKind::BareMetal);
        assert_eq!(cfg.mem_policy, "first-touch");
        assert_eq!(cfg.clock, Some(ClockFrequency::Static(1e9)));
        assert_eq!(cfg.enabled_cores, vec![8, 20]);
    }

    #[test]
    fn falls_back_to_later_base() {
        let dir = fixture_dir(&[
            "tests/workflows/test_fifo_simulation/config_4.dot",
            "tests/system/test_fifo_simulation/4_lat.txt",
            "tests/system/test_fifo_simulation/4_bw.txt",
        ]);
        let nowhere = dir.path().join("config");
        let cfg = parse_run_config(TWO_NODE_CONFIG, &[nowhere, dir.path().to_path_buf()]).unwrap();
        assert_eq!(cfg.base_dir, dir.path());
    }

    #[test]
    fn rejects_bad_values() {
        let dir = fixture_dir(&[
            "tests/workflows/test_fifo_simulation/config_4.dot",
            "tests/system/test_fifo_simulation/4_lat.txt",
            "tests/system/test_fifo_simulation/4_bw.txt",
        ]);
        let bases = [dir.path().to_path_buf()];
        let with =
            |from: &str, to: &str| parse_run_config(&TWO_NODE_CONFIG.replace(from, to), &bases);

        assert!(matches!(
            with("\"fifo\"", "\"rr\""),
            Err(ConfigError::UnknownScheduler(s)) if s == "rr"
        ));
        assert!(matches!(
            with("\"simulation\"", "\"emulation\""),
            Err(ConfigError::UnknownMapper(_))
        ));
        assert!(matches!(
            with("\"static\"", "\"dynamic\""),
            Err(ConfigError::DynamicInSimulation)
        ));
        assert!(matches!(
            with("0x1000001", "0xQ"),
            Err(ConfigError::Platform(_))
        ));
        assert!(matches!(
            with("\"default\"", "\"interleave\""),
            Err(ConfigError::UnsupportedPolicy(_))
        ));
        assert!(matches!(
            with("config_4.dot", "config_9.dot"),
            Err(ConfigError::MissingFile(_))
        ));
        assert!(matches!(
            with("4_bw.txt", "9_bw.txt"),
            Err(ConfigError::MissingFile(_))
        ));
        assert!(matches!(
            with("\"out_file_name\"", "\"colour\": 1, \"out_file_name\""),
            Err(ConfigError::Json(_))
        ));
        assert!(with("fifo_prioritize_by_core_id=yes", "fifo_speed=fast").is_err());
        assert!(matches!(
            with("\"clock_frequency_hz\": 1", "\"clock_frequency_hz\": 0"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn per_core_frequency_list() {
        let dir = fixture_dir(&[
            "tests/workflows/test_fifo_simulation/config_4.dot",
            "tests/system/test_fifo_simulation/4_lat.txt",
            "tests/system/test_fifo_simulation/4_bw.txt",
        ]);
        let text = TWO_NODE_CONFIG
            .replace("\"static\"", "\"per-core\"")
            .replace(
                "\"clock_frequency_hz\": 1",
                "\"clock_frequency_hz\": [1, 2]",
            );
        let cfg = parse_run_config(&text, &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(cfg.clock, Some(ClockFrequency::PerCore(vec![1.0, 2.0])));
    }
}
