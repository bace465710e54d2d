//! NUMA platform model: distance matrices, core topology and the cost
//! functions every scheduler and the engine share.
//!
//! All times are microseconds. Latencies are read in nanoseconds and
//! bandwidths in GB/s (1 GB = 1e9 bytes), so one GB/s moves 1000 bytes/µs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::{CoreId, NumaId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatformError {
    #[error("matrix: {0}")]
    Matrix(String),
    #[error("core mask `{mask}`: {reason}")]
    Mask { mask: String, reason: String },
    #[error("core {core} is outside the {total} configured cores")]
    CoreOutOfRange { core: CoreId, total: usize },
    #[error("{total} cores cannot be split evenly across {nodes} NUMA nodes")]
    UnevenSplit { total: usize, nodes: usize },
    #[error("core {core} maps to NUMA node {numa}, but the matrices describe {nodes} nodes")]
    NumaOutOfRange {
        core: CoreId,
        numa: NumaId,
        nodes: usize,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Row-major square matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PlatformError> {
        let n = rows.len();
        if n == 0 {
            return Err(PlatformError::Matrix(
                "matrix must have at least one row".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(PlatformError::Matrix(format!("matrix is not {n}x{n}")));
        }
        Ok(Self {
            n,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self {
            n,
            values: vec![value; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.n + col] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Largest `|a_ij - a_ji| / max(|a_ij|, |a_ji|)` over all pairs.
    pub fn max_relative_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Parses a matrix file: the node count `n` followed by `n*n`
/// whitespace-separated reals in row-major order.
pub fn parse_distance_matrix(text: &str) -> Result<SquareMatrix, PlatformError> {
    let mut tokens = text.split_whitespace();
    let head = tokens
        .next()
        .ok_or_else(|| PlatformError::Matrix("empty matrix file".into()))?;
    let n: usize = head.parse().map_err(|_| {
        PlatformError::Matrix(format!("node count `{head}` is not a positive integer"))
    })?;
    if n < 1 {
        return Err(PlatformError::Matrix(
            "node count must be at least 1".into(),
        ));
    }
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PlatformError::Matrix(format!("`{t}` is not a number")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != n * n {
        return Err(PlatformError::Matrix(format!(
            "expected {} values for a {n}x{n} matrix, found {}",
            n * n,
            values.len()
        )));
    }
    Ok(SquareMatrix { n, values })
}

/// Latency (ns) and bandwidth (GB/s) between NUMA nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    latency_ns: SquareMatrix,
    bandwidth_gbps: SquareMatrix,
}

impl DistanceMatrix {
    pub fn new(
        latency_ns: SquareMatrix,
        bandwidth_gbps: SquareMatrix,
    ) -> Result<Self, PlatformError> {
        if latency_ns.size() != bandwidth_gbps.size() {
            return Err(PlatformError::Matrix(format!(
                "latency matrix is {0}x{0} but bandwidth matrix is {1}x{1}",
                latency_ns.size(),
                bandwidth_gbps.size()
            )));
        }
        if latency_ns.values.iter().any(|v| *v < 0.0) {
            return Err(PlatformError::Matrix(
                "latencies must be non-negative".into(),
            ));
        }
        if bandwidth_gbps.values.iter().any(|v| *v <= 0.0) {
            return Err(PlatformError::Matrix("bandwidths must be positive".into()));
        }
        Ok(Self {
            latency_ns,
            bandwidth_gbps,
        })
    }

    /// Same latency and bandwidth between every pair of `n` nodes.
    pub fn uniform(n: usize, latency_ns: f64, bandwidth_gbps: f64) -> Result<Self, PlatformError> {
        Self::new(
            SquareMatrix::filled(n, latency_ns),
            SquareMatrix::filled(n, bandwidth_gbps),
        )
    }

    pub fn nodes(&self) -> usize {
        self.latency_ns.size()
    }

    pub fn latency_ns(&self) -> &SquareMatrix {
        &self.latency_ns
    }

    pub fn bandwidth_gbps(&self) -> &SquareMatrix {
        &self.bandwidth_gbps
    }

    /// Time to move `bytes` between memory on node `src` and a core on
    /// node `dst`: `L[src][dst] + bytes / B[src][dst]`.
    pub fn comm_cost(&self, bytes: f64, src: NumaId, dst: NumaId) -> f64 {
        self.latency_ns.get(src, dst) / 1000.0
            + bytes / (self.bandwidth_gbps.get(src, dst) * 1000.0)
    }

    /// Communication cost under the mean latency and mean bandwidth of the
    /// matrices (diagonal included).
    pub fn mean_comm_cost(&self, bytes: f64) -> f64 {
        self.latency_ns.mean() / 1000.0 + bytes / (self.bandwidth_gbps.mean() * 1000.0)
    }

    pub fn max_relative_asymmetry(&self) -> f64 {
        self.latency_ns
            .max_relative_asymmetry()
            .max(self.bandwidth_gbps.max_relative_asymmetry())
    }
}

/// Decodes a `0x`-prefixed hex mask; bit `i` enables core `i`.
pub fn parse_core_mask(mask: &str) -> Result<Vec<CoreId>, PlatformError> {
    let err = |reason: &str| PlatformError::Mask {
        mask: mask.to_string(),
        reason: reason.to_string(),
    };
    let digits = mask
        .strip_prefix("0x")
        .or_else(|| mask.strip_prefix("0X"))
        .ok_or_else(|| err("missing 0x prefix"))?;
    if digits.is_empty() {
        return Err(err("no hex digits"));
    }
    let mut cores = Vec::new();
    for (pos, c) in digits.chars().rev().enumerate() {
        let nibble = c.to_digit(16).ok_or_else(|| err("non-hex character"))?;
        for bit in 0..4 {
            if nibble & (1 << bit) != 0 {
                cores.push(pos * 4 + bit);
            }
        }
    }
    if cores.is_empty() {
        return Err(err("mask enables no cores"));
    }
    cores.sort_unstable();
    Ok(cores)
}

/// Inverse of [`parse_core_mask`].
pub fn format_core_mask(cores: &[CoreId]) -> String {
    let Some(&highest) = cores.iter().max() else {
        return "0x0".into();
    };
    let mut nibbles = vec![0u32; highest / 4 + 1];
    for &c in cores {
        nibbles[c / 4] |= 1 << (c % 4);
    }
    let digits: String = nibbles
        .iter()
        .rev()
        .map(|n| char::from_digit(*n, 16).unwrap())
        .collect();
    format!("0x{digits}")
}

/// Enabled cores and their NUMA placement. Nodes hold contiguous blocks of
/// `cores_per_numa` core ids.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreTopology {
    total_cores: usize,
    cores_per_numa: usize,
    nodes: usize,
    enabled: Vec<CoreId>,
}

impl CoreTopology {
    /// `total_cores` defaults to the highest enabled id plus one, rounded
    /// up to a multiple of `nodes`.
    pub fn new(
        enabled: Vec<CoreId>,
        nodes: usize,
        total_cores: Option<usize>,
        cores_per_numa: Option<usize>,
    ) -> Result<Self, PlatformError> {
        if nodes == 0 {
            return Err(PlatformError::Invalid(
                "at least one NUMA node is required".into(),
            ));
        }
        let mut enabled = enabled;
        enabled.sort_unstable();
        enabled.dedup();
        let highest = *enabled
            .last()
            .ok_or_else(|| PlatformError::Invalid("no enabled cores".into()))?;
        let total = match (total_cores, cores_per_numa) {
            (Some(t), _) => t,
            (None, Some(per)) => per * nodes,
            (None, None) => (highest + 1).div_ceil(nodes) * nodes,
        };
        let per = match cores_per_numa {
            Some(0) => {
                return Err(PlatformError::Invalid(
                    "cores_per_numa must be positive".into(),
                ))
            }
            Some(per) => per,
            None => {
                if total % nodes != 0 {
                    return Err(PlatformError::UnevenSplit { total, nodes });
                }
                total / nodes
            }
        };
        let topo = Self {
            total_cores: total,
            cores_per_numa: per,
            nodes,
            enabled,
        };
        for &core in &topo.enabled {
            topo.numa_of(core)?;
        }
        Ok(topo)
    }

    pub fn total_cores(&self) -> usize {
        self.total_cores
    }

    pub fn cores_per_numa(&self) -> usize {
        self.cores_per_numa
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn enabled(&self) -> &[CoreId] {
        &self.enabled
    }

    pub fn numa_of(&self, core: CoreId) -> Result<NumaId, PlatformError> {
        if core >= self.total_cores {
            return Err(PlatformError::CoreOutOfRange {
                core,
                total: self.total_cores,
            });
        }
        let numa = core / self.cores_per_numa;
        if numa >= self.nodes {
            return Err(PlatformError::NumaOutOfRange {
                core,
                numa,
                nodes: self.nodes,
            });
        }
        Ok(numa)
    }

    /// Enabled cores on `numa`, ascending.
    pub fn cores_on(&self, numa: NumaId) -> Vec<CoreId> {
        self.enabled
            .iter()
            .copied()
            .filter(|c| self.numa_of(*c) == Ok(numa))
            .collect()
    }
}

/// Clock frequency as given by the run configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ClockFrequency {
    Static(f64),
    /// One entry per enabled core (mask order) or per core id.
    PerCore(Vec<f64>),
}

/// Everything the cost model needs: topology, distances, FLOPs/cycle and
/// a resolved frequency per enabled core.
#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    topology: CoreTopology,
    distances: DistanceMatrix,
    flops_per_cycle: f64,
    clock: ClockFrequency,
    core_numa: BTreeMap<CoreId, NumaId>,
    core_hz: BTreeMap<CoreId, f64>,
}

impl Platform {
    pub fn new(
        topology: CoreTopology,
        distances: DistanceMatrix,
        flops_per_cycle: f64,
        clock: ClockFrequency,
    ) -> Result<Self, PlatformError> {
        if topology.nodes() != distances.nodes() {
            return Err(PlatformError::Invalid(format!(
                "topology has {} NUMA nodes but the matrices describe {}",
                topology.nodes(),
                distances.nodes()
            )));
        }
        if !(flops_per_cycle.is_finite() && flops_per_cycle > 0.0) {
            return Err(PlatformError::Invalid(
                "flops_per_cycle must be positive".into(),
            ));
        }
        let enabled = topology.enabled();
        let core_hz: BTreeMap<CoreId, f64> = match &clock {
            ClockFrequency::Static(hz) => enabled.iter().map(|c| (*c, *hz)).collect(),
            ClockFrequency::PerCore(list) if list.len() == enabled.len() => {
                enabled.iter().copied().zip(list.iter().copied()).collect()
            }
            ClockFrequency::PerCore(list) if list.len() >= topology.total_cores() => {
                enabled.iter().map(|c| (*c, list[*c])).collect()
            }
            ClockFrequency::PerCore(list) => {
                return Err(PlatformError::Invalid(format!(
                    "{} per-core frequencies given for {} enabled cores ({} total)",
                    list.len(),
                    enabled.len(),
                    topology.total_cores()
                )))
            }
        };
        if core_hz.values().any(|hz| !(hz.is_finite() && *hz > 0.0)) {
            return Err(PlatformError::Invalid(
                "clock frequencies must be positive".into(),
            ));
        }
        let core_numa = enabled
            .iter()
            .map(|c| Ok((*c, topology.numa_of(*c)?)))
            .collect::<Result<_, PlatformError>>()?;
        Ok(Self {
            topology,
            distances,
            flops_per_cycle,
            clock,
            core_numa,
            core_hz,
        })
    }

    /// Single-node platform with one latency and one bandwidth value.
    pub fn uniform(
        cores: &[CoreId],
        flops_per_cycle: f64,
        hz: f64,
        latency_ns: f64,
        bandwidth_gbps: f64,
    ) -> Result<Self, PlatformError> {
        Self::new(
            CoreTopology::new(cores.to_vec(), 1, None, None)?,
            DistanceMatrix::uniform(1, latency_ns, bandwidth_gbps)?,
            flops_per_cycle,
            ClockFrequency::Static(hz),
        )
    }

    pub fn topology(&self) -> &CoreTopology {
        &self.topology
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn flops_per_cycle(&self) -> f64 {
        self.flops_per_cycle
    }

    pub fn clock(&self) -> &ClockFrequency {
        &self.clock
    }

    pub fn enabled_cores(&self) -> &[CoreId] {
        self.topology.enabled()
    }

    pub fn nodes(&self) -> usize {
        self.distances.nodes()
    }

    /// NUMA node of an enabled core. Panics on cores outside the mask.
    pub fn numa(&self, core: CoreId) -> NumaId {
        self.core_numa[&core]
    }

    pub fn is_enabled(&self, core: CoreId) -> bool {
        self.core_numa.contains_key(&core)
    }

    pub fn frequency_hz(&self, core: CoreId) -> f64 {
        self.core_hz[&core]
    }

    /// `flops / (flops_per_cycle * hz)` seconds, in microseconds.
    pub fn compute_cost(&self, flops: f64, core: CoreId) -> f64 {
        flops * 1e6 / (self.flops_per_cycle * self.frequency_hz(core))
    }

    /// Mean compute cost over all enabled cores.
    pub fn mean_compute_cost(&self, flops: f64) -> f64 {
        let cores = self.enabled_cores();
        cores
            .iter()
            .map(|c| self.compute_cost(flops, *c))
            .sum::<f64>()
            / cores.len() as f64
    }

    pub fn comm_cost(&self, bytes: f64, src: NumaId, dst: NumaId) -> f64 {
        self.distances.comm_cost(bytes, src, dst)
    }

    pub fn mean_comm_cost(&self, bytes: f64) -> f64 {
        self.distances.mean_comm_cost(bytes)
    }
}
