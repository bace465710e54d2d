#![allow(dead_code)]

use std::path::PathBuf;

use numasched::platform::{ClockFrequency, CoreTopology, DistanceMatrix, Platform, SquareMatrix};
use numasched::workflow::TaskSpec;
use numasched::WorkflowGraph;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn graph(tasks: &[(&str, f64)], edges: &[(&str, &str, f64)]) -> WorkflowGraph {
    WorkflowGraph::new(
        tasks
            .iter()
            .map(|(n, f)| TaskSpec {
                name: n.to_string(),
                flops: *f,
            })
            .collect(),
        edges
            .iter()
            .map(|(a, b, s)| (a.to_string(), b.to_string(), *s))
            .collect(),
    )
    .unwrap()
}

/// A small random workflow plus the raw numbers of its platform. Core `c`
/// sits on node `c / cores_per_node`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub flops: Vec<f64>,
    /// (producer, consumer, bytes) with producer < consumer.
    pub edges: Vec<(usize, usize, f64)>,
    pub nodes: usize,
    pub cores_per_node: usize,
    pub fpc: f64,
    pub hz: Vec<f64>,
    pub lat: Vec<Vec<f64>>,
    pub bw: Vec<Vec<f64>>,
}

impl Instance {
    pub fn random(
        rng: &mut impl Rng,
        max_tasks: usize,
        nodes: usize,
        cores_per_node: usize,
    ) -> Self {
        let n = rng.gen_range(1..=max_tasks);
        let flops = (0..n).map(|_| rng.gen_range(1..=60) as f64).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.4) {
                    edges.push((a, b, rng.gen_range(1..=40) as f64));
                }
            }
        }
        let cores = nodes * cores_per_node;
        let hz = (0..cores)
            .map(|_| [1.0, 2.0, 4.0][rng.gen_range(0..3)])
            .collect();
        let lat = (0..nodes)
            .map(|_| {
                (0..nodes)
                    .map(|_| rng.gen_range(0..=3) as f64 * 1000.0)
                    .collect()
            })
            .collect();
        let bw = (0..nodes)
            .map(|i| {
                (0..nodes)
                    .map(|j| {
                        if i == j {
                            0.004
                        } else {
                            [0.001, 0.002, 0.004][rng.gen_range(0..3)]
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            flops,
            edges,
            nodes,
            cores_per_node,
            fpc: 1e6,
            hz,
            lat,
            bw,
        }
    }

    pub fn name(i: usize) -> String {
        format!("T{i}")
    }

    pub fn cores(&self) -> Vec<usize> {
        (0..self.nodes * self.cores_per_node).collect()
    }

    pub fn node_of(&self, core: usize) -> usize {
        core / self.cores_per_node
    }

    pub fn graph(&self) -> WorkflowGraph {
        WorkflowGraph::new(
            self.flops
                .iter()
                .enumerate()
                .map(|(i, f)| TaskSpec {
                    name: Self::name(i),
                    flops: *f,
                })
                .collect(),
            self.edges
                .iter()
                .map(|(a, b, s)| (Self::name(*a), Self::name(*b), *s))
                .collect(),
        )
        .unwrap()
    }

    pub fn platform(&self) -> Platform {
        Platform::new(
            CoreTopology::new(self.cores(), self.nodes, None, Some(self.cores_per_node)).unwrap(),
            DistanceMatrix::new(
                SquareMatrix::new(self.lat.clone()).unwrap(),
                SquareMatrix::new(self.bw.clone()).unwrap(),
            )
            .unwrap(),
            self.fpc,
            ClockFrequency::PerCore(self.hz.clone()),
        )
        .unwrap()
    }

    pub fn compute(&self, task: usize, core: usize) -> f64 {
        self.flops[task] / (self.fpc * self.hz[core]) * 1e6
    }

    pub fn comm(&self, bytes: f64, from: usize, to: usize) -> f64 {
        self.lat[from][to] * 1e-3 + bytes / self.bw[from][to] * 1e-3
    }

    fn mean(m: &[Vec<f64>]) -> f64 {
        let cells: Vec<f64> = m.iter().flatten().copied().collect();
        cells.iter().sum::<f64>() / cells.len() as f64
    }

    pub fn mean_compute(&self, task: usize) -> f64 {
        let cores = self.cores();
        cores.iter().map(|c| self.compute(task, *c)).sum::<f64>() / cores.len() as f64
    }

    pub fn mean_comm(&self, bytes: f64) -> f64 {
        Self::mean(&self.lat) * 1e-3 + bytes / Self::mean(&self.bw) * 1e-3
    }

    /// Longest weighted path from `task` to any sink, by enumerating every
    /// path explicitly.
    pub fn longest_path_from(&self, task: usize) -> f64 {
        let own = self.mean_compute(task);
        let tails = self
            .edges
            .iter()
            .filter(|(a, _, _)| *a == task)
            .map(|(_, b, s)| self.mean_comm(*s) + self.longest_path_from(*b));
        own + tails.fold(0.0, f64::max)
    }
}
