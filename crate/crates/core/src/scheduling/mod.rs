//! The `has_next`/`next` scheduler contract and the NUMA-aware policies.
//!
//! Every policy reads the same [`SchedulerView`] and shares the EST/EFT
//! calculator below, so a decision's estimated finish time is exactly what
//! the engine will produce when it executes that decision.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::SchedulerKind;
use crate::platform::Platform;
use crate::runlog::RunLog;
use crate::workflow::{LevelOrder, WorkflowGraph};
use crate::{CoreId, NumaId, TaskId};

mod fifo;
mod heft;
mod minmin;
mod replay;

pub use fifo::{FifoParams, FifoScheduler};
pub use heft::{upward_ranks, HeftScheduler};
pub use minmin::MinMinScheduler;
pub use replay::ReplayScheduler;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("task {task} has an incomplete predecessor {pred}")]
    IncompletePredecessor { task: String, pred: String },
    #[error("data item {0} has no known locality")]
    MissingLocality(String),
    #[error("unknown scheduler parameter `{0}`")]
    UnknownParam(String),
    #[error("invalid scheduler parameter `{0}` (expected key=yes or key=no)")]
    InvalidParam(String),
    #[error("core {0} is not enabled")]
    DisabledCore(CoreId),
}

/// `(task, core, estimated finish time)`; `task == None` means nothing is
/// ready, `core == None` means no core is free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleDecision {
    pub task: Option<TaskId>,
    pub core: Option<CoreId>,
    pub estimated_finish_time: Option<f64>,
}

impl ScheduleDecision {
    pub fn assign(task: TaskId, core: CoreId, eft: f64) -> Self {
        Self {
            task: Some(task),
            core: Some(core),
            estimated_finish_time: Some(eft),
        }
    }

    pub fn no_task() -> Self {
        Self {
            task: None,
            core: None,
            estimated_finish_time: None,
        }
    }

    pub fn no_core(task: TaskId) -> Self {
        Self {
            task: Some(task),
            core: None,
            estimated_finish_time: None,
        }
    }

    pub fn pair(&self) -> Option<(TaskId, CoreId)> {
        Some((self.task?, self.core?))
    }
}

/// Read-only runtime state handed to a scheduler between engine steps.
#[derive(Debug, Clone, Copy)]
pub struct SchedulerView<'a> {
    pub graph: &'a WorkflowGraph,
    pub platform: &'a Platform,
    pub levels: &'a LevelOrder,
    pub avail: &'a BTreeMap<CoreId, f64>,
    /// Actual finish time, indexed by task.
    pub aft: &'a [Option<f64>],
    /// NUMA node holding each written, unconsumed item, indexed by item.
    pub locality: &'a [Option<NumaId>],
    /// Released, undispatched tasks in release order.
    pub ready: &'a [TaskId],
    pub now: f64,
}

/// The four terms of EFT for one `(task, core)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCosts {
    pub est: f64,
    pub read: f64,
    pub compute: f64,
    pub write: f64,
}

impl PhaseCosts {
    pub fn eft(&self) -> f64 {
        self.est + self.read + self.compute + self.write
    }
}

impl<'a> SchedulerView<'a> {
    pub fn avail(&self, core: CoreId) -> f64 {
        self.avail.get(&core).copied().unwrap_or(0.0)
    }

    pub fn is_free(&self, core: CoreId) -> bool {
        self.avail(core) <= self.now
    }

    pub fn is_ready(&self, task: TaskId) -> bool {
        self.ready.contains(&task)
    }

    pub fn est(&self, task: TaskId, core: CoreId) -> Result<f64, ScheduleError> {
        let mut est = self.avail(core);
        for pred in self.graph.predecessors(task) {
            let aft = self.aft[pred.0].ok_or_else(|| ScheduleError::IncompletePredecessor {
                task: self.graph.name(task).to_string(),
                pred: self.graph.name(pred).to_string(),
            })?;
            est = est.max(aft);
        }
        Ok(est)
    }

    /// Bytes of `task`'s inputs resident on each NUMA node.
    pub fn input_bytes_by_node(&self, task: TaskId) -> Result<Vec<f64>, ScheduleError> {
        let mut share = vec![0.0; self.platform.nodes()];
        for &item in self.graph.inputs(task) {
            let node = self.locality[item.0]
                .ok_or_else(|| ScheduleError::MissingLocality(self.graph.item_key(item)))?;
            share[node] += self.graph.item(item).bytes;
        }
        Ok(share)
    }

    pub fn phase_costs(&self, task: TaskId, core: CoreId) -> Result<PhaseCosts, ScheduleError> {
        if !self.platform.is_enabled(core) {
            return Err(ScheduleError::DisabledCore(core));
        }
        let est = self.est(task, core)?;
        let numa = self.platform.numa(core);
        let mut read = 0.0f64;
        for &item in self.graph.inputs(task) {
            let src = self.locality[item.0]
                .ok_or_else(|| ScheduleError::MissingLocality(self.graph.item_key(item)))?;
            read = read.max(
                self.platform
                    .comm_cost(self.graph.item(item).bytes, src, numa),
            );
        }
        let compute = self
            .platform
            .compute_cost(self.graph.task(task).flops, core);
        let write = self
            .graph
            .outputs(task)
            .iter()
            .map(|&item| {
                self.platform
                    .comm_cost(self.graph.item(item).bytes, numa, numa)
            })
            .fold(0.0f64, f64::max);
        Ok(PhaseCosts {
            est,
            read,
            compute,
            write,
        })
    }

    pub fn eft(&self, task: TaskId, core: CoreId) -> Result<f64, ScheduleError> {
        Ok(self.phase_costs(task, core)?.eft())
    }
}

pub trait Scheduler {
    fn name(&self) -> &'static str;

    /// Called with tasks whose predecessors have all completed: first the
    /// workflow sources, then one batch per completing task.
    fn release(&mut self, _batch: &[crate::TaskId], _view: &SchedulerView<'_>, _log: &mut RunLog) {}

    fn has_next(&self) -> bool;

    fn next(
        &mut self,
        view: &SchedulerView<'_>,
        log: &mut RunLog,
    ) -> Result<ScheduleDecision, ScheduleError>;
}

/// Instantiates the policy named by a run configuration.
pub fn build(
    kind: SchedulerKind,
    params: &[String],
    graph: &WorkflowGraph,
    platform: &Platform,
) -> Result<Box<dyn Scheduler>, ScheduleError> {
    Ok(match kind {
        SchedulerKind::Fifo => Box::new(FifoScheduler::new(graph, FifoParams::parse(params)?)),
        SchedulerKind::MinMin => Box::new(MinMinScheduler::new(graph)),
        SchedulerKind::Heft => Box::new(HeftScheduler::new(graph, platform)),
    })
}

#[cfg(test)]
pub(crate) mod testkit {
    use super::*;
    use crate::platform::{ClockFrequency, CoreTopology, DistanceMatrix, SquareMatrix};

    pub fn graph(tasks: &[(&str, f64)], edges: &[(&str, &str, f64)]) -> WorkflowGraph {
        WorkflowGraph::new(
            tasks
                .iter()
                .map(|(n, f)| crate::workflow::TaskSpec {
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

    pub fn platform(
        cores: &[CoreId],
        nodes: usize,
        bw: Vec<Vec<f64>>,
        hz: ClockFrequency,
    ) -> Platform {
        let n = bw.len();
        Platform::new(
            CoreTopology::new(cores.to_vec(), nodes, None, None).unwrap(),
            DistanceMatrix::new(SquareMatrix::filled(n, 0.0), SquareMatrix::new(bw).unwrap())
                .unwrap(),
            1e6,
            hz,
        )
        .unwrap()
    }

    /// Owned backing storage for a view.
    pub struct State {
        pub levels: LevelOrder,
        pub avail: BTreeMap<CoreId, f64>,
        pub aft: Vec<Option<f64>>,
        pub locality: Vec<Option<NumaId>>,
        pub ready: Vec<TaskId>,
        pub now: f64,
    }

    impl State {
        pub fn new(g: &WorkflowGraph, p: &Platform) -> Self {
            Self {
                levels: g.level_order(),
                avail: p.enabled_cores().iter().map(|c| (*c, 0.0)).collect(),
                aft: vec![None; g.len()],
                locality: vec![None; g.items().len()],
                ready: g.sources(),
                now: 0.0,
            }
        }

        pub fn view<'a>(&'a self, g: &'a WorkflowGraph, p: &'a Platform) -> SchedulerView<'a> {
            SchedulerView {
                graph: g,
                platform: p,
                levels: &self.levels,
                avail: &self.avail,
                aft: &self.aft,
                locality: &self.locality,
                ready: &self.ready,
                now: self.now,
            }
        }
    }
}
