//! Virtual-clock execution of a scheduler's decisions.
//!
//! Each dispatched task reads all inputs concurrently from its start time,
//! computes once the slowest read is done, then writes all outputs
//! concurrently. Written items live on the writer's NUMA node (first
//! touch) until their consumer reads them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::{ConfigError, MapperKind, RunConfig};
use crate::dot::{self, DotError};
use crate::platform::{self, CoreTopology, DistanceMatrix, Platform, PlatformError};
use crate::runlog::RunLog;
use crate::scheduling::{self, ScheduleDecision, ScheduleError, Scheduler, SchedulerView};
use crate::trace::{RunArtifact, UserEcho};
use crate::workflow::{ItemId, LevelOrder, WorkflowCounts, WorkflowGraph};
use crate::{CoreId, NumaId, TaskId};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Workflow { path: PathBuf, source: DotError },
    #[error("{path}: {source}")]
    Matrix {
        path: PathBuf,
        source: PlatformError,
    },
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scheduler error: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("bare-metal mapper not supported; simulation only")]
    BareMetal,
    #[error("deadlock: no ready task and nothing running; remaining tasks: {}", .0.join(", "))]
    Deadlock(Vec<String>),
    #[error("scheduler returned an invalid decision: {0}")]
    InvalidDecision(String),
    #[error("incomplete execution: {0}")]
    Incomplete(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// One read or write of a data item.
#[derive(Debug, Clone, PartialEq)]
pub struct CommRecord {
    pub item: ItemId,
    pub key: String,
    pub interval: Interval,
    pub payload: f64,
    pub numa: NumaId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task: TaskId,
    pub name: String,
    pub core: CoreId,
    pub numa: NumaId,
    pub flops: f64,
    pub total: Interval,
    pub compute: Interval,
    pub reads: Vec<CommRecord>,
    pub writes: Vec<CommRecord>,
    pub estimated_finish_time: f64,
    pub voluntary_cs: u64,
    pub involuntary_cs: u64,
    pub core_migrations: u64,
}

/// Counters reported in the trace's `runtime` section.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuntimeSummary {
    pub threads_checksum: i64,
    pub threads_active: usize,
    pub tasks_active_count: usize,
    pub reads_active_count: usize,
    pub writes_active_count: usize,
    pub core_availability: BTreeMap<CoreId, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Task records in dispatch order.
    pub records: Vec<TaskRecord>,
    pub counts: WorkflowCounts,
    pub runtime: RuntimeSummary,
}

impl SimOutcome {
    pub fn makespan(&self) -> f64 {
        self.runtime
            .core_availability
            .values()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn dispatch_order(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn record(&self, name: &str) -> Option<&TaskRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    end: f64,
    seq: usize,
    task: TaskId,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap pops the earliest completion first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .end
            .total_cmp(&self.end)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Mutable runtime state of one simulation.
struct SimState<'a> {
    graph: &'a WorkflowGraph,
    platform: &'a Platform,
    levels: LevelOrder,
    avail: BTreeMap<CoreId, f64>,
    aft: Vec<Option<f64>>,
    locality: Vec<Option<NumaId>>,
    ready: Vec<TaskId>,
    waiting_preds: Vec<usize>,
    dispatched: Vec<bool>,
    pending: BinaryHeap<Pending>,
    now: f64,
    summary: RuntimeSummary,
    records: Vec<TaskRecord>,
}

impl<'a> SimState<'a> {
    fn new(graph: &'a WorkflowGraph, platform: &'a Platform) -> Self {
        Self {
            graph,
            platform,
            levels: graph.level_order(),
            avail: platform.enabled_cores().iter().map(|c| (*c, 0.0)).collect(),
            aft: vec![None; graph.len()],
            locality: vec![None; graph.items().len()],
            ready: Vec::new(),
            waiting_preds: graph.task_ids().map(|t| graph.inputs(t).len()).collect(),
            dispatched: vec![false; graph.len()],
            pending: BinaryHeap::new(),
            now: 0.0,
            summary: RuntimeSummary::default(),
            records: Vec::new(),
        }
    }

    fn view(&self) -> SchedulerView<'_> {
        SchedulerView {
            graph: self.graph,
            platform: self.platform,
            levels: &self.levels,
            avail: &self.avail,
            aft: &self.aft,
            locality: &self.locality,
            ready: &self.ready,
            now: self.now,
        }
    }

    fn release(
        &mut self,
        batch: Vec<crate::TaskId>,
        scheduler: &mut dyn Scheduler,
        log: &mut RunLog,
    ) {
        if batch.is_empty() {
            return;
        }
        self.ready.extend(batch.iter().copied());
        scheduler.release(&batch, &self.view(), log);
    }

    /// Completes every running task that has finished by `now`, releasing
    /// successors one completing task at a time.
    fn complete_due(&mut self, scheduler: &mut dyn Scheduler, log: &mut RunLog) {
        while self.pending.peek().is_some_and(|p| p.end <= self.now) {
            let done = self.pending.pop().expect("peeked");
            let batch = self.complete(done);
            self.release(batch, scheduler, log);
        }
    }

    fn complete(&mut self, done: Pending) -> Vec<TaskId> {
        let graph = self.graph;
        let t = done.task;
        self.aft[t.0] = Some(done.end);
        self.summary.threads_active -= 1;
        let record = self
            .records
            .iter()
            .find(|r| r.task == t)
            .expect("completed task was dispatched");
        for w in &record.writes {
            self.locality[w.item.0] = Some(w.numa);
        }
        let mut batch = Vec::new();
        for s in graph.successors(t) {
            self.waiting_preds[s.0] -= 1;
            if self.waiting_preds[s.0] == 0 {
                batch.push(s);
            }
        }
        batch
    }

    fn dispatch(&mut self, decision: ScheduleDecision, log: &mut RunLog) -> Result<(), SimError> {
        let (task, core) = decision.pair().expect("caller checked the pair");
        let graph = self.graph;
        let name = graph.name(task);
        if !self.platform.is_enabled(core) {
            return Err(SimError::InvalidDecision(format!(
                "{name} on disabled core {core}"
            )));
        }
        let Some(pos) = self.ready.iter().position(|t| *t == task) else {
            return Err(SimError::InvalidDecision(format!("{name} is not ready")));
        };
        let costs = self.view().phase_costs(task, core)?;
        self.ready.remove(pos);
        self.dispatched[task.0] = true;

        let numa = self.platform.numa(core);
        let start = costs.est;
        let mut reads = Vec::with_capacity(graph.inputs(task).len());
        for &item in graph.inputs(task) {
            let src = self.locality[item.0]
                .take()
                .ok_or_else(|| ScheduleError::MissingLocality(graph.item_key(item)))?;
            let payload = graph.item(item).bytes;
            reads.push(CommRecord {
                item,
                key: graph.item_key(item),
                interval: Interval {
                    start,
                    end: start + self.platform.comm_cost(payload, src, numa),
                },
                payload,
                numa: src,
            });
        }
        let compute = Interval {
            start: start + costs.read,
            end: start + costs.read + costs.compute,
        };
        let writes: Vec<CommRecord> = graph
            .outputs(task)
            .iter()
            .map(|&item| {
                let payload = graph.item(item).bytes;
                CommRecord {
                    item,
                    key: graph.item_key(item),
                    interval: Interval {
                        start: compute.end,
                        end: compute.end + self.platform.comm_cost(payload, numa, numa),
                    },
                    payload,
                    numa,
                }
            })
            .collect();
        let end = compute.end + costs.write;

        if !log.is_muted() {
            log.info(
                "mapper_simulation",
                format_args!("Task ID: {name}, Core ID: {core} => message: started."),
            );
            log.info(
                "mapper_simulation",
                format_args!("... => thread_mem_policy: first-touch [{numa}]."),
            );
            for r in &reads {
                log.info(
                    "mapper_simulation",
                    format_args!(
                        "... => read: {}, payload: {}B, locality_before: [{}], locality_after: [{}], pages_migration: no",
                        r.key, r.payload, r.numa, r.numa
                    ),
                );
            }
            for w in &writes {
                log.info(
                    "mapper_simulation",
                    format_args!(
                        "... => write: {}, payload: {}B, locality: [{numa}].",
                        w.key, w.payload
                    ),
                );
            }
            log.info(
                "mapper_simulation",
                format_args!("Task ID: {name}, Core ID: {core} => message: finished at {end}."),
            );
        }

        self.summary.tasks_active_count += 1;
        self.summary.reads_active_count += reads.len();
        self.summary.writes_active_count += writes.len();
        self.summary.threads_active += 1;
        self.avail.insert(core, end);
        self.pending.push(Pending {
            end,
            seq: self.records.len(),
            task,
        });
        self.records.push(TaskRecord {
            task,
            name: name.to_string(),
            core,
            numa,
            flops: graph.task(task).flops,
            total: Interval { start, end },
            compute,
            reads,
            writes,
            estimated_finish_time: decision.estimated_finish_time.unwrap_or(end),
            voluntary_cs: 0,
            involuntary_cs: 0,
            core_migrations: 0,
        });
        Ok(())
    }

    fn remaining(&self) -> Vec<String> {
        self.graph
            .task_ids()
            .filter(|t| !self.dispatched[t.0])
            .map(|t| self.graph.name(t).to_string())
            .collect()
    }

    /// Checks the counters against the workflow totals.
    fn finalize(mut self) -> Result<SimOutcome, SimError> {
        let counts = self.graph.counts();
        let s = &self.summary;
        let mut problems = Vec::new();
        let mut check = |label: &str, got: usize, want: usize| {
            if got != want {
                problems.push(format!("{label} {got} != {want}"));
            }
        };
        check(
            "tasks_active_count",
            s.tasks_active_count,
            counts.execs_count,
        );
        check(
            "reads_active_count",
            s.reads_active_count,
            counts.reads_count,
        );
        check(
            "writes_active_count",
            s.writes_active_count,
            counts.writes_count,
        );
        check("threads_active", s.threads_active, 0);
        if s.threads_checksum != 0 {
            problems.push(format!("threads_checksum {} != 0", s.threads_checksum));
        }
        let leaked = self.locality.iter().filter(|l| l.is_some()).count();
        if leaked > 0 {
            problems.push(format!("{leaked} data items written but never read"));
        }
        if !problems.is_empty() {
            let mut remaining = self.remaining();
            if !remaining.is_empty() {
                remaining.sort();
                problems.push(format!("undispatched: {}", remaining.join(", ")));
            }
            return Err(SimError::Incomplete(problems.join("; ")));
        }
        self.summary.core_availability = std::mem::take(&mut self.avail);
        Ok(SimOutcome {
            records: self.records,
            counts,
            runtime: self.summary,
        })
    }
}

/// Runs `scheduler` over a stripped workflow on a simulated platform.
pub fn simulate(
    graph: &WorkflowGraph,
    platform: &Platform,
    scheduler: &mut dyn Scheduler,
) -> Result<SimOutcome, SimError> {
    simulate_logged(graph, platform, scheduler, &mut RunLog::muted())
}

pub fn simulate_logged(
    graph: &WorkflowGraph,
    platform: &Platform,
    scheduler: &mut dyn Scheduler,
    log: &mut RunLog,
) -> Result<SimOutcome, SimError> {
    log.info("mapper_simulation", "Start");
    let mut state = SimState::new(graph, platform);
    let sources = state
        .levels
        .ordered()
        .into_iter()
        .filter(|t| graph.inputs(*t).is_empty())
        .collect();
    state.release(sources, scheduler, log);

    while scheduler.has_next() {
        state.complete_due(scheduler, log);
        let decision = scheduler.next(&state.view(), log)?;
        if decision.pair().is_some() {
            state.dispatch(decision, log)?;
            continue;
        }
        match state.pending.peek() {
            Some(p) => state.now = p.end,
            None => return Err(SimError::Deadlock(state.remaining())),
        }
    }
    while let Some(done) = state.pending.pop() {
        state.now = state.now.max(done.end);
        let batch = state.complete(done);
        state.release(batch, scheduler, log);
    }
    log.info("mapper_simulation", "End");
    state.finalize()
}

/// Everything one configured run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub graph: WorkflowGraph,
    pub platform: Platform,
    pub outcome: SimOutcome,
    pub artifact: RunArtifact,
    pub log: RunLog,
}

pub fn load_workflow(path: &std::path::Path) -> Result<WorkflowGraph, SimError> {
    let text = fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let graph = dot::parse_workflow_dot(&text).map_err(|source| SimError::Workflow {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(graph.strip_boundary())
}

fn load_matrix(path: &std::path::Path) -> Result<platform::SquareMatrix, SimError> {
    let text = fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    platform::parse_distance_matrix(&text).map_err(|source| SimError::Matrix {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds the simulated platform a configuration describes.
pub fn load_platform(config: &RunConfig, log: &mut RunLog) -> Result<Platform, SimError> {
    let distances = DistanceMatrix::new(
        load_matrix(&config.latency_file)?,
        load_matrix(&config.bandwidth_file)?,
    )?;
    let asymmetry = distances.max_relative_asymmetry();
    if asymmetry > 1e-6 {
        log.warn(
            "runtime",
            format_args!(
                "distance matrices are asymmetric (max relative difference {asymmetry:.6})"
            ),
        );
    }
    let topology = CoreTopology::new(
        config.enabled_cores.clone(),
        distances.nodes(),
        config.total_cores,
        config.cores_per_numa,
    )?;
    let clock = config.clock.clone().ok_or(SimError::BareMetal)?;
    Ok(Platform::new(
        topology,
        distances,
        config.flops_per_cycle,
        clock,
    )?)
}

/// Loads the inputs named by `config`, simulates, and assembles the trace.
pub fn run(config: &RunConfig) -> Result<RunOutput, SimError> {
    if config.mapper == MapperKind::BareMetal {
        return Err(SimError::BareMetal);
    }
    let mut log = RunLog::new();
    log.info("runtime", "Initialize");
    let graph = load_workflow(&config.dag_file)?;
    let platform = load_platform(config, &mut log)?;
    let mut scheduler = scheduling::build(
        config.scheduler,
        &config.scheduler_params,
        &graph,
        &platform,
    )?;
    log.info("runtime", "Start");
    let outcome = simulate_logged(&graph, &platform, scheduler.as_mut(), &mut log)?;
    log.info("runtime", format_args!("makespan: {}", outcome.makespan()));
    log.info("runtime", "End");
    log.info("runtime", "Finalize");
    let artifact = RunArtifact::new(
        UserEcho::new(&platform, config.clock_type.as_str()),
        &outcome,
    );
    Ok(RunOutput {
        graph,
        platform,
        outcome,
        artifact,
        log,
    })
}
