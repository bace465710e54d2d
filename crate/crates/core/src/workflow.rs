//! Workflow DAG: tasks with FLOP payloads, data items with byte payloads.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Name of the mandatory entry vertex.
pub const ROOT: &str = "root";
/// Name of the mandatory exit vertex.
pub const END: &str = "end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub usize);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub flops: f64,
}

/// One edge of the DAG: the data item `producer` writes for `consumer`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataItemSpec {
    pub producer: TaskId,
    pub consumer: TaskId,
    pub bytes: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("task `{0}` declared twice")]
    DuplicateTask(String),
    #[error("edge endpoint `{0}` is not a declared task")]
    UnknownEndpoint(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}->{1}`")]
    DuplicateEdge(String, String),
    #[error("invalid size {value} on `{element}`")]
    InvalidSize { element: String, value: f64 },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

/// Immutable task DAG. Tasks and items keep their declaration order, which
/// the level-order ranking and the FIFO scheduler rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowGraph {
    tasks: Vec<TaskSpec>,
    items: Vec<DataItemSpec>,
    inputs: Vec<Vec<ItemId>>,
    outputs: Vec<Vec<ItemId>>,
    by_name: BTreeMap<String, TaskId>,
}

/// Task and data-operation totals of a stripped workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorkflowCounts {
    pub execs_count: usize,
    pub reads_count: usize,
    pub writes_count: usize,
}

impl WorkflowGraph {
    /// Builds a graph from tasks and `(producer, consumer, bytes)` edges.
    ///
    /// Sizes must be finite and non-negative; the DOT front-end is stricter.
    pub fn new(
        tasks: Vec<TaskSpec>,
        edges: Vec<(String, String, f64)>,
    ) -> Result<Self, GraphError> {
        let mut by_name = BTreeMap::new();
        for (i, task) in tasks.iter().enumerate() {
            if !(task.flops.is_finite() && task.flops >= 0.0) {
                return Err(GraphError::InvalidSize {
                    element: task.name.clone(),
                    value: task.flops,
                });
            }
            if by_name.insert(task.name.clone(), TaskId(i)).is_some() {
                return Err(GraphError::DuplicateTask(task.name.clone()));
            }
        }

        let mut items = Vec::with_capacity(edges.len());
        let mut inputs = vec![Vec::new(); tasks.len()];
        let mut outputs = vec![Vec::new(); tasks.len()];
        let mut seen = BTreeSet::new();
        for (producer, consumer, bytes) in edges {
            let p = *by_name
                .get(&producer)
                .ok_or_else(|| GraphError::UnknownEndpoint(producer.clone()))?;
            let c = *by_name
                .get(&consumer)
                .ok_or_else(|| GraphError::UnknownEndpoint(consumer.clone()))?;
            if p == c {
                return Err(GraphError::SelfLoop(producer));
            }
            if !seen.insert((p, c)) {
                return Err(GraphError::DuplicateEdge(producer, consumer));
            }
            if !(bytes.is_finite() && bytes >= 0.0) {
                return Err(GraphError::InvalidSize {
                    element: format!("{producer}->{consumer}"),
                    value: bytes,
                });
            }
            let id = ItemId(items.len());
            items.push(DataItemSpec {
                producer: p,
                consumer: c,
                bytes,
            });
            outputs[p.0].push(id);
            inputs[c.0].push(id);
        }

        let graph = Self {
            tasks,
            items,
            inputs,
            outputs,
            by_name,
        };
        if let Some(cycle) = graph.find_cycle() {
            return Err(GraphError::Cycle(
                cycle.iter().map(|t| graph.task(*t).name.clone()).collect(),
            ));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn items(&self) -> &[DataItemSpec] {
        &self.items
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.tasks.len()).map(TaskId)
    }

    pub fn item_ids(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.items.len()).map(ItemId)
    }

    pub fn task(&self, id: TaskId) -> &TaskSpec {
        &self.tasks[id.0]
    }

    pub fn item(&self, id: ItemId) -> &DataItemSpec {
        &self.items[id.0]
    }

    pub fn task_id(&self, name: &str) -> Option<TaskId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: TaskId) -> &str {
        &self.tasks[id.0].name
    }

    /// Input items of a task, in edge declaration order.
    pub fn inputs(&self, id: TaskId) -> &[ItemId] {
        &self.inputs[id.0]
    }

    /// Output items of a task, in edge declaration order.
    pub fn outputs(&self, id: TaskId) -> &[ItemId] {
        &self.outputs[id.0]
    }

    pub fn predecessors(&self, id: TaskId) -> impl Iterator<Item = TaskId> + '_ {
        self.inputs[id.0].iter().map(|i| self.items[i.0].producer)
    }

    pub fn successors(&self, id: TaskId) -> impl Iterator<Item = TaskId> + '_ {
        self.outputs[id.0].iter().map(|i| self.items[i.0].consumer)
    }

    /// Tasks without predecessors, in declaration order.
    pub fn sources(&self) -> Vec<TaskId> {
        self.task_ids()
            .filter(|t| self.inputs[t.0].is_empty())
            .collect()
    }

    /// Trace key of a data item: `producer->consumer`.
    pub fn item_key(&self, id: ItemId) -> String {
        let item = &self.items[id.0];
        format!(
            "{}->{}",
            self.tasks[item.producer.0].name, self.tasks[item.consumer.0].name
        )
    }

    pub fn counts(&self) -> WorkflowCounts {
        WorkflowCounts {
            execs_count: self.tasks.len(),
            reads_count: self.items.len(),
            writes_count: self.items.len(),
        }
    }

    /// Kahn order; ties resolved by declaration order.
    pub fn topological_order(&self) -> Vec<TaskId> {
        let mut indegree: Vec<usize> = self.inputs.iter().map(Vec::len).collect();
        let mut queue: VecDeque<TaskId> = self.sources().into();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(t) = queue.pop_front() {
            order.push(t);
            for s in self.successors(t) {
                indegree[s.0] -= 1;
                if indegree[s.0] == 0 {
                    queue.push_back(s);
                }
            }
        }
        order
    }

    fn find_cycle(&self) -> Option<Vec<TaskId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut marks = vec![Mark::New; self.tasks.len()];
        for start in self.task_ids() {
            if marks[start.0] != Mark::New {
                continue;
            }
            // iterative DFS keeping the open path for cycle reporting
            let mut path: Vec<(TaskId, usize)> = vec![(start, 0)];
            marks[start.0] = Mark::Open;
            while let Some(top) = path.len().checked_sub(1) {
                let (t, next) = path[top];
                if let Some(item) = self.outputs[t.0].get(next) {
                    path[top].1 += 1;
                    let s = self.items[item.0].consumer;
                    match marks[s.0] {
                        Mark::New => {
                            marks[s.0] = Mark::Open;
                            path.push((s, 0));
                        }
                        Mark::Open => {
                            let from = path.iter().position(|(p, _)| *p == s).unwrap_or(0);
                            let mut cycle: Vec<TaskId> =
                                path[from..].iter().map(|(p, _)| *p).collect();
                            cycle.push(s);
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    }
                } else {
                    marks[t.0] = Mark::Done;
                    path.pop();
                }
            }
        }
        None
    }

    /// Drops the `root`/`end` boundary vertices and every edge touching them.
    pub fn strip_boundary(&self) -> WorkflowGraph {
        let keep = |name: &str| name != ROOT && name != END;
        let tasks: Vec<TaskSpec> = self
            .tasks
            .iter()
            .filter(|t| keep(&t.name))
            .cloned()
            .collect();
        let edges = self
            .items
            .iter()
            .filter(|i| {
                keep(&self.tasks[i.producer.0].name) && keep(&self.tasks[i.consumer.0].name)
            })
            .map(|i| {
                (
                    self.tasks[i.producer.0].name.clone(),
                    self.tasks[i.consumer.0].name.clone(),
                    i.bytes,
                )
            })
            .collect();
        // a subgraph of a valid DAG is a valid DAG
        WorkflowGraph::new(tasks, edges).expect("subgraph of a valid workflow")
    }

    pub fn level_order(&self) -> LevelOrder {
        LevelOrder::new(self)
    }
}

/// Level-order ranking: level is the longest-path depth from the source
/// frontier, sibling index the declaration-order position within a level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelOrder {
    level: Vec<usize>,
    sibling: Vec<usize>,
    position: Vec<usize>,
}

impl LevelOrder {
    pub fn new(graph: &WorkflowGraph) -> Self {
        let mut level = vec![0usize; graph.len()];
        for t in graph.topological_order() {
            for s in graph.successors(t) {
                level[s.0] = level[s.0].max(level[t.0] + 1);
            }
        }
        let mut ordered: Vec<TaskId> = graph.task_ids().collect();
        ordered.sort_by_key(|t| (level[t.0], t.0));
        let mut sibling = vec![0usize; graph.len()];
        let mut position = vec![0usize; graph.len()];
        let mut current = (usize::MAX, 0usize);
        for (pos, t) in ordered.iter().enumerate() {
            if current.0 != level[t.0] {
                current = (level[t.0], 0);
            }
            sibling[t.0] = current.1;
            current.1 += 1;
            position[t.0] = pos;
        }
        Self {
            level,
            sibling,
            position,
        }
    }

    pub fn level(&self, t: TaskId) -> usize {
        self.level[t.0]
    }

    /// `(level, sibling index)` of a task.
    pub fn rank(&self, t: TaskId) -> (usize, usize) {
        (self.level[t.0], self.sibling[t.0])
    }

    /// Position of a task in the total `(level, sibling)` order.
    pub fn position(&self, t: TaskId) -> usize {
        self.position[t.0]
    }

    /// Tasks sorted by the total order.
    pub fn ordered(&self) -> Vec<TaskId> {
        let mut out: Vec<TaskId> = (0..self.position.len()).map(TaskId).collect();
        out.sort_by_key(|t| self.position[t.0]);
        out
    }
}

/// `level_order_ranks` keyed by task name.
pub fn level_order_ranks(graph: &WorkflowGraph) -> BTreeMap<String, (usize, usize)> {
    let order = graph.level_order();
    graph
        .task_ids()
        .map(|t| (graph.name(t).to_string(), order.rank(t)))
        .collect()
}
