use std::cmp::Ordering;

use super::{ScheduleDecision, ScheduleError, Scheduler, SchedulerView};
use crate::platform::Platform;
use crate::runlog::RunLog;
use crate::workflow::WorkflowGraph;
use crate::CoreId;

/// Upward rank of every task, indexed by task id:
/// `rank(t) = w̄(t) + max over successors (c̄(t, s) + rank(s))`.
pub fn upward_ranks(graph: &WorkflowGraph, platform: &Platform) -> Vec<f64> {
    let mut rank = vec![0.0; graph.len()];
    for &t in graph.topological_order().iter().rev() {
        let tail = graph
            .outputs(t)
            .iter()
            .map(|&item| {
                let spec = graph.item(item);
                platform.mean_comm_cost(spec.bytes) + rank[spec.consumer.0]
            })
            .fold(0.0f64, f64::max);
        rank[t.0] = platform.mean_compute_cost(graph.task(t).flops) + tail;
    }
    rank
}

/// HEFT without insertion: highest upward rank among ready tasks, placed
/// on the core with the smallest EFT.
#[derive(Debug, Clone)]
pub struct HeftScheduler {
    ranks: Vec<f64>,
    remaining: usize,
}

impl HeftScheduler {
    pub fn new(graph: &WorkflowGraph, platform: &Platform) -> Self {
        Self {
            ranks: upward_ranks(graph, platform),
            remaining: graph.len(),
        }
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }
}

impl Scheduler for HeftScheduler {
    fn name(&self) -> &'static str {
        "heft_scheduler"
    }

    fn has_next(&self) -> bool {
        self.remaining > 0
    }

    fn next(
        &mut self,
        view: &SchedulerView<'_>,
        log: &mut RunLog,
    ) -> Result<ScheduleDecision, ScheduleError> {
        let pick = view.ready.iter().copied().min_by(|&a, &b| {
            self.ranks[b.0]
                .partial_cmp(&self.ranks[a.0])
                .unwrap_or(Ordering::Equal)
                .then(view.levels.position(a).cmp(&view.levels.position(b)))
                .then_with(|| view.graph.name(a).cmp(view.graph.name(b)))
        });
        let Some(task) = pick else {
            return Ok(ScheduleDecision::no_task());
        };

        let mut best: Option<(f64, CoreId)> = None;
        for &core in view.platform.enabled_cores() {
            let eft = view.eft(task, core)?;
            if best.is_none_or(|(e, _)| eft < e) {
                best = Some((eft, core));
            }
        }
        let (eft, core) = best.expect("platform has at least one enabled core");
        self.remaining -= 1;
        if !log.is_muted() {
            log.debug(
                self.name(),
                format_args!(
                    "selected_task: {}, upward_rank: {:.6}, selected_core_id: {core}, estimated_finish_time: {eft:.6}",
                    view.graph.name(task),
                    self.ranks[task.0]
                ),
            );
        }
        Ok(ScheduleDecision::assign(task, core, eft))
    }
}
