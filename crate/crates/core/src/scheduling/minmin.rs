use super::{ScheduleDecision, ScheduleError, Scheduler, SchedulerView};
use crate::runlog::RunLog;
use crate::workflow::WorkflowGraph;
use crate::{CoreId, TaskId};

/// Min-Min: the `(ready task, core)` pair with the smallest EFT wins.
/// Ties go to the lower level-order position, then the lower core id.
#[derive(Debug, Clone)]
pub struct MinMinScheduler {
    remaining: usize,
}

impl MinMinScheduler {
    pub fn new(graph: &WorkflowGraph) -> Self {
        Self {
            remaining: graph.len(),
        }
    }
}

impl Scheduler for MinMinScheduler {
    fn name(&self) -> &'static str {
        "min_min_scheduler"
    }

    fn has_next(&self) -> bool {
        self.remaining > 0
    }

    fn next(
        &mut self,
        view: &SchedulerView<'_>,
        log: &mut RunLog,
    ) -> Result<ScheduleDecision, ScheduleError> {
        let mut best: Option<(f64, usize, CoreId, TaskId)> = None;
        for &task in view.ready {
            let pos = view.levels.position(task);
            for &core in view.platform.enabled_cores() {
                let eft = view.eft(task, core)?;
                let better = match best {
                    None => true,
                    Some((e, p, c, _)) => (eft, pos, core) < (e, p, c),
                };
                if better {
                    best = Some((eft, pos, core, task));
                }
            }
        }
        let Some((eft, _, core, task)) = best else {
            return Ok(ScheduleDecision::no_task());
        };
        self.remaining -= 1;
        if !log.is_muted() {
            log.debug(
                self.name(),
                format_args!(
                    "selected_task: {}, selected_core_id: {core}, estimated_finish_time: {eft:.6}",
                    view.graph.name(task)
                ),
            );
        }
        Ok(ScheduleDecision::assign(task, core, eft))
    }
}
