use super::{ScheduleDecision, ScheduleError, Scheduler, SchedulerView};
use crate::runlog::RunLog;
use crate::{CoreId, TaskId};

/// Replays a fixed `(task, core)` sequence, waiting until each planned
/// task is ready. Lets the same schedule be timed on different platforms.
#[derive(Debug, Clone)]
pub struct ReplayScheduler {
    plan: Vec<(TaskId, CoreId)>,
    cursor: usize,
}

impl ReplayScheduler {
    pub fn new(plan: Vec<(TaskId, CoreId)>) -> Self {
        Self { plan, cursor: 0 }
    }
}

impl Scheduler for ReplayScheduler {
    fn name(&self) -> &'static str {
        "replay_scheduler"
    }

    fn has_next(&self) -> bool {
        self.cursor < self.plan.len()
    }

    fn next(
        &mut self,
        view: &SchedulerView<'_>,
        _log: &mut RunLog,
    ) -> Result<ScheduleDecision, ScheduleError> {
        let Some(&(task, core)) = self.plan.get(self.cursor) else {
            return Ok(ScheduleDecision::no_task());
        };
        if !view.is_ready(task) {
            return Ok(ScheduleDecision::no_task());
        }
        let eft = view.eft(task, core)?;
        self.cursor += 1;
        Ok(ScheduleDecision::assign(task, core, eft))
    }
}
