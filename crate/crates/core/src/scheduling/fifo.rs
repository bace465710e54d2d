use std::collections::VecDeque;

use super::{ScheduleDecision, ScheduleError, Scheduler, SchedulerView};
use crate::runlog::RunLog;
use crate::workflow::WorkflowGraph;
use crate::{CoreId, NumaId, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FifoParams {
    pub prioritize_by_core_id: bool,
    pub prioritize_by_exec_order: bool,
}

impl Default for FifoParams {
    fn default() -> Self {
        Self {
            prioritize_by_core_id: true,
            prioritize_by_exec_order: true,
        }
    }
}

impl FifoParams {
    pub fn parse(params: &[String]) -> Result<Self, ScheduleError> {
        let mut out = Self::default();
        for raw in params {
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| ScheduleError::InvalidParam(raw.clone()))?;
            let flag = match value.trim() {
                "yes" => true,
                "no" => false,
                _ => return Err(ScheduleError::InvalidParam(raw.clone())),
            };
            match key.trim() {
                "fifo_prioritize_by_core_id" => out.prioritize_by_core_id = flag,
                "fifo_prioritize_by_exec_order" => out.prioritize_by_exec_order = flag,
                other => return Err(ScheduleError::UnknownParam(other.to_string())),
            }
        }
        Ok(out)
    }
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Locality-aware FIFO.
///
/// Released batches are sorted by level order, then by descending locality
/// score (bytes resident on the input's best node) and appended to the
/// queue. The head goes to the node holding most of its input; among that
/// node's free cores the one that became free earliest wins.
#[derive(Debug, Clone)]
pub struct FifoScheduler {
    params: FifoParams,
    queue: VecDeque<TaskId>,
    remaining: usize,
    node_turn: NumaId,
    core_turn: Vec<usize>,
    announced: bool,
}

impl FifoScheduler {
    pub fn new(graph: &WorkflowGraph, params: FifoParams) -> Self {
        Self {
            params,
            queue: VecDeque::new(),
            remaining: graph.len(),
            node_turn: 0,
            core_turn: Vec::new(),
            announced: false,
        }
    }

    pub fn queue(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.queue.iter().copied()
    }

    fn announce(&mut self, log: &mut RunLog) {
        if self.announced {
            return;
        }
        self.announced = true;
        log.debug(
            self.name(),
            format_args!(
                "fifo_prioritize_by_exec_order: {}, enabled: true",
                yes_no(self.params.prioritize_by_exec_order)
            ),
        );
        log.debug(
            self.name(),
            format_args!(
                "fifo_prioritize_by_core_id: {}, enabled: true",
                yes_no(self.params.prioritize_by_core_id)
            ),
        );
    }

    /// Picks the node for the head task among nodes with a free core.
    fn pick_node(&mut self, share: &[f64], candidates: &[NumaId]) -> NumaId {
        let top = candidates
            .iter()
            .map(|n| share[*n])
            .fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<NumaId> = candidates
            .iter()
            .copied()
            .filter(|n| share[*n] == top)
            .collect();
        if tied.len() == 1 {
            return tied[0];
        }
        let nodes = share.len();
        let chosen = (0..nodes)
            .map(|k| (self.node_turn + k) % nodes)
            .find(|n| tied.contains(n))
            .expect("tied set is non-empty");
        self.node_turn = (chosen + 1) % nodes;
        chosen
    }

    fn pick_core(&mut self, view: &SchedulerView<'_>, node: NumaId, free: &[CoreId]) -> CoreId {
        if self.params.prioritize_by_core_id {
            return *free
                .iter()
                .min_by(|a, b| view.avail(**a).total_cmp(&view.avail(**b)).then(a.cmp(b)))
                .expect("node has a free core");
        }
        if self.core_turn.len() <= node {
            self.core_turn.resize(node + 1, 0);
        }
        let turn = self.core_turn[node];
        let core = free.iter().copied().find(|c| *c >= turn).unwrap_or(free[0]);
        self.core_turn[node] = core + 1;
        core
    }
}

impl Scheduler for FifoScheduler {
    fn name(&self) -> &'static str {
        "fifo_scheduler"
    }

    fn release(&mut self, batch: &[TaskId], view: &SchedulerView<'_>, log: &mut RunLog) {
        self.announce(log);
        let mut scored: Vec<(TaskId, f64)> = batch
            .iter()
            .map(|&t| {
                let score = view
                    .input_bytes_by_node(t)
                    .map(|share| share.into_iter().fold(0.0, f64::max))
                    .unwrap_or(0.0);
                (t, score)
            })
            .collect();
        if self.params.prioritize_by_exec_order {
            scored.sort_by_key(|(t, _)| view.levels.position(*t));
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        }
        for (task, score) in scored {
            log.debug(
                self.name(),
                format_args!(
                    "priority_queued_task: {}, score: {score:.6}",
                    view.graph.name(task)
                ),
            );
            self.queue.push_back(task);
        }
    }

    fn has_next(&self) -> bool {
        self.remaining > 0
    }

    fn next(
        &mut self,
        view: &SchedulerView<'_>,
        log: &mut RunLog,
    ) -> Result<ScheduleDecision, ScheduleError> {
        self.announce(log);
        let Some(&task) = self.queue.front() else {
            return Ok(ScheduleDecision::no_task());
        };

        let free: Vec<CoreId> = view
            .platform
            .enabled_cores()
            .iter()
            .copied()
            .filter(|c| view.is_free(*c))
            .collect();
        if !log.is_muted() {
            for &core in &free {
                log.debug(
                    self.name(),
                    format_args!(
                        "avail_core_id: {core}, avail_core_until: {:.6}",
                        view.avail(core)
                    ),
                );
            }
        }
        if free.is_empty() {
            return Ok(ScheduleDecision::no_core(task));
        }

        let share = view.input_bytes_by_node(task)?;
        let mut candidates: Vec<NumaId> = free.iter().map(|c| view.platform.numa(*c)).collect();
        candidates.dedup();
        let node = self.pick_node(&share, &candidates);
        let on_node: Vec<CoreId> = free
            .iter()
            .copied()
            .filter(|c| view.platform.numa(*c) == node)
            .collect();
        let core = self.pick_core(view, node, &on_node);
        log.debug(
            self.name(),
            format_args!("best_core_id: {core}, best_numa_id: {node}"),
        );

        let eft = view.eft(task, core)?;
        self.queue.pop_front();
        self.remaining -= 1;
        log.debug(
            self.name(),
            format_args!(
                "selected_task: {}, selected_core_id: {core}, estimated_finish_time: {eft:.6}",
                view.graph.name(task)
            ),
        );
        Ok(ScheduleDecision::assign(task, core, eft))
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::*;
    use crate::platform::{ClockFrequency, Platform};

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_params() {
        assert_eq!(FifoParams::parse(&[]).unwrap(), FifoParams::default());
        let p = FifoParams::parse(&strings(&[
            "fifo_prioritize_by_core_id=no",
            "fifo_prioritize_by_exec_order=yes",
        ]))
        .unwrap();
        assert!(!p.prioritize_by_core_id && p.prioritize_by_exec_order);
        assert!(matches!(
            FifoParams::parse(&strings(&["fifo_speed=yes"])),
            Err(ScheduleError::UnknownParam(_))
        ));
        assert!(matches!(
            FifoParams::parse(&strings(&["fifo_prioritize_by_core_id=maybe"])),
            Err(ScheduleError::InvalidParam(_))
        ));
        assert!(FifoParams::parse(&strings(&["novalue"])).is_err());
    }

    #[test]
    fn head_goes_to_node_with_most_input() {
        let g = graph(
            &[("Task_1", 10.0), ("Task_2", 10.0), ("Task_3", 10.0)],
            &[("Task_1", "Task_3", 10.0), ("Task_2", "Task_3", 20.0)],
        );
        let p = platform(
            &[0, 24],
            2,
            vec![vec![0.005, 0.002], vec![0.002, 0.005]],
            ClockFrequency::Static(1.0),
        );
        let mut s = State::new(&g, &p);
        let mut f = FifoScheduler::new(&g, FifoParams::default());
        let mut log = RunLog::new();

        f.release(&s.ready.clone(), &s.view(&g, &p), &mut log);
        let d1 = f.next(&s.view(&g, &p), &mut log).unwrap();
        assert_eq!(d1, ScheduleDecision::assign(TaskId(0), 0, 12.0));
        s.ready.retain(|t| *t != TaskId(0));
        s.avail.insert(0, 12.0);
        let d2 = f.next(&s.view(&g, &p), &mut log).unwrap();
        assert_eq!(d2, ScheduleDecision::assign(TaskId(1), 24, 14.0));
        assert_eq!(
            f.next(&s.view(&g, &p), &mut log).unwrap(),
            ScheduleDecision::no_task()
        );

        s.avail.insert(24, 14.0);
        s.aft = vec![Some(12.0), Some(14.0), None];
        s.locality = vec![Some(0), Some(1)];
        s.ready = vec![TaskId(2)];
        s.now = 14.0;
        f.release(&[TaskId(2)], &s.view(&g, &p), &mut log);
        let d3 = f.next(&s.view(&g, &p), &mut log).unwrap();
        assert_eq!(d3, ScheduleDecision::assign(TaskId(2), 24, 29.0));
        assert!(!f.has_next());
        assert!(log
            .to_text()
            .contains("priority_queued_task: Task_1, score: 0.000000"));
        assert!(log
            .to_text()
            .contains("priority_queued_task: Task_3, score: 20.000000"));
    }

    #[test]
    fn batch_sorted_by_score_then_level_order() {
        let g = graph(
            &[("T1", 10.0), ("T2", 10.0), ("T5", 10.0)],
            &[("T1", "T2", 10.0), ("T1", "T5", 20.0)],
        );
        let p = Platform::uniform(&[0], 1e6, 1.0, 0.0, 1.0).unwrap();
        let mut s = State::new(&g, &p);
        s.aft[0] = Some(30.0);
        s.locality = vec![Some(0), Some(0)];
        let mut f = FifoScheduler::new(&g, FifoParams::default());
        f.release(
            &[TaskId(1), TaskId(2)],
            &s.view(&g, &p),
            &mut RunLog::muted(),
        );
        assert_eq!(f.queue().collect::<Vec<_>>(), vec![TaskId(2), TaskId(1)]);

        let mut plain = FifoScheduler::new(
            &g,
            FifoParams {
                prioritize_by_exec_order: false,
                ..FifoParams::default()
            },
        );
        plain.release(
            &[TaskId(1), TaskId(2)],
            &s.view(&g, &p),
            &mut RunLog::muted(),
        );
        assert_eq!(
            plain.queue().collect::<Vec<_>>(),
            vec![TaskId(1), TaskId(2)]
        );
    }

    #[test]
    fn busy_platform_yields_no_core() {
        let g = graph(&[("a", 10.0)], &[]);
        let p = Platform::uniform(&[0], 1e6, 1.0, 0.0, 1.0).unwrap();
        let mut s = State::new(&g, &p);
        s.avail.insert(0, 5.0);
        let mut f = FifoScheduler::new(&g, FifoParams::default());
        f.release(&[TaskId(0)], &s.view(&g, &p), &mut RunLog::muted());
        let d = f.next(&s.view(&g, &p), &mut RunLog::muted()).unwrap();
        assert_eq!(d, ScheduleDecision::no_core(TaskId(0)));
    }

    #[test]
    fn earliest_free_core_wins_within_node() {
        let g = graph(&[("a", 10.0)], &[]);
        let p = Platform::uniform(&[0, 1, 2], 1e6, 1.0, 0.0, 1.0).unwrap();
        let mut s = State::new(&g, &p);
        s.now = 30.0;
        s.avail.insert(0, 30.0);
        s.avail.insert(1, 10.0);
        s.avail.insert(2, 10.0);
        let mut f = FifoScheduler::new(&g, FifoParams::default());
        f.release(&[TaskId(0)], &s.view(&g, &p), &mut RunLog::muted());
        let d = f.next(&s.view(&g, &p), &mut RunLog::muted()).unwrap();
        assert_eq!(d.core, Some(1));
    }
}
