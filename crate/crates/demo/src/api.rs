//! JSON-in, JSON-out operations behind the browser demo. Kept free of
//! wasm types so they run in native tests.

use serde::Deserialize;
use serde_json::{json, Value};

use numasched::config::SchedulerKind;
use numasched::platform::{ClockFrequency, CoreTopology, DistanceMatrix, Platform, SquareMatrix};
use numasched::scheduling::{self, upward_ranks};
use numasched::trace::{RunArtifact, UserEcho};
use numasched::{dot, engine, validation, WorkflowGraph};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Hz {
    Single(f64),
    PerCore(Vec<f64>),
}

/// Platform and policy chosen in the page's settings box.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    scheduler: String,
    #[serde(default)]
    scheduler_params: Vec<String>,
    core_avail_mask: String,
    #[serde(default)]
    cores_per_numa: Option<usize>,
    flops_per_cycle: f64,
    clock_frequency_hz: Hz,
    latency_ns: Vec<Vec<f64>>,
    bandwidth_gbps: Vec<Vec<f64>>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load(
    dot_text: &str,
    settings_json: &str,
) -> Result<(WorkflowGraph, Platform, Settings, &'static str), String> {
    let settings: Settings = serde_json::from_str(settings_json).map_err(err)?;
    let graph = dot::parse_workflow_dot(dot_text)
        .map_err(err)?
        .strip_boundary();
    let distances = DistanceMatrix::new(
        SquareMatrix::new(settings.latency_ns.clone()).map_err(err)?,
        SquareMatrix::new(settings.bandwidth_gbps.clone()).map_err(err)?,
    )
    .map_err(err)?;
    let cores = numasched::platform::parse_core_mask(&settings.core_avail_mask).map_err(err)?;
    let topology =
        CoreTopology::new(cores, distances.nodes(), None, settings.cores_per_numa).map_err(err)?;
    let (clock, clock_type) = match &settings.clock_frequency_hz {
        Hz::Single(hz) => (ClockFrequency::Static(*hz), "static"),
        Hz::PerCore(list) => (ClockFrequency::PerCore(list.clone()), "per-core"),
    };
    let platform =
        Platform::new(topology, distances, settings.flops_per_cycle, clock).map_err(err)?;
    Ok((graph, platform, settings, clock_type))
}

/// Simulates a DOT workflow; returns makespan, Gantt bars and the trace.
pub fn simulate_json(dot_text: &str, settings_json: &str) -> Result<String, String> {
    let (graph, platform, settings, clock_type) = load(dot_text, settings_json)?;
    let kind = SchedulerKind::parse(&settings.scheduler).map_err(err)?;
    let mut scheduler =
        scheduling::build(kind, &settings.scheduler_params, &graph, &platform).map_err(err)?;
    let outcome = engine::simulate(&graph, &platform, scheduler.as_mut()).map_err(err)?;
    let artifact = RunArtifact::new(UserEcho::new(&platform, clock_type), &outcome);

    let tasks: Vec<Value> = outcome
        .records
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "core": r.core,
                "numa": r.numa,
                "start": r.total.start,
                "end": r.total.end,
                "compute_start": r.compute.start,
                "compute_end": r.compute.end,
                "reads": r.reads.iter().map(|c| json!({
                    "key": c.key, "start": c.interval.start, "end": c.interval.end, "from_numa": c.numa,
                })).collect::<Vec<_>>(),
                "writes": r.writes.iter().map(|c| json!({
                    "key": c.key, "start": c.interval.start, "end": c.interval.end,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "scheduler": kind.as_str(),
        "makespan": outcome.makespan(),
        "cores": platform.enabled_cores(),
        "order": outcome.dispatch_order(),
        "tasks": tasks,
        "trace_yaml": artifact.to_yaml(),
    })
    .to_string())
}

/// Upward ranks and level-order positions, highest rank first.
pub fn upward_ranks_json(dot_text: &str, settings_json: &str) -> Result<String, String> {
    let (graph, platform, _, _) = load(dot_text, settings_json)?;
    let ranks = upward_ranks(&graph, &platform);
    let levels = graph.level_order();
    let mut rows: Vec<(f64, usize, Value)> = graph
        .task_ids()
        .map(|t| {
            let (level, sibling) = levels.rank(t);
            (
                ranks[t.0],
                levels.position(t),
                json!({ "name": graph.name(t), "rank": ranks[t.0], "level": level, "sibling": sibling }),
            )
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(Value::Array(rows.into_iter().map(|(_, _, v)| v).collect()).to_string())
}

/// Runs the offsets validator over a (possibly hand-edited) trace.
pub fn validate_offsets_json(trace_yaml: &str) -> Result<String, String> {
    let report = validation::validate_offsets(trace_yaml).map_err(err)?;
    let findings: Vec<String> = report.findings.iter().map(|f| f.to_string()).collect();
    Ok(json!({ "passed": report.passed(), "findings": findings }).to_string())
}
