//! YAML execution trace: `user`, `workflow`, `runtime` and `trace`
//! sections, with per-task and per-item maps in reverse dispatch order.

use std::fmt::Write as _;

use crate::engine::{CommRecord, RuntimeSummary, SimOutcome, TaskRecord};
use crate::platform::{ClockFrequency, Platform, SquareMatrix};
use crate::workflow::WorkflowCounts;

/// Echo of the user inputs that shape scheduling decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEcho {
    pub flops_per_cycle: f64,
    pub clock_frequency_type: String,
    pub clock_frequency_hz: ClockFrequency,
    pub distance_lat_ns: SquareMatrix,
    pub distance_bw_gbps: SquareMatrix,
}

impl UserEcho {
    pub fn new(platform: &Platform, clock_type: &str) -> Self {
        Self {
            flops_per_cycle: platform.flops_per_cycle(),
            clock_frequency_type: clock_type.to_string(),
            clock_frequency_hz: platform.clock().clone(),
            distance_lat_ns: platform.distances().latency_ns().clone(),
            distance_bw_gbps: platform.distances().bandwidth_gbps().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub user: UserEcho,
    pub workflow: WorkflowCounts,
    pub runtime: RuntimeSummary,
    /// Dispatch order.
    pub records: Vec<TaskRecord>,
}

impl RunArtifact {
    pub fn new(user: UserEcho, outcome: &SimOutcome) -> Self {
        Self {
            user,
            workflow: outcome.counts,
            runtime: outcome.runtime.clone(),
            records: outcome.records.clone(),
        }
    }

    pub fn to_yaml(&self) -> String {
        emit_trace_yaml(self)
    }
}

/// Shortest round-trip decimal; integers carry no fraction and magnitudes
/// of a million or more use `1e+06` style exponents.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return ".nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 {
            ".inf".into()
        } else {
            "-.inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() < 1e6 {
        return v.to_string();
    }
    let sci = format!("{v:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn is_plain_key(s: &str) -> bool {
    const RESERVED: [&str; 11] = [
        "true", "false", "null", "yes", "no", "on", "off", "y", "n", "nan", "inf",
    ];
    let mut chars = s.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    first_ok
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !RESERVED.contains(&s.to_ascii_lowercase().as_str())
}

/// Renders a mapping key, quoting anything a YAML reader could retype.
pub fn format_key(s: &str) -> String {
    let plain = match s.split_once("->") {
        Some((a, b)) => is_plain_key(a) && is_plain_key(b),
        None => is_plain_key(s),
    };
    if plain {
        s.to_string()
    } else {
        serde_json::to_string(s).expect("strings always serialize")
    }
}

fn flow_list(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| format_number(*v)).collect();
    format!("[{}]", inner.join(", "))
}

fn matrix(out: &mut String, name: &str, m: &SquareMatrix) {
    let _ = writeln!(out, "  {name}:");
    for row in m.rows() {
        let _ = writeln!(out, "    - {}", flow_list(row));
    }
}

/// Writes `  name:` followed by indented entries, or `  name: {}`. Keys
/// are written as given.
fn section_map(out: &mut String, name: &str, entries: &[(String, String)]) {
    if entries.is_empty() {
        let _ = writeln!(out, "  {name}: {{}}");
        return;
    }
    let _ = writeln!(out, "  {name}:");
    for (k, v) in entries {
        let _ = writeln!(out, "    {k}: {v}");
    }
}

fn interval_entry(start: f64, end: f64, payload: f64) -> String {
    format!(
        "{{start: {}, end: {}, payload: {}}}",
        format_number(start),
        format_number(end),
        format_number(payload)
    )
}

pub fn emit_trace_yaml(a: &RunArtifact) -> String {
    let mut out = String::new();

    out.push_str("user:\n");
    let _ = writeln!(
        out,
        "  flops_per_cycle: {}",
        format_number(a.user.flops_per_cycle)
    );
    let _ = writeln!(
        out,
        "  clock_frequency_type: {}",
        a.user.clock_frequency_type
    );
    let hz = match &a.user.clock_frequency_hz {
        ClockFrequency::Static(hz) => format_number(*hz),
        ClockFrequency::PerCore(list) => flow_list(list),
    };
    let _ = writeln!(out, "  clock_frequency_hz: {hz}");
    matrix(&mut out, "distance_lat_ns", &a.user.distance_lat_ns);
    matrix(&mut out, "distance_bw_gbps", &a.user.distance_bw_gbps);

    out.push_str("\nworkflow:\n");
    let _ = writeln!(out, "  execs_count: {}", a.workflow.execs_count);
    let _ = writeln!(out, "  reads_count: {}", a.workflow.reads_count);
    let _ = writeln!(out, "  writes_count: {}", a.workflow.writes_count);

    let r = &a.runtime;
    out.push_str("\nruntime:\n");
    let _ = writeln!(out, "  threads_checksum: {}", r.threads_checksum);
    let _ = writeln!(out, "  threads_active: {}", r.threads_active);
    let _ = writeln!(out, "  tasks_active_count: {}", r.tasks_active_count);
    let _ = writeln!(out, "  reads_active_count: {}", r.reads_active_count);
    let _ = writeln!(out, "  writes_active_count: {}", r.writes_active_count);
    let avail: Vec<(String, String)> = r
        .core_availability
        .iter()
        .map(|(core, until)| {
            (
                core.to_string(),
                format!("{{avail_until: {}}}", format_number(*until)),
            )
        })
        .collect();
    section_map(&mut out, "core_availability", &avail);

    let tasks: Vec<&TaskRecord> = a.records.iter().rev().collect();
    let reads: Vec<&CommRecord> = a.records.iter().flat_map(|t| &t.reads).rev().collect();
    let writes: Vec<&CommRecord> = a.records.iter().flat_map(|t| &t.writes).rev().collect();
    let numa_ids = |c: &CommRecord| format!("{{numa_ids: [{}]}}", c.numa);
    let comm = |c: &CommRecord| interval_entry(c.interval.start, c.interval.end, c.payload);

    let sections: [(&str, Vec<(String, String)>); 7] = [
        (
            "name_to_thread_locality",
            tasks
                .iter()
                .map(|t| {
                    (
                        format_key(&t.name),
                        format!(
                            "{{numa_id: {}, core_id: {}, voluntary_cs: {}, involuntary_cs: {}, core_migrations: {}}}",
                            t.numa, t.core, t.voluntary_cs, t.involuntary_cs, t.core_migrations
                        ),
                    )
                })
                .collect(),
        ),
        ("numa_mappings_write", writes.iter().map(|c| (format_key(&c.key), numa_ids(c))).collect()),
        ("numa_mappings_read", reads.iter().map(|c| (format_key(&c.key), numa_ids(c))).collect()),
        ("comm_name_read_offsets", reads.iter().map(|c| (format_key(&c.key), comm(c))).collect()),
        ("comm_name_write_offsets", writes.iter().map(|c| (format_key(&c.key), comm(c))).collect()),
        (
            "exec_name_compute_offsets",
            tasks
                .iter()
                .map(|t| (format_key(&t.name), interval_entry(t.compute.start, t.compute.end, t.flops)))
                .collect(),
        ),
        (
            "exec_name_total_offsets",
            tasks
                .iter()
                .map(|t| (format_key(&t.name), interval_entry(t.total.start, t.total.end, t.flops)))
                .collect(),
        ),
    ];
    out.push_str("\ntrace:\n");
    for (i, (name, entries)) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        section_map(&mut out, name, entries);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(12.0), "12");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.005), "0.005");
        assert_eq!(format_number(67.9), "67.9");
        assert_eq!(format_number(304488.0), "304488");
        assert_eq!(format_number(1e6), "1e+06");
        assert_eq!(format_number(1e7), "1e+07");
        assert_eq!(format_number(1e9), "1e+09");
        assert_eq!(format_number(1.5e7), "1.5e+07");
        assert_eq!(format_number(-2e6), "-2e+06");
        assert_eq!(format_number(1e100), "1e+100");
        assert_eq!(format_number(2.857142857142857), "2.857142857142857");
    }

    #[test]
    fn formatted_numbers_round_trip() {
        for v in [1e6, 1234567.0, 0.1 + 0.2, 1e-7, 123.456, 9.99e15, 29.0] {
            let s = format_number(v);
            let back: f64 = serde_yaml::from_str(&s).unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn key_quoting() {
        assert_eq!(format_key("Task_1"), "Task_1");
        assert_eq!(format_key("Task_1->Task_3"), "Task_1->Task_3");
        assert_eq!(format_key("24"), "\"24\"");
        assert_eq!(format_key("yes"), "\"yes\"");
        assert_eq!(format_key("a b->c"), "\"a b->c\"");
        assert_eq!(format_key("x: y"), "\"x: y\"");
    }
}
