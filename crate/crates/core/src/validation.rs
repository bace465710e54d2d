//! Trace validators: internal consistency of the offset maps, and subset
//! comparison of an output trace against an expected pattern.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::trace::format_number;

/// Equality tolerance for offsets, in microseconds.
pub const TOLERANCE: f64 = 1e-6;

pub const DEFAULT_ORDER_PATH: &str = "trace.exec_name_total_offsets";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("unparsable YAML: {0}")]
    Yaml(String),
    #[error("malformed trace: {0}")]
    Shape(String),
}

/// Order-preserving YAML tree with stringified mapping keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Null,
    Bool(bool),
    Number(f64),
    String(String),
    List(Vec<Node>),
    Map(Vec<(String, Node)>),
}

impl Node {
    pub fn parse(text: &str) -> Result<Node, ValidationError> {
        let value: serde_yaml::Value =
            serde_yaml::from_str(text).map_err(|e| ValidationError::Yaml(e.to_string()))?;
        Ok(Node::from_value(value))
    }

    fn from_value(value: serde_yaml::Value) -> Node {
        use serde_yaml::Value;
        match value {
            Value::Null => Node::Null,
            Value::Bool(b) => Node::Bool(b),
            Value::Number(n) => Node::Number(n.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => Node::String(s),
            Value::Sequence(items) => Node::List(items.into_iter().map(Node::from_value).collect()),
            Value::Mapping(map) => Node::Map(
                map.into_iter()
                    .map(|(k, v)| (key_string(k), Node::from_value(v)))
                    .collect(),
            ),
            Value::Tagged(tagged) => Node::from_value(tagged.value),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        match self {
            Node::Map(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Follows a dotted path such as `trace.exec_name_total_offsets`.
    pub fn at(&self, path: &str) -> Option<&Node> {
        if path.is_empty() {
            return Some(self);
        }
        path.split('.').try_fold(self, |node, key| match node {
            Node::List(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
            _ => node.get(key),
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Node::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn entries(&self) -> Option<&[(String, Node)]> {
        match self {
            Node::Map(entries) => Some(entries),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Node::Null => "null".into(),
            Node::Bool(b) => b.to_string(),
            Node::Number(v) => format_number(*v),
            Node::String(s) => s.clone(),
            Node::List(items) => format!("list[{}]", items.len()),
            Node::Map(entries) => format!("map{{{}}}", entries.len()),
        }
    }
}

fn key_string(key: serde_yaml::Value) -> String {
    use serde_yaml::Value;
    match key {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s,
        Value::Tagged(t) => key_string(t.value),
        other => serde_yaml::to_string(&other)
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingKind {
    ValueMismatch,
    MissingKey,
    ListLength,
    OrderViolation,
    OffsetViolation,
    DependencyViolation,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::ValueMismatch => "value-mismatch",
            FindingKind::MissingKey => "missing-key",
            FindingKind::ListLength => "list-length",
            FindingKind::OrderViolation => "order-violation",
            FindingKind::OffsetViolation => "offset-violation",
            FindingKind::DependencyViolation => "dependency-violation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    pub path: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} expected={} actual={}",
            self.kind, self.path, self.expected, self.actual
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, kind: FindingKind, path: String, expected: String, actual: String) {
        self.findings.push(Finding {
            kind,
            path,
            expected,
            actual,
        });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
    }

    /// One finding per line.
    pub fn render(&self) -> String {
        self.findings.iter().map(|f| format!("{f}\n")).collect()
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: f64,
    end: f64,
}

fn span_map<'a>(trace: &'a Node, name: &str) -> Result<Vec<(&'a str, Span)>, ValidationError> {
    let node = trace
        .get(name)
        .ok_or_else(|| ValidationError::Shape(format!("trace.{name} is missing")))?;
    let entries = match node {
        Node::Null => return Ok(Vec::new()),
        Node::Map(entries) => entries,
        _ => {
            return Err(ValidationError::Shape(format!(
                "trace.{name} is not a mapping"
            )))
        }
    };
    entries
        .iter()
        .map(|(key, value)| {
            let num = |field: &str| {
                value.get(field).and_then(Node::as_f64).ok_or_else(|| {
                    ValidationError::Shape(format!("trace.{name}.{key}.{field} is not a number"))
                })
            };
            Ok((
                key.as_str(),
                Span {
                    start: num("start")?,
                    end: num("end")?,
                },
            ))
        })
        .collect()
}

/// Checks every task's total interval against its own read, compute and
/// write entries, and that no consumer starts before its producer ends.
pub fn validate_offsets(text: &str) -> Result<ValidationReport, ValidationError> {
    let root = Node::parse(text)?;
    let trace = root
        .get("trace")
        .ok_or_else(|| ValidationError::Shape("no trace section".into()))?;
    let totals = span_map(trace, "exec_name_total_offsets")?;
    let compute: BTreeMap<&str, Span> = span_map(trace, "exec_name_compute_offsets")?
        .into_iter()
        .collect();
    let reads = span_map(trace, "comm_name_read_offsets")?;
    let writes = span_map(trace, "comm_name_write_offsets")?;

    let mut report = ValidationReport::default();
    let longest = |items: &[(&str, Span)], task: &str, consumer_side: bool| {
        items
            .iter()
            .filter(|(key, _)| {
                key.split_once("->")
                    .is_some_and(|(p, c)| if consumer_side { c == task } else { p == task })
            })
            .map(|(_, s)| s.end - s.start)
            .fold(0.0f64, f64::max)
    };

    for (task, total) in &totals {
        let Some(c) = compute.get(task) else {
            report.push(
                FindingKind::MissingKey,
                format!("trace.exec_name_compute_offsets.{task}"),
                "present".into(),
                "absent".into(),
            );
            continue;
        };
        let dur = longest(&reads, task, true) + (c.end - c.start) + longest(&writes, task, false);
        let want = total.start + dur;
        if (total.end - want).abs() > TOLERANCE {
            report.push(
                FindingKind::OffsetViolation,
                format!("trace.exec_name_total_offsets.{task}.end"),
                format_number(want),
                format_number(total.end),
            );
        }
    }

    let total_of: BTreeMap<&str, Span> = totals.iter().copied().collect();
    let mut edges: Vec<(&str, &str)> = reads
        .iter()
        .chain(writes.iter())
        .filter_map(|(key, _)| key.split_once("->"))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    for (producer, consumer) in edges {
        if let (Some(p), Some(c)) = (total_of.get(producer), total_of.get(consumer)) {
            if c.start < p.end - TOLERANCE {
                report.push(
                    FindingKind::DependencyViolation,
                    format!("trace.exec_name_total_offsets.{consumer}.start"),
                    format!(">={}", format_number(p.end)),
                    format_number(c.start),
                );
            }
        }
    }
    Ok(report)
}

fn compare_node(expected: &Node, actual: &Node, path: &str, report: &mut ValidationReport) {
    match (expected, actual) {
        (Node::Null, _) => {}
        (Node::Map(want), Node::Map(_)) => {
            for (key, value) in want {
                let child = join(path, key);
                match actual.get(key) {
                    Some(got) => compare_node(value, got, &child, report),
                    None => report.push(
                        FindingKind::MissingKey,
                        child,
                        "present".into(),
                        "absent".into(),
                    ),
                }
            }
        }
        (Node::List(want), Node::List(got)) => {
            if want.len() != got.len() {
                report.push(
                    FindingKind::ListLength,
                    path.to_string(),
                    want.len().to_string(),
                    got.len().to_string(),
                );
            }
            for (i, (w, g)) in want.iter().zip(got).enumerate() {
                compare_node(w, g, &join(path, &i.to_string()), report);
            }
        }
        (Node::Number(w), Node::Number(g)) => {
            if (w - g).abs() > TOLERANCE {
                report.push(
                    FindingKind::ValueMismatch,
                    path.to_string(),
                    format_number(*w),
                    format_number(*g),
                );
            }
        }
        (w, g) if w == g => {}
        (w, g) => report.push(
            FindingKind::ValueMismatch,
            path.to_string(),
            w.describe(),
            g.describe(),
        ),
    }
}

/// Treats `expected_text` as a subset pattern of `output_text`. For each
/// path in `check_order`, the expected keys must appear in the same
/// relative order in the output.
pub fn compare_expected(
    output_text: &str,
    expected_text: &str,
    check_order: &[String],
) -> Result<ValidationReport, ValidationError> {
    let output = Node::parse(output_text)?;
    let expected = Node::parse(expected_text)?;
    let mut report = ValidationReport::default();
    compare_node(&expected, &output, "", &mut report);

    for path in check_order {
        let (Some(want), Some(got)) = (
            expected.at(path).and_then(Node::entries),
            output.at(path).and_then(Node::entries),
        ) else {
            continue;
        };
        let want_keys: Vec<&str> = want.iter().map(|(k, _)| k.as_str()).collect();
        let seen: Vec<&str> = got
            .iter()
            .map(|(k, _)| k.as_str())
            .filter(|k| want_keys.contains(k))
            .collect();
        let present: Vec<&str> = want_keys
            .iter()
            .copied()
            .filter(|k| seen.contains(k))
            .collect();
        if present != seen {
            report.push(
                FindingKind::OrderViolation,
                path.clone(),
                format!("[{}]", present.join(", ")),
                format!("[{}]", seen.join(", ")),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOCALITY_TRACE: &str = "\
trace:
  comm_name_read_offsets:
    Task_2->Task_3: {start: 70, end: 80, payload: 10}
    Task_2->Task_4: {start: 70, end: 90, payload: 20}
    Task_1->Task_2: {start: 30, end: 40, payload: 10}
    Task_1->Task_5: {start: 30, end: 50, payload: 20}

  comm_name_write_offsets:
    Task_2->Task_4: {start: 50, end: 70, payload: 20}
    Task_2->Task_3: {start: 50, end: 60, payload: 10}
    Task_1->Task_5: {start: 10, end: 30, payload: 20}
    Task_1->Task_2: {start: 10, end: 20, payload: 10}

  exec_name_compute_offsets:
    Task_3: {start: 80, end: 90, payload: 10}
    Task_4: {start: 90, end: 100, payload: 10}
    Task_2: {start: 40, end: 50, payload: 10}
    Task_5: {start: 50, end: 60, payload: 10}
    Task_1: {start: 0, end: 10, payload: 10}

  exec_name_total_offsets:
    Task_3: {start: 70, end: 90, payload: 10}
    Task_4: {start: 70, end: 100, payload: 10}
    Task_2: {start: 30, end: 70, payload: 10}
    Task_5: {start: 30, end: 60, payload: 10}
    Task_1: {start: 0, end: 30, payload: 10}
";

    const ORDER_PATTERN: &str = "\
trace:
  exec_name_total_offsets:
    Task_4:
    Task_3:
    Task_5:
    Task_2:
    Task_1:
";

    fn order() -> Vec<String> {
        vec![DEFAULT_ORDER_PATH.to_string()]
    }

    #[test]
    fn offsets_of_sample_trace_pass() {
        assert!(validate_offsets(LOCALITY_TRACE).unwrap().passed());
    }

    #[test]
    fn edited_end_is_an_offset_violation() {
        let bad =
            LOCALITY_TRACE.replace("Task_3: {start: 70, end: 90", "Task_3: {start: 70, end: 91");
        let report = validate_offsets(&bad).unwrap();
        assert_eq!(report.findings.len(), 1, "{}", report.render());
        assert_eq!(report.findings[0].kind, FindingKind::OffsetViolation);
        assert_eq!(
            report.findings[0].path,
            "trace.exec_name_total_offsets.Task_3.end"
        );
        assert_eq!(
            report.findings[0].to_string(),
            "offset-violation trace.exec_name_total_offsets.Task_3.end expected=90 actual=91"
        );
    }

    #[test]
    fn early_consumer_is_a_dependency_violation() {
        // shift Task_5 wholesale so its own phases stay consistent
        let bad = LOCALITY_TRACE
            .replace(
                "Task_1->Task_5: {start: 30, end: 50",
                "Task_1->Task_5: {start: 20, end: 40",
            )
            .replace("Task_5: {start: 50, end: 60", "Task_5: {start: 40, end: 50")
            .replace("Task_5: {start: 30, end: 60", "Task_5: {start: 20, end: 50");
        let report = validate_offsets(&bad).unwrap();
        assert_eq!(report.findings.len(), 1, "{}", report.render());
        assert_eq!(report.findings[0].kind, FindingKind::DependencyViolation);
        assert_eq!(
            report.findings[0].path,
            "trace.exec_name_total_offsets.Task_5.start"
        );
    }

    #[test]
    fn malformed_traces_are_errors() {
        assert!(matches!(
            validate_offsets("a: [1"),
            Err(ValidationError::Yaml(_))
        ));
        assert!(matches!(
            validate_offsets("user: {}"),
            Err(ValidationError::Shape(_))
        ));
        let no_start = "trace:\n  exec_name_total_offsets:\n    A: {end: 1}\n  exec_name_compute_offsets: {}\n  comm_name_read_offsets: {}\n  comm_name_write_offsets: {}\n";
        assert!(matches!(
            validate_offsets(no_start),
            Err(ValidationError::Shape(_))
        ));
    }

    #[test]
    fn existence_pattern_with_order() {
        // T3 is listed before T4 here, the pattern wants T4 first
        let report = compare_expected(LOCALITY_TRACE, ORDER_PATTERN, &order()).unwrap();
        assert_eq!(report.findings.len(), 1);
        assert_eq!(report.findings[0].kind, FindingKind::OrderViolation);

        let reordered = "\
trace:
  exec_name_total_offsets:
    Task_4: {start: 3, end: 4}
    Task_3: {start: 2, end: 3}
    Task_5: {start: 1, end: 2}
    Task_2: {start: 1, end: 2}
    Task_1: {start: 0, end: 1}
";
        assert!(compare_expected(reordered, ORDER_PATTERN, &order())
            .unwrap()
            .passed());
        assert!(compare_expected(reordered, ORDER_PATTERN, &[])
            .unwrap()
            .passed());
    }

    #[test]
    fn off_by_one_value_mismatch() {
        let output = "runtime:\n  core_availability:\n    0: {avail_until: 12}\n";
        let expected = "runtime:\n  core_availability:\n    0: {avail_until: 13}\n";
        let report = compare_expected(output, expected, &order()).unwrap();
        assert_eq!(
            report.render(),
            "value-mismatch runtime.core_availability.0.avail_until expected=13 actual=12\n"
        );
    }

    #[test]
    fn missing_keys_and_list_lengths() {
        let output = "a: {b: [1, 2, 3]}\n";
        let report = compare_expected(output, "a: {b: [1, 2], c: x}\n", &[]).unwrap();
        let kinds: Vec<FindingKind> = report.findings.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            vec![FindingKind::ListLength, FindingKind::MissingKey]
        );
        assert_eq!(report.findings[1].path, "a.c");

        let report = compare_expected(output, "a: {b: [1, 5, 3]}\n", &[]).unwrap();
        assert_eq!(report.findings[0].path, "a.b.1");
        let report = compare_expected(output, "a: 4\n", &[]).unwrap();
        assert_eq!(report.findings[0].kind, FindingKind::ValueMismatch);
    }

    #[test]
    fn compare_is_reflexive_and_tolerant() {
        assert!(compare_expected(LOCALITY_TRACE, LOCALITY_TRACE, &order())
            .unwrap()
            .passed());
        let close = LOCALITY_TRACE.replace("end: 100", "end: 100.0000001");
        assert!(compare_expected(&close, LOCALITY_TRACE, &order())
            .unwrap()
            .passed());
    }

    #[test]
    fn node_paths() {
        let n = Node::parse("a:\n  - [1, 2]\n  - [3, 4]\n7: x\n").unwrap();
        assert_eq!(n.at("a.1.0").and_then(Node::as_f64), Some(3.0));
        assert_eq!(n.at("7"), Some(&Node::String("x".into())));
        assert!(n.at("a.9").is_none());
    }
}
