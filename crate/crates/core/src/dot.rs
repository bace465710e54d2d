//! Reader and writer for the restricted DOT dialect used for workflows.
//!
//! Accepted input is a `strict digraph` (the `strict` keyword is optional)
//! whose vertices and edges each carry a `size` attribute: FLOPs on
//! vertices, bytes on edges. `//` and `/* */` comments are ignored. The
//! vertices `root` and `end` are mandatory and are kept in the returned
//! graph; call [`WorkflowGraph::strip_boundary`] before simulating.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::workflow::{GraphError, TaskSpec, WorkflowGraph, END, ROOT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DotError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: vertex `{name}` declared twice (first on line {first})")]
    DuplicateVertex {
        line: usize,
        first: usize,
        name: String,
    },
    #[error("line {line}: `{element}` has no size attribute")]
    MissingSize { line: usize, element: String },
    #[error("line {line}: invalid size `{value}` on `{element}`")]
    InvalidSize {
        line: usize,
        element: String,
        value: String,
    },
    #[error("line {line}: edge endpoint `{name}` is not a declared vertex")]
    UnknownVertex { line: usize, name: String },
    #[error("line {line}: duplicate edge `{producer}->{consumer}`")]
    DuplicateEdge {
        line: usize,
        producer: String,
        consumer: String,
    },
    #[error("missing boundary vertex `{0}`")]
    MissingBoundary(&'static str),
    #[error("line {line}: cycle detected: {}", .path.join(" -> "))]
    Cycle { line: usize, path: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Equals,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '+' | '-')
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, DotError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                let start = line;
                i += 2;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(DotError::Syntax {
                                line: start,
                                message: "unterminated block comment".into(),
                            })
                        }
                        Some('*') if chars.get(i + 1) == Some(&'/') => {
                            i += 2;
                            break;
                        }
                        Some('\n') => line += 1,
                        _ => {}
                    }
                    i += 1;
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, line));
                i += 2;
            }
            '{' | '}' | '[' | ']' | ';' | ',' | '=' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    _ => Tok::Equals,
                };
                out.push((tok, line));
                i += 1;
            }
            '"' => {
                let start = line;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(DotError::Syntax {
                                line: start,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Quoted(s), start));
            }
            c if is_word_char(c) => {
                let mut s = String::new();
                while i < chars.len() && is_word_char(chars[i]) {
                    if chars[i] == '-' && chars.get(i + 1) == Some(&'>') {
                        break;
                    }
                    s.push(chars[i]);
                    i += 1;
                }
                out.push((Tok::Word(s), line));
            }
            other => {
                return Err(DotError::Syntax {
                    line,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

struct Attrs {
    size: Option<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |(_, l)| *l)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, DotError> {
        Err(DotError::Syntax {
            line: self.line(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), DotError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn id(&mut self) -> Result<String, DotError> {
        match self.peek() {
            Some(Tok::Word(_)) | Some(Tok::Quoted(_)) => match self.bump() {
                Some(Tok::Word(s)) | Some(Tok::Quoted(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.error("expected identifier"),
        }
    }

    fn attrs(&mut self) -> Result<Attrs, DotError> {
        let mut attrs = Attrs { size: None };
        while self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            loop {
                match self.peek() {
                    Some(Tok::RBracket) => {
                        self.pos += 1;
                        break;
                    }
                    Some(Tok::Comma) | Some(Tok::Semi) => self.pos += 1,
                    _ => {
                        let key = self.id()?;
                        self.expect(Tok::Equals, "`=` in attribute list")?;
                        let value = self.id()?;
                        if key == "size" {
                            attrs.size = Some(value);
                        }
                    }
                }
            }
        }
        Ok(attrs)
    }
}

struct VertexDecl {
    name: String,
    size: f64,
    line: usize,
}

struct EdgeDecl {
    producer: String,
    consumer: String,
    size: f64,
    line: usize,
}

fn parse_size(raw: Option<String>, element: &str, line: usize) -> Result<f64, DotError> {
    let raw = raw.ok_or_else(|| DotError::MissingSize {
        line,
        element: element.to_string(),
    })?;
    let invalid = || DotError::InvalidSize {
        line,
        element: element.to_string(),
        value: raw.clone(),
    };
    let value: f64 = raw.parse().map_err(|_| invalid())?;
    if !value.is_finite() || value < 0.0 {
        return Err(invalid());
    }
    Ok(value)
}

fn is_boundary(name: &str) -> bool {
    name == ROOT || name == END
}

/// Parses a workflow in the DOT dialect, boundary vertices included.
pub fn parse_workflow_dot(text: &str) -> Result<WorkflowGraph, DotError> {
    let toks = lex(text)?;
    let last_line = toks.last().map_or(1, |(_, l)| *l);
    let mut p = Parser {
        toks,
        pos: 0,
        last_line,
    };

    if matches!(p.peek(), Some(Tok::Word(w)) if w == "strict") {
        p.pos += 1;
    }
    match p.peek() {
        Some(Tok::Word(w)) if w == "digraph" => p.pos += 1,
        _ => return p.error("expected `digraph`"),
    }
    if matches!(p.peek(), Some(Tok::Word(_)) | Some(Tok::Quoted(_))) {
        p.pos += 1;
    }
    p.expect(Tok::LBrace, "`{`")?;

    let mut vertices: Vec<VertexDecl> = Vec::new();
    let mut edges: Vec<EdgeDecl> = Vec::new();
    loop {
        match p.peek() {
            None => return p.error("unexpected end of input, missing `}`"),
            Some(Tok::RBrace) => {
                p.pos += 1;
                break;
            }
            Some(Tok::Semi) => {
                p.pos += 1;
                continue;
            }
            _ => {}
        }
        let line = p.line();
        let first = p.id()?;
        if matches!(first.as_str(), "node" | "edge" | "graph" | "subgraph") {
            return p.error(format!("`{first}` statements are not supported"));
        }
        if p.peek() == Some(&Tok::Arrow) {
            p.pos += 1;
            let second = p.id()?;
            if p.peek() == Some(&Tok::Arrow) {
                return p.error("edge chains are not supported; declare one edge per statement");
            }
            let attrs = p.attrs()?;
            let element = format!("{first}->{second}");
            let size = parse_size(attrs.size, &element, line)?;
            if size == 0.0 && !is_boundary(&first) && !is_boundary(&second) {
                return Err(DotError::InvalidSize {
                    line,
                    element,
                    value: "0".into(),
                });
            }
            edges.push(EdgeDecl {
                producer: first,
                consumer: second,
                size,
                line,
            });
        } else if p.peek() == Some(&Tok::Equals) {
            // graph attribute such as `rankdir=LR`
            p.pos += 1;
            p.id()?;
        } else {
            let attrs = p.attrs()?;
            let size = parse_size(attrs.size, &first, line)?;
            if size == 0.0 && !is_boundary(&first) {
                return Err(DotError::InvalidSize {
                    line,
                    element: first,
                    value: "0".into(),
                });
            }
            vertices.push(VertexDecl {
                name: first,
                size,
                line,
            });
        }
    }
    if p.peek().is_some() {
        return p.error("unexpected content after closing `}`");
    }

    let mut declared: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &vertices {
        if let Some(&first) = declared.get(v.name.as_str()) {
            return Err(DotError::DuplicateVertex {
                line: v.line,
                first,
                name: v.name.clone(),
            });
        }
        declared.insert(&v.name, v.line);
    }
    for boundary in [ROOT, END] {
        if !declared.contains_key(boundary) {
            return Err(DotError::MissingBoundary(boundary));
        }
    }
    let mut edge_lines: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for e in &edges {
        for name in [&e.producer, &e.consumer] {
            if !declared.contains_key(name.as_str()) {
                return Err(DotError::UnknownVertex {
                    line: e.line,
                    name: name.clone(),
                });
            }
        }
        if edge_lines
            .insert((e.producer.as_str(), e.consumer.as_str()), e.line)
            .is_some()
        {
            return Err(DotError::DuplicateEdge {
                line: e.line,
                producer: e.producer.clone(),
                consumer: e.consumer.clone(),
            });
        }
    }

    let tasks = vertices
        .iter()
        .map(|v| TaskSpec {
            name: v.name.clone(),
            flops: v.size,
        })
        .collect();
    let edge_list = edges
        .iter()
        .map(|e| (e.producer.clone(), e.consumer.clone(), e.size))
        .collect();
    WorkflowGraph::new(tasks, edge_list).map_err(|err| match err {
        GraphError::Cycle(path) => {
            let line = path
                .windows(2)
                .filter_map(|w| edge_lines.get(&(w[0].as_str(), w[1].as_str())))
                .copied()
                .min()
                .unwrap_or(1);
            DotError::Cycle { line, path }
        }
        GraphError::SelfLoop(name) => DotError::Cycle {
            line: edge_lines
                .get(&(name.as_str(), name.as_str()))
                .copied()
                .unwrap_or(1),
            path: vec![name.clone(), name],
        },
        other => DotError::Syntax {
            line: 1,
            message: other.to_string(),
        },
    })
}

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '.')
        || matches!(
            name,
            "strict" | "digraph" | "graph" | "node" | "edge" | "subgraph"
        )
}

fn render_id(name: &str) -> String {
    if needs_quotes(name) {
        format!("\"{}\"", name.replace('"', "\\\""))
    } else {
        name.to_string()
    }
}

/// Writes a graph back in the dialect accepted by [`parse_workflow_dot`].
pub fn to_dot(graph: &WorkflowGraph) -> String {
    let mut out = String::from("strict digraph {\n");
    for task in graph.tasks() {
        let _ = writeln!(out, "    {} [size={}];", render_id(&task.name), task.flops);
    }
    if !graph.items().is_empty() {
        out.push('\n');
    }
    for item in graph.items() {
        let _ = writeln!(
            out,
            "    {} -> {} [size={}];",
            render_id(graph.name(item.producer)),
            render_id(graph.name(item.consumer)),
            item.bytes
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::ItemId;

    pub(crate) const FIVE_TASK_DOT: &str = r#"strict digraph {
    v1 [size=10000000];
    v2 [size=10000000];
    v3 [size=10000000];
    v4 [size=10000000];
    v5 [size=10000000];
    v6 [size=10000000];

    root [size=10];
    end [size=10];

    root -> v1 [size=10];

    v1 -> v2 [size=60000000];
    v1 -> v3 [size=50000000];
    v1 -> v4 [size=40000000];

    v2 -> v5 [size=30000000];
    v3 -> v5 [size=20000000];

    v4 -> v6 [size=10000000];

    v5 -> end [size=10];
    v6 -> end [size=10];
}
"#;

    const TEST4: &str = r#"strict digraph {
    root    [size=2]; // Ignored in processing.
    end     [size=2]; // Ignored in processing.

    Task_1  [size=10];
    Task_2  [size=10];
    Task_3  [size=10];

    root -> Task_1  [size=2]; // Edge ignored.
    root -> Task_2  [size=2]; // Edge ignored.

    Task_1 -> Task_3  [size=10];
    Task_2 -> Task_3  [size=20];

    Task_3 -> end   [size=2]; // Edge ignored.
}
"#;

    fn line_of(err: DotError) -> usize {
        match err {
            DotError::Syntax { line, .. }
            | DotError::DuplicateVertex { line, .. }
            | DotError::MissingSize { line, .. }
            | DotError::InvalidSize { line, .. }
            | DotError::UnknownVertex { line, .. }
            | DotError::DuplicateEdge { line, .. }
            | DotError::Cycle { line, .. } => line,
            DotError::MissingBoundary(_) => 0,
        }
    }

    #[test]
    fn parses_sample_workflow() {
        let g = parse_workflow_dot(FIVE_TASK_DOT).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.items().len(), 9);
        assert_eq!(g.task(g.task_id("v1").unwrap()).flops, 1e7);
        let v1v2 = g.item_ids().find(|i| g.item_key(*i) == "v1->v2").unwrap();
        assert_eq!(g.item(v1v2).bytes, 6e7);

        let s = g.strip_boundary();
        assert_eq!(s.len(), 6);
        assert_eq!(s.items().len(), 6);
    }

    #[test]
    fn parses_reduction_workflow_with_comments() {
        let g = parse_workflow_dot(TEST4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.items().len(), 5);
        let s = g.strip_boundary();
        assert_eq!(s.len(), 3);
        assert_eq!(s.items().len(), 2);
        assert_eq!(s.item_key(ItemId(1)), "Task_2->Task_3");
        assert_eq!(s.item(ItemId(1)).bytes, 20.0);
        assert_eq!(s.sources().len(), 2);

        let ranks = crate::workflow::level_order_ranks(&s);
        assert_eq!(ranks["Task_1"].0, 0);
        assert_eq!(ranks["Task_2"].0, 0);
        assert_eq!(ranks["Task_3"].0, 1);
    }

    #[test]
    fn minimal_boundary_graph() {
        let g = parse_workflow_dot(
            "strict digraph { root [size=1]; end [size=1]; root -> end [size=1]; }",
        )
        .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.items().len(), 1);
        let s = g.strip_boundary();
        assert!(s.is_empty());
        assert!(s.items().is_empty());
    }

    #[test]
    fn accepts_scientific_sizes_and_quoted_ids() {
        let g = parse_workflow_dot(
            "digraph wf { root [size=1]; end [size=1]; \"my task\" [size=1e+07, label=x]; root -> \"my task\" [size=1]; }",
        )
        .unwrap();
        assert_eq!(g.task(g.task_id("my task").unwrap()).flops, 1e7);
    }

    #[test]
    fn reports_errors_with_lines() {
        let missing_end = "strict digraph {\n root [size=1];\n}";
        assert_eq!(
            parse_workflow_dot(missing_end).unwrap_err(),
            DotError::MissingBoundary("end")
        );

        let dup =
            "strict digraph {\n root [size=1];\n end [size=1];\n a [size=1];\n a [size=2];\n}";
        let err = parse_workflow_dot(dup).unwrap_err();
        assert!(matches!(err, DotError::DuplicateVertex { .. }));
        assert_eq!(line_of(err), 5);

        let no_size = "strict digraph {\n root [size=1];\n end [size=1];\n a;\n}";
        let err = parse_workflow_dot(no_size).unwrap_err();
        assert!(matches!(err, DotError::MissingSize { .. }));
        assert_eq!(line_of(err), 4);

        let cycle = "strict digraph {\n root [size=1];\n end [size=1];\n a [size=1];\n b [size=1];\n a -> b [size=1];\n b -> a [size=1];\n}";
        let err = parse_workflow_dot(cycle).unwrap_err();
        assert!(matches!(err, DotError::Cycle { .. }));
        assert_eq!(line_of(err), 6);

        let bad = "strict digraph {\n root [size=1];\n end [size=1]\n a -> [size=1];\n}";
        let err = parse_workflow_dot(bad).unwrap_err();
        assert!(matches!(err, DotError::Syntax { .. }));
        assert_eq!(line_of(err), 4);

        let unknown = "strict digraph {\n root [size=1];\n end [size=1];\n root -> x [size=1];\n}";
        assert!(matches!(
            parse_workflow_dot(unknown).unwrap_err(),
            DotError::UnknownVertex { line: 4, .. }
        ));
    }

    #[test]
    fn rejects_zero_and_negative_sizes_off_boundary() {
        let zero = "strict digraph { root [size=0]; end [size=1]; a [size=0]; }";
        assert!(matches!(
            parse_workflow_dot(zero).unwrap_err(),
            DotError::InvalidSize { .. }
        ));
        let neg = "strict digraph { root [size=1]; end [size=1]; a [size=-3]; }";
        assert!(matches!(
            parse_workflow_dot(neg).unwrap_err(),
            DotError::InvalidSize { .. }
        ));
        let edge = "strict digraph { root [size=1]; end [size=1]; a [size=1]; b [size=1]; a -> b [size=0]; }";
        assert!(matches!(
            parse_workflow_dot(edge).unwrap_err(),
            DotError::InvalidSize { .. }
        ));
    }

    #[test]
    fn writer_output_parses_back() {
        let g = parse_workflow_dot(FIVE_TASK_DOT).unwrap();
        assert_eq!(parse_workflow_dot(&to_dot(&g)).unwrap(), g);
    }
}
