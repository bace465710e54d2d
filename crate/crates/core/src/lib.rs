//! Deterministic simulator for scientific workflows on NUMA machines.
//!
//! A workflow is a DAG of tasks (FLOP payloads) connected by data items
//! (byte payloads). A scheduler picks `(task, core)` pairs through a
//! `has_next`/`next` contract; the engine executes each task as a
//! read/compute/write sequence on a virtual clock under first-touch memory
//! placement, and emits a YAML execution trace that the validators in
//! [`validation`] can check.
//!
//! ```
//! use numasched::{dot, engine, platform::Platform, scheduling};
//!
//! let graph = dot::parse_workflow_dot(
//!     "strict digraph { root [size=1]; end [size=1]; a [size=10]; root -> a [size=1]; a -> end [size=1]; }",
//! )
//! .unwrap()
//! .strip_boundary();
//! let platform = Platform::uniform(&[0], 1e6, 1.0, 0.0, 1.0).unwrap();
//! let mut scheduler = scheduling::MinMinScheduler::new(&graph);
//! let outcome = engine::simulate(&graph, &platform, &mut scheduler).unwrap();
//! assert_eq!(outcome.makespan(), 10.0);
//! ```

pub mod cli;
pub mod config;
pub mod dot;
pub mod engine;
pub mod platform;
pub mod runlog;
pub mod scheduling;
pub mod trace;
pub mod validation;
pub mod workflow;

pub use engine::{run, simulate, RunOutput, SimError, SimOutcome};
pub use workflow::{ItemId, TaskId, WorkflowGraph};

/// Core identifier, bit position in the availability mask.
pub type CoreId = usize;
/// NUMA node identifier, also names the node's memory region.
pub type NumaId = usize;
