//! Grammar-aware fuzzing and metamorphic testing for regular-expression
//! engines.
//!
//! The crate is organised around the campaign pipeline:
//!
//! * [`ast`] parses, prints, rewrites and randomly generates patterns.
//! * [`nfa`] compiles anchor-free patterns to Thompson automata and derives
//!   matching and non-matching input strings that cover every edge.
//! * [`engine`] abstracts the engine under test: a built-in backtracking
//!   matcher (with optional injected faults) and a subprocess adapter.
//! * [`oracle`] holds the metamorphic relations and the driver that checks
//!   one engine against itself.
//! * [`fuzz`] is the coverage-guided loop: subtree pool, mutators, probes.
//! * [`report`] turns findings into deduplicated, minimized JSONL records.

pub mod ast;
pub mod engine;
pub mod fuzz;
pub mod nfa;
pub mod oracle;
pub mod report;

pub use ast::{parse, parse_str, serialize, Node, NodeKind, NodePath, RegexAst};
pub use engine::{inject_fault, BuiltinEngine, Engine, EngineVerdict, FaultId, MatchResult};
pub use fuzz::{fuzz_loop, CampaignStats, CoverageMap, FuzzConfig, FuzzMode, SeedCorpus, SubtreePool};
pub use oracle::{run_mt, MtFinding, RelationId};
pub use report::{BugKind, BugReport, Reporter};
