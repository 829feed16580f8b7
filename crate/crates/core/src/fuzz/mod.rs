//! The coverage-guided campaign: coverage probes, the context-indexed
//! subtree pool, mutators, seed scheduling and the loop tying them to the
//! string generator, the engine and the oracle.

mod campaign;
mod coverage;
mod mutate;
mod pool;
mod queue;

pub use campaign::*;
pub use coverage::{bucket, edge_id, probe_builtin, probe_external, CoverageMap};
pub use mutate::{mutate_bytes, mutate_grammar, mutate_type_only, FALLBACK_BUDGET, MAX_MUTANT_NODES};
pub use pool::{SubtreePool, BUCKET_CAP, MAX_SUBTREE_NODES};
pub use queue::{Seed, SeedQueue, NEW_COVERAGE_ENERGY};
