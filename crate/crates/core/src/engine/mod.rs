//! The engine under test.
//!
//! [`BuiltinEngine`] is a leftmost-first backtracking matcher that doubles
//! as the reference and, with a [`FaultId`], as a deliberately broken
//! target. [`ExternalEngine`] drives any program that speaks the
//! line-delimited JSON protocol in [`protocol`].

mod builtin;
mod external;
pub mod protocol;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use builtin::{BuiltinEngine, Program, DEFAULT_STEP_BUDGET};
pub use external::{read_counter_file, spawn_external, ExternalEngine, DEFAULT_REQUEST_TIMEOUT};

/// Number of hit counters in a coverage buffer.
pub const COVERAGE_SLOTS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    /// Leftmost match, end exclusive.
    pub span: Option<(usize, usize)>,
    pub fullmatch: bool,
}

impl MatchResult {
    pub const NONE: MatchResult = MatchResult { matched: false, span: None, fullmatch: false };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub pattern: Vec<u8>,
    pub input: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashInfo {
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub sanitizer_report: Option<String>,
    pub last_request: Request,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineVerdict {
    Ok(MatchResult),
    CompileError(String),
    Crash(CrashInfo),
    Timeout,
}

impl EngineVerdict {
    pub fn ok(&self) -> Option<&MatchResult> {
        match self {
            EngineVerdict::Ok(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("cannot start engine: {0}")]
    Spawn(String),
    #[error("engine failed the startup handshake: {0}")]
    Handshake(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fault {0:?} (expected one of ALT_FIRST_ONLY, STAR_DROP_LAST, CLASS_OFF_BY_ONE, EMPTY_LOOP_SKIP)")]
pub struct UnknownFault(pub String);

/// Deviations that can be compiled into the built-in engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultId {
    /// An alternation that is the body of a quantifier only tries its first
    /// branch.
    AltFirstOnly,
    /// A greedy star over a single byte matcher gives back its last
    /// iteration before anything else is tried.
    StarDropLast,
    /// Class ranges exclude their upper bound.
    ClassOffByOne,
    /// A star whose body can match empty runs its body at most once.
    EmptyLoopSkip,
}

impl FaultId {
    pub const ALL: [FaultId; 4] =
        [FaultId::AltFirstOnly, FaultId::StarDropLast, FaultId::ClassOffByOne, FaultId::EmptyLoopSkip];

    pub fn name(self) -> &'static str {
        match self {
            FaultId::AltFirstOnly => "ALT_FIRST_ONLY",
            FaultId::StarDropLast => "STAR_DROP_LAST",
            FaultId::ClassOffByOne => "CLASS_OFF_BY_ONE",
            FaultId::EmptyLoopSkip => "EMPTY_LOOP_SKIP",
        }
    }
}

impl fmt::Display for FaultId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultId {
    type Err = UnknownFault;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultId::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownFault(s.to_string()))
    }
}

/// A built-in engine with the given deviation compiled in.
pub fn inject_fault(fault: FaultId) -> BuiltinEngine {
    BuiltinEngine::with_fault(Some(fault))
}

pub trait Engine: Send {
    /// Runs a search and a full-match attempt of `pattern` on `input`.
    ///
    /// Errors are reserved for infrastructure failures; everything the
    /// engine itself does is a verdict.
    fn search(&mut self, pattern: &[u8], input: &[u8]) -> Result<EngineVerdict, EngineError>;

    /// Hit counters accumulated since the last call, if the engine reports
    /// coverage. The buffer has [`COVERAGE_SLOTS`] entries.
    fn take_coverage(&mut self) -> Option<Vec<u8>>;

    fn label(&self) -> String;
}

impl<E: Engine + ?Sized> Engine for Box<E> {
    fn search(&mut self, pattern: &[u8], input: &[u8]) -> Result<EngineVerdict, EngineError> {
        (**self).search(pattern, input)
    }

    fn take_coverage(&mut self) -> Option<Vec<u8>> {
        (**self).take_coverage()
    }

    fn label(&self) -> String {
        (**self).label()
    }
}
