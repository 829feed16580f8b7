//! Bug reports: the persisted form of findings, deduplication, JSONL
//! storage and minimization.

mod minimize;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ast::{parse, serialize};
use crate::engine::{protocol, CrashInfo, MatchResult};
use crate::oracle::{DialectGap, MatchMode, MtFinding, RelationId};

pub use minimize::{minimize, reproduces, MinimizeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    MtViolation,
    Crash,
    Timeout,
    DialectGap,
}

impl BugKind {
    pub fn name(self) -> &'static str {
        match self {
            BugKind::MtViolation => "mt_violation",
            BugKind::Crash => "crash",
            BugKind::Timeout => "timeout",
            BugKind::DialectGap => "dialect_gap",
        }
    }

    /// Dialect gaps are diagnostics, not bugs.
    pub fn is_bug(self) -> bool {
        self != BugKind::DialectGap
    }
}

impl fmt::Display for BugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Process-level details of a crash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashDetails {
    #[serde(deserialize_with = "Option::deserialize")]
    pub exit_code: Option<i32>,
    #[serde(deserialize_with = "Option::deserialize")]
    pub signal: Option<i32>,
    #[serde(deserialize_with = "Option::deserialize")]
    pub sanitizer_report: Option<String>,
}

impl From<&CrashInfo> for CrashDetails {
    fn from(c: &CrashInfo) -> Self {
        CrashDetails { exit_code: c.exit_code, signal: c.signal, sanitizer_report: c.sanitizer_report.clone() }
    }
}

fn ser_b64<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&protocol::encode(bytes))
}

fn de_b64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let s = String::deserialize(d)?;
    protocol::decode(&s).map_err(serde::de::Error::custom)
}

fn ser_b64_opt<S: Serializer>(bytes: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
    match bytes {
        Some(b) => ser_b64(b, s),
        None => s.serialize_none(),
    }
}

fn de_b64_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
    Option::<String>::deserialize(d)?
        .map(|s| protocol::decode(&s).map_err(serde::de::Error::custom))
        .transpose()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub kind: BugKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationId>,
    /// Pattern text. Byte-level mutants that are not UTF-8 are stored
    /// lossily here and exactly in `pattern_b64`.
    pub pattern: String,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_b64_opt",
        deserialize_with = "de_b64_opt"
    )]
    pub pattern_b64: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(rename = "input_b64", serialize_with = "ser_b64", deserialize_with = "de_b64")]
    pub input: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MatchMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<MatchResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_result: Option<MatchResult>,
    #[serde(flatten, default)]
    pub crash: Option<CrashDetails>,
    /// Compiler message of a dialect gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub engine: String,
    pub iteration: u64,
    #[serde(default)]
    pub elapsed_ms: u64,
    pub minimized: bool,
    pub dedup_key: String,
}

impl BugReport {
    fn blank(kind: BugKind, pattern: &[u8], input: &[u8], engine: &str) -> Self {
        let (pattern, pattern_b64) = match std::str::from_utf8(pattern) {
            Ok(s) => (s.to_string(), None),
            Err(_) => (String::from_utf8_lossy(pattern).into_owned(), Some(pattern.to_vec())),
        };
        BugReport {
            kind,
            relation: None,
            pattern,
            pattern_b64,
            variant: None,
            input: input.to_vec(),
            mode: None,
            base: None,
            variant_result: None,
            crash: None,
            message: None,
            engine: engine.to_string(),
            iteration: 0,
            elapsed_ms: 0,
            minimized: false,
            dedup_key: String::new(),
        }
    }

    pub fn from_finding(f: &MtFinding, engine: &str) -> Self {
        let mut r = BugReport::blank(BugKind::MtViolation, f.base_pattern.as_bytes(), &f.input, engine);
        r.relation = Some(f.relation);
        r.variant = Some(f.variant_pattern.clone());
        r.mode = Some(f.mode);
        r.base = Some(f.base_result);
        r.variant_result = Some(f.variant_result);
        r.refresh_key();
        r
    }

    pub fn from_crash(info: &CrashInfo, engine: &str) -> Self {
        let req = &info.last_request;
        let mut r = BugReport::blank(BugKind::Crash, &req.pattern, &req.input, engine);
        r.crash = Some(CrashDetails::from(info));
        r.refresh_key();
        r
    }

    pub fn timeout(pattern: &[u8], input: &[u8], engine: &str) -> Self {
        let mut r = BugReport::blank(BugKind::Timeout, pattern, input, engine);
        r.refresh_key();
        r
    }

    pub fn from_dialect_gap(base_pattern: &str, gap: &DialectGap, engine: &str) -> Self {
        let mut r = BugReport::blank(BugKind::DialectGap, base_pattern.as_bytes(), b"", engine);
        r.relation = Some(gap.relation);
        r.variant = Some(gap.variant_pattern.clone());
        r.message = Some(gap.message.clone());
        r.refresh_key();
        r
    }

    pub fn at(mut self, iteration: u64, elapsed_ms: u64) -> Self {
        self.iteration = iteration;
        self.elapsed_ms = elapsed_ms;
        self
    }

    /// The exact pattern bytes.
    pub fn pattern_bytes(&self) -> Vec<u8> {
        self.pattern_b64.clone().unwrap_or_else(|| self.pattern.as_bytes().to_vec())
    }

    pub fn set_pattern_bytes(&mut self, bytes: &[u8]) {
        let b = BugReport::blank(self.kind, bytes, b"", "");
        self.pattern = b.pattern;
        self.pattern_b64 = b.pattern_b64;
    }

    /// Relation id for MT findings and dialect gaps, the signal or exit
    /// status for crashes.
    pub fn tag(&self) -> String {
        match self.kind {
            BugKind::MtViolation | BugKind::DialectGap => {
                self.relation.map_or_else(|| "-".to_string(), |r| r.name().to_string())
            }
            BugKind::Crash => match &self.crash {
                Some(CrashDetails { signal: Some(s), .. }) => format!("signal{s}"),
                Some(CrashDetails { exit_code: Some(c), .. }) => format!("exit{c}"),
                _ => "unknown".to_string(),
            },
            BugKind::Timeout => "-".to_string(),
        }
    }

    /// Canonical text of the pattern: re-serialized when it parses, raw
    /// otherwise.
    pub fn canonical_pattern(&self) -> String {
        match parse(&self.pattern_bytes()) {
            Ok(ast) => serialize(&ast),
            Err(_) => self.pattern.clone(),
        }
    }

    pub fn compute_key(&self) -> String {
        format!("{}/{}/{}", self.kind, self.tag(), self.canonical_pattern())
    }

    pub fn refresh_key(&mut self) {
        self.dedup_key = self.compute_key();
    }
}

/// First report per key, in first-seen order, with how often each key
/// occurred.
pub fn dedup(reports: impl IntoIterator<Item = BugReport>) -> Vec<(BugReport, usize)> {
    let mut out: Vec<(BugReport, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for r in reports {
        match index.get(&r.dedup_key) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(r.dedup_key.clone(), out.len());
                out.push((r, 1));
            }
        }
    }
    out
}

/// Collects reports as a campaign produces them, keeping one per key.
#[derive(Debug, Clone, Default)]
pub struct Reporter {
    reports: Vec<BugReport>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Reporter {
    pub fn new() -> Self {
        Reporter::default()
    }

    /// Records a report; true when its key had not been seen.
    pub fn record(&mut self, report: BugReport) -> bool {
        if let Some(&i) = self.index.get(&report.dedup_key) {
            self.counts[i] += 1;
            return false;
        }
        self.index.insert(report.dedup_key.clone(), self.reports.len());
        self.reports.push(report);
        self.counts.push(1);
        true
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn reports(&self) -> &[BugReport] {
        &self.reports
    }

    pub fn count_of(&self, key: &str) -> usize {
        self.index.get(key).map_or(0, |&i| self.counts[i])
    }

    /// Distinct reports that count as bugs.
    pub fn bug_count(&self) -> usize {
        self.reports.iter().filter(|r| r.kind.is_bug()).count()
    }

    pub fn into_reports(self) -> Vec<BugReport> {
        self.reports
    }
}

/// A line of a JSONL file that did not hold a report.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

pub fn write_jsonl(reports: &[BugReport], path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads every well-formed line; malformed lines are returned as errors
/// with their 1-based line number. Blank lines are skipped.
pub fn read_jsonl(path: &Path) -> io::Result<(Vec<BugReport>, Vec<LineError>)> {
    let f = io::BufReader::new(fs::File::open(path)?);
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => reports.push(r),
            Err(e) => errors.push(LineError { line: i + 1, message: e.to_string() }),
        }
    }
    Ok((reports, errors))
}
