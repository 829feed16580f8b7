use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{parse, random_pattern, serialize, Node, RegexAst, DEFAULT_CONTEXT_DEPTH};
use crate::engine::{Engine, EngineError, EngineVerdict};
use crate::nfa::{compile_nfa, negative_strings, positive_strings, strip_anchors, GenLimits};
use crate::oracle::{run_mt, RelationId};
use crate::report::{minimize, BugKind, BugReport, MinimizeError, Reporter};

use super::coverage::CoverageMap;
use super::mutate::{mutate_bytes, mutate_grammar, mutate_type_only};
use super::pool::SubtreePool;
use super::queue::{SeedQueue, NEW_COVERAGE_ENERGY};

/// The 1,000-pattern sample corpus shipped with the crate.
pub const BUNDLED_SEEDS: &str = include_str!("../../data/sample_seeds.txt");

/// Random patterns used when the seed corpus is empty.
const BOOTSTRAP_SEEDS: usize = 8;
/// Patterns whose repeat-expanded size exceeds this only get trivial inputs.
const MAX_EXPANDED_NODES: u64 = 5000;
const INPUT_CACHE_CAP: usize = 4096;
const BYTE_CORPUS_CAP: usize = 4096;
const BYTE_MODE_CACHED_INPUTS: usize = 12;
const BYTE_MODE_RANDOM_INPUTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FuzzMode {
    /// Context-aware subtree substitution.
    Retest,
    /// Subtree substitution by node kind alone.
    TypeOnly,
    /// Byte-level edits of the serialized pattern.
    ByteNaive,
}

impl FuzzMode {
    pub const ALL: [FuzzMode; 3] = [FuzzMode::Retest, FuzzMode::TypeOnly, FuzzMode::ByteNaive];

    pub fn name(self) -> &'static str {
        match self {
            FuzzMode::Retest => "retest",
            FuzzMode::TypeOnly => "type-only",
            FuzzMode::ByteNaive => "byte-naive",
        }
    }
}

impl fmt::Display for FuzzMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode {0:?} (expected retest, type-only or byte-naive)")]
pub struct UnknownMode(pub String);

impl FromStr for FuzzMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FuzzMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| UnknownMode(s.to_string()))
    }
}

/// Source of the `elapsed_ms` values written to stats and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    Wall,
    /// Always zero, so that output depends on the configuration alone.
    Logical,
}

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub mode: FuzzMode,
    pub max_iterations: u64,
    pub wall_budget: Option<Duration>,
    pub rng_seed: u64,
    /// Per-mutant string limits; `max_strings` applies to positives and
    /// negatives separately.
    pub limits: GenLimits,
    pub context_depth: usize,
    pub relations_enabled: bool,
    pub clock: ClockMode,
    /// End the campaign once this many bug findings were made.
    pub stop_after_bugs: Option<usize>,
    /// Engine replays per finding spent on minimization; 0 disables it.
    pub minimize_budget: usize,
    pub snapshot_every: u64,
    pub workers: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            mode: FuzzMode::Retest,
            max_iterations: 1000,
            wall_budget: None,
            rng_seed: 0,
            limits: GenLimits { star_unroll: 2, max_string_len: 64, max_strings: 8 },
            context_depth: DEFAULT_CONTEXT_DEPTH,
            relations_enabled: true,
            clock: ClockMode::Wall,
            stop_after_bugs: None,
            minimize_budget: 256,
            snapshot_every: 64,
            workers: 1,
        }
    }
}

/// Parsed seed patterns plus how many lines were rejected.
#[derive(Debug, Clone, Default)]
pub struct SeedCorpus {
    pub patterns: Vec<RegexAst>,
    pub skipped: usize,
}

impl SeedCorpus {
    pub fn empty() -> Self {
        SeedCorpus::default()
    }

    /// One pattern per line; blank lines and lines starting with `#` are
    /// ignored, lines that fail to parse are counted in `skipped`.
    pub fn from_text(text: &str) -> Self {
        let mut c = SeedCorpus::default();
        for line in text.lines() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse(line.as_bytes()) {
                Ok(ast) => c.patterns.push(ast),
                Err(_) => c.skipped += 1,
            }
        }
        c
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(SeedCorpus::from_text(&fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        SeedCorpus::from_text(BUNDLED_SEEDS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageSnapshot {
    pub iteration: u64,
    pub elapsed_ms: u64,
    pub edges: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignStats {
    pub iterations: u64,
    pub coverage: Vec<CoverageSnapshot>,
    /// Raw finding counts before deduplication.
    pub bugs_by_kind: BTreeMap<BugKind, usize>,
    pub dialect_gaps: usize,
    pub mutants: u64,
    pub valid_mutants: u64,
    pub seeds_loaded: usize,
    pub seeds_skipped: usize,
    pub pool_size: usize,
    pub queue_len: usize,
}

impl CampaignStats {
    /// Share of mutants that parse.
    pub fn validity_rate(&self) -> f64 {
        if self.mutants == 0 {
            1.0
        } else {
            self.valid_mutants as f64 / self.mutants as f64
        }
    }

    pub fn bug_findings(&self) -> usize {
        self.bugs_by_kind.iter().filter(|(k, _)| k.is_bug()).map(|(_, n)| n).sum()
    }

    pub fn initial_edges(&self) -> usize {
        self.coverage.first().map_or(0, |s| s.edges)
    }

    pub fn final_edges(&self) -> usize {
        self.coverage.last().map_or(0, |s| s.edges)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,elapsed_ms,edges\n");
        for s in &self.coverage {
            out.push_str(&format!("{},{},{}\n", s.iteration, s.elapsed_ms, s.edges));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("worker thread panicked")]
    WorkerPanic,
}

fn expanded_size(n: &Node) -> u64 {
    let kids: u64 = n.children().iter().map(|c| expanded_size(c)).fold(0, u64::saturating_add);
    match n {
        Node::Repeat { min, max, .. } => {
            let copies = u64::from(max.unwrap_or(*min)).max(1) + 1;
            kids.saturating_mul(copies).saturating_add(1)
        }
        _ => kids.saturating_add(1),
    }
}

/// Edge-covering positives and near-miss negatives for one pattern.
pub fn generate_inputs<R: Rng + ?Sized>(ast: &RegexAst, limits: GenLimits, rng: &mut R) -> Vec<Vec<u8>> {
    if expanded_size(ast.root()) > MAX_EXPANDED_NODES {
        return vec![Vec::new(), b"a".to_vec()];
    }
    let kleene = if ast.is_kleene() { ast.clone() } else { strip_anchors(ast) };
    let nfa = compile_nfa(&kleene).expect("anchor-free pattern");
    let mut inputs = positive_strings(&nfa, limits);
    inputs.truncate(limits.max_strings);
    let negatives = negative_strings(ast, &inputs, rng, limits);
    inputs.extend(negatives);
    if inputs.is_empty() {
        inputs.push(Vec::new());
    }
    inputs
}

#[derive(Default)]
struct InputCache {
    items: VecDeque<Vec<u8>>,
    seen: HashSet<Vec<u8>>,
}

impl InputCache {
    fn add(&mut self, s: &[u8]) {
        if self.seen.contains(s) {
            return;
        }
        if self.items.len() >= INPUT_CACHE_CAP {
            if let Some(old) = self.items.pop_front() {
                self.seen.remove(&old);
            }
        }
        self.seen.insert(s.to_vec());
        self.items.push_back(s.to_vec());
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<u8>> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| self.items[rng.gen_range(0..self.items.len())].clone()).collect()
    }
}

struct Shared<'r> {
    coverage: CoverageMap,
    pool: SubtreePool,
    queue: SeedQueue,
    inputs: InputCache,
    byte_corpus: VecDeque<Vec<u8>>,
    reporter: &'r mut Reporter,
    /// Unminimized dedup key to the minimized report it produced.
    minimized: HashMap<String, BugReport>,
    stats: CampaignStats,
    done: u64,
    stop: bool,
}

impl Shared<'_> {
    fn snapshot(&mut self, elapsed_ms: u64) {
        let edges = self.coverage.len();
        if self.stats.coverage.last().is_some_and(|s| s.iteration == self.done) {
            return;
        }
        self.stats.coverage.push(CoverageSnapshot { iteration: self.done, elapsed_ms, edges });
    }

    fn push_byte_corpus(&mut self, b: Vec<u8>) {
        if self.byte_corpus.len() >= BYTE_CORPUS_CAP {
            self.byte_corpus.pop_front();
        }
        self.byte_corpus.push_back(b);
    }
}

/// Findings of one iteration, before minimization.
#[derive(Default)]
struct Outcome {
    reports: Vec<BugReport>,
    compiled: bool,
}

struct Worker<'e, E: ?Sized> {
    engine: &'e mut E,
    rng: ChaCha8Rng,
    cfg: FuzzConfig,
    start: Instant,
    label: String,
}

impl<E: Engine + ?Sized> Worker<'_, E> {
    fn elapsed_ms(&self) -> u64 {
        match self.cfg.clock {
            ClockMode::Wall => self.start.elapsed().as_millis() as u64,
            ClockMode::Logical => 0,
        }
    }

    fn out_of_time(&self) -> bool {
        self.cfg.wall_budget.is_some_and(|b| self.start.elapsed() >= b)
    }

    /// Runs every input, stopping at the first crash, timeout or compile
    /// error.
    fn execute(&mut self, pattern: &[u8], inputs: &[Vec<u8>], iteration: u64) -> Result<Outcome, EngineError> {
        let mut out = Outcome { compiled: true, ..Outcome::default() };
        for s in inputs {
            match self.engine.search(pattern, s)? {
                EngineVerdict::Ok(_) => {}
                EngineVerdict::CompileError(_) => {
                    out.compiled = false;
                    break;
                }
                EngineVerdict::Crash(info) => {
                    out.compiled = false;
                    out.reports.push(BugReport::from_crash(&info, &self.label).at(iteration, self.elapsed_ms()));
                    break;
                }
                EngineVerdict::Timeout => {
                    out.compiled = false;
                    out.reports.push(BugReport::timeout(pattern, s, &self.label).at(iteration, self.elapsed_ms()));
                    break;
                }
            }
        }
        Ok(out)
    }

    fn drain_coverage(&mut self) -> CoverageMap {
        self.engine.take_coverage().map(|c| CoverageMap::from_counters(&c)).unwrap_or_default()
    }

    fn minimized(&mut self, r: BugReport, known: Option<BugReport>) -> Result<BugReport, EngineError> {
        if let Some(k) = known {
            return Ok(k);
        }
        if self.cfg.minimize_budget == 0 || !r.kind.is_bug() {
            return Ok(r);
        }
        match minimize(&mut *self.engine, &r, self.cfg.minimize_budget) {
            Ok(m) => Ok(m),
            Err(MinimizeError::NonReproducible) => Ok(r),
            Err(MinimizeError::Engine(e)) => Err(e),
        }
    }

    /// Executes the seed patterns once so that iteration 0 reflects them.
    fn dry_run(&mut self, shared: &Mutex<Shared<'_>>) -> Result<(), EngineError> {
        let seeds: Vec<RegexAst> = shared.lock().unwrap().queue.seeds().iter().map(|s| s.ast.clone()).collect();
        let mut reports = Vec::new();
        let mut cache = Vec::new();
        for ast in &seeds {
            let inputs = generate_inputs(ast, self.cfg.limits, &mut self.rng);
            let out = self.execute(serialize(ast).as_bytes(), &inputs, 0)?;
            reports.extend(out.reports);
            cache.extend(inputs);
        }
        let cov = self.drain_coverage();
        let mut s = shared.lock().unwrap();
        s.coverage.merge(&cov);
        for i in &cache {
            s.inputs.add(i);
        }
        for ast in &seeds {
            s.push_byte_corpus(serialize(ast).into_bytes());
        }
        for r in reports {
            *s.stats.bugs_by_kind.entry(r.kind).or_default() += 1;
            s.reporter.record(r);
        }
        s.snapshot(self.elapsed_ms());
        Ok(())
    }

    fn iteration(&mut self, shared: &Mutex<Shared<'_>>, it: u64) -> Result<(), EngineError> {
        let mode = self.cfg.mode;
        let (pattern, ast, cached) = {
            let mut s = shared.lock().unwrap();
            let parent = s.queue.pick(&mut self.rng).expect("queue is never empty");
            let (pattern, ast) = match mode {
                FuzzMode::Retest => {
                    let m = mutate_grammar(&parent, &s.pool, &mut self.rng);
                    (serialize(&m).into_bytes(), Some(m))
                }
                FuzzMode::TypeOnly => {
                    let m = mutate_type_only(&parent, &s.pool, &mut self.rng);
                    (serialize(&m).into_bytes(), Some(m))
                }
                FuzzMode::ByteNaive => {
                    let corpus: Vec<Vec<u8>> = s.byte_corpus.iter().cloned().collect();
                    let b = mutate_bytes(serialize(&parent).as_bytes(), &corpus, &mut self.rng);
                    let ast = parse(&b).ok();
                    (b, ast)
                }
            };
            let cached = match mode {
                FuzzMode::ByteNaive => s.inputs.sample(BYTE_MODE_CACHED_INPUTS, &mut self.rng),
                _ => Vec::new(),
            };
            s.stats.mutants += 1;
            if ast.is_some() {
                s.stats.valid_mutants += 1;
            }
            (pattern, ast, cached)
        };

        let inputs = match (mode, &ast) {
            (FuzzMode::ByteNaive, _) | (_, None) => {
                let mut v = cached;
                for _ in 0..BYTE_MODE_RANDOM_INPUTS {
                    let n = self.rng.gen_range(0..8);
                    v.push((0..n).map(|_| self.rng.gen()).collect());
                }
                v
            }
            (_, Some(a)) => generate_inputs(a, self.cfg.limits, &mut self.rng),
        };

        let Outcome { mut reports, compiled } = self.execute(&pattern, &inputs, it)?;
        let mut gaps = 0;
        if let (true, true, Some(a)) = (self.cfg.relations_enabled, compiled, &ast) {
            let run = run_mt(&mut *self.engine, a, &inputs, &RelationId::ALL, &mut self.rng)?;
            let base = serialize(a);
            gaps = run.dialect_gaps.len();
            for g in &run.dialect_gaps {
                reports.push(BugReport::from_dialect_gap(&base, g, &self.label).at(it, self.elapsed_ms()));
            }
            if let Some(f) = &run.finding {
                reports.push(BugReport::from_finding(f, &self.label).at(it, self.elapsed_ms()));
            }
            if let Some(f) = run.failure {
                let r = match f.verdict {
                    EngineVerdict::Crash(info) => BugReport::from_crash(&info, &self.label),
                    _ => BugReport::timeout(f.pattern.as_bytes(), &f.input, &self.label),
                };
                reports.push(r.at(it, self.elapsed_ms()));
            }
        }
        let cov = self.drain_coverage();

        let mut finished = Vec::with_capacity(reports.len());
        for r in reports {
            let known = shared.lock().unwrap().minimized.get(&r.dedup_key).cloned();
            let raw_key = r.dedup_key.clone();
            let m = self.minimized(r, known)?;
            shared.lock().unwrap().minimized.entry(raw_key).or_insert_with(|| m.clone());
            finished.push(m);
        }
        if !finished.is_empty() {
            self.drain_coverage();
        }

        let elapsed = self.elapsed_ms();
        let mut s = shared.lock().unwrap();
        let new_edges = s.coverage.merge(&cov);
        if new_edges > 0 {
            if let Some(a) = &ast {
                s.queue.push(a.clone(), NEW_COVERAGE_ENERGY, it);
                s.pool.insert(a);
            }
            if mode == FuzzMode::ByteNaive {
                s.push_byte_corpus(pattern.clone());
            }
        }
        if mode != FuzzMode::ByteNaive {
            for i in &inputs {
                s.inputs.add(i);
            }
        }
        s.stats.dialect_gaps += gaps;
        for r in finished {
            *s.stats.bugs_by_kind.entry(r.kind).or_default() += 1;
            s.reporter.record(r);
        }
        s.done += 1;
        if s.done % self.cfg.snapshot_every.max(1) == 0 {
            s.snapshot(elapsed);
        }
        if self.cfg.stop_after_bugs.is_some_and(|n| s.stats.bug_findings() >= n) {
            s.stop = true;
        }
        Ok(())
    }

    fn run(&mut self, shared: &Mutex<Shared<'_>>, claim: &AtomicU64) -> Result<(), EngineError> {
        loop {
            if shared.lock().unwrap().stop || self.out_of_time() {
                return Ok(());
            }
            let it = claim.fetch_add(1, Ordering::SeqCst) + 1;
            if it > self.cfg.max_iterations {
                return Ok(());
            }
            if let Err(e) = self.iteration(shared, it) {
                shared.lock().unwrap().stop = true;
                return Err(e);
            }
        }
    }
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

fn initial_state<'r>(cfg: &FuzzConfig, corpus: &SeedCorpus, reporter: &'r mut Reporter, rng: &mut ChaCha8Rng) -> Shared<'r> {
    let mut pool = SubtreePool::new(cfg.context_depth);
    let mut queue = SeedQueue::new();
    let mut seeds = corpus.patterns.clone();
    if seeds.is_empty() {
        seeds = (0..BOOTSTRAP_SEEDS).map(|_| random_pattern(rng, 8)).collect();
    }
    for ast in seeds {
        pool.insert(&ast);
        queue.push(ast, 1, 0);
    }
    Shared {
        coverage: CoverageMap::new(),
        pool,
        queue,
        inputs: InputCache::default(),
        byte_corpus: VecDeque::new(),
        reporter,
        minimized: HashMap::new(),
        stats: CampaignStats {
            seeds_loaded: corpus.patterns.len(),
            seeds_skipped: corpus.skipped,
            ..CampaignStats::default()
        },
        done: 0,
        stop: false,
    }
}

fn finish(shared: Mutex<Shared<'_>>, elapsed_ms: u64) -> CampaignStats {
    let mut s = shared.into_inner().unwrap();
    s.snapshot(elapsed_ms);
    let mut stats = std::mem::take(&mut s.stats);
    stats.iterations = s.done;
    stats.pool_size = s.pool.len();
    stats.queue_len = s.queue.len();
    stats
}

/// Runs a single-worker campaign. Given the same configuration, corpus and
/// a deterministic engine, the stats and reports are identical across runs
/// (with [`ClockMode::Logical`], byte for byte).
pub fn fuzz_loop<E: Engine + ?Sized>(
    cfg: &FuzzConfig,
    corpus: &SeedCorpus,
    engine: &mut E,
    reporter: &mut Reporter,
) -> Result<CampaignStats, CampaignError> {
    let mut rng = worker_rng(cfg.rng_seed, 0);
    let shared = Mutex::new(initial_state(cfg, corpus, reporter, &mut rng));
    let label = engine.label();
    let mut w = Worker { engine, rng, cfg: cfg.clone(), start: Instant::now(), label };
    w.dry_run(&shared)?;
    let claim = AtomicU64::new(0);
    w.run(&shared, &claim)?;
    let elapsed = w.elapsed_ms();
    Ok(finish(shared, elapsed))
}

/// Shards iterations over `engines.len()` workers that share coverage, the
/// pool, the seed queue and the reporter. Discovery order, and therefore the
/// exact output, depends on scheduling.
pub fn fuzz_parallel<E: Engine>(
    cfg: &FuzzConfig,
    corpus: &SeedCorpus,
    engines: &mut [E],
    reporter: &mut Reporter,
) -> Result<CampaignStats, CampaignError> {
    assert!(!engines.is_empty(), "need at least one engine");
    let start = Instant::now();
    let mut rng = worker_rng(cfg.rng_seed, 0);
    let shared = Mutex::new(initial_state(cfg, corpus, reporter, &mut rng));
    let claim = AtomicU64::new(0);
    let mut workers: Vec<Worker<'_, E>> = engines
        .iter_mut()
        .enumerate()
        .map(|(i, engine)| {
            let label = engine.label();
            let rng = if i == 0 { rng.clone() } else { worker_rng(cfg.rng_seed, i) };
            Worker { engine, rng, cfg: cfg.clone(), start, label }
        })
        .collect();
    workers[0].dry_run(&shared)?;
    let results: Vec<Result<(), EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = workers
            .iter_mut()
            .map(|w| {
                let (shared, claim) = (&shared, &claim);
                scope.spawn(move || w.run(shared, claim))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(Ok(()))).collect()
    });
    for r in results {
        r?;
    }
    let elapsed = workers[0].elapsed_ms();
    Ok(finish(shared, elapsed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{inject_fault, BuiltinEngine, FaultId};

    fn cfg(iters: u64) -> FuzzConfig {
        FuzzConfig { max_iterations: iters, clock: ClockMode::Logical, rng_seed: 7, ..FuzzConfig::default() }
    }

    #[test]
    fn corpus_loader() {
        let c = SeedCorpus::from_text("# comment\n\na|b\n(\n[a-c]*\\n\r\n");
        assert_eq!(c.patterns.len(), 2);
        assert_eq!(c.skipped, 1);
        let b = SeedCorpus::bundled();
        assert_eq!(b.patterns.len(), 1000);
        assert_eq!(b.skipped, 0);
    }

    #[test]
    fn smoke_reference_engine() {
        let mut e = BuiltinEngine::new().with_tracing();
        let mut rep = Reporter::new();
        let corpus = SeedCorpus::from_text("a|b\n(?:ab)*c\n[a-f]+x?\n");
        let stats = fuzz_loop(&cfg(100), &corpus, &mut e, &mut rep).unwrap();
        assert_eq!(stats.iterations, 100);
        assert_eq!(stats.bug_findings(), 0, "{:?}", rep.reports());
        assert!(stats.final_edges() > 0);
        assert!(stats.coverage.windows(2).all(|w| w[0].edges <= w[1].edges));
        assert_eq!(stats.coverage.first().unwrap().iteration, 0);
        assert_eq!(stats.coverage.last().unwrap().iteration, 100);
        assert_eq!(stats.validity_rate(), 1.0);
    }

    #[test]
    fn empty_seeds_bootstrap() {
        let mut e = BuiltinEngine::new().with_tracing();
        let stats = fuzz_loop(&cfg(20), &SeedCorpus::empty(), &mut e, &mut Reporter::new()).unwrap();
        assert_eq!(stats.iterations, 20);
        assert!(stats.queue_len >= BOOTSTRAP_SEEDS);
    }

    #[test]
    fn finds_alt_first_only() {
        let mut e = inject_fault(FaultId::AltFirstOnly).with_tracing();
        let mut rep = Reporter::new();
        let c = FuzzConfig { stop_after_bugs: Some(1), ..cfg(2000) };
        let stats = fuzz_loop(&c, &SeedCorpus::bundled(), &mut e, &mut rep).unwrap();
        assert!(rep.reports().iter().any(|r| r.kind == BugKind::MtViolation && r.minimized));
        assert!(stats.iterations < 2000);
    }

    #[test]
    fn mode_names() {
        for m in FuzzMode::ALL {
            assert_eq!(m.name().parse::<FuzzMode>().unwrap(), m);
        }
        assert!("bogus".parse::<FuzzMode>().is_err());
    }

    #[test]
    fn guard_limits_huge_repeats() {
        let ast = parse(b"(?:(?:a{100}){100})b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(generate_inputs(&ast, GenLimits::default(), &mut rng).len(), 2);
    }

    #[test]
    fn parallel_runs_all_iterations() {
        let mut engines: Vec<BuiltinEngine> = (0..3).map(|_| BuiltinEngine::new().with_tracing()).collect();
        let stats = fuzz_parallel(&cfg(90), &SeedCorpus::from_text("a|b\nx*y\n"), &mut engines, &mut Reporter::new())
            .unwrap();
        assert_eq!(stats.iterations, 90);
        assert!(stats.coverage.windows(2).all(|w| w[0].edges <= w[1].edges && w[0].iteration <= w[1].iteration));
    }
}
