use rxfuzz_core::engine::{inject_fault, BuiltinEngine, Engine, FaultId};
use rxfuzz_core::fuzz::{fuzz_loop, probe_builtin, ClockMode, FuzzConfig, FuzzMode, SeedCorpus, SubtreePool};
use rxfuzz_core::oracle::RelationId;
use rxfuzz_core::report::{BugKind, Reporter};

fn logical(iters: u64, seed: u64) -> FuzzConfig {
    FuzzConfig { max_iterations: iters, rng_seed: seed, clock: ClockMode::Logical, ..FuzzConfig::default() }
}

fn edges_of(pattern: &str, input: &str) -> Vec<u32> {
    let mut e = BuiltinEngine::new().with_tracing();
    e.search(pattern.as_bytes(), input.as_bytes()).unwrap();
    probe_builtin(&e.take_coverage().expect("tracing engine reports coverage")).edges().collect()
}

#[test]
fn probe_distinguishes_executions() {
    assert_ne!(edges_of("a", "a"), edges_of("a", "b"));
    assert_eq!(edges_of("a", "a"), edges_of("a", "a"));
    assert!(!edges_of("a", "a").is_empty());
}

#[test]
fn pool_grows_only_with_coverage() {
    let corpus = SeedCorpus::from_text("a|b\n(?:ab)*c\n[a-f]+x?\nab{2,3}\n");
    let cfg = FuzzConfig { relations_enabled: false, ..logical(300, 5) };
    let mut seeded = SubtreePool::new(cfg.context_depth);
    for ast in &corpus.patterns {
        seeded.insert(ast);
    }

    let mut blind = BuiltinEngine::new();
    assert!(blind.take_coverage().is_none());
    let stats = fuzz_loop(&cfg, &corpus, &mut blind, &mut Reporter::new()).unwrap();
    assert_eq!(stats.pool_size, seeded.len());
    assert_eq!(stats.queue_len, corpus.patterns.len());

    let mut traced = BuiltinEngine::new().with_tracing();
    let stats = fuzz_loop(&cfg, &corpus, &mut traced, &mut Reporter::new()).unwrap();
    assert!(stats.pool_size > seeded.len());
    assert!(stats.queue_len > corpus.patterns.len());
}

#[test]
fn seeded_campaign_starts_ahead() {
    let cfg = FuzzConfig { relations_enabled: false, ..logical(64, 1) };
    let seeded =
        fuzz_loop(&cfg, &SeedCorpus::bundled(), &mut BuiltinEngine::new().with_tracing(), &mut Reporter::new()).unwrap();
    let empty =
        fuzz_loop(&cfg, &SeedCorpus::empty(), &mut BuiltinEngine::new().with_tracing(), &mut Reporter::new()).unwrap();
    assert!(seeded.initial_edges() > empty.initial_edges());
}

#[test]
fn modes_report_validity() {
    for (mode, floor) in [(FuzzMode::Retest, 1.0), (FuzzMode::TypeOnly, 1.0), (FuzzMode::ByteNaive, 0.0)] {
        let cfg = FuzzConfig { mode, relations_enabled: false, ..logical(200, 3) };
        let stats =
            fuzz_loop(&cfg, &SeedCorpus::bundled(), &mut BuiltinEngine::new().with_tracing(), &mut Reporter::new())
                .unwrap();
        assert!(stats.mutants > 0);
        assert!(stats.validity_rate() >= floor, "{}: {}", mode.name(), stats.validity_rate());
        if mode == FuzzMode::ByteNaive {
            assert!(stats.validity_rate() < 1.0);
        }
    }
}

/// First detection per fault with seed 7 on the bundled corpus.
#[test]
fn fault_golden_table() {
    let table = [
        (FaultId::AltFirstOnly, 5, RelationId::AltComm),
        (FaultId::StarDropLast, 1, RelationId::StarUnrollL),
        (FaultId::ClassOffByOne, 189, RelationId::StarUnrollL),
        (FaultId::EmptyLoopSkip, 1146, RelationId::StarUnrollL),
    ];
    let corpus = SeedCorpus::bundled();
    for (fault, iteration, relation) in table {
        let cfg = FuzzConfig { stop_after_bugs: Some(1), ..logical(2000, 7) };
        let mut rep = Reporter::new();
        fuzz_loop(&cfg, &corpus, &mut inject_fault(fault).with_tracing(), &mut rep).unwrap();
        let r = rep.reports().iter().find(|r| r.kind == BugKind::MtViolation).unwrap_or_else(|| panic!("{fault}"));
        assert_eq!((r.iteration, r.relation), (iteration, Some(relation)), "{fault}");
        assert!(r.minimized, "{fault}");
    }
}
