mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxfuzz_core::ast::{parse, random_pattern, random_pattern_with, serialize, PatternGenConfig, RegexAst};
use rxfuzz_core::engine::{BuiltinEngine, EngineVerdict, MatchResult};
use rxfuzz_core::fuzz::{CoverageMap, SubtreePool};
use rxfuzz_core::nfa::{compile_nfa, negative_strings, positive_strings, unroll_repeats, GenLimits};
use rxfuzz_core::oracle::{MatchMode, MtFinding, RelationId};
use rxfuzz_core::report::{dedup, read_jsonl, write_jsonl, BugReport};

fn gen(seed: u64, budget: usize) -> RegexAst {
    random_pattern(&mut ChaCha8Rng::seed_from_u64(seed), budget)
}

fn gen_kleene(seed: u64, budget: usize) -> RegexAst {
    random_pattern_with(&mut ChaCha8Rng::seed_from_u64(seed), budget, &PatternGenConfig::kleene(b"abc"))
}

fn run(e: &mut BuiltinEngine, pattern: &str, input: &[u8]) -> MatchResult {
    match e.exec(pattern.as_bytes(), input) {
        EngineVerdict::Ok(m) => m,
        other => panic!("{pattern:?} on {input:?}: {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = parse(&bytes);
    }

    #[test]
    fn parser_is_total_on_regex_alphabet(bytes in proptest::collection::vec(prop::sample::select(b"()[]{}|*+?.^$\\-:!,0123ax".to_vec()), 0..256)) {
        if let Ok(ast) = parse(&bytes) {
            prop_assert_eq!(parse(serialize(&ast).as_bytes()).unwrap(), ast);
        }
    }

    #[test]
    fn round_trip(seed in any::<u64>(), budget in 1usize..40) {
        let ast = gen(seed, budget);
        prop_assert_eq!(parse(serialize(&ast).as_bytes()).unwrap(), ast);
    }

    #[test]
    fn replacement_is_local(seed in any::<u64>(), budget in 2usize..30, pick in any::<prop::sample::Index>()) {
        let ast = gen(seed, budget);
        let paths = ast.collect_internal_nodes();
        prop_assume!(!paths.is_empty());
        let target = pick.get(&paths).clone();
        let repl = gen(seed ^ 1, 3).root().clone();
        let out = ast.replace(&target, repl.clone()).unwrap();
        prop_assert!(Arc::ptr_eq(out.get(&target).unwrap(), &repl));
        for p in ast.collect_internal_nodes().into_iter().chain(std::iter::once(target.clone())) {
            let on_path = target.0.starts_with(&p.0);
            let below = p.0.starts_with(&target.0);
            if !on_path && !below {
                prop_assert!(Arc::ptr_eq(ast.get(&p).unwrap(), out.get(&p).unwrap()));
            }
        }
    }

    #[test]
    fn internal_nodes_and_contexts(seed in any::<u64>(), budget in 1usize..30, k in 0usize..5) {
        let ast = gen(seed, budget);
        let paths = ast.collect_internal_nodes();
        let mut all = Vec::new();
        ast.walk(|p, n| if n.is_internal() { all.push(p.clone()) });
        let mut sorted = paths.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), paths.len());
        prop_assert_eq!(paths.len(), all.len());
        for p in &paths {
            prop_assert!(ast.get(p).unwrap().is_internal());
            prop_assert!(ast.extract_context(p, k).unwrap().0.len() <= k);
        }
        prop_assert!(ast.extract_context(&Default::default(), k).unwrap().is_empty());
    }

    #[test]
    fn thompson_size_bound(seed in any::<u64>(), budget in 1usize..25) {
        let ast = gen_kleene(seed, budget);
        let nfa = compile_nfa(&ast).unwrap();
        let unrolled = unroll_repeats(ast.root()).node_count();
        prop_assert!(nfa.states <= 2 + 2 * unrolled, "{} states for {} nodes", nfa.states, unrolled);
    }

    #[test]
    fn string_generation_is_sound_and_deterministic(seed in any::<u64>(), budget in 1usize..15) {
        let ast = gen_kleene(seed, budget);
        let nfa = compile_nfa(&ast).unwrap();
        let limits = GenLimits::default();
        let pos = positive_strings(&nfa, limits);
        prop_assert_eq!(&pos, &positive_strings(&compile_nfa(&ast).unwrap(), limits));
        let neg = negative_strings(&ast, &pos, &mut ChaCha8Rng::seed_from_u64(seed), limits);
        prop_assert_eq!(&neg, &negative_strings(&ast, &pos, &mut ChaCha8Rng::seed_from_u64(seed), limits));
        for s in &pos {
            prop_assert!(common::full_match(&ast, s), "{} should match {:?}", serialize(&ast), s);
        }
        for s in &neg {
            prop_assert!(!common::full_match(&ast, s), "{} should not match {:?}", serialize(&ast), s);
        }
    }

    #[test]
    fn leftmost_rule(seed in any::<u64>(), budget in 1usize..12, input in proptest::collection::vec(prop::sample::select(b"abcxyz0 \n".to_vec()), 0..8)) {
        let ast = random_pattern_with(
            &mut ChaCha8Rng::seed_from_u64(seed),
            budget,
            &PatternGenConfig { alphabet: b"abcxyz0 ".to_vec(), ..PatternGenConfig::default() },
        );
        let pattern = serialize(&ast);
        let mut e = BuiltinEngine::new();
        let m = run(&mut e, &pattern, &input);
        prop_assert_eq!(m, run(&mut e, &pattern, &input));
        let starts: Vec<usize> = (0..=input.len()).filter(|&i| !common::ends(ast.root(), &input, i).is_empty()).collect();
        match m.span {
            Some((s, end)) => {
                prop_assert!(m.matched);
                prop_assert_eq!(starts.first().copied(), Some(s), "{} on {:?}", pattern, input);
                prop_assert!(common::ends(ast.root(), &input, s).contains(&end));
            }
            None => prop_assert!(!m.matched && starts.is_empty(), "{} on {:?}", pattern, input),
        }
        prop_assert_eq!(m.fullmatch, common::full_match(&ast, &input));
    }

    #[test]
    fn coverage_merge_laws(
        a in proptest::collection::btree_set(0u32..2000, 0..50),
        b in proptest::collection::btree_set(0u32..2000, 0..50),
        c in proptest::collection::btree_set(0u32..2000, 0..50),
    ) {
        let (a, b, c) = (CoverageMap::from_edges(a), CoverageMap::from_edges(b), CoverageMap::from_edges(c));
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.union(&a), a.clone());
        let mut m = a.clone();
        let before = m.len();
        let added = m.merge(&b);
        prop_assert_eq!(m.len(), before + added);
        prop_assert!(m.len() >= before);
    }

    #[test]
    fn pool_bounds(seeds in proptest::collection::vec(any::<u64>(), 1..40), cap in 1usize..6) {
        let mut pool = SubtreePool::with_capacity(2, cap);
        for s in seeds {
            pool.insert(&gen(s, 10));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [rxfuzz_core::NodeKind::Concat, rxfuzz_core::NodeKind::Alt, rxfuzz_core::NodeKind::Star] {
            if let Some(n) = pool.get_any_context(kind, &mut rng) {
                prop_assert_eq!(n.kind(), kind);
                prop_assert!(n.node_count() <= 12);
            }
        }
    }
}

fn report_strategy() -> impl Strategy<Value = BugReport> {
    (
        prop::sample::select(vec!["a|b", "(?:b|a)+", "x*", "[a-c]y", "(?:ab)*c"]),
        proptest::collection::vec(any::<u8>(), 0..6),
        prop::sample::select(RelationId::ALL.to_vec()),
        0u64..1000,
    )
        .prop_map(|(p, input, rel, it)| {
            BugReport::from_finding(
                &MtFinding {
                    relation: rel,
                    base_pattern: p.to_string(),
                    variant_pattern: format!("(?:{p})"),
                    input,
                    base_result: MatchResult::NONE,
                    variant_result: MatchResult { matched: true, span: Some((0, 0)), fullmatch: false },
                    mode: MatchMode::Search,
                },
                "builtin",
            )
            .at(it, 0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dedup_is_idempotent(reports in proptest::collection::vec(report_strategy(), 0..30)) {
        let once: Vec<BugReport> = dedup(reports).into_iter().map(|(r, _)| r).collect();
        let twice: Vec<BugReport> = dedup(once.clone()).into_iter().map(|(r, _)| r).collect();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn jsonl_round_trip(reports in proptest::collection::vec(report_strategy(), 0..10)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_jsonl(&reports, &path).unwrap();
        let (back, errors) = read_jsonl(&path).unwrap();
        prop_assert!(errors.is_empty());
        prop_assert_eq!(back, reports);
    }
}

/// Full-match agreement between the built-in engine, NFA membership and the
/// set-semantics oracle on 500 random patterns and their generated strings.
#[test]
fn reference_engine_agrees_with_nfa() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let cfg = PatternGenConfig::kleene(b"abcx");
    let mut e = BuiltinEngine::new();
    let mut checked = 0;
    for k in 0..500 {
        let ast = random_pattern_with(&mut rng, 1 + k % 14, &cfg);
        let nfa = compile_nfa(&ast).unwrap();
        let limits = GenLimits::default();
        let pos = positive_strings(&nfa, limits);
        let neg = negative_strings(&ast, &pos, &mut rng, limits);
        let pattern = serialize(&ast);
        for s in pos.iter().chain(&neg) {
            let m = run(&mut e, &pattern, s);
            assert_eq!(m.fullmatch, nfa.accepts(s), "{pattern} on {s:?}");
            assert_eq!(m.fullmatch, common::full_match(&ast, s), "{pattern} on {s:?}");
            assert_eq!(m.matched, common::search_exists(&ast, s), "{pattern} on {s:?}");
            checked += 1;
        }
    }
    assert!(checked > 5000, "{checked}");
}

#[test]
fn parser_survives_large_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise: Vec<u8> = (0..1 << 20).map(|_| rand::Rng::gen(&mut rng)).collect();
    let _ = parse(&noise);
    let deep = [b"(".repeat(1 << 19), b")".repeat(1 << 19)].concat();
    assert!(parse(&deep).is_err());
    let long_ok = b"ab|".repeat(1 << 18);
    let _ = parse(&long_ok);
}

/// Findings against faulty engines replay, vanish on the correct engine and
/// survive minimization.
#[test]
fn findings_recheck_and_minimize_soundly() {
    use rxfuzz_core::engine::inject_fault;
    use rxfuzz_core::fuzz::generate_inputs;
    use rxfuzz_core::oracle::{recheck, run_mt_with, MtOptions};
    use rxfuzz_core::report::{minimize, reproduces};

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut correct = BuiltinEngine::new();
    let mut found = 0;
    for k in 0..400 {
        let ast = gen(k, 2 + (k as usize) % 12);
        let inputs = generate_inputs(&ast, GenLimits::default(), &mut rng);
        let clean = run_mt_with(&mut correct, &ast, &inputs, &RelationId::ALL, &mut rng, MtOptions { all_sites: true })
            .unwrap();
        assert!(clean.finding.is_none(), "{:?}", clean.finding);
        for fault in rxfuzz_core::FaultId::ALL {
            let mut faulty = inject_fault(fault);
            let run = run_mt_with(&mut faulty, &ast, &inputs, &RelationId::ALL, &mut rng, MtOptions { all_sites: true })
                .unwrap();
            let Some(f) = run.finding else { continue };
            found += 1;
            assert!(recheck(&mut faulty, &f).unwrap());
            assert!(!recheck(&mut correct, &f).unwrap(), "{f:?}");
            let report = BugReport::from_finding(&f, "builtin");
            let small = minimize(&mut faulty, &report, 128).unwrap();
            assert!(reproduces(&mut faulty, &small).unwrap());
            let size = |r: &BugReport| parse(&r.pattern_bytes()).unwrap().root().node_count();
            assert!(size(&small) <= size(&report), "{} -> {}", report.pattern, small.pattern);
            assert!(small.input.len() <= report.input.len());
        }
    }
    assert!(found > 20, "{found}");
}
