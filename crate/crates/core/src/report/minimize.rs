use std::collections::HashSet;
use std::sync::Arc;

use crate::ast::{parse, serialize, Node, RegexAst};
use crate::engine::{Engine, EngineError, EngineVerdict, MatchResult};
use crate::oracle::{applicable_sites, assert_pair, transform, MatchMode, RelationId};

use super::{BugKind, BugReport, CrashDetails};

#[derive(Debug, thiserror::Error)]
pub enum MinimizeError {
    #[error("the finding no longer reproduces on this engine")]
    NonReproducible,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// What a reproduction observed; copied into the report on success.
#[derive(Debug, Clone, Default)]
struct Witness {
    variant: Option<String>,
    base: Option<MatchResult>,
    variant_result: Option<MatchResult>,
    mode: Option<MatchMode>,
    crash: Option<CrashDetails>,
    message: Option<String>,
}

fn mt_mode(base: &MatchResult, variant: &MatchResult) -> MatchMode {
    if base.matched == variant.matched {
        MatchMode::FullMatch
    } else {
        MatchMode::Search
    }
}

fn same_crash(report: &BugReport, v: &EngineVerdict) -> Option<Witness> {
    let EngineVerdict::Crash(info) = v else {
        return None;
    };
    let got = CrashDetails::from(info);
    let want = report.crash.as_ref();
    let same = match want {
        Some(w) if w.signal.is_some() => w.signal == got.signal,
        Some(w) => w.exit_code == got.exit_code && got.signal.is_none(),
        None => true,
    };
    same.then(|| Witness { crash: Some(got), ..Witness::default() })
}

fn ok(v: EngineVerdict) -> Option<MatchResult> {
    v.ok().copied()
}

/// Does `(pattern, input)` still show the report's class of failure? For
/// relation findings every applicable site is re-transformed, since shrinking
/// moves the rewrite site.
fn check<E: Engine + ?Sized>(
    engine: &mut E,
    report: &BugReport,
    pattern: &[u8],
    input: &[u8],
) -> Result<Option<Witness>, EngineError> {
    match report.kind {
        BugKind::Crash => Ok(same_crash(report, &engine.search(pattern, input)?)),
        BugKind::Timeout => Ok(matches!(engine.search(pattern, input)?, EngineVerdict::Timeout).then(Witness::default)),
        BugKind::MtViolation | BugKind::DialectGap => {
            let Some(rel) = report.relation else { return Ok(None) };
            let Ok(ast) = parse(pattern) else { return Ok(None) };
            let Some(base) = ok(engine.search(pattern, input)?) else { return Ok(None) };
            for site in applicable_sites(rel, &ast) {
                let variant = serialize(&transform(rel, &ast, &site).expect("applicable site"));
                let w = relation_witness(engine, report.kind, rel, &base, &variant, input)?;
                if w.is_some() {
                    return Ok(w);
                }
            }
            Ok(None)
        }
    }
}

fn relation_witness<E: Engine + ?Sized>(
    engine: &mut E,
    kind: BugKind,
    rel: RelationId,
    base: &MatchResult,
    variant: &str,
    input: &[u8],
) -> Result<Option<Witness>, EngineError> {
    let v = engine.search(variant.as_bytes(), input)?;
    Ok(match (kind, v) {
        (BugKind::MtViolation, EngineVerdict::Ok(v)) if !assert_pair(rel.mode(), base, &v) => Some(Witness {
            variant: Some(variant.to_string()),
            base: Some(*base),
            variant_result: Some(v),
            mode: Some(mt_mode(base, &v)),
            ..Witness::default()
        }),
        (BugKind::DialectGap, EngineVerdict::CompileError(m)) => {
            Some(Witness { variant: Some(variant.to_string()), message: Some(m), ..Witness::default() })
        }
        _ => None,
    })
}

/// Replays the report exactly as recorded.
pub fn reproduces<E: Engine + ?Sized>(engine: &mut E, report: &BugReport) -> Result<bool, EngineError> {
    let pattern = report.pattern_bytes();
    match (report.kind, report.relation, &report.variant) {
        (BugKind::MtViolation | BugKind::DialectGap, Some(rel), Some(variant)) => {
            let Some(base) = ok(engine.search(&pattern, &report.input)?) else { return Ok(false) };
            Ok(relation_witness(engine, report.kind, rel, &base, variant, &report.input)?.is_some())
        }
        (BugKind::MtViolation | BugKind::DialectGap, ..) => Ok(false),
        _ => Ok(check(engine, report, &pattern, &report.input)?.is_some()),
    }
}

fn repeat_weight(n: &Node) -> u64 {
    let own = match n {
        Node::Repeat { min, max, .. } => u64::from(*min) + u64::from(max.unwrap_or(*min)),
        _ => 0,
    };
    own + n.children().iter().map(|c| repeat_weight(c)).sum::<u64>()
}

type Measure = (usize, u64, usize);

fn measure(ast: &RegexAst) -> Measure {
    (ast.node_count(), repeat_weight(ast.root()), serialize(ast).len())
}

/// Single-step shrinks of `ast`, canonicalized, largest cuts first.
fn shrink_candidates(ast: &RegexAst) -> Vec<RegexAst> {
    let mut raw: Vec<RegexAst> = Vec::new();
    let mut push = |r: Result<RegexAst, _>| {
        if let Ok(r) = r {
            raw.push(r);
        }
    };
    let mut nodes = Vec::new();
    ast.walk(|path, node| nodes.push((path.clone(), node.clone())));
    for (path, node) in &nodes {
        for c in node.children() {
            push(ast.replace_fitted(path, c.clone()));
        }
        if let Node::Concat(cs) | Node::Alt(cs) = &**node {
            for i in 0..cs.len() {
                let mut rest = cs.to_vec();
                rest.remove(i);
                let n = if matches!(**node, Node::Concat(_)) { Node::concat(rest) } else { Node::alt(rest) };
                push(ast.replace_fitted(path, Arc::new(n)));
            }
        }
        if **node != Node::Literal(b'a') {
            push(ast.replace_fitted(path, Arc::new(Node::Literal(b'a'))));
        }
        if let Node::Repeat { child, min, max, greedy } = &**node {
            let mut bounds = Vec::new();
            if *min > 0 {
                bounds.push((min - 1, max.map(|m| m.max(min - 1))));
            }
            match max {
                Some(m) if m > min => bounds.push((*min, Some(*min))),
                None => bounds.push((*min, Some(*min))),
                _ => {}
            }
            for (lo, hi) in bounds {
                let n = Node::Repeat { child: child.clone(), min: lo, max: hi, greedy: *greedy };
                push(ast.replace_fitted(path, Arc::new(n)));
            }
        }
    }
    let mut seen = HashSet::new();
    raw.into_iter()
        .filter_map(|c| parse(serialize(&c).as_bytes()).ok())
        .filter(|c| seen.insert(serialize(c)))
        .collect()
}

fn delete_each(bytes: &[u8]) -> Vec<Vec<u8>> {
    (0..bytes.len())
        .map(|i| {
            let mut v = bytes.to_vec();
            v.remove(i);
            v
        })
        .collect()
}

/// Greedily shrinks the pattern and input while the finding keeps
/// reproducing. Each engine replay costs one unit of `budget`.
pub fn minimize<E: Engine + ?Sized>(
    engine: &mut E,
    report: &BugReport,
    budget: usize,
) -> Result<BugReport, MinimizeError> {
    if budget == 0 {
        return Ok(report.clone());
    }
    if !reproduces(engine, report)? {
        return Err(MinimizeError::NonReproducible);
    }
    let mut left = budget - 1;
    let mut pattern = report.pattern_bytes();
    let mut input = report.input.clone();
    let mut witness: Option<Witness> = None;

    'outer: while left > 0 {
        let pattern_cands: Vec<Vec<u8>> = match parse(&pattern) {
            Ok(ast) => {
                let m = measure(&ast);
                shrink_candidates(&ast)
                    .into_iter()
                    .filter(|c| measure(c) < m)
                    .map(|c| serialize(&c).into_bytes())
                    .collect()
            }
            Err(_) => delete_each(&pattern),
        };
        for cand in pattern_cands {
            if left == 0 {
                break 'outer;
            }
            left -= 1;
            if let Some(w) = check(engine, report, &cand, &input)? {
                pattern = cand;
                witness = Some(w);
                continue 'outer;
            }
        }
        for cand in delete_each(&input) {
            if left == 0 {
                break 'outer;
            }
            left -= 1;
            if let Some(w) = check(engine, report, &pattern, &cand)? {
                input = cand;
                witness = Some(w);
                continue 'outer;
            }
        }
        break;
    }

    let mut out = report.clone();
    out.set_pattern_bytes(&pattern);
    out.input = input;
    if let Some(w) = witness {
        out.variant = w.variant.or(out.variant);
        out.base = w.base.or(out.base);
        out.variant_result = w.variant_result.or(out.variant_result);
        out.mode = w.mode.or(out.mode);
        out.crash = w.crash.or(out.crash);
        out.message = w.message.or(out.message);
    }
    out.minimized = true;
    out.refresh_key();
    Ok(out)
}
