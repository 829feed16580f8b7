
use rand::Rng;

use crate::ast::{fit_under, parse, random_pattern, serialize, Node, NodeKind, RegexAst, MAX_NESTING};

use super::pool::SubtreePool;

/// Node budget for the random subtree used when the pool has nothing.
pub const FALLBACK_BUDGET: usize = 6;
/// Mutants above this many nodes are rejected in favour of a smaller edit.
pub const MAX_MUTANT_NODES: usize = 256;
const MAX_MUTANT_DEPTH: usize = MAX_NESTING / 2;

fn acceptable(ast: &RegexAst) -> Option<RegexAst> {
    if ast.node_count() > MAX_MUTANT_NODES || ast.depth() > MAX_MUTANT_DEPTH {
        return None;
    }
    parse(serialize(ast).as_bytes()).ok()
}

/// Wraps the whole pattern in a quantifier or pairs it with a fresh fragment.
fn wrap_root<R: Rng + ?Sized>(ast: &RegexAst, rng: &mut R) -> RegexAst {
    let root = ast.root().clone();
    let fresh = random_pattern(rng, 2).root().clone();
    let body = || fit_under(root.clone(), Some(NodeKind::Star));
    let node = match rng.gen_range(0..5u8) {
        0 => Node::Star { child: body(), greedy: true },
        1 => Node::Plus { child: body(), greedy: true },
        2 => Node::Optional { child: body(), greedy: true },
        3 => Node::Concat(vec![
            fit_under(root.clone(), Some(NodeKind::Concat)),
            fit_under(fresh, Some(NodeKind::Concat)),
        ]),
        _ => Node::Alt(vec![fit_under(root.clone(), Some(NodeKind::Alt)), fit_under(fresh, Some(NodeKind::Alt))]),
    };
    RegexAst::new(node)
}

fn substitute<R: Rng + ?Sized>(
    ast: &RegexAst,
    pool: &SubtreePool,
    rng: &mut R,
    use_context: bool,
) -> RegexAst {
    let internal = ast.collect_internal_nodes();
    if internal.is_empty() {
        return acceptable(&wrap_root(ast, rng)).unwrap_or_else(|| ast.clone());
    }
    let target = &internal[rng.gen_range(0..internal.len())];
    let kind = ast.get(target).expect("collected path").kind();
    let from_pool = if use_context {
        let ctx = ast.extract_context(target, pool.context_depth()).expect("collected path");
        pool.get(kind, &ctx, rng).or_else(|| pool.get_any_context(kind, rng))
    } else {
        pool.get_any_context(kind, rng)
    };
    if let Some(repl) = from_pool {
        if let Some(m) = ast.replace_fitted(target, repl).ok().and_then(|m| acceptable(&m)) {
            return m;
        }
    }
    let repl = random_pattern(rng, FALLBACK_BUDGET).root().clone();
    ast.replace_fitted(target, repl)
        .ok()
        .and_then(|m| acceptable(&m))
        .unwrap_or_else(|| random_pattern(rng, FALLBACK_BUDGET))
}

/// Replaces a uniformly chosen internal node with a pooled subtree of the
/// same kind recorded under the same ancestor context, falling back to any
/// context and then to a small random subtree. The result always parses and
/// is returned in canonical (re-parsed) form.
pub fn mutate_grammar<R: Rng + ?Sized>(ast: &RegexAst, pool: &SubtreePool, rng: &mut R) -> RegexAst {
    substitute(ast, pool, rng, true)
}

/// Like [`mutate_grammar`] but the pool lookup ignores context.
pub fn mutate_type_only<R: Rng + ?Sized>(ast: &RegexAst, pool: &SubtreePool, rng: &mut R) -> RegexAst {
    substitute(ast, pool, rng, false)
}

/// One to four stacked byte-level edits. `corpus` supplies splice material.
pub fn mutate_bytes<R: Rng + ?Sized>(data: &[u8], corpus: &[Vec<u8>], rng: &mut R) -> Vec<u8> {
    let mut out = data.to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let op = rng.gen_range(0..5u8);
        if out.is_empty() && op != 4 {
            out.push(rng.gen());
            continue;
        }
        match op {
            0 => {
                let i = rng.gen_range(0..out.len());
                out[i] ^= 1 << rng.gen_range(0..8);
            }
            1 => {
                let i = rng.gen_range(0..=out.len());
                out.insert(i, rng.gen());
            }
            2 => {
                out.remove(rng.gen_range(0..out.len()));
            }
            3 => {
                let i = rng.gen_range(0..out.len());
                out.insert(i, out[i]);
            }
            _ => match corpus.get(rng.gen_range(0..corpus.len().max(1))).filter(|c| !c.is_empty()) {
                Some(donor) => {
                    let a = rng.gen_range(0..donor.len());
                    let b = rng.gen_range(a + 1..=donor.len().min(a + 8));
                    let at = rng.gen_range(0..=out.len());
                    out.splice(at..at, donor[a..b].iter().copied());
                }
                None => out.push(rng.gen()),
            },
        }
    }
    out
}
