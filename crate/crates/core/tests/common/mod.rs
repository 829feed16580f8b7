//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rxfuzz_core::ast::{Node, RegexAst};

/// End offsets `j` such that `s[i..j]` is in the language of `node`,
/// computed directly from the tree by set semantics.
pub fn ends(node: &Node, s: &[u8], i: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    match node {
        Node::Empty => {
            out.insert(i);
        }
        Node::Fail => {}
        Node::Literal(b) => {
            if s.get(i) == Some(b) {
                out.insert(i + 1);
            }
        }
        Node::Dot => {
            if s.get(i).is_some_and(|&b| b != b'\n') {
                out.insert(i + 1);
            }
        }
        Node::Class(c) => {
            if let Some(&b) = s.get(i) {
                let inside = c.ranges.iter().any(|r| r.lo <= b && b <= r.hi);
                if inside != c.negated {
                    out.insert(i + 1);
                }
            }
        }
        Node::AnchorStart => {
            if i == 0 {
                out.insert(i);
            }
        }
        Node::AnchorEnd => {
            if i == s.len() {
                out.insert(i);
            }
        }
        Node::Group(c) => return ends(c, s, i),
        Node::Concat(cs) => {
            let mut cur = BTreeSet::from([i]);
            for c in cs {
                cur = cur.iter().flat_map(|&k| ends(c, s, k)).collect();
            }
            return cur;
        }
        Node::Alt(cs) => {
            for c in cs {
                out.extend(ends(c, s, i));
            }
        }
        Node::Star { child, .. } => return repeat(child, s, i, 0, None),
        Node::Plus { child, .. } => return repeat(child, s, i, 1, None),
        Node::Optional { child, .. } => return repeat(child, s, i, 0, Some(1)),
        Node::Repeat { child, min, max, .. } => return repeat(child, s, i, *min as usize, max.map(|m| m as usize)),
    }
    out
}

fn repeat(child: &Node, s: &[u8], i: usize, min: usize, max: Option<usize>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut frontier = BTreeSet::from([i]);
    let mut seen_at_min: BTreeSet<usize> = BTreeSet::new();
    let mut k = 0;
    loop {
        if k >= min {
            out.extend(frontier.iter().copied());
        }
        if max.is_some_and(|m| k >= m) {
            break;
        }
        let next: BTreeSet<usize> = frontier.iter().flat_map(|&p| ends(child, s, p)).collect();
        k += 1;
        if k > min {
            // Past the lower bound only new positions matter.
            let fresh: BTreeSet<usize> = next.difference(&seen_at_min).copied().collect();
            seen_at_min.extend(next.iter().copied());
            if fresh.is_empty() {
                break;
            }
            frontier = fresh;
        } else {
            frontier = next;
            if k == min {
                seen_at_min.extend(frontier.iter().copied());
            }
        }
    }
    out
}

pub fn full_match(ast: &RegexAst, s: &[u8]) -> bool {
    ends(ast.root(), s, 0).contains(&s.len())
}

pub fn search_exists(ast: &RegexAst, s: &[u8]) -> bool {
    (0..=s.len()).any(|i| !ends(ast.root(), s, i).is_empty())
}

/// Every string over `alphabet` of length at most `max_len`.
pub fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for &b in alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(b);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The full-match language of `ast` restricted to `universe`.
pub fn language(ast: &RegexAst, universe: &[Vec<u8>]) -> Vec<bool> {
    universe.iter().map(|s| full_match(ast, s)).collect()
}
