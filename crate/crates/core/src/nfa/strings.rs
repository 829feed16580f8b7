use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{compile_nfa, strip_anchors, Label, Nfa};
use crate::ast::RegexAst;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenLimits {
    /// How many times a loop body is repeated in loop-exercising strings.
    pub star_unroll: usize,
    pub max_string_len: usize,
    pub max_strings: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits { star_unroll: 2, max_string_len: 64, max_strings: 64 }
    }
}

const INF: usize = usize::MAX;

/// Shortest byte distances over the automaton, with the edge used to reach
/// each state so paths can be rebuilt.
struct Paths {
    dist: Vec<usize>,
    via: Vec<Option<usize>>,
}

fn zero_one_bfs(nfa: &Nfa, adj: &[Vec<usize>], source: usize, forward: bool) -> Paths {
    let mut dist = vec![INF; nfa.states];
    let mut via = vec![None; nfa.states];
    let mut dq = VecDeque::new();
    dist[source] = 0;
    dq.push_back(source);
    while let Some(s) = dq.pop_front() {
        for &e in &adj[s] {
            let t = &nfa.transitions[e];
            let next = if forward { t.to } else { t.from };
            let w = usize::from(!t.label.is_eps());
            if dist[s] + w < dist[next] {
                dist[next] = dist[s] + w;
                via[next] = Some(e);
                if w == 0 {
                    dq.push_front(next);
                } else {
                    dq.push_back(next);
                }
            }
        }
    }
    Paths { dist, via }
}

fn label_byte(nfa: &Nfa, e: usize) -> Option<u8> {
    match nfa.transitions[e].label {
        Label::Eps => None,
        Label::Range(r) => Some(r.lo),
    }
}

/// Bytes along the shortest path from the start to `state`.
fn prefix_to(nfa: &Nfa, p: &Paths, mut state: usize) -> Vec<u8> {
    let mut out = Vec::new();
    while let Some(e) = p.via[state] {
        out.extend(label_byte(nfa, e));
        state = nfa.transitions[e].from;
    }
    out.reverse();
    out
}

/// Bytes along the shortest path from `state` to the accept state.
fn suffix_from(nfa: &Nfa, p: &Paths, mut state: usize) -> Vec<u8> {
    let mut out = Vec::new();
    while let Some(e) = p.via[state] {
        out.extend(label_byte(nfa, e));
        state = nfa.transitions[e].to;
    }
    out
}

/// Shortest path from `from` to `to` consuming at least one byte.
fn nonempty_path(nfa: &Nfa, out: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<u8>> {
    // Layered search over (state, consumed-anything) pairs.
    let n = nfa.states;
    let idx = |s: usize, c: bool| s + if c { n } else { 0 };
    let mut dist = vec![INF; 2 * n];
    let mut via: Vec<Option<(usize, usize)>> = vec![None; 2 * n];
    let mut dq = VecDeque::new();
    dist[idx(from, false)] = 0;
    dq.push_back((from, false));
    while let Some((s, c)) = dq.pop_front() {
        let d = dist[idx(s, c)];
        for &e in &out[s] {
            let t = &nfa.transitions[e];
            let w = usize::from(!t.label.is_eps());
            let nc = c || w == 1;
            let ni = idx(t.to, nc);
            if d + w < dist[ni] {
                dist[ni] = d + w;
                via[ni] = Some((e, idx(s, c)));
                if w == 0 {
                    dq.push_front((t.to, nc));
                } else {
                    dq.push_back((t.to, nc));
                }
            }
        }
    }
    let mut cur = idx(to, true);
    if dist[cur] == INF {
        return None;
    }
    let mut bytes = Vec::new();
    while let Some((e, prev)) = via[cur] {
        bytes.extend(label_byte(nfa, e));
        cur = prev;
    }
    bytes.reverse();
    Some(bytes)
}

struct Collector {
    seen: HashSet<Vec<u8>>,
    out: Vec<Vec<u8>>,
    limits: GenLimits,
}

impl Collector {
    fn full(&self) -> bool {
        self.out.len() >= self.limits.max_strings
    }

    fn push(&mut self, nfa: &Nfa, s: Vec<u8>) -> bool {
        if self.full() || s.len() > self.limits.max_string_len || self.seen.contains(&s) {
            return false;
        }
        if !nfa.accepts(&s) {
            return false;
        }
        self.seen.insert(s.clone());
        self.out.push(s);
        true
    }
}

/// Accepted strings that together traverse every byte-consuming transition
/// reachable within the limits, followed by loop repetitions and range
/// boundary variants while the budget lasts.
pub fn positive_strings(nfa: &Nfa, limits: GenLimits) -> Vec<Vec<u8>> {
    let out = nfa.out_edges();
    let inc = nfa.in_edges();
    let fwd = zero_one_bfs(nfa, &out, nfa.start, true);
    let bwd = zero_one_bfs(nfa, &inc, nfa.accept, false);
    let mut col = Collector { seen: HashSet::new(), out: Vec::new(), limits };
    if fwd.dist[nfa.accept] == INF {
        return Vec::new();
    }

    col.push(nfa, prefix_to(nfa, &fwd, nfa.accept));

    let mut covered = vec![false; nfa.transitions.len()];
    let mark = |nfa: &Nfa, s: &[u8], covered: &mut Vec<bool>| {
        for (e, _) in nfa.accepting_path_edges(s) {
            covered[e] = true;
        }
    };
    if let Some(s) = col.out.first().cloned() {
        mark(nfa, &s, &mut covered);
    }

    let mut edge_witness: Vec<(usize, Vec<u8>, usize)> = Vec::new();
    for (e, t) in nfa.transitions.iter().enumerate() {
        if t.label.is_eps() || fwd.dist[t.from] == INF || bwd.dist[t.to] == INF {
            continue;
        }
        let mut s = prefix_to(nfa, &fwd, t.from);
        let at = s.len();
        s.extend(label_byte(nfa, e));
        s.extend(suffix_from(nfa, &bwd, t.to));
        edge_witness.push((e, s.clone(), at));
        if !covered[e] && col.push(nfa, s.clone()) {
            mark(nfa, &s, &mut covered);
        }
    }

    for &back in &nfa.loop_edges {
        let t = nfa.transitions[back];
        let (body_end, body_start) = (t.from, t.to);
        if fwd.dist[body_start] == INF || bwd.dist[body_end] == INF {
            continue;
        }
        let Some(body) = nonempty_path(nfa, &out, body_start, body_end) else {
            continue;
        };
        let head = prefix_to(nfa, &fwd, body_start);
        let tail = suffix_from(nfa, &bwd, body_end);
        for k in 1..=limits.star_unroll {
            let mut s = head.clone();
            for _ in 0..k {
                s.extend_from_slice(&body);
            }
            s.extend_from_slice(&tail);
            col.push(nfa, s);
        }
    }

    for (e, s, at) in edge_witness {
        if col.full() {
            break;
        }
        if let Label::Range(r) = nfa.transitions[e].label {
            if r.hi != r.lo {
                let mut v = s;
                v[at] = r.hi;
                col.push(nfa, v);
            }
        }
    }
    col.out
}

/// Near misses of the positives that the pattern does not fully match.
///
/// Anchors are treated as empty, which over-approximates the language, so
/// every returned string is still a genuine non-match.
pub fn negative_strings<R: Rng + ?Sized>(
    ast: &RegexAst,
    positives: &[Vec<u8>],
    rng: &mut R,
    limits: GenLimits,
) -> Vec<Vec<u8>> {
    const MAX_CANDIDATES: usize = 4096;
    let nfa = match compile_nfa(ast) {
        Ok(n) => n,
        Err(_) => compile_nfa(&strip_anchors(ast)).expect("anchor-free after stripping"),
    };
    let mut seen = HashSet::new();
    let mut cands: Vec<Vec<u8>> = Vec::new();
    let mut add = |c: Vec<u8>, cands: &mut Vec<Vec<u8>>| {
        if cands.len() < MAX_CANDIDATES && c.len() <= limits.max_string_len && seen.insert(c.clone()) {
            cands.push(c);
        }
    };
    let near_misses = |ranges: &mut dyn Iterator<Item = crate::ast::ClassRange>| {
        let mut v = Vec::new();
        for r in ranges {
            if r.lo > 0 {
                v.push(r.lo - 1);
            }
            if r.hi < 255 {
                v.push(r.hi + 1);
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    };
    let all_misses = near_misses(&mut nfa.range_labels().into_iter());

    let empty = Vec::new();
    let sources: Vec<&Vec<u8>> = if positives.is_empty() { vec![&empty] } else { positives.iter().collect() };
    for p in sources {
        let n = p.len();
        for i in 0..n {
            let mut d = p.clone();
            d.remove(i);
            add(d, &mut cands);
            let mut d = p.clone();
            d.insert(i, p[i]);
            add(d, &mut cands);
            add(p[..i].to_vec(), &mut cands);
        }
        let mut per_pos: Vec<Vec<crate::ast::ClassRange>> = vec![Vec::new(); n];
        for (e, i) in nfa.accepting_path_edges(p) {
            if let Label::Range(r) = nfa.transitions[e].label {
                per_pos[i].push(r);
            }
        }
        for (i, ranges) in per_pos.into_iter().enumerate() {
            for b in near_misses(&mut ranges.into_iter()) {
                let mut d = p.clone();
                d[i] = b;
                add(d, &mut cands);
            }
        }
        for &b in &all_misses {
            let mut d = p.clone();
            d.push(b);
            add(d, &mut cands);
            let mut d = p.clone();
            d.insert(0, b);
            add(d, &mut cands);
        }
    }
    cands.shuffle(rng);
    let mut out = Vec::new();
    for c in cands {
        if out.len() >= limits.max_strings {
            break;
        }
        if !nfa.accepts(&c) {
            out.push(c);
        }
    }
    out
}
