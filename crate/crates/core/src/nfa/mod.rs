//! Thompson automata for anchor-free patterns, and the input strings
//! derived from them.

mod strings;

use std::sync::Arc;

use crate::ast::{ClassRange, Node, NodeRef, RegexAst, DOT_RANGES};

pub use strings::{negative_strings, positive_strings, GenLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Eps,
    Range(ClassRange),
}

impl Label {
    pub fn accepts(&self, b: u8) -> bool {
        match self {
            Label::Eps => false,
            Label::Range(r) => r.contains(b),
        }
    }

    pub fn is_eps(&self) -> bool {
        matches!(self, Label::Eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: usize,
    pub label: Label,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub states: usize,
    pub transitions: Vec<Transition>,
    pub start: usize,
    pub accept: usize,
    /// Indices of the epsilon transitions that close a loop (the edge from
    /// the end of a starred body back to its beginning).
    pub loop_edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NfaError {
    #[error("pattern contains anchors and has no automaton")]
    NonKleeneInput,
}

/// Compiles an anchor-free pattern.
pub fn compile_nfa(ast: &RegexAst) -> Result<Nfa, NfaError> {
    if !ast.is_kleene() {
        return Err(NfaError::NonKleeneInput);
    }
    let unrolled = unroll_repeats(ast.root());
    let mut b = Builder::default();
    let (start, accept) = b.build(&unrolled);
    Ok(Nfa {
        states: b.states,
        transitions: b.transitions,
        start,
        accept,
        loop_edges: b.loop_edges,
    })
}

/// Replaces bounded repetition with copies: `r{n,m}` becomes n copies of r
/// followed by m - n nested optionals, `r{n,}` becomes n copies and a star.
pub fn unroll_repeats(node: &NodeRef) -> NodeRef {
    match &**node {
        Node::Repeat { child, min, max, greedy } => {
            let child = unroll_repeats(child);
            let mut items: Vec<NodeRef> = (0..*min).map(|_| child.clone()).collect();
            match max {
                None => items.push(Arc::new(Node::Star { child: child.clone(), greedy: *greedy })),
                Some(max) => {
                    let mut tail: Option<NodeRef> = None;
                    for _ in *min..*max {
                        let body = match tail.take() {
                            None => child.clone(),
                            Some(t) => Arc::new(Node::Concat(vec![child.clone(), t])),
                        };
                        tail = Some(Arc::new(Node::Optional { child: body, greedy: *greedy }));
                    }
                    items.extend(tail);
                }
            }
            Arc::new(Node::concat(items))
        }
        n if n.is_internal() => {
            let kids = n.children().iter().map(unroll_repeats).collect();
            Arc::new(n.with_children(kids))
        }
        _ => node.clone(),
    }
}

/// Replaces anchors with the empty pattern. The result accepts a superset of
/// the original full-match language.
pub fn strip_anchors(ast: &RegexAst) -> RegexAst {
    fn go(node: &NodeRef) -> NodeRef {
        match &**node {
            Node::AnchorStart | Node::AnchorEnd => Arc::new(Node::Empty),
            n if n.is_internal() => Arc::new(n.with_children(n.children().iter().map(go).collect())),
            _ => node.clone(),
        }
    }
    RegexAst::new(go(ast.root()))
}

#[derive(Default)]
struct Builder {
    states: usize,
    transitions: Vec<Transition>,
    loop_edges: Vec<usize>,
}

impl Builder {
    fn state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn edge(&mut self, from: usize, label: Label, to: usize) -> usize {
        self.transitions.push(Transition { from, label, to });
        self.transitions.len() - 1
    }

    fn eps(&mut self, from: usize, to: usize) -> usize {
        self.edge(from, Label::Eps, to)
    }

    fn ranges(&mut self, ranges: &[ClassRange]) -> (usize, usize) {
        let s = self.state();
        let a = self.state();
        for r in ranges {
            self.edge(s, Label::Range(*r), a);
        }
        (s, a)
    }

    fn build(&mut self, node: &Node) -> (usize, usize) {
        match node {
            Node::Empty => {
                let s = self.state();
                let a = self.state();
                self.eps(s, a);
                (s, a)
            }
            Node::Fail => (self.state(), self.state()),
            Node::Literal(b) => self.ranges(&[ClassRange::single(*b)]),
            Node::Dot => self.ranges(&DOT_RANGES),
            Node::Class(c) => self.ranges(&c.byte_ranges()),
            Node::Group(c) => self.build(c),
            Node::Concat(cs) => {
                let parts: Vec<_> = cs.iter().map(|c| self.build(c)).collect();
                for w in parts.windows(2) {
                    self.eps(w[0].1, w[1].0);
                }
                match (parts.first(), parts.last()) {
                    (Some(f), Some(l)) => (f.0, l.1),
                    _ => self.build(&Node::Empty),
                }
            }
            Node::Alt(cs) => {
                let s = self.state();
                let a = self.state();
                for c in cs {
                    let (cs_, ca) = self.build(c);
                    self.eps(s, cs_);
                    self.eps(ca, a);
                }
                (s, a)
            }
            Node::Star { child, .. } => {
                let s = self.state();
                let a = self.state();
                let (cs, ca) = self.build(child);
                self.eps(s, cs);
                self.eps(s, a);
                let back = self.eps(ca, cs);
                self.loop_edges.push(back);
                self.eps(ca, a);
                (s, a)
            }
            Node::Plus { child, .. } => {
                let s = self.state();
                let a = self.state();
                let (cs, ca) = self.build(child);
                self.eps(s, cs);
                let back = self.eps(ca, cs);
                self.loop_edges.push(back);
                self.eps(ca, a);
                (s, a)
            }
            Node::Optional { child, .. } => {
                let s = self.state();
                let a = self.state();
                let (cs, ca) = self.build(child);
                self.eps(s, cs);
                self.eps(s, a);
                self.eps(ca, a);
                (s, a)
            }
            Node::Repeat { .. } => self.build(&unroll_repeats(&Arc::new(node.clone()))),
            Node::AnchorStart | Node::AnchorEnd => unreachable!("anchors rejected before building"),
        }
    }
}

impl Nfa {
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        out
    }

    pub fn in_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.states];
        for (i, t) in self.transitions.iter().enumerate() {
            inc[t.to].push(i);
        }
        inc
    }

    fn eps_closure(&self, set: &mut [bool], out: &[Vec<usize>]) {
        let mut stack: Vec<usize> = (0..self.states).filter(|&s| set[s]).collect();
        while let Some(s) = stack.pop() {
            for &e in &out[s] {
                let t = &self.transitions[e];
                if t.label.is_eps() && !set[t.to] {
                    set[t.to] = true;
                    stack.push(t.to);
                }
            }
        }
    }

    /// Full-match membership by subset simulation.
    pub fn accepts(&self, input: &[u8]) -> bool {
        let out = self.out_edges();
        let mut cur = vec![false; self.states];
        cur[self.start] = true;
        self.eps_closure(&mut cur, &out);
        for &b in input {
            let mut next = vec![false; self.states];
            let mut any = false;
            for (s, _) in cur.iter().enumerate().filter(|(_, on)| **on) {
                for &e in &out[s] {
                    let t = &self.transitions[e];
                    if t.label.accepts(b) {
                        next[t.to] = true;
                        any = true;
                    }
                }
            }
            if !any {
                return false;
            }
            self.eps_closure(&mut next, &out);
            cur = next;
        }
        cur[self.accept]
    }

    /// Byte-consuming transitions that lie on some accepting path for
    /// `input`, each with the input offset where it fires.
    pub fn accepting_path_edges(&self, input: &[u8]) -> Vec<(usize, usize)> {
        let out = self.out_edges();
        let inc = self.in_edges();
        let n = input.len();
        let mut fwd = vec![vec![false; self.states]; n + 1];
        fwd[0][self.start] = true;
        self.eps_closure(&mut fwd[0], &out);
        for i in 0..n {
            let mut next = vec![false; self.states];
            for e in &self.transitions {
                if fwd[i][e.from] && e.label.accepts(input[i]) {
                    next[e.to] = true;
                }
            }
            self.eps_closure(&mut next, &out);
            fwd[i + 1] = next;
        }
        let mut bwd = vec![vec![false; self.states]; n + 1];
        bwd[n][self.accept] = true;
        self.back_closure(&mut bwd[n], &inc);
        for i in (0..n).rev() {
            let mut prev = vec![false; self.states];
            for e in &self.transitions {
                if bwd[i + 1][e.to] && e.label.accepts(input[i]) {
                    prev[e.from] = true;
                }
            }
            self.back_closure(&mut prev, &inc);
            bwd[i] = prev;
        }
        let mut hits = Vec::new();
        for i in 0..n {
            for (idx, e) in self.transitions.iter().enumerate() {
                if fwd[i][e.from] && e.label.accepts(input[i]) && bwd[i + 1][e.to] {
                    hits.push((idx, i));
                }
            }
        }
        hits
    }

    fn back_closure(&self, set: &mut [bool], inc: &[Vec<usize>]) {
        let mut stack: Vec<usize> = (0..self.states).filter(|&s| set[s]).collect();
        while let Some(s) = stack.pop() {
            for &e in &inc[s] {
                let t = &self.transitions[e];
                if t.label.is_eps() && !set[t.from] {
                    set[t.from] = true;
                    stack.push(t.from);
                }
            }
        }
    }

    /// All range labels, used to pick near-miss bytes.
    pub fn range_labels(&self) -> Vec<ClassRange> {
        let mut v: Vec<ClassRange> = self
            .transitions
            .iter()
            .filter_map(|t| match t.label {
                Label::Range(r) => Some(r),
                Label::Eps => None,
            })
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn byte_edge_count(&self) -> usize {
        self.transitions.iter().filter(|t| !t.label.is_eps()).count()
    }
}
