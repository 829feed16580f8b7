//! Pattern syntax trees.
//!
//! Trees are immutable and reference counted so that rewrites can share
//! every subtree they do not touch. A [`RegexAst`] is cheap to clone and
//! safe to hand to other threads.

mod gen;
mod parse;
mod print;

use std::fmt;
use std::sync::Arc;

pub use gen::{random_pattern, random_pattern_with, PatternGenConfig};
pub use parse::{parse, parse_str, ParseError, ParseErrorKind, MAX_NESTING, MAX_REPEAT};
pub use print::serialize;

pub type NodeRef = Arc<Node>;

/// Default number of ancestors recorded in a [`Context`].
pub const DEFAULT_CONTEXT_DEPTH: usize = 2;

/// Inclusive byte range inside a bracket class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassRange {
    pub lo: u8,
    pub hi: u8,
}

impl ClassRange {
    pub fn new(lo: u8, hi: u8) -> Self {
        debug_assert!(lo <= hi);
        ClassRange { lo, hi }
    }

    pub fn single(b: u8) -> Self {
        ClassRange { lo: b, hi: b }
    }

    pub fn contains(&self, b: u8) -> bool {
        self.lo <= b && b <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharClass {
    pub negated: bool,
    pub ranges: Vec<ClassRange>,
}

impl CharClass {
    pub fn contains(&self, b: u8) -> bool {
        self.ranges.iter().any(|r| r.contains(b)) != self.negated
    }

    /// The set of bytes matched, as sorted disjoint ranges.
    pub fn byte_ranges(&self) -> Vec<ClassRange> {
        let mut bits = [false; 256];
        for r in &self.ranges {
            for b in r.lo..=r.hi {
                bits[b as usize] = true;
            }
        }
        if self.negated {
            bits.iter_mut().for_each(|x| *x = !*x);
        }
        ranges_from_bits(&bits)
    }
}

pub(crate) fn ranges_from_bits(bits: &[bool; 256]) -> Vec<ClassRange> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=256 {
        let on = i < 256 && bits[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(ClassRange::new(s as u8, (i - 1) as u8));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Byte ranges matched by `.`: everything except a line feed.
pub const DOT_RANGES: [ClassRange; 2] = [
    ClassRange { lo: 0x00, hi: 0x09 },
    ClassRange { lo: 0x0b, hi: 0xff },
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    /// Matches the empty string (`(?:)`).
    Empty,
    /// Never matches (`(?!)`).
    Fail,
    Literal(u8),
    Dot,
    Class(CharClass),
    Concat(Vec<NodeRef>),
    Alt(Vec<NodeRef>),
    Star { child: NodeRef, greedy: bool },
    Plus { child: NodeRef, greedy: bool },
    Optional { child: NodeRef, greedy: bool },
    Repeat { child: NodeRef, min: u32, max: Option<u32>, greedy: bool },
    Group(NodeRef),
    AnchorStart,
    AnchorEnd,
}

/// Node type tag, used for pool indexing and syntactic contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Empty,
    Fail,
    Literal,
    Dot,
    Class,
    Concat,
    Alt,
    Star,
    Plus,
    Optional,
    Repeat,
    Group,
    AnchorStart,
    AnchorEnd,
}

impl NodeKind {
    pub fn is_quantifier(self) -> bool {
        matches!(self, NodeKind::Star | NodeKind::Plus | NodeKind::Optional | NodeKind::Repeat)
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Empty => "Empty",
            NodeKind::Fail => "Fail",
            NodeKind::Literal => "Literal",
            NodeKind::Dot => "Dot",
            NodeKind::Class => "Class",
            NodeKind::Concat => "Concat",
            NodeKind::Alt => "Alt",
            NodeKind::Star => "Star",
            NodeKind::Plus => "Plus",
            NodeKind::Optional => "Optional",
            NodeKind::Repeat => "Repeat",
            NodeKind::Group => "Group",
            NodeKind::AnchorStart => "AnchorStart",
            NodeKind::AnchorEnd => "AnchorEnd",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Empty => NodeKind::Empty,
            Node::Fail => NodeKind::Fail,
            Node::Literal(_) => NodeKind::Literal,
            Node::Dot => NodeKind::Dot,
            Node::Class(_) => NodeKind::Class,
            Node::Concat(_) => NodeKind::Concat,
            Node::Alt(_) => NodeKind::Alt,
            Node::Star { .. } => NodeKind::Star,
            Node::Plus { .. } => NodeKind::Plus,
            Node::Optional { .. } => NodeKind::Optional,
            Node::Repeat { .. } => NodeKind::Repeat,
            Node::Group(_) => NodeKind::Group,
            Node::AnchorStart => NodeKind::AnchorStart,
            Node::AnchorEnd => NodeKind::AnchorEnd,
        }
    }

    pub fn children(&self) -> &[NodeRef] {
        match self {
            Node::Concat(cs) | Node::Alt(cs) => cs,
            Node::Star { child, .. }
            | Node::Plus { child, .. }
            | Node::Optional { child, .. }
            | Node::Repeat { child, .. }
            | Node::Group(child) => std::slice::from_ref(child),
            _ => &[],
        }
    }

    /// Same node with its children swapped out. The child count must match.
    pub fn with_children(&self, mut children: Vec<NodeRef>) -> Node {
        assert_eq!(children.len(), self.children().len(), "child count mismatch");
        match self {
            Node::Concat(_) => Node::Concat(children),
            Node::Alt(_) => Node::Alt(children),
            Node::Star { greedy, .. } => Node::Star { child: children.pop().unwrap(), greedy: *greedy },
            Node::Plus { greedy, .. } => Node::Plus { child: children.pop().unwrap(), greedy: *greedy },
            Node::Optional { greedy, .. } => {
                Node::Optional { child: children.pop().unwrap(), greedy: *greedy }
            }
            Node::Repeat { min, max, greedy, .. } => Node::Repeat {
                child: children.pop().unwrap(),
                min: *min,
                max: *max,
                greedy: *greedy,
            },
            Node::Group(_) => Node::Group(children.pop().unwrap()),
            leaf => leaf.clone(),
        }
    }

    /// Concatenation that collapses the degenerate arities.
    pub fn concat(mut children: Vec<NodeRef>) -> Node {
        match children.len() {
            0 => Node::Empty,
            1 => Arc::unwrap_or_clone(children.pop().unwrap()),
            _ => Node::Concat(children),
        }
    }

    /// Alternation that collapses the degenerate arities.
    pub fn alt(mut children: Vec<NodeRef>) -> Node {
        match children.len() {
            0 => Node::Fail,
            1 => Arc::unwrap_or_clone(children.pop().unwrap()),
            _ => Node::Alt(children),
        }
    }

    pub fn star(child: NodeRef) -> Node {
        Node::Star { child, greedy: true }
    }

    pub fn group(child: impl Into<NodeRef>) -> Node {
        Node::Group(child.into())
    }

    pub fn is_internal(&self) -> bool {
        !self.children().is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn is_greedy(&self) -> bool {
        match self {
            Node::Star { greedy, .. }
            | Node::Plus { greedy, .. }
            | Node::Optional { greedy, .. }
            | Node::Repeat { greedy, .. } => *greedy,
            _ => true,
        }
    }

    /// True when no anchor occurs anywhere in this subtree.
    pub fn is_kleene(&self) -> bool {
        match self {
            Node::AnchorStart | Node::AnchorEnd => false,
            n => n.children().iter().all(|c| c.is_kleene()),
        }
    }

    /// Can this subtree match the empty string?
    pub fn nullable(&self) -> bool {
        match self {
            Node::Empty | Node::AnchorStart | Node::AnchorEnd => true,
            Node::Fail | Node::Literal(_) | Node::Dot | Node::Class(_) => false,
            Node::Concat(cs) => cs.iter().all(|c| c.nullable()),
            Node::Alt(cs) => cs.iter().any(|c| c.nullable()),
            Node::Star { .. } | Node::Optional { .. } => true,
            Node::Plus { child, .. } => child.nullable(),
            Node::Repeat { child, min, .. } => *min == 0 || child.nullable(),
            Node::Group(c) => c.nullable(),
        }
    }

    /// Strip any number of enclosing groups.
    pub fn ungroup(&self) -> &Node {
        let mut n = self;
        while let Node::Group(c) = n {
            n = c;
        }
        n
    }
}

/// Wraps `node` in a group when it could not otherwise sit directly under a
/// parent of kind `parent` and survive a print/parse round trip.
pub fn fit_under(node: NodeRef, parent: Option<NodeKind>) -> NodeRef {
    let wrap = match parent {
        None | Some(NodeKind::Group) => false,
        Some(NodeKind::Concat) => matches!(*node, Node::Concat(_) | Node::Alt(_)),
        Some(NodeKind::Alt) => matches!(*node, Node::Alt(_)),
        Some(k) if k.is_quantifier() => !matches!(
            *node,
            Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Group(_) | Node::Empty | Node::Fail
        ),
        Some(_) => false,
    };
    if wrap {
        Arc::new(Node::Group(node))
    } else {
        node
    }
}

/// Child indices from the root; the empty path is the root itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, idx: usize) -> Self {
        let mut steps = self.0.clone();
        steps.push(idx);
        NodePath(steps)
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("/"))
    }
}

/// Ancestor kinds of a node, nearest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context(pub Vec<NodeKind>);

impl Context {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("path {0} does not resolve in this tree")]
    InvalidPath(NodePath),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegexAst {
    root: NodeRef,
}

impl RegexAst {
    pub fn new(root: impl Into<NodeRef>) -> Self {
        RegexAst { root: root.into() }
    }

    pub fn root(&self) -> &NodeRef {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn get(&self, path: &NodePath) -> Option<&NodeRef> {
        let mut cur = &self.root;
        for &i in &path.0 {
            cur = cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Paths of all nodes with at least one child, in preorder.
    pub fn collect_internal_nodes(&self) -> Vec<NodePath> {
        let mut out = Vec::new();
        self.walk(|path, node| {
            if node.is_internal() {
                out.push(path.clone());
            }
        });
        out
    }

    /// Every node with its path, preorder.
    pub fn walk(&self, mut f: impl FnMut(&NodePath, &NodeRef)) {
        let mut stack = vec![(NodePath::root(), &self.root)];
        while let Some((path, node)) = stack.pop() {
            f(&path, node);
            for (i, c) in node.children().iter().enumerate().rev() {
                stack.push((path.child(i), c));
            }
        }
    }

    pub fn extract_context(&self, target: &NodePath, depth: usize) -> Result<Context, AstError> {
        let mut kinds = Vec::with_capacity(target.len());
        let mut cur = &self.root;
        for &i in &target.0 {
            kinds.push(cur.kind());
            cur = cur
                .children()
                .get(i)
                .ok_or_else(|| AstError::InvalidPath(target.clone()))?;
        }
        kinds.reverse();
        kinds.truncate(depth);
        Ok(Context(kinds))
    }

    /// Copy-on-write substitution: only the nodes on the root-to-target path
    /// are rebuilt.
    pub fn replace(&self, target: &NodePath, repl: impl Into<NodeRef>) -> Result<RegexAst, AstError> {
        fn go(node: &NodeRef, steps: &[usize], repl: NodeRef) -> Option<NodeRef> {
            let Some((&i, rest)) = steps.split_first() else {
                return Some(repl);
            };
            let kids = node.children();
            let new_child = go(kids.get(i)?, rest, repl)?;
            let mut next: Vec<NodeRef> = kids.to_vec();
            next[i] = new_child;
            Some(Arc::new(node.with_children(next)))
        }
        go(&self.root, &target.0, repl.into())
            .map(RegexAst::new)
            .ok_or_else(|| AstError::InvalidPath(target.clone()))
    }

    /// [`RegexAst::replace`], grouping the replacement where its new parent
    /// requires it.
    pub fn replace_fitted(&self, target: &NodePath, repl: NodeRef) -> Result<RegexAst, AstError> {
        let parent = match target.parent() {
            Some(p) => Some(self.get(&p).ok_or_else(|| AstError::InvalidPath(target.clone()))?.kind()),
            None => None,
        };
        self.replace(target, fit_under(repl, parent))
    }

    pub fn is_kleene_fragment(&self, at: &NodePath) -> Result<bool, AstError> {
        self.get(at)
            .map(|n| n.is_kleene())
            .ok_or_else(|| AstError::InvalidPath(at.clone()))
    }

    pub fn is_kleene(&self) -> bool {
        self.root.is_kleene()
    }

    pub fn to_pattern(&self) -> String {
        serialize(self)
    }
}

impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

impl From<Node> for RegexAst {
    fn from(n: Node) -> Self {
        RegexAst::new(n)
    }
}

/// Convenience constructors, mostly for tests.
pub mod build {
    use super::*;

    pub fn lit(b: u8) -> NodeRef {
        Arc::new(Node::Literal(b))
    }

    pub fn cat(children: Vec<NodeRef>) -> NodeRef {
        Arc::new(Node::concat(children))
    }

    pub fn alt(children: Vec<NodeRef>) -> NodeRef {
        Arc::new(Node::alt(children))
    }

    pub fn star(child: NodeRef) -> NodeRef {
        Arc::new(Node::Star { child, greedy: true })
    }

    pub fn plus(child: NodeRef) -> NodeRef {
        Arc::new(Node::Plus { child, greedy: true })
    }

    pub fn opt(child: NodeRef) -> NodeRef {
        Arc::new(Node::Optional { child, greedy: true })
    }

    pub fn group(child: NodeRef) -> NodeRef {
        Arc::new(Node::Group(child))
    }

    pub fn class(negated: bool, ranges: &[(u8, u8)]) -> NodeRef {
        Arc::new(Node::Class(CharClass {
            negated,
            ranges: ranges.iter().map(|&(lo, hi)| ClassRange::new(lo, hi)).collect(),
        }))
    }

    pub fn empty() -> NodeRef {
        Arc::new(Node::Empty)
    }

    pub fn fail() -> NodeRef {
        Arc::new(Node::Fail)
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    fn p(s: &str) -> RegexAst {
        parse_str(s).unwrap()
    }

    #[test]
    fn internal_nodes_preorder() {
        assert!(p("a").collect_internal_nodes().is_empty());

        let ast = p("(?:ab)*");
        let nodes = ast.collect_internal_nodes();
        let kinds: Vec<_> = nodes.iter().map(|n| ast.get(n).unwrap().kind()).collect();
        assert_eq!(kinds, vec![NodeKind::Star, NodeKind::Group, NodeKind::Concat]);

        let ast = p("a|b*");
        let kinds: Vec<_> = ast
            .collect_internal_nodes()
            .iter()
            .map(|n| ast.get(n).unwrap().kind())
            .collect();
        assert_eq!(kinds, vec![NodeKind::Alt, NodeKind::Star]);
    }

    #[test]
    fn context_of_nodes() {
        let ast = p("(?:ab)*");
        let concat = NodePath(vec![0, 0]);
        assert_eq!(ast.get(&concat).unwrap().kind(), NodeKind::Concat);
        assert_eq!(
            ast.extract_context(&concat, 2).unwrap(),
            Context(vec![NodeKind::Group, NodeKind::Star])
        );

        let ast = p("a|b");
        assert!(ast.extract_context(&NodePath::root(), 2).unwrap().is_empty());

        // ((?:a|b)c)* : Star > Group > Concat > Group > Alt
        let ast = p("((?:a|b)c)*");
        let alt = NodePath(vec![0, 0, 0, 0]);
        assert_eq!(ast.get(&alt).unwrap().kind(), NodeKind::Alt);
        assert_eq!(
            ast.extract_context(&alt, 2).unwrap(),
            Context(vec![NodeKind::Group, NodeKind::Concat])
        );
        assert_eq!(
            ast.extract_context(&alt, 10).unwrap(),
            Context(vec![NodeKind::Group, NodeKind::Concat, NodeKind::Group, NodeKind::Star])
        );

        assert!(ast.extract_context(&NodePath(vec![3]), 2).is_err());
    }

    #[test]
    fn replace_child_and_root() {
        let ast = p("a|b");
        let out = ast.replace(&NodePath(vec![1]), star(lit(b'c'))).unwrap();
        assert_eq!(serialize(&out), "a|c*");
        assert_eq!(serialize(&ast), "a|b");

        let ast = p("ab");
        let out = ast.replace(&NodePath::root(), fail()).unwrap();
        assert_eq!(serialize(&out), "(?!)");

        assert!(ast.replace(&NodePath(vec![5]), fail()).is_err());
    }

    #[test]
    fn replace_shares_untouched_subtrees() {
        let x = group(cat(vec![lit(b'x'), lit(b'y')]));
        let y = lit(b'z');
        let ast = RegexAst::new(alt(vec![x.clone(), y]));
        let out = ast.replace(&NodePath(vec![1]), lit(b'q')).unwrap();
        let kept = &out.root().children()[0];
        assert!(Arc::ptr_eq(kept, &x));
        assert!(Arc::ptr_eq(&ast.root().children()[0], &x));
        assert!(!Arc::ptr_eq(out.root(), ast.root()));
    }

    #[test]
    fn kleene_fragments() {
        assert!(p("(a|b)*c").is_kleene_fragment(&NodePath::root()).unwrap());
        assert!(!p("^a").is_kleene_fragment(&NodePath::root()).unwrap());
        let ast = p("^(?:ab)");
        let group = NodePath(vec![1]);
        assert_eq!(ast.get(&group).unwrap().kind(), NodeKind::Group);
        assert!(ast.is_kleene_fragment(&group).unwrap());
    }

    #[test]
    fn singleton_collapse() {
        assert_eq!(Node::concat(vec![lit(b'a')]), Node::Literal(b'a'));
        assert_eq!(Node::alt(vec![lit(b'a')]), Node::Literal(b'a'));
        assert_eq!(Node::concat(vec![]), Node::Empty);
    }

    #[test]
    fn class_byte_ranges() {
        let c = CharClass { negated: true, ranges: vec![ClassRange::new(b'b', b'y')] };
        assert_eq!(
            c.byte_ranges(),
            vec![ClassRange::new(0, b'a'), ClassRange::new(b'z', 255)]
        );
        assert!(c.contains(b'a') && !c.contains(b'c'));
    }
}
