use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::ast::{Context, NodeKind, NodeRef, RegexAst, DEFAULT_CONTEXT_DEPTH};

/// Default number of subtrees kept per (kind, context) bucket.
pub const BUCKET_CAP: usize = 256;
/// Subtrees larger than this are not pooled.
pub const MAX_SUBTREE_NODES: usize = 12;

/// Fragments harvested from interesting patterns, keyed by node kind and
/// the kinds of the fragment's ancestors.
#[derive(Debug, Clone)]
pub struct SubtreePool {
    buckets: BTreeMap<(NodeKind, Context), VecDeque<NodeRef>>,
    total: usize,
    cap: usize,
    depth: usize,
}

impl Default for SubtreePool {
    fn default() -> Self {
        SubtreePool::new(DEFAULT_CONTEXT_DEPTH)
    }
}

impl SubtreePool {
    pub fn new(context_depth: usize) -> Self {
        SubtreePool::with_capacity(context_depth, BUCKET_CAP)
    }

    pub fn with_capacity(context_depth: usize, bucket_cap: usize) -> Self {
        SubtreePool { buckets: BTreeMap::new(), total: 0, cap: bucket_cap.max(1), depth: context_depth }
    }

    pub fn context_depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn bucket_len(&self, kind: NodeKind, ctx: &Context) -> usize {
        self.buckets.get(&(kind, ctx.clone())).map_or(0, |b| b.len())
    }

    /// Adds one subtree under an explicit key, evicting the oldest entry of
    /// a full bucket.
    pub fn add(&mut self, ctx: Context, node: NodeRef) {
        let b = self.buckets.entry((node.kind(), ctx)).or_default();
        if b.len() >= self.cap {
            b.pop_front();
        } else {
            self.total += 1;
        }
        b.push_back(node);
    }

    /// Pools every internal subtree of `ast` that is small enough.
    pub fn insert(&mut self, ast: &RegexAst) {
        for path in ast.collect_internal_nodes() {
            let node = ast.get(&path).expect("path from the same tree").clone();
            if node.node_count() > MAX_SUBTREE_NODES {
                continue;
            }
            let ctx = ast.extract_context(&path, self.depth).expect("path from the same tree");
            self.add(ctx, node);
        }
    }

    /// A random subtree of `kind` recorded under exactly `ctx`.
    pub fn get<R: Rng + ?Sized>(&self, kind: NodeKind, ctx: &Context, rng: &mut R) -> Option<NodeRef> {
        let b = self.buckets.get(&(kind, ctx.clone()))?;
        (!b.is_empty()).then(|| b[rng.gen_range(0..b.len())].clone())
    }

    /// A random subtree of `kind` from any context, uniform over entries.
    pub fn get_any_context<R: Rng + ?Sized>(&self, kind: NodeKind, rng: &mut R) -> Option<NodeRef> {
        let of_kind: Vec<&VecDeque<NodeRef>> =
            self.buckets.range((kind, Context::default())..).take_while(|((k, _), _)| *k == kind).map(|(_, b)| b).collect();
        let n: usize = of_kind.iter().map(|b| b.len()).sum();
        if n == 0 {
            return None;
        }
        let mut i = rng.gen_range(0..n);
        for b in of_kind {
            if i < b.len() {
                return Some(b[i].clone());
            }
            i -= b.len();
        }
        unreachable!("index within total")
    }
}
