//! Random pattern generation by stochastic grammar expansion.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{CharClass, ClassRange, Node, NodeRef, RegexAst};

#[derive(Debug, Clone)]
pub struct PatternGenConfig {
    /// Bytes used for literals and class endpoints.
    pub alphabet: Vec<u8>,
    pub allow_anchors: bool,
    pub allow_lazy: bool,
    pub allow_dot: bool,
    pub allow_empty: bool,
    /// Upper limit for `{n,m}` bounds.
    pub max_repeat: u32,
}

impl Default for PatternGenConfig {
    fn default() -> Self {
        PatternGenConfig {
            alphabet: b"abcxyz019-_.@ ".to_vec(),
            allow_anchors: true,
            allow_lazy: true,
            allow_dot: true,
            allow_empty: true,
            max_repeat: 3,
        }
    }
}

impl PatternGenConfig {
    /// Anchor-free, greedy-only patterns over a small alphabet; what
    /// brute-force language comparisons want.
    pub fn kleene(alphabet: &[u8]) -> Self {
        PatternGenConfig {
            alphabet: alphabet.to_vec(),
            allow_anchors: false,
            allow_lazy: false,
            allow_dot: true,
            allow_empty: true,
            max_repeat: 2,
        }
    }
}

/// A pattern of at most `budget` nodes drawn with the default configuration.
pub fn random_pattern<R: Rng + ?Sized>(rng: &mut R, budget: usize) -> RegexAst {
    random_pattern_with(rng, budget, &PatternGenConfig::default())
}

pub fn random_pattern_with<R: Rng + ?Sized>(
    rng: &mut R,
    budget: usize,
    cfg: &PatternGenConfig,
) -> RegexAst {
    assert!(!cfg.alphabet.is_empty(), "alphabet must not be empty");
    let mut g = Gen { rng, cfg };
    RegexAst::new(g.node(budget.max(1), Slot::Top))
}

/// Where a node is going to sit; restricts which kinds keep the tree
/// canonical (so that it survives a serialize/parse round trip unchanged).
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Top,
    AltBranch,
    ConcatItem,
    QuantBody,
}

#[derive(Clone, Copy)]
enum Pick {
    Leaf,
    Concat,
    Alt,
    Quant,
    Group,
}

struct Gen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    cfg: &'a PatternGenConfig,
}

impl<R: Rng + ?Sized> Gen<'_, R> {
    fn node(&mut self, budget: usize, slot: Slot) -> Node {
        if budget == 1 {
            return self.leaf(slot);
        }
        let mut options: Vec<(Pick, u32)> = vec![(Pick::Leaf, 2)];
        if slot == Slot::QuantBody {
            if budget >= 3 {
                options.push((Pick::Group, 4));
            }
        } else {
            options.push((Pick::Quant, 3));
            if budget >= 2 {
                options.push((Pick::Group, 1));
            }
            if budget >= 3 && slot != Slot::ConcatItem {
                options.push((Pick::Concat, 4));
            }
            if budget >= 3 && slot != Slot::ConcatItem && slot != Slot::AltBranch {
                options.push((Pick::Alt, 3));
            }
        }
        let pick = options
            .choose_weighted(self.rng, |o| o.1)
            .map(|o| o.0)
            .unwrap_or(Pick::Leaf);
        match pick {
            Pick::Leaf => self.leaf(slot),
            Pick::Group => Node::Group(Arc::new(self.node(budget - 1, Slot::Top))),
            Pick::Concat => {
                let kids = self.children(budget - 1, Slot::ConcatItem);
                Node::concat(kids)
            }
            Pick::Alt => {
                let kids = self.children(budget - 1, Slot::AltBranch);
                Node::alt(kids)
            }
            Pick::Quant => self.quantifier(budget),
        }
    }

    fn children(&mut self, budget: usize, slot: Slot) -> Vec<NodeRef> {
        let n = self.rng.gen_range(2..=budget.min(4));
        let mut shares = vec![1usize; n];
        for _ in 0..(budget - n) {
            // Leave some budget unused so trees vary in size.
            if self.rng.gen_bool(0.7) {
                let i = self.rng.gen_range(0..n);
                shares[i] += 1;
            }
        }
        shares.into_iter().map(|b| Arc::new(self.node(b, slot))).collect()
    }

    fn quantifier(&mut self, budget: usize) -> Node {
        let child = Arc::new(self.node(budget - 1, Slot::QuantBody));
        let greedy = !(self.cfg.allow_lazy && self.rng.gen_bool(0.1));
        match self.rng.gen_range(0..4) {
            0 => Node::Star { child, greedy },
            1 => Node::Plus { child, greedy },
            2 => Node::Optional { child, greedy },
            _ => {
                let min = self.rng.gen_range(0..=self.cfg.max_repeat);
                let max = if self.rng.gen_bool(0.2) {
                    None
                } else {
                    Some(self.rng.gen_range(min..=self.cfg.max_repeat.max(min)))
                };
                Node::Repeat { child, min, max, greedy }
            }
        }
    }

    fn leaf(&mut self, slot: Slot) -> Node {
        let roll = self.rng.gen_range(0..100);
        if self.cfg.allow_anchors && slot == Slot::ConcatItem && roll < 6 {
            return if self.rng.gen_bool(0.5) { Node::AnchorStart } else { Node::AnchorEnd };
        }
        if self.cfg.allow_empty && slot == Slot::AltBranch && roll < 10 {
            return Node::Empty;
        }
        match roll {
            0..=64 => Node::Literal(*self.cfg.alphabet.choose(self.rng).unwrap()),
            65..=87 => Node::Class(self.class()),
            _ if self.cfg.allow_dot => Node::Dot,
            _ => Node::Literal(*self.cfg.alphabet.choose(self.rng).unwrap()),
        }
    }

    fn class(&mut self) -> CharClass {
        let n = self.rng.gen_range(1..=2);
        let ranges = (0..n)
            .map(|_| {
                let a = *self.cfg.alphabet.choose(self.rng).unwrap();
                let b = *self.cfg.alphabet.choose(self.rng).unwrap();
                ClassRange::new(a.min(b), a.max(b))
            })
            .collect();
        CharClass { negated: self.rng.gen_bool(0.2), ranges }
    }
}
