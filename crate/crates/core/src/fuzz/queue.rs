use rand::Rng;

use crate::ast::RegexAst;

/// Energy given to a seed that produced new coverage.
pub const NEW_COVERAGE_ENERGY: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub ast: RegexAst,
    pub energy: u32,
    pub discovered_at: u64,
}

/// Patterns to mutate, picked with probability proportional to energy.
#[derive(Debug, Clone, Default)]
pub struct SeedQueue {
    seeds: Vec<Seed>,
}

impl SeedQueue {
    pub fn new() -> Self {
        SeedQueue::default()
    }

    pub fn push(&mut self, ast: RegexAst, energy: u32, discovered_at: u64) {
        self.seeds.push(Seed { ast, energy: energy.max(1), discovered_at });
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Picks a seed and decays its energy by one, never below one.
    pub fn pick<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<RegexAst> {
        let total: u64 = self.seeds.iter().map(|s| u64::from(s.energy)).sum();
        if total == 0 {
            return None;
        }
        let mut x = rng.gen_range(0..total);
        let i = self
            .seeds
            .iter()
            .position(|s| {
                let e = u64::from(s.energy);
                if x < e {
                    true
                } else {
                    x -= e;
                    false
                }
            })
            .expect("x below total");
        let s = &mut self.seeds[i];
        s.energy = s.energy.saturating_sub(1).max(1);
        Some(s.ast.clone())
    }
}
