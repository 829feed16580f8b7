use std::collections::BTreeSet;
use std::path::Path;

use crate::engine::{read_counter_file, COVERAGE_SLOTS};

/// Observed execution edges. An edge id packs a counter index with the
/// bucket its hit count falls into, so a counter moving to a higher bucket
/// counts as new behaviour.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageMap {
    edges: BTreeSet<u32>,
}

/// Hit-count class of a counter: 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+.
pub fn bucket(count: u8) -> Option<u8> {
    Some(match count {
        0 => return None,
        1 => 0,
        2 => 1,
        3 => 2,
        4..=7 => 3,
        8..=15 => 4,
        16..=31 => 5,
        32..=127 => 6,
        128..=255 => 7,
    })
}

pub fn edge_id(index: usize, class: u8) -> u32 {
    (index as u32) << 3 | u32::from(class)
}

impl CoverageMap {
    pub fn new() -> Self {
        CoverageMap::default()
    }

    pub fn from_counters(counters: &[u8]) -> Self {
        let edges = counters
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| bucket(c).map(|b| edge_id(i, b)))
            .collect();
        CoverageMap { edges }
    }

    pub fn from_edges(edges: impl IntoIterator<Item = u32>) -> Self {
        CoverageMap { edges: edges.into_iter().collect() }
    }

    /// Adds `other`'s edges; returns how many were new.
    pub fn merge(&mut self, other: &CoverageMap) -> usize {
        let before = self.edges.len();
        self.edges.extend(other.edges.iter().copied());
        self.edges.len() - before
    }

    pub fn union(&self, other: &CoverageMap) -> CoverageMap {
        let mut m = self.clone();
        m.merge(other);
        m
    }

    pub fn has_new(&self, other: &CoverageMap) -> bool {
        !other.edges.is_subset(&self.edges)
    }

    pub fn contains(&self, edge: u32) -> bool {
        self.edges.contains(&edge)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = u32> + '_ {
        self.edges.iter().copied()
    }
}

/// Coverage from the built-in engine's hit counters.
pub fn probe_builtin(counters: &[u8]) -> CoverageMap {
    CoverageMap::from_counters(counters)
}

/// Coverage from an adapter's counter file. A missing or wrongly sized file
/// yields an empty map.
pub fn probe_external(cov_file: &Path) -> CoverageMap {
    match read_counter_file(cov_file) {
        Some(c) => CoverageMap::from_counters(&c),
        None => {
            log::warn!(
                "coverage file {} missing or not {COVERAGE_SLOTS} bytes; running without coverage",
                cov_file.display()
            );
            CoverageMap::new()
        }
    }
}
