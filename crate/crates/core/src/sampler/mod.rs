//! Randomness and the two sampling primitives the dynamics need:
//! weight-proportional choice from a mutable registry and uniform choice of
//! a fixed-size vertex subset.

mod fenwick;
mod rng;

use std::hash::Hash;

use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;

pub use fenwick::Fenwick;
pub use rng::{RngStream, StreamId, GENERATOR_ID};

use crate::error::{Error, Result};

/// Keys with positive integer weights, sampled proportionally to weight.
///
/// Keys get dense slots in insertion order; a [`Fenwick`] tree over the slots
/// keeps increments and draws at O(log M).
#[derive(Debug, Clone)]
pub struct WeightedIndex<K> {
    keys: IndexSet<K, FxBuildHasher>,
    weights: Vec<u64>,
    tree: Fenwick,
}

impl<K: Hash + Eq + Clone> Default for WeightedIndex<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Hash + Eq + Clone> WeightedIndex<K> {
    pub fn new() -> Self {
        Self {
            keys: IndexSet::default(),
            weights: Vec::new(),
            tree: Fenwick::new(),
        }
    }

    /// Rebuilds from `(key, weight)` pairs, keeping their order as slot order.
    /// Repeated keys are merged.
    pub fn from_entries(entries: impl IntoIterator<Item = (K, u64)>) -> Self {
        let mut keys: IndexSet<K, FxBuildHasher> = IndexSet::default();
        let mut weights = Vec::new();
        for (key, w) in entries {
            let (slot, fresh) = keys.insert_full(key);
            if fresh {
                weights.push(w);
            } else {
                weights[slot] += w;
            }
        }
        let tree = Fenwick::from_weights(&weights);
        Self {
            keys,
            weights,
            tree,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.tree.total()
    }

    pub fn weight(&self, key: &K) -> u64 {
        self.keys
            .get_index_of(key)
            .map_or(0, |slot| self.weights[slot])
    }

    /// Adds `delta` to the weight of `key`, inserting it if absent. Returns
    /// `true` when the key was new.
    pub fn increment(&mut self, key: &K, delta: u64) -> bool {
        debug_assert!(delta >= 1);
        let (slot, fresh) = self.keys.insert_full(key.clone());
        if fresh {
            self.weights.push(delta);
            self.tree.push(delta);
        } else {
            self.weights[slot] += delta;
            self.tree.add(slot, delta);
        }
        fresh
    }

    /// Draws a key with probability `weight / total`.
    pub fn sample(&self, rng: &mut RngStream) -> Result<&K> {
        if self.total() == 0 {
            return Err(Error::EmptyIndex);
        }
        let slot = self.tree.search(rng.below(self.total()));
        Ok(&self.keys[slot])
    }

    /// Entries in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> + '_ {
        self.keys.iter().zip(self.weights.iter().copied())
    }

    /// Cumulative weights in slot order; the sampling CDF up to scaling.
    pub fn cumulative(&self) -> Vec<u64> {
        (1..=self.len()).map(|i| self.tree.prefix(i)).collect()
    }
}

pub fn weighted_sample<'a, K: Hash + Eq + Clone>(
    index: &'a WeightedIndex<K>,
    rng: &mut RngStream,
) -> Result<&'a K> {
    index.sample(rng)
}

/// Uniformly random `m`-subset of `0..available`, returned sorted.
///
/// Floyd's algorithm draws exactly `min(m, available - m)` variates; when more
/// than half the range is requested the complement is drawn instead.
pub fn uniform_subset(available: usize, m: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if m > available {
        return Err(Error::InsufficientVertices {
            available,
            requested: m,
        });
    }
    if 2 * m > available {
        let skip = floyd(available, available - m, rng);
        let mut out = Vec::with_capacity(m);
        let mut it = skip.iter().peekable();
        for i in 0..available {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        Ok(out)
    } else {
        Ok(floyd(available, m, rng))
    }
}

fn floyd(available: usize, m: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for j in available - m..available {
        let t = rng.below(j as u64 + 1) as usize;
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashMap;

    fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
        let stat: f64 = observed
            .iter()
            .zip(expected)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum();
        let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
        1.0 - dist.cdf(stat)
    }

    #[test]
    fn single_entry_always_drawn() {
        let mut idx = WeightedIndex::new();
        idx.increment(&"only", 5);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(*idx.sample(&mut rng).unwrap(), "only");
        }
    }

    #[test]
    fn empty_index_errors() {
        let idx: WeightedIndex<u32> = WeightedIndex::new();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(idx.sample(&mut rng).unwrap_err(), Error::EmptyIndex);
    }

    #[test]
    fn increment_inserts_and_accumulates() {
        let mut idx = WeightedIndex::new();
        idx.increment(&'a', 1);
        assert_eq!((idx.weight(&'a'), idx.total()), (1, 1));
        idx.increment(&'a', 1);
        assert_eq!((idx.weight(&'a'), idx.total()), (2, 2));
        assert_eq!(idx.weight(&'z'), 0);
    }

    #[test]
    fn one_to_three_split() {
        let mut idx = WeightedIndex::new();
        idx.increment(&'a', 1);
        idx.increment(&'b', 3);
        let mut rng = RngStream::new(42, 0);
        let draws = 1_000_000;
        let hits = (0..draws)
            .filter(|_| *idx.sample(&mut rng).unwrap() == 'b')
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.75).abs() <= 0.002, "freq {freq}");
    }

    #[test]
    fn weighted_chi_square() {
        let weights = [1u64, 7, 2, 0, 4, 9, 1];
        let idx = WeightedIndex::from_entries(weights.iter().enumerate().map(|(i, &w)| (i, w)));
        let mut rng = RngStream::new(3, 1);
        let draws = 1_000_000u64;
        let mut counts = vec![0u64; weights.len()];
        for _ in 0..draws {
            counts[*idx.sample(&mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[3], 0);
        let total: u64 = weights.iter().sum();
        let (obs, exp): (Vec<u64>, Vec<f64>) = counts
            .iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0)
            .map(|(&c, w)| (c, draws as f64 * w as f64 / total as f64))
            .unzip();
        assert!(chi_square_p(&obs, &exp) > 1e-3);
    }

    #[test]
    fn rebuild_matches_incremental() {
        let mut idx = WeightedIndex::new();
        for (k, d) in [(1u32, 2u64), (5, 1), (1, 3), (9, 4), (5, 5)] {
            idx.increment(&k, d);
        }
        let rebuilt = WeightedIndex::from_entries(idx.iter().map(|(k, w)| (*k, w)));
        assert_eq!(rebuilt.total(), idx.total());
        assert_eq!(rebuilt.cumulative(), idx.cumulative());
    }

    #[test]
    fn subset_edge_cases() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(uniform_subset(3, 3, &mut rng).unwrap(), vec![0, 1, 2]);
        assert_eq!(uniform_subset(5, 0, &mut rng).unwrap(), Vec::<usize>::new());
        assert_eq!(
            uniform_subset(2, 3, &mut rng).unwrap_err(),
            Error::InsufficientVertices {
                available: 2,
                requested: 3
            }
        );
    }

    #[test]
    fn pairs_of_four_uniform() {
        let mut rng = RngStream::new(42, 3);
        let draws = 600_000;
        let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
        for _ in 0..draws {
            *counts
                .entry(uniform_subset(4, 2, &mut rng).unwrap())
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            let f = *c as f64 / draws as f64;
            assert!((f - 1.0 / 6.0).abs() <= 0.002, "freq {f}");
        }
    }

    #[test]
    fn subset_chi_square_both_paths() {
        // m = 2 uses Floyd directly, m = 5 goes through the complement
        for m in [2usize, 5] {
            let mut rng = RngStream::new(11, m as u64);
            let draws = 1_000_000u64;
            let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
            for _ in 0..draws {
                let s = uniform_subset(7, m, &mut rng).unwrap();
                assert!(s.windows(2).all(|w| w[0] < w[1]));
                *counts.entry(s).or_default() += 1;
            }
            assert_eq!(counts.len(), 21);
            let obs: Vec<u64> = counts.values().copied().collect();
            let exp = vec![draws as f64 / 21.0; 21];
            assert!(chi_square_p(&obs, &exp) > 1e-3, "m = {m}");
        }
    }
}
