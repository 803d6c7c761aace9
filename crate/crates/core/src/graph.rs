//! The evolving graph: vertex weights and degrees, adjacency, and the
//! weighted registries of N-cliques and (N-1)-cliques.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::evolution::{Branch, StepOutcome};
use crate::params::ModelParams;
use crate::sampler::{RngStream, WeightedIndex};

/// Vertex label. The initial clique is `0, -1, ..., -(N-1)`; vertices born
/// later are `1, 2, ...` in birth order.
pub type Label = i64;

/// Canonical identity of a clique: its labels in strictly increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CliqueKey(SmallVec<[Label; 4]>);

impl CliqueKey {
    pub fn new(labels: impl IntoIterator<Item = Label>) -> Result<Self> {
        let mut v: SmallVec<[Label; 4]> = labels.into_iter().collect();
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInteraction(format!(
                "duplicate label in {v:?}"
            )));
        }
        Ok(Self(v))
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    /// The key with the element at `pos` removed.
    pub fn without(&self, pos: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(pos);
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub label: Label,
    /// Number of interactions the vertex took part in.
    pub weight: u64,
    pub degree: u64,
    pub birth_step: u64,
}

/// Cliques of one size with positive interaction counts.
#[derive(Debug, Clone)]
pub struct CliqueRegistry {
    size: usize,
    index: WeightedIndex<CliqueKey>,
}

impl CliqueRegistry {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            index: WeightedIndex::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.index.total()
    }

    pub fn weight(&self, key: &CliqueKey) -> u64 {
        self.index.weight(key)
    }

    /// Bumps `key` by one; `true` if it had weight zero before.
    pub fn increment(&mut self, key: &CliqueKey) -> bool {
        debug_assert_eq!(key.len(), self.size);
        self.index.increment(key, 1)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<&CliqueKey> {
        self.index.sample(rng)
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&CliqueKey, u64)> + '_ {
        self.index.iter()
    }

    pub fn index(&self) -> &WeightedIndex<CliqueKey> {
        &self.index
    }

    pub(crate) fn from_entries(size: usize, entries: Vec<(CliqueKey, u64)>) -> Self {
        Self {
            size,
            index: WeightedIndex::from_entries(entries),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Weight,
    Degree,
}

#[derive(Debug, Clone)]
pub struct GraphState {
    params: ModelParams,
    step: u64,
    vertices: Vec<VertexRecord>,
    adjacency: Vec<FxHashSet<u32>>,
    full: CliqueRegistry,
    sub: CliqueRegistry,
    max_weight: u64,
    max_degree: u64,
}

impl GraphState {
    /// The initial complete graph on N vertices, every clique at weight one.
    pub fn init(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.clique_size;
        let vertices = (0..n)
            .map(|i| VertexRecord {
                label: -(i as Label),
                weight: 1,
                degree: n as u64 - 1,
                birth_step: 0,
            })
            .collect();
        let adjacency = (0..n)
            .map(|i| (0..n as u32).filter(|&k| k as usize != i).collect())
            .collect();
        let key = CliqueKey::new((0..n).map(|i| -(i as Label)))?;
        let mut full = CliqueRegistry::new(n);
        full.increment(&key);
        let mut sub = CliqueRegistry::new(n - 1);
        for pos in 0..n {
            sub.increment(&key.without(pos));
        }
        Ok(Self {
            params: *params,
            step: 0,
            vertices,
            adjacency,
            full,
            sub,
            max_weight: 1,
            max_degree: n as u64 - 1,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn clique_size(&self) -> usize {
        self.params.clique_size
    }

    /// Number of completed steps `n`.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// `V_n`.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn max_weight(&self) -> u64 {
        self.max_weight
    }

    pub fn max_degree(&self) -> u64 {
        self.max_degree
    }

    pub fn registry_full(&self) -> &CliqueRegistry {
        &self.full
    }

    pub fn registry_sub(&self) -> &CliqueRegistry {
        &self.sub
    }

    /// Label the next newborn will get.
    pub fn next_label(&self) -> Label {
        (self.vertices.len() - self.clique_size() + 1) as Label
    }

    pub fn slot_of(&self, label: Label) -> Option<usize> {
        let slot = if label <= 0 {
            (-label) as usize
        } else {
            self.clique_size() - 1 + label as usize
        };
        (slot < self.vertices.len()).then_some(slot)
    }

    pub fn label_of(&self, slot: usize) -> Label {
        self.vertices[slot].label
    }

    pub fn vertex(&self, label: Label) -> Option<&VertexRecord> {
        self.slot_of(label).map(|s| &self.vertices[s])
    }

    /// Vertices in slot order (initial clique first, then by birth).
    pub fn vertices(&self) -> &[VertexRecord] {
        &self.vertices
    }

    pub fn is_adjacent(&self, a: Label, b: Label) -> bool {
        match (self.slot_of(a), self.slot_of(b)) {
            (Some(x), Some(y)) => self.adjacency[x].contains(&(y as u32)),
            _ => false,
        }
    }

    /// Size of the adjacency set of `label`.
    pub fn neighbor_count(&self, label: Label) -> Option<usize> {
        self.slot_of(label).map(|s| self.adjacency[s].len())
    }

    /// Neighbour labels of `label`, sorted.
    pub fn neighbors(&self, label: Label) -> Result<Vec<Label>> {
        let slot = self.slot_of(label).ok_or(Error::UnknownVertex(label))?;
        let mut out: Vec<Label> = self.adjacency[slot]
            .iter()
            .map(|&s| self.label_of(s as usize))
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Edges as label pairs `[a, b]` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<[Label; 2]> {
        let mut out = Vec::new();
        for (slot, nbrs) in self.adjacency.iter().enumerate() {
            let a = self.label_of(slot);
            for &t in nbrs {
                let b = self.label_of(t as usize);
                if a < b {
                    out.push([a, b]);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Makes `vertex_set` a clique and bumps every weight it carries.
    ///
    /// When `born` is given it must be [`next_label`](Self::next_label) and
    /// appear in `vertex_set`; the vertex is created before the interaction.
    pub fn apply_interaction(
        &mut self,
        vertex_set: &[Label],
        born: Option<Label>,
        branch: Branch,
    ) -> Result<StepOutcome> {
        let n = self.clique_size();
        if vertex_set.len() != n {
            return Err(Error::InvalidInteraction(format!(
                "expected {n} vertices, got {}",
                vertex_set.len()
            )));
        }
        let key = CliqueKey::new(vertex_set.iter().copied())?;
        if let Some(b) = born {
            if b != self.next_label() {
                return Err(Error::InvalidInteraction(format!(
                    "newborn must be labelled {}, got {b}",
                    self.next_label()
                )));
            }
            if !key.contains(b) {
                return Err(Error::InvalidInteraction(format!(
                    "newborn {b} missing from interaction set"
                )));
            }
        }
        for &l in key.labels() {
            if Some(l) != born && self.slot_of(l).is_none() {
                return Err(Error::UnknownVertex(l));
            }
        }

        let step = self.step + 1;
        if born.is_some() {
            self.vertices.push(VertexRecord {
                label: self.next_label(),
                weight: 0,
                degree: 0,
                birth_step: step,
            });
            self.adjacency.push(FxHashSet::default());
        }

        let slots: SmallVec<[usize; 8]> = key
            .labels()
            .iter()
            .map(|&l| self.slot_of(l).expect("validated"))
            .collect();
        let born_pos = born.map(|b| key.labels().binary_search(&b).expect("validated"));

        // A clique with positive weight is complete, so a set seen before
        // needs no edge probes; neither does the old part of a newborn's set
        // when that part is a registered (N-1)-clique.
        let full_fresh = self.full.increment(&key);
        let mut old_part_known = false;
        for pos in 0..n {
            let fresh = self.sub.increment(&key.without(pos));
            if Some(pos) == born_pos {
                old_part_known = !fresh;
            }
        }

        let mut deltas: SmallVec<[u32; 8]> = SmallVec::from_elem(0, n);
        let mut new_edges = 0;
        if full_fresh {
            if let (Some(bp), true) = (born_pos, old_part_known) {
                let newborn = slots[bp];
                for (i, &s) in slots.iter().enumerate() {
                    if i != bp {
                        self.adjacency[s].insert(newborn as u32);
                        self.adjacency[newborn].insert(s as u32);
                        deltas[i] = 1;
                    }
                }
                deltas[bp] = (n - 1) as u32;
                new_edges = n - 1;
            } else {
                for a in 0..n {
                    for b in a + 1..n {
                        let (sa, sb) = (slots[a], slots[b]);
                        if self.adjacency[sa].insert(sb as u32) {
                            self.adjacency[sb].insert(sa as u32);
                            deltas[a] += 1;
                            deltas[b] += 1;
                            new_edges += 1;
                        }
                    }
                }
            }
        }
        for (i, &s) in slots.iter().enumerate() {
            let v = &mut self.vertices[s];
            v.weight += 1;
            v.degree += deltas[i] as u64;
            self.max_weight = self.max_weight.max(v.weight);
            self.max_degree = self.max_degree.max(v.degree);
        }
        self.step = step;

        Ok(StepOutcome {
            branch,
            vertex_set: key.labels().to_vec(),
            born_label: born,
            new_edges,
            degree_deltas: deltas.into_vec(),
        })
    }

    /// Max of `which` over existing vertices with label in `[lo, hi]`;
    /// zero when none exist.
    pub fn windowed_max(&self, lo: Label, hi: Label, which: Field) -> u64 {
        let first = -(self.clique_size() as Label - 1);
        let last = self.next_label() - 1;
        let (lo, hi) = (lo.max(first), hi.min(last));
        (lo..=hi)
            .filter_map(|l| self.vertex(l))
            .map(|v| match which {
                Field::Weight => v.weight,
                Field::Degree => v.degree,
            })
            .max()
            .unwrap_or(0)
    }

    /// Full sweep of the structural identities. Cost is linear in the size
    /// of the graph and both registries.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.clique_size() as u64;
        let steps = self.step;
        let newborns = self.vertices.len() as u64 - n;
        if self.full.total_weight() != steps + 1 {
            return Err(format!(
                "N-registry total {} != n+1 = {}",
                self.full.total_weight(),
                steps + 1
            ));
        }
        if self.sub.total_weight() != n * (steps + 1) {
            return Err(format!(
                "(N-1)-registry total {} != N(n+1)",
                self.sub.total_weight()
            ));
        }
        let weight_sum: u64 = self.vertices.iter().map(|v| v.weight).sum();
        if weight_sum != n * (steps + 1) {
            return Err(format!(
                "weight sum {weight_sum} != N(n+1) = {}",
                n * (steps + 1)
            ));
        }
        if newborns > steps {
            return Err(format!("{newborns} newborns after {steps} steps"));
        }
        let mut max_w = 0;
        let mut max_d = 0;
        for (slot, v) in self.vertices.iter().enumerate() {
            if self.slot_of(v.label) != Some(slot) {
                return Err(format!("label {} stored at slot {slot}", v.label));
            }
            let adj = &self.adjacency[slot];
            if adj.len() as u64 != v.degree {
                return Err(format!(
                    "vertex {} degree {} but {} neighbours",
                    v.label,
                    v.degree,
                    adj.len()
                ));
            }
            if adj.contains(&(slot as u32)) {
                return Err(format!("self loop at {}", v.label));
            }
            for &t in adj {
                if !self.adjacency[t as usize].contains(&(slot as u32)) {
                    return Err(format!(
                        "asymmetric edge {} - {}",
                        v.label,
                        self.label_of(t as usize)
                    ));
                }
            }
            if v.weight < 1 || v.degree < n - 1 || v.degree > (n - 1) * v.weight {
                return Err(format!(
                    "vertex {} violates N-1 <= D <= (N-1)W with W = {}, D = {}",
                    v.label, v.weight, v.degree
                ));
            }
            if v.birth_step > steps {
                return Err(format!("vertex {} born in the future", v.label));
            }
            max_w = max_w.max(v.weight);
            max_d = max_d.max(v.degree);
        }
        if max_w != self.max_weight || max_d != self.max_degree {
            return Err(format!(
                "running maxima ({}, {}) != recomputed ({max_w}, {max_d})",
                self.max_weight, self.max_degree
            ));
        }

        // per-vertex clique sums: sum over N-cliques containing j is W,
        // over (N-1)-cliques containing j is (N-1)W
        let mut full_sums = vec![0u64; self.vertices.len()];
        let mut sub_sums = vec![0u64; self.vertices.len()];
        for (key, w) in self.full.iter() {
            for &l in key.labels() {
                let s = self
                    .slot_of(l)
                    .ok_or(format!("registry names unknown vertex {l}"))?;
                full_sums[s] += w;
            }
            for (i, &a) in key.labels().iter().enumerate() {
                for &b in &key.labels()[i + 1..] {
                    if !self.is_adjacent(a, b) {
                        return Err(format!(
                            "registered clique {:?} is not complete",
                            key.labels()
                        ));
                    }
                }
            }
        }
        for (key, w) in self.sub.iter() {
            for &l in key.labels() {
                let s = self
                    .slot_of(l)
                    .ok_or(format!("registry names unknown vertex {l}"))?;
                sub_sums[s] += w;
            }
        }
        for (slot, v) in self.vertices.iter().enumerate() {
            if full_sums[slot] != v.weight || sub_sums[slot] != (n - 1) * v.weight {
                return Err(format!(
                    "clique sums at {} inconsistent with weight {}",
                    v.label, v.weight
                ));
            }
        }
        Ok(())
    }

    /// Breadth-first connectivity check.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(s) = queue.pop_front() {
            for &t in &self.adjacency[s] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    count += 1;
                    queue.push_back(t as usize);
                }
            }
        }
        count == self.vertices.len()
    }

    pub(crate) fn from_parts(
        params: ModelParams,
        step: u64,
        vertices: Vec<VertexRecord>,
        edges: &[[Label; 2]],
        full: CliqueRegistry,
        sub: CliqueRegistry,
    ) -> Result<Self> {
        for (slot, v) in vertices.iter().enumerate() {
            let expected = if slot < params.clique_size {
                -(slot as Label)
            } else {
                (slot - params.clique_size + 1) as Label
            };
            if v.label != expected {
                return Err(Error::Snapshot(format!(
                    "vertex at position {slot} has label {}, expected {expected}",
                    v.label
                )));
            }
        }
        let mut adjacency = vec![FxHashSet::default(); vertices.len()];
        let mut state = Self {
            params,
            step,
            max_weight: vertices.iter().map(|v| v.weight).max().unwrap_or(0),
            max_degree: vertices.iter().map(|v| v.degree).max().unwrap_or(0),
            vertices,
            adjacency: Vec::new(),
            full,
            sub,
        };
        for &[a, b] in edges {
            let sa = state.slot_of(a).ok_or(Error::UnknownVertex(a))?;
            let sb = state.slot_of(b).ok_or(Error::UnknownVertex(b))?;
            adjacency[sa].insert(sb as u32);
            adjacency[sb].insert(sa as u32);
        }
        state.adjacency = adjacency;
        Ok(state)
    }
}
