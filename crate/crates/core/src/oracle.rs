//! Exact one-step computations on small graphs.
//!
//! [`transition_distribution`] enumerates every outcome of the next step with
//! its probability. The closed-form conditional expectations below are checked
//! against it.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{participation_from, Branch, Simulation};
use crate::graph::{GraphState, Label};
use crate::math::{binomial, hypergeometric, rising_binomial};
use crate::params::{Coefficients, ModelParams};

/// Largest vertex count enumerated unless a caller raises it.
pub const DEFAULT_ENUMERATION_CAP: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub branch: Branch,
    /// Sorted; includes the newborn label for the new-vertex branches.
    pub vertex_set: Vec<Label>,
    pub probability: f64,
}

/// All outcomes of one step, keyed by `(branch, vertex set)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDistribution {
    pub outcomes: Vec<TransitionOutcome>,
}

impl TransitionDistribution {
    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Probability that `label` is in the interacting set.
    pub fn participation(&self, label: Label) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.vertex_set.binary_search(&label).is_ok())
            .map(|o| o.probability)
            .sum()
    }

    pub fn branch_mass(&self, branch: Branch) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.branch == branch)
            .map(|o| o.probability)
            .sum()
    }
}

pub fn transition_distribution(state: &GraphState) -> Result<TransitionDistribution> {
    transition_distribution_capped(state, DEFAULT_ENUMERATION_CAP)
}

pub fn transition_distribution_capped(
    state: &GraphState,
    cap: usize,
) -> Result<TransitionDistribution> {
    let v = state.vertex_count();
    if v > cap {
        return Err(Error::TooLargeToEnumerate { vertices: v, cap });
    }
    let params = *state.params();
    let n = params.clique_size;
    let newborn = state.next_label();
    let labels: Vec<Label> = state.vertices().iter().map(|r| r.label).collect();
    let mut merged: BTreeMap<(Branch, Vec<Label>), f64> = BTreeMap::new();
    let mut add = |branch: Branch, mut set: Vec<Label>, prob: f64| {
        if prob > 0.0 {
            set.sort_unstable();
            *merged.entry((branch, set)).or_default() += prob;
        }
    };

    for branch in Branch::ALL {
        let mass = branch.probability(&params);
        if mass <= 0.0 {
            continue;
        }
        match branch {
            Branch::NewPref | Branch::OldPref => {
                let reg = if branch == Branch::NewPref {
                    state.registry_sub()
                } else {
                    state.registry_full()
                };
                let total = reg.total_weight() as f64;
                for (key, w) in reg.iter() {
                    let mut set = key.labels().to_vec();
                    if branch.adds_vertex() {
                        set.push(newborn);
                    }
                    add(branch, set, mass * w as f64 / total);
                }
            }
            Branch::NewUniform | Branch::OldUniform => {
                let m = if branch.adds_vertex() { n - 1 } else { n };
                let subsets: Vec<Vec<Label>> = labels.iter().copied().combinations(m).collect();
                let each = mass / subsets.len() as f64;
                for mut set in subsets {
                    if branch.adds_vertex() {
                        set.push(newborn);
                    }
                    add(branch, set, each);
                }
            }
        }
    }

    Ok(TransitionDistribution {
        outcomes: merged
            .into_iter()
            .map(|((branch, vertex_set), probability)| TransitionOutcome {
                branch,
                vertex_set,
                probability,
            })
            .collect(),
    })
}

/// `E[D[n+1, j] | F_n]` by summing the degree `j` would have after each
/// enumerated outcome.
pub fn expected_degree_next_enum(state: &GraphState, label: Label) -> Result<f64> {
    let dist = transition_distribution(state)?;
    expected_degree_from(&dist, state, label)
}

pub fn expected_degree_from(
    dist: &TransitionDistribution,
    state: &GraphState,
    label: Label,
) -> Result<f64> {
    let d = state
        .vertex(label)
        .ok_or(Error::UnknownVertex(label))?
        .degree as f64;
    Ok(dist
        .outcomes
        .iter()
        .map(|o| {
            let after = if o.vertex_set.binary_search(&label).is_ok() {
                let gained = o
                    .vertex_set
                    .iter()
                    .filter(|&&x| x != label && !state.is_adjacent(label, x))
                    .count();
                d + gained as f64
            } else {
                d
            };
            o.probability * after
        })
        .sum())
}

/// Probabilities that the degree of `label` grows by `0, 1, ..., N-1` in the
/// next step, from the hypergeometric counts of neighbours and non-neighbours.
pub fn degree_increment_law(
    state: &GraphState,
    label: Label,
    coeffs: &Coefficients,
) -> Result<Vec<f64>> {
    let vtx = state.vertex(label).ok_or(Error::UnknownVertex(label))?;
    let ModelParams {
        clique_size,
        p,
        q,
        r,
    } = *state.params();
    let nn = clique_size as i64;
    let (w, d) = (vtx.weight as f64, vtx.degree as i64);
    let v = state.vertex_count() as i64;
    let steps = (state.step() + 1) as f64;
    let rest = v - d - 1;
    let pi = participation_from(vtx.weight, state.step(), state.vertex_count(), p, coeffs);

    let mut law = vec![0.0; clique_size];
    law[0] = 1.0 - pi
        + (1.0 - p) * (q * w / steps + (1.0 - q) * hypergeometric((d, nn - 1), (0, 0), (v, nn)));
    for m in 1..nn {
        let mut pm = p * (1.0 - r) * hypergeometric((d, nn - m - 1), (rest, m - 1), (v, nn - 1))
            + (1.0 - p) * (1.0 - q) * hypergeometric((d, nn - m - 1), (rest, m), (v, nn));
        if m == 1 {
            pm += p * r * (nn - 1) as f64 * w / (nn as f64 * steps);
        }
        law[m as usize] = pm;
    }
    Ok(law)
}

/// Closed-form `E[D[n+1, j] | F_n]`: the current degree weighted by the
/// no-change mass plus `D + m` weighted by the mass of each increment `m`.
pub fn expected_degree_next_closed(
    state: &GraphState,
    label: Label,
    coeffs: &Coefficients,
) -> Result<f64> {
    let d = state
        .vertex(label)
        .ok_or(Error::UnknownVertex(label))?
        .degree as f64;
    let law = degree_increment_law(state, label, coeffs)?;
    Ok(law
        .iter()
        .enumerate()
        .map(|(m, pm)| (d + m as f64) * pm)
        .sum())
}

/// `R_n` and its split into the new-uniform and old-uniform contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    /// `E[D[n+1,j] | F_n] - D[n,j] - alpha2 W[n,j] / (n+1)`.
    pub value: f64,
    /// `beta1 * p * R1`.
    pub new_uniform_part: f64,
    /// `beta2 * p * R2`.
    pub old_uniform_part: f64,
    pub r1: f64,
    pub r2: f64,
    /// `(N-1) p beta / V_n`.
    pub bound: f64,
}

impl Remainder {
    pub fn components_sum(&self) -> f64 {
        self.new_uniform_part + self.old_uniform_part
    }
}

pub fn remainder_r(state: &GraphState, label: Label, coeffs: &Coefficients) -> Result<Remainder> {
    let vtx = state.vertex(label).ok_or(Error::UnknownVertex(label))?;
    let ModelParams { clique_size, p, .. } = *state.params();
    let nn = clique_size as i64;
    let d = vtx.degree as i64;
    let v = state.vertex_count() as i64;
    let rest = v - d - 1;
    let df = d as f64;
    let vf = v as f64;

    let expected = expected_degree_next_closed(state, label, coeffs)?;
    let value = expected - df - coeffs.alpha2 * vtx.weight as f64 / (state.step() + 1) as f64;

    let mut r1 = -df / vf;
    for m in 1..nn {
        r1 += (df + m as f64) / (nn - 1) as f64
            * hypergeometric((d, nn - m - 1), (rest, m - 1), (v, nn - 1));
    }
    let mut r2 = -df / vf;
    for m in 0..nn {
        r2 += (df + m as f64) / nn as f64 * hypergeometric((d, nn - m - 1), (rest, m), (v, nn));
    }
    Ok(Remainder {
        value,
        new_uniform_part: coeffs.beta1 * p * r1,
        old_uniform_part: coeffs.beta2 * p * r2,
        r1,
        r2,
        bound: (nn - 1) as f64 * p * coeffs.beta / vf,
    })
}

/// `E[C(W[n+1,j]+k-1, k) | F_n]` from the two-point law of the next weight.
pub fn expected_rising_binomial_next(
    state: &GraphState,
    label: Label,
    k: u64,
    coeffs: &Coefficients,
) -> Result<f64> {
    let vtx = state.vertex(label).ok_or(Error::UnknownVertex(label))?;
    let pi = participation_from(
        vtx.weight,
        state.step(),
        state.vertex_count(),
        state.params().p,
        coeffs,
    );
    Ok(two_point_rising(vtx.weight, k, pi))
}

pub(crate) fn two_point_rising(w: u64, k: u64, pi: f64) -> f64 {
    (1.0 - pi) * rising_binomial(w, k) + pi * rising_binomial(w + 1, k)
}

/// Same expectation rearranged as
/// `(p beta / V) C(W+k-1, k-1) + (1 + alpha k / (n+1)) C(W+k-1, k)`.
pub fn expected_rising_binomial_next_closed(
    state: &GraphState,
    label: Label,
    k: u64,
    coeffs: &Coefficients,
) -> Result<f64> {
    let vtx = state.vertex(label).ok_or(Error::UnknownVertex(label))?;
    Ok(rising_closed(
        vtx.weight,
        k,
        state.step(),
        state.vertex_count(),
        state.params().p,
        coeffs,
    ))
}

pub(crate) fn rising_closed(
    w: u64,
    k: u64,
    n: u64,
    vertex_count: usize,
    p: f64,
    coeffs: &Coefficients,
) -> f64 {
    let lower = if k == 0 {
        0.0
    } else {
        binomial(w + k - 1, k - 1)
    };
    p * coeffs.beta / vertex_count as f64 * lower
        + (1.0 + coeffs.alpha * k as f64 / (n + 1) as f64) * rising_binomial(w, k)
}

/// Distinct reachable states with at most `max_vertices` vertices, collected
/// along seeded trajectories (stream `0, 1, ...`) until `count` are found.
pub fn reachable_states(
    params: &ModelParams,
    count: usize,
    max_vertices: usize,
    seed: u64,
) -> Result<Vec<GraphState>> {
    let mut out = Vec::with_capacity(count);
    let mut stream = 0;
    // a trajectory with p small can stay under the cap for a long time
    let max_steps = 40 * max_vertices as u64;
    while out.len() < count {
        let mut sim = Simulation::new(params, seed, stream)?;
        stream += 1;
        while out.len() < count
            && sim.state().vertex_count() <= max_vertices
            && sim.state().step() < max_steps
        {
            out.push(sim.state().clone());
            sim.step()?;
        }
    }
    Ok(out)
}
