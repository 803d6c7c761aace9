//! The four-branch step rule and trajectory recording.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphState, Label};
use crate::params::{Coefficients, ModelParams};
use crate::sampler::{uniform_subset, RngStream, StreamId};

/// Which rule chose the interacting vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    /// New vertex joins an (N-1)-clique drawn by weight.
    NewPref,
    /// New vertex joins a uniform (N-1)-subset.
    NewUniform,
    /// An N-clique drawn by weight interacts again.
    OldPref,
    /// A uniform N-subset of old vertices interacts.
    OldUniform,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::NewPref,
        Branch::NewUniform,
        Branch::OldPref,
        Branch::OldUniform,
    ];

    pub fn adds_vertex(self) -> bool {
        matches!(self, Branch::NewPref | Branch::NewUniform)
    }

    /// Probability of this branch in one step.
    pub fn probability(self, params: &ModelParams) -> f64 {
        let ModelParams { p, q, r, .. } = *params;
        match self {
            Branch::NewPref => p * r,
            Branch::NewUniform => p * (1.0 - r),
            Branch::OldPref => (1.0 - p) * q,
            Branch::OldUniform => (1.0 - p) * (1.0 - q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub branch: Branch,
    /// Sorted labels of the interacting vertices.
    pub vertex_set: Vec<Label>,
    pub born_label: Option<Label>,
    pub new_edges: usize,
    /// Degree increase of each member of `vertex_set`, same order.
    pub degree_deltas: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub new_pref: u64,
    pub new_uniform: u64,
    pub old_pref: u64,
    pub old_uniform: u64,
}

impl BranchCounts {
    pub fn record(&mut self, branch: Branch) {
        *self.get_mut(branch) += 1;
    }

    pub fn get(&self, branch: Branch) -> u64 {
        match branch {
            Branch::NewPref => self.new_pref,
            Branch::NewUniform => self.new_uniform,
            Branch::OldPref => self.old_pref,
            Branch::OldUniform => self.old_uniform,
        }
    }

    fn get_mut(&mut self, branch: Branch) -> &mut u64 {
        match branch {
            Branch::NewPref => &mut self.new_pref,
            Branch::NewUniform => &mut self.new_uniform,
            Branch::OldPref => &mut self.old_pref,
            Branch::OldUniform => &mut self.old_uniform,
        }
    }

    pub fn total(&self) -> u64 {
        self.new_pref + self.new_uniform + self.old_pref + self.old_uniform
    }
}

/// Picks the branch from a single uniform variate `u` in `[0, 1)`, comparing
/// against the cumulative thresholds `pr, p, p + (1-p)q`.
pub fn choose_branch(params: &ModelParams, u: f64) -> Branch {
    let ModelParams { p, q, r, .. } = *params;
    if u < p * r {
        Branch::NewPref
    } else if u < p {
        Branch::NewUniform
    } else if u < p + (1.0 - p) * q {
        Branch::OldPref
    } else {
        Branch::OldUniform
    }
}

/// Advances the graph by one step.
pub fn step(state: &mut GraphState, rng: &mut RngStream) -> Result<StepOutcome> {
    let params = *state.params();
    let n = params.clique_size;
    let branch = choose_branch(&params, rng.unit());
    let mut set: Vec<Label> = Vec::with_capacity(n);
    let born = branch.adds_vertex().then(|| state.next_label());
    match branch {
        Branch::NewPref => set.extend_from_slice(state.registry_sub().sample(rng)?.labels()),
        Branch::OldPref => set.extend_from_slice(state.registry_full().sample(rng)?.labels()),
        Branch::NewUniform | Branch::OldUniform => {
            let m = if branch.adds_vertex() { n - 1 } else { n };
            let slots = uniform_subset(state.vertex_count(), m, rng)?;
            set.extend(slots.into_iter().map(|s| state.label_of(s)));
        }
    }
    if let Some(b) = born {
        set.push(b);
    }
    state.apply_interaction(&set, born, branch)
}

/// Exact conditional probability that `label` takes part in the next
/// interaction: `W alpha / (n+1) + p beta / V`.
pub fn participation_probability(
    state: &GraphState,
    label: Label,
    coeffs: &Coefficients,
) -> Result<f64> {
    let v = state.vertex(label).ok_or(Error::UnknownVertex(label))?;
    Ok(participation_from(
        v.weight,
        state.step(),
        state.vertex_count(),
        state.params().p,
        coeffs,
    ))
}

pub(crate) fn participation_from(
    weight: u64,
    n: u64,
    vertex_count: usize,
    p: f64,
    coeffs: &Coefficients,
) -> f64 {
    weight as f64 * coeffs.alpha / (n + 1) as f64 + p * coeffs.beta / vertex_count as f64
}

/// A graph together with its random stream.
#[derive(Debug, Clone)]
pub struct Simulation {
    state: GraphState,
    coeffs: Coefficients,
    rng: RngStream,
    counts: BranchCounts,
}

impl Simulation {
    pub fn new(params: &ModelParams, seed: u64, stream: u64) -> Result<Self> {
        Self::from_state(GraphState::init(params)?, seed, stream)
    }

    pub fn from_state(state: GraphState, seed: u64, stream: u64) -> Result<Self> {
        let coeffs = state.params().coefficients()?;
        Ok(Self {
            state,
            coeffs,
            rng: RngStream::new(seed, stream),
            counts: BranchCounts::default(),
        })
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let outcome = step(&mut self.state, &mut self.rng)?;
        self.counts.record(outcome.branch);
        Ok(outcome)
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn branch_counts(&self) -> BranchCounts {
        self.counts
    }

    pub fn stream(&self) -> StreamId {
        self.rng.id()
    }

    pub fn into_state(self) -> GraphState {
        self.state
    }
}

/// When to record checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointSchedule {
    /// `n = ceil(ratio^k)`, evenly spaced on a log axis.
    Geometric(f64),
    Every(u64),
    Explicit(Vec<u64>),
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Geometric(1.1)
    }
}

impl CheckpointSchedule {
    /// Sorted, deduplicated checkpoint steps in `0..=steps`, always including
    /// both ends.
    pub fn points(&self, steps: u64) -> Vec<u64> {
        let mut pts = vec![0, steps];
        match self {
            CheckpointSchedule::Geometric(ratio) => {
                assert!(*ratio > 1.0, "geometric ratio must exceed 1");
                let mut k = 0i32;
                loop {
                    let n = ratio.powi(k).ceil();
                    if n > steps as f64 {
                        break;
                    }
                    pts.push(n as u64);
                    k += 1;
                }
            }
            CheckpointSchedule::Every(every) => {
                let every = (*every).max(1);
                pts.extend((0..=steps).step_by(every as usize));
            }
            CheckpointSchedule::Explicit(list) => {
                pts.extend(list.iter().copied().filter(|&n| n <= steps))
            }
        }
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Parses `geometric:1.1`, `every:1000` or `list:10,100,1000`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("bad checkpoint schedule '{text}'"));
        let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
        match kind {
            "geometric" => {
                let ratio: f64 = arg.parse().map_err(|_| bad())?;
                if ratio > 1.0 {
                    Ok(Self::Geometric(ratio))
                } else {
                    Err(bad())
                }
            }
            "every" => Ok(Self::Every(arg.parse().map_err(|_| bad())?)),
            "list" => arg
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<Result<Vec<u64>>>()
                .map(Self::Explicit),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedValue {
    #[serde(rename = "W")]
    pub weight: u64,
    #[serde(rename = "D")]
    pub degree: u64,
}

/// One row of the sampled time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    #[serde(rename = "V")]
    pub vertex_count: u64,
    #[serde(rename = "maxW")]
    pub max_weight: u64,
    #[serde(rename = "maxD")]
    pub max_degree: u64,
    /// Zero weight and degree before a tracked vertex is born.
    pub tracked: IndexMap<Label, TrackedValue>,
}

impl Checkpoint {
    fn capture(state: &GraphState, tracked: &[Label]) -> Self {
        Self {
            n: state.step(),
            vertex_count: state.vertex_count() as u64,
            max_weight: state.max_weight(),
            max_degree: state.max_degree(),
            tracked: tracked
                .iter()
                .map(|&l| {
                    let v = state.vertex(l).map_or(
                        TrackedValue {
                            weight: 0,
                            degree: 0,
                        },
                        |v| TrackedValue {
                            weight: v.weight,
                            degree: v.degree,
                        },
                    );
                    (l, v)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub tracked: Vec<Label>,
    pub schedule: CheckpointSchedule,
    /// Keep the per-step `V_i` and `W[i, j]` histories of tracked vertices.
    pub keep_history: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tracked: vec![0, 1],
            schedule: CheckpointSchedule::default(),
            keep_history: true,
        }
    }
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub coefficients: Coefficients,
    pub stream: StreamId,
    pub steps: u64,
    pub tracked: Vec<Label>,
    pub checkpoints: Vec<Checkpoint>,
    /// `V_i` for `i = 0..=steps`; empty unless histories were kept.
    pub vertex_history: Vec<u32>,
    /// `W[i, j]` per tracked label, `i = 0..=steps`, zero before birth.
    pub weight_history: Vec<Vec<u32>>,
    pub branch_counts: BranchCounts,
}

impl TrajectoryRecord {
    pub fn has_history(&self) -> bool {
        self.vertex_history.len() as u64 == self.steps + 1
    }

    fn tracked_pos(&self, label: Label) -> Result<usize> {
        self.tracked
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::MissingHistory { label, n: 0 })
    }

    /// Weight history of a tracked label.
    pub fn weights_of(&self, label: Label) -> Result<&[u32]> {
        let pos = self.tracked_pos(label)?;
        if !self.has_history() {
            return Err(Error::MissingHistory {
                label,
                n: self.steps,
            });
        }
        Ok(&self.weight_history[pos])
    }

    /// Step at which `label` appeared, if it did.
    pub fn birth_of(&self, label: Label) -> Result<Option<u64>> {
        Ok(self
            .weights_of(label)?
            .iter()
            .position(|&w| w > 0)
            .map(|i| i as u64))
    }

    /// `(n, value)` series at checkpoints for a tracked vertex.
    pub fn tracked_series(&self, label: Label, which: crate::graph::Field) -> Vec<(u64, f64)> {
        self.checkpoints
            .iter()
            .filter_map(|c| {
                c.tracked.get(&label).map(|t| {
                    let v = match which {
                        crate::graph::Field::Weight => t.weight,
                        crate::graph::Field::Degree => t.degree,
                    };
                    (c.n, v as f64)
                })
            })
            .collect()
    }

    pub fn max_series(&self, which: crate::graph::Field) -> Vec<(u64, f64)> {
        self.checkpoints
            .iter()
            .map(|c| {
                let v = match which {
                    crate::graph::Field::Weight => c.max_weight,
                    crate::graph::Field::Degree => c.max_degree,
                };
                (c.n, v as f64)
            })
            .collect()
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints
            .last()
            .expect("the initial state is always recorded")
    }
}

/// Runs `steps` steps from the initial clique and records the requested
/// series. Identical arguments give identical records.
pub fn run(
    params: &ModelParams,
    steps: u64,
    options: &RunOptions,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    run_with_state(params, steps, options, seed, stream).map(|(record, _)| record)
}

/// [`run`], also returning the final state.
pub fn run_with_state(
    params: &ModelParams,
    steps: u64,
    options: &RunOptions,
    seed: u64,
    stream: u64,
) -> Result<(TrajectoryRecord, GraphState)> {
    let mut sim = Simulation::new(params, seed, stream)?;
    let points = options.schedule.points(steps);
    let keep = options.keep_history;
    let cap = if keep { steps as usize + 1 } else { 0 };
    let mut vertex_history = Vec::with_capacity(cap);
    let mut weight_history: Vec<Vec<u32>> = options
        .tracked
        .iter()
        .map(|_| Vec::with_capacity(cap))
        .collect();
    let mut checkpoints = Vec::with_capacity(points.len());
    let mut next_point = points.iter().peekable();

    let mut record = |state: &GraphState, checkpoints: &mut Vec<Checkpoint>| {
        if keep {
            vertex_history.push(state.vertex_count() as u32);
            for (hist, &l) in weight_history.iter_mut().zip(&options.tracked) {
                hist.push(state.vertex(l).map_or(0, |v| v.weight as u32));
            }
        }
        if next_point.peek() == Some(&&state.step()) {
            next_point.next();
            checkpoints.push(Checkpoint::capture(state, &options.tracked));
        }
    };

    record(sim.state(), &mut checkpoints);
    for _ in 0..steps {
        sim.step()?;
        record(sim.state(), &mut checkpoints);
    }

    let record = TrajectoryRecord {
        params: *params,
        coefficients: *sim.coefficients(),
        stream: sim.stream(),
        steps,
        tracked: options.tracked.clone(),
        checkpoints,
        vertex_history,
        weight_history,
        branch_counts: sim.branch_counts(),
    };
    Ok((record, sim.into_state()))
}

/// Runs `f(replica)` for `replica in 0..replicas` on up to `jobs` threads and
/// returns the results in replica order.
pub fn for_each_replica<T, F>(replicas: u64, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if jobs > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(|| (0..replicas).into_par_iter().map(&f).collect());
            }
        }
    }
    let _ = jobs;
    (0..replicas).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Field;
    use std::collections::HashMap;

    #[test]
    fn branch_thresholds() {
        let params = ModelParams::new(3, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(choose_branch(&params, 0.0), Branch::NewPref);
        assert_eq!(choose_branch(&params, 0.2499), Branch::NewPref);
        assert_eq!(choose_branch(&params, 0.25), Branch::NewUniform);
        assert_eq!(choose_branch(&params, 0.5), Branch::OldPref);
        assert_eq!(choose_branch(&params, 0.75), Branch::OldUniform);
        let p1 = ModelParams::new(3, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(choose_branch(&p1, 0.999_999), Branch::NewPref);
    }

    #[test]
    fn newborn_picks_each_initial_edge_equally() {
        let params = ModelParams::new(3, 1.0, 0.5, 1.0).unwrap();
        let mut counts: HashMap<Vec<Label>, u32> = HashMap::new();
        let draws = 30_000;
        for stream in 0..draws {
            let mut sim = Simulation::new(&params, 7, stream).unwrap();
            let out = sim.step().unwrap();
            assert_eq!(out.branch, Branch::NewPref);
            assert_eq!(sim.state().vertex_count(), 4);
            assert_eq!(sim.state().vertex(1).unwrap().degree, 2);
            *counts.entry(out.vertex_set).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for c in counts.values() {
            // 4.6 sigma band around 1/3
            let f = *c as f64 / draws as f64;
            assert!(
                (f - 1.0 / 3.0).abs() < 4.6 * (2.0f64 / 9.0 / draws as f64).sqrt(),
                "{f}"
            );
        }
    }

    #[test]
    fn vanishing_p_with_q_one_repeats_the_triangle() {
        let params = ModelParams {
            clique_size: 3,
            p: 1e-300,
            q: 1.0,
            r: 0.5,
        };
        let mut sim = Simulation::new(&params, 1, 0).unwrap();
        let out = sim.step().unwrap();
        assert_eq!(out.branch, Branch::OldPref);
        assert_eq!(out.vertex_set, vec![-2, -1, 0]);
        assert!(sim
            .state()
            .vertices()
            .iter()
            .all(|v| v.weight == 2 && v.degree == 2));
    }

    #[test]
    fn branch_frequencies() {
        let params = ModelParams::new(3, 0.5, 0.5, 0.5).unwrap();
        let mut sim = Simulation::new(&params, 42, 0).unwrap();
        sim.advance(100_000).unwrap();
        let c = sim.branch_counts();
        assert_eq!(c.total(), 100_000);
        for b in Branch::ALL {
            let f = c.get(b) as f64 / 1e5;
            assert!((f - 0.25).abs() <= 0.005, "{b:?}: {f}");
        }
        assert_eq!(
            sim.state().vertex_count() as u64,
            3 + c.new_pref + c.new_uniform
        );
    }

    #[test]
    fn participation_probability_values() {
        let params = ModelParams::new(3, 0.5, 0.5, 0.5).unwrap();
        let c = params.coefficients().unwrap();
        let state = GraphState::init(&params).unwrap();
        for l in [0, -1, -2] {
            assert!((participation_probability(&state, l, &c).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(
            participation_probability(&state, 4, &c),
            Err(Error::UnknownVertex(4))
        );

        let mut sim = Simulation::new(&params, 3, 0).unwrap();
        for _ in 0..2000 {
            sim.step().unwrap();
            for v in sim.state().vertices().iter().step_by(7) {
                let pi = participation_probability(sim.state(), v.label, &c).unwrap();
                assert!((0.0..=1.0).contains(&pi));
            }
        }
    }

    #[test]
    fn zero_steps_records_initial_state() {
        let params = ModelParams::new(3, 0.5, 0.5, 0.5).unwrap();
        let rec = run(&params, 0, &RunOptions::default(), 1, 0).unwrap();
        assert_eq!(rec.checkpoints.len(), 1);
        let c = &rec.checkpoints[0];
        assert_eq!(
            (c.n, c.vertex_count, c.max_weight, c.max_degree),
            (0, 3, 1, 2)
        );
        assert_eq!(
            c.tracked[&0],
            TrackedValue {
                weight: 1,
                degree: 2
            }
        );
        assert_eq!(
            c.tracked[&1],
            TrackedValue {
                weight: 0,
                degree: 0
            }
        );
        assert_eq!(rec.vertex_history, vec![3]);
    }

    #[test]
    fn runs_are_deterministic_and_histories_consistent() {
        let params = ModelParams::new(4, 0.4, 0.6, 0.3).unwrap();
        let opts = RunOptions {
            tracked: vec![0, -3, 1, 5],
            ..RunOptions::default()
        };
        let a = run(&params, 5000, &opts, 11, 2).unwrap();
        let b = run(&params, 5000, &opts, 11, 2).unwrap();
        assert_eq!(a, b);
        let c = run(&params, 5000, &opts, 11, 3).unwrap();
        assert_ne!(a.vertex_history, c.vertex_history);

        assert_eq!(a.vertex_history.len(), 5001);
        assert!(a.vertex_history.windows(2).all(|w| w[1] - w[0] <= 1));
        for h in &a.weight_history {
            assert_eq!(h.len(), 5001);
            assert!(h.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1));
        }
        assert_eq!(
            *a.vertex_history.last().unwrap() as u64,
            a.last().vertex_count
        );
        let born = a.branch_counts.new_pref + a.branch_counts.new_uniform;
        assert_eq!(a.last().vertex_count, 4 + born);
        for cp in &a.checkpoints {
            for (pos, l) in a.tracked.iter().enumerate() {
                assert_eq!(
                    cp.tracked[l].weight,
                    a.weight_history[pos][cp.n as usize] as u64
                );
            }
        }
        let w = a.tracked_series(0, Field::Weight);
        assert_eq!(w.len(), a.checkpoints.len());
    }

    #[test]
    fn schedules() {
        let g = CheckpointSchedule::Geometric(1.1).points(100);
        assert_eq!(&g[..5], &[0, 1, 2, 3, 4]);
        assert_eq!(*g.last().unwrap(), 100);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            CheckpointSchedule::Every(25).points(60),
            vec![0, 25, 50, 60]
        );
        assert_eq!(
            CheckpointSchedule::Explicit(vec![7, 3, 500]).points(10),
            vec![0, 3, 7, 10]
        );
        assert_eq!(
            CheckpointSchedule::parse("geometric:1.5").unwrap(),
            CheckpointSchedule::Geometric(1.5)
        );
        assert_eq!(
            CheckpointSchedule::parse("every:10").unwrap(),
            CheckpointSchedule::Every(10)
        );
        assert_eq!(
            CheckpointSchedule::parse("list:1,2").unwrap(),
            CheckpointSchedule::Explicit(vec![1, 2])
        );
        assert!(CheckpointSchedule::parse("geometric:0.5").is_err());
        assert!(CheckpointSchedule::parse("bogus").is_err());
    }

    #[test]
    fn checkpoint_json_shape() {
        let params = ModelParams::new(3, 0.5, 0.5, 0.5).unwrap();
        let rec = run(&params, 10, &RunOptions::default(), 1, 0).unwrap();
        let v = serde_json::to_value(rec.last()).unwrap();
        assert_eq!(v["n"], 10);
        assert!(v["V"].is_u64() && v["maxW"].is_u64() && v["maxD"].is_u64());
        assert!(v["tracked"]["0"]["W"].is_u64());
        assert!(v["tracked"]["0"]["D"].is_u64());
    }
}
