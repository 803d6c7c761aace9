//! The audit battery behind `ncsim verify`.
//!
//! Hard checks are exact identities and must hold to floating-point
//! tolerance. Statistical checks are seeded Monte Carlo tests; they carry a
//! p-value when a null distribution is available and never decide the exit
//! status on their own.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use itertools::iproduct;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analysis::{
    audit_martingale, audit_supermartingale, b_asymptotic_ratio, e_asymptotic_ratio, mean_stderr,
    run_ensemble, ReplicaSummary, SequenceCache,
};
use crate::error::{Error, Result};
use crate::evolution::{participation_probability, run, RunOptions, Simulation};
use crate::graph::{GraphState, Label};
use crate::oracle::{
    expected_degree_from, expected_degree_next_closed, reachable_states, remainder_r,
    transition_distribution,
};
use crate::params::ModelParams;

/// Statistical checks fail only when their p-value drops below this.
pub const STAT_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckGroup {
    Oracle,
    Corollary,
    Martingale,
    Supermartingale,
    Sequences,
    Invariants,
    Statistical,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 7] = [
        CheckGroup::Oracle,
        CheckGroup::Corollary,
        CheckGroup::Martingale,
        CheckGroup::Supermartingale,
        CheckGroup::Sequences,
        CheckGroup::Invariants,
        CheckGroup::Statistical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckGroup::Oracle => "oracle",
            CheckGroup::Corollary => "corollary",
            CheckGroup::Martingale => "martingale",
            CheckGroup::Supermartingale => "supermartingale",
            CheckGroup::Sequences => "sequences",
            CheckGroup::Invariants => "invariants",
            CheckGroup::Statistical => "statistical",
        }
    }
}

impl FromStr for CheckGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown check group '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub hard: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Hard check `statistic <= tolerance`.
    pub fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: statistic <= tolerance,
            statistic,
            tolerance,
            hard: true,
            p_value: None,
            detail: None,
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn hard_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub params: ModelParams,
    pub seed: u64,
    /// Trajectory length for the martingale, corollary and invariant audits.
    pub steps: u64,
    pub ks: Vec<u64>,
    pub tracked: Vec<Label>,
    /// `None` runs every group.
    pub only: Option<Vec<CheckGroup>>,
    /// Scale one entry of the `b` table before the martingale audit.
    pub corrupt_b: bool,
    /// Random reachable states per oracle configuration grid.
    pub oracle_states: usize,
    pub stat_replicas: u64,
    pub stat_steps: u64,
    pub jobs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            params: ModelParams {
                clique_size: 3,
                p: 0.5,
                q: 0.5,
                r: 0.5,
            },
            seed: 42,
            steps: 10_000,
            ks: vec![1, 2, 3],
            tracked: vec![0, 1],
            only: None,
            corrupt_b: false,
            oracle_states: 1000,
            stat_replicas: 20,
            stat_steps: 100_000,
            jobs: 1,
        }
    }
}

impl VerifyOptions {
    fn wants(&self, group: CheckGroup) -> bool {
        self.only.as_ref().is_none_or(|g| g.contains(&group))
    }
}

pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.params.validate()?;
    if opts.ks.contains(&0) {
        return Err(Error::InvalidParams("martingale audits need k >= 1".into()));
    }
    let mut checks = Vec::new();
    let want_states = opts.wants(CheckGroup::Oracle) || opts.wants(CheckGroup::Corollary);
    let states = if want_states {
        oracle_state_set(opts.oracle_states, opts.seed)?
    } else {
        Vec::new()
    };
    if opts.wants(CheckGroup::Oracle) {
        checks.extend(oracle_checks(&states)?);
    }
    if opts.wants(CheckGroup::Corollary) {
        checks.extend(corollary_checks(
            &states,
            &opts.params,
            opts.steps,
            opts.seed,
        )?);
    }
    if opts.wants(CheckGroup::Martingale) || opts.wants(CheckGroup::Supermartingale) {
        checks.extend(audit_checks(opts)?);
    }
    if opts.wants(CheckGroup::Sequences) {
        checks.extend(sequence_checks(
            &[0.2, 5.0 / 12.0, 0.8],
            opts.params.coefficients()?.alpha,
        ));
    }
    if opts.wants(CheckGroup::Invariants) {
        let sweep = invariant_sweep(&opts.params, opts.steps, opts.seed, 2.0)?;
        checks.push(
            Check::at_most("invariants.violations", sweep.violations.len() as f64, 0.0)
                .with_detail(
                    sweep
                        .violations
                        .first()
                        .cloned()
                        .unwrap_or_else(|| format!("{} full sweeps", sweep.full_sweeps)),
                ),
        );
        checks.push(Check::at_most(
            "invariants.replay",
            if sweep.replay_identical { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    if opts.wants(CheckGroup::Statistical) {
        checks.extend(statistical_checks(
            &opts.params,
            opts.stat_steps,
            opts.stat_replicas,
            opts.seed,
            opts.jobs,
        )?);
    }
    Ok(VerifyReport { checks })
}

/// Random reachable states with at most 12 vertices for `N` in `{3, 4}` and
/// every `(p, q, r)` in `{0.3, 0.5, 0.8}^3`; about `count` in total.
pub fn oracle_state_set(count: usize, seed: u64) -> Result<Vec<GraphState>> {
    let grid = [0.3, 0.5, 0.8];
    let configs: Vec<ModelParams> = iproduct!([3usize, 4], grid, grid, grid)
        .map(|(n, p, q, r)| ModelParams {
            clique_size: n,
            p,
            q,
            r,
        })
        .collect();
    let per = count.div_ceil(configs.len()).max(1);
    let mut out = Vec::with_capacity(per * configs.len());
    for (i, params) in configs.iter().enumerate() {
        out.extend(reachable_states(
            params,
            per,
            12,
            seed.wrapping_add(i as u64),
        )?);
    }
    Ok(out)
}

/// Transition mass, participation and expected-degree agreement between the
/// enumerated one-step law and the closed forms.
pub fn oracle_checks(states: &[GraphState]) -> Result<Vec<Check>> {
    let mut mass_err: f64 = 0.0;
    let mut pi_err: f64 = 0.0;
    let mut degree_err: f64 = 0.0;
    let mut remainder_err: f64 = 0.0;
    for state in states {
        let coeffs = state.params().coefficients()?;
        let dist = transition_distribution(state)?;
        mass_err = mass_err.max((dist.total_mass() - 1.0).abs());
        let n = state.step() as f64;
        for v in state.vertices() {
            let closed_pi = participation_probability(state, v.label, &coeffs)?;
            pi_err = pi_err.max((dist.participation(v.label) - closed_pi).abs());
            let enumerated = expected_degree_from(&dist, state, v.label)?;
            let closed = expected_degree_next_closed(state, v.label, &coeffs)?;
            degree_err = degree_err.max((enumerated - closed).abs());
            let r = remainder_r(state, v.label, &coeffs)?;
            let from_enum =
                enumerated - v.degree as f64 - coeffs.alpha2 * v.weight as f64 / (n + 1.0);
            remainder_err = remainder_err.max((from_enum - r.value).abs());
        }
    }
    let detail = format!("{} states", states.len());
    Ok(vec![
        Check::at_most("oracle.transition_mass", mass_err, 1e-12).with_detail(detail.clone()),
        Check::at_most("oracle.participation", pi_err, 1e-12).with_detail(detail.clone()),
        Check::at_most("oracle.expected_degree", degree_err, 1e-10).with_detail(detail.clone()),
        Check::at_most("oracle.remainder_identity", remainder_err, 1e-10).with_detail(detail),
    ])
}

/// Largest violation of `0 <= R <= (N-1) p beta / V` over every vertex of
/// `state`.
fn remainder_violation(state: &GraphState) -> Result<f64> {
    let coeffs = state.params().coefficients()?;
    let mut worst: f64 = 0.0;
    for v in state.vertices() {
        let r = remainder_r(state, v.label, &coeffs)?;
        worst = worst.max(-r.value).max(r.value - r.bound);
    }
    Ok(worst)
}

/// The corollary bound on the oracle states and along a trajectory, and
/// `R = 0` whenever `beta = 0`.
pub fn corollary_checks(
    states: &[GraphState],
    params: &ModelParams,
    steps: u64,
    seed: u64,
) -> Result<Vec<Check>> {
    let mut on_states: f64 = 0.0;
    for s in states {
        on_states = on_states.max(remainder_violation(s)?);
    }

    let mut sim = Simulation::new(params, seed, 0)?;
    let mut along: f64 = 0.0;
    for _ in 0..steps {
        along = along.max(remainder_violation(sim.state())?);
        sim.step()?;
    }
    along = along.max(remainder_violation(sim.state())?);

    let mut zero_beta: f64 = 0.0;
    let mut zero_parts: f64 = 0.0;
    for (n, p) in iproduct!([3usize, 4], [0.3, 0.5, 0.8]) {
        let params = ModelParams {
            clique_size: n,
            p,
            q: 1.0,
            r: 1.0,
        };
        for state in reachable_states(&params, 10, 12, seed)? {
            let coeffs = params.coefficients()?;
            for v in state.vertices() {
                let r = remainder_r(&state, v.label, &coeffs)?;
                zero_beta = zero_beta.max(r.value.abs());
                zero_parts = zero_parts.max(r.components_sum().abs());
            }
        }
    }

    Ok(vec![
        Check::at_most("corollary.bound_states", on_states, 1e-12),
        Check::at_most("corollary.bound_trajectory", along, 1e-12)
            .with_detail(format!("{steps} steps")),
        Check::at_most("corollary.zero_beta", zero_beta, 1e-12),
        Check::at_most("corollary.zero_beta_components", zero_parts, 0.0),
    ])
}

/// Martingale and supermartingale audits along one recorded trajectory.
pub fn audit_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let options = RunOptions {
        tracked: opts.tracked.clone(),
        ..RunOptions::default()
    };
    let record = run(&opts.params, opts.steps, &options, opts.seed, 0)?;
    let mut cache = SequenceCache::new(record.coefficients.alpha, &opts.ks, record.steps + 1);
    if opts.corrupt_b {
        cache.corrupt_b(opts.steps / 2 + 1, 1.01);
    }
    let mut checks = Vec::new();
    if opts.wants(CheckGroup::Martingale) {
        for (&k, &label) in iproduct!(&opts.ks, &opts.tracked) {
            let audit = audit_martingale(&record, &cache, k, label)?;
            checks.push(
                Check::at_most(
                    format!("martingale.k{k}.j{label}"),
                    audit.max_relative,
                    1e-8,
                )
                .with_detail(format!("{} audited steps", audit.steps.len())),
            );
        }
    }
    if opts.wants(CheckGroup::Supermartingale) {
        for &label in &opts.tracked {
            let audit = audit_supermartingale(&record, &cache, label)?;
            let stat = if audit.steps.is_empty() {
                0.0
            } else {
                audit.max_slack
            };
            checks.push(
                Check::at_most(format!("supermartingale.j{label}"), stat, 1e-12).with_detail(
                    format!(
                        "{} audited, {} skipped with W = 1",
                        audit.steps.len(),
                        audit.skipped.len()
                    ),
                ),
            );
        }
    }
    Ok(checks)
}

/// `b` and `e` against their Gamma-function asymptotics at `n = 10^6`.
pub fn sequence_checks(alphas: &[f64], run_alpha: f64) -> Vec<Check> {
    let n = 1_000_000;
    let mut list = alphas.to_vec();
    if run_alpha > 0.0 && !list.iter().any(|a| (a - run_alpha).abs() < 1e-15) {
        list.push(run_alpha);
    }
    let mut checks = Vec::new();
    for alpha in list {
        let b_dev = (1..=3)
            .map(|k| (b_asymptotic_ratio(n, k, alpha) - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("sequences.b.alpha{alpha:.4}"),
            b_dev,
            1e-3,
        ));
        let e_dev = e_asymptotic_ratio(n, alpha).map_or(f64::INFINITY, |r| (r - 1.0).abs());
        checks.push(Check::at_most(
            format!("sequences.e.alpha{alpha:.4}"),
            e_dev,
            1e-3,
        ));
    }
    checks
}

/// Result of [`invariant_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSweep {
    pub steps: u64,
    /// Steps at which the full structural sweep ran.
    pub full_sweeps: usize,
    pub local_checks: u64,
    pub violations: Vec<String>,
    pub replay_identical: bool,
}

/// Runs `steps` steps checking, after every step, the registry totals, the
/// weight sum and the degree bounds of the touched vertices; runs the full
/// structural sweep at steps `ceil(ratio^i)`; then replays the run and
/// compares a digest of every outcome and of the final state.
pub fn invariant_sweep(
    params: &ModelParams,
    steps: u64,
    seed: u64,
    ratio: f64,
) -> Result<InvariantSweep> {
    let n = params.clique_size as u64;
    let mut violations = Vec::new();
    let mut local_checks = 0;
    let mut full_sweeps = 0;
    let mut next_sweep = 1.0f64;

    let mut sim = Simulation::new(params, seed, 0)?;
    let mut digest = DefaultHasher::new();
    let mut weight_sum: u64 = sim.state().vertices().iter().map(|v| v.weight).sum();
    for _ in 0..steps {
        let out = sim.step()?;
        out.vertex_set.hash(&mut digest);
        out.degree_deltas.hash(&mut digest);
        let state = sim.state();
        let t = state.step();
        weight_sum += out.vertex_set.len() as u64;
        let mut local = |ok: bool, what: &dyn Fn() -> String| {
            local_checks += 1;
            if !ok && violations.len() < 20 {
                violations.push(format!("step {t}: {}", what()));
            }
        };
        local(state.registry_full().total_weight() == t + 1, &|| {
            "N-registry total".into()
        });
        local(state.registry_sub().total_weight() == n * (t + 1), &|| {
            "(N-1)-registry total".into()
        });
        local(weight_sum == n * (t + 1), &|| "weight sum".into());
        for &l in &out.vertex_set {
            let v = state.vertex(l).expect("touched vertex exists");
            local(state.neighbor_count(l) == Some(v.degree as usize), &|| {
                format!("degree of {l}")
            });
            local(v.degree >= n - 1 && v.degree <= (n - 1) * v.weight, &|| {
                format!("D bounds of {l}")
            });
            local(
                v.weight <= state.max_weight() && v.degree <= state.max_degree(),
                &|| "running maxima".into(),
            );
        }
        if t as f64 >= next_sweep || t == steps {
            while next_sweep <= t as f64 {
                next_sweep = (next_sweep * ratio).ceil();
            }
            full_sweeps += 1;
            if let Err(e) = state.check_invariants() {
                violations.push(format!("step {t}: {e}"));
            }
        }
    }
    let first = (digest.finish(), state_digest(sim.state()));

    let mut replay = Simulation::new(params, seed, 0)?;
    let mut digest = DefaultHasher::new();
    for _ in 0..steps {
        let out = replay.step()?;
        out.vertex_set.hash(&mut digest);
        out.degree_deltas.hash(&mut digest);
    }
    let second = (digest.finish(), state_digest(replay.state()));

    Ok(InvariantSweep {
        steps,
        full_sweeps,
        local_checks,
        violations,
        replay_identical: first == second,
    })
}

fn state_digest(state: &GraphState) -> u64 {
    let mut h = DefaultHasher::new();
    state.to_json().hash(&mut h);
    h.finish()
}

/// Two-sided normal p-value of `z`.
fn two_sided(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * (1.0 - normal.cdf(z.abs()))
}

fn fraction(summaries: &[ReplicaSummary], pred: impl Fn(&ReplicaSummary) -> bool) -> f64 {
    summaries.iter().filter(|s| pred(s)).count() as f64 / summaries.len() as f64
}

/// Ensemble checks of the growth laws at `steps`.
pub fn statistical_checks(
    params: &ModelParams,
    steps: u64,
    replicas: u64,
    seed: u64,
    jobs: usize,
) -> Result<Vec<Check>> {
    if replicas < 2 || steps < 1000 {
        return Err(Error::InvalidParams(
            "statistical checks need >= 2 replicas and >= 1000 steps".into(),
        ));
    }
    let coeffs = params.coefficients()?;
    let summaries = run_ensemble(params, steps, replicas, seed, jobs, (1000, steps))?;
    let soft =
        |name: &str, statistic: f64, tolerance: f64, pass: bool, p_value: Option<f64>| Check {
            name: name.into(),
            pass,
            statistic,
            tolerance,
            hard: false,
            p_value,
            detail: Some(format!("{replicas} replicas x {steps} steps")),
        };
    let mut checks = Vec::new();

    // V_n - N is Binomial(n, p) exactly
    let pn = params.p * steps as f64;
    let var = pn * (1.0 - params.p);
    let excess: f64 = summaries
        .iter()
        .map(|s| (s.vertex_count - params.clique_size as u64) as f64 - pn)
        .sum();
    let z = excess / (var * replicas as f64).sqrt();
    let p = two_sided(z);
    let worst = summaries
        .iter()
        .map(|s| (s.vertex_ratio - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(soft(
        "statistical.vertex_count",
        worst,
        0.01,
        p >= STAT_ALPHA,
        Some(p),
    ));

    if let Some(limit) = coeffs.degree_weight_ratio() {
        let alpha = coeffs.alpha;
        // half-widths of the acceptance bands around alpha2 / alpha
        for (name, half_width, get) in [
            (
                "statistical.ratio_vertex0",
                0.02,
                (|s: &ReplicaSummary| s.degree_weight_ratio) as fn(&ReplicaSummary) -> f64,
            ),
            ("statistical.ratio_max", 0.04, |s: &ReplicaSummary| {
                s.max_ratio
            }),
        ] {
            let xs: Vec<f64> = summaries.iter().map(get).collect();
            let (mean, se) = mean_stderr(&xs);
            let p = two_sided((mean - limit) / se);
            let dev = (mean - limit).abs();
            let mut check = soft(
                name,
                dev,
                half_width,
                dev <= half_width || p >= STAT_ALPHA,
                Some(p),
            );
            check.detail = Some(format!(
                "mean {mean:.5} vs {limit:.5}, {replicas} replicas x {steps} steps"
            ));
            checks.push(check);
        }
        for (name, get) in [
            (
                "statistical.slope_vertex0",
                (|s: &ReplicaSummary| s.slope_weight) as fn(&ReplicaSummary) -> Option<f64>,
            ),
            ("statistical.slope_max", |s: &ReplicaSummary| {
                s.slope_max_weight
            }),
        ] {
            let frac = fraction(&summaries, |s| {
                get(s).is_some_and(|x| (x - alpha).abs() <= 0.1)
            });
            checks.push(soft(name, frac, 0.9, frac >= 0.9, None));
        }
        let frac = fraction(&summaries, |s| {
            s.gamma_ratio.is_some_and(|g| (0.8..=1.25).contains(&g))
        });
        checks.push(soft(
            "statistical.gamma_stability",
            frac,
            0.9,
            frac >= 0.9,
            None,
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            steps: 2000,
            oracle_states: 60,
            stat_replicas: 4,
            stat_steps: 5000,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn hard_checks_pass_on_a_short_battery() {
        let report = run_verification(&quick()).unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| c.hard && !c.pass).collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert!(report.checks.iter().any(|c| !c.hard));
    }

    #[test]
    fn corrupted_b_table_fails() {
        let opts = VerifyOptions {
            only: Some(vec![CheckGroup::Martingale]),
            corrupt_b: true,
            ..quick()
        };
        let report = run_verification(&opts).unwrap();
        assert!(!report.hard_pass());
        assert!(report
            .checks
            .iter()
            .all(|c| c.name.starts_with("martingale.")));
    }

    #[test]
    fn group_names_round_trip() {
        for g in CheckGroup::ALL {
            assert_eq!(g.name().parse::<CheckGroup>().unwrap(), g);
        }
        assert!("nope".parse::<CheckGroup>().is_err());
    }

    #[test]
    fn report_field_names() {
        let report = VerifyReport {
            checks: vec![Check::at_most("x", 0.5, 1.0)],
        };
        let v = serde_json::to_value(&report).unwrap();
        for key in ["name", "pass", "statistic", "tolerance"] {
            assert!(v["checks"][0].get(key).is_some());
        }
    }
}
