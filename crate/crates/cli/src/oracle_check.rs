use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use ncsim_core::oracle::{
    expected_degree_from, expected_degree_next_closed, remainder_r, transition_distribution_capped,
    TransitionDistribution, DEFAULT_ENUMERATION_CAP,
};
use ncsim_core::verify::{corollary_checks, oracle_checks, oracle_state_set, Check};
use ncsim_core::{participation_probability, GraphState};
use serde::{Deserialize, Serialize};

use crate::common::{write_json, CliError, CliResult, Header, ModelArgs};

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct OracleArgs {
    /// Parameters of the trajectory used for the corollary bound.
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Random reachable states over the configuration grid.
    #[arg(long, default_value_t = 1000)]
    pub states: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    /// Check the single state in this snapshot instead of the random set.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Largest vertex count that may be enumerated.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a> {
    header: Header<'a, OracleArgs>,
    pass: bool,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distribution: Option<TransitionDistribution>,
}

pub fn run(args: &OracleArgs) -> CliResult<ExitCode> {
    let (checks, distribution, params) = match &args.snapshot {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            let state = GraphState::from_json(&text)?;
            let (checks, dist) = single_state(&state, args.cap)?;
            (checks, Some(dist), *state.params())
        }
        None => {
            let params = args.model.resolve()?;
            let states = oracle_state_set(args.states, args.seed)?;
            let mut checks = oracle_checks(&states)?;
            checks.extend(corollary_checks(&states, &params, args.steps, args.seed)?);
            (checks, None, params)
        }
    };
    for c in &checks {
        eprintln!(
            "{} {:<32} {:>12.4e} (tol {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.tolerance
        );
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = Report {
        header: Header::new("oracle-check", args, Some(params)),
        pass,
        checks,
        distribution,
    };
    write_json(args.out.as_deref(), &report)?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn single_state(state: &GraphState, cap: usize) -> CliResult<(Vec<Check>, TransitionDistribution)> {
    let coeffs = state.params().coefficients()?;
    let dist = transition_distribution_capped(state, cap)?;
    let (mut pi_err, mut degree_err, mut bound_violation) = (0.0f64, 0.0f64, 0.0f64);
    for v in state.vertices() {
        pi_err = pi_err.max(
            (dist.participation(v.label) - participation_probability(state, v.label, &coeffs)?)
                .abs(),
        );
        let closed = expected_degree_next_closed(state, v.label, &coeffs)?;
        degree_err = degree_err.max((expected_degree_from(&dist, state, v.label)? - closed).abs());
        let r = remainder_r(state, v.label, &coeffs)?;
        bound_violation = bound_violation.max(-r.value).max(r.value - r.bound);
    }
    let checks = vec![
        Check::at_most(
            "oracle.transition_mass",
            (dist.total_mass() - 1.0).abs(),
            1e-12,
        ),
        Check::at_most("oracle.participation", pi_err, 1e-12),
        Check::at_most("oracle.expected_degree", degree_err, 1e-10),
        Check::at_most("corollary.bound_states", bound_violation, 1e-12),
    ];
    Ok((checks, dist))
}
