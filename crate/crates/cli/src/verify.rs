use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use ncsim_core::verify::{run_verification, Check, CheckGroup, VerifyOptions};
use serde::{Deserialize, Serialize};

use crate::common::{fresh_seed, write_json, CliResult, Header, ModelArgs};

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Draw the seed from the clock instead; the seed used is reported.
    #[arg(long)]
    pub fresh_seed: bool,
    /// Length of the audited trajectory.
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<u64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1",
        allow_hyphen_values = true
    )]
    pub track: Vec<i64>,
    /// Comma-separated subset of: oracle, corollary, martingale,
    /// supermartingale, sequences, invariants, statistical.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Inject a fault; the battery must then fail.
    #[arg(long, value_parser = ["b-table"])]
    pub corrupt: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub oracle_states: usize,
    /// Replicas for the statistical checks.
    #[arg(long, default_value_t = 20)]
    pub replicas: u64,
    /// Steps per replica for the statistical checks.
    #[arg(long, default_value_t = 100_000)]
    pub stat_steps: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "NCSIM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    header: Header<'a, VerifyArgs>,
    seed: u64,
    hard_pass: bool,
    checks: &'a [Check],
}

pub fn run(args: &VerifyArgs) -> CliResult<ExitCode> {
    let params = args.model.resolve()?;
    let only = if args.only.is_empty() {
        None
    } else {
        Some(
            args.only
                .iter()
                .map(|s| s.parse::<CheckGroup>())
                .collect::<ncsim_core::Result<Vec<_>>>()?,
        )
    };
    let seed = if args.fresh_seed {
        fresh_seed()
    } else {
        args.seed
    };
    let opts = VerifyOptions {
        params,
        seed,
        steps: args.steps,
        ks: args.k.clone(),
        tracked: args.track.clone(),
        only,
        corrupt_b: args.corrupt.is_some(),
        oracle_states: args.oracle_states,
        stat_replicas: args.replicas,
        stat_steps: args.stat_steps,
        jobs: args.jobs,
    };
    let report = run_verification(&opts)?;
    for c in &report.checks {
        let kind = if c.hard { "hard" } else { "stat" };
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        eprintln!(
            "{verdict} [{kind}] {:<32} {:>12.4e} (tol {:.1e})",
            c.name, c.statistic, c.tolerance
        );
    }
    let hard_pass = report.hard_pass();
    write_json(
        args.out.as_deref(),
        &Report {
            header: Header::new("verify", args, Some(params)),
            seed,
            hard_pass,
            checks: &report.checks,
        },
    )?;
    Ok(if hard_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
