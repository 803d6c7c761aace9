use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use ncsim_core::analysis::{mean_stderr, run_ensemble, ReplicaSummary};
use ncsim_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::common::{create, warn_degenerate, CliError, CliResult, Header};

pub const COLUMNS: [&str; 10] = [
    "N",
    "p",
    "q",
    "r",
    "alpha",
    "alpha2_over_alpha",
    "slope_W",
    "slope_D",
    "ratio_D_W",
    "V_over_pn",
];

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long = "N", value_delimiter = ',', default_value = "3")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub q: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 4)]
    pub replicas: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Refuse grids with more cells than this.
    #[arg(long, default_value_t = 100)]
    pub max_cells: usize,
    #[arg(long, default_value_t = ncsim_core::params::DEFAULT_MAX_CLIQUE)]
    pub max_n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "NCSIM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

pub fn run(args: &SweepArgs) -> CliResult<ExitCode> {
    let cells = grid(args)?;
    let mut out = create(&args.out)?;
    let io = CliError::io(&args.out);
    let header =
        serde_json::to_string(&Header::new("sweep", args, None)).expect("header serializes");
    writeln!(out, "# {header}").map_err(CliError::io(&args.out))?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(COLUMNS).map_err(|e| CliError::Io {
        path: args.out.clone(),
        source: e.into(),
    })?;
    let window = ((args.steps / 100).max(1), args.steps);
    for params in cells {
        let summaries = run_ensemble(
            &params,
            args.steps,
            args.replicas,
            args.seed,
            args.jobs,
            window,
        )?;
        csv.write_record(row(&params, &summaries)?)
            .map_err(|e| CliError::Io {
                path: args.out.clone(),
                source: e.into(),
            })?;
    }
    csv.flush().map_err(io)?;
    Ok(ExitCode::SUCCESS)
}

fn grid(args: &SweepArgs) -> CliResult<Vec<ModelParams>> {
    if args.steps < 1000 {
        return Err(CliError::Config(
            "--steps must be at least 1000 for the exponent fits".into(),
        ));
    }
    if args.replicas == 0 {
        return Err(CliError::Config("--replicas must be at least 1".into()));
    }
    let count = args.n.len() * args.p.len() * args.q.len() * args.r.len();
    if count > args.max_cells {
        return Err(CliError::Config(format!(
            "grid has {count} cells, more than --max-cells {}",
            args.max_cells
        )));
    }
    let mut cells = Vec::with_capacity(count);
    for &n in &args.n {
        for &p in &args.p {
            for &q in &args.q {
                for &r in &args.r {
                    let params = ModelParams {
                        clique_size: n,
                        p,
                        q,
                        r,
                    };
                    params.validate_with_cap(args.max_n)?;
                    warn_degenerate(&params)?;
                    cells.push(params);
                }
            }
        }
    }
    Ok(cells)
}

fn mean_of(
    summaries: &[ReplicaSummary],
    get: impl Fn(&ReplicaSummary) -> Option<f64>,
) -> Option<f64> {
    let xs: Vec<f64> = summaries.iter().filter_map(get).collect();
    (xs.len() == summaries.len()).then(|| mean_stderr(&xs).0)
}

fn row(params: &ModelParams, summaries: &[ReplicaSummary]) -> CliResult<Vec<String>> {
    let coeffs = params.coefficients()?;
    let na = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| v.to_string());
    let growth = coeffs.alpha > 0.0;
    Ok(vec![
        params.clique_size.to_string(),
        params.p.to_string(),
        params.q.to_string(),
        params.r.to_string(),
        coeffs.alpha.to_string(),
        na(coeffs.degree_weight_ratio()),
        na(mean_of(summaries, |s| s.slope_weight).filter(|_| growth)),
        na(mean_of(summaries, |s| s.slope_degree).filter(|_| growth)),
        na(mean_of(summaries, |s| Some(s.degree_weight_ratio)).filter(|_| growth)),
        na(mean_of(summaries, |s| Some(s.vertex_ratio))),
    ])
}
