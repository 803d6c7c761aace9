use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use ncsim_core::analysis::{asymptotics_report, AsymptoticsReport};
use ncsim_core::evolution::for_each_replica;
use ncsim_core::{
    run_with_state, BranchCounts, Checkpoint, CheckpointSchedule, GraphState, RunOptions,
    TrajectoryRecord,
};
use serde::{Deserialize, Serialize};

use crate::common::{create, write_json, CliError, CliResult, Header, ModelArgs};

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Stream id of the first replica; replica `i` uses stream `replica + i`.
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    /// Labels whose weight and degree are recorded at every checkpoint.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1",
        allow_hyphen_values = true
    )]
    pub track: Vec<i64>,
    /// `geometric:RATIO`, `every:K` or `list:n1,n2,...`.
    #[arg(long, default_value = "geometric:1.1")]
    pub checkpoints: String,
    /// Checkpoint series, one JSON object per line after the header line.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON; defaults to the output path with `.summary.json`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Final state of the first replica as a snapshot JSON.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Gnuplot script; its data goes next to it with a `.dat` extension.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
    #[arg(long, env = "NCSIM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    header: &'a Header<'a, SimulateArgs>,
}

#[derive(Serialize)]
struct Line<'a> {
    replica: u64,
    #[serde(flatten)]
    checkpoint: &'a Checkpoint,
}

#[derive(Serialize)]
struct ReplicaSummary<'a> {
    replica: u64,
    steps: u64,
    #[serde(rename = "final")]
    last: &'a Checkpoint,
    branch_counts: BranchCounts,
    asymptotics: AsymptoticsReport,
    runtime_seconds: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    header: Header<'a, SimulateArgs>,
    replicas: Vec<ReplicaSummary<'a>>,
    runtime_seconds: f64,
}

struct Finished {
    record: TrajectoryRecord,
    state: Option<GraphState>,
    seconds: f64,
}

pub fn run(args: &SimulateArgs) -> CliResult<ExitCode> {
    let params = args.model.resolve()?;
    let schedule = CheckpointSchedule::parse(&args.checkpoints)?;
    if args.replicas == 0 {
        return Err(CliError::Config("--replicas must be at least 1".into()));
    }
    let options = RunOptions {
        tracked: args.track.clone(),
        schedule,
        keep_history: false,
    };
    let header = Header::new("simulate", args, Some(params));
    let summary_path = args
        .summary
        .clone()
        .unwrap_or_else(|| default_summary(&args.out));
    // fail on unwritable paths before the long part
    let mut out = create(&args.out)?;

    let started = Instant::now();
    let finished = for_each_replica(
        args.replicas,
        args.jobs,
        |i| -> ncsim_core::Result<Finished> {
            let t = Instant::now();
            let (record, state) =
                run_with_state(&params, args.steps, &options, args.seed, args.replica + i)?;
            let state = (i == 0 && args.snapshot.is_some()).then_some(state);
            Ok(Finished {
                record,
                state,
                seconds: t.elapsed().as_secs_f64(),
            })
        },
    )
    .into_iter()
    .collect::<ncsim_core::Result<Vec<_>>>()?;
    let total = started.elapsed().as_secs_f64();

    let io = CliError::io(&args.out);
    let mut write = || -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &HeaderLine { header: &header })?;
        writeln!(out)?;
        for f in &finished {
            for cp in &f.record.checkpoints {
                serde_json::to_writer(
                    &mut out,
                    &Line {
                        replica: f.record.stream.stream,
                        checkpoint: cp,
                    },
                )?;
                writeln!(out)?;
            }
        }
        out.flush()
    };
    write().map_err(io)?;

    let summary = Summary {
        header: Header::new("simulate", args, Some(params)),
        replicas: finished
            .iter()
            .map(|f| ReplicaSummary {
                replica: f.record.stream.stream,
                steps: f.record.steps,
                last: f.record.last(),
                branch_counts: f.record.branch_counts,
                asymptotics: asymptotics_report(&f.record),
                runtime_seconds: f.seconds,
            })
            .collect(),
        runtime_seconds: total,
    };
    write_json(Some(&summary_path), &summary)?;

    if let (Some(path), Some(state)) = (
        &args.snapshot,
        finished.first().and_then(|f| f.state.as_ref()),
    ) {
        let mut file = create(path)?;
        file.write_all(state.to_json().as_bytes())
            .and_then(|_| file.flush())
            .map_err(CliError::io(path))?;
    }
    if let Some(path) = &args.gnuplot {
        write_gnuplot(path, &finished[0].record)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn default_summary(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.summary.json"))
}

fn write_gnuplot(script: &Path, record: &TrajectoryRecord) -> CliResult<()> {
    let data = script.with_extension("dat");
    let mut dat = create(&data)?;
    let mut columns = vec!["n".to_string(), "V".into(), "maxW".into(), "maxD".into()];
    for l in &record.tracked {
        columns.push(format!("W_{l}"));
        columns.push(format!("D_{l}"));
    }
    let mut body = format!("# {}\n", columns.join(" "));
    for cp in record.checkpoints.iter().filter(|c| c.n > 0) {
        body.push_str(&format!(
            "{} {} {} {}",
            cp.n, cp.vertex_count, cp.max_weight, cp.max_degree
        ));
        for l in &record.tracked {
            let t = cp.tracked.get(l).copied().unwrap_or_default();
            body.push_str(&format!(" {} {}", t.weight, t.degree));
        }
        body.push('\n');
    }
    dat.write_all(body.as_bytes())
        .and_then(|_| dat.flush())
        .map_err(CliError::io(&data))?;

    let name = data
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut plot = format!(
        "set logscale xy\nset key left top\nset xlabel 'n'\nplot '{name}' using 1:3 with lines title 'max weight', \\\n     '{name}' using 1:4 with lines title 'max degree'"
    );
    for (i, l) in record.tracked.iter().enumerate() {
        plot.push_str(&format!(
            ", \\\n     '{name}' using 1:{} with lines title 'W of {l}'",
            5 + 2 * i
        ));
    }
    plot.push('\n');
    let mut gp = create(script)?;
    gp.write_all(plot.as_bytes())
        .and_then(|_| gp.flush())
        .map_err(CliError::io(script))
}
