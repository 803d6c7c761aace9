use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use ncsim_core::{Coefficients, ModelParams, GENERATOR_ID, VERSION};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Io { .. } => ExitCode::from(3),
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<ncsim_core::Error> for CliError {
    fn from(e: ncsim_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Model parameters from flags, optionally layered over a JSON config file.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelArgs {
    /// JSON object with keys N, p, q, r; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Clique size N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Largest accepted N.
    #[arg(long, default_value_t = ncsim_core::params::DEFAULT_MAX_CLIQUE)]
    pub max_n: usize,
}

impl ModelArgs {
    /// Resolves to validated parameters; unset values default to
    /// `N = 3, p = q = r = 0.5`.
    pub fn resolve(&self) -> CliResult<ModelParams> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
                serde_json::from_str::<ModelParams>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => ModelParams {
                clique_size: 3,
                p: 0.5,
                q: 0.5,
                r: 0.5,
            },
        };
        let params = ModelParams {
            clique_size: self.n.unwrap_or(base.clique_size),
            p: self.p.unwrap_or(base.p),
            q: self.q.unwrap_or(base.q),
            r: self.r.unwrap_or(base.r),
        };
        params.validate_with_cap(self.max_n)?;
        warn_degenerate(&params)?;
        Ok(params)
    }
}

pub fn warn_degenerate(params: &ModelParams) -> CliResult<()> {
    if let Some(w) = ncsim_core::require_positive_alpha(&params.coefficients()?) {
        eprintln!(
            "ncsim: warning: (N, p, q, r) = ({}, {}, {}, {}): {w}",
            params.clique_size, params.p, params.q, params.r
        );
    }
    Ok(())
}

/// First object of every output file.
#[derive(Debug, Serialize)]
pub struct Header<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Coefficients>,
    pub generator: &'a str,
    pub version: &'a str,
}

impl<'a, C: Serialize> Header<'a, C> {
    pub fn new(command: &'a str, config: &'a C, params: Option<ModelParams>) -> Self {
        Self {
            command,
            config,
            params,
            coefficients: params.and_then(|p| p.coefficients().ok()),
            generator: GENERATOR_ID,
            version: VERSION,
        }
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match path {
        Some(path) => {
            let mut out = create(path)?;
            writeln!(out, "{text}")
                .and_then(|_| out.flush())
                .map_err(CliError::io(path))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Seed from the clock, for `--fresh-seed`.
pub fn fresh_seed() -> u64 {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    now.as_nanos() as u64 ^ (std::process::id() as u64).rotate_left(32)
}
