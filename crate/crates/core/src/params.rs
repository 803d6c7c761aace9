//! Model inputs and the growth/drift coefficients derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest clique size accepted unless a caller raises the cap.
pub const DEFAULT_MAX_CLIQUE: usize = 64;

/// Inputs of the N-interactions model.
///
/// `clique_size` is the number of vertices taking part in every interaction.
/// With probability `p` a new vertex joins `clique_size - 1` old ones; the old
/// ones are an (N-1)-clique chosen by weight with probability `r`, otherwise a
/// uniform subset. With probability `1 - p` the interaction is among old
/// vertices only: an N-clique chosen by weight with probability `q`, otherwise
/// a uniform N-subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "N")]
    pub clique_size: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl ModelParams {
    /// Builds and validates against [`DEFAULT_MAX_CLIQUE`].
    pub fn new(clique_size: usize, p: f64, q: f64, r: f64) -> Result<Self> {
        let params = Self {
            clique_size,
            p,
            q,
            r,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_cap(DEFAULT_MAX_CLIQUE)
    }

    pub fn validate_with_cap(&self, max_clique: usize) -> Result<()> {
        if self.clique_size < 3 {
            return Err(Error::InvalidParams(format!(
                "N = {} but N must be at least 3",
                self.clique_size
            )));
        }
        if self.clique_size > max_clique {
            return Err(Error::InvalidParams(format!(
                "N = {} exceeds the configured maximum {}",
                self.clique_size, max_clique
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "p = {} but p must satisfy 0 < p <= 1",
                self.p
            )));
        }
        for (name, v) in [("q", self.q), ("r", self.r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} but {name} must satisfy 0 <= {name} <= 1"
                )));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        derive_coefficients(self)
    }

    /// Parses `{"N": int, "p": num, "q": num, "r": num}` and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

/// Growth exponents (`alpha*`) and uniform-branch drifts (`beta*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta: f64,
}

impl Coefficients {
    /// Limit of `D/W` for a fixed vertex and of max-degree over max-weight.
    /// `None` when `alpha = 0`.
    pub fn degree_weight_ratio(&self) -> Option<f64> {
        (self.alpha > 0.0).then(|| self.alpha2 / self.alpha)
    }
}

pub fn derive_coefficients(params: &ModelParams) -> Result<Coefficients> {
    params.validate()?;
    let n = params.clique_size as f64;
    let ModelParams { p, q, r, .. } = *params;
    let alpha1 = (1.0 - p) * q;
    let alpha2 = (n - 1.0) / n * p * r;
    let beta1 = (n - 1.0) * (1.0 - r);
    let beta2 = n * (1.0 - p) * (1.0 - q) / p;
    Ok(Coefficients {
        alpha1,
        alpha2,
        alpha: alpha1 + alpha2,
        beta1,
        beta2,
        beta: beta1 + beta2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamWarning {
    /// The model is well defined but none of the growth laws apply.
    ZeroAlpha,
}

impl std::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamWarning::ZeroAlpha => {
                write!(f, "alpha = 0: asymptotic growth checks are not applicable")
            }
        }
    }
}

pub fn require_positive_alpha(coeffs: &Coefficients) -> Option<ParamWarning> {
    (coeffs.alpha <= 0.0).then_some(ParamWarning::ZeroAlpha)
}
