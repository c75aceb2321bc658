use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The scoring-function family of a model.
///
/// Families with a hidden layer carry its width `m` (rows of `Q_r1`/`Q_r2`,
/// slices of `T_r`). `BilinearLinear` is the one-slice tensor model without
/// the output non-linearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    Distance { rows: usize },
    SingleLayer { hidden: usize },
    TransE,
    Bilinear,
    BilinearDiag,
    BilinearLinear,
    Ntn { slices: usize },
}

impl ModelKind {
    pub const NAMES: [&'static str; 7] = [
        "distance",
        "single-layer",
        "transe",
        "bilinear",
        "distmult",
        "bilinear-linear",
        "ntn",
    ];

    /// Width of the hidden layer, 1 for families without one.
    pub fn output_dim(self) -> usize {
        match self {
            ModelKind::Distance { rows } => rows,
            ModelKind::SingleLayer { hidden } => hidden,
            ModelKind::Ntn { slices } => slices,
            _ => 1,
        }
    }

    /// Number of reals per relation for entity dimension `n`.
    pub fn relation_param_count(self, n: usize) -> usize {
        let m = self.output_dim();
        match self {
            ModelKind::TransE | ModelKind::BilinearDiag => n,
            ModelKind::Bilinear => n * n,
            ModelKind::Distance { .. } => 2 * m * n,
            ModelKind::SingleLayer { .. } => 2 * m * n + m,
            ModelKind::BilinearLinear | ModelKind::Ntn { .. } => m * n * n + 2 * m * n + m,
        }
    }

    /// Builds a kind from its command-line name. `m` applies to the
    /// families with a hidden layer.
    pub fn from_name(name: &str, m: usize) -> Result<Self, Error> {
        if m == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(match name {
            "distance" => ModelKind::Distance { rows: m },
            "single-layer" => ModelKind::SingleLayer { hidden: m },
            "transe" | "distadd" => ModelKind::TransE,
            "bilinear" => ModelKind::Bilinear,
            "distmult" | "bilinear-diag" => ModelKind::BilinearDiag,
            "bilinear-linear" => ModelKind::BilinearLinear,
            "ntn" => ModelKind::Ntn { slices: m },
            other => {
                return Err(Error::Config(format!(
                    "unknown model `{other}`; expected one of {}",
                    ModelKind::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Distance { .. } => "distance",
            ModelKind::SingleLayer { .. } => "single-layer",
            ModelKind::TransE => "transe",
            ModelKind::Bilinear => "bilinear",
            ModelKind::BilinearDiag => "distmult",
            ModelKind::BilinearLinear => "bilinear-linear",
            ModelKind::Ntn { .. } => "ntn",
        }
    }

    /// True for kinds whose score is zero whenever all parameters are zero
    /// and which are multiplicative in the entity vectors.
    pub fn is_multiplicative(self) -> bool {
        matches!(
            self,
            ModelKind::Bilinear | ModelKind::BilinearDiag | ModelKind::BilinearLinear | ModelKind::Ntn { .. }
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Distance { rows } => write!(f, "distance(m={rows})"),
            ModelKind::SingleLayer { hidden } => write!(f, "single-layer(m={hidden})"),
            ModelKind::Ntn { slices } => write!(f, "ntn(m={slices})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Entity projection `f` applied to embedding rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the output `y = f(x)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
        })
    }
}
