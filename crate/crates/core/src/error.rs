use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::integrate::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("degenerate metric {metric} at {point}")]
    Degenerate { metric: &'static str, point: String },

    #[error(
        "metric {metric} at {point}: eigenvalue signs (+{found_pos}, -{found_neg}, 0:{found_zero}) \
         do not match declared signature (+{declared_pos}, -{declared_neg})"
    )]
    Signature {
        metric: &'static str,
        point: String,
        declared_pos: usize,
        declared_neg: usize,
        found_pos: usize,
        found_neg: usize,
        found_zero: usize,
    },

    #[error("metric {metric} is not symmetric: entries ({i},{j}) and ({j},{i}) differ")]
    Asymmetric {
        metric: &'static str,
        i: usize,
        j: usize,
    },

    #[error("metric {metric} entry ({i},{j}) depends on {var}, which is not a coordinate of its manifold")]
    ForeignVariable {
        metric: &'static str,
        i: usize,
        j: usize,
        var: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("potential energy changes sign over the samples (min {min}, max {max})")]
    MixedSign { min: f64, max: f64 },

    #[error("sample {point} lies in the critical set")]
    CriticalPoint { point: String },

    #[error("potential energy vanishes; a null field cannot be rescaled to f = ±1")]
    NullField,

    #[error("potential energy {value} at {point} is not in {{-1, 0, 1}}")]
    NotUnitPotential { value: f64, point: String },

    #[error("order {0} is not supported (only order 2 reductions are implemented)")]
    UnsupportedOrder(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration blew up after sample {last_good}")]
    BlowUp {
        last_good: usize,
        prefix: Box<Trajectory>,
    },

    #[error("complete integrability violated: residual {max:e} at {point}")]
    Integrability { max: f64, point: String },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("invalid problem file: {0}")]
    Problem(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn fmt_point(t: &[f64], x: &[f64]) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("t=({}) x=({})", join(t), join(x))
}
