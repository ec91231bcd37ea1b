//! JSON problem files.
//!
//! ```json
//! {
//!   "p": 1, "n": 2,
//!   "metric_h": [["1"]], "signature_h": [1],
//!   "metric_g": [["1", "0"], ["0", "1"]], "signature_g": [1, 1],
//!   "field_X": [["-x2"], ["x1"]],
//!   "initial": {"t0": [0], "x0": [1, 0], "v0": [0, 1]},
//!   "integration": {"step": 0.001, "n_steps": 1000}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Coords, Expr};
use crate::field::{DistTensorField, WorldForceSpec};
use crate::geometry::{Domain, MetricSpec, Metrics};
use crate::jet::JetPoint;
use crate::sampling::{Region, Sampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub p: usize,
    pub n: usize,
    pub metric_h: Vec<Vec<String>>,
    pub metric_g: Vec<Vec<String>>,
    pub signature_h: Vec<i8>,
    pub signature_g: Vec<i8>,
    /// `n` rows of `p` components.
    #[serde(rename = "field_X")]
    pub field_x: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world_force: Option<WorldForceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<Integration>,
    /// Box for random sample points; `[-1, 1]` on every axis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldForceFile {
    /// `F_j^i_α` indexed `[j][i][α]`.
    #[serde(rename = "F")]
    pub f: Vec<Vec<Vec<String>>>,
    /// `U^i_αβ` indexed `[i][α][β]`.
    #[serde(rename = "U")]
    pub u: Vec<Vec<Vec<String>>>,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub t0: Vec<f64>,
    pub x0: Vec<f64>,
    /// Jet coordinates flattened `[i * p + α]`; `X(t0, x0)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub step: f64,
    /// Steps along a trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Steps per parameter axis of a sheet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
}

fn expr_at(src: &str, what: impl FnOnce() -> String) -> Result<Expr> {
    parse(src).map_err(|e| Error::Problem(format!("{}: {e}", what())))
}

fn grid_exprs(grid: &[Vec<String>], name: &str) -> Result<Vec<Vec<Expr>>> {
    grid.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| expr_at(s, || format!("{name}[{}][{}]", i + 1, j + 1)))
                .collect()
        })
        .collect()
}

fn cube_exprs(cube: &[Vec<Vec<String>>], name: &str) -> Result<Vec<Vec<Vec<Expr>>>> {
    cube.iter()
        .enumerate()
        .map(|(i, plane)| grid_exprs(plane, &format!("{name}[{}]", i + 1)))
        .collect()
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Problem(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

impl ProblemFile {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Problem(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Parse every expression and check shapes; evaluates nothing.
    pub fn compile(&self) -> Result<Problem> {
        let (p, n) = (self.p, self.n);
        if p == 0 || n == 0 {
            return Err(Error::Problem("p and n must be positive".into()));
        }
        check_len("metric_h", self.metric_h.len(), p)?;
        check_len("metric_g", self.metric_g.len(), n)?;
        check_len("signature_h", self.signature_h.len(), p)?;
        check_len("signature_g", self.signature_g.len(), n)?;
        check_len("field_X", self.field_x.len(), n)?;
        for (i, row) in self.field_x.iter().enumerate() {
            check_len(&format!("field_X[{}]", i + 1), row.len(), p)?;
        }
        let h = MetricSpec::new(
            Domain::Parameters,
            grid_exprs(&self.metric_h, "metric_h")?,
            self.signature_h.clone(),
        )?;
        let g = MetricSpec::new(
            Domain::State,
            grid_exprs(&self.metric_g, "metric_g")?,
            self.signature_g.clone(),
        )?;
        let metrics = Metrics::new(h, g)?;
        let field = DistTensorField::new(metrics.clone(), grid_exprs(&self.field_x, "field_X")?)?;
        let world_force = match &self.world_force {
            None => None,
            Some(w) => Some(WorldForceSpec::new(
                metrics.clone(),
                cube_exprs(&w.f, "world_force.F")?,
                cube_exprs(&w.u, "world_force.U")?,
                expr_at(&w.c, || "world_force.c".into())?,
            )?),
        };
        if let Some(ini) = &self.initial {
            check_len("initial.t0", ini.t0.len(), p)?;
            check_len("initial.x0", ini.x0.len(), n)?;
            if let Some(v0) = &ini.v0 {
                check_len("initial.v0", v0.len(), n * p)?;
            }
        }
        if let Some(int) = &self.integration {
            if !(int.step.is_finite() && int.step > 0.0) {
                return Err(Error::Problem("integration.step must be positive".into()));
            }
            if let Some(grid) = &int.grid {
                check_len("integration.grid", grid.len(), p)?;
            }
        }
        let region = self.region.clone().unwrap_or_else(|| Region::unit(p, n));
        check_len("region.t", region.p(), p)?;
        check_len("region.x", region.n(), n)?;
        region.validate()?;
        Ok(Problem {
            file: self.clone(),
            metrics,
            field,
            world_force,
            region,
        })
    }
}

/// A compiled problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub metrics: Metrics,
    pub field: DistTensorField,
    pub world_force: Option<WorldForceSpec>,
    pub region: Region,
}

impl Problem {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ProblemFile::load(path)?.compile()
    }

    pub fn from_json(src: &str) -> Result<Self> {
        ProblemFile::from_json(src)?.compile()
    }

    pub fn p(&self) -> usize {
        self.file.p
    }

    pub fn n(&self) -> usize {
        self.file.n
    }

    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or("problem")
    }

    pub fn sampler(&self, seed: u64) -> Sampler {
        Sampler::new(self.region.clone(), seed)
    }

    pub fn initial(&self) -> Result<&Initial> {
        self.file
            .initial
            .as_ref()
            .ok_or_else(|| Error::Problem("missing \"initial\" data".into()))
    }

    pub fn integration(&self) -> Result<&Integration> {
        self.file
            .integration
            .as_ref()
            .ok_or_else(|| Error::Problem("missing \"integration\" settings".into()))
    }

    /// Initial jet; `v0` falls back to the field value.
    pub fn initial_jet(&self) -> Result<JetPoint> {
        match &self.initial()?.v0 {
            Some(v) => {
                let ini = self.initial()?;
                JetPoint::new(ini.t0.clone(), ini.x0.clone(), v.clone())
            }
            None => self.on_shell_jet(),
        }
    }

    /// On-shell initial jet `v0 = X(t0, x0)`.
    pub fn on_shell_jet(&self) -> Result<JetPoint> {
        let ini = self.initial()?;
        let v = self.field.value_at(&Coords::new(&ini.t0, &ini.x0, &[]))?;
        JetPoint::new(ini.t0.clone(), ini.x0.clone(), v)
    }

    pub fn n_steps(&self) -> Result<usize> {
        self.integration()?
            .n_steps
            .ok_or_else(|| Error::Problem("missing integration.n_steps".into()))
    }

    pub fn grid(&self) -> Result<Vec<usize>> {
        self.integration()?
            .grid
            .clone()
            .ok_or_else(|| Error::Problem("missing integration.grid".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = r#"{
        "p": 1, "n": 2,
        "metric_h": [["1"]], "signature_h": [1],
        "metric_g": [["1", "0"], ["0", "1"]], "signature_g": [1, 1],
        "field_X": [["-x2"], ["x1"]],
        "initial": {"t0": [0], "x0": [1, 0]},
        "integration": {"step": 0.001, "n_steps": 1000}
    }"#;

    #[test]
    fn compiles_and_round_trips() {
        let pf = ProblemFile::from_json(ROTATION).unwrap();
        let pr = pf.compile().unwrap();
        assert_eq!((pr.p(), pr.n()), (1, 2));
        assert_eq!(pr.on_shell_jet().unwrap().v, vec![0.0, 1.0]);
        assert_eq!(pr.initial_jet().unwrap().v, vec![0.0, 1.0]);
        assert_eq!(ProblemFile::from_json(&pf.to_json()).unwrap(), pf);
    }

    #[test]
    fn asymmetric_metric_names_indices() {
        let src = ROTATION.replace(r#"[["1", "0"], ["0", "1"]]"#, r#"[["1", "x1"], ["0", "1"]]"#);
        let err = Problem::from_json(&src).unwrap_err().to_string();
        assert!(err.contains("(1,2)") || err.contains("(0,1)"), "{err}");
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let src = ROTATION.replace(r#""-x2""#, r#""x1 +""#);
        let err = Problem::from_json(&src).unwrap_err().to_string();
        assert!(err.contains("field_X[1][1]") && err.contains("offset 4"), "{err}");
    }

    #[test]
    fn shape_errors() {
        let src = ROTATION.replace(r#""x0": [1, 0]"#, r#""x0": [1]"#);
        assert!(Problem::from_json(&src).unwrap_err().to_string().contains("initial.x0"));
        let src = ROTATION.replace(r#""p": 1"#, r#""p": 2"#);
        assert!(Problem::from_json(&src).is_err());
        assert!(ProblemFile::from_json(r#"{"p": 1}"#).is_err());
        let src = ROTATION.replace(r#""p": 1,"#, r#""p": 1, "bogus": 3,"#);
        assert!(ProblemFile::from_json(&src).is_err());
    }
}
