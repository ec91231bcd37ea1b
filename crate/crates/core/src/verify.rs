//! Verification suites run against a compiled problem.
//!
//! Sample loops run on a rayon pool whose size comes from `JETFLOW_WORKERS`
//! (all cores when unset). Results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DistTensorField;
use crate::integrate::{
    integrate_first_order, integrate_second_order, integrate_sheet_ordered, max_integrability_residual,
    residual_along, residual_along_sheet, Sheet, Trajectory, INTEGRABILITY_TOL,
};
use crate::jet::{BasePoint, JetPoint};
use crate::jetspace::{
    check_omega_eq_minus_dtheta, frames_at, hamilton_consistency, hamilton_consistency_sheet, hamilton_system,
    nondegeneracy_det, sasaki_block_residual, sasaki_metric_at, symplectic_omega, FormVariant,
};
use crate::prolong::{Acceleration, FirstOrderODESystem, SecondOrderSystem};
use crate::problem::Problem;
use crate::report::{Bound, Check, Report};
use crate::sampling::DEFAULT_SEED;
use crate::variational::{hamiltonian, HamiltonianForm, LagrangianSpec};

pub const WORKERS_ENV: &str = "JETFLOW_WORKERS";

/// Below this a residual is at rounding level and a convergence ratio means nothing.
pub const CONVERGENCE_FLOOR: f64 = 1e-9;

/// Random points per property check.
pub const SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Prolongation,
    Variational,
    Hamilton,
    Forms,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Prolongation => "prolongation",
            Suite::Variational => "variational",
            Suite::Hamilton => "hamilton",
            Suite::Forms => "forms",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::Prolongation, Suite::Variational, Suite::Hamilton, Suite::Forms, Suite::All]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Problem(format!("unknown suite {s:?}")))
    }
}

/// Worker count from the environment. Unset means rayon's default; anything
/// other than a positive integer is an error.
pub fn worker_count() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(None);
    };
    match raw.trim().parse::<usize>() {
        Ok(k) if k > 0 => Ok(Some(k)),
        _ => Err(Error::Problem(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))),
    }
}

/// Run a suite on a pool sized by [`WORKERS_ENV`].
pub fn run(problem: &Problem, suite: Suite) -> Result<Report> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_count()? {
        b = b.num_threads(k);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| run_on_current_pool(problem, suite)))
}

pub fn run_on_current_pool(problem: &Problem, suite: Suite) -> Report {
    let checks = match suite {
        Suite::Prolongation => prolongation(problem),
        Suite::Variational => variational(problem),
        Suite::Hamilton => hamilton(problem),
        Suite::Forms => forms(problem),
        Suite::All => {
            let mut all = prolongation(problem);
            all.extend(variational(problem));
            all.extend(hamilton(problem));
            all.extend(forms(problem));
            all
        }
    };
    Report::new(problem.name(), suite.name(), checks)
}

/// Max over items, evaluated in parallel; any NaN poisons the result.
pub fn max_par<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64> + Sync + Send) -> Result<f64> {
    let vals = items.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(vals.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) }))
}

fn at_most(name: &str, tol: f64, r: Result<f64>) -> Check {
    Check::from_result(name, Bound::AtMost { tolerance: tol }, r)
}

/// Ratio check when the coarse residual is above rounding level, else a rounding-level bound.
fn convergence(name: &str, coarse: Result<f64>, fine: Result<f64>) -> Check {
    match (coarse, fine) {
        (Ok(a), Ok(b)) if a > CONVERGENCE_FLOOR => Check::between(name, 3.0, 5.0, a / b),
        (Ok(a), Ok(_)) => Check::at_most(name, CONVERGENCE_FLOOR, a).with_note("residual at rounding level"),
        (Err(e), _) | (_, Err(e)) => Check::errored(name, Bound::Between { lo: 3.0, hi: 5.0 }, e),
    }
}

fn is_zero_field(field: &DistTensorField) -> bool {
    field.components().iter().all(|e| e.is_zero_literal())
}

fn base_samples(pr: &Problem) -> Vec<BasePoint> {
    pr.sampler(DEFAULT_SEED).base_points(SAMPLES)
}

fn jet_samples(pr: &Problem, k: usize) -> Vec<JetPoint> {
    pr.sampler(DEFAULT_SEED ^ 0x5a5a).jet_points(k)
}

/// Initial jet that is off the first-order flow, for second-order checks.
fn off_shell_jet(pr: &Problem) -> Result<JetPoint> {
    let on = pr.on_shell_jet()?;
    let jp = pr.initial_jet()?;
    if jp.v != on.v {
        return Ok(jp);
    }
    JetPoint::new(on.t.clone(), on.x.clone(), on.v.iter().map(|v| v + 0.25).collect())
}

fn eq2_run(pr: &Problem, step: f64, n_steps: usize) -> Result<Trajectory> {
    let ini = pr.initial()?;
    let sys = FirstOrderODESystem::from_field(&pr.field)?;
    integrate_first_order(&sys, ini.t0[0], &ini.x0, step, n_steps)
}

fn second_order_run(sys: &SecondOrderSystem, jp: &JetPoint, step: f64, n_steps: usize) -> Result<Trajectory> {
    integrate_second_order(sys, jp.t[0], &jp.x, &jp.v, step, n_steps)
}

fn flow_settings(pr: &Problem) -> Option<(f64, usize)> {
    let int = pr.integration().ok()?;
    pr.initial().ok()?;
    Some((int.step, int.n_steps?))
}

fn sheet_settings(pr: &Problem) -> Option<(f64, Vec<usize>)> {
    let int = pr.integration().ok()?;
    pr.initial().ok()?;
    Some((int.step, int.grid.clone()?))
}

fn sheet_run(pr: &Problem, step: f64, counts: &[usize], order: &[usize]) -> Result<Sheet> {
    let ini = pr.initial()?;
    integrate_sheet_ordered(&pr.field, &ini.t0, &ini.x0, &vec![step; pr.p()], counts, order)
}

pub fn prolongation(pr: &Problem) -> Vec<Check> {
    let bases = base_samples(pr);
    let field = &pr.field;
    let mut out = vec![
        at_most(
            "field.omega_skew",
            1e-13,
            max_par(&bases, |b| Ok(field.local(b)?.omega_skew_residual())),
        ),
        at_most(
            "field.grad_f_identity",
            1e-8,
            max_par(&bases, |b| field.grad_f_identity_residual(b)),
        ),
    ];
    if let Some(wf) = &pr.world_force {
        out.push(at_most(
            "world_force.omega_skew",
            1e-13,
            max_par(&bases, |b| wf.omega_skew_residual(b)),
        ));
        let eq10 = SecondOrderSystem::eq10(field);
        let jets = jet_samples(pr, SAMPLES);
        out.push(at_most(
            "world_force.matches_prolongation",
            1e-8,
            max_par(&jets, |jp| {
                let law = wf.rhs(jp)?;
                let defect = match eq10.rhs(jp)? {
                    Acceleration::Trace(v) => v,
                    Acceleration::Full(_) => unreachable!("eq10 is traced"),
                };
                Ok(law.iter().zip(&defect).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
            }),
        ));
    }
    if pr.p() == 1 {
        out.extend(prolongation_flows(pr));
    } else {
        out.extend(prolongation_sheets(pr, &bases));
    }
    out
}

fn prolongation_flows(pr: &Problem) -> Vec<Check> {
    let Some((step, n_steps)) = flow_settings(pr) else {
        return vec![];
    };
    let field = &pr.field;
    let mut out = Vec::new();
    if is_zero_field(field) {
        let sys = SecondOrderSystem::geodesic(field.metrics());
        let jp = match pr.initial_jet() {
            Ok(j) => j,
            Err(e) => return vec![Check::errored("geodesic.residual", Bound::AtMost { tolerance: 1e-5 }, e)],
        };
        let run = |h: f64, k: usize| second_order_run(&sys, &jp, h, k);
        let coarse = run(step, n_steps);
        out.push(at_most(
            "geodesic.residual",
            1e-5,
            coarse.as_ref().map_err(clone_err).and_then(|tr| residual_along(tr, &sys)),
        ));
        out.push(at_most(
            "geodesic.speed_drift",
            1e-6,
            coarse.as_ref().map_err(clone_err).and_then(|tr| speed_drift(field, tr)),
        ));
        return out;
    }
    let sys = match SecondOrderSystem::eq5(field) {
        Ok(s) => s,
        Err(e) => return vec![Check::errored("eq5.residual_along_eq2", Bound::AtMost { tolerance: 1e-5 }, e)],
    };
    let r = |h: f64, k: usize| eq2_run(pr, h, k).and_then(|tr| residual_along(&tr, &sys));
    let coarse = r(step, n_steps);
    out.push(at_most("eq5.residual_along_eq2", 1e-5, coarse.as_ref().map(|v| *v).map_err(clone_err)));
    out.push(convergence("eq5.residual_ratio", coarse, r(step / 2.0, 2 * n_steps)));

    let unit = (1.0 / step).round() as usize;
    out.push(at_most(
        "trajectory.eq2_vs_eq5",
        1e-5,
        (|| {
            let a = eq2_run(pr, step, unit)?;
            let b = second_order_run(&sys, &pr.on_shell_jet()?, step, unit)?;
            Ok(a.max_position_diff(&b))
        })(),
    ));
    out
}

fn clone_err(e: &Error) -> Error {
    Error::Unsupported(e.to_string())
}

/// Max drift of `g(v, v)` from its initial value.
pub fn speed_drift(field: &DistTensorField, tr: &Trajectory) -> Result<f64> {
    let speed = |k: usize| -> Result<f64> {
        let jp = tr.jet(k);
        let g = field.metrics().g.metric_at(&jp.coords())?;
        let n = jp.n();
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| g[(i, j)] * jp.v[i] * jp.v[j])
            .sum())
    };
    let s0 = speed(0)?;
    let mut m: f64 = 0.0;
    for k in 1..tr.len() {
        m = m.max((speed(k)? - s0).abs());
    }
    Ok(m)
}

fn prolongation_sheets(pr: &Problem, bases: &[BasePoint]) -> Vec<Check> {
    let field = &pr.field;
    let Some((step, counts)) = sheet_settings(pr) else {
        return vec![];
    };
    let integ = max_integrability_residual(field, bases).map(|(m, _)| m);
    let integrable = matches!(integ, Ok(m) if m <= INTEGRABILITY_TOL);
    let mut out = vec![at_most("sheet.integrability", INTEGRABILITY_TOL, integ)];
    if !integrable {
        return out;
    }
    let p = pr.p();
    let fwd: Vec<usize> = (0..p).collect();
    let rev: Vec<usize> = (0..p).rev().collect();
    let sys = SecondOrderSystem::eq9(field);
    let coarse = sheet_run(pr, step, &counts, &fwd);
    let fine_counts: Vec<usize> = counts.iter().map(|c| 2 * c).collect();
    let r = |s: &Result<Sheet>| s.as_ref().map_err(clone_err).and_then(|s| residual_along_sheet(s, &sys));
    out.push(convergence(
        "eq9.residual_ratio",
        r(&coarse),
        r(&sheet_run(pr, step / 2.0, &fine_counts, &fwd)),
    ));
    out.push(at_most(
        "sheet.path_independence",
        1e-7,
        (|| {
            let a = coarse.as_ref().map_err(clone_err)?;
            let b = sheet_run(pr, step, &counts, &rev)?;
            Ok(a.x
                .iter()
                .zip(&b.x)
                .flat_map(|(u, w)| u.iter().zip(w).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max))
        })(),
    ));
    out
}

pub fn variational(pr: &Problem) -> Vec<Check> {
    let field = &pr.field;
    let jets = pr.sampler(DEFAULT_SEED ^ 0x77).jet_points(10 * SAMPLES);
    let full = LagrangianSpec::full(field);
    let reduced = LagrangianSpec::reduced(field);
    let mut out = vec![at_most(
        "legendre.same_hamiltonian",
        1e-10,
        max_par(&jets, |jp| Ok((full.legendre(jp)? - reduced.legendre(jp)?).abs())),
    )];
    let riemannian = pr.file.signature_h.iter().chain(&pr.file.signature_g).all(|&s| s > 0);
    if riemannian {
        let min = jets
            .par_iter()
            .map(|jp| full.lagrangian(jp))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min));
        out.push(Check::from_result(
            "lagrangian.full_nonnegative",
            Bound::AtLeast { tolerance: -1e-12 },
            min,
        ));
    }
    if pr.p() == 1 && !is_zero_field(field) {
        if let Some((step, n_steps)) = flow_settings(pr) {
            out.push(at_most(
                "hamiltonian.on_shell",
                1e-8,
                eq2_run(pr, step, n_steps).and_then(|tr| {
                    let idx: Vec<usize> = (0..tr.len()).collect();
                    max_par(&idx, |&k| Ok(hamiltonian(field, &tr.jet(k), HamiltonianForm::Weighted)?.abs()))
                }),
            ));
        }
    } else {
        let bases = base_samples(pr);
        out.push(at_most(
            "hamiltonian.on_shell",
            1e-8,
            max_par(&bases, |b| {
                let v = field.value_at(&b.coords())?;
                let jp = JetPoint::new(b.t.clone(), b.x.clone(), v)?;
                Ok(hamiltonian(field, &jp, HamiltonianForm::Weighted)?.abs())
            }),
        ));
    }
    if pr.p() == 1 {
        if let Some((step, n_steps)) = flow_settings(pr) {
            out.push(euler_lagrange_order(pr, &full, step, n_steps));
        }
    }
    out
}

fn euler_lagrange_order(pr: &Problem, full: &LagrangianSpec, step: f64, n_steps: usize) -> Check {
    let name = "euler_lagrange.order";
    let bound = Bound::AtLeast { tolerance: 1.8 };
    let sys = match SecondOrderSystem::eq5(&pr.field) {
        Ok(s) => s,
        Err(e) => return Check::errored(name, bound, e),
    };
    let r = |h: f64, k: usize| -> Result<f64> {
        let jp = off_shell_jet(pr)?;
        full.el_residual(&second_order_run(&sys, &jp, h, k)?)
    };
    match (r(step, n_steps), r(step / 2.0, 2 * n_steps)) {
        (Ok(a), Ok(b)) if a > CONVERGENCE_FLOOR => Check::new(name, bound, (a / b).log2()),
        (Ok(a), Ok(_)) => Check::at_most(name, CONVERGENCE_FLOOR, a).with_note("residual at rounding level"),
        (Err(e), _) | (_, Err(e)) => Check::errored(name, bound, e),
    }
}

pub fn hamilton(pr: &Problem) -> Vec<Check> {
    let field = &pr.field;
    let mut out = Vec::new();
    if field.is_autonomous() && field.metrics().h.is_constant() {
        let jets = jet_samples(pr, SAMPLES);
        for (variant, name) in [
            (FormVariant::Plain, "hamilton.plain.condition"),
            (FormVariant::Shifted, "hamilton.shifted.condition"),
        ] {
            out.push(at_most(
                name,
                1e-12,
                max_par(&jets, |jp| Ok(hamilton_system(field, jp, variant)?.condition_max())),
            ));
        }
    }
    if pr.p() == 1 {
        let Some((step, n_steps)) = flow_settings(pr) else {
            return out;
        };
        let plans = [
            (FormVariant::Shifted, "hamilton.shifted", SecondOrderSystem::eq5(field)),
            (FormVariant::Plain, "hamilton.plain", Ok(SecondOrderSystem::gradient_force(field))),
        ];
        for (variant, prefix, sys) in plans {
            let r = |h: f64, k: usize| -> Result<f64> {
                let sys = sys.as_ref().map_err(clone_err)?;
                hamilton_consistency(field, &second_order_run(sys, &off_shell_jet(pr)?, h, k)?, variant)
            };
            let coarse = r(step, n_steps);
            out.push(at_most(
                &format!("{prefix}.consistency"),
                1e-4,
                coarse.as_ref().map(|v| *v).map_err(clone_err),
            ));
            out.push(convergence(&format!("{prefix}.consistency_ratio"), coarse, r(step / 2.0, 2 * n_steps)));
        }
    } else if let Some((step, counts)) = sheet_settings(pr) {
        let bases = base_samples(pr);
        if matches!(max_integrability_residual(field, &bases), Ok((m, _)) if m <= INTEGRABILITY_TOL) {
            let fwd: Vec<usize> = (0..pr.p()).collect();
            let fine: Vec<usize> = counts.iter().map(|c| 2 * c).collect();
            let r = |h: f64, c: &[usize]| -> Result<f64> {
                hamilton_consistency_sheet(field, &sheet_run(pr, h, c, &fwd)?, FormVariant::Shifted)
            };
            out.push(convergence(
                "hamilton.shifted.sheet_consistency_ratio",
                r(step, &counts),
                r(step / 2.0, &fine),
            ));
        }
    }
    out
}

pub fn forms(pr: &Problem) -> Vec<Check> {
    let field = &pr.field;
    let m = field.metrics();
    let jets = jet_samples(pr, SAMPLES);
    let flat = m.h.is_constant() && m.g.is_constant();
    let form_tol = if flat { 1e-12 } else { 1e-8 };
    let mut out = vec![
        at_most(
            "frames.duality",
            1e-12,
            max_par(&jets, |jp| Ok(frames_at(m, jp)?.duality_residual())),
        ),
        at_most(
            "sasaki.adapted_block_diagonal",
            1e-12,
            max_par(&jets, |jp| sasaki_block_residual(m, jp)),
        ),
        at_most(
            "sasaki.signature_mismatches",
            0.0,
            max_par(&jets, |jp| {
                let (pos, neg, zero) = sasaki_metric_at(m, jp)?.inertia(1e-9);
                let count = |s: &[i8], sign: i8| s.iter().filter(|&&x| x == sign).count();
                let (hp, hn) = (count(&pr.file.signature_h, 1), count(&pr.file.signature_h, -1));
                let (gp, gn) = (count(&pr.file.signature_g, 1), count(&pr.file.signature_g, -1));
                let want = (hp + gp + hp * gp + hn * gn, hn + gn + hp * gn + hn * gp, 0);
                Ok(if (pos, neg, zero) == want { 0.0 } else { 1.0 })
            }),
        ),
    ];
    for (variant, tag) in [(FormVariant::Plain, "plain"), (FormVariant::Shifted, "shifted")] {
        out.push(at_most(
            &format!("forms.{tag}.omega_plus_dtheta"),
            form_tol,
            max_par(&jets, |jp| check_omega_eq_minus_dtheta(field, jp, variant)),
        ));
        out.push(at_most(
            &format!("forms.{tag}.antisymmetry"),
            0.0,
            max_par(&jets, |jp| Ok(symplectic_omega(field, jp, variant)?.antisymmetry_residual())),
        ));
        let min_det = jets
            .par_iter()
            .map(|jp| {
                (0..pr.p())
                    .map(|a| nondegeneracy_det(field, jp, variant, a).map(f64::abs))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().flatten().fold(f64::INFINITY, f64::min));
        out.push(Check::from_result(
            format!("forms.{tag}.nondegeneracy"),
            Bound::AtLeast { tolerance: 1e-12 },
            min_det,
        ));
    }
    out
}
