//! Second-order prolongations of `x^i_α = X^i_α(t, x)` and order reductions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{fmt_point, Error, Result};
use crate::expr::{Expr, Var};
use crate::field::{DistTensorField, LocalField, UNIT_TOL};
use crate::geometry::{Metrics, PointGeometry};
use crate::jet::{BasePoint, JetPoint};
use crate::linalg::Tensor;

/// Which equation a second-order system implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemTag {
    /// `δ/dt ẋ = DX + (∇_j X) ẋ^j`
    Eq3,
    /// `δ/dt ẋ = g^{ih} g_kj (∇_h X^k) ẋ^j + F_j^i ẋ^j + DX`
    Eq4,
    /// `δ/dt ẋ = g^{ih} g_kj (∇_h X^k) X^j + F_j^i ẋ^j + DX`
    Eq5,
    /// `x^i_αβ = D_β X^i_α + (∇_j X^i_α) x^j_β`
    Eq9,
    /// `h^{αβ} x^i_αβ = h^{αβ}(g^{ih} g_kj (∇_h X^k_α) X^j_β + F_j^i_α x^j_β + D_β X^i_α)`
    Eq10,
    /// `h^{αβ} x^i_αβ = h^{αβ}(F_j^i_α x^j_β + D_β X^i_α)` for unit `f`
    #[serde(rename = "eq10prime")]
    Eq10Prime,
    /// Vanishing covariant acceleration.
    Geodesic,
    /// `δ/dt ẋ = grad f` (an `h`-trace for `p ≥ 2`).
    GradientForce,
}

impl SystemTag {
    pub fn name(self) -> &'static str {
        match self {
            SystemTag::Eq3 => "eq3",
            SystemTag::Eq4 => "eq4",
            SystemTag::Eq5 => "eq5",
            SystemTag::Eq9 => "eq9",
            SystemTag::Eq10 => "eq10",
            SystemTag::Eq10Prime => "eq10prime",
            SystemTag::Geodesic => "geodesic",
            SystemTag::GradientForce => "gradient-force",
        }
    }
}

impl fmt::Display for SystemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Prescribed value of the covariant acceleration.
#[derive(Debug, Clone, PartialEq)]
pub enum Acceleration {
    /// Every component `[i][α][β]`.
    Full(Tensor),
    /// Only the `h`-trace, one entry per state.
    Trace(Vec<f64>),
}

/// Covariant acceleration
/// `x^i_αβ = ∂_αβ x^i − H^γ_αβ x^i_γ + G^i_jk x^j_α x^k_β`
/// from raw second derivatives `accel[i][α][β]`.
pub fn geodesic_defect(geom: &PointGeometry, jp: &JetPoint, accel: &Tensor) -> Tensor {
    let (p, n) = (jp.p(), jp.n());
    Tensor::from_fn(&[n, p, p], |ix| {
        let (i, a, b) = (ix[0], ix[1], ix[2]);
        let mut s = accel[[i, a, b]];
        for c in 0..p {
            s -= geom.big_h[[c, a, b]] * jp.vel(i, c);
        }
        for j in 0..n {
            for k in 0..n {
                s += geom.big_g[[i, j, k]] * jp.vel(j, a) * jp.vel(k, b);
            }
        }
        s
    })
}

/// A second-order system built from a field, tagged with its equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    field: DistTensorField,
    tag: SystemTag,
}

impl SecondOrderSystem {
    fn ode(field: &DistTensorField, tag: SystemTag) -> Result<Self> {
        if field.p() != 1 {
            return Err(Error::Unsupported(format!(
                "{tag} is the one-parameter prolongation; use the PDE variants for p = {}",
                field.p()
            )));
        }
        Ok(SecondOrderSystem {
            field: field.clone(),
            tag,
        })
    }

    pub fn eq3(field: &DistTensorField) -> Result<Self> {
        Self::ode(field, SystemTag::Eq3)
    }

    pub fn eq4(field: &DistTensorField) -> Result<Self> {
        Self::ode(field, SystemTag::Eq4)
    }

    pub fn eq5(field: &DistTensorField) -> Result<Self> {
        Self::ode(field, SystemTag::Eq5)
    }

    pub fn eq9(field: &DistTensorField) -> Self {
        SecondOrderSystem {
            field: field.clone(),
            tag: SystemTag::Eq9,
        }
    }

    pub fn eq10(field: &DistTensorField) -> Self {
        SecondOrderSystem {
            field: field.clone(),
            tag: SystemTag::Eq10,
        }
    }

    /// Requires `f ∈ {−1, 0, 1}` at every sample.
    pub fn eq10_prime(field: &DistTensorField, samples: &[BasePoint]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        for s in samples {
            let f = field.potential_energy(s)?;
            let nearest = f.round().clamp(-1.0, 1.0);
            if (f - nearest).abs() > UNIT_TOL {
                return Err(Error::NotUnitPotential {
                    value: f,
                    point: fmt_point(&s.t, &s.x),
                });
            }
        }
        Ok(SecondOrderSystem {
            field: field.clone(),
            tag: SystemTag::Eq10Prime,
        })
    }

    /// Geodesics of `(h, g)`: the prolongation of the zero field.
    pub fn geodesic(metrics: &Metrics) -> Self {
        let (p, n) = (metrics.p(), metrics.n());
        let grid = vec![vec![Expr::num(0.0); p]; n];
        SecondOrderSystem {
            field: DistTensorField::new(metrics.clone(), grid).expect("zero field is well formed"),
            tag: SystemTag::Geodesic,
        }
    }

    pub fn gradient_force(field: &DistTensorField) -> Self {
        SecondOrderSystem {
            field: field.clone(),
            tag: SystemTag::GradientForce,
        }
    }

    pub fn by_tag(field: &DistTensorField, tag: SystemTag) -> Result<Self> {
        match tag {
            SystemTag::Eq3 => Self::eq3(field),
            SystemTag::Eq4 => Self::eq4(field),
            SystemTag::Eq5 => Self::eq5(field),
            SystemTag::Eq9 => Ok(Self::eq9(field)),
            SystemTag::Eq10 => Ok(Self::eq10(field)),
            SystemTag::Eq10Prime => Err(Error::Unsupported(
                "eq10prime needs sample points to check the unit potential".into(),
            )),
            SystemTag::Geodesic => Ok(Self::geodesic(field.metrics())),
            SystemTag::GradientForce => Ok(Self::gradient_force(field)),
        }
    }

    pub fn tag(&self) -> SystemTag {
        self.tag
    }

    pub fn field(&self) -> &DistTensorField {
        &self.field
    }

    pub fn p(&self) -> usize {
        self.field.p()
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    /// True when the system prescribes only the `h`-trace.
    pub fn is_trace(&self) -> bool {
        match self.tag {
            SystemTag::Eq10 | SystemTag::Eq10Prime => true,
            SystemTag::GradientForce => self.p() > 1,
            _ => false,
        }
    }

    fn check_point(&self, jp: &JetPoint) -> Result<()> {
        if jp.p() != self.p() || jp.n() != self.n() {
            return Err(Error::Shape(format!(
                "jet point has (p, n) = ({}, {}), system expects ({}, {})",
                jp.p(),
                jp.n(),
                self.p(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Right-hand side from precomputed local data.
    pub fn rhs_local(&self, lf: &LocalField, v: &[f64]) -> Acceleration {
        let x = lf.value_flat();
        let full = match self.tag {
            SystemTag::Eq3 | SystemTag::Eq9 => lf.d.plus(&lf.apply(&lf.nabla, v)),
            SystemTag::Eq4 => lf
                .apply(&lf.adjoint, v)
                .plus(&lf.apply(&lf.helicity, v))
                .plus(&lf.d),
            SystemTag::Eq5 | SystemTag::Eq10 => lf
                .apply(&lf.adjoint, x)
                .plus(&lf.apply(&lf.helicity, v))
                .plus(&lf.d),
            SystemTag::Eq10Prime => lf.apply(&lf.helicity, v).plus(&lf.d),
            SystemTag::Geodesic => Tensor::zeros(&[lf.n, lf.p, lf.p]),
            SystemTag::GradientForce => lf.apply(&lf.adjoint, x),
        };
        if self.is_trace() {
            Acceleration::Trace(lf.trace_h(&full))
        } else {
            Acceleration::Full(full)
        }
    }

    /// Prescribed covariant acceleration at a jet point.
    pub fn rhs(&self, jp: &JetPoint) -> Result<Acceleration> {
        self.check_point(jp)?;
        let lf = self.field.local(&jp.base())?;
        Ok(self.rhs_local(&lf, &jp.v))
    }

    /// Raw second derivatives `∂_αβ x^i` solving the system; full systems only.
    pub fn raw_acceleration(&self, jp: &JetPoint) -> Result<Tensor> {
        self.check_point(jp)?;
        let lf = self.field.local(&jp.base())?;
        let Acceleration::Full(a) = self.rhs_local(&lf, &jp.v) else {
            return Err(Error::Unsupported(format!(
                "{} prescribes only the h-trace of the acceleration",
                self.tag
            )));
        };
        // invert the defect: ∂²x = a + H v − G v v
        let zero = Tensor::zeros(a.shape());
        let offset = geodesic_defect(&lf.geom, jp, &zero);
        Ok(a.minus(&offset))
    }

    /// `max |defect − RHS|` (or of the `h`-traces) given raw second derivatives.
    pub fn residual(&self, jp: &JetPoint, accel: &Tensor) -> Result<f64> {
        self.check_point(jp)?;
        let lf = self.field.local(&jp.base())?;
        let defect = geodesic_defect(&lf.geom, jp, accel);
        Ok(match self.rhs_local(&lf, &jp.v) {
            Acceleration::Full(a) => defect.max_abs_diff(&a),
            Acceleration::Trace(tr) => lf
                .trace_h(&defect)
                .iter()
                .zip(&tr)
                .fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        })
    }
}

/// Provenance of a first-order system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstOrderTag {
    /// `ẋ = X(t, x)`
    Eq2,
    /// Chain `ẋ1 = x2, …, ẋn = f` from a scalar equation of order `n`.
    Reduced,
}

/// `ẋ^i = rhs^i(t1, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderODESystem {
    rhs: Vec<Expr>,
    tag: FirstOrderTag,
}

impl FirstOrderODESystem {
    pub fn new(rhs: Vec<Expr>, tag: FirstOrderTag) -> Result<Self> {
        let n = rhs.len();
        if n == 0 {
            return Err(Error::Shape("first-order system needs at least one state".into()));
        }
        for (i, e) in rhs.iter().enumerate() {
            if let Some(v) = e.variables().into_iter().find(|v| match v {
                Var::T(a) => *a > 0,
                Var::X(k) => *k >= n,
                Var::Jet { .. } => true,
            }) {
                return Err(Error::Shape(format!(
                    "right-hand side {} uses {v}; only t1 and x1..x{n} are allowed",
                    i + 1
                )));
            }
        }
        Ok(FirstOrderODESystem { rhs, tag })
    }

    /// The kinematic system of a one-parameter field.
    pub fn from_field(field: &DistTensorField) -> Result<Self> {
        if field.p() != 1 {
            return Err(Error::Unsupported(format!(
                "an ODE system needs p = 1, the field has p = {}",
                field.p()
            )));
        }
        Self::new(field.components().to_vec(), FirstOrderTag::Eq2)
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[Expr] {
        &self.rhs
    }

    pub fn tag(&self) -> FirstOrderTag {
        self.tag
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let tt = [t];
        let c = crate::expr::Coords::new(&tt, x, &[]);
        self.rhs
            .iter()
            .map(|e| e.eval_at(&c).map_err(Error::from))
            .collect()
    }
}

impl fmt::Display for FirstOrderODESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.rhs.iter().enumerate() {
            writeln!(f, "d/dt x{} = {e}", i + 1)?;
        }
        Ok(())
    }
}

/// `x^(n) = f(t, x1, …, xn)` with `x1 = x`, `x2 = x′`, … becomes
/// `ẋ1 = x2, …, ẋ(n−1) = xn, ẋn = f`.
pub fn reduce_order_ode(f: &Expr, order: usize) -> Result<FirstOrderODESystem> {
    if order == 0 {
        return Err(Error::UnsupportedOrder(0));
    }
    let mut rhs: Vec<Expr> = (1..order).map(|k| Expr::var(Var::X(k))).collect();
    rhs.push(f.clone());
    FirstOrderODESystem::new(rhs, FirstOrderTag::Reduced)
}

/// Role of one equation in the reduced PDE system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    /// `x_β = u^β`
    Explicit,
    /// `u^α_β = u^β_α`, `α ≠ β`; a constraint to monitor.
    Symmetry,
    /// `u^α_α` for `α < p`, left undetermined.
    Free,
    /// `u^p_p = F`
    Principal,
}

/// One entry `Y^I_β` of the reduced system over the extended state.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeEquation {
    /// Extended state index: 0 is `x`, `α + 1` is `u^α`.
    pub state: usize,
    pub alpha: usize,
    pub kind: EquationKind,
    /// `None` for free entries.
    pub rhs: Option<Expr>,
}

/// First-order sheet system over `(x, u¹, …, u^p)` obtained from a scalar
/// second-order PDE solved for `∂²x/∂(t^p)²`.
///
/// Extended states are named `x1` (for `x`) and `x{α+1}` (for `u^α`); the
/// jet variable `x{α+1}_β` is `u^α_β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPde {
    pub p: usize,
    pub equations: Vec<PdeEquation>,
}

impl ReducedPde {
    pub fn n_ext(&self) -> usize {
        self.p + 1
    }

    /// `(α, β)` pairs whose symmetry `u^α_β = u^β_α` has to be monitored.
    pub fn constraints(&self) -> Vec<(usize, usize)> {
        self.equations
            .iter()
            .filter(|e| e.kind == EquationKind::Symmetry && e.state - 1 < e.alpha)
            .map(|e| (e.state - 1, e.alpha))
            .collect()
    }
}

impl fmt::Display for ReducedPde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.equations {
            let lhs = Var::Jet {
                i: e.state,
                alpha: e.alpha,
            };
            match &e.rhs {
                Some(r) => writeln!(f, "{lhs} = {r}    [{:?}]", e.kind)?,
                None => writeln!(f, "{lhs} free    [{:?}]", e.kind)?,
            }
        }
        Ok(())
    }
}

/// Reduce `∂²x/∂(t^p)² = F` to a first-order system of `p(1 + p)` equations.
///
/// `F` may use `t^α`, `x1` (= `x`), `x1_α` or `x{α+1}` (= `∂_α x`) and
/// `x{λ+1}_μ` (= `∂_λμ x`) except the principal derivative itself.
pub fn reduce_order_pde(f: &Expr, p: usize, order: usize) -> Result<ReducedPde> {
    if order != 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    if p == 0 {
        return Err(Error::Shape("a PDE reduction needs p ≥ 1".into()));
    }
    for v in f.variables() {
        let ok = match v {
            Var::T(a) => a < p,
            Var::X(k) => k <= p,
            Var::Jet { i: 0, alpha } => alpha < p,
            Var::Jet { i, alpha } => i <= p && alpha < p && !(i == p && alpha == p - 1),
        };
        if !ok {
            return Err(Error::Shape(format!(
                "F uses {v}, which is not an allowed variable of the reduction"
            )));
        }
    }
    let rhs = substitute_first_derivatives(f);
    let mut equations = Vec::with_capacity(p * (p + 1));
    for b in 0..p {
        equations.push(PdeEquation {
            state: 0,
            alpha: b,
            kind: EquationKind::Explicit,
            rhs: Some(Expr::var(Var::X(b + 1))),
        });
    }
    for a in 0..p {
        for b in 0..p {
            let (kind, r) = if a != b {
                (
                    EquationKind::Symmetry,
                    Some(Expr::var(Var::Jet { i: b + 1, alpha: a })),
                )
            } else if a == p - 1 {
                (EquationKind::Principal, Some(rhs.clone()))
            } else {
                (EquationKind::Free, None)
            };
            equations.push(PdeEquation {
                state: a + 1,
                alpha: b,
                kind,
                rhs: r,
            });
        }
    }
    Ok(ReducedPde { p, equations })
}

/// Rewrite `x1_α` as `x{α+1}`.
fn substitute_first_derivatives(e: &Expr) -> Expr {
    use std::sync::Arc;
    match e {
        Expr::Var(Var::Jet { i: 0, alpha }) => Expr::var(Var::X(alpha + 1)),
        Expr::Neg(a) => Expr::Neg(Arc::new(substitute_first_derivatives(a))),
        Expr::Bin(op, l, r) => Expr::Bin(
            *op,
            Arc::new(substitute_first_derivatives(l)),
            Arc::new(substitute_first_derivatives(r)),
        ),
        Expr::Call(func, a) => Expr::Call(*func, Arc::new(substitute_first_derivatives(a))),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, MetricSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn rotation() -> DistTensorField {
        DistTensorField::vector(Metrics::flat(1, 2), &["-x2", "x1"]).unwrap()
    }

    fn full(a: Acceleration) -> Tensor {
        match a {
            Acceleration::Full(t) => t,
            Acceleration::Trace(_) => panic!("expected full acceleration"),
        }
    }

    fn sphere_metrics() -> Metrics {
        let g = MetricSpec::diagonal(Domain::State, &["1", "sin(x1)^2"], &[1, 1]).unwrap();
        Metrics::new(MetricSpec::euclidean(Domain::Parameters, 1), g).unwrap()
    }

    #[test]
    fn flat_defect_is_the_acceleration() {
        let m = Metrics::flat(1, 2);
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[3.0, -1.0]).unwrap();
        let geom = m.at(&jp.coords()).unwrap();
        let a = Tensor::from_vec(&[2, 1, 1], vec![0.5, 7.0]);
        assert_eq!(geodesic_defect(&geom, &jp, &a), a);
    }

    #[test]
    fn great_circle_has_no_defect() {
        // θ(t) = t, φ fixed: the meridian
        let m = sphere_metrics();
        let jp = JetPoint::curve(0.8, &[0.8, 0.4], &[1.0, 0.0]).unwrap();
        let geom = m.at(&jp.coords()).unwrap();
        let d = geodesic_defect(&geom, &jp, &Tensor::zeros(&[2, 1, 1]));
        assert!(d.max_abs() < 1e-15);
        // the equator traversed in φ is also a geodesic
        let jp = JetPoint::curve(0.0, &[FRAC_PI_2, 0.3], &[0.0, 1.0]).unwrap();
        let geom = m.at(&jp.coords()).unwrap();
        let d = geodesic_defect(&geom, &jp, &Tensor::zeros(&[2, 1, 1]));
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn exponential_parameter_metric_defect() {
        let h = MetricSpec::diagonal(Domain::Parameters, &["exp(2*t1)"], &[1]).unwrap();
        let m = Metrics::new(h, MetricSpec::euclidean(Domain::State, 1)).unwrap();
        let t: f64 = 0.3;
        let jp = JetPoint::curve(t, &[t.exp()], &[t.exp()]).unwrap();
        let geom = m.at(&jp.coords()).unwrap();
        let d = geodesic_defect(&geom, &jp, &Tensor::from_vec(&[1, 1, 1], vec![t.exp()]));
        assert!(d.max_abs() < 1e-14);
    }

    #[test]
    fn eq3_examples() {
        let s = SecondOrderSystem::eq3(&rotation()).unwrap();
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[0.3, -0.7]).unwrap();
        let a = full(s.rhs(&jp).unwrap());
        assert_eq!(a.data(), &[0.7, 0.3]);

        let zero = DistTensorField::vector(sphere_metrics(), &["0", "0"]).unwrap();
        let s = SecondOrderSystem::eq3(&zero).unwrap();
        let g = SecondOrderSystem::geodesic(&sphere_metrics());
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[0.3, -0.7]).unwrap();
        assert_eq!(s.raw_acceleration(&jp).unwrap(), g.raw_acceleration(&jp).unwrap());
        // a^i = −G^i_jk v^j v^k with H = 0
        let raw = g.raw_acceleration(&jp).unwrap();
        let (th, v0, v1) = (1.0f64, 0.3, -0.7);
        assert_abs_diff_eq!(raw[[0, 0, 0]], th.sin() * th.cos() * v1 * v1, epsilon = 1e-14);
        assert_abs_diff_eq!(raw[[1, 0, 0]], -2.0 / th.tan() * v0 * v1, epsilon = 1e-14);

        let c = DistTensorField::vector(Metrics::flat(1, 2), &["1", "2"]).unwrap();
        let s = SecondOrderSystem::eq3(&c).unwrap();
        assert_eq!(full(s.rhs(&jp).unwrap()).max_abs(), 0.0);
    }

    #[test]
    fn eq5_examples() {
        let s = SecondOrderSystem::eq5(&rotation()).unwrap();
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(full(s.rhs(&jp).unwrap()).data(), &[1.0, 2.0]);
        // on shell eq3 and eq5 agree
        let on = JetPoint::curve(0.0, &[1.0, 2.0], &[-2.0, 1.0]).unwrap();
        let a3 = full(SecondOrderSystem::eq3(&rotation()).unwrap().rhs(&on).unwrap());
        let a5 = full(s.rhs(&on).unwrap());
        assert!(a3.max_abs_diff(&a5) <= 1e-12);
    }

    #[test]
    fn eq4_equals_eq3_everywhere() {
        let x = DistTensorField::vector(sphere_metrics(), &["sin(x2)", "x1*t1"]).unwrap();
        let jp = JetPoint::curve(0.4, &[1.1, 0.2], &[0.5, -1.5]).unwrap();
        let a3 = full(SecondOrderSystem::eq3(&x).unwrap().rhs(&jp).unwrap());
        let a4 = full(SecondOrderSystem::eq4(&x).unwrap().rhs(&jp).unwrap());
        assert!(a3.max_abs_diff(&a4) <= 1e-12);
    }

    #[test]
    fn pde_prolongations_specialize_to_ode() {
        let x = DistTensorField::vector(sphere_metrics(), &["cos(x2)", "x1 - t1"]).unwrap();
        let jp = JetPoint::curve(0.4, &[1.1, 0.2], &[0.5, -1.5]).unwrap();
        let a3 = full(SecondOrderSystem::eq3(&x).unwrap().rhs(&jp).unwrap());
        let a9 = full(SecondOrderSystem::eq9(&x).rhs(&jp).unwrap());
        assert_eq!(a3, a9);
        let a5 = full(SecondOrderSystem::eq5(&x).unwrap().rhs(&jp).unwrap());
        let Acceleration::Trace(tr) = SecondOrderSystem::eq10(&x).rhs(&jp).unwrap() else {
            panic!()
        };
        // h = 1, so the trace is the single component
        assert_eq!(tr, a5.data());
    }

    #[test]
    fn eq9_sheet_examples() {
        let c = DistTensorField::parse(Metrics::flat(2, 1), &[&["2", "-3"]]).unwrap();
        let jp = JetPoint::new(vec![0.1, 0.2], vec![5.0], vec![2.0, -3.0]).unwrap();
        assert_eq!(full(SecondOrderSystem::eq9(&c).rhs(&jp).unwrap()).max_abs(), 0.0);

        let x = DistTensorField::parse(Metrics::flat(2, 1), &[&["x1", "x1"]]).unwrap();
        let jp = JetPoint::new(vec![0.0, 0.0], vec![1.0], vec![1.0, 1.0]).unwrap();
        let a = full(SecondOrderSystem::eq9(&x).rhs(&jp).unwrap());
        assert_eq!(a.data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn eq10_is_the_trace_of_the_full_expression() {
        let h = MetricSpec::parse(
            Domain::Parameters,
            &[&["2", "0.5"], &["0.5", "-1"]],
            &[1, -1],
        )
        .unwrap();
        let m = Metrics::new(h, MetricSpec::euclidean(Domain::State, 1)).unwrap();
        let x = DistTensorField::parse(m, &[&["x1*t2", "sin(x1)"]]).unwrap();
        let jp = JetPoint::new(vec![0.3, -0.2], vec![0.7], vec![0.4, 1.3]).unwrap();
        let lf = x.local(&jp.base()).unwrap();
        let Acceleration::Trace(tr) = SecondOrderSystem::eq10(&x).rhs(&jp).unwrap() else {
            panic!()
        };
        let grad = lf.grad_f();
        let rest = lf.trace_h(&lf.apply(&lf.helicity, &jp.v).plus(&lf.d));
        assert_abs_diff_eq!(tr[0], grad[0] + rest[0], epsilon = 1e-12);
    }

    #[test]
    fn eq10_prime_needs_unit_potential() {
        let r = rotation();
        let samples = [BasePoint::new(&[0.0], &[1.0, 0.0])];
        assert!(matches!(
            SecondOrderSystem::eq10_prime(&r, &[BasePoint::new(&[0.0], &[1.0, 2.0])]),
            Err(Error::NotUnitPotential { .. })
        ));
        let unit = r.rescale_to_unit(&samples).unwrap();
        let s = SecondOrderSystem::eq10_prime(&unit, &samples).unwrap();
        assert!(s.is_trace());
    }

    #[test]
    fn ode_variants_reject_sheets() {
        let x = DistTensorField::parse(Metrics::flat(2, 1), &[&["x1", "x1"]]).unwrap();
        assert!(SecondOrderSystem::eq5(&x).is_err());
        let jp = JetPoint::new(vec![0.0, 0.0], vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            SecondOrderSystem::eq10(&x).raw_acceleration(&jp),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ode_reduction_examples() {
        let f: Expr = "-x1".parse().unwrap();
        let s = reduce_order_ode(&f, 2).unwrap();
        assert_eq!(s.to_string(), "d/dt x1 = x2\nd/dt x2 = -x1\n");
        assert_eq!(s.eval(0.0, &[1.0, 0.5]).unwrap(), vec![0.5, -1.0]);

        let id = reduce_order_ode(&"x1".parse().unwrap(), 1).unwrap();
        assert_eq!(id.n(), 1);
        assert_eq!(id.rhs()[0].to_string(), "x1");

        let cubic = reduce_order_ode(&"t1".parse().unwrap(), 3).unwrap();
        assert_eq!(cubic.n(), 3);
        assert_eq!(cubic.rhs()[2].to_string(), "t1");
        assert!(reduce_order_ode(&"x4".parse().unwrap(), 3).is_err());
    }

    #[test]
    fn pde_reduction_examples() {
        let r = reduce_order_pde(&"-x1".parse().unwrap(), 2, 2).unwrap();
        assert_eq!(r.n_ext(), 3);
        assert_eq!(r.equations.len(), 6);
        assert_eq!(r.constraints(), vec![(0, 1)]);

        let laplace = reduce_order_pde(&"-x2_1".parse().unwrap(), 2, 2).unwrap();
        assert_eq!(laplace.equations.len(), 2 * 3);
        let principal: Vec<_> = laplace
            .equations
            .iter()
            .filter(|e| e.kind == EquationKind::Principal)
            .collect();
        assert_eq!(principal.len(), 1);
        assert_eq!((principal[0].state, principal[0].alpha), (2, 1));
        assert_eq!(principal[0].rhs.as_ref().unwrap().to_string(), "-x2_1");

        // first derivatives are rewritten as the new states
        let r = reduce_order_pde(&"x1_1 + t2".parse().unwrap(), 2, 2).unwrap();
        let p = r.equations.iter().find(|e| e.kind == EquationKind::Principal).unwrap();
        assert_eq!(p.rhs.as_ref().unwrap().to_string(), "x2 + t2");

        for p in 1..5 {
            assert_eq!(reduce_order_pde(&"0".parse().unwrap(), p, 2).unwrap().equations.len(), p * (p + 1));
        }
    }

    #[test]
    fn pde_reduction_errors() {
        let f: Expr = "x1".parse().unwrap();
        assert!(matches!(reduce_order_pde(&f, 2, 3), Err(Error::UnsupportedOrder(3))));
        assert!(reduce_order_pde(&"x3_2".parse().unwrap(), 2, 2).is_err());
        assert!(reduce_order_pde(&"x4".parse().unwrap(), 2, 2).is_err());
    }
}
