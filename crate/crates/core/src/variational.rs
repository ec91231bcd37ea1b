//! First-order Lagrangians and Hamiltonians of a field, and discrete
//! Euler-Lagrange residuals along sampled trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Coords;
use crate::field::DistTensorField;
use crate::integrate::Trajectory;
use crate::jet::JetPoint;
use crate::scalar::{Dual, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagrangianVariant {
    /// `½ h^{αβ} g_ij (x^i_α − X^i_α)(x^j_β − X^j_β) √|h|`
    Full,
    /// `(½ h^{αβ} g_ij x^i_α x^j_β + f) √|h|`, meant for helicity-free fields.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianForm {
    /// `(½ h^{αβ} g_ij x^i_α x^j_β − f) √|h|`
    Weighted,
    /// `½ h^{αβ} g_ij x^i_α x^j_β − f`
    Unweighted,
}

/// Quadratic form `h^{αβ} g_ij a^i_α b^j_β` over any scalar.
fn hg<T: Scalar>(h_inv: &crate::linalg::Mat<T>, g: &crate::linalg::Mat<T>, a: &[T], b: &[T], p: usize, n: usize) -> T {
    let mut s = T::zero();
    for al in 0..p {
        for be in 0..p {
            for i in 0..n {
                for j in 0..n {
                    s = s + h_inv[(al, be)] * g[(i, j)] * a[i * p + al] * b[j * p + be];
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    field: DistTensorField,
    variant: LagrangianVariant,
}

impl LagrangianSpec {
    pub fn new(field: &DistTensorField, variant: LagrangianVariant) -> Self {
        LagrangianSpec {
            field: field.clone(),
            variant,
        }
    }

    pub fn full(field: &DistTensorField) -> Self {
        Self::new(field, LagrangianVariant::Full)
    }

    pub fn reduced(field: &DistTensorField) -> Self {
        Self::new(field, LagrangianVariant::Reduced)
    }

    pub fn variant(&self) -> LagrangianVariant {
        self.variant
    }

    pub fn field(&self) -> &DistTensorField {
        &self.field
    }

    /// `L` at a jet point given over any scalar type.
    pub fn value_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<T> {
        let (p, n) = (self.field.p(), self.field.n());
        let m = self.field.metrics();
        let h = m.h.metric_at(c)?;
        let h_inv = h.inverse().ok_or_else(|| Error::Shape("singular h".into()))?;
        let g = m.g.metric_at(c)?;
        let vol = h.det().abs().sqrt();
        let v = &c.v[..n * p];
        let inner = match self.variant {
            LagrangianVariant::Full => {
                let xv = self.field.value_at(c)?;
                let d: Vec<T> = v.iter().zip(&xv).map(|(a, b)| *a - *b).collect();
                hg(&h_inv, &g, &d, &d, p, n).scale(0.5)
            }
            LagrangianVariant::Reduced => {
                hg(&h_inv, &g, v, v, p, n).scale(0.5) + self.field.energy_at(c)?
            }
        };
        Ok(inner * vol)
    }

    fn check(&self, jp: &JetPoint) -> Result<()> {
        if jp.p() != self.field.p() || jp.n() != self.field.n() {
            return Err(Error::Shape(format!(
                "jet point has (p, n) = ({}, {}), Lagrangian expects ({}, {})",
                jp.p(),
                jp.n(),
                self.field.p(),
                self.field.n()
            )));
        }
        Ok(())
    }

    pub fn lagrangian(&self, jp: &JetPoint) -> Result<f64> {
        self.check(jp)?;
        self.value_at(&jp.coords())
    }

    /// `∂L/∂x^i_α`, flattened `[i * p + α]`.
    pub fn momentum(&self, jp: &JetPoint) -> Result<Vec<f64>> {
        self.check(jp)?;
        let lift = |s: &[f64]| s.iter().map(|&v| Dual::constant(v)).collect::<Vec<_>>();
        let (t, x, v0) = (lift(&jp.t), lift(&jp.x), lift(&jp.v));
        (0..jp.v.len())
            .map(|k| {
                let mut v = v0.clone();
                v[k].du = 1.0;
                Ok(self.value_at(&Coords::new(&t, &x, &v))?.du)
            })
            .collect()
    }

    /// `∂L/∂x^i`.
    pub fn position_gradient(&self, jp: &JetPoint) -> Result<Vec<f64>> {
        self.check(jp)?;
        let lift = |s: &[f64]| s.iter().map(|&v| Dual::constant(v)).collect::<Vec<_>>();
        let (t, x0, v) = (lift(&jp.t), lift(&jp.x), lift(&jp.v));
        (0..jp.x.len())
            .map(|k| {
                let mut x = x0.clone();
                x[k].du = 1.0;
                Ok(self.value_at(&Coords::new(&t, &x, &v))?.du)
            })
            .collect()
    }

    /// Legendre transform `x^i_α ∂L/∂x^i_α − L`.
    pub fn legendre(&self, jp: &JetPoint) -> Result<f64> {
        let mom = self.momentum(jp)?;
        let pv: f64 = mom.iter().zip(&jp.v).map(|(a, b)| a * b).sum();
        Ok(pv - self.lagrangian(jp)?)
    }

    /// Discrete Euler-Lagrange residuals
    /// `r_k = (P_{k+1} − P_k)/Δt − ∂L/∂x (midpoint)`, max-norm per interval.
    pub fn el_residual_series(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        if traj.len() < 3 {
            return Err(Error::TooFewSamples {
                need: 3,
                got: traj.len(),
            });
        }
        if self.field.p() != 1 {
            return Err(Error::Shape("trajectories have a single parameter".into()));
        }
        let dt = traj.step;
        let moms = (0..traj.len())
            .map(|k| self.momentum(&traj.jet(k)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(traj.len() - 1);
        for k in 0..traj.len() - 1 {
            let (a, b) = (&traj.samples[k], &traj.samples[k + 1]);
            let mid = |u: &[f64], w: &[f64]| -> Vec<f64> {
                u.iter().zip(w).map(|(p, q)| 0.5 * (p + q)).collect()
            };
            let jm = JetPoint::curve(0.5 * (a.t + b.t), &mid(&a.x, &b.x), &mid(&a.v, &b.v))?;
            let dl = self.position_gradient(&jm)?;
            let r = (0..dl.len())
                .map(|i| ((moms[k + 1][i] - moms[k][i]) / dt - dl[i]).abs())
                .fold(0.0, f64::max);
            out.push(r);
        }
        Ok(out)
    }

    /// `max_k |r_k|`.
    pub fn el_residual(&self, traj: &Trajectory) -> Result<f64> {
        Ok(self.el_residual_series(traj)?.into_iter().fold(0.0, f64::max))
    }
}

/// The Hamiltonian of the field at a jet point.
pub fn hamiltonian(field: &DistTensorField, jp: &JetPoint, form: HamiltonianForm) -> Result<f64> {
    let (p, n) = (field.p(), field.n());
    if jp.p() != p || jp.n() != n {
        return Err(Error::Shape("jet point does not match the field".into()));
    }
    let c = jp.coords();
    let m = field.metrics();
    let (h, h_inv) = m.h.with_inverse_at(&c)?;
    let g = m.g.metric_at(&c)?;
    let kinetic = 0.5 * hg(&h_inv, &g, &jp.v, &jp.v, p, n);
    let raw = kinetic - field.energy_at(&c)?;
    Ok(match form {
        HamiltonianForm::Weighted => raw * h.det().abs().sqrt(),
        HamiltonianForm::Unweighted => raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, MetricSpec, Metrics};
    use crate::integrate::Sample;
    use approx::assert_abs_diff_eq;

    fn rotation() -> DistTensorField {
        DistTensorField::vector(Metrics::flat(1, 2), &["-x2", "x1"]).unwrap()
    }

    fn zero_field() -> DistTensorField {
        DistTensorField::vector(Metrics::flat(1, 2), &["0", "0"]).unwrap()
    }

    #[test]
    fn lagrangian_examples() {
        let on = JetPoint::curve(0.0, &[1.0, 2.0], &[-2.0, 1.0]).unwrap();
        assert_eq!(LagrangianSpec::full(&rotation()).lagrangian(&on).unwrap(), 0.0);

        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(LagrangianSpec::full(&zero_field()).lagrangian(&jp).unwrap(), 12.5);

        let h = MetricSpec::diagonal(Domain::Parameters, &["4"], &[1]).unwrap();
        let m = Metrics::new(h, MetricSpec::euclidean(Domain::State, 2)).unwrap();
        let x = DistTensorField::vector(m, &["-x2", "x1"]).unwrap();
        let rest = JetPoint::curve(0.0, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        let f = x.potential_energy(&rest.base()).unwrap();
        assert_abs_diff_eq!(
            LagrangianSpec::reduced(&x).lagrangian(&rest).unwrap(),
            f * 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn hamiltonian_examples() {
        let on = JetPoint::curve(0.0, &[1.0, 2.0], &[-2.0, 1.0]).unwrap();
        for form in [HamiltonianForm::Weighted, HamiltonianForm::Unweighted] {
            assert_eq!(hamiltonian(&rotation(), &on, form).unwrap(), 0.0);
        }
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(hamiltonian(&zero_field(), &jp, HamiltonianForm::Weighted).unwrap(), 12.5);

        let g = MetricSpec::diagonal(Domain::State, &["1", "-1"], &[1, -1]).unwrap();
        let m = Metrics::new(MetricSpec::euclidean(Domain::Parameters, 1), g).unwrap();
        let null = DistTensorField::vector(m, &["1", "1"]).unwrap();
        let rest = JetPoint::curve(0.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(hamiltonian(&null, &rest, HamiltonianForm::Weighted).unwrap(), 0.0);
    }

    #[test]
    fn momentum_matches_hand_formula() {
        // h = e^{t}, g = diag(1, 1 + x1²)
        let h = MetricSpec::diagonal(Domain::Parameters, &["exp(t1)"], &[1]).unwrap();
        let g = MetricSpec::diagonal(Domain::State, &["1", "1 + x1^2"], &[1, 1]).unwrap();
        let x = DistTensorField::vector(Metrics::new(h, g).unwrap(), &["x2", "t1*x1"]).unwrap();
        let (t, x1, x2, y1, y2) = (0.3f64, 0.7, -0.2, 1.1, 0.4);
        let jp = JetPoint::curve(t, &[x1, x2], &[y1, y2]).unwrap();
        let mom = LagrangianSpec::full(&x).momentum(&jp).unwrap();
        let (hinv, vol) = ((-t).exp(), t.exp().sqrt());
        assert_abs_diff_eq!(mom[0], hinv * (y1 - x2) * vol, epsilon = 1e-12);
        assert_abs_diff_eq!(mom[1], hinv * (1.0 + x1 * x1) * (y2 - t * x1) * vol, epsilon = 1e-12);
    }

    #[test]
    fn both_lagrangians_give_the_same_hamiltonian() {
        let x = rotation();
        let jp = JetPoint::curve(0.2, &[0.4, -1.0], &[2.0, 0.3]).unwrap();
        let a = LagrangianSpec::full(&x).legendre(&jp).unwrap();
        let b = LagrangianSpec::reduced(&x).legendre(&jp).unwrap();
        let h = hamiltonian(&x, &jp, HamiltonianForm::Weighted).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        assert_abs_diff_eq!(a, h, epsilon = 1e-12);
    }

    fn sampled(step: f64, n: usize, path: impl Fn(f64) -> ([f64; 2], [f64; 2])) -> Trajectory {
        Trajectory {
            step,
            provenance: "test".into(),
            samples: (0..=n)
                .map(|k| {
                    let t = 0.5 + k as f64 * step;
                    let (x, v) = path(t);
                    Sample { t, x: x.to_vec(), v: v.to_vec() }
                })
                .collect(),
        }
    }

    #[test]
    fn straight_line_is_an_extremal() {
        let tr = sampled(0.01, 50, |t| ([1.0 + 2.0 * t, -t], [2.0, -1.0]));
        assert!(LagrangianSpec::full(&zero_field()).el_residual(&tr).unwrap() <= 1e-12);
    }

    #[test]
    fn cubic_is_not_an_extremal() {
        let tr = sampled(0.01, 50, |t| ([t * t * t, 0.0], [3.0 * t * t, 0.0]));
        let series = LagrangianSpec::full(&zero_field()).el_residual_series(&tr).unwrap();
        for (k, r) in series.iter().enumerate() {
            // analytic residual 6t at the interval midpoint
            let t = 0.5 + (k as f64 + 0.5) * 0.01;
            assert_abs_diff_eq!(*r, 6.0 * t, epsilon = 1e-3);
        }
        assert!(series.iter().all(|r| *r >= 0.1));
    }

    #[test]
    fn too_few_samples() {
        let tr = sampled(0.1, 1, |t| ([t, t], [1.0, 1.0]));
        assert!(matches!(
            LagrangianSpec::full(&zero_field()).el_residual(&tr),
            Err(Error::TooFewSamples { need: 3, got: 2 })
        ));
    }
}
