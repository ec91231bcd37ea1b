//! Metric tensors `h` on the parameter manifold `T` and `g` on the state
//! manifold `M`, their inverses and Levi-Civita connections.

use crate::error::{fmt_point, Error, Result};
use crate::expr::{parse, Coords, Expr, Var};
use crate::linalg::{Mat, Tensor};
use crate::scalar::{Dual, Scalar};

/// Relative tolerance for singular metrics: `|det| ≤ DEGENERATE_TOL · ‖m‖_max^dim`.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Which manifold a metric lives on, and therefore which coordinates it may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `T`, coordinates `t^α`; metric `h`.
    Parameters,
    /// `M`, coordinates `x^i`; metric `g`.
    State,
}

impl Domain {
    fn label(self) -> &'static str {
        match self {
            Domain::Parameters => "h",
            Domain::State => "g",
        }
    }

    fn owns(self, var: Var) -> bool {
        matches!(
            (self, var),
            (Domain::Parameters, Var::T(_)) | (Domain::State, Var::X(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    dim: usize,
    domain: Domain,
    components: Vec<Expr>,
    signature: Vec<i8>,
}

impl MetricSpec {
    /// Build from a full `dim × dim` grid. The grid must be symmetric entry by
    /// entry (identical trees), use only the coordinates of its own manifold,
    /// and come with a signature of `±1` entries.
    pub fn new(domain: Domain, grid: Vec<Vec<Expr>>, signature: Vec<i8>) -> Result<Self> {
        let dim = grid.len();
        let metric = domain.label();
        if dim == 0 {
            return Err(Error::Shape(format!("metric {metric} has dimension 0")));
        }
        if let Some(row) = grid.iter().position(|r| r.len() != dim) {
            return Err(Error::Shape(format!(
                "metric {metric} row {} has {} entries, expected {dim}",
                row + 1,
                grid[row].len()
            )));
        }
        if signature.len() != dim || signature.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::Shape(format!(
                "metric {metric} signature must list {dim} entries of +1/-1"
            )));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                if grid[i][j] != grid[j][i] {
                    return Err(Error::Asymmetric {
                        metric,
                        i: i + 1,
                        j: j + 1,
                    });
                }
            }
        }
        for (i, row) in grid.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if let Some(var) = e.variables().into_iter().find(|v| !domain.owns(*v)) {
                    return Err(Error::ForeignVariable {
                        metric,
                        i: i + 1,
                        j: j + 1,
                        var: var.name(),
                    });
                }
            }
        }
        // A coordinate index past the dimension could never be bound.
        let out_of_range = grid.iter().flatten().flat_map(|e| e.variables()).find(|v| match v {
            Var::T(a) => *a >= dim,
            Var::X(i) => *i >= dim,
            Var::Jet { .. } => true,
        });
        if let Some(v) = out_of_range {
            return Err(Error::Shape(format!(
                "metric {metric} uses {v} but has dimension {dim}"
            )));
        }
        Ok(MetricSpec {
            dim,
            domain,
            components: grid.into_iter().flatten().collect(),
            signature,
        })
    }

    pub fn parse(domain: Domain, grid: &[&[&str]], signature: &[i8]) -> Result<Self> {
        let grid = grid
            .iter()
            .map(|row| row.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(domain, grid, signature.to_vec())
    }

    /// Constant metric `diag(±1)` matching `signature`.
    pub fn flat(domain: Domain, signature: &[i8]) -> Self {
        let dim = signature.len();
        let grid = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Expr::Num(if i == j { signature[i] as f64 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Self::new(domain, grid, signature.to_vec()).expect("flat metric is well formed")
    }

    pub fn euclidean(domain: Domain, dim: usize) -> Self {
        Self::flat(domain, &vec![1; dim])
    }

    /// Diagonal metric from source strings, signature inferred from the
    /// provided signs.
    pub fn diagonal(domain: Domain, diag: &[&str], signature: &[i8]) -> Result<Self> {
        let dim = diag.len();
        let grid = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i == j {
                            parse(diag[i])
                        } else {
                            Ok(Expr::Num(0.0))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(domain, grid, signature.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim + j]
    }

    /// True when no entry depends on a coordinate.
    pub fn is_constant(&self) -> bool {
        self.components.iter().all(Expr::is_constant)
    }

    fn label(&self) -> &'static str {
        self.domain.label()
    }

    fn degenerate<T: Scalar>(&self, c: &Coords<'_, T>) -> Error {
        let vals = |s: &[T]| s.iter().map(Scalar::value).collect::<Vec<_>>();
        Error::Degenerate {
            metric: self.label(),
            point: fmt_point(&vals(c.t), &vals(c.x)),
        }
    }

    fn eval_raw<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<Mat<T>> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.component(i, j).eval_at(c)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    fn check_degenerate<T: Scalar>(&self, m: &Mat<T>, c: &Coords<'_, T>) -> Result<()> {
        let scale = m.max_abs().powi(self.dim as i32);
        if m.det().value().abs() <= DEGENERATE_TOL * scale || scale == 0.0 {
            return Err(self.degenerate(c));
        }
        Ok(())
    }

    /// The metric matrix at a point; fails if it is numerically singular.
    pub fn metric_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<Mat<T>> {
        let m = self.eval_raw(c)?;
        self.check_degenerate(&m, c)?;
        Ok(m)
    }

    pub fn inverse_metric_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<Mat<T>> {
        let m = self.metric_at(c)?;
        m.inverse().ok_or_else(|| self.degenerate(c))
    }

    /// `(m, m⁻¹)` in one evaluation.
    pub fn with_inverse_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<(Mat<T>, Mat<T>)> {
        let m = self.metric_at(c)?;
        let inv = m.inverse().ok_or_else(|| self.degenerate(c))?;
        Ok((m, inv))
    }

    /// `sqrt(|det m|)`.
    pub fn volume_factor<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<T> {
        let m = self.metric_at(c)?;
        Ok(m.det().abs().sqrt())
    }

    /// Coordinates of the metric's own manifold inside `c`.
    fn own<'c, T>(&self, c: &Coords<'c, T>) -> &'c [T] {
        match self.domain {
            Domain::Parameters => c.t,
            Domain::State => c.x,
        }
    }

    /// Exact first partials `∂_k m_ab`, one matrix per own coordinate `k`.
    pub fn derivatives_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<Vec<Mat<T>>> {
        let lift = |s: &[T]| s.iter().map(|&v| Dual::constant(v)).collect::<Vec<_>>();
        let (t, x) = (lift(c.t), lift(c.x));
        (0..self.own(c).len().min(self.dim))
            .map(|k| {
                let (mut t, mut x) = (t.clone(), x.clone());
                match self.domain {
                    Domain::Parameters => t[k].du = T::one(),
                    Domain::State => x[k].du = T::one(),
                }
                let dc = Coords {
                    t: &t,
                    x: &x,
                    v: &[],
                    p: c.p,
                };
                Ok(self.eval_raw(&dc)?.map(|d| d.du))
            })
            .collect()
    }

    /// Christoffel symbols `Γ^a_bc` as a `[a][b][c]` array.
    pub fn christoffel_at(&self, c: &Coords<'_, f64>) -> Result<Tensor> {
        let n = self.dim;
        if self.is_constant() {
            return Ok(Tensor::zeros(&[n, n, n]));
        }
        let inv = self.inverse_metric_at(c)?;
        let dm = self.derivatives_at(c)?;
        // Γ_{d,bc} = ½(∂_b m_dc + ∂_c m_bd − ∂_d m_bc)
        let lowered = Tensor::from_fn(&[n, n, n], |i| {
            let (d, b, cc) = (i[0], i[1], i[2]);
            0.5 * (dm[b][(d, cc)] + dm[cc][(b, d)] - dm[d][(b, cc)])
        });
        Ok(Tensor::from_fn(&[n, n, n], |i| {
            (0..n).fold(0.0, |acc, d| acc + inv[(i[0], d)] * lowered[[d, i[1], i[2]]])
        }))
    }

    /// Eigenvalue sign counts must match the declared signature.
    pub fn verify_signature(&self, c: &Coords<'_, f64>) -> Result<()> {
        let m = self.metric_at(c)?;
        let (pos, neg, zero) = m.inertia(1e-12);
        let declared_pos = self.signature.iter().filter(|s| **s > 0).count();
        let declared_neg = self.dim - declared_pos;
        if (pos, neg, zero) != (declared_pos, declared_neg, 0) {
            return Err(Error::Signature {
                metric: self.label(),
                point: fmt_point(c.t, c.x),
                declared_pos,
                declared_neg,
                found_pos: pos,
                found_neg: neg,
                found_zero: zero,
            });
        }
        Ok(())
    }

    fn check_slot(&self, v: &Tensor, slot: usize) -> Result<()> {
        match v.shape().get(slot) {
            Some(&d) if d == self.dim => Ok(()),
            Some(&d) => Err(Error::Shape(format!(
                "slot {slot} has dimension {d}, metric {} has dimension {}",
                self.label(),
                self.dim
            ))),
            None => Err(Error::Shape(format!(
                "array of rank {} has no slot {slot}",
                v.shape().len()
            ))),
        }
    }

    /// Contract the inverse metric into `slot`.
    pub fn raise_index(&self, c: &Coords<'_, f64>, v: &Tensor, slot: usize) -> Result<Tensor> {
        self.check_slot(v, slot)?;
        Ok(v.contract_slot(&self.inverse_metric_at(c)?, slot))
    }

    /// Contract the metric into `slot`.
    pub fn lower_index(&self, c: &Coords<'_, f64>, v: &Tensor, slot: usize) -> Result<Tensor> {
        self.check_slot(v, slot)?;
        Ok(v.contract_slot(&self.metric_at(c)?, slot))
    }
}

/// The pair `(h, g)` on `T × M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub h: MetricSpec,
    pub g: MetricSpec,
}

impl Metrics {
    pub fn new(h: MetricSpec, g: MetricSpec) -> Result<Self> {
        if h.domain() != Domain::Parameters || g.domain() != Domain::State {
            return Err(Error::Shape(
                "h must live on the parameters and g on the states".into(),
            ));
        }
        Ok(Metrics { h, g })
    }

    pub fn flat(p: usize, n: usize) -> Self {
        Metrics {
            h: MetricSpec::euclidean(Domain::Parameters, p),
            g: MetricSpec::euclidean(Domain::State, n),
        }
    }

    pub fn p(&self) -> usize {
        self.h.dim()
    }

    pub fn n(&self) -> usize {
        self.g.dim()
    }

    pub fn is_constant(&self) -> bool {
        self.h.is_constant() && self.g.is_constant()
    }
}

/// Metric data of `(h, g)` evaluated once at a point of `T × M`.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub h: Mat<f64>,
    pub h_inv: Mat<f64>,
    pub g: Mat<f64>,
    pub g_inv: Mat<f64>,
    /// `H^γ_αβ` as `[γ][α][β]`.
    pub big_h: Tensor,
    /// `G^i_jk` as `[i][j][k]`.
    pub big_g: Tensor,
    /// `sqrt(|det h|)`.
    pub vol: f64,
}

impl Metrics {
    pub fn at(&self, c: &Coords<'_, f64>) -> Result<PointGeometry> {
        let (h, h_inv) = self.h.with_inverse_at(c)?;
        let (g, g_inv) = self.g.with_inverse_at(c)?;
        let vol = h.det().abs().sqrt();
        Ok(PointGeometry {
            big_h: self.h.christoffel_at(c)?,
            big_g: self.g.christoffel_at(c)?,
            h,
            h_inv,
            g,
            g_inv,
            vol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, E};

    fn at<'a>(t: &'a [f64], x: &'a [f64]) -> Coords<'a, f64> {
        Coords::new(t, x, &[])
    }

    fn sphere() -> MetricSpec {
        MetricSpec::diagonal(Domain::State, &["1", "sin(x1)^2"], &[1, 1]).unwrap()
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let g = MetricSpec::euclidean(Domain::State, 2);
        let m = g.metric_at(&at(&[0.0], &[0.3, -2.0])).unwrap();
        assert_eq!(m, Mat::identity(2));
        assert_eq!(g.inverse_metric_at(&at(&[0.0], &[1.0, 1.0])).unwrap(), Mat::identity(2));
    }

    #[test]
    fn sphere_metric_and_inverse() {
        let g = sphere();
        let m = g.metric_at(&at(&[0.0], &[FRAC_PI_2, 0.0])).unwrap();
        assert!(m.max_abs_diff(&Mat::identity(2)) < 1e-15);
        let inv = g.inverse_metric_at(&at(&[0.0], &[FRAC_PI_4, 0.0])).unwrap();
        assert!((inv[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((inv[(1, 1)] - 2.0).abs() < 1e-14);
        assert_eq!(inv[(0, 1)], 0.0);
    }

    #[test]
    fn exponential_parameter_metric() {
        let h = MetricSpec::diagonal(Domain::Parameters, &["exp(2*t1)"], &[1]).unwrap();
        let m = h.metric_at(&at(&[0.5], &[])).unwrap();
        assert!((m[(0, 0)] - E).abs() < 1e-15);
    }

    #[test]
    fn constant_grid_inverse() {
        let g =
            MetricSpec::parse(Domain::State, &[&["2", "1"], &["1", "1"]], &[1, 1]).unwrap();
        let inv = g.inverse_metric_at(&at(&[], &[0.0, 0.0])).unwrap();
        let want = Mat::from_fn(2, 2, |r, c| [[1.0, -1.0], [-1.0, 2.0]][r][c]);
        assert!(inv.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let g = sphere();
        let err = g.metric_at(&at(&[], &[0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Degenerate { metric: "g", .. }));
        let zero = MetricSpec::parse(Domain::State, &[&["0"]], &[1]).unwrap();
        assert!(zero.metric_at(&at(&[], &[0.0])).is_err());
    }

    #[test]
    fn degeneracy_is_scale_aware() {
        // tiny but perfectly conditioned
        let g = MetricSpec::diagonal(Domain::State, &["1e-9", "1e-9"], &[1, 1]).unwrap();
        assert!(g.metric_at(&at(&[], &[0.0, 0.0])).is_ok());
    }

    #[test]
    fn rejects_asymmetric_grid() {
        let err = MetricSpec::parse(Domain::State, &[&["1", "x1"], &["0", "1"]], &[1, 1])
            .unwrap_err();
        assert!(matches!(err, Error::Asymmetric { i: 1, j: 2, .. }));
    }

    #[test]
    fn rejects_foreign_variables() {
        let err = MetricSpec::parse(Domain::Parameters, &[&["x1"]], &[1]).unwrap_err();
        assert!(matches!(err, Error::ForeignVariable { .. }));
        let err = MetricSpec::parse(Domain::State, &[&["t1 + 1"]], &[1]).unwrap_err();
        assert!(matches!(err, Error::ForeignVariable { .. }));
        let err = MetricSpec::parse(Domain::State, &[&["x2^2 + 1"]], &[1]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn flat_christoffels_vanish() {
        let g = MetricSpec::euclidean(Domain::State, 3);
        let gamma = g.christoffel_at(&at(&[], &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
    }

    #[test]
    fn sphere_christoffels() {
        let g = sphere();
        let gamma = g.christoffel_at(&at(&[], &[FRAC_PI_4, 0.3])).unwrap();
        // closed forms: Γ¹₂₂ = −sinθ cosθ, Γ²₁₂ = Γ²₂₁ = cotθ
        assert!((gamma[[0, 1, 1]] + 0.5).abs() < 1e-14);
        assert!((gamma[[1, 0, 1]] - 1.0).abs() < 1e-14);
        assert!((gamma[[1, 1, 0]] - 1.0).abs() < 1e-14);
        for (a, b, c) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
            assert_eq!(gamma[[a, b, c]], 0.0);
        }
    }

    #[test]
    fn sphere_christoffels_match_finite_differences() {
        // independent oracle: central-difference derivatives of the metric
        let g = sphere();
        let x = [FRAC_PI_4, 0.3];
        let h = 1e-5;
        let metric = |x: &[f64]| g.metric_at(&at(&[], x)).unwrap();
        let inv = metric(&x).inverse().unwrap();
        let dm: Vec<Mat<f64>> = (0..2)
            .map(|k| {
                let (mut xp, mut xm) = (x, x);
                xp[k] += h;
                xm[k] -= h;
                let (mp, mm) = (metric(&xp), metric(&xm));
                Mat::from_fn(2, 2, |r, c| (mp[(r, c)] - mm[(r, c)]) / (2.0 * h))
            })
            .collect();
        let gamma = g.christoffel_at(&at(&[], &x)).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let fd: f64 = (0..2)
                        .map(|d| {
                            0.5 * inv[(a, d)]
                                * (dm[b][(d, c)] + dm[c][(b, d)] - dm[d][(b, c)])
                        })
                        .sum();
                    assert!((gamma[[a, b, c]] - fd).abs() < 1e-9, "{a}{b}{c}");
                }
            }
        }
        assert!((gamma[[0, 1, 1]] + x[0].sin() * x[0].cos()).abs() < 1e-14);
        assert!((gamma[[1, 0, 1]] - 1.0 / x[0].tan()).abs() < 1e-14);
    }

    #[test]
    fn parameter_christoffel_of_exponential_metric() {
        let h = MetricSpec::diagonal(Domain::Parameters, &["exp(2*t1)"], &[1]).unwrap();
        for t in [-1.0, 0.0, 0.7, 2.0] {
            let big_h = h.christoffel_at(&at(&[t], &[])).unwrap();
            // ½ h^{11} dh₁₁/dt evaluated directly
            let direct = 0.5 * (-2.0 * t).exp() * 2.0 * (2.0 * t).exp();
            assert!((big_h[[0, 0, 0]] - direct).abs() < 1e-14);
            assert!((big_h[[0, 0, 0]] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn raise_and_lower() {
        let c = at(&[], &[0.0, 0.0]);
        let e = MetricSpec::euclidean(Domain::State, 2);
        let v = Tensor::from_vec(&[2], vec![3.0, -1.0]);
        assert_eq!(e.raise_index(&c, &v, 0).unwrap(), v);
        let g = MetricSpec::diagonal(Domain::State, &["1", "4"], &[1, 1]).unwrap();
        let ones = Tensor::from_vec(&[2], vec![1.0, 1.0]);
        assert_eq!(g.lower_index(&c, &ones, 0).unwrap().data(), &[1.0, 4.0]);
        assert!(g.lower_index(&c, &Tensor::zeros(&[3]), 0).is_err());
        assert!(g.lower_index(&c, &Tensor::zeros(&[2]), 1).is_err());
    }

    #[test]
    fn signature_is_verified() {
        let c = at(&[0.0], &[]);
        let h = MetricSpec::parse(Domain::Parameters, &[&["-1"]], &[-1]).unwrap();
        assert!(h.verify_signature(&c).is_ok());
        let wrong = MetricSpec::parse(Domain::Parameters, &[&["-1"]], &[1]).unwrap();
        assert!(matches!(
            wrong.verify_signature(&c),
            Err(Error::Signature { .. })
        ));
    }
}
