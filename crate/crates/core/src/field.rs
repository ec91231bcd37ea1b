//! The distinguished tensor field `X^i_α(t, x)` and the objects derived from
//! it: potential energy, covariant derivatives, helicity, the 2-form `ω`,
//! causal type, rescaling, critical points and the world-force law.

use serde::{Deserialize, Serialize};

use crate::error::{fmt_point, Error, Result};
use crate::expr::{Coords, Expr, Func, Var};
use crate::geometry::{Metrics, PointGeometry};
use crate::jet::{BasePoint, JetPoint};
use crate::linalg::{Mat, Tensor};
use crate::scalar::{Dual, Scalar};

/// `|f|` at or below this counts as zero when classifying.
pub const F_ZERO_TOL: f64 = 1e-12;
/// Max-norm of `X` at or below this marks a critical point.
pub const CRITICAL_TOL: f64 = 1e-10;
/// Allowed `||f| − 1|` after rescaling.
pub const UNIT_TOL: f64 = 1e-8;

fn check_base_vars(e: &Expr, p: usize, n: usize, what: &dyn Fn() -> String) -> Result<()> {
    for v in e.variables() {
        let ok = match v {
            Var::T(a) => a < p,
            Var::X(i) => i < n,
            Var::Jet { .. } => false,
        };
        if !ok {
            return Err(Error::Shape(format!(
                "{} uses {v}; only t1..t{p} and x1..x{n} are allowed",
                what()
            )));
        }
    }
    Ok(())
}

fn lift<T: Scalar>(s: &[T]) -> Vec<Dual<T>> {
    s.iter().map(|&v| Dual::constant(v)).collect()
}

/// `X^i_α(t, x)` together with the metrics `h` and `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistTensorField {
    metrics: Metrics,
    /// `X^i_α` at `[i * p + α]`.
    components: Vec<Expr>,
}

impl DistTensorField {
    /// `grid` has one row per state index `i` and one column per parameter `α`.
    pub fn new(metrics: Metrics, grid: Vec<Vec<Expr>>) -> Result<Self> {
        let (p, n) = (metrics.p(), metrics.n());
        if grid.len() != n || grid.iter().any(|r| r.len() != p) {
            return Err(Error::Shape(format!(
                "field X must be an {n}×{p} grid (one row per state, one column per parameter)"
            )));
        }
        for (i, row) in grid.iter().enumerate() {
            for (a, e) in row.iter().enumerate() {
                check_base_vars(e, p, n, &|| format!("X^{}_{}", i + 1, a + 1))?;
            }
        }
        Ok(DistTensorField {
            metrics,
            components: grid.into_iter().flatten().collect(),
        })
    }

    pub fn parse(metrics: Metrics, grid: &[&[&str]]) -> Result<Self> {
        let grid = grid
            .iter()
            .map(|row| row.iter().map(|s| s.parse()).collect::<Result<Vec<Expr>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(metrics, grid)
    }

    /// ODE case `p = 1`: one expression per state.
    pub fn vector(metrics: Metrics, comps: &[&str]) -> Result<Self> {
        let rows: Vec<[&str; 1]> = comps.iter().map(|c| [*c]).collect();
        let grid: Vec<&[&str]> = rows.iter().map(|r| &r[..]).collect();
        Self::parse(metrics, &grid)
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn p(&self) -> usize {
        self.metrics.p()
    }

    pub fn n(&self) -> usize {
        self.metrics.n()
    }

    pub fn component(&self, i: usize, alpha: usize) -> &Expr {
        &self.components[i * self.p() + alpha]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// True when no component depends on a parameter.
    pub fn is_autonomous(&self) -> bool {
        self.components
            .iter()
            .all(|e| e.variables().iter().all(|v| !matches!(v, Var::T(_))))
    }

    /// `X^i_α` at a point, flattened as `[i * p + α]`.
    pub fn value_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<Vec<T>> {
        self.components
            .iter()
            .map(|e| e.eval_at(c).map_err(Error::from))
            .collect()
    }

    /// `f = ½ h^{αβ} g_ij X^i_α X^j_β` over any scalar type.
    pub fn energy_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<T> {
        let (p, n) = (self.p(), self.n());
        let h_inv = self.metrics.h.inverse_metric_at(c)?;
        let g = self.metrics.g.metric_at(c)?;
        let xv = self.value_at(c)?;
        let mut f = T::zero();
        for a in 0..p {
            for b in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        f = f + h_inv[(a, b)] * g[(i, j)] * xv[i * p + a] * xv[j * p + b];
                    }
                }
            }
        }
        Ok(f.scale(0.5))
    }

    pub fn potential_energy(&self, pt: &BasePoint) -> Result<f64> {
        self.energy_at(&pt.coords())
    }

    /// Everything derived from `X` at one point.
    pub fn local(&self, pt: &BasePoint) -> Result<LocalField> {
        let (p, n) = (self.p(), self.n());
        let c = pt.coords();
        let geom = self.metrics.at(&c)?;
        let value = Tensor::from_vec(&[n, p], self.value_at(&c)?);

        let mut dt = Tensor::zeros(&[p, n, p]);
        let mut dx = Tensor::zeros(&[n, n, p]);
        let (tl, xl) = (lift(&pt.t), lift(&pt.x));
        for k in 0..p + n {
            let (mut t, mut x) = (tl.clone(), xl.clone());
            if k < p {
                t[k].du = 1.0;
            } else {
                x[k - p].du = 1.0;
            }
            let dc = Coords::new(&t, &x, &[]);
            for (idx, e) in self.components.iter().enumerate() {
                if e.is_constant() {
                    continue;
                }
                let d = e.eval_at(&dc)?.du;
                let (i, a) = (idx / p, idx % p);
                if k < p {
                    dt[[k, i, a]] = d;
                } else {
                    dx[[k - p, i, a]] = d;
                }
            }
        }
        Ok(LocalField::assemble(geom, value, dx, dt))
    }

    /// Right side `g^{ih} ∂_h f` of the grad-f identity, from exact derivatives of `f`.
    pub fn grad_f_exact(&self, pt: &BasePoint) -> Result<Vec<f64>> {
        let n = self.n();
        let c = pt.coords();
        let g_inv = self.metrics.g.inverse_metric_at(&c)?;
        let (t, xl) = (lift(&pt.t), lift(&pt.x));
        let mut df = vec![0.0; n];
        for (h, slot) in df.iter_mut().enumerate() {
            let mut x = xl.clone();
            x[h].du = 1.0;
            *slot = self.energy_at(&Coords::new(&t, &x, &[]))?.du;
        }
        Ok((0..n)
            .map(|i| (0..n).map(|h| g_inv[(i, h)] * df[h]).sum())
            .collect())
    }

    /// `max_i |g^{ih} h^{αβ} g_kj (∇_h X^k_α) X^j_β − g^{ih} ∂_h f|`.
    pub fn grad_f_identity_residual(&self, pt: &BasePoint) -> Result<f64> {
        let lf = self.local(pt)?;
        let exact = self.grad_f_exact(pt)?;
        Ok(max_diff(&lf.grad_f(), &exact))
    }

    /// The same identity with the plain partial `∂_h X^k_α` in place of the
    /// covariant derivative. It holds for constant `g` and fails in general.
    pub fn grad_f_partial_residual(&self, pt: &BasePoint) -> Result<f64> {
        let lf = self.local(pt)?;
        let (p, n) = (lf.p, lf.n);
        let g = &lf.geom.g;
        let g_inv = &lf.geom.g_inv;
        let h_inv = &lf.geom.h_inv;
        let mut partial = vec![0.0; n];
        for (i, out) in partial.iter_mut().enumerate() {
            for h in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        for a in 0..p {
                            for b in 0..p {
                                *out += g_inv[(i, h)]
                                    * h_inv[(a, b)]
                                    * g[(k, j)]
                                    * lf.dx[[h, k, a]]
                                    * lf.value[[j, b]];
                            }
                        }
                    }
                }
            }
        }
        Ok(max_diff(&partial, &self.grad_f_exact(pt)?))
    }

    /// Strongest causal class consistent with `f` at every sample.
    pub fn classify(&self, samples: &[BasePoint]) -> Result<CausalClass> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        let fs = samples
            .iter()
            .map(|s| self.potential_energy(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(CausalClass::from_values(&fs))
    }

    /// Symbolic `f` as an expression in `t` and `x`.
    pub fn energy_expr(&self) -> Result<Expr> {
        let (p, n) = (self.p(), self.n());
        let h_inv = symbolic_inverse(&self.metrics, p)?;
        let mut sum = Expr::num(0.0);
        for a in 0..p {
            for b in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        let term = h_inv[a][b]
                            .clone()
                            .mul(self.metrics.g.component(i, j).clone())
                            .mul(self.component(i, a).clone())
                            .mul(self.component(j, b).clone());
                        sum = sum.add(term);
                    }
                }
            }
        }
        Ok(Expr::num(0.5).mul(sum))
    }

    /// Divide `X` by `sqrt(|f|)` so that the new potential energy is `±1`.
    ///
    /// The samples must avoid the critical set and see a single strict sign
    /// of `f`; the result is checked at every sample.
    pub fn rescale_to_unit(&self, samples: &[BasePoint]) -> Result<DistTensorField> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        let mut fs = Vec::with_capacity(samples.len());
        for s in samples {
            let xv = self.value_at(&s.coords())?;
            if xv.iter().all(|v| v.abs() <= CRITICAL_TOL) {
                return Err(Error::CriticalPoint {
                    point: fmt_point(&s.t, &s.x),
                });
            }
            fs.push(self.potential_energy(s)?);
        }
        let class = CausalClass::from_values(&fs);
        match class.kind {
            Causality::Lightlike => return Err(Error::NullField),
            Causality::Timelike | Causality::Spacelike => {}
            _ => {
                return Err(Error::MixedSign {
                    min: class.f_min,
                    max: class.f_max,
                })
            }
        }
        let scale = Expr::call(Func::Sqrt, Expr::call(Func::Abs, self.energy_expr()?));
        let components = self
            .components
            .iter()
            .map(|e| {
                if e.is_zero_literal() {
                    e.clone()
                } else {
                    e.clone().div(scale.clone())
                }
            })
            .collect();
        let out = DistTensorField {
            metrics: self.metrics.clone(),
            components,
        };
        for s in samples {
            let f = out.potential_energy(s)?;
            if (f.abs() - 1.0).abs() > UNIT_TOL {
                return Err(Error::NotUnitPotential {
                    value: f,
                    point: fmt_point(&s.t, &s.x),
                });
            }
        }
        Ok(out)
    }

    /// Grid points `x` where `max |X^i_α(t, x)| ≤ CRITICAL_TOL` for every `t` sample.
    pub fn critical_set_scan(
        &self,
        axes: &[AxisRange],
        t_samples: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        if axes.len() != self.n() {
            return Err(Error::Shape(format!(
                "critical-set grid has {} axes, state dimension is {}",
                axes.len(),
                self.n()
            )));
        }
        if t_samples.is_empty() {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        if let Some(t) = t_samples.iter().find(|t| t.len() != self.p()) {
            return Err(Error::Shape(format!(
                "t sample has {} entries, parameter dimension is {}",
                t.len(),
                self.p()
            )));
        }
        let mut found = Vec::new();
        for x in grid_points(axes) {
            let mut critical = true;
            for t in t_samples {
                let xv = self.value_at(&Coords::new(t, &x, &[]))?;
                if xv.iter().any(|v| v.abs() > CRITICAL_TOL) {
                    critical = false;
                    break;
                }
            }
            if critical {
                found.push(x);
            }
        }
        Ok(found)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `h^{αβ}` as expressions: numeric for constant `h`, adjugate over determinant otherwise.
fn symbolic_inverse(metrics: &Metrics, p: usize) -> Result<Vec<Vec<Expr>>> {
    let h = &metrics.h;
    if h.is_constant() {
        let t0 = vec![0.0; p];
        let inv = h.inverse_metric_at(&Coords::new(&t0, &[], &[]))?;
        return Ok((0..p)
            .map(|a| (0..p).map(|b| Expr::num(inv[(a, b)])).collect())
            .collect());
    }
    let all: Vec<usize> = (0..p).collect();
    let det = cofactor_det(h, &all, &all);
    Ok((0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    // (h⁻¹)_ab = C_ba / det with C the cofactor matrix
                    let rows: Vec<usize> = all.iter().copied().filter(|&r| r != b).collect();
                    let cols: Vec<usize> = all.iter().copied().filter(|&c| c != a).collect();
                    let minor = if p == 1 {
                        Expr::num(1.0)
                    } else {
                        cofactor_det(h, &rows, &cols)
                    };
                    let signed = if (a + b) % 2 == 0 {
                        minor
                    } else {
                        Expr::neg(minor)
                    };
                    signed.div(det.clone())
                })
                .collect()
        })
        .collect())
}

/// Laplace expansion along the first listed row.
fn cofactor_det(h: &crate::geometry::MetricSpec, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.len() == 1 {
        return h.component(rows[0], cols[0]).clone();
    }
    let mut acc = Expr::num(0.0);
    for (k, &c) in cols.iter().enumerate() {
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = h
            .component(rows[0], c)
            .clone()
            .mul(cofactor_det(h, &rows[1..], &sub_cols));
        acc = if k % 2 == 0 { acc.add(term) } else { acc.sub(term) };
    }
    acc
}

/// Evenly spaced samples `lo, …, hi` along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.lo],
            c => (0..c)
                .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

/// Cartesian product of axis samples, last axis fastest.
pub fn grid_points(axes: &[AxisRange]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for axis in axes {
        let pts = axis.points();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causality {
    /// `f < 0`
    Timelike,
    /// `f ≤ 0`
    Causal,
    /// `f = 0`
    Lightlike,
    /// `f > 0`
    Spacelike,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalClass {
    pub kind: Causality,
    pub f_min: f64,
    pub f_max: f64,
}

impl CausalClass {
    pub fn from_values(fs: &[f64]) -> Self {
        let f_min = fs.iter().copied().fold(f64::INFINITY, f64::min);
        let f_max = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let zero = |f: f64| f.abs() <= F_ZERO_TOL;
        let kind = if fs.iter().all(|&f| zero(f)) {
            Causality::Lightlike
        } else if fs.iter().all(|&f| f < -F_ZERO_TOL) {
            Causality::Timelike
        } else if fs.iter().all(|&f| f > F_ZERO_TOL) {
            Causality::Spacelike
        } else if fs.iter().all(|&f| f <= F_ZERO_TOL) {
            Causality::Causal
        } else {
            Causality::Indefinite
        };
        CausalClass { kind, f_min, f_max }
    }
}

/// `X` and its derived objects at a single point of `T × M`.
///
/// Arrays keep the differentiation index first: `dx`, `nabla`, `helicity`,
/// `omega` are `[j][i][α]`, `dt` is `[β][i][α]`, `d` is `[i][α][β]`.
#[derive(Debug, Clone)]
pub struct LocalField {
    pub p: usize,
    pub n: usize,
    pub geom: PointGeometry,
    /// `X^i_α` as `[i][α]`.
    pub value: Tensor,
    /// `∂_j X^i_α`
    pub dx: Tensor,
    /// `∂_β X^i_α`
    pub dt: Tensor,
    /// `∇_j X^i_α = ∂_j X^i_α + G^i_jk X^k_α`
    pub nabla: Tensor,
    /// `D_β X^i_α = ∂_β X^i_α − H^γ_αβ X^i_γ`
    pub d: Tensor,
    /// `g^{ih} g_kj ∇_h X^k_α`, the metric adjoint of `∇X`.
    pub adjoint: Tensor,
    /// `F_j^i_α = ∇_j X^i_α − g^{ih} g_kj ∇_h X^k_α`
    pub helicity: Tensor,
    /// `ω_jiα = g_hi F_j^h_α`
    pub omega: Tensor,
    /// Potential energy.
    pub f: f64,
}

impl LocalField {
    fn assemble(geom: PointGeometry, value: Tensor, dx: Tensor, dt: Tensor) -> Self {
        let (n, p) = (value.shape()[0], value.shape()[1]);
        let gg = &geom.big_g;
        let hh = &geom.big_h;
        let nabla = Tensor::from_fn(&[n, n, p], |ix| {
            let (j, i, a) = (ix[0], ix[1], ix[2]);
            dx[[j, i, a]] + (0..n).map(|k| gg[[i, j, k]] * value[[k, a]]).sum::<f64>()
        });
        let d = Tensor::from_fn(&[n, p, p], |ix| {
            let (i, a, b) = (ix[0], ix[1], ix[2]);
            dt[[b, i, a]] - (0..p).map(|c| hh[[c, a, b]] * value[[i, c]]).sum::<f64>()
        });
        let adjoint = Tensor::from_fn(&[n, n, p], |ix| {
            let (j, i, a) = (ix[0], ix[1], ix[2]);
            let mut s = 0.0;
            for h in 0..n {
                for k in 0..n {
                    s += geom.g_inv[(i, h)] * geom.g[(k, j)] * nabla[[h, k, a]];
                }
            }
            s
        });
        let helicity =
            Tensor::from_fn(&[n, n, p], |ix| nabla[ix] - adjoint[ix]);
        let omega = Tensor::from_fn(&[n, n, p], |ix| {
            let (j, i, a) = (ix[0], ix[1], ix[2]);
            (0..n).map(|h| geom.g[(h, i)] * helicity[[j, h, a]]).sum()
        });
        let mut f = 0.0;
        for a in 0..p {
            for b in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        f += geom.h_inv[(a, b)] * geom.g[(i, j)] * value[[i, a]] * value[[j, b]];
                    }
                }
            }
        }
        LocalField {
            p,
            n,
            geom,
            value,
            dx,
            dt,
            nabla,
            d,
            adjoint,
            helicity,
            omega,
            f: 0.5 * f,
        }
    }

    /// `X` flattened like jet coordinates, `[i * p + α]`.
    pub fn value_flat(&self) -> &[f64] {
        self.value.data()
    }

    /// `out[i][α][β] = Σ_j A[j][i][α] y^j_β` for an `[j][i][α]` array `A`
    /// and `y` laid out like jet coordinates.
    pub fn apply(&self, a: &Tensor, y: &[f64]) -> Tensor {
        let (n, p) = (self.n, self.p);
        Tensor::from_fn(&[n, p, p], |ix| {
            let (i, al, b) = (ix[0], ix[1], ix[2]);
            (0..n).map(|j| a[[j, i, al]] * y[j * p + b]).sum()
        })
    }

    /// `h^{αβ} a[i][α][β]`.
    pub fn trace_h(&self, a: &Tensor) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut s = 0.0;
                for al in 0..self.p {
                    for b in 0..self.p {
                        s += self.geom.h_inv[(al, b)] * a[[i, al, b]];
                    }
                }
                s
            })
            .collect()
    }

    /// Covariant form `g^{ih} h^{αβ} g_kj (∇_h X^k_α) X^j_β` of `grad f`.
    pub fn grad_f(&self) -> Vec<f64> {
        self.trace_h(&self.apply(&self.adjoint, self.value_flat()))
    }

    /// `g_ij a^i b^j`.
    pub fn g_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.geom.g[(i, j)] * a[i] * b[j];
            }
        }
        s
    }

    /// Max `|ω_jiα + ω_ijα|`.
    pub fn omega_skew_residual(&self) -> f64 {
        skew_residual(&self.omega, self.n, self.p)
    }
}

fn skew_residual(omega: &Tensor, n: usize, p: usize) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            for a in 0..p {
                m = m.max((omega[[j, i, a]] + omega[[i, j, a]]).abs());
            }
        }
    }
    m
}

/// Data of the world-force law
/// `h^{αβ} x^i_{αβ} = g^{ij} ∂_j c + h^{αβ} F_j^i_α x^j_β + h^{αβ} U^i_αβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldForceSpec {
    metrics: Metrics,
    /// `F_j^i_α` at `[(j * n + i) * p + α]`.
    f: Vec<Expr>,
    /// `U^i_αβ` at `[(i * p + α) * p + β]`.
    u: Vec<Expr>,
    c: Expr,
}

impl WorldForceSpec {
    /// `f` indexed `[j][i][α]`, `u` indexed `[i][α][β]`.
    pub fn new(
        metrics: Metrics,
        f: Vec<Vec<Vec<Expr>>>,
        u: Vec<Vec<Vec<Expr>>>,
        c: Expr,
    ) -> Result<Self> {
        let (p, n) = (metrics.p(), metrics.n());
        let shape_ok = |g: &Vec<Vec<Vec<Expr>>>, d0: usize, d1: usize, d2: usize| {
            g.len() == d0 && g.iter().all(|r| r.len() == d1 && r.iter().all(|c| c.len() == d2))
        };
        if !shape_ok(&f, n, n, p) {
            return Err(Error::Shape(format!("world force F must be {n}×{n}×{p}")));
        }
        if !shape_ok(&u, n, p, p) {
            return Err(Error::Shape(format!("world force U must be {n}×{p}×{p}")));
        }
        for (a, plane) in f.iter().enumerate() {
            for (b, row) in plane.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    check_base_vars(e, p, n, &|| format!("F[{}][{}][{}]", a + 1, b + 1, k + 1))?;
                }
            }
        }
        for (a, plane) in u.iter().enumerate() {
            for (b, row) in plane.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    check_base_vars(e, p, n, &|| format!("U[{}][{}][{}]", a + 1, b + 1, k + 1))?;
                }
            }
        }
        check_base_vars(&c, p, n, &|| "c".to_string())?;
        Ok(WorldForceSpec {
            metrics,
            f: f.into_iter().flatten().flatten().collect(),
            u: u.into_iter().flatten().flatten().collect(),
            c,
        })
    }

    /// All-zero force data.
    pub fn zero(metrics: Metrics) -> Self {
        let (p, n) = (metrics.p(), metrics.n());
        WorldForceSpec {
            metrics,
            f: vec![Expr::num(0.0); n * n * p],
            u: vec![Expr::num(0.0); n * p * p],
            c: Expr::num(0.0),
        }
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    fn eval_all(list: &[Expr], c: &Coords<'_, f64>) -> Result<Vec<f64>> {
        list.iter().map(|e| e.eval_at(c).map_err(Error::from)).collect()
    }

    /// `F_j^i_α` as `[j][i][α]`.
    pub fn helicity_at(&self, pt: &BasePoint) -> Result<Tensor> {
        let (p, n) = (self.metrics.p(), self.metrics.n());
        Ok(Tensor::from_vec(&[n, n, p], Self::eval_all(&self.f, &pt.coords())?))
    }

    /// `ω_jiα = g_hi F_j^h_α` as `[j][i][α]`.
    pub fn omega_at(&self, pt: &BasePoint) -> Result<Tensor> {
        let (p, n) = (self.metrics.p(), self.metrics.n());
        let g = self.metrics.g.metric_at(&pt.coords())?;
        let f = self.helicity_at(pt)?;
        Ok(Tensor::from_fn(&[n, n, p], |ix| {
            (0..n).map(|h| g[(h, ix[1])] * f[[ix[0], h, ix[2]]]).sum()
        }))
    }

    pub fn omega_skew_residual(&self, pt: &BasePoint) -> Result<f64> {
        Ok(skew_residual(
            &self.omega_at(pt)?,
            self.metrics.n(),
            self.metrics.p(),
        ))
    }

    /// Right-hand side of the world-force law at a jet point.
    pub fn rhs(&self, jp: &JetPoint) -> Result<Vec<f64>> {
        let (p, n) = (self.metrics.p(), self.metrics.n());
        if jp.p() != p || jp.n() != n {
            return Err(Error::Shape(format!(
                "jet point has (p, n) = ({}, {}), force law expects ({p}, {n})",
                jp.p(),
                jp.n()
            )));
        }
        let c = jp.coords();
        let g_inv: Mat<f64> = self.metrics.g.inverse_metric_at(&c)?;
        let h_inv = self.metrics.h.inverse_metric_at(&c)?;
        let f = Self::eval_all(&self.f, &c)?;
        let u = Self::eval_all(&self.u, &c)?;
        let (t, xl) = (lift(&jp.t), lift(&jp.x));
        let mut dc = vec![0.0; n];
        for (j, slot) in dc.iter_mut().enumerate() {
            let mut x = xl.clone();
            x[j].du = 1.0;
            *slot = self.c.eval_at(&Coords::new(&t, &x, &[]))?.du;
        }
        Ok((0..n)
            .map(|i| {
                let mut s: f64 = (0..n).map(|j| g_inv[(i, j)] * dc[j]).sum();
                for a in 0..p {
                    for b in 0..p {
                        let hab = h_inv[(a, b)];
                        for j in 0..n {
                            s += hab * f[(j * n + i) * p + a] * jp.vel(j, b);
                        }
                        s += hab * u[(i * p + a) * p + b];
                    }
                }
                s
            })
            .collect())
    }
}
