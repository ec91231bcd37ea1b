//! Adapted frames, the Sasaki-like metric, Liouville and (poly)symplectic
//! forms on `J¹(T, M)`, and the Hamilton systems they carry.
//!
//! Forms are stored in the coordinate cobasis of `z = (t, x, v)`. A 2-form
//! with antisymmetric coefficient matrix `A` means `Σ_{M<N} A_MN dz^M∧dz^N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Coords;
use crate::field::DistTensorField;
use crate::geometry::{Metrics, PointGeometry};
use crate::integrate::{Sheet, Trajectory};
use crate::jet::{JetLayout, JetPoint};
use crate::linalg::Mat;
use crate::scalar::{Dual, Scalar};

/// The ω coefficient that makes the shifted Hamilton system agree with the
/// world-force prolongation along its solutions.
pub const OMEGA_COEFFICIENT: f64 = 1.0;

/// The ω coefficient as it appears in the printed Hamilton system.
pub const PRINTED_OMEGA_COEFFICIENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormVariant {
    Plain,
    /// The `X`-dependent version.
    Shifted,
}

fn check_shape(metrics: &Metrics, jp: &JetPoint) -> Result<()> {
    if jp.p() != metrics.p() || jp.n() != metrics.n() {
        return Err(Error::Shape(format!(
            "jet point has (p, n) = ({}, {}), metrics expect ({}, {})",
            jp.p(),
            jp.n(),
            metrics.p(),
            metrics.n()
        )));
    }
    Ok(())
}

/// Adapted frame and coframe, as rows of coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBasis {
    pub p: usize,
    pub n: usize,
    /// Rows: `δ/δt^α`, `δ/δx^i`, `∂/∂x^i_α`.
    pub frames: Mat<f64>,
    /// Rows: `dt^β`, `dx^j`, `δx^j_β`.
    pub coframes: Mat<f64>,
}

impl FrameBasis {
    pub fn layout(&self) -> JetLayout {
        JetLayout { p: self.p, n: self.n }
    }

    /// `coframe_A(frame_B)`.
    pub fn pairing(&self) -> Mat<f64> {
        self.coframes.matmul(&self.frames.transpose())
    }

    /// Max deviation of the pairing matrix from the identity.
    pub fn duality_residual(&self) -> f64 {
        let n = self.frames.rows();
        self.pairing().max_abs_diff(&Mat::identity(n))
    }
}

fn frames_from(geom: &PointGeometry, jp: &JetPoint) -> FrameBasis {
    let (p, n) = (jp.p(), jp.n());
    let lay = JetLayout { p, n };
    let dim = lay.dim();
    let mut e = Mat::zeros(dim, dim);
    let mut c = Mat::zeros(dim, dim);
    for a in 0..p {
        let r = lay.t(a);
        e[(r, r)] = 1.0;
        c[(r, r)] = 1.0;
        for g in 0..p {
            for b in 0..p {
                for i in 0..n {
                    e[(r, lay.v(i, b))] += geom.big_h[[g, a, b]] * jp.vel(i, g);
                }
            }
        }
    }
    for i in 0..n {
        let r = lay.x(i);
        e[(r, r)] = 1.0;
        c[(r, r)] = 1.0;
        for h in 0..n {
            for k in 0..n {
                for a in 0..p {
                    e[(r, lay.v(h, a))] -= geom.big_g[[h, i, k]] * jp.vel(k, a);
                }
            }
        }
    }
    for h in 0..n {
        for a in 0..p {
            let r = lay.v(h, a);
            e[(r, r)] = 1.0;
            c[(r, r)] = 1.0;
            for g in 0..p {
                for b in 0..p {
                    c[(r, lay.t(b))] -= geom.big_h[[g, a, b]] * jp.vel(h, g);
                }
            }
            for k in 0..n {
                for l in 0..n {
                    c[(r, lay.x(k))] += geom.big_g[[h, k, l]] * jp.vel(l, a);
                }
            }
        }
    }
    FrameBasis { p, n, frames: e, coframes: c }
}

pub fn frames_at(metrics: &Metrics, jp: &JetPoint) -> Result<FrameBasis> {
    check_shape(metrics, jp)?;
    Ok(frames_from(&metrics.at(&jp.coords())?, jp))
}

/// Block-diagonal `h ⊕ g ⊕ h^{-1}⊗g` in the adapted cobasis.
fn sasaki_adapted(geom: &PointGeometry, p: usize, n: usize) -> Mat<f64> {
    let lay = JetLayout { p, n };
    let mut b = Mat::zeros(lay.dim(), lay.dim());
    for a in 0..p {
        for c in 0..p {
            b[(lay.t(a), lay.t(c))] = geom.h[(a, c)];
        }
    }
    for i in 0..n {
        for j in 0..n {
            b[(lay.x(i), lay.x(j))] = geom.g[(i, j)];
            for a in 0..p {
                for c in 0..p {
                    b[(lay.v(i, a), lay.v(j, c))] = geom.h_inv[(a, c)] * geom.g[(i, j)];
                }
            }
        }
    }
    b
}

/// `S₁` in the coordinate basis.
pub fn sasaki_metric_at(metrics: &Metrics, jp: &JetPoint) -> Result<Mat<f64>> {
    check_shape(metrics, jp)?;
    let geom = metrics.at(&jp.coords())?;
    let fb = frames_from(&geom, jp);
    let b = sasaki_adapted(&geom, jp.p(), jp.n());
    Ok(fb.coframes.transpose().matmul(&b).matmul(&fb.coframes))
}

/// Max deviation of `S₁` evaluated on the adapted frame from its block-diagonal form.
pub fn sasaki_block_residual(metrics: &Metrics, jp: &JetPoint) -> Result<f64> {
    let geom = metrics.at(&jp.coords())?;
    let fb = frames_from(&geom, jp);
    let s = sasaki_metric_at(metrics, jp)?;
    let adapted = fb.frames.matmul(&s).matmul(&fb.frames.transpose());
    Ok(adapted.max_abs_diff(&sasaki_adapted(&geom, jp.p(), jp.n())))
}

/// Per-α coefficient matrices of a relative form in the coordinate cobasis.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeForm {
    pub degree: usize,
    pub variant: FormVariant,
    /// Degree 1: `1 × dim` rows. Degree 2: antisymmetric `dim × dim`.
    pub components: Vec<Mat<f64>>,
}

impl RelativeForm {
    pub fn antisymmetry_residual(&self) -> f64 {
        if self.degree != 2 {
            return 0.0;
        }
        self.components
            .iter()
            .map(|m| m.max_abs_diff(&m.transpose().map(|v: f64| -v)))
            .fold(0.0, f64::max)
    }
}

/// `θ_α` coefficients at general coordinates.
fn theta_coeffs<T: Scalar>(
    field: &DistTensorField,
    c: &Coords<'_, T>,
    variant: FormVariant,
) -> Result<Vec<Vec<T>>> {
    let (p, n) = (field.p(), field.n());
    let m = field.metrics();
    let vol = m.h.metric_at(c)?.det().abs().sqrt();
    let g = m.g.metric_at(c)?;
    let xv = match variant {
        FormVariant::Plain => vec![T::zero(); n * p],
        FormVariant::Shifted => field.value_at(c)?,
    };
    let lay = JetLayout { p, n };
    Ok((0..p)
        .map(|a| {
            let mut row = vec![T::zero(); lay.dim()];
            for j in 0..n {
                let mut s = T::zero();
                for i in 0..n {
                    s = s + g[(i, j)] * (c.v[i * p + a] - xv[i * p + a]);
                }
                row[lay.x(j)] = s * vol;
            }
            row
        })
        .collect())
}

pub fn liouville_theta(field: &DistTensorField, jp: &JetPoint, variant: FormVariant) -> Result<RelativeForm> {
    check_shape(field.metrics(), jp)?;
    let rows = theta_coeffs(field, &jp.coords(), variant)?;
    Ok(RelativeForm {
        degree: 1,
        variant,
        components: rows
            .into_iter()
            .map(|r| Mat::from_fn(1, r.len(), |_, k| r[k]))
            .collect(),
    })
}

/// `dθ_α` with exact derivatives: `(dθ)_MN = ∂_M a_N − ∂_N a_M`.
pub fn d_theta(field: &DistTensorField, jp: &JetPoint, variant: FormVariant) -> Result<RelativeForm> {
    check_shape(field.metrics(), jp)?;
    let (p, n) = (jp.p(), jp.n());
    let z = jp.z();
    let dim = z.len();
    // jac[α][M][N] = ∂_M a_N
    let mut jac = vec![Mat::zeros(dim, dim); p];
    for mm in 0..dim {
        let zd: Vec<Dual<f64>> = z
            .iter()
            .enumerate()
            .map(|(k, &v)| Dual::new(v, if k == mm { 1.0 } else { 0.0 }))
            .collect();
        let (t, rest) = zd.split_at(p);
        let (x, v) = rest.split_at(n);
        let rows = theta_coeffs(field, &Coords::new(t, x, v), variant)?;
        for (a, row) in rows.iter().enumerate() {
            for (nn, val) in row.iter().enumerate() {
                jac[a][(mm, nn)] = val.du;
            }
        }
    }
    Ok(RelativeForm {
        degree: 2,
        variant,
        components: jac
            .iter()
            .map(|j| Mat::from_fn(dim, dim, |r, c| j[(r, c)] - j[(c, r)]))
            .collect(),
    })
}

/// `A += s (a ⊗ b − b ⊗ a)`, i.e. the matrix of `s a∧b`.
fn add_wedge(m: &mut Mat<f64>, s: f64, a: &[f64], b: &[f64]) {
    for r in 0..a.len() {
        for c in 0..b.len() {
            m[(r, c)] += s * (a[r] * b[c] - b[r] * a[c]);
        }
    }
}

fn unit(dim: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

pub fn symplectic_omega(field: &DistTensorField, jp: &JetPoint, variant: FormVariant) -> Result<RelativeForm> {
    check_shape(field.metrics(), jp)?;
    let (p, n) = (jp.p(), jp.n());
    let lay = JetLayout { p, n };
    let dim = lay.dim();
    let lf = field.local(&jp.base())?;
    let geom = &lf.geom;
    let fb = frames_from(geom, jp);
    let vol = geom.vol;
    let mut out = Vec::with_capacity(p);
    for a in 0..p {
        let mut m = Mat::zeros(dim, dim);
        for i in 0..n {
            let dxi = unit(dim, lay.x(i));
            for j in 0..n {
                let row: Vec<f64> = (0..dim).map(|k| fb.coframes[(lay.v(j, a), k)]).collect();
                add_wedge(&mut m, vol * geom.g[(i, j)], &dxi, &row);
            }
        }
        if variant == FormVariant::Shifted {
            for i in 0..n {
                for j in 0..n {
                    // skew part, so the stored matrix is antisymmetric to the bit
                    m[(lay.x(i), lay.x(j))] += vol * 0.5 * (lf.omega[[i, j, a]] - lf.omega[[j, i, a]]);
                }
            }
            for b in 0..p {
                for j in 0..n {
                    let s: f64 = (0..n).map(|i| geom.g[(i, j)] * lf.d[[i, a, b]]).sum();
                    add_wedge(&mut m, vol * s, &unit(dim, lay.t(b)), &unit(dim, lay.x(j)));
                }
            }
        }
        out.push(m);
    }
    Ok(RelativeForm {
        degree: 2,
        variant,
        components: out,
    })
}

/// `max |Ω_α + dθ_α|` over all α and coefficients.
pub fn check_omega_eq_minus_dtheta(field: &DistTensorField, jp: &JetPoint, variant: FormVariant) -> Result<f64> {
    let om = symplectic_omega(field, jp, variant)?;
    let dt = d_theta(field, jp, variant)?;
    Ok(om
        .components
        .iter()
        .zip(&dt.components)
        .map(|(a, b)| a.max_abs_diff(&b.map(|v: f64| -v)))
        .fold(0.0, f64::max))
}

/// Determinant of the `(x, x_α)` block of `Ω_α`.
pub fn nondegeneracy_det(field: &DistTensorField, jp: &JetPoint, variant: FormVariant, alpha: usize) -> Result<f64> {
    let om = symplectic_omega(field, jp, variant)?;
    let lay = JetLayout { p: jp.p(), n: jp.n() };
    let m = om
        .components
        .get(alpha)
        .ok_or_else(|| Error::Shape(format!("no parameter index {alpha}")))?;
    Ok(Mat::from_fn(jp.n(), jp.n(), |i, j| m[(lay.x(i), lay.v(j, alpha))]).det())
}

/// Constitutive relation, prescribed covariant rate and side conditions at a jet point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonSystem {
    /// `u^{αi} = h^{αβ} x^i_β` as `[α][i]`.
    pub u: Vec<Vec<f64>>,
    /// Prescribed `δu^{αi}/∂t^α`, summed over α.
    pub du: Vec<f64>,
    /// One side condition per `γ`.
    pub condition: Vec<f64>,
}

impl HamiltonSystem {
    pub fn condition_max(&self) -> f64 {
        self.condition.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn hamilton_system(field: &DistTensorField, jp: &JetPoint, variant: FormVariant) -> Result<HamiltonSystem> {
    hamilton_system_with_coefficient(field, jp, variant, OMEGA_COEFFICIENT)
}

/// As [`hamilton_system`] with an explicit coefficient on the `g^{hi}ω_jhα u^{αj}` term.
pub fn hamilton_system_with_coefficient(
    field: &DistTensorField,
    jp: &JetPoint,
    variant: FormVariant,
    omega_coefficient: f64,
) -> Result<HamiltonSystem> {
    check_shape(field.metrics(), jp)?;
    let (p, n) = (jp.p(), jp.n());
    let lf = field.local(&jp.base())?;
    let geom = &lf.geom;
    let u: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..n)
                .map(|i| (0..p).map(|b| geom.h_inv[(a, b)] * jp.vel(i, b)).sum())
                .collect()
        })
        .collect();
    let mut du = lf.grad_f();
    if variant == FormVariant::Shifted {
        for (i, d) in du.iter_mut().enumerate() {
            for a in 0..p {
                for j in 0..n {
                    *d += omega_coefficient * lf.helicity[[j, i, a]] * u[a][j];
                }
                for b in 0..p {
                    *d += geom.h_inv[(a, b)] * lf.d[[i, a, b]];
                }
            }
        }
    }
    let condition = (0..p)
        .map(|c| {
            let mut s = 0.0;
            for a in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        let w = match variant {
                            FormVariant::Plain => {
                                (0..p).map(|b| geom.h_inv[(a, b)] * lf.value[[j, b]]).sum::<f64>()
                            }
                            FormVariant::Shifted => {
                                u[a][j] - (0..p).map(|b| geom.h_inv[(a, b)] * lf.value[[j, b]]).sum::<f64>()
                            }
                        };
                        s += geom.g[(i, j)] * lf.d[[i, a, c]] * w;
                    }
                }
            }
            s
        })
        .collect();
    Ok(HamiltonSystem { u, du, condition })
}

/// `δu^{αi}/∂t^α` given the coordinate divergence `∂_α u^{αi}`.
fn covariant_rate(geom: &PointGeometry, jp: &JetPoint, u: &[Vec<f64>], divergence: &[f64]) -> Vec<f64> {
    let (p, n) = (jp.p(), jp.n());
    (0..n)
        .map(|i| {
            let mut s = divergence[i];
            for a in 0..p {
                for g in 0..p {
                    s += geom.big_h[[a, a, g]] * u[g][i];
                }
                for j in 0..n {
                    for k in 0..n {
                        s += geom.big_g[[i, j, k]] * u[a][j] * jp.vel(k, a);
                    }
                }
            }
            s
        })
        .collect()
}

/// Max mismatch between the finite-difference covariant rate of `u` along
/// a trajectory and the prescribed rate, over interior samples.
pub fn hamilton_consistency(field: &DistTensorField, traj: &Trajectory, variant: FormVariant) -> Result<f64> {
    hamilton_consistency_with_coefficient(field, traj, variant, OMEGA_COEFFICIENT)
}

pub fn hamilton_consistency_with_coefficient(
    field: &DistTensorField,
    traj: &Trajectory,
    variant: FormVariant,
    omega_coefficient: f64,
) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: traj.len(),
        });
    }
    if field.p() != 1 {
        return Err(Error::Shape("trajectories have a single parameter".into()));
    }
    let systems = (0..traj.len())
        .map(|k| hamilton_system_with_coefficient(field, &traj.jet(k), variant, omega_coefficient))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let jp = traj.jet(k);
        let geom = field.metrics().at(&jp.coords())?;
        let div: Vec<f64> = (0..field.n())
            .map(|i| (systems[k + 1].u[0][i] - systems[k - 1].u[0][i]) / (2.0 * traj.step))
            .collect();
        let rate = covariant_rate(&geom, &jp, &systems[k].u, &div);
        for (r, d) in rate.iter().zip(&systems[k].du) {
            worst = worst.max((r - d).abs());
        }
    }
    Ok(worst)
}

/// Sheet analogue of [`hamilton_consistency`] using central differences in
/// every parameter at interior nodes.
pub fn hamilton_consistency_sheet(field: &DistTensorField, sheet: &Sheet, variant: FormVariant) -> Result<f64> {
    let (p, n) = (sheet.p, sheet.n);
    if field.p() != p || field.n() != n {
        return Err(Error::Shape("sheet and field dimensions differ".into()));
    }
    if sheet.counts.iter().any(|&c| c < 2) {
        return Err(Error::TooFewSamples {
            need: 3,
            got: sheet.counts.iter().min().copied().unwrap_or(0) + 1,
        });
    }
    let shape = sheet.shape();
    let systems = (0..sheet.node_count())
        .map(|k| hamilton_system(field, &sheet.jet(&sheet.multi_index(k)), variant))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for k in 0..sheet.node_count() {
        let idx = sheet.multi_index(k);
        if idx.iter().zip(&shape).any(|(&i, &s)| i == 0 || i + 1 == s) {
            continue;
        }
        let mut div = vec![0.0; n];
        for a in 0..p {
            let mut up = idx.clone();
            let mut dn = idx.clone();
            up[a] += 1;
            dn[a] -= 1;
            let (su, sd) = (&systems[sheet.flat_index(&up)], &systems[sheet.flat_index(&dn)]);
            for (i, d) in div.iter_mut().enumerate() {
                *d += (su.u[a][i] - sd.u[a][i]) / (2.0 * sheet.steps[a]);
            }
        }
        let jp = sheet.jet(&idx);
        let geom = field.metrics().at(&jp.coords())?;
        let rate = covariant_rate(&geom, &jp, &systems[k].u, &div);
        for (r, d) in rate.iter().zip(&systems[k].du) {
            worst = worst.max((r - d).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, MetricSpec};
    use crate::integrate::{integrate_first_order, integrate_second_order, integrate_sheet, Sample};
    use crate::prolong::{FirstOrderODESystem, SecondOrderSystem};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn sphere() -> Metrics {
        let g = MetricSpec::diagonal(Domain::State, &["1", "sin(x1)^2"], &[1, 1]).unwrap();
        Metrics::new(MetricSpec::euclidean(Domain::Parameters, 1), g).unwrap()
    }

    fn rotation() -> DistTensorField {
        DistTensorField::vector(Metrics::flat(1, 2), &["-x2", "x1"]).unwrap()
    }

    fn jet_samples(p: usize, n: usize) -> Vec<JetPoint> {
        (0..20)
            .map(|k| {
                let s = k as f64;
                let z: Vec<f64> = (0..p + n + n * p)
                    .map(|m| 0.3 + 0.9 * ((1.7 * s + 0.61 * m as f64).sin()))
                    .collect();
                JetPoint::from_z(p, n, &z).unwrap()
            })
            .collect()
    }

    #[test]
    fn flat_frames_are_coordinate_frames() {
        let jp = JetPoint::curve(0.3, &[1.0, 2.0], &[0.5, -1.0]).unwrap();
        let fb = frames_at(&Metrics::flat(1, 2), &jp).unwrap();
        assert_eq!(fb.frames.max_abs_diff(&Mat::identity(5)), 0.0);
        assert_eq!(fb.coframes.max_abs_diff(&Mat::identity(5)), 0.0);
    }

    #[test]
    fn sphere_frames_are_dual() {
        let jp = JetPoint::curve(0.0, &[FRAC_PI_4, 0.3], &[0.7, -1.2]).unwrap();
        let fb = frames_at(&sphere(), &jp).unwrap();
        assert!(fb.duality_residual() <= 1e-12);
        // δy^j(∂/∂y^i) = δ^j_i
        let lay = fb.layout();
        for i in 0..2 {
            for j in 0..2 {
                let pair: f64 = (0..5)
                    .map(|k| fb.coframes[(lay.v(j, 0), k)] * fb.frames[(lay.v(i, 0), k)])
                    .sum();
                assert_eq!(pair, if i == j { 1.0 } else { 0.0 });
            }
        }
        // a genuinely non-trivial frame
        assert!(fb.frames.max_abs_diff(&Mat::identity(5)) > 0.1);
    }

    #[test]
    fn time_dependent_h_frames_are_dual() {
        let h = MetricSpec::parse(Domain::Parameters, &[&["1 + t1^2", "t2"], &["t2", "2"]], &[1, 1]).unwrap();
        let m = Metrics::new(h, sphere().g.clone()).unwrap();
        for jp in jet_samples(2, 2) {
            assert!(frames_at(&m, &jp).unwrap().duality_residual() <= 1e-12);
        }
    }

    #[test]
    fn sasaki_flat_is_identity() {
        let jp = JetPoint::curve(0.3, &[1.0, 2.0], &[4.0, -3.0]).unwrap();
        let s = sasaki_metric_at(&Metrics::flat(1, 2), &jp).unwrap();
        assert_eq!(s.max_abs_diff(&Mat::identity(5)), 0.0);
    }

    #[test]
    fn sasaki_block_and_signature() {
        let h = MetricSpec::diagonal(Domain::Parameters, &["-1", "2"], &[-1, 1]).unwrap();
        let g = MetricSpec::diagonal(Domain::State, &["1", "sin(x1)^2", "-1"], &[1, 1, -1]).unwrap();
        let m = Metrics::new(h, g).unwrap();
        for jp in jet_samples(2, 3) {
            assert!(sasaki_block_residual(&m, &jp).unwrap() <= 1e-12);
            let s = sasaki_metric_at(&m, &jp).unwrap();
            let (pos, neg, zero) = s.inertia(1e-9);
            // h: (1,1), g: (2,1), h⊗g: (1·2 + 1·1, 1·1 + 1·2)
            assert_eq!((pos, neg, zero), (1 + 2 + 3, 1 + 1 + 3, 0));
        }
    }

    #[test]
    fn theta_examples() {
        let zero = DistTensorField::vector(Metrics::flat(1, 2), &["0", "0"]).unwrap();
        let jp = JetPoint::curve(0.0, &[1.0, 1.0], &[0.0, 2.0]).unwrap();
        let th = liouville_theta(&zero, &jp, FormVariant::Plain).unwrap();
        assert_eq!(th.components[0].as_slice(), &[0.0, 0.0, 2.0, 0.0, 0.0]);

        let on = JetPoint::curve(0.0, &[1.0, 2.0], &[-2.0, 1.0]).unwrap();
        let th = liouville_theta(&rotation(), &on, FormVariant::Shifted).unwrap();
        assert!(th.components[0].as_slice().iter().all(|&c| c == 0.0));

        let h = MetricSpec::diagonal(Domain::Parameters, &["4"], &[1]).unwrap();
        let m = Metrics::new(h, MetricSpec::euclidean(Domain::State, 2)).unwrap();
        let scaled = DistTensorField::vector(m, &["0", "0"]).unwrap();
        let th = liouville_theta(&scaled, &jp, FormVariant::Plain).unwrap();
        assert_eq!(th.components[0][(0, 2)], 4.0);
    }

    #[test]
    fn omega_flat_plain_is_canonical() {
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[3.0, -1.0]).unwrap();
        let om = symplectic_omega(&rotation(), &jp, FormVariant::Plain).unwrap();
        let mut want = Mat::zeros(5, 5);
        for i in 0..2 {
            want[(1 + i, 3 + i)] = 1.0;
            want[(3 + i, 1 + i)] = -1.0;
        }
        assert_eq!(om.components[0].max_abs_diff(&want), 0.0);
        assert_eq!(om.antisymmetry_residual(), 0.0);
    }

    #[test]
    fn shifted_equals_plain_for_gradient_fields() {
        // X = grad(x1² x2): F = 0, autonomous, constant h
        let x = DistTensorField::vector(Metrics::flat(1, 2), &["2*x1*x2", "x1^2"]).unwrap();
        for jp in jet_samples(1, 2) {
            let a = symplectic_omega(&x, &jp, FormVariant::Plain).unwrap();
            let b = symplectic_omega(&x, &jp, FormVariant::Shifted).unwrap();
            assert!(a.components[0].max_abs_diff(&b.components[0]) <= 1e-12);
        }
    }

    #[test]
    fn omega_is_minus_dtheta() {
        let flat = rotation();
        let curved = DistTensorField::vector(sphere(), &["cos(x2)", "x1*t1"]).unwrap();
        for jp in jet_samples(1, 2) {
            assert!(check_omega_eq_minus_dtheta(&flat, &jp, FormVariant::Plain).unwrap() <= 1e-12);
            assert!(check_omega_eq_minus_dtheta(&flat, &jp, FormVariant::Shifted).unwrap() <= 1e-12);
            for v in [FormVariant::Plain, FormVariant::Shifted] {
                assert!(check_omega_eq_minus_dtheta(&curved, &jp, v).unwrap() <= 1e-8);
                assert!(symplectic_omega(&curved, &jp, v).unwrap().antisymmetry_residual() == 0.0);
                assert!(nondegeneracy_det(&curved, &jp, v, 0).unwrap().abs() > 1e-6);
            }
        }
    }

    #[test]
    fn omega_is_minus_dtheta_for_sheets() {
        let h = MetricSpec::parse(Domain::Parameters, &[&["2", "1"], &["1", "-3"]], &[1, -1]).unwrap();
        let m = Metrics::new(h, sphere().g.clone()).unwrap();
        let x = DistTensorField::parse(m, &[&["x2", "t1"], &["sin(x1)", "x1*x2*t2"]]).unwrap();
        for jp in jet_samples(2, 2) {
            for v in [FormVariant::Plain, FormVariant::Shifted] {
                assert!(check_omega_eq_minus_dtheta(&x, &jp, v).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn time_dependent_h_leaves_a_dt_dx_residual() {
        // Ω + dθ = 2√|h| H g_ij (y^i − X^i) dt∧dx^j when h depends on t.
        let h = MetricSpec::diagonal(Domain::Parameters, &["exp(2*t1)"], &[1]).unwrap();
        let m = Metrics::new(h, MetricSpec::euclidean(Domain::State, 2)).unwrap();
        let x = DistTensorField::vector(m, &["-x2", "x1"]).unwrap();
        let (t, y) = (0.4f64, [0.8, -0.5]);
        let jp = JetPoint::curve(t, &[1.0, 2.0], &y).unwrap();
        let om = symplectic_omega(&x, &jp, FormVariant::Shifted).unwrap();
        let dt = d_theta(&x, &jp, FormVariant::Shifted).unwrap();
        // H¹₁₁ = 1, √|h| = e^t, X = (−2, 1)
        let xv = [-2.0, 1.0];
        for j in 0..2 {
            let r = om.components[0][(0, 1 + j)] + dt.components[0][(0, 1 + j)];
            assert_abs_diff_eq!(r.abs(), 2.0 * t.exp() * (y[j] - xv[j]).abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn hamilton_examples() {
        let jp = JetPoint::curve(0.0, &[1.0, 2.0], &[1.0, 0.0]).unwrap();
        let hs = hamilton_system(&rotation(), &jp, FormVariant::Plain).unwrap();
        assert_eq!(hs.u, vec![vec![1.0, 0.0]]);
        assert_eq!(hs.condition, vec![0.0]);

        // brute-force contraction: grad f = (x1, x2), ω_12 = 2, ω_21 = −2
        let omega = [[0.0, 2.0], [-2.0, 0.0]];
        let (g_inv, u) = ([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0]);
        for c in [OMEGA_COEFFICIENT, PRINTED_OMEGA_COEFFICIENT] {
            let hs = hamilton_system_with_coefficient(&rotation(), &jp, FormVariant::Shifted, c).unwrap();
            for i in 0..2 {
                let mut want = jp.x[i];
                for h in 0..2 {
                    for j in 0..2 {
                        want += c * g_inv[h][i] * omega[j][h] * u[j];
                    }
                }
                assert_abs_diff_eq!(hs.du[i], want, epsilon = 1e-14);
            }
            assert_eq!(hs.condition, vec![0.0]);
        }
        let hs = hamilton_system(&rotation(), &jp, FormVariant::Shifted).unwrap();
        assert_eq!(hs.du, vec![1.0, 4.0]);
    }

    #[test]
    fn nonautonomous_condition() {
        let x = DistTensorField::vector(Metrics::flat(1, 1), &["t1"]).unwrap();
        let jp = JetPoint::curve(2.0, &[0.0], &[5.0]).unwrap();
        // DX = 1: plain gives X = 2, shifted gives y − X = 3
        assert_eq!(hamilton_system(&x, &jp, FormVariant::Plain).unwrap().condition, vec![2.0]);
        assert_eq!(hamilton_system(&x, &jp, FormVariant::Shifted).unwrap().condition, vec![3.0]);
    }

    #[test]
    fn geodesic_consistency() {
        let zero = DistTensorField::vector(Metrics::flat(1, 2), &["0", "0"]).unwrap();
        let sys = SecondOrderSystem::geodesic(zero.metrics());
        let tr = integrate_second_order(&sys, 0.0, &[0.0, 1.0], &[1.0, -2.0], 1e-3, 500).unwrap();
        assert!(hamilton_consistency(&zero, &tr, FormVariant::Plain).unwrap() <= 1e-10);
    }

    #[test]
    fn shifted_consistency_converges() {
        let x = rotation();
        let sys = SecondOrderSystem::eq5(&x).unwrap();
        let run = |step: f64, n: usize| {
            let tr = integrate_second_order(&sys, 0.0, &[1.0, 0.5], &[0.3, 2.0], step, n).unwrap();
            hamilton_consistency(&x, &tr, FormVariant::Shifted).unwrap()
        };
        let (a, b) = (run(2e-2, 50), run(1e-2, 100));
        assert!((3.0..=5.0).contains(&(a / b)), "ratio {}", a / b);
        // the printed coefficient does not follow the flow
        let tr = integrate_second_order(&sys, 0.0, &[1.0, 0.5], &[0.3, 2.0], 1e-2, 100).unwrap();
        let printed =
            hamilton_consistency_with_coefficient(&x, &tr, FormVariant::Shifted, PRINTED_OMEGA_COEFFICIENT).unwrap();
        assert!(printed > 0.5);
    }

    #[test]
    fn plain_consistency_on_sphere() {
        let x = DistTensorField::vector(sphere(), &["sin(x1)", "1"]).unwrap();
        let sys = SecondOrderSystem::gradient_force(&x);
        let tr = integrate_second_order(&sys, 0.0, &[1.0, 0.0], &[0.2, 0.4], 1e-3, 400).unwrap();
        assert!(hamilton_consistency(&x, &tr, FormVariant::Plain).unwrap() <= 1e-5);
    }

    #[test]
    fn negative_control() {
        let x = rotation();
        let tr = Trajectory {
            step: 0.01,
            provenance: "test".into(),
            samples: (0..100)
                .map(|k| {
                    let t = k as f64 * 0.01;
                    Sample { t, x: vec![t * t, 0.0], v: vec![2.0 * t, 0.0] }
                })
                .collect(),
        };
        assert!(hamilton_consistency(&x, &tr, FormVariant::Shifted).unwrap() >= 0.05);
    }

    #[test]
    fn eq2_solution_is_consistent() {
        let x = rotation();
        let tr = integrate_first_order(&FirstOrderODESystem::from_field(&x).unwrap(), 0.0, &[1.0, 0.0], 1e-3, 1000)
            .unwrap();
        assert!(hamilton_consistency(&x, &tr, FormVariant::Shifted).unwrap() <= 1e-5);
    }

    #[test]
    fn sheet_consistency() {
        let m = Metrics::flat(2, 1);
        let x = DistTensorField::parse(m, &[&["x1", "x1"]]).unwrap();
        let run = |c: usize| {
            let s = integrate_sheet(&x, &[0.0, 0.0], &[1.0], &[1.0 / c as f64; 2], &[c, c]).unwrap();
            (
                hamilton_consistency_sheet(&x, &s, FormVariant::Shifted).unwrap(),
                hamilton_consistency_sheet(&x, &s, FormVariant::Plain).unwrap(),
            )
        };
        let (a, pa) = run(10);
        let (b, pb) = run(20);
        assert!((3.0..=5.0).contains(&(a / b)), "ratio {}", a / b);
        assert!((3.0..=5.0).contains(&(pa / pb)), "ratio {}", pa / pb);
    }
}
