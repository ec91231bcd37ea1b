//! Fixed-step RK4 for first-order systems, prolonged second-order systems
//! and completely integrable sheets, plus residuals along the results.

use serde::{Deserialize, Serialize};

use crate::error::{fmt_point, Error, Result};
use crate::expr::Coords;
use crate::field::DistTensorField;
use crate::jet::{BasePoint, JetPoint};
use crate::linalg::Tensor;
use crate::prolong::{FirstOrderODESystem, SecondOrderSystem};

/// Refusal threshold for sheet integration.
pub const INTEGRABILITY_TOL: f64 = 1e-8;

/// One sample `(t, x, ẋ)` of a one-parameter solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Uniformly sampled solution of an ODE system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub step: f64,
    /// Name of the system that produced the samples.
    pub provenance: String,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn jet(&self, k: usize) -> JetPoint {
        let s = &self.samples[k];
        JetPoint::curve(s.t, &s.x, &s.v).expect("trajectory samples are consistent")
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Sup-norm distance of the positions of two trajectories sampled alike.
    pub fn max_position_diff(&self, other: &Trajectory) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .flat_map(|(a, b)| a.x.iter().zip(&b.x).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Shape(format!("step must be positive and finite, got {step}")));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("{what} has {got} entries, expected {want}")));
    }
    Ok(())
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `ẋ = rhs(t, x)`; `v_k` records `rhs(t_k, x_k)`.
pub fn integrate_first_order(
    sys: &FirstOrderODESystem,
    t0: f64,
    x0: &[f64],
    step: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    check_step(step)?;
    check_len("initial state", x0.len(), sys.n())?;
    let f = |t: f64, y: &[f64]| sys.eval(t, y);
    let mut traj = Trajectory {
        step,
        provenance: match sys.tag() {
            crate::prolong::FirstOrderTag::Eq2 => "eq2".into(),
            crate::prolong::FirstOrderTag::Reduced => "reduced".into(),
        },
        samples: Vec::with_capacity(n_steps + 1),
    };
    let mut x = x0.to_vec();
    for k in 0..=n_steps {
        let t = t0 + k as f64 * step;
        let v = f(t, &x)?;
        if !finite(&x) || !finite(&v) {
            return Err(blow_up(traj));
        }
        traj.samples.push(Sample { t, x: x.clone(), v });
        if k < n_steps {
            x = rk4_step(&f, t, &x, step)?;
        }
    }
    Ok(traj)
}

fn blow_up(prefix: Trajectory) -> Error {
    Error::BlowUp {
        last_good: prefix.len().saturating_sub(1),
        prefix: Box::new(prefix),
    }
}

/// Integrate a one-parameter second-order system on the `(x, ẋ)` phase space.
pub fn integrate_second_order(
    sys: &SecondOrderSystem,
    t0: f64,
    x0: &[f64],
    v0: &[f64],
    step: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    if sys.p() != 1 || sys.is_trace() {
        return Err(Error::Unsupported(format!(
            "{} with p = {} has no explicit acceleration to integrate",
            sys.tag(),
            sys.p()
        )));
    }
    check_step(step)?;
    let n = sys.n();
    check_len("initial state", x0.len(), n)?;
    check_len("initial velocity", v0.len(), n)?;
    let f = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let jp = JetPoint::curve(t, &y[..n], &y[n..])?;
        let a = sys.raw_acceleration(&jp)?;
        let mut out = y[n..].to_vec();
        out.extend_from_slice(a.data());
        Ok(out)
    };
    let mut traj = Trajectory {
        step,
        provenance: sys.tag().name().into(),
        samples: Vec::with_capacity(n_steps + 1),
    };
    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    for k in 0..=n_steps {
        let t = t0 + k as f64 * step;
        if !finite(&y) {
            return Err(blow_up(traj));
        }
        traj.samples.push(Sample {
            t,
            x: y[..n].to_vec(),
            v: y[n..].to_vec(),
        });
        if k < n_steps {
            y = rk4_step(&f, t, &y, step)?;
        }
    }
    Ok(traj)
}

/// Max over `(i, α, β)` of
/// `|∂_β X^i_α + ∂_j X^i_α X^j_β − ∂_α X^i_β − ∂_j X^i_β X^j_α|`.
pub fn integrability_residual(field: &DistTensorField, pt: &BasePoint) -> Result<f64> {
    let lf = field.local(pt)?;
    let (p, n) = (lf.p, lf.n);
    let side = |i: usize, a: usize, b: usize| {
        lf.dt[[b, i, a]]
            + (0..n)
                .map(|j| lf.dx[[j, i, a]] * lf.value[[j, b]])
                .sum::<f64>()
    };
    let mut m: f64 = 0.0;
    for i in 0..n {
        for a in 0..p {
            for b in a + 1..p {
                m = m.max((side(i, a, b) - side(i, b, a)).abs());
            }
        }
    }
    Ok(m)
}

/// Rectangular grid of solution values of `x^i_α = X^i_α(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub p: usize,
    pub n: usize,
    pub t0: Vec<f64>,
    pub steps: Vec<f64>,
    /// Steps per axis; each axis has `counts[a] + 1` nodes.
    pub counts: Vec<usize>,
    /// `x` at each node, nodes in row-major order (first axis slowest).
    pub x: Vec<Vec<f64>>,
    /// `x^i_α = X^i_α` at each node, flattened `[i * p + α]`.
    pub v: Vec<Vec<f64>>,
}

impl Sheet {
    pub fn shape(&self) -> Vec<usize> {
        self.counts.iter().map(|c| c + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flat_index(&self.shape(), idx)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_index(&self.shape(), flat)
    }

    pub fn t_at(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.p)
            .map(|a| self.t0[a] + idx[a] as f64 * self.steps[a])
            .collect()
    }

    pub fn jet(&self, idx: &[usize]) -> JetPoint {
        let k = self.flat_index(idx);
        JetPoint::new(self.t_at(idx), self.x[k].clone(), self.v[k].clone())
            .expect("sheet nodes are consistent")
    }

    pub fn x_at(&self, idx: &[usize]) -> &[f64] {
        &self.x[self.flat_index(idx)]
    }
}

fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |off, (&i, &n)| off * n + i)
}

fn multi_index(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

/// Integrate a sheet by successive one-dimensional sweeps along `t¹`, then `t²`, ….
///
/// Refuses with the largest violation when the complete integrability
/// conditions fail at any node by more than [`INTEGRABILITY_TOL`].
pub fn integrate_sheet(
    field: &DistTensorField,
    t0: &[f64],
    x0: &[f64],
    steps: &[f64],
    counts: &[usize],
) -> Result<Sheet> {
    let order: Vec<usize> = (0..field.p()).collect();
    integrate_sheet_ordered(field, t0, x0, steps, counts, &order)
}

/// As [`integrate_sheet`], sweeping the axes in `order`.
pub fn integrate_sheet_ordered(
    field: &DistTensorField,
    t0: &[f64],
    x0: &[f64],
    steps: &[f64],
    counts: &[usize],
    order: &[usize],
) -> Result<Sheet> {
    let (p, n) = (field.p(), field.n());
    check_len("t0", t0.len(), p)?;
    check_len("x0", x0.len(), n)?;
    check_len("grid steps", steps.len(), p)?;
    check_len("grid counts", counts.len(), p)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..p).collect::<Vec<_>>() {
        return Err(Error::Shape(format!("sweep order {order:?} is not a permutation of the axes")));
    }
    for &s in steps {
        check_step(s)?;
    }
    let shape: Vec<usize> = counts.iter().map(|c| c + 1).collect();
    let total: usize = shape.iter().product();
    let mut xs: Vec<Option<Vec<f64>>> = vec![None; total];
    xs[0] = Some(x0.to_vec());
    let t_of = |idx: &[usize]| -> Vec<f64> {
        (0..p).map(|a| t0[a] + idx[a] as f64 * steps[a]).collect()
    };

    for &axis in order {
        let starts: Vec<usize> = (0..total)
            .filter(|&k| xs[k].is_some() && multi_index(&shape, k)[axis] == 0)
            .collect();
        for start in starts {
            let mut idx = multi_index(&shape, start);
            let mut x = xs[start].clone().expect("start node is filled");
            let base_t = t_of(&idx);
            let f = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
                let mut t = base_t.clone();
                t[axis] = s;
                let vals = field.value_at(&Coords::new(&t, y, &[]))?;
                Ok((0..n).map(|i| vals[i * p + axis]).collect())
            };
            for k in 0..counts[axis] {
                let s = base_t[axis] + k as f64 * steps[axis];
                x = rk4_step(&f, s, &x, steps[axis])?;
                if !finite(&x) {
                    return Err(Error::Integrability {
                        max: f64::INFINITY,
                        point: format!("non-finite state after sweep step along t{}", axis + 1),
                    });
                }
                idx[axis] = k + 1;
                xs[flat_index(&shape, &idx)] = Some(x.clone());
            }
        }
    }

    let x: Vec<Vec<f64>> = xs.into_iter().map(|v| v.expect("every node is reached")).collect();
    let mut v = Vec::with_capacity(total);
    let mut worst = (0.0f64, String::new());
    for (k, xk) in x.iter().enumerate() {
        let t = t_of(&multi_index(&shape, k));
        let pt = BasePoint::new(&t, xk);
        let r = integrability_residual(field, &pt)?;
        if r > worst.0 {
            worst = (r, fmt_point(&t, xk));
        }
        v.push(field.value_at(&pt.coords())?);
    }
    if worst.0 > INTEGRABILITY_TOL {
        return Err(Error::Integrability {
            max: worst.0,
            point: worst.1,
        });
    }
    Ok(Sheet {
        p,
        n,
        t0: t0.to_vec(),
        steps: steps.to_vec(),
        counts: counts.to_vec(),
        x,
        v,
    })
}

/// Largest violation of the complete integrability conditions over a set of points.
pub fn max_integrability_residual(field: &DistTensorField, pts: &[BasePoint]) -> Result<(f64, Option<BasePoint>)> {
    let mut worst = (0.0, None);
    for pt in pts {
        let r = integrability_residual(field, pt)?;
        if r > worst.0 {
            worst = (r, Some(pt.clone()));
        }
    }
    Ok(worst)
}

/// `max_k |defect − RHS|` along interior samples, second derivatives from
/// central differences of `x`.
pub fn residual_along(traj: &Trajectory, sys: &SecondOrderSystem) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: traj.len(),
        });
    }
    if sys.p() != 1 {
        return Err(Error::Shape("a trajectory has one parameter".into()));
    }
    let n = traj.n();
    let h2 = traj.step * traj.step;
    let mut m: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let (a, b, c) = (&traj.samples[k - 1], &traj.samples[k], &traj.samples[k + 1]);
        let acc: Vec<f64> = (0..n).map(|i| (c.x[i] - 2.0 * b.x[i] + a.x[i]) / h2).collect();
        let r = sys.residual(&traj.jet(k), &Tensor::from_vec(&[n, 1, 1], acc))?;
        m = m.max(r);
    }
    Ok(m)
}

/// Residual of a sheet against a second-order system at interior nodes.
pub fn residual_along_sheet(sheet: &Sheet, sys: &SecondOrderSystem) -> Result<f64> {
    let (p, n) = (sheet.p, sheet.n);
    if sys.p() != p || sys.n() != n {
        return Err(Error::Shape("sheet and system dimensions differ".into()));
    }
    if sheet.counts.iter().any(|&c| c < 2) {
        return Err(Error::TooFewSamples {
            need: 3,
            got: sheet.counts.iter().min().copied().unwrap_or(0) + 1,
        });
    }
    let shape = sheet.shape();
    let mut m: f64 = 0.0;
    for k in 0..sheet.node_count() {
        let idx = multi_index(&shape, k);
        if idx.iter().zip(&shape).any(|(&i, &s)| i == 0 || i + 1 == s) {
            continue;
        }
        let xa = |shifts: &[(usize, isize)]| -> &[f64] {
            let mut j = idx.clone();
            for &(a, d) in shifts {
                j[a] = (j[a] as isize + d) as usize;
            }
            sheet.x_at(&j)
        };
        let mut acc = Tensor::zeros(&[n, p, p]);
        for a in 0..p {
            for b in 0..p {
                for i in 0..n {
                    acc[[i, a, b]] = if a == b {
                        let h = sheet.steps[a];
                        (xa(&[(a, 1)])[i] - 2.0 * xa(&[])[i] + xa(&[(a, -1)])[i]) / (h * h)
                    } else {
                        let hh = 4.0 * sheet.steps[a] * sheet.steps[b];
                        (xa(&[(a, 1), (b, 1)])[i] - xa(&[(a, 1), (b, -1)])[i]
                            - xa(&[(a, -1), (b, 1)])[i]
                            + xa(&[(a, -1), (b, -1)])[i])
                            / hh
                    };
                }
            }
        }
        m = m.max(sys.residual(&sheet.jet(&idx), &acc)?);
    }
    Ok(m)
}
