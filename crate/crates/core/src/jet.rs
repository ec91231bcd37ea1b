use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Coords;

/// A point `(t^α, x^i, x^i_α)` of `J¹(T, M)`.
///
/// `v` stores the jet coordinates with the state index outermost:
/// `x^i_α = v[i * p + α]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl JetPoint {
    pub fn new(t: Vec<f64>, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if v.len() != t.len() * x.len() {
            return Err(Error::Shape(format!(
                "jet point with p={} n={} needs {} jet coordinates, got {}",
                t.len(),
                x.len(),
                t.len() * x.len(),
                v.len()
            )));
        }
        Ok(JetPoint { t, x, v })
    }

    /// One-parameter jet `(t, x, y)`.
    pub fn curve(t: f64, x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(vec![t], x.to_vec(), y.to_vec())
    }

    pub fn p(&self) -> usize {
        self.t.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn vel(&self, i: usize, alpha: usize) -> f64 {
        self.v[i * self.p() + alpha]
    }

    pub fn coords(&self) -> Coords<'_, f64> {
        Coords::new(&self.t, &self.x, &self.v)
    }

    /// Dimension `p + n + pn` of the jet bundle.
    pub fn total_dim(&self) -> usize {
        total_dim(self.p(), self.n())
    }

    /// Flat coordinates `z = (t, x, v)`.
    pub fn z(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.total_dim());
        z.extend_from_slice(&self.t);
        z.extend_from_slice(&self.x);
        z.extend_from_slice(&self.v);
        z
    }

    pub fn from_z(p: usize, n: usize, z: &[f64]) -> Result<Self> {
        if z.len() != total_dim(p, n) {
            return Err(Error::Shape(format!(
                "flat jet coordinates: expected {}, got {}",
                total_dim(p, n),
                z.len()
            )));
        }
        Self::new(
            z[..p].to_vec(),
            z[p..p + n].to_vec(),
            z[p + n..].to_vec(),
        )
    }
}

/// A point `(t, x)` of `T × M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl BasePoint {
    pub fn new(t: &[f64], x: &[f64]) -> Self {
        BasePoint {
            t: t.to_vec(),
            x: x.to_vec(),
        }
    }

    pub fn coords(&self) -> Coords<'_, f64> {
        Coords::new(&self.t, &self.x, &[])
    }
}

impl JetPoint {
    pub fn base(&self) -> BasePoint {
        BasePoint::new(&self.t, &self.x)
    }
}

pub fn total_dim(p: usize, n: usize) -> usize {
    p + n + p * n
}

/// Positions of the blocks inside the flat coordinates `z = (t, x, v)`.
#[derive(Debug, Clone, Copy)]
pub struct JetLayout {
    pub p: usize,
    pub n: usize,
}

impl JetLayout {
    pub fn t(&self, alpha: usize) -> usize {
        alpha
    }

    pub fn x(&self, i: usize) -> usize {
        self.p + i
    }

    pub fn v(&self, i: usize, alpha: usize) -> usize {
        self.p + self.n + i * self.p + alpha
    }

    pub fn dim(&self) -> usize {
        total_dim(self.p, self.n)
    }
}
