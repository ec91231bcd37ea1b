//! Seeded random sample points for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{BasePoint, JetPoint};

pub const DEFAULT_SEED: u64 = 0x6a65_7466;

/// Axis-aligned box of jet coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub t: Vec<[f64; 2]>,
    pub x: Vec<[f64; 2]>,
    /// Range shared by every `x^i_α`.
    #[serde(default = "default_v")]
    pub v: [f64; 2],
}

fn default_v() -> [f64; 2] {
    [-1.0, 1.0]
}

impl Region {
    /// `[-1, 1]` on every axis.
    pub fn unit(p: usize, n: usize) -> Self {
        Region {
            t: vec![[-1.0, 1.0]; p],
            x: vec![[-1.0, 1.0]; n],
            v: default_v(),
        }
    }

    pub fn p(&self) -> usize {
        self.t.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self
            .t
            .iter()
            .chain(&self.x)
            .chain(std::iter::once(&self.v))
            .any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi));
        if bad {
            return Err(Error::Problem("region bounds must be finite with lo <= hi".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Sampler {
    region: Region,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(region: Region, seed: u64) -> Self {
        Sampler {
            region,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn draw(&mut self, [lo, hi]: [f64; 2]) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.gen_range(lo..hi)
        }
    }

    pub fn base_point(&mut self) -> BasePoint {
        let t: Vec<f64> = self.region.t.clone().into_iter().map(|r| self.draw(r)).collect();
        let x: Vec<f64> = self.region.x.clone().into_iter().map(|r| self.draw(r)).collect();
        BasePoint::new(&t, &x)
    }

    pub fn jet_point(&mut self) -> JetPoint {
        let b = self.base_point();
        let vr = self.region.v;
        let v = (0..self.region.p() * self.region.n()).map(|_| self.draw(vr)).collect();
        JetPoint::new(b.t, b.x, v).expect("region shapes are consistent")
    }

    pub fn base_points(&mut self, k: usize) -> Vec<BasePoint> {
        (0..k).map(|_| self.base_point()).collect()
    }

    pub fn jet_points(&mut self, k: usize) -> Vec<JetPoint> {
        (0..k).map(|_| self.jet_point()).collect()
    }
}
