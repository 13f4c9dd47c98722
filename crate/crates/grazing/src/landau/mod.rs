//! Euler–Maruyama particle system for the Landau equation.
//!
//! Particle `i` interacts with a companion set `P_i`:
//!
//! ```text
//! X_i += dt/|P_i| Σ_j b_δ(X_i - X_j) + 1/√|P_i| Σ_j σ_δ(X_i - X_j) ΔB_ij
//! ```
//!
//! In the conservative pairing the increment of a pair is shared with
//! opposite signs, so total momentum is preserved to rounding.

mod coefficients;

pub use coefficients::*;

use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{param, Error, Result};
use crate::geometry::Vec3;
use crate::rng::{Purpose, StreamKey};
use crate::trajectory::Stepper;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Pairing {
    /// every other particle, independent noise per ordered pair
    Full,
    /// `companions` uniform draws per particle and step
    Subsampled { companions: usize },
    /// `matchings` random perfect matchings, noise shared within a pair
    Conservative { matchings: usize },
}

impl Default for Pairing {
    fn default() -> Self {
        Pairing::Subsampled { companions: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauConfig {
    pub gamma: f64,
    pub dt: f64,
    pub pairing: Pairing,
    /// floor on `|z|` inside the `|z|^γ` factors
    pub reg_delta: f64,
    pub seed: u64,
    pub t_end: f64,
}

impl LandauConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= -3.0 && self.gamma < 0.0) {
            return Err(param(format!("Landau gamma must lie in [-3,0), got {}", self.gamma)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.reg_delta >= 0.0) {
            return Err(param("dt must be positive, t_end and reg_delta non-negative"));
        }
        match self.pairing {
            Pairing::Subsampled { companions: 0 } | Pairing::Conservative { matchings: 0 } => {
                Err(param("pairing needs at least one companion"))
            }
            _ => Ok(()),
        }
    }

    /// Default floor `1e-3 √m₂`.
    pub fn default_reg_delta(m2: f64) -> f64 {
        1e-3 * m2.sqrt()
    }
}

pub(crate) fn gaussian3<R: rand::Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// One pair's increment `dt·w_b·b_δ(z) + √dt·w_σ·σ_δ(z)·ξ`.
pub fn pair_increment(cfg: &LandauConfig, z: Vec3, xi: Vec3, wb: f64, ws: f64) -> Vec3 {
    if z == Vec3::ZERO {
        return Vec3::ZERO;
    }
    let s = sigma_reg(cfg.gamma, cfg.reg_delta, z);
    (cfg.dt * wb) * b_reg(cfg.gamma, cfg.reg_delta, z) + (cfg.dt.sqrt() * ws) * mat_vec(&s, xi)
}

/// Uniform companion `≠ i`.
pub(crate) fn companion<R: rand::Rng>(rng: &mut R, i: usize, n: usize) -> usize {
    let j = rng.random_range(0..n - 1);
    if j >= i {
        j + 1
    } else {
        j
    }
}

/// Random perfect matching of `0..n`; the last index sits out when `n` is odd.
pub(crate) fn matching(key: &StreamKey, step: u64, round: u64, n: usize) -> Vec<(usize, usize)> {
    let mut rng = key.stream(Purpose::Pairing, step, round);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

pub(crate) fn check_finite(cloud: &ParticleCloud) -> Result<()> {
    let bad: Vec<usize> = cloud
        .velocities
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Instability {
            step: cloud.step,
            indices: bad,
        })
    }
}

pub struct LandauSim {
    pub config: LandauConfig,
    key: StreamKey,
}

impl LandauSim {
    pub fn new(config: LandauConfig) -> Result<Self> {
        config.validate()?;
        Ok(LandauSim {
            key: StreamKey::new(config.seed),
            config,
        })
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Increment of particle `i` for the independent-noise pairings.
    fn own_increment(&self, v: &[Vec3], i: usize, step: u64) -> Vec3 {
        let n = v.len();
        let cfg = &self.config;
        let mut noise = self.key.stream(Purpose::Gaussian, step, i as u64);
        match cfg.pairing {
            Pairing::Full => {
                let w = 1.0 / (n - 1) as f64;
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| pair_increment(cfg, v[i] - v[j], gaussian3(&mut noise), w, w.sqrt()))
                    .sum()
            }
            Pairing::Subsampled { companions } => {
                let mut pick = self.key.stream(Purpose::Companions, step, i as u64);
                let w = 1.0 / companions as f64;
                (0..companions)
                    .map(|_| {
                        let j = companion(&mut pick, i, n);
                        pair_increment(cfg, v[i] - v[j], gaussian3(&mut noise), w, w.sqrt())
                    })
                    .sum()
            }
            Pairing::Conservative { .. } => unreachable!("handled pairwise"),
        }
    }
}

impl Stepper for LandauSim {
    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn step(&self, cloud: &mut ParticleCloud) -> Result<u64> {
        let n = cloud.len();
        let step = cloud.step;
        let v = cloud.velocities.clone();
        match self.config.pairing {
            Pairing::Conservative { matchings } => {
                let w = 1.0 / matchings as f64;
                for round in 0..matchings as u64 {
                    let pairs = matching(&self.key, step, round, n);
                    let incs: Vec<Vec3> = pairs
                        .par_iter()
                        .enumerate()
                        .map(|(k, &(i, j))| {
                            let mut g = self.key.stream(Purpose::Gaussian, step, round << 32 | k as u64);
                            pair_increment(&self.config, v[i] - v[j], gaussian3(&mut g), w, w.sqrt())
                        })
                        .collect();
                    for (&(i, j), d) in pairs.iter().zip(incs) {
                        cloud.velocities[i] += d;
                        cloud.velocities[j] -= d;
                    }
                }
            }
            _ => {
                let incs: Vec<Vec3> = (0..n).into_par_iter().map(|i| self.own_increment(&v, i, step)).collect();
                for (x, d) in cloud.velocities.iter_mut().zip(incs) {
                    *x += d;
                }
            }
        }
        cloud.step += 1;
        cloud.time += self.config.dt;
        check_finite(cloud)?;
        Ok(0)
    }
}
