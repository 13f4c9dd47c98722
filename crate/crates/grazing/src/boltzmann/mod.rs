//! Stochastic particle system for the Boltzmann equation without cutoff.
//!
//! Jumps with deviation below `θ_min` are not simulated; their compensated
//! mean is applied as the drift `-k_res Φ (v - v*)`. The remaining jumps
//! form a bounded-rate Poisson measure with intensity
//! `Φ(|v - v*|) dt dz dφ / (N-1)` on `z ∈ [0, Φ H(θ_min)]`.
//!
//! *Nanbu* mode moves one particle per event against a companion read from
//! the start-of-step cloud. *Symmetric* mode pairs the particles at random and
//! moves both partners, which conserves momentum and energy per event.

mod near;

pub use near::NearGrid;

use std::f64::consts::{PI, TAU};

use rand::RngExt;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{param, Error, Result};
use crate::geometry::{deviate, displacement, Vec3};
use crate::kernels::{k_residual, AngularKernel};
use crate::landau::{check_finite, companion, matching};
use crate::rng::{Purpose, StreamKey};
use crate::trajectory::Stepper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    Nanbu,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoltzmannConfig {
    pub kernel: AngularKernel,
    pub dt: f64,
    /// smallest simulated deviation angle
    pub theta_min: f64,
    /// floor on the relative speed inside `Φ`
    pub v_floor: f64,
    pub update_mode: UpdateMode,
    pub seed: u64,
    pub t_end: f64,
    /// largest admissible expected number of events per particle and step
    pub rate_cap: f64,
    /// companions sampled for the residual drift
    pub drift_companions: usize,
}

/// `ε/64` for grazing kernels, `π/64` for soft ones; the support edge for Coulomb.
pub fn default_theta_min(kernel: &AngularKernel) -> f64 {
    match kernel {
        AngularKernel::Soft(_) => PI / 64.0,
        AngularKernel::Grazing(k) => k.eps / 64.0,
        AngularKernel::Coulomb(k) => k.eps,
    }
}

/// `1e-3 √m₂` for soft families; zero for a regularized Coulomb kernel.
pub fn default_v_floor(kernel: &AngularKernel, m2: f64) -> f64 {
    match kernel {
        AngularKernel::Coulomb(k) if k.h_eps > 0.0 => 0.0,
        _ => 1e-3 * m2.sqrt(),
    }
}

impl BoltzmannConfig {
    /// Defaults for everything but the kernel, step, seed and horizon.
    pub fn new(kernel: AngularKernel, m2: f64, dt: f64, seed: u64, t_end: f64) -> Self {
        BoltzmannConfig {
            kernel,
            dt,
            theta_min: default_theta_min(&kernel),
            v_floor: default_v_floor(&kernel, m2),
            update_mode: UpdateMode::Nanbu,
            seed,
            t_end,
            rate_cap: 1e4,
            drift_companions: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(param("dt must be positive and t_end non-negative"));
        }
        if !(self.theta_min > 0.0 && self.theta_min <= PI) {
            return Err(param(format!("theta_min must lie in (0,π], got {}", self.theta_min)));
        }
        if !(self.v_floor >= 0.0) {
            return Err(param("v_floor must be non-negative"));
        }
        let bounded = match self.kernel {
            AngularKernel::Coulomb(k) => k.h_eps > 0.0 || self.v_floor > 0.0,
            _ => self.v_floor > 0.0,
        };
        if !bounded {
            return Err(param("unbounded collision rate: set v_floor > 0 (or h_eps > 0 for Coulomb)"));
        }
        if self.drift_companions == 0 {
            return Err(param("drift_companions must be positive"));
        }
        Ok(())
    }
}

/// Kernel quantities fixed for a whole run.
#[derive(Debug, Clone, Copy)]
pub struct Truncation {
    /// effective smallest angle `max(θ_min, support start)`
    pub theta: f64,
    /// `H(θ)`: jump coordinates live in `[0, Φ·H(θ)]`
    pub tail: f64,
    /// `π ∫₀^θ (1 - cos) β`
    pub k_res: f64,
}

impl Truncation {
    pub fn new(kernel: &AngularKernel, theta_min: f64) -> Result<Self> {
        let (lo, _) = kernel.support();
        let theta = theta_min.max(lo);
        Ok(Truncation {
            theta,
            tail: kernel.tail(theta),
            k_res: k_residual(kernel, theta)?,
        })
    }
}

pub fn poisson<R: rand::Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// `Φ(max(r, floor))`.
pub fn phi_floor(kernel: &AngularKernel, floor: f64, r: f64) -> f64 {
    kernel.phi(r.max(floor))
}

/// Radius below which companions are handled pairwise: where `Φ` exceeds
/// eight times its mean over a pair sample. Returns `None` when the floor
/// already keeps `Φ` that small.
pub fn near_radius(kernel: &AngularKernel, floor: f64, mean_phi: f64) -> Option<f64> {
    let target = 8.0 * mean_phi;
    let r = match kernel {
        AngularKernel::Coulomb(k) => target.powf(-1.0 / 3.0) - k.h_eps,
        _ => target.powf(1.0 / kernel.gamma()),
    };
    if r.is_finite() && r > floor {
        Some(r)
    } else {
        None
    }
}

pub fn mean_pair_phi(kernel: &AngularKernel, floor: f64, v: &[Vec3], key: &StreamKey, step: u64) -> f64 {
    let n = v.len();
    let mut rng = key.stream(Purpose::Companions, step, u64::MAX);
    let samples = 1024;
    (0..samples)
        .map(|_| {
            let i = rng.random_range(0..n);
            let j = companion(&mut rng, i, n);
            phi_floor(kernel, floor, (v[i] - v[j]).norm())
        })
        .sum::<f64>()
        / samples as f64
}

pub struct BoltzmannSim {
    pub config: BoltzmannConfig,
    pub truncation: Truncation,
    key: StreamKey,
}

struct ParticleOutcome {
    delta: Vec3,
    events: u64,
    expected: f64,
}

impl BoltzmannSim {
    pub fn new(config: BoltzmannConfig) -> Result<Self> {
        config.validate()?;
        Ok(BoltzmannSim {
            truncation: Truncation::new(&config.kernel, config.theta_min)?,
            key: StreamKey::new(config.seed),
            config,
        })
    }

    fn phi(&self, r: f64) -> f64 {
        phi_floor(&self.config.kernel, self.config.v_floor, r)
    }

    fn angle(&self, z: f64, phi: f64) -> f64 {
        self.config.kernel.inverse(z / phi)
    }

    fn nanbu_particle(&self, v: &[Vec3], i: usize, step: u64, near: Option<(&NearGrid, f64)>) -> ParticleOutcome {
        let n = v.len();
        let cfg = &self.config;
        let tr = &self.truncation;
        let rate = TAU * tr.tail * cfg.dt;
        let mut rng = self.key.stream(Purpose::Events, step, i as u64);
        let mut delta = Vec3::ZERO;
        let mut events = 0;
        let mut expected = 0.0;
        let mut close = Vec::new();
        if let Some((grid, radius)) = near {
            grid.within(v, i, v[i], radius, &mut close);
        }
        let far_phi = near.map(|(_, r)| self.phi(r)).unwrap_or_else(|| self.phi(0.0));
        let weight = 1.0 / (n - 1) as f64;

        // close companions: exact Poisson count per pair
        for &j in &close {
            let x = v[i] - v[j];
            let p = self.phi(x.norm());
            let mean = rate * p * weight;
            expected += mean;
            for _ in 0..poisson(&mut rng, mean) {
                let z = rng.random::<f64>() * p * tr.tail;
                let ph = rng.random::<f64>() * TAU;
                delta += displacement(x, self.angle(z, p), ph);
                events += 1;
            }
        }
        // everyone else: majorant Φ(radius), uniform companion, thinning
        let far_mean = rate * far_phi;
        expected += far_mean;
        for _ in 0..poisson(&mut rng, far_mean) {
            let j = companion(&mut rng, i, n);
            let z = rng.random::<f64>() * far_phi * tr.tail;
            let ph = rng.random::<f64>() * TAU;
            if close.binary_search(&j).is_ok() {
                continue;
            }
            let x = v[i] - v[j];
            let p = self.phi(x.norm());
            if z < p * tr.tail {
                delta += displacement(x, self.angle(z, p), ph);
                events += 1;
            }
        }
        if tr.k_res > 0.0 {
            delta += cfg.dt * self.residual_mean(v, i, &close, step);
        }
        ParticleOutcome { delta, events, expected }
    }

    /// `-k_res · mean_j Φ(|v_i - v_j|)(v_i - v_j)`: exact over close
    /// companions, sampled over the rest.
    fn residual_mean(&self, v: &[Vec3], i: usize, close: &[usize], step: u64) -> Vec3 {
        let n = v.len();
        let m = self.config.drift_companions;
        let term = |j: usize| {
            let x = v[i] - v[j];
            self.phi(x.norm()) * x
        };
        let near_sum: Vec3 = close.iter().map(|&j| term(j)).sum();
        let rest = (n - 1 - close.len()) as f64;
        let mut far = Vec3::ZERO;
        if rest > 0.0 {
            let mut rng = self.key.stream(Purpose::Companions, step, i as u64);
            for _ in 0..m {
                let mut j = companion(&mut rng, i, n);
                while close.binary_search(&j).is_ok() {
                    j = companion(&mut rng, i, n);
                }
                far += term(j);
            }
            far = (rest / m as f64) * far;
        }
        (-self.truncation.k_res / (n - 1) as f64) * (near_sum + far)
    }

    fn step_nanbu(&self, cloud: &mut ParticleCloud) -> Result<u64> {
        let v = cloud.velocities.clone();
        let step = cloud.step;
        let mean_phi = mean_pair_phi(&self.config.kernel, self.config.v_floor, &v, &self.key, step);
        let radius = near_radius(&self.config.kernel, self.config.v_floor, mean_phi);
        let grid = radius.map(|r| NearGrid::new(&v, r));
        let near = grid.as_ref().zip(radius);
        let out: Vec<ParticleOutcome> = (0..v.len())
            .into_par_iter()
            .map(|i| self.nanbu_particle(&v, i, step, near))
            .collect();
        let worst = out.iter().map(|o| o.expected).fold(0.0, f64::max);
        if worst > self.config.rate_cap {
            return Err(Error::Stability {
                expected: worst,
                cap: self.config.rate_cap,
            });
        }
        let mut events = 0;
        for (x, o) in cloud.velocities.iter_mut().zip(out) {
            *x += o.delta;
            events += o.events;
        }
        Ok(events)
    }

    fn step_symmetric(&self, cloud: &mut ParticleCloud) -> Result<u64> {
        let step = cloud.step;
        let pairs = matching(&self.key, step, 0, cloud.len());
        let tr = self.truncation;
        let cfg = &self.config;
        let v = &cloud.velocities;
        let results: Vec<Result<(Vec3, Vec3, u64)>> = pairs
            .par_iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                let mut rng = self.key.stream(Purpose::Events, step, k as u64);
                let (mut a, mut b) = (v[i], v[j]);
                let p = self.phi((a - b).norm());
                let mean = TAU * tr.tail * p * cfg.dt;
                if mean > cfg.rate_cap {
                    return Err(Error::Stability {
                        expected: mean,
                        cap: cfg.rate_cap,
                    });
                }
                let count = poisson(&mut rng, mean);
                for _ in 0..count {
                    // |a - b| is invariant, so the angle law does not change between events
                    let u = 1.0 - rng.random::<f64>();
                    let theta = cfg.kernel.inverse(u * tr.tail);
                    let ph = rng.random::<f64>() * TAU;
                    (a, b, _) = deviate(a, b, theta, ph);
                }
                if tr.k_res > 0.0 {
                    // one collision carrying the mean and covariance of the truncated jumps
                    let c = 2.0 * tr.k_res * p * cfg.dt;
                    let theta = (1.0 - c.min(2.0)).acos();
                    let ph = rng.random::<f64>() * TAU;
                    (a, b, _) = deviate(a, b, theta, ph);
                }
                Ok((a, b, count))
            })
            .collect();
        let mut events = 0;
        for (&(i, j), r) in pairs.iter().zip(results) {
            let (a, b, c) = r?;
            cloud.velocities[i] = a;
            cloud.velocities[j] = b;
            events += c;
        }
        Ok(events)
    }

    /// Step size giving about `target` expected events per particle and step.
    pub fn suggest_dt(kernel: &AngularKernel, theta_min: f64, v_floor: f64, cloud: &ParticleCloud, target: f64) -> Result<f64> {
        let tr = Truncation::new(kernel, theta_min)?;
        let mean_phi = mean_pair_phi(kernel, v_floor, &cloud.velocities, &StreamKey::new(0), 0);
        let rate = TAU * tr.tail * mean_phi;
        Ok(if rate > 0.0 { target / rate } else { f64::INFINITY })
    }
}

impl Stepper for BoltzmannSim {
    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn step(&self, cloud: &mut ParticleCloud) -> Result<u64> {
        let events = match self.config.update_mode {
            UpdateMode::Nanbu => self.step_nanbu(cloud)?,
            UpdateMode::Symmetric => self.step_symmetric(cloud)?,
        };
        cloud.step += 1;
        cloud.time += self.config.dt;
        check_finite(cloud)?;
        Ok(events)
    }
}
