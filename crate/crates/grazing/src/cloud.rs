//! Particle clouds: N velocity samples standing in for a law on ℝ³.

use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::geometry::Vec3;
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub velocities: Vec<Vec3>,
    pub time: f64,
    /// number of completed steps, used to address random streams
    pub step: u64,
}

impl ParticleCloud {
    pub fn new(velocities: Vec<Vec3>) -> Result<Self> {
        if velocities.len() < 2 {
            return Err(param("a cloud needs at least two particles"));
        }
        if velocities.iter().any(|v| !v.is_finite()) {
            return Err(param("non-finite velocity in cloud"));
        }
        Ok(ParticleCloud {
            velocities,
            time: 0.0,
            step: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn momentum(&self) -> Vec3 {
        self.velocities.iter().copied().sum()
    }

    pub fn energy(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm2()).sum()
    }

    /// Empirical `m_p = mean |v|^p`.
    pub fn moment(&self, p: f64) -> f64 {
        let n = self.len() as f64;
        if p == 2.0 {
            return self.energy() / n;
        }
        self.velocities.iter().map(|v| v.norm().powf(p)).sum::<f64>() / n
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Subtract the mean velocity. The last particle absorbs the rounding,
    /// so the momentum is exactly zero afterwards.
    pub fn recenter(&mut self) {
        let mean = self.momentum() / self.len() as f64;
        for v in &mut self.velocities {
            *v -= mean;
        }
        let n = self.len();
        let rest: Vec3 = self.velocities[..n - 1].iter().copied().sum();
        self.velocities[n - 1] = -rest;
    }
}

/// Initial laws for the simulators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialLaw {
    /// `N(0, σ² Id)`
    IsotropicGaussian { sigma2: f64 },
    /// `w N(0, σ₁² Id) + (1-w) N(0, σ₂² Id)`
    TwoTemperature { sigma2_a: f64, sigma2_b: f64, weight: f64 },
    /// uniform on the ball of radius `radius`
    UniformBall { radius: f64 },
}

impl InitialLaw {
    /// `m₂` of the law.
    pub fn second_moment(&self) -> f64 {
        match *self {
            InitialLaw::IsotropicGaussian { sigma2 } => 3.0 * sigma2,
            InitialLaw::TwoTemperature {
                sigma2_a,
                sigma2_b,
                weight,
            } => 3.0 * (weight * sigma2_a + (1.0 - weight) * sigma2_b),
            InitialLaw::UniformBall { radius } => 0.6 * radius * radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialLaw::IsotropicGaussian { sigma2 } => sigma2 > 0.0,
            InitialLaw::TwoTemperature {
                sigma2_a,
                sigma2_b,
                weight,
            } => sigma2_a > 0.0 && sigma2_b > 0.0 && (0.0..=1.0).contains(&weight),
            InitialLaw::UniformBall { radius } => radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(param(format!("invalid initial law {self:?}")))
        }
    }
}

fn normal3<R: rand::Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Draw `n` independent velocities; particle `i` uses its own stream.
pub fn sample_initial(law: InitialLaw, n: usize, key: StreamKey, recenter: bool) -> Result<ParticleCloud> {
    law.validate()?;
    let velocities = (0..n)
        .map(|i| {
            let mut rng = key.stream(Purpose::Initial, 0, i as u64);
            match law {
                InitialLaw::IsotropicGaussian { sigma2 } => sigma2.sqrt() * normal3(&mut rng),
                InitialLaw::TwoTemperature {
                    sigma2_a,
                    sigma2_b,
                    weight,
                } => {
                    let s2 = if rng.random::<f64>() < weight { sigma2_a } else { sigma2_b };
                    s2.sqrt() * normal3(&mut rng)
                }
                InitialLaw::UniformBall { radius } => {
                    let d = normal3(&mut rng);
                    let r = radius * rng.random::<f64>().cbrt();
                    (r / d.norm()) * d
                }
            }
        })
        .collect();
    let mut cloud = ParticleCloud::new(velocities)?;
    if recenter {
        cloud.recenter();
    }
    Ok(cloud)
}
