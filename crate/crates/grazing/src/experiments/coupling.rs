//! Boltzmann and Landau particle systems driven by shared randomness.
//!
//! Level (a) shares the companion streams: both systems run their own
//! dynamics from the same seed. Level (b) additionally drives the Landau
//! noise by the Boltzmann collision atoms. An atom `(j, z, φ)` moves the
//! Boltzmann particle by `c(V_ij, z, φ)` and the Landau particle by
//! `½ θ_Y Γ(Y_ij, φ + φ₀) / √r`, with `θ_Y = G(z / Φ_Y)` and `r` the share of
//! `∫θ²β` carried by simulated angles; the covariance per unit time is then
//! exactly `l(Y_ij)`. The drift `b̄` is applied explicitly.

use std::f64::consts::TAU;

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use super::subdivision::Subdivision;
use crate::boltzmann::{mean_pair_phi, near_radius, phi_floor, poisson, BoltzmannConfig, BoltzmannSim, NearGrid, Truncation};
use crate::cloud::ParticleCloud;
use crate::error::{param, Error, Result};
use crate::geometry::{displacement, gamma_vec, phi_zero, Vec3};
use crate::kernels::{r_eta, AngularKernel};
use crate::landau::{b_reg, check_finite, companion, gaussian3, mat_vec, sigma_reg, LandauConfig, LandauSim, Pairing};
use crate::metrics::{paired_l2, w2_exact, EXACT_GUARD};
use crate::rng::{Purpose, StreamKey};
use crate::trajectory::{steps_for, Stepper};

#[derive(Debug, Clone, Serialize)]
pub struct CouplingPlan {
    pub seed: u64,
    pub subdivision: Subdivision,
    /// level (b): Landau noise built from the Boltzmann atoms
    pub gaussian_matching: bool,
    /// rotate the Landau angle by `φ₀(V_ij, Y_ij)`
    pub tanaka: bool,
    /// companions with `|Y_j| ≥ M` at slab start get an independent angle
    pub truncation: Option<f64>,
    /// evaluate the Landau jump geometry at the slab start
    pub freeze: bool,
}

/// Subdivision resolution `n ≈ ε^{-2p/(2p+3)}`, at least `1/(2T)`.
pub fn default_resolution(eps: f64, p: f64, t_end: f64) -> usize {
    let n = eps.powf(-2.0 * p / (2.0 * p + 3.0)).ceil();
    n.max((0.5 / t_end).ceil()).max(1.0) as usize
}

/// Truncation level `M = √(2 m₂) ε^{-2/(2p+3)}`.
pub fn default_truncation(eps: f64, p: f64, m2: f64) -> f64 {
    (2.0 * m2).sqrt() * eps.powf(-2.0 / (2.0 * p + 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledSnapshot {
    pub t: f64,
    pub paired_l2: f64,
    pub w2: Option<f64>,
    pub m2_boltz: f64,
    pub m2_landau: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledTrajectory {
    pub snapshots: Vec<CoupledSnapshot>,
    pub boltzmann: ParticleCloud,
    pub landau: ParticleCloud,
    pub events: u64,
}

impl CoupledTrajectory {
    pub fn terminal(&self) -> &CoupledSnapshot {
        self.snapshots.last().expect("at least one snapshot")
    }

    pub fn sup_distance(&self) -> f64 {
        self.snapshots.iter().map(|s| s.paired_l2).fold(0.0, f64::max)
    }
}

/// Checks that the two configurations describe one experiment.
pub fn check_compatible(b: &BoltzmannConfig, l: &LandauConfig) -> Result<()> {
    b.validate()?;
    l.validate()?;
    if (b.dt - l.dt).abs() > 1e-15 * b.dt || (b.t_end - l.t_end).abs() > 1e-12 {
        return Err(param("Boltzmann and Landau configs must share dt and T"));
    }
    if (b.kernel.gamma() - l.gamma).abs() > 1e-12 {
        return Err(param(format!(
            "kernel gamma {} differs from Landau gamma {}",
            b.kernel.gamma(),
            l.gamma
        )));
    }
    Ok(())
}

struct Matched<'a> {
    kernel: AngularKernel,
    tr: Truncation,
    v_floor: f64,
    gamma: f64,
    delta: f64,
    /// largest Landau rate factor represented by atoms
    cap: f64,
    noise_scale: f64,
    dt: f64,
    companions: usize,
    rate_cap: f64,
    plan: &'a CouplingPlan,
    key: StreamKey,
}

struct Increment {
    dv: Vec3,
    dy: Vec3,
    events: u64,
    expected: f64,
}

impl Matched<'_> {
    fn phi_v(&self, r: f64) -> f64 {
        phi_floor(&self.kernel, self.v_floor, r)
    }

    fn phi_y_raw(&self, r: f64) -> f64 {
        r.max(self.delta).powf(self.gamma)
    }

    fn phi_y(&self, r: f64) -> f64 {
        self.phi_y_raw(r).min(self.cap)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_atom<R: rand::Rng>(
        &self,
        rng: &mut R,
        xv: Vec3,
        geo_y: Vec3,
        far_companion: bool,
        pv: f64,
        py: f64,
        z: f64,
        phi: f64,
        out: &mut Increment,
    ) {
        let tail = self.tr.tail;
        let mut hit = false;
        if z < pv * tail {
            out.dv += displacement(xv, self.kernel.inverse(z / pv), phi);
            hit = true;
        }
        if z < py * tail && geo_y != Vec3::ZERO {
            let theta = self.kernel.inverse(z / py);
            let ang = if far_companion {
                rng.random::<f64>() * TAU
            } else if self.plan.tanaka {
                phi + phi_zero(xv, geo_y).unwrap_or(0.0)
            } else {
                phi
            };
            if let Ok(g) = gamma_vec(geo_y, ang) {
                out.dy += (0.5 * theta * self.noise_scale) * g;
            }
            hit = true;
        }
        if hit {
            out.events += 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn particle(
        &self,
        v: &[Vec3],
        y: &[Vec3],
        y_slab: &[Vec3],
        i: usize,
        step: u64,
        grids: Option<(&NearGrid, &NearGrid, f64)>,
    ) -> Increment {
        let n = v.len();
        let w = 1.0 / (n - 1) as f64;
        let rate = TAU * self.tr.tail * self.dt;
        let mut rng = self.key.stream(Purpose::Events, step, i as u64);
        let mut dec = self.key.stream(Purpose::Decouple, step, i as u64);
        let mut out = Increment {
            dv: Vec3::ZERO,
            dy: Vec3::ZERO,
            events: 0,
            expected: 0.0,
        };
        let mut close = Vec::new();
        if let Some((gv, gy, radius)) = grids {
            let mut other = Vec::new();
            gv.within(v, i, v[i], radius, &mut close);
            gy.within(y, i, y[i], radius, &mut other);
            close.extend(other);
            close.sort_unstable();
            close.dedup();
        }
        let geo = |j: usize| if self.plan.freeze { y_slab[i] - y_slab[j] } else { y[i] - y[j] };
        let decoupled = |j: usize| self.plan.truncation.is_some_and(|m| y_slab[j].norm() >= m);

        for &j in &close {
            let (xv, xy) = (v[i] - v[j], y[i] - y[j]);
            let (pv, py) = (self.phi_v(xv.norm()), self.phi_y(xy.norm()));
            let pmaj = pv.max(py);
            let mean = rate * pmaj * w;
            out.expected += mean;
            for _ in 0..poisson(&mut rng, mean) {
                let z = rng.random::<f64>() * pmaj * self.tr.tail;
                let phi = rng.random::<f64>() * TAU;
                self.apply_atom(&mut dec, xv, geo(j), decoupled(j), pv, py, z, phi, &mut out);
            }
            // Landau covariance beyond the atom cap, as an independent Gaussian
            let raw = self.phi_y_raw(xy.norm());
            if raw > self.cap && xy != Vec3::ZERO {
                let share = 1.0 - self.cap / raw;
                let mut g = self.key.stream(Purpose::Gaussian, step, (i as u64) << 32 | j as u64);
                let s = sigma_reg(self.gamma, self.delta, xy);
                out.dy += (share * self.dt * w).sqrt() * mat_vec(&s, gaussian3(&mut g));
            }
        }
        let radius = grids.map(|g| g.2).unwrap_or(0.0);
        let pmaj = self.phi_v(radius).max(self.phi_y(radius));
        let far_mean = rate * pmaj;
        out.expected += far_mean;
        for _ in 0..poisson(&mut rng, far_mean) {
            let j = companion(&mut rng, i, n);
            let z = rng.random::<f64>() * pmaj * self.tr.tail;
            let phi = rng.random::<f64>() * TAU;
            if close.binary_search(&j).is_ok() {
                continue;
            }
            let (xv, xy) = (v[i] - v[j], y[i] - y[j]);
            let (pv, py) = (self.phi_v(xv.norm()), self.phi_y(xy.norm()));
            self.apply_atom(&mut dec, xv, geo(j), decoupled(j), pv, py, z, phi, &mut out);
        }

        // drifts: exact over close companions, sampled over the rest
        let drift_v = |j: usize| {
            let x = v[i] - v[j];
            (-self.tr.k_res * self.phi_v(x.norm())) * x
        };
        let drift_y = |j: usize| b_reg(self.gamma, self.delta, y[i] - y[j]);
        let mut sv: Vec3 = close.iter().map(|&j| drift_v(j)).sum();
        let mut sy: Vec3 = close.iter().map(|&j| drift_y(j)).sum();
        let rest = (n - 1 - close.len()) as f64;
        if rest > 0.0 {
            let mut pick = self.key.stream(Purpose::Companions, step, i as u64);
            let (mut fv, mut fy) = (Vec3::ZERO, Vec3::ZERO);
            for _ in 0..self.companions {
                let mut j = companion(&mut pick, i, n);
                while close.binary_search(&j).is_ok() {
                    j = companion(&mut pick, i, n);
                }
                fv += drift_v(j);
                fy += drift_y(j);
            }
            let f = rest / self.companions as f64;
            sv += f * fv;
            sy += f * fy;
        }
        out.dv += (self.dt * w) * sv;
        out.dy += (self.dt * w) * sy;
        out
    }

    fn step(&self, vc: &mut ParticleCloud, yc: &mut ParticleCloud, y_slab: &[Vec3]) -> Result<u64> {
        let step = vc.step;
        let v = vc.velocities.clone();
        let y = yc.velocities.clone();
        let mean_phi = mean_pair_phi(&self.kernel, self.v_floor, &v, &self.key, step);
        let radius = near_radius(&self.kernel, self.v_floor, mean_phi);
        let grids = radius.map(|r| (NearGrid::new(&v, r), NearGrid::new(&y, r), r));
        let g = grids.as_ref().map(|(a, b, r)| (a, b, *r));
        let out: Vec<Increment> = (0..v.len())
            .into_par_iter()
            .map(|i| self.particle(&v, &y, y_slab, i, step, g))
            .collect();
        let worst = out.iter().map(|o| o.expected).fold(0.0, f64::max);
        if worst > self.rate_cap {
            return Err(Error::Stability {
                expected: worst,
                cap: self.rate_cap,
            });
        }
        let mut events = 0;
        for (k, o) in out.into_iter().enumerate() {
            vc.velocities[k] += o.dv;
            yc.velocities[k] += o.dy;
            events += o.events;
        }
        for c in [&mut *vc, &mut *yc] {
            c.step += 1;
            c.time += self.dt;
            check_finite(c)?;
        }
        Ok(events)
    }
}

fn snapshot(v: &ParticleCloud, y: &ParticleCloud, with_w2: bool) -> Result<CoupledSnapshot> {
    let w2 = if with_w2 && v.len() <= EXACT_GUARD {
        Some(w2_exact(&v.velocities, &y.velocities)?)
    } else {
        None
    };
    Ok(CoupledSnapshot {
        t: v.time,
        paired_l2: paired_l2(&v.velocities, &y.velocities),
        w2,
        m2_boltz: v.moment(2.0),
        m2_landau: y.moment(2.0),
    })
}

/// Run both systems from the same initial cloud and record their distance.
pub fn coupled_run(
    boltz: &BoltzmannConfig,
    landau: &LandauConfig,
    plan: &CouplingPlan,
    initial: &ParticleCloud,
    schedule: &[f64],
    with_w2: bool,
) -> Result<CoupledTrajectory> {
    check_compatible(boltz, landau)?;
    let t_end = boltz.t_end;
    if schedule.iter().any(|&t| t < 0.0 || t > t_end + 1e-12) {
        return Err(param("snapshot times must lie in [0, T]"));
    }
    let dt = boltz.dt;
    let total = steps_for(t_end, dt);
    let mut marks: Vec<u64> = schedule.iter().map(|&t| steps_for(t, dt)).collect();
    marks.push(0);
    marks.push(total);
    marks.sort_unstable();
    marks.dedup();
    let slab_steps: Vec<u64> = plan.subdivision.nodes.iter().map(|&a| steps_for(a, dt)).collect();

    let mut v = initial.clone();
    let mut y = initial.clone();
    let mut snaps = Vec::new();
    let mut events = 0;
    let mut y_slab = y.velocities.clone();

    let key = StreamKey::new(plan.seed);
    let matched = if plan.gaussian_matching {
        let tr = Truncation::new(&boltz.kernel, boltz.theta_min)?;
        let carried = 1.0 - r_eta(&boltz.kernel, tr.theta)?;
        // atoms never represent a Landau rate above the Boltzmann one
        let cap = phi_floor(&boltz.kernel, boltz.v_floor, 0.0);
        Some(Matched {
            kernel: boltz.kernel,
            tr,
            v_floor: boltz.v_floor,
            gamma: landau.gamma,
            delta: landau.reg_delta,
            cap,
            noise_scale: 1.0 / carried.sqrt(),
            dt,
            companions: boltz.drift_companions,
            rate_cap: boltz.rate_cap,
            plan,
            key,
        })
    } else {
        None
    };
    let (bsim, lsim) = if matched.is_none() {
        let mut b = *boltz;
        b.seed = plan.seed;
        let mut l = *landau;
        l.seed = plan.seed;
        if !matches!(l.pairing, Pairing::Subsampled { .. }) {
            l.pairing = Pairing::Subsampled {
                companions: boltz.drift_companions,
            };
        }
        (Some(BoltzmannSim::new(b)?), Some(LandauSim::new(l)?))
    } else {
        (None, None)
    };

    let mut next = 0;
    loop {
        if marks.get(next) == Some(&v.step) {
            snaps.push(snapshot(&v, &y, with_w2)?);
            next += 1;
        }
        if v.step >= total {
            break;
        }
        if slab_steps.contains(&v.step) {
            y_slab.clone_from(&y.velocities);
        }
        events += match &matched {
            Some(m) => m.step(&mut v, &mut y, &y_slab)?,
            None => {
                let e = bsim.as_ref().expect("sim").step(&mut v)?;
                lsim.as_ref().expect("sim").step(&mut y)?;
                e
            }
        };
    }
    Ok(CoupledTrajectory {
        snapshots: snaps,
        boltzmann: v,
        landau: y,
        events,
    })
}
