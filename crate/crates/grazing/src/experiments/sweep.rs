//! Sweeps over `ε` and rate fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coupling::{coupled_run, default_resolution, default_truncation, CouplingPlan};
use super::subdivision::build_subdivision;
use crate::boltzmann::{default_theta_min, BoltzmannConfig, BoltzmannSim};
use crate::cloud::{sample_initial, InitialLaw};
use crate::error::{param, Error, Result};
use crate::kernels::{r_eta, AngularKernel};
use crate::landau::{LandauConfig, Pairing};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SweepFamily {
    /// rescaled soft kernels `β_ε`
    Grazing { gamma: f64, nu: f64 },
    /// Coulomb kernels with `h_ε = h_ratio · ε`
    Coulomb { h_ratio: f64 },
}

impl SweepFamily {
    pub fn kernel(&self, eps: f64) -> Result<AngularKernel> {
        match *self {
            SweepFamily::Grazing { gamma, nu } => AngularKernel::grazing(gamma, nu, eps),
            SweepFamily::Coulomb { h_ratio } => AngularKernel::coulomb(eps, h_ratio * eps),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            SweepFamily::Grazing { gamma, .. } => gamma,
            SweepFamily::Coulomb { .. } => -3.0,
        }
    }

    /// Abscissa of the rate fit: `log ε`, or `log(1/log(1/ε))` for Coulomb.
    pub fn abscissa(&self, eps: f64) -> f64 {
        match self {
            SweepFamily::Grazing { .. } => eps.ln(),
            SweepFamily::Coulomb { .. } => (1.0 / (1.0 / eps).ln()).ln(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: SweepFamily,
    pub eps_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n: usize,
    pub t_end: f64,
    /// fixed step; by default the step giving `events_per_step` at the smallest `ε`
    pub dt: Option<f64>,
    pub events_per_step: f64,
    pub initial: InitialLaw,
    /// moment order of the initial data used for the plan defaults
    pub moment_p: f64,
    pub snapshots: usize,
    pub compute_w2: bool,
    pub gaussian_matching: bool,
    pub tanaka: bool,
    pub truncate: bool,
    pub drift_companions: usize,
}

impl SweepConfig {
    pub fn new(family: SweepFamily, eps_list: Vec<f64>, seeds: Vec<u64>, n: usize, t_end: f64) -> Self {
        SweepConfig {
            truncate: matches!(family, SweepFamily::Grazing { .. }),
            family,
            eps_list,
            seeds,
            n,
            t_end,
            dt: None,
            events_per_step: 5.0,
            initial: InitialLaw::IsotropicGaussian { sigma2: 1.0 },
            moment_p: 5.0,
            snapshots: 5,
            compute_w2: false,
            gaussian_matching: true,
            tanaka: true,
            drift_companions: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.len() < 4 {
            return Err(param(format!("eps_list needs at least 4 values, got {}", self.eps_list.len())));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(param("eps_list must be strictly decreasing"));
        }
        if self.seeds.len() < 10 {
            return Err(param(format!("a sweep needs at least 10 seeds, got {}", self.seeds.len())));
        }
        if self.n < 2 || !(self.t_end > 0.0) || self.snapshots == 0 {
            return Err(param("sweep needs N ≥ 2, T > 0 and at least one snapshot"));
        }
        Ok(())
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub seed: u64,
    pub t: f64,
    pub paired_l2: f64,
    pub w2: Option<f64>,
    pub m2_boltz: f64,
    pub m2_landau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsSummary {
    pub eps: f64,
    /// terminal distance, mean over seeds
    pub mean: f64,
    pub stderr: f64,
    /// `sup_t` distance, mean over seeds
    pub sup_mean: f64,
    pub events: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Decreasing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub family: SweepFamily,
    pub eps_list: Vec<f64>,
    pub dt: f64,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<EpsSummary>,
    pub fit: RateFit,
    /// `p/(2p+3)` for the configured moment order
    pub proven_exponent: f64,
    pub conjectured_exponent: f64,
    pub strictly_decreasing: bool,
    pub non_increasing_within_errors: bool,
    pub verdict: Verdict,
}

/// Least squares `y ≈ intercept + slope·x`, with the usual slope standard error.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<RateFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(param("a fit needs at least two points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Slope of `log d` against the family abscissa.
pub fn fit_rate(family: &SweepFamily, eps: &[f64], distances: &[f64]) -> Result<RateFit> {
    if distances.iter().any(|&d| !(d > 0.0)) {
        return Err(param("distances must be positive to fit a rate"));
    }
    let x: Vec<f64> = eps.iter().map(|&e| family.abscissa(e)).collect();
    let y: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    fit_line(&x, &y)
}

/// `(mean, stderr)` of the seed-paired differences `d_k - d_{k+1}`.
fn paired_gap(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Monotonicity flags and verdict from per-seed terminal distances,
/// `per_eps[k][s]` for the `k`-th `ε` and `s`-th seed.
pub fn judge(per_eps: &[Vec<f64>]) -> (bool, bool, Verdict) {
    let means: Vec<f64> = per_eps.iter().map(|d| d.iter().sum::<f64>() / d.len() as f64).collect();
    let strictly = means.windows(2).all(|w| w[1] < w[0]);
    let within = per_eps.windows(2).all(|w| {
        let (m, se) = paired_gap(&w[0], &w[1]);
        m >= -2.0 * se
    });
    let (m, se) = paired_gap(&per_eps[0], &per_eps[per_eps.len() - 1]);
    let verdict = if within && m > 2.0 * se {
        Verdict::Decreasing
    } else {
        Verdict::Inconclusive
    };
    (strictly, within, verdict)
}

/// Kernel facts the grazing analysis relies on at `η = ε`.
pub fn check_grazing_support(kernel: &AngularKernel, eps: f64) -> Result<()> {
    let r = r_eta(kernel, eps)?;
    let outside = kernel.angular_integral(|t| t * t, eps, PI)?;
    if (r - 1.0).abs() > 1e-8 || outside.abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "grazing kernel at eps = {eps}: r_eta = {r}, mass beyond eps = {outside}"
        )));
    }
    Ok(())
}

/// Common step for the whole sweep: the smallest suggested by any `ε`.
pub fn sweep_dt(cfg: &SweepConfig) -> Result<f64> {
    if let Some(dt) = cfg.dt {
        return Ok(dt);
    }
    let probe = sample_initial(cfg.initial, cfg.n.min(2048), StreamKey::new(0), true)?;
    let m2 = cfg.initial.second_moment();
    let mut dt = cfg.t_end / 10.0;
    for &eps in &cfg.eps_list {
        let k = cfg.family.kernel(eps)?;
        let v_floor = crate::boltzmann::default_v_floor(&k, m2);
        dt = dt.min(BoltzmannSim::suggest_dt(&k, default_theta_min(&k), v_floor, &probe, cfg.events_per_step)?);
    }
    // an integer number of steps
    let steps = (cfg.t_end / dt).ceil();
    Ok(cfg.t_end / steps)
}

/// Configurations and plan for one `(ε, seed)` job.
pub fn job(cfg: &SweepConfig, eps: f64, seed: u64, dt: f64) -> Result<(BoltzmannConfig, LandauConfig, CouplingPlan)> {
    let kernel = cfg.family.kernel(eps)?;
    if let SweepFamily::Grazing { .. } = cfg.family {
        check_grazing_support(&kernel, eps)?;
    }
    let m2 = cfg.initial.second_moment();
    let mut b = BoltzmannConfig::new(kernel, m2, dt, seed, cfg.t_end);
    b.drift_companions = cfg.drift_companions;
    let l = LandauConfig {
        gamma: cfg.family.gamma(),
        dt,
        pairing: Pairing::Subsampled {
            companions: cfg.drift_companions,
        },
        reg_delta: LandauConfig::default_reg_delta(m2),
        seed,
        t_end: cfg.t_end,
    };
    let n = default_resolution(eps, cfg.moment_p, cfg.t_end);
    let plan = CouplingPlan {
        seed,
        subdivision: build_subdivision(|_| 0.0, cfg.t_end, n, StreamKey::new(seed))?,
        gaussian_matching: cfg.gaussian_matching,
        tanaka: cfg.tanaka,
        truncation: cfg.truncate.then(|| default_truncation(eps, cfg.moment_p, m2)),
        freeze: false,
    };
    Ok((b, l, plan))
}

pub fn rate_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let dt = sweep_dt(cfg)?;
    let schedule: Vec<f64> = (1..=cfg.snapshots).map(|k| cfg.t_end * k as f64 / cfg.snapshots as f64).collect();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut terminal = Vec::new();
    for &eps in &cfg.eps_list {
        let mut finals = Vec::new();
        let mut sups = Vec::new();
        let mut events = 0;
        for &seed in &cfg.seeds {
            let (b, l, plan) = job(cfg, eps, seed, dt)?;
            let init = sample_initial(cfg.initial, cfg.n, StreamKey::new(seed), true)?;
            let traj = coupled_run(&b, &l, &plan, &init, &schedule, cfg.compute_w2)?;
            for s in &traj.snapshots {
                rows.push(SweepRow {
                    eps,
                    seed,
                    t: s.t,
                    paired_l2: s.paired_l2,
                    w2: s.w2,
                    m2_boltz: s.m2_boltz,
                    m2_landau: s.m2_landau,
                });
            }
            finals.push(traj.terminal().paired_l2);
            sups.push(traj.sup_distance());
            events += traj.events;
        }
        let k = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / k;
        let var = finals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
        summary.push(EpsSummary {
            eps,
            mean,
            stderr: (var / k).sqrt(),
            sup_mean: sups.iter().sum::<f64>() / k,
            events,
        });
        terminal.push(finals);
    }
    let means: Vec<f64> = summary.iter().map(|s| s.mean).collect();
    let fit = fit_rate(&cfg.family, &cfg.eps_list, &means)?;
    let (strictly_decreasing, non_increasing_within_errors, verdict) = judge(&terminal);
    let p = cfg.moment_p;
    Ok(SweepReport {
        family: cfg.family,
        eps_list: cfg.eps_list.clone(),
        dt,
        rows,
        summary,
        fit,
        proven_exponent: p / (2.0 * p + 3.0),
        conjectured_exponent: 1.0,
        strictly_decreasing,
        non_increasing_within_errors,
        verdict,
    })
}
