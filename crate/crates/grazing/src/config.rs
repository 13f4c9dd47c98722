//! Experiment configuration: a flat, versioned TOML document.
//!
//! Every key is optional so that a file and command-line flags can be
//! layered; [`ExperimentConfig::merge`] lets the later layer win. Angles may
//! be written as numbers or as `pi`, `pi/k`, `a*pi` or `a*pi/k`; the literal
//! is kept as written, so a config serializes back to the same text.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boltzmann::{default_theta_min, default_v_floor, BoltzmannConfig, UpdateMode};
use crate::cloud::{sample_initial, InitialLaw, ParticleCloud};
use crate::error::{Error, Result};
use crate::experiments::{build_subdivision, default_resolution, default_truncation, CouplingPlan, SweepConfig, SweepFamily};
use crate::kernels::AngularKernel;
use crate::landau::{LandauConfig, Pairing};
use crate::rng::StreamKey;

/// The only format version understood by this crate.
pub const CONFIG_VERSION: u32 = 1;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// An angle (or any real) given as a number or a symbolic multiple of π.
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    value: f64,
    literal: Option<String>,
}

impl Angle {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Text as it appeared in the source, if it was symbolic.
    pub fn literal(&self) -> Option<&str> {
        self.literal.as_deref()
    }
}

impl From<f64> for Angle {
    fn from(value: f64) -> Self {
        Angle { value, literal: None }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.literal {
            Some(s) => f.write_str(s),
            None => write!(f, "{}", self.value),
        }
    }
}

fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.to_ascii_lowercase();
    let bad = || format!("cannot read {s:?} as a number or a multiple of pi");
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.as_str()),
    };
    let v = if let Some(at) = t.find("pi") {
        let coef = match &t[..at] {
            "" => 1.0,
            c => c.strip_suffix('*').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        let div = match &t[at + 2..] {
            "" => 1.0,
            d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        if div == 0.0 {
            return Err(format!("division by zero in {s:?}"));
        }
        coef * PI / div
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(if neg { -v } else { v })
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let value = parse_angle(s)?;
        let literal = s.trim().parse::<f64>().is_err().then(|| s.trim().to_string());
        Ok(Angle { value, literal })
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.literal {
            Some(l) => s.serialize_str(l),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Angle::from(i as f64)),
            Raw::Num(v) => Ok(Angle::from(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Soft,
    Grazing,
    Coulomb,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "soft" => Ok(Family::Soft),
            "grazing" => Ok(Family::Grazing),
            "coulomb" => Ok(Family::Coulomb),
            _ => Err(format!("unknown family {s:?}; expected soft, grazing or coulomb")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    Full,
    Subsampled,
    Conservative,
}

impl FromStr for PairingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(PairingMode::Full),
            "subsampled" => Ok(PairingMode::Subsampled),
            "conservative" => Ok(PairingMode::Conservative),
            _ => Err(format!("unknown pairing {s:?}; expected full, subsampled or conservative")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Gaussian,
    TwoTemperature,
    Ball,
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(InitialKind::Gaussian),
            "two-temperature" => Ok(InitialKind::TwoTemperature),
            "ball" => Ok(InitialKind::Ball),
            _ => Err(format!("unknown initial law {s:?}; expected gaussian, two-temperature or ball")),
        }
    }
}

/// Flat experiment description shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    // kernel
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Angle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_eps: Option<f64>,
    /// `h_ε / ε` in Coulomb sweeps
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_ratio: Option<f64>,
    // simulation
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_min: Option<Angle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub update_mode: Option<UpdateMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matchings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg_delta: Option<f64>,
    // initial law
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recenter: Option<bool>,
    // randomness and output
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// number of seeds in a sweep, counting up from `seed`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    // coupling and sweeps
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<Angle>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events_per_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compute_w2: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_matching: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanaka: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_companions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

/// Kernel parameters as they are echoed into artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Angle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_eps: Option<f64>,
}

impl ExperimentConfig {
    /// Parse TOML text. Errors carry the line and the offending field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        match cfg.version {
            Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(config_err(format!("unsupported config version {v}; expected {CONFIG_VERSION}"))),
            None => Err(config_err(format!("missing field `version` (expected version = {CONFIG_VERSION})"))),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Keys set in `top` replace those of `self`.
    pub fn merge(mut self, top: ExperimentConfig) -> Self {
        let base = &mut self;
        overlay!(base, top; version, family, gamma, nu, eps, h_eps, h_ratio, n, dt, t_end,
            theta_min, v_floor, update_mode, rate_cap, pairing, companions, matchings, reg_delta,
            initial, sigma2, sigma2_b, weight, radius, recenter, seed, seeds, snapshots,
            output_dir, eps_list, events_per_step, moment_p, compute_w2, gaussian_matching,
            tanaka, truncate, freeze, drift_companions, sample_count);
        self
    }

    fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
        v.clone().ok_or_else(|| config_err(format!("missing required key `{key}`")))
    }

    pub fn family(&self) -> Result<Family> {
        Self::need(&self.family, "family")
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let family = self.family()?;
        Ok(match family {
            Family::Coulomb => KernelSpec {
                family,
                gamma: None,
                nu: None,
                eps: self.eps.clone(),
                h_eps: self.h_eps.or_else(|| self.eps.as_ref().map(Angle::value)),
            },
            _ => KernelSpec {
                family,
                gamma: self.gamma,
                nu: self.nu,
                eps: if family == Family::Grazing { self.eps.clone() } else { None },
                h_eps: None,
            },
        })
    }

    /// Kernel at the configured `eps`.
    pub fn kernel(&self) -> Result<AngularKernel> {
        let eps = self.eps.as_ref().map(Angle::value);
        self.kernel_at(eps)
    }

    /// Kernel of the configured family at a given `ε`; `h_ε` defaults to `ε`.
    pub fn kernel_at(&self, eps: Option<f64>) -> Result<AngularKernel> {
        let eps_for = |f: &str| eps.ok_or_else(|| config_err(format!("family {f} needs `eps`")));
        match self.family()? {
            Family::Soft => AngularKernel::soft(Self::need(&self.gamma, "gamma")?, Self::need(&self.nu, "nu")?),
            Family::Grazing => AngularKernel::grazing(
                Self::need(&self.gamma, "gamma")?,
                Self::need(&self.nu, "nu")?,
                eps_for("grazing")?,
            ),
            Family::Coulomb => {
                let e = eps_for("coulomb")?;
                let h = match (self.h_eps, self.h_ratio) {
                    (Some(h), _) => h,
                    (None, Some(r)) => r * e,
                    (None, None) => e,
                };
                AngularKernel::coulomb(e, h)
            }
        }
    }

    pub fn initial_law(&self) -> Result<InitialLaw> {
        let sigma2 = self.sigma2.unwrap_or(1.0);
        Ok(match self.initial.unwrap_or(InitialKind::Gaussian) {
            InitialKind::Gaussian => InitialLaw::IsotropicGaussian { sigma2 },
            InitialKind::TwoTemperature => InitialLaw::TwoTemperature {
                sigma2_a: sigma2,
                sigma2_b: Self::need(&self.sigma2_b, "sigma2_b")?,
                weight: self.weight.unwrap_or(0.5),
            },
            InitialKind::Ball => InitialLaw::UniformBall {
                radius: Self::need(&self.radius, "radius")?,
            },
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn initial_cloud(&self) -> Result<ParticleCloud> {
        sample_initial(
            self.initial_law()?,
            Self::need(&self.n, "n")?,
            StreamKey::new(self.seed()),
            self.recenter.unwrap_or(true),
        )
    }

    /// Snapshot times `T k / snapshots`, `k = 0..=snapshots`.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        let t = Self::need(&self.t_end, "t_end")?;
        let k = self.snapshots.unwrap_or(5).max(1);
        Ok((0..=k).map(|i| t * i as f64 / k as f64).collect())
    }

    pub fn boltzmann(&self) -> Result<BoltzmannConfig> {
        let kernel = self.kernel()?;
        let m2 = self.initial_law()?.second_moment();
        let mut b = BoltzmannConfig::new(
            kernel,
            m2,
            Self::need(&self.dt, "dt")?,
            self.seed(),
            Self::need(&self.t_end, "t_end")?,
        );
        b.theta_min = self.theta_min.as_ref().map_or(default_theta_min(&kernel), Angle::value);
        b.v_floor = self.v_floor.unwrap_or(default_v_floor(&kernel, m2));
        b.update_mode = self.update_mode.unwrap_or(UpdateMode::Nanbu);
        if let Some(c) = self.rate_cap {
            b.rate_cap = c;
        }
        if let Some(c) = self.drift_companions {
            b.drift_companions = c;
        }
        b.validate()?;
        Ok(b)
    }

    pub fn landau(&self) -> Result<LandauConfig> {
        let gamma = match (self.family, self.gamma) {
            (Some(Family::Coulomb), _) => -3.0,
            (_, g) => Self::need(&g, "gamma")?,
        };
        let m2 = self.initial_law()?.second_moment();
        let pairing = match self.pairing.unwrap_or(PairingMode::Subsampled) {
            PairingMode::Full => Pairing::Full,
            PairingMode::Subsampled => Pairing::Subsampled {
                companions: self.companions.unwrap_or(64),
            },
            PairingMode::Conservative => Pairing::Conservative {
                matchings: self.matchings.unwrap_or(8),
            },
        };
        let l = LandauConfig {
            gamma,
            dt: Self::need(&self.dt, "dt")?,
            pairing,
            reg_delta: self.reg_delta.unwrap_or(LandauConfig::default_reg_delta(m2)),
            seed: self.seed(),
            t_end: Self::need(&self.t_end, "t_end")?,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn eps_values(&self) -> Result<Vec<f64>> {
        Ok(Self::need(&self.eps_list, "eps_list")?.iter().map(Angle::value).collect())
    }

    pub fn sweep_family(&self) -> Result<SweepFamily> {
        match self.family()? {
            Family::Grazing => Ok(SweepFamily::Grazing {
                gamma: Self::need(&self.gamma, "gamma")?,
                nu: Self::need(&self.nu, "nu")?,
            }),
            Family::Coulomb => Ok(SweepFamily::Coulomb {
                h_ratio: self.h_ratio.unwrap_or(1.0),
            }),
            Family::Soft => Err(config_err("rate sweeps need family grazing or coulomb")),
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        let base = self.seed();
        let count = self.seeds.unwrap_or(10);
        let mut cfg = SweepConfig::new(
            self.sweep_family()?,
            self.eps_values()?,
            (base..base + count as u64).collect(),
            Self::need(&self.n, "n")?,
            Self::need(&self.t_end, "t_end")?,
        );
        cfg.dt = self.dt;
        cfg.initial = self.initial_law()?;
        if let Some(v) = self.events_per_step {
            cfg.events_per_step = v;
        }
        if let Some(v) = self.moment_p {
            cfg.moment_p = v;
        }
        if let Some(v) = self.snapshots {
            cfg.snapshots = v;
        }
        if let Some(v) = self.compute_w2 {
            cfg.compute_w2 = v;
        }
        if let Some(v) = self.gaussian_matching {
            cfg.gaussian_matching = v;
        }
        if let Some(v) = self.tanaka {
            cfg.tanaka = v;
        }
        if let Some(v) = self.truncate {
            cfg.truncate = v;
        }
        if let Some(v) = self.drift_companions {
            cfg.drift_companions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Coupling plan with the defaults of a sweep job at the configured `eps`.
    pub fn coupling_plan(&self) -> Result<CouplingPlan> {
        let eps = Self::need(&self.eps, "eps")?.value();
        let t_end = Self::need(&self.t_end, "t_end")?;
        let p = self.moment_p.unwrap_or(5.0);
        let m2 = self.initial_law()?.second_moment();
        let grazing = self.family()? == Family::Grazing;
        let seed = self.seed();
        Ok(CouplingPlan {
            seed,
            subdivision: build_subdivision(|_| 0.0, t_end, default_resolution(eps, p, t_end), StreamKey::new(seed))?,
            gaussian_matching: self.gaussian_matching.unwrap_or(true),
            tanaka: self.tanaka.unwrap_or(true),
            truncation: self.truncate.unwrap_or(grazing).then(|| default_truncation(eps, p, m2)),
            freeze: self.freeze.unwrap_or(false),
        })
    }
}
