//! Angular cross-sections, their tail integrals `H` and inverses `G`.
//!
//! Every kernel is normalized so that `∫₀^π θ² β(θ) dθ = 4/π`.
//!
//! * soft: `β(θ) = c_ν θ^{-1-ν}` on `(0, π]`
//! * grazing: `β_ε(θ) = (π/ε)³ β(πθ/ε)` on `(0, ε)`
//! * Coulomb: `β_ε(θ) = c_ε / log(1/ε) · cos(θ/2) / sin³(θ/2)` on `[ε, π/2]`
//!
//! `H(θ) = ∫_θ β` is decreasing and `G = H⁻¹` maps a jump coordinate `z ≥ 0`
//! to a deviation angle, with `G(z) = 0` past the end of a bounded support.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{param, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// `4/π`, the common value of `∫θ²β`.
pub const SECOND_MOMENT: f64 = 4.0 / PI;

/// Amplitude making `∫₀^π θ² c θ^{-1-ν} dθ = 4/π`.
pub fn soft_normalizer(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 2.0) {
        return Err(param(format!("nu must lie in (0,2), got {nu}")));
    }
    Ok(4.0 * (2.0 - nu) / PI.powf(3.0 - nu))
}

/// Closed-form normalizer of the Coulomb kernel; tends to `1/(2π)`.
pub fn coulomb_normalizer(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param(format!("Coulomb eps must lie in (0,1), got {eps}")));
    }
    let (s, c) = (eps / 2.0).sin_cos();
    let denom = eps * eps / (s * s) + 4.0 * eps * c / s + 8.0 * (1.0 / (SQRT_2 * s)).ln()
        - PI * PI / 2.0
        - 2.0 * PI;
    Ok(4.0 / PI * (1.0 / eps).ln() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoftKernel {
    pub gamma: f64,
    pub nu: f64,
    pub c_nu: f64,
}

impl SoftKernel {
    pub fn new(gamma: f64, nu: f64) -> Result<Self> {
        if !(gamma > -3.0 && gamma < 0.0) {
            return Err(param(format!("soft gamma must lie in (-3,0), got {gamma}")));
        }
        Ok(SoftKernel {
            gamma,
            nu,
            c_nu: soft_normalizer(nu)?,
        })
    }

    pub fn beta(&self, theta: f64) -> f64 {
        if theta <= 0.0 || theta > PI {
            return 0.0;
        }
        self.c_nu * theta.powf(-1.0 - self.nu)
    }

    pub fn tail(&self, theta: f64) -> f64 {
        if theta >= PI {
            return 0.0;
        }
        (self.c_nu / self.nu) * (theta.powf(-self.nu) - PI.powf(-self.nu))
    }

    pub fn inverse(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return PI;
        }
        (self.nu * z / self.c_nu + PI.powf(-self.nu)).powf(-1.0 / self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrazingKernel {
    pub base: SoftKernel,
    pub eps: f64,
}

impl GrazingKernel {
    pub fn new(gamma: f64, nu: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= PI) {
            return Err(param(format!("grazing eps must lie in (0,π], got {eps}")));
        }
        Ok(GrazingKernel {
            base: SoftKernel::new(gamma, nu)?,
            eps,
        })
    }

    fn scale(&self) -> f64 {
        PI / self.eps
    }

    pub fn beta(&self, theta: f64) -> f64 {
        if theta >= self.eps && self.eps < PI {
            return 0.0;
        }
        let s = self.scale();
        s * s * s * self.base.beta(s * theta)
    }

    pub fn tail(&self, theta: f64) -> f64 {
        if theta >= self.eps {
            return 0.0;
        }
        let s = self.scale();
        s * s * self.base.tail(s * theta)
    }

    pub fn inverse(&self, z: f64) -> f64 {
        let s = self.scale();
        self.base.inverse(z / (s * s)) / s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoulombKernel {
    pub eps: f64,
    pub h_eps: f64,
    pub c_eps: f64,
    log_inv_eps: f64,
}

impl CoulombKernel {
    pub fn new(eps: f64, h_eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&h_eps) {
            return Err(param(format!("h_eps must lie in [0,1), got {h_eps}")));
        }
        Ok(CoulombKernel {
            eps,
            h_eps,
            c_eps: coulomb_normalizer(eps)?,
            log_inv_eps: (1.0 / eps).ln(),
        })
    }

    fn amplitude(&self) -> f64 {
        self.c_eps / self.log_inv_eps
    }

    pub fn beta(&self, theta: f64) -> f64 {
        if theta < self.eps || theta > FRAC_PI_2 {
            return 0.0;
        }
        let (s, c) = (theta / 2.0).sin_cos();
        self.amplitude() * c / (s * s * s)
    }

    pub fn tail(&self, theta: f64) -> f64 {
        let t = theta.clamp(self.eps, FRAC_PI_2);
        let s = (t / 2.0).sin();
        (self.amplitude() * (1.0 / (s * s) - 2.0)).max(0.0)
    }

    pub fn inverse(&self, z: f64) -> f64 {
        if z < 0.0 {
            return FRAC_PI_2;
        }
        if z >= self.tail(self.eps) {
            return 0.0;
        }
        2.0 * (z / self.amplitude() + 2.0).sqrt().recip().asin()
    }
}

/// Any of the three kernel families together with its velocity factor `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AngularKernel {
    Soft(SoftKernel),
    Grazing(GrazingKernel),
    Coulomb(CoulombKernel),
}

impl AngularKernel {
    pub fn soft(gamma: f64, nu: f64) -> Result<Self> {
        Ok(AngularKernel::Soft(SoftKernel::new(gamma, nu)?))
    }

    pub fn grazing(gamma: f64, nu: f64, eps: f64) -> Result<Self> {
        Ok(AngularKernel::Grazing(GrazingKernel::new(gamma, nu, eps)?))
    }

    pub fn coulomb(eps: f64, h_eps: f64) -> Result<Self> {
        Ok(AngularKernel::Coulomb(CoulombKernel::new(eps, h_eps)?))
    }

    pub fn family(&self) -> &'static str {
        match self {
            AngularKernel::Soft(_) => "soft",
            AngularKernel::Grazing(_) => "grazing",
            AngularKernel::Coulomb(_) => "coulomb",
        }
    }

    /// Exponent of the velocity factor: `γ` for soft families, `-3` for Coulomb.
    pub fn gamma(&self) -> f64 {
        match self {
            AngularKernel::Soft(k) => k.gamma,
            AngularKernel::Grazing(k) => k.base.gamma,
            AngularKernel::Coulomb(_) => -3.0,
        }
    }

    pub fn beta(&self, theta: f64) -> f64 {
        match self {
            AngularKernel::Soft(k) => k.beta(theta),
            AngularKernel::Grazing(k) => k.beta(theta),
            AngularKernel::Coulomb(k) => k.beta(theta),
        }
    }

    /// `H(θ)`, the angular mass above `θ`.
    pub fn tail(&self, theta: f64) -> f64 {
        match self {
            AngularKernel::Soft(k) => k.tail(theta),
            AngularKernel::Grazing(k) => k.tail(theta),
            AngularKernel::Coulomb(k) => k.tail(theta),
        }
    }

    /// `G(z)`, the inverse of `H`.
    pub fn inverse(&self, z: f64) -> f64 {
        match self {
            AngularKernel::Soft(k) => k.inverse(z),
            AngularKernel::Grazing(k) => k.inverse(z),
            AngularKernel::Coulomb(k) => k.inverse(z),
        }
    }

    /// Angular support `[lo, hi]`; `lo = 0` means the kernel is non-integrable there.
    pub fn support(&self) -> (f64, f64) {
        match self {
            AngularKernel::Soft(_) => (0.0, PI),
            AngularKernel::Grazing(k) => (0.0, k.eps),
            AngularKernel::Coulomb(k) => (k.eps, FRAC_PI_2),
        }
    }

    /// Largest simulable jump coordinate: `H(lo)`, infinite for soft families.
    pub fn z_max(&self) -> f64 {
        match self {
            AngularKernel::Coulomb(k) => k.tail(k.eps),
            _ => f64::INFINITY,
        }
    }

    /// Velocity factor `Φ(r)`.
    pub fn phi(&self, r: f64) -> f64 {
        match self {
            AngularKernel::Soft(k) => r.powf(k.gamma),
            AngularKernel::Grazing(k) => r.powf(k.base.gamma),
            AngularKernel::Coulomb(k) => (r + k.h_eps).powi(-3),
        }
    }

    /// Same kernel with the velocity regularizer dropped (`Φ(r) = r⁻³` for Coulomb).
    pub fn unregularized(&self) -> Self {
        match *self {
            AngularKernel::Coulomb(k) => AngularKernel::Coulomb(CoulombKernel { h_eps: 0.0, ..k }),
            other => other,
        }
    }

    pub fn tail_inverse(&self) -> TailInverse {
        TailInverse {
            kernel: *self,
            z_max: self.z_max(),
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match self {
            AngularKernel::Grazing(k) if k.eps < PI => vec![k.eps],
            AngularKernel::Coulomb(k) => vec![k.eps, FRAC_PI_2],
            _ => vec![],
        }
    }

    /// `∫_lo^hi w(θ) β(θ) dθ` clipped to the support.
    pub fn angular_integral<F: Fn(f64) -> f64>(&self, w: F, lo: f64, hi: f64) -> Result<f64> {
        let (s0, s1) = self.support();
        let (a, b) = (lo.max(s0), hi.min(s1));
        if a >= b {
            return Ok(0.0);
        }
        let e = integrate(|t| w(t) * self.beta(t), a, b, &self.breaks(), Tolerance::new(1e-13, 1e-13))?;
        Ok(e.value)
    }
}

/// `H` and `G` bundled with the support bound of simulable jumps.
#[derive(Debug, Clone, Copy)]
pub struct TailInverse {
    pub kernel: AngularKernel,
    pub z_max: f64,
}

impl TailInverse {
    pub fn h(&self, theta: f64) -> f64 {
        self.kernel.tail(theta)
    }

    pub fn g(&self, z: f64) -> f64 {
        self.kernel.inverse(z)
    }
}

pub fn tail_inverse(kernel: &AngularKernel) -> TailInverse {
    kernel.tail_inverse()
}

/// `∫₀^π θ^p β(θ) dθ` by adaptive quadrature.
pub fn theta_moment(kernel: &AngularKernel, power: f64) -> Result<f64> {
    let nu = match kernel {
        AngularKernel::Soft(k) => Some(k.nu),
        AngularKernel::Grazing(k) => Some(k.base.nu),
        AngularKernel::Coulomb(_) => None,
    };
    match nu {
        Some(nu) if power <= nu => {
            return Err(param(format!("θ^{power} β is not integrable at 0 for nu = {nu}")))
        }
        None if power < 0.0 => return Err(param("negative moment power")),
        _ => {}
    }
    kernel.angular_integral(|t| t.powf(power), 0.0, PI)
}

/// `k = π ∫ (1 - cos θ) β(θ) dθ`.
pub fn k_constant(kernel: &AngularKernel) -> Result<f64> {
    k_residual(kernel, PI)
}

/// `π ∫₀^{θ_min} (1 - cos θ) β(θ) dθ`, the part of `k` carried by truncated jumps.
pub fn k_residual(kernel: &AngularKernel, theta_min: f64) -> Result<f64> {
    Ok(PI * kernel.angular_integral(one_minus_cos, 0.0, theta_min)?)
}

/// `r_η = (π/4) ∫₀^η θ² β(θ) dθ`.
pub fn r_eta(kernel: &AngularKernel, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= PI) {
        return Err(param(format!("eta must lie in (0,π], got {eta}")));
    }
    Ok(PI / 4.0 * kernel.angular_integral(|t| t * t, 0.0, eta)?)
}

/// `1 - cos θ` without cancellation for small angles.
pub fn one_minus_cos(t: f64) -> f64 {
    let s = (t / 2.0).sin();
    2.0 * s * s
}

/// `∫₀^∞ (G(z/x) - G(z/y))² dz` after the substitution `z = x H(θ)`.
pub fn pair_integral(kernel: &AngularKernel, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(param("pair integral needs x, y > 0"));
    }
    if x == y {
        return Ok(0.0);
    }
    let (lo, hi) = kernel.support();
    let hmax = kernel.tail(lo);
    let mut breaks = Vec::new();
    if hmax.is_finite() && x > y {
        breaks.push(kernel.inverse(y * hmax / x));
    }
    let f = |t: f64| {
        let d = t - kernel.inverse(x * kernel.tail(t) / y);
        d * d * x * kernel.beta(t)
    };
    let tol = Tolerance::new(1e-16, 1e-12);
    let mut total = integrate(f, lo, hi, &breaks, tol)?.value;
    if hmax.is_finite() && y > x {
        let top = kernel.inverse(x * hmax / y);
        total += y * integrate(|t| t * t * kernel.beta(t), lo, top, &[], tol)?.value;
    }
    Ok(total)
}

/// The same integral computed directly in `z`, used as an independent check.
pub fn pair_integral_direct(kernel: &AngularKernel, x: f64, y: f64) -> Result<f64> {
    let f = |z: f64| {
        let d = kernel.inverse(z / x) - kernel.inverse(z / y);
        d * d
    };
    let tol = Tolerance::new(1e-15, 1e-11);
    let hmax = kernel.z_max();
    if hmax.is_finite() {
        let (a, b) = (x.min(y) * hmax, x.max(y) * hmax);
        Ok(integrate(f, 0.0, b, &[a], tol)?.value)
    } else {
        Ok(integrate_to_infinity(f, 0.0, tol)?.value)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub eps_list: Vec<f64>,
    pub pairs: usize,
    /// max over pairs and ε of `|I_ε - I_π| / I_π`
    pub max_rel_diff: f64,
    /// range of `I_π / ((x-y)²/(x+y))` over the sample
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Check that the pair integral of the grazing family does not depend on ε.
pub fn verify_scaling_a4(gamma: f64, nu: f64, eps_list: &[f64], xy: &[(f64, f64)]) -> Result<ScalingReport> {
    let reference = AngularKernel::grazing(gamma, nu, PI)?;
    let kernels = eps_list
        .iter()
        .map(|&e| AngularKernel::grazing(gamma, nu, e))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = ScalingReport {
        eps_list: eps_list.to_vec(),
        pairs: xy.len(),
        max_rel_diff: 0.0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
    };
    for &(x, y) in xy {
        let base = pair_integral(&reference, x, y)?;
        if x != y {
            let ratio = base / ((x - y).powi(2) / (x + y));
            rep.min_ratio = rep.min_ratio.min(ratio);
            rep.max_ratio = rep.max_ratio.max(ratio);
        }
        for k in &kernels {
            let v = pair_integral(k, x, y)?;
            let d = if base == 0.0 { v.abs() } else { (v - base).abs() / base };
            rep.max_rel_diff = rep.max_rel_diff.max(d);
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoulombPairReport {
    pub eps: f64,
    pub sup_ratio: f64,
}

/// Empirical supremum of the Coulomb pair integral over
/// `(x-y)²/(x+y) + max(x,y)/log(1/ε) · log(max/min)`.
pub fn verify_a5(eps_list: &[f64], xy: &[(f64, f64)]) -> Result<Vec<CoulombPairReport>> {
    eps_list
        .iter()
        .map(|&eps| {
            let k = AngularKernel::coulomb(eps, 0.0)?;
            let l = (1.0 / eps).ln();
            let mut sup: f64 = 0.0;
            for &(x, y) in xy {
                if x == y {
                    continue;
                }
                let (mx, mn) = (x.max(y), x.min(y));
                let denom = (x - y).powi(2) / (x + y) + mx / l * (mx / mn).ln();
                sup = sup.max(pair_integral(&k, x, y)? / denom);
            }
            Ok(CoulombPairReport { eps, sup_ratio: sup })
        })
        .collect()
}
