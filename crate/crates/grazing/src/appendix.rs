//! Numerical checks of two auxiliary tools: a Grönwall-type lemma for
//! `ρ' ≤ γ ψ(ρ)` and the distance between a compensated Poisson integral and
//! the Gaussian with the same covariance.

use rand::RngExt;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::geometry::Vec3;
use crate::landau::Mat3;
use crate::metrics::w2_exact;
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{Purpose, StreamKey};

/// `ψ(x) = x (1 - 1_{x≤1} log x)`.
pub fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 1.0 {
        x * (1.0 - x.ln())
    } else {
        x
    }
}

/// `x (1 - log x)` below `1/2`, `x log 2 + 1/2` above.
pub fn psi_tilde(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 0.5 {
        x * (1.0 - x.ln())
    } else {
        x * std::f64::consts::LN_2 + 0.5
    }
}

/// `F` with `F' = 1/ψ`, normalized by `F(1) = 0`.
fn psi_primitive(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x <= 1.0 {
        -(1.0 - x.ln()).ln()
    } else {
        x.ln()
    }
}

fn psi_primitive_inv(y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        0.0
    } else if y <= 0.0 {
        (1.0 - (-y).exp()).exp()
    } else {
        y.exp()
    }
}

/// Envelope constant `C(K) = e^K e^{e^K - 1} + e^{1 - e^{-K}}`, the largest of
/// the constants met when `ρ` stays below 1, crosses 1, or starts above it.
pub fn envelope_constant(k: f64) -> f64 {
    k.exp() * (k.exp() - 1.0).exp() + (1.0 - (-k).exp()).exp()
}

/// Nonnegative rate `γ(t)`, given with the points where it may jump.
pub struct Rate<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub breaks: &'a [f64],
}

impl Rate<'_> {
    /// Pieces of `[0, T]` on which `γ` is smooth.
    fn pieces(&self, t_end: f64) -> Vec<(f64, f64)> {
        let mut pts = vec![0.0];
        pts.extend(self.breaks.iter().copied().filter(|&b| b > 0.0 && b < t_end));
        pts.push(t_end);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// `γ` restricted to the open piece, continued to its endpoints.
    fn on(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let pad = 1e-13 * (hi - lo);
        (self.f)(t.clamp(lo + pad, hi - pad))
    }
}

fn rk4_piece(rate: &Rate, lo: f64, hi: f64, mut rho: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let rhs = |t: f64, r: f64| rate.on(t, lo, hi) * psi(r.max(0.0));
    for k in 0..steps {
        let t = lo + k as f64 * h;
        let k1 = rhs(t, rho);
        let k2 = rhs(t + h / 2.0, rho + h / 2.0 * k1);
        let k3 = rhs(t + h / 2.0, rho + h / 2.0 * k2);
        let k4 = rhs(t + h, rho + h * k3);
        rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    rho
}

/// Dormand–Prince 5(4) with step control on one smooth piece.
fn dopri_piece(rate: &Rate, lo: f64, hi: f64, mut rho: f64, tol: f64) -> Result<f64> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let rhs = |t: f64, r: f64| rate.on(t, lo, hi) * psi(r.max(0.0));
    let mut t = lo;
    let mut h = (hi - lo) / 100.0;
    let mut count = 0;
    while t < hi {
        h = h.min(hi - t);
        let mut k = [0.0; 7];
        for s in 0..7 {
            let y = rho + h * (0..s).map(|m| A[s][m] * k[m]).sum::<f64>();
            k[s] = rhs(t + C[s] * h, y);
        }
        let y5 = rho + h * (0..7).map(|s| B5[s] * k[s]).sum::<f64>();
        let y4 = rho + h * (0..7).map(|s| B4[s] * k[s]).sum::<f64>();
        let err = (y5 - y4).abs() / (tol * y5.abs().max(rho.abs()) + 1e-300);
        if err <= 1.0 {
            t += h;
            rho = y5;
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        count += 1;
        if count > 10_000_000 || !rho.is_finite() {
            return Err(Error::Numerical("adaptive integrator did not finish".into()));
        }
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GronwallReport {
    pub a: f64,
    /// `K = ∫₀^T γ`
    pub k: f64,
    pub rho_rk4: f64,
    pub rho_adaptive: f64,
    pub rho_exact: f64,
    pub envelope: f64,
    /// relative gap between the two integrators
    pub agreement: f64,
    pub pass: bool,
}

/// Integrate the saturated dynamics `ρ' = γ ψ(ρ)`, `ρ(0) = a`, and compare
/// `ρ(T)` with `C(K)(a^{e^{-K}} + a)`.
pub fn gronwall_bound_check(a: f64, rate: &Rate, t_end: f64, samples: usize) -> Result<GronwallReport> {
    if !(a >= 0.0) || !(t_end > 0.0) || samples == 0 {
        return Err(param("need a ≥ 0, T > 0 and at least one step"));
    }
    let pieces = rate.pieces(t_end);
    let mut k = 0.0;
    for &(lo, hi) in &pieces {
        let q = integrate(|t| rate.on(t, lo, hi), lo, hi, &[], Tolerance::new(1e-13, 1e-13))
            .map_err(|e| param(format!("rate is not integrable on [{lo}, {hi}]: {e}")))?;
        k += q.value;
        for m in 0..=16 {
            let g = rate.on(lo + (hi - lo) * m as f64 / 16.0, lo, hi);
            if !(g >= 0.0) || !g.is_finite() {
                return Err(param(format!("rate must be finite and nonnegative, got {g}")));
            }
        }
    }
    let per_piece = samples.div_ceil(pieces.len());
    let mut rk = a;
    let mut ad = a;
    for &(lo, hi) in &pieces {
        rk = rk4_piece(rate, lo, hi, rk, per_piece);
        ad = dopri_piece(rate, lo, hi, ad, 5e-13)?;
    }
    let exact = psi_primitive_inv(psi_primitive(a) + k);
    let envelope = envelope_constant(k) * (a.powf((-k).exp()) + a);
    let agreement = (rk - ad).abs() / ad.abs().max(1e-300);
    Ok(GronwallReport {
        a,
        k,
        rho_rk4: rk,
        rho_adaptive: ad,
        rho_exact: exact,
        envelope,
        agreement: if a == 0.0 { (rk - ad).abs() } else { agreement },
        pass: rk <= envelope && ad <= envelope,
    })
}

/// Atoms `(h_j, w_j)` of a compensated Poisson integral at time `t`.
#[derive(Debug, Clone, Serialize)]
pub struct PoissonIntegralSpec {
    pub atoms: Vec<(Vec3, f64)>,
    pub t: f64,
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations; columns of the
/// returned matrix are the eigenvectors.
pub fn symmetric_eigen(m: &Mat3) -> ([f64; 3], Mat3) {
    let mut a = *m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-300 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// `Σ_j w_j h_j h_j*`.
pub fn covariance(atoms: &[(Vec3, f64)]) -> Mat3 {
    let mut g = [[0.0; 3]; 3];
    for (h, w) in atoms {
        let h = h.to_array();
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += w * h[i] * h[j];
            }
        }
    }
    g
}

/// `(κ, |Γ|, Γ^{1/2})`; rejects a singular `Γ`.
pub fn spec_constants(spec: &PoissonIntegralSpec) -> Result<(f64, f64, Mat3)> {
    if spec.atoms.iter().any(|(h, w)| !(*w >= 0.0) || !h.is_finite()) {
        return Err(param("atom weights must be nonnegative and jumps finite"));
    }
    let g = covariance(&spec.atoms);
    let (vals, vecs) = symmetric_eigen(&g);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    if vals.iter().any(|&l| !(l > 1e-12 * top.max(1e-300))) || top == 0.0 {
        return Err(param(format!("Γ is singular (eigenvalues {vals:?}); the atoms must span R³")));
    }
    let root = |f: &dyn Fn(f64) -> f64| {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| vecs[i][k] * f(vals[k]) * vecs[j][k]).sum();
            }
        }
        r
    };
    let inv_half = root(&|l| 1.0 / l.sqrt());
    let half = root(&|l| l.sqrt());
    let kappa = spec
        .atoms
        .iter()
        .map(|(h, _)| crate::landau::mat_vec(&inv_half, *h).norm())
        .fold(0.0, f64::max);
    Ok((kappa, top, half))
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonGaussianReport {
    pub t: f64,
    pub kappa: f64,
    pub gamma_norm: f64,
    /// empirical `W₂²` between the Poisson and Gaussian samples
    pub w2_sq: f64,
    /// `W₂² / (κ²|Γ| max(1, log(t/κ²))²)`
    pub ratio: f64,
    /// same quantities for two independent Gaussian samples
    pub control_w2_sq: f64,
    pub control_ratio: f64,
    pub sample_mean: Vec3,
    pub sample_cov: Mat3,
}

fn normal3<R: rand::Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Sample `Z_t = Σ_j (N_j - t w_j) h_j` and `N(0, tΓ)` and compare them.
pub fn poisson_gaussian_w2(spec: &PoissonIntegralSpec, sample_count: usize, key: StreamKey) -> Result<PoissonGaussianReport> {
    if sample_count < 1000 {
        return Err(param(format!("sample_count must be at least 1000, got {sample_count}")));
    }
    if !(spec.t > 0.0) {
        return Err(param("t must be positive"));
    }
    let t = spec.t;
    if spec.atoms.iter().all(|(h, _)| *h == Vec3::ZERO) {
        // both laws are the point mass at 0
        return Ok(PoissonGaussianReport {
            t,
            kappa: 0.0,
            gamma_norm: 0.0,
            w2_sq: 0.0,
            ratio: 0.0,
            control_w2_sq: 0.0,
            control_ratio: 0.0,
            sample_mean: Vec3::ZERO,
            sample_cov: [[0.0; 3]; 3],
        });
    }
    let (kappa, gamma_norm, half) = spec_constants(spec)?;
    let poisson: Vec<Vec3> = (0..sample_count)
        .into_par_iter()
        .map(|s| {
            let mut rng = key.stream(Purpose::Appendix, 0, s as u64);
            spec.atoms
                .iter()
                .map(|(h, w)| {
                    let mean = t * w;
                    let n = if mean > 0.0 {
                        Poisson::new(mean).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    (n - mean) * *h
                })
                .sum()
        })
        .collect();
    let gaussian = |purpose: Purpose| -> Vec<Vec3> {
        (0..sample_count)
            .into_par_iter()
            .map(|s| {
                let mut rng = key.stream(purpose, 1, s as u64);
                t.sqrt() * crate::landau::mat_vec(&half, normal3(&mut rng))
            })
            .collect()
    };
    let g1 = gaussian(Purpose::Appendix);
    let g2 = gaussian(Purpose::Control);
    let n = sample_count as f64;
    let mean: Vec3 = poisson.iter().copied().sum::<Vec3>() / n;
    let mut cov = [[0.0; 3]; 3];
    for z in &poisson {
        let d = (*z - mean).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j] / (n - 1.0);
            }
        }
    }
    let scale = kappa * kappa * gamma_norm * (t / (kappa * kappa)).ln().max(1.0).powi(2);
    let w2_sq = w2_exact(&poisson, &g1)?.powi(2);
    let control_w2_sq = w2_exact(&g2, &g1)?.powi(2);
    Ok(PoissonGaussianReport {
        t,
        kappa,
        gamma_norm,
        w2_sq,
        ratio: w2_sq / scale,
        control_w2_sq,
        control_ratio: control_w2_sq / scale,
        sample_mean: mean,
        sample_cov: cov,
    })
}

/// Unit atoms along the three axes, unit weights.
pub fn orthogonal_atoms(t: f64) -> PoissonIntegralSpec {
    PoissonIntegralSpec {
        atoms: vec![
            (Vec3::new(1.0, 0.0, 0.0), 1.0),
            (Vec3::new(0.0, 1.0, 0.0), 1.0),
            (Vec3::new(0.0, 0.0, 1.0), 1.0),
        ],
        t,
    }
}
