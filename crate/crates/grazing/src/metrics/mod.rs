//! Distances and functionals of particle clouds.

mod assignment;
mod knn;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::geometry::Vec3;
use crate::landau::l_eval;

pub use assignment::solve as solve_assignment;
pub use knn::kth_neighbor_distances;

/// Largest cloud accepted by [`w2_exact`].
pub const EXACT_GUARD: usize = 4096;

/// `W₂` between two equal-size empirical measures, by optimal assignment.
pub fn w2_exact(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(param(format!("cloud sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() > EXACT_GUARD {
        return Err(param(format!(
            "{} particles exceed the exact solver guard {EXACT_GUARD}; use w2_entropic",
            a.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let perm = assignment::solve(a.len(), |i, j| (a[i] - b[j]).norm2());
    let total: f64 = perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm2()).sum();
    Ok((total / a.len() as f64).sqrt())
}

/// `√(mean_i |a_i - b_i|²)`, the distance of the index coupling.
pub fn paired_l2(a: &[Vec3], b: &[Vec3]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (*x - *y).norm2()).sum();
    (s / a.len().max(1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropicEstimate {
    /// `√` of the debiased Sinkhorn divergence
    pub value: f64,
    /// largest marginal violation of the three solves
    pub residual: f64,
    pub converged: bool,
}

fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Entropic OT value `⟨f, a⟩ + ⟨g, b⟩` with uniform weights, log-domain
/// Sinkhorn with regularization annealed down to `reg`.
fn sinkhorn_dual(x: &[Vec3], y: &[Vec3], reg: f64, iters: usize) -> (f64, f64) {
    let (n, m) = (x.len(), y.len());
    let cost: Vec<f64> = x.iter().flat_map(|p| y.iter().map(move |q| (*p - *q).norm2())).collect();
    let (la, lb) = (-(n as f64).ln(), -(m as f64).ln());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let scale = cost.iter().cloned().fold(0.0, f64::max).max(reg);
    let mut eps = scale;
    let mut residual = f64::INFINITY;
    loop {
        let last = eps <= reg;
        let budget = if last { iters } else { 50 };
        for it in 0..budget {
            let g_new: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|j| -eps * logsumexp((0..n).map(|i| la + (f[i] - cost[i * m + j]) / eps)))
                .collect();
            g = g_new;
            let f_new: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| -eps * logsumexp((0..m).map(|j| lb + (g[j] - cost[i * m + j]) / eps)))
                .collect();
            f = f_new;
            if it % 10 != 9 && it + 1 != budget {
                continue;
            }
            // column marginal error after the row update
            residual = (0..m)
                .into_par_iter()
                .map(|j| {
                    let s: f64 = (0..n).map(|i| (la + lb + (f[i] + g[j] - cost[i * m + j]) / eps).exp()).sum();
                    (s - 1.0 / m as f64).abs()
                })
                .sum();
            if last && residual < 1e-7 {
                break;
            }
        }
        if last {
            break;
        }
        eps = (eps * 0.5).max(reg);
    }
    let value = f.iter().sum::<f64>() / n as f64 + g.iter().sum::<f64>() / m as f64;
    (value, residual)
}

/// Debiased Sinkhorn divergence `S = OT(a,b) - ½OT(a,a) - ½OT(b,b)`, reported as `√S`.
pub fn w2_entropic(a: &[Vec3], b: &[Vec3], reg: f64, iters: usize) -> Result<EntropicEstimate> {
    if !(reg > 0.0) {
        return Err(param("entropic regularization must be positive"));
    }
    if a.is_empty() || b.is_empty() {
        return Err(param("empty cloud"));
    }
    let (ab, r1) = sinkhorn_dual(a, b, reg, iters);
    let (aa, r2) = sinkhorn_dual(a, a, reg, iters);
    let (bb, r3) = sinkhorn_dual(b, b, reg, iters);
    let residual = r1.max(r2).max(r3);
    let s = ab - 0.5 * (aa + bb);
    Ok(EntropicEstimate {
        value: s.max(0.0).sqrt(),
        residual,
        converged: residual < 1e-6,
    })
}

/// Kozachenko–Leonenko estimate of `H(f) = ∫ f log f` (minus the
/// differential entropy) from the `k`-th neighbor distances.
pub fn entropy_knn(points: &[Vec3], k: usize) -> Result<f64> {
    let n = points.len();
    if n < k + 1 {
        return Err(param(format!("entropy estimator needs more than k = {k} points, got {n}")));
    }
    let d = knn::kth_neighbor_distances(points, k);
    if d.iter().any(|&r| r == 0.0) {
        return Err(Error::DegenerateInput("coincident points in entropy estimate".into()));
    }
    // ψ(n) - ψ(k) = Σ_{j=k}^{n-1} 1/j
    let digamma_gap: f64 = (k..n).map(|j| 1.0 / j as f64).sum();
    let log_ball = (4.0 * std::f64::consts::PI / 3.0).ln();
    let mean_log: f64 = d.iter().map(|r| r.ln()).sum::<f64>() / n as f64;
    Ok(-(digamma_gap + log_ball + 3.0 * mean_log))
}

/// `max_i mean_{j≠i} |v_i - v_j|^α`, the empirical singular moment.
pub fn j_alpha(points: &[Vec3], alpha: f64) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    if alpha == 0.0 {
        return 1.0;
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let s: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (points[i] - points[j]).norm().powf(alpha))
                .sum();
            s / (n - 1) as f64
        })
        .reduce(|| 0.0, f64::max)
}

/// `min` over the grids of `ξ·l̄(v)ξ / (1+|v|)^γ`, with `l̄(v)` the cloud mean of `l(v - v*)`.
pub fn ellipticity_certificate(points: &[Vec3], gamma: f64, v_grid: &[Vec3], xi_grid: &[Vec3]) -> Result<f64> {
    if v_grid.is_empty() || xi_grid.is_empty() || points.is_empty() {
        return Err(param("ellipticity grids and cloud must be nonempty"));
    }
    let n = points.len() as f64;
    let mins: Vec<f64> = v_grid
        .par_iter()
        .map(|&v| {
            let mut lbar = [[0.0; 3]; 3];
            for &w in points {
                let l = l_eval(gamma, v - w);
                for i in 0..3 {
                    for j in 0..3 {
                        lbar[i][j] += l[i][j] / n;
                    }
                }
            }
            let weight = (1.0 + v.norm()).powf(gamma);
            xi_grid
                .iter()
                .map(|&xi| {
                    let xi = xi / xi.norm();
                    let lx = crate::landau::mat_vec(&lbar, xi);
                    xi.dot(lx) / weight
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min).max(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub moments: Vec<(f64, f64)>,
    pub entropy: f64,
    pub alpha: f64,
    pub j_alpha: f64,
}

/// Moments `m_p`, the kNN entropy (`k = 4`) and `J_α` of a cloud.
pub fn functionals(points: &[Vec3], p_list: &[f64], alpha: f64) -> Result<FunctionalReport> {
    if !(alpha > -3.0 && alpha <= 0.0) {
        return Err(param(format!("alpha must lie in (-3,0], got {alpha}")));
    }
    let n = points.len() as f64;
    let moments = p_list
        .iter()
        .map(|&p| (p, points.iter().map(|v| v.norm().powf(p)).sum::<f64>() / n))
        .collect();
    Ok(FunctionalReport {
        moments,
        entropy: entropy_knn(points, 4)?,
        alpha,
        j_alpha: j_alpha(points, alpha),
    })
}
