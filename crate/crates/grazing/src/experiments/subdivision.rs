//! Time grids whose Riemann sums control the integral of a given function.

use rand::RngExt;
use serde::Serialize;

use crate::error::{param, Result};
use crate::rng::{Purpose, StreamKey};

/// Nodes `a₀ < … < a_K = T` with `a₀ < 1/n` and `1/(4n) < a_{i+1} - a_i < 1/n`.
#[derive(Debug, Clone, Serialize)]
pub struct Subdivision {
    pub nodes: Vec<f64>,
    pub n: usize,
    /// `h(a_i)` for every node but the last
    pub h_values: Vec<f64>,
}

/// Samples tried per cell when looking for a small value of `h`.
pub const SAMPLES_PER_CELL: usize = 32;

/// Node `a_i` is taken in `(i/(2n), (2i+1)/(4n))`, at the smallest of
/// [`SAMPLES_PER_CELL`] sampled values of `h`; the last node is `T`.
pub fn build_subdivision<H: Fn(f64) -> f64>(h: H, t_end: f64, n: usize, key: StreamKey) -> Result<Subdivision> {
    if !(t_end > 0.0) || n < 1 {
        return Err(param(format!("subdivision needs T > 0 and n ≥ 1, got T = {t_end}, n = {n}")));
    }
    let nf = n as f64;
    let cells = (2.0 * nf * t_end - 1.0).floor();
    if cells < 0.0 {
        return Err(param(format!("no node fits: need 2nT ≥ 1, got n = {n}, T = {t_end}")));
    }
    let mut rng = key.stream(Purpose::Control, 0, n as u64);
    let mut nodes = Vec::new();
    let mut h_values = Vec::new();
    for i in 0..=cells as usize {
        let lo = i as f64 / (2.0 * nf);
        let hi = (2 * i + 1) as f64 / (4.0 * nf);
        let mut best = (f64::INFINITY, 0.5 * (lo + hi));
        for _ in 0..SAMPLES_PER_CELL {
            // open interval: reject the endpoints
            let mut s = lo + (hi - lo) * rng.random::<f64>();
            if s <= lo || s >= hi {
                s = 0.5 * (lo + hi);
            }
            let v = h(s);
            if v < best.0 {
                best = (v, s);
            }
        }
        if !best.0.is_finite() {
            best.0 = h(best.1);
        }
        nodes.push(best.1);
        h_values.push(best.0);
    }
    nodes.push(t_end);
    Ok(Subdivision { nodes, n, h_values })
}

impl Subdivision {
    /// `Σ (a_{i+1} - a_i) h(a_i)`.
    pub fn riemann_sum(&self) -> f64 {
        self.nodes.windows(2).zip(&self.h_values).map(|(w, h)| (w[1] - w[0]) * h).sum()
    }

    /// Both spacing conditions, checked directly.
    pub fn is_valid(&self) -> bool {
        let n = self.n as f64;
        self.nodes[0] < 1.0 / n
            && self.nodes.windows(2).all(|w| {
                let d = w[1] - w[0];
                d > 1.0 / (4.0 * n) && d < 1.0 / n
            })
    }

    /// Index of the slab containing `t`.
    pub fn slab_of(&self, t: f64) -> usize {
        self.nodes.partition_point(|&a| a <= t)
    }
}
