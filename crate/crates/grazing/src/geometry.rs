//! Collision geometry: frames, post-collision velocities and jump maps.
//!
//! For a relative velocity `X = v - v*` the frame `(I(X), J(X))` spans the
//! plane orthogonal to `X`, both vectors of norm `|X|`, and
//! `Γ(X, φ) = cos φ I(X) + sin φ J(X)`. A collision with deviation `θ` moves
//!
//! ```text
//! v' = v - (1 - cos θ)/2 · X + sin θ/2 · Γ(X, φ)
//! ```
//!
//! and `v*'` by the opposite displacement.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{one_minus_cos, AngularKernel};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self * v.x, self * v.y, self * v.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        s * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl std::iter::Sum for Vec3 {
    fn sum<I: Iterator<Item = Vec3>>(iter: I) -> Vec3 {
        iter.fold(Vec3::ZERO, |a, b| a + b)
    }
}

/// Orthogonal pair spanning `X^⊥`, each of norm `|X|`.
///
/// `(X, I, J)` is always right-handed. `I` is odd in `X` and `J` is even, so
/// `Γ(-X, φ) = -Γ(X, -φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub i: Vec3,
    pub j: Vec3,
}

pub fn frame(x: Vec3) -> Result<Frame> {
    let n = x.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateInput(format!("frame of {x:?}")));
    }
    let u = x / n;
    let a = [u.x.abs(), u.y.abs(), u.z.abs()];
    let k = if a[0] <= a[1] && a[0] <= a[2] {
        0
    } else if a[1] <= a[2] {
        1
    } else {
        2
    };
    let mut e = Vec3::ZERO;
    match k {
        0 => e.x = 1.0,
        1 => e.y = 1.0,
        _ => e.z = 1.0,
    }
    let p = e - u.get(k) * u;
    let sign = if x.x != 0.0 {
        x.x.signum()
    } else if x.y != 0.0 {
        x.y.signum()
    } else {
        x.z.signum()
    };
    let i = (sign * n / p.norm()) * p;
    Ok(Frame { i, j: u.cross(i) })
}

/// `Γ(X, φ) = cos φ I(X) + sin φ J(X)`.
pub fn gamma_vec(x: Vec3, phi: f64) -> Result<Vec3> {
    let f = frame(x)?;
    let (s, c) = phi.sin_cos();
    Ok(c * f.i + s * f.j)
}

fn gamma_or_zero(x: Vec3, phi: f64) -> Vec3 {
    gamma_vec(x, phi).unwrap_or(Vec3::ZERO)
}

/// Post-collision velocities and the displacement `a = v' - v`.
pub fn deviate(v: Vec3, v_star: Vec3, theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let x = v - v_star;
    if x == Vec3::ZERO {
        return (v, v_star, Vec3::ZERO);
    }
    let a = displacement(x, theta, phi);
    (v + a, v_star - a, a)
}

/// `a(v, v*, θ, φ)` as a function of the relative velocity alone.
pub fn displacement(x: Vec3, theta: f64, phi: f64) -> Vec3 {
    if theta == 0.0 || x == Vec3::ZERO {
        return Vec3::ZERO;
    }
    -0.5 * one_minus_cos(theta) * x + (0.5 * theta.sin()) * gamma_or_zero(x, phi)
}

/// Rotation aligning the frame of `y` with the frame of `x`.
pub fn phi_zero(x: Vec3, y: Vec3) -> Result<f64> {
    let fx = frame(x)?;
    let fy = frame(y)?;
    let a = fx.i.dot(fy.i) + fx.j.dot(fy.j);
    let b = fx.i.dot(fy.j) - fx.j.dot(fy.i);
    let p = b.atan2(a);
    Ok(if p < 0.0 { p + TAU } else { p })
}

/// `c(v, v*, z, φ) = a(v, v*, G(z/Φ(|v-v*|)), φ)`.
pub fn jump_c(kernel: &AngularKernel, v: Vec3, v_star: Vec3, z: f64, phi: f64) -> Vec3 {
    let x = v - v_star;
    if x == Vec3::ZERO {
        return Vec3::ZERO;
    }
    let theta = kernel.inverse(z / kernel.phi(x.norm()));
    displacement(x, theta, phi)
}

/// `d(v, v*, z, φ) = ½ G(z/Φ) Γ(v - v*, φ)`, the linearized jump.
pub fn jump_d(kernel: &AngularKernel, v: Vec3, v_star: Vec3, z: f64, phi: f64) -> Vec3 {
    let x = v - v_star;
    if x == Vec3::ZERO {
        return Vec3::ZERO;
    }
    let theta = kernel.inverse(z / kernel.phi(x.norm()));
    (0.5 * theta) * gamma_or_zero(x, phi)
}

/// Drift standing in for the compensated jumps below `θ_min`: `-k_res Φ (v - v*)`.
pub fn compensator_drift(kernel: &AngularKernel, v: Vec3, v_star: Vec3, theta_min: f64) -> Result<Vec3> {
    let k_res = crate::kernels::k_residual(kernel, theta_min)?;
    Ok(residual_drift(kernel, k_res, v - v_star))
}

/// `-k_res Φ(|x|) x` with a precomputed `k_res`.
pub fn residual_drift(kernel: &AngularKernel, k_res: f64, x: Vec3) -> Vec3 {
    if k_res == 0.0 || x == Vec3::ZERO {
        return Vec3::ZERO;
    }
    (-k_res * kernel.phi(x.norm())) * x
}

/// Quadrature values of `∫₀^∞∫₀^{2π} |c|²` and `∫∫ |c - d|²` for one pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpMoments {
    pub c2: f64,
    pub cd2: f64,
}

fn z_integral<F: Fn(f64) -> f64>(f: F, z_max: f64, breaks: &[f64]) -> Result<f64> {
    let tol = crate::quadrature::Tolerance::new(1e-14, 1e-11);
    let e = if z_max.is_finite() {
        crate::quadrature::integrate(f, 0.0, z_max, breaks, tol)?
    } else {
        crate::quadrature::integrate_to_infinity(f, 0.0, tol)?
    };
    Ok(e.value)
}

fn phi_mean<F: Fn(f64) -> f64>(f: F, nodes: usize) -> f64 {
    (0..nodes).map(|i| f(TAU * i as f64 / nodes as f64)).sum::<f64>() / nodes as f64
}

/// Integrate `|c|²` and `|c - d|²` in `z` (adaptive) and `φ` (trapezoid).
pub fn jump_moments(kernel: &AngularKernel, v: Vec3, v_star: Vec3, phi_nodes: usize) -> Result<JumpMoments> {
    let x = v - v_star;
    if x == Vec3::ZERO {
        return Ok(JumpMoments { c2: 0.0, cd2: 0.0 });
    }
    let z_max = kernel.phi(x.norm()) * kernel.z_max();
    let c2 = z_integral(
        |z| TAU * phi_mean(|p| jump_c(kernel, v, v_star, z, p).norm2(), phi_nodes),
        z_max,
        &[],
    )?;
    let cd2 = z_integral(
        |z| {
            TAU * phi_mean(
                |p| (jump_c(kernel, v, v_star, z, p) - jump_d(kernel, v, v_star, z, p)).norm2(),
                phi_nodes,
            )
        },
        z_max,
        &[],
    )?;
    Ok(JumpMoments { c2, cd2 })
}

/// `∫∫ |c_h - c_0|²` between a regularized Coulomb kernel and its `h = 0` version.
pub fn regularization_gap(kernel: &AngularKernel, v: Vec3, v_star: Vec3, phi_nodes: usize) -> Result<f64> {
    let bare = kernel.unregularized();
    let x = v - v_star;
    if x == Vec3::ZERO {
        return Ok(0.0);
    }
    let r = x.norm();
    let (za, zb) = (kernel.phi(r) * kernel.z_max(), bare.phi(r) * bare.z_max());
    z_integral(
        |z| {
            TAU * phi_mean(
                |p| (jump_c(kernel, v, v_star, z, p) - jump_c(&bare, v, v_star, z, p)).norm2(),
                phi_nodes,
            )
        },
        za.max(zb),
        &[za.min(zb)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn frame_of_axis() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let f = frame(x).unwrap();
        assert!(f.i.dot(x).abs() < 1e-12 && f.j.dot(x).abs() < 1e-12);
        assert!(f.i.dot(f.j).abs() < 1e-12);
        assert!(close(f.i.norm(), 1.0, 1e-12) && close(f.j.norm(), 1.0, 1e-12));
        assert!(frame(Vec3::ZERO).is_err());
    }

    #[test]
    fn frame_scales_with_norm() {
        let f = frame(Vec3::new(3.0, 0.0, 4.0)).unwrap();
        assert!(close(f.i.norm(), 5.0, 1e-12) && close(f.j.norm(), 5.0, 1e-12));
    }

    #[test]
    fn deviate_extremes() {
        let v = Vec3::new(1.0, 2.0, -0.5);
        let w = Vec3::new(-0.3, 0.1, 0.7);
        let (a, b, _) = deviate(v, w, 0.0, 1.0);
        assert_eq!((a, b), (v, w));
        let (a, b, _) = deviate(v, w, std::f64::consts::PI, 1.0);
        assert!((a - w).norm() < 1e-15 && (b - v).norm() < 1e-15);
        let (a, b, d) = deviate(v, v, 1.0, 1.0);
        assert_eq!((a, b, d), (v, v, Vec3::ZERO));
    }

    #[test]
    fn phi_zero_of_equal_vectors() {
        let x = Vec3::new(0.3, -1.2, 0.8);
        assert_eq!(phi_zero(x, x).unwrap(), 0.0);
    }
}
