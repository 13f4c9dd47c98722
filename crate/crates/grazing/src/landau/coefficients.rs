use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub type Mat3 = [[f64; 3]; 3];

fn check(z: Vec3) -> Result<()> {
    if z == Vec3::ZERO {
        return Err(Error::DegenerateInput("Landau coefficient at z = 0".into()));
    }
    Ok(())
}

/// `σ(z) = |z|^{γ/2} [[z₂, -z₃, 0], [-z₁, 0, z₃], [0, z₁, -z₂]]`.
pub fn sigma_eval(gamma: f64, z: Vec3) -> Result<Mat3> {
    check(z)?;
    Ok(sigma_scaled(z, z.norm().powf(gamma / 2.0)))
}

pub(crate) fn sigma_scaled(z: Vec3, s: f64) -> Mat3 {
    [
        [s * z.y, -s * z.z, 0.0],
        [-s * z.x, 0.0, s * z.z],
        [0.0, s * z.x, -s * z.y],
    ]
}

/// `b(z) = -2 |z|^γ z`.
pub fn b_eval(gamma: f64, z: Vec3) -> Result<Vec3> {
    check(z)?;
    Ok((-2.0 * z.norm().powf(gamma)) * z)
}

/// `l(z) = |z|^γ (|z|² Id - z z*)`; zero at the origin.
pub fn l_eval(gamma: f64, z: Vec3) -> Mat3 {
    let n2 = z.norm2();
    if n2 == 0.0 {
        return [[0.0; 3]; 3];
    }
    let s = n2.sqrt().powf(gamma);
    let a = z.to_array();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = s * (if i == j { n2 } else { 0.0 } - a[i] * a[j]);
        }
    }
    m
}

/// `max(|z|, δ)^p`, the regularized power used inside `σ_δ` and `b_δ`.
pub fn floored_power(z: Vec3, delta: f64, p: f64) -> f64 {
    z.norm().max(delta).powf(p)
}

/// `σ_δ(z)`, with `|z|` replaced by `max(|z|, δ)` in the power.
pub fn sigma_reg(gamma: f64, delta: f64, z: Vec3) -> Mat3 {
    sigma_scaled(z, floored_power(z, delta, gamma / 2.0))
}

/// `b_δ(z)`.
pub fn b_reg(gamma: f64, delta: f64, z: Vec3) -> Vec3 {
    if z == Vec3::ZERO {
        return Vec3::ZERO;
    }
    (-2.0 * floored_power(z, delta, gamma)) * z
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

pub fn transpose_vec(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
        m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
        m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
    )
}

/// `σ σ*`.
pub fn outer(m: &Mat3) -> Mat3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| m[i][k] * m[j][k]).sum();
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_example() {
        let z = Vec3::new(1.0, 0.0, 0.0);
        let s = outer(&sigma_eval(-1.0, z).unwrap());
        let want = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s[i][j] - want[i][j]).abs() < 1e-14);
            }
        }
        assert_eq!(b_eval(-2.0, z).unwrap(), Vec3::new(-2.0, 0.0, 0.0));
        assert!(sigma_eval(-1.0, Vec3::ZERO).is_err());
    }
}
