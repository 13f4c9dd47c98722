use std::f64::consts::{PI, TAU};

use grazing::geometry::*;
use grazing::kernels::{k_constant, one_minus_cos, theta_moment, AngularKernel};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #[test]
    fn frame_is_orthogonal(x in vec3()) {
        prop_assume!(x.norm() > 1e-6);
        let f = frame(x).unwrap();
        let n2 = x.norm2();
        prop_assert!(f.i.dot(x).abs() <= 1e-12 * n2);
        prop_assert!(f.j.dot(x).abs() <= 1e-12 * n2);
        prop_assert!(f.i.dot(f.j).abs() <= 1e-12 * n2);
        prop_assert!((f.i.norm2() - n2).abs() <= 1e-12 * n2);
        prop_assert!((f.j.norm2() - n2).abs() <= 1e-12 * n2);
        // right-handed: I × J = |X| X
        prop_assert!((f.i.cross(f.j) - x.norm() * x).norm() <= 1e-12 * n2 * x.norm());
    }

    #[test]
    fn frame_parity_is_exact(x in vec3()) {
        prop_assume!(x != Vec3::ZERO);
        let f = frame(x).unwrap();
        let g = frame(-x).unwrap();
        prop_assert_eq!(g.i, -f.i);
        prop_assert_eq!(g.j, f.j);
        prop_assert_eq!(frame(x).unwrap(), f);
    }

    #[test]
    fn gamma_is_orthogonal(x in vec3(), phi in 0.0f64..TAU) {
        prop_assume!(x.norm() > 1e-6);
        let g = gamma_vec(x, phi).unwrap();
        prop_assert!(g.dot(x).abs() <= 1e-12 * x.norm2());
        prop_assert!((g.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        prop_assert_eq!(gamma_vec(x, 0.0).unwrap(), frame(x).unwrap().i);
        let h = gamma_vec(-x, phi).unwrap();
        prop_assert!((h + gamma_vec(x, -phi).unwrap()).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn deviate_conserves(v in vec3(), w in vec3(), theta in 0.0f64..PI, phi in 0.0f64..TAU) {
        let (vp, wp, a) = deviate(v, w, theta, phi);
        let p = v + w;
        let e = v.norm2() + w.norm2();
        prop_assert!((vp + wp - p).norm() <= 1e-12 * e.sqrt().max(1.0));
        prop_assert!((vp.norm2() + wp.norm2() - e).abs() <= 1e-12 * e.max(1.0));
        let want = one_minus_cos(theta) / 2.0 * (v - w).norm2();
        prop_assert!((a.norm2() - want).abs() <= 1e-12 * (v - w).norm2().max(1e-300));
    }

    #[test]
    fn tanaka_shift_is_deterministic(x in vec3(), y in vec3()) {
        prop_assume!(x.norm() > 1e-9 && y.norm() > 1e-9);
        let p = phi_zero(x, y).unwrap();
        prop_assert!((0.0..TAU).contains(&p));
        prop_assert_eq!(p.to_bits(), phi_zero(x, y).unwrap().to_bits());
    }
}

#[test]
fn gamma_mean_vanishes() {
    let x = Vec3::new(0.4, -2.0, 1.1);
    let n = 10_000;
    let s: Vec3 = (0..n).map(|i| gamma_vec(x, TAU * i as f64 / n as f64).unwrap()).sum();
    assert!((s / n as f64).norm() < 1e-10 * x.norm());
}

#[test]
fn angular_second_moment() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    for _ in 0..20 {
        let x = normal3(&mut rng);
        let mut m = [[0.0; 3]; 3];
        for k in 0..n {
            let g = gamma_vec(x, TAU * k as f64 / n as f64).unwrap().to_array();
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += g[i] * g[j] * TAU / n as f64;
                }
            }
        }
        let xa = x.to_array();
        for i in 0..3 {
            for j in 0..3 {
                let want = PI * (if i == j { x.norm2() } else { 0.0 } - xa[i] * xa[j]);
                assert!((m[i][j] - want).abs() <= 1e-8 * x.norm2() * PI);
            }
        }
    }
}

#[test]
fn tanaka_bound_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20_000 {
        let x = normal3(&mut rng);
        let y = if rng.random::<f64>() < 0.5 { normal3(&mut rng) } else { x + 0.01 * normal3(&mut rng) };
        let p0 = phi_zero(x, y).unwrap();
        for k in 0..32 {
            let phi = TAU * k as f64 / 32.0;
            let d = (gamma_vec(x, phi).unwrap() - gamma_vec(y, phi + p0).unwrap()).norm();
            worst = worst.max(d / (x - y).norm());
        }
    }
    assert!(worst <= 3.0, "{worst}");
}

#[test]
fn tanaka_opposite_vectors() {
    let x = Vec3::new(1.0, -0.5, 2.0);
    let p0 = phi_zero(x, -x).unwrap();
    for k in 0..32 {
        let phi = TAU * k as f64 / 32.0;
        let d = (gamma_vec(x, phi).unwrap() - gamma_vec(-x, phi + p0).unwrap()).norm();
        assert!(d <= 2.0 * x.norm() + 1e-12);
    }
}

#[test]
fn jumps_vanish_on_equal_velocities() {
    let k = AngularKernel::grazing(-0.5, 0.6, PI / 4.0).unwrap();
    let v = Vec3::new(1.0, 2.0, 3.0);
    assert_eq!(jump_c(&k, v, v, 0.3, 1.0), Vec3::ZERO);
    assert_eq!(jump_d(&k, v, v, 0.3, 1.0), Vec3::ZERO);
    assert_eq!(compensator_drift(&k, v, v, 0.01).unwrap(), Vec3::ZERO);
}

#[test]
fn coulomb_jump_beyond_support_is_zero() {
    let k = AngularKernel::coulomb(0.1, 0.1).unwrap();
    let v = Vec3::new(1.0, 0.0, 0.0);
    let w = Vec3::new(0.0, 0.5, 0.0);
    let zcut = k.phi((v - w).norm()) * k.z_max();
    assert_eq!(jump_c(&k, v, w, zcut * 1.001, 0.4), Vec3::ZERO);
    assert_ne!(jump_c(&k, v, w, zcut * 0.999, 0.4), Vec3::ZERO);
}

#[test]
fn compensator_limits() {
    let g = AngularKernel::grazing(-0.5, 0.6, PI / 8.0).unwrap();
    let v = Vec3::new(0.3, 1.0, -1.0);
    let w = Vec3::new(-0.2, 0.1, 0.4);
    let x = v - w;
    let full = (-k_constant(&g).unwrap() * g.phi(x.norm())) * x;
    assert!((compensator_drift(&g, v, w, PI / 8.0).unwrap() - full).norm() < 1e-12);
    assert!((compensator_drift(&g, v, w, PI).unwrap() - full).norm() < 1e-12);
    assert!(compensator_drift(&g, v, w, 1e-12).unwrap().norm() < 1e-9);
}

#[test]
fn jump_second_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kernels = [
        AngularKernel::soft(-0.5, 0.6).unwrap(),
        AngularKernel::grazing(-1.5, 1.2, PI / 8.0).unwrap(),
        AngularKernel::coulomb(0.1, 0.0).unwrap(),
    ];
    for k in kernels {
        let kk = k_constant(&k).unwrap();
        let m4 = theta_moment(&k, 4.0).unwrap();
        for _ in 0..4 {
            let (v, w) = (normal3(&mut rng), normal3(&mut rng));
            let r = (v - w).norm();
            let m = jump_moments(&k, v, w, 8).unwrap();
            let want = kk * k.phi(r) * r * r;
            assert!((m.c2 - want).abs() < 1e-6 * want, "{k:?}: {} vs {want}", m.c2);
            assert!(m.cd2 <= m4 * k.phi(r) * r * r);
        }
    }
}

#[test]
fn coulomb_regularization_gap_scales_with_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs: Vec<_> = (0..5).map(|_| (normal3(&mut rng), normal3(&mut rng))).collect();
    let mut sup: f64 = 0.0;
    for h in [1e-1, 1e-2, 1e-3] {
        let k = AngularKernel::coulomb(0.1, h).unwrap();
        for &(v, w) in &pairs {
            let r = (v - w).norm();
            let gap = regularization_gap(&k, v, w, 8).unwrap();
            sup = sup.max(gap / (h / (r * r)));
        }
    }
    assert!(sup.is_finite() && sup < 50.0, "{sup}");
}
