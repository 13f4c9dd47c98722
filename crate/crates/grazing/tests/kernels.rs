use std::f64::consts::{FRAC_PI_2, PI};

use grazing::kernels::*;
use proptest::prelude::*;

const FOUR_OVER_PI: f64 = 4.0 / PI;

fn families() -> Vec<AngularKernel> {
    let mut v = Vec::new();
    for nu in [0.3, 0.6, 1.0, 1.2, 1.8] {
        v.push(AngularKernel::soft(-1.0, nu).unwrap());
    }
    for eps in [PI, PI / 2.0, PI / 8.0, PI / 32.0] {
        v.push(AngularKernel::grazing(-0.5, 0.6, eps).unwrap());
    }
    for eps in [0.3, 0.1, 0.01, 1e-3] {
        v.push(AngularKernel::coulomb(eps, eps).unwrap());
    }
    v
}

#[test]
fn second_moment_is_four_over_pi() {
    for k in families() {
        let m = theta_moment(&k, 2.0).unwrap();
        assert!((m - FOUR_OVER_PI).abs() < 1e-8, "{k:?}: {m}");
    }
}

#[test]
fn soft_moments_match_closed_form() {
    // ∫₀^π θ^p c θ^{-1-ν} dθ = c π^{p-ν}/(p-ν)
    for nu in [0.3, 0.6, 1.2] {
        let k = AngularKernel::soft(-0.5, nu).unwrap();
        let c = soft_normalizer(nu).unwrap();
        for p in [1.5, 2.0, 3.0, 4.0] {
            let exact = c * PI.powf(p - nu) / (p - nu);
            let q = theta_moment(&k, p).unwrap();
            assert!((q - exact).abs() < 1e-9 * exact, "nu={nu} p={p}");
        }
    }
}

#[test]
fn coulomb_normalizer_against_second_integrator() {
    for eps in [0.3, 0.1, 0.01] {
        let c = coulomb_normalizer(eps).unwrap();
        let l = (1.0 / eps).ln();
        let f = |t: f64| t * t * (t / 2.0).cos() / (t / 2.0).sin().powi(3);
        let raw = quadrature::double_exponential::integrate(f, eps, FRAC_PI_2, 1e-13).integral;
        assert!((c / l * raw - FOUR_OVER_PI).abs() < 1e-8, "eps={eps}");
    }
}

#[test]
fn coulomb_normalizer_limit() {
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4, 1e-6] {
        let gap = (2.0 * PI * coulomb_normalizer(eps).unwrap() - 1.0).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!((2.0 * PI * coulomb_normalizer(1e-4).unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn inverse_round_trip_on_grid() {
    for k in families() {
        let (lo, hi) = k.support();
        for i in 0..1000 {
            let s = (i as f64 + 0.5) / 1000.0;
            let t = lo + (hi - lo) * s;
            let back = k.inverse(k.tail(t));
            assert!((back - t).abs() <= 1e-10 * t, "{k:?} θ={t} got {back}");
        }
    }
}

#[test]
fn coulomb_inverse_shape() {
    let k = AngularKernel::coulomb(0.05, 0.05).unwrap();
    let zmax = k.z_max();
    let mut prev = FRAC_PI_2;
    for i in 0..=2000 {
        let z = 1.2 * zmax * i as f64 / 2000.0;
        let g = k.inverse(z);
        assert!((0.0..=FRAC_PI_2).contains(&g));
        assert!(g <= prev);
        prev = g;
        if z > zmax {
            assert_eq!(g, 0.0);
        }
    }
}

#[test]
fn fourth_moments() {
    for eps in [PI / 2.0, PI / 8.0, PI / 32.0] {
        let k = AngularKernel::grazing(-0.5, 0.6, eps).unwrap();
        assert!(theta_moment(&k, 4.0).unwrap() <= eps * eps * FOUR_OVER_PI);
    }
    let mut prev = f64::INFINITY;
    let mut scaled = Vec::new();
    for eps in [0.1, 0.01, 0.001] {
        let k = AngularKernel::coulomb(eps, eps).unwrap();
        let m4 = theta_moment(&k, 4.0).unwrap();
        assert!(m4 < prev);
        prev = m4;
        scaled.push(m4 * (1.0 / eps).ln());
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 2.0, "{scaled:?}");
}

#[test]
fn k_constant_bounds() {
    for k in families() {
        let kk = k_constant(&k).unwrap();
        let m4 = theta_moment(&k, 4.0).unwrap();
        assert!(kk > 0.0 && kk <= 2.0, "{k:?}: {kk}");
        assert!((kk - 2.0).abs() <= PI / 24.0 * m4, "{k:?}");
    }
    let mut prev = 0.0;
    for eps in [PI / 2.0, PI / 8.0, PI / 32.0, PI / 128.0] {
        let kk = k_constant(&AngularKernel::grazing(-0.5, 0.6, eps).unwrap()).unwrap();
        assert!(kk > prev);
        prev = kk;
    }
    assert!((prev - 2.0).abs() < 1e-3);
}

#[test]
fn residual_constant_limits() {
    let g = AngularKernel::grazing(-0.5, 0.6, PI / 8.0).unwrap();
    let full = k_constant(&g).unwrap();
    assert!((k_residual(&g, PI / 8.0).unwrap() - full).abs() < 1e-12);
    assert!(k_residual(&g, 1e-12).unwrap() < 1e-10);
    // closed form: π c_ε' ∫₀^t θ² /2 θ^{-1-ν} ≈ small-angle leading term
    let k = k_residual(&g, 1e-4).unwrap();
    let GrazingKernel { base, eps } = match g {
        AngularKernel::Grazing(k) => k,
        _ => unreachable!(),
    };
    let s = PI / eps;
    let lead = PI * s.powi(3) * base.c_nu * s.powf(-1.0 - base.nu) * 0.5 * 1e-4f64.powf(2.0 - base.nu)
        / (2.0 - base.nu);
    assert!((k - lead).abs() < 1e-6 * lead);
}

#[test]
fn r_eta_values() {
    for k in families() {
        assert!((r_eta(&k, PI).unwrap() - 1.0).abs() < 1e-8);
    }
    let g = AngularKernel::grazing(-0.5, 0.6, PI / 4.0).unwrap();
    assert!((r_eta(&g, PI / 4.0).unwrap() - 1.0).abs() < 1e-8);
    assert!(r_eta(&g, 1e-8).unwrap() < 1e-8);
}

#[test]
fn pair_integral_two_ways() {
    let kernels = [
        AngularKernel::soft(-0.5, 0.6).unwrap(),
        AngularKernel::soft(-1.0, 1.2).unwrap(),
        AngularKernel::grazing(-0.5, 0.6, PI / 4.0).unwrap(),
        AngularKernel::coulomb(0.1, 0.0).unwrap(),
        AngularKernel::coulomb(0.01, 0.0).unwrap(),
    ];
    for k in kernels {
        for (x, y) in [(1.0, 2.0), (0.3, 0.31), (5.0, 0.2)] {
            let a = pair_integral(&k, x, y).unwrap();
            let b = pair_integral_direct(&k, x, y).unwrap();
            assert!((a - b).abs() < 1e-7 * a, "{k:?} ({x},{y}): {a} vs {b}");
            let c = pair_integral(&k, y, x).unwrap();
            assert!((a - c).abs() < 1e-9 * a);
        }
        assert_eq!(pair_integral(&k, 1.5, 1.5).unwrap(), 0.0);
    }
}

#[test]
fn coulomb_pair_integral_dual_oracle() {
    // x=1, y=2, ε=0.1 in z directly, with the double-exponential rule
    let k = AngularKernel::coulomb(0.1, 0.0).unwrap();
    let zmax = k.z_max();
    let f = |z: f64| (k.inverse(z) - k.inverse(z / 2.0)).powi(2);
    let de = quadrature::double_exponential::integrate(f, 0.0, zmax, 1e-12).integral
        + quadrature::double_exponential::integrate(f, zmax, 2.0 * zmax, 1e-12).integral;
    let ours = pair_integral(&k, 1.0, 2.0).unwrap();
    assert!((ours - de).abs() < 1e-8 * ours, "{ours} vs {de}");
}

#[test]
fn grazing_scaling_is_exact() {
    let xy = [(1.0, 2.0), (0.05, 3.0), (0.7, 0.71), (10.0, 0.1), (1.0, 1.0)];
    let rep = verify_scaling_a4(-0.5, 0.6, &[PI / 4.0, PI / 16.0, PI / 64.0], &xy).unwrap();
    assert!(rep.max_rel_diff < 1e-6, "{rep:?}");
    assert!(rep.min_ratio > 0.0 && rep.max_ratio.is_finite());
}

#[test]
fn coulomb_ratio_is_bounded() {
    let xy = [(1.0, 2.0), (0.05, 3.0), (0.7, 0.71), (10.0, 0.1)];
    let rep = verify_a5(&[0.3, 0.1, 0.03], &xy).unwrap();
    for r in &rep {
        assert!(r.sup_ratio > 0.0 && r.sup_ratio < 100.0, "{rep:?}");
    }
}

proptest! {
    #[test]
    fn tail_is_decreasing(a in 1e-6f64..1.0, b in 1e-6f64..1.0, nu in 0.1f64..1.9, eps in 0.05f64..3.14) {
        let (s, t) = if a < b { (a, b) } else { (b, a) };
        let k = AngularKernel::grazing(-0.5, nu, eps).unwrap();
        prop_assert!(k.tail(s * eps) >= k.tail(t * eps));
        let c = AngularKernel::coulomb(eps.min(0.9) / 3.0, 0.1).unwrap();
        prop_assert!(c.tail(s * 1.6) >= c.tail(t * 1.6));
    }

    #[test]
    fn inverse_is_in_support(z in 0.0f64..1e6, nu in 0.1f64..1.9, eps in 0.05f64..0.95) {
        let g = AngularKernel::grazing(-1.0, nu, eps * PI).unwrap();
        let t = g.inverse(z);
        prop_assert!(t > 0.0 && t <= eps * PI * (1.0 + 1e-15));
        let c = AngularKernel::coulomb(eps, 0.0).unwrap();
        let t = c.inverse(z);
        prop_assert!(t == 0.0 || (t >= eps * (1.0 - 1e-12) && t <= FRAC_PI_2));
    }
}
