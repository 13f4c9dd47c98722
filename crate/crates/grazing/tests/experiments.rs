use std::f64::consts::PI;

use grazing::boltzmann::BoltzmannConfig;
use grazing::cloud::{sample_initial, InitialLaw};
use grazing::experiments::*;
use grazing::kernels::AngularKernel;
use grazing::landau::{LandauConfig, Pairing};
use grazing::quadrature::{integrate, Tolerance};
use grazing::rng::StreamKey;
use proptest::prelude::*;

#[test]
fn subdivision_examples() {
    let key = StreamKey::new(1);
    let zero = build_subdivision(|_| 0.0, 1.0, 4, key).unwrap();
    assert!(zero.is_valid());
    assert_eq!(zero.riemann_sum(), 0.0);
    assert_eq!(*zero.nodes.last().unwrap(), 1.0);

    let one = build_subdivision(|_| 1.0, 1.0, 4, key).unwrap();
    assert!(one.is_valid());
    assert!((one.riemann_sum() - (1.0 - one.nodes[0])).abs() < 1e-15);
    assert!(one.riemann_sum() <= 3.0 + 3.0);

    let h = |s: f64| s.powf(-0.5);
    let sq = build_subdivision(h, 1.0, 8, key).unwrap();
    assert!(sq.is_valid());
    // ∫₀¹ s^{-1/2} ds = 2
    assert!(sq.riemann_sum() <= 3.0 * 2.0 + 3.0, "{}", sq.riemann_sum());
}

#[test]
fn subdivision_rejects_bad_input() {
    let key = StreamKey::new(1);
    assert!(build_subdivision(|_| 0.0, 0.0, 4, key).is_err());
    assert!(build_subdivision(|_| 0.0, 1.0, 0, key).is_err());
    assert!(build_subdivision(|_| 0.0, 0.1, 2, key).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn subdivision_invariants(n in 1usize..40, t in 0.5f64..4.0, seed in 0u64..100, a in 0.0f64..3.0) {
        let h = move |s: f64| a * (1.0 + (7.0 * s).sin()) + s.powf(-0.5);
        let sub = build_subdivision(h, t, n, StreamKey::new(seed)).unwrap();
        prop_assert!(sub.is_valid());
        let exact = integrate(h, 0.0, t, &[], Tolerance::new(1e-10, 1e-10)).unwrap().value;
        prop_assert!(sub.riemann_sum() <= 3.0 * exact + 3.0);
        // node values are sampled minima: never above the cell minimum plus 1/T
        for (i, (&a_i, &h_i)) in sub.nodes.iter().zip(&sub.h_values).enumerate() {
            prop_assert_eq!(h(a_i), h_i);
            let lo = i as f64 / (2.0 * n as f64);
            let hi = (2 * i + 1) as f64 / (4.0 * n as f64);
            prop_assert!(a_i > lo && a_i < hi);
            prop_assert!(h_i <= h(0.5 * (lo + hi)).max(h(hi)) + 1.0 / t);
        }
    }
}

#[test]
fn plan_defaults() {
    // n ≈ ε^{-2p/(2p+3)} and M = √(2m₂) ε^{-2/(2p+3)}
    let eps: f64 = PI / 16.0;
    assert_eq!(default_resolution(eps, 5.0, 0.5), eps.powf(-10.0 / 13.0).ceil() as usize);
    assert_eq!(default_resolution(PI, 5.0, 0.1), 5);
    let m = default_truncation(eps, 5.0, 3.0);
    assert!((m - 6f64.sqrt() * eps.powf(-2.0 / 13.0)).abs() < 1e-12);
    // the exponent p/(2p+3) tends to 1/2
    let e = |p: f64| p / (2.0 * p + 3.0);
    assert!((e(5.0) - 5.0 / 13.0).abs() < 1e-15);
    assert!((e(1e9) - 0.5).abs() < 1e-8);
}

#[test]
fn grazing_support_facts() {
    for eps in [PI / 2.0, PI / 4.0, PI / 16.0] {
        let k = AngularKernel::grazing(-0.5, 0.6, eps).unwrap();
        check_grazing_support(&k, eps).unwrap();
    }
}

fn small_job(eps: f64, seed: u64, matching: bool, t_end: f64) -> (BoltzmannConfig, LandauConfig, CouplingPlan) {
    let kernel = AngularKernel::grazing(-0.5, 0.6, eps).unwrap();
    let dt = 0.004;
    let b = BoltzmannConfig::new(kernel, 3.0, dt, seed, t_end);
    let l = LandauConfig {
        gamma: -0.5,
        dt,
        pairing: Pairing::default(),
        reg_delta: LandauConfig::default_reg_delta(3.0),
        seed,
        t_end,
    };
    let plan = CouplingPlan {
        seed,
        subdivision: build_subdivision(|_| 0.0, t_end, default_resolution(eps, 5.0, t_end), StreamKey::new(seed)).unwrap(),
        gaussian_matching: matching,
        tanaka: true,
        truncation: Some(default_truncation(eps, 5.0, 3.0)),
        freeze: false,
    };
    (b, l, plan)
}

fn cloud(n: usize, seed: u64) -> grazing::cloud::ParticleCloud {
    sample_initial(InitialLaw::IsotropicGaussian { sigma2: 1.0 }, n, StreamKey::new(seed), true).unwrap()
}

#[test]
fn coupled_run_starts_at_zero_and_reproduces() {
    let (b, l, plan) = small_job(PI / 2.0, 3, true, 0.1);
    let init = cloud(200, 3);
    let a = coupled_run(&b, &l, &plan, &init, &[0.0, 0.05], true).unwrap();
    assert_eq!(a.snapshots[0].paired_l2, 0.0);
    assert_eq!(a.snapshots[0].w2, Some(0.0));
    assert!(a.terminal().paired_l2 > 0.0);
    let again = coupled_run(&b, &l, &plan, &init, &[0.0, 0.05], true).unwrap();
    assert_eq!(a.boltzmann.velocities, again.boltzmann.velocities);
    assert_eq!(a.landau.velocities, again.landau.velocities);
    // the assignment distance never exceeds the index coupling
    for s in &a.snapshots {
        assert!(s.w2.unwrap() <= s.paired_l2 + 1e-12);
    }
}

#[test]
fn coupled_run_rejects_mismatched_configs() {
    let (b, mut l, plan) = small_job(PI / 2.0, 3, true, 0.1);
    let init = cloud(20, 3);
    l.gamma = -1.0;
    assert!(coupled_run(&b, &l, &plan, &init, &[], false).is_err());
    l.gamma = -0.5;
    l.dt = 0.001;
    assert!(coupled_run(&b, &l, &plan, &init, &[], false).is_err());
}

#[test]
fn matching_level_reduces_distance() {
    let seeds = 20;
    let mut with = 0.0;
    let mut without = 0.0;
    for seed in 0..seeds {
        let init = cloud(256, seed);
        for (matching, acc) in [(true, &mut with), (false, &mut without)] {
            let (b, l, plan) = small_job(PI / 4.0, seed, matching, 0.2);
            *acc += coupled_run(&b, &l, &plan, &init, &[], false).unwrap().terminal().paired_l2;
        }
    }
    assert!(with < without, "{with} vs {without}");
}

#[test]
fn line_fit_recovers_exact_lines() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y: Vec<f64> = x.iter().map(|t| 0.5 - 1.5 * t).collect();
    let f = fit_line(&x, &y).unwrap();
    assert!((f.slope + 1.5).abs() < 1e-14 && (f.intercept - 0.5).abs() < 1e-14);
    assert!(f.slope_stderr < 1e-12);
    assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());

    let family = SweepFamily::Grazing { gamma: -0.5, nu: 0.6 };
    let eps = [PI / 2.0, PI / 4.0, PI / 8.0, PI / 16.0];
    let d: Vec<f64> = eps.iter().map(|e| 0.7 * e.powf(0.4)).collect();
    assert!((fit_rate(&family, &eps, &d).unwrap().slope - 0.4).abs() < 1e-12);

    let coulomb = SweepFamily::Coulomb { h_ratio: 1.0 };
    let ce = [0.3, 0.1, 0.03, 0.01];
    let d: Vec<f64> = ce.iter().map(|e: &f64| (1.0 / (1.0 / e).ln()).powf(0.25)).collect();
    assert!((fit_rate(&coulomb, &ce, &d).unwrap().slope - 0.25).abs() < 1e-12);
    assert!(fit_rate(&coulomb, &ce, &[1.0, 0.0, 1.0, 1.0]).is_err());
}

#[test]
fn verdicts() {
    let clear: Vec<Vec<f64>> = (0..4).map(|k| (0..10).map(|s| 1.0 / (k + 1) as f64 + 1e-3 * s as f64).collect()).collect();
    assert_eq!(judge(&clear), (true, true, Verdict::Decreasing));
    let noise: Vec<Vec<f64>> = (0..4)
        .map(|k| (0..10).map(|s| 1.0 + 0.1 * ((s * 7 + k * 3) % 5) as f64).collect())
        .collect();
    assert_eq!(judge(&noise).2, Verdict::Inconclusive);
}

#[test]
fn sweep_preconditions() {
    let family = SweepFamily::Grazing { gamma: -0.5, nu: 0.6 };
    let short = SweepConfig::new(family, vec![PI / 2.0], (0..10).collect(), 64, 0.1);
    assert!(rate_sweep(&short).is_err());
    let few = SweepConfig::new(family, vec![PI / 2.0, PI / 4.0, PI / 8.0, PI / 16.0], (0..3).collect(), 64, 0.1);
    assert!(rate_sweep(&few).is_err());
    let unordered = SweepConfig::new(family, vec![PI / 4.0, PI / 2.0, PI / 8.0, PI / 16.0], (0..10).collect(), 64, 0.1);
    assert!(rate_sweep(&unordered).is_err());
}

#[test]
fn tiny_sweep_runs() {
    let family = SweepFamily::Grazing { gamma: -0.5, nu: 0.6 };
    let mut cfg = SweepConfig::new(family, vec![PI / 2.0, PI / 4.0, PI / 8.0, PI / 16.0], (0..10).collect(), 64, 0.05);
    cfg.snapshots = 2;
    let r = rate_sweep(&cfg).unwrap();
    assert_eq!(r.rows.len(), 4 * 10 * 3);
    assert_eq!(r.summary.len(), 4);
    assert!(r.summary.iter().all(|s| s.mean > 0.0 && s.stderr >= 0.0));
    assert!((r.proven_exponent - 5.0 / 13.0).abs() < 1e-15);
}
