//! Acceptance criteria 1–12, run in order, one PASS/FAIL line each.
//!
//! Lines go straight to stdout so they show up without `--nocapture`.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use grazing::boltzmann::{BoltzmannConfig, BoltzmannSim, UpdateMode};
use grazing::cloud::{sample_initial, InitialLaw, ParticleCloud};
use grazing::experiments::{rate_sweep, SweepConfig, SweepFamily, SweepReport, Verdict};
use grazing::kernels::{coulomb_normalizer, k_constant, AngularKernel};
use grazing::landau::{LandauConfig, LandauSim, Pairing};
use grazing::output::CheckRow;
use grazing::rng::StreamKey;
use grazing::trajectory::run;
use grazing::verify::{self, AppendixOptions};

type Outcome = Result<String, String>;

fn rows_outcome(rows: &[CheckRow]) -> Outcome {
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} [{}]: {:e} vs {:e}", r.check, r.parameter, r.measured, r.threshold))
        .collect();
    if failed.is_empty() {
        // passing upper bounds are the rows with measured/threshold ≤ 1
        let worst = rows
            .iter()
            .filter(|r| r.threshold > 0.0 && r.threshold < f64::MAX)
            .map(|r| (r.measured / r.threshold, r))
            .filter(|(q, _)| *q <= 1.0)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let n = rows.len();
        let noun = if n == 1 { "check" } else { "checks" };
        Ok(match worst {
            Some((_, r)) => format!("{n} {noun}; tightest {} = {:.3e} (bound {:.3e})", r.check, r.measured, r.threshold),
            None => format!("{n} {noun}"),
        })
    } else {
        Err(failed.join("; "))
    }
}

fn within(limit: Duration, start: Instant, o: Outcome) -> Outcome {
    let took = start.elapsed();
    match o {
        Ok(m) if took <= limit => Ok(m),
        Ok(m) => Err(format!("{m}; but took {took:?} > {limit:?}")),
        e => e,
    }
}

fn c1() -> Outcome {
    rows_outcome(&verify::collision_checks(1_000_000, 1))
}

fn c2() -> Outcome {
    let mut kernels = Vec::new();
    for nu in [0.3, 0.6, 1.2] {
        kernels.push(AngularKernel::soft(-0.5, nu).map_err(|e| e.to_string())?);
    }
    for eps in [PI / 2.0, PI / 8.0, PI / 32.0] {
        kernels.push(AngularKernel::grazing(-0.5, 0.6, eps).map_err(|e| e.to_string())?);
    }
    for eps in [0.3, 0.1, 0.01] {
        kernels.push(AngularKernel::coulomb(eps, eps).map_err(|e| e.to_string())?);
    }
    let mut rows = Vec::new();
    for k in &kernels {
        let all = verify::kernel_checks(k).map_err(|e| e.to_string())?;
        rows.extend(all.into_iter().filter(|r| r.check == "normalization"));
    }
    let c = coulomb_normalizer(1e-4).map_err(|e| e.to_string())?;
    rows.push(CheckRow::at_most("coulomb-limit", "eps=1e-4", (TAU * c - 1.0).abs(), 0.05));
    rows_outcome(&rows)
}

fn c3() -> Outcome {
    let e = |r: grazing::Result<AngularKernel>| r.map_err(|e| e.to_string());
    let kernels = [
        e(AngularKernel::soft(-0.5, 0.6))?,
        e(AngularKernel::soft(-1.5, 1.2))?,
        e(AngularKernel::grazing(-0.5, 0.6, PI / 8.0))?,
        e(AngularKernel::coulomb(0.1, 0.0))?,
        e(AngularKernel::coulomb(0.01, 0.0))?,
    ];
    let mut rows = verify::jump_checks(&kernels, 20, 3).map_err(|e| e.to_string())?;
    for k in &kernels[3..] {
        let kk = k_constant(k).map_err(|e| e.to_string())?;
        rows.push(CheckRow::at_most("coulomb-k-eps", format!("{k:?}"), kk, 2.0));
    }
    rows_outcome(&rows)
}

fn c4() -> Outcome {
    let mut rows = verify::scaling_checks(-0.5, 0.6, &[PI, PI / 4.0, PI / 16.0], 1000, 4).map_err(|e| e.to_string())?;
    rows.extend(verify::coulomb_checks(&[0.3, 0.1, 0.03], 1000, 4).map_err(|e| e.to_string())?);
    rows_outcome(&rows)
}

fn c5() -> Outcome {
    let rows = verify::frame_checks(100_000, 32, 5).map_err(|e| e.to_string())?;
    rows_outcome(&rows.into_iter().filter(|r| r.check == "tanaka-bound").collect::<Vec<_>>())
}

fn c6() -> Outcome {
    rows_outcome(&verify::coefficient_checks(100_000, 6).map_err(|e| e.to_string())?)
}

fn gaussian(n: usize, seed: u64) -> Result<ParticleCloud, String> {
    sample_initial(InitialLaw::IsotropicGaussian { sigma2: 1.0 }, n, StreamKey::new(seed), true).map_err(|e| e.to_string())
}

fn c7() -> Outcome {
    let err = |e: grazing::Error| e.to_string();
    let mut rows = Vec::new();
    // symmetric Boltzmann: grazing and Coulomb
    let cases = [
        (AngularKernel::grazing(-0.5, 0.6, PI / 4.0).map_err(err)?, 0.01, 0.5, 2048),
        (AngularKernel::coulomb(0.1, 0.1).map_err(err)?, 0.002, 0.05, 1024),
    ];
    for (kernel, dt, t_end, n) in cases {
        let mut cfg = BoltzmannConfig::new(kernel, 3.0, dt, 7, t_end);
        cfg.update_mode = UpdateMode::Symmetric;
        let sim = BoltzmannSim::new(cfg).map_err(err)?;
        let cloud = gaussian(n, 7)?;
        let (p0, e0) = (cloud.momentum(), cloud.energy());
        let traj = run(&sim, cloud, t_end, &[t_end / 2.0]).map_err(err)?;
        let (mut dp, mut de) = (0.0f64, 0.0f64);
        for s in &traj.snapshots {
            dp = dp.max((s.cloud.momentum() - p0).norm());
            de = de.max((s.cloud.energy() - e0).abs() / e0);
        }
        let p = format!("{} symmetric N={n} T={t_end}", kernel.family());
        rows.push(CheckRow::at_most("boltzmann-momentum", &p, dp, 1e-9));
        rows.push(CheckRow::at_most("boltzmann-energy", &p, de, 1e-9));
    }
    // conservative Landau: momentum, and m₂ drift at two step sizes
    let mut ends = Vec::new();
    for dt in [0.01, 0.005] {
        let cfg = LandauConfig {
            gamma: -1.0,
            dt,
            pairing: Pairing::Conservative { matchings: 16 },
            reg_delta: LandauConfig::default_reg_delta(3.0),
            seed: 7,
            t_end: 0.5,
        };
        let sim = LandauSim::new(cfg).map_err(err)?;
        let cloud = gaussian(4096, 8)?;
        let (p0, m0) = (cloud.momentum(), cloud.moment(2.0));
        let traj = run(&sim, cloud, 0.5, &[0.25]).map_err(err)?;
        let dp = traj.snapshots.iter().map(|s| (s.cloud.momentum() - p0).norm()).fold(0.0, f64::max);
        let p = format!("landau conservative N=4096 T=0.5 dt={dt}");
        rows.push(CheckRow::at_most("landau-momentum", &p, dp, 1e-9));
        let drift = traj.last().map(|s| s.diagnostics.m2 / m0 - 1.0).unwrap_or(f64::NAN);
        rows.push(CheckRow::at_most("landau-m2-drift", &p, drift.abs(), 0.03));
        ends.push(drift);
    }
    rows.push(CheckRow::at_most("landau-dt-halving", "dt=0.01 vs 0.005", (ends[0] - ends[1]).abs(), 0.03));
    rows_outcome(&rows)
}

fn c8() -> Outcome {
    rows_outcome(&verify::subdivision_checks(8).map_err(|e| e.to_string())?)
}

fn c9() -> Outcome {
    rows_outcome(&verify::gronwall_checks().map_err(|e| e.to_string())?)
}

fn c10() -> Outcome {
    let opts = AppendixOptions {
        seed: 10,
        ..Default::default()
    };
    let rows = verify::poisson_checks(&opts).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = rows
        .iter()
        .filter(|r| r.check.starts_with("poisson-gaussian"))
        .map(|r| format!("{}={:.3}", if r.check.ends_with("control") { "control" } else { "R" }, r.measured))
        .collect();
    rows_outcome(&rows).map(|m| format!("{m}; {}", ratios.join(" ")))
}

fn describe(r: &SweepReport) -> String {
    let means: Vec<String> = r.summary.iter().map(|s| format!("{:.4}±{:.4}", s.mean, s.stderr)).collect();
    format!(
        "means [{}], slope {:.3}±{:.3}, verdict {:?}, dt {:.3e}",
        means.join(", "),
        r.fit.slope,
        r.fit.slope_stderr,
        r.verdict,
        r.dt
    )
}

fn c11() -> Outcome {
    let cfg = SweepConfig::new(
        SweepFamily::Grazing { gamma: -0.5, nu: 0.6 },
        vec![PI / 2.0, PI / 4.0, PI / 8.0, PI / 16.0],
        (0..10).collect(),
        4096,
        0.5,
    );
    let r = rate_sweep(&cfg).map_err(|e| e.to_string())?;
    let d = describe(&r);
    if !r.strictly_decreasing {
        return Err(format!("means not strictly decreasing: {d}"));
    }
    if r.fit.slope < 0.3 {
        return Err(format!("slope below 0.3: {d}"));
    }
    if r.verdict != Verdict::Decreasing {
        return Err(format!("inconclusive: {d}"));
    }
    Ok(d)
}

fn c12() -> Outcome {
    let cfg = SweepConfig::new(
        SweepFamily::Coulomb { h_ratio: 1.0 },
        vec![0.3, 0.1, 0.03, 0.01],
        (0..10).collect(),
        2048,
        0.3,
    );
    let r = rate_sweep(&cfg).map_err(|e| e.to_string())?;
    let d = describe(&r);
    if r.non_increasing_within_errors {
        Ok(d)
    } else {
        Err(format!("increase beyond error bars: {d}"))
    }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 12] = [
        ("1 collision identities", Some(secs(10)), c1),
        ("2 kernel normalization", Some(secs(5)), c2),
        ("3 jump integral identities", Some(secs(30)), c3),
        ("4 grazing scaling and Coulomb ratio", Some(secs(60)), c4),
        ("5 Tanaka bound", Some(secs(10)), c5),
        ("6 Landau coefficients", Some(secs(10)), c6),
        ("7 system conservation", None, c7),
        ("8 subdivision", Some(secs(1)), c8),
        ("9 Gronwall envelope", Some(secs(5)), c9),
        ("10 Poisson-Gaussian ratio", Some(secs(120)), c10),
        ("11 grazing convergence", None, c11),
        ("12 Coulomb convergence", None, c12),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout();
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let o = f();
        let o = match limit {
            Some(l) => within(l, start, o),
            None => o,
        };
        let took = start.elapsed().as_secs_f64();
        let line = match &o {
            Ok(m) => format!("PASS criterion {name} ({took:.1} s): {m}"),
            Err(m) => format!("FAIL criterion {name} ({took:.1} s): {m}"),
        };
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        if o.is_err() {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
