//! `grazing`: run simulations, coupled runs, rate sweeps and verifiers.
//!
//! Exit status: 0 on success (an inconclusive sweep included), 1 when a
//! verifier check fails or a run breaks down, 2 on usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grazing::boltzmann::BoltzmannSim;
use grazing::config::{Angle, ExperimentConfig, Family, InitialKind, PairingMode, CONFIG_VERSION};
use grazing::experiments::{coupled_run, fit_rate, judge, EpsSummary, Verdict};
use grazing::landau::LandauSim;
use grazing::output::{ArtifactWriter, CheckRow};
use grazing::trajectory::run;
use grazing::verify::{self, AppendixOptions, GeometryOptions};
use grazing::Error;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "GRAZING_OUT";

#[derive(Parser)]
#[command(name = "grazing", version, about = "Grazing-collision simulators and verifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nanbu or symmetric particle run of the Boltzmann equation
    SimulateBoltzmann(Flags),
    /// Particle run of the Landau equation
    SimulateLandau(Flags),
    /// Boltzmann and Landau systems driven by shared randomness
    CoupledRun(Flags),
    /// Coupled runs over an ε grid and several seeds, with a rate fit
    RateSweep(Flags),
    /// Normalization, tail inversion and scaling checks of a kernel family
    VerifyKernels(Flags),
    /// Collision identities, frames, Tanaka bound, jump moments, Landau coefficients
    VerifyGeometry(Flags),
    /// Subdivision, Grönwall and Poisson/Gaussian checks
    VerifyAppendix(Flags),
    /// Fit a rate to an existing sweep CSV
    FitRate(Flags),
}

/// Flags mirror the config keys and override the config file.
#[derive(Args, Clone, Default)]
struct Flags {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory [default: $GRAZING_OUT or ./grazing-out]
    #[arg(long)]
    out: Option<String>,
    /// sweep CSV to fit (fit-rate)
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// number or pi/k literal
    #[arg(long)]
    eps: Option<Angle>,
    #[arg(long)]
    h_eps: Option<f64>,
    #[arg(long)]
    h_ratio: Option<f64>,
    /// comma-separated numbers or pi/k literals
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<Angle>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    theta_min: Option<Angle>,
    #[arg(long)]
    v_floor: Option<f64>,
    /// nanbu or symmetric
    #[arg(long)]
    update_mode: Option<String>,
    #[arg(long)]
    pairing: Option<PairingMode>,
    #[arg(long)]
    companions: Option<usize>,
    #[arg(long)]
    matchings: Option<usize>,
    #[arg(long)]
    reg_delta: Option<f64>,
    #[arg(long)]
    initial: Option<InitialKind>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// number of seeds, counting up from --seed
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    snapshots: Option<usize>,
    #[arg(long)]
    moment_p: Option<f64>,
    #[arg(long)]
    compute_w2: Option<bool>,
    #[arg(long)]
    gaussian_matching: Option<bool>,
    #[arg(long)]
    tanaka: Option<bool>,
    #[arg(long)]
    truncate: Option<bool>,
    #[arg(long)]
    freeze: Option<bool>,
    #[arg(long)]
    sample_count: Option<usize>,
    /// random pairs for the kernel scaling checks
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    /// scale every sample size of verify-geometry by this factor
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl Flags {
    fn as_config(&self) -> Result<ExperimentConfig, Failure> {
        let update_mode = match self.update_mode.as_deref() {
            None => None,
            Some("nanbu") => Some(grazing::boltzmann::UpdateMode::Nanbu),
            Some("symmetric") => Some(grazing::boltzmann::UpdateMode::Symmetric),
            Some(o) => return Err(usage(format!("--update-mode: expected nanbu or symmetric, got {o:?}"))),
        };
        Ok(ExperimentConfig {
            family: self.family,
            gamma: self.gamma,
            nu: self.nu,
            eps: self.eps.clone(),
            h_eps: self.h_eps,
            h_ratio: self.h_ratio,
            eps_list: self.eps_list.clone(),
            n: self.n,
            dt: self.dt,
            t_end: self.t_end,
            theta_min: self.theta_min.clone(),
            v_floor: self.v_floor,
            update_mode,
            pairing: self.pairing,
            companions: self.companions,
            matchings: self.matchings,
            reg_delta: self.reg_delta,
            initial: self.initial,
            sigma2: self.sigma2,
            seed: self.seed,
            seeds: self.seeds,
            snapshots: self.snapshots,
            output_dir: self.out.clone(),
            moment_p: self.moment_p,
            compute_w2: self.compute_w2,
            gaussian_matching: self.gaussian_matching,
            tanaka: self.tanaka,
            truncate: self.truncate,
            freeze: self.freeze,
            sample_count: self.sample_count,
            ..Default::default()
        })
    }

    /// File layer, then flags.
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig {
                version: Some(CONFIG_VERSION),
                ..Default::default()
            },
        };
        Ok(base.merge(self.as_config()?))
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var(OUT_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| "grazing-out".into())
        .into()
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("missing required flag --{flag} (or config key `{}`)", flag.replace('-', "_"))))
}

fn print_checks(rows: &[CheckRow]) {
    println!("{:<28} {:>12} {:>12}  {:<4}  parameter", "check", "measured", "threshold", "");
    for r in rows {
        println!(
            "{:<28} {:>12.4e} {:>12.4e}  {:<4}  {}",
            r.check,
            r.measured,
            r.threshold,
            if r.pass { "PASS" } else { "FAIL" },
            r.parameter
        );
    }
}

fn finish_checks(cfg: &ExperimentConfig, rows: Vec<CheckRow>) -> Result<(), Failure> {
    let mut w = ArtifactWriter::new(out_dir(cfg))?;
    w.checks("checks.csv", &rows)?;
    w.finish::<()>(&cfg.to_toml(), None, cfg.seed)?;
    print_checks(&rows);
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} checks failed", rows.len())));
    }
    Ok(())
}

fn simulate(cfg: ExperimentConfig, boltzmann: bool) -> Result<(), Failure> {
    require(cfg.family, "family")?;
    require(cfg.n, "n")?;
    require(cfg.dt, "dt")?;
    let t_end = require(cfg.t_end, "t-end")?;
    let spec = cfg.kernel_spec()?;
    let schedule = cfg.schedule()?;
    let init = cfg.initial_cloud()?;
    let (stem, traj) = if boltzmann {
        let sim = BoltzmannSim::new(cfg.boltzmann()?)?;
        ("boltzmann", run(&sim, init, t_end, &schedule)?)
    } else {
        let sim = LandauSim::new(cfg.landau()?)?;
        ("landau", run(&sim, init, t_end, &schedule)?)
    };
    let mut w = ArtifactWriter::new(out_dir(&cfg))?;
    w.trajectory(stem, &traj)?;
    let m = w.finish(&cfg.to_toml(), Some(&spec), Some(cfg.seed()))?;
    if let Some(last) = traj.last() {
        let d = last.diagnostics;
        println!("t={} m2={:.6} m4={:.6} entropy={:.4} max_speed={:.4}", d.t, d.m2, d.m4, d.entropy, d.max_speed);
    }
    println!("wrote {} files, content hash {}", m.files.len(), m.content_hash);
    Ok(())
}

fn coupled(cfg: ExperimentConfig) -> Result<(), Failure> {
    require(cfg.family, "family")?;
    let eps = require(cfg.eps.clone(), "eps")?.value();
    require(cfg.n, "n")?;
    require(cfg.dt, "dt")?;
    require(cfg.t_end, "t-end")?;
    let spec = cfg.kernel_spec()?;
    let b = cfg.boltzmann()?;
    let l = cfg.landau()?;
    let plan = cfg.coupling_plan()?;
    let schedule = cfg.schedule()?;
    let init = cfg.initial_cloud()?;
    let traj = coupled_run(&b, &l, &plan, &init, &schedule, cfg.compute_w2.unwrap_or(false))?;
    let mut w = ArtifactWriter::new(out_dir(&cfg))?;
    w.coupled("coupled.csv", eps, cfg.seed(), &traj.snapshots)?;
    w.json(
        "coupled_summary.json",
        &serde_json::json!({
            "eps": eps,
            "seed": cfg.seed(),
            "terminal_paired_l2": traj.terminal().paired_l2,
            "sup_paired_l2": traj.sup_distance(),
            "events": traj.events,
            "subdivision_n": plan.subdivision.n,
            "truncation": plan.truncation,
        }),
    )?;
    w.finish(&cfg.to_toml(), Some(&spec), Some(cfg.seed()))?;
    println!(
        "eps={eps} terminal paired L2 = {:.6}, sup = {:.6}, events = {}",
        traj.terminal().paired_l2,
        traj.sup_distance(),
        traj.events
    );
    Ok(())
}

fn print_summary(summary: &[EpsSummary]) {
    println!("{:>14} {:>12} {:>12}", "eps", "mean", "stderr");
    for s in summary {
        println!("{:>14.6e} {:>12.6} {:>12.6}", s.eps, s.mean, s.stderr);
    }
}

fn sweep(cfg: ExperimentConfig) -> Result<(), Failure> {
    require(cfg.family, "family")?;
    require(cfg.eps_list.clone(), "eps-list")?;
    require(cfg.n, "n")?;
    require(cfg.t_end, "t-end")?;
    let sc = cfg.sweep()?;
    let report = grazing::experiments::rate_sweep(&sc)?;
    let mut w = ArtifactWriter::new(out_dir(&cfg))?;
    w.sweep("sweep", &report)?;
    w.finish(&cfg.to_toml(), Some(&sc.family), cfg.seed)?;
    print_summary(&report.summary);
    println!(
        "slope {:.4} ± {:.4}; verdict {}",
        report.fit.slope,
        report.fit.slope_stderr,
        match report.verdict {
            Verdict::Decreasing => "decreasing",
            Verdict::Inconclusive => "inconclusive",
        }
    );
    Ok(())
}

/// Terminal distances per `(eps, seed)` from a sweep CSV.
fn read_sweep(path: &Path) -> Result<Vec<(f64, Vec<f64>)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "eps,seed,t,paired_l2,w2,m2_boltz,m2_landau" {
        return Err(usage(format!("{}: not a sweep CSV (header {header:?})", path.display())));
    }
    // last row of each (eps, seed) is its terminal time
    let mut terminal: Vec<(f64, u64, f64, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let num = |k: usize| -> Result<f64, Failure> {
            f.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| usage(format!("{}: line {}: bad field {k}", path.display(), i + 2)))
        };
        let (eps, seed, t, d) = (num(0)?, num(1)? as u64, num(2)?, num(3)?);
        match terminal.iter_mut().find(|r| r.0 == eps && r.1 == seed) {
            Some(r) if t >= r.2 => {
                r.2 = t;
                r.3 = d;
            }
            Some(_) => {}
            None => terminal.push((eps, seed, t, d)),
        }
    }
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (eps, _, _, d) in terminal {
        match groups.iter_mut().find(|g| g.0 == eps) {
            Some(g) => g.1.push(d),
            None => groups.push((eps, vec![d])),
        }
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(groups)
}

fn fit(cfg: ExperimentConfig, input: Option<PathBuf>) -> Result<(), Failure> {
    require(cfg.family, "family")?;
    let input = require(input, "input")?;
    let family = cfg.sweep_family()?;
    let groups = read_sweep(&input)?;
    if groups.len() < 4 {
        return Err(usage(format!("need at least 4 eps values to fit, found {}", groups.len())));
    }
    let eps: Vec<f64> = groups.iter().map(|g| g.0).collect();
    let per: Vec<Vec<f64>> = groups.iter().map(|g| g.1.clone()).collect();
    let means: Vec<f64> = per.iter().map(|d| d.iter().sum::<f64>() / d.len() as f64).collect();
    let rate = fit_rate(&family, &eps, &means)?;
    let (strict, within, verdict) = judge(&per);
    let mut w = ArtifactWriter::new(out_dir(&cfg))?;
    w.json(
        "fit.json",
        &serde_json::json!({
            "family": family,
            "eps_list": eps,
            "means": means,
            "slope": rate.slope,
            "slope_stderr": rate.slope_stderr,
            "intercept": rate.intercept,
            "strictly_decreasing": strict,
            "non_increasing_within_errors": within,
            "verdict": verdict,
        }),
    )?;
    w.finish(&cfg.to_toml(), Some(&family), cfg.seed)?;
    println!("slope {:.4} ± {:.4}; verdict {:?}", rate.slope, rate.slope_stderr, verdict);
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::SimulateBoltzmann(f) => simulate(f.resolve()?, true),
        Command::SimulateLandau(f) => simulate(f.resolve()?, false),
        Command::CoupledRun(f) => coupled(f.resolve()?),
        Command::RateSweep(f) => sweep(f.resolve()?),
        Command::FitRate(f) => fit(f.resolve()?, f.input.clone()),
        Command::VerifyKernels(f) => {
            let cfg = f.resolve()?;
            let family = require(cfg.family, "family")?;
            let (name, gamma, nu) = match family {
                Family::Coulomb => ("coulomb", -3.0, 0.0),
                Family::Soft => ("soft", require(cfg.gamma, "gamma")?, require(cfg.nu, "nu")?),
                Family::Grazing => ("grazing", require(cfg.gamma, "gamma")?, require(cfg.nu, "nu")?),
            };
            let eps = match (family, &cfg.eps_list, &cfg.eps) {
                (Family::Soft, _, _) => Vec::new(),
                (_, Some(l), _) => l.iter().map(Angle::value).collect(),
                (_, None, Some(e)) => vec![e.value()],
                (_, None, None) => return Err(usage("missing required flag --eps-list (or --eps)")),
            };
            let rows = verify::kernels_suite(name, gamma, nu, &eps, cfg.h_ratio.unwrap_or(1.0), f.pairs, cfg.seed())?;
            finish_checks(&cfg, rows)
        }
        Command::VerifyGeometry(f) => {
            let cfg = f.resolve()?;
            if !(f.scale > 0.0) {
                return Err(usage("--scale must be positive"));
            }
            let d = GeometryOptions::default();
            let s = |k: usize| ((k as f64 * f.scale).ceil() as usize).max(1);
            let opts = GeometryOptions {
                events: s(d.events),
                tanaka_pairs: s(d.tanaka_pairs),
                jump_pairs: s(d.jump_pairs),
                coefficient_samples: s(d.coefficient_samples),
                seed: cfg.seed(),
                ..d
            };
            let rows = verify::geometry_suite(&opts)?;
            finish_checks(&cfg, rows)
        }
        Command::VerifyAppendix(f) => {
            let cfg = f.resolve()?;
            let opts = AppendixOptions {
                sample_count: cfg.sample_count.unwrap_or(2048),
                seed: cfg.seed(),
                ..Default::default()
            };
            let rows = verify::appendix_suite(&opts)?;
            finish_checks(&cfg, rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(1)
        }
    }
}
