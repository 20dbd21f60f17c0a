//! Command-line entry point: subcommands over a shared key=value config,
//! deterministic seeding, CSV/JSON artifacts, and exit codes
//! 0 (success) / 1 (validation error) / 2 (numerical-tolerance failure).

use clap::{Parser, Subcommand, ValueEnum};
use needlet_ustat::bounds::{compute_bound_report, suggested_truncation_radius, Regime};
use needlet_ustat::config::{parse_experiment_config, ExperimentConfig};
use needlet_ustat::density::{
    besov_norm, build_besov_density, load_density, save_density, BesovDensity,
};
use needlet_ustat::error::Error;
use needlet_ustat::frame::{build_frame, needlet_coefficient, NeedletFrame};
use needlet_ustat::harness::{run_clt_experiment, run_depoissonization, CltConfig, DepoissonConfig};
use needlet_ustat::manifold::{BasisFunction, ManifoldModel, TWO_PI};
use needlet_ustat::output::{format_float, out_path, write_summary, CsvTable};
use needlet_ustat::sampler::sample_poisson;
use needlet_ustat::ustat::{compute_gram, evaluate_kernel_ustat, exact_variance, ustat_report};
use needlet_ustat::util::mix_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "needlet-ustat", version, about = "Needlet Poisson U-statistic experiments")]
struct Cli {
    /// Path to a key=value config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results are identical for every count.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame diagnostics.
    Frame {
        #[command(subcommand)]
        action: FrameCmd,
    },
    /// Density construction.
    Density {
        #[command(subcommand)]
        action: DensityCmd,
    },
    /// Draw one Poisson configuration per level and persist the points.
    Sample,
    /// U-statistic evaluation.
    Ustat {
        #[command(subcommand)]
        action: UstatCmd,
    },
    /// Exact mean, variance and chaos decomposition per level.
    Variance,
    /// Contraction norms, L4 norms and the Wasserstein bound per level.
    Bounds {
        #[arg(long, value_enum)]
        regime: RegimeArg,
    },
    /// Monte Carlo CLT rate experiment.
    Clt {
        #[arg(long, value_enum)]
        regime: RegimeArg,
    },
    /// Coupled fixed-size vs Poissonized comparison over the m schedule.
    Depoissonize,
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Partition of unity, cubature exactness and the tight-frame identity.
    Validate,
}

#[derive(Subcommand)]
enum DensityCmd {
    /// Build the configured density, persist it and verify the reload.
    Build,
}

#[derive(Subcommand)]
enum UstatCmd {
    /// Evaluate U_j on a fresh configuration per level.
    Eval,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    I,
    Ii,
}

impl From<RegimeArg> for Regime {
    fn from(value: RegimeArg) -> Self {
        match value {
            RegimeArg::I => Regime::I,
            RegimeArg::Ii => Regime::II,
        }
    }
}

/// Run failure with the exit code it maps to.
enum Failure {
    /// Exit 1: configuration or input validation.
    Validation(String),
    /// Exit 2: a numerical tolerance was violated; names the criterion.
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fn numerical(e: &Error) -> bool {
            match e {
                Error::NonConvergence { .. }
                | Error::Positivity { .. }
                | Error::TailDominance { .. }
                | Error::DegenerateVariance(_)
                | Error::Truncation { .. }
                | Error::NonFiniteSample(_)
                | Error::AmbiguousRegime(_) => true,
                Error::AtLevel { source, .. } => numerical(source),
                _ => false,
            }
        }
        if numerical(&e) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type RunResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_experiment_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> RunResult {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build_global()
        .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    let cfg = load_config(&cli)?;
    let frame = Arc::new(build_frame(
        &ManifoldModel::circle(),
        cfg.b,
        cfg.j_max,
    )?);
    match cli.command {
        Command::Frame {
            action: FrameCmd::Validate,
        } => frame_validate(&cfg, &frame),
        Command::Density {
            action: DensityCmd::Build,
        } => density_build(&cfg, &frame),
        Command::Sample => sample_cmd(&cfg, &frame),
        Command::Ustat {
            action: UstatCmd::Eval,
        } => ustat_eval(&cfg, &frame),
        Command::Variance => variance_cmd(&cfg, &frame),
        Command::Bounds { regime } => bounds_cmd(&cfg, &frame, regime.into()),
        Command::Clt { regime } => clt_cmd(&cfg, &frame, regime.into()),
        Command::Depoissonize => depoissonize_cmd(&cfg, &frame),
    }
}

/// Build the configured density: uniform at amplitude 0, planted Besov else.
fn build_density(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> Result<BesovDensity, Error> {
    if cfg.amplitude == 0.0 {
        Ok(BesovDensity::uniform(frame.clone()))
    } else {
        build_besov_density(frame.clone(), cfg.s, cfg.r, cfg.amplitude, cfg.density_seed)
    }
}

/// The per-level intensity schedule; requires a schedule in the config.
fn intensity_schedule(cfg: &ExperimentConfig) -> Result<Vec<f64>, Failure> {
    let sched = cfg.schedule.as_ref().ok_or_else(|| {
        Failure::Validation("this subcommand needs a schedule = ... entry in the config".into())
    })?;
    let mut out = Vec::new();
    for j in cfg.j_list() {
        let v = sched.evaluate(j, cfg.b, cfg.s, cfg.d())?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Failure::Validation(format!(
                "schedule gives non-positive intensity {v} at j={j}"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn frame_validate(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    // partition of unity over 1000 log-spaced frequencies t ≥ 1
    let mut partition_residual = 0.0f64;
    let t_max = cfg.b.powi(cfg.j_max as i32);
    for i in 0..1000 {
        let t = (i as f64 / 999.0 * t_max.ln()).exp();
        let s = frame.window.partition_sum(t, cfg.j_max + 40);
        partition_residual = partition_residual.max((s - 1.0).abs());
    }
    // cubature exactness: each level's rule integrates its band exactly
    let mut cubature_residual = 0.0f64;
    for j in 0..=cfg.j_max {
        let level = frame.level(j);
        let k = level.k_count;
        for q in 1..k {
            let sum: f64 = (0..k)
                .map(|i| (q as f64 * level.node(i)).cos())
                .sum::<f64>()
                * TWO_PI
                / k as f64;
            cubature_residual = cubature_residual.max(sum.abs());
        }
    }
    // tight-frame identity on random band-limited functions
    let bw = frame.level(cfg.j_max.saturating_sub(1)).bandwidth.min(16);
    let basis: Vec<BasisFunction> = frame
        .manifold
        .basis_functions(bw)
        .into_iter()
        .filter(|b| b.q() >= 1)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, 0x6672616d));
    let mut tight_residual = 0.0f64;
    for _ in 0..5 {
        let coefs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: f64| -> f64 { basis.iter().zip(&coefs).map(|(b, c)| c * b.eval(x)).sum() };
        let norm_sq: f64 = coefs.iter().map(|c| c * c).sum();
        let mut sum_beta_sq = 0.0;
        for j in 0..=frame.j_max {
            for k in 0..frame.level(j).k_count {
                let beta = needlet_coefficient(frame, j, k, &f, Some(bw))?;
                sum_beta_sq += beta * beta;
            }
        }
        tight_residual = tight_residual.max((sum_beta_sq - norm_sq).abs() / norm_sq);
    }
    let summary = json!({
        "command": "frame validate",
        "B": cfg.b,
        "j_max": cfg.j_max,
        "partition_residual": partition_residual,
        "cubature_residual": cubature_residual,
        "tight_frame_residual": tight_residual,
    });
    write_summary(&out_path(&cfg.output_dir, "frame_validate.json"), &summary)?;
    println!("{summary}");
    if partition_residual > 1e-10 {
        return Err(Failure::Numerical(format!(
            "frame-partition: residual {partition_residual:.3e} exceeds 1e-10"
        )));
    }
    if cubature_residual > 1e-9 {
        return Err(Failure::Numerical(format!(
            "frame-cubature: residual {cubature_residual:.3e} exceeds 1e-9"
        )));
    }
    if tight_residual > 1e-6 {
        return Err(Failure::Numerical(format!(
            "frame-tight: relative residual {tight_residual:.3e} exceeds 1e-6"
        )));
    }
    Ok(())
}

fn density_build(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    let density = build_density(cfg, frame)?;
    let path = out_path(&cfg.output_dir, "density.txt");
    save_density(&density, &path)?;
    let reloaded = load_density(&path)?;
    // reload must be bit-exact at probe points
    for i in 0..64 {
        let x = TWO_PI * i as f64 / 64.0;
        if density.eval(x).to_bits() != reloaded.eval(x).to_bits() {
            return Err(Failure::Numerical(format!(
                "density-roundtrip: reload differs at x={x}"
            )));
        }
    }
    let norm = if cfg.amplitude > 0.0 {
        // q = ∞: the planted coefficients have exactly critical decay, so any
        // finite q makes the level sum non-summable by construction
        Some(besov_norm(&density, cfg.s, cfg.r, f64::INFINITY)?)
    } else {
        None
    };
    let summary = json!({
        "command": "density build",
        "s": cfg.s,
        "r": cfg.r,
        "amplitude": cfg.amplitude,
        "seed": cfg.density_seed,
        "f_max": density.f_max,
        "bandwidth": density.bandwidth,
        "besov_norm": norm,
        "path": path.display().to_string(),
    });
    write_summary(&out_path(&cfg.output_dir, "density_build.json"), &summary)?;
    println!("{summary}");
    Ok(())
}

fn sample_cmd(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    let density = build_density(cfg, frame)?;
    let schedule = intensity_schedule(cfg)?;
    let mut table = CsvTable::new(&["j", "r_t", "index", "angle"]);
    for (&j, &r_t) in cfg.j_list().iter().zip(&schedule) {
        let config = sample_poisson(&density, r_t, mix_seed(cfg.master_seed, j as u64));
        for (i, &x) in config.points.iter().enumerate() {
            table.push(vec![
                j.to_string(),
                format_float(r_t),
                i.to_string(),
                format_float(x),
            ]);
        }
    }
    table.write(&out_path(&cfg.output_dir, "sample.csv"))?;
    println!("wrote {}", out_path(&cfg.output_dir, "sample.csv").display());
    Ok(())
}

fn ustat_eval(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    let density = build_density(cfg, frame)?;
    let schedule = intensity_schedule(cfg)?;
    let mut table = CsvTable::new(&[
        "j", "r_t", "points", "value", "mean", "sigma_sq", "normalized",
    ]);
    for (&j, &r_t) in cfg.j_list().iter().zip(&schedule) {
        let at = |e: Error| Error::AtLevel {
            j,
            source: Box::new(e),
        };
        let config = sample_poisson(&density, r_t, mix_seed(cfg.master_seed, j as u64));
        let value = evaluate_kernel_ustat(frame, &config, j, cfg.n);
        let radius = suggested_truncation_radius(frame.level(j).k_count);
        let gram = compute_gram(frame, &density, j, radius).map_err(at)?;
        let report =
            ustat_report(&gram, r_t, cfg.b, cfg.s, cfg.d(), cfg.n, value).map_err(at)?;
        table.push(vec![
            j.to_string(),
            format_float(r_t),
            config.points.len().to_string(),
            format_float(report.value),
            format_float(report.mean),
            format_float(report.sigma_sq),
            format_float(report.normalized),
        ]);
    }
    table.write(&out_path(&cfg.output_dir, "ustat.csv"))?;
    println!("wrote {}", out_path(&cfg.output_dir, "ustat.csv").display());
    Ok(())
}

fn variance_cmd(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    let density = build_density(cfg, frame)?;
    let schedule = intensity_schedule(cfg)?;
    let mut header = vec!["j".to_string(), "r_t".into(), "mean".into(), "sigma_sq".into()];
    for p in 1..=cfg.n {
        header.push(format!("chaos_{p}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = CsvTable::new(&header_refs);
    for (&j, &r_t) in cfg.j_list().iter().zip(&schedule) {
        let at = |e: Error| Error::AtLevel {
            j,
            source: Box::new(e),
        };
        let radius = suggested_truncation_radius(frame.level(j).k_count);
        let gram = compute_gram(frame, &density, j, radius).map_err(at)?;
        let (mean, sigma_sq, chaos) = exact_variance(&gram, r_t, cfg.n).map_err(at)?;
        let mut row = vec![
            j.to_string(),
            format_float(r_t),
            format_float(mean),
            format_float(sigma_sq),
        ];
        row.extend(chaos.iter().map(|&c| format_float(c)));
        table.push(row);
    }
    table.write(&out_path(&cfg.output_dir, "variance.csv"))?;
    println!(
        "wrote {}",
        out_path(&cfg.output_dir, "variance.csv").display()
    );
    Ok(())
}

fn bounds_cmd(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>, regime: Regime) -> RunResult {
    let density = build_density(cfg, frame)?;
    let schedule = intensity_schedule(cfg)?;
    let mut summary_table = CsvTable::new(&[
        "j",
        "r_t",
        "stein_malliavin_bound",
        "rate_bound_i",
        "rate_bound_ii",
        "simple_rate",
    ]);
    let mut norms = CsvTable::new(&["j", "kind", "p", "q", "r", "l", "value"]);
    for (&j, &r_t) in cfg.j_list().iter().zip(&schedule) {
        let at = |e: Error| Error::AtLevel {
            j,
            source: Box::new(e),
        };
        let radius = suggested_truncation_radius(frame.level(j).k_count);
        let gram = compute_gram(frame, &density, j, radius).map_err(at)?;
        let report =
            compute_bound_report(&gram, r_t, cfg.b, cfg.s, cfg.d(), cfg.n, regime).map_err(at)?;
        summary_table.push(vec![
            j.to_string(),
            format_float(r_t),
            format_float(report.stein_malliavin_bound),
            format_float(report.rate_bound_i),
            format_float(report.rate_bound_ii),
            format_float(report.simple_rate),
        ]);
        for (&(p, q, r, l), &v) in &report.contraction_norms {
            norms.push(vec![
                j.to_string(),
                "contraction".into(),
                p.to_string(),
                q.to_string(),
                r.to_string(),
                l.to_string(),
                format_float(v),
            ]);
        }
        for (p, &v) in report.l4_norms.iter().enumerate() {
            norms.push(vec![
                j.to_string(),
                "l4".into(),
                (p + 1).to_string(),
                "0".into(),
                "0".into(),
                "0".into(),
                format_float(v),
            ]);
        }
    }
    summary_table.write(&out_path(&cfg.output_dir, "bounds.csv"))?;
    norms.write(&out_path(&cfg.output_dir, "bound_norms.csv"))?;
    println!("wrote {}", out_path(&cfg.output_dir, "bounds.csv").display());
    Ok(())
}

fn clt_cmd(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>, regime: Regime) -> RunResult {
    let density = build_density(cfg, frame)?;
    let schedule = intensity_schedule(cfg)?;
    let clt_cfg = CltConfig {
        b: cfg.b,
        s: cfg.s,
        d: cfg.d(),
        n: cfg.n,
        j_list: cfg.j_list(),
        r_t_schedule: schedule,
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        regime,
    };
    let result = run_clt_experiment(frame, &density, &clt_cfg)?;
    let mut table = CsvTable::new(&[
        "j",
        "r_t",
        "empirical_w1",
        "bootstrap_se",
        "sigma_sq",
        "dominance",
    ]);
    for row in &result.per_j {
        table.push(vec![
            row.j.to_string(),
            format_float(row.r_t),
            format_float(row.empirical_w1),
            format_float(row.bootstrap_se),
            format_float(row.sigma_sq),
            format!("{:?}", row.dominance),
        ]);
    }
    table.write(&out_path(&cfg.output_dir, "clt.csv"))?;
    let slope_ok = (result.fitted_slope - result.predicted_slope).abs()
        <= 0.25 * result.predicted_slope.abs();
    let summary = json!({
        "command": "clt",
        "regime": format!("{:?}", result.regime),
        "schedule": cfg.schedule_text,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "fitted_slope": result.fitted_slope,
        "predicted_slope": result.predicted_slope,
        "slope_within_25pct": slope_ok,
        "warnings": result.warnings,
    });
    write_summary(&out_path(&cfg.output_dir, "clt_summary.json"), &summary)?;
    println!("{summary}");
    if !slope_ok {
        return Err(Failure::Numerical(format!(
            "clt-rate-slope: fitted {:.4} vs predicted {:.4} (off by more than 25%)",
            result.fitted_slope, result.predicted_slope
        )));
    }
    Ok(())
}

fn depoissonize_cmd(cfg: &ExperimentConfig, frame: &Arc<NeedletFrame>) -> RunResult {
    if cfg.m_schedule.is_empty() {
        return Err(Failure::Validation(
            "depoissonize needs an m_schedule = ... entry in the config".into(),
        ));
    }
    let density = build_density(cfg, frame)?;
    let dp_cfg = DepoissonConfig {
        n: cfg.n,
        j: cfg.j_min,
        m_schedule: cfg.m_schedule.clone(),
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
    };
    let rows = run_depoissonization(frame, &density, &dp_cfg)?;
    let mut table = CsvTable::new(&[
        "m",
        "mean_sq_diff",
        "ratio_to_sqrt",
        "var_um",
        "var_um_prime",
    ]);
    for row in &rows {
        table.push(vec![
            row.m.to_string(),
            format_float(row.mean_sq_diff),
            format_float(row.ratio_to_sqrt),
            format_float(row.var_um),
            format_float(row.var_um_prime),
        ]);
    }
    table.write(&out_path(&cfg.output_dir, "depoissonize.csv"))?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_to_sqrt).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let last = rows.last().expect("non-empty schedule");
    let se = (2.0 / (cfg.replicates as f64 - 1.0)).sqrt();
    let summary = json!({
        "command": "depoissonize",
        "m_schedule": cfg.m_schedule,
        "replicates": cfg.replicates,
        "ratio_max_over_min": hi / lo,
        "var_um_prime_at_largest_m": last.var_um_prime,
        "var_gate_4se": 4.0 * se,
    });
    write_summary(&out_path(&cfg.output_dir, "depoissonize_summary.json"), &summary)?;
    println!("{summary}");
    if hi / lo >= 4.0 {
        return Err(Failure::Numerical(format!(
            "depoissonization-ratio: m^(1/2)·E[(U-U')²] spread {:.2} is not bounded by 4",
            hi / lo
        )));
    }
    if (last.var_um_prime - 1.0).abs() > 4.0 * se {
        return Err(Failure::Numerical(format!(
            "depoissonization-variance: Var at m={} is {:.4}, off 1 by more than 4 SE",
            last.m, last.var_um_prime
        )));
    }
    Ok(())
}
