//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 a `reproduce-*` run finished outside its tolerances.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{compare_report, fit_damped_cosine, fit_exponential, ComparisonReport};
use crate::bloch::{integrate_bloch, predict_d, uniform_grid, BlochParams};
use crate::config::{load_config, LoadedConfig, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, build_frame, predicted_d};
use crate::io;
use crate::noise::{autocorr_integral, telegraph_trace};
use crate::spectrum::{calibrate_mu, eigensystem};

pub const OUTPUT_DIR_ENV: &str = "RFSQUID_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "rfsquid", version, about = "Telegraph-noise decoherence of an rf-SQUID flux qubit (hbar = 1)")]
pub struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Exponential,
    DampedCosine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest levels and the qubit frame at phi_ext = 0.
    Spectrum {
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Scan the mass for an isolated doublet with the configured splitting.
    Calibrate,
    /// Sample one telegraph trace and estimate its correlation integral.
    Noise {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_steps: Option<usize>,
    },
    /// Run the configured ensemble.
    Ensemble,
    /// Integrate the damped Bloch equation.
    Bloch {
        #[arg(long)]
        v_x: f64,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        /// Initial polarization "x,y,z".
        #[arg(long, default_value = "0,0,1", value_parser = parse_vec3)]
        p0: [f64; 3],
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 501)]
        points: usize,
    },
    /// Predicted dephasing rate 4 (V0 phi_c)^2 delta^2 / omega_c.
    PredictD {
        #[arg(long)]
        v0_phi_c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        omega_c: f64,
        /// Print all 17 significant digits.
        #[arg(long)]
        precise: bool,
    },
    /// Fit an ensemble CSV and compare with the predicted rate.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exponential")]
        model: ModelArg,
        /// Weight the exponential fit by the per-point standard error.
        #[arg(long)]
        weighted: bool,
    },
    /// Dephasing from the ground state, fitted against the predicted D.
    #[command(name = "reproduce-fig2")]
    ReproduceFig2,
    /// Damped oscillation from |L>, compared with the Bloch solution.
    #[command(name = "reproduce-fig3")]
    ReproduceFig3,
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated numbers".to_string())
}

struct Context {
    loaded: LoadedConfig,
    out_dir: PathBuf,
    workers: Option<usize>,
}

impl Context {
    fn cfg(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// `resolved_config.json` loads back with `--config`; the list of
    /// defaulted fields goes next to it.
    fn prepare_output(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        io::write_json(self.cfg(), &self.path("resolved_config.json"))?;
        io::write_json(
            &json!({ "defaulted": self.loaded.defaulted }),
            &self.path("config_provenance.json"),
        )
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Command::PredictD {
        v0_phi_c,
        delta,
        omega_c,
        precise,
    } = cli.command
    {
        let d = predict_d(v0_phi_c, delta, omega_c)?;
        if precise {
            println!("{}", io::fmt_f64(d));
        } else {
            println!("{}", three_significant(d));
        }
        return Ok(0);
    }
    if let Some(0) = cli.workers {
        return Err(Error::Usage("--workers must be >= 1".into()));
    }

    let loaded = match &cli.config {
        Some(path) => load_config(path)?,
        None => crate::config::load_config_str("{}", "<defaults>")?,
    };
    let out_dir = cli
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&loaded.config.output.directory));
    let ctx = Context {
        loaded,
        out_dir,
        workers: cli.workers,
    };
    ctx.prepare_output()?;

    match cli.command {
        Command::Spectrum { levels } => spectrum(&ctx, levels),
        Command::Calibrate => calibrate(&ctx),
        Command::Noise { seed, n_steps } => noise(&ctx, seed, n_steps),
        Command::Ensemble => ensemble(&ctx),
        Command::Bloch {
            v_x,
            d,
            p0,
            t_max,
            points,
        } => bloch(&ctx, v_x, d, p0, t_max, points),
        Command::Fit {
            input,
            model,
            weighted,
        } => fit(&ctx, &input, model, weighted),
        Command::ReproduceFig2 => reproduce_fig2(&ctx),
        Command::ReproduceFig3 => reproduce_fig3(&ctx),
        Command::PredictD { .. } => unreachable!(),
    }
}

fn three_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

fn spectrum(ctx: &Context, levels: usize) -> Result<i32> {
    let (basis, frame) = build_frame(ctx.cfg())?;
    let spec = eigensystem(&basis.h_matrix, levels.max(1).min(basis.n_basis))?;
    io::write_spectrum_csv(&spec, io::create_file(&ctx.path("spectrum.csv"))?)?;
    let summary = frame.summary();
    io::write_json(&summary, &ctx.path("frame.json"))?;
    for (i, e) in spec.energies.iter().enumerate() {
        println!("E{} = {}", i + 1, io::fmt_f64(*e));
    }
    println!("V_x = {:.6e}  phi_c = {:.6}  isolation = {:.2}", summary.v_x, summary.phi_c, summary.isolation);
    Ok(0)
}

fn calibrate(ctx: &Context) -> Result<i32> {
    let cfg = ctx.cfg();
    let cal = calibrate_mu(&cfg.hamiltonian, cfg.basis.n_basis, &cfg.calibration)?;
    let mut w = csv::Writer::from_writer(io::create_file(&ctx.path("calibration.csv"))?);
    w.write_record(["mu", "v_x", "isolation", "qualifies"])?;
    for row in &cal.scan {
        w.write_record([
            io::fmt_f64(row.mu),
            io::fmt_f64(row.v_x),
            io::fmt_f64(row.isolation),
            row.qualifies.to_string(),
        ])?;
    }
    w.flush()?;
    io::write_json(&json!({ "mu": cal.mu, "targets": cfg.calibration }), &ctx.path("calibration.json"))?;
    println!("mu = {}", io::fmt_f64(cal.mu));
    Ok(0)
}

fn noise(ctx: &Context, seed: Option<u64>, n_steps: Option<usize>) -> Result<i32> {
    let cfg = ctx.cfg();
    let params = cfg.noise.params(n_steps.unwrap_or(cfg.noise.n_steps));
    let trace = telegraph_trace(&params, seed.unwrap_or(cfg.noise.seed))?;
    let est = autocorr_integral(&trace)?;
    io::write_noise_csv(&trace, io::create_file(&ctx.path("noise_trace.csv"))?)?;
    io::write_autocorr_csv(&est, params.dt, io::create_file(&ctx.path("autocorr.csv"))?)?;
    let expected = params.correlation_integral();
    io::write_json(
        &json!({
            "seed": trace.seed,
            "params": params,
            "integral": est.integral,
            "expected": expected,
            "n_lags": est.n_lags,
            "nonstationary": est.nonstationary,
            "flips": trace.flip_count(),
        }),
        &ctx.path("noise.json"),
    )?;
    println!("integral = {:.6e} (delta^2/omega_c = {:.6e})", est.integral, expected);
    Ok(0)
}

fn ensemble(ctx: &Context) -> Result<i32> {
    let (frame, trace, meta) = experiments::run_configured(ctx.cfg(), ctx.workers)?;
    write_trace(ctx, "ensemble", &trace, &meta, &frame)?;
    println!(
        "{} realizations, {} samples, max leakage {:.3e}",
        trace.n_realizations,
        trace.len(),
        trace.max_leakage()
    );
    Ok(0)
}

fn write_trace(
    ctx: &Context,
    stem: &str,
    trace: &crate::ensemble::PolarizationTrace,
    meta: &experiments::RunMetadata,
    frame: &crate::spectrum::QubitFrame,
) -> Result<()> {
    if ctx.cfg().wants("csv") {
        io::write_ensemble_csv(trace, io::create_file(&ctx.path(&format!("{stem}.csv")))?)?;
    }
    if ctx.cfg().wants("json") {
        io::write_json(
            &json!({
                "config": ctx.cfg(),
                "run": meta,
                "frame": frame.summary(),
                "units": "hbar = 1; time in inverse energy units",
            }),
            &ctx.path(&format!("{stem}.json")),
        )?;
    }
    Ok(())
}

fn bloch(ctx: &Context, v_x: f64, d: f64, p0: [f64; 3], t_max: f64, points: usize) -> Result<i32> {
    if !(t_max > 0.0) {
        return Err(Error::Usage("--t-max must be > 0".into()));
    }
    let traj = integrate_bloch(p0, &BlochParams { v: [v_x, 0.0, 0.0], d }, &uniform_grid(t_max, points))?;
    io::write_bloch_csv(&traj, io::create_file(&ctx.path("bloch.csv"))?)?;
    let last = traj.p.last().copied().unwrap_or(p0);
    println!("P(t_max) = ({:.6}, {:.6}, {:.6})", last[0], last[1], last[2]);
    Ok(0)
}

fn emit_report(ctx: &Context, stem: &str, report: &ComparisonReport) -> Result<()> {
    io::write_json(report, &ctx.path(&format!("{stem}.json")))?;
    std::fs::write(ctx.path(&format!("{stem}.txt")), format!("{report}\n"))?;
    println!("{report}");
    Ok(())
}

fn fit(ctx: &Context, input: &Path, model: ModelArg, weighted: bool) -> Result<i32> {
    let series = io::read_ensemble_csv(input)?;
    let (_, frame) = build_frame(ctx.cfg())?;
    let d_pred = predicted_d(ctx.cfg(), &frame)?;
    let result = match model {
        ModelArg::Exponential => fit_exponential(
            &series.time,
            &series.rho11_energy,
            weighted.then_some(series.stderr_rho11.as_slice()),
        )?,
        ModelArg::DampedCosine => fit_damped_cosine(&series.time, &series.p_z)?,
    };
    let leakage_max = series.leakage.iter().copied().fold(0.0, f64::max);
    let report = compare_report(
        &result,
        d_pred,
        &frame.summary(),
        leakage_max,
        serde_json::to_value(ctx.cfg())?,
        &ctx.cfg().analysis.tolerances,
    )?;
    emit_report(ctx, "fit_report", &report)?;
    Ok(0)
}

fn reproduce_fig2(ctx: &Context) -> Result<i32> {
    let run = experiments::dephasing_experiment(ctx.cfg(), ctx.workers)?;
    write_trace(ctx, "fig2", &run.trace, &run.meta, &run.frame)?;
    emit_report(ctx, "fig2_report", &run.report)?;
    Ok(if run.report.passed { 0 } else { 3 })
}

fn reproduce_fig3(ctx: &Context) -> Result<i32> {
    let run = experiments::oscillation_experiment(ctx.cfg(), ctx.workers)?;
    write_trace(ctx, "fig3", &run.trace, &run.meta, &run.frame)?;
    io::write_bloch_csv(&run.bloch, io::create_file(&ctx.path("fig3_bloch.csv"))?)?;
    emit_report(ctx, "fig3_report", &run.report)?;
    Ok(if run.report.passed { 0 } else { 3 })
}
