//! The two standard experiments, composed from the library operations:
//! dephasing from the ground state and damped oscillation from `|L>`.

use serde::Serialize;

use crate::analysis::{compare_report, fit_damped_cosine, fit_exponential, rms_deviation, ComparisonReport, FitResult};
use crate::bloch::{integrate_bloch, predict_d, BlochParams, BlochTrajectory};
use crate::config::{RunConfig, DEFAULT_DECAY_TIMES, DEFAULT_SAMPLES};
use crate::ensemble::{auto_sample_every, steps_for, Ensemble, EnsembleConfig, InitialState, PolarizationTrace, Side};
use crate::error::Result;
use crate::potential::{build_basis, BasisRep};
use crate::spectrum::{make_qubit_frame, QubitFrame};

/// Basis and frame at the unbiased point.
pub fn build_frame(cfg: &RunConfig) -> Result<(BasisRep, QubitFrame)> {
    let params = cfg.hamiltonian.with_phi_ext(0.0);
    let basis = build_basis(&params, cfg.basis.n_basis)?;
    let frame = make_qubit_frame(&params, &basis)?;
    Ok((basis, frame))
}

/// Predicted D with the measured well position `<R|phi|R>`.
pub fn predicted_d(cfg: &RunConfig, frame: &QubitFrame) -> Result<f64> {
    predict_d(cfg.hamiltonian.v0 * frame.phi_c, cfg.noise.delta, cfg.noise.omega_c)
}

/// Resolve automatic run length and sampling into a concrete ensemble
/// configuration.
pub fn ensemble_config(cfg: &RunConfig, frame: &QubitFrame, initial_state: InitialState) -> Result<EnsembleConfig> {
    let total_time = match cfg.ensemble.total_time {
        Some(t) => t,
        None => {
            let d = predicted_d(cfg, frame)?;
            if !(d > 0.0) {
                return Err(crate::error::Error::Validation {
                    path: "ensemble.total_time".into(),
                    message: "cannot derive a run length from D_pred = 0; set it explicitly".into(),
                });
            }
            DEFAULT_DECAY_TIMES / d
        }
    };
    let n_steps = steps_for(total_time, cfg.noise.dt);
    let sample_every = cfg
        .ensemble
        .sample_every
        .unwrap_or_else(|| auto_sample_every(n_steps, DEFAULT_SAMPLES));
    Ok(EnsembleConfig {
        n_realizations: cfg.ensemble.n_realizations,
        master_seed: cfg.ensemble.master_seed,
        hamiltonian: cfg.hamiltonian,
        n_basis: cfg.basis.n_basis,
        noise: cfg.noise.params(n_steps),
        initial_state,
        total_time: n_steps as f64 * cfg.noise.dt,
        sample_every,
        density_snapshots: cfg.ensemble.density_snapshots.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub ensemble: EnsembleConfig,
    /// Seed of each realization, in index order.
    pub seeds: Vec<u64>,
    pub d_pred: f64,
}

fn run(cfg: &RunConfig, initial: InitialState, workers: Option<usize>) -> Result<(Ensemble, PolarizationTrace, RunMetadata)> {
    let (_, frame) = build_frame(cfg)?;
    let ens_cfg = ensemble_config(cfg, &frame, initial)?;
    let ensemble = Ensemble::prepare(ens_cfg.clone())?;
    let trace = ensemble.run(workers)?;
    let seeds = (0..ens_cfg.n_realizations as u64)
        .map(|i| crate::noise::realization_seed(ens_cfg.master_seed, i))
        .collect();
    let d_pred = ensemble.predicted_d()?;
    Ok((
        ensemble,
        trace,
        RunMetadata {
            ensemble: ens_cfg,
            seeds,
            d_pred,
        },
    ))
}

/// Run the configured ensemble as-is (no experiment-specific overrides).
pub fn run_configured(cfg: &RunConfig, workers: Option<usize>) -> Result<(QubitFrame, PolarizationTrace, RunMetadata)> {
    let (ensemble, trace, meta) = run(cfg, cfg.ensemble.initial_state, workers)?;
    Ok((ensemble.frame, trace, meta))
}

pub struct DephasingRun {
    pub frame: QubitFrame,
    pub trace: PolarizationTrace,
    pub meta: RunMetadata,
    pub fit: FitResult,
    pub report: ComparisonReport,
    /// `|rho11(T) - 1/2|` at the last sample.
    pub endpoint_deviation: f64,
}

/// Start in the ground state and fit the decay of `rho11 = (1 + P_x)/2`.
/// The fit is unweighted: samples along a realization are correlated over
/// `1/omega_c`, and the standard error vanishes at t = 0.
pub fn dephasing_experiment(cfg: &RunConfig, workers: Option<usize>) -> Result<DephasingRun> {
    let (ensemble, trace, meta) = run(cfg, InitialState::Energy { index: 0 }, workers)?;
    let fit = fit_exponential(&trace.times, &trace.rho11_energy, None)?;
    let tol = &cfg.analysis.tolerances;
    let mut report = compare_report(
        &fit,
        meta.d_pred,
        &ensemble.frame.summary(),
        trace.max_leakage(),
        serde_json::to_value(cfg)?,
        tol,
    )?;
    let endpoint_deviation = (trace.rho11_energy.last().copied().unwrap_or(1.0) - 0.5).abs();
    report.add_check("endpoint_deviation", endpoint_deviation, tol.endpoint, endpoint_deviation <= tol.endpoint, false);
    Ok(DephasingRun {
        frame: ensemble.frame,
        trace,
        meta,
        fit,
        report,
        endpoint_deviation,
    })
}

pub struct OscillationRun {
    pub frame: QubitFrame,
    pub trace: PolarizationTrace,
    pub meta: RunMetadata,
    pub fit: FitResult,
    pub report: ComparisonReport,
    /// Bloch solution with `(V_x, D_pred)` on the trace's time grid.
    pub bloch: BlochTrajectory,
    pub bloch_rms: f64,
}

/// Start in `|L>` (P along +z) and fit the damped oscillation of `P_z`.
pub fn oscillation_experiment(cfg: &RunConfig, workers: Option<usize>) -> Result<OscillationRun> {
    let (ensemble, trace, meta) = run(cfg, InitialState::Localized { side: Side::L }, workers)?;
    let pz = trace.component(2);
    let fit = fit_damped_cosine(&trace.times, &pz)?;
    let bloch = integrate_bloch(
        [0.0, 0.0, 1.0],
        &BlochParams {
            v: [ensemble.frame.v_x, 0.0, 0.0],
            d: meta.d_pred,
        },
        &trace.times,
    )?;
    let bloch_rms = rms_deviation(&pz, &bloch.component(2))?;
    let tol = &cfg.analysis.tolerances;
    let mut report = compare_report(
        &fit,
        meta.d_pred,
        &ensemble.frame.summary(),
        trace.max_leakage(),
        serde_json::to_value(cfg)?,
        tol,
    )?;
    report.add_check("bloch_rms", bloch_rms, tol.bloch_rms, bloch_rms <= tol.bloch_rms, true);
    Ok(OscillationRun {
        frame: ensemble.frame,
        trace,
        meta,
        fit,
        report,
        bloch,
        bloch_rms,
    })
}
