//! Monte Carlo average over noise realizations.
//!
//! Each realization evolves an independent wavefunction; only its projection
//! onto the qubit frame is kept. Per-realization samples are reduced in
//! realization-index order, so the result does not depend on the number of
//! worker threads.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::predict_d;
use crate::error::{Error, Result};
use crate::noise::{realization_seed, telegraph_trace, NoiseParams, NoiseTrace};
use crate::potential::{build_basis, BasisRep, HamiltonianParams};
use crate::propagate::{evolve_realization_with_snapshots, PropagatorCache, SampledEvolution};
use crate::spectrum::{make_qubit_frame, polarization, QubitFrame, C64};

/// Samples above this average leakage trigger a warning.
pub const LEAKAGE_WARN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Energy eigenstate `index` (0 = ground) of the unbiased Hamiltonian.
    Energy { index: usize },
    /// Localized well state.
    Localized { side: Side },
    /// `l |L> + r |R>`, each given as `[re, im]`; normalized on use.
    Qubit { l: [f64; 2], r: [f64; 2] },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Energy { index: 0 }
    }
}

impl InitialState {
    pub fn state(&self, frame: &QubitFrame) -> Result<DVector<C64>> {
        let real = |v: &DVector<f64>| v.map(|x| C64::new(x, 0.0));
        match *self {
            InitialState::Energy { index } => frame
                .levels
                .states
                .get(index)
                .map(real)
                .ok_or_else(|| {
                    Error::invalid(
                        "initial_state.index",
                        format!("only the lowest {} levels are available", frame.levels.states.len()),
                    )
                }),
            InitialState::Localized { side: Side::L } => Ok(real(&frame.l_state)),
            InitialState::Localized { side: Side::R } => Ok(real(&frame.r_state)),
            InitialState::Qubit { l, r } => {
                let a = C64::new(l[0], l[1]);
                let b = C64::new(r[0], r[1]);
                let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::invalid("initial_state", "qubit coefficients are zero"));
                }
                Ok(real(&frame.l_state) * (a / norm) + real(&frame.r_state) * (b / norm))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub master_seed: u64,
    pub hamiltonian: HamiltonianParams,
    pub n_basis: usize,
    /// `n_steps` must equal `total_time / dt`.
    pub noise: NoiseParams,
    pub initial_state: InitialState,
    pub total_time: f64,
    pub sample_every: usize,
    /// Sample indices at which the full density matrix is accumulated.
    pub density_snapshots: Vec<usize>,
}

/// Number of steps covering `total_time`.
pub fn steps_for(total_time: f64, dt: f64) -> usize {
    (total_time / dt).round() as usize
}

/// Sampling stride giving about `points` output samples.
pub fn auto_sample_every(n_steps: usize, points: usize) -> usize {
    (n_steps as f64 / points.max(1) as f64).round().max(1.0) as usize
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be >= 1"));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::invalid("total_time", "must be > 0"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be >= 1"));
        }
        self.hamiltonian.validate()?;
        self.noise.validate()?;
        let expected = steps_for(self.total_time, self.noise.dt);
        if self.noise.n_steps != expected {
            return Err(Error::invalid(
                "noise.n_steps",
                format!("{} does not cover total_time (expected {expected})", self.noise.n_steps),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarizationTrace {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub rho2_avg: Vec<Matrix2<C64>>,
    pub p_vec: Vec<[f64; 3]>,
    pub leakage_avg: Vec<f64>,
    /// `(1 + P_x) / 2`.
    pub rho11_energy: Vec<f64>,
    pub stderr_rho11: Vec<f64>,
    /// Standard error of `|P|`, propagated from the per-component spreads.
    pub stderr_p: Vec<f64>,
    pub n_realizations: usize,
    /// `(sample index, averaged full density matrix in the oscillator basis)`.
    #[serde(skip)]
    pub density: Vec<(usize, DMatrix<C64>)>,
}

impl PolarizationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn p_norm(&self, i: usize) -> f64 {
        let p = self.p_vec[i];
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage_avg.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest eigenvalue of any averaged 2x2 block.
    pub fn min_eigenvalue(&self) -> f64 {
        self.rho2_avg
            .iter()
            .map(|r| {
                let tr = r[(0, 0)].re + r[(1, 1)].re;
                let diff = r[(0, 0)].re - r[(1, 1)].re;
                let off = r[(0, 1)].norm();
                0.5 * tr - (0.25 * diff * diff + off * off).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.p_vec.iter().map(|p| p[axis]).collect()
    }
}

/// `Tr(rho^2) / (Tr rho)^2` of the qubit block at sample `t_index`, in
/// `[1/2, 1]`.
pub fn purity(trace: &PolarizationTrace, t_index: usize) -> Result<f64> {
    let rho = trace
        .rho2_avg
        .get(t_index)
        .ok_or_else(|| Error::invalid("t_index", format!("out of range ({})", trace.len())))?;
    let tr = rho[(0, 0)].re + rho[(1, 1)].re;
    if tr <= 0.0 {
        return Err(Error::invalid("t_index", "qubit block is empty"));
    }
    let p = polarization(rho);
    let len_sq = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (tr * tr);
    Ok(0.5 * (1.0 + len_sq))
}

/// Everything a run needs that does not depend on the realization.
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub basis: BasisRep,
    pub frame: QubitFrame,
    pub cache: PropagatorCache,
    pub psi0: DVector<C64>,
}

impl Ensemble {
    pub fn prepare(config: EnsembleConfig) -> Result<Self> {
        config.validate()?;
        let frame_params = config.hamiltonian.with_phi_ext(0.0);
        let basis = build_basis(&config.hamiltonian, config.n_basis)?;
        let frame_basis = if config.hamiltonian.phi_ext == 0.0 {
            basis.clone()
        } else {
            build_basis(&frame_params, config.n_basis)?
        };
        let frame = make_qubit_frame(&frame_params, &frame_basis)?;
        let cache = PropagatorCache::new(&basis, &config.hamiltonian, config.noise.delta, config.noise.dt)?;
        let psi0 = config.initial_state.state(&frame)?;
        Ok(Ensemble {
            config,
            basis,
            frame,
            cache,
            psi0,
        })
    }

    /// Predicted dephasing rate using the measured well position.
    pub fn predicted_d(&self) -> Result<f64> {
        predict_d(
            self.config.hamiltonian.v0 * self.frame.phi_c,
            self.config.noise.delta,
            self.config.noise.omega_c,
        )
    }

    pub fn trace_for(&self, index: usize) -> Result<NoiseTrace> {
        telegraph_trace(
            &self.config.noise,
            realization_seed(self.config.master_seed, index as u64),
        )
    }

    pub fn run(&self, workers: Option<usize>) -> Result<PolarizationTrace> {
        self.run_with_traces(workers, |i| self.trace_for(i))
    }

    /// Run with caller-supplied noise traces (one per realization index).
    pub fn run_with_traces<F>(&self, workers: Option<usize>, traces: F) -> Result<PolarizationTrace>
    where
        F: Fn(usize) -> Result<NoiseTrace> + Sync,
    {
        let n = self.config.n_realizations;
        let realize = |i: usize| -> Result<SampledEvolution> {
            let trace = traces(i)?;
            evolve_realization_with_snapshots(
                &self.cache,
                &self.frame,
                &self.psi0,
                &trace,
                self.config.sample_every,
                &self.config.density_snapshots,
            )
        };
        let results: Vec<SampledEvolution> = match workers {
            Some(1) => (0..n).map(realize).collect::<Result<_>>()?,
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {w} workers: {e}")))?
                .install(|| (0..n).into_par_iter().map(realize).collect::<Result<_>>())?,
            None => (0..n).into_par_iter().map(realize).collect::<Result<_>>()?,
        };
        Ok(reduce(&results))
    }
}

pub fn run_ensemble(config: EnsembleConfig) -> Result<PolarizationTrace> {
    Ensemble::prepare(config)?.run(None)
}

/// Ordered reduction of per-realization samples.
fn reduce(results: &[SampledEvolution]) -> PolarizationTrace {
    let n = results.len();
    let n_f = n as f64;
    let samples = results[0].samples.len();
    let zero = C64::new(0.0, 0.0);

    let mut rho_sum = vec![Matrix2::from_element(zero); samples];
    let mut leak_sum = vec![0.0; samples];
    let mut sq_sum = vec![[0.0f64; 3]; samples];
    let mut density: Vec<(usize, DMatrix<C64>)> = Vec::new();

    for r in results {
        for (k, s) in r.samples.iter().enumerate() {
            rho_sum[k] += s.projection.rho2();
            leak_sum[k] += s.projection.leakage;
            let p = s.projection.polarization();
            for axis in 0..3 {
                sq_sum[k][axis] += p[axis] * p[axis];
            }
        }
        for (index, psi) in &r.snapshots {
            let outer = psi * psi.adjoint();
            match density.iter_mut().find(|(i, _)| i == index) {
                Some((_, acc)) => *acc += outer,
                None => density.push((*index, outer)),
            }
        }
    }
    for (_, acc) in density.iter_mut() {
        *acc /= C64::new(n_f, 0.0);
    }

    let mut trace = PolarizationTrace {
        times: results[0].times.clone(),
        rho2_avg: Vec::with_capacity(samples),
        p_vec: Vec::with_capacity(samples),
        leakage_avg: Vec::with_capacity(samples),
        rho11_energy: Vec::with_capacity(samples),
        stderr_rho11: Vec::with_capacity(samples),
        stderr_p: Vec::with_capacity(samples),
        n_realizations: n,
        density,
    };
    for k in 0..samples {
        let rho = rho_sum[k] / C64::new(n_f, 0.0);
        let p = polarization(&rho);
        let leakage = leak_sum[k] / n_f;
        // sample variance of each P component, with Bessel's correction
        let var = |axis: usize| -> f64 {
            if n < 2 {
                return 0.0;
            }
            ((sq_sum[k][axis] - n_f * p[axis] * p[axis]) / (n_f - 1.0)).max(0.0)
        };
        let (vx, vy, vz) = (var(0), var(1), var(2));
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let se_norm = if norm > 0.0 {
            ((p[0] * p[0] * vx + p[1] * p[1] * vy + p[2] * p[2] * vz) / (norm * norm) / n_f).sqrt()
        } else {
            ((vx + vy + vz) / n_f).sqrt()
        };
        if leakage > LEAKAGE_WARN {
            log::warn!("LeakageHigh: average leakage {leakage:.4} at t = {}", trace.times[k]);
        }
        trace.rho2_avg.push(rho);
        trace.p_vec.push(p);
        trace.leakage_avg.push(leakage);
        trace.rho11_energy.push(0.5 * (1.0 + p[0]));
        // rho11 = (1 + P_x)/2, so its spread is half that of P_x
        trace.stderr_rho11.push(0.5 * (vx / n_f).sqrt());
        trace.stderr_p.push(se_norm);
    }
    trace
}
