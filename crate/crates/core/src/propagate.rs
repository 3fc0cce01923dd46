//! Exact piecewise-constant propagation.
//!
//! Telegraph noise only ever produces the Hamiltonians `H(phi_ext + delta)`
//! and `H(phi_ext - delta)`, so each gets diagonalized once. A state is kept
//! as coefficients in the eigenbasis of the branch that is currently active:
//! a step is then a diagonal phase multiply, and a noise flip is one real
//! orthogonal change of basis. This is algebraically the same as applying
//! the dense `U = W exp(-i L dt) W^T`, at O(n) cost per step instead of
//! O(n^2).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::noise::NoiseTrace;
use crate::potential::{build_hamiltonian, BasisRep, HamiltonianParams};
use crate::spectrum::{eigensystem, QubitFrame, QubitProjection, C64};

/// `exp(-i h dt)` from the eigendecomposition of `h`.
pub fn build_propagator(h: &DMatrix<f64>, dt: f64) -> Result<DMatrix<C64>> {
    Branch::new(h, 0.0, dt).map(|b| b.dense())
}

/// `max |U^dagger U - I|`.
pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// One constant Hamiltonian: eigenvectors (columns), eigenvalues and the
/// per-step phase factors.
#[derive(Debug, Clone)]
pub struct Branch {
    pub phi_ext: f64,
    pub vectors: DMatrix<f64>,
    pub energies: Vec<f64>,
    phases: Vec<C64>,
}

impl Branch {
    pub fn new(h: &DMatrix<f64>, phi_ext: f64, dt: f64) -> Result<Self> {
        let n = h.nrows();
        let spec = eigensystem(h, n)?;
        let vectors = DMatrix::from_columns(&spec.states);
        let phases = spec
            .energies
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * dt))
            .collect();
        Ok(Branch {
            phi_ext,
            vectors,
            energies: spec.energies,
            phases,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Dense propagator `W exp(-i L dt) W^T`.
    pub fn dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let w = self.vectors.map(|x| C64::new(x, 0.0));
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.phases));
        let u = &w * d * w.transpose();
        debug_assert_eq!(u.nrows(), n);
        u
    }

    /// `W^T v` for a real vector.
    fn coords_real(&self, v: &DVector<f64>) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.vectors.column(i).dot(v))
            .collect()
    }

    fn to_branch(&self, psi: &DVector<C64>) -> Vec<C64> {
        (0..self.dim())
            .map(|i| {
                self.vectors
                    .column(i)
                    .iter()
                    .zip(psi.iter())
                    .fold(C64::new(0.0, 0.0), |acc, (&w, &z)| acc + z * w)
            })
            .collect()
    }

    fn to_oscillator(&self, coeffs: &[C64]) -> DVector<C64> {
        let n = self.dim();
        let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
        for (i, &c) in coeffs.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.vectors.column(i).iter()) {
                *o += c * w;
            }
        }
        out
    }
}

/// Row-major `W_to^T W_from`, mapping coefficients between eigenbases.
#[derive(Debug, Clone)]
struct Rotation {
    n: usize,
    rows: Vec<f64>,
}

impl Rotation {
    fn between(from: &Branch, to: &Branch) -> Self {
        let o = to.vectors.transpose() * &from.vectors;
        let n = o.nrows();
        // column-major storage of O^T is row-major storage of O
        let rows = o.transpose().as_slice().to_vec();
        Rotation { n, rows }
    }

    fn apply(&self, src: &[C64], dst: &mut [C64]) {
        for (i, out) in dst.iter_mut().enumerate() {
            let row = &self.rows[i * self.n..(i + 1) * self.n];
            let (mut re, mut im) = (0.0, 0.0);
            for (&o, z) in row.iter().zip(src) {
                re += o * z.re;
                im += o * z.im;
            }
            *out = C64::new(re, im);
        }
    }
}

/// Exact step operators for the three noise levels `phi_ext` and
/// `phi_ext +- delta`.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    pub dt: f64,
    pub delta: f64,
    pub phi_ext: f64,
    branches: [Branch; 3],
    rotations: Vec<Rotation>,
}

const ZERO: usize = 0;
const PLUS: usize = 1;
const MINUS: usize = 2;

impl PropagatorCache {
    pub fn new(basis: &BasisRep, params: &HamiltonianParams, delta: f64, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be finite and >= 0"));
        }
        let make = |x: f64| -> Result<Branch> {
            Branch::new(&build_hamiltonian(basis, params, x)?, x, dt)
        };
        let zero = make(params.phi_ext)?;
        let (plus, minus) = if delta == 0.0 {
            (zero.clone(), zero.clone())
        } else {
            (make(params.phi_ext + delta)?, make(params.phi_ext - delta)?)
        };
        let branches = [zero, plus, minus];
        let mut rotations = Vec::with_capacity(9);
        for from in &branches {
            for to in &branches {
                rotations.push(Rotation::between(from, to));
            }
        }
        Ok(PropagatorCache {
            dt,
            delta,
            phi_ext: params.phi_ext,
            branches,
            rotations,
        })
    }

    pub fn u_zero(&self) -> DMatrix<C64> {
        self.branches[ZERO].dense()
    }

    pub fn u_plus(&self) -> DMatrix<C64> {
        self.branches[PLUS].dense()
    }

    pub fn u_minus(&self) -> DMatrix<C64> {
        self.branches[MINUS].dense()
    }

    pub fn n_basis(&self) -> usize {
        self.branches[ZERO].dim()
    }

    fn branch_for(&self, value: f64) -> Result<usize> {
        let tol = 1e-12 * self.delta.abs().max(1e-300);
        if value == 0.0 && self.delta == 0.0 {
            Ok(ZERO)
        } else if self.delta != 0.0 && (value - self.delta).abs() <= tol {
            Ok(PLUS)
        } else if self.delta != 0.0 && (value + self.delta).abs() <= tol {
            Ok(MINUS)
        } else if value == 0.0 {
            Ok(ZERO)
        } else {
            Err(Error::UnknownNoiseLevel { value })
        }
    }
}

/// One recorded point of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSample {
    pub projection: QubitProjection,
    /// Squared norm of the full state.
    pub norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SampledEvolution {
    pub times: Vec<f64>,
    pub samples: Vec<QubitSample>,
    /// Full states at the requested sample indices, oscillator basis.
    pub snapshots: Vec<(usize, DVector<C64>)>,
    pub final_state: DVector<C64>,
}

/// Coefficients of a state in the eigenbasis of the active branch.
struct Stepper<'a> {
    branch: &'a Branch,
    coeffs: Vec<C64>,
    scratch: Vec<C64>,
    /// `(W^T |L>, W^T |R>)` for the active branch.
    frame_coords: (Vec<f64>, Vec<f64>),
}

impl<'a> Stepper<'a> {
    fn new(branch: &'a Branch, frame: &QubitFrame, psi0: &DVector<C64>) -> Self {
        Stepper {
            branch,
            coeffs: branch.to_branch(psi0),
            scratch: vec![C64::new(0.0, 0.0); branch.dim()],
            frame_coords: (
                branch.coords_real(&frame.l_state),
                branch.coords_real(&frame.r_state),
            ),
        }
    }

    fn switch(&mut self, to: &'a Branch, rotation: &Rotation, frame_coords: (Vec<f64>, Vec<f64>)) {
        rotation.apply(&self.coeffs, &mut self.scratch);
        std::mem::swap(&mut self.coeffs, &mut self.scratch);
        self.branch = to;
        self.frame_coords = frame_coords;
    }

    fn step(&mut self) {
        for (c, p) in self.coeffs.iter_mut().zip(&self.branch.phases) {
            *c *= p;
        }
    }

    fn sample(&self) -> QubitSample {
        let (l, r) = &self.frame_coords;
        let mut a = C64::new(0.0, 0.0);
        let mut b = C64::new(0.0, 0.0);
        let mut norm_sq = 0.0;
        for ((c, &lw), &rw) in self.coeffs.iter().zip(l).zip(r) {
            a += c * lw;
            b += c * rw;
            norm_sq += c.norm_sqr();
        }
        QubitSample {
            projection: QubitProjection::from_amplitudes(a, b, 1.0),
            norm_sq,
        }
    }

    fn state(&self) -> DVector<C64> {
        self.branch.to_oscillator(&self.coeffs)
    }
}

fn check_state(psi0: &DVector<C64>, n: usize) -> Result<()> {
    if psi0.len() != n {
        return Err(Error::invalid(
            "psi0",
            format!("length {} does not match basis size {n}", psi0.len()),
        ));
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("psi0", format!("not normalized (|psi|^2 = {norm})")));
    }
    Ok(())
}

pub fn evolve_realization(
    cache: &PropagatorCache,
    frame: &QubitFrame,
    psi0: &DVector<C64>,
    trace: &NoiseTrace,
    sample_every: usize,
) -> Result<SampledEvolution> {
    evolve_realization_with_snapshots(cache, frame, psi0, trace, sample_every, &[])
}

/// As [`evolve_realization`], also keeping full states at the listed sample
/// indices.
pub fn evolve_realization_with_snapshots(
    cache: &PropagatorCache,
    frame: &QubitFrame,
    psi0: &DVector<C64>,
    trace: &NoiseTrace,
    sample_every: usize,
    snapshot_at: &[usize],
) -> Result<SampledEvolution> {
    let trace_dt = trace.params.dt;
    if (trace_dt - cache.dt).abs() > 1e-12 * cache.dt.abs().max(1e-300) {
        return Err(Error::StepMismatch {
            trace_dt,
            cache_dt: cache.dt,
        });
    }
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be >= 1"));
    }
    check_state(psi0, cache.n_basis())?;

    let levels: Vec<usize> = trace
        .values
        .iter()
        .map(|&v| cache.branch_for(v))
        .collect::<Result<_>>()?;
    let first = levels.first().copied().unwrap_or(ZERO);

    let coords: Vec<(Vec<f64>, Vec<f64>)> = cache
        .branches
        .iter()
        .map(|b| (b.coords_real(&frame.l_state), b.coords_real(&frame.r_state)))
        .collect();

    let mut stepper = Stepper::new(&cache.branches[first], frame, psi0);
    let mut current = first;
    let mut recorder = Recorder::new(levels.len() / sample_every + 1, snapshot_at);
    recorder.record(0.0, &stepper);

    for (k, &level) in levels.iter().enumerate() {
        if level != current {
            stepper.switch(
                &cache.branches[level],
                &cache.rotations[current * 3 + level],
                coords[level].clone(),
            );
            current = level;
        }
        stepper.step();
        if (k + 1).is_multiple_of(sample_every) {
            recorder.record((k + 1) as f64 * cache.dt, &stepper);
        }
    }
    Ok(recorder.finish(&stepper))
}

struct Recorder<'s> {
    times: Vec<f64>,
    samples: Vec<QubitSample>,
    snapshot_at: &'s [usize],
    snapshots: Vec<(usize, DVector<C64>)>,
}

impl<'s> Recorder<'s> {
    fn new(capacity: usize, snapshot_at: &'s [usize]) -> Self {
        Recorder {
            times: Vec::with_capacity(capacity),
            samples: Vec::with_capacity(capacity),
            snapshot_at,
            snapshots: Vec::new(),
        }
    }

    fn record(&mut self, t: f64, stepper: &Stepper) {
        let index = self.samples.len();
        if self.snapshot_at.contains(&index) {
            self.snapshots.push((index, stepper.state()));
        }
        self.times.push(t);
        self.samples.push(stepper.sample());
    }

    fn finish(self, stepper: &Stepper) -> SampledEvolution {
        SampledEvolution {
            times: self.times,
            samples: self.samples,
            snapshots: self.snapshots,
            final_state: stepper.state(),
        }
    }
}

/// Noiseless evolution under a piecewise-constant bias schedule of
/// `(phi_ext, duration)` segments. Durations must be whole multiples of `dt`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_schedule(
    params: &HamiltonianParams,
    basis: &BasisRep,
    frame: &QubitFrame,
    schedule: &[(f64, f64)],
    psi0: &DVector<C64>,
    dt: f64,
    sample_every: usize,
) -> Result<SampledEvolution> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be >= 1"));
    }
    check_state(psi0, basis.n_basis)?;

    let mut branches: Vec<Branch> = Vec::new();
    let mut segments = Vec::with_capacity(schedule.len());
    for &(phi_ext, duration) in schedule {
        if !(duration > 0.0) {
            return Err(Error::invalid("schedule", "durations must be positive"));
        }
        let steps = (duration / dt).round();
        if (steps * dt - duration).abs() > 1e-9 * duration {
            return Err(Error::invalid(
                "schedule",
                format!("duration {duration} is not a multiple of dt = {dt}"),
            ));
        }
        let index = match branches.iter().position(|b| b.phi_ext == phi_ext) {
            Some(i) => i,
            None => {
                let h = build_hamiltonian(basis, params, phi_ext)?;
                branches.push(Branch::new(&h, phi_ext, dt)?);
                branches.len() - 1
            }
        };
        segments.push((index, steps as usize));
    }

    let total: usize = segments.iter().map(|s| s.1).sum();
    let mut recorder = Recorder::new(total / sample_every + 1, &[]);
    let Some(&(first, _)) = segments.first() else {
        let zero = Branch {
            phi_ext: params.phi_ext,
            vectors: DMatrix::identity(basis.n_basis, basis.n_basis),
            energies: vec![0.0; basis.n_basis],
            phases: vec![C64::new(1.0, 0.0); basis.n_basis],
        };
        let stepper = Stepper::new(&zero, frame, psi0);
        recorder.record(0.0, &stepper);
        return Ok(recorder.finish(&stepper));
    };

    let mut stepper = Stepper::new(&branches[first], frame, psi0);
    let mut current = first;
    recorder.record(0.0, &stepper);
    let mut k = 0usize;
    for (index, steps) in segments {
        if index != current {
            let to = &branches[index];
            let rotation = Rotation::between(&branches[current], to);
            let coords = (to.coords_real(&frame.l_state), to.coords_real(&frame.r_state));
            stepper.switch(to, &rotation, coords);
            current = index;
        }
        for _ in 0..steps {
            stepper.step();
            k += 1;
            if k.is_multiple_of(sample_every) {
                recorder.record(k as f64 * dt, &stepper);
            }
        }
    }
    Ok(recorder.finish(&stepper))
}
