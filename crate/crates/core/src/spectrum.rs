//! Stationary states and the two-level frame built from the lowest doublet.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{build_basis, build_hamiltonian, BasisRep, HamiltonianParams};

pub type C64 = Complex<f64>;

/// Ratio (E3-E2)/(E2-E1) below which the doublet is not treated as a qubit.
/// Frames whose lowest levels reach further into the basis are rejected.
pub const BASIS_TAIL_MAX: f64 = 1e-10;
pub const DEFAULT_ISOLATION_MIN: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Lowest eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors matching `energies`.
    pub states: Vec<DVector<f64>>,
    /// Set when two returned levels are closer than 1e-12.
    pub degenerate: bool,
}

/// Lowest `k` eigenpairs of a real symmetric matrix.
pub fn eigensystem(h: &DMatrix<f64>, k: usize) -> Result<SpectrumResult> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::invalid("h", "matrix is not square"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("must be in 1..={n}, got {k}")));
    }
    let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::ConvergenceFailure(format!("{n}x{n} symmetric matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let energies: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let states = order[..k]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let degenerate = energies.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-12);
    if degenerate {
        log::warn!("degenerate levels among the lowest {k}");
    }
    Ok(SpectrumResult {
        energies,
        states,
        degenerate,
    })
}

/// Flip the sign so the largest-magnitude coefficient is positive.
fn fix_sign(v: &mut DVector<f64>) {
    let pivot = v.iamax();
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

/// Fixed two-level frame defined by the noiseless, unbiased Hamiltonian.
///
/// Axis convention: +x is the ground state `(|L> + |R>)/sqrt2`, +z is `|L>`
/// (the negative-flux well), and y completes a right-handed triple.
#[derive(Debug, Clone)]
pub struct QubitFrame {
    pub e1: f64,
    pub e2: f64,
    /// Tunnel splitting E2 - E1.
    pub v_x: f64,
    pub state1: DVector<f64>,
    pub state2: DVector<f64>,
    pub l_state: DVector<f64>,
    pub r_state: DVector<f64>,
    /// <R|phi|R>.
    pub phi_c: f64,
    /// (E3 - E2) / (E2 - E1).
    pub isolation: f64,
    /// See [`basis_tail`].
    pub basis_tail: f64,
    /// Lowest four levels with phase-fixed vectors (index 0, 1 equal
    /// `state1`, `state2`).
    pub levels: SpectrumResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub v_x: f64,
    pub phi_c: f64,
    pub isolation: f64,
    pub basis_tail: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl QubitFrame {
    pub fn summary(&self) -> FrameSummary {
        FrameSummary {
            v_x: self.v_x,
            phi_c: self.phi_c,
            isolation: self.isolation,
            basis_tail: self.basis_tail,
            e1: self.e1,
            e2: self.e2,
            e3: self.levels.energies[2],
            e4: self.levels.energies[3],
        }
    }

    pub fn n_basis(&self) -> usize {
        self.state1.len()
    }

    pub fn check_isolation(&self, required: f64) -> Result<()> {
        if self.isolation < required {
            return Err(Error::PoorIsolation {
                isolation: self.isolation,
                required,
            });
        }
        Ok(())
    }
}

/// Largest weight any of `states` keeps in the top quarter of the basis.
pub fn basis_tail(states: &[DVector<f64>]) -> f64 {
    states
        .iter()
        .map(|v| {
            let n = v.len();
            let start = n - n / 4;
            v.rows(start, n - start).norm_squared()
        })
        .fold(0.0, f64::max)
}

pub fn make_qubit_frame(params: &HamiltonianParams, basis: &BasisRep) -> Result<QubitFrame> {
    if params.phi_ext != 0.0 {
        return Err(Error::invalid(
            "phi_ext",
            "the qubit frame is defined at phi_ext = 0",
        ));
    }
    let h = build_hamiltonian(basis, params, 0.0)?;
    let mut levels = eigensystem(&h, 4.min(basis.n_basis))?;
    let tail = basis_tail(&levels.states);
    if tail > BASIS_TAIL_MAX {
        return Err(Error::BasisUnconverged {
            n_basis: basis.n_basis,
            tail,
        });
    }
    for v in levels.states.iter_mut() {
        fix_sign(v);
    }
    let e = &levels.energies;
    let v_x = e[1] - e[0];
    if v_x <= 0.0 {
        return Err(Error::ConvergenceFailure(format!(
            "lowest doublet is degenerate (splitting {v_x:e})"
        )));
    }

    let phi = &basis.phi_matrix;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let state1 = levels.states[0].clone();
    let mut state2 = levels.states[1].clone();
    let mut r_state = (&state1 + &state2) * s;
    if r_state.dot(&(phi * &r_state)) <= 0.0 {
        state2.neg_mut();
        levels.states[1] = state2.clone();
        r_state = (&state1 + &state2) * s;
    }
    let l_state = (&state1 - &state2) * s;
    let phi_c = r_state.dot(&(phi * &r_state));
    let isolation = (e[2] - e[1]) / v_x;
    if isolation < DEFAULT_ISOLATION_MIN {
        log::warn!(
            "{}",
            Error::PoorIsolation {
                isolation,
                required: DEFAULT_ISOLATION_MIN
            }
        );
    }
    Ok(QubitFrame {
        e1: e[0],
        e2: e[1],
        v_x,
        state1,
        state2,
        l_state,
        r_state,
        phi_c,
        isolation,
        basis_tail: tail,
        levels,
    })
}

/// Two-level content of a many-level state, in the (L, R) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitProjection {
    /// <L|psi>
    pub a: C64,
    /// <R|psi>
    pub b: C64,
    pub leakage: f64,
}

impl QubitProjection {
    pub fn from_amplitudes(a: C64, b: C64, norm_sq: f64) -> Self {
        let leakage = norm_sq - a.norm_sqr() - b.norm_sqr();
        QubitProjection { a, b, leakage }
    }

    pub fn rho2(&self) -> Matrix2<C64> {
        let (a, b) = (self.a, self.b);
        Matrix2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj())
    }

    pub fn polarization(&self) -> [f64; 3] {
        polarization(&self.rho2())
    }
}

/// `(Tr rho sx, Tr rho sy, Tr rho sz)` for a 2x2 block in the (L, R) basis.
pub fn polarization(rho: &Matrix2<C64>) -> [f64; 3] {
    let off = rho[(0, 1)];
    [
        2.0 * off.re,
        -2.0 * off.im,
        rho[(0, 0)].re - rho[(1, 1)].re,
    ]
}

/// Project a normalized state onto the frame. `leakage = 1 - |a|^2 - |b|^2`.
pub fn project_to_qubit(psi: &DVector<C64>, frame: &QubitFrame) -> QubitProjection {
    let overlap = |v: &DVector<f64>| -> C64 {
        v.iter()
            .zip(psi.iter())
            .fold(C64::new(0.0, 0.0), |acc, (&c, &z)| acc + z * c)
    };
    let a = overlap(&frame.l_state);
    let b = overlap(&frame.r_state);
    QubitProjection::from_amplitudes(a, b, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub isolation_min: f64,
    pub vx_min: f64,
    pub vx_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Number of log-spaced mass values scanned.
    pub n_grid: usize,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        CalibrationTargets {
            isolation_min: DEFAULT_ISOLATION_MIN,
            vx_min: 0.01,
            vx_max: 0.05,
            mu_min: 5.0,
            mu_max: 200.0,
            n_grid: 241,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub mu: f64,
    pub v_x: f64,
    pub isolation: f64,
    pub qualifies: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub mu: f64,
    pub scan: Vec<ScanRow>,
}

/// Log-grid scan for the largest mass whose doublet meets the targets, i.e.
/// the smallest admissible splitting. `params.mu` is ignored.
pub fn calibrate_mu(
    params: &HamiltonianParams,
    n_basis: usize,
    targets: &CalibrationTargets,
) -> Result<Calibration> {
    if params.beta <= 1.0 {
        return Err(Error::invalid("beta", "calibration needs beta > 1"));
    }
    if !(targets.mu_min > 0.0 && targets.mu_max > targets.mu_min && targets.n_grid >= 2) {
        return Err(Error::invalid("calibration", "need 0 < mu_min < mu_max and n_grid >= 2"));
    }
    let ratio = (targets.mu_max / targets.mu_min).ln();
    let mut scan = Vec::with_capacity(targets.n_grid);
    let mut found = None;
    for i in 0..targets.n_grid {
        let mu = targets.mu_min * (ratio * i as f64 / (targets.n_grid - 1) as f64).exp();
        let p = params.with_mu(mu).with_phi_ext(0.0);
        let basis = build_basis(&p, n_basis)?;
        let h = build_hamiltonian(&basis, &p, 0.0)?;
        let levels = eigensystem(&h, 3)?;
        let e = &levels.energies;
        let v_x = e[1] - e[0];
        let isolation = (e[2] - e[1]) / v_x;
        let qualifies =
            isolation >= targets.isolation_min && v_x >= targets.vx_min && v_x <= targets.vx_max;
        scan.push(ScanRow {
            mu,
            v_x,
            isolation,
            qualifies,
        });
        if qualifies {
            found = Some(mu);
        }
    }
    match found {
        Some(mu) => Ok(Calibration { mu, scan }),
        None => Err(Error::CalibrationFailed {
            isolation_min: targets.isolation_min,
            vx_min: targets.vx_min,
            vx_max: targets.vx_max,
        }),
    }
}
