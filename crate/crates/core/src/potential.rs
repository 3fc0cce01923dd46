//! rf-SQUID potential and its Hamiltonian in a truncated harmonic-oscillator
//! basis.
//!
//! Units: hbar = 1, so energies are inverse times. The Hamiltonian is
//!
//! ```text
//! H = -(1/2mu) d^2/dphi^2 + V0 * ( (phi - phi_ext)^2 / 2 + beta cos(phi) )
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the SQUID plus the static bias flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonianParams {
    /// Effective mass.
    pub mu: f64,
    /// Junction parameter; the potential is a double well for beta > 1.
    pub beta: f64,
    /// Potential scale (energy).
    pub v0: f64,
    /// Base external flux.
    pub phi_ext: f64,
}

impl HamiltonianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be > 0, got {}", self.mu)));
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::invalid("v0", format!("must be > 0, got {}", self.v0)));
        }
        if !self.beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if !self.phi_ext.is_finite() {
            return Err(Error::invalid("phi_ext", "must be finite"));
        }
        if self.beta <= 1.0 {
            log::warn!("beta = {} <= 1: the potential has a single well", self.beta);
        }
        Ok(())
    }

    pub fn is_double_well(&self) -> bool {
        self.beta > 1.0
    }

    pub fn with_phi_ext(self, phi_ext: f64) -> Self {
        Self { phi_ext, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }
}

/// `V0 * ((phi - phi_ext)^2 / 2 + beta cos(phi))`.
pub fn potential_value(params: &HamiltonianParams, phi: f64, phi_ext: f64) -> f64 {
    let d = phi - phi_ext;
    params.v0 * (0.5 * d * d + params.beta * phi.cos())
}

fn potential_slope(params: &HamiltonianParams, phi: f64) -> f64 {
    params.v0 * ((phi - params.phi_ext) - params.beta * phi.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WellMinima {
    /// Location of the positive-side minimum.
    pub phi_c: f64,
    /// U(barrier top) - U(phi_c).
    pub barrier: f64,
}

/// Bisection on the slope between two grid points that bracket a sign change.
fn refine_stationary(params: &HamiltonianParams, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = potential_slope(params, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = potential_slope(params, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Locate the classical double-well minima on `[-pi, pi]`.
///
/// Returns the positive-side minimum and the height of the barrier that
/// separates it from the other well.
pub fn well_minima(params: &HamiltonianParams) -> Result<WellMinima> {
    params.validate()?;
    const GRID: usize = 8192;
    let step = 2.0 * PI / GRID as f64;
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    let mut prev_phi = -PI;
    let mut prev_slope = potential_slope(params, prev_phi);
    for i in 1..=GRID {
        let phi = -PI + i as f64 * step;
        let slope = potential_slope(params, phi);
        if prev_slope < 0.0 && slope >= 0.0 {
            minima.push(refine_stationary(params, prev_phi, phi));
        } else if prev_slope > 0.0 && slope <= 0.0 {
            maxima.push(refine_stationary(params, prev_phi, phi));
        }
        prev_phi = phi;
        prev_slope = slope;
    }
    if minima.len() < 2 || maxima.is_empty() {
        return Err(Error::NoDoubleWell {
            beta: params.beta,
            phi_ext: params.phi_ext,
        });
    }
    let phi_c = *minima.last().unwrap();
    let phi_left = minima[minima.len() - 2];
    let top = maxima
        .iter()
        .copied()
        .find(|&m| m > phi_left && m < phi_c)
        .ok_or(Error::NoDoubleWell {
            beta: params.beta,
            phi_ext: params.phi_ext,
        })?;
    let barrier = potential_value(params, top, params.phi_ext)
        - potential_value(params, phi_c, params.phi_ext);
    Ok(WellMinima { phi_c, barrier })
}

/// Operator matrices in the truncated oscillator basis with frequency
/// `omega_b = sqrt(V0 / mu)`.
#[derive(Debug, Clone)]
pub struct BasisRep {
    pub n_basis: usize,
    pub omega_b: f64,
    pub mu: f64,
    pub v0: f64,
    /// phi = (a + a^dagger) / sqrt(2 mu omega_b); tridiagonal, zero diagonal.
    pub phi_matrix: DMatrix<f64>,
    /// phi_matrix squared within the truncated space.
    pub phi_sq_matrix: DMatrix<f64>,
    /// -(1/2mu) d^2/dphi^2 from exact ladder-operator matrix elements.
    pub kinetic_matrix: DMatrix<f64>,
    /// cos(phi) as a function of the truncated phi operator.
    pub cos_matrix: DMatrix<f64>,
    /// Hamiltonian at the `phi_ext` of the params the basis was built from.
    pub h_matrix: DMatrix<f64>,
}

pub const MIN_BASIS: usize = 8;

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn build_basis(params: &HamiltonianParams, n_basis: usize) -> Result<BasisRep> {
    params.validate()?;
    if n_basis < MIN_BASIS {
        return Err(Error::invalid(
            "n_basis",
            format!("must be >= {MIN_BASIS}, got {n_basis}"),
        ));
    }
    let n = n_basis;
    let omega_b = (params.v0 / params.mu).sqrt();
    let length = 1.0 / (2.0 * params.mu * omega_b).sqrt();

    let mut phi_matrix = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let element = ((i + 1) as f64).sqrt() * length;
        phi_matrix[(i, i + 1)] = element;
        phi_matrix[(i + 1, i)] = element;
    }

    // p^2 / 2mu with p = i sqrt(mu omega_b / 2) (a^dagger - a)
    let mut kinetic_matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        kinetic_matrix[(i, i)] = 0.25 * omega_b * (2 * i + 1) as f64;
        if i + 2 < n {
            let off = -0.25 * omega_b * (((i + 1) * (i + 2)) as f64).sqrt();
            kinetic_matrix[(i, i + 2)] = off;
            kinetic_matrix[(i + 2, i)] = off;
        }
    }

    let mut phi_sq_matrix = &phi_matrix * &phi_matrix;
    symmetrize(&mut phi_sq_matrix);

    let eig = SymmetricEigen::try_new(phi_matrix.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure("phi operator".into()))?;
    let cos_eigs = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::cos));
    let mut cos_matrix = &eig.eigenvectors * cos_eigs * eig.eigenvectors.transpose();
    symmetrize(&mut cos_matrix);

    let mut basis = BasisRep {
        n_basis,
        omega_b,
        mu: params.mu,
        v0: params.v0,
        phi_matrix,
        phi_sq_matrix,
        kinetic_matrix,
        cos_matrix,
        h_matrix: DMatrix::zeros(n, n),
    };
    basis.h_matrix = build_hamiltonian(&basis, params, params.phi_ext)?;
    Ok(basis)
}

/// Assemble `H = K + V0 (phi^2/2 - x phi + x^2/2 + beta cos phi)` for the
/// effective external flux `x`.
///
/// Only the `phi` and identity terms depend on `x`, so noise updates reuse
/// the same operator matrices.
pub fn build_hamiltonian(
    basis: &BasisRep,
    params: &HamiltonianParams,
    phi_ext_effective: f64,
) -> Result<DMatrix<f64>> {
    if (basis.mu - params.mu).abs() > 1e-12 * params.mu
        || (basis.v0 - params.v0).abs() > 1e-12 * params.v0
    {
        return Err(Error::invalid(
            "basis",
            "basis was built with a different mu or v0",
        ));
    }
    let v0 = params.v0;
    let x = phi_ext_effective;
    let mut h = &basis.kinetic_matrix + &basis.phi_sq_matrix * (0.5 * v0);
    h += &basis.phi_matrix * (-v0 * x);
    h += &basis.cos_matrix * (v0 * params.beta);
    let shift = 0.5 * v0 * x * x;
    for i in 0..basis.n_basis {
        h[(i, i)] += shift;
    }
    Ok(h)
}

/// Largest elementwise asymmetry `max |H - H^T|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Parity operator phi -> -phi in the oscillator basis: diag((-1)^n).
pub fn parity_matrix(n_basis: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_basis, n_basis, |i, j| {
        if i == j {
            if i % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_params() -> HamiltonianParams {
        HamiltonianParams {
            mu: 13.0,
            beta: 1.19,
            v0: 14.15,
            phi_ext: 0.0,
        }
    }

    /// Independent oracle: bisection on phi = beta sin(phi) for phi in (0.5, 2).
    fn stationary_root(beta: f64) -> f64 {
        let f = |p: f64| p - beta * p.sin();
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn potential_at_origin_is_v0_beta() {
        let p = default_params();
        assert_relative_eq!(potential_value(&p, 0.0, 0.0), p.v0 * p.beta);
    }

    #[test]
    fn potential_even_at_zero_bias() {
        let p = default_params();
        for k in 0..50 {
            let phi = -3.0 + 0.123 * k as f64;
            assert_eq!(potential_value(&p, phi, 0.0), potential_value(&p, -phi, 0.0));
        }
    }

    #[test]
    fn minima_match_stationarity_root() {
        let p = default_params();
        let wm = well_minima(&p).unwrap();
        let root = stationary_root(1.19);
        assert_relative_eq!(wm.phi_c, root, epsilon = 1e-10);
        // 1.00376..., the root of phi = 1.19 sin(phi)
        assert!((wm.phi_c - 1.003_762_5).abs() < 1e-6);
        let barrier = p.v0 * (p.beta - (0.5 * root * root + p.beta * root.cos()));
        assert_relative_eq!(wm.barrier, barrier, epsilon = 1e-9);
        assert!((wm.barrier - 0.665).abs() < 1e-3);
    }

    #[test]
    fn single_well_is_rejected() {
        let p = HamiltonianParams {
            beta: 0.5,
            ..default_params()
        };
        assert!(matches!(well_minima(&p), Err(Error::NoDoubleWell { .. })));
    }

    #[test]
    fn phi_matrix_elements() {
        let p = default_params();
        let b = build_basis(&p, 16).unwrap();
        for i in 0..15 {
            let expected = ((i + 1) as f64 / (2.0 * p.mu * b.omega_b)).sqrt();
            assert_relative_eq!(b.phi_matrix[(i, i + 1)], expected, max_relative = 1e-14);
            assert_eq!(b.phi_matrix[(i, i)], 0.0);
        }
    }

    #[test]
    fn rejects_tiny_basis() {
        assert!(build_basis(&default_params(), 4).is_err());
    }

    #[test]
    fn matrices_are_symmetric() {
        let b = build_basis(&default_params(), 64).unwrap();
        for m in [&b.phi_matrix, &b.kinetic_matrix, &b.cos_matrix, &b.h_matrix] {
            assert!(asymmetry(m) <= 1e-12);
        }
    }

    #[test]
    fn cos_spectrum_bounded() {
        let b = build_basis(&default_params(), 64).unwrap();
        let eig = SymmetricEigen::new(b.cos_matrix.clone());
        for &e in eig.eigenvalues.iter() {
            assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&e), "eigenvalue {e}");
        }
    }

    #[test]
    fn cos_block_converges_with_truncation() {
        let p = default_params();
        let small = build_basis(&p, 8).unwrap();
        let large = build_basis(&p, 16).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((small.cos_matrix[(i, j)] - large.cos_matrix[(i, j)]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn linear_bias_decomposition() {
        let p = default_params();
        let b = build_basis(&p, 32).unwrap();
        let x = 0.013;
        let direct = build_hamiltonian(&b, &p, x).unwrap();
        let mut expanded = b.h_matrix.clone() - &b.phi_matrix * (p.v0 * x);
        for i in 0..32 {
            expanded[(i, i)] += 0.5 * p.v0 * x * x;
        }
        assert!((direct - expanded).amax() < 1e-12);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let p = default_params();
        let b = build_basis(&p, 16).unwrap();
        assert!(build_hamiltonian(&b, &p.with_mu(20.0), 0.0).is_err());
    }
}
