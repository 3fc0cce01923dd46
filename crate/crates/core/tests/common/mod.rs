#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rfsquid::config::{DEFAULT_BETA, DEFAULT_MU, DEFAULT_V0};
use rfsquid::potential::{build_basis, BasisRep, HamiltonianParams};
use rfsquid::spectrum::{make_qubit_frame, QubitFrame};
use rfsquid::C64;

pub fn default_params() -> HamiltonianParams {
    HamiltonianParams {
        mu: DEFAULT_MU,
        beta: DEFAULT_BETA,
        v0: DEFAULT_V0,
        phi_ext: 0.0,
    }
}

pub fn setup(n_basis: usize) -> (HamiltonianParams, BasisRep, QubitFrame) {
    let p = default_params();
    let b = build_basis(&p, n_basis).unwrap();
    let f = make_qubit_frame(&p, &b).unwrap();
    (p, b, f)
}

pub fn complex(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

pub fn overlap_sq(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
        .norm_sqr()
}

pub fn norm_sq(a: &DVector<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Classic RK4 for `i d(psi)/dt = h psi` with a real `h`, carried as separate
/// real and imaginary parts.
pub struct Rk4 {
    re: DVector<f64>,
    im: DVector<f64>,
}

impl Rk4 {
    pub fn new(psi: &DVector<C64>) -> Self {
        Rk4 {
            re: psi.map(|z| z.re),
            im: psi.map(|z| z.im),
        }
    }

    // d(re)/dt = h im, d(im)/dt = -h re
    fn deriv(h: &DMatrix<f64>, re: &DVector<f64>, im: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (h * im, -(h * re))
    }

    pub fn step(&mut self, h: &DMatrix<f64>, dt: f64) {
        let (k1r, k1i) = Self::deriv(h, &self.re, &self.im);
        let (k2r, k2i) = Self::deriv(h, &(&self.re + &k1r * (dt / 2.0)), &(&self.im + &k1i * (dt / 2.0)));
        let (k3r, k3i) = Self::deriv(h, &(&self.re + &k2r * (dt / 2.0)), &(&self.im + &k2i * (dt / 2.0)));
        let (k4r, k4i) = Self::deriv(h, &(&self.re + &k3r * dt), &(&self.im + &k3i * dt));
        self.re += (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (dt / 6.0);
        self.im += (k1i + k2i * 2.0 + k3i * 2.0 + k4i) * (dt / 6.0);
    }

    pub fn state(&self) -> DVector<C64> {
        self.re.zip_map(&self.im, C64::new)
    }
}
