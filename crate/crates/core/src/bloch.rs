//! Two-level reference dynamics: `dP/dt = P x V - D P_T`, with the damping
//! acting on the transverse (x, y) components only.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dephasing rate `4 (V0 phi_c)^2 delta^2 / omega_c` for telegraph flux
/// noise of amplitude `delta` and correlation frequency `omega_c`.
pub fn predict_d(v0_phi_c: f64, delta: f64, omega_c: f64) -> Result<f64> {
    if !(omega_c > 0.0) {
        return Err(Error::invalid("omega_c", format!("must be > 0, got {omega_c}")));
    }
    Ok(4.0 * v0_phi_c * v0_phi_c * delta * delta / omega_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochParams {
    pub v: [f64; 3],
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub p: Vec<[f64; 3]>,
}

impl BlochTrajectory {
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.p.iter().map(|p| p[axis]).collect()
    }
}

fn rhs(p: &Vector3<f64>, v: &Vector3<f64>, d: f64) -> Vector3<f64> {
    p.cross(v) - Vector3::new(d * p.x, d * p.y, 0.0)
}

/// Fixed-step RK4 through the time grid.
///
/// Each grid interval is split into equal substeps no longer than
/// `0.005 / max(|V|, D)`.
pub fn integrate_bloch(p0: [f64; 3], params: &BlochParams, times: &[f64]) -> Result<BlochTrajectory> {
    if params.d < 0.0 {
        return Err(Error::invalid("d", "damping must be >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times", "grid must be non-decreasing"));
    }
    let v = Vector3::from(params.v);
    let d = params.d;
    let rate = v.norm().max(d).max(f64::EPSILON);
    let h_max = 0.005 / rate;

    let mut p = Vector3::from(p0);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = times.first().copied().unwrap_or(0.0);
    for &t in times {
        let span = t - t_prev;
        if span > 0.0 {
            let n = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = rhs(&p, &v, d);
                let k2 = rhs(&(p + k1 * (0.5 * h)), &v, d);
                let k3 = rhs(&(p + k2 * (0.5 * h)), &v, d);
                let k4 = rhs(&(p + k3 * h), &v, d);
                p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
        }
        out.push([p.x, p.y, p.z]);
        t_prev = t;
    }
    Ok(BlochTrajectory {
        times: times.to_vec(),
        p: out,
    })
}

/// Analytic solution from `P(0) = z` with `V = (v_x, 0, 0)`:
/// `P_z = e^{-Dt/2} (cos wt + D/(2w) sin wt)`,
/// `P_y = e^{-Dt/2} (v_x / w) sin wt`, `w = sqrt(v_x^2 - D^2/4)`.
pub fn closed_form_damped(v_x: f64, d: f64, times: &[f64]) -> Result<BlochTrajectory> {
    if v_x <= d / 2.0 {
        return Err(Error::Overdamped { v_x, d });
    }
    let w = (v_x * v_x - 0.25 * d * d).sqrt();
    let p = times
        .iter()
        .map(|&t| {
            let env = (-0.5 * d * t).exp();
            let (s, c) = (w * t).sin_cos();
            [0.0, env * (v_x / w) * s, env * (c + d / (2.0 * w) * s)]
        })
        .collect();
    Ok(BlochTrajectory {
        times: times.to_vec(),
        p,
    })
}

pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect()
}
