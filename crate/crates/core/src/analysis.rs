//! Rate extraction from simulated traces and comparison with the predicted
//! dephasing rate.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::FrameSummary;

pub const MAX_ITERATIONS: usize = 200;
pub const PARAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `(1 + A e^{-D t}) / 2`
    Exponential,
    /// `e^{-g t} (cos w t + (g / w) sin w t)`
    DampedCosine,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitModel::Exponential => f.write_str("exponential"),
            FitModel::DampedCosine => f.write_str("damped_cosine"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    /// `d`, `amplitude` for the exponential; `gamma`, `omega` for the damped
    /// cosine.
    pub params: BTreeMap<String, f64>,
    /// Unweighted root-mean-square residual.
    pub rms_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub weighted: bool,
    /// First and last time of the fitted data.
    pub window: (f64, f64),
    pub n_points: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    /// Fitted rate in the units of `D`: `d` directly, or `2 gamma`.
    pub fn d_equivalent(&self) -> f64 {
        match self.model {
            FitModel::Exponential => self.params["d"],
            FitModel::DampedCosine => 2.0 * self.params["gamma"],
        }
    }
}

struct Solution {
    params: Vec<f64>,
    iterations: usize,
}

/// Weighted Levenberg-Marquardt. `model(p, t)` returns the value and the
/// gradient with respect to `p`. `scale` gives a magnitude per parameter for
/// the relative step test when the parameter itself is near zero.
fn levenberg_marquardt<F>(
    model: F,
    times: &[f64],
    y: &[f64],
    inv_sigma: &[f64],
    mut p: Vec<f64>,
    scale: &[f64],
) -> Result<Solution>
where
    F: Fn(&[f64], f64) -> (f64, Vec<f64>),
{
    let m = p.len();
    let cost = |p: &[f64]| -> f64 {
        times
            .iter()
            .zip(y)
            .zip(inv_sigma)
            .map(|((&t, &yi), &w)| {
                let r = (yi - model(p, t).0) * w;
                r * r
            })
            .sum()
    };
    let mut current = cost(&p);
    let mut lambda = 1e-3;
    for iteration in 1..=MAX_ITERATIONS {
        let mut jtj = DMatrix::<f64>::zeros(m, m);
        let mut jtr = DVector::<f64>::zeros(m);
        for ((&t, &yi), &w) in times.iter().zip(y).zip(inv_sigma) {
            let (f, grad) = model(&p, t);
            let r = (yi - f) * w;
            for a in 0..m {
                let ga = grad[a] * w;
                jtr[a] += ga * r;
                for b in 0..m {
                    jtj[(a, b)] += ga * grad[b] * w;
                }
            }
        }
        loop {
            let mut damped = jtj.clone();
            for a in 0..m {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-300);
            }
            let step = damped
                .lu()
                .solve(&jtr)
                .filter(|s| s.iter().all(|x| x.is_finite()));
            let small = |s: &DVector<f64>| {
                s.iter()
                    .zip(&p)
                    .zip(scale)
                    .all(|((d, v), sc)| d.abs() <= PARAM_TOL * v.abs().max(*sc))
            };
            if let Some(step) = step {
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let c = cost(&trial);
                if c <= current {
                    let done = small(&step);
                    p = trial;
                    current = c;
                    lambda = (lambda * 0.1).max(1e-12);
                    if done {
                        return Ok(Solution {
                            params: p,
                            iterations: iteration,
                        });
                    }
                    break;
                }
                if small(&step) {
                    return Ok(Solution {
                        params: p,
                        iterations: iteration,
                    });
                }
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                return Err(Error::FitDiverged {
                    iterations: iteration,
                });
            }
        }
    }
    Err(Error::FitDiverged {
        iterations: MAX_ITERATIONS,
    })
}

/// Inverse standard errors. Zero or missing errors (e.g. at t = 0, where
/// every realization is identical) are replaced by the smallest positive
/// error in the series.
fn inverse_sigma(weights: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    let Some(w) = weights else {
        return Ok(vec![1.0; n]);
    };
    if w.len() != n {
        return Err(Error::invalid("weights", "length differs from the series"));
    }
    let floor = w
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Ok(vec![1.0; n]);
    }
    Ok(w
        .iter()
        .map(|&s| 1.0 / if s > 0.0 && s.is_finite() { s } else { floor })
        .collect())
}

fn check_series(times: &[f64], y: &[f64], min_points: usize) -> Result<()> {
    if times.len() != y.len() {
        return Err(Error::invalid("series", "times and values differ in length"));
    }
    if times.len() < min_points {
        return Err(Error::invalid(
            "series",
            format!("need at least {min_points} points, got {}", times.len()),
        ));
    }
    if y.iter().chain(times).any(|v| !v.is_finite()) {
        return Err(Error::invalid("series", "non-finite values"));
    }
    Ok(())
}

/// Least-squares slope and intercept.
fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Root-mean-square difference of two equally sampled series.
pub fn rms_deviation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("series", "lengths differ or are empty"));
    }
    Ok(rms(a, b))
}

fn exponential(p: &[f64], t: f64) -> (f64, Vec<f64>) {
    let e = (-p[1] * t).exp();
    (0.5 * (1.0 + p[0] * e), vec![0.5 * e, -0.5 * p[0] * t * e])
}

/// Fit `rho11(t) = (1 + A e^{-D t}) / 2`.
///
/// The starting rate is the log-slope of `2 rho11 - 1` over the first half of
/// the series. `weights` are per-point standard errors.
pub fn fit_exponential(times: &[f64], rho11: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
    check_series(times, rho11, 10)?;
    let n = times.len();
    let y: Vec<f64> = rho11.iter().map(|r| 2.0 * r - 1.0).collect();
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak < 1e-9 {
        return Err(Error::DegenerateSeries(
            "2 rho11 - 1 vanishes; no decay to fit".into(),
        ));
    }

    let mut warnings = Vec::new();
    if let Some(cross) = y.iter().position(|&v| v <= 0.0) {
        if cross > 0 {
            let folds = (y[0].abs() / y[cross - 1].abs().max(f64::MIN_POSITIVE)).ln();
            if folds < 3.0 {
                warnings.push(format!(
                    "DegenerateSeries: 2 rho11 - 1 changes sign at t = {} after {folds:.2} e-foldings",
                    times[cross]
                ));
            }
        }
    }

    let span = times[n - 1] - times[0];
    let half = (n / 2).max(2);
    let (lx, ly): (Vec<f64>, Vec<f64>) = times[..half]
        .iter()
        .zip(&y[..half])
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    let (d0, a0) = match line_fit(&lx, &ly) {
        Some((slope, intercept)) if slope < 0.0 => (-slope, intercept.exp()),
        Some((_, intercept)) => (1.0 / span, intercept.exp()),
        None => (1.0 / span, y[0]),
    };

    let inv_sigma = inverse_sigma(weights, n)?;
    let sol = levenberg_marquardt(
        exponential,
        times,
        rho11,
        &inv_sigma,
        vec![a0, d0],
        &[1e-6, 1e-6 / span],
    )?;
    let (amplitude, d) = (sol.params[0], sol.params[1]);
    if amplitude.abs() < 1e-6 {
        return Err(Error::DegenerateSeries(format!(
            "fitted amplitude {amplitude:e} leaves the rate unidentifiable"
        )));
    }
    let fitted: Vec<f64> = times.iter().map(|&t| exponential(&sol.params, t).0).collect();
    let mut params = BTreeMap::new();
    params.insert("amplitude".to_string(), amplitude);
    let (d, converged) = clamp_rate(d, 1.0 / span, &mut warnings);
    params.insert("d".to_string(), d);
    Ok(FitResult {
        model: FitModel::Exponential,
        params,
        rms_residual: rms(rho11, &fitted),
        converged,
        iterations: sol.iterations,
        weighted: weights.is_some(),
        window: (times[0], times[n - 1]),
        n_points: n,
        warnings,
    })
}

/// Rates are reported as non-negative; round-off below zero is clamped, a
/// genuinely negative estimate marks the fit as not converged.
fn clamp_rate(rate: f64, scale: f64, warnings: &mut Vec<String>) -> (f64, bool) {
    if rate >= 0.0 {
        (rate, true)
    } else if rate > -1e-9 * scale {
        (0.0, true)
    } else {
        warnings.push(format!("negative rate estimate {rate:e}"));
        (rate, false)
    }
}

fn damped_cosine(p: &[f64], t: f64) -> (f64, Vec<f64>) {
    let (g, w) = (p[0], p[1]);
    let e = (-g * t).exp();
    let (s, c) = (w * t).sin_cos();
    let f = e * (c + g / w * s);
    let dg = -t * f + e * s / w;
    let dw = e * (-t * s + g / w * t * c - g / (w * w) * s);
    (f, vec![dg, dw])
}

/// Times where the linearly interpolated series crosses zero, with
/// crossings closer than a quarter of the median spacing merged.
fn zero_crossings(times: &[f64], y: &[f64]) -> Vec<f64> {
    let mut raw = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1], y[i]);
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            let frac = a / (a - b);
            raw.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    if raw.len() < 3 {
        return raw;
    }
    let mut gaps: Vec<f64> = raw.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let min_gap = 0.25 * gaps[gaps.len() / 2];
    let mut merged: Vec<f64> = vec![raw[0]];
    for &t in &raw[1..] {
        if t - merged.last().unwrap() >= min_gap {
            merged.push(t);
        }
    }
    merged
}

/// Fit `P_z(t) = e^{-g t} (cos w t + (g / w) sin w t)`.
///
/// `w` starts from the zero-crossing spacing and `g` from the decay of
/// successive extrema.
pub fn fit_damped_cosine(times: &[f64], pz: &[f64]) -> Result<FitResult> {
    check_series(times, pz, 10)?;
    let n = times.len();
    let crossings = zero_crossings(times, pz);

    // extremum of each half-period: the initial segment, then between
    // consecutive crossings
    let mut bounds = vec![times[0]];
    bounds.extend(&crossings);
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    for w in bounds.windows(2) {
        let best = times
            .iter()
            .zip(pz)
            .filter(|(&t, _)| t >= w[0] && t <= w[1])
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        if let Some((&t, &v)) = best {
            extrema.push((t, v.abs()));
        }
    }
    if extrema.len() < 4 {
        return Err(Error::TooFewOscillations {
            extrema: extrema.len(),
        });
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let half_period = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let w0 = std::f64::consts::PI / half_period;
    let (ex, ey): (Vec<f64>, Vec<f64>) = extrema
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .unzip();
    let span = times[n - 1] - times[0];
    let g0 = match line_fit(&ex, &ey) {
        Some((slope, _)) if slope < 0.0 => -slope,
        _ => 0.1 / span,
    };

    let sol = levenberg_marquardt(
        damped_cosine,
        times,
        pz,
        &vec![1.0; n],
        vec![g0, w0],
        &[1e-6 / span, w0],
    )?;
    let mut warnings = Vec::new();
    let (gamma, converged) = clamp_rate(sol.params[0], 1.0 / span, &mut warnings);
    let fitted: Vec<f64> = times.iter().map(|&t| damped_cosine(&sol.params, t).0).collect();
    let mut params = BTreeMap::new();
    params.insert("gamma".to_string(), gamma);
    params.insert("omega".to_string(), sol.params[1].abs());
    Ok(FitResult {
        model: FitModel::DampedCosine,
        params,
        rms_residual: rms(pz, &fitted),
        converged,
        iterations: sol.iterations,
        weighted: false,
        window: (times[0], times[n - 1]),
        n_points: n,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed |D_fit / D_pred - 1| for the exponential fit.
    pub d_rel: f64,
    /// Allowed |gamma / (D_pred / 2) - 1| for the damped cosine.
    pub gamma_rel: f64,
    /// Allowed |omega / V_x - 1|.
    pub omega_rel: f64,
    pub leakage_max: f64,
    pub isolation_min: f64,
    /// Allowed |rho11(T) - 1/2| at the end of a dephasing run.
    pub endpoint: f64,
    /// Allowed RMS distance between simulated P_z and the Bloch solution.
    pub bloch_rms: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            d_rel: 0.20,
            gamma_rel: 0.25,
            omega_rel: 0.05,
            leakage_max: 0.01,
            isolation_min: 20.0,
            endpoint: 0.02,
            bloch_rms: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    /// Whether the check contributes to the overall verdict.
    pub gating: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub model: FitModel,
    pub fit: FitResult,
    /// Fitted rate in units of D (`2 gamma` for the damped cosine).
    pub d_fit: f64,
    pub d_pred: f64,
    /// `d_fit / d_pred - 1`.
    pub relative_deviation: f64,
    pub leakage_max: f64,
    pub frame: FrameSummary,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub units: &'static str,
    pub config: serde_json::Value,
}

impl ComparisonReport {
    pub fn add_check(&mut self, name: &str, value: f64, limit: f64, pass: bool, gating: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            limit,
            pass,
            gating,
        });
        self.passed = self.checks.iter().all(|c| c.pass || !c.gating);
    }
}

pub fn compare_report(
    fit: &FitResult,
    predicted_d: f64,
    frame: &FrameSummary,
    leakage_max: f64,
    config: serde_json::Value,
    tol: &Tolerances,
) -> Result<ComparisonReport> {
    if !fit.converged {
        return Err(Error::Usage("cannot report on a fit that did not converge".into()));
    }
    if !(predicted_d > 0.0) {
        return Err(Error::Usage(format!("predicted D must be > 0, got {predicted_d}")));
    }
    let d_fit = fit.d_equivalent();
    let relative_deviation = d_fit / predicted_d - 1.0;
    let mut report = ComparisonReport {
        model: fit.model,
        fit: fit.clone(),
        d_fit,
        d_pred: predicted_d,
        relative_deviation,
        leakage_max,
        frame: *frame,
        checks: Vec::new(),
        passed: true,
        units: "hbar = 1; time in inverse energy units",
        config,
    };
    match fit.model {
        FitModel::Exponential => {
            report.add_check("d_relative_deviation", relative_deviation.abs(), tol.d_rel, relative_deviation.abs() <= tol.d_rel, true);
        }
        FitModel::DampedCosine => {
            let g = relative_deviation.abs();
            report.add_check("gamma_relative_deviation", g, tol.gamma_rel, g <= tol.gamma_rel, true);
            let w = (fit.params["omega"] / frame.v_x - 1.0).abs();
            report.add_check("omega_relative_deviation", w, tol.omega_rel, w <= tol.omega_rel, true);
        }
    }
    report.add_check("leakage_max", leakage_max, tol.leakage_max, leakage_max <= tol.leakage_max, true);
    report.add_check("isolation", frame.isolation, tol.isolation_min, frame.isolation >= tol.isolation_min, true);
    Ok(report)
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model:              {}", self.model)?;
        for (k, v) in &self.fit.params {
            writeln!(f, "  {k:<17} {v:.6e}")?;
        }
        writeln!(
            f,
            "fit window:         [{}, {}] ({} points, {})",
            self.fit.window.0,
            self.fit.window.1,
            self.fit.n_points,
            if self.fit.weighted { "weighted by standard error" } else { "unweighted" }
        )?;
        writeln!(f, "rms residual:       {:.3e}", self.fit.rms_residual)?;
        writeln!(f, "D (fit):            {:.6e}", self.d_fit)?;
        writeln!(f, "D (predicted):      {:.6e}", self.d_pred)?;
        writeln!(f, "relative deviation: {:+.2}%", 100.0 * self.relative_deviation)?;
        writeln!(f, "V_x:                {:.6e}", self.frame.v_x)?;
        writeln!(f, "phi_c:              {:.6}", self.frame.phi_c)?;
        writeln!(f, "isolation:          {:.2}", self.frame.isolation)?;
        writeln!(f, "max leakage:        {:.3e}", self.leakage_max)?;
        for w in &self.fit.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {} = {:.4e} (limit {:.4e}){}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit,
                if c.gating { "" } else { " [informational]" }
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{closed_form_damped, uniform_grid};

    fn frame(v_x: f64) -> FrameSummary {
        FrameSummary {
            v_x,
            phi_c: 0.9,
            isolation: 30.0,
            basis_tail: 0.0,
            e1: 0.0,
            e2: v_x,
            e3: 1.0,
            e4: 1.2,
        }
    }

    #[test]
    fn exponential_round_trip() {
        let t = uniform_grid(2000.0, 201);
        let y: Vec<f64> = t.iter().map(|&t| 0.5 * (1.0 + (-0.00175 * t).exp())).collect();
        let fit = fit_exponential(&t, &y, None).unwrap();
        assert!(fit.converged);
        assert!((fit.get("d").unwrap() / 0.00175 - 1.0).abs() < 1e-6);
        assert!((fit.get("amplitude").unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_half_is_degenerate() {
        let t = uniform_grid(100.0, 50);
        let y = vec![0.5; 50];
        assert!(matches!(fit_exponential(&t, &y, None), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn early_sign_change_warns() {
        let t = uniform_grid(100.0, 50);
        let mut y: Vec<f64> = t.iter().map(|&t| 0.5 * (1.0 + (-0.01 * t).exp())).collect();
        y[10] = 0.45;
        let fit = fit_exponential(&t, &y, None).unwrap();
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let t = uniform_grid(1500.0, 120);
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &t)| 0.5 * (1.0 + 0.97 * (-0.002 * t).exp()) + 0.01 * ((i * 7919) as f64).sin())
            .collect();
        let a = fit_exponential(&t, &y, None).unwrap();
        let b = fit_exponential(&t, &y, Some(&vec![0.013; 120])).unwrap();
        assert!((a.get("d").unwrap() / b.get("d").unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn time_rescaling_rescales_rate() {
        let t = uniform_grid(1500.0, 120);
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &t)| 0.5 * (1.0 + (-0.002 * t).exp()) + 0.005 * ((i * 104_729) as f64).cos())
            .collect();
        let c = 3.7;
        let scaled: Vec<f64> = t.iter().map(|x| x * c).collect();
        let a = fit_exponential(&t, &y, None).unwrap().get("d").unwrap();
        let b = fit_exponential(&scaled, &y, None).unwrap().get("d").unwrap();
        assert!((b * c / a - 1.0).abs() < 1e-8);
    }

    #[test]
    fn damped_cosine_round_trip() {
        let t = uniform_grid(3000.0, 600);
        let tr = closed_form_damped(0.02, 0.00175, &t).unwrap();
        let fit = fit_damped_cosine(&t, &tr.component(2)).unwrap();
        assert!((fit.get("gamma").unwrap() / 0.000875 - 1.0).abs() < 1e-6);
        let w = (0.02f64.powi(2) - 0.00175f64.powi(2) / 4.0).sqrt();
        assert!((fit.get("omega").unwrap() / w - 1.0).abs() < 1e-6);
        assert!((fit.get("omega").unwrap() / 0.02 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn undamped_cosine() {
        let t = uniform_grid(2000.0, 400);
        let y: Vec<f64> = t.iter().map(|&t| (0.02 * t).cos()).collect();
        let fit = fit_damped_cosine(&t, &y).unwrap();
        assert!(fit.get("gamma").unwrap().abs() < 1e-8);
        assert!((fit.get("omega").unwrap() / 0.02 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_oscillations() {
        let t = uniform_grid(100.0, 100);
        let y: Vec<f64> = t.iter().map(|&t| (0.02 * t).cos()).collect();
        assert!(matches!(fit_damped_cosine(&t, &y), Err(Error::TooFewOscillations { .. })));
    }

    #[test]
    fn report_relative_deviation() {
        let t = uniform_grid(2000.0, 201);
        let y: Vec<f64> = t.iter().map(|&t| 0.5 * (1.0 + (-0.00175 * t).exp())).collect();
        let fit = fit_exponential(&t, &y, None).unwrap();
        let r = compare_report(&fit, 0.00164, &frame(0.01), 0.001, serde_json::Value::Null, &Tolerances::default())
            .unwrap();
        assert!((100.0 * r.relative_deviation - 6.7).abs() < 0.05);
        assert!(r.passed);

        let y: Vec<f64> = t.iter().map(|&t| 0.5 * (1.0 + (-0.00164 * t).exp())).collect();
        let fit = fit_exponential(&t, &y, None).unwrap();
        let r = compare_report(&fit, 0.00164, &frame(0.01), 0.001, serde_json::Value::Null, &Tolerances::default())
            .unwrap();
        assert!(r.relative_deviation.abs() < 1e-6);
    }

    #[test]
    fn report_rejects_unconverged_fit() {
        let t = uniform_grid(2000.0, 201);
        let y: Vec<f64> = t.iter().map(|&t| 0.5 * (1.0 + (-0.00175 * t).exp())).collect();
        let mut fit = fit_exponential(&t, &y, None).unwrap();
        fit.converged = false;
        let err = compare_report(&fit, 0.00164, &frame(0.01), 0.0, serde_json::Value::Null, &Tolerances::default())
            .unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
