use rfsquid::noise::{autocorr_integral, realization_seed, telegraph_trace, NoiseParams};

fn reference_noise(n_steps: usize) -> NoiseParams {
    NoiseParams {
        delta: 0.00032,
        omega_c: 0.05,
        dt: 0.5,
        n_steps,
    }
}

#[test]
fn correlation_integral_matches_delta_sq_over_omega_c() {
    let params = reference_noise(1_000_000);
    let expected = params.delta * params.delta / params.omega_c;
    assert!((expected - 2.048e-6).abs() < 1e-12);
    for seed in [0u64, 1, 2] {
        let trace = telegraph_trace(&params, seed).unwrap();
        let est = autocorr_integral(&trace).unwrap();
        let rel = (est.integral - expected).abs() / expected;
        assert!(rel < 0.10, "seed {seed}: {} vs {expected} ({rel})", est.integral);
        assert!(!est.nonstationary);
    }
}

#[test]
fn flip_count_is_binomial() {
    let params = reference_noise(1_000_000);
    let p = params.flip_probability();
    let trials = (params.n_steps - 1) as f64;
    let mean = trials * p;
    let sigma = (trials * p * (1.0 - p)).sqrt();
    for seed in 0..5u64 {
        let flips = telegraph_trace(&params, seed).unwrap().flip_count() as f64;
        assert!((flips - mean).abs() < 5.0 * sigma, "seed {seed}: {flips} vs {mean} +- {sigma}");
    }
}

#[test]
fn correlation_decays_at_omega_c() {
    let params = reference_noise(1_000_000);
    let trace = telegraph_trace(&params, 7).unwrap();
    let est = autocorr_integral(&trace).unwrap();
    let c = &est.correlation;
    // slope of ln C over the first correlation time
    let lags = (1.0 / (params.omega_c * params.dt)) as usize;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (k, &ck) in c.iter().enumerate().take(lags + 1) {
        let t = k as f64 * params.dt;
        let y = ck.ln();
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    let n = (lags + 1) as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let rate = -slope;
    assert!((rate - params.omega_c).abs() / params.omega_c < 0.10, "rate {rate}");
}

#[test]
fn realization_traces_are_uncorrelated() {
    let params = reference_noise(200_000);
    let a = telegraph_trace(&params, realization_seed(0, 0)).unwrap();
    let b = telegraph_trace(&params, realization_seed(0, 1)).unwrap();
    let d2 = params.delta * params.delta;
    let cross: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() / (a.len() as f64 * d2);
    // integrated correlation time is 2/(omega_c dt) = 80 samples
    let sigma = (80.0 / a.len() as f64).sqrt();
    assert!(cross.abs() < 5.0 * sigma, "cross correlation {cross}");
}

#[test]
fn stationary_mean_and_variance() {
    let params = reference_noise(1_000_000);
    let t = telegraph_trace(&params, 11).unwrap();
    let mean = t.values.iter().sum::<f64>() / t.len() as f64 / params.delta;
    let sigma = (80.0 / t.len() as f64).sqrt();
    assert!(mean.abs() < 5.0 * sigma, "mean {mean}");
    assert!(t.values.iter().all(|v| v.abs() == params.delta));
}
