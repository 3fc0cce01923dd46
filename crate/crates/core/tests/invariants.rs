mod common;

use std::sync::OnceLock;

use common::{complex, norm_sq};
use proptest::prelude::*;
use rfsquid::analysis::{fit_exponential, rms_deviation};
use rfsquid::bloch::{closed_form_damped, integrate_bloch, uniform_grid, BlochParams};
use rfsquid::ensemble::{Ensemble, EnsembleConfig, InitialState};
use rfsquid::noise::{realization_seed, telegraph_trace, NoiseParams};
use rfsquid::potential::{build_basis, BasisRep, HamiltonianParams};
use rfsquid::propagate::{evolve_realization, PropagatorCache};
use rfsquid::spectrum::{make_qubit_frame, project_to_qubit, QubitFrame};

fn small() -> &'static (HamiltonianParams, BasisRep, QubitFrame) {
    static CELL: OnceLock<(HamiltonianParams, BasisRep, QubitFrame)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = common::default_params();
        let b = build_basis(&p, 48).unwrap();
        let f = make_qubit_frame(&p, &b).unwrap();
        (p, b, f)
    })
}

fn noise(delta: f64, n_steps: usize) -> NoiseParams {
    NoiseParams {
        delta,
        omega_c: 0.05,
        dt: 0.5,
        n_steps,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qubit_states_are_pure_and_confined(lr in -1.0f64..1.0, li in -1.0f64..1.0, rr in -1.0f64..1.0, ri in -1.0f64..1.0) {
        prop_assume!(lr * lr + li * li + rr * rr + ri * ri > 1e-3);
        let (_, _, f) = small();
        let psi = InitialState::Qubit { l: [lr, li], r: [rr, ri] }.state(f).unwrap();
        let q = project_to_qubit(&psi, f);
        let p = q.polarization();
        prop_assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-10);
        prop_assert!(q.leakage.abs() < 1e-10);
    }

    #[test]
    fn evolution_preserves_norm(seed in any::<u64>(), delta in 0.0f64..0.05, steps in 1usize..400) {
        let (p, b, f) = small();
        let np = noise(delta, steps);
        let cache = PropagatorCache::new(b, p, delta, np.dt).unwrap();
        let trace = telegraph_trace(&np, seed).unwrap();
        let ev = evolve_realization(&cache, f, &complex(&f.l_state), &trace, 1).unwrap();
        prop_assert!((norm_sq(&ev.final_state) - 1.0).abs() < 1e-10);
        for s in &ev.samples {
            let q = s.projection;
            prop_assert!(q.leakage >= -1e-12 && q.leakage <= 1.0 + 1e-12);
            let pv = q.polarization();
            prop_assert!((pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2]).sqrt() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn telegraph_is_two_valued_and_reproducible(seed in any::<u64>(), delta in 1e-6f64..1.0, n in 1usize..2000) {
        let np = noise(delta, n);
        let a = telegraph_trace(&np, seed).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.values.iter().all(|v| *v == delta || *v == -delta));
        prop_assert_eq!(a.values, telegraph_trace(&np, seed).unwrap().values);
    }

    #[test]
    fn realization_seeds_differ(master in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(realization_seed(master, i), realization_seed(master, j));
    }

    #[test]
    fn bloch_length_never_grows(vx in -0.1f64..0.1, vy in -0.1f64..0.1, vz in -0.1f64..0.1, d in 0.0f64..0.05,
                                theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let p0 = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let traj = integrate_bloch(p0, &BlochParams { v: [vx, vy, vz], d }, &uniform_grid(200.0, 101)).unwrap();
        let len = |p: &[f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        for w in traj.p.windows(2) {
            prop_assert!(len(&w[1]) <= len(&w[0]) + 1e-12);
        }
    }

    #[test]
    fn integrator_matches_closed_form(vx in 0.005f64..0.05, ratio in 0.0f64..1.5) {
        let d = ratio * vx;
        let times = uniform_grid(3.0 / d.max(0.001), 201);
        let exact = closed_form_damped(vx, d, &times).unwrap();
        let num = integrate_bloch([0.0, 0.0, 1.0], &BlochParams { v: [vx, 0.0, 0.0], d }, &times).unwrap();
        for axis in 0..3 {
            prop_assert!(rms_deviation(&exact.component(axis), &num.component(axis)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn exponential_fit_round_trips(d in 1e-4f64..1e-2, a in 0.5f64..1.0, scale in 0.1f64..10.0) {
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 3.0 / d / 199.0).collect();
        let rho: Vec<f64> = times.iter().map(|t| 0.5 * (1.0 + a * (-d * t).exp())).collect();
        let fit = fit_exponential(&times, &rho, None).unwrap();
        prop_assert!((fit.get("d").unwrap() - d).abs() <= 1e-6 * d);
        prop_assert!((fit.get("amplitude").unwrap() - a).abs() <= 1e-6 * a);
        let scaled: Vec<f64> = times.iter().map(|t| t * scale).collect();
        let fit_s = fit_exponential(&scaled, &rho, None).unwrap();
        let expect = fit.get("d").unwrap() / scale;
        prop_assert!((fit_s.get("d").unwrap() - expect).abs() <= 1e-8 * expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ensemble_density_is_physical(seed in any::<u64>(), n in 2usize..6, delta in 0.0f64..0.02) {
        let (p, _, _) = small();
        let cfg = EnsembleConfig {
            n_realizations: n,
            master_seed: seed,
            hamiltonian: *p,
            n_basis: 48,
            noise: noise(delta, 200),
            initial_state: InitialState::Energy { index: 0 },
            total_time: 100.0,
            sample_every: 10,
            density_snapshots: vec![0, 20],
        };
        let ens = Ensemble::prepare(cfg).unwrap();
        let one = ens.run(Some(1)).unwrap();
        prop_assert!(one.min_eigenvalue() >= -1e-10);
        for k in 0..one.len() {
            prop_assert!(one.p_norm(k) <= 1.0 + 1e-10);
            let r = &one.rho2_avg[k];
            prop_assert!((r[(0, 0)].re + r[(1, 1)].re + one.leakage_avg[k] - 1.0).abs() < 1e-10);
        }
        for (_, rho) in &one.density {
            let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
            prop_assert!((tr - 1.0).abs() < 1e-10);
        }
        let two = ens.run(Some(2)).unwrap();
        prop_assert_eq!(one.p_vec, two.p_vec);
        prop_assert_eq!(one.stderr_rho11, two.stderr_rho11);
    }
}

#[test]
fn standard_error_scales_as_inverse_sqrt_n() {
    let (p, _, _) = small();
    let run = |n| {
        let cfg = EnsembleConfig {
            n_realizations: n,
            master_seed: 41,
            hamiltonian: *p,
            n_basis: 48,
            noise: noise(0.00032, 1_000),
            initial_state: InitialState::Energy { index: 0 },
            total_time: 500.0,
            sample_every: 50,
            density_snapshots: vec![],
        };
        let t = Ensemble::prepare(cfg).unwrap().run(None).unwrap();
        // skip t = 0, where every realization agrees
        t.stderr_rho11[1..].iter().sum::<f64>()
    };
    let ratio = run(400) / run(200);
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.15, "ratio {ratio}");
}
