use std::f64::consts::PI;

use sixvertex::bethe_discrete::{continue_in_delta, solve, SolverOptions};
use sixvertex::free_energy::{finite_size_f, free_energy_closed, log_eigenvalue, Method};
use sixvertex::model_params::{from_aux, to_aux, ModelParams};
use sixvertex::transfer_oracle::{build_block, largest_eigenvalue};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn dense_f(nn: usize, a: f64, b: f64, c: f64) -> f64 {
    largest_eigenvalue(&build_block(nn, nn / 2, a, b, c).unwrap()).unwrap().value.ln() / nn as f64
}

#[test]
fn richardson_extrapolated_transfer_matches_free_fermion_value() {
    // f_N = f + α/N² + O(1/N⁴) at the critical points with n = N/2 even.
    let c = 2f64.sqrt();
    let (n1, n2) = (8.0, 12.0);
    let (f1, f2) = (dense_f(8, 1.0, 1.0, c), dense_f(12, 1.0, 1.0, c));
    let extrapolated = (n2 * n2 * f2 - n1 * n1 * f1) / (n2 * n2 - n1 * n1);
    let closed = free_energy_closed(&to_aux(1.0, 1.0, c).unwrap()).unwrap().f_infinite;
    assert!((extrapolated - closed).abs() < 2e-4, "{extrapolated} vs {closed}");
    // Frozen reference: 2G/π with Catalan's constant G, from the dual dimer count.
    let catalan = 0.915_965_594_177_219;
    assert!((closed - 2.0 * catalan / PI).abs() < 1e-10, "{closed}");
}

#[test]
fn bethe_finite_size_equals_dense_eigenvalue() {
    for &(a, b, c) in &[(1.0, 1.0, 1.0), (2.0, 1.0, 1.8), (1.0, 1.0, 2.5), (1.0, 1.5, 2.5)] {
        let p = to_aux(a, b, c).unwrap();
        for nn in [6, 8, 10] {
            let s = solve(nn, nn / 2, &p, &opts()).unwrap();
            let r = finite_size_f(&s, 256).unwrap();
            assert!((r.f_n - dense_f(nn, a, b, c)).abs() < 1e-11, "({a},{b},{c}) N {nn}");
        }
    }
}

#[test]
fn gap_times_n_stays_bounded() {
    for delta in [0.5, -0.5, -1.0, -2.0] {
        let p = ModelParams::symmetric(delta).unwrap();
        let scaled: Vec<f64> = [16usize, 32, 64, 128]
            .iter()
            .map(|&nn| finite_size_f(&solve(nn, nn / 2, &p, &opts()).unwrap(), 256).unwrap().gap * nn as f64)
            .collect();
        assert!(scaled.iter().all(|g| g.abs() < 2.0), "delta {delta}: {scaled:?}");
    }
}

#[test]
fn half_filling_dominates() {
    for delta in [0.3, -0.5, -2.0] {
        let p = ModelParams::symmetric(delta).unwrap();
        let p = from_aux(1.0, p.zeta, PI / 3.0, p.regime).unwrap();
        let top = finite_size_f(&solve(16, 8, &p, &opts()).unwrap(), 256).unwrap().f_n;
        let mut prev = f64::NEG_INFINITY;
        for n in 0..8 {
            let f = finite_size_f(&solve(16, n, &p, &opts()).unwrap(), 256).unwrap().f_n;
            assert!(f <= top + 1e-14, "delta {delta} n {n}");
            assert!(f > prev, "delta {delta} n {n}");
            prev = f;
        }
    }
}

#[test]
fn log_eigenvalue_is_continuous_along_continuation() {
    let path: Vec<f64> = (0..=40).map(|i| 0.7 - 0.05 * i as f64).collect();
    let template = from_aux(1.0, 1.0, PI / 3.0, sixvertex::Regime::Disordered).unwrap();
    let states = continue_in_delta(12, 6, &path, &template, &opts()).unwrap();
    let logs: Vec<f64> = states.iter().map(|s| log_eigenvalue(s).unwrap().0).collect();
    for (i, w) in logs.windows(2).enumerate() {
        assert!((w[1] - w[0]).abs() < 0.5, "jump at {}: {:?}", path[i], w);
    }
    for (s, l) in states.iter().zip(&logs).step_by(10) {
        let (a, b, c) = s.params.weights();
        assert!((l / 12.0 - dense_f(12, a, b, c)).abs() < 1e-10, "delta {}", s.params.delta);
    }
}

#[test]
fn free_energy_is_smooth_in_delta() {
    // Second differences stay small away from Δ = −1 on each side.
    let f = |d: f64| free_energy_closed(&ModelParams::symmetric(d).unwrap()).unwrap().f_infinite;
    for d in [0.6, 0.2, -0.3, -0.8, -1.5, -2.5] {
        let h = 1e-3;
        let second = (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
        let first = (f(d + h) - f(d - h)) / (2.0 * h);
        let first_half = (f(d + h / 2.0) - f(d - h / 2.0)) / h;
        assert!(second.abs() < 50.0, "delta {d}: {second}");
        assert!((first - first_half).abs() < 1e-5, "delta {d}");
    }
}

#[test]
fn methods_by_regime() {
    assert_eq!(free_energy_closed(&to_aux(1.0, 1.0, 1.0).unwrap()).unwrap().method, Method::Integral);
    assert_eq!(free_energy_closed(&to_aux(1.0, 1.0, 3.0).unwrap()).unwrap().method, Method::Series);
    let r = free_energy_closed(&to_aux(1.0, 1.0, 1.0).unwrap()).unwrap();
    assert!(r.error_estimate < 1e-11);
}
