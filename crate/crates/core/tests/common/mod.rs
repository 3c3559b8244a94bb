//! Property checks shared by the `properties` target and the acceptance suite.
//! Each check runs a proptest runner and reports the first counterexample.

#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use sixvertex::bethe_discrete::{self, SolverOptions};
use sixvertex::model_params::{from_aux, ModelParams, Regime};
use sixvertex::quadrature;
use sixvertex::{Hat, KernelSet};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Any anisotropy below 1, the isotropic point included.
pub fn any_delta() -> impl Strategy<Value = f64> {
    prop_oneof![-0.95..0.95f64, -4.0..-1.05f64, Just(-1.0)]
}

fn params_at(delta: f64, theta: f64) -> ModelParams {
    let base = ModelParams::symmetric(delta).unwrap();
    from_aux(1.0, base.zeta, theta, base.regime).unwrap()
}

/// Parity of 𝔭, ϑ, K, ξ, ρ, C and the derivative relations ϑ′ = 2πK, 𝔭′ = 2πξ.
pub fn kernel_parity(cases: u32) -> Result<(), String> {
    let strat = (any_delta(), 0.3..2.8f64, -4.0..4.0f64);
    runner(cases)
        .run(&strat, |(delta, theta, x)| {
            let p = params_at(delta, theta);
            let k = KernelSet::new(&p);
            check((k.momentum_p(x) + k.momentum_p(-x)).abs() < 1e-12, || format!("p odd at {x}"))?;
            check((k.scattering_theta(x) + k.scattering_theta(-x)).abs() < 1e-12, || format!("theta odd at {x}"))?;
            check((k.kernel_k(x) - k.kernel_k(-x)).abs() < 1e-12, || "K even".into())?;
            check((k.bare_xi(x) - k.bare_xi(-x)).abs() < 1e-12, || "xi even".into())?;
            check((k.closed_density_rho(x) - k.closed_density_rho(-x)).abs() < 1e-12, || "rho even".into())?;
            if let (Ok(c1), Ok(c2)) = (k.log_abs_c(x), k.log_abs_c(-x)) {
                check((c1 - c2).abs() < 1e-12, || "C even".into())?;
            }
            let h = 1e-5;
            let dt = (k.scattering_theta(x + h) - k.scattering_theta(x - h)) / (2.0 * h);
            let dp = (k.momentum_p(x + h) - k.momentum_p(x - h)) / (2.0 * h);
            let kk = 2.0 * PI * k.kernel_k(x);
            let xx = 2.0 * PI * k.bare_xi(x);
            check((dt - kk).abs() <= 1e-6 * kk.abs().max(1e-2), || format!("theta' = {dt} vs 2piK = {kk} at {x}, delta {delta}"))?;
            check((dp - xx).abs() <= 1e-6 * xx.abs().max(1e-2), || format!("p' = {dp} vs 2pi xi = {xx}"))?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// K̂, ξ̂ and ρ̂ against direct quadrature, and ρ̂ = ξ̂/(1+K̂).
pub fn kernel_fourier(cases: u32) -> Result<(), String> {
    let strat = (prop_oneof![-0.95..0.95f64, -4.0..-1.05f64], 0.0..3.0f64, 0usize..4);
    runner(cases)
        .run(&strat, |(delta, t, n)| {
            let k = KernelSet::new(&ModelParams::symmetric(delta).unwrap());
            let (t, grid) = if k.period().is_some() {
                (n as f64, quadrature::panels(-PI / 2.0, PI / 2.0, 16, 16))
            } else {
                let top = 40.0 * k.zeta().max(1.0);
                (t, quadrature::panels_by_width(-top, top, 0.25 * k.analytic_width().min(1.0), 16))
            };
            let freq = if k.period().is_some() { 2.0 * t } else { t };
            for (hat, f) in [
                (Hat::K, Box::new(|x: f64| k.kernel_k(x)) as Box<dyn Fn(f64) -> f64>),
                (Hat::Xi, Box::new(|x: f64| k.bare_xi(x))),
                (Hat::Rho, Box::new(|x: f64| k.closed_density_rho(x))),
            ] {
                let direct = grid.integrate(|x| f(x) * (freq * x).cos());
                let closed = k.fourier_hat(hat, t).unwrap();
                check((direct - closed).abs() < 1e-8, || format!("{hat:?} at t={t}, delta={delta}: {direct} vs {closed}"))?;
            }
            let kh = k.fourier_hat(Hat::K, t).unwrap();
            let xh = k.fourier_hat(Hat::Xi, t).unwrap();
            let rh = k.fourier_hat(Hat::Rho, t).unwrap();
            check((rh - xh / (1.0 + kh)).abs() < 1e-13, || "rho hat identity".into())?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn sorted_roots(raw: Vec<f64>) -> Vec<f64> {
    let mut v = raw;
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    v
}

/// Analytic Jacobian of T_Δ against central differences.
pub fn jacobian_fd(cases: u32) -> Result<(), String> {
    let strat = (any_delta(), 0.3..2.8f64, prop::collection::vec(-2.0..2.0f64, 1..8), 3usize..12);
    runner(cases)
        .run(&strat, |(delta, theta, raw, half)| {
            let k = KernelSet::new(&params_at(delta, theta));
            let roots = sorted_roots(raw);
            let nn = 2 * half.max(roots.len());
            let j = bethe_discrete::jacobian_dt(&roots, nn, &k);
            let h = 1e-6;
            for c in 0..roots.len() {
                let (mut a, mut b) = (roots.clone(), roots.clone());
                a[c] += h;
                b[c] -= h;
                let fa = bethe_discrete::residual_t(&a, nn, &k);
                let fb = bethe_discrete::residual_t(&b, nn, &k);
                for r in 0..roots.len() {
                    let fd = (fa[r] - fb[r]) / (2.0 * h);
                    check((fd - j[(r, c)]).abs() <= 1e-6 * j[(r, c)].abs().max(1e-3), || {
                        format!("dT[{r},{c}] = {} vs fd {fd} (delta {delta})", j[(r, c)])
                    })?;
                }
            }
            check((&j - j.transpose()).amax() == 0.0, || "Jacobian not symmetric".into())
        })
        .map_err(|e| e.to_string())
}

/// Newton against the fixed-point map Φ (Δ ≥ 0) or Ψ (Δ < 0).
pub fn newton_vs_fixed_point(cases: u32) -> Result<(), String> {
    let strat = (prop_oneof![0.0..0.8f64, -0.95..-0.05f64, -3.0..-1.1f64, Just(-1.0)], 2usize..11, 0.0..1.0f64);
    runner(cases)
        .run(&strat, |(delta, half, frac)| {
            let nn = 2 * half;
            let n = ((frac * half as f64).round() as usize).clamp(1, half);
            let p = ModelParams::symmetric(delta).unwrap();
            let a = bethe_discrete::solve(nn, n, &p, &SolverOptions::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let b = bethe_discrete::solve_fixed_point(nn, n, &p).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let d = a.roots.iter().zip(&b.roots).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            check(d < 1e-9, || format!("N={nn} n={n} delta={delta}: roots differ by {d:e}"))
        })
        .map_err(|e| e.to_string())
}

/// A Δ-path out from 0 and back returns to the exact Δ = 0 roots.
pub fn continuation_reversible(cases: u32) -> Result<(), String> {
    let strat = (prop_oneof![0.1..0.9f64, -0.9..-0.1f64], 3usize..12, 0.3..1.0f64);
    runner(cases)
        .run(&strat, |(target, half, frac)| {
            let nn = 2 * half;
            let n = ((frac * half as f64).round() as usize).clamp(1, half);
            let mut path: Vec<f64> = (0..=6).map(|i| target * i as f64 / 6.0).collect();
            path.extend((0..6).rev().map(|i| target * i as f64 / 6.0));
            let template = ModelParams::symmetric(0.0).unwrap();
            let states = bethe_discrete::continue_in_delta(nn, n, &path, &template, &SolverOptions::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let last = states.last().unwrap();
            check(last.params.regime == Regime::FreeFermionLike, || "path did not end at 0".into())?;
            let k = last.kernels();
            for (l, i) in last.roots.iter().zip(bethe_discrete::ground_integers(n)) {
                let exact = k.p_inverse(2.0 * PI * i / nn as f64).unwrap();
                check((l - exact).abs() < 1e-9, || format!("N={nn} n={n}: {l} vs {exact}"))?;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The four suites named by the acceptance criterion on property tests.
pub fn all_suites() -> Vec<(&'static str, fn(u32) -> Result<(), String>, u32)> {
    vec![
        ("kernel parity and derivatives", kernel_parity as fn(u32) -> Result<(), String>, 64),
        ("kernel Fourier consistency", kernel_fourier, 32),
        ("Jacobian vs finite differences", jacobian_fd, 48),
        ("Newton vs fixed-point maps", newton_vs_fixed_point, 32),
        ("continuation reversibility", continuation_reversible, 16),
    ]
}
