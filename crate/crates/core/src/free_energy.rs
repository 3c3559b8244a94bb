//! Closed-form free energy f(a,b,c), the finite-size free energy f_N^(n) from the
//! Bethe eigenvalue Λ = a^N∏L(λⱼ) + b^N∏M(λⱼ), and the predicted deficit f − f_N^(n).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bethe_continuum::{self, DensitySolution};
use crate::bethe_discrete::BetheState;
use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model_params::{ModelParams, Regime};
use crate::quadrature::{self, Grid, PANEL_ORDER};

/// Distance of θ from π/2 below which an odd-n state uses the pole limit.
pub const POLE_THETA_BAND: f64 = 1e-10;

/// Tolerance of the phase audit on ∏L and ∏M.
pub const PHASE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Integral,
    Series,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Integral => "integral",
            Method::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    L,
    M,
    /// |a^N∏L| = |b^N∏M|, as at a = b.
    Balanced,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::L => "L",
            Branch::M => "M",
            Branch::Balanced => "balanced",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FreeEnergyReport {
    pub params: ModelParams,
    pub f_infinite: f64,
    pub method: Method,
    pub error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct FiniteSizeReport {
    pub n_sites: usize,
    pub n: usize,
    pub params: ModelParams,
    pub log_lambda: f64,
    pub f_n: f64,
    pub branch: Branch,
    /// max{log a + ∫log|L|ρ(·|𝔮), log b + ∫log|M|ρ(·|𝔮)}.
    pub condensed: f64,
    /// f_n − condensed.
    pub gap: f64,
    /// quantitative_correction when inside its window.
    pub correction_prediction: Option<f64>,
}

/// Parameters with a ≥ b, i.e. θ ≤ π/2, by the swap a↔b.
fn oriented(params: &ModelParams) -> ModelParams {
    if params.theta > PI / 2.0 {
        params.swapped()
    } else {
        *params
    }
}

/// Integral over [0, ∞) of an even integrand decaying like e^{−rate·t}.
fn half_line_grid(rate: f64, refine: usize) -> Grid {
    let top = 42.0 / rate;
    let inner = top.min(20.0);
    let mut g = quadrature::panels_by_width(0.0, inner, 0.5 / refine as f64, PANEL_ORDER);
    let mut left = inner;
    while left < top {
        let right = (left * (1.0 + 0.25 / refine as f64)).min(top);
        g.append(quadrature::gauss_legendre(PANEL_ORDER, left, right));
        left = right;
    }
    g
}

/// e^{(u−v)t}(1−e^{−2ut})/(1+e^{−2vt}) = sinh(ut)/cosh(vt), u, v, t ≥ 0.
fn sinh_over_cosh(u: f64, v: f64, t: f64) -> f64 {
    ((u - v) * t).exp() * (-(-2.0 * u * t).exp_m1()) / (1.0 + (-2.0 * v * t).exp())
}

/// sinh(ut)/sinh(vt), 0 ≤ u < v, t > 0.
fn sinh_over_sinh(u: f64, v: f64, t: f64) -> f64 {
    ((u - v) * t).exp() * (-(-2.0 * u * t).exp_m1()) / (-(-2.0 * v * t).exp_m1())
}

fn disordered_integrand(zeta: f64, theta: f64, t: f64) -> f64 {
    let amp = 2.0 * (PI - theta) * zeta / PI;
    if t < 1e-8 {
        return (PI - theta) * zeta * (PI - zeta) / (PI * PI);
    }
    sinh_over_cosh(amp, zeta, t) * sinh_over_sinh(PI - zeta, PI, t) / (2.0 * t)
}

fn isotropic_integrand(theta: f64, t: f64) -> f64 {
    let amp = 2.0 * (PI - theta) / PI;
    if t < 1e-8 {
        return (PI - theta) / PI;
    }
    sinh_over_cosh(amp, 1.0, t) * (-t).exp() / (2.0 * t)
}

fn antiferro_series(zeta: f64, theta: f64) -> f64 {
    let mut sum = zeta * theta / PI;
    let e = 2.0 * theta / PI - 1.0;
    for n in 1..100_000 {
        let nz = n as f64 * zeta;
        // e^{−nζ}sinh(2nζθ/π)/(n cosh nζ)
        let term = (e * nz - nz).exp() * (-(-4.0 * nz * theta / PI).exp_m1())
            / (1.0 + (-2.0 * nz).exp())
            / n as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// f(a,b,c) by the closed formula.
pub fn free_energy_closed(params: &ModelParams) -> Result<FreeEnergyReport> {
    let p = oriented(params);
    let (b_log, a_log) = (p.b.ln(), p.a.ln());
    let integral = |f: &dyn Fn(f64) -> f64, rate: f64| -> (f64, f64) {
        let coarse = 2.0 * half_line_grid(rate, 1).integrate(f);
        let fine = 2.0 * half_line_grid(rate, 2).integrate(f);
        (fine, (fine - coarse).abs())
    };
    let (value, method, err) = match p.regime {
        Regime::Disordered | Regime::FreeFermionLike => {
            let rate = 2.0 * p.theta * p.zeta / PI;
            let (v, e) = integral(&|t| disordered_integrand(p.zeta, p.theta, t), rate);
            (b_log + v, Method::Integral, e)
        }
        Regime::Isotropic => {
            let rate = 2.0 * p.theta / PI;
            let (v, e) = integral(&|t| isotropic_integrand(p.theta, t), rate);
            (b_log + v, Method::Integral, e)
        }
        Regime::Antiferroelectric => (a_log + antiferro_series(p.zeta, p.theta), Method::Series, 1e-16),
        Regime::MinusInfinity => {
            return Err(Error::Domain("free energy needs finite weights".into()));
        }
    };
    Ok(FreeEnergyReport {
        params: *params,
        f_infinite: value,
        method,
        error_estimate: err,
    })
}

/// log(±e^x ± e^y) for signs sx, sy; errors when the result is not positive.
fn signed_log_sum_exp(x: f64, sx: f64, y: f64, sy: f64) -> Result<f64> {
    let (big, sb, small, ss) = if x >= y { (x, sx, y, sy) } else { (y, sy, x, sx) };
    if sb < 0.0 {
        return Err(Error::Domain("Bethe eigenvalue is not positive".into()));
    }
    let r = ss * (small - big).exp();
    if r <= -1.0 {
        return Err(Error::Domain("Bethe eigenvalue is not positive".into()));
    }
    Ok(big + r.ln_1p())
}

/// Sign of a product from its accumulated phase, auditing that it is real.
fn audited_sign(phase: f64) -> Result<f64> {
    let k = (phase / PI).round();
    let residue = (phase - k * PI).abs();
    if residue > PHASE_TOL {
        return Err(Error::Convergence(format!(
            "amplitude product has residual phase {residue:e}"
        )));
    }
    Ok(if (k as i64) % 2 == 0 { 1.0 } else { -1.0 })
}

/// θ → π/2 limit of Λ for odd n, where λ = 0 is a common pole of L and M.
fn log_eigenvalue_pole_limit(state: &BetheState, k: &KernelSet) -> Result<(f64, Branch)> {
    let p = &state.params;
    let mid = state.n / 2;
    let (alpha, _) = k.amplitude_shifts();
    let two_ia = Complex64::new(0.0, 2.0 * alpha);
    let mut log_prod = 0.0;
    let mut phase = 0.0;
    let mut d_r = 0.0;
    for (j, &l) in state.roots.iter().enumerate() {
        if j == mid {
            continue;
        }
        log_prod += k.log_abs_c(l)?;
        phase += k.amplitude_l(l)?.arg();
        let z = Complex64::new(l, 0.0);
        let diff = k.sh_log_derivative(z - two_ia) - k.sh_log_derivative(z + two_ia);
        d_r += (Complex64::new(0.0, -1.0) * diff).re;
    }
    let sign = audited_sign(phase)?;
    let d_w = state.n_sites as f64 * k.weight_log_derivative_at_symmetric_point();
    let bracket = Complex64::new(0.0, 1.0) * k.sh(two_ia) * (d_w + d_r) - 2.0 * k.sh_prime(two_ia);
    if bracket.im.abs() > PHASE_TOL * bracket.norm().max(1.0) {
        return Err(Error::Convergence("pole-limit bracket is not real".into()));
    }
    let v = sign * bracket.re;
    if !(v > 0.0) {
        return Err(Error::Domain("Bethe eigenvalue is not positive".into()));
    }
    Ok((state.n_sites as f64 * p.a.ln() + log_prod + v.ln(), Branch::Balanced))
}

/// log Λ for a solved state, and the dominant term.
pub fn log_eigenvalue(state: &BetheState) -> Result<(f64, Branch)> {
    let k = state.kernels();
    let p = &state.params;
    let nf = state.n_sites as f64;
    if p.regime == Regime::MinusInfinity {
        return Err(Error::Domain("eigenvalue undefined at Delta = -infinity".into()));
    }
    if state.n % 2 == 1 && (p.theta - PI / 2.0).abs() < POLE_THETA_BAND {
        return log_eigenvalue_pole_limit(state, &k);
    }
    let (mut s_l, mut s_m) = (nf * p.a.ln(), nf * p.b.ln());
    let (mut ph_l, mut ph_m) = (0.0, 0.0);
    for &l in &state.roots {
        s_l += k.log_abs_c(l)?;
        s_m += k.log_abs_m(l)?;
        ph_l += k.amplitude_l(l)?.arg();
        ph_m += k.amplitude_m(l)?.arg();
    }
    let (sg_l, sg_m) = (audited_sign(ph_l)?, audited_sign(ph_m)?);
    let branch = if (s_l - s_m).abs() <= 1e-12 * s_l.abs().max(1.0) {
        Branch::Balanced
    } else if s_l > s_m {
        Branch::L
    } else {
        Branch::M
    };
    Ok((signed_log_sum_exp(s_l, sg_l, s_m, sg_m)?, branch))
}

/// ∫ g ρ(·|q) on a grid graded toward the logarithmic singularity of g at 0.
fn integrate_against_density(density: &DensitySolution, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let k = &density.kernels;
    let top = if density.q.is_finite() {
        density.q
    } else {
        let scale = if k.regime() == Regime::Isotropic { 1.0 } else { k.zeta() };
        40.0 * scale / PI
    };
    let split = top.min(0.5);
    let mut grid = quadrature::graded_toward_left(0.0, split, 1e-9, PANEL_ORDER);
    if top > split {
        grid.append(quadrature::panels_by_width(split, top, 0.5 * k.analytic_width().min(1.0), PANEL_ORDER));
    }
    let mut s = 0.0;
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        s += w * g(x)? * density.eval(x);
    }
    Ok(2.0 * s)
}

/// log a + ∫log|L|ρ(·|q) and log b + ∫log|M|ρ(·|q).
pub fn condensed_values(params: &ModelParams, density: &DensitySolution) -> Result<(f64, f64)> {
    let k = density.kernels;
    let vl = params.a.ln() + integrate_against_density(density, |x| k.log_abs_c(x))?;
    let vm = params.b.ln() + integrate_against_density(density, |x| k.log_abs_m(x))?;
    Ok((vl, vm))
}

/// f_N^(n) = log Λ/N with its condensed approximation.
pub fn finite_size_f(state: &BetheState, nodes: usize) -> Result<FiniteSizeReport> {
    let (log_lambda, branch) = log_eigenvalue(state)?;
    let f_n = log_lambda / state.n_sites as f64;
    let condensed = if state.n == 0 {
        state.params.a.ln().max(state.params.b.ln())
    } else {
        let density = state.density(nodes)?;
        let (vl, vm) = condensed_values(&state.params, &density)?;
        vl.max(vm)
    };
    Ok(FiniteSizeReport {
        n_sites: state.n_sites,
        n: state.n,
        params: state.params,
        log_lambda,
        f_n,
        branch,
        condensed,
        gap: f_n - condensed,
        correction_prediction: quantitative_correction(&state.params, state.n, state.n_sites).ok(),
    })
}

/// Coefficient of (1−2n/N)² for −1 ≤ Δ < 1 (C(ζ)·sinθ), or of (1−2n/N) for Δ < −1.
pub fn correction_coefficient(params: &ModelParams) -> Result<f64> {
    let p = oriented(params);
    let k = KernelSet::new(&p);
    match p.regime {
        Regime::Disordered | Regime::FreeFermionLike | Regime::Isotropic => {
            let t = bethe_continuum::solve_t(&k, None, None)?;
            Ok(t.correction_coefficient() * p.theta.sin())
        }
        Regime::Antiferroelectric => bethe_continuum::antiferro_edge_series(p.zeta, p.theta),
        Regime::MinusInfinity => Err(Error::Domain("no correction law at Delta = -infinity".into())),
    }
}

/// Predicted f − f_N^(n) up to O(1/N) and the (1+o(1)) factor, on the window
/// n ≤ N/2 − min{ζ⁻², (log N)²}.
pub fn quantitative_correction(params: &ModelParams, n: usize, n_sites: usize) -> Result<f64> {
    if n_sites < 2 || n_sites % 2 == 1 {
        return Err(Error::Domain(format!("N = {n_sites} must be even and at least 2")));
    }
    let nf = n_sites as f64;
    let zeta = if params.regime == Regime::Isotropic { 0.0 } else { params.zeta };
    let margin = (zeta.powi(-2)).min(nf.ln().powi(2));
    if n as f64 > nf / 2.0 - margin {
        return Err(Error::Range(format!(
            "n = {n} lies outside the window n <= N/2 - {margin:.3}"
        )));
    }
    let x = 1.0 - 2.0 * n as f64 / nf;
    let c = correction_coefficient(params)?;
    Ok(match params.regime {
        Regime::Antiferroelectric => c * x,
        _ => c * x * x,
    })
}
