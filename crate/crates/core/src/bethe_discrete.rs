//! Discrete Bethe equations N𝔭(λᵢ) − Σⱼϑ(λᵢ−λⱼ) = 2πIᵢ with Iᵢ = i − (n+1)/2,
//! solved by Newton on the symmetric half, by the fixed-point maps Φ and Ψ, and by
//! continuation in Δ; plus interlacement, Diff and diagonal-dominance diagnostics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::bethe_continuum::{self, DensitySolution};
use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model_params::{ModelParams, Regime};

/// Nodes used for the density behind the initial guess.
const GUESS_NODES: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Target for max |T_Δ(λ)ᵢ|.
    pub tol: f64,
    pub max_iter: usize,
    /// Nyström nodes for 𝔮 and the diagnostics density.
    pub nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 100,
            nodes: bethe_continuum::DEFAULT_NODES,
        }
    }
}

/// A symmetric, strictly ordered solution of the Bethe equations.
#[derive(Debug, Clone)]
pub struct BetheState {
    pub n_sites: usize,
    pub n: usize,
    pub params: ModelParams,
    pub roots: Vec<f64>,
    /// max |T_Δ(λ)ᵢ|.
    pub residual_norm: f64,
    pub iterations: usize,
    /// 𝔮 = Q(n/N); NaN at Δ=−∞.
    pub q_frak: f64,
}

impl BetheState {
    pub fn kernels(&self) -> KernelSet {
        KernelSet::new(&self.params)
    }

    /// ρ(·|𝔮) for the diagnostics.
    pub fn density(&self, nodes: usize) -> Result<DensitySolution> {
        let k = self.kernels();
        if self.q_frak >= bethe_continuum::q_half(&k) {
            return Ok(DensitySolution::closed(&k));
        }
        bethe_continuum::solve_cbe(&k, self.q_frak, nodes)
    }

    pub fn min_gap(&self) -> f64 {
        self.roots
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Iᵢ = i − (n+1)/2 for i = 1..n.
pub fn ground_integers(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 - (n as f64 + 1.0) / 2.0).collect()
}

/// Rejects odd N and n > N/2.
pub fn validate_sizes(n_sites: usize, n: usize) -> Result<()> {
    if n_sites == 0 || n_sites % 2 == 1 {
        return Err(Error::Domain(format!("N = {n_sites} must be even and positive")));
    }
    if 2 * n > n_sites {
        return Err(Error::Domain(format!(
            "n = {n} > N/2 = {}; use arrow reversal to map to n <= N/2",
            n_sites / 2
        )));
    }
    Ok(())
}

/// [T_Δ(λ)]ᵢ = 𝔭(λᵢ)/2π − (1/2πN)Σⱼϑ(λᵢ−λⱼ) − Iᵢ/N.
pub fn residual_t(roots: &[f64], n_sites: usize, kernels: &KernelSet) -> Vec<f64> {
    let n = roots.len();
    let nf = n_sites as f64;
    let ints = ground_integers(n);
    (0..n)
        .map(|i| {
            let s: f64 = roots.iter().map(|&l| kernels.scattering_theta(roots[i] - l)).sum();
            (kernels.momentum_p(roots[i]) - s / nf) / (2.0 * PI) - ints[i] / nf
        })
        .collect()
}

/// Analytic Jacobian of [`residual_t`]: ξ(λᵢ) − (1/N)Σ_{ℓ≠i}K(λᵢ−λ_ℓ) on the diagonal,
/// K(λᵢ−λⱼ)/N off it.
pub fn jacobian_dt(roots: &[f64], n_sites: usize, kernels: &KernelSet) -> DMatrix<f64> {
    let n = roots.len();
    let nf = n_sites as f64;
    let mut j = DMatrix::from_fn(n, n, |i, l| {
        if i == l {
            0.0
        } else {
            kernels.kernel_k(roots[i] - roots[l]) / nf
        }
    });
    for i in 0..n {
        let off: f64 = (0..n).filter(|&l| l != i).map(|l| j[(i, l)]).sum();
        j[(i, i)] = kernels.bare_xi(roots[i]) - off;
    }
    j
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Indices of the free unknowns λᵢ > 0.
fn upper_half(n: usize) -> std::ops::Range<usize> {
    n.div_ceil(2)..n
}

fn from_upper(n: usize, upper: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = upper.iter().rev().map(|x| -x).collect();
    if n % 2 == 1 {
        v.push(0.0);
    }
    v.extend_from_slice(upper);
    v
}

fn is_strictly_ordered(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// 𝔮 = Q(n/N) at the given resolution.
pub fn fermi_boundary(n_sites: usize, n: usize, kernels: &KernelSet, nodes: usize) -> Result<f64> {
    match kernels.regime() {
        Regime::MinusInfinity => Ok(f64::NAN),
        _ if 2 * n == n_sites => Ok(bethe_continuum::q_half(kernels)),
        Regime::FreeFermionLike => {
            // ρ(·|q) = ξ, so ∫_{−q}^{q} ρ = 𝔭(q)/π
            kernels.p_inverse(PI * n as f64 / n_sites as f64)
        }
        _ => bethe_continuum::find_q(kernels, n as f64 / n_sites as f64, nodes),
    }
}

/// Quantile initializer λᵢ⁰ = Λ(i|𝔮); exact at Δ=0 and Δ=−∞.
pub fn initial_guess(n_sites: usize, n: usize, kernels: &KernelSet) -> Result<Vec<f64>> {
    validate_sizes(n_sites, n)?;
    let ints = ground_integers(n);
    let nf = n_sites as f64;
    match kernels.regime() {
        Regime::MinusInfinity => Ok(ints.iter().map(|i| PI * i / (nf - n as f64)).collect()),
        Regime::FreeFermionLike => ints
            .iter()
            .map(|i| kernels.p_inverse(2.0 * PI * i / nf))
            .collect(),
        _ => {
            if n == 0 {
                return Ok(Vec::new());
            }
            let q = fermi_boundary(n_sites, n, kernels, GUESS_NODES)?;
            let density = if q >= bethe_continuum::q_half(kernels) {
                DensitySolution::closed(kernels)
            } else {
                bethe_continuum::solve_cbe(kernels, q, GUESS_NODES)?
            };
            let mut v: Vec<f64> = ints.iter().map(|i| density.inverse_cumulative(i / nf)).collect();
            // exact symmetry
            for i in 0..n / 2 {
                let s = 0.5 * (v[n - 1 - i] - v[i]);
                v[i] = -s;
                v[n - 1 - i] = s;
            }
            if n % 2 == 1 {
                v[n / 2] = 0.0;
            }
            Ok(v)
        }
    }
}

/// One damped Newton step on the upper half of the roots; `None` when no step
/// length keeps the roots ordered and lowers the residual.
fn newton_step(
    upper: &[f64],
    roots: &[f64],
    res: f64,
    n_sites: usize,
    k: &KernelSet,
    tol: f64,
) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
    let n = roots.len();
    let up = upper_half(n);
    let f = residual_t(roots, n_sites, k);
    let j = jacobian_dt(roots, n_sites, k);
    let m = upper.len();
    let base = up.start;
    let jr = DMatrix::from_fn(m, m, |a, b| {
        let i = base + a;
        let l = base + b;
        j[(i, l)] - j[(i, n - 1 - l)]
    });
    let fr = DVector::from_iterator(m, f[up].iter().copied());
    let step = jr
        .lu()
        .solve(&fr)
        .ok_or_else(|| Error::SingularSystem("reduced Bethe Jacobian".into()))?;
    let mut t = 1.0;
    for _ in 0..40 {
        let trial: Vec<f64> = upper.iter().zip(step.iter()).map(|(u, s)| u - t * s).collect();
        if is_strictly_ordered(&trial) && trial.first().is_none_or(|&x| x > 0.0) {
            let cand = from_upper(n, &trial);
            let r = max_abs(&residual_t(&cand, n_sites, k));
            if r < res || r < tol {
                return Ok(Some((trial, cand, r)));
            }
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Damped Newton on the half-reduced system λ_{n+1−i} = −λᵢ.
pub fn solve_newton(
    n_sites: usize,
    n: usize,
    params: &ModelParams,
    guess: &[f64],
    opts: &SolverOptions,
) -> Result<BetheState> {
    validate_sizes(n_sites, n)?;
    if guess.len() != n {
        return Err(Error::Domain(format!("guess has {} roots, expected {n}", guess.len())));
    }
    let k = KernelSet::new(params);
    let up = upper_half(n);
    let mut upper: Vec<f64> = guess[up.clone()].iter().map(|x| x.abs()).collect();
    upper.sort_by(f64::total_cmp);
    let mut roots = from_upper(n, &upper);
    let mut res = max_abs(&residual_t(&roots, n_sites, &k));
    let mut iterations = 0;
    while res >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonFailed {
                iterations,
                residual: res,
                last_iterate: roots,
            });
        }
        iterations += 1;
        match newton_step(&upper, &roots, res, n_sites, &k, opts.tol)? {
            Some((u, r, e)) => (upper, roots, res) = (u, r, e),
            None => {
                return Err(Error::NewtonFailed {
                    iterations,
                    residual: res,
                    last_iterate: roots,
                })
            }
        }
    }
    // One polishing step takes the roots from just below tol to round-off.
    if res > 0.0 {
        if let Ok(Some((_, r, e))) = newton_step(&upper, &roots, res, n_sites, &k, 0.0) {
            (roots, res) = (r, e);
        }
    }
    let q_frak = fermi_boundary(n_sites, n, &k, opts.nodes)?;
    Ok(BetheState {
        n_sites,
        n,
        params: *params,
        roots,
        residual_norm: res,
        iterations,
        q_frak,
    })
}

/// Quantile guess, Newton, and continuation from Δ=0 if Newton fails.
pub fn solve(n_sites: usize, n: usize, params: &ModelParams, opts: &SolverOptions) -> Result<BetheState> {
    let k = KernelSet::new(params);
    let guess = initial_guess(n_sites, n, &k)?;
    match solve_newton(n_sites, n, params, &guess, opts) {
        Ok(s) => Ok(s),
        Err(e) if e.is_convergence() && params.regime == Regime::Disordered => {
            let path: Vec<f64> = (0..=32).map(|i| params.delta * i as f64 / 32.0).collect();
            continue_in_delta(n_sites, n, &path, params, opts)
                .ok()
                .and_then(|s| s.into_iter().last())
                .ok_or(e)
        }
        Err(e) => Err(e),
    }
}

/// Safeguarded Newton/bisection root of an increasing function on ℝ.
fn monotone_root(g: impl Fn(f64) -> (f64, f64), start: f64) -> Result<f64> {
    let (g0, _) = g(start);
    if g0 == 0.0 {
        return Ok(start);
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut step = 1.0;
    let mut other = start + dir * step;
    let mut guard = 0;
    while g(other).0 * g0 > 0.0 {
        step *= 2.0;
        other = start + dir * step;
        guard += 1;
        if guard > 200 {
            return Err(Error::Convergence("could not bracket fixed-point equation".into()));
        }
    }
    let (mut lo, mut hi) = if dir > 0.0 { (start, other) } else { (other, start) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (v, d) = g(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || v.abs() < 1e-16 {
            return Ok(x);
        }
    }
    Ok(x)
}

/// One application of Φ: 𝔭(μᵢ) − (1/N)Σⱼϑ(μᵢ−λⱼ) = 2πIᵢ/N, for 0 ≤ Δ < 1.
pub fn fixed_point_phi(roots: &[f64], n_sites: usize, kernels: &KernelSet) -> Result<Vec<f64>> {
    let p = &kernels.params;
    if !(p.regime.is_disordered() && p.delta >= -1e-12) {
        return Err(Error::Domain(format!("the map Phi needs 0 <= Delta < 1, got {}", p.delta)));
    }
    let n = roots.len();
    let nf = n_sites as f64;
    let ints = ground_integers(n);
    let sup = kernels.p_sup() - n as f64 / nf * kernels.theta_sup();
    ints.iter()
        .zip(roots)
        .map(|(&i, &start)| {
            let target = 2.0 * PI * i / nf;
            if target.abs() >= sup {
                return Err(Error::Range(format!("target {target} outside the range of Phi")));
            }
            monotone_root(
                |mu| {
                    let s: f64 = roots.iter().map(|&l| kernels.scattering_theta(mu - l)).sum();
                    let ks: f64 = roots.iter().map(|&l| kernels.kernel_k(mu - l)).sum();
                    (
                        kernels.momentum_p(mu) - s / nf - target,
                        2.0 * PI * (kernels.bare_xi(mu) - ks / nf),
                    )
                },
                start,
            )
        })
        .collect()
}

/// One application of Ψ: μᵢ = 𝔭⁻¹((1/N)Σⱼϑ(λᵢ−λⱼ) + 2πIᵢ/N), for Δ < 0.
pub fn fixed_point_psi(roots: &[f64], n_sites: usize, kernels: &KernelSet) -> Result<Vec<f64>> {
    let p = &kernels.params;
    if !(p.delta < 0.0) {
        return Err(Error::Domain(format!("the map Psi needs Delta < 0, got {}", p.delta)));
    }
    let nf = n_sites as f64;
    let ints = ground_integers(roots.len());
    roots
        .iter()
        .zip(&ints)
        .map(|(&li, &i)| {
            let s: f64 = roots.iter().map(|&l| kernels.scattering_theta(li - l)).sum();
            kernels.p_inverse(s / nf + 2.0 * PI * i / nf)
        })
        .collect()
}

/// Iterates a map to a fixed point in sup norm.
pub fn iterate_map(
    map: impl Fn(&[f64]) -> Result<Vec<f64>>,
    start: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut cur = start.to_vec();
    for sweep in 1..=max_sweeps {
        let next = map(&cur)?;
        let change = next
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        cur = next;
        if change < tol {
            return Ok((cur, sweep));
        }
    }
    Err(Error::Convergence(format!(
        "fixed-point iteration did not settle in {max_sweeps} sweeps"
    )))
}

/// Fixed point of Φ (0 ≤ Δ < 1) or Ψ (Δ < 0) from the quantile guess.
pub fn solve_fixed_point(n_sites: usize, n: usize, params: &ModelParams) -> Result<BetheState> {
    let k = KernelSet::new(params);
    let guess = initial_guess(n_sites, n, &k)?;
    let (roots, sweeps) = if params.delta >= 0.0 {
        iterate_map(|r| fixed_point_phi(r, n_sites, &k), &guess, 1e-13, 10_000)?
    } else {
        iterate_map(|r| fixed_point_psi(r, n_sites, &k), &guess, 1e-13, 10_000)?
    };
    let residual_norm = max_abs(&residual_t(&roots, n_sites, &k));
    Ok(BetheState {
        n_sites,
        n,
        params: *params,
        roots,
        residual_norm,
        iterations: sweeps,
        q_frak: fermi_boundary(n_sites, n, &k, bethe_continuum::DEFAULT_NODES)?,
    })
}

fn same_family(a: Regime, b: Regime) -> bool {
    a.is_disordered() && b.is_disordered() || a == b
}

/// Predictor–corrector continuation along the given Δ values, keeping r and θ
/// of `template`. Returns one state per path point.
pub fn continue_in_delta(
    n_sites: usize,
    n: usize,
    path: &[f64],
    template: &ModelParams,
    opts: &SolverOptions,
) -> Result<Vec<BetheState>> {
    let first = *path
        .first()
        .ok_or_else(|| Error::Domain("empty continuation path".into()))?;
    let p0 = template.with_delta(first)?;
    let guess = initial_guess(n_sites, n, &KernelSet::new(&p0))?;
    let mut cur = solve_newton(n_sites, n, &p0, &guess, opts)?;
    let mut prev: Option<(f64, BetheState)> = None;
    // Path coordinate; the stored params recompute Δ from ζ and may differ by an ulp.
    let mut at = first;
    let mut out = vec![cur.clone()];
    for &target in &path[1..] {
        let mut h = target - at;
        while at != target {
            if h.abs() < 1e-8 {
                return Err(Error::ContinuationStalled { delta: at });
            }
            let d_next = if (target - at).abs() <= h.abs() { target } else { at + h };
            let p_next = template.with_delta(d_next)?;
            let guess = if !same_family(p_next.regime, cur.params.regime) {
                initial_guess(n_sites, n, &KernelSet::new(&p_next))?
            } else if let Some((d_prev, pv)) = prev.as_ref().filter(|(_, pv)| same_family(pv.params.regime, cur.params.regime)) {
                let dd = at - d_prev;
                let s = if dd != 0.0 { (d_next - at) / dd } else { 0.0 };
                cur.roots
                    .iter()
                    .zip(&pv.roots)
                    .map(|(c, p)| c + s * (c - p))
                    .collect()
            } else {
                cur.roots.clone()
            };
            let attempt = solve_newton(n_sites, n, &p_next, &guess, opts).or_else(|e| {
                if e.is_convergence() {
                    solve_newton(n_sites, n, &p_next, &cur.roots, opts)
                } else {
                    Err(e)
                }
            });
            match attempt {
                Ok(s) => {
                    prev = Some((at, std::mem::replace(&mut cur, s)));
                    at = d_next;
                    h *= 1.5;
                }
                Err(e) if e.is_convergence() => h *= 0.5,
                Err(e) => return Err(e),
            }
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Signed displacements N∫_{Λ(i|q)}^{λᵢ} ρ(·|q) = N·∫₀^{λᵢ}ρ(·|q) − Iᵢ.
pub fn quantile_displacements(state: &BetheState, density: &DensitySolution) -> Vec<f64> {
    let nf = state.n_sites as f64;
    state
        .roots
        .iter()
        .zip(ground_integers(state.n))
        .map(|(&l, i)| nf * density.cumulative(l) - i)
        .collect()
}

/// 𝐦 = max over i of |N∫_{Λ(i)}^{λᵢ} ρ|.
pub fn interlacement_m(state: &BetheState, density: &DensitySolution) -> f64 {
    max_abs(&quantile_displacements(state, density))
}

/// Per-root Diff(i) at the density ρ(·|𝔮) and their maximum modulus.
pub fn diff_diagnostic(state: &BetheState, density: &DensitySolution) -> (Vec<f64>, f64) {
    let d = quantile_displacements(state, density);
    let m = max_abs(&d);
    (d, m)
}

/// min_i (A_ii − Σ_{j≠i}|A_ij|) with A_ij = [dT_Δ]_ij/ρ(λⱼ|𝔮).
pub fn diag_dominance_margin(state: &BetheState, density: &DensitySolution) -> f64 {
    let k = state.kernels();
    let j = jacobian_dt(&state.roots, state.n_sites, &k);
    let rho: Vec<f64> = state.roots.iter().map(|&l| density.eval(l)).collect();
    let n = state.n;
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&l| l != i).map(|l| (j[(i, l)] / rho[l]).abs()).sum();
            j[(i, i)] / rho[i] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// |(1/N)Σⱼ f(λⱼ) − ∫ f ρ(·|𝔮)|.
pub fn condensation_error(state: &BetheState, density: &DensitySolution, f: impl Fn(f64) -> f64) -> f64 {
    let emp: f64 = state.roots.iter().map(|&l| f(l)).sum::<f64>() / state.n_sites as f64;
    (emp - density.integrate(&f)).abs()
}

/// φ(λ) = 2ϑ(λ) − ϑ(λ+π/2) − ϑ(λ−π/2).
pub fn phi_function(kernels: &KernelSet, lambda: f64) -> f64 {
    2.0 * kernels.scattering_theta(lambda)
        - kernels.scattering_theta(lambda + PI / 2.0)
        - kernels.scattering_theta(lambda - PI / 2.0)
}

/// Smallest odd k with 2πk/(k+1) above |ϑ(+∞)−ϑ(−∞)| (|Δ|<1) or φ(π/4) (Δ<−1);
/// none at Δ=−1 where the bound equals 2π.
pub fn interlacement_k(kernels: &KernelSet) -> Option<usize> {
    let bound = match kernels.regime() {
        Regime::Disordered | Regime::FreeFermionLike => (2.0 * PI - 4.0 * kernels.zeta()).abs(),
        Regime::Antiferroelectric => phi_function(kernels, PI / 4.0),
        _ => return None,
    };
    let mut k = 1usize;
    while 2.0 * PI * k as f64 / (k as f64 + 1.0) <= bound {
        k += 2;
        if k > 1_000_001 {
            return None;
        }
    }
    Some(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_params::to_aux;

    fn sym(delta: f64) -> ModelParams {
        ModelParams::symmetric(delta).unwrap()
    }

    #[test]
    fn free_fermion_guess_is_exact() {
        let p = sym(0.0);
        let k = KernelSet::new(&p);
        let g = initial_guess(12, 6, &k).unwrap();
        assert!(max_abs(&residual_t(&g, 12, &k)) < 1e-15);
        let s = solve_newton(12, 6, &p, &g, &SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        let d = s.density(64).unwrap();
        assert!(interlacement_m(&s, &d) < 1e-13);
        assert!((diag_dominance_margin(&s, &d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_root_is_zero() {
        for delta in [0.5, -0.5, -2.0] {
            let s = solve(12, 1, &sym(delta), &SolverOptions::default()).unwrap();
            assert_eq!(s.roots, vec![0.0]);
            assert_eq!(s.residual_norm, 0.0);
        }
        let s = solve(8, 0, &sym(-0.5), &SolverOptions::default()).unwrap();
        assert!(s.roots.is_empty());
    }

    #[test]
    fn minus_infinity_roots() {
        let k = KernelSet::new(&ModelParams::minus_infinity());
        let g = initial_guess(10, 4, &k).unwrap();
        assert!(max_abs(&residual_t(&g, 10, &k)) < 1e-15);
        assert!((g[3] - PI * 1.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_against_finite_differences() {
        for p in [sym(-0.5), sym(0.4), sym(-2.0), to_aux(2.0, 1.0, 1.8).unwrap(), to_aux(1.0, 1.0, 2.0).unwrap()] {
            let k = KernelSet::new(&p);
            let roots = [-0.9, -0.3, 0.05, 0.4, 1.1];
            let j = jacobian_dt(&roots, 10, &k);
            assert!((&j - j.transpose()).amax() == 0.0);
            let h = 1e-6;
            for c in 0..roots.len() {
                let mut plus = roots;
                let mut minus = roots;
                plus[c] += h;
                minus[c] -= h;
                let fp = residual_t(&plus, 10, &k);
                let fm = residual_t(&minus, 10, &k);
                for r in 0..roots.len() {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    assert!((fd - j[(r, c)]).abs() < 1e-6 * j[(r, c)].abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn newton_examples() {
        let opts = SolverOptions::default();
        let s = solve(16, 8, &to_aux(1.0, 1.0, 1.0).unwrap(), &opts).unwrap();
        assert!(s.residual_norm < 1e-12);
        assert!(is_strictly_ordered(&s.roots));
        for i in 0..8 {
            assert_eq!(s.roots[i], -s.roots[7 - i]);
        }
        let s = solve(12, 6, &to_aux(1.0, 1.0, 2.0 - 1e-10).unwrap(), &opts).unwrap();
        assert_eq!(s.params.regime, Regime::Isotropic);
        assert!(s.residual_norm < 1e-12);
    }

    #[test]
    fn fixed_points_match_newton() {
        let opts = SolverOptions::default();
        for (nn, n, delta) in [(12, 6, 0.5), (12, 5, -0.5), (12, 6, -2.0)] {
            let p = sym(delta);
            let a = solve(nn, n, &p, &opts).unwrap();
            let b = solve_fixed_point(nn, n, &p).unwrap();
            let d = a.roots.iter().zip(&b.roots).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10, "delta={delta}: {d}");
        }
        let k = KernelSet::new(&sym(-0.5));
        assert_eq!(fixed_point_psi(&[0.0], 12, &k).unwrap(), vec![0.0]);
        assert!(fixed_point_phi(&[0.0], 12, &k).is_err());
    }

    #[test]
    fn interlacement_k_values() {
        assert_eq!(interlacement_k(&KernelSet::new(&sym(0.0))), Some(1));
        let k = interlacement_k(&KernelSet::new(&sym(-0.9))).unwrap();
        assert_eq!(k % 2, 1);
        let k2 = KernelSet::new(&sym(-2.0));
        assert!(phi_function(&k2, 0.0).abs() < 1e-14);
        assert!(phi_function(&k2, PI / 2.0).abs() < 1e-13);
        let top = phi_function(&k2, PI / 4.0);
        assert!(top > 0.0 && top < 2.0 * PI);
        for i in 0..=50 {
            assert!(phi_function(&k2, i as f64 * PI / 100.0) <= top + 1e-14);
        }
        assert!(interlacement_k(&KernelSet::new(&to_aux(1.0, 1.0, 2.0).unwrap())).is_none());
    }

    #[test]
    fn rejects_bad_sizes() {
        let p = sym(0.5);
        assert!(matches!(solve(12, 7, &p, &SolverOptions::default()), Err(Error::Domain(_))));
        assert!(matches!(solve(11, 3, &p, &SolverOptions::default()), Err(Error::Domain(_))));
    }
}
