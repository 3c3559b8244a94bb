//! Continuum Bethe equation ρ(·|q) + 𝒦_q ρ(·|q) = ξ on [−q, q], the Fermi
//! boundary Q(m), the resolvent R with R̂ = K̂/(1+K̂), the complement form
//! ρ(·|q) = Σ 𝒰^k[ρ], the Wiener–Hopf function T and the edge asymptotics of δf.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{Hat, KernelSet};
use crate::model_params::Regime;
use crate::quadrature::{self, Grid, PANEL_ORDER};

/// Default Nyström resolution.
pub const DEFAULT_NODES: usize = 256;
/// find_Q switches to the asymptotic law when 1/2 − m is below this (|Δ| ≤ 1).
pub const ASYMPTOTIC_SWITCH: f64 = 1e-4;

fn require_finite_coupling(k: &KernelSet) -> Result<()> {
    if k.regime() == Regime::MinusInfinity {
        return Err(Error::Domain(
            "continuum equations need a finite anisotropy".into(),
        ));
    }
    Ok(())
}

/// Q(1/2): +∞ for |Δ| ≤ 1, π/2 for Δ < −1.
pub fn q_half(k: &KernelSet) -> f64 {
    match k.regime() {
        Regime::Antiferroelectric => PI / 2.0,
        _ => f64::INFINITY,
    }
}

/// Nodes on [−q, q] fine enough for the kernel width.
fn symmetric_grid(k: &KernelSet, q: f64, n_nodes: usize) -> Grid {
    let width = 2.0 * k.analytic_width().min(1.0);
    let by_width = (2.0 * q / width).ceil() as usize;
    let n_panels = n_nodes.div_ceil(PANEL_ORDER).max(by_width).max(1);
    quadrature::panels(-q, q, n_panels, PANEL_ORDER)
}

fn lu_solve(a: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem(what.to_string()))
}

/// ρ(·|q) as a Nyström solution, or the closed-form ρ when q = Q(1/2).
#[derive(Debug, Clone)]
pub struct DensitySolution {
    pub q: f64,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub kernels: KernelSet,
    /// ‖A‖₁‖A⁻¹‖₁ of the Nyström matrix (1 for closed forms).
    pub condition_estimate: f64,
    closed: bool,
}

impl DensitySolution {
    /// The background density ρ = ρ(·|Q(1/2)).
    pub fn closed(kernels: &KernelSet) -> Self {
        DensitySolution {
            q: q_half(kernels),
            grid: Grid::default(),
            values: Vec::new(),
            kernels: *kernels,
            condition_estimate: 1.0,
            closed: true,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    /// ρ(x|q); outside [−q, q] this is the natural extension through the equation.
    pub fn eval(&self, x: f64) -> f64 {
        if self.closed {
            return self.kernels.closed_density_rho(x);
        }
        let k = &self.kernels;
        let conv: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values)
            .map(|((&y, &w), &v)| w * v * k.kernel_k(x - y))
            .sum();
        k.bare_xi(x) - conv
    }

    pub fn mass(&self) -> f64 {
        if self.closed {
            return 0.5;
        }
        self.grid.dot(&self.values)
    }

    /// ∫₀^x ρ(λ|q) dλ.
    pub fn cumulative(&self, x: f64) -> f64 {
        let k = &self.kernels;
        if self.closed {
            return k.closed_density_cumulative(x);
        }
        let conv: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values)
            .map(|((&y, &w), &v)| w * v * (k.scattering_theta(x - y) - k.scattering_theta(-y)))
            .sum();
        (k.momentum_p(x) - conv) / (2.0 * PI)
    }

    /// lim_{x→+∞} of [`Self::cumulative`]; +∞ for Δ<−1.
    pub fn cumulative_sup(&self) -> f64 {
        let k = &self.kernels;
        if k.period().is_some() {
            return f64::INFINITY;
        }
        if self.closed {
            return 0.25;
        }
        let ts = k.theta_sup();
        let conv: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values)
            .map(|((&y, &w), &v)| w * v * (ts - k.scattering_theta(-y)))
            .sum();
        (k.p_sup() - conv) / (2.0 * PI)
    }

    /// Solves ∫₀^x ρ(·|q) = t; ±∞ when t is beyond the total mass on a half-line.
    pub fn inverse_cumulative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let sup = self.cumulative_sup();
        if t.abs() >= sup {
            return t.signum() * f64::INFINITY;
        }
        let s = t.signum();
        let t = t.abs();
        // bracket on the positive side, then safeguarded Newton
        let mut hi = if self.q.is_finite() && self.q > 0.0 { self.q } else { 1.0 };
        let mut grow = 0;
        while self.cumulative(hi) < t {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return s * f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        let mut x = 0.5 * hi;
        for _ in 0..200 {
            let f = self.cumulative(x) - t;
            if f.abs() < 1e-15 {
                break;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.eval(x);
            let newton = x - f / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        s * x
    }

    /// Quantile Λ(x|q) for an n-root configuration on N columns.
    pub fn quantile(&self, x: f64, n: usize, n_sites: usize) -> f64 {
        self.inverse_cumulative((x - (n as f64 + 1.0) / 2.0) / n_sites as f64)
    }

    /// ∫ f ρ(·|q) over [−q, q] (the whole support for the closed density).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        if self.closed {
            let g = self.closed_support_grid();
            return g.integrate(|x| f(x) * self.kernels.closed_density_rho(x));
        }
        self.grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values)
            .map(|((&x, &w), &v)| w * v * f(x))
            .sum()
    }

    fn closed_support_grid(&self) -> Grid {
        let k = &self.kernels;
        match k.regime() {
            Regime::Antiferroelectric => {
                quadrature::panels_by_width(-PI / 2.0, PI / 2.0, k.zeta().min(0.5), PANEL_ORDER)
            }
            _ => {
                let scale = if k.regime() == Regime::Isotropic { 1.0 } else { k.zeta() };
                let x = 40.0 * scale / PI;
                quadrature::panels_by_width(-x, x, scale.min(1.0), PANEL_ORDER)
            }
        }
    }

    /// Max of |ρ(x) + ∫K(x−y)ρ(y)dy − ξ(x)| at the given points, with the integral
    /// taken on a grid twice as fine as the one used for the solve.
    pub fn residual_at(&self, points: &[f64]) -> f64 {
        if self.closed {
            return 0.0;
        }
        let k = &self.kernels;
        let fine = quadrature::panels(-self.q, self.q, 2 * (self.grid.len() / PANEL_ORDER).max(1), PANEL_ORDER);
        let fine_vals: Vec<f64> = fine.nodes.iter().map(|&y| self.eval(y)).collect();
        points
            .iter()
            .map(|&x| {
                let conv: f64 = fine
                    .nodes
                    .iter()
                    .zip(&fine.weights)
                    .zip(&fine_vals)
                    .map(|((&y, &w), &v)| w * v * k.kernel_k(x - y))
                    .sum();
                (self.eval(x) + conv - k.bare_xi(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Nyström solve of the continuum Bethe equation on [−q, q].
pub fn solve_cbe(kernels: &KernelSet, q: f64, n_nodes: usize) -> Result<DensitySolution> {
    require_finite_coupling(kernels)?;
    if n_nodes < 32 {
        return Err(Error::Domain(format!("n_nodes = {n_nodes} < 32")));
    }
    if !(q > 0.0) {
        return Err(Error::Domain(format!("Fermi boundary q = {q} must be positive")));
    }
    if q.is_infinite() {
        if kernels.period().is_some() {
            return Err(Error::Domain("q must not exceed pi/2 for Delta < -1".into()));
        }
        return Ok(DensitySolution::closed(kernels));
    }
    if kernels.period().is_some() && q > PI / 2.0 + 1e-12 {
        return Err(Error::Domain(format!("q = {q} exceeds pi/2 for Delta < -1")));
    }
    let grid = symmetric_grid(kernels, q, n_nodes);
    let n = grid.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + grid.weights[j] * kernels.kernel_k(grid.nodes[i] - grid.nodes[j])
    });
    let rhs = DVector::from_iterator(n, grid.nodes.iter().map(|&x| kernels.bare_xi(x)));
    let norm1 = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let a_norm = norm1(&a);
    let lu = a.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("continuum Bethe equation".into()))?;
    let condition_estimate = if n <= 1024 {
        lu.try_inverse().map(|inv| a_norm * norm1(&inv)).unwrap_or(f64::INFINITY)
    } else {
        f64::NAN
    };
    Ok(DensitySolution {
        q,
        grid,
        values: sol.iter().copied().collect(),
        kernels: *kernels,
        condition_estimate,
        closed: false,
    })
}

/// Doubles the resolution from [`DEFAULT_NODES`] until successive solutions differ
/// by less than `tol` in sup norm on the coarse nodes.
pub fn solve_cbe_converged(kernels: &KernelSet, q: f64, tol: f64) -> Result<DensitySolution> {
    let mut n = DEFAULT_NODES;
    let mut sol = solve_cbe(kernels, q, n)?;
    if sol.is_closed() {
        return Ok(sol);
    }
    while n < 8192 {
        n *= 2;
        let finer = solve_cbe(kernels, q, n)?;
        let diff = sol
            .grid
            .nodes
            .iter()
            .zip(&sol.values)
            .map(|(&x, &v)| (finer.eval(x) - v).abs())
            .fold(0.0, f64::max);
        sol = finer;
        if diff < tol {
            return Ok(sol);
        }
    }
    Err(Error::Convergence(format!(
        "density at q = {q} not resolved to {tol:e} with {n} nodes"
    )))
}

/// ∫_{−q}^{q} ρ(λ|q) dλ.
pub fn density_mass(kernels: &KernelSet, q: f64, n_nodes: usize) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    if q >= q_half(kernels) {
        return Ok(0.5);
    }
    Ok(solve_cbe(kernels, q, n_nodes)?.mass())
}

/// Q(m): the Fermi boundary at which ρ(·|q) has mass m.
pub fn find_q(kernels: &KernelSet, m: f64, n_nodes: usize) -> Result<f64> {
    require_finite_coupling(kernels)?;
    if !(0.0..=0.5).contains(&m) {
        return Err(Error::Range(format!("filling m = {m} outside [0, 1/2]")));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    if m == 0.5 {
        return Ok(q_half(kernels));
    }
    if kernels.period().is_none() && 0.5 - m < ASYMPTOTIC_SWITCH {
        let t = solve_t(kernels, None, None)?;
        return Ok(t.decay_length() * (t.c_delta / (0.5 - m)).ln());
    }
    let mass = |q: f64| density_mass(kernels, q, n_nodes);
    let (mut lo, mut flo) = (0.0, -m);
    let mut hi = if kernels.period().is_some() { PI / 2.0 } else { 1.0 };
    let mut fhi = mass(hi)? - m;
    while fhi < 0.0 {
        if kernels.period().is_some() {
            return Err(Error::Convergence(format!("mass at pi/2 below m = {m}")));
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = mass(hi)? - m;
        if hi > 1e4 {
            return Err(Error::Convergence(format!("no bracket for Q({m})")));
        }
    }
    // Illinois regula falsi on the monotone mass curve
    let mut side = 0i32;
    for _ in 0..200 {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = mass(x)? - m;
        if fx.abs() < 1e-11 * 0.01 || hi - lo < 1e-14 * hi {
            return Ok(x);
        }
        if fx < flo || fx > fhi {
            return scan_for_q(kernels, m, lo, hi, n_nodes);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    let x = 0.5 * (lo + hi);
    if (mass(x)? - m).abs() < 1e-11 {
        Ok(x)
    } else {
        Err(Error::Convergence(format!("Q({m}) root-finding stalled")))
    }
}

/// Fallback when the mass curve is observed to be non-monotone on a bracket.
fn scan_for_q(kernels: &KernelSet, m: f64, lo: f64, hi: f64, n_nodes: usize) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    for _ in 0..6 {
        let pts: Vec<f64> = (0..=64).map(|i| a + (b - a) * i as f64 / 64.0).collect();
        let mut found = None;
        for w in pts.windows(2) {
            let fa = density_mass(kernels, w[0], n_nodes)? - m;
            let fb = density_mass(kernels, w[1], n_nodes)? - m;
            if fa <= 0.0 && fb >= 0.0 {
                found = Some((w[0], w[1]));
                break;
            }
        }
        let (x, y) = found.ok_or_else(|| Error::Convergence(format!("scan found no root for Q({m})")))?;
        a = x;
        b = y;
    }
    Ok(0.5 * (a + b))
}

/// The resolvent kernel R of 𝒦(id+𝒦)⁻¹.
#[derive(Debug, Clone)]
pub struct Resolvent {
    kernels: KernelSet,
    /// Samples R(k·h) for |Δ|<1.
    table: Vec<f64>,
    step: f64,
}

const LAGRANGE_POINTS: usize = 10;

/// ψ(z) for Re z > 0.
fn digamma(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < 12.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli tail B_{2k}/(2k z^{2k})
    let coeffs = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv2;
    for c in coeffs {
        series += c * p;
        p *= inv2;
    }
    acc + z.ln() - 0.5 * inv - series
}

impl Resolvent {
    pub fn new(kernels: &KernelSet) -> Result<Self> {
        require_finite_coupling(kernels)?;
        let mut r = Resolvent {
            kernels: *kernels,
            table: Vec::new(),
            step: 0.0,
        };
        if kernels.regime() == Regime::Disordered {
            let z = kernels.zeta();
            let decay = (2.0 * PI / (PI - z)).min(PI / z);
            let x_max = 42.0 / decay;
            let h = kernels.analytic_width() / 32.0;
            let n = (x_max / h).ceil() as usize + LAGRANGE_POINTS;
            let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            r.table = Self::fourier_integral(kernels, &xs);
            r.step = h;
        }
        Ok(r)
    }

    /// (1/π)∫₀^∞ R̂(t)cos(tx)dt evaluated on a panel rule, for several x at once.
    fn fourier_integral(kernels: &KernelSet, xs: &[f64]) -> Vec<f64> {
        let c = match kernels.regime() {
            Regime::Isotropic => 1.0,
            _ => kernels.analytic_width(),
        };
        let t_max = 42.0 / c;
        let x_max = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let width = (4.0 * PI / (x_max + 1.0)).min(1.0).min(t_max);
        let g = quadrature::panels_by_width(0.0, t_max, width, PANEL_ORDER);
        let hat: Vec<f64> = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(&t, &w)| w * kernels.fourier_hat(Hat::R, t).unwrap_or(0.0))
            .collect();
        xs.iter()
            .map(|&x| {
                g.nodes
                    .iter()
                    .zip(&hat)
                    .map(|(&t, &h)| h * (t * x).cos())
                    .sum::<f64>()
                    / PI
            })
            .collect()
    }

    /// R(x) from the inverse transform (|Δ| ≤ 1) or Fourier series (Δ<−1) directly.
    pub fn eval_direct(&self, x: f64) -> f64 {
        let k = &self.kernels;
        match k.regime() {
            Regime::FreeFermionLike => 0.0,
            Regime::Antiferroelectric => self.eval(x),
            _ => Self::fourier_integral(k, &[x])[0],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.kernels;
        match k.regime() {
            Regime::FreeFermionLike => 0.0,
            Regime::Disordered => self.interpolate(x.abs()),
            Regime::Isotropic => {
                // (1/π)Σ_{k≥1}(−1)^{k+1} k/(k²+x²) = Re[ψ(1+ix/2) − ψ((1+ix)/2)]/(2π)
                let z = Complex64::new(0.0, x);
                (digamma(1.0 + z / 2.0) - digamma((1.0 + z) / 2.0)).re / (2.0 * PI)
            }
            Regime::Antiferroelectric => {
                let z = k.zeta();
                let mut s = 0.5;
                for n in 1..100_000 {
                    let e = (-2.0 * n as f64 * z).exp();
                    let term = e / (1.0 + e);
                    s += 2.0 * term * (2.0 * n as f64 * x).cos();
                    if term < 1e-18 {
                        break;
                    }
                }
                s / PI
            }
            Regime::MinusInfinity => f64::NAN,
        }
    }

    fn interpolate(&self, x: f64) -> f64 {
        let h = self.step;
        let j = (x / h).floor() as isize;
        let last = self.table.len() as isize - 1;
        if j + (LAGRANGE_POINTS as isize) / 2 > last {
            return 0.0;
        }
        let start = j - (LAGRANGE_POINTS as isize) / 2 + 1;
        let s = x / h - start as f64;
        // barycentric weights for equispaced nodes 0..P−1
        let mut num = 0.0;
        let mut den = 0.0;
        let mut binom = 1.0;
        for i in 0..LAGRANGE_POINTS {
            let idx = (start + i as isize).unsigned_abs();
            let f = self.table[idx];
            let d = s - i as f64;
            if d.abs() < 1e-14 {
                return f;
            }
            let w = if i % 2 == 0 { binom } else { -binom } / d;
            num += w * f;
            den += w;
            binom = binom * (LAGRANGE_POINTS - 1 - i) as f64 / (i + 1) as f64;
        }
        num / den
    }

    /// ‖R‖_{L¹} over ℝ (|Δ| ≤ 1) or one period (Δ<−1) by quadrature.
    pub fn l1_norm(&self) -> f64 {
        let k = &self.kernels;
        match k.regime() {
            Regime::Antiferroelectric => {
                let g = quadrature::panels_by_width(-PI / 2.0, PI / 2.0, k.zeta().min(0.5), PANEL_ORDER);
                g.integrate(|x| self.eval(x).abs())
            }
            Regime::Isotropic => {
                // algebraic tail R ~ 1/(4πx²) beyond the cut
                let cut = 400.0;
                let g = quadrature::panels_by_width(0.0, cut, 1.0, PANEL_ORDER);
                2.0 * (g.integrate(|x| self.eval(x).abs()) + 1.0 / (4.0 * PI * cut))
            }
            _ => {
                let g = quadrature::panels_by_width(0.0, 45.0, k.analytic_width().min(1.0), PANEL_ORDER);
                2.0 * g.integrate(|x| self.eval(x).abs())
            }
        }
    }
}

/// Complement-form solution with its Neumann diagnostics.
#[derive(Debug, Clone)]
pub struct ComplementSolution {
    pub density: DensitySolution,
    pub sweeps: usize,
    /// Largest ratio of successive Neumann increments after the first sweep.
    pub contraction: f64,
}

/// Quadrature on the complement of [−q, q] in ℝ (or in one period).
fn complement_grid(k: &KernelSet, q: f64) -> Grid {
    let right = match k.regime() {
        Regime::Antiferroelectric => {
            if PI / 2.0 - q < 1e-15 {
                Grid::default()
            } else {
                quadrature::panels_by_width(q, PI / 2.0, k.zeta().min(0.5), PANEL_ORDER)
            }
        }
        // Unit panels keep w·R(0) well below 1; beyond q+40 the unknown has decayed
        // by e^{−πq} and the R tail contributes under 1e−12.
        Regime::Isotropic => quadrature::panels_by_width(q, q + 40.0, 1.0, PANEL_ORDER),
        _ => quadrature::panels_by_width(q, q + 20.0, k.analytic_width().min(1.0), PANEL_ORDER),
    };
    let mut g = right.reflected();
    g.append(right);
    g
}

/// ρ(·|q) from ρ(·|q) = ρ + ∫_{complement} R(· − y) ρ(y|q) dy by Neumann iteration.
pub fn solve_complement_form(
    kernels: &KernelSet,
    q: f64,
    n_nodes: usize,
) -> Result<ComplementSolution> {
    require_finite_coupling(kernels)?;
    if !(q > 0.0) || q > q_half(kernels) + 1e-12 {
        return Err(Error::Domain(format!("q = {q} outside (0, Q(1/2)]")));
    }
    let target = symmetric_grid(kernels, q.min(1e6), n_nodes.max(32));
    let res = Resolvent::new(kernels)?;
    let comp = complement_grid(kernels, q);
    let bg = |x: f64| kernels.closed_density_rho(x);
    let nc = comp.len();
    let mut sweeps = 1;
    let mut contraction: f64 = 0.0;
    let mut v: Vec<f64> = comp.nodes.iter().map(|&y| bg(y)).collect();
    if nc > 0 {
        let u = DMatrix::from_fn(nc, nc, |i, j| comp.weights[j] * res.eval(comp.nodes[i] - comp.nodes[j]));
        let base = DVector::from_vec(v.clone());
        let mut cur = base.clone();
        let mut prev_inc = f64::NAN;
        loop {
            let next = &base + &u * &cur;
            let inc = (&next - &cur).amax();
            cur = next;
            sweeps += 1;
            if prev_inc.is_finite() && prev_inc > 1e-14 * cur.amax() {
                contraction = contraction.max(inc / prev_inc);
            }
            // Round-off floor: stop once increments are at the ulp level or stop shrinking there.
            let stalled = prev_inc.is_finite() && inc >= prev_inc && inc <= 1e-13 * cur.amax();
            prev_inc = inc;
            if inc <= 1e-15 * cur.amax() || stalled {
                break;
            }
            if sweeps > 200 {
                return Err(Error::Convergence(format!(
                    "complement Neumann series did not converge in 200 sweeps (q = {q})"
                )));
            }
        }
        v = cur.iter().copied().collect();
    }
    let values: Vec<f64> = target
        .nodes
        .iter()
        .map(|&x| {
            bg(x)
                + comp
                    .nodes
                    .iter()
                    .zip(&comp.weights)
                    .zip(&v)
                    .map(|((&y, &w), &r)| w * r * res.eval(x - y))
                    .sum::<f64>()
        })
        .collect();
    Ok(ComplementSolution {
        density: DensitySolution {
            q,
            grid: target,
            values,
            kernels: *kernels,
            condition_estimate: f64::NAN,
            closed: false,
        },
        sweeps,
        contraction,
    })
}

/// Solution of T − ∫₀^∞ R(·−y)T(y)dy = 𝔢 on a truncated half-line.
#[derive(Debug, Clone)]
pub struct WienerHopfT {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub l_cut: f64,
    /// Exponential rate of the tail model (0 for the algebraic Δ=−1 tail).
    pub tail_rate: f64,
    /// ∫₀^∞ T, tail included.
    pub integral: f64,
    /// J = ∫₀^∞ e^{−πx/ζ} T(x) dx (e^{−πx} at Δ=−1).
    pub weighted_integral: f64,
    /// C_Δ = lim (1/2−m)e^{Q(m)π/ζ} = (π/(π−ζ))∫T; ∫T at Δ=−1.
    pub c_delta: f64,
    /// Residual of the T equation at off-node points on a refined grid.
    pub residual: f64,
    kernels: KernelSet,
    resolvent: Resolvent,
}

impl WienerHopfT {
    /// Length scale ζ/π of the edge exponentials (1/π at Δ=−1).
    pub fn decay_length(&self) -> f64 {
        edge_length(&self.kernels)
    }

    /// 𝔢(x).
    pub fn source(&self, x: f64) -> f64 {
        edge_source(&self.kernels, x)
    }

    /// Nyström interpolant of T.
    pub fn eval(&self, x: f64) -> f64 {
        edge_source(&self.kernels, x)
            + self
                .grid
                .nodes
                .iter()
                .zip(&self.grid.weights)
                .zip(&self.values)
                .map(|((&y, &w), &t)| w * t * self.resolvent.eval(x - y))
                .sum::<f64>()
    }

    /// C(ζ) = J/C_Δ², the coefficient of sinθ(1−2m)² in the free-energy deficit.
    pub fn correction_coefficient(&self) -> f64 {
        self.weighted_integral / (self.c_delta * self.c_delta)
    }
}

fn edge_length(k: &KernelSet) -> f64 {
    match k.regime() {
        Regime::Isotropic => 1.0 / PI,
        _ => k.zeta() / PI,
    }
}

fn edge_source(k: &KernelSet, x: f64) -> f64 {
    match k.regime() {
        Regime::Isotropic => (-PI * x).exp(),
        _ => (-PI * x / k.zeta()).exp() / k.zeta(),
    }
}

/// Solves the Wiener–Hopf equation for T; `l_cut` and `n_nodes` default to values
/// that put the truncated tail below 1e−12.
pub fn solve_t(
    kernels: &KernelSet,
    l_cut: Option<f64>,
    n_nodes: Option<usize>,
) -> Result<WienerHopfT> {
    let regime = kernels.regime();
    if !(regime.is_disordered() || regime == Regime::Isotropic) {
        return Err(Error::Domain(
            "the Wiener-Hopf function is defined for |Delta| <= 1".into(),
        ));
    }
    let resolvent = Resolvent::new(kernels)?;
    let z = kernels.zeta();
    let (l_cut, tail_rate) = if regime == Regime::Isotropic {
        (l_cut.unwrap_or(200.0), 0.0)
    } else {
        let rate = (2.0 * PI / (PI - z)).min(PI / z);
        (l_cut.unwrap_or(28.0 * (z / PI).max((PI - z) / (2.0 * PI))), rate)
    };
    let width = kernels.analytic_width().clamp(1e-3, 1.0);
    let mut grid = if regime == Regime::Isotropic {
        let near = l_cut.min(40.0);
        let mut g = quadrature::panels_by_width(0.0, near, 1.0, PANEL_ORDER);
        if l_cut > near {
            g.append(quadrature::panels_by_width(near, l_cut, 2.0, PANEL_ORDER));
        }
        g
    } else {
        quadrature::panels_by_width(0.0, l_cut, width, PANEL_ORDER)
    };
    if let Some(req) = n_nodes {
        if req > grid.len() {
            grid = quadrature::panels(0.0, l_cut, req.div_ceil(PANEL_ORDER), PANEL_ORDER);
        }
    }
    let n = grid.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - grid.weights[j] * resolvent.eval(grid.nodes[i] - grid.nodes[j])
    });
    let rhs = DVector::from_iterator(n, grid.nodes.iter().map(|&x| edge_source(kernels, x)));
    let sol = lu_solve(a, rhs, "Wiener-Hopf equation")?;
    let values: Vec<f64> = sol.iter().copied().collect();
    let mut t = WienerHopfT {
        grid,
        values,
        l_cut,
        tail_rate,
        integral: 0.0,
        weighted_integral: 0.0,
        c_delta: 0.0,
        residual: 0.0,
        kernels: *kernels,
        resolvent,
    };
    let lam = edge_length(kernels);
    let t_end = t.eval(l_cut);
    let tail = if regime == Regime::Isotropic {
        // T ~ A/x² beyond the cut
        t_end * l_cut
    } else {
        t_end / tail_rate
    };
    t.integral = t.grid.dot(&t.values) + tail;
    let weighted: Vec<f64> = t
        .grid
        .nodes
        .iter()
        .zip(&t.values)
        .map(|(&x, &v)| (-x / lam).exp() * v)
        .collect();
    t.weighted_integral = t.grid.dot(&weighted);
    t.c_delta = if regime == Regime::Isotropic {
        t.integral
    } else {
        PI / (PI - z) * t.integral
    };
    t.residual = wiener_hopf_residual(&t);
    if !(t.residual < 1e-8) {
        return Err(Error::Convergence(format!(
            "Wiener-Hopf residual {:e} exceeds 1e-8",
            t.residual
        )));
    }
    Ok(t)
}

fn wiener_hopf_residual(t: &WienerHopfT) -> f64 {
    let n_panels = (t.grid.len() / PANEL_ORDER).max(1);
    let mut fine = Grid::default();
    for p in 0..n_panels {
        let lo = t.grid.nodes[p * PANEL_ORDER];
        let hi = t.grid.nodes[(p + 1) * PANEL_ORDER - 1];
        // recover panel edges from the first and last node positions
        let base = quadrature::gauss_legendre(PANEL_ORDER, 0.0, 1.0);
        let s0 = base.nodes[0];
        let s1 = base.nodes[PANEL_ORDER - 1];
        let width = (hi - lo) / (s1 - s0);
        let left = lo - s0 * width;
        fine.append(quadrature::panels(left, left + width, 2, PANEL_ORDER));
    }
    let fine_vals: Vec<f64> = fine.nodes.iter().map(|&y| t.eval(y)).collect();
    let checks: Vec<f64> = (0..24).map(|i| (i as f64 + 0.37) * t.l_cut / 24.0 * 0.5).collect();
    checks
        .iter()
        .map(|&x| {
            let conv: f64 = fine
                .nodes
                .iter()
                .zip(&fine.weights)
                .zip(&fine_vals)
                .map(|((&y, &w), &v)| w * v * t.resolvent.eval(x - y))
                .sum();
            (t.eval(x) - conv - t.source(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// ∫ C ρ over the whole support of the background density, from the Fourier side.
pub fn background_c_integral(kernels: &KernelSet) -> Result<f64> {
    require_finite_coupling(kernels)?;
    match kernels.regime() {
        Regime::Antiferroelectric => {
            let mut s = kernels.fourier_hat(Hat::C, 0.0)? * kernels.fourier_hat(Hat::Rho, 0.0)?;
            for n in 1..100_000 {
                let term = kernels.fourier_hat(Hat::C, n as f64)? * kernels.fourier_hat(Hat::Rho, n as f64)?;
                s += 2.0 * term;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            Ok(s / PI)
        }
        _ => {
            let decay = if kernels.regime() == Regime::Isotropic { 0.5 } else { kernels.zeta() / 2.0 };
            let t_max = 42.0 / decay;
            let g = quadrature::panels_by_width(0.0, t_max, 0.5, PANEL_ORDER);
            let mut s = 0.0;
            for (&t, &w) in g.nodes.iter().zip(&g.weights) {
                s += w * kernels.fourier_hat(Hat::C, t)? * kernels.fourier_hat(Hat::Rho, t)?;
            }
            Ok(s / PI)
        }
    }
}

/// ∫_{−q}^{q} C ρ(·|q), resolving the logarithmic singularity of C at 0 when θ=π/2.
pub fn truncated_c_integral(density: &DensitySolution) -> Result<f64> {
    if density.is_closed() {
        return background_c_integral(&density.kernels);
    }
    let k = &density.kernels;
    let g = quadrature::graded_toward_left(0.0, density.q, 1e-9 * density.q.min(1.0), PANEL_ORDER);
    let mut s = 0.0;
    for (&x, &w) in g.nodes.iter().zip(&g.weights) {
        s += w * k.log_abs_c(x)? * density.eval(x);
    }
    Ok(2.0 * s)
}

/// δf(q) = ∫ C ρ − ∫_{−q}^{q} C ρ(·|q), by quadrature.
pub fn delta_f_direct(kernels: &KernelSet, q: f64, n_nodes: usize) -> Result<f64> {
    if q >= q_half(kernels) {
        return Ok(0.0);
    }
    let full = background_c_integral(kernels)?;
    let dens = solve_cbe(kernels, q, n_nodes)?;
    Ok(full - truncated_c_integral(&dens)?)
}

/// Σ_{n∈ℤ}(−1)^n sinh(2nζθ/π)/(2n cosh nζ) with the n=0 term ζθ/π, for θ ≤ π/2.
///
/// The slowly converging part Σ(−1)^n x^n/n is summed as −ln(1+x).
pub fn antiferro_edge_series(zeta: f64, theta: f64) -> Result<f64> {
    if theta > PI / 2.0 + 1e-12 {
        return Err(Error::Domain(
            "edge series needs theta <= pi/2; swap a and b first".into(),
        ));
    }
    let u = 2.0 * theta / PI;
    let x = (zeta * (u - 1.0)).exp();
    let mut s = zeta * theta / PI - (1.0 + x).ln();
    // exact term: (−1)^n x^n/n · (1 − e^{−2nζu})/(1 + e^{−2nζ}); subtract the leading (−1)^n x^n/n
    for n in 1..200_000 {
        let nf = n as f64;
        let xn = x.powf(nf);
        let factor = (-(-2.0 * nf * zeta * u).exp_m1()) / (1.0 + (-2.0 * nf * zeta).exp()) - 1.0;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * xn / nf * factor;
        s += term;
        if term.abs() < 1e-18 && xn * factor.abs() < 1e-18 {
            break;
        }
    }
    Ok(s)
}

/// Leading edge asymptotics of δf(q) as q → Q(1/2).
pub fn delta_f_asymptotic(kernels: &KernelSet, q: f64) -> Result<f64> {
    require_finite_coupling(kernels)?;
    let p = &kernels.params;
    match kernels.regime() {
        Regime::Antiferroelectric => {
            if !(q <= PI / 2.0 && PI / 2.0 - q <= 0.5) {
                return Err(Error::Range(format!(
                    "edge asymptotics need pi/2 - 0.5 <= q <= pi/2, got {q}"
                )));
            }
            let theta = p.theta.min(PI - p.theta);
            let s = antiferro_edge_series(kernels.zeta(), theta)?;
            Ok((PI - 2.0 * q) * kernels.closed_density_rho(PI / 2.0) * s)
        }
        _ => {
            let lam = edge_length(kernels);
            if !(q >= PI * lam) {
                return Err(Error::Range(format!(
                    "edge asymptotics need q >= {}, got {q}",
                    PI * lam
                )));
            }
            let t = solve_t(kernels, None, None)?;
            Ok(4.0 * p.theta.sin() * (-2.0 * q / lam).exp() * t.weighted_integral)
        }
    }
}
