//! Dense row-to-row transfer blocks V_N^(n) on small periodic lattices, their
//! Perron–Frobenius pair, the coordinate Bethe vector and the torus partition function.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bethe_discrete::BetheState;
use crate::error::{Error, Result};
use crate::free_energy;

/// Largest block dimension accepted by [`build_block`].
pub const MAX_BLOCK_DIM: usize = 13_000;
/// Blocks at least this large use power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 4_000;
pub const MAX_SITES: usize = 16;
pub const MAX_BETHE_VECTOR_ROOTS: usize = 6;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Lexicographically ordered n-subsets of {1..N}, stored as bit masks
/// (bit k set when column k+1 carries an up arrow).
#[derive(Debug, Clone)]
pub struct ArrowBasis {
    pub n_sites: usize,
    pub n: usize,
    pub states: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl ArrowBasis {
    pub fn new(n_sites: usize, n: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES || n > n_sites {
            return Err(Error::Size(format!("basis needs 0 <= n <= N <= {MAX_SITES}, got N={n_sites}, n={n}")));
        }
        let mut states = Vec::with_capacity(binomial(n_sites, n));
        let mut pos: Vec<usize> = (0..n).collect();
        loop {
            states.push(pos.iter().fold(0u32, |m, &p| m | (1 << p)));
            // next combination in lexicographic order
            let mut i = n;
            loop {
                if i == 0 {
                    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                    return Ok(ArrowBasis { n_sites, n, states, index });
                }
                i -= 1;
                if pos[i] < n_sites - n + i {
                    break;
                }
            }
            pos[i] += 1;
            for j in i + 1..n {
                pos[j] = pos[j - 1] + 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.index.get(&state).copied()
    }

    /// Up-arrow positions x₁ < … < x_n, 1-based.
    pub fn positions(&self, i: usize) -> Vec<usize> {
        let s = self.states[i];
        (0..self.n_sites).filter(|k| s >> k & 1 == 1).map(|k| k + 1).collect()
    }

    /// Index of the mirrored state x ↦ N+1−x.
    pub fn reversed_index(&self, i: usize) -> usize {
        let s = self.states[i];
        let r = (0..self.n_sites)
            .filter(|k| s >> k & 1 == 1)
            .fold(0u32, |m, k| m | (1 << (self.n_sites - 1 - k)));
        self.index[&r]
    }
}

/// Weight of the vertex with west, south, east, north arrows; +1 is → or ↑.
pub fn vertex_weight(w: i8, s: i8, e: i8, n: i8, a: f64, b: f64, c: f64) -> f64 {
    match (w, s, e, n) {
        (1, 1, 1, 1) | (-1, -1, -1, -1) => a,
        (1, -1, 1, -1) | (-1, 1, -1, 1) => b,
        (1, -1, -1, 1) | (-1, 1, 1, -1) => c,
        _ => 0.0,
    }
}

fn arrow(state: u32, k: usize) -> i8 {
    if state >> k & 1 == 1 {
        1
    } else {
        -1
    }
}

/// V[out, in] as the trace of the product of 2×2 auxiliary matrices.
fn transfer_entry(n_sites: usize, lower: u32, upper: u32, w: (f64, f64, f64)) -> f64 {
    let h = [1i8, -1];
    let local = |k: usize| {
        let (s, n) = (arrow(lower, k), arrow(upper, k));
        let mut m = [[0.0; 2]; 2];
        for (i, &hi) in h.iter().enumerate() {
            for (o, &ho) in h.iter().enumerate() {
                m[i][o] = vertex_weight(hi, s, ho, n, w.0, w.1, w.2);
            }
        }
        m
    };
    let mut acc = local(0);
    for k in 1..n_sites {
        let m = local(k);
        let mut next = [[0.0; 2]; 2];
        let mut nonzero = false;
        for i in 0..2 {
            for o in 0..2 {
                next[i][o] = acc[i][0] * m[0][o] + acc[i][1] * m[1][o];
                nonzero |= next[i][o] != 0.0;
            }
        }
        if !nonzero {
            return 0.0;
        }
        acc = next;
    }
    acc[0][0] + acc[1][1]
}

#[derive(Debug, Clone)]
pub struct TransferBlock {
    pub basis: ArrowBasis,
    pub entries: DMatrix<f64>,
    pub weights: (f64, f64, f64),
}

/// Builds V_N^(n) for positive weights.
pub fn build_block(n_sites: usize, n: usize, a: f64, b: f64, c: f64) -> Result<TransferBlock> {
    if n_sites < 2 || n_sites % 2 == 1 || n_sites > MAX_SITES {
        return Err(Error::Size(format!("N = {n_sites} must be even in [2, {MAX_SITES}]")));
    }
    if n > n_sites {
        return Err(Error::Size(format!("n = {n} exceeds N = {n_sites}")));
    }
    let dim = binomial(n_sites, n);
    if dim > MAX_BLOCK_DIM {
        return Err(Error::Size(format!("block dimension {dim} exceeds {MAX_BLOCK_DIM}")));
    }
    for w in [a, b, c] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("weight {w} must be positive")));
        }
    }
    let basis = ArrowBasis::new(n_sites, n)?;
    let cols: Vec<Vec<f64>> = basis
        .states
        .par_iter()
        .map(|&lower| {
            basis
                .states
                .iter()
                .map(|&upper| transfer_entry(n_sites, lower, upper, (a, b, c)))
                .collect()
        })
        .collect();
    let entries = DMatrix::from_fn(dim, dim, |r, col| cols[col][r]);
    Ok(TransferBlock { basis, entries, weights: (a, b, c) })
}

impl TransferBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// ‖V·Vᵀ − Vᵀ·V‖_∞.
    pub fn normality_defect(&self) -> f64 {
        let v = &self.entries;
        (v * v.transpose() - v.transpose() * v).amax()
    }

    /// ‖Vᵀ − PVP‖_∞ with P the column reversal x ↦ N+1−x.
    pub fn reversal_defect(&self) -> f64 {
        let d = self.dim();
        let p: Vec<usize> = (0..d).map(|i| self.basis.reversed_index(i)).collect();
        let v = &self.entries;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((v[(j, i)] - v[(p[i], p[j])]).abs());
            }
        }
        worst
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|&x| x >= 0.0)
    }

    /// Connectivity of the support graph of V.
    pub fn is_irreducible(&self) -> bool {
        let d = self.dim();
        let reach = |forward: bool| {
            let mut seen = vec![false; d];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..d {
                    let e = if forward { self.entries[(j, i)] } else { self.entries[(i, j)] };
                    if e > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

#[derive(Debug, Clone)]
pub struct PerronPair {
    pub value: f64,
    /// Unit 2-norm, strictly positive when the block is irreducible.
    pub vector: DVector<f64>,
    /// Λ_max − second largest real part of the spectrum.
    pub gap: f64,
    /// ‖Vu − Λu‖₂.
    pub residual: f64,
}

fn sign_fixed(mut u: DVector<f64>) -> DVector<f64> {
    if u.sum() < 0.0 {
        u.neg_mut();
    }
    let n = u.norm();
    u / n
}

/// Perron–Frobenius eigenpair of the block.
pub fn largest_eigenvalue(block: &TransferBlock) -> Result<PerronPair> {
    let v = &block.entries;
    let d = block.dim();
    if d == 1 {
        return Ok(PerronPair {
            value: v[(0, 0)],
            vector: DVector::from_element(1, 1.0),
            gap: f64::INFINITY,
            residual: 0.0,
        });
    }
    let (value, vector, gap) = if d < DENSE_EIGEN_LIMIT {
        // V is normal, so the symmetric part shares the top eigenvector
        let sym = (v + v.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let top = order[0];
        let u = sign_fixed(eig.eigenvectors.column(top).into_owned());
        (eig.eigenvalues[top], u, eig.eigenvalues[top] - eig.eigenvalues[order[1]])
    } else {
        let (lam, u) = power_iteration(v, 1e-13, 100_000)?;
        (lam, u, f64::NAN)
    };
    let residual = (v * &vector - &vector * value).norm();
    Ok(PerronPair { value, vector, gap, residual })
}

/// Shifted power iteration on V + I for a nonnegative irreducible V.
pub fn power_iteration(v: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> Result<(f64, DVector<f64>)> {
    let d = v.nrows();
    let mut u = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..max_iter {
        let w = v * &u + &u;
        let next = w.norm();
        let w = w / next;
        let change = (next - 1.0 - lam).abs();
        lam = next - 1.0;
        u = w;
        if change <= rel_tol * lam.abs() {
            let lam = u.dot(&(v * &u));
            return Ok((lam, sign_fixed(u)));
        }
    }
    Err(Error::Convergence(format!("power iteration did not reach {rel_tol:e} in {max_iter} steps")))
}

/// Sign-tracked permutations of 0..n (Heap's algorithm).
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    out.push((a.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            sign = -sign;
            out.push((a.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Coordinate Bethe vector on the basis, with the global phase removed.
pub fn bethe_vector(state: &BetheState) -> Result<(ArrowBasis, Vec<f64>)> {
    let n = state.n;
    if n > MAX_BETHE_VECTOR_ROOTS {
        return Err(Error::Size(format!("Bethe vector needs n <= {MAX_BETHE_VECTOR_ROOTS}, got {n}")));
    }
    if n > 1 && state.min_gap() < 1e-9 {
        return Err(Error::DegenerateRoots(state.min_gap()));
    }
    let basis = ArrowBasis::new(state.n_sites, n)?;
    let k = state.kernels();
    let nn = state.n_sites;
    let phases: Vec<Vec<Complex64>> = state
        .roots
        .iter()
        .map(|&l| {
            let p = k.momentum_p(l);
            (0..=nn).map(|x| Complex64::from_polar(1.0, p * x as f64)).collect()
        })
        .collect();
    let s: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|l| k.s_frak(state.roots[l] - state.roots[j])).collect())
        .collect();
    let perms = permutations(n);
    let amp: Vec<Complex64> = perms
        .iter()
        .map(|(sig, eps)| {
            let mut z = Complex64::new(*eps, 0.0);
            for kk in 0..n {
                for ll in kk + 1..n {
                    z *= s[sig[kk]][sig[ll]];
                }
            }
            z
        })
        .collect();
    let psi: Vec<Complex64> = (0..basis.len())
        .map(|i| {
            let x = basis.positions(i);
            perms
                .iter()
                .zip(&amp)
                .map(|((sig, _), &a)| {
                    x.iter().enumerate().fold(a, |z, (kk, &xk)| z * phases[sig[kk]][xk])
                })
                .sum()
        })
        .collect();
    let pivot = psi
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    if pivot.norm() == 0.0 {
        return Err(Error::DegenerateRoots(0.0));
    }
    let normed: Vec<Complex64> = psi.iter().map(|z| z / pivot).collect();
    let imag = normed.iter().fold(0.0, |m: f64, z| m.max(z.im.abs()));
    if imag > 1e-8 {
        return Err(Error::Convergence(format!("Bethe vector keeps an imaginary part {imag:e}")));
    }
    Ok((basis, normed.iter().map(|z| z.re).collect()))
}

#[derive(Debug, Clone)]
pub struct EigenCheck {
    pub lambda_bethe: f64,
    pub lambda_dense: f64,
    /// ‖Vψ − Λψ‖₂/‖ψ‖₂ with Λ from the Bethe eigenvalue.
    pub residual: f64,
    /// |⟨ψ, u⟩|/‖ψ‖ with u the unit Perron–Frobenius vector.
    pub overlap: f64,
    pub min_entry: f64,
}

/// Checks the Bethe vector and eigenvalue of `state` against the dense block.
pub fn verify_eigenrelation(block: &TransferBlock, state: &BetheState) -> Result<EigenCheck> {
    if block.basis.n_sites != state.n_sites || block.basis.n != state.n {
        return Err(Error::Size("block and Bethe state sizes differ".into()));
    }
    let (log_l, _) = free_energy::log_eigenvalue(state)?;
    let lambda = log_l.exp();
    let (_, psi) = bethe_vector(state)?;
    let psi = DVector::from_vec(psi);
    let pf = largest_eigenvalue(block)?;
    let norm = psi.norm();
    Ok(EigenCheck {
        lambda_bethe: lambda,
        lambda_dense: pf.value,
        residual: (&block.entries * &psi - &psi * lambda).norm() / norm,
        overlap: psi.dot(&pf.vector).abs() / norm,
        min_entry: psi.min(),
    })
}

/// Z(T_{N,M}) = Σ_n trace((V_N^(n))^M).
pub fn torus_partition_function(n_sites: usize, m_rows: usize, a: f64, b: f64, c: f64) -> Result<f64> {
    if n_sites < 2 || n_sites % 2 == 1 || n_sites > 10 || m_rows == 0 || m_rows > 10 {
        return Err(Error::Size(format!("torus needs even N <= 10 and 1 <= M <= 10, got {n_sites}x{m_rows}")));
    }
    let mut z = 0.0;
    for n in 0..=n_sites {
        let v = build_block(n_sites, n, a, b, c)?.entries;
        let mut p = v.clone();
        for _ in 1..m_rows {
            p = &p * &v;
        }
        z += p.trace();
    }
    Ok(z)
}
