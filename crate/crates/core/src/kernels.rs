//! Regime-dependent special functions of the Bethe ansatz.
//!
//! Bare momentum 𝔭, scattering phase ϑ, their derivatives ξ = 𝔭′/2π and
//! K = ϑ′/2π, the closed density ρ, the eigenvalue amplitudes L, M with
//! C = log|L|, and Fourier data. For |Δ|≤1 transforms use F̂(t) = ∫ e^{−itx} F(x) dx;
//! for Δ<−1 all functions are π-periodic and F̂(n) = ∫_{−π/2}^{π/2} e^{−2inx} F(x) dx.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model_params::{ModelParams, Regime};

/// Which function a Fourier transform refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hat {
    K,
    Xi,
    Rho,
    C,
    /// Resolvent R̂ = K̂/(1+K̂).
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    /// |Δ|<1: hyperbolic in λ.
    Trig,
    /// Δ=−1: rational.
    Rational,
    /// Δ<−1: trigonometric in λ, π-periodic.
    Periodic,
    /// Formal Δ=−∞.
    Flat,
}

/// Immutable evaluator for all kernels at fixed parameters.
#[derive(Debug, Clone, Copy)]
pub struct KernelSet {
    pub params: ModelParams,
    shape: Shape,
    zeta: f64,
    /// Slope constant of 𝔭: cot(ζ/2), 2 or coth(ζ/2).
    p_const: f64,
    /// Slope constant of ϑ: cot ζ, 1 or coth ζ.
    t_const: f64,
    /// Imaginary shifts in L and M: L(λ) = −sh(λ−iα−iβ)/sh(λ+iα−iβ).
    alpha: f64,
    beta: f64,
}

/// 1/cosh(x) without overflow.
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// sinh(u)·sinh(v)/sinh(w) for u, v ≥ 0 and w > 0 without overflow.
fn sinh_sinh_over_sinh(u: f64, v: f64, w: f64) -> f64 {
    0.5 * (u + v - w).exp() * (-(-2.0 * u).exp_m1()) * (-(-2.0 * v).exp_m1())
        / (-(-2.0 * w).exp_m1())
}

/// sinh(a·t)/sinh(b·t), b > 0, even in t, continuous at t = 0.
fn sinh_ratio(a: f64, b: f64, t: f64) -> f64 {
    let t = t.abs();
    if t < 1e-12 {
        return a / b;
    }
    let sa = a.signum();
    let a = a.abs();
    sa * ((a - b) * t).exp() * (-(-2.0 * a * t).exp_m1()) / (-(-2.0 * b * t).exp_m1())
}

impl KernelSet {
    pub fn new(params: &ModelParams) -> Self {
        let zeta = params.zeta;
        let (shape, p_const, t_const, alpha, beta) = match params.regime {
            Regime::Disordered | Regime::FreeFermionLike => {
                let t_const = if params.regime == Regime::FreeFermionLike {
                    0.0
                } else {
                    zeta.cos() / zeta.sin()
                };
                (
                    Shape::Trig,
                    1.0 / (zeta / 2.0).tan(),
                    t_const,
                    zeta / 2.0,
                    params.theta * zeta / PI,
                )
            }
            Regime::Isotropic => (Shape::Rational, 2.0, 1.0, 0.5, params.theta / PI),
            Regime::Antiferroelectric => (
                Shape::Periodic,
                1.0 / (zeta / 2.0).tanh(),
                1.0 / zeta.tanh(),
                zeta / 2.0,
                params.theta * zeta / PI,
            ),
            Regime::MinusInfinity => (Shape::Flat, 0.0, 0.0, f64::NAN, f64::NAN),
        };
        KernelSet {
            params: *params,
            shape,
            zeta,
            p_const,
            t_const,
            alpha,
            beta,
        }
    }

    pub fn regime(&self) -> Regime {
        self.params.regime
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Period of the kernels in λ, if any.
    pub fn period(&self) -> Option<f64> {
        (self.shape == Shape::Periodic).then_some(PI)
    }

    /// Supremum of 𝔭 on ℝ (+∞ for Δ<−1).
    pub fn p_sup(&self) -> f64 {
        match self.shape {
            Shape::Trig => PI - self.zeta,
            Shape::Rational => PI,
            Shape::Periodic | Shape::Flat => f64::INFINITY,
        }
    }

    /// lim_{x→+∞} ϑ(x) (+∞ for Δ<−1).
    pub fn theta_sup(&self) -> f64 {
        match self.shape {
            Shape::Trig => 2.0 * self.t_const.atan(),
            Shape::Rational => PI,
            Shape::Periodic | Shape::Flat => f64::INFINITY,
        }
    }

    /// Width of the strip of analyticity of K around the real axis.
    pub fn analytic_width(&self) -> f64 {
        match self.shape {
            Shape::Trig => self.zeta.min(PI - self.zeta),
            Shape::Rational => 1.0,
            Shape::Periodic => self.zeta,
            Shape::Flat => f64::INFINITY,
        }
    }

    /// 2πk + 2·atan(c·tan(x − kπ)) with k = round(x/π).
    fn unwrapped_atan_tan(c: f64, x: f64) -> f64 {
        let k = (x / PI).round();
        let y = x - k * PI;
        2.0 * PI * k + 2.0 * (c * y.tan()).atan()
    }

    /// Bare momentum 𝔭(x); odd and strictly increasing.
    pub fn momentum_p(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Trig => 2.0 * (self.p_const * x.tanh()).atan(),
            Shape::Rational => 2.0 * (2.0 * x).atan(),
            Shape::Periodic => Self::unwrapped_atan_tan(self.p_const, x),
            Shape::Flat => 2.0 * x,
        }
    }

    /// Scattering phase ϑ(x); odd.
    pub fn scattering_theta(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Trig => 2.0 * (self.t_const * x.tanh()).atan(),
            Shape::Rational => 2.0 * x.atan(),
            Shape::Periodic => Self::unwrapped_atan_tan(self.t_const, x),
            Shape::Flat => 2.0 * x,
        }
    }

    /// K = ϑ′/(2π).
    pub fn kernel_k(&self, x: f64) -> f64 {
        let z = self.zeta;
        match self.shape {
            Shape::Trig => {
                if self.params.regime == Regime::FreeFermionLike {
                    return 0.0;
                }
                (2.0 * z).sin() / (PI * ((2.0 * x).cosh() - (2.0 * z).cos()))
            }
            Shape::Rational => 1.0 / (PI * (1.0 + x * x)),
            Shape::Periodic => {
                let e = (-2.0 * z).exp();
                (1.0 - e * e) / (PI * (1.0 + e * e - 2.0 * e * (2.0 * x).cos()))
            }
            Shape::Flat => 1.0 / PI,
        }
    }

    /// K′(x).
    pub fn kernel_k_prime(&self, x: f64) -> f64 {
        let z = self.zeta;
        let k = self.kernel_k(x);
        if k == 0.0 {
            return 0.0;
        }
        match self.shape {
            Shape::Trig => {
                let ratio = if x.abs() > 20.0 {
                    x.signum()
                } else {
                    (2.0 * x).sinh() / ((2.0 * x).cosh() - (2.0 * z).cos())
                };
                -2.0 * k * ratio
            }
            Shape::Rational => -2.0 * x / (PI * (1.0 + x * x).powi(2)),
            Shape::Periodic => {
                let e = (-2.0 * z).exp();
                -2.0 * k * (2.0 * x).sin() * 2.0 * e / (1.0 + e * e - 2.0 * e * (2.0 * x).cos())
            }
            Shape::Flat => 0.0,
        }
    }

    /// ξ = 𝔭′/(2π).
    pub fn bare_xi(&self, x: f64) -> f64 {
        let z = self.zeta;
        match self.shape {
            Shape::Trig => z.sin() / (PI * ((2.0 * x).cosh() - z.cos())),
            Shape::Rational => 2.0 / (PI * (1.0 + 4.0 * x * x)),
            Shape::Periodic => {
                let e = (-z).exp();
                (1.0 - e * e) / (PI * (1.0 + e * e - 2.0 * e * (2.0 * x).cos()))
            }
            Shape::Flat => 1.0 / PI,
        }
    }

    /// Closed-form density ρ = ρ(·|Q(1/2)).
    pub fn closed_density_rho(&self, x: f64) -> f64 {
        let z = self.zeta;
        match self.shape {
            Shape::Trig => sech(PI * x / z) / (2.0 * z),
            Shape::Rational => 0.5 * sech(PI * x),
            Shape::Periodic => {
                let y = x - PI * (x / PI).round();
                if z < PI {
                    // Σ_n sech(π(πn − y)/ζ)/(2ζ), terms decay like e^{−π²|n|/ζ}.
                    let mut s = sech(PI * y / z);
                    for n in 1..100_000 {
                        let t = sech(PI * (PI * n as f64 - y) / z)
                            + sech(PI * (PI * n as f64 + y) / z);
                        s += t;
                        if t < 1e-17 * s {
                            break;
                        }
                    }
                    s / (2.0 * z)
                } else {
                    let mut s = 1.0;
                    for n in 1..100_000 {
                        let w = sech(n as f64 * z);
                        s += 2.0 * (2.0 * n as f64 * y).cos() * w;
                        if w < 1e-17 {
                            break;
                        }
                    }
                    s / (2.0 * PI)
                }
            }
            Shape::Flat => 1.0 / (2.0 * PI),
        }
    }

    /// ∫₀^x ρ for the closed density.
    pub fn closed_density_cumulative(&self, x: f64) -> f64 {
        let z = self.zeta;
        match self.shape {
            // ∫ sech = gd, gd(u) = atan(sinh u).
            Shape::Trig => (PI * x / z).sinh().atan() / (2.0 * PI),
            Shape::Rational => (PI * x).sinh().atan() / (2.0 * PI),
            Shape::Periodic => {
                let mut s = x;
                for n in 1..100_000 {
                    let w = sech(n as f64 * z) / n as f64;
                    s += (2.0 * n as f64 * x).sin() * w;
                    if w < 1e-17 {
                        break;
                    }
                }
                s / (2.0 * PI)
            }
            Shape::Flat => x / (2.0 * PI),
        }
    }

    /// The function sh entering L, M and the Bethe vector's 𝔰.
    pub fn sh(&self, z: Complex64) -> Complex64 {
        match self.shape {
            Shape::Trig => z.sinh(),
            Shape::Rational => z,
            Shape::Periodic => z.sin(),
            Shape::Flat => z,
        }
    }

    /// Derivative of [`Self::sh`].
    pub fn sh_prime(&self, z: Complex64) -> Complex64 {
        match self.shape {
            Shape::Trig => z.cosh(),
            Shape::Rational | Shape::Flat => Complex64::new(1.0, 0.0),
            Shape::Periodic => z.cos(),
        }
    }

    /// sh′/sh.
    pub fn sh_log_derivative(&self, z: Complex64) -> Complex64 {
        self.sh_prime(z) / self.sh(z)
    }

    /// Shifts (α, β) with L(λ) = −sh(λ−iα−iβ)/sh(λ+iα−iβ).
    pub fn amplitude_shifts(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    /// d/ds of (log a − log b) per lattice column at θ=π/2, where s is the
    /// shift of β away from α.
    pub fn weight_log_derivative_at_symmetric_point(&self) -> f64 {
        match self.shape {
            Shape::Trig => -2.0 / (self.zeta / 2.0).tan(),
            Shape::Rational => -4.0,
            Shape::Periodic => -2.0 / (self.zeta / 2.0).tanh(),
            Shape::Flat => f64::NAN,
        }
    }

    fn require_amplitudes(&self) -> Result<()> {
        if self.shape == Shape::Flat {
            return Err(Error::Domain(
                "eigenvalue amplitudes are undefined in the Delta = -infinity limit".into(),
            ));
        }
        Ok(())
    }

    fn denominator(&self, lambda: f64) -> Result<Complex64> {
        self.require_amplitudes()?;
        let d = self.sh(Complex64::new(lambda, self.alpha - self.beta));
        if d.norm() < 1e-14 {
            return Err(Error::Pole(lambda));
        }
        Ok(d)
    }

    pub fn amplitude_l(&self, lambda: f64) -> Result<Complex64> {
        let d = self.denominator(lambda)?;
        Ok(-self.sh(Complex64::new(lambda, -self.alpha - self.beta)) / d)
    }

    pub fn amplitude_m(&self, lambda: f64) -> Result<Complex64> {
        let d = self.denominator(lambda)?;
        Ok(-self.sh(Complex64::new(lambda, 3.0 * self.alpha - self.beta)) / d)
    }

    /// |sh(x+iy)|² minus its y-independent part, i.e. u(x) + v(y).
    fn sh_abs2_parts(&self, x: f64, y: f64) -> (f64, f64) {
        match self.shape {
            Shape::Trig => (x.sinh().powi(2), y.sin().powi(2)),
            Shape::Rational | Shape::Flat => (x * x, y * y),
            Shape::Periodic => (x.sin().powi(2), y.sinh().powi(2)),
        }
    }

    /// ½·log of |sh(x+i·y_num)|²/|sh(x+i·y_den)|² in a cancellation-free form.
    fn log_abs_ratio(&self, x: f64, y_num: f64, y_den: f64) -> Result<f64> {
        let (u, p) = self.sh_abs2_parts(x, y_num);
        let (_, q) = self.sh_abs2_parts(x, y_den);
        if u.is_infinite() {
            return Ok(0.0);
        }
        let den = u + q;
        if den < 1e-28 {
            return Err(Error::Pole(x));
        }
        Ok(0.5 * ((p - q) / den).ln_1p())
    }

    /// C(λ) = log|L(λ)|, even in λ.
    pub fn log_abs_c(&self, lambda: f64) -> Result<f64> {
        self.require_amplitudes()?;
        self.log_abs_ratio(lambda, -self.alpha - self.beta, self.alpha - self.beta)
    }

    /// log|M(λ)|.
    pub fn log_abs_m(&self, lambda: f64) -> Result<f64> {
        self.require_amplitudes()?;
        self.log_abs_ratio(lambda, 3.0 * self.alpha - self.beta, self.alpha - self.beta)
    }

    /// Bethe-vector factor 𝔰(x): sinh(iζ+x), i+x, sin(iζ+x); e^{−ix} at Δ=−∞.
    pub fn s_frak(&self, x: f64) -> Complex64 {
        match self.shape {
            Shape::Trig => Complex64::new(x, self.zeta).sinh(),
            Shape::Rational => Complex64::new(x, 1.0),
            Shape::Periodic => Complex64::new(x, self.zeta).sin(),
            Shape::Flat => Complex64::new(0.0, -x).exp(),
        }
    }

    /// Fourier transform (|Δ|≤1, real t) or coefficient (Δ<−1, integer t).
    pub fn fourier_hat(&self, which: Hat, t: f64) -> Result<f64> {
        let z = self.zeta;
        match self.shape {
            Shape::Trig => Ok(match which {
                Hat::K => sinh_ratio((PI - 2.0 * z) / 2.0, PI / 2.0, t),
                Hat::Xi => sinh_ratio((PI - z) / 2.0, PI / 2.0, t),
                Hat::Rho => 0.5 * sech(z * t / 2.0),
                // K̂/(1+K̂) written without the cancellation in 1+K̂ near ζ=π
                Hat::R => {
                    0.5 * sinh_ratio((PI - 2.0 * z) / 2.0, (PI - z) / 2.0, t) * sech(z * t / 2.0)
                }
                Hat::C => self.c_hat_trig(t)?,
            }),
            Shape::Rational => {
                let at = t.abs();
                Ok(match which {
                    Hat::K => (-at).exp(),
                    Hat::Xi => (-at / 2.0).exp(),
                    Hat::Rho => 0.5 * sech(t / 2.0),
                    Hat::R => {
                        let e = (-at).exp();
                        e / (1.0 + e)
                    }
                    Hat::C => {
                        let big = self.alpha + self.beta;
                        let small = (self.beta - self.alpha).abs();
                        if at < 1e-12 {
                            PI * (big - small)
                        } else {
                            PI * (-small * at).exp() * (-(-(big - small) * at).exp_m1()) / at
                        }
                    }
                })
            }
            Shape::Periodic => {
                if t.fract() != 0.0 {
                    return Err(Error::Range(format!(
                        "Fourier coefficients for Delta < -1 need an integer index, got {t}"
                    )));
                }
                let n = t.abs();
                Ok(match which {
                    Hat::K => (-2.0 * n * z).exp(),
                    Hat::Xi => (-n * z).exp(),
                    Hat::Rho => 0.5 * sech(n * z),
                    Hat::R => {
                        let e = (-2.0 * n * z).exp();
                        e / (1.0 + e)
                    }
                    Hat::C => {
                        let big = self.alpha + self.beta;
                        let small = (self.beta - self.alpha).abs();
                        if n == 0.0 {
                            PI * (big - small)
                        } else {
                            PI / (2.0 * n)
                                * (-2.0 * n * small).exp()
                                * (-(-2.0 * n * (big - small)).exp_m1())
                        }
                    }
                })
            }
            Shape::Flat => Err(Error::Domain(
                "Fourier data is not provided in the Delta = -infinity limit".into(),
            )),
        }
    }

    fn c_hat_trig(&self, t: f64) -> Result<f64> {
        let big = self.alpha + self.beta;
        let small = (self.beta - self.alpha).abs();
        let p = PI - small - big;
        let q = big - small;
        if p < 0.0 {
            return Err(Error::Range(format!(
                "closed form of C-hat needs theta*zeta/pi + zeta/2 + |shift| <= pi (theta = {})",
                self.params.theta
            )));
        }
        let at = t.abs();
        if at < 1e-12 {
            return Ok(2.0 * PI * (p / 2.0) * (q / 2.0) / (PI / 2.0));
        }
        Ok(2.0 * PI / at * sinh_sinh_over_sinh(p * at / 2.0, q * at / 2.0, PI * at / 2.0))
    }

    /// Inverse of 𝔭 with |𝔭(x) − y| < 1e−13.
    pub fn p_inverse(&self, y: f64) -> Result<f64> {
        let sup = self.p_sup();
        if !(y.abs() < sup) {
            return Err(Error::Range(format!(
                "{y} is outside the range (-{sup}, {sup}) of the bare momentum"
            )));
        }
        let x0 = match self.shape {
            Shape::Trig => ((y / 2.0).tan() / self.p_const).atanh(),
            Shape::Rational => (y / 2.0).tan() / 2.0,
            Shape::Periodic => {
                let k = (y / (2.0 * PI)).round();
                let w = y - 2.0 * PI * k;
                k * PI + ((w / 2.0).tan() / self.p_const).atan()
            }
            Shape::Flat => y / 2.0,
        };
        if x0.is_finite() && (self.momentum_p(x0) - y).abs() < 1e-13 {
            return Ok(x0);
        }
        self.p_inverse_bisect(y, x0)
    }

    fn p_inverse_bisect(&self, y: f64, guess: f64) -> Result<f64> {
        let g = if guess.is_finite() { guess } else { y.signum() * 40.0 };
        let mut step = 1e-6_f64.max(1e-6 * g.abs());
        let (mut lo, mut hi) = (g - step, g + step);
        let mut grow = 0;
        while self.momentum_p(lo) > y || self.momentum_p(hi) < y {
            step *= 2.0;
            if self.momentum_p(lo) > y {
                lo -= step;
            }
            if self.momentum_p(hi) < y {
                hi += step;
            }
            grow += 1;
            if grow > 200 {
                return Err(Error::Convergence(format!("could not bracket p^-1({y})")));
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..300 {
            mid = 0.5 * (lo + hi);
            let v = self.momentum_p(mid);
            if (v - y).abs() < 1e-13 || hi - lo < 1e-15 * (1.0 + mid.abs()) {
                return Ok(mid);
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }
}
