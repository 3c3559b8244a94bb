//! Vertex weights, the anisotropy Δ and the auxiliary parameters (r, ζ, θ).
//!
//! For |Δ|<1 the weights are a = r sin((1−θ/π)ζ)/sin(ζ/2), b = r sin(θζ/π)/sin(ζ/2),
//! c = 2r cos(ζ/2) with Δ = −cos ζ. For Δ<−1 the same holds with sinh/cosh and
//! Δ = −cosh ζ. At Δ = −1 the weights are linear in θ: a = 2r(π−θ)/π, b = 2rθ/π, c = 2r.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance from −1 inside which Δ is routed to the isotropic kernels.
pub const ISOTROPIC_BAND: f64 = 1e-9;
/// |Δ| below this is tagged as the free-fermion point.
pub const FREE_FERMION_BAND: f64 = 1e-12;
/// Absolute bisection tolerance for θ.
pub const THETA_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// −1 < Δ < 1, Δ ≠ 0.
    Disordered,
    /// Δ = 0, a sub-case of the disordered regime.
    FreeFermionLike,
    /// Δ = −1.
    Isotropic,
    /// Δ < −1.
    Antiferroelectric,
    /// The formal limit Δ → −∞.
    MinusInfinity,
}

impl Regime {
    /// Disordered in the wide sense, i.e. |Δ|<1 including Δ=0.
    pub fn is_disordered(self) -> bool {
        matches!(self, Regime::Disordered | Regime::FreeFermionLike)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Disordered => "disordered",
            Regime::FreeFermionLike => "free-fermion",
            Regime::Isotropic => "isotropic",
            Regime::Antiferroelectric => "antiferroelectric",
            Regime::MinusInfinity => "minus-infinity",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    /// arccos(−Δ) or arccosh(−Δ); zero at Δ=−1 and +∞ in the formal Δ=−∞ limit.
    pub zeta: f64,
    pub theta: f64,
    pub r: f64,
    pub regime: Regime,
}

/// Tag for a given anisotropy, rejecting the ferroelectric side Δ ≥ 1.
pub fn regime_of(delta: f64) -> Result<Regime> {
    if !delta.is_finite() {
        if delta == f64::NEG_INFINITY {
            return Ok(Regime::MinusInfinity);
        }
        return Err(Error::Domain(format!("Delta = {delta} is not a number")));
    }
    if delta >= 1.0 {
        return Err(Error::Domain(format!(
            "Delta = {delta} >= 1 lies in the ferroelectric regime"
        )));
    }
    Ok(if (delta + 1.0).abs() <= ISOTROPIC_BAND {
        Regime::Isotropic
    } else if delta < -1.0 {
        Regime::Antiferroelectric
    } else if delta.abs() <= FREE_FERMION_BAND {
        Regime::FreeFermionLike
    } else {
        Regime::Disordered
    })
}

fn check_weights(a: f64, b: f64, c: f64) -> Result<()> {
    for (name, w) in [("a", a), ("b", b), ("c", c)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("weight {name} = {w} must be positive")));
        }
    }
    Ok(())
}

/// Δ = (a²+b²−c²)/(2ab) and its regime.
pub fn classify(a: f64, b: f64, c: f64) -> Result<(f64, Regime)> {
    check_weights(a, b, c)?;
    let delta = (a * a + b * b - c * c) / (2.0 * a * b);
    Ok((delta, regime_of(delta)?))
}

/// Monotone bisection for θ in (0, π) on g(θ) = target, g increasing.
fn bisect_theta(g: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < THETA_TOL {
            return Ok(mid);
        }
        let v = g(mid);
        if !v.is_finite() && v.is_nan() {
            return Err(Error::Convergence(format!("theta bisection hit NaN at {mid}")));
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence("theta bisection did not reach tolerance".into()))
}

/// Auxiliary parameterisation of positive weights with Δ<1.
pub fn to_aux(a: f64, b: f64, c: f64) -> Result<ModelParams> {
    let (delta, regime) = classify(a, b, c)?;
    let log_ratio = (b / a).ln();
    let (zeta, theta, r) = match regime {
        Regime::Disordered | Regime::FreeFermionLike => {
            let zeta = (-delta).acos();
            let theta = if a == b {
                PI / 2.0
            } else {
                // ln sin(u) − ln sin(ζ−u) is strictly increasing in u = θζ/π.
                bisect_theta(
                    |t| {
                        let u = t * zeta / PI;
                        u.sin().ln() - (zeta - u).sin().ln()
                    },
                    log_ratio,
                )?
            };
            (zeta, theta, c / (2.0 * (zeta / 2.0).cos()))
        }
        Regime::Antiferroelectric => {
            let zeta = (-delta).acosh();
            let theta = if a == b {
                PI / 2.0
            } else {
                bisect_theta(
                    |t| {
                        let u = t * zeta / PI;
                        u.sinh().ln() - (zeta - u).sinh().ln()
                    },
                    log_ratio,
                )?
            };
            (zeta, theta, c / (2.0 * (zeta / 2.0).cosh()))
        }
        Regime::Isotropic => (0.0, PI * b / (a + b), 0.5 * (a + b)),
        Regime::MinusInfinity => unreachable!("finite weights have finite Delta"),
    };
    Ok(ModelParams {
        a,
        b,
        c,
        delta,
        zeta,
        theta,
        r,
        regime,
    })
}

/// Forward evaluation of the weights from (r, ζ, θ) in the given regime.
pub fn from_aux(r: f64, zeta: f64, theta: f64, regime: Regime) -> Result<ModelParams> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, pi)")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    let (a, b, c, delta) = match regime {
        Regime::Disordered | Regime::FreeFermionLike => {
            if !(zeta > 0.0 && zeta < PI) {
                return Err(Error::Domain(format!("zeta = {zeta} outside (0, pi)")));
            }
            let s = (zeta / 2.0).sin();
            (
                r * ((1.0 - theta / PI) * zeta).sin() / s,
                r * (theta * zeta / PI).sin() / s,
                2.0 * r * (zeta / 2.0).cos(),
                -zeta.cos(),
            )
        }
        Regime::Antiferroelectric => {
            if !(zeta > 0.0 && zeta.is_finite()) {
                return Err(Error::Domain(format!("zeta = {zeta} must be positive")));
            }
            let s = (zeta / 2.0).sinh();
            (
                r * ((1.0 - theta / PI) * zeta).sinh() / s,
                r * (theta * zeta / PI).sinh() / s,
                2.0 * r * (zeta / 2.0).cosh(),
                -zeta.cosh(),
            )
        }
        Regime::Isotropic => (
            2.0 * r * (PI - theta) / PI,
            2.0 * r * theta / PI,
            2.0 * r,
            -1.0,
        ),
        Regime::MinusInfinity => {
            return Err(Error::Domain(
                "the Delta = -infinity limit has no finite weights".into(),
            ))
        }
    };
    let zeta = if regime == Regime::Isotropic { 0.0 } else { zeta };
    let regime = match regime {
        Regime::Disordered | Regime::FreeFermionLike => {
            if delta.abs() <= FREE_FERMION_BAND {
                Regime::FreeFermionLike
            } else {
                Regime::Disordered
            }
        }
        other => other,
    };
    Ok(ModelParams {
        a,
        b,
        c,
        delta,
        zeta,
        theta,
        r,
        regime,
    })
}

impl ModelParams {
    /// Weights (a, b, c).
    pub fn weights(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    /// Formal Δ = −∞ limit; only the kernels and the discrete roots are meaningful.
    pub fn minus_infinity() -> Self {
        ModelParams {
            a: f64::NAN,
            b: f64::NAN,
            c: f64::NAN,
            delta: f64::NEG_INFINITY,
            zeta: f64::INFINITY,
            theta: PI / 2.0,
            r: f64::NAN,
            regime: Regime::MinusInfinity,
        }
    }

    /// Weights with a and b exchanged (θ ↦ π−θ).
    pub fn swapped(&self) -> Self {
        ModelParams {
            a: self.b,
            b: self.a,
            theta: PI - self.theta,
            ..*self
        }
    }

    /// Same r and θ at a different anisotropy.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let regime = regime_of(delta)?;
        let zeta = match regime {
            Regime::Disordered | Regime::FreeFermionLike => (-delta).acos(),
            Regime::Antiferroelectric => (-delta).acosh(),
            Regime::Isotropic => 0.0,
            Regime::MinusInfinity => return Ok(Self::minus_infinity()),
        };
        let r = if self.r.is_finite() { self.r } else { 1.0 };
        from_aux(r, zeta, self.theta, regime)
    }

    /// Parameters at a=b=r, i.e. θ=π/2, for the given anisotropy.
    pub fn symmetric(delta: f64) -> Result<Self> {
        let regime = regime_of(delta)?;
        if regime == Regime::MinusInfinity {
            return Ok(Self::minus_infinity());
        }
        let template = ModelParams {
            r: 1.0,
            theta: PI / 2.0,
            ..Self::minus_infinity()
        };
        template.with_delta(delta)
    }

    /// θ = π/2 up to the snapping tolerance used by the eigenvalue formula.
    pub fn is_symmetric_point(&self) -> bool {
        (self.theta - PI / 2.0).abs() < 1e-10
    }
}
