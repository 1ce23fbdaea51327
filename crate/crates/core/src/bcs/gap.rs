//! Self-consistent BCS gap.
//!
//! The gap equation ρ_F g ∫_{-ω_D}^{ω_D} dE tanh(β√(E²+Δ²)/2) / (2√(E²+Δ²)) = 1
//! is rewritten with E = Δ sinh t, which turns the integrand into
//! tanh(βΔ cosh t / 2) on [0, asinh(ω_D/Δ)]. At zero temperature the
//! integrand is identically one.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::GaussLegendreRule;

/// Residual target for the returned gap.
pub const GAP_RESIDUAL_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;
const MAX_NEWTON: usize = 60;
const LOWER_BRACKET_RATIO: f64 = 1e-280;
const THERMAL_BRACKET_RATIO: f64 = 1e-8;

/// Inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    /// Zero temperature.
    Infinite,
    /// β = 1/(k_B T) in inverse energy units of the gap equation.
    Finite(f64),
}

impl Beta {
    fn thermal_factor(self, energy: f64) -> f64 {
        match self {
            Beta::Infinite => 1.0,
            Beta::Finite(beta) => (0.5 * beta * energy).tanh(),
        }
    }

    fn thermal_factor_slope(self, energy: f64) -> f64 {
        match self {
            Beta::Infinite => 0.0,
            Beta::Finite(beta) => {
                let c = (0.5 * beta * energy).cosh();
                0.5 * beta / (c * c)
            }
        }
    }
}

/// Material inputs of the gap equation: the dimensionless coupling ρ_F·g
/// and the Debye cutoff ω_D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEquation {
    pub coupling: f64,
    pub debye_energy: f64,
}

impl GapEquation {
    pub fn new(coupling: f64, debye_energy: f64) -> Result<Self> {
        ensure_finite("coupling", coupling)?;
        ensure_finite("debye_energy", debye_energy)?;
        if !(coupling > 0.0 && coupling < 1.0) {
            return Err(Error::domain(format!("rho_F g must lie in (0, 1), got {coupling}")));
        }
        if debye_energy <= 0.0 {
            return Err(Error::domain("Debye energy must be positive"));
        }
        Ok(Self { coupling, debye_energy })
    }

    /// Left-hand side minus one at trial gap `delta`.
    pub fn residual(&self, beta: Beta, delta: f64) -> Result<f64> {
        Ok(self.coupling * self.integral(beta, delta)? - 1.0)
    }

    /// ∫_{-ω_D}^{ω_D} dE tanh(βΩ/2)/(2Ω) = ∫_0^{asinh(ω_D/Δ)} tanh(βΔ cosh t/2) dt.
    fn integral(&self, beta: Beta, delta: f64) -> Result<f64> {
        let upper = (self.debye_energy / delta).asinh();
        match beta {
            Beta::Infinite => Ok(upper),
            Beta::Finite(_) => {
                let rule = GaussLegendreRule::new(12)?;
                rule.adaptive(0.0, upper, 1e-15 * upper, |t| {
                    beta.thermal_factor(delta * t.cosh())
                })
            }
        }
    }

    /// d(integral)/dΔ.
    fn integral_slope(&self, beta: Beta, delta: f64) -> Result<f64> {
        let omega_d = self.debye_energy.hypot(delta);
        let edge = -beta.thermal_factor(omega_d) * self.debye_energy / (delta * omega_d);
        let bulk = match beta {
            Beta::Infinite => 0.0,
            Beta::Finite(_) => {
                let upper = (self.debye_energy / delta).asinh();
                let rule = GaussLegendreRule::new(12)?;
                rule.adaptive(0.0, upper, 1e-15, |t| {
                    let c = t.cosh();
                    beta.thermal_factor_slope(delta * c) * c
                })?
            }
        };
        Ok(edge + bulk)
    }
}

/// Solve the gap equation: bracketed bisection in log Δ on (εω_D, ω_D),
/// then safeguarded Newton steps.
pub fn solve_gap(beta: Beta, equation: &GapEquation) -> Result<f64> {
    if let Beta::Finite(b) = beta {
        ensure_finite("beta", b)?;
        if b <= 0.0 {
            return Err(Error::domain("beta must be positive"));
        }
    }
    let omega = equation.debye_energy;
    // At finite temperature a gap far below k_B T changes the integral only
    // at O(Δ²β²), so the bracket need not reach down to ω_D·1e-280.
    let floor = match beta {
        Beta::Infinite => omega * LOWER_BRACKET_RATIO,
        Beta::Finite(b) => (omega * LOWER_BRACKET_RATIO).max(THERMAL_BRACKET_RATIO * omega.min(1.0 / b)),
    };
    let mut lo = floor;
    let mut hi = omega;

    if equation.residual(beta, lo)? <= 0.0 {
        return Err(Error::NoSolution(format!(
            "coupling {} too weak or temperature above T_c",
            equation.coupling
        )));
    }
    if equation.residual(beta, hi)? >= 0.0 {
        return Err(Error::NoSolution("residual does not change sign below the Debye energy".into()));
    }

    // Residual decreases monotonically in Δ.
    let mut iterations = 0;
    while hi / lo > 1.0 + 1e-6 {
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(Error::Convergence {
                what: "gap bisection".into(),
                iterations,
            });
        }
        let mid = (lo * hi).sqrt();
        if equation.residual(beta, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut delta = (lo * hi).sqrt();
    for _ in 0..MAX_NEWTON {
        let f = equation.residual(beta, delta)?;
        if f.abs() < 1e-15 {
            return Ok(delta);
        }
        if f > 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let slope = equation.coupling * equation.integral_slope(beta, delta)?;
        let mut next = delta - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - delta).abs() <= 4.0 * f64::EPSILON * delta {
            delta = next;
            break;
        }
        delta = next;
    }

    let f = equation.residual(beta, delta)?;
    if f.abs() < GAP_RESIDUAL_TOL {
        Ok(delta)
    } else {
        Err(Error::Convergence {
            what: format!("gap Newton refinement (residual {f:e})"),
            iterations: MAX_NEWTON,
        })
    }
}
