//! Tunnelling contribution to the branch occupation difference near the
//! Josephson junction.
//!
//! A momentum-conserving tunnelling element T between modes q_L and q_R on
//! the two sides changes their occupations by
//! δn = Δ²|T| / ((Ω_L + Ω_R)·Ω_L·Ω_R). Modes within a coherence length of
//! the barrier participate. Their number and |T| are not fixed by first
//! principles, so they come from a [`TunnelCalibration`] strategy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bcs::{quasiparticle_energy, Material, Mode};
use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::GaussLegendreRule;
use crate::sizecalc::Interval;

/// Default half-width of the participating energy window, in units of Δ.
pub const DEFAULT_JUNCTION_WINDOW: f64 = 10.0;

/// How the tunnelling parameters were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    Uncalibrated,
    /// Values supplied directly.
    Explicit,
    /// Derived from the normal-state resistance, see [`GoldenRuleCalibration`].
    GoldenRule { normal_resistance: f64, junction_area: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// |T_kk| in joule.
    pub t_amp: f64,
    /// Range of |T| reflecting calibration uncertainty; defaults to `t_amp`.
    pub t_amp_range: Option<[f64; 2]>,
    /// Number of modes within ξ₀ of the barrier and within the window.
    pub mode_count: f64,
    pub phase_difference: f64,
    /// Half-width of the participating energy window in units of Δ.
    pub window: f64,
    pub calibration: Calibration,
    pub calibration_note: String,
}

impl JunctionSpec {
    pub fn explicit(t_amp: f64, mode_count: f64, note: impl Into<String>) -> Result<Self> {
        let spec = Self {
            t_amp,
            t_amp_range: None,
            mode_count,
            phase_difference: 0.0,
            window: DEFAULT_JUNCTION_WINDOW,
            calibration: Calibration::Explicit,
            calibration_note: note.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("t_amp", self.t_amp)?;
        ensure_finite("mode_count", self.mode_count)?;
        ensure_finite("phase_difference", self.phase_difference)?;
        ensure_finite("window", self.window)?;
        if self.t_amp < 0.0 || self.mode_count < 0.0 {
            return Err(Error::domain("tunnelling amplitude and mode count must be nonnegative"));
        }
        if self.window <= 0.0 {
            return Err(Error::domain("junction energy window must be positive"));
        }
        if let Some([lo, hi]) = self.t_amp_range {
            ensure_finite("t_amp_range", lo)?;
            ensure_finite("t_amp_range", hi)?;
            if !(0.0 <= lo && lo <= self.t_amp && self.t_amp <= hi) {
                return Err(Error::domain("t_amp_range must bracket t_amp and be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn t_amp_interval(&self) -> Interval {
        match self.t_amp_range {
            Some([lo, hi]) => Interval { lo, hi },
            None => Interval::point(self.t_amp),
        }
    }

    /// Same spec with |T| (and its range) scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t_amp: self.t_amp * factor,
            t_amp_range: self.t_amp_range.map(|[lo, hi]| [lo * factor, hi * factor]),
            ..self.clone()
        }
    }
}

/// δn = Δ²|T|/((Ω_L + Ω_R)Ω_LΩ_R) for one cross-junction mode pair.
pub fn cross_junction_delta_n(q_left: &Mode, q_right: &Mode, junction: &JunctionSpec, material: &Material) -> Result<f64> {
    let left = quasiparticle_energy(q_left.wavevector.norm(), material)?;
    let right = quasiparticle_energy(q_right.wavevector.norm(), material)?;
    Ok(pair_delta_n(left.omega, right.omega, junction.t_amp, material.gap()))
}

fn pair_delta_n(omega_l: f64, omega_r: f64, t: f64, gap: f64) -> f64 {
    gap * gap * t.abs() / ((omega_l + omega_r) * (omega_l * omega_r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionTotal {
    /// ΔN_T at the calibrated |T|.
    pub point: f64,
    /// ΔN_T over the calibration range of |T|.
    pub range: Interval,
}

/// ΔN_T = N_J·⟨δn⟩, with ⟨δn⟩ averaged over participating modes spread
/// uniformly in E over ±WΔ. Momentum conservation puts both partners at the
/// same energy, so Ω_L = Ω_R.
pub fn junction_total(junction: &JunctionSpec, material: &Material) -> Result<JunctionTotal> {
    if junction.calibration == Calibration::Uncalibrated {
        return Err(Error::Configuration(
            "junction has no calibration for |T| and the participating mode count".into(),
        ));
    }
    junction.validate()?;
    let per_unit_t = mean_delta_n_per_unit_t(junction.window, material)?;
    let count = |t: f64| junction.mode_count * per_unit_t * t;
    Ok(JunctionTotal {
        point: count(junction.t_amp),
        range: junction.t_amp_interval().map(count),
    })
}

/// (1/2WΔ)∫_{−WΔ}^{WΔ} Δ²/(2Ω³) dE, the mean δn per unit |T|.
fn mean_delta_n_per_unit_t(window: f64, material: &Material) -> Result<f64> {
    let gap = material.gap();
    let rule = GaussLegendreRule::new(16)?;
    let panels = (4.0 * window).ceil() as usize;
    let integral = rule.composite(-window * gap, window * gap, panels, |e| {
        let omega = e.hypot(gap);
        pair_delta_n(omega, omega, 1.0, gap)
    });
    Ok(integral / (2.0 * window * gap))
}

/// Produces calibrated junction parameters for a material.
pub trait TunnelCalibration {
    fn calibrate(&self, material: &Material) -> Result<JunctionSpec>;
}

/// |T| and N_J from the normal-state tunnel resistance.
///
/// Transverse channels: N_ch = A·q_F²/(4π). Per-channel transmission from
/// the Landauer formula: D = h/(2e²·R_N·N_ch). Treating each channel as a
/// one-dimensional box of length ξ₀ = ℏv_F/Δ, whose level density is
/// 1/(πΔ), the golden rule gives D = 4(π|T|/(πΔ))², i.e. |T| = Δ·√D/2.
/// The participating modes are those within ξ₀ of the barrier and within
/// ±WΔ of the Fermi level: N_J = A·ξ₀·ρ_F·2WΔ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenRuleCalibration {
    pub normal_resistance: f64,
    pub junction_area: f64,
    pub window: f64,
    /// Relative uncertainty applied to |T| for the reported range.
    pub relative_spread: f64,
}

impl TunnelCalibration for GoldenRuleCalibration {
    fn calibrate(&self, material: &Material) -> Result<JunctionSpec> {
        for (label, v) in [("normal_resistance", self.normal_resistance), ("junction_area", self.junction_area)] {
            ensure_finite(label, v)?;
            if v <= 0.0 {
                return Err(Error::domain(format!("{label} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.relative_spread) {
            return Err(Error::domain("relative spread must lie in [0, 1)"));
        }
        let q_f = material.fermi_wavevector();
        let channels = self.junction_area * q_f * q_f / (4.0 * PI);
        let conductance_quantum = material.electron_charge() * material.electron_charge() / (PI * material.hbar());
        let transmission = 1.0 / (self.normal_resistance * conductance_quantum * channels);
        if transmission >= 1.0 {
            return Err(Error::domain(format!(
                "R_N too small for a tunnel barrier: per-channel transmission {transmission:.3}"
            )));
        }
        let t_amp = 0.5 * material.gap() * transmission.sqrt();
        let mode_count =
            self.junction_area * material.coherence_length() * material.dos_fermi() * 2.0 * self.window * material.gap();
        let spec = JunctionSpec {
            t_amp,
            t_amp_range: Some([t_amp * (1.0 - self.relative_spread), t_amp * (1.0 + self.relative_spread)]),
            mode_count,
            phase_difference: 0.0,
            window: self.window,
            calibration: Calibration::GoldenRule {
                normal_resistance: self.normal_resistance,
                junction_area: self.junction_area,
            },
            calibration_note: format!(
                "golden rule: N_ch = {channels:.4e}, D = {transmission:.4e}, |T| = {:.4e} Δ",
                t_amp / material.gap()
            ),
        };
        spec.validate()?;
        Ok(spec)
    }
}
