//! From per-mode occupation differences to device-level counts.
//!
//! Summing |δn_q| over a Fermi shell and eliminating the unknown mode
//! density with the current density gives the local count
//! δn(r) = 3|δj(r)|/(4|e|v_F), and integrating along the loop
//! ΔN_tot = 3·L·δI_p/(4|e|v_F). The Fermi-shell kernels K1, K2 are kept
//! only as quadrature checks of that elimination.

use serde::{Deserialize, Serialize};

use crate::bcs::{Material, Vec3};
use crate::constants::BOHR_MAGNETON;
use crate::error::{ensure_finite, Error, Result};
use crate::junction::JunctionSpec;
use crate::quadrature::GaussLegendreRule;

/// Closed interval; `lo == hi` for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(value: f64) -> Self {
        Self { lo: value, hi: value }
    }

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure_finite("interval bound", lo)?;
        ensure_finite("interval bound", hi)?;
        if lo > hi {
            return Err(Error::domain(format!("interval [{lo}, {hi}] is reversed")));
        }
        Ok(Self { lo, hi })
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (a, b) = (f(self.lo), f(self.hi));
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

/// A superconducting loop and its measured persistent-current difference.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub name: String,
    pub material: Material,
    /// Loop length L (m).
    pub loop_length: f64,
    /// Enclosed area A (m²).
    pub enclosed_area: f64,
    /// δI_p (A), either a value or a measured range.
    pub current_difference: Interval,
    pub junction: Option<JunctionSpec>,
    /// Total number of modes N in the device, if known.
    pub total_modes: Option<f64>,
}

impl DeviceSpec {
    pub fn new(
        name: impl Into<String>,
        material: Material,
        loop_length: f64,
        enclosed_area: f64,
        current_difference: Interval,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            material,
            loop_length,
            enclosed_area,
            current_difference,
            junction: None,
            total_modes: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_junction(mut self, junction: JunctionSpec) -> Self {
        self.junction = Some(junction);
        self
    }

    pub fn with_total_modes(mut self, total: f64) -> Result<Self> {
        ensure_finite("total_modes", total)?;
        if total < 1.0 {
            return Err(Error::domain("total mode count must be at least 1"));
        }
        self.total_modes = Some(total);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [("loop_length", self.loop_length), ("enclosed_area", self.enclosed_area)] {
            ensure_finite(label, v)?;
            if v <= 0.0 {
                return Err(Error::domain(format!("{label} must be positive, got {v}")));
            }
        }
        if self.current_difference.lo < 0.0 {
            return Err(Error::domain("persistent current difference must be nonnegative"));
        }
        Ok(())
    }

    /// Warning text when A exceeds the isoperimetric bound L²/(4π).
    pub fn area_warning(&self) -> Option<String> {
        let bound = self.loop_length.powi(2) / (4.0 * std::f64::consts::PI);
        (self.enclosed_area > bound).then(|| {
            format!(
                "enclosed area {:.4e} m² exceeds the planar-loop bound L²/4π = {:.4e} m²",
                self.enclosed_area, bound
            )
        })
    }
}

/// ρ_F·2m²μ/ℏ³.
pub fn kernel_k1_closed_form(material: &Material) -> f64 {
    let m = material.electron_mass();
    material.dos_fermi() * 2.0 * m * m * material.chemical_potential() / material.hbar().powi(3)
}

/// (ℏq_F/m)·K1.
pub fn kernel_k2_closed_form(material: &Material) -> f64 {
    material.hbar() * material.fermi_wavevector() / material.electron_mass() * kernel_k1_closed_form(material)
}

/// ∫dq Δ²/(2Ω(q)³) with Ω linearised about q_F, over the whole line.
fn shell_q_integral(material: &Material) -> Result<f64> {
    let speed = material.hbar() * material.fermi_velocity();
    let gap = material.gap();
    // integrate in the offset q − q_F so nodes near the Fermi surface keep full precision
    converged_real_line(0.0, gap / speed, |offset| {
        let e = speed * offset;
        0.5 * gap * gap / e.hypot(gap).powi(3)
    })
}

/// K1 = ρ_F·ℏ·q_F³·∫dq Δ²/(2Ω³), by quadrature.
pub fn kernel_k1(material: &Material) -> Result<f64> {
    let q_f = material.fermi_wavevector();
    Ok(material.dos_fermi() * material.hbar() * q_f.powi(3) * shell_q_integral(material)?)
}

/// K2 = ρ_F·(ℏ²/m)·q_F⁴·∫dq Δ²/(2Ω³), by quadrature.
pub fn kernel_k2(material: &Material) -> Result<f64> {
    let q_f = material.fermi_wavevector();
    let hbar = material.hbar();
    Ok(material.dos_fermi() * hbar * hbar / material.electron_mass() * q_f.powi(4) * shell_q_integral(material)?)
}

/// ∫_{−∞}^{∞} dE Δ²/(2(E²+Δ²)^{3/2}), which is 1 for every Δ > 0.
pub fn gap_shell_integral(gap: f64) -> Result<f64> {
    ensure_finite("gap", gap)?;
    if gap <= 0.0 {
        return Err(Error::domain("gap must be positive"));
    }
    converged_real_line(0.0, gap, |e| 0.5 * gap * gap / e.hypot(gap).powi(3))
}

/// Same integral restricted to |E| ≤ W·Δ: W/√(W²+1).
pub fn gap_shell_fraction(window: f64) -> f64 {
    window / window.hypot(1.0)
}

fn converged_real_line(center: f64, scale: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let rule = GaussLegendreRule::new(16)?;
    let mut panels = 2;
    let mut previous = rule.real_line(center, scale, panels, &f);
    while panels < 1 << 12 {
        panels *= 2;
        let next = rule.real_line(center, scale, panels, &f);
        if (next - previous).abs() <= 1e-13 * next.abs() {
            return Ok(next);
        }
        previous = next;
    }
    Err(Error::Resolution(format!(
        "Fermi-shell quadrature did not settle with {panels} panels"
    )))
}

/// δn(r) = 3|δj|/(4|e|v_F), electrons per m³ in different modes.
pub fn local_mode_change_density(delta_j: f64, material: &Material) -> Result<f64> {
    ensure_finite("current density difference", delta_j)?;
    if delta_j < 0.0 {
        return Err(Error::domain("current density difference magnitude must be nonnegative"));
    }
    Ok(3.0 * delta_j / (4.0 * material.electron_charge() * material.fermi_velocity()))
}

/// δj = |e|·n_e·|δv_s| for a uniform superflow difference.
pub fn current_density_difference(delta_vs: &Vec3, material: &Material) -> f64 {
    material.electron_charge() * material.electron_density() * delta_vs.norm()
}

/// ΔN_tot = 3·L·δI_p/(4|e|v_F) for one current value.
pub fn mode_change_for_current(loop_length: f64, current: f64, material: &Material) -> f64 {
    3.0 * loop_length * current / (4.0 * material.electron_charge() * material.fermi_velocity())
}

/// ΔN_tot over the device's current range, unrounded.
pub fn total_mode_change(device: &DeviceSpec) -> Interval {
    device
        .current_difference
        .map(|i| mode_change_for_current(device.loop_length, i, &device.material))
}

/// Presentation rounding for counts: nearest integer, ties to even.
pub fn reported_count(raw: f64) -> f64 {
    raw.round_ties_even()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentDifference {
    pub joule_per_tesla: Interval,
    pub bohr_magnetons: Interval,
}

/// δμ = A·δI_p.
pub fn magnetic_moment_difference(device: &DeviceSpec) -> MomentDifference {
    let joule_per_tesla = device.current_difference.map(|i| device.enclosed_area * i);
    MomentDifference {
        joule_per_tesla,
        bohr_magnetons: joule_per_tesla.map(|m| m / BOHR_MAGNETON),
    }
}

/// I_c,bulk / I_c,J = 4π·f·R_N/R_S.
pub fn critical_current_ratio(fraction: f64, r_normal: f64, r_sharvin: f64) -> Result<f64> {
    ensure_finite("condensate fraction", fraction)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(format!("condensate fraction must lie in (0, 1], got {fraction}")));
    }
    for (label, r) in [("R_N", r_normal), ("R_S", r_sharvin)] {
        ensure_finite(label, r)?;
        if r <= 0.0 {
            return Err(Error::domain(format!("{label} must be positive")));
        }
    }
    Ok(4.0 * std::f64::consts::PI * fraction * r_normal / r_sharvin)
}
