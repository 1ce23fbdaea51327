//! Per-mode occupation differences sampled over the Fermi shell, for
//! external plotting.

use serde::{Deserialize, Serialize};

use crate::bcs::{occupation_difference, BranchPair, Material, Mode, Vec3};
use crate::error::{Error, Result};

use super::report::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    /// Points in E/Δ across [−W, W], endpoints included.
    pub energy_points: usize,
    /// Points in cos θ across [−1, 1], endpoints included.
    pub angle_points: usize,
    /// Half-width W of the energy range in units of Δ.
    pub window: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            energy_points: 401,
            angle_points: 41,
            window: 20.0,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.energy_points < 3 || self.angle_points < 3 {
            return Err(Error::Configuration("spectrum needs at least 3 points per axis".into()));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::Configuration(format!("spectrum window must be positive, got {}", self.window)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub energy_over_gap: f64,
    /// Cosine of the angle between q and δv_s.
    pub cos_theta: f64,
    pub delta_n: f64,
    /// ℏ|q·δv_s|/(2Δ), the largest |δn| the mode can carry.
    pub bound: f64,
    /// Modes per unit volume the row represents (trapezoid rule, both spins).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub material: String,
    pub delta_vs: [f64; 3],
    pub rows: Vec<SpectrumRow>,
}

impl Spectrum {
    /// Σ weight·δn over rows with δn > 0: modes per unit volume that differ.
    pub fn positive_density(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.delta_n > 0.0)
            .map(|r| r.weight * r.delta_n)
            .sum()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["E_over_gap", "cos_theta", "delta_n", "bound", "weight_per_m3"])?;
        for r in &self.rows {
            writer.write_record([r.energy_over_gap, r.cos_theta, r.delta_n, r.bound, r.weight].map(format_number))?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Configuration(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn trapezoid_weights(n: usize, step: f64) -> impl Fn(usize) -> f64 {
    move |i| if i == 0 || i == n - 1 { 0.5 * step } else { step }
}

/// Sample δn = (Δ²/2Ω³)·ℏ q·δv_s on a uniform (E, cos θ) grid with the polar
/// axis along δv_s. Requires each branch velocity ±δv_s/2 below v_crit.
pub fn emit_spectrum(material: &Material, delta_vs: &Vec3, config: &SpectrumConfig) -> Result<Spectrum> {
    config.validate()?;
    let branches = BranchPair::symmetric(*delta_vs, material)?;
    let speed = delta_vs.norm();
    let axis = if speed > 0.0 { delta_vs / speed } else { Vec3::z() };
    let transverse = axis.cross(&if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();

    let gap = material.gap();
    let hbar = material.hbar();
    let (ne, nc) = (config.energy_points, config.angle_points);
    let e_step = 2.0 * config.window / (ne - 1) as f64;
    let c_step = 2.0 / (nc - 1) as f64;
    let we = trapezoid_weights(ne, e_step * gap);
    let wc = trapezoid_weights(nc, c_step);

    let mut rows = Vec::with_capacity(ne * nc);
    for i in 0..ne {
        // integer numerators keep the grid exactly symmetric about zero
        let x = (2 * i) as f64 / (ne - 1) as f64 * config.window - config.window;
        let energy = x * gap;
        let q = material.wavevector_at_energy(energy)?;
        let density = 0.5 * material.dos_fermi() * q / material.fermi_wavevector();
        for j in 0..nc {
            let c = (2 * j) as f64 / (nc - 1) as f64 - 1.0;
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mode = Mode::up(q * (c * axis + s * transverse))?;
            rows.push(SpectrumRow {
                energy_over_gap: x,
                cos_theta: c,
                delta_n: occupation_difference(&mode, &branches, material)?,
                bound: hbar * mode.wavevector.dot(delta_vs).abs() / (2.0 * gap),
                weight: density * we(i) * wc(j),
            });
        }
    }
    Ok(Spectrum {
        material: material.name().to_string(),
        delta_vs: [delta_vs.x, delta_vs.y, delta_vs.z],
        rows,
    })
}
