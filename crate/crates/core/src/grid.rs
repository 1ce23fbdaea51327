//! Spherical-shell momentum grid around the Fermi surface.
//!
//! Energies E ∈ [−WΔ, WΔ] use a composite Gauss–Legendre rule, the polar
//! angle to a chosen axis uses Gauss–Legendre in cos θ, and the azimuth is
//! integrated out. Each node carries the number of modes per unit volume it
//! represents (both spins): ρ(E)/2 · dE · d(cos θ), with ρ(E) = ρ_F·q(E)/q_F.
//! Summing `weight × f` over nodes therefore approximates a continuum
//! integral over modes per unit volume.

use serde::{Deserialize, Serialize};

use crate::bcs::{Material, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendreRule;

/// Minimum resolvable energy scale: node spacing must stay below Δ/10.
pub const MAX_SPACING_IN_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellGridConfig {
    pub energy_panels: usize,
    pub nodes_per_panel: usize,
    pub angle_nodes: usize,
    /// Half-width W of the energy window in units of Δ.
    pub window: f64,
}

impl Default for ShellGridConfig {
    fn default() -> Self {
        Self {
            energy_panels: 80,
            nodes_per_panel: 8,
            angle_nodes: 16,
            window: 20.0,
        }
    }
}

impl ShellGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 8 || self.angle_nodes < 8 {
            return Err(Error::Configuration(format!(
                "node counts must be at least 8 (got {} per energy panel, {} angular)",
                self.nodes_per_panel, self.angle_nodes
            )));
        }
        if self.energy_panels == 0 {
            return Err(Error::Configuration("need at least one energy panel".into()));
        }
        if !self.window.is_finite() || self.window < 10.0 {
            return Err(Error::Configuration(format!(
                "energy window must be at least 10 gaps, got {}",
                self.window
            )));
        }
        Ok(())
    }

    /// Same layout with the number of energy panels scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            energy_panels: self.energy_panels * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellNode {
    /// Kinetic energy from the Fermi level, joule.
    pub energy: f64,
    pub cos_theta: f64,
    /// Lab-frame wavevector.
    pub wavevector: Vec3,
    /// Modes per unit volume represented by this node (1/m³).
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ShellGrid {
    config: ShellGridConfig,
    axis: Vec3,
    nodes: Vec<ShellNode>,
    max_energy_spacing: f64,
    gap: f64,
}

impl ShellGrid {
    /// Build the grid with the polar axis along `axis` (normalised here).
    pub fn new(config: ShellGridConfig, axis: Vec3, material: &Material) -> Result<Self> {
        config.validate()?;
        let axis = axis
            .try_normalize(0.0)
            .ok_or_else(|| Error::domain("grid axis must be a nonzero vector"))?;
        let transverse = perpendicular(&axis);

        let gap = material.gap();
        let half = config.window * gap;
        let rule = GaussLegendreRule::new(config.nodes_per_panel)?;
        let width = 2.0 * half / config.energy_panels as f64;
        let mut energies = Vec::with_capacity(config.energy_panels * config.nodes_per_panel);
        for p in 0..config.energy_panels {
            let lo = -half + width * p as f64;
            energies.extend(rule.mapped(lo, lo + width));
        }
        let max_energy_spacing = energies
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(0.0_f64, f64::max);

        let angles: Vec<(f64, f64)> = GaussLegendreRule::new(config.angle_nodes)?.mapped(-1.0, 1.0).collect();
        let q_f = material.fermi_wavevector();
        let mut nodes = Vec::with_capacity(energies.len() * angles.len());
        for &(energy, w_e) in &energies {
            let q_mag = material.wavevector_at_energy(energy)?;
            let density = material.dos_fermi() * q_mag / q_f;
            for &(c, w_c) in &angles {
                let s = (1.0 - c * c).max(0.0).sqrt();
                nodes.push(ShellNode {
                    energy,
                    cos_theta: c,
                    wavevector: q_mag * (c * axis + s * transverse),
                    weight: 0.5 * density * w_e * w_c,
                });
            }
        }
        Ok(Self {
            config,
            axis,
            nodes,
            max_energy_spacing,
            gap,
        })
    }

    pub fn config(&self) -> &ShellGridConfig {
        &self.config
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn nodes(&self) -> &[ShellNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest gap between consecutive energy nodes, in units of Δ.
    pub fn energy_spacing_in_gap(&self) -> f64 {
        self.max_energy_spacing / self.gap
    }

    /// Error unless the energy spacing resolves the gap scale.
    pub fn ensure_resolves_gap(&self) -> Result<()> {
        let spacing = self.energy_spacing_in_gap();
        if spacing < MAX_SPACING_IN_GAP {
            Ok(())
        } else {
            Err(Error::Resolution(format!(
                "energy spacing {spacing:.3}Δ exceeds {MAX_SPACING_IN_GAP}Δ; \
                 increase energy panels to at least {}",
                (self.config.energy_panels as f64 * spacing / MAX_SPACING_IN_GAP).ceil() as usize + 1
            )))
        }
    }
}

fn perpendicular(axis: &Vec3) -> Vec3 {
    let trial = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    (trial - axis.dot(&trial) * axis).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::test_support::aluminium;
    use crate::quadrature::pairwise_sum;
    use approx::assert_relative_eq;

    #[test]
    fn default_grid_resolves_gap() {
        let al = aluminium();
        let grid = ShellGrid::new(ShellGridConfig::default(), Vec3::z(), &al).unwrap();
        assert_eq!(grid.len(), 80 * 8 * 16);
        assert!(grid.energy_spacing_in_gap() < MAX_SPACING_IN_GAP);
        grid.ensure_resolves_gap().unwrap();
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let al = aluminium();
        let coarse = ShellGridConfig {
            energy_panels: 10,
            ..Default::default()
        };
        let grid = ShellGrid::new(coarse, Vec3::z(), &al).unwrap();
        assert!(matches!(grid.ensure_resolves_gap(), Err(Error::Resolution(_))));
    }

    #[test]
    fn config_validation() {
        let bad_nodes = ShellGridConfig {
            nodes_per_panel: 4,
            ..Default::default()
        };
        assert!(bad_nodes.validate().is_err());
        let bad_window = ShellGridConfig {
            window: 5.0,
            ..Default::default()
        };
        assert!(bad_window.validate().is_err());
    }

    #[test]
    fn weights_count_modes_in_window() {
        // ∫ρ(E)/2 dE dcosθ over the window equals ρ_F·2WΔ up to the q(E)/q_F factor
        let al = aluminium();
        let grid = ShellGrid::new(ShellGridConfig::default(), Vec3::new(1.0, 1.0, 0.0), &al).unwrap();
        let total = pairwise_sum(&grid.nodes().iter().map(|n| n.weight).collect::<Vec<_>>());
        let expected = al.dos_fermi() * 2.0 * 20.0 * al.gap();
        assert_relative_eq!(total, expected, max_relative = 1e-6);
    }

    #[test]
    fn wavevectors_respect_axis_and_energy() {
        let al = aluminium();
        let axis = Vec3::new(0.3, -0.4, 0.5);
        let grid = ShellGrid::new(ShellGridConfig::default(), axis, &al).unwrap();
        let unit = axis.normalize();
        for node in grid.nodes().iter().step_by(97) {
            let q = node.wavevector;
            assert_relative_eq!(q.normalize().dot(&unit), node.cos_theta, epsilon = 1e-12);
            assert_relative_eq!(
                al.kinetic_energy(q.norm()) / al.gap(),
                node.energy / al.gap(),
                epsilon = 1e-6
            );
        }
    }
}
