use serde::{Deserialize, Serialize};

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR};
use crate::error::{ensure_finite, Error, Result};

/// Relative tolerance for the v_F / μ consistency check.
const FERMI_CONSISTENCY_TOL: f64 = 1e-9;

/// Inputs for [`Material::new`]. Optional fields fall back to the
/// free-electron relations with the pinned SI constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub name: String,
    /// Fermi velocity v_F in m/s.
    pub fermi_velocity: f64,
    /// Gap Δ in joule.
    pub gap: f64,
    /// Debye energy ω_D in joule.
    pub debye_energy: f64,
    /// Density of states at the Fermi level per unit volume, both spins
    /// included. Defaults to m·q_F/(π²ℏ²).
    pub dos_fermi: Option<f64>,
    /// Chemical potential μ. Defaults to m·v_F²/2; if given it must agree.
    pub chemical_potential: Option<f64>,
    pub electron_mass: f64,
    pub electron_charge: f64,
    pub hbar: f64,
}

impl MaterialParams {
    /// Free-electron material with the pinned SI constants.
    pub fn free_electron(name: impl Into<String>, fermi_velocity: f64, gap: f64, debye_energy: f64) -> Self {
        Self {
            name: name.into(),
            fermi_velocity,
            gap,
            debye_energy,
            dos_fermi: None,
            chemical_potential: None,
            electron_mass: ELECTRON_MASS,
            electron_charge: ELEMENTARY_CHARGE,
            hbar: HBAR,
        }
    }
}

/// Bulk parameters of a weak-coupling s-wave superconductor.
///
/// The density of states `dos_fermi` counts both spin orientations per unit
/// volume per unit energy. With that convention the Fermi-shell kernels come
/// out as K1 = ρ_F·2m²μ/ℏ³ with no extra factor of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    name: String,
    fermi_velocity: f64,
    gap: f64,
    debye_energy: f64,
    dos_fermi: f64,
    chemical_potential: f64,
    electron_mass: f64,
    electron_charge: f64,
    hbar: f64,
}

impl Material {
    pub fn new(params: MaterialParams) -> Result<Self> {
        let MaterialParams {
            name,
            fermi_velocity,
            gap,
            debye_energy,
            dos_fermi,
            chemical_potential,
            electron_mass,
            electron_charge,
            hbar,
        } = params;

        for (label, value) in [
            ("fermi_velocity", fermi_velocity),
            ("gap", gap),
            ("debye_energy", debye_energy),
            ("electron_mass", electron_mass),
            ("electron_charge", electron_charge),
            ("hbar", hbar),
        ] {
            positive(label, value)?;
        }
        if gap >= debye_energy {
            return Err(Error::domain(format!(
                "gap {gap:e} J must be below the Debye energy {debye_energy:e} J (weak coupling)"
            )));
        }

        let q_fermi = electron_mass * fermi_velocity / hbar;
        let free_mu = hbar * hbar * q_fermi * q_fermi / (2.0 * electron_mass);
        let chemical_potential = match chemical_potential {
            Some(mu) => {
                positive("chemical_potential", mu)?;
                if ((mu - free_mu) / free_mu).abs() > FERMI_CONSISTENCY_TOL {
                    return Err(Error::domain(format!(
                        "chemical potential {mu:e} J inconsistent with v_F (expects {free_mu:e} J)"
                    )));
                }
                mu
            }
            None => free_mu,
        };
        let dos_fermi = match dos_fermi {
            Some(rho) => positive("dos_fermi", rho)?,
            None => electron_mass * q_fermi / (std::f64::consts::PI.powi(2) * hbar * hbar),
        };

        Ok(Self {
            name,
            fermi_velocity,
            gap,
            debye_energy,
            dos_fermi,
            chemical_potential,
            electron_mass,
            electron_charge,
            hbar,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn fermi_velocity(&self) -> f64 {
        self.fermi_velocity
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
    pub fn debye_energy(&self) -> f64 {
        self.debye_energy
    }
    pub fn dos_fermi(&self) -> f64 {
        self.dos_fermi
    }
    pub fn chemical_potential(&self) -> f64 {
        self.chemical_potential
    }
    pub fn electron_mass(&self) -> f64 {
        self.electron_mass
    }
    pub fn electron_charge(&self) -> f64 {
        self.electron_charge
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// q_F = m·v_F/ℏ.
    pub fn fermi_wavevector(&self) -> f64 {
        self.electron_mass * self.fermi_velocity / self.hbar
    }

    /// Depairing velocity Δ/(m·v_F).
    pub fn critical_velocity(&self) -> f64 {
        self.gap / (self.electron_mass * self.fermi_velocity)
    }

    /// ξ₀ = ℏ·v_F/Δ.
    pub fn coherence_length(&self) -> f64 {
        self.hbar * self.fermi_velocity / self.gap
    }

    /// Free-electron density q_F³/(3π²).
    pub fn electron_density(&self) -> f64 {
        self.fermi_wavevector().powi(3) / (3.0 * std::f64::consts::PI.powi(2))
    }

    /// Kinetic energy measured from the Fermi level, ℏ²q²/2m − μ.
    pub fn kinetic_energy(&self, q_mag: f64) -> f64 {
        self.hbar * self.hbar * q_mag * q_mag / (2.0 * self.electron_mass) - self.chemical_potential
    }

    /// Magnitude of the wavevector with kinetic energy `energy` above μ.
    pub fn wavevector_at_energy(&self, energy: f64) -> Result<f64> {
        let kinetic = energy + self.chemical_potential;
        if kinetic < 0.0 {
            return Err(Error::domain(format!("energy {energy:e} J lies below the band bottom")));
        }
        Ok((2.0 * self.electron_mass * kinetic).sqrt() / self.hbar)
    }

    /// Copy with a different |e|; used for fault injection in verification.
    pub fn with_electron_charge(&self, charge: f64) -> Result<Self> {
        positive("electron_charge", charge)?;
        Ok(Self {
            electron_charge: charge,
            ..self.clone()
        })
    }

    /// Copy with a different gap, keeping everything else.
    pub fn with_gap(&self, gap: f64) -> Result<Self> {
        positive("gap", gap)?;
        if gap >= self.debye_energy {
            return Err(Error::domain("gap must stay below the Debye energy"));
        }
        Ok(Self { gap, ..self.clone() })
    }
}

fn positive(label: &str, value: f64) -> Result<f64> {
    ensure_finite(label, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{label} must be strictly positive, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::test_support::aluminium;
    use approx::assert_relative_eq;

    #[test]
    fn derived_fermi_quantities_are_consistent() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let mu = al.hbar() * al.hbar() * q_f * q_f / (2.0 * al.electron_mass());
        assert_relative_eq!(mu, al.chemical_potential(), max_relative = 1e-12);
        assert_relative_eq!(al.kinetic_energy(q_f) / mu, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_velocity_aluminium() {
        // Δ/(m v_F) = 2.9225e-23 / (9.1094e-31 · 2.02e6)
        let al = aluminium();
        assert_relative_eq!(al.critical_velocity(), 15.88, max_relative = 2e-3);
    }

    #[test]
    fn rejects_nonpositive_fields() {
        let mut p = MaterialParams::free_electron("x", 1e6, 1e-23, 1e-21);
        p.fermi_velocity = -1.0;
        assert!(Material::new(p.clone()).is_err());
        p.fermi_velocity = 1e6;
        p.gap = 0.0;
        assert!(Material::new(p.clone()).is_err());
        p.gap = f64::NAN;
        assert!(Material::new(p).is_err());
    }

    #[test]
    fn rejects_strong_coupling() {
        let p = MaterialParams::free_electron("x", 1e6, 2e-21, 1e-21);
        assert!(matches!(Material::new(p), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_inconsistent_chemical_potential() {
        let mut p = MaterialParams::free_electron("x", 1e6, 1e-23, 1e-21);
        let good = 0.5 * ELECTRON_MASS * 1e12;
        p.chemical_potential = Some(good * (1.0 + 1e-6));
        assert!(Material::new(p.clone()).is_err());
        p.chemical_potential = Some(good);
        assert!(Material::new(p).is_ok());
    }

    #[test]
    fn wavevector_at_energy_inverts_kinetic_energy() {
        let al = aluminium();
        for e in [-0.5, -1e-3, 0.0, 1e-3, 2.0] {
            let energy = e * al.chemical_potential();
            let q = al.wavevector_at_energy(energy).unwrap();
            assert_relative_eq!(
                al.kinetic_energy(q),
                energy,
                epsilon = 1e-15 * al.chemical_potential()
            );
        }
        assert!(al.wavevector_at_energy(-2.0 * al.chemical_potential()).is_err());
    }
}
