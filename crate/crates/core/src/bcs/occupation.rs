use serde::{Deserialize, Serialize};

use super::{Material, Vec3};
use crate::error::{ensure_finite, Error, Result};

/// Relative tolerance (in units of |q_a| + |q_b|) for deciding that two
/// lab-frame modes form a Cooper pair.
pub const PAIRING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// A single-electron mode labelled by its laboratory-frame wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub wavevector: Vec3,
    pub spin: Spin,
}

impl Mode {
    pub fn new(wavevector: Vec3, spin: Spin) -> Result<Self> {
        if wavevector.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("mode wavevector must be finite"));
        }
        Ok(Self { wavevector, spin })
    }

    pub fn up(wavevector: Vec3) -> Result<Self> {
        Self::new(wavevector, Spin::Up)
    }
}

/// Mean superfluid velocities of the two circulating-current branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    v_left: Vec3,
    v_right: Vec3,
}

impl BranchPair {
    /// Both velocities must lie below the depairing velocity of `material`.
    pub fn new(v_left: Vec3, v_right: Vec3, material: &Material) -> Result<Self> {
        check_velocity(&v_left, material)?;
        check_velocity(&v_right, material)?;
        Ok(Self { v_left, v_right })
    }

    /// Branches ±δv/2, the symmetric split of a velocity difference.
    pub fn symmetric(delta_vs: Vec3, material: &Material) -> Result<Self> {
        Self::new(0.5 * delta_vs, -0.5 * delta_vs, material)
    }

    pub fn v_left(&self) -> Vec3 {
        self.v_left
    }

    pub fn v_right(&self) -> Vec3 {
        self.v_right
    }

    /// δ⟨v_s⟩ = v_left − v_right.
    pub fn delta_vs(&self) -> Vec3 {
        self.v_left - self.v_right
    }
}

fn check_velocity(vs: &Vec3, material: &Material) -> Result<()> {
    if vs.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("superfluid velocity must be finite"));
    }
    let speed = vs.norm();
    let critical = material.critical_velocity();
    if speed >= critical {
        return Err(Error::PerturbationDomain { speed, critical });
    }
    Ok(())
}

/// Kinetic energy E (from the Fermi level) and quasiparticle energy Ω = √(E²+Δ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quasiparticle {
    pub energy: f64,
    pub omega: f64,
}

pub fn quasiparticle_energy(q_mag: f64, material: &Material) -> Result<Quasiparticle> {
    ensure_finite("wavevector magnitude", q_mag)?;
    if q_mag < 0.0 {
        return Err(Error::domain("wavevector magnitude must be nonnegative"));
    }
    let energy = material.kinetic_energy(q_mag);
    Ok(Quasiparticle {
        energy,
        omega: energy.hypot(material.gap()),
    })
}

/// Occupation number of a mode. Values outside [0, 1] are kept as computed;
/// `physical` is false when that happens, which means the first-order
/// expansion has broken down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub value: f64,
    pub physical: bool,
}

impl Occupation {
    fn new(value: f64) -> Self {
        Self {
            value,
            physical: (0.0..=1.0).contains(&value),
        }
    }
}

/// n_q = ½(1 − E/Ω) + ½(Δ²/Ω³)·ℏ q·v_s, to first order in v_s/v_crit.
pub fn occupation(mode: &Mode, vs: &Vec3, material: &Material) -> Result<Occupation> {
    check_velocity(vs, material)?;
    let q = &mode.wavevector;
    let qp = quasiparticle_energy(q.norm(), material)?;
    let gap = material.gap();
    let bare = 0.5 * (1.0 - qp.energy / qp.omega);
    let shift = 0.5 * gap * gap / qp.omega.powi(3) * material.hbar() * q.dot(vs);
    let occ = Occupation::new(bare + shift);
    if !occ.physical {
        log::warn!("occupation {} outside [0, 1]: perturbative breakdown", occ.value);
    }
    Ok(occ)
}

/// δn_q = (Δ²/2Ω³)·ℏ q·δ⟨v_s⟩, the left-minus-right branch difference.
pub fn occupation_difference(mode: &Mode, branches: &BranchPair, material: &Material) -> Result<f64> {
    let q = &mode.wavevector;
    let qp = quasiparticle_energy(q.norm(), material)?;
    let gap = material.gap();
    Ok(0.5 * gap * gap / qp.omega.powi(3) * material.hbar() * q.dot(&branches.delta_vs()))
}

/// Branch difference of the Cooper-pair mode built from `qa` and `qb`.
///
/// The pair carries a first-order difference only when the two modes have
/// opposite spins and q_b = −q_a + 2m·v_s/ℏ for the superflow of one of the
/// branches; it then equals the single-mode difference of `qa`.
pub fn pair_occupation_difference(
    qa: &Mode,
    qb: &Mode,
    branches: &BranchPair,
    material: &Material,
) -> Result<f64> {
    if qa.spin == qb.spin {
        return Ok(0.0);
    }
    let scale = qa.wavevector.norm() + qb.wavevector.norm();
    let tolerance = PAIRING_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    let paired = [branches.v_left(), branches.v_right()].iter().any(|vs| {
        let drift = 2.0 * material.electron_mass() / material.hbar() * vs;
        (qa.wavevector + qb.wavevector - drift).norm() <= tolerance
    });
    if paired {
        occupation_difference(qa, branches, material)
    } else {
        Ok(0.0)
    }
}

/// q = k + m·v_s/ℏ.
pub fn lab_frame_wavevector(k: &Vec3, vs: &Vec3, material: &Material) -> Vec3 {
    k + material.electron_mass() / material.hbar() * vs
}

/// |v_s|·v_F·m/Δ = |v_s|/v_crit.
pub fn perturbation_parameter(vs: &Vec3, material: &Material) -> f64 {
    vs.norm() * material.fermi_velocity() * material.electron_mass() / material.gap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::test_support::aluminium;
    use crate::bcs::MaterialParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn z() -> Vec3 {
        Vec3::z()
    }

    #[test]
    fn quasiparticle_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let at_fermi = quasiparticle_energy(q_f, &al).unwrap();
        assert!(at_fermi.energy.abs() < 1e-12 * al.chemical_potential());
        assert_relative_eq!(at_fermi.omega, al.gap(), max_relative = 1e-6);

        let bottom = quasiparticle_energy(0.0, &al).unwrap();
        assert_eq!(bottom.energy, -al.chemical_potential());
        assert_relative_eq!(bottom.omega, al.chemical_potential().hypot(al.gap()), max_relative = 1e-15);

        // (1.01)² − 1 = 0.0201
        let above = quasiparticle_energy(1.01 * q_f, &al).unwrap();
        assert_relative_eq!(above.energy / al.chemical_potential(), 0.0201, max_relative = 1e-9);
        assert!(above.omega >= al.gap());

        assert!(quasiparticle_energy(-1.0, &al).is_err());
        assert!(quasiparticle_energy(f64::INFINITY, &al).is_err());
    }

    #[test]
    fn occupation_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let fermi = Mode::up(q_f * z()).unwrap();
        let n = occupation(&fermi, &Vec3::zeros(), &al).unwrap();
        assert_relative_eq!(n.value, 0.5, epsilon = 1e-9);

        let deep = Mode::up(Vec3::zeros()).unwrap();
        let n = occupation(&deep, &Vec3::zeros(), &al).unwrap();
        assert_relative_eq!(n.value, 1.0, epsilon = 1e-6);

        // 0.5 + ℏ q_F v/(2Δ) with v = 5e-4 m/s
        let n = occupation(&fermi, &(5e-4 * z()), &al).unwrap();
        let expected = 0.5 + al.electron_mass() * al.fermi_velocity() * 5e-4 / (2.0 * al.gap());
        assert_relative_eq!(n.value, expected, max_relative = 1e-9);
        assert_relative_eq!(n.value - 0.5, 1.575e-5, max_relative = 2e-3);
        assert!(n.physical);
    }

    #[test]
    fn occupation_rejects_supercritical_flow() {
        let al = aluminium();
        let mode = Mode::up(al.fermi_wavevector() * z()).unwrap();
        let v = 1.01 * al.critical_velocity() * z();
        assert!(matches!(
            occupation(&mode, &v, &al),
            Err(Error::PerturbationDomain { .. })
        ));
        assert!(BranchPair::new(v, Vec3::zeros(), &al).is_err());
    }

    #[test]
    fn unphysical_occupation_is_flagged_not_clamped() {
        // toy units where q far from q_F still carries a large linear term
        let toy = Material::new(MaterialParams {
            name: "toy".into(),
            fermi_velocity: 1.0,
            gap: 0.4,
            debye_energy: 1.0,
            dos_fermi: Some(1.0),
            chemical_potential: Some(0.5),
            electron_mass: 1.0,
            electron_charge: 1.0,
            hbar: 1.0,
        })
        .unwrap();
        let mode = Mode::up(1.3 * z()).unwrap();
        let v = -0.399 * z();
        let n = occupation(&mode, &v, &toy).unwrap();
        let qp = quasiparticle_energy(1.3, &toy).unwrap();
        let expected = 0.5 * (1.0 - qp.energy / qp.omega) + 0.5 * 0.16 / qp.omega.powi(3) * 1.3 * -0.399;
        assert_relative_eq!(n.value, expected, max_relative = 1e-14);
        assert!(n.value < 0.0);
        assert!(!n.physical);
    }

    #[test]
    fn occupation_difference_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let mode = Mode::up(q_f * z()).unwrap();

        let same = BranchPair::new(3e-3 * z(), 3e-3 * z(), &al).unwrap();
        assert_eq!(occupation_difference(&mode, &same, &al).unwrap(), 0.0);

        let branches = BranchPair::new(5e-4 * z(), -5e-4 * z(), &al).unwrap();
        let perpendicular = Mode::up(q_f * Vec3::x()).unwrap();
        assert_eq!(occupation_difference(&perpendicular, &branches, &al).unwrap(), 0.0);

        let dn = occupation_difference(&mode, &branches, &al).unwrap();
        let expected = al.electron_mass() * al.fermi_velocity() * 1e-3 / (2.0 * al.gap());
        assert_relative_eq!(dn, expected, max_relative = 1e-9);
        assert_relative_eq!(dn, 3.15e-5, max_relative = 2e-3);
    }

    #[test]
    fn pair_mode_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let v = 4e-3 * Vec3::new(0.3, -0.2, 0.9).normalize();
        let branches = BranchPair::new(v, -v, &al).unwrap();
        let qa = Mode::new(q_f * Vec3::new(0.6, 0.0, 0.8), Spin::Up).unwrap();
        let drift = 2.0 * al.electron_mass() / al.hbar() * v;
        let partner = Mode::new(-qa.wavevector + drift, Spin::Down).unwrap();

        let single = occupation_difference(&qa, &branches, &al).unwrap();
        let pair = pair_occupation_difference(&qa, &partner, &branches, &al).unwrap();
        assert_eq!(pair, single);
        assert!(single != 0.0);

        // mismatch far larger than 2m|v|/ℏ
        let far = Mode::new(-qa.wavevector + 1e3 * drift, Spin::Down).unwrap();
        assert_eq!(pair_occupation_difference(&qa, &far, &branches, &al).unwrap(), 0.0);

        // same spin never pairs
        let same_spin = Mode::new(partner.wavevector, Spin::Up).unwrap();
        assert_eq!(pair_occupation_difference(&qa, &same_spin, &branches, &al).unwrap(), 0.0);

        let equal = BranchPair::new(v, v, &al).unwrap();
        assert_eq!(pair_occupation_difference(&qa, &partner, &equal, &al).unwrap(), 0.0);
    }

    #[test]
    fn critical_velocity_and_parameter() {
        let al = aluminium();
        let vc = al.critical_velocity();
        assert_relative_eq!(vc, 15.9, max_relative = 2e-3);
        assert_eq!(perturbation_parameter(&Vec3::zeros(), &al), 0.0);
        assert_relative_eq!(perturbation_parameter(&(vc * Vec3::y()), &al), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn lab_frame_examples() {
        let al = aluminium();
        let ratio = al.electron_mass() / al.hbar();
        assert_relative_eq!(ratio, 8.638e3, max_relative = 1e-3);
        let q = lab_frame_wavevector(&Vec3::zeros(), &(2.0 * z()), &al);
        assert_relative_eq!(q.z, 2.0 * ratio, max_relative = 1e-15);
        let k = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(lab_frame_wavevector(&k, &Vec3::zeros(), &al), k);
        let q = lab_frame_wavevector(&(al.fermi_wavevector() * Vec3::x()), &z(), &al);
        assert_eq!(q.x, al.fermi_wavevector());
        assert_relative_eq!(q.z, 8.64e3, max_relative = 1e-3);
    }

    fn shell_mode() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        // (|q|/q_F, polar angle, azimuth, velocity fraction of v_crit)
        (0.9f64..1.1, 0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU, -0.99f64..0.99)
    }

    proptest! {
        #[test]
        fn no_flow_gives_textbook_occupation((r, th, ph, _) in shell_mode()) {
            let al = aluminium();
            let q = r * al.fermi_wavevector() * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let mode = Mode::up(q).unwrap();
            let qp = quasiparticle_energy(q.norm(), &al).unwrap();
            let n = occupation(&mode, &Vec3::zeros(), &al).unwrap();
            prop_assert_eq!(n.value, 0.5 * (1.0 - qp.energy / qp.omega));
        }

        #[test]
        fn difference_is_antisymmetric_and_bounded((r, th, ph, f) in shell_mode()) {
            let al = aluminium();
            let q = r * al.fermi_wavevector() * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let v = f * al.critical_velocity() * Vec3::new(0.2, 0.5, -0.84).normalize();
            let branches = BranchPair::symmetric(v, &al).unwrap();
            let plus = occupation_difference(&Mode::up(q).unwrap(), &branches, &al).unwrap();
            let minus = occupation_difference(&Mode::up(-q).unwrap(), &branches, &al).unwrap();
            prop_assert_eq!(plus, -minus);
            let bound = al.hbar() * q.dot(&branches.delta_vs()).abs() / (2.0 * al.gap());
            prop_assert!(plus.abs() <= bound * (1.0 + 1e-14));
        }

        #[test]
        fn first_order_term_is_linear((r, th, ph, f) in shell_mode()) {
            let al = aluminium();
            let q = r * al.fermi_wavevector() * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let v = 0.5 * f * al.critical_velocity() * Vec3::new(-0.3, 0.1, 0.95).normalize();
            let mode = Mode::up(q).unwrap();
            let lhs = occupation(&mode, &v, &al).unwrap().value - occupation(&mode, &(-v), &al).unwrap().value;
            let branches = BranchPair::new(v, -v, &al).unwrap();
            let rhs = occupation_difference(&mode, &branches, &al).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-15 + 1e-9 * rhs.abs());
        }
    }
}
