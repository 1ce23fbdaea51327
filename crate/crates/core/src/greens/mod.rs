//! Closed-form Nambu Green's functions in imaginary time.
//!
//! Spinor convention Ψ = (ψ↑, ψ↓*). With X = Eσz + Δσx and the projectors
//! Π± = (I ± X/Ω)/2 the zeroth-order propagator is
//!
//! ```text
//! G0(τ > 0) =  (1/ℏ) e^{−Ωτ/ℏ} Π+
//! G0(τ < 0) = −(1/ℏ) e^{ Ωτ/ℏ} Π−
//! ```
//!
//! so the jump across τ = 0 is I/ℏ and the mode occupation is
//! n = −ℏ·[G0]₁₁ on the τ → 0⁻ side. The sign of a zero `tau` selects the
//! side: `0.0` is 0⁺ and `-0.0` is 0⁻.

mod impurity;

pub use impurity::{
    dyson_kernel, dyson_kernel_slopes, impurity_first_order_residual, ImpurityEnsemble, ImpurityResidual,
};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bcs::{quasiparticle_energy, Beta, Material, Mode, Vec3};
use crate::error::{ensure_finite, Error, Result};

/// Units carried by a [`NambuMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NambuUnits {
    /// Imaginary-time propagator, 1/(J·s).
    Propagator,
    Dimensionless,
}

/// 2×2 complex matrix in Nambu space with a units tag. Not assumed Hermitian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NambuMatrix {
    entries: Matrix2<Complex64>,
    units: NambuUnits,
}

impl NambuMatrix {
    pub fn new(entries: Matrix2<Complex64>, units: NambuUnits) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("Nambu matrix entries must be finite"));
        }
        Ok(Self { entries, units })
    }

    pub fn from_real(entries: Matrix2<f64>, units: NambuUnits) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)), units)
    }

    pub fn zeros(units: NambuUnits) -> Self {
        Self {
            entries: Matrix2::zeros(),
            units,
        }
    }

    pub fn identity() -> Self {
        Self {
            entries: Matrix2::identity(),
            units: NambuUnits::Dimensionless,
        }
    }

    pub fn sigma_x() -> Self {
        Self::pauli(Matrix2::new(0.0, 1.0, 1.0, 0.0).map(Complex64::from))
    }

    pub fn sigma_y() -> Self {
        let i = Complex64::i();
        Self::pauli(Matrix2::new(Complex64::from(0.0), -i, i, Complex64::from(0.0)))
    }

    pub fn sigma_z() -> Self {
        Self::pauli(Matrix2::new(1.0, 0.0, 0.0, -1.0).map(Complex64::from))
    }

    fn pauli(entries: Matrix2<Complex64>) -> Self {
        Self {
            entries,
            units: NambuUnits::Dimensionless,
        }
    }

    pub fn entries(&self) -> &Matrix2<Complex64> {
        &self.entries
    }

    pub fn units(&self) -> NambuUnits {
        self.units
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Sum of two matrices with the same units.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.units != other.units {
            return Err(Error::domain(format!(
                "cannot add {:?} and {:?} Nambu matrices",
                self.units, other.units
            )));
        }
        Ok(Self {
            entries: self.entries + other.entries,
            units: self.units,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: self.entries * Complex64::from(factor),
            units: self.units,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// X/Ω = (Eσz + Δσx)/Ω as a real matrix.
fn unit_field(energy: f64, omega: f64, gap: f64) -> Matrix2<f64> {
    Matrix2::new(energy, gap, gap, -energy) / omega
}

/// ∂(X/Ω)/∂E = Δ(Δσz − Eσx)/Ω³.
fn unit_field_slope(energy: f64, omega: f64, gap: f64) -> Matrix2<f64> {
    Matrix2::new(gap, -energy, -energy, -gap) * (gap / omega.powi(3))
}

fn check_tau(tau: f64, beta: Beta, material: &Material) -> Result<()> {
    ensure_finite("tau", tau)?;
    if let Beta::Finite(b) = beta {
        let half_period = 0.5 * material.hbar() * b;
        if tau.abs() >= half_period {
            return Err(Error::domain(format!(
                "imaginary time {tau:e} s outside (−ℏβ/2, ℏβ/2) = ±{half_period:e} s"
            )));
        }
    }
    Ok(())
}

/// Zeroth-order propagator G0(k, τ) in the ground state (the finite-β
/// argument only bounds the τ domain; thermal occupation is neglected).
pub fn g0(k_mag: f64, tau: f64, material: &Material, beta: Beta) -> Result<NambuMatrix> {
    check_tau(tau, beta, material)?;
    let qp = quasiparticle_energy(k_mag, material)?;
    let hbar = material.hbar();
    let field = unit_field(qp.energy, qp.omega, material.gap());
    let decay = (-qp.omega * tau.abs() / hbar).exp() / (2.0 * hbar);
    let entries = if tau.is_sign_negative() {
        -(Matrix2::identity() - field) * decay
    } else {
        (Matrix2::identity() + field) * decay
    };
    NambuMatrix::from_real(entries, NambuUnits::Propagator)
}

/// Equal-time flow correction −Δ(Δσz − Eσx)(q·v_s)/(2Ω³), diagonal in q.
pub fn delta_g_vs(mode: &Mode, vs: &Vec3, material: &Material) -> Result<NambuMatrix> {
    check_flow(vs, material)?;
    let q = &mode.wavevector;
    let qp = quasiparticle_energy(q.norm(), material)?;
    let slope = unit_field_slope(qp.energy, qp.omega, material.gap());
    NambuMatrix::from_real(slope * (-0.5 * q.dot(vs)), NambuUnits::Propagator)
}

/// Flow correction at imaginary time τ: −ℏ(q·v_s)·∂G0/∂E. Its τ → 0⁻ limit
/// is [`delta_g_vs`].
pub fn delta_g_vs_at(mode: &Mode, vs: &Vec3, tau: f64, material: &Material, beta: Beta) -> Result<NambuMatrix> {
    check_flow(vs, material)?;
    check_tau(tau, beta, material)?;
    let q = &mode.wavevector;
    let qp = quasiparticle_energy(q.norm(), material)?;
    let hbar = material.hbar();
    let side = if tau.is_sign_negative() { -1.0 } else { 1.0 };
    let field = unit_field(qp.energy, qp.omega, material.gap());
    let decay = (-qp.omega * tau.abs() / hbar).exp() / (2.0 * hbar);
    // G0 = decay·(side·I + X/Ω)
    let base = Matrix2::identity() * side + field;
    let d_decay = -tau.abs() / hbar * qp.energy / qp.omega;
    let d_g0 = (base * d_decay + unit_field_slope(qp.energy, qp.omega, material.gap())) * decay;
    NambuMatrix::from_real(d_g0 * (-hbar * q.dot(vs)), NambuUnits::Propagator)
}

/// Momentum-conserving tunnelling correction at zero temperature:
/// (Δ/4ℏΩ³)·T·[[−Δ(1−e^{−iφ}), E(1+e^{iφ})], [E(1+e^{−iφ}), Δ(1−e^{iφ})]].
pub fn delta_g_t(mode: &Mode, phase_diff: f64, t_amp: f64, material: &Material) -> Result<NambuMatrix> {
    ensure_finite("phase difference", phase_diff)?;
    ensure_finite("tunnelling amplitude", t_amp)?;
    let qp = quasiparticle_energy(mode.wavevector.norm(), material)?;
    let gap = material.gap();
    let (e, d) = (Complex64::from(qp.energy), Complex64::from(gap));
    let one = Complex64::from(1.0);
    let plus = Complex64::from_polar(1.0, phase_diff);
    let minus = plus.conj();
    let m = Matrix2::new(-d * (one - minus), e * (one + plus), e * (one + minus), d * (one - plus));
    let prefactor = gap * t_amp / (4.0 * material.hbar() * qp.omega.powi(3));
    NambuMatrix::new(m * Complex64::from(prefactor), NambuUnits::Propagator)
}

/// n_q = −ℏ·[G0(|q|) + δG_vs(q)]₁₁ on the τ → 0⁻ side.
///
/// The occupation is spin independent, so the particle (spin-up) component
/// is used for either spin label.
pub fn occupation_from_g(mode: &Mode, vs: &Vec3, material: &Material) -> Result<f64> {
    let bare = g0(mode.wavevector.norm(), -0.0, material, Beta::Infinite)?;
    let flow = delta_g_vs(mode, vs, material)?;
    let total = bare.try_add(&flow)?;
    Ok(-material.hbar() * total.get(0, 0).re)
}

fn check_flow(vs: &Vec3, material: &Material) -> Result<()> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::test_support::aluminium;
    use crate::bcs::{occupation, MaterialParams};
    use approx::assert_relative_eq;

    fn close(a: &NambuMatrix, b: &Matrix2<Complex64>, tol: f64) -> bool {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (a.entries() - b).iter().all(|z| z.norm() <= tol * scale)
    }

    #[test]
    fn fermi_surface_propagator() {
        let al = aluminium();
        let g = g0(al.fermi_wavevector(), 0.0, &al, Beta::Infinite).unwrap();
        let expected = (NambuMatrix::identity().entries() + NambuMatrix::sigma_x().entries())
            / Complex64::from(2.0 * al.hbar());
        assert!(close(&g, &expected, 1e-6));
    }

    #[test]
    fn decay_constant() {
        let al = aluminium();
        let k = 1.002 * al.fermi_wavevector();
        let omega = quasiparticle_energy(k, &al).unwrap().omega;
        let at0 = g0(k, 0.0, &al, Beta::Infinite).unwrap();
        let at1 = g0(k, al.hbar() / omega, &al, Beta::Infinite).unwrap();
        let expected = at0.entries() * Complex64::from((-1.0_f64).exp());
        assert!(close(&at1, &expected, 1e-13));
    }

    #[test]
    fn jump_across_zero_is_identity_over_hbar() {
        let al = aluminium();
        for r in [0.5, 0.999, 1.0, 1.003, 1.4] {
            let k = r * al.fermi_wavevector();
            let plus = g0(k, 0.0, &al, Beta::Infinite).unwrap();
            let minus = g0(k, -0.0, &al, Beta::Infinite).unwrap();
            let jump = minus.entries() - plus.entries();
            let expected = -Matrix2::<Complex64>::identity() / Complex64::from(al.hbar());
            assert!((jump - expected).iter().all(|z| z.norm() < 1e-12 / al.hbar()));
        }
    }

    #[test]
    fn finite_beta_restricts_tau() {
        let al = aluminium();
        let beta = 1.0 / (1.380649e-23 * 0.1);
        let limit = 0.5 * al.hbar() * beta;
        let k = al.fermi_wavevector();
        assert!(g0(k, 0.99 * limit, &al, Beta::Finite(beta)).is_ok());
        assert!(matches!(
            g0(k, -1.01 * limit, &al, Beta::Finite(beta)),
            Err(Error::Domain(_))
        ));
        assert!(g0(k, f64::NAN, &al, Beta::Infinite).is_err());
    }

    #[test]
    fn occupation_extraction_matches_bcs() {
        let al = aluminium();
        for r in [0.0, 0.9, 0.999, 1.0, 1.0005, 1.2] {
            let mode = Mode::up(r * al.fermi_wavevector() * Vec3::new(0.0, 0.6, 0.8)).unwrap();
            let from_g = occupation_from_g(&mode, &Vec3::zeros(), &al).unwrap();
            let qp = quasiparticle_energy(mode.wavevector.norm(), &al).unwrap();
            assert_relative_eq!(from_g, 0.5 * (1.0 - qp.energy / qp.omega), max_relative = 1e-12);
        }
    }

    #[test]
    fn occupation_with_flow_matches_bcs() {
        let al = aluminium();
        let mode = Mode::up(al.fermi_wavevector() * Vec3::z()).unwrap();
        let vs = 5e-4 * Vec3::z();
        let from_g = occupation_from_g(&mode, &vs, &al).unwrap();
        assert_relative_eq!(from_g, occupation(&mode, &vs, &al).unwrap().value, max_relative = 1e-12);
        assert_relative_eq!(from_g - 0.5, 1.575e-5, max_relative = 2e-3);

        let v = 3.1 * Vec3::new(0.2, -0.7, 0.4).normalize();
        for r in [0.998, 1.0, 1.0001, 1.003] {
            let mode = Mode::up(r * al.fermi_wavevector() * Vec3::new(0.6, 0.0, 0.8)).unwrap();
            let a = occupation_from_g(&mode, &v, &al).unwrap();
            let b = occupation(&mode, &v, &al).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn flow_correction_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let mode = Mode::up(q_f * Vec3::z()).unwrap();
        assert_eq!(delta_g_vs(&mode, &Vec3::zeros(), &al).unwrap().max_abs(), 0.0);
        assert_eq!(delta_g_vs(&mode, &Vec3::x(), &al).unwrap().max_abs(), 0.0);

        // at E = 0: −σz·q_F v/(2Δ); times −ℏ it is the occupation shift ℏq_F v/(2Δ)
        let v = 2e-3;
        let m = delta_g_vs(&mode, &(v * Vec3::z()), &al).unwrap();
        let expected = NambuMatrix::sigma_z().entries() * Complex64::from(-q_f * v / (2.0 * al.gap()));
        assert!(close(&m, &expected, 1e-6));
        assert!(m.get(0, 1).norm() < 1e-6 * m.get(0, 0).norm());

        assert!(matches!(
            delta_g_vs(&mode, &(20.0 * Vec3::z()), &al),
            Err(Error::PerturbationDomain { .. })
        ));
    }

    #[test]
    fn time_dependent_flow_correction_limits_and_derivative() {
        let al = aluminium();
        let mode = Mode::up(1.0007 * al.fermi_wavevector() * Vec3::new(0.0, 0.6, 0.8)).unwrap();
        let vs = 0.4 * Vec3::new(0.1, 0.5, 0.3);
        let equal_time = delta_g_vs(&mode, &vs, &al).unwrap();
        let limit = delta_g_vs_at(&mode, &vs, -0.0, &al, Beta::Infinite).unwrap();
        assert!(close(&limit, equal_time.entries(), 1e-13));

        // finite-difference oracle: G0 at the shifted kinetic energy E − ℏq·v
        let qp = quasiparticle_energy(mode.wavevector.norm(), &al).unwrap();
        let h = 1e-4 * al.gap();
        let tau = 0.7 * al.hbar() / qp.omega;
        let k_of = |e: f64| al.wavevector_at_energy(e).unwrap();
        let plus = g0(k_of(qp.energy + h), tau, &al, Beta::Infinite).unwrap();
        let minus = g0(k_of(qp.energy - h), tau, &al, Beta::Infinite).unwrap();
        let derivative = (plus.entries() - minus.entries()) / Complex64::from(2.0 * h);
        let expected = derivative * Complex64::from(-al.hbar() * mode.wavevector.dot(&vs));
        let analytic = delta_g_vs_at(&mode, &vs, tau, &al, Beta::Infinite).unwrap();
        assert!(close(&analytic, &expected, 1e-6));
    }

    #[test]
    fn tunnelling_correction_examples() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        let t = 3e-28;
        let off_fermi = Mode::up(1.001 * q_f * Vec3::z()).unwrap();
        let qp = quasiparticle_energy(off_fermi.wavevector.norm(), &al).unwrap();
        let pref = al.gap() * t / (4.0 * al.hbar() * qp.omega.powi(3));

        let zero = delta_g_t(&off_fermi, 0.0, t, &al).unwrap();
        assert_eq!(zero.get(0, 0).norm(), 0.0);
        assert_eq!(zero.get(1, 1).norm(), 0.0);
        assert_relative_eq!(zero.get(0, 1).re, pref * 2.0 * qp.energy, max_relative = 1e-14);

        let pi = delta_g_t(&off_fermi, std::f64::consts::PI, t, &al).unwrap();
        assert!(pi.get(0, 1).norm() < 1e-15 * pref * qp.energy.abs());
        assert_relative_eq!(pi.get(0, 0).re, -2.0 * pref * al.gap(), max_relative = 1e-14);
        assert_relative_eq!(pi.get(1, 1).re, 2.0 * pref * al.gap(), max_relative = 1e-14);

        // E = 0, φ = π/2: diag = ∓(T/4ℏΔ)(1 ∓ ∓i), off-diagonal zero
        let fermi = Mode::up(q_f * Vec3::z()).unwrap();
        let m = delta_g_t(&fermi, std::f64::consts::FRAC_PI_2, t, &al).unwrap();
        let scale = t / (4.0 * al.hbar() * al.gap());
        assert_relative_eq!(m.get(0, 0).re, -scale, max_relative = 1e-5);
        assert_relative_eq!(m.get(0, 0).im, -scale, max_relative = 1e-5);
        assert_relative_eq!(m.get(1, 1).re, scale, max_relative = 1e-5);
        assert_relative_eq!(m.get(1, 1).im, -scale, max_relative = 1e-5);
        assert!(m.get(0, 1).norm() < 1e-5 * scale);
    }

    #[test]
    fn units_are_checked_on_addition() {
        let p = NambuMatrix::zeros(NambuUnits::Propagator);
        assert!(p.try_add(&NambuMatrix::sigma_z()).is_err());
        assert!(p.try_add(&p).is_ok());
    }

    #[test]
    fn pauli_algebra() {
        let x = *NambuMatrix::sigma_x().entries();
        let y = *NambuMatrix::sigma_y().entries();
        let z = *NambuMatrix::sigma_z().entries();
        assert_eq!(x * y, z * Complex64::i());
        assert_eq!(x * x, Matrix2::identity());
    }

    #[test]
    fn toy_units_match_closed_form() {
        let toy = Material::new(MaterialParams {
            name: "toy".into(),
            fermi_velocity: 1.0,
            gap: 0.1,
            debye_energy: 0.3,
            dos_fermi: Some(1.0),
            chemical_potential: None,
            electron_mass: 1.0,
            electron_charge: 1.0,
            hbar: 1.0,
        })
        .unwrap();
        // k = 1.1: E = 0.105, Ω = √(0.105² + 0.01)
        let omega = 0.105_f64.hypot(0.1);
        let g = g0(1.1, -0.0, &toy, Beta::Infinite).unwrap();
        assert_relative_eq!(g.get(0, 0).re, -0.5 * (1.0 - 0.105 / omega), max_relative = 1e-12);
        assert_relative_eq!(g.get(0, 1).re, 0.5 * 0.1 / omega, max_relative = 1e-12);
    }
}
