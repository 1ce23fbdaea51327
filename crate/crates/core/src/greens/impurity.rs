//! First-order impurity terms of the Dyson expansion.
//!
//! A static impurity potential couples through σz in Nambu space. Only the
//! forward-scattering element U(q, q) = (U0/V)·Σ_j 1 = Ū contributes to the
//! occupation of mode q at first order, independent of where the
//! impurities sit.
//!
//! The imaginary-time integral ∫dτ'' G0_A(0⁻ − τ'') σz G0_B(τ'') is done in
//! closed form:
//!
//! ```text
//! Z(A, B) = −(Π+^A σz Π−^B + Π−^A σz Π+^B) / (ℏ(Ω_A + Ω_B))
//! ```
//!
//! and the occupation correction is δn = ℏŪ·Z₁₁. The zeroth-order product
//! G0 U G0 does not depend on v_s, so it drops out of the branch difference.
//! The first-order terms G0 U δG_vs + δG_vs U G0 equal −ℏ(q·v_s)(∂_A + ∂_B)Z
//! times ℏŪ. Together these are a uniform shift of the chemical potential
//! by Ū. Holding the electron number of each branch fixed re-absorbs that
//! shift, and the residual measures what survives in δn.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bcs::{occupation_difference, quasiparticle_energy, BranchPair, Material, Mode, Vec3};
use crate::error::{ensure_finite, Error, Result};
use crate::grid::ShellGrid;
use crate::quadrature::pairwise_sum;

/// Static point impurities in a cubic sample of side `box_side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityEnsemble {
    positions: Vec<Vec3>,
    /// U0 in J·m³.
    strength: f64,
    box_side: f64,
    seed: Option<u64>,
}

impl ImpurityEnsemble {
    pub fn new(positions: Vec<Vec3>, strength: f64, box_side: f64) -> Result<Self> {
        ensure_finite("impurity strength", strength)?;
        ensure_finite("box side", box_side)?;
        if box_side <= 0.0 {
            return Err(Error::domain("sample box side must be positive"));
        }
        for (i, r) in positions.iter().enumerate() {
            if r.iter().any(|&c| !(0.0..=box_side).contains(&c)) {
                return Err(Error::domain(format!("impurity {i} at {r:?} lies outside the sample box")));
            }
        }
        Ok(Self {
            positions,
            strength,
            box_side,
            seed: None,
        })
    }

    /// `count` impurities placed uniformly at random, reproducible from `seed`.
    pub fn random(count: usize, strength: f64, box_side: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..count)
            .map(|_| {
                Vec3::new(
                    rng.random_range(0.0..box_side),
                    rng.random_range(0.0..box_side),
                    rng.random_range(0.0..box_side),
                )
            })
            .collect();
        let mut ensemble = Self::new(positions, strength, box_side)?;
        ensemble.seed = Some(seed);
        Ok(ensemble)
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn volume(&self) -> f64 {
        self.box_side.powi(3)
    }

    /// U(q, q') = (U0/V)·Σ_j e^{−i(q−q')·r_j}, in joule.
    pub fn matrix_element(&self, q: &Vec3, q_prime: &Vec3) -> num_complex::Complex64 {
        let dq = q - q_prime;
        let sum: num_complex::Complex64 = self
            .positions
            .iter()
            .map(|r| num_complex::Complex64::from_polar(1.0, -dq.dot(r)))
            .sum();
        sum * (self.strength / self.volume())
    }

    /// Forward-scattering potential Ū = U0·N/V.
    pub fn mean_potential(&self) -> f64 {
        self.strength * self.positions.len() as f64 / self.volume()
    }
}

fn projector(energy: f64, gap: f64, sign: f64) -> Matrix2<f64> {
    let omega = energy.hypot(gap);
    (Matrix2::identity() + Matrix2::new(energy, gap, gap, -energy) * (sign / omega)) * 0.5
}

fn projector_slope(energy: f64, gap: f64, sign: f64) -> Matrix2<f64> {
    let omega = energy.hypot(gap);
    Matrix2::new(gap, -energy, -energy, -gap) * (0.5 * sign * gap / omega.powi(3))
}

const SIGMA_Z: Matrix2<f64> = Matrix2::new(1.0, 0.0, 0.0, -1.0);

fn sandwich(pa: &Matrix2<f64>, ma: &Matrix2<f64>, pb: &Matrix2<f64>, mb: &Matrix2<f64>) -> Matrix2<f64> {
    pa * SIGMA_Z * mb + ma * SIGMA_Z * pb
}

/// Closed-form τ-integral Z(A, B) for kinetic energies `e_a`, `e_b` (1/(J²·s)).
pub fn dyson_kernel(e_a: f64, e_b: f64, material: &Material) -> Matrix2<f64> {
    let gap = material.gap();
    let total = e_a.hypot(gap) + e_b.hypot(gap);
    let s = sandwich(
        &projector(e_a, gap, 1.0),
        &projector(e_a, gap, -1.0),
        &projector(e_b, gap, 1.0),
        &projector(e_b, gap, -1.0),
    );
    s * (-1.0 / (material.hbar() * total))
}

/// (∂Z/∂E_A, ∂Z/∂E_B).
pub fn dyson_kernel_slopes(e_a: f64, e_b: f64, material: &Material) -> (Matrix2<f64>, Matrix2<f64>) {
    let gap = material.gap();
    let hbar = material.hbar();
    let (om_a, om_b) = (e_a.hypot(gap), e_b.hypot(gap));
    let total = om_a + om_b;
    let (pa, ma) = (projector(e_a, gap, 1.0), projector(e_a, gap, -1.0));
    let (pb, mb) = (projector(e_b, gap, 1.0), projector(e_b, gap, -1.0));
    let (dpa, dma) = (projector_slope(e_a, gap, 1.0), projector_slope(e_a, gap, -1.0));
    let (dpb, dmb) = (projector_slope(e_b, gap, 1.0), projector_slope(e_b, gap, -1.0));
    let s = sandwich(&pa, &ma, &pb, &mb);

    let d_a = -(sandwich(&dpa, &dma, &pb, &mb) / total - s * (e_a / om_a) / (total * total)) / hbar;
    let d_b = -(sandwich(&pa, &ma, &dpb, &dmb) / total - s * (e_b / om_b) / (total * total)) / hbar;
    (d_a, d_b)
}

/// Outcome of the first-order impurity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpurityResidual {
    /// max_q |left − right| of the number-conserving correction to δn_q,
    /// divided by max_q |δn_q|.
    pub residual: f64,
    /// Same measure before the chemical potential is readjusted.
    pub uncompensated: f64,
    /// Chemical-potential shifts (J) restoring each branch's electron number.
    pub chemical_potential_shift: [f64; 2],
    /// Forward-scattering potential Ū (J).
    pub mean_potential: f64,
    pub modes: usize,
}

/// Evaluate the first-order impurity correction to δn on `grid`.
pub fn impurity_first_order_residual(
    grid: &ShellGrid,
    ensemble: &ImpurityEnsemble,
    branches: &BranchPair,
    material: &Material,
) -> Result<ImpurityResidual> {
    grid.ensure_resolves_gap()?;
    let hbar = material.hbar();
    let gap = material.gap();
    let u_bar = ensemble.mean_potential();
    let velocities = [branches.v_left(), branches.v_right()];

    struct Row {
        weight: f64,
        delta_n: f64,
        zeroth: f64,
        first: [f64; 2],
        response: [f64; 2],
    }

    let mut rows = Vec::with_capacity(grid.len());
    for node in grid.nodes() {
        let mode = Mode::up(node.wavevector)?;
        let q = &node.wavevector;
        let qp = quasiparticle_energy(q.norm(), material)?;
        let e = qp.energy;
        let z = dyson_kernel(e, e, material);
        let (d_a, d_b) = dyson_kernel_slopes(e, e, material);
        let slope = d_a + d_b;
        let static_response = 0.5 * gap * gap / qp.omega.powi(3);
        let response_slope = 1.5 * e * gap * gap / qp.omega.powi(5);

        let mut first = [0.0; 2];
        let mut response = [0.0; 2];
        for (b, v) in velocities.iter().enumerate() {
            let shift = hbar * q.dot(v);
            first[b] = hbar * u_bar * (-shift) * slope[(0, 0)];
            response[b] = static_response + shift * response_slope;
        }
        rows.push(Row {
            weight: node.weight,
            delta_n: occupation_difference(&mode, branches, material)?,
            zeroth: hbar * u_bar * z[(0, 0)],
            first,
            response,
        });
    }

    let max_delta_n = rows.iter().map(|r| r.delta_n.abs()).fold(0.0, f64::max);
    if max_delta_n == 0.0 {
        return Err(Error::UndistinguishableBranches(0.0));
    }

    let mut mu_shift = [0.0; 2];
    for (b, shift) in mu_shift.iter_mut().enumerate() {
        let excess: Vec<f64> = rows.iter().map(|r| r.weight * (r.zeroth + r.first[b])).collect();
        let response: Vec<f64> = rows.iter().map(|r| r.weight * r.response[b]).collect();
        *shift = -pairwise_sum(&excess) / pairwise_sum(&response);
    }

    let mut residual = 0.0_f64;
    let mut uncompensated = 0.0_f64;
    // the zeroth-order term is branch independent and drops out of left − right
    for r in &rows {
        let left = r.zeroth + r.first[0] + mu_shift[0] * r.response[0];
        let right = r.zeroth + r.first[1] + mu_shift[1] * r.response[1];
        residual = residual.max((left - right).abs());
        uncompensated = uncompensated.max((r.first[0] - r.first[1]).abs());
    }

    Ok(ImpurityResidual {
        residual: residual / max_delta_n,
        uncompensated: uncompensated / max_delta_n,
        chemical_potential_shift: mu_shift,
        mean_potential: u_bar,
        modes: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::test_support::aluminium;
    use crate::bcs::{occupation, Beta};
    use crate::greens::{delta_g_vs_at, g0};
    use crate::grid::ShellGridConfig;
    use crate::quadrature::GaussLegendreRule;
    use approx::assert_relative_eq;

    /// Numerical τ-integral of G0_A(0⁻ − τ) σz G0_B(τ) on a mapped line.
    fn numeric_kernel(k_a: f64, k_b: f64, material: &Material) -> Matrix2<f64> {
        let omega = material.gap();
        let scale = material.hbar() / omega;
        let rule = GaussLegendreRule::new(64).unwrap();
        let mut total = Matrix2::zeros();
        // τ > 0 and τ < 0 halves, τ = scale·s/(1−s)
        for sign in [1.0, -1.0] {
            for (s, w) in rule.mapped(0.0, 1.0) {
                let tau = sign * scale * s / (1.0 - s);
                let jac = scale / (1.0 - s).powi(2);
                let a = g0(k_a, -tau, material, Beta::Infinite).unwrap();
                let b = g0(k_b, tau, material, Beta::Infinite).unwrap();
                let prod = a.entries().map(|z| z.re) * SIGMA_Z * b.entries().map(|z| z.re);
                total += prod * (w * jac);
            }
        }
        total
    }

    #[test]
    fn closed_form_kernel_matches_numeric_integral() {
        let al = aluminium();
        let q_f = al.fermi_wavevector();
        for (ra, rb) in [(1.0, 1.0), (1.0002, 0.9997), (0.9999, 1.0004)] {
            let (ka, kb) = (ra * q_f, rb * q_f);
            let ea = quasiparticle_energy(ka, &al).unwrap().energy;
            let eb = quasiparticle_energy(kb, &al).unwrap().energy;
            let analytic = dyson_kernel(ea, eb, &al);
            let numeric = numeric_kernel(ka, kb, &al);
            let scale = analytic.abs().max();
            assert!((analytic - numeric).abs().max() < 1e-8 * scale, "{analytic} vs {numeric}");
        }
    }

    #[test]
    fn equal_energy_kernel_is_the_energy_derivative_of_g0() {
        // Z(E, E) = −∂G0(0⁻)/∂E: a uniform σz potential shifts E
        let al = aluminium();
        for r in [0.9995, 1.0, 1.0003] {
            let k = r * al.fermi_wavevector();
            let e = quasiparticle_energy(k, &al).unwrap().energy;
            let z = dyson_kernel(e, e, &al);
            let h = 1e-4 * al.gap();
            let g_at = |x: f64| {
                g0(al.wavevector_at_energy(x).unwrap(), -0.0, &al, Beta::Infinite)
                    .unwrap()
                    .entries()
                    .map(|c| c.re)
            };
            let derivative = (g_at(e + h) - g_at(e - h)) / (2.0 * h);
            assert!((z + derivative).abs().max() < 1e-6 * z.abs().max());
        }
    }

    #[test]
    fn kernel_slopes_match_finite_differences() {
        let al = aluminium();
        let (ea, eb) = (0.7 * al.gap(), -1.3 * al.gap());
        let h = 1e-5 * al.gap();
        let (da, db) = dyson_kernel_slopes(ea, eb, &al);
        let fa = (dyson_kernel(ea + h, eb, &al) - dyson_kernel(ea - h, eb, &al)) / (2.0 * h);
        let fb = (dyson_kernel(ea, eb + h, &al) - dyson_kernel(ea, eb - h, &al)) / (2.0 * h);
        assert!((da - fa).abs().max() < 1e-6 * fa.abs().max());
        assert!((db - fb).abs().max() < 1e-6 * fb.abs().max());
    }

    #[test]
    fn flow_terms_match_numeric_integral() {
        // ∫ [G0 σz δG_vs + δG_vs σz G0] dτ against −ℏ(q·v)(∂_A + ∂_B)Z
        let al = aluminium();
        let mode = Mode::up(1.0003 * al.fermi_wavevector() * Vec3::z()).unwrap();
        let vs = 0.8 * Vec3::new(0.2, 0.1, 0.9);
        let k = mode.wavevector.norm();
        let e = quasiparticle_energy(k, &al).unwrap().energy;
        let scale = al.hbar() / al.gap();
        let rule = GaussLegendreRule::new(64).unwrap();
        let mut numeric = Matrix2::zeros();
        for sign in [1.0, -1.0] {
            for (s, w) in rule.mapped(0.0, 1.0) {
                let tau = sign * scale * s / (1.0 - s);
                let jac = scale / (1.0 - s).powi(2);
                let re = |m: crate::greens::NambuMatrix| m.entries().map(|z| z.re);
                let g_out = re(g0(k, -tau, &al, Beta::Infinite).unwrap());
                let g_in = re(g0(k, tau, &al, Beta::Infinite).unwrap());
                let d_out = re(delta_g_vs_at(&mode, &vs, -tau, &al, Beta::Infinite).unwrap());
                let d_in = re(delta_g_vs_at(&mode, &vs, tau, &al, Beta::Infinite).unwrap());
                numeric += (g_out * SIGMA_Z * d_in + d_out * SIGMA_Z * g_in) * (w * jac);
            }
        }
        let (da, db) = dyson_kernel_slopes(e, e, &al);
        let analytic = (da + db) * (-al.hbar() * mode.wavevector.dot(&vs));
        assert!((analytic - numeric).abs().max() < 1e-7 * analytic.abs().max());
    }

    #[test]
    fn impurity_shift_is_a_chemical_potential_shift() {
        // δn from the zeroth-order term equals n(E + Ū) − n(E) to first order
        let al = aluminium();
        let u = 1e-3 * al.gap();
        let mode = Mode::up(1.0001 * al.fermi_wavevector() * Vec3::x()).unwrap();
        let qp = quasiparticle_energy(mode.wavevector.norm(), &al).unwrap();
        let correction = al.hbar() * u * dyson_kernel(qp.energy, qp.energy, &al)[(0, 0)];
        let shifted = Mode::up(al.wavevector_at_energy(qp.energy + u).unwrap() * Vec3::x()).unwrap();
        let exact = occupation(&shifted, &Vec3::zeros(), &al).unwrap().value
            - occupation(&mode, &Vec3::zeros(), &al).unwrap().value;
        assert_relative_eq!(correction, exact, max_relative = 1e-3);
    }

    #[test]
    fn matrix_element_forward_and_reproducibility() {
        let ens = ImpurityEnsemble::random(100, 1e-50, 1e-6, 7).unwrap();
        let q = Vec3::new(1e10, 0.0, 0.0);
        assert_relative_eq!(ens.matrix_element(&q, &q).re, ens.mean_potential(), max_relative = 1e-14);
        assert_eq!(ens, ImpurityEnsemble::random(100, 1e-50, 1e-6, 7).unwrap());
        assert_ne!(ens.positions(), ImpurityEnsemble::random(100, 1e-50, 1e-6, 8).unwrap().positions());
        assert!(ImpurityEnsemble::new(vec![Vec3::new(2.0, 0.0, 0.0)], 1.0, 1.0).is_err());
    }

    fn setup() -> (Material, BranchPair, ShellGrid) {
        let al = aluminium();
        let dv = 0.05 * al.critical_velocity() * Vec3::new(0.0, 0.0, 1.0);
        let branches = BranchPair::symmetric(dv, &al).unwrap();
        let grid = ShellGrid::new(ShellGridConfig::default(), dv, &al).unwrap();
        (al, branches, grid)
    }

    #[test]
    fn no_impurity_strength_gives_zero() {
        let (al, branches, grid) = setup();
        let ens = ImpurityEnsemble::random(100, 0.0, 1e-6, 1).unwrap();
        let r = impurity_first_order_residual(&grid, &ens, &branches, &al).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.uncompensated, 0.0);
    }

    #[test]
    fn single_impurity_cancels_anywhere() {
        let (al, branches, grid) = setup();
        for r in [Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.9, 0.5, 0.01)] {
            let ens = ImpurityEnsemble::new(vec![r * 1e-6], 1e-45, 1e-6).unwrap();
            let out = impurity_first_order_residual(&grid, &ens, &branches, &al).unwrap();
            assert!(out.residual < 1e-6, "{}", out.residual);
        }
    }

    #[test]
    fn random_ensemble_first_order_cancels() {
        let (al, branches, grid) = setup();
        // Ū ≈ 0.1Δ
        let strength = 0.1 * al.gap() * 1e-18 / 100.0;
        let ens = ImpurityEnsemble::random(100, strength, 1e-6, 42).unwrap();
        let out = impurity_first_order_residual(&grid, &ens, &branches, &al).unwrap();
        assert!(out.residual < 1e-6, "residual {}", out.residual);
        // without number conservation the first-order terms do not cancel
        assert!(out.uncompensated > 1e-3);
        assert_relative_eq!(out.chemical_potential_shift[0], out.mean_potential, max_relative = 1e-6);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let (al, branches, _) = setup();
        let coarse = ShellGrid::new(
            ShellGridConfig {
                energy_panels: 8,
                ..Default::default()
            },
            Vec3::z(),
            &al,
        )
        .unwrap();
        let ens = ImpurityEnsemble::random(10, 1e-45, 1e-6, 1).unwrap();
        assert!(matches!(
            impurity_first_order_residual(&coarse, &ens, &branches, &al),
            Err(Error::Resolution(_))
        ));
    }
}
