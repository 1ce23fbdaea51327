//! Branch distinguishability from n measured modes and the resulting
//! superposition size N/n_min.
//!
//! The branches are treated as product states over modes, each mode
//! occupied with probability n_i^A or n_i^B. Measuring a selection of modes
//! identifies the branch with probability ½ + ¼·‖P_A − P_B‖₁.

mod basis;
mod oracle;

pub use basis::{basis_optimality_check, haar_unitary, BasisOptimalityReport, DMatrix, MAX_D_DIMENSION};
pub use oracle::{exact_trace_distance_oracle, p_n_first_order, MAX_ORACLE_MODES};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Default measurement error tolerance δ.
pub const DEFAULT_PRECISION: f64 = 0.1;

/// Relative guard against ceil() jumping on a product that is an integer up
/// to round-off.
const CEIL_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    /// True when the linear estimate exceeded 1 and was capped.
    pub saturated: bool,
}

impl Probability {
    fn capped(raw: f64) -> Self {
        if raw > 1.0 {
            Self {
                value: 1.0,
                saturated: true,
            }
        } else {
            Self {
                value: raw,
                saturated: false,
            }
        }
    }
}

/// P_n = ½ + ½·Σ|δn_i|, an upper bound on the exact success probability.
pub fn p_n_linearized(selected_deltas: &[f64]) -> Result<Probability> {
    let mut sum = 0.0;
    for &d in selected_deltas {
        ensure_finite("occupation difference", d)?;
        if d.abs() > 1.0 {
            return Err(Error::domain(format!("|δn| = {} exceeds 1", d.abs())));
        }
        sum += d.abs();
    }
    Ok(Probability::capped(0.5 + 0.5 * sum))
}

/// P̄_n = ½ + n·ΔN_tot/(2N), averaged over all choices of n out of N modes.
pub fn p_n_average(n: f64, total_modes: f64, delta_n_tot: f64) -> Result<Probability> {
    check_count("n", n)?;
    check_count("N", total_modes)?;
    ensure_finite("delta_n_tot", delta_n_tot)?;
    if n > total_modes {
        return Err(Error::domain(format!("cannot select {n} of {total_modes} modes")));
    }
    if total_modes == 0.0 {
        return Ok(Probability::capped(0.5));
    }
    Ok(Probability::capped(0.5 + n * delta_n_tot / (2.0 * total_modes)))
}

fn check_count(label: &str, v: f64) -> Result<()> {
    ensure_finite(label, v)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::domain(format!("{label} must be a nonnegative integer, got {v}")));
    }
    Ok(())
}

/// The modes of a system and how the two branches occupy them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnsembleSpec {
    pub total_modes: f64,
    pub delta_n_tot: f64,
    pub precision: f64,
    /// Per-mode occupations (n^A, n^B) when given explicitly.
    pub occupations: Option<(Vec<f64>, Vec<f64>)>,
}

impl ModeEnsembleSpec {
    pub fn summary(total_modes: f64, delta_n_tot: f64, precision: f64) -> Result<Self> {
        check_count("N", total_modes)?;
        ensure_finite("delta_n_tot", delta_n_tot)?;
        if delta_n_tot < 0.0 || delta_n_tot > total_modes {
            return Err(Error::domain(format!(
                "ΔN_tot = {delta_n_tot} must lie in [0, N = {total_modes}]"
            )));
        }
        check_precision(precision)?;
        Ok(Self {
            total_modes,
            delta_n_tot,
            precision,
            occupations: None,
        })
    }

    pub fn explicit(a: Vec<f64>, b: Vec<f64>, precision: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::domain(format!(
                "branch occupation lists differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        for &n in a.iter().chain(&b) {
            ensure_finite("occupation", n)?;
            if !(0.0..=1.0).contains(&n) {
                return Err(Error::domain(format!("occupation {n} outside [0, 1]")));
            }
        }
        check_precision(precision)?;
        let delta_n_tot = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        Ok(Self {
            total_modes: a.len() as f64,
            delta_n_tot,
            precision,
            occupations: Some((a, b)),
        })
    }

    pub fn deltas(&self) -> Option<Vec<f64>> {
        self.occupations
            .as_ref()
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
    }
}

fn check_precision(delta: f64) -> Result<()> {
    ensure_finite("precision", delta)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("precision δ must lie in (0, ½), got {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub n_min: f64,
    /// N / n_min.
    pub size: f64,
}

/// n_min = ⌈(1 − 2δ)·N/ΔN_tot⌉ and size = N/n_min.
pub fn n_min_and_size(spec: &ModeEnsembleSpec) -> Result<SizeEstimate> {
    if spec.delta_n_tot <= 0.0 {
        return Err(Error::UndistinguishableBranches(spec.delta_n_tot));
    }
    check_precision(spec.precision)?;
    let exact = (1.0 - 2.0 * spec.precision) * spec.total_modes / spec.delta_n_tot;
    let n_min = guarded_ceil(exact).max(1.0);
    Ok(SizeEstimate {
        n_min,
        size: spec.total_modes / n_min,
    })
}

/// Large-N limits: n_min/N → (1 − 2δ)/ΔN_tot and size → ΔN_tot/(1 − 2δ).
pub fn asymptotic_size(delta_n_tot: f64, precision: f64) -> Result<SizeEstimate> {
    if delta_n_tot <= 0.0 {
        return Err(Error::UndistinguishableBranches(delta_n_tot));
    }
    check_precision(precision)?;
    let fraction = (1.0 - 2.0 * precision) / delta_n_tot;
    Ok(SizeEstimate {
        n_min: fraction,
        size: 1.0 / fraction,
    })
}

fn guarded_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= CEIL_GUARD * x.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linearized_examples() {
        assert_eq!(p_n_linearized(&[]).unwrap().value, 0.5);
        assert_relative_eq!(p_n_linearized(&[0.2]).unwrap().value, 0.6, max_relative = 1e-15);
        assert_relative_eq!(p_n_linearized(&[0.2, -0.2]).unwrap().value, 0.7, max_relative = 1e-15);
        let sat = p_n_linearized(&[0.9, 0.8]).unwrap();
        assert_eq!(sat.value, 1.0);
        assert!(sat.saturated);
        assert!(p_n_linearized(&[1.5]).is_err());
    }

    #[test]
    fn average_examples() {
        assert_eq!(p_n_average(0.0, 1e6, 42.0).unwrap().value, 0.5);
        let p = p_n_average(1e6 / 50.0, 1e6, 50.0).unwrap();
        assert_eq!(p.value, 1.0);
        assert!(!p.saturated);
        assert_relative_eq!(p_n_average(19048.0, 1e6, 42.0).unwrap().value, 0.9, max_relative = 1e-4);
        assert!(p_n_average(11.0, 10.0, 1.0).is_err());
        assert!(p_n_average(2.5, 10.0, 1.0).is_err());
    }

    #[test]
    fn n_min_examples() {
        let s = n_min_and_size(&ModeEnsembleSpec::summary(1e6, 42.0, 0.1).unwrap()).unwrap();
        assert_eq!(s.n_min, 19048.0);
        assert_relative_eq!(s.size, 52.50, max_relative = 1e-3);

        let all = n_min_and_size(&ModeEnsembleSpec::summary(1000.0, 1000.0, 0.1).unwrap()).unwrap();
        assert_eq!(all.n_min, 1.0);
        assert_eq!(all.size, 1000.0);

        let none = ModeEnsembleSpec::summary(1000.0, 0.0, 0.1).unwrap();
        assert!(matches!(n_min_and_size(&none), Err(Error::UndistinguishableBranches(_))));
    }

    #[test]
    fn size_approaches_delta_n_as_precision_vanishes() {
        let (n, dn) = (1e9, 42.0);
        let small = n_min_and_size(&ModeEnsembleSpec::summary(n, dn, 1e-9).unwrap()).unwrap();
        assert_relative_eq!(small.size, dn, max_relative = 1e-6);
        assert!(small.size <= dn / (1.0 - 2e-9));
    }

    #[test]
    fn size_is_nondecreasing_in_precision() {
        let (n, dn) = (1e6, 42.0);
        let mut last = 0.0;
        for i in 1..100 {
            let delta = 0.005 * i as f64;
            let s = n_min_and_size(&ModeEnsembleSpec::summary(n, dn, delta).unwrap()).unwrap();
            assert!(s.size >= last);
            last = s.size;
        }
    }

    #[test]
    fn n_min_is_smallest_sufficient_count() {
        let (n, dn, delta) = (1e6, 42.0, 0.1);
        let s = n_min_and_size(&ModeEnsembleSpec::summary(n, dn, delta).unwrap()).unwrap();
        assert!(p_n_average(s.n_min, n, dn).unwrap().value >= 1.0 - delta);
        assert!(p_n_average(s.n_min - 1.0, n, dn).unwrap().value < 1.0 - delta);
    }

    #[test]
    fn guarded_ceiling_absorbs_round_off() {
        // (1 − 0.2)·1000/8 = 100 exactly in decimal
        let s = n_min_and_size(&ModeEnsembleSpec::summary(1000.0, 8.0, 0.1).unwrap()).unwrap();
        assert_eq!(s.n_min, 100.0);
    }

    #[test]
    fn asymptotic_limits() {
        let a = asymptotic_size(42.0, 0.1).unwrap();
        assert_relative_eq!(a.size, 52.5, max_relative = 1e-15);
        let finite = n_min_and_size(&ModeEnsembleSpec::summary(1e15, 42.0, 0.1).unwrap()).unwrap();
        assert_relative_eq!(finite.size, a.size, max_relative = 1e-9);
    }

    #[test]
    fn explicit_spec() {
        let s = ModeEnsembleSpec::explicit(vec![0.6, 0.5], vec![0.4, 0.5], 0.1).unwrap();
        assert_relative_eq!(s.delta_n_tot, 0.2, max_relative = 1e-15);
        assert!(ModeEnsembleSpec::explicit(vec![0.6], vec![0.4, 0.5], 0.1).is_err());
        assert!(ModeEnsembleSpec::explicit(vec![1.6], vec![0.4], 0.1).is_err());
        assert!(ModeEnsembleSpec::explicit(vec![0.6], vec![0.4], 0.5).is_err());
    }
}
