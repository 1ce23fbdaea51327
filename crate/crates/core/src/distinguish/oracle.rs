//! Exact success probability for small explicit ensembles by enumerating
//! every occupation bit-string of the selected modes.

use super::ModeEnsembleSpec;
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// Largest selection the 2ⁿ enumeration accepts.
pub const MAX_ORACLE_MODES: usize = 20;

fn selected(spec: &ModeEnsembleSpec, selection: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = spec
        .occupations
        .as_ref()
        .ok_or_else(|| Error::domain("exact oracle needs explicit per-mode occupations"))?;
    if selection.len() > MAX_ORACLE_MODES {
        return Err(Error::Capacity(format!(
            "{} selected modes exceeds the enumeration limit of {MAX_ORACLE_MODES}",
            selection.len()
        )));
    }
    let mut seen = vec![false; a.len()];
    for &i in selection {
        if i >= a.len() {
            return Err(Error::domain(format!("mode index {i} out of range (N = {})", a.len())));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::domain(format!("mode index {i} selected twice")));
        }
    }
    Ok((
        selection.iter().map(|&i| a[i]).collect(),
        selection.iter().map(|&i| b[i]).collect(),
    ))
}

fn string_probability(occ: &[f64], bits: usize) -> f64 {
    occ.iter()
        .enumerate()
        .map(|(i, &p)| if bits >> i & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// ½ + ¼·Σ_s |P_A(s) − P_B(s)| over all 2ⁿ occupation strings of the selection.
pub fn exact_trace_distance_oracle(spec: &ModeEnsembleSpec, selection: &[usize]) -> Result<f64> {
    let (a, b) = selected(spec, selection)?;
    let terms: Vec<f64> = (0..1usize << a.len())
        .map(|s| (string_probability(&a, s) - string_probability(&b, s)).abs())
        .collect();
    Ok(0.5 + 0.25 * pairwise_sum(&terms))
}

/// Same measure for the first-order expansion of P_A − P_B about branch B:
/// ΔP(s) = Σ_i δn_i·(±1)·Π_{j≠i} P_B,j(s_j). It differs from the exact
/// value only at second order in the δn.
pub fn p_n_first_order(spec: &ModeEnsembleSpec, selection: &[usize]) -> Result<f64> {
    let (a, b) = selected(spec, selection)?;
    let terms: Vec<f64> = (0..1usize << a.len())
        .map(|s| {
            let diff: f64 = (0..a.len())
                .map(|i| {
                    let sign = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
                    let rest: f64 = (0..b.len())
                        .filter(|&j| j != i)
                        .map(|j| if s >> j & 1 == 1 { b[j] } else { 1.0 - b[j] })
                        .product();
                    sign * (a[i] - b[i]) * rest
                })
                .sum();
            diff.abs()
        })
        .collect();
    Ok(0.5 + 0.25 * pairwise_sum(&terms))
}
