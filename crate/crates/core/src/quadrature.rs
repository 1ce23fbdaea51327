//! Gauss–Legendre drivers: fixed, composite, adaptive and whole-line rules.
//!
//! Nodes and weights come from `gauss-quad`; everything here is about how
//! they are laid out over an interval.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// An n-point Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussLegendreRule {
    pub fn new(points: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(points)
            .ok_or_else(|| Error::Configuration("Gauss-Legendre rule needs at least one node".into()))?;
        let mut pairs = GaussLegendre::new(degree).as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { pairs })
    }

    pub fn points(&self) -> usize {
        self.pairs.len()
    }

    /// Node/weight pairs on [-1, 1], nodes ascending.
    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let terms: Vec<f64> = self.mapped(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Same rule repeated on `panels` equal sub-intervals.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let parts: Vec<f64> = (0..panels)
            .map(|p| {
                let lo = a + width * p as f64;
                let hi = if p + 1 == panels { b } else { lo + width };
                self.integrate(lo, hi, &mut f)
            })
            .collect();
        pairwise_sum(&parts)
    }

    /// Recursive bisection until each panel agrees with its two halves to `tol`
    /// (absolute, scaled by the panel's share of the interval).
    pub fn adaptive<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, tol: f64, mut f: F) -> Result<f64> {
        const MAX_DEPTH: usize = 40;
        let whole = self.integrate(a, b, &mut f);
        // round-off floor relative to the whole integral, not to each panel
        let tol = tol.max(8.0 * f64::EPSILON * whole.abs());
        self.adaptive_step(a, b, whole, tol, 0, MAX_DEPTH, &mut f)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive_step<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        max_depth: usize,
        f: &mut F,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.integrate(a, mid, &mut *f);
        let right = self.integrate(mid, b, &mut *f);
        let refined = left + right;
        // panels narrower than a few ulps of their position cannot be refined
        let unresolvable = (b - a).abs() <= 1e3 * f64::EPSILON * mid.abs();
        if (refined - whole).abs() <= tol || unresolvable {
            return Ok(refined);
        }
        if depth >= max_depth {
            return Err(Error::Convergence {
                what: format!("adaptive quadrature on [{a:e}, {b:e}]"),
                iterations: depth,
            });
        }
        let l = self.adaptive_step(a, mid, left, 0.5 * tol, depth + 1, max_depth, f)?;
        let r = self.adaptive_step(mid, b, right, 0.5 * tol, depth + 1, max_depth, f)?;
        Ok(l + r)
    }

    /// Integral over the whole real line with x = center + scale·tan(πu/2).
    ///
    /// Integrands that decay like a power of 1/|x| beyond `scale` become smooth
    /// in u, so a modest composite rule reaches round-off.
    pub fn real_line<F: FnMut(f64) -> f64>(&self, center: f64, scale: f64, panels: usize, mut f: F) -> f64 {
        self.composite(-1.0, 1.0, panels, |u| {
            let angle = FRAC_PI_2 * u;
            let (s, c) = angle.sin_cos();
            let jacobian = scale * FRAC_PI_2 / (c * c);
            f(center + scale * s / c) * jacobian
        })
    }
}

/// Pairwise (cascade) summation; fixed association order so results are
/// reproducible regardless of how the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if terms.len() <= BLOCK {
        return terms.iter().sum();
    }
    let (lo, hi) = terms.split_at(terms.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}
