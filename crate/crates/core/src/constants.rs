//! Physical constants (SI, CODATA 2018 exact/recommended values).
//!
//! This is the only place these numbers are written down. Everything else
//! reads them from here or from the copies carried by a [`Material`].
//!
//! [`Material`]: crate::bcs::Material

/// Elementary charge magnitude |e| in coulomb.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Electron rest mass in kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Bohr magneton in J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Weak-coupling BCS ratio Δ(0) / (k_B T_c).
pub const BCS_GAP_RATIO: f64 = 1.764;
