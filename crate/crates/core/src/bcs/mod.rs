//! Zero-temperature BCS ground state: material parameters, the gap
//! equation, quasiparticle energetics and mode occupation numbers in the
//! two circulating-current branches.
//!
//! All quantities are SI. Wavevectors are laboratory-frame wavevectors
//! q = k + m·v_s/ℏ, so modes can be compared between branches carrying
//! different superflow.

mod gap;
mod material;
mod occupation;

pub use gap::{solve_gap, Beta, GapEquation, GAP_RESIDUAL_TOL};
pub use material::{Material, MaterialParams};
pub use occupation::{
    lab_frame_wavevector, occupation, occupation_difference, pair_occupation_difference,
    perturbation_parameter, quasiparticle_energy, BranchPair, Mode, Occupation, Quasiparticle, Spin,
    PAIRING_TOLERANCE,
};

/// Cartesian 3-vector (wavevectors in 1/m, velocities in m/s).
pub type Vec3 = nalgebra::Vector3<f64>;
