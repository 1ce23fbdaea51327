//! Superposition size of flux-qubit branches: BCS mode occupations, Fermi
//! shell integrals, junction corrections and branch distinguishability.

pub mod bcs;
pub mod constants;
pub mod distinguish;
pub mod error;
pub mod greens;
pub mod grid;
pub mod io;
pub mod junction;
pub mod quadrature;
pub mod sizecalc;

pub use bcs::{Material, MaterialParams, Mode, Vec3};
pub use distinguish::{ModeEnsembleSpec, SizeEstimate};
pub use error::{Error, Result};
pub use grid::{ShellGrid, ShellGridConfig};
pub use io::{load_device, run_pipeline, OutputFormat, RunConfig, SizeReport};
pub use junction::{Calibration, JunctionSpec};
pub use sizecalc::{DeviceSpec, Interval};
