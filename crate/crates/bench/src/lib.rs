//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fluxsize_core::io::{bundled_material, device_files_in, random_ensemble};
use fluxsize_core::{Material, ModeEnsembleSpec, RunConfig};

pub const SEED: u64 = 7;

pub fn aluminium() -> Material {
    bundled_material("Al").expect("Al is bundled")
}

/// Config covering every bundled device file.
pub fn bundled_table() -> RunConfig {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/devices");
    RunConfig {
        devices: device_files_in(&dir).expect("bundled devices are readable"),
        ..RunConfig::default()
    }
}

/// Random explicit ensembles of `modes` modes each.
pub fn ensembles(count: usize, modes: usize) -> Vec<ModeEnsembleSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count).map(|_| random_ensemble(modes, &mut rng)).collect()
}

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}
