//! Device and material files, the end-to-end pipeline, report emission and
//! the self-check suite.

mod report;
mod schema;
mod spectrum;
mod verify;

pub use report::{
    device_files_in, format_number, render, run_pipeline, run_table, to_csv, to_json, write_csv, JunctionReport,
    OutputFormat, RunConfig, SizeReport, CSV_HEADER,
};
pub use schema::{
    bundled_device, bundled_device_json, bundled_device_names, bundled_material, bundled_material_names, load_device,
    load_material, parse_device, parse_material, DeviceFile, JunctionFile, MaterialFile,
};
pub use spectrum::{emit_spectrum, Spectrum, SpectrumConfig, SpectrumRow};
pub use verify::{
    log_log_slope, ensemble_gap_slope, random_ensemble, scaled_ensemble, verify, Check, VerificationReport,
    VerifyOptions, IMPURITY_FLOOR,
};
