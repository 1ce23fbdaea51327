//! Full device pipeline and its JSON/CSV reports.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distinguish::{asymptotic_size, n_min_and_size, ModeEnsembleSpec, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::grid::ShellGridConfig;
use crate::junction::{junction_total, Calibration};
use crate::sizecalc::{magnetic_moment_difference, reported_count, total_mode_change, DeviceSpec, Interval};

use super::schema::load_device;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub devices: Vec<PathBuf>,
    pub format: OutputFormat,
    /// Tolerated measurement error δ.
    pub precision: f64,
    pub grid: ShellGridConfig,
    pub seed: u64,
    pub trials: usize,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            devices: Vec::new(),
            format: OutputFormat::Json,
            precision: DEFAULT_PRECISION,
            grid: ShellGridConfig::default(),
            seed: 20_240_601,
            trials: 100,
            verbosity: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.precision > 0.0 && self.precision < 0.5) {
            return Err(Error::Configuration(format!(
                "precision δ must lie in (0, ½), got {}",
                self.precision
            )));
        }
        if self.trials == 0 {
            return Err(Error::Configuration("trial count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionReport {
    /// ΔN_T over the calibration range of |T|.
    pub delta_n_t: Interval,
    /// ΔN_T at the calibrated |T|.
    pub delta_n_t_point: f64,
    pub calibration: Calibration,
    pub calibration_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub device: String,
    pub material: String,
    pub fermi_velocity: f64,
    pub loop_length: f64,
    pub enclosed_area: f64,
    pub current_difference: Interval,
    /// ΔN_tot before rounding.
    pub delta_n_tot: Interval,
    /// ΔN_tot rounded to whole modes.
    pub delta_n_tot_reported: Interval,
    pub moment_joule_per_tesla: Interval,
    pub moment_bohr_magnetons: Interval,
    pub junction: Option<JunctionReport>,
    pub precision: f64,
    pub total_modes: Option<f64>,
    /// n_min, present when the total mode count is known.
    pub n_min: Option<Interval>,
    /// n_min/N; the large-N limit when N is unknown.
    pub n_min_fraction: Option<Interval>,
    /// N/n_min.
    pub size: Option<Interval>,
    /// Upper bound on the size, equal to ΔN_tot.
    pub size_bound: Interval,
    pub notes: Vec<String>,
}

/// Compose the size, moment, junction and distinguishability calculations
/// for one device. Component errors are tagged with the module that raised
/// them.
pub fn run_pipeline(device: &DeviceSpec, config: &RunConfig) -> Result<SizeReport> {
    config.validate().map_err(|e| e.in_module("device_io"))?;
    device.validate().map_err(|e| e.in_module("sizecalc"))?;

    let mut notes = Vec::new();
    if let Some(w) = device.area_warning() {
        notes.push(w);
    }

    let delta_n_tot = total_mode_change(device);
    let moment = magnetic_moment_difference(device);

    let junction = match &device.junction {
        Some(j) if j.calibration != Calibration::Uncalibrated => {
            let total = junction_total(j, &device.material).map_err(|e| e.in_module("junction"))?;
            notes.push("junction count is an order-of-magnitude estimate set by its calibration".into());
            Some(JunctionReport {
                delta_n_t: total.range,
                delta_n_t_point: total.point,
                calibration: j.calibration.clone(),
                calibration_note: j.calibration_note.clone(),
            })
        }
        Some(_) => {
            notes.push("junction present but uncalibrated: no junction count".into());
            None
        }
        None => None,
    };

    let (mut n_min, mut n_min_fraction, mut size) = (None, None, None);
    if delta_n_tot.lo <= 0.0 {
        notes.push(format!(
            "branches are indistinguishable at the low end of the current range (delta N_tot = {})",
            delta_n_tot.lo
        ));
    } else {
        let estimate = |dn: f64| -> Result<(Option<f64>, f64, f64)> {
            match device.total_modes {
                Some(total) => {
                    let s = n_min_and_size(&ModeEnsembleSpec::summary(total, dn, config.precision)?)?;
                    Ok((Some(s.n_min), s.n_min / total, s.size))
                }
                None => {
                    let s = asymptotic_size(dn, config.precision)?;
                    Ok((None, s.n_min, s.size))
                }
            }
        };
        let at_hi = estimate(delta_n_tot.hi).map_err(|e| e.in_module("distinguish"))?;
        let at_lo = estimate(delta_n_tot.lo).map_err(|e| e.in_module("distinguish"))?;
        n_min = at_hi.0.zip(at_lo.0).map(|(lo, hi)| Interval { lo, hi });
        n_min_fraction = Some(Interval { lo: at_hi.1, hi: at_lo.1 });
        size = Some(Interval { lo: at_lo.2, hi: at_hi.2 });
        if device.total_modes.is_none() {
            notes.push("total mode count unknown: n_min and size are large-N limits".into());
        }
    }

    Ok(SizeReport {
        device: device.name.clone(),
        material: device.material.name().to_string(),
        fermi_velocity: device.material.fermi_velocity(),
        loop_length: device.loop_length,
        enclosed_area: device.enclosed_area,
        current_difference: device.current_difference,
        delta_n_tot,
        delta_n_tot_reported: delta_n_tot.map(reported_count),
        moment_joule_per_tesla: moment.joule_per_tesla,
        moment_bohr_magnetons: moment.bohr_magnetons,
        junction,
        precision: config.precision,
        total_modes: device.total_modes,
        n_min,
        n_min_fraction,
        size,
        size_bound: delta_n_tot,
        notes,
    })
}

/// Load and run every device in `config.devices`, in order. A load or
/// pipeline error is tagged with the offending path.
pub fn run_table(config: &RunConfig) -> Result<Vec<SizeReport>> {
    config.validate()?;
    config
        .devices
        .par_iter()
        .map(|path| {
            let device = load_device(path).map_err(|e| tag_path(e, path))?;
            run_pipeline(&device, config).map_err(|e| tag_path(e, path))
        })
        .collect()
}

fn tag_path(err: Error, path: &Path) -> Error {
    match err {
        e @ (Error::Parse { .. } | Error::Io { .. }) => e,
        other => Error::Configuration(format!("{}: {other}", path.display())),
    }
}

/// Device files (*.json) in a directory, sorted by name.
pub fn device_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let io_err = |cause| Error::Io {
        path: dir.to_path_buf(),
        cause,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Decimal rendering shared by the CSV output: 17 significant digits, enough
/// to round-trip any f64.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: [&str; 21] = [
    "name",
    "material",
    "v_F_m_per_s",
    "L_m",
    "dI_p_lo_A",
    "dI_p_hi_A",
    "dmu_muB_lo",
    "dmu_muB_hi",
    "dN_tot_lo",
    "dN_tot_hi",
    "dN_tot_reported_lo",
    "dN_tot_reported_hi",
    "dN_T_lo",
    "dN_T_hi",
    "n_min_lo",
    "n_min_hi",
    "size_lo",
    "size_hi",
    "size_bound_lo",
    "size_bound_hi",
    "delta",
];

impl SizeReport {
    pub fn csv_record(&self) -> Vec<String> {
        let pair = |i: Interval| [format_number(i.lo), format_number(i.hi)];
        let optional = |i: Option<Interval>| i.map_or([String::new(), String::new()], pair);
        let mut row = vec![
            self.device.clone(),
            self.material.clone(),
            format_number(self.fermi_velocity),
            format_number(self.loop_length),
        ];
        row.extend(pair(self.current_difference));
        row.extend(pair(self.moment_bohr_magnetons));
        row.extend(pair(self.delta_n_tot));
        row.extend(pair(self.delta_n_tot_reported));
        row.extend(optional(self.junction.as_ref().map(|j| j.delta_n_t)));
        row.extend(optional(self.n_min));
        row.extend(optional(self.size));
        row.extend(pair(self.size_bound));
        row.push(format_number(self.precision));
        row
    }
}

pub fn write_csv<W: Write>(reports: &[SizeReport], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in reports {
        writer.write_record(r.csv_record())?;
    }
    writer.flush().map_err(|cause| Error::Io {
        path: PathBuf::from("<csv output>"),
        cause,
    })
}

pub fn to_csv(reports: &[SizeReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn to_json(reports: &[SizeReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn render(reports: &[SizeReport], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(reports),
        OutputFormat::Csv => to_csv(reports),
    }
}
