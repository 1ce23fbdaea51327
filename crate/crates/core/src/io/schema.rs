//! JSON descriptions of materials and devices, and the bundled library.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bcs::{solve_gap, Beta, GapEquation, Material, MaterialParams};
use crate::constants::{BCS_GAP_RATIO, BOLTZMANN};
use crate::error::{Error, Result};
use crate::junction::{
    Calibration, GoldenRuleCalibration, JunctionSpec, TunnelCalibration, DEFAULT_JUNCTION_WINDOW,
};
use crate::sizecalc::{DeviceSpec, Interval};

/// Relative spread applied to a golden-rule |T| when none is given.
const DEFAULT_GOLDEN_RULE_SPREAD: f64 = 0.25;

const BUNDLED_MATERIALS: [(&str, &str); 2] = [
    ("Al", include_str!("../../data/materials/al.json")),
    ("Nb", include_str!("../../data/materials/nb.json")),
];

const BUNDLED_DEVICES: [(&str, &str); 3] = [
    ("delft", include_str!("../../data/devices/delft.json")),
    ("berkeley", include_str!("../../data/devices/berkeley.json")),
    ("suny", include_str!("../../data/devices/suny.json")),
];

/// Debye temperatures (K) used only when a bundled material is referenced
/// by name with a gap source other than the coupling constant.
const BUNDLED_DEBYE_KELVIN: [(&str, f64); 2] = [("Al", 428.0), ("Nb", 275.0)];

/// Material description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub name: String,
    pub fermi_velocity_m_per_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_joule: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc_kelvin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debye_energy_joule: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensionless_coupling: Option<f64>,
    /// Free-text origin of each field, keyed by field name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl MaterialFile {
    /// Build the material, prefixing field names in errors with `prefix`.
    pub fn resolve(&self, prefix: &str) -> Result<Material> {
        let field = |name: &str| format!("{prefix}{name}");
        positive(&field("fermi_velocity_m_per_s"), self.fermi_velocity_m_per_s)?;
        for (name, value) in [
            ("gap_joule", self.gap_joule),
            ("tc_kelvin", self.tc_kelvin),
            ("debye_energy_joule", self.debye_energy_joule),
            ("dimensionless_coupling", self.dimensionless_coupling),
        ] {
            if let Some(v) = value {
                positive(&field(name), v)?;
            }
        }

        let sources = [self.gap_joule, self.tc_kelvin, self.dimensionless_coupling]
            .iter()
            .filter(|s| s.is_some())
            .count();
        if sources != 1 {
            return Err(Error::schema(
                field("gap_joule"),
                format!("exactly one of gap_joule, tc_kelvin, dimensionless_coupling is required, found {sources}"),
            ));
        }

        let debye = match self.debye_energy_joule {
            Some(d) => d,
            None => match BUNDLED_DEBYE_KELVIN.iter().find(|(n, _)| *n == self.name) {
                Some((_, theta)) if self.dimensionless_coupling.is_none() => BOLTZMANN * theta,
                _ => {
                    return Err(Error::schema(
                        field("debye_energy_joule"),
                        "required for this material and gap source",
                    ))
                }
            },
        };

        let gap = if let Some(g) = self.gap_joule {
            g
        } else if let Some(tc) = self.tc_kelvin {
            BCS_GAP_RATIO * BOLTZMANN * tc
        } else {
            let coupling = self.dimensionless_coupling.unwrap_or_default();
            let eq = GapEquation::new(coupling, debye).map_err(|e| Error::schema(field("dimensionless_coupling"), e.to_string()))?;
            solve_gap(Beta::Infinite, &eq)?
        };

        Material::new(MaterialParams::free_electron(&self.name, self.fermi_velocity_m_per_s, gap, debye))
            .map_err(|e| Error::schema(field("gap_joule"), e.to_string()))
    }
}

/// Tunnel-junction description embedded in a device file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionFile {
    /// "explicit", "golden_rule" or "uncalibrated".
    pub calibration: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_amp_joule: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_amp_range_joule: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_difference_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_gaps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_resistance_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction_area_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_spread: Option<f64>,
    #[serde(default)]
    pub note: String,
}

impl JunctionFile {
    pub fn resolve(&self, material: &Material) -> Result<JunctionSpec> {
        let window = self.window_gaps.unwrap_or(DEFAULT_JUNCTION_WINDOW);
        positive("junction.window_gaps", window)?;
        let phase = self.phase_difference_rad.unwrap_or(0.0);
        finite("junction.phase_difference_rad", phase)?;
        let tagged = |field: &'static str| move |e: Error| Error::schema(format!("junction.{field}"), e.to_string());

        let spec = match self.calibration.as_str() {
            "explicit" => {
                let t_amp = required("junction.t_amp_joule", self.t_amp_joule)?;
                let mode_count = required("junction.mode_count", self.mode_count)?;
                nonnegative("junction.t_amp_joule", t_amp)?;
                nonnegative("junction.mode_count", mode_count)?;
                let spec = JunctionSpec {
                    t_amp,
                    t_amp_range: self.t_amp_range_joule,
                    mode_count,
                    phase_difference: phase,
                    window,
                    calibration: Calibration::Explicit,
                    calibration_note: self.note.clone(),
                };
                spec.validate().map_err(tagged("t_amp_range_joule"))?;
                spec
            }
            "golden_rule" => {
                for (name, v) in [("t_amp_joule", self.t_amp_joule), ("mode_count", self.mode_count)] {
                    if v.is_some() {
                        return Err(Error::schema(
                            format!("junction.{name}"),
                            "derived by the golden-rule calibration, remove it",
                        ));
                    }
                }
                let calibration = GoldenRuleCalibration {
                    normal_resistance: required("junction.normal_resistance_ohm", self.normal_resistance_ohm)?,
                    junction_area: required("junction.junction_area_m2", self.junction_area_m2)?,
                    window,
                    relative_spread: self.relative_spread.unwrap_or(DEFAULT_GOLDEN_RULE_SPREAD),
                };
                let mut spec = calibration.calibrate(material).map_err(tagged("normal_resistance_ohm"))?;
                spec.phase_difference = phase;
                if !self.note.is_empty() {
                    spec.calibration_note = format!("{}; {}", self.note, spec.calibration_note);
                }
                spec
            }
            "uncalibrated" => JunctionSpec {
                t_amp: 0.0,
                t_amp_range: None,
                mode_count: 0.0,
                phase_difference: phase,
                window,
                calibration: Calibration::Uncalibrated,
                calibration_note: self.note.clone(),
            },
            other => {
                return Err(Error::schema(
                    "junction.calibration",
                    format!("expected explicit, golden_rule or uncalibrated, got `{other}`"),
                ))
            }
        };
        Ok(spec)
    }
}

/// Device description as stored on disk. `material` is either the name of
/// a bundled material or an inline material object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub name: String,
    pub material: Value,
    pub loop_length_m: f64,
    pub enclosed_area_m2: f64,
    #[serde(rename = "persistent_current_diff_A", default, skip_serializing_if = "Option::is_none")]
    pub persistent_current_diff: Option<f64>,
    #[serde(rename = "persistent_current_diff_A_range", default, skip_serializing_if = "Option::is_none")]
    pub persistent_current_diff_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction: Option<JunctionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_modes: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl DeviceFile {
    pub fn resolve(&self) -> Result<DeviceSpec> {
        let material = match &self.material {
            Value::String(name) => bundled_material(name)?,
            inline @ Value::Object(_) => serde_json::from_value::<MaterialFile>(inline.clone())
                .map_err(|e| Error::schema("material", e.to_string()))?
                .resolve("material.")?,
            _ => return Err(Error::schema("material", "expected a material name or an inline object")),
        };

        positive("loop_length_m", self.loop_length_m)?;
        positive("enclosed_area_m2", self.enclosed_area_m2)?;
        let current = match (self.persistent_current_diff, self.persistent_current_diff_range) {
            (Some(i), None) => {
                nonnegative("persistent_current_diff_A", i)?;
                Interval::point(i)
            }
            (None, Some([lo, hi])) => {
                nonnegative("persistent_current_diff_A_range", lo)?;
                finite("persistent_current_diff_A_range", hi)?;
                Interval::new(lo, hi).map_err(|e| Error::schema("persistent_current_diff_A_range", e.to_string()))?
            }
            _ => {
                return Err(Error::schema(
                    "persistent_current_diff_A",
                    "exactly one of persistent_current_diff_A, persistent_current_diff_A_range is required",
                ))
            }
        };

        let mut device = DeviceSpec::new(&self.name, material, self.loop_length_m, self.enclosed_area_m2, current)
            .map_err(|e| Error::schema("device", e.to_string()))?;
        if let Some(junction) = &self.junction {
            let spec = junction.resolve(&device.material)?;
            device = device.with_junction(spec);
        }
        if let Some(n) = self.total_modes {
            device = device
                .with_total_modes(n)
                .map_err(|e| Error::schema("total_modes", e.to_string()))?;
        }
        Ok(device)
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::schema(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::schema(field, format!("must be positive, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<f64> {
    finite(field, v)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::schema(field, format!("must be nonnegative, got {v}")))
    }
}

fn required(field: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::schema(field, "missing"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|cause| Error::Parse {
        path: origin.to_path_buf(),
        cause,
    })
}

fn bundled_origin(file: &str) -> PathBuf {
    PathBuf::from(format!("<bundled>/{file}.json"))
}

pub fn parse_material(text: &str, origin: &Path) -> Result<Material> {
    parse::<MaterialFile>(text, origin)?.resolve("")
}

pub fn load_material(path: &Path) -> Result<Material> {
    parse_material(&read(path)?, path)
}

pub fn parse_device(text: &str, origin: &Path) -> Result<DeviceSpec> {
    parse::<DeviceFile>(text, origin)?.resolve()
}

/// Read, validate and resolve a device file.
pub fn load_device(path: &Path) -> Result<DeviceSpec> {
    parse_device(&read(path)?, path)
}

pub fn bundled_material_names() -> Vec<&'static str> {
    BUNDLED_MATERIALS.iter().map(|(n, _)| *n).collect()
}

pub fn bundled_material(name: &str) -> Result<Material> {
    let (key, text) = BUNDLED_MATERIALS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownMaterial(name.to_string()))?;
    parse_material(text, &bundled_origin(&key.to_ascii_lowercase()))
}

pub fn bundled_device_names() -> Vec<&'static str> {
    BUNDLED_DEVICES.iter().map(|(n, _)| *n).collect()
}

/// Source text of a bundled device file.
pub fn bundled_device_json(name: &str) -> Option<&'static str> {
    BUNDLED_DEVICES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| *text)
}

pub fn bundled_device(name: &str) -> Result<DeviceSpec> {
    let text = bundled_device_json(name)
        .ok_or_else(|| Error::Configuration(format!("no bundled device named `{name}`")))?;
    parse_device(text, &bundled_origin(&name.to_ascii_lowercase()))
}
