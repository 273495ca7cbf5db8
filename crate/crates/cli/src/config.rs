//! Scenario files: TOML sections, one scenario per file, with `FTL_` environment
//! overrides of the form FTL_<SECTION>_<KEY> (or FTL_<KEY> for top-level keys).

use crate::error::CliError;
use ftl_core::experiments::{atom_battery, Bands, StudyOptions};
use ftl_core::lattice::{make_grid, Grid};
use ftl_core::linalg::RealMatrix;
use ftl_core::potential::Potential;
use ftl_core::propagators::TrotterOptions;
use ftl_core::symplectic::QuadraticHamiltonian;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const ENV_PREFIX: &str = "FTL_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub amplitude: AmplitudeConfig,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_out() -> PathBuf {
    "out".into()
}

/// Either a named preset or explicit A, B, C blocks (rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        Self { preset: Some("harmonic".into()), a: None, b: None, c: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

fn one() -> usize {
    1
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { d: 1, n: 256, l: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    /// Times for flow, kernel and the studies.
    pub t: Vec<f64>,
    /// Interval and step of the exceptional-time scan.
    pub scan: [f64; 2],
    pub scan_step: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t: vec![1.0], scan: [-10.0, 10.0], scan_step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub schedule: Vec<usize>,
    pub window_width: f64,
    pub compact_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minfty1_stride: Option<usize>,
    /// Size of the seeded weak-* atom battery.
    pub atoms: usize,
    pub trotter: TrotterOptions,
    pub bands: Bands,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            schedule: vec![8, 16, 32, 64, 128],
            window_width: 1.0,
            compact_fraction: 0.5,
            minfty1_stride: None,
            atoms: 25,
            trotter: TrotterOptions::default(),
            bands: Bands::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSource {
    #[default]
    Trotter,
    Eigensolver,
    Metaplectic,
    Mehler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub provenance: KernelSource,
    /// Trotter step count.
    pub n: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { provenance: KernelSource::Trotter, n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    /// Radii as (m + ½)h for these m, largest first; ignored when `radii` is set.
    pub radii_cells: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        Self { x0: vec![1.0], y0: vec![0.0], radii_cells: vec![12.0, 10.0, 8.0, 6.0], radii: None }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            seed: 0,
            out: default_out(),
            hamiltonian: HamiltonianConfig::default(),
            potential: Potential::Zero,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            study: StudyConfig::default(),
            kernel: KernelConfig::default(),
            amplitude: AmplitudeConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses a scenario; errors carry the line, column and field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Parses `text` and then applies overrides from `vars` (name, value).
    pub fn parse_with_overrides<I>(text: &str, vars: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        Self::parse(text)?;
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut touched = Vec::new();
        for (name, raw) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            apply_override(&mut table, rest, &raw).map_err(|msg| CliError::Config(format!("{name}: {msg}")))?;
            touched.push(name);
        }
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("after overrides {touched:?}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.hamiltonian()?;
        self.grid()?;
        self.potential.validate(self.grid.d).map_err(|e| CliError::Config(format!("potential: {e}")))?;
        let s = &self.study;
        let b = &s.bands;
        let finite = [self.grid.l, s.window_width, s.compact_fraction, self.time.scan[0], self.time.scan[1], self.time.scan_step]
            .into_iter()
            .chain(self.time.t.iter().copied())
            .chain(self.amplitude.x0.iter().copied())
            .chain(self.amplitude.y0.iter().copied())
            .chain(self.amplitude.radii_cells.iter().copied())
            .chain(self.amplitude.radii.iter().flatten().copied())
            .chain(b.halving_ratio)
            .chain([b.final_factor, b.boundedness, b.weakstar_gap_ratio, b.sup_persistence, b.amplitude_rel]);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return bad("all numeric fields must be finite".into());
        }
        if self.time.t.is_empty() {
            return bad("time.t must list at least one time".into());
        }
        if s.atoms == 0 {
            return bad("study.atoms must be positive".into());
        }
        if self.kernel.n == 0 {
            return bad("kernel.n must be positive".into());
        }
        if self.amplitude.x0.len() != self.grid.d || self.amplitude.y0.len() != self.grid.d {
            return bad(format!("amplitude.x0 and amplitude.y0 must have {} entries", self.grid.d));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<QuadraticHamiltonian, CliError> {
        let d = self.grid.d;
        let cfg = &self.hamiltonian;
        let h = match (&cfg.preset, &cfg.a, &cfg.b, &cfg.c) {
            (Some(name), None, None, None) => QuadraticHamiltonian::preset(name, d),
            (None, Some(a), Some(b), Some(c)) => {
                let rows = |m: &Vec<Vec<f64>>| {
                    if m.iter().any(|r| r.len() != m.len()) {
                        Err(CliError::Config("hamiltonian blocks must be square".into()))
                    } else {
                        Ok(RealMatrix::from_rows(m))
                    }
                };
                QuadraticHamiltonian::new(rows(a)?, rows(b)?, rows(c)?)
            }
            _ => return Err(CliError::Config("hamiltonian: give either `preset` or all of `a`, `b`, `c`".into())),
        }
        .map_err(|e| CliError::Config(format!("hamiltonian: {e}")))?;
        if h.dim() != d {
            return Err(CliError::Config(format!("hamiltonian has dimension {}, grid.d = {d}", h.dim())));
        }
        Ok(h.with_potential(self.potential.clone()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        make_grid(self.grid.d, self.grid.n, self.grid.l).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn study_options(&self) -> StudyOptions {
        let s = &self.study;
        StudyOptions {
            compact_fraction: s.compact_fraction,
            window_width: s.window_width,
            minfty1_stride: s.minfty1_stride,
            atoms: atom_battery(self.seed, s.atoms),
            trotter: s.trotter,
            bands: s.bands,
            scenario: self.name.clone(),
            ..StudyOptions::default()
        }
    }
}

/// Sets `rest` (e.g. "GRID_N" or "SEED") in `table`, matching section and key names
/// case-insensitively; the value is read as a TOML literal, falling back to a string.
fn apply_override(table: &mut toml::Table, rest: &str, raw: &str) -> Result<(), String> {
    let value = parse_literal(raw);
    let lower = rest.to_ascii_lowercase();
    const SECTIONS: [&str; 7] = ["hamiltonian", "potential", "grid", "time", "study", "kernel", "amplitude"];
    for section in SECTIONS {
        let Some(key) = lower.strip_prefix(section).and_then(|k| k.strip_prefix('_')) else { continue };
        let entry = table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(inner) = entry else {
            return Err(format!("[{section}] is not a table"));
        };
        let name = inner.keys().find(|k| k.eq_ignore_ascii_case(key)).cloned().unwrap_or_else(|| match (section, key) {
            ("grid", "n") => "N".into(),
            ("grid", "l") => "L".into(),
            _ => key.to_string(),
        });
        inner.insert(name, value);
        return Ok(());
    }
    table.insert(lower, value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "ho-cos"
seed = 3

[hamiltonian]
preset = "harmonic"

[potential]
kind = "cosine"
amplitude = 1.0
frequency = [1.0]

[grid]
N = 64
L = 6.0

[time]
t = [1.0, 3.141592653589793]

[study]
schedule = [8, 16]
compact_fraction = 0.25

[study.bands]
boundedness = 2.5
"#;

    #[test]
    fn round_trip_is_stable() {
        let a = ScenarioConfig::parse(SAMPLE).unwrap();
        let emitted = a.emit();
        let b = ScenarioConfig::parse(&emitted).unwrap();
        assert_eq!(a, b);
        assert_eq!(emitted, b.emit());
        assert_eq!(a.study.bands.boundedness, 2.5);
        assert_eq!(a.study.bands.final_factor, Bands::default().final_factor);
        assert_eq!(ScenarioConfig::parse(&ScenarioConfig::default().emit()).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn presets_expand_to_exact_blocks() {
        let mut cfg = ScenarioConfig::default();
        cfg.hamiltonian.preset = Some("free".into());
        assert_eq!(cfg.hamiltonian().unwrap(), QuadraticHamiltonian::free(1));
        cfg.hamiltonian = HamiltonianConfig {
            preset: None,
            a: Some(vec![vec![2.0 * std::f64::consts::PI]]),
            b: Some(vec![vec![0.0]]),
            c: Some(vec![vec![2.0 * std::f64::consts::PI]]),
        };
        assert_eq!(cfg.hamiltonian().unwrap(), QuadraticHamiltonian::harmonic(1));
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = ScenarioConfig::parse("[grid]\nN = 64\nL = \"wide\"\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = ScenarioConfig::parse("[grid]\nN = 64\nL = 4.0\nwidth = 2\n").unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
        assert!(ScenarioConfig::parse("[grid]\nN = 63\nL = 4.0\n").is_err());
        assert!(ScenarioConfig::parse("[hamiltonian]\npreset = \"free\"\na = [[1.0]]\n").is_err());
        assert!(ScenarioConfig::parse("[time]\nt = [nan]\n").is_err());
    }

    #[test]
    fn environment_overrides() {
        let vars = [
            ("FTL_GRID_N", "128"),
            ("FTL_SEED", "9"),
            ("FTL_STUDY_COMPACT_FRACTION", "0.4"),
            ("FTL_KERNEL_PROVENANCE", "mehler"),
            ("HOME", "/ignored"),
        ]
        .map(|(k, v)| (k.to_string(), v.to_string()));
        let cfg = ScenarioConfig::parse_with_overrides(SAMPLE, vars).unwrap();
        assert_eq!(cfg.grid.n, 128);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.study.compact_fraction, 0.4);
        assert_eq!(cfg.kernel.provenance, KernelSource::Mehler);
        let err = ScenarioConfig::parse_with_overrides(SAMPLE, [("FTL_GRID_N".into(), "15".into())]).unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
    }
}
