//! Experiment configuration (TOML) with dotted-key overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelKind, ModelParams, TauLaw};
use crate::error::{Error, Result};
use crate::random::ShellProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Run,
    SweepAlpha,
    VerifyLemmas,
    LpChecks,
    FitRadius,
    #[serde(rename = "small_data_3d")]
    SmallData3d,
    DampedEuler,
    ShearFlow,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Run => "run",
            Scenario::SweepAlpha => "sweep_alpha",
            Scenario::VerifyLemmas => "verify_lemmas",
            Scenario::LpChecks => "lp_checks",
            Scenario::FitRadius => "fit_radius",
            Scenario::SmallData3d => "small_data_3d",
            Scenario::DampedEuler => "damped_euler",
            Scenario::ShearFlow => "shear_flow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dim: 2, n: 64 }
    }
}

/// Initial vorticity. Seeds left out fall back to the top-level `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    TaylorGreen,
    #[serde(rename = "analytic_2d")]
    /// Random 2D data with modulus `e^{-rate |k|}`, scaled to `||omega|| = l2`.
    Analytic2d {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        rate: f64,
        l2: f64,
    },
    #[serde(rename = "random_3d")]
    /// Random divergence-free 3D data on `|k| <= band`.
    Random3d {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        profile: ShellProfile,
        band: f64,
        l2: f64,
    },
    BardosTiti,
    Snapshot { path: PathBuf },
    Zero,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Analytic2d {
            seed: None,
            rate: 0.3,
            l2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub sample_every: f64,
    pub keep_snapshots: bool,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec {
            t_end: 1.0,
            dt: None,
            sample_every: 0.1,
            keep_snapshots: false,
        }
    }
}

fn default_alphas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}

fn quarter() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Fixed analytic shift; `None` uses `delta_fraction * min(fit radius, law-B floor)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "quarter")]
    pub delta_fraction: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            alphas: default_alphas(),
            delta: None,
            delta_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSpec {
    pub n_2d: usize,
    pub band_2d: usize,
    pub seeds_2d: usize,
    pub n_3d: usize,
    pub band_3d: usize,
    pub seeds_3d: usize,
    /// Fields compared against the triad-sum oracle, per dimension.
    pub oracle_seeds: usize,
    pub oracle_band_2d: usize,
    pub oracle_band_3d: usize,
    /// Fields re-evaluated at doubled resolution.
    pub refinement_seeds: usize,
    pub alpha_2d: f64,
    pub alpha_3d: f64,
    /// `None` uses `0.5 / band`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub s: f64,
    pub tolerance: f64,
}

impl Default for LemmaSpec {
    fn default() -> Self {
        LemmaSpec {
            n_2d: 32,
            band_2d: 10,
            seeds_2d: 200,
            n_3d: 32,
            band_3d: 8,
            seeds_3d: 100,
            oracle_seeds: 50,
            oracle_band_2d: 10,
            oracle_band_3d: 4,
            refinement_seeds: 5,
            alpha_2d: 0.5,
            alpha_3d: 1.0,
            tau: None,
            s: 1.0,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpSpec {
    pub n_2d: usize,
    pub n_3d: usize,
    pub band: usize,
    pub pairs: usize,
    pub bernstein_orders: Vec<f64>,
}

impl Default for LpSpec {
    fn default() -> Self {
        LpSpec {
            n_2d: 64,
            n_3d: 32,
            band: 10,
            pairs: 50,
            bernstein_orders: vec![0.0, 1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub n: usize,
    pub taus: Vec<f64>,
    pub s_values: Vec<f64>,
    pub tolerance: f64,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            n: 64,
            taus: vec![0.1, 0.3, 0.7],
            s_values: vec![1.0, 2.0],
            tolerance: 1e-3,
        }
    }
}

fn half() -> f64 {
    0.5
}

/// Constants fixed by the user rather than measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    /// Damped Euler constant; `None` measures it from the trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bar: Option<f64>,
    /// Small-data scaling: `kappa ||omega_0|| = smallness * nu alpha / (2 (1 + alpha^2))`.
    #[serde(default = "half")]
    pub smallness: f64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        CalibrationSpec {
            c_bar: None,
            smallness: 0.5,
        }
    }
}

fn default_model() -> ModelParams {
    ModelParams::new(ModelKind::SecondGrade, 0.1, 0.5).with_law(TauLaw::Frozen)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Initial Gevrey radius; `None` uses `0.9` times the fitted radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_model")]
    pub model: ModelParams,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub lemmas: LemmaSpec,
    #[serde(default)]
    pub lp: LpSpec,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub calibration: CalibrationSpec,
}

impl ExperimentConfig {
    /// All defaults for `scenario`.
    pub fn new(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("scenario = \"{}\"\n", scenario.name()), &[]).expect("defaults deserialize")
    }

    /// Parses `text`, applies `overrides`, then fills what is left from the
    /// scenario preset (see [`preset`]) and the field defaults.
    pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let scenario = table
            .get("scenario")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Config("missing string field `scenario`".into()))?
            .to_string();
        let mut merged: toml::Table = toml::from_str(preset(&scenario)).expect("preset parses");
        merge(&mut merged, table);
        // A partial [model] table is completed from the default model.
        if let Some(model) = merged.get_mut("model").and_then(|m| m.as_table_mut()) {
            let base = toml::Table::try_from(default_model()).map_err(|e| Error::Config(e.to_string()))?;
            for (k, v) in base {
                model.entry(k).or_insert(v);
            }
        }
        toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text, overrides)
    }

    /// Canonical text: every field written out in declaration order.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Seed for the initial data.
    pub fn data_seed(&self) -> u64 {
        match self.initial {
            InitialSpec::Analytic2d { seed: Some(s), .. } | InitialSpec::Random3d { seed: Some(s), .. } => s,
            _ => self.seed,
        }
    }
}

/// Scenario defaults, as TOML, applied under the user's settings.
pub fn preset(scenario: &str) -> &'static str {
    match scenario {
        "sweep_alpha" => "[time]\nt_end = 2.0\nsample_every = 0.1\n",
        "small_data_3d" => {
            "[grid]\ndim = 3\nn = 32\n\
             [model]\nmodel = \"second_grade\"\nnu = 1.0\nalpha = 1.0\ntau_law = \"D_small_data\"\n\
             [initial]\nkind = \"random_3d\"\nband = 10.0\nl2 = 1.0\nprofile = { kind = \"exponential\", amplitude = 1.0, rate = 1.0, s = 1.0 }\n\
             [time]\nt_end = 5.0\ndt = 1e-2\nsample_every = 0.25\n"
        }
        "damped_euler" => {
            "[model]\nmodel = \"damped_euler\"\nnu = 0.5\nalpha = 0.0\ntau_law = \"frozen\"\n\
             [time]\nt_end = 10.0\nsample_every = 0.5\n"
        }
        "shear_flow" => {
            "[grid]\ndim = 3\nn = 32\n\
             [model]\nmodel = \"damped_euler\"\nnu = 0.0\nalpha = 0.0\ntau_law = \"frozen\"\n\
             [initial]\nkind = \"bardos_titi\"\n\
             [time]\nt_end = 2.0\ndt = 5e-3\nsample_every = 0.4\n"
        }
        _ => "",
    }
}

/// Recursive merge; `initial` is replaced as a whole since its fields depend on `kind`.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if k != "initial" => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sets `a.b.c = value` in `table`; the value is read as TOML and kept as a
/// string if that fails.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
