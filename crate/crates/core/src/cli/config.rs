//! TOML scenario files.
//!
//! ```toml
//! [array]        # tx_side = 10, rx_side = 10, spacing = 0.5, p_t = 1.0, design = "conjugate"
//! [grid]         # l_count = 20, i_count = 20, start = -0.5, step = 0.05
//! [[targets]]    # nu_x, nu_y, snr_db (required; `targets = []` for none)
//! [disturbance]  # p, q, rho_x / rho_y as [modulus, phase_turns] pairs, shape = 2.0,
//!                # sigma_w2 = 1.0, psd_form = "product_of_sums"
//! [detector]     # p_fa = 1e-5, k_sec = 512, relative_loading = 1e-6, alpha_mode = "ls"
//! [agent]        # alpha = 0.5, gamma = 0.8, epsilon = 0.1, m_max = 10, epsilon_decay = false
//! [run]          # k_pulses = 50, mc_runs = 200, pd_window = 10, calibration_draws = 10000
//! ```
//!
//! A coefficient pair `[m, t]` stands for `m·e^{−j2πt}`. Every section except
//! `[[targets]]` may be omitted, and every key has the default shown.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentConfig;
use crate::array::{make_grid, ArrayGeometry, SpatialFrequency};
use crate::beamform::DesignMatrix;
use crate::clutter::{coefficient, DisturbanceModel, PsdForm, PAPER_COEFFS};
use crate::detector::{AlphaMode, DEFAULT_RELATIVE_LOADING};
use crate::error::{Error, Result};
use crate::sim::{Scenario, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub tx_side: usize,
    pub rx_side: usize,
    pub spacing: f64,
    pub p_t: f64,
    pub design: DesignMatrix,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            tx_side: 10,
            rx_side: 10,
            spacing: 0.5,
            p_t: 1.0,
            design: DesignMatrix::Conjugate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub l_count: usize,
    pub i_count: usize,
    pub start: f64,
    pub step: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            l_count: 20,
            i_count: 20,
            start: -0.5,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub nu_x: f64,
    pub nu_y: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    pub p: usize,
    pub q: usize,
    pub rho_x: Vec<[f64; 2]>,
    pub rho_y: Vec<[f64; 2]>,
    pub shape: f64,
    pub sigma_w2: f64,
    pub psd_form: PsdForm,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        let rho: Vec<[f64; 2]> = PAPER_COEFFS.iter().map(|&(m, t)| [m, t]).collect();
        Self {
            p: rho.len(),
            q: rho.len(),
            rho_x: rho.clone(),
            rho_y: rho,
            shape: 2.0,
            sigma_w2: 1.0,
            psd_form: PsdForm::ProductOfSums,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub p_fa: f64,
    pub k_sec: usize,
    pub relative_loading: f64,
    pub alpha_mode: AlphaMode,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            p_fa: 1e-5,
            k_sec: 512,
            relative_loading: DEFAULT_RELATIVE_LOADING,
            alpha_mode: AlphaMode::Ls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub k_pulses: usize,
    pub mc_runs: usize,
    pub pd_window: usize,
    pub calibration_draws: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            k_pulses: 50,
            mc_runs: 200,
            pd_window: 10,
            calibration_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub grid: GridSection,
    pub targets: Vec<TargetEntry>,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub run: RunSection,
}

impl ConfigFile {
    /// Canonical TOML text; floats use shortest round-trip formatting.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("cannot serialize config: {e}")))
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> Result<String> {
        let text = self.to_toml()?;
        Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Builds and validates the scenario; `src` is only used to locate offending keys.
    pub fn to_scenario(&self, src: Option<&str>) -> Result<Scenario<f64>> {
        let err = |section: &str, key: &str, e: Error| Error::Config {
            key: format!("{section}.{key}"),
            line: src.and_then(|s| line_of(s, section, key)),
            message: e.to_string(),
        };
        let a = &self.array;
        let geometry = ArrayGeometry::new(a.tx_side, a.rx_side, a.spacing).map_err(|e| err("array", "tx_side", e))?;
        let g = &self.grid;
        let grid = make_grid(g.l_count, g.i_count, g.start, g.step).map_err(|e| err("grid", "step", e))?;
        let d = &self.disturbance;
        if d.rho_x.len() != d.p {
            return Err(err("disturbance", "p", Error::validation(format!("p = {} but rho_x has {} entries", d.p, d.rho_x.len()))));
        }
        if d.rho_y.len() != d.q {
            return Err(err("disturbance", "q", Error::validation(format!("q = {} but rho_y has {} entries", d.q, d.rho_y.len()))));
        }
        let coeffs = |v: &[[f64; 2]]| v.iter().map(|&[m, t]| coefficient(m, t)).collect::<Vec<_>>();
        let disturbance = DisturbanceModel::new(coeffs(&d.rho_x), coeffs(&d.rho_y), d.shape, d.sigma_w2)
            .map_err(|e| err("disturbance", if d.shape > 1.0 { "sigma_w2" } else { "shape" }, e))?
            .with_psd_form(d.psd_form);
        let targets = self
            .targets
            .iter()
            .map(|t| Target {
                freq: SpatialFrequency::new(t.nu_x, t.nu_y),
                snr_db: t.snr_db,
            })
            .collect();
        let det = &self.detector;
        let r = &self.run;
        let sc = Scenario {
            geometry,
            grid,
            targets,
            disturbance,
            p_fa: det.p_fa,
            p_t: a.p_t,
            k_pulses: r.k_pulses,
            agent: self.agent,
            k_sec: det.k_sec,
            mc_runs: r.mc_runs,
            alpha_mode: det.alpha_mode,
            design: a.design,
            relative_loading: det.relative_loading,
            pd_window: r.pd_window,
            calibration_draws: r.calibration_draws,
        };
        sc.validate().map_err(|e| {
            let (section, key) = blame(&e);
            err(section, key, e)
        })?;
        Ok(sc)
    }
}

/// Best guess at the key behind a scenario validation error.
fn blame(e: &Error) -> (&'static str, &'static str) {
    let msg = e.to_string();
    let table: [(&str, &str, &str); 12] = [
        ("p_fa", "detector", "p_fa"),
        ("p_t", "array", "p_t"),
        ("k_pulses", "run", "k_pulses"),
        ("mc_runs", "run", "mc_runs"),
        ("pd_window", "run", "pd_window"),
        ("calibration_draws", "run", "calibration_draws"),
        ("relative_loading", "detector", "relative_loading"),
        ("learning rate", "agent", "alpha"),
        ("discount", "agent", "gamma"),
        ("epsilon", "agent", "epsilon"),
        ("m_max", "agent", "m_max"),
        ("target", "targets", "nu_x"),
    ];
    for (needle, section, key) in table {
        if msg.contains(needle) {
            return (section, key);
        }
    }
    if matches!(e, Error::DegenerateEstimator) {
        return ("detector", "k_sec");
    }
    ("run", "k_pulses")
}

/// 1-based line of `key = ...` inside `[section]` (or `[[section]]`).
pub fn line_of(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

fn line_at(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Parses configuration text into its canonical form.
pub fn parse_config_str(src: &str) -> Result<ConfigFile> {
    toml::from_str::<ConfigFile>(src).map_err(|e| {
        let message = e.message().to_string();
        let line = e.span().map(|s| line_at(src, s.start));
        let key = backticked(&message)
            .or_else(|| {
                line.and_then(|l| src.lines().nth(l - 1))
                    .and_then(|t| t.split_once('=').map(|(k, _)| k.trim().to_string()))
            })
            .unwrap_or_default();
        Error::Config { key, line, message }
    })
}

fn backticked(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    rest.split_once('`').map(|(k, _)| k.to_string())
}

/// A parsed file: canonical form plus the scenario it describes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub scenario: Scenario<f64>,
}

pub fn load_config_str(src: &str) -> Result<LoadedConfig> {
    let file = parse_config_str(src)?;
    let scenario = file.to_scenario(Some(src))?;
    Ok(LoadedConfig { file, scenario })
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config_str(&src)
}

/// The bundled reference configuration.
pub const PAPER_CFG: &str = include_str!("../../configs/paper.cfg");
