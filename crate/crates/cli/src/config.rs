//! Experiment configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shellcap_core::{IntMat3, QuadraticForm};

use crate::error::CliError;

/// Pipelines that can be toggled in a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    Shell,
    Caps,
    Ratios,
    Energy,
    Norms,
    Expsum,
    Region,
}

impl Module {
    pub const ALL: [Module; 7] = [
        Module::Shell,
        Module::Caps,
        Module::Ratios,
        Module::Energy,
        Module::Norms,
        Module::Expsum,
        Module::Region,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Module::Shell => "shell",
            Module::Caps => "caps",
            Module::Ratios => "ratios",
            Module::Energy => "energy",
            Module::Norms => "norms",
            Module::Expsum => "expsum",
            Module::Region => "region",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Module {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Module::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| CliError::config("modules", format!("unknown module `{s}`")))
    }
}

/// Which quasimodes the norms pipeline reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuasimodeSelect {
    Point,
    Caps,
    #[default]
    Both,
}

impl FromStr for QuasimodeSelect {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "point" => Ok(QuasimodeSelect::Point),
            "caps" | "cap" => Ok(QuasimodeSelect::Caps),
            "both" => Ok(QuasimodeSelect::Both),
            _ => Err(CliError::config("quasimode", format!("expected point|caps|both, got `{s}`"))),
        }
    }
}

/// `"identity"` or a symmetric 3×3 matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Named(String),
    Matrix([[f64; 3]; 3]),
}

impl Default for FormSpec {
    fn default() -> Self {
        FormSpec::Named("identity".into())
    }
}

impl FormSpec {
    /// Parses `identity`, an inline matrix `a,b,c;d,e,f;g,h,i`, or a file
    /// holding nine whitespace- or comma-separated entries.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "identity" {
            return Ok(FormSpec::default());
        }
        let text = if s.contains(';') || s.contains(',') && !Path::new(s).exists() {
            s.to_string()
        } else {
            std::fs::read_to_string(s).map_err(|e| CliError::config("form", format!("cannot read `{s}`: {e}")))?
        };
        let entries: Vec<f64> = text
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::config("form", format!("bad matrix entry: {e}")))?;
        if entries.len() != 9 {
            return Err(CliError::config("form", format!("expected 9 entries, got {}", entries.len())));
        }
        let mut m = [[0.0; 3]; 3];
        for (i, v) in entries.into_iter().enumerate() {
            m[i / 3][i % 3] = v;
        }
        Ok(FormSpec::Matrix(m))
    }

    /// Integer matrices become exact forms; anything else is real.
    pub fn build(&self) -> Result<QuadraticForm, CliError> {
        match self {
            FormSpec::Named(n) if n == "identity" => Ok(QuadraticForm::identity()),
            FormSpec::Named(n) => Err(CliError::config("form", format!("unknown form `{n}`"))),
            FormSpec::Matrix(m) => {
                let integral = m.iter().flatten().all(|v| v.fract() == 0.0 && v.abs() < 1e15);
                let form = if integral {
                    QuadraticForm::from_integer(IntMat3(m.map(|row| row.map(|v| v as i64))), 1)
                } else {
                    QuadraticForm::from_real(Matrix3::from_fn(|i, j| m[i][j]))
                };
                form.map_err(|e| CliError::config("form", e.to_string()))
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            FormSpec::Named(n) => n == "identity",
            FormSpec::Matrix(m) => *m == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

fn default_p() -> Vec<u32> {
    vec![4, 6, 8]
}

fn default_modules() -> Vec<Module> {
    Module::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_r() -> u32 {
    2
}

fn default_samples() -> usize {
    16
}

fn default_region_p() -> Vec<String> {
    [
        "2", "3", "4", "4.2", "235/52", "4.7", "389/79", "4.95", "5", "6", "8", "12", "24", "49", "100", "1000", "inf",
    ]
    .map(String::from)
    .to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub form: FormSpec,
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Absolute window widths.
    #[serde(default)]
    pub delta: Vec<f64>,
    /// Exponents `e` with `δ = λ^e`.
    #[serde(default)]
    pub delta_exp: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: Vec<u32>,
    #[serde(default = "default_modules")]
    pub modules: Vec<Module>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Tuple order for the energy pipeline.
    #[serde(default = "default_r")]
    pub energy_r: u32,
    #[serde(default)]
    pub full_shell: bool,
    #[serde(default)]
    pub quasimode: QuasimodeSelect,
    #[serde(default = "default_samples")]
    pub expsum_samples: usize,
    #[serde(default = "default_region_p")]
    pub region_p: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            form: FormSpec::default(),
            lambda: Vec::new(),
            delta: Vec::new(),
            delta_exp: Vec::new(),
            p: default_p(),
            modules: default_modules(),
            out: default_out(),
            energy_r: default_r(),
            full_shell: false,
            quasimode: QuasimodeSelect::default(),
            expsum_samples: default_samples(),
            region_p: default_region_p(),
        }
    }
}

/// One `(λ, δ)` grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub lambda: f64,
    pub delta: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config("config", e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn enabled(&self, m: Module) -> bool {
        self.modules.contains(&m)
    }

    /// Grid cells in order: `λ` outer, then absolute `δ`, then exponent rules.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &lambda in &self.lambda {
            let deltas = self.delta.iter().copied().chain(self.delta_exp.iter().map(|&e| lambda.powf(e)));
            for delta in deltas {
                out.push(Cell {
                    index: out.len(),
                    lambda,
                    delta,
                });
            }
        }
        out
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        self.form.build()?;
        let needs_grid = self.modules.iter().any(|&m| m != Module::Region);
        if needs_grid {
            if self.lambda.is_empty() {
                return Err(CliError::config("lambda", "empty λ grid"));
            }
            if self.delta.is_empty() && self.delta_exp.is_empty() {
                return Err(CliError::config("delta", "need at least one of delta or delta_exp"));
            }
        }
        if let Some(l) = self.lambda.iter().find(|&&l| !(l > 1.0 && l.is_finite())) {
            return Err(CliError::config("lambda", format!("need λ > 1, got {l}")));
        }
        if let Some(e) = self.delta_exp.iter().find(|e| !e.is_finite()) {
            return Err(CliError::config("delta_exp", format!("non-finite exponent {e}")));
        }
        for c in self.cells() {
            if !(c.delta > 0.0 && c.delta < 1.0) {
                let field = if self.delta.contains(&c.delta) { "delta" } else { "delta_exp" };
                return Err(CliError::config(field, format!("need 0 < δ < 1, got δ = {} at λ = {}", c.delta, c.lambda)));
            }
        }
        if self.enabled(Module::Norms) {
            if self.p.is_empty() {
                return Err(CliError::config("p", "empty p grid"));
            }
            if let Some(p) = self.p.iter().find(|&&p| p < 2 || p % 2 != 0) {
                return Err(CliError::config("p", format!("norm exponents must be even and ≥ 2, got {p}")));
            }
        }
        if self.enabled(Module::Energy) && self.energy_r < 2 {
            return Err(CliError::config("energy_r", "need r ≥ 2"));
        }
        let square_only = [Module::Energy, Module::Expsum];
        if let Some(m) = square_only.iter().find(|&&m| self.enabled(m)) {
            if !self.form.is_identity() {
                return Err(CliError::config("form", format!("module {m} requires the identity form")));
            }
        }
        if self.enabled(Module::Expsum) && self.expsum_samples == 0 {
            return Err(CliError::config("expsum_samples", "need at least one sample"));
        }
        for p in &self.region_p {
            shellcap_core::norms::Exponent::parse(p).map_err(|e| CliError::config("region_p", e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
