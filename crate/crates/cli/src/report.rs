//! Report rows, the bundle, and its on-disk form.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use shellcap_core::expsum::ExpsumRow;
use shellcap_core::norms::{NormMethod, Regime};

use crate::error::CliError;

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A row with a fixed CSV header.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellRow {
    pub lambda: f64,
    pub delta: f64,
    pub count: usize,
    pub ratio: f64,
}

impl CsvRow for ShellRow {
    const HEADER: &'static [&'static str] = &["lambda", "delta", "count", "ratio"];
    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.lambda), fmt_f64(self.delta), self.count.to_string(), fmt_f64(self.ratio)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapsRow {
    pub lambda: f64,
    pub delta: f64,
    pub rank: u8,
    pub s: u32,
    pub count: usize,
}

impl CsvRow for CapsRow {
    const HEADER: &'static [&'static str] = &["lambda", "delta", "rank", "s", "count"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.lambda),
            fmt_f64(self.delta),
            self.rank.to_string(),
            self.s.to_string(),
            self.count.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncidenceEntry {
    pub r: u8,
    pub t: u32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundMax {
    pub bound_id: String,
    pub max_ratio: f64,
}

/// Per-cell cap summary (JSON).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapsSummary {
    pub lambda: f64,
    pub delta: f64,
    pub total_caps: usize,
    pub total_points: usize,
    pub rank2_caps: usize,
    pub rho1_max: Option<f64>,
    pub rho2_max: Option<f64>,
    pub incidence: Vec<IncidenceEntry>,
    pub max_ratios: Vec<BoundMax>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub lambda: f64,
    pub delta: f64,
    pub bound_id: String,
    pub s: u32,
    pub observed: u64,
    pub bound: f64,
    pub ratio: f64,
}

impl CsvRow for RatioRow {
    const HEADER: &'static [&'static str] = &["lambda", "delta", "bound_id", "s", "observed", "bound", "ratio"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.lambda),
            fmt_f64(self.delta),
            self.bound_id.clone(),
            self.s.to_string(),
            self.observed.to_string(),
            fmt_f64(self.bound),
            fmt_f64(self.ratio),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBounds {
    pub energy: f64,
    pub energy_terms: [f64; 2],
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRatios {
    pub energy: f64,
    pub z: f64,
}

/// Energy record: `{E, Z, k_star, bounds, ratios}` plus its inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRow {
    pub lambda: f64,
    pub delta: f64,
    pub r: u32,
    pub full_shell: bool,
    pub set_size: usize,
    #[serde(rename = "E")]
    pub energy: u128,
    #[serde(rename = "Z")]
    pub z: u128,
    pub k_star: [i64; 3],
    pub bounds: EnergyBounds,
    pub ratios: EnergyRatios,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub lambda: f64,
    pub delta: f64,
    pub p: u32,
    pub quasimode: String,
    pub support: usize,
    pub ratio: f64,
    pub bound: f64,
    pub regime: Regime,
    pub method: NormMethod,
}

impl CsvRow for ExpsumRow {
    const HEADER: &'static [&'static str] =
        &["lambda", "delta", "M", "x_index", "abs_S", "ratio_trivial", "ratio_guo"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.lambda),
            fmt_f64(self.delta),
            self.m.to_string(),
            self.x_index.to_string(),
            fmt_f64(self.abs_s),
            fmt_f64(self.ratio_trivial),
            self.ratio_guo.map(fmt_f64).unwrap_or_default(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionRow {
    pub p: f64,
    pub exponent: f64,
    pub piece: u8,
}

impl CsvRow for RegionRow {
    const HEADER: &'static [&'static str] = &["p", "exponent", "piece"];
    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.p), fmt_f64(self.exponent), self.piece.to_string()]
    }
}

/// Everything a run produced; a table is `None` when its module was off.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportBundle {
    pub config_hash: String,
    pub shell: Option<Vec<ShellRow>>,
    pub caps: Option<Vec<CapsRow>>,
    pub caps_summary: Option<Vec<CapsSummary>>,
    pub ratios: Option<Vec<RatioRow>>,
    pub energy: Option<Vec<EnergyRow>>,
    pub norms: Option<Vec<NormRow>>,
    pub expsum: Option<Vec<ExpsumRow>>,
    pub region: Option<Vec<RegionRow>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A rendered file: name relative to the output directory and its bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub body: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub format: Format,
    pub created_unix: u64,
    pub files: Vec<FileEntry>,
}

pub fn csv_body<R: CsvRow>(rows: &[R]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(R::HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.fields()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn jsonl_body<R: Serialize>(rows: &[R]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("rows serialize");
        out.push(b'\n');
    }
    out
}

fn table<R: CsvRow + Serialize>(out: &mut Vec<Artifact>, stem: &str, rows: &Option<Vec<R>>, format: Format) {
    if let Some(rows) = rows {
        let (name, body) = match format {
            Format::Csv => (format!("{stem}.csv"), csv_body(rows)),
            Format::Json => (format!("{stem}.jsonl"), jsonl_body(rows)),
        };
        out.push(Artifact { name, body });
    }
}

fn records<R: Serialize>(out: &mut Vec<Artifact>, stem: &str, rows: &Option<Vec<R>>) {
    if let Some(rows) = rows {
        out.push(Artifact {
            name: format!("{stem}.jsonl"),
            body: jsonl_body(rows),
        });
    }
}

impl ReportBundle {
    /// Renders the bundle's data files (the manifest is not included).
    pub fn render(&self, format: Format) -> Vec<Artifact> {
        let mut out = Vec::new();
        table(&mut out, "shell", &self.shell, format);
        table(&mut out, "caps", &self.caps, format);
        records(&mut out, "caps_summary", &self.caps_summary);
        table(&mut out, "ratios", &self.ratios, format);
        records(&mut out, "energy", &self.energy);
        records(&mut out, "norms", &self.norms);
        table(&mut out, "expsum", &self.expsum, format);
        table(&mut out, "region", &self.region, format);
        out
    }

    pub fn manifest(&self, artifacts: &[Artifact], format: Format) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.config_hash.clone(),
            format,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            files: artifacts
                .iter()
                .map(|a| FileEntry {
                    name: a.name.clone(),
                    sha256: hex::encode(Sha256::digest(&a.body)),
                    bytes: a.body.len(),
                })
                .collect(),
        }
    }
}

/// Writes every artifact and `manifest.json` into `dir`.
pub fn emit_report(bundle: &ReportBundle, dir: &Path, format: Format) -> Result<Manifest, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let artifacts = bundle.render(format);
    for a in &artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.body).map_err(io(&path))?;
    }
    let manifest = bundle.manifest(&artifacts, format);
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    body.push(b'\n');
    std::fs::write(&path, body).map_err(io(&path))?;
    Ok(manifest)
}
