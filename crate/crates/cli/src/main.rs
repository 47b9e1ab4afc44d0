use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shellcap::report::{csv_body, jsonl_body};
use shellcap::{emit_report, run_experiment, CliError, ExperimentConfig, Format, FormSpec, Module, QuasimodeSelect};
use shellcap_core::oracles::{
    count_annulus, count_near_curve, fejer_majorant, max_admissible_k, van_der_corput_ratio, BinaryForm, BoundId,
    Curve, CurveSpec,
};
use shellcap_core::shell::shell_census;
use shellcap_core::enumerate_shell;

#[derive(Parser)]
#[command(name = "shellcap", version, about = "Lattice points in thin ellipsoidal shells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated λ values
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Comma-separated absolute δ values
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Comma-separated exponents e with δ = λ^e
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta_exp: Vec<f64>,
    /// Comma-separated even exponents p
    #[arg(long, value_delimiter = ',')]
    p: Vec<u32>,
    /// `identity`, an inline matrix `a,b,c;d,e,f;g,h,i`, or a file with nine entries
    #[arg(long)]
    form: Option<String>,
    /// Also write the report bundle to this directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Shell census as JSON lines
    Shell {
        #[command(flatten)]
        common: Common,
        /// Write the point list (x1,x2,x3) of a single cell
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Cap histogram CSV; JSON summaries on stderr
    Caps {
        #[command(flatten)]
        common: Common,
    },
    /// Counting oracles
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Additive energy and representation maximum as JSON
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        r: u32,
        #[arg(long)]
        full_shell: bool,
    },
    /// Quasimode norm estimates as JSON lines
    Norms {
        #[command(flatten)]
        common: Common,
        /// point, caps, or both
        #[arg(long, default_value = "both")]
        quasimode: String,
    },
    /// Proven-region exponents as CSV
    Region {
        /// Comma-separated p values (`inf`, `a/b`, decimals)
        #[arg(long, value_delimiter = ',')]
        p_grid: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic exponential-sum ratios as CSV
    Expsum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Full pipeline, written to the output directory
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Integer points near a scaled catalog curve
    Curve {
        #[arg(long)]
        curve: String,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        delta: f64,
        /// Fejér order; defaults to the largest admissible
        #[arg(long)]
        k: Option<u32>,
    },
    /// Integer points in a thin annulus of a binary form
    Annulus {
        /// q1,q2,q3 for q(x, y) = q1 x² + 2 q2 x y + q3 y²
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Vec<f64>,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        eta: f64,
    },
    /// Cap-count bound ratios as CSV
    Ratios {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bound_id: Option<String>,
    },
}

fn build_config(common: &Common, modules: &[Module]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if !common.lambda.is_empty() {
        cfg.lambda = common.lambda.clone();
    }
    if !common.delta.is_empty() || !common.delta_exp.is_empty() {
        cfg.delta = common.delta.clone();
        cfg.delta_exp = common.delta_exp.clone();
    }
    if !common.p.is_empty() {
        cfg.p = common.p.clone();
    }
    if let Some(f) = &common.form {
        cfg.form = FormSpec::parse(f)?;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if !modules.is_empty() {
        cfg.modules = modules.to_vec();
    }
    Ok(cfg)
}

fn set_threads(common: &Common) -> Result<(), CliError> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::config("threads", "need at least one thread"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("threads", e.to_string()))?;
    }
    Ok(())
}

fn stdout(body: &[u8]) -> Result<(), CliError> {
    std::io::stdout().write_all(body).map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn run_module(common: &Common, cfg: ExperimentConfig) -> Result<shellcap::ReportBundle, CliError> {
    set_threads(common)?;
    let bundle = run_experiment(&cfg)?;
    if common.out.is_some() {
        emit_report(&bundle, &cfg.out, Format::Csv)?;
    }
    Ok(bundle)
}

fn oracle_row(header: &[&str], fields: Vec<String>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    w.write_record(fields).expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

fn execute(cli: Cli) -> Result<(), CliError> {
    use shellcap::report::fmt_f64 as f;
    match cli.command {
        Command::Shell { common, points } => {
            let cfg = build_config(&common, &[Module::Shell])?;
            cfg.validate()?;
            if let Some(path) = points {
                let cells = cfg.cells();
                let [cell] = cells.as_slice() else {
                    return Err(CliError::config("points", "--points needs exactly one (λ, δ) cell"));
                };
                let shell = enumerate_shell(&cfg.form.build()?, cell.lambda, cell.delta)?;
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_path(&path)
                    .map_err(|e| CliError::config("points", e.to_string()))?;
                let io = |e: csv::Error| CliError::config("points", e.to_string());
                w.write_record(["x1", "x2", "x3"]).map_err(io)?;
                for p in shell.points() {
                    w.write_record(p.0.map(|c| c.to_string())).map_err(io)?;
                }
                w.flush().map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let c = shell_census(&shell);
                let line = serde_json::json!({
                    "lambda": cell.lambda, "delta": cell.delta,
                    "count": c.count, "volume_proxy": c.volume_proxy, "ratio": c.ratio,
                });
                return stdout(format!("{line}\n").as_bytes());
            }
            let b = run_module(&common, cfg)?;
            let lines: Vec<serde_json::Value> = b
                .shell
                .unwrap_or_default()
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "lambda": r.lambda, "delta": r.delta, "count": r.count,
                        "volume_proxy": r.lambda * r.lambda * r.delta, "ratio": r.ratio,
                    })
                })
                .collect();
            stdout(&jsonl_body(&lines))
        }
        Command::Caps { common } => {
            let b = run_module(&common, build_config(&common, &[Module::Caps])?)?;
            eprint!("{}", String::from_utf8_lossy(&jsonl_body(&b.caps_summary.unwrap_or_default())));
            stdout(&csv_body(&b.caps.unwrap_or_default()))
        }
        Command::Oracle { which } => match which {
            OracleCommand::Curve { curve, x, y, delta, k } => {
                let curve: Curve = curve.parse()?;
                let spec = CurveSpec::new(curve, x, y, delta);
                let count = count_near_curve(&spec)?;
                let ratio = van_der_corput_ratio(&spec)?;
                let k = k.unwrap_or_else(|| max_admissible_k(delta).max(1));
                let majorant = fejer_majorant(&spec, k).map_or_else(|_| String::new(), f);
                stdout(&oracle_row(
                    &["curve", "X", "Y", "delta", "count", "vdc_ratio", "k", "fejer_majorant"],
                    vec![
                        curve.name().into(),
                        f(x),
                        f(y),
                        f(delta),
                        count.to_string(),
                        f(ratio),
                        k.to_string(),
                        majorant,
                    ],
                ))
            }
            OracleCommand::Annulus { q, a, b, eta } => {
                if q.len() != 3 {
                    return Err(CliError::config("q", format!("expected q1,q2,q3, got {} values", q.len())));
                }
                let form = BinaryForm::new(q[0], q[1], q[2]);
                let c = count_annulus(&form, a, b, eta)?;
                stdout(&oracle_row(
                    &["q1", "q2", "q3", "A", "B", "eta", "count", "bound_vdc", "bound_huxley", "huxley_window"],
                    vec![
                        f(q[0]),
                        f(q[1]),
                        f(q[2]),
                        f(a),
                        f(b),
                        f(eta),
                        c.count.to_string(),
                        f(c.bound_vdc),
                        f(c.bound_huxley),
                        c.huxley_window.to_string(),
                    ],
                ))
            }
            OracleCommand::Ratios { common, bound_id } => {
                let id: Option<BoundId> = bound_id.as_deref().map(str::parse).transpose()?;
                let b = run_module(&common, build_config(&common, &[Module::Ratios])?)?;
                let rows: Vec<_> = b
                    .ratios
                    .unwrap_or_default()
                    .into_iter()
                    .filter(|r| id.is_none_or(|id| r.bound_id == id.as_str()))
                    .collect();
                stdout(&csv_body(&rows))
            }
        },
        Command::Energy { common, r, full_shell } => {
            let mut cfg = build_config(&common, &[Module::Energy])?;
            cfg.energy_r = r;
            cfg.full_shell = full_shell;
            let b = run_module(&common, cfg)?;
            stdout(&jsonl_body(&b.energy.unwrap_or_default()))
        }
        Command::Norms { common, quasimode } => {
            let mut cfg = build_config(&common, &[Module::Norms])?;
            cfg.quasimode = quasimode.parse::<QuasimodeSelect>()?;
            let b = run_module(&common, cfg)?;
            stdout(&jsonl_body(&b.norms.unwrap_or_default()))
        }
        Command::Region { p_grid, out } => {
            let common = Common {
                out,
                ..Default::default()
            };
            let mut cfg = build_config(&common, &[Module::Region])?;
            if !p_grid.is_empty() {
                cfg.region_p = p_grid;
            }
            let b = run_module(&common, cfg)?;
            stdout(&csv_body(&b.region.unwrap_or_default()))
        }
        Command::Expsum { common, samples } => {
            let mut cfg = build_config(&common, &[Module::Expsum])?;
            cfg.expsum_samples = samples;
            let b = run_module(&common, cfg)?;
            stdout(&csv_body(&b.expsum.unwrap_or_default()))
        }
        Command::Run { common, format } => {
            let cfg = build_config(&common, &[])?;
            set_threads(&common)?;
            let bundle = run_experiment(&cfg)?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            let manifest = emit_report(&bundle, &cfg.out, format)?;
            for file in &manifest.files {
                println!("{}  {}", file.sha256, cfg.out.join(&file.name).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shellcap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
