//! Grid-cell pipelines.

use rayon::prelude::*;
use shellcap_core::caps::{build_classified_cover, census, rank2_invariant_ratios, Cap};
use shellcap_core::energy::energy_conjecture_report;
use shellcap_core::expsum::{expsum_bound_report, halton_samples, ExpsumRow};
use shellcap_core::norms::{
    make_quasimode, norm_estimate, proven_region_threshold, witness_report, Exponent, NormEstimate, QuasimodeKind,
};
use shellcap_core::oracles::{bound_ratio_report, BoundId};
use shellcap_core::shell::shell_census;
use shellcap_core::{enumerate_shell, QuadraticForm, ShellPointSet};

use crate::config::{Cell, ExperimentConfig, Module, QuasimodeSelect};
use crate::error::CliError;
use crate::report::*;

#[derive(Default)]
struct CellOutput {
    shell: Option<ShellRow>,
    caps: Vec<CapsRow>,
    caps_summary: Option<CapsSummary>,
    ratios: Vec<RatioRow>,
    energy: Option<EnergyRow>,
    norms: Vec<NormRow>,
    expsum: Vec<ExpsumRow>,
}

fn norm_row(e: NormEstimate) -> NormRow {
    NormRow {
        lambda: e.lambda,
        delta: e.delta,
        p: e.p as u32,
        quasimode: e.quasimode,
        support: e.support,
        ratio: e.ratio,
        bound: e.bound,
        regime: e.regime,
        method: e.method,
    }
}

fn run_cell(cfg: &ExperimentConfig, form: &QuadraticForm, cell: Cell) -> Result<CellOutput, CliError> {
    let Cell { lambda, delta, .. } = cell;
    let ctx = |module: Module| {
        move |source| CliError::Cell {
            module: module.to_string(),
            lambda,
            delta,
            source,
        }
    };
    let mut out = CellOutput::default();
    let needs_shell = [Module::Shell, Module::Caps, Module::Ratios, Module::Norms]
        .iter()
        .any(|&m| cfg.enabled(m));
    let shell: Option<ShellPointSet> = if needs_shell {
        Some(enumerate_shell(form, lambda, delta).map_err(ctx(Module::Shell))?)
    } else {
        None
    };
    let needs_cover = cfg.enabled(Module::Caps) || cfg.enabled(Module::Ratios) || cfg.enabled(Module::Norms);
    let cover: Option<Vec<Cap>> = shell.as_ref().filter(|_| needs_cover).map(build_classified_cover);

    if cfg.enabled(Module::Shell) {
        let c = shell_census(shell.as_ref().unwrap());
        out.shell = Some(ShellRow {
            lambda,
            delta,
            count: c.count,
            ratio: c.ratio,
        });
    }

    if cfg.enabled(Module::Caps) || cfg.enabled(Module::Ratios) {
        let cover = cover.as_ref().unwrap();
        let cen = census(cover, lambda, delta);
        let reports: Vec<_> = BoundId::ALL.iter().map(|&id| bound_ratio_report(&cen, id)).collect();
        if cfg.enabled(Module::Caps) {
            out.caps = cen
                .bins
                .iter()
                .map(|(&(rank, s), &count)| CapsRow {
                    lambda,
                    delta,
                    rank,
                    s,
                    count,
                })
                .collect();
            let r2 = rank2_invariant_ratios(cover, lambda, delta);
            out.caps_summary = Some(CapsSummary {
                lambda,
                delta,
                total_caps: cen.total_caps,
                total_points: cen.total_points,
                rank2_caps: r2.caps,
                rho1_max: r2.rho1_max,
                rho2_max: r2.rho2_max,
                incidence: cen
                    .incidence
                    .iter()
                    .map(|(&(r, t), &count)| IncidenceEntry { r, t, count })
                    .collect(),
                max_ratios: reports
                    .iter()
                    .map(|r| BoundMax {
                        bound_id: r.bound_id.to_string(),
                        max_ratio: r.max_ratio,
                    })
                    .collect(),
            });
        }
        if cfg.enabled(Module::Ratios) {
            for rep in &reports {
                out.ratios.extend(rep.rows.iter().map(|row| RatioRow {
                    lambda,
                    delta,
                    bound_id: rep.bound_id.to_string(),
                    s: row.s,
                    observed: row.observed,
                    bound: row.bound,
                    ratio: row.ratio,
                }));
            }
        }
    }

    if cfg.enabled(Module::Energy) {
        let e = energy_conjecture_report(lambda, delta, cfg.energy_r, cfg.full_shell).map_err(ctx(Module::Energy))?;
        out.energy = Some(EnergyRow {
            lambda,
            delta,
            r: e.r,
            full_shell: e.full_shell,
            set_size: e.set_size,
            energy: e.energy,
            z: e.z,
            k_star: e.k_star.0,
            bounds: EnergyBounds {
                energy: e.energy_bound,
                energy_terms: e.energy_bound_terms,
                z: e.z_bound,
            },
            ratios: EnergyRatios {
                energy: e.energy_ratio,
                z: e.z_ratio,
            },
        });
    }

    if cfg.enabled(Module::Norms) {
        let shell = shell.as_ref().unwrap();
        let cover = cover.as_ref().unwrap();
        for &p in &cfg.p {
            if shell.is_empty() {
                continue;
            }
            match cfg.quasimode {
                QuasimodeSelect::Point => {
                    let f = make_quasimode(shell, QuasimodeKind::Point).map_err(ctx(Module::Norms))?;
                    let e = norm_estimate(&f, lambda, delta, p, "point").map_err(ctx(Module::Norms))?;
                    out.norms.push(norm_row(e));
                }
                sel => {
                    let w = witness_report(shell, cover, p).map_err(ctx(Module::Norms))?;
                    if sel == QuasimodeSelect::Both {
                        out.norms.push(norm_row(w.point));
                    }
                    out.norms.extend(w.best_cap.map(norm_row));
                }
            }
        }
    }

    if cfg.enabled(Module::Expsum) {
        let samples = halton_samples(cfg.expsum_samples);
        let rep = expsum_bound_report(lambda, delta, &samples).map_err(ctx(Module::Expsum))?;
        out.expsum = rep.rows;
    }
    Ok(out)
}

/// `(p, e(p), piece)` for every configured exponent.
pub fn region_rows(p_grid: &[String]) -> Result<Vec<RegionRow>, CliError> {
    p_grid
        .iter()
        .map(|s| {
            let p = Exponent::parse(s).map_err(|e| CliError::config("region_p", e.to_string()))?;
            let v = proven_region_threshold(p).map_err(|e| CliError::config("region_p", e.to_string()))?;
            Ok(RegionRow {
                p: p.to_f64(),
                exponent: v.exponent,
                piece: v.piece,
            })
        })
        .collect()
}

/// Validates `cfg` and runs every enabled pipeline over its grid. Cells run in
/// the current rayon pool; outputs are ordered by grid index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle, CliError> {
    cfg.validate()?;
    let form = cfg.form.build()?;
    let grid_modules = cfg.modules.iter().any(|&m| m != Module::Region);
    let cells = if grid_modules { cfg.cells() } else { Vec::new() };
    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&c| run_cell(cfg, &form, c))
        .collect::<Result<_, _>>()?;

    let on = |m: Module| cfg.enabled(m);
    fn gather<T>(on: bool) -> Option<Vec<T>> {
        on.then(Vec::new)
    }
    let mut b = ReportBundle {
        config_hash: cfg.hash(),
        shell: gather(on(Module::Shell)),
        caps: gather(on(Module::Caps)),
        caps_summary: gather(on(Module::Caps)),
        ratios: gather(on(Module::Ratios)),
        energy: gather(on(Module::Energy)),
        norms: gather(on(Module::Norms)),
        expsum: gather(on(Module::Expsum)),
        region: None,
    };
    for o in outputs {
        fn push<T>(dst: &mut Option<Vec<T>>, src: impl IntoIterator<Item = T>) {
            if let Some(d) = dst {
                d.extend(src);
            }
        }
        push(&mut b.shell, o.shell);
        push(&mut b.caps, o.caps);
        push(&mut b.caps_summary, o.caps_summary);
        push(&mut b.ratios, o.ratios);
        push(&mut b.energy, o.energy);
        push(&mut b.norms, o.norms);
        push(&mut b.expsum, o.expsum);
    }
    if on(Module::Region) {
        b.region = Some(region_rows(&cfg.region_p)?);
    }
    Ok(b)
}
