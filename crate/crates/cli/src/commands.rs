//! Subcommand implementations.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use dwtunnel::billiards::poincare_section;
use dwtunnel::geometry::{build_double_well, DoubleWellGeometry, ShapeKind, Side};
use dwtunnel::husimi::{summarize_pair, BarrierLine, HusimiError, HusimiFlag, HusimiSummary};
use dwtunnel::oned::{all_levels, splitting_1d, OneDError, OneDWellSpec};
use dwtunnel::qsolver::{refine_splittings, solve_spectrum, SolverError, Spectrum};
use dwtunnel::spectra::{
    apply_refinement, label_rectangle_pairs, pair_spectrum, rank_correlation, regularization_index,
    weyl_estimate, weyl_estimate_single, SplittingRecord, DEFAULT_WINDOW_WIDTH,
};

use crate::config::RunConfig;
use crate::output::{float, Rows, Table};
use crate::svg::{heatmap, Plot, Series};
use crate::CliError;

/// Boundary polyline resolution for `boundary.csv`.
pub const BOUNDARY_SAMPLES: usize = 512;

/// Solved and paired spectrum of one configured double well.
pub struct Pipeline {
    pub geometry: DoubleWellGeometry,
    /// Spectrum at the finest configured spacing.
    pub spectrum: Spectrum,
    pub records: Vec<SplittingRecord>,
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::GridTooCoarse { .. } | SolverError::InvalidParams(_) | SolverError::AboveBarrier { .. } => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.into()),
    }
}

fn geometry(cfg: &RunConfig) -> Result<DoubleWellGeometry, CliError> {
    build_double_well(cfg.shape).map_err(|e| CliError::Config(e.to_string()))
}

/// geometry → eigenstates → pairs, with Richardson refinement when a second
/// spacing is configured.
pub fn solve(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let g = geometry(cfg)?;
    let solve_at = |h| solve_spectrum(&g, h, cfg.e_max, cfg.tolerance).map_err(solver_error);
    let (spectrum, refined) = match cfg.refine_h.filter(|&r| r != cfg.h) {
        None => (solve_at(cfg.h)?, None),
        Some(r) => {
            let (fine, coarse) = (cfg.h.min(r), cfg.h.max(r));
            let (a, b) = rayon::join(|| solve_at(fine), || solve_at(coarse));
            let levels = [a?, b?];
            let refined = refine_splittings(&levels).map_err(solver_error)?;
            let [fine, _] = levels;
            (fine, Some(refined))
        }
    };
    let mut records = pair_spectrum(&spectrum).map_err(|e| CliError::Runtime(e.into()))?;
    if g.kind() == ShapeKind::Rectangle {
        label_rectangle_pairs(&mut records, &spectrum);
    }
    if let Some(refined) = refined {
        apply_refinement(&mut records, &refined);
    }
    Ok(Pipeline {
        geometry: g,
        spectrum,
        records,
    })
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
        .map_err(CliError::Runtime)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let p = solve(cfg)?;
    prepare_out(&cfg.out)?;

    let mut t = Table::new(&["id", "parity", "E", "residual"])?;
    for s in p.spectrum.merged() {
        t.row([s.id.to_string(), s.parity.name().to_string(), float(s.energy), float(s.residual)])?;
    }
    t.save(&cfg.out.join("spectrum.csv"))?;

    let mut t = Table::new(&["pair", "E_even", "E_odd", "E_mean", "delta_E", "confidence", "n_x", "n_y"])?;
    for r in &p.records {
        let (nx, ny) = r.label.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        t.row([
            r.pair.to_string(),
            float(r.e_even),
            float(r.e_odd),
            float(r.e_mean),
            float(r.delta_e),
            float(r.confidence),
            nx,
            ny,
        ])?;
    }
    t.save(&cfg.out.join("splittings.csv"))?;

    let mut t = Table::new(&["window_center", "ratio", "count"])?;
    match regularization_index(&p.records, DEFAULT_WINDOW_WIDTH) {
        Ok(points) => {
            for w in points {
                t.row([float(w.center), float(w.ratio), w.count.to_string()])?;
            }
        }
        Err(e) => log::warn!("no spread index: {e}"),
    }
    t.save(&cfg.out.join("spread.csv"))?;

    println!(
        "{}: {} states below E = {} (Weyl: {:.1} both wells, {:.1} one well), {} pairs",
        p.geometry.kind(),
        p.spectrum.count(),
        cfg.e_max,
        weyl_estimate(&p.geometry, cfg.e_max),
        weyl_estimate_single(&p.geometry, cfg.e_max),
        p.records.len()
    );
    Ok(())
}

pub fn cmd_husimi(cfg: &RunConfig) -> Result<(), CliError> {
    let p = solve(cfg)?;
    let line = BarrierLine::new(&p.geometry, p.spectrum.h).map_err(|e| CliError::Runtime(e.into()))?;
    let summaries: Vec<HusimiSummary> = p
        .records
        .par_iter()
        .map(|r| {
            summarize_pair(
                r.pair,
                &p.spectrum.even[r.pair],
                r.e_mean,
                !r.is_confident(),
                &line,
                cfg.husimi_n_y0,
                cfg.husimi_n_py,
            )
        })
        .collect::<Result<_, HusimiError>>()
        .map_err(|e| CliError::Runtime(e.into()))?;
    prepare_out(&cfg.out)?;

    let mut t = Table::new(&["pair", "E_mean", "amp", "p_norm", "weighted", "flags"])?;
    for s in &summaries {
        let flags: Vec<&str> = s.flags.iter().map(|f| f.name()).collect();
        t.row([
            s.pair.to_string(),
            float(s.e_mean),
            float(s.amp),
            float(s.p_norm),
            float(s.weighted),
            flags.join(";"),
        ])?;
    }
    t.save(&cfg.out.join("husimi.csv"))?;

    for &k in &cfg.husimi_heatmaps {
        let Some(grid) = summaries.get(k).and_then(|s| s.grid.as_ref()) else {
            log::warn!("no Husimi grid for pair {k}");
            continue;
        };
        let values: Vec<Vec<f64>> = (0..grid.y0.len())
            .map(|i| (0..grid.py.len()).map(|j| grid.get(i, j)).collect())
            .collect();
        let svg = heatmap(
            &format!("{} pair {k}, E = {:.3}", p.geometry.kind(), summaries[k].e_mean),
            "y0",
            "p_y",
            &grid.y0,
            &grid.py,
            &values,
        );
        crate::output::write_atomic(&cfg.out.join(format!("husimi_pair{k}.svg")), svg.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_bouncemap(cfg: &RunConfig) -> Result<(), CliError> {
    let g = geometry(cfg)?;
    let path = g.boundary(Side::Left);
    let points =
        poincare_section(path, cfg.n_traj, cfg.n_bounces, cfg.seed).map_err(|e| CliError::Runtime(e.into()))?;
    prepare_out(&cfg.out)?;

    let mut t = Table::new(&["traj", "bounce", "s", "c"])?;
    for q in &points {
        t.row([q.traj.to_string(), q.bounce.to_string(), float(q.s), float(q.c)])?;
    }
    t.save(&cfg.out.join("poincare.csv"))?;

    let mut t = Table::new(&["s", "x", "y", "nx", "ny"])?;
    for b in path.polyline(BOUNDARY_SAMPLES) {
        t.row([float(b.s), float(b.point.x), float(b.point.y), float(b.normal.x), float(b.normal.y)])?;
    }
    t.save(&cfg.out.join("boundary.csv"))?;

    let len = path.length();
    let mut plot = Plot::new(format!("{} bounce map", g.kind()), "s / L", "c");
    plot.x_range = Some((0.0, 1.0));
    plot.y_range = Some((-1.0, 1.0));
    plot.dedupe = true;
    plot.series.push(Series::scatter(
        points.iter().map(|q| (q.s / len, q.c)).collect(),
        "black",
    ));
    crate::output::write_atomic(&cfg.out.join("poincare.svg"), plot.render().as_bytes())?;

    let short = (0..cfg.n_traj)
        .filter(|&id| points.iter().filter(|q| q.traj == id).count() < cfg.n_bounces)
        .count();
    if short > 0 {
        log::info!("{short} trajectories stopped early at corners or tangencies");
    }
    Ok(())
}

pub fn cmd_oned(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = OneDWellSpec::new(cfg.oned_well_width, cfg.shape.barrier_width, cfg.shape.barrier_height);
    let map = |e: OneDError| match e {
        OneDError::InvalidSpec(_) | OneDError::InvalidEnergy(_) => CliError::Config(e.to_string()),
    };
    let levels = all_levels(&spec, cfg.e_max).map_err(map)?;
    let pairs = splitting_1d(&spec, cfg.e_max).map_err(map)?;
    prepare_out(&cfg.out)?;

    let mut t = Table::new(&["parity", "n", "E"])?;
    for l in &levels {
        t.row([l.parity.name().to_string(), l.n.to_string(), float(l.energy)])?;
    }
    t.save(&cfg.out.join("oned.csv"))?;

    let mut t = Table::new(&["n", "E_mean", "delta_E"])?;
    for s in &pairs {
        t.row([s.n.to_string(), float(s.e_mean), float(s.delta_e)])?;
    }
    t.save(&cfg.out.join("oned_splittings.csv"))?;
    Ok(())
}

fn read_records(rows: &Rows) -> anyhow::Result<Vec<SplittingRecord>> {
    let col = |n| rows.column(n);
    let (pair, ee, eo, em, de, conf) = (
        col("pair")?,
        col("E_even")?,
        col("E_odd")?,
        col("E_mean")?,
        col("delta_E")?,
        col("confidence")?,
    );
    let (nx, ny) = (col("n_x")?, col("n_y")?);
    rows.records
        .iter()
        .map(|r| {
            let confidence = rows.f64(r, conf)?;
            let label = match (r.get(nx).unwrap_or(""), r.get(ny).unwrap_or("")) {
                ("", _) | (_, "") => None,
                (a, b) => Some((a.parse()?, b.parse()?)),
            };
            Ok(SplittingRecord {
                pair: rows.f64(r, pair)? as usize,
                e_even: rows.f64(r, ee)?,
                e_odd: rows.f64(r, eo)?,
                e_mean: rows.f64(r, em)?,
                delta_e: rows.f64(r, de)?,
                confidence,
                flagged: confidence < 1.0,
                label,
            })
        })
        .collect()
}

fn read_summaries(rows: &Rows) -> anyhow::Result<Vec<HusimiSummary>> {
    let col = |n| rows.column(n);
    let (pair, em, amp, pn, w, fl) = (
        col("pair")?,
        col("E_mean")?,
        col("amp")?,
        col("p_norm")?,
        col("weighted")?,
        col("flags")?,
    );
    rows.records
        .iter()
        .map(|r| {
            let flags = r
                .get(fl)
                .unwrap_or("")
                .split(';')
                .filter(|f| !f.is_empty())
                .map(|f| match f {
                    "zero_amplitude" => Ok(HusimiFlag::ZeroAmplitude),
                    "line_too_short" => Ok(HusimiFlag::LineTooShort),
                    "upstream_flagged" => Ok(HusimiFlag::UpstreamFlagged),
                    other => anyhow::bail!("{}: unknown flag `{other}`", rows.path.display()),
                })
                .collect::<anyhow::Result<_>>()?;
            Ok(HusimiSummary {
                pair: rows.f64(r, pair)? as usize,
                e_mean: rows.f64(r, em)?,
                amp: rows.f64(r, amp)?,
                p_norm: rows.f64(r, pn)?,
                weighted: rows.f64(r, w)?,
                flags,
                grid: None,
            })
        })
        .collect()
}

pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let out = &cfg.out;
    let records = read_records(&Rows::read(&out.join("splittings.csv"))?)?;
    let summaries = read_summaries(&Rows::read(&out.join("husimi.csv"))?)?;
    let spread = Rows::read(&out.join("spread.csv"))?;
    let name = cfg.shape.kind();

    let (good, weak): (Vec<&SplittingRecord>, Vec<&SplittingRecord>) =
        records.iter().filter(|r| r.delta_e > 0.0).partition(|r| r.is_confident());
    let pts = |v: &[&SplittingRecord]| v.iter().map(|r| (r.e_mean, r.delta_e.log10())).collect::<Vec<_>>();
    let mut plot = Plot::new(format!("{name} tunneling splittings"), "E_mean", "log10 ΔE");
    plot.series.push(Series::scatter(pts(&weak), "#bbbbbb"));
    plot.series.push(Series::scatter(pts(&good), "black"));
    crate::output::write_atomic(&out.join("report_splittings.svg"), plot.render().as_bytes())?;

    let joined: Vec<(f64, f64)> = good
        .iter()
        .filter_map(|r| {
            let s = summaries.iter().find(|s| s.pair == r.pair && s.flags.is_empty())?;
            Some((s.weighted, r.delta_e.log10()))
        })
        .collect();
    let mut plot = Plot::new(format!("{name} splitting vs barrier momentum"), "⟨ψ⟩⟨p_x⟩", "log10 ΔE");
    plot.series.push(Series::scatter(joined, "black"));
    crate::output::write_atomic(&out.join("report_husimi.svg"), plot.render().as_bytes())?;

    let (c, r) = (spread.column("window_center")?, spread.column("ratio")?);
    let curve = spread
        .records
        .iter()
        .map(|row| Ok((spread.f64(row, c)?, spread.f64(row, r)?.log10())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut plot = Plot::new(format!("{name} splitting spread"), "window center E", "log10 max/min ΔE");
    plot.series.push(Series::curve(curve, "black"));
    crate::output::write_atomic(&out.join("report_spread.svg"), plot.render().as_bytes())?;

    match rank_correlation(&records, &summaries) {
        Ok(rho) => println!("{name}: Spearman rho(log ΔE, ⟨ψ⟩⟨p_x⟩) = {rho:.4}"),
        Err(e) => println!("{name}: no rank correlation ({e})"),
    }
    Ok(())
}
