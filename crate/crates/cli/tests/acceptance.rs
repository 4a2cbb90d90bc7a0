//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use dwtunnel::billiards::{chaos_indicator, initial_condition, poincare_section, trace};
use dwtunnel::geometry::{build_double_well, ShapeKind, ShapeSpec, Side};
use dwtunnel::husimi::{
    barrier_amplitude, default_sigma, husimi_grid, mean_normal_momentum, summarize_pair, BarrierLine, HusimiSummary,
};
use dwtunnel::oned::{levels, separable_oracle_2d, splitting_1d, OneDWellSpec};
use dwtunnel::qsolver::{
    assemble_hamiltonian, solve_band, solve_spectrum, DiscretizationParams, Parity, Spectrum, DEFAULT_TOLERANCE,
};
use dwtunnel::spectra::{median, rank_correlation, rectangle_labels, regularization_index_in, weyl_estimate, SplittingRecord};
use dwtunnel_cli::commands::{solve, Pipeline};
use dwtunnel_cli::RunConfig;
use dwtunnel_testkit::{shooting_levels, BESSEL_J0_FIRST_ZERO};

const E_MAX: f64 = 300.0;
const H_COARSE: f64 = 0.02;
const H_FINE: f64 = 1.0 / 70.0;
const N_Y0: usize = 64;
const N_PY: usize = 64;
const SEED: u64 = 7;

type Outcome = Result<(bool, String), String>;

fn refined(kind: ShapeKind) -> &'static Pipeline {
    static CELLS: [OnceLock<Pipeline>; 6] = [const { OnceLock::new() }; 6];
    let k = ShapeKind::ALL.iter().position(|&s| s == kind).unwrap();
    CELLS[k].get_or_init(|| {
        let cfg = RunConfig {
            shape: ShapeSpec::new(kind),
            h: H_FINE,
            refine_h: Some(H_COARSE),
            e_max: E_MAX,
            ..RunConfig::default()
        };
        solve(&cfg).unwrap_or_else(|e| panic!("{kind}: {e}"))
    })
}

fn coarse(kind: ShapeKind) -> &'static Spectrum {
    static CELLS: [OnceLock<Spectrum>; 6] = [const { OnceLock::new() }; 6];
    let k = ShapeKind::ALL.iter().position(|&s| s == kind).unwrap();
    CELLS[k].get_or_init(|| {
        let g = build_double_well(ShapeSpec::new(kind)).unwrap();
        solve_spectrum(&g, H_COARSE, E_MAX, DEFAULT_TOLERANCE).unwrap_or_else(|e| panic!("{kind}: {e}"))
    })
}

fn summaries(p: &Pipeline) -> Result<Vec<HusimiSummary>, String> {
    let line = BarrierLine::new(&p.geometry, p.spectrum.h).map_err(|e| e.to_string())?;
    p.records
        .iter()
        .map(|r| summarize_pair(r.pair, &p.spectrum.even[r.pair], r.e_mean, !r.is_confident(), &line, N_Y0, N_PY))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let p = refined(ShapeKind::Rectangle);
    let oracle = separable_oracle_2d(2.0, 2.4, 0.1, 1000.0, E_MAX).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut misordered = Vec::new();
    for r in p.records.iter().filter(|r| r.e_mean <= 150.0) {
        let (oe, oo) = (&oracle.even[r.pair], &oracle.odd[r.pair]);
        let le = rectangle_labels(&p.spectrum.even[r.pair]);
        let lo = rectangle_labels(&p.spectrum.odd[r.pair]);
        if le != (oe.n_x, oe.n_y) || lo != (oo.n_x, oo.n_y) {
            misordered.push(r.pair);
        }
        let exact = oo.energy - oe.energy;
        worst = worst.max((r.delta_e - exact).abs() / exact);
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = checked > 0 && worst < 0.05 && misordered.is_empty() && secs <= 600.0;
    Ok((
        pass,
        format!(
            "{checked} pairs with E_mean <= 150, worst relative error {:.4}% (limit 5%), ordinal mismatches {:?}, {secs:.0} s",
            100.0 * worst,
            misordered
        ),
    ))
}

fn equal_rate_lines() -> Outcome {
    let p = refined(ShapeKind::Rectangle);
    let mut worst: (f64, usize) = (0.0, 0);
    let mut groups = 0;
    for n_x in 1.. {
        let d: Vec<f64> = p
            .records
            .iter()
            .filter(|r| r.is_confident() && r.label.is_some_and(|l| l.0 == n_x))
            .map(|r| r.delta_e)
            .collect();
        if d.is_empty() {
            break;
        }
        if d.len() < 2 {
            continue;
        }
        groups += 1;
        let (lo, hi) = d.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / lo;
        if spread > worst.0 {
            worst = (spread, n_x);
        }
    }
    Ok((
        groups >= 5 && worst.0 < 0.02,
        format!(
            "{groups} n_x groups, widest relative ΔE spread {:.2e} at n_x = {} (limit 2e-2)",
            worst.0,
            worst.1
        ),
    ))
}

fn oned_monotonicity() -> Outcome {
    let spec = OneDWellSpec::new(2.0, 0.1, 1000.0);
    let pairs = splitting_1d(&spec, E_MAX).map_err(|e| e.to_string())?;
    let increasing = pairs.windows(2).all(|w| w[1].e_mean > w[0].e_mean && w[1].delta_e > w[0].delta_e);
    let (se, so) = shooting_levels(2.0, 0.1, 1000.0, E_MAX, 1e-4);
    let mut worst: f64 = 0.0;
    let mut counts = true;
    for (parity, reference) in [(Parity::Even, &se), (Parity::Odd, &so)] {
        let ours = levels(&spec, parity, E_MAX).map_err(|e| e.to_string())?;
        counts &= ours.len() == reference.len();
        for (a, b) in ours.iter().zip(reference.iter()) {
            worst = worst.max((a - b).abs() / b);
        }
    }
    Ok((
        increasing && counts && worst < 1e-6 && !pairs.is_empty(),
        format!(
            "{} pairs strictly increasing: {increasing}; worst level deviation from shooting {worst:.2e} (limit 1e-6)",
            pairs.len()
        ),
    ))
}

fn lowest(kind: ShapeKind, h: f64) -> Result<f64, String> {
    let g = build_double_well(ShapeSpec::new(kind).hard_wall()).map_err(|e| e.to_string())?;
    let op = assemble_hamiltonian(&g, &DiscretizationParams::new(h, 10.0, Parity::Even)).map_err(|e| e.to_string())?;
    let states = solve_band(&op, 10.0, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
    states.first().map(|s| s.energy).ok_or_else(|| "no state below 10".into())
}

fn spectral_sanity() -> Outcome {
    let exact = PI * PI * (1.0 / 4.0 + 1.0 / (2.4 * 2.4));
    let e1 = lowest(ShapeKind::Rectangle, 0.02)?;
    let e2 = lowest(ShapeKind::Rectangle, 0.01)?;
    let (r1, r2) = ((e1 - exact).abs() / exact, (e2 - exact).abs() / exact);
    let ratio = r1 / r2;
    let disk = (BESSEL_J0_FIRST_ZERO / (4.8 / PI).sqrt()).powi(2);
    let ed = lowest(ShapeKind::Circle, 0.02)?;
    let rd = (ed - disk).abs() / disk;
    Ok((
        r1 < 5e-3 && (3.5..=4.5).contains(&ratio) && rd < 5e-3,
        format!(
            "rectangle relative error {r1:.3e} at h=0.02, ratio {ratio:.3} on halving h; disk {rd:.3e} (limit 5e-3)"
        ),
    ))
}

fn weyl() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in ShapeKind::ALL {
        let g = build_double_well(ShapeSpec::new(kind)).map_err(|e| e.to_string())?;
        let n = coarse(kind).count() as f64;
        let w = weyl_estimate(&g, E_MAX);
        let rel = (n - w).abs() / w;
        pass &= rel < 0.10;
        parts.push(format!("{kind} {n}/{w:.1}"));
    }
    Ok((pass, format!("counts/Weyl at E=300 within 10%: {}", parts.join(", "))))
}

fn classical() -> Outcome {
    let path = |kind| build_double_well(ShapeSpec::new(kind)).map(|g| g.boundary(Side::Left).clone());
    let circle = path(ShapeKind::Circle).map_err(|e| e.to_string())?;
    let rect = path(ShapeKind::Rectangle).map_err(|e| e.to_string())?;
    let stadium = path(ShapeKind::Stadium).map_err(|e| e.to_string())?;

    let mut drift: f64 = 0.0;
    for id in 0..400 {
        let ic = initial_condition(&circle, SEED, id);
        let t = trace(&circle, ic, 400).map_err(|e| e.to_string())?;
        for b in t.states() {
            drift = drift.max((b.c - ic.c).abs());
        }
    }
    let section = poincare_section(&rect, 400, 400, SEED).map_err(|e| e.to_string())?;
    let mut most = 0;
    for id in 0..400 {
        let mut distinct: Vec<f64> = Vec::new();
        for q in section.iter().filter(|q| q.traj == id) {
            if !distinct.iter().any(|d| (d - q.c.abs()).abs() < 1e-9) {
                distinct.push(q.c.abs());
            }
        }
        most = most.max(distinct.len());
    }
    let mean_chaos = |p: &dwtunnel::geometry::BoundaryPath| {
        let vals: Vec<f64> = (0..400)
            .filter_map(|id| chaos_indicator(p, initial_condition(p, SEED, id), 1000, 1e-9).ok())
            .collect();
        (vals.iter().sum::<f64>() / vals.len() as f64, vals.len())
    };
    let (cs, ns) = mean_chaos(&stadium);
    let (cr, nr) = mean_chaos(&rect);
    let (cc, nc) = mean_chaos(&circle);
    Ok((
        drift < 1e-9 && most <= 2 && cs >= 0.1 && cr <= 0.01 && cc <= 0.01,
        format!(
            "disk c drift {drift:.1e}; rectangle max distinct |c| {most}; chaos indicator stadium {cs:.3} ({ns} ICs), rectangle {cr:.4} ({nr}), circle {cc:.4} ({nc})"
        ),
    ))
}

fn spread_median(records: &[SplittingRecord]) -> Result<f64, String> {
    let points = regularization_index_in(records, 50.0, 25.0, 100.0, E_MAX).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    median(&ratios).ok_or_else(|| "no windows".into())
}

fn regularization_contrast() -> Outcome {
    let r = spread_median(&refined(ShapeKind::Rectangle).records)?;
    let c = spread_median(&refined(ShapeKind::Concave).records)?;
    Ok((
        r >= 10.0 * c && r >= 50.0 && c <= 10.0,
        format!("median max/min ΔE over [100,300]: rectangle {r:.2}, concave {c:.2}, contrast {:.1}x", r / c),
    ))
}

fn husimi_correlation() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [ShapeKind::Concave, ShapeKind::Butterfly, ShapeKind::Rectangle] {
        let p = refined(kind);
        let rho = rank_correlation(&p.records, &summaries(p)?).map_err(|e| format!("{kind}: {e}"))?;
        if kind != ShapeKind::Rectangle {
            pass &= rho >= 0.9;
        }
        parts.push(format!("{kind} {rho:.3}"));
    }
    Ok((pass, format!("Spearman rho (limit 0.9, rectangle unthresholded): {}", parts.join(", "))))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "shape = butterfly\nseed = 11\n").map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (k, threads) in [0, 2].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        for cmd in ["spectrum", "husimi", "bouncemap", "oned"] {
            let args = ["dwtunnel", cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
            let code = pool.install(|| dwtunnel_cli::run(args));
            if code != 0 {
                return Err(format!("{cmd} exited with {code}"));
            }
        }
        runs.push(snapshot(&out));
    }
    let same = runs[0] == runs[1];
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    Ok((
        same && runs[0].len() == 8,
        format!("{} CSVs ({bytes} bytes) identical across reruns with different thread counts: {same}", runs[0].len()),
    ))
}

fn husimi_numerics() -> Outcome {
    let mut n = 0;
    let mut min_h = f64::INFINITY;
    let mut worst_amp: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut above = 0;
    let mut check = |p: &Pipeline| -> Result<(), String> {
        let line = BarrierLine::new(&p.geometry, p.spectrum.h).map_err(|e| e.to_string())?;
        for r in &p.records {
            let state = &p.spectrum.even[r.pair];
            let sigma = default_sigma(r.e_mean);
            let Ok(base) = husimi_grid(state, &line, sigma, r.e_mean, N_Y0, N_PY) else {
                continue;
            };
            let fine = husimi_grid(state, &line, sigma, r.e_mean, 2 * N_Y0, 2 * N_PY).map_err(|e| e.to_string())?;
            min_h = min_h.min(base.min()).min(fine.min());
            let (a0, a1) = (barrier_amplitude(&base), barrier_amplitude(&fine));
            worst_amp = worst_amp.max((a0 - a1).abs() / a0);
            let p0 = mean_normal_momentum(&base, r.e_mean).map_err(|e| e.to_string())?;
            let p1 = mean_normal_momentum(&fine, r.e_mean).map_err(|e| e.to_string())?;
            worst_p = worst_p.max((p0 - p1).abs() / p0);
            if p0 > r.e_mean.sqrt() || p1 > r.e_mean.sqrt() {
                above += 1;
            }
            n += 1;
        }
        Ok(())
    };
    for kind in [ShapeKind::Rectangle, ShapeKind::Butterfly, ShapeKind::Concave] {
        check(refined(kind))?;
    }
    Ok((
        n > 0 && min_h >= 0.0 && worst_amp < 0.01 && worst_p < 0.01 && above == 0,
        format!(
            "{n} states: min H {min_h:.2e}, quadrature doubling changes amp {:.3}%, p_norm {:.3}% (limit 1%), p_norm above sqrt(E): {above}",
            100.0 * worst_amp,
            100.0 * worst_p
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence (rectangle)", oracle_equivalence),
        ("equal-rate lines", equal_rate_lines),
        ("1D monotonicity", oned_monotonicity),
        ("spectral sanity", spectral_sanity),
        ("Weyl count", weyl),
        ("classical invariants", classical),
        ("regularization contrast", regularization_contrast),
        ("Husimi correlation", husimi_correlation),
        ("determinism", determinism),
        ("Husimi numerics", husimi_numerics),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (pass, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, k + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
