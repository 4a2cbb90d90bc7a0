//! Splitting records, Weyl counts and the windowed spread of splittings.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::DoubleWellGeometry;
use crate::husimi::HusimiSummary;
use crate::qsolver::{EigenState, RefinedSplitting, Spectrum};

/// Neighbors on each side used for the local level spacing.
pub const SPACING_NEIGHBORS: usize = 5;
pub const DEFAULT_WINDOW_WIDTH: f64 = 50.0;
pub const DEFAULT_WINDOW_STRIDE: f64 = 25.0;
pub const MIN_CONFIDENT_RECORDS: usize = 10;
pub const MIN_PAIRS_PER_WINDOW: usize = 3;
pub const MIN_JOINED_PAIRS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("parity sectors differ in length ({even} even, {odd} odd); an eigenvalue window was probably missed")]
    LengthMismatch { even: usize, odd: usize },
    #[error("{found} confident records, need at least {needed}")]
    TooFewRecords { found: usize, needed: usize },
    #[error("{found} joined pairs, need at least {needed}")]
    TooFewPairs { found: usize, needed: usize },
    #[error("invalid window: width {width}, stride {stride}")]
    InvalidWindow { width: f64, stride: f64 },
}

/// One symmetric/antisymmetric pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingRecord {
    pub pair: usize,
    pub e_even: f64,
    pub e_odd: f64,
    pub e_mean: f64,
    pub delta_e: f64,
    pub confidence: f64,
    pub flagged: bool,
    /// `(n_x, n_y)` for rectangular wells.
    pub label: Option<(usize, usize)>,
}

impl SplittingRecord {
    pub fn is_confident(&self) -> bool {
        self.confidence >= 1.0 && !self.flagged
    }
}

/// Mean spacing of `levels` around index `k`, over up to
/// `SPACING_NEIGHBORS` levels on each side.
pub fn local_spacing(levels: &[f64], k: usize) -> Option<f64> {
    if levels.len() < 2 {
        return None;
    }
    let k = k.min(levels.len() - 1);
    let lo = k.saturating_sub(SPACING_NEIGHBORS);
    let hi = (k + SPACING_NEIGHBORS).min(levels.len() - 1);
    Some((levels[hi] - levels[lo]) / (hi - lo) as f64)
}

/// Pairs the k-th even with the k-th odd level. Confidence drops below one
/// when the splitting exceeds half the local level spacing.
pub fn pair_states(evens: &[f64], odds: &[f64]) -> Result<Vec<SplittingRecord>, SpectraError> {
    let mut union: Vec<f64> = evens.iter().chain(odds).copied().collect();
    union.sort_by(f64::total_cmp);
    pair_with(evens, odds, |k, e| {
        local_spacing(evens, k)
            .or_else(|| local_spacing(odds, k))
            .or_else(|| {
                let pos = union.partition_point(|&u| u < e);
                local_spacing(&union, pos)
            })
            .unwrap_or(f64::INFINITY)
    })
}

/// As [`pair_states`] with one spacing for every pair.
pub fn pair_states_with_spacing(evens: &[f64], odds: &[f64], spacing: f64) -> Result<Vec<SplittingRecord>, SpectraError> {
    pair_with(evens, odds, |_, _| spacing)
}

fn pair_with(
    evens: &[f64],
    odds: &[f64],
    spacing: impl Fn(usize, f64) -> f64,
) -> Result<Vec<SplittingRecord>, SpectraError> {
    if evens.len().abs_diff(odds.len()) > 2 {
        return Err(SpectraError::LengthMismatch {
            even: evens.len(),
            odd: odds.len(),
        });
    }
    Ok(evens
        .iter()
        .zip(odds)
        .enumerate()
        .map(|(k, (&e, &o))| {
            let delta_e = (o - e).abs();
            let limit = 0.5 * spacing(k, 0.5 * (e + o));
            let confidence = if delta_e > 0.0 { (limit / delta_e).min(1.0) } else { 1.0 };
            SplittingRecord {
                pair: k,
                e_even: e,
                e_odd: o,
                e_mean: 0.5 * (e + o),
                delta_e,
                confidence,
                flagged: delta_e > limit,
                label: None,
            }
        })
        .collect())
}

/// Pairs the two sectors of a solved spectrum.
pub fn pair_spectrum(spectrum: &Spectrum) -> Result<Vec<SplittingRecord>, SpectraError> {
    let e: Vec<f64> = spectrum.even.iter().map(|s| s.energy).collect();
    let o: Vec<f64> = spectrum.odd.iter().map(|s| s.energy).collect();
    pair_states(&e, &o)
}

/// Mode numbers `(n_x, n_y)` of a rectangular-well state, counted as sign
/// changes along the well row and column through its largest sample.
pub fn rectangle_labels(state: &EigenState) -> (usize, usize) {
    let layout = state.layout();
    let in_well = |k: usize| layout.potential(k) == 0.0;
    let peak = (0..state.psi.len())
        .filter(|&k| in_well(k))
        .max_by(|&a, &b| state.psi[a].abs().total_cmp(&state.psi[b].abs()))
        .unwrap_or(0);
    let (pi, pj) = layout.node(peak);
    let floor = 1e-8 * state.psi[peak].abs();
    let count = |values: Vec<f64>| {
        let signs: Vec<bool> = values.into_iter().filter(|v| v.abs() > floor).map(|v| v > 0.0).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count() + 1
    };
    let row = (0..layout.columns())
        .filter_map(|i| layout.index_of(i, pj))
        .filter(|&k| in_well(k))
        .map(|k| state.psi[k])
        .collect();
    let (j0, j1) = layout.rows();
    let col = (j0..=j1)
        .filter_map(|j| layout.index_of(pi, j))
        .filter(|&k| in_well(k))
        .map(|k| state.psi[k])
        .collect();
    (count(row), count(col))
}

/// Attaches rectangle mode labels. A pair whose members carry different
/// labels is flagged and its confidence halved.
pub fn label_rectangle_pairs(records: &mut [SplittingRecord], spectrum: &Spectrum) {
    for r in records.iter_mut() {
        let (Some(e), Some(o)) = (spectrum.even.get(r.pair), spectrum.odd.get(r.pair)) else {
            continue;
        };
        let (le, lo) = (rectangle_labels(e), rectangle_labels(o));
        r.label = Some(le);
        if le != lo {
            r.flagged = true;
            r.confidence = (0.5 * r.confidence).min(0.5);
        }
    }
}

/// Replaces raw splittings and mean energies by their extrapolated values,
/// matching on pair ordinal. Pairs that could not be tracked across grids
/// are flagged.
pub fn apply_refinement(records: &mut [SplittingRecord], refined: &[RefinedSplitting]) {
    for r in records.iter_mut() {
        let Some(f) = refined.iter().find(|f| f.ordinal == r.pair) else {
            continue;
        };
        r.delta_e = f.extrapolated.abs();
        r.e_mean = f.energy_mean;
        if !f.tracked {
            r.flagged = true;
            r.confidence = r.confidence.min(0.5);
        }
    }
}

/// Smooth counting function `(A/4π) E − (P/4π) √E`, zero for `E <= 0`.
pub fn weyl_count(area: f64, perimeter: f64, energy: f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    (area * energy - perimeter * energy.sqrt()) / (4.0 * PI)
}

/// Weyl estimate over both wells, with the barrier face counted as wall.
pub fn weyl_estimate(g: &DoubleWellGeometry, energy: f64) -> f64 {
    weyl_count(2.0 * g.spec().well_area, 2.0 * g.well_perimeter(), energy)
}

/// Weyl estimate for one well alone.
pub fn weyl_estimate_single(g: &DoubleWellGeometry, energy: f64) -> f64 {
    weyl_count(g.spec().well_area, g.well_perimeter(), energy)
}

/// Max/min splitting ratio over one energy window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadPoint {
    pub center: f64,
    pub half_width: f64,
    pub ratio: f64,
    pub count: usize,
}

/// Sliding-window spread over `[0, ⌈max E_mean / stride⌉ · stride]`.
pub fn regularization_index(records: &[SplittingRecord], width: f64) -> Result<Vec<SpreadPoint>, SpectraError> {
    let top = records.iter().map(|r| r.e_mean).fold(0.0, f64::max);
    let hi = (top / DEFAULT_WINDOW_STRIDE).ceil() * DEFAULT_WINDOW_STRIDE;
    regularization_index_in(records, width, DEFAULT_WINDOW_STRIDE, 0.0, hi.max(width))
}

/// Windows `[lo + m·stride, lo + m·stride + width]` that fit inside
/// `[lo, hi]`. Only confident records count; windows with fewer than three
/// pairs are omitted.
pub fn regularization_index_in(
    records: &[SplittingRecord],
    width: f64,
    stride: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<SpreadPoint>, SpectraError> {
    if !(width > 0.0 && stride > 0.0) {
        return Err(SpectraError::InvalidWindow { width, stride });
    }
    let confident: Vec<&SplittingRecord> = records.iter().filter(|r| r.is_confident()).collect();
    if confident.len() < MIN_CONFIDENT_RECORDS {
        return Err(SpectraError::TooFewRecords {
            found: confident.len(),
            needed: MIN_CONFIDENT_RECORDS,
        });
    }
    let mut out = Vec::new();
    let mut m = 0usize;
    loop {
        let start = lo + m as f64 * stride;
        let end = start + width;
        if end > hi + 1e-9 * width {
            break;
        }
        let inside: Vec<f64> = confident
            .iter()
            .filter(|r| r.e_mean >= start && r.e_mean < end)
            .map(|r| r.delta_e)
            .collect();
        if inside.len() >= MIN_PAIRS_PER_WINDOW {
            let max = inside.iter().copied().fold(f64::MIN, f64::max);
            let min = inside.iter().copied().fold(f64::MAX, f64::min);
            out.push(SpreadPoint {
                center: start + 0.5 * width,
                half_width: 0.5 * width,
                ratio: max / min,
                count: inside.len(),
            });
        }
        m += 1;
    }
    Ok(out)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Ranks starting at 1, ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let mean = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; NaN when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman correlation of `log ΔE` against the weighted normal momentum,
/// over confident records joined to unflagged summaries by pair ordinal.
pub fn rank_correlation(records: &[SplittingRecord], summaries: &[HusimiSummary]) -> Result<f64, SpectraError> {
    let (x, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.is_confident() && r.delta_e > 0.0)
        .filter_map(|r| {
            summaries
                .iter()
                .find(|s| s.pair == r.pair && s.flags.is_empty())
                .map(|s| (r.delta_e.ln(), s.weighted))
        })
        .unzip();
    if x.len() < MIN_JOINED_PAIRS {
        return Err(SpectraError::TooFewPairs {
            found: x.len(),
            needed: MIN_JOINED_PAIRS,
        });
    }
    Ok(spearman(&x, &y))
}
