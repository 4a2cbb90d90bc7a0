//! Richardson refinement of splittings across grid spacings.

use super::{solve_spectrum, EigenState, Parity, SolverError, Spectrum};
use crate::geometry::DoubleWellGeometry;

/// Minimum `|overlap|` for two states on different grids to count as the same.
pub const TRACK_THRESHOLD: f64 = 0.9;
const TRACK_SEARCH: usize = 4;

/// Match of one state to its counterpart on another grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    /// Position of the match within the candidate sector.
    pub index: usize,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSplitting {
    pub ordinal: usize,
    /// `(h, E_mean, ΔE)` per resolution, coarsest first.
    pub raw: Vec<(f64, f64, f64)>,
    /// Mean pair energy extrapolated to `h = 0`.
    pub energy_mean: f64,
    pub extrapolated: f64,
    /// `|ΔE(h₁) − ΔE(h₂)|` over the two finest spacings.
    pub error_estimate: f64,
    /// False when the pair could not be followed across every resolution;
    /// `extrapolated` then holds the finest raw value.
    pub tracked: bool,
}

impl RefinedSplitting {
    /// Raw splitting on the finest grid.
    pub fn finest(&self) -> f64 {
        self.raw.last().map_or(f64::NAN, |r| r.2)
    }
}

/// Extrapolates `v(h) = a + b h²` to `h = 0` from the two finest samples
/// `(h, v)`. Returns `(a, |v₁ − v₂|)`.
pub fn richardson_h2(samples: &[(f64, f64)]) -> Result<(f64, f64), SolverError> {
    let mut s: Vec<(f64, f64)> = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (h1, v1) = *s.first().ok_or(SolverError::TooFewResolutions)?;
    let (h2, v2) = *s
        .iter()
        .find(|p| (p.0 - h1).abs() > 1e-12 * h1.abs().max(1e-300))
        .ok_or(SolverError::TooFewResolutions)?;
    let (a1, a2) = (h1 * h1, h2 * h2);
    Ok(((a2 * v1 - a1 * v2) / (a2 - a1), (v1 - v2).abs()))
}

/// Full-domain overlap of `a` with `b` interpolated onto `a`'s nodes.
fn cross_overlap(a: &EigenState, b: &EigenState) -> f64 {
    let la = a.layout();
    let h2 = la.h() * la.h();
    a.psi
        .iter()
        .enumerate()
        .map(|(k, v)| la.multiplicity(k) * v * b.sample(la.position(k)))
        .sum::<f64>()
        * h2
}

/// Finds `state` among `candidates` (same parity, any grid). The candidate
/// at the same position `ordinal` is tried first, then neighbors by overlap.
pub fn track_states(state: &EigenState, ordinal: usize, candidates: &[EigenState]) -> Option<Track> {
    let ov = |c: &EigenState| {
        if c.parity != state.parity {
            0.0
        } else {
            cross_overlap(c, state)
        }
    };
    if let Some(c) = candidates.get(ordinal) {
        let o = ov(c);
        if o.abs() >= TRACK_THRESHOLD {
            return Some(Track { index: ordinal, overlap: o });
        }
    }
    let lo = ordinal.saturating_sub(TRACK_SEARCH);
    let hi = (ordinal + TRACK_SEARCH + 1).min(candidates.len());
    (lo..hi)
        .map(|k| Track {
            index: k,
            overlap: ov(&candidates[k]),
        })
        .filter(|t| t.overlap.abs() >= TRACK_THRESHOLD)
        .max_by(|a, b| a.overlap.abs().total_cmp(&b.overlap.abs()))
}

/// Refines one pair given its `(even, odd)` members at two or more spacings.
pub fn refine_pair(ordinal: usize, members: &[(&EigenState, &EigenState)]) -> Result<RefinedSplitting, SolverError> {
    for (e, o) in members {
        if e.parity != Parity::Even || o.parity != Parity::Odd {
            return Err(SolverError::ParityMismatch {
                even: e.parity,
                odd: o.parity,
            });
        }
    }
    let mut raw: Vec<(f64, f64, f64)> = members
        .iter()
        .map(|(e, o)| {
            (
                e.layout().h(),
                0.5 * (e.energy + o.energy),
                (o.energy - e.energy).abs(),
            )
        })
        .collect();
    raw.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (extrapolated, error_estimate) =
        richardson_h2(&raw.iter().map(|r| (r.0, r.2)).collect::<Vec<_>>())?;
    let (energy_mean, _) = richardson_h2(&raw.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>())?;
    Ok(RefinedSplitting {
        ordinal,
        raw,
        energy_mean,
        extrapolated,
        error_estimate,
        tracked: true,
    })
}

/// Refines every ordinal pair of the first spectrum, following each member
/// through the other spectra by overlap.
pub fn refine_splittings(levels: &[Spectrum]) -> Result<Vec<RefinedSplitting>, SolverError> {
    if levels.is_empty() {
        return Err(SolverError::TooFewResolutions);
    }
    let distinct = levels
        .iter()
        .map(|s| s.h)
        .filter(|&h| (h - levels[0].h).abs() > 1e-12 * levels[0].h)
        .count();
    if distinct == 0 {
        return Err(SolverError::TooFewResolutions);
    }
    let base = &levels[0];
    let n = base.even.len().min(base.odd.len());
    (0..n)
        .map(|k| {
            let (e0, o0) = (&base.even[k], &base.odd[k]);
            let mut members = vec![(e0, o0)];
            let mut tracked = true;
            for level in &levels[1..] {
                let te = track_states(e0, k, &level.even);
                let to = track_states(o0, k, &level.odd);
                match (te, to) {
                    (Some(te), Some(to)) => members.push((&level.even[te.index], &level.odd[to.index])),
                    _ => {
                        tracked = false;
                        // keep the ordinal counterpart so raw values survive
                        if let (Some(e), Some(o)) = (level.even.get(k), level.odd.get(k)) {
                            members.push((e, o));
                        }
                    }
                }
            }
            if members.len() < 2 {
                let r = (o0.energy - e0.energy).abs();
                return Ok(RefinedSplitting {
                    ordinal: k,
                    raw: vec![(base.h, 0.5 * (e0.energy + o0.energy), r)],
                    energy_mean: 0.5 * (e0.energy + o0.energy),
                    extrapolated: r,
                    error_estimate: f64::NAN,
                    tracked: false,
                });
            }
            let mut r = refine_pair(k, &members)?;
            if !tracked {
                r.tracked = false;
                r.extrapolated = r.finest();
                r.energy_mean = r.raw.last().map_or(f64::NAN, |x| x.1);
            }
            Ok(r)
        })
        .collect()
}

/// Solves the double well at each spacing and refines pair `ordinal`.
pub fn refine_splitting(
    g: &DoubleWellGeometry,
    ordinal: usize,
    h_sequence: &[f64],
    e_max: f64,
    tolerance: f64,
) -> Result<RefinedSplitting, SolverError> {
    if h_sequence.len() < 2 {
        return Err(SolverError::TooFewResolutions);
    }
    let levels = h_sequence
        .iter()
        .map(|&h| solve_spectrum(g, h, e_max, tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    refine_splittings(&levels)?
        .into_iter()
        .nth(ordinal)
        .ok_or_else(|| SolverError::InvalidParams(format!("no pair {ordinal} below E_max = {e_max}")))
}
