//! Exact levels of the one-dimensional symmetric double square well, and the
//! separable spectrum of the rectangular double well built from them.
//!
//! The wells occupy `d/2 < |x| < d/2 + L` with hard outer walls; the barrier
//! `|x| < d/2` has height `V_b`. Levels are roots of pole-free matching
//! determinants, bracketed on a fine grid in `k = sqrt(E)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::qsolver::Parity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OneDError {
    #[error("invalid 1D well: {0}")]
    InvalidSpec(String),
    #[error("E_max must be positive, got {0}")]
    InvalidEnergy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDWellSpec {
    pub well_width: f64,
    pub barrier_width: f64,
    /// `f64::INFINITY` decouples the wells; `0` merges them into one box.
    pub barrier_height: f64,
}

impl OneDWellSpec {
    pub fn new(well_width: f64, barrier_width: f64, barrier_height: f64) -> Self {
        OneDWellSpec {
            well_width,
            barrier_width,
            barrier_height,
        }
    }

    pub fn validate(&self) -> Result<(), OneDError> {
        if !(self.well_width > 0.0 && self.well_width.is_finite()) {
            return Err(OneDError::InvalidSpec(format!("well width {}", self.well_width)));
        }
        if !(self.barrier_width > 0.0 && self.barrier_width.is_finite()) {
            return Err(OneDError::InvalidSpec(format!("barrier width {}", self.barrier_width)));
        }
        if !(self.barrier_height >= 0.0) {
            return Err(OneDError::InvalidSpec(format!("barrier height {}", self.barrier_height)));
        }
        Ok(())
    }

    /// Sign-changing function of `E` whose zeros are the levels of `parity`.
    pub fn matching(&self, parity: Parity, energy: f64) -> f64 {
        let k = energy.max(0.0).sqrt();
        let (l, half) = (self.well_width, 0.5 * self.barrier_width);
        let (s, c) = ((k * l).sin(), (k * l).cos());
        let vb = self.barrier_height;
        if vb.is_infinite() {
            return s;
        }
        if energy <= vb {
            let kappa = (vb - energy).sqrt();
            let t = (kappa * half).tanh();
            match parity {
                Parity::Even => kappa * t * s + k * c,
                // tanh(κd/2)/κ stays finite as κ → 0
                Parity::Odd => s + k * c * if kappa > 0.0 { t / kappa } else { half },
            }
        } else {
            let q = (energy - vb).sqrt();
            let (sq, cq) = ((q * half).sin(), (q * half).cos());
            match parity {
                Parity::Even => -q * sq * s + k * c * cq,
                Parity::Odd => cq * s + k * c * if q * half > 1e-8 { sq / q } else { half },
            }
        }
    }
}

/// One 1D level; `n` counts from 1 within its parity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub parity: Parity,
    pub n: usize,
    pub energy: f64,
}

/// All levels of one parity with `E <= e_max`, ascending.
pub fn levels(spec: &OneDWellSpec, parity: Parity, e_max: f64) -> Result<Vec<f64>, OneDError> {
    spec.validate()?;
    if !(e_max > 0.0 && e_max.is_finite()) {
        return Err(OneDError::InvalidEnergy(e_max));
    }
    let f = |k: f64| spec.matching(parity, k * k);
    let k_max = e_max.sqrt();
    let step = PI / (64.0 * spec.well_width);
    let n_steps = (k_max / step).ceil() as usize;
    let grid = |i: usize| (i as f64 * step).min(k_max);

    let mut roots = Vec::new();
    let mut prev = (grid(0), f(grid(0)));
    for i in 1..=n_steps {
        let k = grid(i);
        let v = f(k);
        if v == 0.0 {
            if k > 0.0 {
                roots.push(k);
            }
        } else if prev.1 != 0.0 && (prev.1 < 0.0) != (v < 0.0) {
            roots.push(bisect_root(&f, prev.0, k, prev.1));
        }
        prev = (k, v);
    }
    Ok(roots
        .into_iter()
        .map(|k| k * k)
        .filter(|&e| e > 0.0 && e <= e_max)
        .collect())
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 2e-14 * m {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Both parities merged in energy order.
pub fn all_levels(spec: &OneDWellSpec, e_max: f64) -> Result<Vec<Level>, OneDError> {
    let mut out = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        out.extend(
            levels(spec, parity, e_max)?
                .into_iter()
                .enumerate()
                .map(|(i, energy)| Level {
                    parity,
                    n: i + 1,
                    energy,
                }),
        );
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.parity.cmp(&b.parity)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDSplitting {
    pub n: usize,
    pub e_even: f64,
    pub e_odd: f64,
    pub e_mean: f64,
    pub delta_e: f64,
}

/// Pairs the n-th even with the n-th odd level. A root without a partner
/// below `e_max` is dropped.
pub fn splitting_1d(spec: &OneDWellSpec, e_max: f64) -> Result<Vec<OneDSplitting>, OneDError> {
    let even = levels(spec, Parity::Even, e_max)?;
    let odd = levels(spec, Parity::Odd, e_max)?;
    if even.len() != odd.len() {
        log::info!(
            "dropping {} unpaired 1D level(s) near E_max = {e_max}",
            even.len().abs_diff(odd.len())
        );
    }
    Ok(even
        .iter()
        .zip(&odd)
        .enumerate()
        .map(|(i, (&e, &o))| OneDSplitting {
            n: i + 1,
            e_even: e,
            e_odd: o,
            e_mean: 0.5 * (e + o),
            delta_e: o - e,
        })
        .collect())
}

/// One state of the separable rectangular double well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableState {
    pub parity: Parity,
    pub n_x: usize,
    pub n_y: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparablePair {
    pub n_x: usize,
    pub n_y: usize,
    pub e_even: f64,
    pub e_odd: f64,
    pub e_mean: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSpectrum {
    /// Per parity, ascending energy.
    pub even: Vec<SeparableState>,
    pub odd: Vec<SeparableState>,
    /// Pairs with both members below `e_max`, ordered by mean energy.
    pub pairs: Vec<SeparablePair>,
}

/// Spectrum of two `lx × ly` rectangles separated by a `d`-wide barrier
/// strip of height `vb`: `E±(n_x, n_y) = ε±(n_x) + (n_y π / ly)²`.
pub fn separable_oracle_2d(lx: f64, ly: f64, d: f64, vb: f64, e_max: f64) -> Result<SeparableSpectrum, OneDError> {
    if !(ly > 0.0 && ly.is_finite()) {
        return Err(OneDError::InvalidSpec(format!("height {ly}")));
    }
    let spec = OneDWellSpec::new(lx, d, vb);
    let ey = |n_y: usize| (n_y as f64 * PI / ly).powi(2);
    let sector = |parity| -> Result<Vec<SeparableState>, OneDError> {
        let eps = levels(&spec, parity, e_max)?;
        let mut v = Vec::new();
        for (i, &e) in eps.iter().enumerate() {
            let mut n_y = 1;
            while e + ey(n_y) <= e_max {
                v.push(SeparableState {
                    parity,
                    n_x: i + 1,
                    n_y,
                    energy: e + ey(n_y),
                });
                n_y += 1;
            }
        }
        v.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(v)
    };
    let even = sector(Parity::Even)?;
    let odd = sector(Parity::Odd)?;
    let mut pairs: Vec<SeparablePair> = even
        .iter()
        .filter_map(|e| {
            odd.iter().find(|o| o.n_x == e.n_x && o.n_y == e.n_y).map(|o| SeparablePair {
                n_x: e.n_x,
                n_y: e.n_y,
                e_even: e.energy,
                e_odd: o.energy,
                e_mean: 0.5 * (e.energy + o.energy),
                delta_e: o.energy - e.energy,
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.e_mean.total_cmp(&b.e_mean));
    Ok(SeparableSpectrum { even, odd, pairs })
}
