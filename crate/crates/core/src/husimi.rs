//! Coherent-state projection of eigenstates along a line next to the
//! barrier, and the barrier statistics derived from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{DoubleWellGeometry, Point, Region};
use crate::qsolver::EigenState;

pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HusimiError {
    #[error("barrier line extent {extent:.4} is shorter than 4σ = {needed:.4}")]
    LineTooShort { extent: f64, needed: f64 },
    #[error("no grid column inside the well next to the barrier")]
    NoLine,
    #[error("invalid Husimi parameters: {0}")]
    InvalidParams(String),
    #[error("barrier amplitude is zero; mean normal momentum undefined")]
    ZeroAmplitude,
}

/// Vertical sampling line one grid cell inside the left well.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierLine {
    pub x_line: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub spacing: f64,
}

impl BarrierLine {
    /// Places the line on the grid column `x = -i h` nearest the barrier with
    /// `x <= x_interface - h`, and spans the run of well nodes on it that
    /// faces the barrier.
    pub fn new(g: &DoubleWellGeometry, h: f64) -> Result<Self, HusimiError> {
        if !(h > 0.0) {
            return Err(HusimiError::InvalidParams(format!("spacing {h}")));
        }
        let face = g.barrier_face();
        let i = ((h - face.x_interface) / h - 1e-9).ceil();
        let x_line = -i * h;
        let in_well = |j: i64| g.classify(Point::new(x_line, j as f64 * h)) == Region::LeftWell;
        let j_lo = (face.y_min / h).ceil() as i64;
        let j_hi = (face.y_max / h).floor() as i64;
        let center = ((face.y_min + face.y_max) / (2.0 * h)).round() as i64;
        if !in_well(center) {
            return Err(HusimiError::NoLine);
        }
        let mut a = center;
        while a - 1 >= j_lo && in_well(a - 1) {
            a -= 1;
        }
        let mut b = center;
        while b < j_hi && in_well(b + 1) {
            b += 1;
        }
        Ok(BarrierLine {
            x_line,
            y_min: a as f64 * h,
            y_max: b as f64 * h,
            spacing: h,
        })
    }

    /// The same line reflected into the right well.
    pub fn mirrored(&self) -> Self {
        BarrierLine {
            x_line: -self.x_line,
            ..self.clone()
        }
    }

    pub fn extent(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Sample ordinates, `y_min` to `y_max` in steps of `spacing`.
    pub fn ordinates(&self) -> Vec<f64> {
        let n = (self.extent() / self.spacing).round() as usize;
        (0..=n).map(|k| self.y_min + k as f64 * self.spacing).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        self.ordinates().into_iter().map(|y| Point::new(self.x_line, y)).collect()
    }
}

/// `H(y₀, p_y)` on a rectangular grid, row-major in `y0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub y0: Vec<f64>,
    pub py: Vec<f64>,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.py.len() + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid indices of the largest entry.
    pub fn argmax(&self) -> (usize, usize) {
        let k = (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        (k / self.py.len(), k % self.py.len())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let d = 0.5 * (x[k] - x[k - 1]);
        w[k - 1] += d;
        w[k] += d;
    }
    w
}

/// Husimi projection of arbitrary line samples `psi(ys)` with coherent
/// states of width `sigma`, on `n_y0 × n_py` points spanning the sample
/// range and `|p_y| <= p_max`.
pub fn husimi_from_samples(
    ys: &[f64],
    psi: &[Complex64],
    sigma: f64,
    p_max: f64,
    n_y0: usize,
    n_py: usize,
) -> Result<HusimiGrid, HusimiError> {
    if !(sigma > 0.0) || !(p_max >= 0.0) || n_y0 < 2 || n_py < 2 || ys.len() < 2 || ys.len() != psi.len() {
        return Err(HusimiError::InvalidParams(format!(
            "σ = {sigma}, p_max = {p_max}, grid {n_y0}×{n_py}, {} samples",
            ys.len()
        )));
    }
    let (y_lo, y_hi) = (ys[0], ys[ys.len() - 1]);
    if y_hi - y_lo < 4.0 * sigma {
        return Err(HusimiError::LineTooShort {
            extent: y_hi - y_lo,
            needed: 4.0 * sigma,
        });
    }
    let y0 = linspace(y_lo, y_hi, n_y0);
    let py = linspace(-p_max, p_max, n_py);
    let w = trapezoid_weights(ys);
    let norm = (PI * sigma * sigma).powf(-0.25);
    let phases: Vec<Vec<Complex64>> = py
        .iter()
        .map(|&p| ys.iter().map(|&y| Complex64::from_polar(1.0, -p * y)).collect())
        .collect();
    let mut values = Vec::with_capacity(n_y0 * n_py);
    for &c in &y0 {
        let env: Vec<Complex64> = ys
            .iter()
            .zip(psi)
            .zip(&w)
            .map(|((&y, &v), &wk)| v * (wk * norm * (-(y - c).powi(2) / (2.0 * sigma * sigma)).exp()))
            .collect();
        for ph in &phases {
            let s: Complex64 = env.iter().zip(ph).map(|(a, b)| a * b).sum();
            values.push(s.norm_sqr());
        }
    }
    Ok(HusimiGrid { y0, py, values })
}

/// Projection of a real eigenstate along `line` with momenta `|p_y| <= √E`.
pub fn husimi_grid(
    state: &EigenState,
    line: &BarrierLine,
    sigma: f64,
    energy: f64,
    n_y0: usize,
    n_py: usize,
) -> Result<HusimiGrid, HusimiError> {
    let ys = line.ordinates();
    let psi: Vec<Complex64> = line
        .points()
        .into_iter()
        .map(|p| Complex64::new(state.sample(p), 0.0))
        .collect();
    husimi_from_samples(&ys, &psi, sigma, energy.max(0.0).sqrt(), n_y0, n_py)
}

fn integrate(grid: &HusimiGrid, f: impl Fn(f64) -> f64) -> f64 {
    let (wy, wp) = (trapezoid_weights(&grid.y0), trapezoid_weights(&grid.py));
    let mut total = 0.0;
    for (i, a) in wy.iter().enumerate() {
        for (j, b) in wp.iter().enumerate() {
            total += a * b * f(grid.py[j]) * grid.get(i, j);
        }
    }
    total
}

/// `⟨ψ⟩ = ∬ H dy₀ dp_y`.
pub fn barrier_amplitude(grid: &HusimiGrid) -> f64 {
    integrate(grid, |_| 1.0).max(0.0)
}

/// `⟨p_x⟩ = ∬ √(E − p_y²) H dy₀ dp_y / ⟨ψ⟩`.
pub fn mean_normal_momentum(grid: &HusimiGrid, energy: f64) -> Result<f64, HusimiError> {
    let amp = barrier_amplitude(grid);
    if amp <= 0.0 {
        return Err(HusimiError::ZeroAmplitude);
    }
    let p = integrate(grid, |py| (energy - py * py).max(0.0).sqrt()) / amp;
    Ok(p.clamp(0.0, energy.max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HusimiFlag {
    ZeroAmplitude,
    LineTooShort,
    UpstreamFlagged,
}

impl HusimiFlag {
    pub fn name(self) -> &'static str {
        match self {
            HusimiFlag::ZeroAmplitude => "zero_amplitude",
            HusimiFlag::LineTooShort => "line_too_short",
            HusimiFlag::UpstreamFlagged => "upstream_flagged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HusimiSummary {
    pub pair: usize,
    pub e_mean: f64,
    pub amp: f64,
    pub p_norm: f64,
    pub weighted: f64,
    pub flags: Vec<HusimiFlag>,
    pub grid: Option<HusimiGrid>,
}

/// Coherent-state width `E^{-1/4}`.
pub fn default_sigma(e_mean: f64) -> f64 {
    e_mean.powf(-0.25)
}

/// Barrier statistics of one pair from its even member.
pub fn summarize_pair(
    pair: usize,
    even: &EigenState,
    e_mean: f64,
    upstream_flagged: bool,
    line: &BarrierLine,
    n_y0: usize,
    n_py: usize,
) -> Result<HusimiSummary, HusimiError> {
    let mut flags = Vec::new();
    if upstream_flagged {
        flags.push(HusimiFlag::UpstreamFlagged);
    }
    let grid = match husimi_grid(even, line, default_sigma(e_mean), e_mean, n_y0, n_py) {
        Ok(g) => g,
        Err(HusimiError::LineTooShort { .. }) => {
            flags.push(HusimiFlag::LineTooShort);
            return Ok(HusimiSummary {
                pair,
                e_mean,
                amp: f64::NAN,
                p_norm: f64::NAN,
                weighted: f64::NAN,
                flags,
                grid: None,
            });
        }
        Err(e) => return Err(e),
    };
    let amp = barrier_amplitude(&grid);
    let (p_norm, weighted) = match mean_normal_momentum(&grid, e_mean) {
        Ok(p) => (p, amp * p),
        Err(_) => {
            flags.push(HusimiFlag::ZeroAmplitude);
            (f64::NAN, 0.0)
        }
    };
    Ok(HusimiSummary {
        pair,
        e_mean,
        amp,
        p_norm,
        weighted,
        flags,
        grid: Some(grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, dy: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dy).collect()
    }

    #[test]
    fn zero_state_gives_zero_grid() {
        let ys = line(200, 0.01);
        let psi = vec![Complex64::new(0.0, 0.0); ys.len()];
        let g = husimi_from_samples(&ys, &psi, 0.2, 5.0, 16, 16).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert_eq!(barrier_amplitude(&g), 0.0);
        assert_eq!(mean_normal_momentum(&g, 25.0), Err(HusimiError::ZeroAmplitude));
    }

    #[test]
    fn short_line_is_rejected() {
        let ys = line(50, 0.01);
        let psi = vec![Complex64::new(1.0, 0.0); ys.len()];
        assert!(matches!(
            husimi_from_samples(&ys, &psi, 0.2, 5.0, 16, 16),
            Err(HusimiError::LineTooShort { .. })
        ));
    }

    #[test]
    fn constant_grid_integrates_to_area() {
        let g = HusimiGrid {
            y0: linspace(0.0, 2.0, 11),
            py: linspace(-3.0, 3.0, 7),
            values: vec![0.5; 77],
        };
        assert!((barrier_amplitude(&g) - 0.5 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_limits() {
        let e: f64 = 16.0;
        let py = linspace(-4.0, 4.0, 9);
        let mut at_zero = vec![0.0; 3 * 9];
        let mut at_edge = vec![0.0; 3 * 9];
        for i in 0..3 {
            at_zero[i * 9 + 4] = 1.0;
            at_edge[i * 9] = 1.0;
            at_edge[i * 9 + 8] = 1.0;
        }
        let y0 = linspace(0.0, 1.0, 3);
        let g0 = HusimiGrid { y0: y0.clone(), py: py.clone(), values: at_zero };
        let g1 = HusimiGrid { y0, py, values: at_edge };
        assert!((mean_normal_momentum(&g0, e).unwrap() - 4.0).abs() < 1e-12);
        assert!(mean_normal_momentum(&g1, e).unwrap().abs() < 1e-12);
    }
}
