//! Finite-difference Helmholtz eigensolver on a uniform grid, one mirror
//! parity sector at a time.
//!
//! Only the half domain `x <= 0` is discretized. Grid nodes sit at
//! `(-i h, j h)`, so the symmetry line is a grid column. The even sector keeps
//! that column and folds the mirror neighbor into it; the odd sector drops it
//! (ψ = 0 on the axis). Unknowns are scaled by the square root of each node's
//! multiplicity in the full domain, which makes the folded operator symmetric
//! and the Euclidean norm equal to the full-domain norm.
//!
//! Walls are Dirichlet. A node whose neighbor lies outside gets the wall
//! distance θh along that grid line folded into its diagonal (`1/(θh²)`),
//! keeping the matrix symmetric while tracking curved and off-grid walls to
//! second order. The barrier potential is averaged over each node's dual cell.

mod band;
mod lanczos;
mod refine;
mod sparse;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{DoubleWellGeometry, Point, Region};

pub use band::{BandLdlt, SingularShift};
pub use refine::{
    refine_pair, refine_splitting, refine_splittings, richardson_h2, track_states, RefinedSplitting,
    Track,
};
pub use sparse::SparseSymmetric;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 8.0;
/// Relative widening of each energy window on both sides.
pub const WINDOW_OVERLAP: f64 = 0.10;
const TARGET_PER_WINDOW: usize = 20;
const MAX_PER_WINDOW: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    /// Sign picked up under the mirror `x -> -x`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => Err(format!("unknown parity `{s}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid too coarse: {points_per_wavelength:.2} points per wavelength at E_max = {e_max} (need at least {MIN_POINTS_PER_WAVELENGTH})")]
    GridTooCoarse { points_per_wavelength: f64, e_max: f64 },
    #[error("invalid discretization: {0}")]
    InvalidParams(String),
    #[error("E_max = {e_max} must lie below the barrier height {barrier_height}")]
    AboveBarrier { e_max: f64, barrier_height: f64 },
    #[error("{parity} sector: eigensolver did not converge in window [{lo:.6}, {hi:.6}] ({found} of {expected} eigenpairs)")]
    NonConvergence {
        parity: Parity,
        lo: f64,
        hi: f64,
        found: usize,
        expected: usize,
    },
    #[error("{parity} sector: shifted operator is singular near {shift}")]
    SingularShift { parity: Parity, shift: f64 },
    #[error("{parity} sector: recovered {found} eigenvalues below {e_max}, inertia count is {expected}")]
    CountMismatch {
        parity: Parity,
        e_max: f64,
        found: usize,
        expected: usize,
    },
    #[error("pair members have parities ({even}, {odd}), expected (even, odd)")]
    ParityMismatch { even: Parity, odd: Parity },
    #[error("Richardson refinement needs at least two distinct grid spacings")]
    TooFewResolutions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationParams {
    pub h: f64,
    pub e_max: f64,
    pub parity: Parity,
    pub tolerance: f64,
}

impl DiscretizationParams {
    pub fn new(h: f64, e_max: f64, parity: Parity) -> Self {
        DiscretizationParams {
            h,
            e_max,
            parity,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn points_per_wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.h * self.e_max.sqrt())
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SolverError::InvalidParams(format!("h must be positive, got {}", self.h)));
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return Err(SolverError::InvalidParams(format!(
                "E_max must be positive, got {}",
                self.e_max
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidParams(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        let ppw = self.points_per_wavelength();
        if ppw < MIN_POINTS_PER_WAVELENGTH {
            return Err(SolverError::GridTooCoarse {
                points_per_wavelength: ppw,
                e_max: self.e_max,
            });
        }
        Ok(())
    }
}

const NO_NODE: u32 = u32::MAX;

/// Which grid points carry unknowns, and in what order.
#[derive(Debug, Clone)]
pub struct GridLayout {
    h: f64,
    parity: Parity,
    n_cols: usize,
    j_min: i64,
    n_rows: usize,
    index: Vec<u32>,
    nodes: Vec<(u32, i32)>,
    potential: Vec<f64>,
}

impl GridLayout {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grid column count; column `i` sits at `x = -i h`.
    pub fn columns(&self) -> usize {
        self.n_cols
    }

    /// Inclusive row range; row `j` sits at `y = j h`.
    pub fn rows(&self) -> (i64, i64) {
        (self.j_min, self.j_min + self.n_rows as i64 - 1)
    }

    /// Grid indices `(i, j)` of node `k`.
    pub fn node(&self, k: usize) -> (usize, i64) {
        let (i, j) = self.nodes[k];
        (i as usize, j as i64)
    }

    pub fn position(&self, k: usize) -> Point {
        let (i, j) = self.node(k);
        Point::new(-(i as f64) * self.h, j as f64 * self.h)
    }

    pub fn index_of(&self, i: usize, j: i64) -> Option<usize> {
        if i >= self.n_cols || j < self.j_min || j >= self.j_min + self.n_rows as i64 {
            return None;
        }
        let k = self.index[i * self.n_rows + (j - self.j_min) as usize];
        (k != NO_NODE).then_some(k as usize)
    }

    /// Copies of node `k` in the mirror-extended domain.
    pub fn multiplicity(&self, k: usize) -> f64 {
        if self.nodes[k].0 == 0 {
            1.0
        } else {
            2.0
        }
    }

    /// Potential assigned to node `k`.
    pub fn potential(&self, k: usize) -> f64 {
        self.potential[k]
    }
}

/// Discrete operator `-∇² + V` for one parity sector.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    layout: Arc<GridLayout>,
    matrix: SparseSymmetric,
}

impl Hamiltonian {
    pub fn layout(&self) -> &Arc<GridLayout> {
        &self.layout
    }

    pub fn matrix(&self) -> &SparseSymmetric {
        &self.matrix
    }

    pub fn parity(&self) -> Parity {
        self.layout.parity
    }
}

/// Fraction of the way from `a` (kept) to `b` (excluded) at which the first
/// excluded point appears.
fn wall_fraction(excluded: impl Fn(Point) -> bool, a: Point, b: Point) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excluded(a + (b - a) * mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1e-6)
}

pub fn assemble_hamiltonian(
    g: &DoubleWellGeometry,
    d: &DiscretizationParams,
) -> Result<Hamiltonian, SolverError> {
    d.validate()?;
    let h = d.h;
    let vb = g.barrier_height();
    let hard = vb.is_infinite();
    let keeps = |r: Region| match r {
        Region::LeftWell | Region::RightWell => true,
        Region::Barrier => !hard,
        Region::Outside => false,
    };
    let excluded = |p: Point| !keeps(g.classify(p));

    let (lo, hi) = g.bounding_box();
    let n_cols = (-lo.x / h).floor() as usize + 2;
    let j_min = (lo.y / h).floor() as i64 - 1;
    let j_max = (hi.y / h).ceil() as i64 + 1;
    let n_rows = (j_max - j_min + 1) as usize;
    let pos = |i: usize, j: i64| Point::new(-(i as f64) * h, j as f64 * h);

    let mut included = vec![false; n_cols * n_rows];
    for i in 0..n_cols {
        if i == 0 && d.parity == Parity::Odd {
            continue;
        }
        for r in 0..n_rows {
            included[i * n_rows + r] = keeps(g.classify(pos(i, j_min + r as i64)));
        }
    }

    // order nodes along the shorter grid direction to keep the band narrow
    let column_major = {
        let col_len = (0..n_cols)
            .map(|i| (0..n_rows).filter(|&r| included[i * n_rows + r]).count())
            .max()
            .unwrap_or(0);
        let row_len = (0..n_rows)
            .map(|r| (0..n_cols).filter(|&i| included[i * n_rows + r]).count())
            .max()
            .unwrap_or(0);
        col_len <= row_len
    };
    let mut index = vec![NO_NODE; n_cols * n_rows];
    let mut nodes = Vec::new();
    let mut push = |i: usize, r: usize| {
        if included[i * n_rows + r] {
            index[i * n_rows + r] = nodes.len() as u32;
            nodes.push((i as u32, (j_min + r as i64) as i32));
        }
    };
    if column_major {
        for i in 0..n_cols {
            for r in 0..n_rows {
                push(i, r);
            }
        }
    } else {
        for r in 0..n_rows {
            for i in 0..n_cols {
                push(i, r);
            }
        }
    }

    let potential: Vec<f64> = nodes
        .iter()
        .map(|&(i, j)| {
            if hard {
                return 0.0;
            }
            let c = pos(i as usize, j as i64);
            let (mut barrier, mut inside) = (0usize, 0usize);
            for a in 0..4 {
                for b in 0..4 {
                    let off = |q: usize| ((q as f64 + 0.5) / 4.0 - 0.5) * h;
                    match g.classify(Point::new(c.x + off(a), c.y + off(b))) {
                        Region::Barrier => {
                            barrier += 1;
                            inside += 1;
                        }
                        Region::LeftWell | Region::RightWell => inside += 1,
                        Region::Outside => {}
                    }
                }
            }
            if inside == 0 {
                match g.classify(c) {
                    Region::Barrier => vb,
                    _ => 0.0,
                }
            } else {
                vb * barrier as f64 / inside as f64
            }
        })
        .collect();

    let layout = GridLayout {
        h,
        parity: d.parity,
        n_cols,
        j_min,
        n_rows,
        index,
        nodes,
        potential,
    };

    let inv_h2 = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(layout.len());
    let mut entries = Vec::new();
    for k in 0..layout.len() {
        let (i, j) = layout.node(k);
        let here = pos(i, j);
        let mut dk = layout.potential[k];
        // x toward the axis, x away from it, y up, y down
        let steps: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];
        for (di, dj) in steps {
            let ni = i as i64 + di;
            let nj = j + dj;
            // the even sector folds the mirror neighbor of the axis column onto column 1
            let (ti, mirrored) = if ni < 0 { (1usize, true) } else { (ni as usize, false) };
            match layout.index_of(ti, nj) {
                Some(m) => {
                    let w = if (i == 0) != (ti == 0) {
                        // coupling across the axis column, symmetrized
                        std::f64::consts::SQRT_2
                    } else {
                        1.0
                    };
                    if m > k && !mirrored {
                        entries.push((k, m, -w * inv_h2));
                    }
                    dk += inv_h2;
                }
                None => {
                    let neighbor = pos(ti, nj);
                    let region_out = excluded(if mirrored { pos(1, nj) } else { neighbor });
                    let theta = if region_out {
                        wall_fraction(excluded, here, if mirrored { Point::new(h, here.y) } else { neighbor })
                    } else {
                        // axis column removed by odd parity: ψ = 0 exactly on the node
                        1.0
                    };
                    dk += inv_h2 / theta;
                }
            }
        }
        diag.push(dk);
    }
    Ok(Hamiltonian {
        layout: Arc::new(layout),
        matrix: SparseSymmetric::from_entries(diag, &entries),
    })
}

/// One stationary state of one parity sector.
#[derive(Debug, Clone)]
pub struct EigenState {
    pub id: usize,
    pub energy: f64,
    pub parity: Parity,
    /// ψ at the half-domain nodes, in layout order, normalized over the full
    /// mirror-extended domain: `h² Σ ψ² = 1`.
    pub psi: Vec<f64>,
    /// `||Hψ - Eψ|| / ||ψ||`.
    pub residual: f64,
    layout: Arc<GridLayout>,
}

impl EigenState {
    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn shared_layout(&self) -> &Arc<GridLayout> {
        &self.layout
    }

    /// ψ at grid point `(i, j)` of the full domain; negative `i` addresses the
    /// mirror image at `x = -i h > 0`.
    pub fn value(&self, i: i64, j: i64) -> f64 {
        let sign = if i < 0 { self.parity.sign() } else { 1.0 };
        self.layout
            .index_of(i.unsigned_abs() as usize, j)
            .map_or(0.0, |k| sign * self.psi[k])
    }

    /// Bilinear interpolation of ψ at an arbitrary point.
    pub fn sample(&self, p: Point) -> f64 {
        let h = self.layout.h;
        let fi = -p.x / h;
        let fj = p.y / h;
        let (i0, j0) = (fi.floor(), fj.floor());
        let (ti, tj) = (fi - i0, fj - j0);
        let (i0, j0) = (i0 as i64, j0 as i64);
        let v = |i: i64, j: i64| self.value(i, j);
        (1.0 - ti) * ((1.0 - tj) * v(i0, j0) + tj * v(i0, j0 + 1))
            + ti * ((1.0 - tj) * v(i0 + 1, j0) + tj * v(i0 + 1, j0 + 1))
    }

    /// `h² Σ ψ²` over the mirror-extended domain.
    pub fn full_norm_sq(&self) -> f64 {
        let h2 = self.layout.h * self.layout.h;
        self.psi
            .iter()
            .enumerate()
            .map(|(k, v)| self.layout.multiplicity(k) * v * v)
            .sum::<f64>()
            * h2
    }

    /// Full-domain inner product with another state on the same layout.
    pub fn overlap(&self, other: &EigenState) -> f64 {
        assert!(Arc::ptr_eq(&self.layout, &other.layout), "states live on different grids");
        let h2 = self.layout.h * self.layout.h;
        self.psi
            .iter()
            .zip(&other.psi)
            .enumerate()
            .map(|(k, (a, b))| self.layout.multiplicity(k) * a * b)
            .sum::<f64>()
            * h2
    }

    fn from_unit(pair: lanczos::Eigenpair, parity: Parity, layout: Arc<GridLayout>) -> Self {
        let h = layout.h;
        let psi = pair
            .vector
            .iter()
            .enumerate()
            .map(|(k, u)| u / (h * layout.multiplicity(k).sqrt()))
            .collect();
        EigenState {
            id: 0,
            energy: pair.value,
            parity,
            psi,
            residual: pair.residual,
            layout,
        }
    }
}

fn window_seed(parity: Parity, k: usize) -> u64 {
    0x9e37_79b9_7f4a_7c15u64
        .wrapping_mul(k as u64 + 1)
        .wrapping_add(parity as u64)
}

/// All eigenpairs of one sector with `E <= e_max`, ascending.
pub fn solve_band(op: &Hamiltonian, e_max: f64, tolerance: f64) -> Result<Vec<EigenState>, SolverError> {
    let parity = op.parity();
    let m = op.matrix();
    let singular = |s: SingularShift| SolverError::SingularShift { parity, shift: s.shift };
    let total = lanczos::count_below(m, e_max).map_err(singular)?;
    if total == 0 {
        return Ok(Vec::new());
    }

    // split [0, e_max] until no window holds too many eigenvalues
    let n_init = total.div_ceil(TARGET_PER_WINDOW).max(1);
    let mut edges: Vec<(f64, usize)> = (0..=n_init)
        .map(|k| {
            let e = e_max * k as f64 / n_init as f64;
            let c = if k == n_init { Ok(total) } else { lanczos::count_below(m, e) };
            c.map(|c| (e, c))
        })
        .collect::<Result<_, _>>()
        .map_err(singular)?;
    loop {
        let split = edges
            .windows(2)
            .position(|w| w[1].1 - w[0].1 > MAX_PER_WINDOW && w[1].0 - w[0].0 > 1e-6 * e_max);
        match split {
            Some(p) => {
                let mid = 0.5 * (edges[p].0 + edges[p + 1].0);
                let c = lanczos::count_below(m, mid).map_err(singular)?;
                edges.insert(p + 1, (mid, c));
            }
            None => break,
        }
    }

    let windows: Vec<(f64, f64)> = edges
        .windows(2)
        .filter(|w| w[1].1 > w[0].1)
        .map(|w| {
            let pad = WINDOW_OVERLAP * (w[1].0 - w[0].0);
            ((w[0].0 - pad).max(0.0), w[1].0 + pad)
        })
        .collect();

    let results: Vec<Vec<lanczos::Eigenpair>> = windows
        .par_iter()
        .enumerate()
        .map(|(k, &(lo, hi))| {
            let below_hi = lanczos::count_below(m, hi).map_err(singular)?;
            let below_lo = lanczos::count_below(m, lo).map_err(singular)?;
            let expected = below_hi - below_lo;
            lanczos::solve_window(m, lo, hi, expected, tolerance, window_seed(parity, k)).map_err(
                |f| match f {
                    lanczos::WindowFailure::Singular(s) => singular(s),
                    lanczos::WindowFailure::Incomplete { found } => SolverError::NonConvergence {
                        parity,
                        lo,
                        hi,
                        found,
                        expected,
                    },
                },
            )
        })
        .collect::<Result<_, _>>()?;

    let mut pairs: Vec<lanczos::Eigenpair> = results.into_iter().flatten().collect();
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut merged: Vec<lanczos::Eigenpair> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let dup = merged.iter().rev().take_while(|q| p.value - q.value < 1e-9).position(|q| {
            let ov: f64 = q.vector.iter().zip(&p.vector).map(|(a, b)| a * b).sum();
            ov.abs() > 0.99
        });
        match dup {
            Some(back) => {
                let idx = merged.len() - 1 - back;
                if p.residual < merged[idx].residual {
                    merged[idx] = p;
                }
            }
            None => merged.push(p),
        }
    }
    merged.retain(|p| p.value <= e_max);
    if merged.len() != total {
        return Err(SolverError::CountMismatch {
            parity,
            e_max,
            found: merged.len(),
            expected: total,
        });
    }
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let mut s = EigenState::from_unit(p, parity, op.layout().clone());
            s.id = k;
            // fix the overall sign: largest-magnitude component positive
            let pivot = s
                .psi
                .iter()
                .copied()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < 0.0 {
                s.psi.iter_mut().for_each(|v| *v = -*v);
            }
            s
        })
        .collect())
}

/// Both parity sectors of one double well at one resolution.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub h: f64,
    pub e_max: f64,
    pub even: Vec<EigenState>,
    pub odd: Vec<EigenState>,
}

impl Spectrum {
    pub fn sector(&self, parity: Parity) -> &[EigenState] {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }

    /// States of both sectors ordered by energy (even first on ties).
    pub fn merged(&self) -> Vec<&EigenState> {
        let mut all: Vec<&EigenState> = self.even.iter().chain(&self.odd).collect();
        all.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.parity.cmp(&b.parity)));
        all
    }

    pub fn count(&self) -> usize {
        self.even.len() + self.odd.len()
    }
}

/// Solves both sectors; ids number the merged spectrum in energy order.
pub fn solve_spectrum(
    g: &DoubleWellGeometry,
    h: f64,
    e_max: f64,
    tolerance: f64,
) -> Result<Spectrum, SolverError> {
    if e_max >= g.barrier_height() {
        return Err(SolverError::AboveBarrier {
            e_max,
            barrier_height: g.barrier_height(),
        });
    }
    let solve = |parity| {
        let d = DiscretizationParams {
            h,
            e_max,
            parity,
            tolerance,
        };
        let op = assemble_hamiltonian(g, &d)?;
        solve_band(&op, e_max, tolerance)
    };
    let (even, odd) = rayon::join(|| solve(Parity::Even), || solve(Parity::Odd));
    let mut spec = Spectrum {
        h,
        e_max,
        even: even?,
        odd: odd?,
    };
    let order: Vec<(Parity, usize)> = spec.merged().iter().map(|s| (s.parity, s.id)).collect();
    for (gid, (parity, k)) in order.into_iter().enumerate() {
        match parity {
            Parity::Even => spec.even[k].id = gid,
            Parity::Odd => spec.odd[k].id = gid,
        }
    }
    Ok(spec)
}
