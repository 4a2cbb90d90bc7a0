//! Shift-invert Lanczos over one energy window.
//!
//! The eigenvalues of `H` inside `[lo, hi]` are the ones nearest the window
//! midpoint, hence the largest in magnitude for `(H - σI)^{-1}`. The expected
//! count comes from inertia, so the loop knows when it has them all; vectors
//! that converge are locked and later restarts are kept orthogonal to them,
//! which also recovers repeated eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::band::{BandLdlt, SingularShift};
use super::SparseSymmetric;

const MAX_RESTARTS: usize = 6;
const MAX_SHIFT_NUDGES: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Eigenpair {
    pub value: f64,
    /// Unit 2-norm.
    pub vector: Vec<f64>,
    /// `||H x - λ x||` for the unit vector.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum WindowFailure {
    Singular(SingularShift),
    Incomplete { found: usize },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalize<'a>(w: &mut [f64], basis: impl Iterator<Item = &'a [f64]> + Clone) {
    for _ in 0..2 {
        for q in basis.clone() {
            let c = dot(w, q);
            axpy(-c, q, w);
        }
    }
}

/// Factors `H - σI` near the requested shift, nudging it off singular points.
pub(crate) fn factor_near(
    op: &SparseSymmetric,
    shift: f64,
    scale: f64,
) -> Result<(BandLdlt, f64), SingularShift> {
    let mut sigma = shift;
    let mut last = None;
    for attempt in 0..MAX_SHIFT_NUDGES {
        match BandLdlt::factor(op, sigma) {
            Ok(f) => return Ok((f, sigma)),
            Err(e) => {
                last = Some(e);
                sigma = shift + scale * 1e-7 * (attempt as f64 + 1.0) * (-1f64).powi(attempt as i32);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Number of eigenvalues strictly below `sigma`.
pub(crate) fn count_below(op: &SparseSymmetric, sigma: f64) -> Result<usize, SingularShift> {
    if sigma <= 0.0 {
        // the operator is positive definite
        return Ok(0);
    }
    let (f, _) = factor_near(op, sigma, sigma.abs().max(1.0))?;
    Ok(f.negative_count())
}

/// All eigenpairs with eigenvalue in `[lo, hi]`; `expected` comes from inertia.
pub(crate) fn solve_window(
    op: &SparseSymmetric,
    lo: f64,
    hi: f64,
    expected: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<Eigenpair>, WindowFailure> {
    if expected == 0 {
        return Ok(Vec::new());
    }
    let n = op.dim();
    let (fact, sigma) = factor_near(op, 0.5 * (lo + hi), hi - lo).map_err(WindowFailure::Singular)?;
    let accept = tol * op.norm_estimate();
    let mut locked: Vec<Eigenpair> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..MAX_RESTARTS {
        let need = expected - locked.len();
        let max_steps = n.min(6 * need + 80 + locked.len());
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();

        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut q, locked.iter().map(|p| p.vector.as_slice()));
        let qn = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|v| *v /= qn);
        basis.push(q);

        let mut found = Vec::new();
        for k in 0..max_steps {
            let mut w = basis[k].clone();
            fact.solve_in_place(&mut w);
            let a = dot(&w, &basis[k]);
            axpy(-a, &basis[k], &mut w);
            if k > 0 {
                axpy(-beta[k - 1], &basis[k - 1], &mut w);
            }
            orthogonalize(
                &mut w,
                basis
                    .iter()
                    .map(|v| v.as_slice())
                    .chain(locked.iter().map(|p| p.vector.as_slice())),
            );
            alpha.push(a);
            let b = dot(&w, &w).sqrt();
            let steps = k + 1;
            let scale = alpha.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            let breakdown = b <= 1e-12 * scale || steps == n;
            let last = steps == max_steps || breakdown;

            if last || (steps >= need + 2 && steps % 5 == 0) {
                let t = DMatrix::from_fn(steps, steps, |i, j| {
                    if i == j {
                        alpha[i]
                    } else if i + 1 == j {
                        beta[i]
                    } else if j + 1 == i {
                        beta[j]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let candidates: Vec<usize> = (0..steps)
                    .filter(|&i| {
                        let theta = eig.eigenvalues[i];
                        if theta == 0.0 {
                            return false;
                        }
                        let lam = sigma + 1.0 / theta;
                        let est = (b * eig.eigenvectors[(steps - 1, i)]).abs();
                        lam >= lo && lam <= hi && est <= 1e-8 * theta.abs()
                    })
                    .collect();
                if candidates.len() >= need || last {
                    found = candidates
                        .iter()
                        .filter_map(|&i| {
                            let mut x = vec![0.0; n];
                            for (j, v) in basis.iter().enumerate() {
                                axpy(eig.eigenvectors[(j, i)], v, &mut x);
                            }
                            let xn = dot(&x, &x).sqrt();
                            x.iter_mut().for_each(|v| *v /= xn);
                            let mut hx = vec![0.0; n];
                            op.matvec(&x, &mut hx);
                            let value = dot(&x, &hx);
                            axpy(-value, &x, &mut hx);
                            let residual = dot(&hx, &hx).sqrt();
                            (residual <= accept && value >= lo && value <= hi).then_some(Eigenpair {
                                value,
                                vector: x,
                                residual,
                            })
                        })
                        .collect::<Vec<_>>();
                    if found.len() >= need || last {
                        break;
                    }
                }
            }
            w.iter_mut().for_each(|v| *v /= b);
            beta.push(b);
            basis.push(w);
        }
        let progress = !found.is_empty();
        locked.extend(found);
        if locked.len() >= expected {
            locked.sort_by(|a, b| a.value.total_cmp(&b.value));
            return Ok(locked);
        }
        if !progress && basis.len() >= n {
            break;
        }
    }
    Err(WindowFailure::Incomplete {
        found: locked.len(),
    })
}
