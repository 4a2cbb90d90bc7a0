//! Banded symmetric LDLᵀ factorization without pivoting.
//!
//! Used for shift-invert solves with `H - σI` and for Sylvester inertia
//! counts: the number of negative pivots equals the number of eigenvalues
//! of `H` below `σ`.

use super::SparseSymmetric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularShift {
    pub shift: f64,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct BandLdlt {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw .. i] at offsets k + bw - i
    l: Vec<f64>,
    d: Vec<f64>,
}

impl BandLdlt {
    /// Factors `op - shift * I`.
    pub fn factor(op: &SparseSymmetric, shift: f64) -> Result<Self, SingularShift> {
        let n = op.dim();
        let bw = op.bandwidth().max(1);
        let mut l = vec![0.0; n * bw];
        for i in 0..n {
            for (j, v) in op.row(i) {
                if j < i {
                    l[i * bw + j + bw - i] = v;
                }
            }
        }
        let mut d = vec![0.0; n];
        let pivot_floor = 1e-14 * op.norm_estimate().max(1.0);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            // overwrite row i with t_j = a_ij - sum_k t_k L_jk, where t_k = L_ik d_k
            for j in lo..i {
                let k0 = lo.max(j.saturating_sub(bw));
                let mut s = 0.0;
                let ri = i * bw + bw - i;
                let rj = j * bw + bw - j;
                for k in k0..j {
                    s += l[ri + k] * l[rj + k];
                }
                l[ri + j] -= s;
            }
            let mut di = op.diag(i) - shift;
            let ri = i * bw + bw - i;
            for j in lo..i {
                let t = l[ri + j];
                let lij = t / d[j];
                di -= lij * t;
                l[ri + j] = lij;
            }
            if di.abs() < pivot_floor || !di.is_finite() {
                return Err(SingularShift { shift, row: i });
            }
            d[i] = di;
        }
        Ok(BandLdlt { n, bw, l, d })
    }

    /// Number of negative pivots.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * bw + bw - i;
            let mut s = 0.0;
            for k in lo..i {
                s += self.l[ri + k] * x[k];
            }
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let ri = i * bw + bw - i;
            for k in lo..i {
                x[k] -= self.l[ri + k] * xi;
            }
        }
    }
}
