/// Real symmetric sparse matrix with the diagonal stored separately.
#[derive(Debug, Clone)]
pub struct SparseSymmetric {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    bandwidth: usize,
    norm: f64,
}

impl SparseSymmetric {
    /// `entries` lists each off-diagonal pair once; both triangles are filled
    /// from the same value.
    pub fn from_entries(diag: Vec<f64>, entries: &[(usize, usize, f64)]) -> Self {
        let n = diag.len();
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in entries {
            assert!(i != j && i < n && j < n, "off-diagonal entry ({i}, {j}) out of range");
            counts[i + 1] += 1;
            counts[j + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let mut fill = counts;
        let mut cols = vec![0u32; entries.len() * 2];
        let mut vals = vec![0.0; entries.len() * 2];
        let mut bandwidth = 0;
        for &(i, j, v) in entries {
            cols[fill[i]] = j as u32;
            vals[fill[i]] = v;
            fill[i] += 1;
            cols[fill[j]] = i as u32;
            vals[fill[j]] = v;
            fill[j] += 1;
            bandwidth = bandwidth.max(i.abs_diff(j));
        }
        // sort each row by column for deterministic traversal
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            let mut row: Vec<(u32, f64)> = cols[lo..hi]
                .iter()
                .copied()
                .zip(vals[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|e| e.0);
            for (k, (c, v)) in row.into_iter().enumerate() {
                cols[lo + k] = c;
                vals[lo + k] = v;
            }
        }
        let norm = (0..n)
            .map(|i| diag[i].abs() + vals[row_ptr[i]..row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        SparseSymmetric {
            diag,
            row_ptr,
            cols,
            vals,
            bandwidth,
            norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Off-diagonal entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// Entry `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        self.norm
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim() {
            let mut s = self.diag[i] * x[i];
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}
