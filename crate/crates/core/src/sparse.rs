use serde::Serialize;

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of range");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        let mut col_start = vec![0usize; cols + 1];
        for &(_, c, _) in &merged {
            col_start[c + 1] += 1;
        }
        for c in 0..cols {
            col_start[c + 1] += col_start[c];
        }
        SparseMatrix {
            rows,
            cols,
            col_start,
            row_idx: merged.iter().map(|t| t.0).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzeros of column `c` as `(row, value)`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_start[c]..self.col_start[c + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.column(c).find(|&(i, _)| i == r).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v)).collect())
    }

    /// Scales row `r` by `factors[r]`.
    pub fn scale_rows(&self, factors: &[f64]) -> SparseMatrix {
        assert_eq!(factors.len(), self.rows);
        let mut out = self.clone();
        for (r, v) in out.row_idx.iter().zip(out.values.iter_mut()) {
            *v *= factors[*r];
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for c in 0..self.cols {
            if x[c] != 0.0 {
                for (r, v) in self.column(c) {
                    y[r] += v * x[c];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}
