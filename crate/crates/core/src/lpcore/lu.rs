//! Sparse LU factorization of simplex bases, with product-form updates.
//!
//! The factorization is right-looking with a minimum-column-count ordering and
//! threshold partial pivoting. Updates after basis changes are stored as eta
//! columns and applied on top of the last factorization until the next refresh.

/// Relative threshold for accepting a pivot within its column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Entries smaller than this are treated as structural zeros during elimination.
const DROP_TOL: f64 = 1e-14;

/// A sparse column given as parallel `(row, value)` slices.
pub(crate) struct ColumnRef<'a> {
    pub rows: &'a [usize],
    pub vals: &'a [f64],
}

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, same length as `positions`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Default)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

#[derive(Debug, Default)]
pub(crate) struct BasisFactor {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    // L_k multipliers: rows l_idx[l_start[k]..l_start[k+1]]
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U row k without its pivot: basis positions u_idx[u_start[k]..u_start[k+1]]
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    etas: Vec<Eta>,
}

impl BasisFactor {
    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Factorizes the `m x m` matrix whose column `k` is `column(k)`.
    pub fn factorize<'a, F>(m: usize, column: F) -> Result<Self, (Self, Singular)>
    where
        F: Fn(usize) -> ColumnRef<'a>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for k in 0..m {
            let c = column(k);
            for (&r, &v) in c.rows.iter().zip(c.vals) {
                if v != 0.0 {
                    rows[r].push((k, v));
                    cols[k].push(r);
                }
            }
        }
        let mut col_count: Vec<usize> = cols.iter().map(Vec::len).collect();
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];

        // Buckets of columns keyed by active count, entries validated lazily.
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        for k in (0..m).rev() {
            buckets[col_count[k].min(m + 1)].push(k);
        }
        let mut min_bucket = 0usize;

        let mut f = BasisFactor { m, l_start: vec![0], u_start: vec![0], ..Default::default() };
        let mut singular_cols = Vec::new();
        let mut mark = vec![usize::MAX; m];

        let mut remaining = m;
        while remaining > 0 {
            // Next active column with the smallest count.
            let c = loop {
                while min_bucket < buckets.len() && buckets[min_bucket].is_empty() {
                    min_bucket += 1;
                }
                let cand = buckets[min_bucket].pop().expect("active column exists");
                if col_active[cand] && col_count[cand].min(m + 1) == min_bucket {
                    break cand;
                }
            };
            remaining -= 1;
            col_active[c] = false;

            // Candidate rows in column c.
            let mut cands: Vec<(usize, f64)> = Vec::new();
            let mut col_max: f64 = 0.0;
            for &r in &cols[c] {
                if !row_active[r] {
                    continue;
                }
                if let Some(&(_, v)) = rows[r].iter().find(|&&(j, _)| j == c) {
                    if !cands.iter().any(|&(rr, _)| rr == r) {
                        cands.push((r, v));
                        col_max = col_max.max(v.abs());
                    }
                }
            }
            if col_max <= DROP_TOL {
                singular_cols.push(c);
                for &(r, _) in &cands {
                    rows[r].retain(|&(j, _)| j != c);
                }
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            let mut best_len = usize::MAX;
            for &(r, v) in &cands {
                if v.abs() < PIVOT_THRESHOLD * col_max {
                    continue;
                }
                let len = rows[r].len();
                let better = match best {
                    None => true,
                    Some((br, bv)) => {
                        len < best_len || (len == best_len && (v.abs() > bv.abs() || (v.abs() == bv.abs() && r < br)))
                    }
                };
                if better {
                    best = Some((r, v));
                    best_len = len;
                }
            }
            let (pr, pv) = best.expect("threshold admits the column maximum");
            row_active[pr] = false;

            let pivot_row = std::mem::take(&mut rows[pr]);
            for &(j, _) in &pivot_row {
                if j != c && col_active[j] {
                    col_count[j] -= 1;
                    let cnt = col_count[j].min(m + 1);
                    buckets[cnt].push(j);
                    min_bucket = min_bucket.min(cnt);
                }
            }

            // Eliminate column c from the other candidate rows.
            for &(r, v) in &cands {
                if r == pr {
                    continue;
                }
                let l = v / pv;
                f.l_idx.push(r);
                f.l_val.push(l);
                let row = &mut rows[r];
                row.retain(|&(j, _)| j != c);
                for (pos, &(j, _)) in row.iter().enumerate() {
                    mark[j] = pos;
                }
                for &(j, u) in &pivot_row {
                    if j == c {
                        continue;
                    }
                    let pos = mark[j];
                    if pos < row.len() && row[pos].0 == j {
                        row[pos].1 -= l * u;
                    } else {
                        row.push((j, -l * u));
                        cols[j].push(r);
                        col_count[j] += 1;
                        let cnt = col_count[j].min(m + 1);
                        buckets[cnt].push(j);
                    }
                }
                for &(j, _) in row.iter() {
                    mark[j] = usize::MAX;
                }
                row.retain(|&(_, x)| x.abs() > DROP_TOL || x.is_nan());
            }
            f.l_start.push(f.l_idx.len());

            f.piv_row.push(pr);
            f.piv_col.push(c);
            f.piv_val.push(pv);
            for &(j, u) in &pivot_row {
                if j != c {
                    f.u_idx.push(j);
                    f.u_val.push(u);
                }
            }
            f.u_start.push(f.u_idx.len());
        }
        if singular_cols.is_empty() {
            Ok(f)
        } else {
            let mut rows_left: Vec<usize> = (0..m).filter(|&r| row_active[r]).collect();
            rows_left.sort_unstable();
            singular_cols.sort_unstable();
            Err((f, Singular { positions: singular_cols, rows: rows_left }))
        }
    }

    /// Solves `B x = a` in place: on entry `a` is indexed by row, on return
    /// the result is indexed by basis position.
    pub fn ftran(&self, a: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(a.len(), self.m);
        for k in 0..self.piv_row.len() {
            let v = a[self.piv_row[k]];
            if v != 0.0 {
                for p in self.l_start[k]..self.l_start[k + 1] {
                    a[self.l_idx[p]] -= self.l_val[p] * v;
                }
            }
        }
        scratch.clear();
        scratch.resize(self.m, 0.0);
        for k in (0..self.piv_row.len()).rev() {
            let mut s = a[self.piv_row[k]];
            for p in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[p] * scratch[self.u_idx[p]];
            }
            scratch[self.piv_col[k]] = s / self.piv_val[k];
        }
        a.copy_from_slice(scratch);
        for eta in &self.etas {
            let xp = a[eta.pos] / eta.pivot;
            a[eta.pos] = xp;
            if xp != 0.0 {
                for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                    a[i] -= v * xp;
                }
            }
        }
    }

    /// Solves `B' y = c` in place: on entry `c` is indexed by basis position,
    /// on return the result is indexed by row.
    pub fn btran(&self, c: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(c.len(), self.m);
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                s -= v * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        scratch.clear();
        scratch.resize(self.m, 0.0);
        for k in 0..self.piv_row.len() {
            let w = c[self.piv_col[k]] / self.piv_val[k];
            scratch[self.piv_row[k]] = w;
            if w != 0.0 {
                for p in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[p]] -= self.u_val[p] * w;
                }
            }
        }
        for k in (0..self.piv_row.len()).rev() {
            let mut s = 0.0;
            for p in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[p] * scratch[self.l_idx[p]];
            }
            scratch[self.piv_row[k]] -= s;
        }
        c.copy_from_slice(scratch);
    }

    /// Records that basis position `pos` was replaced by a column whose
    /// FTRAN image is `alpha`.
    pub fn push_update(&mut self, pos: usize, alpha: &[f64]) {
        let mut eta = Eta { pos, pivot: alpha[pos], ..Default::default() };
        for (i, &v) in alpha.iter().enumerate() {
            if i != pos && v.abs() > DROP_TOL {
                eta.idx.push(i);
                eta.val.push(v);
            }
        }
        self.etas.push(eta);
    }
}
