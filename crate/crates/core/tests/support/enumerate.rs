//! Brute-force LP oracles that share no code with the simplex.

/// Dense Gaussian elimination with partial pivoting. Returns `None` when the
/// matrix is numerically singular.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let (p, pv) =
            (k..n).map(|i| (i, a[i][k].abs())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pv < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            if l != 0.0 {
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

/// `min c'x` s.t. `A x = b`, `x >= 0` by enumerating every choice of `m`
/// basic columns. `None` if no basic feasible solution exists.
pub fn standard_form_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let sub: Vec<Vec<f64>> = (0..m).map(|i| subset.iter().map(|&j| a[i][j]).collect()).collect();
        if let Some(xs) = dense_solve(sub, b.to_vec()) {
            if xs.iter().all(|&v| v >= -1e-9) {
                let obj: f64 = subset.iter().zip(&xs).map(|(&j, &v)| c[j] * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    best
}

/// Advances `idx` (strictly increasing, values < n) to the next combination.
pub fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// General LP `min c'v` s.t. `E v = e`, `G v <= h`, solved by eliminating the
/// equalities and enumerating vertices of the remaining polyhedron.
///
/// Assumes the feasible set has no lines (true whenever every variable has a
/// finite lower bound in `G`). Returns `None` when infeasible.
pub struct VertexLp {
    pub n: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub cost: Vec<f64>,
}

impl VertexLp {
    pub fn new(n: usize) -> Self {
        Self { n, eq: Vec::new(), le: Vec::new(), cost: vec![0.0; n] }
    }

    pub fn add_eq(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push((self.dense(row), rhs));
    }

    pub fn add_le(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.le.push((self.dense(row), rhs));
    }

    pub fn add_ge(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        let neg = row.into_iter().map(|(j, a)| (j, -a)).collect();
        self.add_le(neg, -rhs);
    }

    fn dense(&self, row: Vec<(usize, f64)>) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (j, a) in row {
            d[j] += a;
        }
        d
    }

    /// Particular solution and null-space basis of the equality system.
    fn eliminate(&self) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.n;
        let mut rows: Vec<(Vec<f64>, f64)> = self.eq.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(p) = (r..rows.len())
                .filter(|&i| rows[i].0[col].abs() > 1e-10)
                .max_by(|&i, &j| rows[i].0[col].abs().total_cmp(&rows[j].0[col].abs()))
            else {
                continue;
            };
            rows.swap(r, p);
            let pv = rows[r].0[col];
            for j in 0..n {
                rows[r].0[j] /= pv;
            }
            rows[r].1 /= pv;
            for i in 0..rows.len() {
                if i != r {
                    let l = rows[i].0[col];
                    if l != 0.0 {
                        for j in 0..n {
                            rows[i].0[j] -= l * rows[r].0[j];
                        }
                        rows[i].1 -= l * rows[r].1;
                    }
                }
            }
            pivots.push(col);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        if rows[r..].iter().any(|(_, rhs)| rhs.abs() > 1e-9) {
            return None;
        }
        let mut x0 = vec![0.0; n];
        for (k, &col) in pivots.iter().enumerate() {
            x0[col] = rows[k].1;
        }
        let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
        let mut basis = Vec::new();
        for &f in &free {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (k, &col) in pivots.iter().enumerate() {
                v[col] = -rows[k].0[f];
            }
            basis.push(v);
        }
        Some((x0, basis))
    }

    /// Dimension of the reduced space and number of inequality rows.
    pub fn size(&self) -> Option<(usize, usize)> {
        self.eliminate().map(|(_, basis)| (basis.len(), self.le.len()))
    }

    pub fn minimize(&self) -> Option<f64> {
        self.argmin().map(|(obj, _)| obj)
    }

    /// Optimal value and a minimising vertex.
    pub fn argmin(&self) -> Option<(f64, Vec<f64>)> {
        let (x0, basis) = self.eliminate()?;
        let k = basis.len();
        // Reduced inequalities g'z <= h - G x0.
        let reduced: Vec<(Vec<f64>, f64)> = self
            .le
            .iter()
            .map(|(g, h)| {
                let gz: Vec<f64> = basis.iter().map(|v| dot(g, v)).collect();
                (gz, h - dot(g, &x0))
            })
            .collect();
        let rc: Vec<f64> = basis.iter().map(|v| dot(&self.cost, v)).collect();
        let base_obj = dot(&self.cost, &x0);
        let feas = |z: &[f64]| reduced.iter().all(|(g, h)| dot(g, z) <= h + 1e-7 * (1.0 + h.abs()));
        let lift = |z: &[f64]| -> Vec<f64> {
            let mut v = x0.clone();
            for (zi, b) in z.iter().zip(&basis) {
                for (vj, bj) in v.iter_mut().zip(b) {
                    *vj += zi * bj;
                }
            }
            v
        };
        if k == 0 {
            return feas(&[]).then(|| (base_obj, x0.clone()));
        }
        let m = reduced.len();
        if m < k {
            return None;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let a: Vec<Vec<f64>> = subset.iter().map(|&i| reduced[i].0.clone()).collect();
            let b: Vec<f64> = subset.iter().map(|&i| reduced[i].1).collect();
            if let Some(z) = dense_solve(a, b) {
                if feas(&z) {
                    let obj = base_obj + dot(&rc, &z);
                    if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                        best = Some((obj, z));
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
        best.map(|(obj, z)| (obj, lift(&z)))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
