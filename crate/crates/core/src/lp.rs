//! Small dense linear programs by the two-phase simplex method.
//!
//! Problems here have a handful of variables (torus weights), so a dense
//! tableau with Bland's rule is enough.

/// `maximize c·x` subject to `A x = b` and `x >= 0`.
#[derive(Clone, Debug)]
pub struct StandardLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-11;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f.abs() <= 0.0 {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = col;
    }

    /// Maximizes `obj·x` over the current basis; `allowed` limits entering
    /// columns. Returns false when unbounded.
    fn optimize(&mut self, obj: &[f64], allowed: usize) -> bool {
        let m = self.rows.len();
        for _ in 0..10_000 {
            // reduced costs: obj_j - sum_i obj_{basis_i} row_i[j]
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = obj[j];
                for i in 0..m {
                    rc -= obj[self.basis[i]] * self.rows[i][j];
                }
                if rc > EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][col];
                if a > EPS {
                    let ratio = self.rows[i][self.width] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, col);
        }
        true
    }
}

pub fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    // phase one on x plus one artificial per row
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for j in 0..n {
            row[j] = sign * lp.a[i][j];
        }
        row[n + i] = 1.0;
        row[width] = sign * lp.b[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
    };
    let mut phase1 = vec![0.0; width];
    for v in phase1.iter_mut().skip(n) {
        *v = -1.0;
    }
    t.optimize(&phase1, width);
    let infeas: f64 = (0..m)
        .filter(|&i| t.basis[i] >= n)
        .map(|i| t.rows[i][width])
        .sum();
    let scale = lp.b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if infeas > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis
    let mut drop_rows = Vec::new();
    for i in 0..m {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
                Some(j) => t.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        t.rows.remove(i);
        t.basis.remove(i);
    }
    let mut obj = lp.c.clone();
    obj.resize(width, 0.0);
    if !t.optimize(&obj, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][width];
        }
    }
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

/// `maximize c·x` subject to `A x = b` with every variable free.
pub fn solve_free(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    // x = x+ - x-
    let n = c.len();
    let a2 = a
        .iter()
        .map(|row| row.iter().copied().chain(row.iter().map(|v| -v)).collect())
        .collect();
    let c2 = c.iter().copied().chain(c.iter().map(|v| -v)).collect();
    match solve(&StandardLp {
        a: a2,
        b: b.to_vec(),
        c: c2,
    }) {
        LpOutcome::Optimal { x, value } => LpOutcome::Optimal {
            x: (0..n).map(|j| x[j] - x[n + j]).collect(),
            value,
        },
        other => other,
    }
}

/// `maximize c·x` subject to `A x <= b` with every variable free.
pub fn solve_inequalities(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    // x = x+ - x-, plus one slack per row
    let rows = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<f64> = row.iter().copied().chain(row.iter().map(|v| -v)).collect();
            r.extend((0..m).map(|k| (k == i) as u8 as f64));
            r
        })
        .collect();
    let mut c2: Vec<f64> = c.iter().copied().chain(c.iter().map(|v| -v)).collect();
    c2.resize(2 * n + m, 0.0);
    match solve(&StandardLp {
        a: rows,
        b: b.to_vec(),
        c: c2,
    }) {
        LpOutcome::Optimal { x, value } => LpOutcome::Optimal {
            x: (0..n).map(|j| x[j] - x[n + j]).collect(),
            value,
        },
        other => other,
    }
}
