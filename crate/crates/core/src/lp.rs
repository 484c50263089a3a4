//! Exact two-phase simplex with Bland's rule.
//!
//! Only one problem shape is needed by the rest of the crate:
//!
//! ```text
//!     maximize  <c, x>   subject to   <a_i, x> <= b_i,   x free
//! ```
//!
//! It is solved through its dual `min <b, y>  s.t.  A^T y = c, y >= 0`, whose
//! tableau has one row per coordinate of `x`. The state dimension is small
//! (a handful of rows) while the number of inequalities may reach several
//! hundred, so the dual tableau stays tiny.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    /// Optimal value, plus a maximizer when it could be recovered.
    Optimal { value: S, point: Option<Vec<S>> },
    Unbounded,
    Infeasible,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn value(&self) -> Option<&S> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

struct Tableau<S> {
    /// constraint rows, each `ncols + 1` wide (last entry is the rhs)
    rows: Vec<Vec<S>>,
    /// reduced-cost row; last entry is minus the objective value
    cost: Vec<S>,
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = S::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() * &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v = v.clone() - &factor.mul_ref(p);
                }
            }
        }
        if !self.cost[c].is_zero() {
            let factor = self.cost[c].clone();
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v = v.clone() - &factor.mul_ref(p);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule over the columns allowed by `eligible`.
    /// Returns `false` when the objective is unbounded below.
    fn optimize(&mut self, eligible: impl Fn(usize) -> bool) -> bool {
        loop {
            let width = self.width();
            let Some(enter) = (0..width).find(|&j| eligible(j) && self.cost[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = row[width].clone() / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => match ratio.cmp_to(lr) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*li],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Maximize `<c, x>` subject to `<a_i, x> <= b_i`.
pub fn maximize<S: Scalar>(a: &[Vec<S>], b: &[S], c: &[S]) -> LpOutcome<S> {
    assert_eq!(a.len(), b.len());
    let dim = c.len();
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == dim));

    // Dual equality rows: sum_i a_i[k] y_i = c_k, flipped so the rhs is >= 0.
    let flips: Vec<bool> = c.iter().map(Scalar::is_negative).collect();
    let width = n + dim;
    let mut rows = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut row = Vec::with_capacity(width + 1);
        for ai in a {
            row.push(if flips[k] { -ai[k].clone() } else { ai[k].clone() });
        }
        for j in 0..dim {
            row.push(if j == k { S::one() } else { S::zero() });
        }
        row.push(if flips[k] { -c[k].clone() } else { c[k].clone() });
        rows.push(row);
    }
    // Phase 1 cost: sum of artificials, priced out against the basis.
    let mut cost = vec![S::zero(); width + 1];
    for row in &rows {
        for j in 0..n {
            cost[j] = cost[j].clone() - &row[j];
        }
        cost[width] = cost[width].clone() - &row[width];
    }
    let mut t = Tableau { rows, cost, basis: (n..n + dim).collect() };
    t.optimize(|j| j < n);
    if !t.cost[width].is_zero() {
        // Dual infeasible: the primal is unbounded or infeasible.
        return if is_feasible(a, b) { LpOutcome::Unbounded } else { LpOutcome::Infeasible };
    }

    // Drive remaining artificials out of the basis; drop dependent rows.
    let mut exact_point = true;
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, j);
            } else {
                t.rows.remove(i);
                t.basis.remove(i);
                exact_point = false;
                continue;
            }
        }
        i += 1;
    }

    // Phase 2: minimize <b, y>.
    let mut cost = vec![S::zero(); width + 1];
    for (j, bj) in b.iter().enumerate() {
        cost[j] = bj.clone();
    }
    for (r, &bv) in t.basis.iter().enumerate() {
        if cost[bv].is_zero() {
            continue;
        }
        let factor = cost[bv].clone();
        let row = &t.rows[r];
        for (v, p) in cost.iter_mut().zip(row) {
            if !p.is_zero() {
                *v = v.clone() - &factor.mul_ref(p);
            }
        }
    }
    t.cost = cost;
    if !t.optimize(|j| j < n) {
        return LpOutcome::Infeasible;
    }
    let value = -t.cost[width].clone();
    // Simplex multipliers of the dual rows are the primal maximizer:
    // the reduced cost of artificial column k equals -pi_k.
    let point = exact_point.then(|| {
        (0..dim)
            .map(|k| {
                let pi = -t.cost[n + k].clone();
                if flips[k] {
                    -pi
                } else {
                    pi
                }
            })
            .collect()
    });
    LpOutcome::Optimal { value, point }
}

/// Whether `{x : <a_i, x> <= b_i}` is non-empty.
pub fn is_feasible<S: Scalar>(a: &[Vec<S>], b: &[S]) -> bool {
    let dim = match a.first() {
        Some(r) => r.len(),
        None => return true,
    };
    // Dual of `max 0`: min <b, y>, A^T y = 0, y >= 0, unbounded iff infeasible.
    let n = a.len();
    let mut rows: Vec<Vec<S>> = (0..dim)
        .map(|k| {
            let mut row: Vec<S> = a.iter().map(|ai| ai[k].clone()).collect();
            row.push(S::zero());
            row
        })
        .collect();
    // Bring the zero-rhs system into a basis by elimination; dependent rows drop out.
    let mut basis = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(p, r);
        let inv = S::one() / &rows[r][col];
        for v in rows[r].iter_mut() {
            *v = v.clone() * &inv;
        }
        let pr = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pr) {
                    *v = v.clone() - &f.mul_ref(p);
                }
            }
        }
        basis.push(col);
        r += 1;
    }
    rows.truncate(r);
    let mut cost: Vec<S> = b.iter().cloned().collect();
    cost.push(S::zero());
    for (i, &bv) in basis.iter().enumerate() {
        if cost[bv].is_zero() {
            continue;
        }
        let f = cost[bv].clone();
        for (v, p) in cost.iter_mut().zip(&rows[i]) {
            *v = v.clone() - &f.mul_ref(p);
        }
    }
    let mut t = Tableau { rows, cost, basis };
    t.optimize(|_| true)
}
