//! Brute-force reference path: Fourier-Motzkin projection, LP redundancy
//! removal, and point-set hulls.
//!
//! Nothing here uses the incidence machinery of [`crate::recursion`]; the
//! oracle works on plain halfspace systems so it can check that machinery
//! independently. It is also the fallback for sets that are not (yet)
//! full-dimensional.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{normal_of, rank};
use crate::lp::{is_feasible, maximize, LpOutcome};
use crate::plant::{primal_realization, PlantModel};
use crate::polytope::{canonical_halfspace, has_interior, Polytope};
use crate::recursion::StepMode;
use crate::scalar::{dot, serde_scalar, serde_scalar_vec, vectors_equal, Scalar};

/// Default cap on intermediate Fourier-Motzkin rows.
pub const FM_ROW_LIMIT: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("measurement is inconsistent with the current uncertainty set")]
    InfeasibleMeasurement,
    #[error("Fourier-Motzkin elimination would produce {rows} rows (limit {limit})")]
    RowLimit { rows: usize, limit: usize },
    #[error("point set does not span the ambient space")]
    LowerDimensional,
    #[error("state matrix is singular")]
    SingularDynamics,
}

/// `<a, x> <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HalfSpace<S: Scalar> {
    #[serde(with = "serde_scalar_vec")]
    pub a: Vec<S>,
    #[serde(with = "serde_scalar")]
    pub b: S,
}

/// Halfspace representation `{x : <a_i, x> <= b_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HRep<S: Scalar> {
    pub rows: Vec<HalfSpace<S>>,
    pub dim: usize,
}

impl<S: Scalar> HRep<S> {
    pub fn new(dim: usize) -> Self {
        HRep { rows: Vec::new(), dim }
    }

    /// `{x0}` written as `2m` inequalities.
    pub fn point(x0: &[S]) -> Self {
        let dim = x0.len();
        let mut h = HRep::new(dim);
        for k in 0..dim {
            let mut e = vec![S::zero(); dim];
            e[k] = S::one();
            h.push(e.clone(), x0[k].clone());
            e[k] = -S::one();
            h.push(e, -x0[k].clone());
        }
        h
    }

    pub fn push(&mut self, a: Vec<S>, b: S) {
        debug_assert_eq!(a.len(), self.dim);
        self.rows.push(HalfSpace { a, b });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty_rep(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn matrices(&self) -> (Vec<Vec<S>>, Vec<S>) {
        (
            self.rows.iter().map(|r| r.a.clone()).collect(),
            self.rows.iter().map(|r| r.b.clone()).collect(),
        )
    }

    pub fn contains(&self, x: &[S]) -> bool {
        self.rows.iter().all(|r| dot(&r.a, x).cmp_to(&r.b) != Ordering::Greater)
    }

    /// Whether the solution set is empty.
    pub fn is_infeasible(&self) -> bool {
        let (a, b) = self.matrices();
        if self.dim == 0 {
            return b.iter().any(Scalar::is_negative);
        }
        !is_feasible(&a, &b)
    }

    pub fn is_full_dimensional(&self) -> bool {
        let (a, b) = self.matrices();
        !self.is_infeasible() && has_interior(&a, &b)
    }

    /// Maximum of `<c, x>` over the set.
    pub fn maximize(&self, c: &[S]) -> LpOutcome<S> {
        let (a, b) = self.matrices();
        maximize(&a, &b, c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("hrep serializes")
    }
}

/// Exact Fourier-Motzkin elimination of `var`, with the default row guard.
pub fn fm_eliminate<S: Scalar>(h: &HRep<S>, var: usize) -> Result<HRep<S>, OracleError> {
    fm_eliminate_with_limit(h, var, FM_ROW_LIMIT)
}

pub fn fm_eliminate_with_limit<S: Scalar>(h: &HRep<S>, var: usize, limit: usize) -> Result<HRep<S>, OracleError> {
    assert!(var < h.dim, "variable index out of range");
    let drop_var = |a: &[S]| -> Vec<S> {
        a.iter().enumerate().filter(|&(k, _)| k != var).map(|(_, x)| x.clone()).collect()
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = HRep::new(h.dim - 1);
    for r in &h.rows {
        match r.a[var].sign() {
            crate::scalar::Sign::Positive => pos.push(r),
            crate::scalar::Sign::Negative => neg.push(r),
            crate::scalar::Sign::Zero => push_reduced(&mut out, drop_var(&r.a), r.b.clone()),
        }
    }
    let total = out.len() + pos.len() * neg.len();
    if total > limit {
        return Err(OracleError::RowLimit { rows: total, limit });
    }
    for p in &pos {
        for n in &neg {
            // (-n_var) * p + p_var * n cancels the eliminated coordinate.
            let lp = -n.a[var].clone();
            let ln = p.a[var].clone();
            let a: Vec<S> = p
                .a
                .iter()
                .zip(&n.a)
                .enumerate()
                .filter(|&(k, _)| k != var)
                .map(|(_, (x, y))| lp.mul_ref(x) + &ln.mul_ref(y))
                .collect();
            let b = lp.mul_ref(&p.b) + &ln.mul_ref(&n.b);
            push_reduced(&mut out, a, b);
        }
    }
    Ok(out)
}

/// Push a row after positive rescaling; trivially true rows are dropped and
/// trivially false rows are kept as `0 <= -1`.
fn push_reduced<S: Scalar>(h: &mut HRep<S>, a: Vec<S>, b: S) {
    match canonical_halfspace(&HalfSpace { a, b: b.clone() }) {
        Some(c) => h.rows.push(c),
        None if b.is_negative() => h.rows.push(HalfSpace { a: vec![S::zero(); h.dim], b: -S::one() }),
        None => {}
    }
}

/// Remove every row implied by the others, each decided by an exact LP.
///
/// Rows are canonicalized first and parallel rows collapsed to the tightest
/// one. An infeasible system is returned as the single row `0 <= -1`.
pub fn remove_redundant<S: Scalar>(h: &HRep<S>) -> HRep<S> {
    let mut rows: Vec<HalfSpace<S>> = Vec::new();
    for r in &h.rows {
        match canonical_halfspace(r) {
            Some(c) => match rows.iter_mut().find(|x| vectors_equal(&x.a, &c.a)) {
                Some(existing) => {
                    if c.b.cmp_to(&existing.b) == Ordering::Less {
                        existing.b = c.b;
                    }
                }
                None => rows.push(c),
            },
            None if r.b.is_negative() => return empty_rep(h.dim),
            None => {}
        }
    }
    let candidate = HRep { rows, dim: h.dim };
    if candidate.is_infeasible() {
        return empty_rep(h.dim);
    }
    let keep = match interior_point(&candidate) {
        Some(x0) => clarkson(&candidate, &x0),
        None => sequential(&candidate),
    };
    HRep {
        rows: candidate.rows.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect(),
        dim: h.dim,
    }
}

/// Whether `row` is implied by the rows selected in `among`.
fn implied<S: Scalar>(rows: &[HalfSpace<S>], among: impl Iterator<Item = usize>, row: &HalfSpace<S>) -> bool {
    let (a, b): (Vec<Vec<S>>, Vec<S>) = among.map(|k| (rows[k].a.clone(), rows[k].b.clone())).unzip();
    if a.is_empty() {
        return false;
    }
    match maximize(&a, &b, &row.a) {
        LpOutcome::Optimal { value, .. } => value.cmp_to(&row.b) != Ordering::Greater,
        LpOutcome::Unbounded | LpOutcome::Infeasible => false,
    }
}

/// One LP per row against all rows still kept. Works for flat systems.
fn sequential<S: Scalar>(h: &HRep<S>) -> Vec<bool> {
    let n = h.rows.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&k| k != i && keep[k]).collect();
        if implied(&h.rows, others.into_iter(), &h.rows[i]) {
            keep[i] = false;
        }
    }
    keep
}

/// A point strictly inside every row, if the system has an interior.
fn interior_point<S: Scalar>(h: &HRep<S>) -> Option<Vec<S>> {
    let m = h.dim;
    let mut a = Vec::with_capacity(h.rows.len() + 1);
    let mut b = Vec::with_capacity(h.rows.len() + 1);
    for r in &h.rows {
        let mut row = r.a.clone();
        row.push(S::one());
        a.push(row);
        b.push(r.b.clone());
    }
    let mut cap = vec![S::zero(); m + 1];
    cap[m] = S::one();
    a.push(cap.clone());
    b.push(S::one());
    match maximize(&a, &b, &cap) {
        LpOutcome::Optimal { value, point: Some(mut x) } if value.is_positive() => {
            x.truncate(m);
            Some(x)
        }
        _ => None,
    }
}

/// Clarkson's method: LPs only over rows already known to be facets, with
/// ray shooting from the interior point `x0` to find the next facet.
fn clarkson<S: Scalar>(h: &HRep<S>, x0: &[S]) -> Vec<bool> {
    let rows = &h.rows;
    let n = rows.len();
    let slack: Vec<S> = rows.iter().map(|r| r.b.clone() - &dot(&r.a, x0)).collect();
    let mut facet = vec![false; n];
    let mut known: Vec<usize> = Vec::new();
    // seed with the facets hit along the coordinate axes, so the LPs below
    // usually have full rank and return a maximizer
    for k in 0..h.dim {
        for s in [S::one(), -S::one()] {
            let mut d = vec![S::zero(); h.dim];
            d[k] = s;
            if let Some(j) = first_hit(rows, &slack, &d) {
                if !facet[j] {
                    facet[j] = true;
                    known.push(j);
                }
            }
        }
    }
    for i in 0..n {
        while !facet[i] {
            // relaxing row i keeps the LP bounded
            let mut a: Vec<Vec<S>> = known.iter().map(|&k| rows[k].a.clone()).collect();
            let mut b: Vec<S> = known.iter().map(|&k| rows[k].b.clone()).collect();
            a.push(rows[i].a.clone());
            b.push(rows[i].b.clone() + &S::one());
            let hit = match maximize(&a, &b, &rows[i].a) {
                LpOutcome::Optimal { value, .. } if value.cmp_to(&rows[i].b) != Ordering::Greater => break,
                LpOutcome::Optimal { point: Some(x), .. } => {
                    let d: Vec<S> = x.iter().zip(x0).map(|(p, q)| p.clone() - q).collect();
                    first_hit(rows, &slack, &d)
                }
                _ => None,
            };
            match hit {
                Some(j) => {
                    facet[j] = true;
                    known.push(j);
                }
                None => {
                    // no witness, or the ray leaves through a lower-dimensional
                    // face: decide row i against everything else
                    if !implied(rows, (0..n).filter(|&k| k != i), &rows[i]) {
                        facet[i] = true;
                        known.push(i);
                    }
                    break;
                }
            }
        }
    }
    facet
}

/// The single row first crossed by the ray `x0 + t d`, `t > 0`. `None` when
/// no row is crossed or several are crossed at once.
fn first_hit<S: Scalar>(rows: &[HalfSpace<S>], slack: &[S], d: &[S]) -> Option<usize> {
    let mut best: Option<S> = None;
    let mut hits: Vec<usize> = Vec::new();
    for (j, r) in rows.iter().enumerate() {
        let rate = dot(&r.a, d);
        if !rate.is_positive() {
            continue;
        }
        let t = slack[j].clone() / &rate;
        match best.as_ref().map(|b| t.cmp_to(b)) {
            None | Some(Ordering::Less) => {
                best = Some(t);
                hits = vec![j];
            }
            Some(Ordering::Equal) => hits.push(j),
            Some(Ordering::Greater) => {}
        }
    }
    match hits[..] {
        [j] => Some(j),
        _ => None,
    }
}

fn empty_rep<S: Scalar>(dim: usize) -> HRep<S> {
    HRep { rows: vec![HalfSpace { a: vec![S::zero(); dim], b: -S::one() }], dim }
}

fn slab_rows<S: Scalar>(h: &mut HRep<S>, c: &[S], z: &S) {
    h.push(c.to_vec(), z.clone() + &S::one());
    h.push(c.iter().map(|x| -x.clone()).collect(), S::one() - z);
}

/// Image of `{x : rows}` under `x⁺ = A x + B u`, `|u| <= 1`, obtained by
/// substituting `x = A⁻¹(x⁺ - B u)` and eliminating `u`.
fn lift_and_project<S: Scalar>(h: &HRep<S>, p: &PlantModel<S>) -> Result<HRep<S>, OracleError> {
    let m = h.dim;
    let primal = primal_realization(p);
    let a_inv = primal.a.inverse().ok_or(OracleError::SingularDynamics)?;
    let a_inv_b = a_inv.mul_vec(&primal.b);
    let mut lifted = HRep::new(m + 1);
    for r in &h.rows {
        let mut a = a_inv.vec_mul(&r.a);
        a.push(-dot(&r.a, &a_inv_b));
        lifted.push(a, r.b.clone());
    }
    let mut e = vec![S::zero(); m + 1];
    e[m] = S::one();
    lifted.push(e.clone(), S::one());
    e[m] = -S::one();
    lifted.push(e, S::one());
    fm_eliminate(&lifted, m)
}

/// Pure propagation `A·S ⊕ [-B, B]` in halfspace form, redundancy removed.
pub fn oracle_propagate<S: Scalar>(h: &HRep<S>, p: &PlantModel<S>) -> Result<HRep<S>, OracleError> {
    Ok(remove_redundant(&lift_and_project(h, p)?))
}

/// `S ∩ {x : |<C, x> - z| <= 1}` in halfspace form, redundancy removed.
pub fn oracle_cut<S: Scalar>(h: &HRep<S>, z: &S, p: &PlantModel<S>) -> Result<HRep<S>, OracleError> {
    let mut cut = h.clone();
    slab_rows(&mut cut, &p.output_row(), z);
    let out = remove_redundant(&cut);
    if out.is_infeasible() {
        return Err(OracleError::InfeasibleMeasurement);
    }
    Ok(out)
}

/// One measurement step of the set recursion, computed by projection.
pub fn oracle_step<S: Scalar>(
    h: &HRep<S>,
    z: &S,
    p: &PlantModel<S>,
    mode: StepMode,
) -> Result<HRep<S>, OracleError> {
    let c = p.output_row();
    let projected = match mode {
        StepMode::UpdateThenPropagate => {
            let mut cut = h.clone();
            slab_rows(&mut cut, &c, z);
            if cut.is_infeasible() {
                return Err(OracleError::InfeasibleMeasurement);
            }
            lift_and_project(&cut, p)?
        }
        StepMode::PropagateThenUpdate => {
            let mut next = lift_and_project(h, p)?;
            slab_rows(&mut next, &c, z);
            next
        }
    };
    let out = remove_redundant(&projected);
    if out.is_infeasible() {
        return Err(OracleError::InfeasibleMeasurement);
    }
    Ok(out)
}

/// Borrowed view of either representation, for [`set_equal`].
#[derive(Clone, Copy)]
pub enum SetRef<'a, S: Scalar> {
    Polytope(&'a Polytope<S>),
    HRep(&'a HRep<S>),
}

impl<'a, S: Scalar> From<&'a Polytope<S>> for SetRef<'a, S> {
    fn from(p: &'a Polytope<S>) -> Self {
        SetRef::Polytope(p)
    }
}

impl<'a, S: Scalar> From<&'a HRep<S>> for SetRef<'a, S> {
    fn from(h: &'a HRep<S>) -> Self {
        SetRef::HRep(h)
    }
}

impl<S: Scalar> SetRef<'_, S> {
    fn dim(&self) -> usize {
        match self {
            SetRef::Polytope(p) => p.dim(),
            SetRef::HRep(h) => h.dim,
        }
    }

    /// Canonical facet rows: stored facets for a polytope, minimized rows otherwise.
    fn canonical_rows(&self) -> Vec<HalfSpace<S>> {
        match self {
            SetRef::Polytope(p) => p.to_hrep().rows.iter().filter_map(canonical_halfspace).collect(),
            SetRef::HRep(h) => remove_redundant(h).rows,
        }
    }

    fn full_dimensional(&self) -> bool {
        match self {
            SetRef::Polytope(p) => p.validate().passed(),
            SetRef::HRep(h) => h.is_full_dimensional(),
        }
    }

    fn hrep(&self) -> HRep<S> {
        match self {
            SetRef::Polytope(p) => p.to_hrep(),
            SetRef::HRep(h) => (*h).clone(),
        }
    }
}

fn same_row_sets<S: Scalar>(a: &[HalfSpace<S>], b: &[HalfSpace<S>]) -> bool {
    a.len() == b.len()
        && a.iter().all(|r| b.iter().any(|s| vectors_equal(&r.a, &s.a) && r.b.same(&s.b)))
}

/// Every vertex of `p` satisfies `rows`, tight exactly where `p` says so.
fn vertices_match<S: Scalar>(p: &Polytope<S>, rows: &[HalfSpace<S>]) -> bool {
    for r in rows {
        let Some(i) = p.facets().iter().position(|f| {
            canonical_halfspace(&HalfSpace { a: f.normal.clone(), b: f.offset.clone() })
                .is_some_and(|c| vectors_equal(&c.a, &r.a))
        }) else {
            return false;
        };
        for (j, v) in p.vertices().iter().enumerate() {
            let ord = dot(&r.a, v).cmp_to(&r.b);
            if ord == Ordering::Greater || (ord == Ordering::Equal) != p.is_incident(i, j) {
                return false;
            }
        }
    }
    true
}

/// `a ⊆ b`, decided by one LP per row of `b`.
fn contained_in<S: Scalar>(a: &HRep<S>, b: &HRep<S>) -> bool {
    if a.is_infeasible() {
        return true;
    }
    b.rows.iter().all(|r| match a.maximize(&r.a) {
        LpOutcome::Optimal { value, .. } => value.cmp_to(&r.b) != Ordering::Greater,
        LpOutcome::Unbounded => false,
        LpOutcome::Infeasible => true,
    })
}

/// Whether two representations describe the same point set.
///
/// Full-dimensional sets must agree on their canonical minimal facet rows,
/// and every stored vertex must satisfy the other side's rows with the same
/// tightness pattern. Lower-dimensional sets fall back to mutual containment.
pub fn set_equal<'a, 'b, S: Scalar>(a: impl Into<SetRef<'a, S>>, b: impl Into<SetRef<'b, S>>) -> bool {
    let (a, b) = (a.into(), b.into());
    if a.dim() != b.dim() {
        return false;
    }
    let (fa, fb) = (a.full_dimensional(), b.full_dimensional());
    if fa != fb {
        return false;
    }
    if !fa {
        let (ha, hb) = (a.hrep(), b.hrep());
        return contained_in(&ha, &hb) && contained_in(&hb, &ha);
    }
    let (ra, rb) = (a.canonical_rows(), b.canonical_rows());
    if !same_row_sets(&ra, &rb) {
        return false;
    }
    let check = |side: &SetRef<'_, S>, rows: &[HalfSpace<S>]| match side {
        SetRef::Polytope(p) => vertices_match(p, rows),
        SetRef::HRep(_) => true,
    };
    check(&a, &rb) && check(&b, &ra)
}

/// Minimal halfspace description of `conv(points)` by brute force over all
/// `m`-subsets of points.
pub fn hull_halfspaces<S: Scalar>(points: &[Vec<S>], dim: usize) -> Result<HRep<S>, OracleError> {
    let diffs: Vec<Vec<S>> = points
        .iter()
        .skip(1)
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a.clone() - b).collect())
        .collect();
    if points.is_empty() || rank(&diffs) < dim {
        return Err(OracleError::LowerDimensional);
    }
    let mut unique: Vec<Vec<S>> = Vec::new();
    for p in points {
        if !unique.iter().any(|q| vectors_equal(p, q)) {
            unique.push(p.clone());
        }
    }
    let mut out: HRep<S> = HRep::new(dim);
    for combo in (0..unique.len()).combinations(dim) {
        let base = &unique[combo[0]];
        let rows: Vec<Vec<S>> = combo[1..]
            .iter()
            .map(|&k| unique[k].iter().zip(base).map(|(a, b)| a.clone() - b).collect())
            .collect();
        let Some(n) = normal_of(&rows, dim) else { continue };
        let level = dot(&n, base);
        let mut above = false;
        let mut below = false;
        for p in &unique {
            match dot(&n, p).cmp_to(&level) {
                Ordering::Greater => above = true,
                Ordering::Less => below = true,
                Ordering::Equal => {}
            }
        }
        let row = match (above, below) {
            (false, true) => HalfSpace { a: n, b: level },
            (true, false) => HalfSpace { a: n.iter().map(|x| -x.clone()).collect(), b: -level },
            _ => continue,
        };
        let row = canonical_halfspace(&row).expect("non-zero normal");
        if !out.rows.iter().any(|r| vectors_equal(&r.a, &row.a)) {
            out.rows.push(row);
        }
    }
    Ok(out)
}
