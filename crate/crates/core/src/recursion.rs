//! One measurement step of the set recursion on the `(V, F, h, I)` form.
//!
//! The update is a slab cut done as two halfspace clips; the propagation
//! assembles the Table-1 incidence matrix from the classification of facet
//! directions and the qualifying ridges, then prunes it. The alignment and
//! M-set machinery at the bottom is only used to check results.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::rank_of;
use crate::plant::{dual_realization, primal_realization, PlantModel};
use crate::polytope::{ridge_direction, Facet, Polytope, PolytopeError, Ridge};
use crate::scalar::{dot, is_zero_vector, Scalar, Sign};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecursionError {
    #[error("measurement is inconsistent with the current uncertainty set")]
    InfeasibleMeasurement,
    #[error("measurement slab meets the set only in a lower-dimensional face")]
    DegenerateCut,
    #[error("set is not full-dimensional or the plant order is below 2")]
    NotFullDimensional,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// Order of the slab cut and the propagation within one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepMode {
    #[serde(rename = "utp")]
    UpdateThenPropagate,
    #[default]
    #[serde(rename = "ptu")]
    PropagateThenUpdate,
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::UpdateThenPropagate => "utp",
            StepMode::PropagateThenUpdate => "ptu",
        })
    }
}

impl FromStr for StepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "utp" | "update-then-propagate" => Ok(StepMode::UpdateThenPropagate),
            "ptu" | "propagate-then-update" => Ok(StepMode::PropagateThenUpdate),
            other => Err(format!("unknown step mode '{other}' (expected utp or ptu)")),
        }
    }
}

/// `z - 1 <= <C, x> <= z + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSlab<S> {
    pub c: Vec<S>,
    pub z: S,
}

impl<S: Scalar> MeasurementSlab<S> {
    pub fn new(p: &PlantModel<S>, z: S) -> Self {
        MeasurementSlab { c: p.output_row(), z }
    }

    /// The two halfspaces `(a, b)` of the slab, upper bound first.
    pub fn halfspaces(&self) -> [(Vec<S>, S); 2] {
        [
            (self.c.clone(), self.z.clone() + &S::one()),
            (self.c.iter().map(|x| -x.clone()).collect(), S::one() - &self.z),
        ]
    }
}

/// Up / down / zero masks over the facets of a polytope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetClassification {
    pub up: FixedBitSet,
    pub down: FixedBitSet,
    pub zero: FixedBitSet,
}

pub fn classify_facets<S: Scalar>(s: &Polytope<S>, p: &PlantModel<S>) -> FacetClassification {
    let nf = s.n_facets();
    let mut c = FacetClassification {
        up: FixedBitSet::with_capacity(nf),
        down: FixedBitSet::with_capacity(nf),
        zero: FixedBitSet::with_capacity(nf),
    };
    let dm = p.d_m().sign();
    for (i, f) in s.facets().iter().enumerate() {
        match f.normal[0].sign() * dm {
            Sign::Negative => c.up.insert(i),
            Sign::Positive => c.down.insert(i),
            Sign::Zero => c.zero.insert(i),
        }
    }
    c
}

/// `S ∩ {x : <a, x> <= b}` with incidence maintenance.
///
/// Cut edges are vertex pairs on opposite sides whose common facets have
/// normal rank `m - 1`; each yields one new vertex by exact interpolation.
pub fn halfspace_cut<S: Scalar>(s: &Polytope<S>, a: &[S], b: &S) -> Result<Polytope<S>, RecursionError> {
    let m = s.dim();
    let slack: Vec<S> = s.vertices().iter().map(|v| dot(a, v) - b).collect();
    let signs: Vec<Sign> = slack.iter().map(Scalar::sign).collect();
    let any_neg = signs.contains(&Sign::Negative);
    let any_pos = signs.contains(&Sign::Positive);
    if !any_pos {
        return Ok(s.clone());
    }
    if !any_neg {
        return Err(if signs.contains(&Sign::Zero) {
            RecursionError::DegenerateCut
        } else {
            RecursionError::InfeasibleMeasurement
        });
    }

    let cols = s.vertex_facets();
    let mut vertices: Vec<Vec<S>> = Vec::new();
    let mut vertex_rows: Vec<FixedBitSet> = Vec::new();
    let mut on_cut = Vec::new();
    for (j, v) in s.vertices().iter().enumerate() {
        if signs[j] != Sign::Positive {
            vertices.push(v.clone());
            vertex_rows.push(cols[j].clone());
            on_cut.push(signs[j] == Sign::Zero);
        }
    }
    for j in (0..signs.len()).filter(|&j| signs[j] == Sign::Negative) {
        for l in (0..signs.len()).filter(|&l| signs[l] == Sign::Positive) {
            if cols[j].intersection_count(&cols[l]) + 1 < m {
                continue;
            }
            let mut common = cols[j].clone();
            common.intersect_with(&cols[l]);
            let normals: Vec<&[S]> = common.ones().map(|i| s.facets()[i].normal.as_slice()).collect();
            if rank_of(&normals) + 1 != m {
                continue;
            }
            let t = slack[j].clone() / &(slack[j].clone() - &slack[l]);
            let (vj, vl) = (&s.vertices()[j], &s.vertices()[l]);
            let x: Vec<S> = vj.iter().zip(vl).map(|(p, q)| p.clone() + &t.mul_ref(&(q.clone() - p))).collect();
            vertices.push(x);
            vertex_rows.push(common);
            on_cut.push(true);
        }
    }

    let nv = vertices.len();
    let mut facets = Vec::new();
    let mut incidence = Vec::new();
    for (i, f) in s.facets().iter().enumerate() {
        let survives = s.incidence()[i].ones().any(|j| signs[j] == Sign::Negative);
        if !survives {
            continue;
        }
        let mut row = FixedBitSet::with_capacity(nv);
        for (k, r) in vertex_rows.iter().enumerate() {
            if r.contains(i) {
                row.insert(k);
            }
        }
        facets.push(f.clone());
        incidence.push(row);
    }
    let mut row = FixedBitSet::with_capacity(nv);
    for (k, &c) in on_cut.iter().enumerate() {
        if c {
            row.insert(k);
        }
    }
    facets.push(Facet { normal: a.to_vec(), offset: b.clone() });
    incidence.push(row);
    Ok(Polytope::from_parts(m, vertices, facets, incidence).canonicalize().0)
}

/// Intersection with the measurement slab, one halfspace at a time.
pub fn slab_cut<S: Scalar>(s: &Polytope<S>, slab: &MeasurementSlab<S>) -> Result<Polytope<S>, RecursionError> {
    let [(a1, b1), (a2, b2)] = slab.halfspaces();
    let once = halfspace_cut(s, &a1, &b1)?;
    halfspace_cut(&once, &a2, &b2)
}

/// Per-step counts. `n_f`, `n_v`, `n_r` describe the set entering the
/// propagation; the `_prop` fields describe its image before the cut that
/// may follow; the `_out` fields describe the step result.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub n_f: usize,
    pub n_v: usize,
    pub n_r: usize,
    pub up: usize,
    pub down: usize,
    pub zero: usize,
    pub table_rows: usize,
    pub table_cols: usize,
    pub n_f_prop: usize,
    pub n_v_prop: usize,
    pub pruned_rows: usize,
    pub pruned_cols: usize,
    pub merged_vertices: usize,
    pub merged_facets: usize,
    pub n_f_out: usize,
    pub n_v_out: usize,
    #[serde(skip)]
    pub duration_ns: u128,
}

impl StepReport {
    /// `n_f⁺ <= n_f + n_R` and `n_v⁺ <= 2 n_v` for the propagation.
    pub fn within_bounds(&self) -> bool {
        self.n_f_prop <= self.n_f + self.n_r && self.n_v_prop <= 2 * self.n_v
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropagateOptions {
    /// Leave out the ridge rows. Only useful as a fault to be caught.
    pub skip_ridges: bool,
}

/// Every block of the Table-1 assembly, kept for printing and inspection.
/// Columns `0..n_v` are `g^T(v_j)`, columns `n_v..2 n_v` are `g^B(v_j)`.
#[derive(Debug, Clone)]
pub struct PropagationTrace<S> {
    pub classes: FacetClassification,
    pub ridges: Vec<Ridge>,
    pub ridge_directions: Vec<Vec<S>>,
    pub iv_pt: FixedBitSet,
    pub iv_pb: FixedBitSet,
    pub i_t: Vec<FixedBitSet>,
    pub i_b: Vec<FixedBitSet>,
    pub io_t: Vec<FixedBitSet>,
    pub io_b: Vec<FixedBitSet>,
    pub irv: Vec<FixedBitSet>,
    pub ir_t: Vec<FixedBitSet>,
    pub ir_b: Vec<FixedBitSet>,
    /// Candidate columns `A v ± B`.
    pub columns: Vec<Vec<S>>,
    /// Row directions of the assembled table, `3 n_f + n_R` of them.
    pub directions: Vec<Vec<S>>,
    /// Assembled table before pruning, `3 n_f + n_R` rows of `2 n_v` bits.
    pub table: Vec<FixedBitSet>,
}

pub fn lag_propagate<S: Scalar>(s: &Polytope<S>, p: &PlantModel<S>) -> Result<(Polytope<S>, StepReport), RecursionError> {
    let (out, report, _) = lag_propagate_traced(s, p, PropagateOptions::default())?;
    Ok((out, report))
}

/// `A·S ⊕ [-B, B]` via the Table-1 incidence assembly.
pub fn lag_propagate_traced<S: Scalar>(
    s: &Polytope<S>,
    p: &PlantModel<S>,
    opts: PropagateOptions,
) -> Result<(Polytope<S>, StepReport, PropagationTrace<S>), RecursionError> {
    let m = s.dim();
    if m < 2 || m != p.order() || s.n_vertices() <= m {
        return Err(RecursionError::NotFullDimensional);
    }
    let (nf, nv) = (s.n_facets(), s.n_vertices());
    let primal = primal_realization(p);
    let dual = dual_realization(p);
    let classes = classify_facets(s, p);
    let inc = s.incidence();

    let ridges = if opts.skip_ridges { Vec::new() } else { s.qualifying_ridges() };
    let mut ridge_directions = Vec::with_capacity(ridges.len());
    for r in &ridges {
        let (f1, f2) = (&s.facets()[r.facets.0].normal, &s.facets()[r.facets.1].normal);
        ridge_directions.push(ridge_direction(f1, f2)?);
    }

    let mut columns = Vec::with_capacity(2 * nv);
    let images: Vec<Vec<S>> = s.vertices().iter().map(|v| primal.a.mul_vec(v)).collect();
    for sign in [S::one(), -S::one()] {
        for av in &images {
            let mut c = av.clone();
            c[m - 1] = c[m - 1].clone() + &sign;
            columns.push(c);
        }
    }

    let mut iv_pt = FixedBitSet::with_capacity(nv);
    let mut iv_pb = FixedBitSet::with_capacity(nv);
    for i in classes.up.ones() {
        iv_pt.union_with(&inc[i]);
    }
    for i in classes.down.ones() {
        iv_pb.union_with(&inc[i]);
    }

    let empty = FixedBitSet::with_capacity(nv);
    let masked = |mask: &FixedBitSet, row: &FixedBitSet| {
        let mut r = row.clone();
        r.intersect_with(mask);
        r
    };
    let i_t: Vec<FixedBitSet> =
        (0..nf).map(|i| if classes.up.contains(i) { inc[i].clone() } else { empty.clone() }).collect();
    let i_b: Vec<FixedBitSet> =
        (0..nf).map(|i| if classes.down.contains(i) { inc[i].clone() } else { empty.clone() }).collect();
    let io_t: Vec<FixedBitSet> =
        (0..nf).map(|i| if classes.zero.contains(i) { masked(&iv_pt, &inc[i]) } else { empty.clone() }).collect();
    let io_b: Vec<FixedBitSet> =
        (0..nf).map(|i| if classes.zero.contains(i) { masked(&iv_pb, &inc[i]) } else { empty.clone() }).collect();
    let irv: Vec<FixedBitSet> = ridges.iter().map(|r| r.vertices.clone()).collect();
    let ir_t: Vec<FixedBitSet> = irv.iter().map(|r| masked(&iv_pt, r)).collect();
    let ir_b: Vec<FixedBitSet> = irv.iter().map(|r| masked(&iv_pb, r)).collect();

    let join = |top: &FixedBitSet, bottom: &FixedBitSet| {
        let mut row = FixedBitSet::with_capacity(2 * nv);
        for j in top.ones() {
            row.insert(j);
        }
        for j in bottom.ones() {
            row.insert(nv + j);
        }
        row
    };
    let propagated: Vec<Vec<S>> = s.facets().iter().map(|f| dual.a_star.mul_vec(&f.normal)).collect();
    let mut table = Vec::with_capacity(3 * nf + ridges.len());
    let mut directions = Vec::with_capacity(3 * nf + ridges.len());
    for i in 0..nf {
        table.push(join(&i_t[i], &empty));
        directions.push(propagated[i].clone());
    }
    for i in 0..nf {
        table.push(join(&empty, &i_b[i]));
        directions.push(propagated[i].clone());
    }
    for i in 0..nf {
        table.push(join(&io_t[i], &io_b[i]));
        directions.push(propagated[i].clone());
    }
    for (l, fr) in ridge_directions.iter().enumerate() {
        table.push(join(&ir_t[l], &ir_b[l]));
        directions.push(dual.a_star.mul_vec(fr));
    }

    let mut facets = Vec::with_capacity(table.len());
    for (row, dir) in table.iter().zip(&directions) {
        let offset = row
            .ones()
            .map(|j| dot(dir, &columns[j]))
            .reduce(|a, b| S::max_of(a, b))
            .unwrap_or_else(S::zero);
        facets.push(Facet { normal: dir.clone(), offset });
    }
    let raw = Polytope::from_parts(m, columns.clone(), facets, table.clone());
    let (out, stats) = raw.canonicalize();

    let report = StepReport {
        n_f: nf,
        n_v: nv,
        n_r: ridges.len(),
        up: classes.up.count_ones(..),
        down: classes.down.count_ones(..),
        zero: classes.zero.count_ones(..),
        table_rows: table.len(),
        table_cols: 2 * nv,
        n_f_prop: out.n_facets(),
        n_v_prop: out.n_vertices(),
        pruned_rows: stats.pruned_rows,
        pruned_cols: stats.pruned_cols,
        merged_vertices: stats.merged_vertices,
        merged_facets: stats.merged_facets,
        n_f_out: out.n_facets(),
        n_v_out: out.n_vertices(),
        duration_ns: 0,
    };
    let trace = PropagationTrace {
        classes,
        ridges,
        ridge_directions,
        iv_pt,
        iv_pb,
        i_t,
        i_b,
        io_t,
        io_b,
        irv,
        ir_t,
        ir_b,
        columns,
        directions,
        table,
    };
    Ok((out, report, trace))
}

/// One full measurement step.
pub fn step<S: Scalar>(
    s: &Polytope<S>,
    z: &S,
    p: &PlantModel<S>,
    mode: StepMode,
) -> Result<(Polytope<S>, StepReport), RecursionError> {
    step_with_options(s, z, p, mode, PropagateOptions::default())
}

pub fn step_with_options<S: Scalar>(
    s: &Polytope<S>,
    z: &S,
    p: &PlantModel<S>,
    mode: StepMode,
    opts: PropagateOptions,
) -> Result<(Polytope<S>, StepReport), RecursionError> {
    let start = Instant::now();
    let slab = MeasurementSlab::new(p, z.clone());
    let propagate = |s: &Polytope<S>| lag_propagate_traced(s, p, opts).map(|(out, rep, _)| (out, rep));
    let (out, mut report) = match mode {
        StepMode::UpdateThenPropagate => propagate(&slab_cut(s, &slab)?)?,
        StepMode::PropagateThenUpdate => {
            let (prop, report) = propagate(s)?;
            (slab_cut(&prop, &slab)?, report)
        }
    };
    report.n_f_out = out.n_facets();
    report.n_v_out = out.n_vertices();
    report.duration_ns = start.elapsed().as_nanos();
    Ok((out, report))
}

/// Up- and down-propagated facets keep the incident-vertex count of their
/// source facet. Returns the offending source facets.
pub fn isomorphic_image_violations<S: Scalar>(s: &Polytope<S>, out: &Polytope<S>, p: &PlantModel<S>) -> Vec<usize> {
    let classes = classify_facets(s, p);
    let dual = dual_realization(p);
    let mut bad = Vec::new();
    for i in classes.up.ones().chain(classes.down.ones()) {
        let dir = dual.a_star.mul_vec(&s.facets()[i].normal);
        let Ok((canon, _)) = S::canonical_scaling(&dir) else {
            bad.push(i);
            continue;
        };
        let found = out
            .facets()
            .iter()
            .position(|f| crate::scalar::vectors_equal(&f.normal, &canon));
        match found {
            Some(k) if out.incidence()[k].count_ones(..) == s.incidence()[i].count_ones(..) => {}
            _ => bad.push(i),
        }
    }
    bad
}

/// Exact recursion for `m = 1`: cut the interval by the slab, then map.
pub fn interval_step<S: Scalar>(lo: &S, hi: &S, z: &S, p: &PlantModel<S>) -> Result<(S, S), RecursionError> {
    let (lo, hi) = interval_cut(lo, hi, z, p)?;
    Ok(interval_propagate(&lo, &hi, p))
}

pub fn interval_cut<S: Scalar>(lo: &S, hi: &S, z: &S, p: &PlantModel<S>) -> Result<(S, S), RecursionError> {
    assert_eq!(p.order(), 1, "interval recursion needs a first-order plant");
    let c = p.output_row()[0].clone();
    let a = (z.clone() - &S::one()) / &c;
    let b = (z.clone() + &S::one()) / &c;
    let (slo, shi) = if c.is_positive() { (a, b) } else { (b, a) };
    let nlo = S::max_of(lo.clone(), slo);
    let nhi = S::min_of(hi.clone(), shi);
    if nlo.cmp_to(&nhi) == Ordering::Greater {
        return Err(RecursionError::InfeasibleMeasurement);
    }
    Ok((nlo, nhi))
}

pub fn interval_propagate<S: Scalar>(lo: &S, hi: &S, p: &PlantModel<S>) -> (S, S) {
    let primal = primal_realization(p);
    let a = primal.a[(0, 0)].clone();
    let b = primal.b[0].clone().abs();
    let (x, y) = (a.mul_ref(lo), a.mul_ref(hi));
    let (mlo, mhi) = if x.cmp_to(&y) == Ordering::Greater { (y, x) } else { (x, y) };
    (mlo - &b, mhi + &b)
}

/// `n_m y* + d_m u* = -(f)_1` in the `y* u*` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLine<S> {
    pub n_m: S,
    pub d_m: S,
    pub rhs: S,
}

impl<S: Scalar> DualLine<S> {
    /// `u*` on the line at a given `y*`.
    pub fn u_star(&self, y_star: &S) -> S {
        (self.rhs.clone() - &self.n_m.mul_ref(y_star)) / &self.d_m
    }
}

pub fn dual_line<S: Scalar>(f: &[S], p: &PlantModel<S>) -> DualLine<S> {
    DualLine { n_m: p.n_m().clone(), d_m: p.d_m().clone(), rhs: -f[0].clone() }
}

/// Whether `(y, u)` is aligned with `(y*, u*)` for measurement `z`.
pub fn aligned<S: Scalar>(primal: (&S, &S), dual: (&S, &S), z: &S) -> bool {
    let (y, u) = primal;
    let (y_star, u_star) = dual;
    let one = S::one();
    let u_ok = match u_star.sign() {
        Sign::Positive => u.same(&one),
        Sign::Negative => u.same(&-one.clone()),
        Sign::Zero => true,
    };
    let u_interior = u.clone().abs().cmp_to(&one) == Ordering::Less;
    let u_ok = u_ok && (!u_interior || u_star.is_zero());
    let r = y.clone() - z;
    let y_ok = match y_star.sign() {
        Sign::Positive => r.same(&one),
        Sign::Negative => r.same(&-one.clone()),
        Sign::Zero => true,
    };
    let y_interior = r.abs().cmp_to(&one) == Ordering::Less;
    u_ok && y_ok && (!y_interior || y_star.is_zero())
}

/// Closed box `[u_lo, u_hi] × [y_lo, y_hi]` in the `(u, y*)` plane; a
/// missing `y` bound is infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct MPiece<S> {
    pub u_lo: S,
    pub u_hi: S,
    pub y_lo: Option<S>,
    pub y_hi: Option<S>,
}

/// Finite union of [`MPiece`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct MSet<S> {
    pub pieces: Vec<MPiece<S>>,
}

impl<S: Scalar> MSet<S> {
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, u: &S, y_star: &S) -> bool {
        self.pieces.iter().any(|p| {
            u.cmp_to(&p.u_lo) != Ordering::Less
                && u.cmp_to(&p.u_hi) != Ordering::Greater
                && p.y_lo.as_ref().map_or(true, |lo| y_star.cmp_to(lo) != Ordering::Less)
                && p.y_hi.as_ref().map_or(true, |hi| y_star.cmp_to(hi) != Ordering::Greater)
        })
    }

    /// The set as a list of points, when every piece is a single point.
    pub fn as_points(&self) -> Option<Vec<(S, S)>> {
        self.pieces
            .iter()
            .map(|p| match (&p.y_lo, &p.y_hi) {
                (Some(lo), Some(hi)) if p.u_lo.same(&p.u_hi) && lo.same(hi) => {
                    Some((p.u_lo.clone(), lo.clone()))
                }
                _ => None,
            })
            .collect()
    }

    /// Corners of every piece; an unbounded side contributes the point one
    /// unit along the ray from its finite end.
    pub fn sample_points(&self) -> Vec<(S, S)> {
        let mut out: Vec<(S, S)> = Vec::new();
        for p in &self.pieces {
            let ys: Vec<S> = match (&p.y_lo, &p.y_hi) {
                (Some(lo), Some(hi)) => vec![lo.clone(), hi.clone()],
                (Some(lo), None) => vec![lo.clone(), lo.clone() + &S::one()],
                (None, Some(hi)) => vec![hi.clone() - &S::one(), hi.clone()],
                (None, None) => vec![-S::one(), S::zero(), S::one()],
            };
            for u in [&p.u_lo, &p.u_hi] {
                for y in &ys {
                    if !out.iter().any(|(a, b)| a.same(u) && b.same(y)) {
                        out.push((u.clone(), y.clone()));
                    }
                }
            }
        }
        out
    }
}

/// Admissible inputs for a given sign of `u*`.
fn u_range<S: Scalar>(sign: Sign) -> (S, S) {
    match sign {
        Sign::Positive => (S::one(), S::one()),
        Sign::Negative => (-S::one(), -S::one()),
        Sign::Zero => (-S::one(), S::one()),
    }
}

/// Pairs `(u, y*)` with `(<C, x>, u)` in the square `Q` and aligned with a
/// point of the dual line `L*(f)`.
pub fn compute_m<S: Scalar>(x: &[S], f: &[S], z: &S, p: &PlantModel<S>) -> MSet<S> {
    let one = S::one();
    let r = dot(&p.output_row(), x) - z;
    let (y_lo, y_hi) = match (r.cmp_to(&one), r.cmp_to(&-one.clone())) {
        (Ordering::Greater, _) | (_, Ordering::Less) => return MSet { pieces: Vec::new() },
        (Ordering::Equal, _) => (Some(S::zero()), None),
        (_, Ordering::Equal) => (None, Some(S::zero())),
        _ => (Some(S::zero()), Some(S::zero())),
    };
    let line = dual_line(f, p);
    let piece = |lo: Option<S>, hi: Option<S>, sign: Sign| {
        let (u_lo, u_hi) = u_range::<S>(sign);
        MPiece { u_lo, u_hi, y_lo: lo, y_hi: hi }
    };
    // representative y* inside a non-degenerate range
    let inside = |lo: &Option<S>, hi: &Option<S>| match (lo, hi) {
        (Some(l), _) => l.clone(),
        (None, Some(h)) => h.clone() - &S::one(),
        (None, None) => S::zero(),
    };
    let mut pieces = Vec::new();
    if line.n_m.is_zero() || matches!((&y_lo, &y_hi), (Some(a), Some(b)) if a.same(b)) {
        let at = inside(&y_lo, &y_hi);
        pieces.push(piece(y_lo, y_hi, line.u_star(&at).sign()));
        return MSet { pieces };
    }
    // u* changes sign at y0 on a half-line of y*
    let y0 = line.rhs.clone() / &line.n_m;
    let below_ok = y_lo.as_ref().map_or(true, |lo| lo.cmp_to(&y0) == Ordering::Less);
    let above_ok = y_hi.as_ref().map_or(true, |hi| hi.cmp_to(&y0) == Ordering::Greater);
    let y0_in = below_ok && above_ok
        || y_lo.as_ref().is_some_and(|l| l.same(&y0))
        || y_hi.as_ref().is_some_and(|h| h.same(&y0));
    if !y0_in {
        let at = inside(&y_lo, &y_hi);
        pieces.push(piece(y_lo, y_hi, line.u_star(&at).sign()));
        return MSet { pieces };
    }
    if below_ok {
        let hi = Some(y0.clone());
        let at = match &y_lo {
            Some(l) => l.clone(),
            None => y0.clone() - &S::one(),
        };
        pieces.push(piece(y_lo.clone(), hi, line.u_star(&at).sign()));
    }
    pieces.push(piece(Some(y0.clone()), Some(y0.clone()), Sign::Zero));
    if above_ok {
        let at = match &y_hi {
            Some(h) => h.clone(),
            None => y0.clone() + &S::one(),
        };
        pieces.push(piece(Some(y0.clone()), y_hi.clone(), line.u_star(&at).sign()));
    }
    MSet { pieces }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    /// `(vertex, direction, M-point)` triples checked.
    pub checked: usize,
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Push vertex / facet-direction pairs of `s` through every sample point of
/// their M-set and check that `A v + B u` lands in `s_next` with
/// `A* f + B* y*` in its normal cone.
///
/// `s_next` must be the update-then-propagate successor of `s` for `z`.
/// `samples` caps the number of (vertex, direction) pairs; 0 means all.
/// Each vertex is also checked with the zero direction.
pub fn verify_theorem1<S: Scalar>(
    s: &Polytope<S>,
    s_next: &Polytope<S>,
    z: &S,
    p: &PlantModel<S>,
    samples: usize,
) -> VerificationReport {
    let primal = primal_realization(p);
    let dual = dual_realization(p);
    let m = s.dim();
    let mut report = VerificationReport::default();
    let cols = s.vertex_facets();
    let mut pairs = 0usize;
    'outer: for (j, v) in s.vertices().iter().enumerate() {
        let mut dirs: Vec<Vec<S>> = cols[j].ones().map(|i| s.facets()[i].normal.clone()).collect();
        dirs.push(vec![S::zero(); m]);
        for f in dirs {
            if samples > 0 && pairs >= samples {
                break 'outer;
            }
            pairs += 1;
            let av = primal.a.mul_vec(v);
            let af = dual.a_star.mul_vec(&f);
            for (u, y_star) in compute_m(v, &f, z, p).sample_points() {
                report.checked += 1;
                let x_next: Vec<S> = av.iter().zip(&primal.b).map(|(a, b)| a.clone() + &b.mul_ref(&u)).collect();
                if !s_next.contains(&x_next) {
                    report.violations.push(format!("vertex {j}: A v + B u with u={u} is outside the successor"));
                    continue;
                }
                let f_next: Vec<S> =
                    af.iter().zip(&dual.b_star).map(|(a, b)| a.clone() + &b.mul_ref(&y_star)).collect();
                if is_zero_vector(&f_next) {
                    continue;
                }
                let (best, _) = s_next.support(&f_next).expect("successor has vertices");
                if !dot(&f_next, &x_next).same(&best) {
                    report.violations.push(format!(
                        "vertex {j}: propagated direction with (u, y*) = ({u}, {y_star}) is not normal at the successor"
                    ));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{hull_halfspaces, oracle_propagate, oracle_step, set_equal};
    use crate::plant::parse_plant;
    use crate::polytope::from_halfspaces;
    use crate::polytope::tests::{diamond, hrep, q, square};
    use crate::scalar::Rational;

    fn swap_plant() -> PlantModel<Rational> {
        parse_plant(&[q(0), q(1), q(0)], &[q(1), q(0), q(-1)]).unwrap()
    }

    fn pts(v: &[[i64; 2]]) -> Vec<Vec<Rational>> {
        v.iter().map(|p| p.iter().map(|&x| q(x)).collect()).collect()
    }

    fn half() -> Rational {
        Rational::new(1, 2)
    }

    fn vertex_set_eq(p: &Polytope<Rational>, expect: &[Vec<Rational>]) -> bool {
        let mut a = p.vertices().to_vec();
        let mut b = expect.to_vec();
        a.sort();
        b.sort();
        a == b
    }

    #[test]
    fn classification_examples() {
        let p = swap_plant();
        let s = from_halfspaces(&hrep(&[(&[1, 0], 1), (&[-1, 0], 1), (&[0, 1], 1), (&[0, -1], 1)])).unwrap();
        let c = classify_facets(&s, &p);
        for (i, f) in s.facets().iter().enumerate() {
            let expect = match (f.normal[0].sign(), f.normal[1].sign()) {
                (Sign::Positive, _) => "up",
                (Sign::Negative, _) => "down",
                _ => "zero",
            };
            let got = if c.up.contains(i) {
                "up"
            } else if c.down.contains(i) {
                "down"
            } else {
                "zero"
            };
            assert_eq!(got, expect);
            let n = [c.up.contains(i), c.down.contains(i), c.zero.contains(i)].iter().filter(|&&b| b).count();
            assert_eq!(n, 1);
        }
    }

    #[test]
    fn slab_cut_examples() {
        let p = swap_plant();
        let sq = square();
        let same = slab_cut(&sq, &MeasurementSlab::new(&p, q(0))).unwrap();
        assert!(set_equal(&same, &sq));

        let cut = slab_cut(&sq, &MeasurementSlab::new(&p, Rational::new(3, 2))).unwrap();
        assert!(cut.validate().passed(), "{}", cut.validate());
        let expect = vec![vec![q(1), half()], vec![q(-1), half()], vec![q(1), q(1)], vec![q(-1), q(1)]];
        assert!(vertex_set_eq(&cut, &expect));
        assert!(cut.facets().iter().any(|f| f.normal == vec![q(0), q(-1)] && f.offset == -half()));

        assert_eq!(
            slab_cut(&sq, &MeasurementSlab::new(&p, q(3))).unwrap_err(),
            RecursionError::InfeasibleMeasurement
        );
        // slab touching only the top edge
        assert_eq!(
            slab_cut(&sq, &MeasurementSlab::new(&p, q(2))).unwrap_err(),
            RecursionError::DegenerateCut
        );
    }

    #[test]
    fn square_propagates_to_tall_box() {
        let p = swap_plant();
        let (out, report) = lag_propagate(&square(), &p).unwrap();
        assert!(out.validate().passed(), "{}", out.validate());
        assert!(vertex_set_eq(&out, &pts(&[[1, 2], [-1, 2], [1, -2], [-1, -2]])));
        assert_eq!(out.n_facets(), 4);
        assert_eq!(report.n_r, 0);
        assert_eq!((report.n_f_prop, report.n_v_prop), (4, 4));
        assert!(report.within_bounds());
        assert_eq!(report.table_rows, 12);
        assert_eq!(report.table_cols, 8);
        let top = out.facets().iter().position(|f| f.normal == vec![q(0), q(1)]).unwrap();
        assert_eq!(out.incidence()[top].count_ones(..), 2);
        assert!(isomorphic_image_violations(&square(), &out, &p).is_empty());
        assert!(set_equal(&out, &oracle_propagate(&square().to_hrep(), &p).unwrap()));
    }

    #[test]
    fn diamond_propagates_to_hexagon() {
        let p = swap_plant();
        let (out, report, trace) = lag_propagate_traced(&diamond(), &p, PropagateOptions::default()).unwrap();
        assert!(out.validate().passed(), "{}", out.validate());
        assert_eq!(out.n_facets(), 6);
        assert_eq!(report.n_r, 2);
        assert!(vertex_set_eq(&out, &pts(&[[1, 1], [-1, 1], [1, -1], [-1, -1], [0, 2], [0, -2]])));
        for d in [[1, 0], [-1, 0]] {
            assert!(out.facets().iter().any(|f| f.normal == vec![q(d[0]), q(d[1])]));
        }
        let mut rdirs = trace.ridge_directions.clone();
        rdirs.sort();
        assert_eq!(rdirs, pts(&[[0, -1], [0, 1]]));
        assert!(report.within_bounds());
        let hull = hull_halfspaces(&trace.columns, 2).unwrap();
        assert!(set_equal(&out, &hull));

        let (broken, _, _) =
            lag_propagate_traced(&diamond(), &p, PropagateOptions { skip_ridges: true }).unwrap();
        assert!(!set_equal(&broken, &hull));
        assert_eq!(broken.n_facets(), 4);
    }

    #[test]
    fn step_examples() {
        let p = swap_plant();
        let sq = square();
        let (out, _) = step(&sq, &Rational::new(3, 2), &p, StepMode::UpdateThenPropagate).unwrap();
        let expect = vec![vec![half(), q(2)], vec![half(), q(-2)], vec![q(1), q(2)], vec![q(1), q(-2)]];
        assert!(vertex_set_eq(&out, &expect));

        let (utp, _) = step(&sq, &q(0), &p, StepMode::UpdateThenPropagate).unwrap();
        assert!(vertex_set_eq(&utp, &pts(&[[1, 2], [-1, 2], [1, -2], [-1, -2]])));
        let (ptu, _) = step(&sq, &q(0), &p, StepMode::PropagateThenUpdate).unwrap();
        assert!(set_equal(&ptu, &sq));

        for mode in [StepMode::UpdateThenPropagate, StepMode::PropagateThenUpdate] {
            assert_eq!(step(&sq, &q(10), &p, mode).unwrap_err(), RecursionError::InfeasibleMeasurement);
            let (fv, _) = step(&diamond(), &half(), &p, mode).unwrap();
            let or = oracle_step(&diamond().to_hrep(), &half(), &p, mode).unwrap();
            assert!(set_equal(&fv, &or));
        }
    }

    #[test]
    fn dual_line_examples() {
        let p = swap_plant();
        assert_eq!(dual_line(&[q(1), q(0)], &p).u_star(&q(0)), q(1));
        assert_eq!(dual_line(&[q(0), q(1)], &p).u_star(&q(0)), q(0));
        assert_eq!(dual_line(&[q(-2), q(0)], &p).u_star(&q(0)), q(-2));
    }

    #[test]
    fn alignment_examples() {
        let z = q(3);
        let y_top = q(4);
        assert!(aligned((&y_top, &q(1)), (&q(0), &q(2)), &z));
        assert!(aligned((&z, &half()), (&q(0), &q(0)), &z));
        assert!(!aligned((&z, &half()), (&q(1), &q(0)), &z));
        assert!(!aligned((&z, &half()), (&q(0), &q(1)), &z));
    }

    #[test]
    fn m_set_examples() {
        let p = swap_plant();
        let x = [q(0), q(0)];
        let m = compute_m(&x, &[q(1), q(0)], &q(0), &p);
        assert_eq!(m.as_points(), Some(vec![(q(1), q(0))]));
        let m = compute_m(&x, &[q(-1), q(0)], &q(0), &p);
        assert_eq!(m.as_points(), Some(vec![(q(-1), q(0))]));
        let m = compute_m(&x, &[q(0), q(0)], &q(0), &p);
        assert_eq!(m.pieces, vec![MPiece { u_lo: q(-1), u_hi: q(1), y_lo: Some(q(0)), y_hi: Some(q(0)) }]);
        assert!(compute_m(&x, &[q(1), q(0)], &q(5), &p).is_empty());
    }

    #[test]
    fn m_set_on_the_slab_boundary() {
        // n_m != 0, output on the upper edge of Q: y* ranges over [0, inf)
        let p = parse_plant(&[q(0), q(1), q(2)], &[q(1), q(0), q(-1)]).unwrap();
        let x = [half(), q(0)];
        let z = q(0);
        // u* = f1 + 2 y* here; f1 = -1 changes sign at y* = 1/2
        let m = compute_m(&x, &[q(-1), q(0)], &z, &p);
        let quarter = Rational::new(1, 4);
        assert!(m.contains(&q(-1), &quarter));
        assert!(m.contains(&q(0), &half()));
        assert!(m.contains(&q(1), &q(5)));
        assert!(!m.contains(&q(1), &quarter));
        assert!(!m.contains(&q(0), &q(0)));
        for (u, y_star) in m.sample_points() {
            let u_star = dual_line(&[q(-1), q(0)], &p).u_star(&y_star);
            assert!(aligned((&q(1), &u), (&y_star, &u_star), &z), "({u}, {y_star})");
        }
    }

    #[test]
    fn alignment_holds_on_square() {
        let p = swap_plant();
        let sq = square();
        for z in [q(0), Rational::new(3, 2)] {
            let (next, _) = step(&sq, &z, &p, StepMode::UpdateThenPropagate).unwrap();
            let rep = verify_theorem1(&sq, &next, &z, &p, 0);
            assert!(rep.passed(), "{:?}", rep.violations);
            assert!(rep.checked > 0);
        }
        // shrink one offset of the successor
        let (next, _) = step(&sq, &q(0), &p, StepMode::UpdateThenPropagate).unwrap();
        let mut facets = next.facets().to_vec();
        facets[0].offset = facets[0].offset.clone() - &half();
        let bad = Polytope::from_parts(2, next.vertices().to_vec(), facets, next.incidence().to_vec());
        assert!(!verify_theorem1(&sq, &bad, &q(0), &p, 0).passed());
    }

    #[test]
    fn interval_examples() {
        let p = parse_plant(&[q(0), q(1)], &[q(1), -half()]).unwrap();
        let (lo, hi) = interval_step(&q(-1), &q(1), &q(0), &p).unwrap();
        assert_eq!((lo, hi), (Rational::new(-3, 2), Rational::new(3, 2)));
        let (lo, hi) = interval_step(&q(-1), &q(1), &Rational::new(3, 2), &p).unwrap();
        assert_eq!((lo, hi), (Rational::new(-3, 4), Rational::new(3, 2)));
        assert_eq!(
            interval_step(&q(-1), &q(1), &q(5), &p).unwrap_err(),
            RecursionError::InfeasibleMeasurement
        );
    }

    #[test]
    fn step_mode_parsing() {
        assert_eq!("utp".parse::<StepMode>().unwrap(), StepMode::UpdateThenPropagate);
        assert_eq!(StepMode::default(), StepMode::PropagateThenUpdate);
        assert!("sideways".parse::<StepMode>().is_err());
        assert_eq!(serde_json::to_string(&StepMode::PropagateThenUpdate).unwrap(), "\"ptu\"");
    }
}
