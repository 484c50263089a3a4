//! Vertex / facet / incidence representation of a full-dimensional polytope.
//!
//! A [`Polytope`] stores
//!
//! * `V`: vertex coordinates, one vector per vertex (insertion order),
//! * `F`: outward facet directions with explicit support offsets
//!   `h_i = max_j <f_i, v_j>`,
//! * `I`: the vertex-facet incidence matrix, one packed bit row per facet,
//!   with `I(i, j) = 1` exactly when `<f_i, v_j> = h_i`.
//!
//! All three are kept in sync by every operation that returns a new polytope.

use std::fmt;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{affine_dim, rank_of, solve};
use crate::lp::{is_feasible, maximize, LpOutcome};
use crate::oracle::{HRep, HalfSpace};
use crate::scalar::{dot, is_zero_vector, vectors_equal, Scalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error("polytope has no vertices")]
    EmptyPolytope,
    #[error("halfspace system is infeasible")]
    EmptySet,
    #[error("halfspace system is unbounded")]
    UnboundedSet,
    #[error("halfspace system has no interior")]
    LowerDimensional,
    #[error("ridge facet directions are parallel or do not straddle the first axis")]
    DegenerateRidge,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("malformed polytope dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet<S> {
    pub normal: Vec<S>,
    pub offset: S,
}

#[derive(Clone)]
pub struct Polytope<S> {
    dim: usize,
    vertices: Vec<Vec<S>>,
    facets: Vec<Facet<S>>,
    incidence: Vec<FixedBitSet>,
}

/// Counts of what [`Polytope::canonicalize`] removed or merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonStats {
    pub pruned_rows: usize,
    pub pruned_cols: usize,
    pub merged_vertices: usize,
    pub merged_facets: usize,
}

/// Intersection of two facets whose directions straddle the first axis.
#[derive(Debug, Clone)]
pub struct Ridge {
    /// `(i1, i2)` with `(f_i1)_1 < 0 < (f_i2)_1`.
    pub facets: (usize, usize),
    /// Common incident vertices.
    pub vertices: FixedBitSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape(String),
    Empty,
    NotFullDimensional { affine_dim: usize },
    ZeroDirection { facet: usize },
    IncidenceMismatch { facet: usize, vertex: usize },
    OutsideFacet { facet: usize, vertex: usize },
    FacetSpan { facet: usize, affine_dim: Option<usize> },
    VertexDegree { vertex: usize, facets: usize },
    DuplicateVertex { first: usize, second: usize },
    DuplicateFacet { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Violation::Empty => write!(f, "no vertices"),
            Violation::NotFullDimensional { affine_dim } => {
                write!(f, "vertices span only dimension {affine_dim}")
            }
            Violation::ZeroDirection { facet } => write!(f, "facet {facet} has zero direction"),
            Violation::IncidenceMismatch { facet, vertex } => {
                write!(f, "incidence mismatch at ({facet},{vertex})")
            }
            Violation::OutsideFacet { facet, vertex } => {
                write!(f, "vertex {vertex} violates facet {facet}")
            }
            Violation::FacetSpan { facet, affine_dim } => {
                write!(f, "facet {facet} incident vertices span {affine_dim:?}")
            }
            Violation::VertexDegree { vertex, facets } => {
                write!(f, "vertex {vertex} lies on only {facets} facets")
            }
            Violation::DuplicateVertex { first, second } => {
                write!(f, "duplicate vertex ({first},{second})")
            }
            Violation::DuplicateFacet { first, second } => {
                write!(f, "duplicate facet ({first},{second})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "pass");
        }
        write!(f, "fail: ")?;
        write!(f, "{}", self.violations.iter().map(ToString::to_string).join("; "))
    }
}

impl<S: Scalar> Polytope<S> {
    /// Assemble a polytope from raw parts. No invariant is checked; see
    /// [`Polytope::validate`].
    pub fn from_parts(
        dim: usize,
        vertices: Vec<Vec<S>>,
        facets: Vec<Facet<S>>,
        incidence: Vec<FixedBitSet>,
    ) -> Self {
        Polytope { dim, vertices, facets, incidence }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet<S>] {
        &self.facets
    }

    pub fn incidence(&self) -> &[FixedBitSet] {
        &self.incidence
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn is_incident(&self, facet: usize, vertex: usize) -> bool {
        self.incidence[facet].contains(vertex)
    }

    /// Column view of the incidence matrix: the facets through each vertex.
    pub fn vertex_facets(&self) -> Vec<FixedBitSet> {
        let mut cols = vec![FixedBitSet::with_capacity(self.facets.len()); self.vertices.len()];
        for (i, row) in self.incidence.iter().enumerate() {
            for j in row.ones() {
                cols[j].insert(i);
            }
        }
        cols
    }

    pub fn contains(&self, x: &[S]) -> bool {
        self.facets
            .iter()
            .all(|f| dot(&f.normal, x).cmp_to(&f.offset) != std::cmp::Ordering::Greater)
    }

    pub fn to_hrep(&self) -> HRep<S> {
        HRep {
            dim: self.dim,
            rows: self
                .facets
                .iter()
                .map(|f| HalfSpace { a: f.normal.clone(), b: f.offset.clone() })
                .collect(),
        }
    }

    /// Value of the support function and the vertices attaining it.
    pub fn support(&self, f: &[S]) -> Result<(S, Vec<usize>), PolytopeError> {
        let mut best: Option<S> = None;
        let mut argmax = Vec::new();
        for (j, v) in self.vertices.iter().enumerate() {
            let val = dot(f, v);
            match best.as_ref().map(|b| val.cmp_to(b)) {
                None | Some(std::cmp::Ordering::Greater) => {
                    best = Some(val);
                    argmax.clear();
                    argmax.push(j);
                }
                Some(std::cmp::Ordering::Equal) => argmax.push(j),
                Some(std::cmp::Ordering::Less) => {}
            }
        }
        best.map(|b| (b, argmax)).ok_or(PolytopeError::EmptyPolytope)
    }

    /// Check every representation invariant and report each violation.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let (nf, nv, m) = (self.facets.len(), self.vertices.len(), self.dim);
        if self.incidence.len() != nf || self.incidence.iter().any(|r| r.len() != nv) {
            out.push(Violation::Shape(format!(
                "{} facets, {} incidence rows, {} vertices",
                nf,
                self.incidence.len(),
                nv
            )));
            return ValidationReport { violations: out };
        }
        if self.vertices.iter().any(|v| v.len() != m) || self.facets.iter().any(|f| f.normal.len() != m) {
            out.push(Violation::Shape(format!("coordinates are not all of dimension {m}")));
            return ValidationReport { violations: out };
        }
        if nv == 0 {
            out.push(Violation::Empty);
            return ValidationReport { violations: out };
        }
        let all: Vec<&[S]> = self.vertices.iter().map(Vec::as_slice).collect();
        let full = affine_dim(&all).unwrap_or(0);
        if full != m {
            out.push(Violation::NotFullDimensional { affine_dim: full });
        }
        for (i, f) in self.facets.iter().enumerate() {
            if is_zero_vector(&f.normal) {
                out.push(Violation::ZeroDirection { facet: i });
                continue;
            }
            for (j, v) in self.vertices.iter().enumerate() {
                let ord = dot(&f.normal, v).cmp_to(&f.offset);
                if ord == std::cmp::Ordering::Greater {
                    out.push(Violation::OutsideFacet { facet: i, vertex: j });
                }
                if (ord == std::cmp::Ordering::Equal) != self.incidence[i].contains(j) {
                    out.push(Violation::IncidenceMismatch { facet: i, vertex: j });
                }
            }
            let on: Vec<&[S]> = self.incidence[i].ones().map(|j| self.vertices[j].as_slice()).collect();
            let span = affine_dim(&on);
            if span != Some(m - 1) {
                out.push(Violation::FacetSpan { facet: i, affine_dim: span });
            }
        }
        for (j, col) in self.vertex_facets().iter().enumerate() {
            let deg = col.count_ones(..);
            if deg < m {
                out.push(Violation::VertexDegree { vertex: j, facets: deg });
            }
        }
        for (a, b) in (0..nv).tuple_combinations() {
            if vectors_equal(&self.vertices[a], &self.vertices[b]) {
                out.push(Violation::DuplicateVertex { first: a, second: b });
            }
        }
        let canon: Vec<Option<(Vec<S>, S)>> = self.facets.iter().map(canonical_facet).collect();
        for (a, b) in (0..nf).tuple_combinations() {
            if let (Some((da, oa)), Some((db, ob))) = (&canon[a], &canon[b]) {
                if vectors_equal(da, db) && oa.same(ob) {
                    out.push(Violation::DuplicateFacet { first: a, second: b });
                }
            }
        }
        ValidationReport { violations: out }
    }

    /// Drop all-zero incidence rows and columns, merge duplicate vertices and
    /// facets, and bring every direction into canonical form.
    pub fn canonicalize(self) -> (Polytope<S>, CanonStats) {
        let mut stats = CanonStats::default();
        let Polytope { dim, vertices, facets, incidence } = self;

        // zero rows
        let mut rows: Vec<(Facet<S>, FixedBitSet)> = Vec::with_capacity(facets.len());
        for (f, r) in facets.into_iter().zip(incidence) {
            if r.is_clear() {
                stats.pruned_rows += 1;
            } else {
                rows.push((f, r));
            }
        }

        // zero columns, then duplicate columns
        let nv = vertices.len();
        let mut used = FixedBitSet::with_capacity(nv);
        for (_, r) in &rows {
            used.union_with(r);
        }
        let mut new_vertices: Vec<Vec<S>> = Vec::new();
        let mut remap: Vec<Option<usize>> = vec![None; nv];
        for (j, v) in vertices.into_iter().enumerate() {
            if !used.contains(j) {
                stats.pruned_cols += 1;
                continue;
            }
            if let Some(k) = new_vertices.iter().position(|w| vectors_equal(w, &v)) {
                stats.merged_vertices += 1;
                remap[j] = Some(k);
            } else {
                remap[j] = Some(new_vertices.len());
                new_vertices.push(v);
            }
        }
        let nv2 = new_vertices.len();

        let mut out_facets: Vec<Facet<S>> = Vec::with_capacity(rows.len());
        let mut out_rows: Vec<FixedBitSet> = Vec::with_capacity(rows.len());
        for (f, r) in rows {
            let mut row = FixedBitSet::with_capacity(nv2);
            for j in r.ones() {
                if let Some(k) = remap[j] {
                    row.insert(k);
                }
            }
            let f = match canonical_facet(&f) {
                Some((normal, offset)) => Facet { normal, offset },
                None => f,
            };
            if let Some(k) = out_facets
                .iter()
                .position(|g| vectors_equal(&g.normal, &f.normal) && g.offset.same(&f.offset))
            {
                stats.merged_facets += 1;
                out_rows[k].union_with(&row);
            } else {
                out_facets.push(f);
                out_rows.push(row);
            }
        }
        (Polytope { dim, vertices: new_vertices, facets: out_facets, incidence: out_rows }, stats)
    }

    /// Ridges formed by facet pairs whose directions have strictly
    /// opposite-sign first components.
    ///
    /// A candidate pair qualifies when its common vertices have affine
    /// dimension exactly `m - 2`, checked by exact rank.
    pub fn qualifying_ridges(&self) -> Vec<Ridge> {
        let m = self.dim;
        let neg: Vec<usize> = (0..self.facets.len())
            .filter(|&i| self.facets[i].normal[0].is_negative())
            .collect();
        let pos: Vec<usize> = (0..self.facets.len())
            .filter(|&i| self.facets[i].normal[0].is_positive())
            .collect();
        let mut out = Vec::new();
        for &i1 in &neg {
            for &i2 in &pos {
                if self.incidence[i1].intersection_count(&self.incidence[i2]) + 1 < m {
                    continue;
                }
                let mut common = self.incidence[i1].clone();
                common.intersect_with(&self.incidence[i2]);
                let pts: Vec<&[S]> = common.ones().map(|j| self.vertices[j].as_slice()).collect();
                if m >= 2 && affine_dim(&pts) == Some(m - 2) {
                    out.push(Ridge { facets: (i1, i2), vertices: common });
                }
            }
        }
        out
    }

    pub fn to_dump(&self) -> PolytopeDump {
        PolytopeDump {
            vertices: self.vertices.iter().map(|v| v.iter().map(Scalar::to_repr).collect()).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetDump {
                    normal: f.normal.iter().map(Scalar::to_repr).collect(),
                    offset: f.offset.to_repr(),
                })
                .collect(),
            incidence: self
                .incidence
                .iter()
                .map(|r| (0..self.vertices.len()).map(|j| if r.contains(j) { '1' } else { '0' }).collect())
                .collect(),
        }
    }

    pub fn from_dump(dump: &PolytopeDump) -> Result<Self, PolytopeError> {
        let parse = |v: &[String]| -> Result<Vec<S>, PolytopeError> {
            v.iter().map(|s| S::parse_str(s).map_err(PolytopeError::from)).collect()
        };
        let vertices = dump.vertices.iter().map(|v| parse(v)).collect::<Result<Vec<_>, _>>()?;
        let facets = dump
            .facets
            .iter()
            .map(|f| {
                Ok(Facet {
                    normal: parse(&f.normal)?,
                    offset: S::parse_str(&f.offset)?,
                })
            })
            .collect::<Result<Vec<_>, PolytopeError>>()?;
        let dim = vertices
            .first()
            .map(Vec::len)
            .or_else(|| facets.first().map(|f| f.normal.len()))
            .ok_or_else(|| PolytopeError::Dump("no vertices or facets".into()))?;
        let nv = vertices.len();
        let incidence = dump
            .incidence
            .iter()
            .map(|bits| {
                if bits.len() != nv {
                    return Err(PolytopeError::Dump(format!("incidence row {bits:?} has wrong length")));
                }
                let mut row = FixedBitSet::with_capacity(nv);
                for (j, ch) in bits.chars().enumerate() {
                    match ch {
                        '1' => row.insert(j),
                        '0' => {}
                        _ => return Err(PolytopeError::Dump(format!("bad incidence character {ch:?}"))),
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Polytope { dim, vertices, facets, incidence })
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polytope<T> {
        Polytope {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v.iter().map(&f).collect()).collect(),
            facets: self
                .facets
                .iter()
                .map(|g| Facet { normal: g.normal.iter().map(&f).collect(), offset: f(&g.offset) })
                .collect(),
            incidence: self.incidence.clone(),
        }
    }
}

impl<S: Scalar> fmt::Debug for Polytope<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(&self.to_dump()).map_err(|_| fmt::Error)?)
    }
}

impl<S: Scalar> fmt::Display for Polytope<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices ({}):", self.vertices.len())?;
        for (j, v) in self.vertices.iter().enumerate() {
            writeln!(f, "  v{j:<3} ({})", v.iter().map(Scalar::to_repr).join(", "))?;
        }
        writeln!(f, "facets ({}):", self.facets.len())?;
        for (i, fc) in self.facets.iter().enumerate() {
            let bits: String = (0..self.vertices.len())
                .map(|j| if self.incidence[i].contains(j) { '1' } else { '0' })
                .collect();
            writeln!(
                f,
                "  f{i:<3} <({}), x> <= {:<8} {bits}",
                fc.normal.iter().map(Scalar::to_repr).join(", "),
                fc.offset.to_repr()
            )?;
        }
        Ok(())
    }
}

fn canonical_facet<S: Scalar>(f: &Facet<S>) -> Option<(Vec<S>, S)> {
    let (normal, factor) = S::canonical_scaling(&f.normal).ok()?;
    Some((normal, f.offset.clone() * &factor))
}

/// Canonical `(direction, offset)` of a halfspace with positive scaling.
pub fn canonical_halfspace<S: Scalar>(h: &HalfSpace<S>) -> Option<HalfSpace<S>> {
    let (a, factor) = S::canonical_scaling(&h.a).ok()?;
    Some(HalfSpace { a, b: h.b.clone() * &factor })
}

/// Direction in the cone of `f1, f2` whose first component vanishes.
///
/// Requires `(f1)_1 < 0 < (f2)_1`; the interpolation parameter is
/// `t = (f2)_1 / ((f2)_1 - (f1)_1)`, which lies in `(0, 1)`.
pub fn ridge_direction<S: Scalar>(f1: &[S], f2: &[S]) -> Result<Vec<S>, PolytopeError> {
    if !(f1[0].is_negative() && f2[0].is_positive()) {
        return Err(PolytopeError::DegenerateRidge);
    }
    if rank_of(&[f1, f2]) < 2 {
        return Err(PolytopeError::DegenerateRidge);
    }
    let t = f2[0].clone() / &(f2[0].clone() - &f1[0]);
    let s = S::one() - &t;
    let mut r: Vec<S> = f1
        .iter()
        .zip(f2)
        .map(|(a, b)| t.mul_ref(a) + &s.mul_ref(b))
        .collect();
    r[0] = S::zero();
    Ok(crate::scalar::canonicalize_direction(&r)?)
}

/// Build `(V, F, h, I)` from a bounded, full-dimensional halfspace system by
/// exhaustive vertex enumeration. Intended for small dimensions.
pub fn from_halfspaces<S: Scalar>(h: &HRep<S>) -> Result<Polytope<S>, PolytopeError> {
    let m = h.dim;
    let mut rows: Vec<HalfSpace<S>> = Vec::new();
    for r in &h.rows {
        match canonical_halfspace(r) {
            Some(c) => match rows.iter_mut().find(|x| vectors_equal(&x.a, &c.a)) {
                Some(existing) => {
                    if c.b.cmp_to(&existing.b) == std::cmp::Ordering::Less {
                        existing.b = c.b;
                    }
                }
                None => rows.push(c),
            },
            None if r.b.is_negative() => return Err(PolytopeError::EmptySet),
            None => {}
        }
    }
    let a: Vec<Vec<S>> = rows.iter().map(|r| r.a.clone()).collect();
    let b: Vec<S> = rows.iter().map(|r| r.b.clone()).collect();
    if !is_feasible(&a, &b) {
        return Err(PolytopeError::EmptySet);
    }
    for k in 0..m {
        for s in [S::one(), -S::one()] {
            let mut c = vec![S::zero(); m];
            c[k] = s;
            if matches!(maximize(&a, &b, &c), LpOutcome::Unbounded) {
                return Err(PolytopeError::UnboundedSet);
            }
        }
    }
    if !has_interior(&a, &b) {
        return Err(PolytopeError::LowerDimensional);
    }

    let mut vertices: Vec<Vec<S>> = Vec::new();
    for combo in (0..rows.len()).combinations(m) {
        let sys: Vec<Vec<S>> = combo.iter().map(|&i| a[i].clone()).collect();
        let rhs: Vec<S> = combo.iter().map(|&i| b[i].clone()).collect();
        let Some(x) = solve(&sys, &rhs) else { continue };
        let inside = rows
            .iter()
            .all(|r| dot(&r.a, &x).cmp_to(&r.b) != std::cmp::Ordering::Greater);
        if inside && !vertices.iter().any(|v| vectors_equal(v, &x)) {
            vertices.push(x);
        }
    }
    let nv = vertices.len();
    let mut facets = Vec::new();
    let mut incidence = Vec::new();
    for r in rows {
        let mut row = FixedBitSet::with_capacity(nv);
        for (j, v) in vertices.iter().enumerate() {
            if dot(&r.a, v).same(&r.b) {
                row.insert(j);
            }
        }
        let pts: Vec<&[S]> = row.ones().map(|j| vertices[j].as_slice()).collect();
        if affine_dim(&pts) == Some(m - 1) {
            facets.push(Facet { normal: r.a, offset: r.b });
            incidence.push(row);
        }
    }
    Ok(Polytope { dim: m, vertices, facets, incidence }.canonicalize().0)
}

/// Whether `{x : a x <= b}` has an interior point: `max t` subject to
/// `a_i x + t <= b_i`, `t <= 1` is positive.
pub fn has_interior<S: Scalar>(a: &[Vec<S>], b: &[S]) -> bool {
    let Some(m) = a.first().map(Vec::len) else {
        return true;
    };
    // zero rows constrain nothing unless they are infeasible
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (r, bi) in a.iter().zip(b) {
        if is_zero_vector(r) {
            if bi.is_negative() {
                return false;
            }
            continue;
        }
        let mut r = r.clone();
        r.push(S::one());
        rows.push(r);
        rhs.push(bi.clone());
    }
    let mut cap = vec![S::zero(); m + 1];
    cap[m] = S::one();
    rows.push(cap.clone());
    rhs.push(S::one());
    match maximize(&rows, &rhs, &cap) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Unbounded => true,
        LpOutcome::Infeasible => false,
    }
}

/// Serialized polytope: scalars as strings, one bit-string per facet row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolytopeDump {
    pub vertices: Vec<Vec<String>>,
    pub facets: Vec<FacetDump>,
    pub incidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetDump {
    pub normal: Vec<String>,
    pub offset: String,
}
