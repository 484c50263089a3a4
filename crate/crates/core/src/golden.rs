//! Worked examples with every intermediate matrix printed.

use std::fmt::Write;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::oracle::{oracle_propagate, set_equal, HRep};
use crate::plant::{dual_realization, parse_plant, primal_realization, PlantModel};
use crate::polytope::{from_halfspaces, Polytope};
use crate::recursion::{compute_m, dual_line, lag_propagate_traced, PropagateOptions};
use crate::scalar::{Rational, Scalar};

pub const EXAMPLES: [&str; 3] = ["fig1", "square", "diamond"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown example '{0}' (expected one of fig1, square, diamond)")]
pub struct UnknownExample(pub String);

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// `n = (0, 1, 0)`, `d = (1, 0, -1)`: `A = A* = [[0, 1], [1, 0]]`, `B = (0, 1)`.
pub fn swap_plant() -> PlantModel<Rational> {
    parse_plant(&[q(0), q(1), q(0)], &[q(1), q(0), q(-1)]).expect("valid plant")
}

fn box_rep(rows: &[([i64; 2], i64)]) -> HRep<Rational> {
    let mut h = HRep::new(2);
    for (a, b) in rows {
        h.push(vec![q(a[0]), q(a[1])], q(*b));
    }
    h
}

pub fn unit_square() -> Polytope<Rational> {
    from_halfspaces(&box_rep(&[([1, 0], 1), ([-1, 0], 1), ([0, 1], 1), ([0, -1], 1)])).expect("square")
}

pub fn unit_diamond() -> Polytope<Rational> {
    from_halfspaces(&box_rep(&[([1, 1], 1), ([-1, 1], 1), ([-1, -1], 1), ([1, -1], 1)])).expect("diamond")
}

fn vec_str<S: Scalar>(v: &[S]) -> String {
    format!("({})", v.iter().map(Scalar::to_repr).collect::<Vec<_>>().join(", "))
}

fn bits(b: &FixedBitSet, len: usize) -> String {
    (0..len).map(|j| if b.contains(j) { '1' } else { '0' }).collect()
}

fn block(out: &mut String, name: &str, rows: &[FixedBitSet], len: usize) {
    let _ = writeln!(out, "{name} ({} x {len}):", rows.len());
    if rows.is_empty() {
        let _ = writeln!(out, "  (empty)");
    }
    for r in rows {
        let _ = writeln!(out, "  {}", bits(r, len));
    }
}

/// Render one named example.
pub fn render(name: &str) -> Result<String, UnknownExample> {
    match name {
        "fig1" => Ok(render_fig1()),
        "square" => Ok(render_propagation("square", &unit_square())),
        "diamond" => Ok(render_propagation("diamond", &unit_diamond())),
        other => Err(UnknownExample(other.to_string())),
    }
}

fn render_fig1() -> String {
    let p = swap_plant();
    let x = [q(0), q(0)];
    let f = [q(1), q(0)];
    let z = q(0);
    let line = dual_line(&f, &p);
    let m = compute_m(&x, &f, &z, &p);
    let mut out = String::new();
    let _ = writeln!(out, "plant n = {}, d = {}", vec_str(p.numerator()), vec_str(p.denominator()));
    let _ = writeln!(out, "x = {}, f = {}, z = {}", vec_str(&x), vec_str(&f), z);
    let _ = writeln!(out, "y = <C, x> = {}", crate::scalar::dot(&p.output_row(), &x));
    let _ = writeln!(out, "dual line: {} y* + {} u* = {}", line.n_m, line.d_m, line.rhs);
    let _ = writeln!(out, "u* at y* = 0: {} (positive axis)", line.u_star(&q(0)));
    let pts = m.as_points().unwrap_or_default();
    let shown: Vec<String> = pts.iter().map(|(u, y)| format!("({u}, {y})")).collect();
    let _ = writeln!(out, "M = {{{}}}", shown.join(", "));
    out
}

fn render_propagation(name: &str, s: &Polytope<Rational>) -> String {
    let p = swap_plant();
    let primal = primal_realization(&p);
    let dual = dual_realization(&p);
    let (next, report, t) = lag_propagate_traced(s, &p, PropagateOptions::default()).expect("full-dimensional input");
    let nv = s.n_vertices();
    let mut out = String::new();
    let _ = writeln!(out, "example {name}");
    let _ = writeln!(out, "plant n = {}, d = {}", vec_str(p.numerator()), vec_str(p.denominator()));
    let _ = write!(out, "A =\n{}", primal.a);
    let _ = writeln!(out, "B = {}", vec_str(&primal.b));
    let _ = write!(out, "A* =\n{}", dual.a_star);
    let _ = writeln!(out, "\nS_k:\n{s}");
    let nf = s.n_facets();
    let _ = writeln!(out, "IF^T = {}", bits(&t.classes.up, nf));
    let _ = writeln!(out, "IF^B = {}", bits(&t.classes.down, nf));
    let _ = writeln!(out, "IF^O = {}", bits(&t.classes.zero, nf));
    block(&mut out, "I^T", &t.i_t, nv);
    block(&mut out, "I^B", &t.i_b, nv);
    let _ = writeln!(out, "IV^PT = {}", bits(&t.iv_pt, nv));
    let _ = writeln!(out, "IV^PB = {}", bits(&t.iv_pb, nv));
    block(&mut out, "IO^T", &t.io_t, nv);
    block(&mut out, "IO^B", &t.io_b, nv);
    let _ = writeln!(out, "qualifying ridges: {}", t.ridges.len());
    for (r, d) in t.ridges.iter().zip(&t.ridge_directions) {
        let _ = writeln!(out, "  facets {:?}, f^R = {}", r.facets, vec_str(d));
    }
    block(&mut out, "IRV", &t.irv, nv);
    block(&mut out, "IR^T", &t.ir_t, nv);
    block(&mut out, "IR^B", &t.ir_b, nv);
    let _ = writeln!(out, "candidate columns g^T(v_j) then g^B(v_j):");
    for (j, c) in t.columns.iter().enumerate() {
        let _ = writeln!(out, "  {j}: {}", vec_str(c));
    }
    let _ = writeln!(out, "table before pruning ({} x {}):", t.table.len(), 2 * nv);
    for (row, d) in t.table.iter().zip(&t.directions) {
        let _ = writeln!(out, "  {}  dir {}", bits(row, 2 * nv), vec_str(d));
    }
    let _ = writeln!(
        out,
        "pruned rows {}, pruned columns {}, merged vertices {}, merged facets {}",
        report.pruned_rows, report.pruned_cols, report.merged_vertices, report.merged_facets
    );
    let _ = writeln!(out, "\nS_k+1 ({} facets, {} vertices):\n{next}", next.n_facets(), next.n_vertices());
    let oracle = oracle_propagate(&s.to_hrep(), &p).expect("oracle runs");
    let _ = writeln!(out, "oracle agrees: {}", set_equal(&next, &oracle));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_examples() {
        let fig = render("fig1").unwrap();
        assert!(fig.contains("M = {(1, 0)}"), "{fig}");
        let sq = render("square").unwrap();
        assert!(sq.contains("S_k+1 (4 facets, 4 vertices)"));
        assert!(sq.contains("oracle agrees: true"));
        let di = render("diamond").unwrap();
        assert!(di.contains("S_k+1 (6 facets, 6 vertices)"));
        assert!(di.contains("qualifying ridges: 2"));
        assert!(di.contains("oracle agrees: true"));
        assert_eq!(render("nope"), Err(UnknownExample("nope".into())));
    }
}
