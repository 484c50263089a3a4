use lagset::harness::random_stable_plant;
use lagset::lp::{is_feasible, maximize, LpOutcome};
use lagset::oracle::{fm_eliminate, oracle_step, remove_redundant, set_equal, HRep};
use lagset::plant::primal_realization;
use lagset::recursion::StepMode;
use lagset::scalar::dot;
use lagset::{Rational, Scalar};
use proptest::prelude::*;

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// A box `[-3, 3]^dim` plus random extra rows, so the system is bounded.
fn bounded_system(dim: usize) -> impl Strategy<Value = HRep<Rational>> {
    prop::collection::vec((prop::collection::vec(-3i64..=3, dim), 0i64..=6), 1..6).prop_map(move |extra| {
        let mut h = HRep::new(dim);
        for k in 0..dim {
            let mut e = vec![q(0); dim];
            e[k] = q(1);
            h.push(e.clone(), q(3));
            e[k] = q(-1);
            h.push(e, q(3));
        }
        for (a, b) in extra {
            h.push(a.into_iter().map(q).collect(), q(b));
        }
        h
    })
}

/// Whether some `t` puts `(x, y, t)` inside `h`.
fn has_lift(h: &HRep<Rational>, x: &Rational, y: &Rational) -> bool {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for r in &h.rows {
        a.push(vec![r.a[2].clone()]);
        b.push(r.b.clone() - &(r.a[0].clone() * x) - &(r.a[1].clone() * y));
    }
    is_feasible(&a, &b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn elimination_is_projection(h in bounded_system(3)) {
        let proj = fm_eliminate(&h, 2).unwrap();
        for i in -8..=8 {
            for j in -8..=8 {
                let (x, y) = (Rational::new(i, 2), Rational::new(j, 2));
                prop_assert_eq!(proj.contains(&[x.clone(), y.clone()]), has_lift(&h, &x, &y), "at ({}, {})", x, y);
            }
        }
    }

    #[test]
    fn redundancy_removal_idempotent_and_order_free(h in bounded_system(2)) {
        let once = remove_redundant(&h);
        let twice = remove_redundant(&once);
        prop_assert_eq!(&once.rows.len(), &twice.rows.len());
        let mut rev = h.clone();
        rev.rows.reverse();
        let other = remove_redundant(&rev);
        prop_assert!(set_equal(&once, &other));
        prop_assert!(set_equal(&once, &h));
        prop_assert_eq!(once.rows.len(), other.rows.len());
    }

    #[test]
    fn kept_rows_are_exactly_the_facets(h in bounded_system(3)) {
        let kept = remove_redundant(&h);
        prop_assume!(!kept.is_infeasible());
        for i in 0..kept.rows.len() {
            let (a, b): (Vec<_>, Vec<_>) =
                kept.rows.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, r)| (r.a.clone(), r.b.clone())).unzip();
            let beyond = match maximize(&a, &b, &kept.rows[i].a) {
                LpOutcome::Optimal { value, .. } => value > kept.rows[i].b,
                _ => true,
            };
            prop_assert!(beyond, "row {} is implied by the others", i);
        }
        for i in -7..=7 {
            for j in -7..=7 {
                for k in [-3, 0, 2] {
                    let x = [Rational::new(i, 2), Rational::new(j, 2), q(k)];
                    prop_assert_eq!(kept.contains(&x), h.contains(&x));
                }
            }
        }
    }

    #[test]
    fn two_steps_equal_one_joint_elimination(seed in 0u64..1000, z0 in -4i64..=4, z1 in -4i64..=4) {
        let p = random_stable_plant(2, seed);
        let mut s = HRep::new(2);
        for (a, b) in [([1, 0], 1), ([-1, 0], 1), ([0, 1], 1), ([0, -1], 1)] {
            s.push(a.iter().map(|&x| q(x)).collect(), q(b));
        }
        let (z0, z1) = (Rational::new(z0, 4), Rational::new(z1, 4));
        let stepwise = oracle_step(&s, &z0, &p, StepMode::UpdateThenPropagate)
            .and_then(|s1| oracle_step(&s1, &z1, &p, StepMode::UpdateThenPropagate));

        // variables (x2, u1, u0): x1 = A⁻¹(x2 - B u1), x0 = A⁻¹(x1 - B u0)
        let primal = primal_realization(&p);
        let inv = primal.a.inverse().unwrap();
        let c = p.output_row();
        let ib = inv.mul_vec(&primal.b);
        let iib = inv.mul_vec(&ib);
        let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
        // a · x0 <= b  with  x0 = A⁻² x2 - A⁻² B u1 - A⁻¹ B u0
        let mut x0_rows: Vec<(Vec<Rational>, Rational)> = s.rows.iter().map(|r| (r.a.clone(), r.b.clone())).collect();
        x0_rows.push((c.clone(), z0.clone() + &q(1)));
        x0_rows.push((c.iter().map(|v| -v.clone()).collect(), q(1) - &z0));
        for (a, b) in x0_rows {
            let a1 = inv.vec_mul(&a);
            let a2 = inv.vec_mul(&a1);
            let mut row = a2.clone();
            row.push(-dot(&a, &iib));
            row.push(-dot(&a, &ib));
            rows.push((row, b));
        }
        // slab on x1 = A⁻¹ x2 - A⁻¹ B u1
        for (a, b) in [(c.clone(), z1.clone() + &q(1)), (c.iter().map(|v| -v.clone()).collect(), q(1) - &z1)] {
            let mut row = inv.vec_mul(&a);
            row.push(-dot(&a, &ib));
            row.push(q(0));
            rows.push((row, b));
        }
        for k in [2usize, 3] {
            for s in [1, -1] {
                let mut row = vec![q(0); 4];
                row[k] = q(s);
                rows.push((row, q(1)));
            }
        }
        let mut joint = HRep::new(4);
        for (a, b) in rows {
            joint.push(a, b);
        }
        let joint = fm_eliminate(&fm_eliminate(&joint, 3).unwrap(), 2).unwrap();
        match stepwise {
            Ok(two) => prop_assert!(set_equal(&two, &joint)),
            Err(_) => prop_assert!(joint.is_infeasible() || !joint.is_full_dimensional()),
        }
    }
}
