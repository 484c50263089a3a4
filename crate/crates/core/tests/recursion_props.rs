use lagset::harness::{random_stable_plant, verify, Backend, Scenario, VerifyOptions};
use lagset::oracle::{hull_halfspaces, oracle_propagate, set_equal};
use lagset::plant::{dual_realization, primal_realization, PlantModel};
use lagset::polytope::{from_halfspaces, Polytope};
use lagset::recursion::{
    classify_facets, halfspace_cut, isomorphic_image_violations, lag_propagate, slab_cut, step, verify_theorem1,
    MeasurementSlab, StepMode,
};
use lagset::scalar::{default_tolerance, dot};
use lagset::{Rational, Scalar, TolFloat};
use proptest::prelude::*;

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

fn polytope(dim: usize) -> impl Strategy<Value = Polytope<Rational>> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, dim), dim + 1..dim + 7).prop_filter_map(
        "flat point set",
        move |pts| {
            let pts: Vec<Vec<Rational>> = pts.into_iter().map(|p| p.into_iter().map(q).collect()).collect();
            from_halfspaces(&hull_halfspaces(&pts, dim).ok()?).ok()
        },
    )
}

fn case() -> impl Strategy<Value = (PlantModel<Rational>, Polytope<Rational>)> {
    (2usize..=3, 0u64..500).prop_flat_map(|(m, seed)| (Just(random_stable_plant(m, seed)), polytope(m)))
}

/// A measurement whose slab holds the first vertex strictly inside.
fn inner_measurement(s: &Polytope<Rational>, p: &PlantModel<Rational>) -> Rational {
    dot(&p.output_row(), &s.vertices()[0]) + &Rational::new(1, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn classes_partition_facets((p, s) in case()) {
        let c = classify_facets(&s, &p);
        let dual = dual_realization(&p);
        let b = primal_realization(&p).b;
        for i in 0..s.n_facets() {
            let hits = [c.up.contains(i), c.down.contains(i), c.zero.contains(i)];
            prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
            let g = dot(&dual.a_star.mul_vec(&s.facets()[i].normal), &b);
            prop_assert_eq!(g.is_zero(), c.zero.contains(i));
        }
    }

    #[test]
    fn propagation_is_minkowski_image((p, s) in case()) {
        let (out, report) = lag_propagate(&s, &p).unwrap();
        prop_assert!(out.validate().passed(), "{}", out.validate());
        prop_assert!(report.within_bounds());
        let a = primal_realization(&p);
        let mut pts = Vec::new();
        for v in s.vertices() {
            let av = a.a.mul_vec(v);
            pts.push(av.iter().zip(&a.b).map(|(x, b)| x.clone() + b).collect());
            pts.push(av.iter().zip(&a.b).map(|(x, b)| x.clone() - b).collect());
        }
        let hull = hull_halfspaces(&pts, s.dim()).unwrap();
        prop_assert!(set_equal(&out, &hull));
        prop_assert!(set_equal(&out, &oracle_propagate(&s.to_hrep(), &p).unwrap()));
        prop_assert!(isomorphic_image_violations(&s, &out, &p).is_empty());
    }

    #[test]
    fn cut_then_step_nests((p, s) in case(), dz in -3i64..=3) {
        let z = inner_measurement(&s, &p);
        let (utp, _) = step(&s, &z, &p, StepMode::UpdateThenPropagate).unwrap();
        let cut = slab_cut(&s, &MeasurementSlab::new(&p, z.clone())).unwrap();
        let z2 = inner_measurement(&utp, &p) + &Rational::new(dz, 4);
        // ptu from cut(S_k) equals cut(utp S_k)
        let Ok((ptu, _)) = step(&cut, &z2, &p, StepMode::PropagateThenUpdate) else { return Ok(()) };
        let direct = slab_cut(&utp, &MeasurementSlab::new(&p, z2)).unwrap();
        prop_assert!(set_equal(&ptu, &direct));
    }

    #[test]
    fn alignment_holds_on_random_sets((p, s) in case()) {
        let z = inner_measurement(&s, &p);
        let (next, _) = step(&s, &z, &p, StepMode::UpdateThenPropagate).unwrap();
        let r = verify_theorem1(&s, &next, &z, &p, 0);
        prop_assert!(r.passed(), "{:?}", r.violations);
        // vertices outside the slab have an empty M-set
        prop_assert!(r.checked > 0);
    }

    #[test]
    fn halfspace_cut_matches_intersection(s in polytope(3), a in prop::collection::vec(-2i64..=2, 3)) {
        prop_assume!(a.iter().any(|&x| x != 0));
        let a: Vec<Rational> = a.into_iter().map(q).collect();
        let b = dot(&a, &s.vertices()[0]) + &q(1);
        let out = halfspace_cut(&s, &a, &b).unwrap();
        prop_assert!(out.validate().passed());
        let mut h = s.to_hrep();
        h.push(a, b);
        prop_assert!(set_equal(&out, &h));
    }
}

#[test]
fn dropping_ridge_rows_is_detected() {
    let opts = VerifyOptions { theorem_samples: 4, skip_ridges: false };
    let faulty = VerifyOptions { skip_ridges: true, ..opts };
    let mut tried = 0;
    for seed in 0..40 {
        let sc = Scenario::new(random_stable_plant(2, seed), 6, seed).with_mode(StepMode::UpdateThenPropagate);
        let good = verify(&sc, opts).unwrap();
        assert!(good.passed(), "{}", good.describe());
        if good.reports.iter().all(|r| r.n_r == 0) {
            continue;
        }
        let bad = verify(&sc, faulty).unwrap();
        assert!(!bad.passed(), "seed {seed}: ridge rows dropped but nothing flagged");
        if let Some(m) = &bad.mismatch {
            assert!(m.k <= good.reports.len());
        }
        tried += 1;
        if tried == 3 {
            return;
        }
    }
    panic!("no scenario produced a qualifying ridge");
}

#[test]
fn float_backend_tracks_exact() {
    let sc = Scenario::new(random_stable_plant(2, 3), 6, 3);
    let exact = lagset::harness::simulate(&sc).unwrap();
    let mut fsc = sc.clone();
    fsc.backend = Backend::Float;
    let float = lagset::harness::simulate(&fsc).unwrap();
    assert_eq!(exact.sizes, float.sizes);
}

#[test]
fn default_float_tolerance() {
    assert_eq!(default_tolerance(), 1e-9);
    assert_eq!(TolFloat::new(1.0).tolerance(), 1e-9);
    assert!(TolFloat::new(1.0).same(&TolFloat::new(1.0 + 1e-12)));
    assert!(!TolFloat::new(1.0).same(&TolFloat::new(1.0 + 1e-6)));
}
