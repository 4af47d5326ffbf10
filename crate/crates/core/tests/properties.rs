use bellscope::ffun::{self, FiniteFunction, Scenario};
use bellscope::ineq::{self, GameSpec};
use bellscope::poly::{self, RationalVector};
use bellscope::qopt::{self, AngleConfig};
use bellscope::rat::q;
use bellscope::{sym, BellInequality, Caps, DigitString, SymmetryOp};
use proptest::prelude::*;
use rand::SeedableRng;

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        Just((2, 2, 2)),
        Just((2, 2, 3)),
        Just((3, 2, 2)),
        Just((2, 3, 2)),
        Just((2, 3, 3)),
        Just((2, 2, 5)),
    ]
    .prop_map(|(n, c, d)| Scenario::new(n, c, d).unwrap())
}

fn function() -> impl Strategy<Value = FiniteFunction> {
    scenario().prop_flat_map(|s| {
        prop::collection::vec(0..s.d, s.inputs()).prop_map(move |t| FiniteFunction::new(s, t).unwrap())
    })
}

fn sym_op() -> impl Strategy<Value = SymmetryOp> {
    (scenario(), any::<u64>()).prop_map(|(s, seed)| SymmetryOp::random(s, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_round_trip(f in function()) {
        let cls = ffun::classify(&f);
        prop_assert_eq!(cls.linear_part.add(&cls.nonlinear_part), f.clone());
        prop_assert!(ffun::is_npartite_linear(&cls.linear_part));
        // the non-linear part vanishes on strings with at most one non-zero digit
        for i in 0..f.scenario.inputs() {
            let s = f.scenario.digits(i);
            if s.iter().filter(|&&x| x != 0).count() <= 1 {
                prop_assert_eq!(cls.nonlinear_part.table[i], 0);
            }
        }
    }

    #[test]
    fn group_axioms(a in sym_op(), seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = SymmetryOp::random(a.scenario, &mut rng);
        let id = SymmetryOp::identity(a.scenario);
        prop_assert_eq!(a.then(&a.inverse()), id.clone());
        prop_assert_eq!(a.inverse().then(&a), id.clone());
        prop_assert_eq!(a.then(&id), a.clone());
        // composition acts on cells as the two maps in sequence
        let ab = a.then(&b);
        let s = a.scenario;
        for i in 0..s.inputs() {
            let x = s.digits(i);
            for k in 0..s.d {
                let (k1, t1) = a.map_cell(k, &x);
                prop_assert_eq!(ab.map_cell(k, &x), b.map_cell(k1, &t1));
            }
        }
    }

    #[test]
    fn relabelling_keeps_canonical_form(op in sym_op(), seed in any::<u64>()) {
        use rand::Rng;
        let caps = Caps::default();
        let s = op.scenario;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<i64> = (0..s.corr_dim()).map(|_| rng.gen_range(-3..=3)).collect();
        let b = BellInequality::from_ints(s, &coeffs, &caps).unwrap();
        let img = sym::apply(&op, &b, &caps).unwrap();
        // LHV and algebraic gaps are relabelling invariants
        prop_assert_eq!(&img.algebraic_bound - &img.lhv_bound, &b.algebraic_bound - &b.lhv_bound);
        let c1 = sym::canonical_form(&b, &caps).unwrap();
        let c2 = sym::canonical_form(&img, &caps).unwrap();
        prop_assert_eq!(c1.coeffs, c2.coeffs);
    }

    #[test]
    fn nontrivial_inequalities_separate(f in function()) {
        prop_assume!(!ffun::is_npartite_linear(&f));
        let caps = Caps::default();
        let b = ineq::nontrivial_from_function(&GameSpec::uniform(f.clone()), &caps).unwrap();
        prop_assert!(b.lhv_bound < b.algebraic_bound);
        prop_assert_eq!(b.value_of_function(&f), b.algebraic_bound.clone());
    }

    #[test]
    fn ghz_closed_form(thetas in prop::collection::vec(-4.0f64..4.0, 1..=8), phi in -4.0f64..4.0) {
        let n = thetas.len();
        let cfg = AngleConfig::new(thetas, phi);
        for s in DigitString::all(n, 2) {
            let a = qopt::ghz_expectation(&cfg, &s);
            let b = qopt::ghz_state_expectation(&cfg, &s);
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }
}

fn point_cloud() -> impl Strategy<Value = Vec<RationalVector>> {
    (2usize..=4).prop_flat_map(|dim| {
        prop::collection::vec(prop::collection::vec(-3i64..=3, dim), dim + 1..12)
            .prop_map(|pts| pts.into_iter().map(|p| p.into_iter().map(q).collect()).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dd_round_trip(pts in point_cloud()) {
        let caps = Caps::default();
        prop_assume!(poly::affine_rank(&pts) == pts[0].len());
        let p = poly::hull_facets(&pts, &caps).unwrap();
        let facets = p.facets.clone().unwrap();
        for x in &pts {
            prop_assert!(facets.iter().all(|f| f.satisfied_by(x)));
        }
        for f in &facets {
            prop_assert!(poly::is_facet_defining(f, &p).unwrap().is_facet);
        }
        // the facet description's vertices are input points, every input point
        // is in their hull, and none of them is in the hull of the others
        let back = poly::vertices_from_constraints(p.dim_ambient, &[], &facets, &caps).unwrap();
        let verts = back.vertices.unwrap();
        prop_assert!(verts.iter().all(|v| pts.contains(v)));
        let hull = poly::RationalPolytope::from_vertices(verts.clone()).unwrap();
        for x in &pts {
            prop_assert!(poly::contains(&hull, x, &caps).unwrap());
        }
        for (i, v) in verts.iter().enumerate() {
            let others: Vec<RationalVector> = verts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w.clone()).collect();
            let rest = poly::RationalPolytope::from_vertices(others).unwrap();
            prop_assert!(!poly::contains(&rest, v, &caps).unwrap());
        }
    }
}
