mod common;

use common::*;
use lognodal::{fiber_energy, project_pair, project_pair_from, project_ray, PairOptions, ProblemInstance, VertexField};
use proptest::prelude::*;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_by_parts(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let u = random_field(&mut rng, n, 3.0);
        let phi = random_field(&mut rng, n, 3.0);
        let lhs = g.integrate(&g.gamma(&u, &phi).unwrap()).unwrap();
        let lap = g.laplacian(&u).unwrap();
        let prod = VertexField::new(lap.values().iter().zip(phi.values()).map(|(a, b)| -a * b).collect());
        let rhs = g.integrate(&prod).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn gradient_form_is_symmetric(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let u = random_field(&mut rng, n, 2.0);
        let v = random_field(&mut rng, n, 2.0);
        let (uv, vu) = (g.gamma(&u, &v).unwrap(), g.gamma(&v, &u).unwrap());
        prop_assert!(uv.values().iter().zip(vu.values()).all(|(a, b)| close(*a, *b, 1e-15)));
        prop_assert!(g.gamma(&u, &u).unwrap().values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn potential_norm_dominates_h1(seed in any::<u64>(), n in 2usize..12, lambda in 0.0f64..1e3) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let u = random_field(&mut rng, n, 2.0);
        let norms = g.norms(&u, lambda).unwrap();
        prop_assert!(norms.h_lambda_sq >= norms.h1_sq);
        prop_assert!(norms.h1_sq >= norms.l2_sq);
    }

    #[test]
    fn residual_is_dual_to_the_derivative(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, rng.random_range(0.1..20.0)).unwrap();
        let u = random_field(&mut rng, n, 3.0);
        let v = random_field(&mut rng, n, 3.0);
        let r = inst.residual(&u).unwrap();
        let weak = g.integrate(&VertexField::new(r.values().iter().zip(v.values()).map(|(a, b)| a * b).collect())).unwrap();
        let d = inst.dir_deriv(&u, &v).unwrap();
        prop_assert!(close(d, weak, 1e-11), "{d} vs {weak}");
    }

    #[test]
    fn coupling_is_nonpositive(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, 1.0).unwrap();
        let u = random_field(&mut rng, n, 3.0);
        prop_assert!(inst.coupling_k(&u).unwrap() <= 0.0);
        let abs = VertexField::new(u.values().iter().map(|x| x.abs()).collect());
        prop_assert_eq!(inst.coupling_k(&abs).unwrap(), 0.0);
    }

    #[test]
    fn well_supported_fields_see_no_potential(seed in any::<u64>(), n in 2usize..12, lambda in 0.1f64..1e4) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let dir = ProblemInstance::dirichlet_on_well(&g).unwrap();
        let full = ProblemInstance::full(&g, lambda).unwrap();
        let u = dir.project_admissible(&random_field(&mut rng, n, 3.0));
        prop_assert!(close(dir.energy(&u).unwrap(), full.energy(&u).unwrap(), 1e-12));
    }

    #[test]
    fn ray_projection_is_homogeneous(seed in any::<u64>(), n in 2usize..12, c in 0.01f64..100.0) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, rng.random_range(0.1..5.0)).unwrap();
        let w = signed_field(&mut rng, n, 0.1, 2.0);
        let s = project_ray(&inst, &w).unwrap();
        let sc = project_ray(&inst, &w.scaled(c)).unwrap();
        prop_assert!(close(sc * c, s, 1e-10), "{} vs {s}", sc * c);
        let on_n = w.scaled(s);
        let level = inst.energy(&on_n).unwrap();
        let membership = inst.dir_deriv(&on_n, &on_n).unwrap();
        let (norm, l2, _) = inst.split_norms(&on_n).unwrap();
        prop_assert!(membership.abs() <= 1e-10 * norm.max(1.0));
        prop_assert!(close(level, 0.5 * l2, 1e-10));
    }

    #[test]
    fn pair_projection_is_unique_and_idempotent(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, rng.random_range(0.1..5.0)).unwrap();
        let u = signed_field(&mut rng, n, 0.1, 3.0);
        prop_assume!(u.changes_sign() && inst.coupling_k(&u).unwrap() < 0.0);
        let p = project_pair(&inst, &u).unwrap();
        let start = (rng.random_range(0.01..50.0), rng.random_range(0.01..50.0));
        let q = project_pair_from(&inst, &u, start, &PairOptions::default()).unwrap();
        prop_assert!(close(p.s, q.s, 1e-8) && close(p.t, q.t, 1e-8));
        let again = project_pair(&inst, &p.projected).unwrap();
        prop_assert!(close(again.s, 1.0, 1e-9) && close(again.t, 1.0, 1e-9), "({}, {})", again.s, again.t);
    }

    #[test]
    fn fiber_is_maximal_at_one(seed in any::<u64>(), n in 2usize..9, s in 0.0f64..4.0, t in 0.0f64..4.0) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, rng.random_range(0.1..5.0)).unwrap();
        let u = signed_field(&mut rng, n, 0.1, 3.0);
        prop_assume!(u.changes_sign());
        let w = project_pair(&inst, &u).unwrap().projected;
        let level = inst.energy(&w).unwrap();
        let fiber = fiber_energy(&inst, &w, s, t).unwrap().value;
        let direct = inst.energy(&w.recombine(s, t)).unwrap();
        prop_assert!(close(fiber, direct, 1e-9), "{fiber} vs {direct}");
        if (s - 1.0).abs().max((t - 1.0).abs()) > 1e-3 {
            prop_assert!(fiber < level, "fiber {fiber} at ({s}, {t}) vs J = {level}");
        }
    }

    #[test]
    fn beyond_the_nehari_set_projection_shrinks(seed in any::<u64>(), n in 2usize..9, c in 1.01f64..5.0) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, n);
        let inst = ProblemInstance::full(&g, rng.random_range(0.1..5.0)).unwrap();
        let u = signed_field(&mut rng, n, 0.1, 3.0);
        prop_assume!(u.changes_sign() && inst.coupling_k(&u).unwrap() < 0.0);
        let big = project_pair(&inst, &u).unwrap().projected.scaled(c);
        prop_assert!(inst.dir_deriv(&big, &big.positive_part()).unwrap() <= 0.0);
        prop_assert!(inst.dir_deriv(&big, &big.negative_part()).unwrap() <= 0.0);
        let p = project_pair(&inst, &big).unwrap();
        prop_assert!(p.s <= 1.0 + 1e-10 && p.t <= 1.0 + 1e-10, "({}, {})", p.s, p.t);
    }
}
