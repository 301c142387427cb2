use std::collections::BTreeSet;

use nego_core::random::{atom, config_type, conjunction, exists_oracle, qf_formula, valuation};
use nego_core::{parse_config_type, parse_formula, Direction, Formula, Qe, Var};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|n| Var::new(*n)).collect()
}

fn set(vs: &[Var]) -> BTreeSet<Var> {
    vs.iter().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normal_forms_preserve_truth(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let vs = vars(&["x", "y", "z"]);
        let atoms = rng.gen_range(1..=6);
        let f = qf_formula(&mut rng, &vs, atoms, 4);
        let nnf = f.to_nnf();
        let dnf = f.to_dnf().unwrap();
        for _ in 0..10 {
            let v = valuation(&mut rng, &set(&vs), 6);
            let expected = f.evaluate(&v).unwrap();
            prop_assert_eq!(nnf.evaluate(&v).unwrap(), expected, "nnf of {}", f);
            prop_assert_eq!(dnf.evaluate(&v).unwrap(), expected, "dnf of {}", f);
        }
    }

    #[test]
    fn substitution_round_trips(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let vs = vars(&["x", "y", "z"]);
        let f = qf_formula(&mut rng, &vs, 4, 4);
        let x = Var::new("x");
        let fresh = Var::new("x_fresh");
        let there = f.substitute(&x, &nego_core::Term::var(fresh.clone())).unwrap();
        prop_assert!(!there.free_vars().contains(&x));
        let back = there.substitute(&fresh, &nego_core::Term::var(x)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn formulas_print_and_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let vs = vec![Var::new("x"), Var::prefixed("s1", "price"), Var::new("load")];
        let f = qf_formula(&mut rng, &vs, 5, 5);
        let quantified = if rng.gen_bool(0.3) { Formula::exists(Var::new("x"), f) } else { f };
        prop_assert_eq!(parse_formula(&quantified.to_string()).unwrap(), quantified);
    }

    #[test]
    fn config_types_print_and_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let params = rng.gen_range(1..=3);
        let mut ct = config_type(&mut rng, "t", params);
        ct.name = None;
        prop_assert_eq!(parse_config_type(&ct.to_string()).unwrap(), ct);
    }

    #[test]
    fn prefixing_keeps_satisfiability_and_separates_servers(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let params = rng.gen_range(1..=3);
        let ct = config_type(&mut rng, "t", params);
        let a = ct.prefix_params("s1").unwrap();
        let b = ct.prefix_params("s2").unwrap();
        prop_assert_eq!(qe.is_satisfiable(&a.constraint).unwrap(), qe.is_satisfiable(&ct.constraint).unwrap());
        prop_assert!(a.lang().is_disjoint(&b.lang()));
    }

    #[test]
    fn single_quantifier_matches_interval_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let vs = vars(&["x", "y", "z", "w"]);
        let atoms = rng.gen_range(1..=4);
        let body = qf_formula(&mut rng, &vs, atoms, 5);
        let x = Var::new("x");
        let eliminated = qe.qe(&Formula::exists(x.clone(), body.clone())).unwrap();
        prop_assert!(eliminated.is_quantifier_free());
        prop_assert!(!eliminated.free_vars().contains(&x));
        let others: BTreeSet<Var> = vs[1..].iter().cloned().collect();
        for _ in 0..20 {
            let v = valuation(&mut rng, &others, 6);
            prop_assert_eq!(
                eliminated.evaluate(&v).unwrap(),
                exists_oracle(&x, &body, &v).unwrap(),
                "exists x. {} became {}", body, eliminated
            );
        }
    }

    #[test]
    fn projection_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let vs = vars(&["x", "y", "z", "w"]);
        let atoms = rng.gen_range(1..=4);
        let f = qf_formula(&mut rng, &vs, atoms, 4);
        let (x, y) = (Var::new("x"), Var::new("y"));
        let xy = qe.qe(&Formula::exists(x.clone(), qe.qe(&Formula::exists(y.clone(), f.clone())).unwrap())).unwrap();
        let yx = qe.qe(&Formula::exists(y.clone(), qe.qe(&Formula::exists(x.clone(), f.clone())).unwrap())).unwrap();
        let both = qe.qe(&Formula::exists(x, Formula::exists(y, f))).unwrap();
        prop_assert!(qe.equivalent(&xy, &yx).unwrap());
        prop_assert!(qe.equivalent(&xy, &both).unwrap());
    }

    #[test]
    fn independent_conjuncts_leave_the_quantifier(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let without_x = vars(&["y", "z", "w"]);
        let with_x = vars(&["x", "y", "z", "w"]);
        let outer_atoms = rng.gen_range(1..=3);
        let body_atoms = rng.gen_range(1..=3);
        let outer = qf_formula(&mut rng, &without_x, outer_atoms, 4);
        let body = qf_formula(&mut rng, &with_x, body_atoms, 4);
        let x = Var::new("x");
        let lhs = qe.qe(&Formula::exists(x.clone(), Formula::and(outer.clone(), body.clone()))).unwrap();
        let rhs = qe.simplify(&Formula::and(outer, qe.qe(&Formula::exists(x, body)).unwrap())).unwrap();
        prop_assert!(qe.equivalent(&lhs, &rhs).unwrap(), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn simplify_preserves_meaning(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let vs = vars(&["x", "y", "z"]);
        let atoms = rng.gen_range(1..=5);
        let f = qf_formula(&mut rng, &vs, atoms, 4);
        let s = qe.simplify(&f).unwrap();
        prop_assert!(s.is_quantifier_free());
        prop_assert!(qe.equivalent(&f, &s).unwrap(), "{} simplified to {}", f, s);
    }

    #[test]
    fn preferences_strengthen(seed in any::<u64>(), minimize in any::<bool>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let vs = vars(&["price", "speed"]);
        let atoms = rng.gen_range(1..=4);
        let f = conjunction(&mut rng, &vs, atoms, 3);
        let direction = if minimize { Direction::Minimize } else { Direction::Maximize };
        let preferred = qe.apply_preference(&f, &Var::new("price"), direction).unwrap();
        prop_assert!(qe.entails(&preferred, &f).unwrap(), "{} does not entail {}", preferred, f);
    }

    #[test]
    fn entailment_is_a_preorder(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let vs = vars(&["x", "y"]);
        let a = atom(&mut rng, &vs, 2);
        let b = Formula::or(a.clone(), atom(&mut rng, &vs, 2));
        let c = if rng.gen_bool(0.5) { Formula::or(b.clone(), atom(&mut rng, &vs, 2)) } else { atom(&mut rng, &vs, 2) };
        prop_assert!(qe.entails(&a, &a).unwrap());
        prop_assert!(qe.entails(&a, &b).unwrap());
        if qe.entails(&b, &c).unwrap() {
            prop_assert!(qe.entails(&a, &c).unwrap());
        }
    }
}
