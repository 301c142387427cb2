use std::collections::BTreeSet;
use std::sync::Arc;

use nego_core::engine::{
    analyze_parallel, final_offer, run_policy, run_rule, subquery, validate_token, Bindings, Env, LeafNegotiator,
    Negotiator, ScriptedNegotiator,
};
use nego_core::random::{
    config_type, conjunction, core_rule, core_rule_serving, linear_term, qf_formula, query, separable_rule,
};
use nego_core::{compile_text, parse_policy, parse_registry, CorePolicy, CoreRule, Formula, Qe, Var};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn responsive_bindings(policy: &CorePolicy, qe: &Qe) -> Bindings {
    policy
        .servers()
        .into_iter()
        .map(|(server, ct)| {
            let leaf = LeafNegotiator::new(ct, Formula::truth(), *qe).unwrap();
            (server, Arc::new(leaf) as Arc<dyn Negotiator>)
        })
        .collect()
}

fn leaf_with_capability(rng: &mut StdRng, ct: &nego_core::ConfigType, qe: &Qe) -> Arc<dyn Negotiator> {
    let vars: Vec<Var> = ct.lang().into_iter().collect();
    let capability = if rng.gen_bool(0.3) { Formula::truth() } else { conjunction(rng, &vars, 1, 2) };
    Arc::new(LeafNegotiator::new(ct.clone(), capability, *qe).unwrap())
}

fn env<'a>(bindings: &'a Bindings, qe: &'a Qe) -> Env<'a> {
    Env { qe, bindings, trace: None, origin: "test" }
}

/// Whether some rule of `policy` is applicable to `q` with a condition
/// compatible with it.
fn in_domain(policy: &CorePolicy, q: &Formula, qe: &Qe) -> bool {
    policy.rules().into_iter().any(|r| {
        let joint = Formula::conj([q.clone(), r.trigger.clone(), r.psi.clone()]);
        qe.is_satisfiable(&joint).unwrap()
    })
}

fn random_policy(rng: &mut StdRng, qe: &Qe) -> CorePolicy {
    let first = core_rule(rng, qe, 3, 3).unwrap();
    if rng.gen_bool(0.5) {
        CorePolicy::Rule(first)
    } else {
        let second = core_rule_serving(rng, qe, &first.ct, "u", 3, 3).unwrap();
        CorePolicy::compose(CorePolicy::Rule(first), CorePolicy::Rule(second))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn responsive_leaves_give_responsive_policies(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let policy = random_policy(&mut rng, &qe);
        let q = query(&mut rng, policy.ct());
        prop_assume!(in_domain(&policy, &q, &qe));
        let bindings = responsive_bindings(&policy, &qe);
        let eo = run_policy(&policy, &q, None, env(&bindings, &qe)).unwrap();
        prop_assert!(qe.is_satisfiable(&Formula::and(q.clone(), eo.formula.clone())).unwrap(),
            "query {} got {}", q, eo.formula);
        prop_assert!(eo.formula.is_quantifier_free());
        prop_assert!(policy.ct().is_formula_over(&eo.formula));
        prop_assert!(validate_token(&eo, &qe).unwrap());
    }

    #[test]
    fn compatible_last_offer_gives_compatible_final_offer(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let params = rng.gen_range(1..=3);
        let ct = config_type(&mut rng, "served", params);
        let rule = loop {
            let r = core_rule_serving(&mut rng, &qe, &ct, "s", 3, 2).unwrap();
            if r.uses.len() == 2 {
                break r;
            }
        };
        let q = query(&mut rng, &ct);
        let leaves: Vec<_> = rule.uses.iter().map(|(_, t)| leaf_with_capability(&mut rng, t, &qe)).collect();
        let (s1, s2) = (&rule.uses[0].0, &rule.uses[1].0);
        let q1 = subquery(&rule, &q, &[], 0, &qe).unwrap();
        let r1 = leaves[0].query(&q1.strip_prefix(s1)).unwrap().formula.prefix_vars(s1);
        let q2 = subquery(&rule, &q, std::slice::from_ref(&r1), 1, &qe).unwrap();
        let r2 = leaves[1].query(&q2.strip_prefix(s2)).unwrap().formula.prefix_vars(s2);
        prop_assume!(qe.is_satisfiable(&Formula::and(q2.clone(), r2.clone())).unwrap());
        let r = final_offer(&rule, &[r1, r2], &qe).unwrap();
        prop_assert!(qe.is_satisfiable(&Formula::and(q.clone(), r.clone())).unwrap(), "query {} got {}", q, r);
    }

    #[test]
    fn composition_offers_the_disjunction(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let a = core_rule(&mut rng, &qe, 3, 2).unwrap();
        let b = core_rule_serving(&mut rng, &qe, &a.ct, "u", 3, 2).unwrap();
        let both = CorePolicy::compose(CorePolicy::Rule(a.clone()), CorePolicy::Rule(b.clone()));
        let q = query(&mut rng, &a.ct);
        let bindings = responsive_bindings(&both, &qe);
        let offer = |p: &CorePolicy| run_policy(p, &q, None, env(&bindings, &qe)).unwrap();
        let joint = offer(&both);
        let separate = Formula::or(offer(&CorePolicy::Rule(a)).formula, offer(&CorePolicy::Rule(b)).formula);
        prop_assert!(qe.equivalent(&joint.formula, &separate).unwrap());
        prop_assert!(validate_token(&joint, &qe).unwrap());
    }

    #[test]
    fn prior_offers_only_strengthen_subqueries(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let rule = core_rule(&mut rng, &qe, 3, 3).unwrap();
        prop_assume!(rule.uses.len() >= 2);
        let q = query(&mut rng, &rule.ct);
        let s1 = &rule.uses[0].0;
        let leaf = leaf_with_capability(&mut rng, &rule.uses[0].1, &qe);
        let q1 = subquery(&rule, &q, &[], 0, &qe).unwrap();
        let r1 = leaf.query(&q1.strip_prefix(s1)).unwrap().formula.prefix_vars(s1);
        let with_prior = subquery(&rule, &q, &[r1], 1, &qe).unwrap();
        let without = subquery(&rule, &q, &[Formula::truth()], 1, &qe).unwrap();
        prop_assert!(qe.entails(&with_prior, &without).unwrap());
    }

    #[test]
    fn tampered_tokens_are_rejected(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let rule = core_rule(&mut rng, &qe, 3, 3).unwrap();
        let policy = CorePolicy::Rule(rule.clone());
        let q = query(&mut rng, &rule.ct);
        let bindings = responsive_bindings(&policy, &qe);
        let mut eo = run_policy(&policy, &q, None, env(&bindings, &qe)).unwrap();
        prop_assume!(!eo.formula.is_false());
        let nego_core::Token::Rule(ro) = &mut eo.token else { unreachable!("single rules give rule tokens") };
        prop_assume!(!ro.subs.is_empty());
        let sub = &mut ro.subs[0];
        sub.offer.formula = Formula::falsity();
        prop_assert!(!validate_token(&eo, &qe).unwrap());
    }

    #[test]
    fn parallel_groups_agree_with_sequential_runs(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qe = Qe::default();
        let rule = separable_rule(&mut rng, &qe, 3, 3).unwrap();
        let groups = analyze_parallel(&rule, &qe).unwrap();
        prop_assume!(groups.len() > 1);
        let q = query(&mut rng, &rule.ct);
        let leaves: Bindings = rule
            .uses
            .iter()
            .map(|(s, t)| (s.clone(), leaf_with_capability(&mut rng, t, &qe)))
            .collect();
        let sequential = run_rule(&rule, &q, None, env(&leaves, &qe)).unwrap();
        let parallel = run_rule(&rule, &q, Some(&groups), env(&leaves, &qe)).unwrap();
        prop_assert!(qe.equivalent(&sequential.formula, &parallel.formula).unwrap(),
            "{} vs {}", sequential.formula, parallel.formula);

        let script: Vec<(String, Formula)> = rule
            .uses
            .iter()
            .map(|(s, t)| {
                let vars: Vec<Var> = t.lang().into_iter().collect();
                (s.clone(), conjunction(&mut rng, &vars, 1, 2))
            })
            .collect();
        let scripted = || -> Bindings {
            rule.uses
                .iter()
                .zip(&script)
                .map(|((s, t), (_, offer))| {
                    let n = ScriptedNegotiator::new(t.clone(), vec![offer.clone()]);
                    (s.clone(), Arc::new(n) as Arc<dyn Negotiator>)
                })
                .collect()
        };
        let (a, b) = (scripted(), scripted());
        let sequential = run_rule(&rule, &q, None, env(&a, &qe)).unwrap();
        let parallel = run_rule(&rule, &q, Some(&groups), env(&b, &qe)).unwrap();
        prop_assert!(qe.equivalent(&sequential.formula, &parallel.formula).unwrap());
    }
}

const REGISTRY: &str = "storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}
compute = {speed: decimal, price: decimal; speed > 0}";

fn random_policy_text(rng: &mut StdRng) -> String {
    let served: Vec<Var> = ["capacity", "price"].iter().map(|n| Var::new(*n)).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let servers = rng.gen_range(0..=2);
        let mut uses = Vec::new();
        let mut sub_vars = Vec::new();
        for i in 1..=servers {
            let (ty, params) = if rng.gen_bool(0.5) { ("storage", ["capacity", "price"]) } else { ("compute", ["speed", "price"]) };
            uses.push(format!("s{i}: {ty}"));
            sub_vars.extend(params.iter().map(|p| Var::prefixed(format!("s{i}"), *p)));
        }
        let mut offer = Vec::new();
        if !sub_vars.is_empty() {
            for target in &served {
                if rng.gen_bool(0.5) {
                    offer.push(format!("{target} := {}", linear_term(rng, &sub_vars, 3)));
                }
            }
        }
        let all: Vec<Var> = served.iter().chain(&sub_vars).cloned().collect();
        let trigger = if rng.gen_bool(0.5) { "true".to_string() } else { qf_formula(rng, &served, 2, 3).to_string() };
        let constraint = if rng.gen_bool(0.3) { "true".to_string() } else { qf_formula(rng, &all, 2, 3).to_string() };
        rules.push(format!(
            "{{ trigger: {trigger}, uses: [{}], offer: {{ {} }}, constraint: {constraint} }}",
            uses.join(", "),
            offer.join(", ")
        ));
    }
    let preference = match rng.gen_range(0..3) {
        0 => "",
        1 => "minimize: [price]",
        _ => "maximize: [capacity]",
    };
    format!("policy random-policy {{ serves: storage {preference} rules: [ {} ] }}", rules.join(", "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn policies_print_and_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let text = random_policy_text(&mut rng);
        let policy = parse_policy(&text).unwrap();
        prop_assert_eq!(parse_policy(&policy.to_string()).unwrap(), policy);
    }

    #[test]
    fn compilation_keeps_rules_and_signatures(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let text = random_policy_text(&mut rng);
        let registry = parse_registry(REGISTRY).unwrap();
        let qe = Qe::default();
        let compiled = match compile_text(&text, &registry, &qe) {
            Ok(c) => c,
            Err(nego_core::PolicyError::Config(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e} in {text}"))),
        };
        let parsed = parse_policy(&text).unwrap();
        let rules: Vec<&CoreRule> = compiled.core.rules();
        prop_assert_eq!(rules.len(), parsed.rules.len());
        for rule in rules {
            prop_assert!(rule.psi.is_quantifier_free());
            let signature: BTreeSet<Var> = rule.all_vars();
            prop_assert!(rule.psi.free_vars().is_subset(&signature));
        }
    }
}

#[test]
fn queries_outside_every_condition_get_false_even_from_responsive_leaves() {
    let registry = parse_registry(REGISTRY).unwrap();
    let qe = Qe::default();
    let text = "policy capped { serves: storage rules: [ { trigger: true, uses: [s1: storage], \
                offer: { capacity := s1.capacity, price := s1.price }, constraint: capacity <= 10 } ] }";
    let compiled = compile_text(text, &registry, &qe).unwrap();
    let bindings = responsive_bindings(&compiled.core, &qe);
    let q = nego_core::parse_formula("capacity = 20").unwrap();
    assert!(qe.is_satisfiable(&q).unwrap());
    let eo = run_policy(&compiled.core, &q, None, env(&bindings, &qe)).unwrap();
    assert!(eo.formula.is_false(), "{}", eo.formula);
}
