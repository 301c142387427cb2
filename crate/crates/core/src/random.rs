//! Random formulas, configuration types and rules for property checks, and
//! an exact one-dimensional oracle for existential formulas that does not go
//! through quantifier elimination.
//!
//! Every generator draws from a caller-supplied [`Rng`], so a seed fully
//! determines the output.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{BasicType, ConfigType};
use crate::formula::{EvalError, Formula, Rel, Term, Valuation, Var};
use crate::policy::CoreRule;
use crate::qe::{Qe, QeError};
use crate::rational::{int, ratio, Rational};

const RELS: [Rel; 6] = [Rel::Eq, Rel::Ne, Rel::Le, Rel::Ge, Rel::Lt, Rel::Gt];
const ORDER_RELS: [Rel; 5] = [Rel::Eq, Rel::Le, Rel::Ge, Rel::Lt, Rel::Gt];

fn nonzero(rng: &mut impl Rng, bound: i64) -> i64 {
    let n = rng.gen_range(1..=bound);
    if rng.gen_bool(0.5) {
        n
    } else {
        -n
    }
}

/// `c1*x1 + ... + ck*xk` over a non-empty random subset of `vars`, with
/// integer coefficients in `[-bound, bound]`.
pub fn linear_term(rng: &mut impl Rng, vars: &[Var], bound: i64) -> Term {
    assert!(!vars.is_empty(), "linear_term needs at least one variable");
    let count = rng.gen_range(1..=vars.len().min(3));
    let chosen: Vec<&Var> = vars.choose_multiple(rng, count).collect();
    let mut parts = chosen.into_iter().map(|v| {
        let c = nonzero(rng, bound);
        if c == 1 {
            Term::var(v.clone())
        } else {
            Term::scale(int(c), Term::var(v.clone()))
        }
    });
    let first = parts.next().expect("at least one variable");
    parts.fold(first, Term::sum)
}

fn atom_with(rng: &mut impl Rng, vars: &[Var], bound: i64, rels: &[Rel]) -> Formula {
    let lhs = linear_term(rng, vars, bound);
    let rel = *rels.choose(rng).expect("relations");
    let rhs = Term::constant(int(rng.gen_range(-2 * bound..=2 * bound)));
    Formula::atom(lhs, rel, rhs)
}

/// A linear atom `term rel constant` using any of the six relations.
pub fn atom(rng: &mut impl Rng, vars: &[Var], bound: i64) -> Formula {
    atom_with(rng, vars, bound, &RELS)
}

/// A conjunction of `count` atoms without disequalities.
pub fn conjunction(rng: &mut impl Rng, vars: &[Var], count: usize, bound: i64) -> Formula {
    Formula::conj((0..count).map(|_| atom_with(rng, vars, bound, &ORDER_RELS)))
}

/// A quantifier-free formula with `atoms` atoms joined by random
/// conjunctions, disjunctions and negations.
pub fn qf_formula(rng: &mut impl Rng, vars: &[Var], atoms: usize, bound: i64) -> Formula {
    let f = if atoms <= 1 {
        atom(rng, vars, bound)
    } else {
        let left = rng.gen_range(1..atoms);
        let a = qf_formula(rng, vars, left, bound);
        let b = qf_formula(rng, vars, atoms - left, bound);
        if rng.gen_bool(0.6) {
            Formula::and(a, b)
        } else {
            Formula::or(a, b)
        }
    };
    if rng.gen_ratio(1, 6) {
        Formula::not(f)
    } else {
        f
    }
}

/// Values in `[-range, range]` with denominators 1, 2 or 3.
pub fn valuation(rng: &mut impl Rng, vars: &BTreeSet<Var>, range: i64) -> Valuation {
    vars.iter()
        .map(|v| {
            let d = rng.gen_range(1..=3);
            (v.clone(), ratio(rng.gen_range(-range * d..=range * d), d))
        })
        .collect()
}

fn atoms<'a>(f: &'a Formula, out: &mut Vec<(&'a Term, &'a Term)>) {
    match f {
        Formula::Atom(lhs, _, rhs) => out.push((lhs, rhs)),
        Formula::And(a, b) => {
            atoms(a, out);
            atoms(b, out);
        }
        Formula::Not(a) | Formula::Exists(_, a) => atoms(a, out),
    }
}

/// Decides `exists x. body` under `v` for quantifier-free `body`.
///
/// Each atom, with every variable but `x` fixed by `v`, is `a*x + b rel 0`
/// and changes truth value only at `-b/a`. Evaluating the body at every such
/// breakpoint, between consecutive breakpoints and beyond both ends covers
/// every region on which the body is constant.
pub fn exists_oracle(x: &Var, body: &Formula, v: &Valuation) -> Result<bool, EvalError> {
    assert!(body.is_quantifier_free(), "exists_oracle needs a quantifier-free body");
    let mut at = v.clone();
    let mut eval_at = |t: &Term, point: Rational| {
        at.insert(x.clone(), point);
        t.evaluate(&at)
    };
    let mut found = Vec::new();
    atoms(body, &mut found);
    let mut breakpoints = Vec::new();
    for (lhs, rhs) in found {
        let diff = Term::sum(lhs.clone(), Term::scale(int(-1), rhs.clone()));
        let b = eval_at(&diff, int(0))?;
        let a = eval_at(&diff, int(1))? - &b;
        if a != int(0) {
            breakpoints.push(-b / a);
        }
    }
    breakpoints.sort();
    breakpoints.dedup();
    let mut candidates = breakpoints.clone();
    match (breakpoints.first(), breakpoints.last()) {
        (Some(lo), Some(hi)) => {
            candidates.push(lo - int(1));
            candidates.push(hi + int(1));
        }
        _ => candidates.push(int(0)),
    }
    candidates.extend(breakpoints.windows(2).map(|w| (&w[0] + &w[1]) / int(2)));
    let mut point = v.clone();
    for c in candidates {
        point.insert(x.clone(), c);
        if body.evaluate(&point)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Parameters `p0`, `p1`, ... each bounded below by a small constant, some
/// also bounded above.
pub fn config_type(rng: &mut impl Rng, name: &str, params: usize) -> ConfigType {
    let vars: Vec<Var> = (0..params).map(|i| Var::new(format!("p{i}"))).collect();
    let bounds = vars.iter().map(|v| {
        let lo = rng.gen_range(-2..=2);
        let lower = Formula::atom(Term::var(v.clone()), Rel::Ge, Term::constant(int(lo)));
        if rng.gen_bool(0.5) {
            let hi = lo + rng.gen_range(0..=10);
            Formula::and(lower, Formula::atom(Term::var(v.clone()), Rel::Le, Term::constant(int(hi))))
        } else {
            lower
        }
    });
    let constraint = Formula::conj(bounds.collect::<Vec<_>>());
    ConfigType::new(Some(name.to_string()), vars.into_iter().map(|v| (v, BasicType::Decimal)).collect(), constraint)
        .expect("generated parameters are distinct and constrained only by themselves")
}

/// The condition `to_core` would build from the given extra constraint:
/// served and prefixed sub-type constraints conjoined.
fn rule_with(ct: ConfigType, trigger: Formula, uses: Vec<(String, ConfigType)>, extra: Formula) -> CoreRule {
    let mut parts = vec![extra, ct.constraint.clone()];
    parts.extend(uses.iter().map(|(s, t)| t.constraint.prefix_vars(s)));
    CoreRule { ct, trigger, uses, psi: Formula::conj(parts) }
}

fn sub_types(rng: &mut impl Rng, prefix: &str, servers: usize, max_params: usize) -> Vec<(String, ConfigType)> {
    (1..=servers)
        .map(|i| {
            let params = rng.gen_range(1..=max_params);
            (format!("{prefix}{i}"), config_type(rng, &format!("{prefix}type{i}"), params))
        })
        .collect()
}

fn vec_of(vars: BTreeSet<Var>) -> Vec<Var> {
    vars.into_iter().collect()
}

/// A rule serving a random type with up to `max_params` parameters through
/// up to `max_servers` sub-servers. Its condition is satisfiable.
pub fn core_rule(rng: &mut impl Rng, qe: &Qe, max_params: usize, max_servers: usize) -> Result<CoreRule, QeError> {
    let params = rng.gen_range(1..=max_params);
    let ct = config_type(rng, "served", params);
    core_rule_serving(rng, qe, &ct, "s", max_params, max_servers)
}

/// Like [`core_rule`] for a given served type. Servers are named
/// `{server_prefix}1`, `{server_prefix}2`, ...
pub fn core_rule_serving(
    rng: &mut impl Rng,
    qe: &Qe,
    ct: &ConfigType,
    server_prefix: &str,
    max_params: usize,
    max_servers: usize,
) -> Result<CoreRule, QeError> {
    let servers = rng.gen_range(1..=max_servers);
    let uses = sub_types(rng, server_prefix, servers, max_params);
    let trigger = if rng.gen_bool(0.7) {
        Formula::truth()
    } else {
        conjunction(rng, &vec_of(ct.lang()), 1, 2)
    };
    let skeleton = rule_with(ct.clone(), trigger.clone(), uses.clone(), Formula::truth());
    let vars = vec_of(skeleton.all_vars());
    for _ in 0..20 {
        let count = rng.gen_range(1..=3);
        let candidate = rule_with(ct.clone(), trigger.clone(), uses.clone(), conjunction(rng, &vars, count, 3));
        if qe.is_satisfiable(&candidate.psi)? {
            return Ok(candidate);
        }
    }
    Ok(skeleton)
}

/// A rule whose condition is a conjunction of constraints each confined to
/// one of at least two server groups, only the first of which may mention
/// the served parameters.
pub fn separable_rule(rng: &mut impl Rng, qe: &Qe, max_params: usize, max_servers: usize) -> Result<CoreRule, QeError> {
    let params = rng.gen_range(1..=max_params);
    let ct = config_type(rng, "served", params);
    let servers = rng.gen_range(2..=max_servers.max(2));
    let uses = sub_types(rng, "s", servers, max_params);
    let skeleton = rule_with(ct.clone(), Formula::truth(), uses.clone(), Formula::truth());
    let mut order: Vec<usize> = (0..servers).collect();
    order.shuffle(rng);
    let cut = rng.gen_range(1..servers);
    let groups = [&order[..cut], &order[cut..]];
    for _ in 0..20 {
        let mut parts = Vec::new();
        for (g, members) in groups.iter().enumerate() {
            let mut vars: BTreeSet<Var> = members.iter().flat_map(|&i| skeleton.prefixed_lang(i)).collect();
            if g == 0 {
                vars.extend(ct.lang());
            }
            let count = rng.gen_range(1..=2);
            parts.push(conjunction(rng, &vec_of(vars), count, 3));
        }
        let candidate = rule_with(ct.clone(), Formula::truth(), uses.clone(), Formula::conj(parts));
        if qe.is_satisfiable(&candidate.psi)? {
            return Ok(candidate);
        }
    }
    Ok(skeleton)
}

/// A quantifier-free query over `ct` with up to three atoms.
pub fn query(rng: &mut impl Rng, ct: &ConfigType) -> Formula {
    let atoms = rng.gen_range(1..=3);
    qf_formula(rng, &vec_of(ct.lang()), atoms, 3)
}
