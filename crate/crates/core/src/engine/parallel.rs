//! Finding groups of sub-negotiators that can be queried concurrently.

use std::collections::BTreeSet;

use crate::formula::{Formula, Var};
use crate::policy::CoreRule;
use crate::qe::{Qe, QeError};

/// Whether `f` factors as a condition on `a` alone and one on `b` alone.
fn factors(f: &Formula, a: &BTreeSet<Var>, b: &BTreeSet<Var>, qe: &Qe) -> Result<bool, QeError> {
    let split = Formula::and(qe.project(f, a)?, qe.project(f, b)?);
    qe.equivalent(f, &split)
}

fn union(a: &BTreeSet<Var>, b: &BTreeSet<Var>) -> BTreeSet<Var> {
    a.union(b).cloned().collect()
}

/// Partitions the rule's servers into groups, ordered by first appearance,
/// such that the rule's condition places no constraint between servers of
/// different groups. The condition must equal the conjunction of its
/// projection onto one group plus the served parameters with its projections
/// onto each other group. Falls back to a single group otherwise.
pub fn analyze_parallel(rule: &CoreRule, qe: &Qe) -> Result<Vec<Vec<usize>>, QeError> {
    let n = rule.uses.len();
    if n <= 1 {
        return Ok(vec![(0..n).collect()]);
    }
    let served = rule.ct.lang();
    let langs: Vec<BTreeSet<Var>> = (0..n).map(|i| rule.prefixed_lang(i)).collect();
    let psi = &rule.psi;

    let mut component: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if find(&mut component, i) == find(&mut component, j) {
                continue;
            }
            let pair = union(&union(&langs[i], &langs[j]), &served);
            let pair_condition = qe.project(psi, &pair)?;
            let independent = factors(&pair_condition, &union(&langs[i], &served), &langs[j], qe)?
                || factors(&pair_condition, &langs[i], &union(&langs[j], &served), qe)?;
            if !independent {
                let (a, b) = (find(&mut component, i), find(&mut component, j));
                component[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut component, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    if groups.len() == 1 {
        return Ok(groups);
    }

    let group_vars: Vec<BTreeSet<Var>> =
        groups.iter().map(|g| g.iter().flat_map(|&i| langs[i].iter().cloned()).collect()).collect();
    for m in 0..groups.len() {
        let mut parts = vec![qe.project(psi, &union(&group_vars[m], &served))?];
        for (g, vars) in group_vars.iter().enumerate() {
            if g != m {
                parts.push(qe.project(psi, vars)?);
            }
        }
        if qe.equivalent(psi, &Formula::conj(parts))? {
            return Ok(groups);
        }
    }
    Ok(vec![(0..n).collect()])
}
