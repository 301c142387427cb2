//! Linear constraints over the rationals and Fourier-Motzkin elimination.
//!
//! A [`LinearConstraint`] is `sum(c_i * x_i) op bound` with `op` one of
//! `<=`, `<`, `=`. Atoms using `>=`/`>` are flipped on the way in; `!=` has no
//! place here and must be split beforehand.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::formula::{Formula, Rel, Term, Valuation, Var};
use crate::rational::Rational;

/// `coeffs . x + constant`
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn from_term(t: &Term) -> LinExpr {
        let mut out = LinExpr::default();
        out.accumulate(t, &Rational::one());
        out
    }

    fn accumulate(&mut self, t: &Term, factor: &Rational) {
        match t {
            Term::Var(v) => {
                let e = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
                *e += factor;
                if e.is_zero() {
                    self.coeffs.remove(v);
                }
            }
            Term::Const(c) => self.constant += c * factor,
            Term::Sum(a, b) => {
                self.accumulate(a, factor);
                self.accumulate(b, factor);
            }
            Term::Scale(c, inner) => self.accumulate(inner, &(c * factor)),
        }
    }

    pub fn sub(mut self, other: &LinExpr) -> LinExpr {
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
            *e -= c;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant -= &other.constant;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Le,
    Lt,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<Var, Rational>,
    pub bound: Rational,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("relation `!=` must be split before building a constraint system")]
    Disequality,
    #[error("not a conjunction of atoms: `{0}`")]
    NotConjunction(String),
}

impl LinearConstraint {
    /// Builds the normalized constraint equivalent to `lhs rel rhs`.
    pub fn from_atom(lhs: &Term, rel: Rel, rhs: &Term) -> Result<LinearConstraint, LinearError> {
        let e = LinExpr::from_term(lhs).sub(&LinExpr::from_term(rhs));
        let (coeffs, bound) = (e.coeffs, -e.constant);
        let negated = || -> (BTreeMap<Var, Rational>, Rational) {
            (coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(), -bound.clone())
        };
        let c = match rel {
            Rel::Le => LinearConstraint { coeffs: coeffs.clone(), bound: bound.clone(), kind: ConstraintKind::Le },
            Rel::Lt => LinearConstraint { coeffs: coeffs.clone(), bound: bound.clone(), kind: ConstraintKind::Lt },
            Rel::Eq => LinearConstraint { coeffs: coeffs.clone(), bound: bound.clone(), kind: ConstraintKind::Eq },
            Rel::Ge => {
                let (c, b) = negated();
                LinearConstraint { coeffs: c, bound: b, kind: ConstraintKind::Le }
            }
            Rel::Gt => {
                let (c, b) = negated();
                LinearConstraint { coeffs: c, bound: b, kind: ConstraintKind::Lt }
            }
            Rel::Ne => return Err(LinearError::Disequality),
        };
        Ok(c.normalized())
    }

    pub fn falsity() -> LinearConstraint {
        LinearConstraint { coeffs: BTreeMap::new(), bound: -Rational::one(), kind: ConstraintKind::Le }
    }

    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truth value of a constraint without variables.
    pub fn ground_truth(&self) -> Option<bool> {
        if !self.is_ground() {
            return None;
        }
        let zero = Rational::zero();
        Some(match self.kind {
            ConstraintKind::Le => zero <= self.bound,
            ConstraintKind::Lt => zero < self.bound,
            ConstraintKind::Eq => zero == self.bound,
        })
    }

    pub fn coeff(&self, x: &Var) -> Option<&Rational> {
        self.coeffs.get(x)
    }

    /// Scales so that the leading coefficient is `1` (equalities) or `±1`.
    pub fn normalized(mut self) -> LinearConstraint {
        let Some(lead) = self.coeffs.values().next().cloned() else {
            return self;
        };
        let div = if self.kind == ConstraintKind::Eq { lead } else { lead.abs() };
        if !div.is_one() {
            for c in self.coeffs.values_mut() {
                *c /= &div;
            }
            self.bound /= &div;
        }
        self
    }

    pub fn holds(&self, v: &Valuation) -> Option<bool> {
        let mut lhs = Rational::zero();
        for (x, c) in &self.coeffs {
            lhs += c * v.get(x)?;
        }
        Some(match self.kind {
            ConstraintKind::Le => lhs <= self.bound,
            ConstraintKind::Lt => lhs < self.bound,
            ConstraintKind::Eq => lhs == self.bound,
        })
    }

    /// Replaces `x` by `expr` (given as coefficients plus constant).
    fn substitute(&self, x: &Var, expr: &LinExpr) -> LinearConstraint {
        let Some(a) = self.coeffs.get(x).cloned() else {
            return self.clone();
        };
        let mut coeffs = self.coeffs.clone();
        coeffs.remove(x);
        for (v, c) in &expr.coeffs {
            let e = coeffs.entry(v.clone()).or_insert_with(Rational::zero);
            *e += &a * c;
            if e.is_zero() {
                coeffs.remove(v);
            }
        }
        let bound = &self.bound - &a * &expr.constant;
        LinearConstraint { coeffs, bound, kind: self.kind }.normalized()
    }

    /// The negation as a disjunction of constraints.
    pub fn negation(&self) -> Vec<LinearConstraint> {
        let neg: BTreeMap<Var, Rational> = self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect();
        let nb = -self.bound.clone();
        match self.kind {
            ConstraintKind::Le => vec![LinearConstraint { coeffs: neg, bound: nb, kind: ConstraintKind::Lt }],
            ConstraintKind::Lt => vec![LinearConstraint { coeffs: neg, bound: nb, kind: ConstraintKind::Le }],
            ConstraintKind::Eq => vec![
                LinearConstraint { coeffs: self.coeffs.clone(), bound: self.bound.clone(), kind: ConstraintKind::Lt },
                LinearConstraint { coeffs: neg, bound: nb, kind: ConstraintKind::Lt },
            ],
        }
        .into_iter()
        .map(LinearConstraint::normalized)
        .collect()
    }

    /// Renders as an atom, preferring `x >= 3` over `-x <= -3`.
    pub fn to_formula(&self) -> Formula {
        if let Some(t) = self.ground_truth() {
            return if t { Formula::truth() } else { Formula::falsity() };
        }
        let rel = match self.kind {
            ConstraintKind::Le => Rel::Le,
            ConstraintKind::Lt => Rel::Lt,
            ConstraintKind::Eq => Rel::Eq,
        };
        let negatives = self.coeffs.values().filter(|c| c.is_negative()).count();
        let flip = self.kind != ConstraintKind::Eq && 2 * negatives > self.coeffs.len()
            || self.kind != ConstraintKind::Eq && self.coeffs.len() == 1 && negatives == 1;
        if self.coeffs.len() == 1 {
            let (x, c) = self.coeffs.iter().next().unwrap();
            let value = &self.bound / c;
            let rel = if c.is_negative() { rel.converse() } else { rel };
            return Formula::atom(Term::Var(x.clone()), rel, Term::Const(value));
        }
        let sign = if flip { -Rational::one() } else { Rational::one() };
        let mut term: Option<Term> = None;
        for (x, c) in &self.coeffs {
            let c = c * &sign;
            let piece = if c.is_one() { Term::Var(x.clone()) } else { Term::scale(c, Term::Var(x.clone())) };
            term = Some(match term {
                None => piece,
                Some(acc) => Term::sum(acc, piece),
            });
        }
        let rel = if flip { rel.converse() } else { rel };
        Formula::atom(term.unwrap(), rel, Term::Const(&self.bound * &sign))
    }
}

/// A conjunction of linear constraints.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConstraintSystem {
    pub constraints: Vec<LinearConstraint>,
}

impl ConstraintSystem {
    pub fn new(constraints: Vec<LinearConstraint>) -> Self {
        ConstraintSystem { constraints }
    }

    pub fn infeasible() -> Self {
        ConstraintSystem { constraints: vec![LinearConstraint::falsity()] }
    }

    /// Builds a system from a conjunction of atoms (no `!=`, no disjunction).
    pub fn from_conjunct(f: &Formula) -> Result<ConstraintSystem, LinearError> {
        let mut out = Vec::new();
        collect_conjunct(f, &mut out)?;
        Ok(ConstraintSystem::new(out))
    }

    pub fn from_atoms<'a, I>(atoms: I) -> Result<ConstraintSystem, LinearError>
    where
        I: IntoIterator<Item = &'a (Term, Rel, Term)>,
    {
        atoms
            .into_iter()
            .map(|(a, r, b)| LinearConstraint::from_atom(a, *r, b))
            .collect::<Result<Vec<_>, _>>()
            .map(ConstraintSystem::new)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().flat_map(|c| c.coeffs.keys().cloned()).collect()
    }

    /// Contains a ground constraint that is false.
    pub fn is_trivially_infeasible(&self) -> bool {
        self.constraints.iter().any(|c| c.ground_truth() == Some(false))
    }

    pub fn holds(&self, v: &Valuation) -> Option<bool> {
        let mut all = true;
        for c in &self.constraints {
            all &= c.holds(v)?;
        }
        Some(all)
    }

    pub fn to_formula(&self) -> Formula {
        if self.is_trivially_infeasible() {
            return Formula::falsity();
        }
        Formula::conj(
            self.constraints.iter().filter(|c| c.ground_truth() != Some(true)).map(LinearConstraint::to_formula),
        )
    }

    /// Cheap syntactic reduction: drops true ground constraints, collapses to
    /// a single false constraint on contradiction, and combines constraints
    /// sharing a coefficient direction into the tightest interval, turning
    /// `e <= a && e >= a` into `e = a`.
    pub fn reduce(&mut self) {
        // direction (leading coefficient +1) -> interval on that expression
        let mut groups: BTreeMap<Vec<(Var, Rational)>, Interval> = BTreeMap::new();
        let mut order: Vec<Vec<(Var, Rational)>> = Vec::new();
        for c in &self.constraints {
            match c.ground_truth() {
                Some(true) => continue,
                Some(false) => {
                    *self = ConstraintSystem::infeasible();
                    return;
                }
                None => {}
            }
            let lead = c.coeffs.values().next().unwrap();
            let positive = lead.is_positive();
            let sign = if positive { Rational::one() } else { -Rational::one() };
            let dir: Vec<(Var, Rational)> = c.coeffs.iter().map(|(v, k)| (v.clone(), k * &sign)).collect();
            let value = &c.bound * &sign;
            let iv = groups.entry(dir.clone()).or_insert_with(|| {
                order.push(dir.clone());
                Interval::default()
            });
            match c.kind {
                ConstraintKind::Eq => iv.meet_eq(value),
                ConstraintKind::Le | ConstraintKind::Lt => {
                    let strict = c.kind == ConstraintKind::Lt;
                    if positive {
                        iv.meet_upper(value, strict);
                    } else {
                        iv.meet_lower(value, strict);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for dir in order {
            let iv = &groups[&dir];
            let coeffs: BTreeMap<Var, Rational> = dir.iter().cloned().collect();
            match iv.constraints(&coeffs) {
                Some(cs) => out.extend(cs),
                None => {
                    *self = ConstraintSystem::infeasible();
                    return;
                }
            }
        }
        self.constraints = out;
    }

    /// Projects `x` out of the system. Equalities mentioning `x` are used for
    /// substitution first; otherwise every lower bound is paired with every
    /// upper bound.
    pub fn eliminate(&self, x: &Var) -> ConstraintSystem {
        if let Some(pos) =
            self.constraints.iter().position(|c| c.kind == ConstraintKind::Eq && c.coeffs.contains_key(x))
        {
            let eq = &self.constraints[pos];
            let a = eq.coeffs[x].clone();
            // x = (bound - sum(others)) / a
            let mut expr = LinExpr { coeffs: BTreeMap::new(), constant: &eq.bound / &a };
            for (v, c) in &eq.coeffs {
                if v != x {
                    expr.coeffs.insert(v.clone(), -(c / &a));
                }
            }
            let constraints = self
                .constraints
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != pos)
                .map(|(_, c)| c.substitute(x, &expr))
                .collect();
            let mut out = ConstraintSystem::new(constraints);
            out.reduce();
            return out;
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut rest = Vec::new();
        for c in &self.constraints {
            match c.coeffs.get(x) {
                None => rest.push(c.clone()),
                Some(a) if a.is_positive() => upper.push(c),
                Some(_) => lower.push(c),
            }
        }
        for lo in &lower {
            for up in &upper {
                rest.push(combine(lo, up, x));
            }
        }
        let mut out = ConstraintSystem::new(rest);
        out.reduce();
        out
    }

    /// The variable to eliminate next: one fixed by an equality if any,
    /// otherwise the one occurring in the fewest constraints.
    pub fn pick_variable(&self) -> Option<Var> {
        self.pick_variable_among(&self.vars())
    }

    pub fn pick_variable_among(&self, candidates: &BTreeSet<Var>) -> Option<Var> {
        let mut best: Option<(usize, &Var)> = None;
        for v in candidates {
            let mut count = 0usize;
            let mut eq = false;
            for c in &self.constraints {
                if c.coeffs.contains_key(v) {
                    count += 1;
                    eq |= c.kind == ConstraintKind::Eq;
                }
            }
            if count == 0 {
                continue;
            }
            let cost = if eq { 0 } else { count };
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, v));
            }
        }
        best.map(|(_, v)| v.clone())
    }

    /// Decides feasibility by eliminating every variable.
    pub fn is_feasible(&self) -> bool {
        let mut cur = self.clone();
        cur.reduce();
        while !cur.is_trivially_infeasible() {
            match cur.pick_variable() {
                Some(v) => cur = cur.eliminate(&v),
                None => return true,
            }
        }
        false
    }

    /// A satisfying assignment for the system's variables, if one exists.
    pub fn model(&self) -> Option<Valuation> {
        let mut stages: Vec<(Var, ConstraintSystem)> = Vec::new();
        let mut cur = self.clone();
        cur.reduce();
        loop {
            if cur.is_trivially_infeasible() {
                return None;
            }
            let Some(v) = cur.pick_variable() else { break };
            let next = cur.eliminate(&v);
            stages.push((v, cur));
            cur = next;
        }
        let mut values = Valuation::new();
        for (x, sys) in stages.into_iter().rev() {
            let mut iv = Interval::default();
            for c in &sys.constraints {
                let Some(a) = c.coeffs.get(&x) else { continue };
                let mut rhs = c.bound.clone();
                for (v, k) in &c.coeffs {
                    if v != &x {
                        rhs -= k * values.get(v)?;
                    }
                }
                let value = rhs / a;
                match c.kind {
                    ConstraintKind::Eq => iv.meet_eq(value),
                    kind => {
                        let strict = kind == ConstraintKind::Lt;
                        if a.is_positive() {
                            iv.meet_upper(value, strict);
                        } else {
                            iv.meet_lower(value, strict);
                        }
                    }
                }
            }
            values.insert(x, iv.pick()?);
        }
        Some(values)
    }
}

fn collect_conjunct(f: &Formula, out: &mut Vec<LinearConstraint>) -> Result<(), LinearError> {
    match f {
        Formula::Atom(a, r, b) => {
            out.push(LinearConstraint::from_atom(a, *r, b)?);
            Ok(())
        }
        Formula::And(a, b) => {
            collect_conjunct(a, out)?;
            collect_conjunct(b, out)
        }
        other => Err(LinearError::NotConjunction(other.to_string())),
    }
}

/// Adds positive multiples of a lower and an upper bound on `x` so that `x`
/// cancels. The result is strict if either input is.
fn combine(lo: &LinearConstraint, up: &LinearConstraint, x: &Var) -> LinearConstraint {
    let a_lo = -lo.coeffs[x].clone();
    let a_up = up.coeffs[x].clone();
    let mut coeffs: BTreeMap<Var, Rational> = BTreeMap::new();
    for (v, c) in &lo.coeffs {
        *coeffs.entry(v.clone()).or_insert_with(Rational::zero) += c * &a_up;
    }
    for (v, c) in &up.coeffs {
        *coeffs.entry(v.clone()).or_insert_with(Rational::zero) += c * &a_lo;
    }
    coeffs.retain(|_, c| !c.is_zero());
    let bound = &lo.bound * &a_up + &up.bound * &a_lo;
    let kind = if lo.kind == ConstraintKind::Lt || up.kind == ConstraintKind::Lt {
        ConstraintKind::Lt
    } else {
        ConstraintKind::Le
    };
    LinearConstraint { coeffs, bound, kind }.normalized()
}

/// Bounds on a single linear expression.
#[derive(Clone, Debug, Default)]
struct Interval {
    lower: Option<(Rational, bool)>,
    upper: Option<(Rational, bool)>,
    eq: Option<Rational>,
    empty: bool,
}

impl Interval {
    fn meet_eq(&mut self, v: Rational) {
        match &self.eq {
            Some(e) if *e != v => self.empty = true,
            _ => self.eq = Some(v),
        }
    }

    fn meet_upper(&mut self, v: Rational, strict: bool) {
        let tighter = match &self.upper {
            None => true,
            Some((u, s)) => v < *u || (v == *u && strict && !s),
        };
        if tighter {
            self.upper = Some((v, strict));
        }
    }

    fn meet_lower(&mut self, v: Rational, strict: bool) {
        let tighter = match &self.lower {
            None => true,
            Some((l, s)) => v > *l || (v == *l && strict && !s),
        };
        if tighter {
            self.lower = Some((v, strict));
        }
    }

    fn admits(&self, v: &Rational) -> bool {
        let lo_ok = match &self.lower {
            None => true,
            Some((l, s)) => v > l || (!s && v == l),
        };
        let up_ok = match &self.upper {
            None => true,
            Some((u, s)) => v < u || (!s && v == u),
        };
        lo_ok && up_ok
    }

    /// Equivalent constraints on `coeffs . x`, or `None` if empty.
    fn constraints(&self, coeffs: &BTreeMap<Var, Rational>) -> Option<Vec<LinearConstraint>> {
        if self.empty {
            return None;
        }
        let mk = |bound: Rational, kind| LinearConstraint { coeffs: coeffs.clone(), bound, kind };
        let neg = |bound: &Rational, kind| LinearConstraint {
            coeffs: coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            bound: -bound.clone(),
            kind,
        };
        if let Some(e) = &self.eq {
            return self.admits(e).then(|| vec![mk(e.clone(), ConstraintKind::Eq)]);
        }
        if let (Some((l, ls)), Some((u, us))) = (&self.lower, &self.upper) {
            if l > u || (l == u && (*ls || *us)) {
                return None;
            }
            if l == u {
                return Some(vec![mk(l.clone(), ConstraintKind::Eq)]);
            }
        }
        let kind = |strict: bool| if strict { ConstraintKind::Lt } else { ConstraintKind::Le };
        let mut out = Vec::new();
        if let Some((l, s)) = &self.lower {
            out.push(neg(l, kind(*s)));
        }
        if let Some((u, s)) = &self.upper {
            out.push(mk(u.clone(), kind(*s)));
        }
        Some(out)
    }

    /// A point of the interval: a closed endpoint if there is one, otherwise
    /// the midpoint or an offset from the open endpoint; zero if unbounded.
    fn pick(&self) -> Option<Rational> {
        if self.empty {
            return None;
        }
        let v = if let Some(e) = &self.eq {
            e.clone()
        } else {
            let zero = Rational::zero();
            match (&self.lower, &self.upper) {
                _ if self.admits(&zero) => zero,
                (Some((l, false)), _) => l.clone(),
                (_, Some((u, false))) => u.clone(),
                (Some((l, _)), Some((u, _))) => (l + u) / Rational::from_integer(2.into()),
                (Some((l, _)), None) => l + Rational::one(),
                (None, Some((u, _))) => u - Rational::one(),
                (None, None) => zero,
            }
        };
        self.admits(&v).then_some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::syntax::parse_formula;

    fn sys(src: &str) -> ConstraintSystem {
        ConstraintSystem::from_conjunct(&parse_formula(src).unwrap()).unwrap()
    }

    fn x(n: &str) -> Var {
        Var::new(n)
    }

    fn constraint(pairs: &[(&str, Rational)], bound: Rational, kind: ConstraintKind) -> LinearConstraint {
        LinearConstraint { coeffs: pairs.iter().map(|(v, c)| (x(v), c.clone())).collect(), bound, kind }
    }

    #[test]
    fn atoms_are_normalized() {
        assert_eq!(sys("x >= 3").constraints, vec![constraint(&[("x", int(-1))], int(-3), ConstraintKind::Le)]);
        assert_eq!(
            sys("capacity >= 0 && price >= 0").constraints,
            vec![
                constraint(&[("capacity", int(-1))], int(0), ConstraintKind::Le),
                constraint(&[("price", int(-1))], int(0), ConstraintKind::Le),
            ]
        );
        assert_eq!(
            sys("x + 2*y < 7").constraints,
            vec![constraint(&[("x", int(1)), ("y", int(2))], int(7), ConstraintKind::Lt)]
        );
        assert_eq!(
            sys("2*x = 3").constraints,
            vec![constraint(&[("x", int(1))], ratio(3, 2), ConstraintKind::Eq)]
        );
    }

    #[test]
    fn disequality_is_rejected() {
        assert_eq!(ConstraintSystem::from_conjunct(&parse_formula("x != 1").unwrap()), Err(LinearError::Disequality));
    }

    #[test]
    fn eliminate_pairs_bounds() {
        let out = sys("y < x && x < 5 && 0 < y").eliminate(&x("x"));
        let mut expect = sys("y < 5 && 0 < y");
        expect.reduce();
        assert_eq!(out, expect);
    }

    #[test]
    fn eliminate_absent_variable_is_identity() {
        let out = sys("x <= 3").eliminate(&x("y"));
        assert_eq!(out, sys("x <= 3"));
    }

    #[test]
    fn eliminate_uses_equalities() {
        // substitution oracle: x = y + 1 and x <= 4 give y + 1 <= 4
        let out = sys("x = y + 1 && x <= 4").eliminate(&x("x"));
        assert_eq!(out, sys("y <= 3"));
    }

    #[test]
    fn reduce_merges_opposite_bounds() {
        let mut s = sys("p <= 8 && p >= 8 && p <= 10");
        s.reduce();
        assert_eq!(s, sys("p = 8"));
        let mut s = sys("p < 8 && p >= 8");
        s.reduce();
        assert!(s.is_trivially_infeasible());
        let mut s = sys("x + y <= 3 && 2*x + 2*y <= 5");
        s.reduce();
        assert_eq!(s, sys("x + y <= 5/2"));
    }

    #[test]
    fn feasibility() {
        assert!(sys("capacity = 10 && price <= 5").is_feasible());
        assert!(!sys("x < 0 && x > 1").is_feasible());
        assert!(!sys("x < y && y < z && z < x").is_feasible());
        assert!(sys("x <= y && y <= z && z <= x").is_feasible());
    }

    #[test]
    fn models_satisfy_the_system() {
        for src in [
            "x < 5 && x > 0",
            "c = 100 && p >= 33/10 && p <= 5",
            "x + y = 3 && x - y > 1 && y > -2",
            "a < b && b < c && c < 1 && a > 0",
        ] {
            let s = sys(src);
            let m = s.model().unwrap();
            assert_eq!(s.holds(&m), Some(true), "{src}: {m:?}");
        }
        assert_eq!(sys("x < 0 && x > 0").model(), None);
    }

    #[test]
    fn renders_back_to_formulas() {
        assert_eq!(sys("x >= 3").to_formula(), parse_formula("x >= 3").unwrap());
        assert_eq!(sys("-x - y <= -2").to_formula(), parse_formula("x + y >= 2").unwrap());
        assert_eq!(ConstraintSystem::infeasible().to_formula(), Formula::falsity());
        assert_eq!(ConstraintSystem::default().to_formula(), Formula::truth());
    }
}
