//! Terms and formulas of the linear-constraint logic.
//!
//! The core grammar is `Atom | And | Not | Exists`. Disjunction, implication,
//! universal quantification and the constants `true`/`false` are derived:
//! `true` is `0 = 0`, `false` is `0 = 1`, `a || b` is `!(!a && !b)`,
//! `a -> b` is `!(a && !b)` and `forall x. a` is `!(exists x. !a)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::Rational;

/// A variable, optionally qualified by a server prefix (`s1.price`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub prefix: Option<String>,
    pub name: String,
}

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var { prefix: None, name: name.into() }
    }

    pub fn prefixed(prefix: impl Into<String>, name: impl Into<String>) -> Self {
        Var { prefix: Some(prefix.into()), name: name.into() }
    }

    pub fn with_prefix(&self, prefix: &str) -> Self {
        Var::prefixed(prefix, self.name.clone())
    }

    pub fn unprefixed(&self) -> Self {
        Var::new(self.name.clone())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.prefix {
            Some(p) => write!(f, "{p}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Const(Rational),
    Sum(Box<Term>, Box<Term>),
    Scale(Rational, Box<Term>),
}

impl Term {
    pub fn var(v: Var) -> Self {
        Term::Var(v)
    }

    pub fn constant(c: Rational) -> Self {
        Term::Const(c)
    }

    pub fn sum(a: Term, b: Term) -> Self {
        Term::Sum(Box::new(a), Box::new(b))
    }

    pub fn scale(c: Rational, t: Term) -> Self {
        Term::Scale(c, Box::new(t))
    }

    pub fn vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Sum(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Term::Scale(_, t) => t.vars(out),
        }
    }

    pub fn contains_var(&self, x: &Var) -> bool {
        match self {
            Term::Var(v) => v == x,
            Term::Const(_) => false,
            Term::Sum(a, b) => a.contains_var(x) || b.contains_var(x),
            Term::Scale(_, t) => t.contains_var(x),
        }
    }

    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::Const(c) => Term::Const(c.clone()),
            Term::Sum(a, b) => Term::sum(a.map_vars(f), b.map_vars(f)),
            Term::Scale(c, t) => Term::scale(c.clone(), t.map_vars(f)),
        }
    }

    fn replace(&self, x: &Var, t: &Term) -> Term {
        match self {
            Term::Var(v) if v == x => t.clone(),
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::Sum(a, b) => Term::sum(a.replace(x, t), b.replace(x, t)),
            Term::Scale(c, s) => Term::scale(c.clone(), s.replace(x, t)),
        }
    }

    pub fn evaluate(&self, v: &Valuation) -> Result<Rational, EvalError> {
        Ok(match self {
            Term::Var(x) => v.get(x).cloned().ok_or_else(|| EvalError::MissingVariable(x.clone()))?,
            Term::Const(c) => c.clone(),
            Term::Sum(a, b) => a.evaluate(v)? + b.evaluate(v)?,
            Term::Scale(c, t) => c * t.evaluate(v)?,
        })
    }

    /// Value of a term without variables.
    pub fn ground_value(&self) -> Option<Rational> {
        self.evaluate(&Valuation::new()).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Rel {
    /// The relation `r'` with `!(a r b)` equivalent to `a r' b`.
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
            Rel::Lt => Rel::Ge,
        }
    }

    /// The relation `r'` with `a r b` equivalent to `b r' a`.
    pub fn converse(self) -> Rel {
        match self {
            Rel::Le => Rel::Ge,
            Rel::Ge => Rel::Le,
            Rel::Lt => Rel::Gt,
            Rel::Gt => Rel::Lt,
            r => r,
        }
    }

    pub fn holds(self, a: &Rational, b: &Rational) -> bool {
        match self {
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Le => a <= b,
            Rel::Ge => a >= b,
            Rel::Lt => a < b,
            Rel::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Le => "<=",
            Rel::Ge => ">=",
            Rel::Lt => "<",
            Rel::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Term, Rel, Term),
    And(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(Var, Box<Formula>),
}

pub type Valuation = BTreeMap<Var, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for variable `{0}`")]
    MissingVariable(Var),
    #[error("cannot evaluate a quantified formula")]
    Quantified,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("substituting for `{target}` would capture bound variable `{captured}`")]
pub struct CaptureError {
    pub target: Var,
    pub captured: Var,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DnfError {
    #[error("normal form exceeds {cap} disjuncts")]
    TooLarge { cap: usize },
    #[error("normal forms are only defined for quantifier-free formulas")]
    Quantified,
}

impl Formula {
    pub fn atom(lhs: Term, rel: Rel, rhs: Term) -> Self {
        Formula::Atom(lhs, rel, rhs)
    }

    pub fn truth() -> Self {
        Formula::Atom(Term::Const(Rational::zero()), Rel::Eq, Term::Const(Rational::zero()))
    }

    pub fn falsity() -> Self {
        Formula::Atom(Term::Const(Rational::zero()), Rel::Eq, Term::Const(Rational::one()))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn exists(x: Var, body: Formula) -> Self {
        Formula::Exists(x, Box::new(body))
    }

    pub fn forall(x: Var, body: Formula) -> Self {
        Formula::not(Formula::exists(x, Formula::not(body)))
    }

    /// `exists x1, ..., xn. body`, innermost binder last.
    pub fn exists_all<I: IntoIterator<Item = Var>>(vars: I, body: Formula) -> Self {
        let vars: Vec<Var> = vars.into_iter().collect();
        vars.into_iter().rev().fold(body, |acc, x| Formula::exists(x, acc))
    }

    /// Right-nested conjunction; `true` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::truth();
        };
        while let Some(f) = items.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    /// Right-nested disjunction; `false` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::falsity();
        };
        while let Some(f) = items.pop() {
            acc = Formula::or(f, acc);
        }
        acc
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::Atom(Term::Const(a), Rel::Eq, Term::Const(b)) if a.is_zero() && b.is_zero())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Atom(Term::Const(a), Rel::Eq, Term::Const(b)) if a.is_zero() && b.is_one())
    }

    /// Matches the derived disjunction `!(!a && !b)`.
    pub fn as_or(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::And(a, b) = inner.as_ref() {
                if let (Formula::Not(a), Formula::Not(b)) = (a.as_ref(), b.as_ref()) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Matches the derived universal `!(exists x. !a)`.
    pub fn as_forall(&self) -> Option<(&Var, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::Exists(x, body) = inner.as_ref() {
                if let Formula::Not(body) = body.as_ref() {
                    return Some((x, body));
                }
            }
        }
        None
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(a, _, b) => {
                let mut vs = BTreeSet::new();
                a.vars(&mut vs);
                b.vars(&mut vs);
                out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
            }
            Formula::And(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::Exists(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable bound by some quantifier in the formula.
    pub fn bound_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(..) => {}
            Formula::And(a, b) => {
                a.collect_bound(out);
                b.collect_bound(out);
            }
            Formula::Not(a) => a.collect_bound(out),
            Formula::Exists(x, body) => {
                out.insert(x.clone());
                body.collect_bound(out);
            }
        }
    }

    /// All variables, free or bound.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = self.free_vars();
        out.extend(self.bound_vars());
        out
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom(..) => true,
            Formula::And(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::Exists(..) => false,
        }
    }

    /// Replaces every free occurrence of `x` by `t`.
    ///
    /// Fails if `t` mentions a variable bound anywhere in the formula.
    pub fn substitute(&self, x: &Var, t: &Term) -> Result<Formula, CaptureError> {
        let mut tvars = BTreeSet::new();
        t.vars(&mut tvars);
        if let Some(captured) = self.bound_vars().intersection(&tvars).next() {
            return Err(CaptureError { target: x.clone(), captured: captured.clone() });
        }
        Ok(self.replace(x, t))
    }

    fn replace(&self, x: &Var, t: &Term) -> Formula {
        match self {
            Formula::Atom(a, r, b) => Formula::Atom(a.replace(x, t), *r, b.replace(x, t)),
            Formula::And(a, b) => Formula::and(a.replace(x, t), b.replace(x, t)),
            Formula::Not(a) => Formula::not(a.replace(x, t)),
            Formula::Exists(y, body) if y == x => self.clone(),
            Formula::Exists(y, body) => Formula::exists(y.clone(), body.replace(x, t)),
        }
    }

    /// Renames every variable occurrence, bound or free.
    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Formula {
        match self {
            Formula::Atom(a, r, b) => Formula::Atom(a.map_vars(f), *r, b.map_vars(f)),
            Formula::And(a, b) => Formula::and(a.map_vars(f), b.map_vars(f)),
            Formula::Not(a) => Formula::not(a.map_vars(f)),
            Formula::Exists(y, body) => Formula::exists(f(y), body.map_vars(f)),
        }
    }

    /// Prefixes every unprefixed variable with `server`.
    pub fn prefix_vars(&self, server: &str) -> Formula {
        self.map_vars(&|v: &Var| if v.prefix.is_none() { v.with_prefix(server) } else { v.clone() })
    }

    /// Strips the `server` prefix from the variables carrying it.
    pub fn strip_prefix(&self, server: &str) -> Formula {
        self.map_vars(&|v: &Var| {
            if v.prefix.as_deref() == Some(server) {
                v.unprefixed()
            } else {
                v.clone()
            }
        })
    }

    pub fn evaluate(&self, v: &Valuation) -> Result<bool, EvalError> {
        match self {
            Formula::Atom(a, r, b) => Ok(r.holds(&a.evaluate(v)?, &b.evaluate(v)?)),
            Formula::And(a, b) => Ok(a.evaluate(v)? && b.evaluate(v)?),
            Formula::Not(a) => Ok(!a.evaluate(v)?),
            Formula::Exists(..) => Err(EvalError::Quantified),
        }
    }

    /// Negation normal form: negations are pushed into the atoms by flipping
    /// relations. The result contains `Not` only inside derived disjunctions.
    ///
    /// Quantified subformulas are left untouched.
    pub fn to_nnf(&self) -> Formula {
        Nnf::build(self, false).to_formula()
    }

    /// Disjunction of conjunctions of atoms, with `!=` split into `<` or `>`.
    pub fn to_dnf(&self) -> Result<Formula, DnfError> {
        self.to_dnf_capped(usize::MAX)
    }

    pub fn to_dnf_capped(&self, cap: usize) -> Result<Formula, DnfError> {
        let clauses = self.dnf_clauses(cap)?;
        Ok(Formula::disj(clauses.into_iter().map(|c| {
            Formula::conj(c.into_iter().map(|(a, r, b)| Formula::Atom(a, r, b)))
        })))
    }

    /// DNF as lists of atoms. No clause contains `!=`.
    pub(crate) fn dnf_clauses(&self, cap: usize) -> Result<Vec<Vec<Literal>>, DnfError> {
        Nnf::build(self, false).clauses(cap)
    }

    /// Enumerates DNF clauses of `self` depth first. Partial clauses
    /// rejected by `keep` are abandoned at once, and disjunctions left with a
    /// single branch accepted by the cheaper `probe` are decided before any
    /// other. `visit` sees every
    /// complete clause and returns `true` to stop the search; the result says
    /// whether it did.
    ///
    /// More than `cap` complete clauses, or a search tree of more than
    /// `NODES_PER_CLAUSE * cap` nodes, is reported as too large.
    pub(crate) fn search_clauses(
        &self,
        cap: usize,
        keep: &dyn Fn(&[Literal]) -> bool,
        probe: &dyn Fn(&[Literal]) -> bool,
        visit: &mut dyn FnMut(&[Literal]) -> bool,
    ) -> Result<bool, DnfError> {
        let root = Nnf::build(self, false);
        let mut search = Search { cap, nodes: 0, clauses: 0, keep, probe, visit };
        search.run(&mut Vec::new(), vec![Item::Node(&root)])
    }
}

/// An atom of a DNF clause.
pub(crate) type Literal = (Term, Rel, Term);

const NODES_PER_CLAUSE: usize = 16;

#[derive(Clone)]
enum Item<'a> {
    Node(&'a Nnf),
    Literal(Literal),
    /// A disjunction still to be decided.
    Choice(Vec<Item<'a>>),
}

impl Item<'_> {
    /// The literal this item adds to a clause, if it is a single one.
    fn literal(&self) -> Option<Literal> {
        match self {
            Item::Literal(lit) => Some(lit.clone()),
            Item::Node(Nnf::Atom(a, r, b)) if *r != Rel::Ne => Some((a.clone(), *r, b.clone())),
            _ => None,
        }
    }
}

struct Search<'k> {
    cap: usize,
    nodes: usize,
    clauses: usize,
    keep: &'k dyn Fn(&[Literal]) -> bool,
    probe: &'k dyn Fn(&[Literal]) -> bool,
    visit: &'k mut dyn FnMut(&[Literal]) -> bool,
}

impl Search<'_> {
    fn accepts(&self, ctx: &mut Vec<Literal>, lit: Literal) -> bool {
        ctx.push(lit);
        let ok = (self.probe)(ctx);
        ctx.pop();
        ok
    }

    fn run<'n>(&mut self, ctx: &mut Vec<Literal>, mut pending: Vec<Item<'n>>) -> Result<bool, DnfError> {
        self.nodes += 1;
        if self.nodes > self.cap.saturating_mul(NODES_PER_CLAUSE) {
            return Err(DnfError::TooLarge { cap: self.cap });
        }
        let base = ctx.len();
        let mut choices: Vec<Vec<Item<'n>>> = Vec::new();
        while let Some(item) = pending.pop() {
            if let Some(lit) = item.literal() {
                ctx.push(lit);
                if !(self.probe)(ctx) {
                    ctx.truncate(base);
                    return Ok(false);
                }
                continue;
            }
            match item {
                Item::Node(Nnf::Atom(a, _, b)) => choices.push(vec![
                    Item::Literal((a.clone(), Rel::Lt, b.clone())),
                    Item::Literal((a.clone(), Rel::Gt, b.clone())),
                ]),
                Item::Node(Nnf::And(parts)) => pending.extend(parts.iter().rev().map(Item::Node)),
                Item::Node(Nnf::Or(parts)) => choices.push(parts.iter().map(Item::Node).collect()),
                Item::Choice(branches) => choices.push(branches),
                Item::Node(Nnf::Opaque(_)) => {
                    ctx.truncate(base);
                    return Err(DnfError::Quantified);
                }
                Item::Literal(_) => unreachable!("literals are handled above"),
            }
        }
        if ctx.len() > base && !(self.keep)(ctx) {
            ctx.truncate(base);
            return Ok(false);
        }
        if choices.is_empty() {
            self.clauses += 1;
            if self.clauses > self.cap {
                ctx.truncate(base);
                return Err(DnfError::TooLarge { cap: self.cap });
            }
            let stop = (self.visit)(ctx);
            ctx.truncate(base);
            return Ok(stop);
        }

        // A disjunction with no viable branch closes this path and one with a
        // single viable branch is forced. Otherwise the leftmost is split.
        let mut chosen = None;
        for (i, branches) in choices.iter().enumerate() {
            let viable: Vec<Item<'n>> = branches
                .iter()
                .filter(|b| b.literal().is_none_or(|lit| self.accepts(ctx, lit)))
                .cloned()
                .collect();
            if viable.len() <= 1 {
                chosen = Some((i, viable));
                break;
            }
            if chosen.is_none() {
                chosen = Some((i, viable));
            }
        }
        let (chosen, branches) = chosen.expect("at least one choice");
        let rest: Vec<Item<'n>> = choices
            .into_iter()
            .enumerate()
            .rev()
            .filter(|(i, _)| *i != chosen)
            .map(|(_, b)| Item::Choice(b))
            .collect();
        let mut result = Ok(false);
        for branch in branches {
            let mut next = rest.clone();
            next.push(branch);
            match self.run(ctx, next) {
                Ok(false) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        ctx.truncate(base);
        result
    }
}

/// Negation-free view used for normal forms.
enum Nnf {
    Atom(Term, Rel, Term),
    Opaque(Formula),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

impl Nnf {
    fn build(f: &Formula, negated: bool) -> Nnf {
        match f {
            Formula::Atom(a, r, b) => {
                let r = if negated { r.negate() } else { *r };
                Nnf::Atom(a.clone(), r, b.clone())
            }
            Formula::Not(inner) => Nnf::build(inner, !negated),
            Formula::And(a, b) => {
                let mut parts = Vec::new();
                for side in [Nnf::build(a, negated), Nnf::build(b, negated)] {
                    match (side, negated) {
                        (Nnf::Or(inner), true) | (Nnf::And(inner), false) => parts.extend(inner),
                        (other, _) => parts.push(other),
                    }
                }
                if negated {
                    Nnf::Or(parts)
                } else {
                    Nnf::And(parts)
                }
            }
            Formula::Exists(..) => {
                Nnf::Opaque(if negated { Formula::not(f.clone()) } else { f.clone() })
            }
        }
    }

    fn to_formula(&self) -> Formula {
        match self {
            Nnf::Atom(a, r, b) => Formula::Atom(a.clone(), *r, b.clone()),
            Nnf::Opaque(f) => f.clone(),
            Nnf::And(parts) => Formula::conj(parts.iter().map(Nnf::to_formula)),
            Nnf::Or(parts) => Formula::disj(parts.iter().map(Nnf::to_formula)),
        }
    }

    fn clauses(&self, cap: usize) -> Result<Vec<Vec<Literal>>, DnfError> {
        match self {
            Nnf::Atom(a, Rel::Ne, b) => Ok(vec![
                vec![(a.clone(), Rel::Lt, b.clone())],
                vec![(a.clone(), Rel::Gt, b.clone())],
            ]),
            Nnf::Atom(a, r, b) => Ok(vec![vec![(a.clone(), *r, b.clone())]]),
            Nnf::Opaque(_) => Err(DnfError::Quantified),
            Nnf::Or(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.clauses(cap)?);
                    if out.len() > cap {
                        return Err(DnfError::TooLarge { cap });
                    }
                }
                Ok(out)
            }
            Nnf::And(parts) => {
                let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
                for p in parts {
                    let rhs = p.clauses(cap)?;
                    if acc.len().saturating_mul(rhs.len()) > cap {
                        return Err(DnfError::TooLarge { cap });
                    }
                    acc = acc
                        .iter()
                        .flat_map(|l| rhs.iter().map(move |r| l.iter().chain(r).cloned().collect()))
                        .collect();
                }
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn val(pairs: &[(&str, i64)]) -> Valuation {
        pairs.iter().map(|(k, v)| (Var::new(*k), int(*v))).collect()
    }

    #[test]
    fn free_vars_examples() {
        let set = |names: &[&str]| names.iter().map(|n| Var::new(*n)).collect::<BTreeSet<_>>();
        assert_eq!(f("x < 5 && x > y").free_vars(), set(&["x", "y"]));
        assert_eq!(f("exists y. (x < 5 && x > y && y > 0)").free_vars(), set(&["x"]));
        assert!(f("true").free_vars().is_empty());
    }

    #[test]
    fn substitute_examples() {
        let p2 = Term::Var(Var::new("p'"));
        assert_eq!(f("p <= 10").substitute(&Var::new("p"), &p2).unwrap(), f("p' <= 10"));
        let r = Term::Var(Var::new("r"));
        assert_eq!(
            f("exists p. p <= q").substitute(&Var::new("q"), &r).unwrap(),
            f("exists p. p <= r")
        );
        assert_eq!(
            f("s = 6 && p >= 8").substitute(&Var::new("p"), &p2).unwrap(),
            f("s = 6 && p' >= 8")
        );
        // bound occurrence untouched
        assert_eq!(
            f("exists p. p <= 3").substitute(&Var::new("p"), &Term::Const(int(1))).unwrap(),
            f("exists p. p <= 3")
        );
    }

    #[test]
    fn substitute_rejects_capture() {
        let err = f("exists p. p <= q").substitute(&Var::new("q"), &Term::Var(Var::new("p")));
        assert!(matches!(err, Err(CaptureError { .. })));
    }

    #[test]
    fn evaluate_examples() {
        assert!(f("x < 5 && x > 0").evaluate(&val(&[("x", 3)])).unwrap());
        assert!(f("capacity = 2 && price <= 5")
            .evaluate(&val(&[("capacity", 2), ("price", 5)]))
            .unwrap());
        assert!(!f("x < 5 && x > 0").evaluate(&val(&[("x", 5)])).unwrap());
        assert_eq!(
            f("x < y").evaluate(&val(&[("x", 1)])),
            Err(EvalError::MissingVariable(Var::new("y")))
        );
    }

    #[test]
    fn nnf_examples() {
        assert_eq!(f("!(x <= 3)").to_nnf(), f("x > 3"));
        assert_eq!(f("!(x = 1 && y < 2)").to_nnf(), f("x != 1 || y >= 2"));
        assert_eq!(f("!!(x > 0)").to_nnf(), f("x > 0"));
    }

    #[test]
    fn dnf_examples() {
        assert_eq!(f("(a = 1 || b = 1) && c = 1").to_dnf().unwrap(), f("(a = 1 && c = 1) || (b = 1 && c = 1)"));
        assert_eq!(f("x != 1").to_dnf().unwrap(), f("x < 1 || x > 1"));
        assert_eq!(f("x <= 2").to_dnf().unwrap(), f("x <= 2"));
    }

    #[test]
    fn dnf_cap_is_enforced() {
        let g = f("(a = 1 || a = 2) && (b = 1 || b = 2) && (c = 1 || c = 2)");
        assert_eq!(g.to_dnf_capped(7), Err(DnfError::TooLarge { cap: 7 }));
        assert!(g.to_dnf_capped(8).is_ok());
    }
}
