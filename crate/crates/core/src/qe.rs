//! Quantifier elimination and decision procedures over linear rational
//! arithmetic.
//!
//! Everything goes through the same pipeline: inner quantifiers are removed
//! first, the quantifier-free body is put into DNF, and each disjunct is
//! handled as a [`ConstraintSystem`].

use std::collections::BTreeSet;

use thiserror::Error;
use tracing::warn;

use crate::formula::{DnfError, Formula, Literal, Rel, Term, Valuation, Var};
use crate::linear::{ConstraintSystem, LinearConstraint};

pub const DEFAULT_DNF_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QeError {
    #[error("formula exceeds the limit of {cap} disjuncts")]
    ResourceLimit { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Decision procedures, parameterized by the DNF size limit.
#[derive(Debug, Clone, Copy)]
pub struct Qe {
    pub dnf_cap: usize,
}

impl Default for Qe {
    fn default() -> Self {
        Qe { dnf_cap: DEFAULT_DNF_CAP }
    }
}

fn dnf_error(e: DnfError) -> QeError {
    match e {
        DnfError::TooLarge { cap } => QeError::ResourceLimit { cap },
        DnfError::Quantified => unreachable!("quantifiers are eliminated before normalization"),
    }
}

fn roughly_feasible(atoms: &[Literal]) -> bool {
    match ConstraintSystem::from_atoms(atoms) {
        Ok(mut s) => {
            s.reduce();
            !s.is_trivially_infeasible()
        }
        Err(_) => true,
    }
}

fn feasible(atoms: &[Literal]) -> bool {
    match ConstraintSystem::from_atoms(atoms) {
        Ok(mut s) => {
            s.reduce();
            !s.is_trivially_infeasible() && s.is_feasible()
        }
        Err(_) => true,
    }
}

impl Qe {
    pub fn new(dnf_cap: usize) -> Self {
        Qe { dnf_cap }
    }

    /// Feasible constraint systems whose disjunction is equivalent to `f`,
    /// which must be quantifier-free.
    fn systems(&self, f: &Formula) -> Result<Vec<ConstraintSystem>, QeError> {
        let mut out = Vec::new();
        f.search_clauses(self.dnf_cap, &feasible, &roughly_feasible, &mut |clause| {
            let mut s = ConstraintSystem::from_atoms(clause).expect("DNF clauses contain no disequalities");
            s.reduce();
            out.push(s);
            false
        })
        .map_err(dnf_error)?;
        Ok(out)
    }

    /// Projects every variable in `vars` out of the system.
    fn eliminate_all(&self, mut s: ConstraintSystem, vars: &BTreeSet<Var>) -> ConstraintSystem {
        loop {
            if s.is_trivially_infeasible() {
                return ConstraintSystem::infeasible();
            }
            let Some(x) = s.pick_variable_among(vars) else {
                remove_redundant(&mut s);
                return s;
            };
            let before = s.constraints.clone();
            s = s.eliminate(&x);
            // Constraints carried over unchanged cannot have become redundant.
            let fresh: Vec<bool> = s.constraints.iter().map(|c| !before.contains(c)).collect();
            remove_redundant_among(&mut s, &fresh);
        }
    }

    /// Quantifier-free formula equivalent to `f`.
    pub fn qe(&self, f: &Formula) -> Result<Formula, QeError> {
        match f {
            Formula::Atom(..) => Ok(f.clone()),
            Formula::And(a, b) => Ok(Formula::and(self.qe(a)?, self.qe(b)?)),
            Formula::Not(a) => Ok(Formula::not(self.qe(a)?)),
            Formula::Exists(..) => {
                let mut vars = BTreeSet::new();
                let mut body = f;
                while let Formula::Exists(x, inner) = body {
                    vars.insert(x.clone());
                    body = inner;
                }
                let body = self.qe(body)?;
                self.project_out(&body, &vars)
            }
        }
    }

    /// `qe(exists vars. f)` for quantifier-free `f`, simplified.
    fn project_out(&self, f: &Formula, vars: &BTreeSet<Var>) -> Result<Formula, QeError> {
        let mut systems = Vec::new();
        for s in self.systems(f)? {
            let s = self.eliminate_all(s, vars);
            if !s.is_trivially_infeasible() {
                systems.push(s);
            }
        }
        Ok(assemble(systems))
    }

    /// Eliminates every free variable of `f` outside `keep`.
    pub fn project(&self, f: &Formula, keep: &BTreeSet<Var>) -> Result<Formula, QeError> {
        let f = self.qe(f)?;
        let drop: BTreeSet<Var> = f.free_vars().difference(keep).cloned().collect();
        self.project_out(&f, &drop)
    }

    /// `qe(exists vars. f)`.
    pub fn exists(&self, vars: &BTreeSet<Var>, f: &Formula) -> Result<Formula, QeError> {
        let f = self.qe(f)?;
        self.project_out(&f, vars)
    }

    pub fn is_satisfiable(&self, f: &Formula) -> Result<bool, QeError> {
        let f = self.qe(f)?;
        f.search_clauses(self.dnf_cap, &feasible, &roughly_feasible, &mut |_| true).map_err(dnf_error)
    }

    pub fn entails(&self, f: &Formula, g: &Formula) -> Result<bool, QeError> {
        Ok(!self.is_satisfiable(&Formula::and(f.clone(), Formula::not(g.clone())))?)
    }

    pub fn equivalent(&self, f: &Formula, g: &Formula) -> Result<bool, QeError> {
        Ok(self.entails(f, g)? && self.entails(g, f)?)
    }

    /// An equivalent formula in reduced disjunctive form: contradictory
    /// disjuncts and redundant constraints are removed, bounds are merged, and
    /// disjuncts implied by another disjunct are dropped.
    pub fn simplify(&self, f: &Formula) -> Result<Formula, QeError> {
        let f = self.qe(f)?;
        let mut systems = Vec::new();
        for mut s in self.systems(&f)? {
            remove_redundant(&mut s);
            if !s.is_trivially_infeasible() {
                systems.push(s);
            }
        }
        Ok(assemble(systems))
    }

    /// A valuation of the free variables of `f` satisfying it.
    pub fn find_model(&self, f: &Formula) -> Result<Option<Valuation>, QeError> {
        let g = self.qe(f)?;
        let mut found = None;
        g.search_clauses(self.dnf_cap, &feasible, &roughly_feasible, &mut |clause| {
            found = ConstraintSystem::from_atoms(clause).expect("DNF clauses contain no disequalities").model();
            found.is_some()
        })
        .map_err(dnf_error)?;
        Ok(found.map(|mut m| {
            for v in f.free_vars() {
                m.entry(v).or_insert_with(|| crate::rational::int(0));
            }
            m
        }))
    }

    /// Strengthens `f` to the points where `x` is minimal (or maximal) among
    /// all points of `f` agreeing on the other variables.
    pub fn apply_preference(&self, f: &Formula, x: &Var, direction: Direction) -> Result<Formula, QeError> {
        if !f.free_vars().contains(x) {
            warn!(variable = %x, "preference variable does not occur in the formula");
            return self.simplify(f);
        }
        let used = f.all_vars();
        let mut fresh = Var { prefix: x.prefix.clone(), name: format!("{}'", x.name) };
        while used.contains(&fresh) {
            fresh.name.push('\'');
        }
        let renamed = f
            .substitute(x, &Term::Var(fresh.clone()))
            .expect("fresh variable cannot be captured");
        let rel = match direction {
            Direction::Minimize => Rel::Lt,
            Direction::Maximize => Rel::Gt,
        };
        let better = Formula::and(renamed, Formula::atom(Term::Var(fresh.clone()), rel, Term::Var(x.clone())));
        let improvable = self.exists(&BTreeSet::from([fresh]), &better)?;
        self.simplify(&Formula::and(f.clone(), Formula::not(improvable)))
    }
}

/// Drops every constraint implied by the remaining ones. An infeasible
/// system becomes the single false constraint.
fn remove_redundant(s: &mut ConstraintSystem) {
    let all = vec![true; s.constraints.len()];
    remove_redundant_among(s, &all);
}

/// Like [`remove_redundant`], considering only the constraints marked in
/// `candidates` for removal.
fn remove_redundant_among(s: &mut ConstraintSystem, candidates: &[bool]) {
    if s.is_trivially_infeasible() {
        return;
    }
    if !s.is_feasible() {
        *s = ConstraintSystem::infeasible();
        return;
    }
    let mut marks = candidates.to_vec();
    let mut i = 0;
    while i < s.constraints.len() {
        if !marks[i] {
            i += 1;
            continue;
        }
        let c = s.constraints[i].clone();
        let others: Vec<LinearConstraint> =
            s.constraints.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
        let implied = c.negation().into_iter().all(|n| {
            let mut probe = others.clone();
            probe.push(n);
            !ConstraintSystem::new(probe).is_feasible()
        });
        if implied {
            s.constraints.remove(i);
            marks.remove(i);
        } else {
            i += 1;
        }
    }
}

fn implies(a: &ConstraintSystem, b: &ConstraintSystem) -> bool {
    b.constraints.iter().all(|c| {
        c.negation().into_iter().all(|n| {
            let mut probe = a.constraints.clone();
            probe.push(n);
            !ConstraintSystem::new(probe).is_feasible()
        })
    })
}

/// Disjunction of the systems, dropping disjuncts subsumed by another.
fn assemble(systems: Vec<ConstraintSystem>) -> Formula {
    let mut kept: Vec<ConstraintSystem> = Vec::new();
    for s in systems {
        if s.constraints.is_empty() {
            return Formula::truth();
        }
        if kept.iter().any(|k| implies(&s, k)) {
            continue;
        }
        kept.retain(|k| !implies(k, &s));
        kept.push(s);
    }
    Formula::disj(kept.iter().map(ConstraintSystem::to_formula))
}
