//! Accepting offers and issuing invoices.

use thiserror::Error;

use super::token::{ExtendedOffer, RuleOffer, Token};
use crate::config::ConfigType;
use crate::formula::{Formula, Rel, Term, Valuation, Var};
use crate::qe::{Qe, QeError};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invoice {
    pub session: Option<String>,
    pub accepted: Formula,
    pub token: Vec<u8>,
    /// Accepted sub-configurations, keyed by server path such as `s1` or
    /// `s1/t2`.
    pub subs: Vec<(String, Formula)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcceptError {
    #[error("acceptance does not imply the offer")]
    NotEntailing,
    #[error("acceptance does not fix parameter `{0}`")]
    UnderSpecified(Var),
    #[error("acceptance mentions `{0}`, which is not a parameter of the offer's type")]
    OutsideType(Var),
    #[error("acceptance is unsatisfiable")]
    Unsatisfiable,
    #[error("token was not issued for this session")]
    UnknownToken,
    #[error("recorded sub-offers do not support the accepted configuration")]
    Unsupported,
    #[error(transparent)]
    Resource(#[from] QeError),
}

fn point(values: &Valuation) -> Formula {
    Formula::conj(values.iter().map(|(v, c)| Formula::atom(Term::Var(v.clone()), Rel::Eq, Term::Const(c.clone()))))
}

/// Checks that `acceptance` implies the offer and fixes every parameter of
/// `ct`, then picks consistent values for every recorded sub-offer.
pub fn accept(offer: &ExtendedOffer, ct: &ConfigType, acceptance: &Formula, qe: &Qe) -> Result<Invoice, AcceptError> {
    let lang = ct.lang();
    if let Some(v) = acceptance.free_vars().into_iter().find(|v| !lang.contains(v)) {
        return Err(AcceptError::OutsideType(v));
    }
    let model = qe.find_model(acceptance)?.ok_or(AcceptError::Unsatisfiable)?;
    if !qe.entails(acceptance, &offer.formula)? {
        return Err(AcceptError::NotEntailing);
    }
    let mut values = Valuation::new();
    for x in &lang {
        let v = model.get(x).cloned().unwrap_or_else(|| Rational::from_integer(0.into()));
        let fixed = Formula::atom(Term::Var(x.clone()), Rel::Eq, Term::Const(v.clone()));
        if !qe.entails(acceptance, &fixed)? {
            return Err(AcceptError::UnderSpecified(x.clone()));
        }
        values.insert(x.clone(), v);
    }
    let mut subs = Vec::new();
    walk(offer, &values, "", qe, &mut subs)?;
    Ok(Invoice { session: None, accepted: acceptance.clone(), token: Vec::new(), subs })
}

fn walk(
    eo: &ExtendedOffer,
    values: &Valuation,
    path: &str,
    qe: &Qe,
    out: &mut Vec<(String, Formula)>,
) -> Result<(), AcceptError> {
    match &eo.token {
        Token::Opaque(_) => Ok(()),
        Token::Preferred { base, .. } => walk(base, values, path, qe, out),
        Token::Rule(ro) => walk_rule(ro, values, path, qe, out),
        Token::Sum(branches) => {
            let chosen = branches
                .iter()
                .find(|b| b.formula.evaluate(values).unwrap_or(false))
                .ok_or(AcceptError::Unsupported)?;
            walk_rule(chosen, values, path, qe, out)
        }
    }
}

fn walk_rule(
    ro: &RuleOffer,
    values: &Valuation,
    path: &str,
    qe: &Qe,
    out: &mut Vec<(String, Formula)>,
) -> Result<(), AcceptError> {
    let joint = Formula::and(point(values), ro.support());
    let model = qe.find_model(&joint)?.ok_or(AcceptError::Unsupported)?;
    for s in &ro.subs {
        let sub_values: Valuation = s
            .ct
            .lang()
            .into_iter()
            .map(|v| {
                let value = model.get(&v.with_prefix(&s.server)).cloned().unwrap_or_else(|| Rational::from_integer(0.into()));
                (v, value)
            })
            .collect();
        let sub_path = if path.is_empty() { s.server.clone() } else { format!("{path}/{}", s.server) };
        out.push((sub_path.clone(), point(&sub_values)));
        walk(&s.offer, &sub_values, &sub_path, qe, out)?;
    }
    Ok(())
}
