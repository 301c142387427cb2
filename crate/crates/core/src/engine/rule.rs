//! Executing core rules and composed policies against sub-negotiators.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread;

use thiserror::Error;
use tracing::{debug, warn};

use super::negotiator::{NegotiationFailure, Negotiator, TraceEvent, TraceSink};
use super::token::{ExtendedOffer, RuleOffer, SubOffer, Token};
use crate::formula::Formula;
use crate::policy::{CorePolicy, CoreRule};
use crate::qe::{Qe, QeError};

pub type Bindings = BTreeMap<String, Arc<dyn Negotiator>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("sub-negotiator `{server}` failed: {failure}")]
    Sub { server: String, failure: NegotiationFailure },
    #[error(transparent)]
    Resource(#[from] QeError),
}

/// Everything a rule needs besides the rule and the query.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub qe: &'a Qe,
    pub bindings: &'a Bindings,
    pub trace: Option<&'a TraceSink>,
    /// Name of the negotiator running the rule, for trace events.
    pub origin: &'a str,
}

impl Env<'_> {
    fn emit(&self, event: TraceEvent) {
        if let Some(sink) = self.trace {
            sink(&event);
        }
    }
}

pub fn trigger_applicable(rule: &CoreRule, q: &Formula, qe: &Qe) -> Result<bool, QeError> {
    qe.is_satisfiable(&Formula::and(q.clone(), rule.trigger.clone()))
}

/// The query for the `i`-th used server, over its prefixed parameters.
/// `prior` holds the (prefixed) offers of the servers queried before it.
///
/// # Panics
/// If the rule uses fewer than `i + 1` servers.
pub fn subquery(rule: &CoreRule, q: &Formula, prior: &[Formula], i: usize, qe: &Qe) -> Result<Formula, QeError> {
    assert!(i < rule.uses.len(), "rule uses {} servers; no server at index {i}", rule.uses.len());
    let mut parts = vec![q.clone(), rule.psi.clone()];
    parts.extend(prior.iter().cloned());
    let projected = qe.project(&Formula::conj(parts), &rule.prefixed_lang(i))?;
    qe.simplify(&projected)
}

/// The rule's offer given the (prefixed) offers of all used servers.
pub fn final_offer(rule: &CoreRule, offers: &[Formula], qe: &Qe) -> Result<Formula, QeError> {
    let mut parts = vec![rule.psi.clone()];
    parts.extend(offers.iter().cloned());
    let projected = qe.project(&Formula::conj(parts), &rule.ct.lang())?;
    qe.simplify(&projected)
}

/// Queries the servers at `order` one after another, each query
/// incorporating the offers already received. Stops at the first false
/// offer.
fn query_sequence(
    rule: &CoreRule,
    q: &Formula,
    order: &[usize],
    env: Env<'_>,
) -> Result<Vec<(usize, ExtendedOffer)>, RuleError> {
    let mut prior = Vec::new();
    let mut out = Vec::new();
    for &i in order {
        let (server, ct) = &rule.uses[i];
        let query = subquery(rule, q, &prior, i, env.qe)?.strip_prefix(server);
        env.emit(TraceEvent::Query { negotiator: env.origin.to_string(), server: server.clone(), formula: query.clone() });
        let negotiator = env.bindings.get(server).ok_or_else(|| RuleError::Sub {
            server: server.clone(),
            failure: NegotiationFailure::Unbound(server.clone()),
        })?;
        let offer = negotiator.query(&query).and_then(|eo| {
            if !eo.formula.is_quantifier_free() || !ct.is_formula_over(&eo.formula) {
                Err(NegotiationFailure::IllTyped(eo.formula.to_string()))
            } else {
                Ok(eo)
            }
        });
        let offer = match offer {
            Ok(eo) => eo,
            Err(failure) => {
                env.emit(TraceEvent::Failure {
                    negotiator: env.origin.to_string(),
                    server: server.clone(),
                    reason: failure.to_string(),
                });
                return Err(RuleError::Sub { server: server.clone(), failure });
            }
        };
        env.emit(TraceEvent::Offer {
            negotiator: env.origin.to_string(),
            server: server.clone(),
            formula: offer.formula.clone(),
        });
        let refused = offer.formula.is_false();
        prior.push(offer.formula.prefix_vars(server));
        out.push((i, offer));
        if refused {
            break;
        }
    }
    Ok(out)
}

/// Runs one rule. Without `groups` the used servers are queried in
/// declaration order; with `groups` each group is queried in its own thread
/// and the results are joined in declaration order.
pub fn run_rule(
    rule: &CoreRule,
    q: &Formula,
    groups: Option<&[Vec<usize>]>,
    env: Env<'_>,
) -> Result<RuleOffer, RuleError> {
    if !trigger_applicable(rule, q, env.qe)? {
        debug!(negotiator = env.origin, "rule not applicable");
        return Ok(RuleOffer::refused(&rule.ct));
    }
    let mut received: Vec<(usize, ExtendedOffer)> = match groups {
        Some(groups) if groups.len() > 1 => {
            let results: Vec<Result<Vec<(usize, ExtendedOffer)>, RuleError>> = thread::scope(|scope| {
                let handles: Vec<_> =
                    groups.iter().map(|g| scope.spawn(move || query_sequence(rule, q, g, env))).collect();
                handles.into_iter().map(|h| h.join().expect("sub-query thread panicked")).collect()
            });
            let mut all = Vec::new();
            for r in results {
                all.extend(r?);
            }
            all
        }
        _ => {
            let order: Vec<usize> = (0..rule.uses.len()).collect();
            query_sequence(rule, q, &order, env)?
        }
    };
    received.sort_by_key(|(i, _)| *i);
    let subs: Vec<SubOffer> = received
        .into_iter()
        .map(|(i, offer)| SubOffer { server: rule.uses[i].0.clone(), ct: rule.uses[i].1.clone(), offer })
        .collect();
    let formula = if subs.iter().any(|s| s.offer.formula.is_false()) {
        Formula::falsity()
    } else {
        let offers: Vec<Formula> = subs.iter().map(|s| s.offer.formula.prefix_vars(&s.server)).collect();
        final_offer(rule, &offers, env.qe)?
    };
    Ok(RuleOffer { formula, ct: rule.ct.clone(), condition: rule.psi.clone(), subs })
}

/// Runs every rule of the policy on the same query. A rule whose
/// sub-negotiator fails contributes a false offer.
pub fn run_policy(
    policy: &CorePolicy,
    q: &Formula,
    groups: Option<&[Vec<Vec<usize>>]>,
    env: Env<'_>,
) -> Result<ExtendedOffer, QeError> {
    let mut offers = Vec::new();
    for (k, rule) in policy.rules().into_iter().enumerate() {
        let g = groups.map(|gs| gs[k].as_slice());
        match run_rule(rule, q, g, env) {
            Ok(ro) => offers.push(ro),
            Err(RuleError::Resource(e)) => return Err(e),
            Err(RuleError::Sub { server, failure }) => {
                warn!(negotiator = env.origin, %server, %failure, "sub-negotiation failed; rule offers false");
                offers.push(RuleOffer::refused(&rule.ct));
            }
        }
    }
    let eo = match policy {
        CorePolicy::Rule(_) => {
            let ro = offers.pop().expect("one rule");
            ExtendedOffer { formula: ro.formula.clone(), token: Token::Rule(ro) }
        }
        CorePolicy::Compose(..) => {
            let formula = env.qe.simplify(&Formula::disj(offers.iter().map(|o| o.formula.clone())))?;
            ExtendedOffer { formula, token: Token::Sum(offers) }
        }
    };
    Ok(eo)
}
