//! Negotiators: agents that answer queries with offers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;
use tracing::{debug, warn};

use super::parallel::analyze_parallel;
use super::rule::{run_policy, Bindings, Env};
use super::token::{ExtendedOffer, Token};
use crate::config::ConfigType;
use crate::formula::Formula;
use crate::policy::CompiledPolicy;
use crate::qe::{Qe, QeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NegotiationFailure {
    #[error("negotiator unavailable: {0}")]
    Unavailable(String),
    #[error("no reply within {0:?}")]
    Timeout(std::time::Duration),
    #[error("no negotiator bound to `{0}`")]
    Unbound(String),
    #[error("script exhausted after {0} offers")]
    ScriptExhausted(usize),
    #[error("query is not a quantifier-free formula over the negotiator's type: {0}")]
    BadQuery(String),
    #[error("offer is not a quantifier-free formula over the expected type: {0}")]
    IllTyped(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("remote negotiator rejected the request: {0}")]
    Rejected(String),
    #[error(transparent)]
    Resource(#[from] QeError),
}

/// An agent with a query port and an offer port.
pub trait Negotiator: Send + Sync {
    /// The configuration type queries and offers range over.
    fn terms(&self) -> Result<ConfigType, NegotiationFailure>;

    fn query(&self, q: &Formula) -> Result<ExtendedOffer, NegotiationFailure>;
}

/// Observable steps of a negotiation, in the order they happen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Query { negotiator: String, server: String, formula: Formula },
    Offer { negotiator: String, server: String, formula: Formula },
    Failure { negotiator: String, server: String, reason: String },
    Final { negotiator: String, formula: Formula },
}

pub type TraceSink = Arc<dyn Fn(&TraceEvent) + Send + Sync>;

fn check_query(ct: &ConfigType, q: &Formula) -> Result<(), NegotiationFailure> {
    if q.is_quantifier_free() && ct.is_formula_over(q) {
        Ok(())
    } else {
        Err(NegotiationFailure::BadQuery(q.to_string()))
    }
}

/// Answers every query from a fixed capability: the query strengthened by
/// the capability if the two are compatible, false otherwise.
pub struct LeafNegotiator {
    ct: ConfigType,
    capability: Formula,
    qe: Qe,
}

impl LeafNegotiator {
    pub fn new(ct: ConfigType, capability: Formula, qe: Qe) -> Result<Self, NegotiationFailure> {
        check_query(&ct, &capability).map_err(|_| NegotiationFailure::IllTyped(capability.to_string()))?;
        Ok(LeafNegotiator { ct, capability, qe })
    }

    pub fn offer(&self, q: &Formula) -> Result<Formula, QeError> {
        let both = Formula::and(q.clone(), self.capability.clone());
        if self.qe.is_satisfiable(&both)? {
            self.qe.simplify(&both)
        } else {
            Ok(Formula::falsity())
        }
    }
}

impl Negotiator for LeafNegotiator {
    fn terms(&self) -> Result<ConfigType, NegotiationFailure> {
        Ok(self.ct.clone())
    }

    fn query(&self, q: &Formula) -> Result<ExtendedOffer, NegotiationFailure> {
        check_query(&self.ct, q)?;
        Ok(ExtendedOffer::opaque(self.offer(q)?))
    }
}

/// Replies with a fixed sequence of offers, whatever the query.
pub struct ScriptedNegotiator {
    ct: ConfigType,
    script: Vec<Formula>,
    next: AtomicUsize,
}

impl ScriptedNegotiator {
    pub fn new(ct: ConfigType, script: Vec<Formula>) -> Self {
        ScriptedNegotiator { ct, script, next: AtomicUsize::new(0) }
    }
}

impl Negotiator for ScriptedNegotiator {
    fn terms(&self) -> Result<ConfigType, NegotiationFailure> {
        Ok(self.ct.clone())
    }

    fn query(&self, _q: &Formula) -> Result<ExtendedOffer, NegotiationFailure> {
        let n = self.next.fetch_add(1, Ordering::SeqCst);
        match self.script.get(n) {
            Some(f) => Ok(ExtendedOffer::opaque(f.clone())),
            None => Err(NegotiationFailure::ScriptExhausted(self.script.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("no negotiator bound to server `{0}`")]
    Missing(String),
    #[error("server `{server}` is expected to serve `{expected}` but offers `{found}`")]
    TypeMismatch { server: String, expected: String, found: String },
    #[error(transparent)]
    Resource(#[from] QeError),
}

/// A policy closed over sub-negotiators: a negotiator answering each query
/// with the policy's offer.
pub struct ClosedNegotiator {
    name: String,
    policy: CompiledPolicy,
    bindings: Bindings,
    qe: Qe,
    trace: Option<TraceSink>,
    groups: Option<Vec<Vec<Vec<usize>>>>,
}

/// Binds every server the policy uses. Bindings whose terms cannot be
/// fetched yet are accepted with a warning; failures surface per query.
pub fn close(policy: CompiledPolicy, bindings: Bindings, qe: Qe) -> Result<ClosedNegotiator, BindingError> {
    for (server, expected) in policy.core.servers() {
        let n = bindings.get(&server).ok_or_else(|| BindingError::Missing(server.clone()))?;
        match n.terms() {
            Ok(found) => {
                if !expected.same_terms(&found, &qe)? {
                    return Err(BindingError::TypeMismatch {
                        server,
                        expected: expected.display_name(),
                        found: found.display_name(),
                    });
                }
            }
            Err(e) => warn!(%server, error = %e, "cannot check the terms of a bound negotiator"),
        }
    }
    Ok(ClosedNegotiator { name: policy.name.clone(), policy, bindings, qe, trace: None, groups: None })
}

impl ClosedNegotiator {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_trace(mut self, sink: TraceSink) -> Self {
        self.trace = Some(sink);
        self
    }

    /// Queries independent groups of sub-negotiators concurrently.
    pub fn with_parallel_queries(mut self) -> Result<Self, QeError> {
        let groups = self
            .policy
            .core
            .rules()
            .into_iter()
            .map(|r| analyze_parallel(r, &self.qe))
            .collect::<Result<Vec<_>, _>>()?;
        debug!(negotiator = %self.name, ?groups, "parallel query groups");
        self.groups = Some(groups);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn policy(&self) -> &CompiledPolicy {
        &self.policy
    }
}

impl Negotiator for ClosedNegotiator {
    fn terms(&self) -> Result<ConfigType, NegotiationFailure> {
        Ok(self.policy.core.ct().clone())
    }

    fn query(&self, q: &Formula) -> Result<ExtendedOffer, NegotiationFailure> {
        check_query(self.policy.core.ct(), q)?;
        let env = Env { qe: &self.qe, bindings: &self.bindings, trace: self.trace.as_ref(), origin: &self.name };
        let base = run_policy(&self.policy.core, q, self.groups.as_deref(), env)?;
        let eo = if self.policy.preferences.is_empty() {
            base
        } else {
            let mut formula = base.formula.clone();
            for (x, d) in &self.policy.preferences {
                formula = self.qe.apply_preference(&formula, x, *d)?;
            }
            ExtendedOffer {
                formula,
                token: Token::Preferred { base: Box::new(base), preferences: self.policy.preferences.clone() },
            }
        };
        if let Some(sink) = &self.trace {
            sink(&TraceEvent::Final { negotiator: self.name.clone(), formula: eo.formula.clone() });
        }
        Ok(eo)
    }
}
