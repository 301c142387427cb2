//! Negotiators built from policies, leaf capabilities and scripts; extended
//! offers; acceptance.

mod accept;
mod negotiator;
mod parallel;
mod rule;
mod token;

pub use accept::{accept, AcceptError, Invoice};
pub use negotiator::{
    close, BindingError, ClosedNegotiator, LeafNegotiator, NegotiationFailure, Negotiator, ScriptedNegotiator,
    TraceEvent, TraceSink,
};
pub use parallel::analyze_parallel;
pub use rule::{final_offer, run_policy, run_rule, subquery, trigger_applicable, Bindings, Env, RuleError};
pub use token::{canonical, validate_token, ExtendedOffer, RuleOffer, SubOffer, Token, TokenStore};
