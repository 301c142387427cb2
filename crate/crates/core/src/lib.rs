//! Logic, quantifier elimination, policy language and negotiator engine for
//! hierarchical service negotiation over linear rational arithmetic.

pub mod config;
pub mod engine;
pub mod formula;
pub mod linear;
pub mod policy;
pub mod qe;
pub mod random;
pub mod rational;
pub mod syntax;

pub use config::{parse_config_type, parse_registry, BasicType, ConfigError, ConfigType, TypeRegistry};
pub use engine::{
    accept, close, AcceptError, BindingError, ClosedNegotiator, ExtendedOffer, Invoice, LeafNegotiator,
    NegotiationFailure, Negotiator, ScriptedNegotiator, Token, TokenStore, TraceEvent, TraceSink,
};
pub use formula::{CaptureError, DnfError, EvalError, Formula, Rel, Term, Valuation, Var};
pub use policy::{
    compile, compile_text, parse_policy, to_core, validate, CompiledPolicy, CorePolicy, CoreRule, Diagnostic, Policy,
    PolicyError,
};
pub use qe::{Direction, Qe, QeError, DEFAULT_DNF_CAP};
pub use rational::Rational;
pub use syntax::{parse_formula, parse_term, ParseError};
