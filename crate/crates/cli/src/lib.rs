//! Command-line front end: formula tools, policy checking, scenario runs and
//! negotiation servers.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{Format, Options};
pub use error::{exit, CliError};
pub use report::{parse_trace_line, trace_line, ScenarioReport, StepRecord, TraceLine};
pub use scenario::{NegotiatorSpec, RunOptions, Scenario, Step, World};
