//! Scenario files: a type registry, a set of named negotiators wired to each
//! other, and a list of queries to send.
//!
//! ```toml
//! registry = "storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}"
//!
//! [[negotiator]]
//! name = "broker"
//! kind = "policy"
//! policy_file = "broker.policy"
//! bindings = { s1 = "provider-a", s2 = "provider-b" }
//!
//! [[negotiator]]
//! name = "provider-a"
//! kind = "scripted"
//! type = "storage"
//! offers = ["capacity = 50 && price = 3"]
//!
//! [[step]]
//! target = "broker"
//! query = "capacity = 100 && price <= 5"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use nego_core::engine::validate_token;
use nego_core::{
    accept, close, compile_text, parse_formula, parse_registry, ConfigType, Formula, LeafNegotiator, Negotiator,
    Qe, ScriptedNegotiator, TraceEvent, TypeRegistry,
};
use nego_net::RemoteNegotiator;
use serde::Deserialize;
use tracing::debug;

use crate::error::{read, CliError};
use crate::report::{ScenarioReport, StepRecord};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub registry: Option<String>,
    #[serde(default)]
    pub registry_file: Option<PathBuf>,
    #[serde(default, rename = "negotiator")]
    pub negotiators: Vec<NegotiatorSpec>,
    #[serde(default, rename = "step")]
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NegotiatorSpec {
    Leaf {
        name: String,
        #[serde(rename = "type")]
        ty: String,
        capability: String,
    },
    Scripted {
        name: String,
        #[serde(rename = "type")]
        ty: String,
        offers: Vec<String>,
    },
    Policy {
        name: String,
        #[serde(default)]
        policy: Option<String>,
        #[serde(default)]
        policy_file: Option<PathBuf>,
        #[serde(default)]
        bindings: BTreeMap<String, String>,
        #[serde(default)]
        parallel: bool,
    },
    Remote {
        name: String,
        endpoint: String,
        /// Seconds.
        #[serde(default)]
        timeout: Option<f64>,
    },
}

impl NegotiatorSpec {
    pub fn name(&self) -> &str {
        match self {
            NegotiatorSpec::Leaf { name, .. }
            | NegotiatorSpec::Scripted { name, .. }
            | NegotiatorSpec::Policy { name, .. }
            | NegotiatorSpec::Remote { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub target: String,
    pub query: String,
    /// A configuration to accept from the offer.
    #[serde(default)]
    pub accept: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub qe: Qe,
    /// Used by remote negotiators that do not set their own.
    pub timeout: Duration,
    /// Where relative file references are resolved.
    pub base_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { qe: Qe::default(), timeout: nego_net::DEFAULT_TIMEOUT, base_dir: PathBuf::from(".") }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(format!("scenario: {}", e.message())))
    }

    /// Reads a scenario and returns it with the directory its relative paths
    /// are resolved against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let scenario = Self::parse(&read(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((scenario, base))
    }
}

/// A negotiator tree built from a scenario.
pub struct World {
    pub registry: TypeRegistry,
    pub negotiators: BTreeMap<String, Arc<dyn Negotiator>>,
    trace: Arc<Mutex<Vec<TraceEvent>>>,
}

impl World {
    pub fn negotiator(&self, name: &str) -> Option<&Arc<dyn Negotiator>> {
        self.negotiators.get(name)
    }

    fn take_trace(&self) -> Vec<TraceEvent> {
        std::mem::take(&mut *self.trace.lock().expect("trace poisoned"))
    }
}

fn formula(text: &str, what: &str) -> Result<Formula, CliError> {
    parse_formula(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}

struct Builder<'a> {
    specs: BTreeMap<&'a str, &'a NegotiatorSpec>,
    registry: &'a TypeRegistry,
    options: &'a RunOptions,
    built: BTreeMap<String, Arc<dyn Negotiator>>,
    visiting: BTreeSet<String>,
    trace: Arc<Mutex<Vec<TraceEvent>>>,
}

impl Builder<'_> {
    fn ty(&self, name: &str, owner: &str) -> Result<ConfigType, CliError> {
        self.registry
            .get(name)
            .cloned()
            .ok_or_else(|| CliError::Validation(format!("negotiator `{owner}` uses unknown type `{name}`")))
    }

    fn build(&mut self, name: &str) -> Result<Arc<dyn Negotiator>, CliError> {
        if let Some(n) = self.built.get(name) {
            return Ok(n.clone());
        }
        let spec = *self
            .specs
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("no negotiator named `{name}`")))?;
        if !self.visiting.insert(name.to_string()) {
            return Err(CliError::Validation(format!("negotiator `{name}` is bound to itself through its bindings")));
        }
        let qe = self.options.qe;
        let n: Arc<dyn Negotiator> = match spec {
            NegotiatorSpec::Leaf { ty, capability, .. } => {
                let ct = self.ty(ty, name)?;
                let capability = formula(capability, &format!("capability of `{name}`"))?;
                let leaf = LeafNegotiator::new(ct, capability, qe)
                    .map_err(|e| CliError::Validation(format!("negotiator `{name}`: {e}")))?;
                Arc::new(leaf)
            }
            NegotiatorSpec::Scripted { ty, offers, .. } => {
                let ct = self.ty(ty, name)?;
                let offers = offers
                    .iter()
                    .map(|o| formula(o, &format!("offer of `{name}`")))
                    .collect::<Result<Vec<_>, _>>()?;
                Arc::new(ScriptedNegotiator::new(ct, offers))
            }
            NegotiatorSpec::Remote { endpoint, timeout, .. } => {
                let timeout = timeout.map(Duration::from_secs_f64).unwrap_or(self.options.timeout);
                Arc::new(RemoteNegotiator::new(endpoint.clone(), timeout))
            }
            NegotiatorSpec::Policy { policy, policy_file, bindings, parallel, .. } => {
                let text = match (policy, policy_file) {
                    (Some(text), None) => text.clone(),
                    (None, Some(file)) => read(&self.options.base_dir.join(file))?,
                    _ => {
                        return Err(CliError::Validation(format!(
                            "negotiator `{name}` needs exactly one of `policy` and `policy_file`"
                        )))
                    }
                };
                let compiled = compile_text(&text, self.registry, &qe)?;
                let mut bound = BTreeMap::new();
                for (server, target) in bindings {
                    bound.insert(server.clone(), self.build(target)?);
                }
                let trace = self.trace.clone();
                let mut closed = close(compiled, bound, qe)
                    .map_err(|e| CliError::Validation(format!("negotiator `{name}`: {e}")))?
                    .with_name(name)
                    .with_trace(Arc::new(move |e: &TraceEvent| trace.lock().expect("trace poisoned").push(e.clone())));
                if *parallel {
                    closed = closed.with_parallel_queries()?;
                }
                Arc::new(closed)
            }
        };
        self.visiting.remove(name);
        self.built.insert(name.to_string(), n.clone());
        Ok(n)
    }
}

pub fn registry_of(scenario: &Scenario, base_dir: &Path) -> Result<TypeRegistry, CliError> {
    let text = match (&scenario.registry, &scenario.registry_file) {
        (Some(text), None) => text.clone(),
        (None, Some(file)) => read(&base_dir.join(file))?,
        (None, None) => String::new(),
        (Some(_), Some(_)) => {
            return Err(CliError::Validation("scenario sets both `registry` and `registry_file`".into()));
        }
    };
    Ok(parse_registry(&text)?)
}

/// Builds every negotiator the scenario declares.
pub fn build(scenario: &Scenario, options: &RunOptions) -> Result<World, CliError> {
    let registry = registry_of(scenario, &options.base_dir)?;
    let mut specs = BTreeMap::new();
    for spec in &scenario.negotiators {
        if specs.insert(spec.name(), spec).is_some() {
            return Err(CliError::Validation(format!("negotiator `{}` is declared twice", spec.name())));
        }
    }
    let trace = Arc::new(Mutex::new(Vec::new()));
    let mut builder = Builder {
        specs,
        registry: &registry,
        options,
        built: BTreeMap::new(),
        visiting: BTreeSet::new(),
        trace: trace.clone(),
    };
    for spec in &scenario.negotiators {
        builder.build(spec.name())?;
    }
    let negotiators = builder.built;
    Ok(World { registry, negotiators, trace })
}

/// Builds the scenario and runs its steps in order.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<ScenarioReport, CliError> {
    let world = build(scenario, options)?;
    let mut parsed = Vec::new();
    for (k, step) in scenario.steps.iter().enumerate() {
        let n = world
            .negotiator(&step.target)
            .ok_or_else(|| CliError::Validation(format!("step {}: no negotiator named `{}`", k + 1, step.target)))?;
        let q = formula(&step.query, &format!("step {} query", k + 1))?;
        let acc = step.accept.as_deref().map(|a| formula(a, &format!("step {} acceptance", k + 1))).transpose()?;
        parsed.push((step, n.clone(), q, acc));
    }
    let mut report = ScenarioReport::default();
    for (step, n, q, acc) in parsed {
        world.take_trace();
        let started = Instant::now();
        let result = n.query(&q);
        let mut record = StepRecord::new(&step.target, &q);
        match result {
            Ok(eo) => {
                record.token_valid = Some(validate_token(&eo, &options.qe)?);
                if let Some(acc) = &acc {
                    let ct = n.terms().map_err(|e| CliError::Validation(e.to_string()))?;
                    record.set_acceptance(accept(&eo, &ct, acc, &options.qe));
                }
                record.set_offer(eo.formula);
            }
            Err(failure) => record.failure = Some(failure.to_string()),
        }
        record.wall = started.elapsed();
        record.set_trace(world.take_trace());
        debug!(target = %record.target, offer = ?record.offer, "step done");
        report.steps.push(record);
    }
    Ok(report)
}
