//! Subcommand implementations. Each writes its output and returns the exit
//! code.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use nego_core::{
    close, compile, parse_formula, parse_policy, parse_registry, validate, Formula, LeafNegotiator, Negotiator, Qe,
    ScriptedNegotiator, TokenStore,
};
use nego_net::{serve_with, RemoteNegotiator, ServeOptions, ServerHandle};
use serde_json::json;
use tracing::info;

use crate::error::{exit, read, CliError};
use crate::scenario::{self, NegotiatorSpec, RunOptions, Scenario};

pub const TOKEN_KEY_VAR: &str = "NEGO_TOKEN_KEY";

pub const BROKER_SCENARIO: &str = include_str!("../scenarios/broker.toml");
pub const BROKER_TRACE: &str = include_str!("../scenarios/broker.trace");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub qe: Qe,
    pub timeout: Duration,
    pub trace: bool,
    pub format: Format,
}

impl Default for Options {
    fn default() -> Self {
        Options { qe: Qe::default(), timeout: nego_net::DEFAULT_TIMEOUT, trace: false, format: Format::Text }
    }
}

/// `-` reads the formula from standard input.
pub fn formula_arg(text: &str) -> Result<Formula, CliError> {
    if text == "-" {
        let mut buf = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut buf)?;
        Ok(parse_formula(buf.trim())?)
    } else {
        Ok(parse_formula(text)?)
    }
}

fn emit_formula(out: &mut dyn Write, opts: &Options, input: &Formula, output: &Formula) -> Result<i32, CliError> {
    match opts.format {
        Format::Text => writeln!(out, "{output}")?,
        Format::Structured => {
            writeln!(out, "{}", json!({ "input": input.to_string(), "output": output.to_string() }))?
        }
    }
    Ok(exit::OK)
}

pub fn qe(out: &mut dyn Write, opts: &Options, f: &Formula) -> Result<i32, CliError> {
    let r = opts.qe.simplify(&opts.qe.qe(f)?)?;
    emit_formula(out, opts, f, &r)
}

pub fn simplify(out: &mut dyn Write, opts: &Options, f: &Formula) -> Result<i32, CliError> {
    let r = opts.qe.simplify(f)?;
    emit_formula(out, opts, f, &r)
}

pub fn sat(out: &mut dyn Write, opts: &Options, f: &Formula) -> Result<i32, CliError> {
    let model = opts.qe.find_model(f)?;
    match opts.format {
        Format::Text => match &model {
            Some(m) if m.is_empty() => writeln!(out, "sat")?,
            Some(m) => {
                let values: Vec<String> = m.iter().map(|(v, c)| format!("{v} = {c}")).collect();
                writeln!(out, "sat: {}", values.join(", "))?
            }
            None => writeln!(out, "unsat")?,
        },
        Format::Structured => {
            let values: Option<BTreeMap<String, String>> =
                model.map(|m| m.iter().map(|(v, c)| (v.to_string(), c.to_string())).collect());
            writeln!(out, "{}", json!({ "satisfiable": values.is_some(), "model": values }))?
        }
    }
    Ok(exit::OK)
}

pub fn entails(out: &mut dyn Write, opts: &Options, premise: &Formula, conclusion: &Formula) -> Result<i32, CliError> {
    let yes = opts.qe.entails(premise, conclusion)?;
    match opts.format {
        Format::Text => writeln!(out, "{}", if yes { "yes" } else { "no" })?,
        Format::Structured => writeln!(out, "{}", json!({ "entails": yes }))?,
    }
    Ok(exit::OK)
}

/// Validates a policy against a registry. Exit 0 iff there is nothing to
/// report.
pub fn check(out: &mut dyn Write, opts: &Options, policy: &Path, registry: &Path) -> Result<i32, CliError> {
    let policy_text = read(policy)?;
    let registry = parse_registry(&read(registry)?)?;
    let p = parse_policy(&policy_text)?;
    let mut diags: Vec<(usize, usize, String, String)> =
        validate(&p, &registry).into_iter().map(|d| (d.line, d.column, d.code.to_string(), d.message)).collect();
    if diags.is_empty() {
        if let Err(e) = compile(&p, &registry, &opts.qe) {
            let e = CliError::from(e);
            if !matches!(e, CliError::Validation(_)) {
                return Err(e);
            }
            diags.push((0, 0, "compile".into(), e.to_string()));
        }
    }
    let name = policy.display();
    match opts.format {
        Format::Text => {
            for (line, column, code, message) in &diags {
                writeln!(out, "{name}:{line}:{column}: [{code}] {message}")?;
            }
            if diags.is_empty() {
                writeln!(out, "{name}: ok")?;
            }
        }
        Format::Structured => {
            let list: Vec<_> = diags
                .iter()
                .map(|(line, column, code, message)| json!({"line": line, "column": column, "code": code, "message": message}))
                .collect();
            writeln!(out, "{}", json!({ "policy": name.to_string(), "diagnostics": list }))?;
        }
    }
    Ok(if diags.is_empty() { exit::OK } else { exit::VALIDATION })
}

pub fn negotiate(out: &mut dyn Write, opts: &Options, scenario: &Scenario, base_dir: &Path) -> Result<i32, CliError> {
    let run = RunOptions { qe: opts.qe, timeout: opts.timeout, base_dir: base_dir.to_path_buf() };
    let report = scenario::run(scenario, &run)?;
    match opts.format {
        Format::Text => write!(out, "{}", report.render_text(opts.trace))?,
        Format::Structured => writeln!(out, "{}", report.render_structured())?,
    }
    Ok(exit::OK)
}

/// A sub-negotiator for `serve`, written `remote:HOST:PORT`, `leaf:FORMULA`
/// or `scripted:FORMULA;FORMULA;...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindingSpec {
    Remote(String),
    Leaf(String),
    Scripted(Vec<String>),
}

pub fn parse_binding(arg: &str) -> Result<(String, BindingSpec), CliError> {
    let bad = || CliError::Parse(format!("binding `{arg}` is not SERVER=remote:ADDR, SERVER=leaf:FORMULA or SERVER=scripted:FORMULAS"));
    let (server, spec) = arg.split_once('=').ok_or_else(bad)?;
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    let spec = match kind.trim() {
        "remote" => BindingSpec::Remote(rest.trim().to_string()),
        "leaf" => BindingSpec::Leaf(rest.trim().to_string()),
        "scripted" => BindingSpec::Scripted(rest.split(';').map(|s| s.trim().to_string()).collect()),
        _ => return Err(bad()),
    };
    Ok((server.trim().to_string(), spec))
}

fn token_store() -> TokenStore {
    match std::env::var(TOKEN_KEY_VAR) {
        Ok(key) if !key.is_empty() => TokenStore::new(key.into_bytes()),
        _ => TokenStore::random(),
    }
}

/// Compiles the policy, binds its servers and starts serving it.
pub fn start_server(
    opts: &Options,
    policy: &Path,
    registry: &Path,
    bindings: &[String],
    listen: &str,
) -> Result<ServerHandle, CliError> {
    let registry = parse_registry(&read(registry)?)?;
    let compiled = nego_core::compile_text(&read(policy)?, &registry, &opts.qe)?;
    let expected: BTreeMap<String, nego_core::ConfigType> = compiled.core.servers().into_iter().collect();
    let mut bound: BTreeMap<String, Arc<dyn Negotiator>> = BTreeMap::new();
    for arg in bindings {
        let (server, spec) = parse_binding(arg)?;
        let ct = expected
            .get(&server)
            .ok_or_else(|| CliError::Validation(format!("the policy uses no server named `{server}`")))?
            .clone();
        let n: Arc<dyn Negotiator> = match spec {
            BindingSpec::Remote(endpoint) => Arc::new(RemoteNegotiator::new(endpoint, opts.timeout)),
            BindingSpec::Leaf(capability) => Arc::new(
                LeafNegotiator::new(ct, parse_formula(&capability)?, opts.qe)
                    .map_err(|e| CliError::Validation(format!("server `{server}`: {e}")))?,
            ),
            BindingSpec::Scripted(offers) => {
                let offers = offers.iter().map(|o| parse_formula(o)).collect::<Result<Vec<_>, _>>()?;
                Arc::new(ScriptedNegotiator::new(ct, offers))
            }
        };
        bound.insert(server, n);
    }
    let negotiator = close(compiled, bound, opts.qe).map_err(|e| CliError::Validation(e.to_string()))?;
    let options = ServeOptions { qe: opts.qe, tokens: Arc::new(token_store()) };
    let handle = serve_with(Arc::new(negotiator), listen, options)?;
    info!(addr = %handle.local_addr(), "negotiation server started");
    Ok(handle)
}

/// Runs the bundled storage-broker scenario in process, then again with
/// both providers behind loopback servers, and compares the offers.
pub fn demo(out: &mut dyn Write, opts: &Options) -> Result<i32, CliError> {
    let scenario = Scenario::parse(BROKER_SCENARIO)?;
    let run = RunOptions { qe: opts.qe, timeout: opts.timeout, ..RunOptions::default() };
    let local = scenario::run(&scenario, &run)?;

    let remote_scenario = with_remote_providers(&scenario, &run)?;
    let remote = scenario::run(&remote_scenario.0, &run)?;
    drop(remote_scenario.1);

    let same = local.steps.iter().zip(&remote.steps).all(|(a, b)| match (&a.offer_formula, &b.offer_formula) {
        (Some(x), Some(y)) => opts.qe.equivalent(x, y).unwrap_or(false),
        _ => false,
    });
    match opts.format {
        Format::Text => {
            writeln!(out, "== in process")?;
            write!(out, "{}", local.render_text(true))?;
            writeln!(out, "== providers over loopback")?;
            write!(out, "{}", remote.render_text(opts.trace))?;
            writeln!(out, "offers equivalent: {}", if same { "yes" } else { "NO" })?;
        }
        Format::Structured => {
            let local: serde_json::Value = serde_json::from_str(&local.render_structured()).expect("valid json");
            let remote: serde_json::Value = serde_json::from_str(&remote.render_structured()).expect("valid json");
            writeln!(out, "{}", json!({ "local": local, "remote": remote, "equivalent": same }))?;
        }
    }
    Ok(exit::OK)
}

/// The scenario with every non-policy negotiator served on loopback and
/// replaced by a remote binding. The servers stop when the handles drop.
pub fn with_remote_providers(
    scenario: &Scenario,
    run: &RunOptions,
) -> Result<(Scenario, Vec<ServerHandle>), CliError> {
    let world = scenario::build(scenario, run)?;
    let mut servers = Vec::new();
    let mut out = scenario.clone();
    for spec in &mut out.negotiators {
        if matches!(spec, NegotiatorSpec::Policy { .. } | NegotiatorSpec::Remote { .. }) {
            continue;
        }
        let name = spec.name().to_string();
        let n = world.negotiator(&name).expect("built").clone();
        let handle = serve_with(n, "127.0.0.1:0", ServeOptions { qe: run.qe, ..ServeOptions::default() })?;
        *spec = NegotiatorSpec::Remote { name, endpoint: handle.local_addr().to_string(), timeout: None };
        servers.push(handle);
    }
    Ok((out, servers))
}
