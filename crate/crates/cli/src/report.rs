//! Scenario reports and trace lines.

use std::fmt::Write as _;
use std::time::Duration;

use nego_core::{parse_formula, AcceptError, Formula, Invoice, ParseError, TraceEvent};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct InvoiceRecord {
    pub accepted: String,
    pub subs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub target: String,
    pub query: String,
    pub offer: Option<String>,
    pub failure: Option<String>,
    pub token_valid: Option<bool>,
    pub invoice: Option<InvoiceRecord>,
    pub acceptance_error: Option<String>,
    pub trace: Vec<String>,
    #[serde(rename = "wall_ms", serialize_with = "millis")]
    pub wall: Duration,
    #[serde(skip)]
    pub offer_formula: Option<Formula>,
    #[serde(skip)]
    pub events: Vec<TraceEvent>,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

impl StepRecord {
    pub fn new(target: &str, query: &Formula) -> Self {
        StepRecord {
            target: target.to_string(),
            query: query.to_string(),
            offer: None,
            failure: None,
            token_valid: None,
            invoice: None,
            acceptance_error: None,
            trace: Vec::new(),
            wall: Duration::ZERO,
            offer_formula: None,
            events: Vec::new(),
        }
    }

    pub fn set_offer(&mut self, f: Formula) {
        self.offer = Some(f.to_string());
        self.offer_formula = Some(f);
    }

    pub fn set_acceptance(&mut self, result: Result<Invoice, AcceptError>) {
        match result {
            Ok(inv) => {
                self.invoice = Some(InvoiceRecord {
                    accepted: inv.accepted.to_string(),
                    subs: inv.subs.iter().map(|(p, f)| (p.clone(), f.to_string())).collect(),
                })
            }
            Err(e) => self.acceptance_error = Some(e.to_string()),
        }
    }

    pub fn set_trace(&mut self, events: Vec<TraceEvent>) {
        self.trace = events.iter().map(trace_line).collect();
        self.events = events;
    }

    pub fn refused(&self) -> bool {
        self.offer_formula.as_ref().is_some_and(Formula::is_false)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub offers: usize,
    pub refused: usize,
    pub failed: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ScenarioReport {
    pub steps: Vec<StepRecord>,
}

impl ScenarioReport {
    pub fn summary(&self) -> Summary {
        Summary {
            steps: self.steps.len(),
            offers: self.steps.iter().filter(|s| s.offer.is_some() && !s.refused()).count(),
            refused: self.steps.iter().filter(|s| s.refused()).count(),
            failed: self.steps.iter().filter(|s| s.failure.is_some()).count(),
            wall_ms: self.steps.iter().map(|s| s.wall).sum::<Duration>().as_secs_f64() * 1000.0,
        }
    }

    pub fn render_text(&self, trace: bool) -> String {
        let mut out = String::new();
        for (k, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step {}: {} ? {}", k + 1, s.target, s.query);
            if trace {
                for line in &s.trace {
                    let _ = writeln!(out, "  | {line}");
                }
            }
            if let Some(offer) = &s.offer {
                let _ = writeln!(out, "  offer:   {offer}");
            }
            if let Some(failure) = &s.failure {
                let _ = writeln!(out, "  failure: {failure}");
            }
            if let Some(valid) = s.token_valid {
                let _ = writeln!(out, "  token:   {}", if valid { "valid" } else { "INVALID" });
            }
            if let Some(inv) = &s.invoice {
                let _ = writeln!(out, "  invoice: {}", inv.accepted);
                for (path, f) in &inv.subs {
                    let _ = writeln!(out, "    {path}: {f}");
                }
            }
            if let Some(e) = &s.acceptance_error {
                let _ = writeln!(out, "  not accepted: {e}");
            }
            let _ = writeln!(out, "  time:    {:.1} ms", s.wall.as_secs_f64() * 1000.0);
        }
        let sum = self.summary();
        let _ = writeln!(
            out,
            "{} steps: {} offers, {} refused, {} failed ({:.1} ms)",
            sum.steps, sum.offers, sum.refused, sum.failed, sum.wall_ms
        );
        out
    }

    pub fn render_structured(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            steps: &'a [StepRecord],
            summary: Summary,
        }
        serde_json::to_string_pretty(&Out { steps: &self.steps, summary: self.summary() })
            .expect("reports serialize")
    }
}

/// One trace event as a line: who talks to whom, what kind of message, and
/// its content.
pub fn trace_line(e: &TraceEvent) -> String {
    match e {
        TraceEvent::Query { negotiator, server, formula } => format!("{negotiator} -> {server}: query {formula}"),
        TraceEvent::Offer { negotiator, server, formula } => format!("{server} -> {negotiator}: offer {formula}"),
        TraceEvent::Failure { negotiator, server, reason } => format!("{server} -> {negotiator}: failure {reason}"),
        TraceEvent::Final { negotiator, formula } => format!("{negotiator} -> client: offer {formula}"),
    }
}

/// A trace line taken apart into its header, its kind and its formula.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub header: String,
    pub kind: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceLineError {
    #[error("trace line `{0}` has no `sender -> receiver: kind` header")]
    Shape(String),
    #[error("trace line `{line}`: {source}")]
    Formula { line: String, source: ParseError },
}

pub fn parse_trace_line(line: &str) -> Result<TraceLine, TraceLineError> {
    let shape = || TraceLineError::Shape(line.to_string());
    let (header, rest) = line.split_once(": ").ok_or_else(shape)?;
    let (kind, body) = rest.split_once(' ').ok_or_else(shape)?;
    if !header.contains(" -> ") || !matches!(kind, "query" | "offer") {
        return Err(shape());
    }
    let formula = parse_formula(body).map_err(|source| TraceLineError::Formula { line: line.to_string(), source })?;
    Ok(TraceLine { header: header.to_string(), kind: kind.to_string(), formula })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn trace_lines_round_trip() {
        let events = [
            TraceEvent::Query { negotiator: "broker".into(), server: "s1".into(), formula: f("capacity <= 100") },
            TraceEvent::Offer { negotiator: "broker".into(), server: "s1".into(), formula: f("capacity = 50") },
            TraceEvent::Final { negotiator: "broker".into(), formula: f("capacity = 100") },
        ];
        let parsed: Vec<TraceLine> = events.iter().map(|e| parse_trace_line(&trace_line(e)).unwrap()).collect();
        assert_eq!(parsed[0].header, "broker -> s1");
        assert_eq!(parsed[1].header, "s1 -> broker");
        assert_eq!(parsed[2].header, "broker -> client");
        assert_eq!(parsed[1].formula, f("capacity = 50"));
    }

    #[test]
    fn malformed_trace_lines() {
        assert!(matches!(parse_trace_line("hello"), Err(TraceLineError::Shape(_))));
        assert!(matches!(parse_trace_line("a -> b: shout x = 1"), Err(TraceLineError::Shape(_))));
        assert!(matches!(parse_trace_line("a -> b: query x ="), Err(TraceLineError::Formula { .. })));
    }

    #[test]
    fn summary_counts() {
        let mut a = StepRecord::new("n", &f("x = 1"));
        a.set_offer(f("x = 1"));
        let mut b = StepRecord::new("n", &f("x = 2"));
        b.set_offer(Formula::falsity());
        let mut c = StepRecord::new("n", &f("x = 3"));
        c.failure = Some("down".into());
        let report = ScenarioReport { steps: vec![a, b, c] };
        let s = report.summary();
        assert_eq!((s.steps, s.offers, s.refused, s.failed), (3, 1, 1, 1));
        assert!(report.render_text(false).contains("3 steps: 1 offers, 1 refused, 1 failed"));
        let json: serde_json::Value = serde_json::from_str(&report.render_structured()).unwrap();
        assert_eq!(json["summary"]["refused"], 1);
    }
}
