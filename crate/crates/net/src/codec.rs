//! Frames of the line protocol.
//!
//! One frame per line: `NEGO/1 <TYPE> <session-id> <payload>`, payload fields
//! separated by tabs. Backslash, tab, newline and carriage return are escaped
//! in every field; spaces are also escaped in the session id.

use nego_core::{parse_config_type, parse_formula, ConfigType, Formula, Invoice};
use thiserror::Error;

pub const VERSION: &str = "NEGO/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Init { session: String },
    Terms { session: String, ct: ConfigType },
    Query { session: String, query: Formula },
    Offer { session: String, offer: Formula, token: Vec<u8> },
    Accept { session: String, acceptance: Formula, token: Vec<u8> },
    /// The invoice's own session field always equals the frame's.
    Invoice { session: String, invoice: Invoice },
    Reject { session: String, reason: String },
    Terminate { session: String, reason: String },
}

impl Message {
    pub fn session(&self) -> &str {
        match self {
            Message::Init { session }
            | Message::Terms { session, .. }
            | Message::Query { session, .. }
            | Message::Offer { session, .. }
            | Message::Accept { session, .. }
            | Message::Invoice { session, .. }
            | Message::Reject { session, .. }
            | Message::Terminate { session, .. } => session,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Init { .. } => "INIT",
            Message::Terms { .. } => "TERMS",
            Message::Query { .. } => "QUERY",
            Message::Offer { .. } => "OFFER",
            Message::Accept { .. } => "ACCEPT",
            Message::Invoice { .. } => "INVOICE",
            Message::Reject { .. } => "REJECT",
            Message::Terminate { .. } => "TERMINATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed frame `{line}`: {reason}")]
pub struct FrameError {
    pub line: String,
    pub reason: String,
}

fn escape(s: &str, space: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' if space => out.push_str("\\s"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('s') => out.push(' '),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

/// The frame for `m`, without the terminating newline.
pub fn encode(m: &Message) -> String {
    let fields: Vec<String> = match m {
        Message::Init { .. } => Vec::new(),
        Message::Terms { ct, .. } => vec![ct.name.clone().unwrap_or_default(), ct.to_string()],
        Message::Query { query, .. } => vec![query.to_string()],
        Message::Offer { offer, token, .. } => vec![offer.to_string(), hex::encode(token)],
        Message::Accept { acceptance, token, .. } => vec![acceptance.to_string(), hex::encode(token)],
        Message::Invoice { invoice, .. } => {
            let mut fields = vec![invoice.accepted.to_string(), hex::encode(&invoice.token)];
            for (path, f) in &invoice.subs {
                fields.push(path.clone());
                fields.push(f.to_string());
            }
            fields
        }
        Message::Reject { reason, .. } | Message::Terminate { reason, .. } => vec![reason.clone()],
    };
    let payload: Vec<String> = fields.iter().map(|f| escape(f, false)).collect();
    let mut line = format!("{VERSION} {} {}", m.kind(), escape(m.session(), true));
    if !payload.is_empty() {
        line.push(' ');
        line.push_str(&payload.join("\t"));
    }
    line
}

pub fn decode(line: &str) -> Result<Message, FrameError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    decode_inner(line).map_err(|reason| FrameError { line: line.to_string(), reason })
}

fn formula(s: &str) -> Result<Formula, String> {
    parse_formula(s).map_err(|e| e.to_string())
}

fn token(s: &str) -> Result<Vec<u8>, String> {
    hex::decode(s).map_err(|e| format!("bad token: {e}"))
}

fn decode_inner(line: &str) -> Result<Message, String> {
    let mut parts = line.splitn(4, ' ');
    match parts.next() {
        Some(VERSION) => {}
        Some(other) => return Err(format!("unsupported protocol `{other}`")),
        None => return Err("empty frame".into()),
    }
    let kind = parts.next().ok_or("missing frame type")?;
    let session = unescape(parts.next().ok_or("missing session id")?)?;
    let payload = parts.next();
    let fields: Vec<String> = match payload {
        None => Vec::new(),
        Some(p) => p.split('\t').map(unescape).collect::<Result<_, _>>()?,
    };
    let arity = |n: usize| -> Result<(), String> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(format!("{kind} takes {n} payload fields, found {}", fields.len()))
        }
    };
    let m = match kind {
        "INIT" => {
            arity(0)?;
            Message::Init { session }
        }
        "TERMS" => {
            arity(2)?;
            let mut ct = parse_config_type(&fields[1]).map_err(|e| e.to_string())?;
            ct.name = if fields[0].is_empty() { None } else { Some(fields[0].clone()) };
            Message::Terms { session, ct }
        }
        "QUERY" => {
            arity(1)?;
            Message::Query { session, query: formula(&fields[0])? }
        }
        "OFFER" => {
            arity(2)?;
            Message::Offer { session, offer: formula(&fields[0])?, token: token(&fields[1])? }
        }
        "ACCEPT" => {
            arity(2)?;
            Message::Accept { session, acceptance: formula(&fields[0])?, token: token(&fields[1])? }
        }
        "INVOICE" => {
            if fields.len() < 2 || !fields.len().is_multiple_of(2) {
                return Err(format!("INVOICE takes an even number of at least 2 payload fields, found {}", fields.len()));
            }
            let subs = fields[2..]
                .chunks(2)
                .map(|pair| Ok((pair[0].clone(), formula(&pair[1])?)))
                .collect::<Result<Vec<_>, String>>()?;
            let invoice = Invoice {
                session: Some(session.clone()),
                accepted: formula(&fields[0])?,
                token: token(&fields[1])?,
                subs,
            };
            Message::Invoice { session, invoice }
        }
        "REJECT" | "TERMINATE" => {
            // A missing payload is an empty reason.
            let reason = match fields.len() {
                0 => String::new(),
                1 => fields[0].clone(),
                n => return Err(format!("{kind} takes 1 payload field, found {n}")),
            };
            if kind == "REJECT" {
                Message::Reject { session, reason }
            } else {
                Message::Terminate { session, reason }
            }
        }
        other => return Err(format!("unknown frame type `{other}`")),
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn query_round_trips() {
        let m = Message::Query { session: "s-1".into(), query: f("capacity = 100 && price <= 5") };
        let line = encode(&m);
        assert_eq!(line, "NEGO/1 QUERY s-1 capacity = 100 && price <= 5");
        assert_eq!(decode(&line).unwrap(), m);
    }

    #[test]
    fn offer_token_is_hex() {
        let m = Message::Offer { session: "a".into(), offer: f("x < 5 && x > 0"), token: vec![0, 1, 0xfe, 0xff] };
        let line = encode(&m);
        assert!(line.ends_with("\t0001feff"), "{line}");
        assert_eq!(decode(&line).unwrap(), m);
    }

    #[test]
    fn awkward_session_ids_and_reasons() {
        let m = Message::Reject { session: "a b\tc\\".into(), reason: "line one\nline\ttwo \\ end".into() };
        let line = encode(&m);
        assert!(!line.contains('\n'));
        assert_eq!(decode(&line).unwrap(), m);
        let empty = Message::Terminate { session: String::new(), reason: String::new() };
        assert_eq!(decode(&encode(&empty)).unwrap(), empty);
    }

    #[test]
    fn terms_keep_the_type_name() {
        let mut ct = parse_config_type("{capacity: decimal, price: decimal; capacity >= 0 && price >= 0}").unwrap();
        ct.name = Some("storage".into());
        let m = Message::Terms { session: "s".into(), ct };
        assert_eq!(decode(&encode(&m)).unwrap(), m);
    }

    #[test]
    fn invoice_round_trips() {
        let invoice = Invoice {
            session: Some("s".into()),
            accepted: f("capacity = 100 && price = 4"),
            token: vec![7; 4],
            subs: vec![("s1".into(), f("capacity = 50 && price = 3")), ("s1/t".into(), f("load = 1"))],
        };
        let m = Message::Invoice { session: "s".into(), invoice };
        assert_eq!(decode(&encode(&m)).unwrap(), m);
    }

    #[test]
    fn trailing_newline_is_ignored() {
        assert_eq!(decode("NEGO/1 INIT abc\r\n").unwrap(), Message::Init { session: "abc".into() });
    }

    #[test]
    fn truncated_frames_are_malformed() {
        for line in ["", "NEGO/1", "NEGO/1 QUERY", "NEGO/1 QUERY s", "NEGO/1 OFFER s x < 1", "NEGO/1 QUERY s x <"] {
            let err = decode(line).unwrap_err();
            assert_eq!(err.line, line);
        }
    }

    #[test]
    fn foreign_frames_are_malformed() {
        assert!(decode("HTTP/1.1 GET /").is_err());
        assert!(decode("NEGO/1 HELLO s").is_err());
        assert!(decode("NEGO/1 OFFER s x < 1\tzz").is_err());
        assert!(decode("NEGO/1 INIT s extra").is_err());
        assert!(decode("NEGO/1 REJECT s bad\\q").is_err());
    }
}
