//! Client sessions and negotiators living behind a remote endpoint.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::time::Duration;

use nego_core::{ConfigType, ExtendedOffer, Formula, Invoice, NegotiationFailure, Negotiator, Token};
use thiserror::Error;
use tracing::debug;

use crate::codec::{decode, encode, FrameError, Message};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach {endpoint}: {source}")]
    Connect { endpoint: String, source: io::Error },
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("server closed the session")]
    Closed,
    #[error("server rejected the request: {0}")]
    Rejected(String),
    #[error("server terminated the session: {0}")]
    Terminated(String),
    #[error("expected {expected}, got {got}")]
    Unexpected { expected: &'static str, got: String },
}

impl From<ClientError> for NegotiationFailure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Timeout(d) => NegotiationFailure::Timeout(d),
            ClientError::Rejected(r) => NegotiationFailure::Rejected(r),
            e @ (ClientError::Connect { .. } | ClientError::Io(_) | ClientError::Closed | ClientError::Terminated(_)) => {
                NegotiationFailure::Unavailable(e.to_string())
            }
            e => NegotiationFailure::Protocol(e.to_string()),
        }
    }
}

/// A fresh random session id.
pub fn session_id() -> String {
    format!("{:016x}", rand::random::<u64>())
}

struct Conn {
    stream: TcpStream,
    reader: BufReader<TcpStream>,
    timeout: Duration,
}

impl Conn {
    fn send(&mut self, m: &Message) -> Result<(), ClientError> {
        let mut line = encode(m);
        line.push('\n');
        self.stream.write_all(line.as_bytes()).map_err(|e| self.io(e))?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Message, ClientError> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(ClientError::Closed),
            Ok(_) => Ok(decode(&line)?),
            Err(e) => Err(self.io(e)),
        }
    }

    fn io(&self, e: io::Error) -> ClientError {
        match e.kind() {
            ErrorKind::WouldBlock | ErrorKind::TimedOut => ClientError::Timeout(self.timeout),
            _ => ClientError::Io(e),
        }
    }
}

/// One open session with a negotiation server.
pub struct Client {
    session: String,
    conn: Conn,
    ct: ConfigType,
}

impl Client {
    /// Connects and performs the Init/Terms handshake.
    pub fn connect(endpoint: impl ToSocketAddrs, session: impl Into<String>, timeout: Duration) -> Result<Self, ClientError> {
        let addrs: Vec<SocketAddr> = endpoint.to_socket_addrs().map_err(|source| ClientError::Connect {
            endpoint: "<unresolved>".into(),
            source,
        })?
        .collect();
        let mut last = io::Error::new(ErrorKind::AddrNotAvailable, "endpoint resolves to no address");
        let mut stream = None;
        for addr in &addrs {
            match TcpStream::connect_timeout(addr, timeout) {
                Ok(s) => {
                    stream = Some(s);
                    break;
                }
                Err(e) => last = e,
            }
        }
        let endpoint = addrs.first().map(|a| a.to_string()).unwrap_or_default();
        let stream = stream.ok_or(ClientError::Connect { endpoint, source: last })?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let mut conn = Conn { stream, reader, timeout };
        let session = session.into();
        conn.send(&Message::Init { session: session.clone() })?;
        match conn.recv()? {
            Message::Terms { ct, .. } => Ok(Client { session, conn, ct }),
            other => Err(unexpected("TERMS", other)),
        }
    }

    pub fn session(&self) -> &str {
        &self.session
    }

    /// The terms the server announced.
    pub fn terms(&self) -> &ConfigType {
        &self.ct
    }

    pub fn send(&mut self, m: &Message) -> Result<(), ClientError> {
        self.conn.send(m)
    }

    pub fn recv(&mut self) -> Result<Message, ClientError> {
        self.conn.recv()
    }

    /// Sends a query and returns the offer with its token.
    pub fn query(&mut self, q: &Formula) -> Result<(Formula, Vec<u8>), ClientError> {
        self.send(&Message::Query { session: self.session.clone(), query: q.clone() })?;
        match self.recv()? {
            Message::Offer { offer, token, .. } => Ok((offer, token)),
            other => Err(unexpected("OFFER", other)),
        }
    }

    pub fn accept(&mut self, acceptance: &Formula, token: &[u8]) -> Result<Invoice, ClientError> {
        let m = Message::Accept { session: self.session.clone(), acceptance: acceptance.clone(), token: token.to_vec() };
        self.send(&m)?;
        match self.recv()? {
            Message::Invoice { invoice, .. } => Ok(invoice),
            other => Err(unexpected("INVOICE", other)),
        }
    }

    pub fn terminate(mut self, reason: &str) -> Result<(), ClientError> {
        self.send(&Message::Terminate { session: self.session.clone(), reason: reason.to_string() })
    }
}

fn unexpected(expected: &'static str, got: Message) -> ClientError {
    match got {
        Message::Reject { reason, .. } => ClientError::Rejected(reason),
        Message::Terminate { reason, .. } => ClientError::Terminated(reason),
        other => ClientError::Unexpected { expected, got: encode(&other) },
    }
}

/// A negotiator answering through a server. The session is opened on first
/// use and reopened after the server ends it.
pub struct RemoteNegotiator {
    endpoint: String,
    timeout: Duration,
    terms: Mutex<Option<ConfigType>>,
    client: Mutex<Option<Client>>,
}

pub fn remote_negotiator(endpoint: impl Into<String>) -> RemoteNegotiator {
    RemoteNegotiator::new(endpoint, DEFAULT_TIMEOUT)
}

impl RemoteNegotiator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        RemoteNegotiator { endpoint: endpoint.into(), timeout, terms: Mutex::new(None), client: Mutex::new(None) }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn open(&self) -> Result<Client, ClientError> {
        let client = Client::connect(self.endpoint.as_str(), session_id(), self.timeout)?;
        debug!(endpoint = %self.endpoint, session = client.session(), "remote session opened");
        self.terms.lock().expect("terms poisoned").get_or_insert_with(|| client.terms().clone());
        Ok(client)
    }
}

impl Negotiator for RemoteNegotiator {
    fn terms(&self) -> Result<ConfigType, NegotiationFailure> {
        if let Some(ct) = self.terms.lock().expect("terms poisoned").clone() {
            return Ok(ct);
        }
        let mut slot = self.client.lock().expect("client poisoned");
        if slot.is_none() {
            *slot = Some(self.open()?);
        }
        Ok(slot.as_ref().map(|c| c.terms().clone()).expect("client was just opened"))
    }

    fn query(&self, q: &Formula) -> Result<ExtendedOffer, NegotiationFailure> {
        let mut slot = self.client.lock().expect("client poisoned");
        let mut client = match slot.take() {
            Some(c) => c,
            None => self.open()?,
        };
        let (offer, token) = client.query(q)?;
        *slot = Some(client);
        Ok(ExtendedOffer { formula: offer, token: Token::Opaque(token) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn unreachable_endpoint_fails_on_query() {
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let remote = RemoteNegotiator::new(format!("127.0.0.1:{port}"), Duration::from_millis(500));
        let q = nego_core::parse_formula("x = 1").unwrap();
        assert!(matches!(remote.query(&q), Err(NegotiationFailure::Unavailable(_))));
        assert!(remote.terms().is_err());
    }

    #[test]
    fn silent_server_times_out() {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = l.local_addr().unwrap();
        let remote = RemoteNegotiator::new(addr.to_string(), Duration::from_millis(200));
        let q = nego_core::parse_formula("x = 1").unwrap();
        assert_eq!(remote.query(&q), Err(NegotiationFailure::Timeout(Duration::from_millis(200))));
        drop(l);
    }

    #[test]
    fn session_ids_differ() {
        assert_ne!(session_id(), session_id());
    }
}
