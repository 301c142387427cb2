//! Serving a negotiator over TCP, one session per connection.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use nego_core::{accept, ConfigType, ExtendedOffer, Negotiator, Qe, TokenStore};
use tracing::{debug, info, warn};

use crate::codec::{decode, encode, Message};

const POLL: Duration = Duration::from_millis(100);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    AwaitingTerms,
    Negotiating,
    Accepted,
    Terminated,
}

/// What the server remembers about one session.
#[derive(Debug)]
pub struct SessionState {
    pub session: Option<String>,
    pub phase: Phase,
    pub last: Option<(ExtendedOffer, Vec<u8>)>,
}

impl SessionState {
    fn new() -> Self {
        SessionState { session: None, phase: Phase::AwaitingTerms, last: None }
    }
}

pub struct ServeOptions {
    pub qe: Qe,
    pub tokens: Arc<TokenStore>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions { qe: Qe::default(), tokens: Arc::new(TokenStore::random()) }
    }
}

struct Shared {
    negotiator: Arc<dyn Negotiator>,
    ct: ConfigType,
    qe: Qe,
    tokens: Arc<TokenStore>,
    stopping: AtomicBool,
    active: AtomicUsize,
    served: AtomicUsize,
}

/// A running server. Dropping the handle shuts it down.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    acceptor: Option<JoinHandle<()>>,
    sessions: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn active_sessions(&self) -> usize {
        self.shared.active.load(Ordering::SeqCst)
    }

    pub fn sessions_served(&self) -> usize {
        self.shared.served.load(Ordering::SeqCst)
    }

    /// Stops accepting connections, lets every session finish the request it
    /// is handling, tells its client the session is over and waits for it.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(acceptor) = self.acceptor.take() {
            let _ = acceptor.join();
        }
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stopping.store(true, Ordering::SeqCst);
        if let Some(acceptor) = self.acceptor.take() {
            // Wake the blocking accept.
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = acceptor.join();
        }
        let handles = std::mem::take(&mut *self.sessions.lock().expect("session list poisoned"));
        for h in handles {
            let _ = h.join();
        }
        info!(addr = %self.addr, served = self.sessions_served(), "server stopped");
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.acceptor.is_some() {
            self.stop();
        }
    }
}

pub fn serve(negotiator: Arc<dyn Negotiator>, endpoint: impl ToSocketAddrs) -> io::Result<ServerHandle> {
    serve_with(negotiator, endpoint, ServeOptions::default())
}

pub fn serve_with(
    negotiator: Arc<dyn Negotiator>,
    endpoint: impl ToSocketAddrs,
    options: ServeOptions,
) -> io::Result<ServerHandle> {
    let ct = negotiator.terms().map_err(|e| io::Error::other(format!("negotiator has no terms: {e}")))?;
    let listener = TcpListener::bind(endpoint)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        negotiator,
        ct,
        qe: options.qe,
        tokens: options.tokens,
        stopping: AtomicBool::new(false),
        active: AtomicUsize::new(0),
        served: AtomicUsize::new(0),
    });
    let sessions: Arc<Mutex<Vec<JoinHandle<()>>>> = Arc::default();
    let acceptor = {
        let shared = shared.clone();
        let sessions = sessions.clone();
        thread::Builder::new().name(format!("nego-accept-{addr}")).spawn(move || accept_loop(listener, shared, sessions))?
    };
    info!(%addr, "serving");
    Ok(ServerHandle { addr, shared, acceptor: Some(acceptor), sessions })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, sessions: Arc<Mutex<Vec<JoinHandle<()>>>>) {
    for conn in listener.incoming() {
        if shared.stopping.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                warn!(error = %e, "accept failed");
                continue;
            }
        };
        let shared = shared.clone();
        shared.active.fetch_add(1, Ordering::SeqCst);
        shared.served.fetch_add(1, Ordering::SeqCst);
        let spawned = thread::Builder::new().name("nego-session".into()).spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = run_session(stream, &shared) {
                debug!(?peer, error = %e, "session ended with an i/o error");
            }
            shared.active.fetch_sub(1, Ordering::SeqCst);
        });
        match spawned {
            Ok(h) => {
                let mut list = sessions.lock().expect("session list poisoned");
                list.retain(|h| !h.is_finished());
                list.push(h);
            }
            Err(e) => warn!(error = %e, "cannot spawn a session thread"),
        }
    }
}

fn send(out: &mut TcpStream, m: &Message) -> io::Result<()> {
    let mut line = encode(m);
    line.push('\n');
    out.write_all(line.as_bytes())?;
    out.flush()
}

fn run_session(stream: TcpStream, shared: &Shared) -> io::Result<()> {
    stream.set_read_timeout(Some(POLL))?;
    let mut out = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut state = SessionState::new();
    let mut buf = Vec::new();
    loop {
        if shared.stopping.load(Ordering::SeqCst) {
            if let Some(session) = &state.session {
                let m = Message::Terminate { session: session.clone(), reason: "server shutting down".into() };
                let _ = send(&mut out, &m);
            }
            break;
        }
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => break,
            Ok(_) if buf.last() != Some(&b'\n') => break,
            Ok(_) => {}
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            Err(e) => return Err(e),
        }
        let bytes = std::mem::take(&mut buf);
        let frame = String::from_utf8_lossy(&bytes);
        if frame.trim().is_empty() {
            continue;
        }
        let replies = step(&mut state, &frame, shared);
        for r in &replies {
            send(&mut out, r)?;
        }
        if matches!(state.phase, Phase::Accepted | Phase::Terminated) {
            break;
        }
    }
    let _ = out.shutdown(Shutdown::Both);
    Ok(())
}

fn reject(state: &mut SessionState, session: &str, reason: impl Into<String>) -> Vec<Message> {
    let reason = reason.into();
    debug!(session, %reason, "rejecting");
    state.phase = Phase::Terminated;
    vec![Message::Reject { session: session.to_string(), reason }]
}

/// Advances the session by one incoming frame and returns the replies.
fn step(state: &mut SessionState, frame: &str, shared: &Shared) -> Vec<Message> {
    let m = match decode(frame) {
        Ok(m) => m,
        Err(e) => {
            let session = state.session.clone().unwrap_or_default();
            return reject(state, &session, e.to_string());
        }
    };
    let session = m.session().to_string();
    if let Some(own) = &state.session {
        if *own != session {
            return reject(state, own.clone().as_str(), format!("frame for foreign session `{session}`"));
        }
    }
    match (state.phase, m) {
        (Phase::AwaitingTerms, Message::Init { .. }) => {
            debug!(%session, "session opened");
            state.session = Some(session.clone());
            state.phase = Phase::Negotiating;
            vec![Message::Terms { session, ct: shared.ct.clone() }]
        }
        (Phase::Negotiating, Message::Query { query, .. }) => match shared.negotiator.query(&query) {
            Ok(eo) => {
                let token = shared.tokens.issue(&eo);
                let offer = eo.formula.clone();
                state.last = Some((eo, token.clone()));
                vec![Message::Offer { session, offer, token }]
            }
            Err(e) => reject(state, &session, e.to_string()),
        },
        (Phase::Negotiating, Message::Accept { acceptance, token, .. }) => {
            let Some((_, last)) = &state.last else {
                return reject(state, &session, "no offer has been made in this session");
            };
            if *last != token {
                return reject(state, &session, "token is not the latest one issued in this session");
            }
            let Some(eo) = shared.tokens.lookup(&token) else {
                return reject(state, &session, "token failed authentication");
            };
            match accept(&eo, &shared.ct, &acceptance, &shared.qe) {
                Ok(mut invoice) => {
                    invoice.session = Some(session.clone());
                    invoice.token = token;
                    state.phase = Phase::Accepted;
                    info!(%session, accepted = %invoice.accepted, "offer accepted");
                    vec![Message::Invoice { session, invoice }]
                }
                Err(e) => reject(state, &session, e.to_string()),
            }
        }
        (Phase::Negotiating, Message::Terminate { reason, .. }) => {
            debug!(%session, %reason, "client terminated the session");
            state.phase = Phase::Terminated;
            Vec::new()
        }
        (phase, m) => reject(state, &session, format!("unexpected {} while {phase:?}", m.kind())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nego_core::{parse_config_type, parse_formula, Formula, LeafNegotiator, Token};

    fn shared() -> Shared {
        let mut ct = parse_config_type("{capacity: decimal, price: decimal; capacity >= 0 && price >= 0}").unwrap();
        ct.name = Some("storage".into());
        let capability = parse_formula("capacity <= 100 && price = 2").unwrap();
        let leaf = LeafNegotiator::new(ct.clone(), capability, Qe::default()).unwrap();
        Shared {
            negotiator: Arc::new(leaf),
            ct,
            qe: Qe::default(),
            tokens: Arc::new(TokenStore::new(b"test key".to_vec())),
            stopping: AtomicBool::new(false),
            active: AtomicUsize::new(0),
            served: AtomicUsize::new(0),
        }
    }

    fn frame(m: Message) -> String {
        encode(&m)
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn offer_token(replies: &[Message]) -> Vec<u8> {
        match replies {
            [Message::Offer { token, .. }] => token.clone(),
            other => panic!("expected an offer, got {other:?}"),
        }
    }

    #[test]
    fn init_yields_terms() {
        let sh = shared();
        let mut st = SessionState::new();
        let replies = step(&mut st, &frame(Message::Init { session: "a".into() }), &sh);
        assert_eq!(replies, vec![Message::Terms { session: "a".into(), ct: sh.ct.clone() }]);
        assert_eq!(st.phase, Phase::Negotiating);
    }

    #[test]
    fn query_before_init_is_rejected() {
        let sh = shared();
        let mut st = SessionState::new();
        let replies = step(&mut st, &frame(Message::Query { session: "a".into(), query: f("price <= 3") }), &sh);
        assert!(matches!(&replies[..], [Message::Reject { .. }]));
        assert_eq!(st.phase, Phase::Terminated);
    }

    #[test]
    fn accept_after_query_issues_invoice() {
        let sh = shared();
        let mut st = SessionState::new();
        step(&mut st, &frame(Message::Init { session: "a".into() }), &sh);
        let replies = step(&mut st, &frame(Message::Query { session: "a".into(), query: f("capacity = 10") }), &sh);
        let token = offer_token(&replies);
        let acc = Message::Accept { session: "a".into(), acceptance: f("capacity = 10 && price = 2"), token: token.clone() };
        match &step(&mut st, &frame(acc), &sh)[..] {
            [Message::Invoice { invoice, .. }] => {
                assert_eq!(invoice.token, token);
                assert_eq!(invoice.session.as_deref(), Some("a"));
            }
            other => panic!("expected an invoice, got {other:?}"),
        }
        assert_eq!(st.phase, Phase::Accepted);
    }

    #[test]
    fn stale_token_is_rejected() {
        let sh = shared();
        let mut st = SessionState::new();
        step(&mut st, &frame(Message::Init { session: "a".into() }), &sh);
        let first = offer_token(&step(&mut st, &frame(Message::Query { session: "a".into(), query: f("capacity = 10") }), &sh));
        step(&mut st, &frame(Message::Query { session: "a".into(), query: f("capacity = 20") }), &sh);
        let acc = Message::Accept { session: "a".into(), acceptance: f("capacity = 10 && price = 2"), token: first };
        assert!(matches!(&step(&mut st, &frame(acc), &sh)[..], [Message::Reject { .. }]));
    }

    #[test]
    fn foreign_session_frames_are_rejected() {
        let sh = shared();
        let mut st = SessionState::new();
        step(&mut st, &frame(Message::Init { session: "a".into() }), &sh);
        let replies = step(&mut st, &frame(Message::Query { session: "b".into(), query: f("capacity = 1") }), &sh);
        assert_eq!(replies.len(), 1);
        assert!(matches!(&replies[0], Message::Reject { session, .. } if session == "a"));
    }

    #[test]
    fn garbage_is_rejected() {
        let sh = shared();
        let mut st = SessionState::new();
        assert!(matches!(&step(&mut st, "hello there\n", &sh)[..], [Message::Reject { .. }]));
    }

    #[test]
    fn issued_tokens_map_back_to_offers() {
        let sh = shared();
        let mut st = SessionState::new();
        step(&mut st, &frame(Message::Init { session: "a".into() }), &sh);
        let token = offer_token(&step(&mut st, &frame(Message::Query { session: "a".into(), query: f("capacity = 10") }), &sh));
        let eo = sh.tokens.lookup(&token).unwrap();
        assert!(matches!(eo.token, Token::Opaque(_)));
        assert_eq!(Some(&(eo, token)), st.last.as_ref());
    }
}
