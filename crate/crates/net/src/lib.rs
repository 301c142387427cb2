//! Line-delimited wire protocol for negotiation sessions, a threaded TCP
//! server exposing any negotiator, and negotiators that forward to a remote
//! server.

pub mod client;
pub mod codec;
pub mod random;
pub mod server;

pub use client::{remote_negotiator, session_id, Client, ClientError, RemoteNegotiator, DEFAULT_TIMEOUT};
pub use codec::{decode, encode, FrameError, Message, VERSION};
pub use server::{serve, serve_with, Phase, ServeOptions, ServerHandle, SessionState};
